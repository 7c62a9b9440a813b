//! SP-MAP.
