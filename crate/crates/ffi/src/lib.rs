//! C ABI (to be filled in).
