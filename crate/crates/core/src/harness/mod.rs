//! Monte Carlo harness.
