//! Estimators.
pub mod spmap;
