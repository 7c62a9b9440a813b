//! Simulation lab for over-the-air computation (OAC) under channel-gain and
//! time misalignments.
//!
//! A fusion center wants the arithmetic sum `s_+[i] = sum_m s_m[i]` of the
//! symbol sequences transmitted simultaneously by `M` devices over a shared
//! channel. Depending on how well the transmitters are calibrated, the
//! received signal is *aligned* (no misalignment), *synchronous* (residual
//! complex gains `h_m`) or *asynchronous* (gains plus sub-symbol time
//! offsets `tau_m`). This crate implements:
//!
//! - the sampled-domain channel models, including the whitened
//!   matched-filter bank for the asynchronous case ([`channel`]);
//! - seven estimators of `s_+`: ML and LMMSE for the aligned/synchronous
//!   cases, and p-ML, p-LMMSE, ML, LMMSE and sum-product MAP (Gaussian
//!   belief propagation on a tree factor graph) for the asynchronous case
//!   ([`estimators`]);
//! - closed-form MSE predictors for cross-checking simulations
//!   ([`analytic`]);
//! - a deterministic Monte Carlo harness with CSV output and built-in sweep
//!   configurations ([`harness`]), plus a self-check suite ([`verify`]).
//!
//! The LMMSE and SP-MAP estimators consume two pieces of per-device
//! statistical information — the first and second sample moments of each
//! transmitted packet — as prior knowledge ([`scenario::PriorMoments`]).

pub mod analytic;
pub mod channel;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod numerics;
pub mod rng;
pub mod scenario;
pub mod verify;

pub use error::{Error, Result};
