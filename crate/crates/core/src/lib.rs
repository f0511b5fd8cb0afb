//! Link-level simulator and estimator library for pilot-aided channel
//! estimation in an LTE-downlink-style OFDM system.
//!
//! The crate covers the full measurement chain:
//!
//! - [`grid`]: Gray-coded QAM, comb-type pilot grids, unitary OFDM
//!   modulation with cyclic prefix, zero-forcing equalization.
//! - [`channel`]: vehicular multipath fading with classical Doppler
//!   statistics, AWGN and Bernoulli-Gaussian impulse noise calibrated
//!   against measured signal power.
//! - [`svr`]: complex support vector regression over pilot subcarriers with
//!   the epsilon-Huber robust cost, solved by projected coordinate ascent.
//! - [`estimators`]: least squares, decision feedback and SVR channel
//!   estimators over one frame.
//! - [`harness`] and [`config`]: reproducible Monte Carlo sweeps with
//!   paired seeding across estimators and CSV emission.
//!
//! With the default `parallel` feature, Monte Carlo frames and per-symbol
//! SVR solves run on a rayon pool; results are bit-identical to the
//! sequential build.

// Index loops mirror the matrix math; negated comparisons reject NaN in
// config validation.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod harness;
pub mod seed;
pub mod svr;

pub use channel::{ChannelRealization, NoiseSpec, PowerDelayProfile};
pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use estimators::{ChannelEstimate, Method};
pub use grid::{OfdmConfig, ResourceGrid, TimeSignal};
pub use harness::{BerRecord, SweepPoint};
pub use svr::{DualSolution, PilotObservations, SvrHyperparams};
