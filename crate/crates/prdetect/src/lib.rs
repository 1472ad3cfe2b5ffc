//! Detection for binary-input partial-response (ISI) channels.
//!
//! A channel with taps `h_0..h_mu` smears each transmitted symbol across
//! `mu` following samples. Maximum-likelihood detection of a block is an
//! integer quadratic program; this crate implements the relaxation route:
//! the quadratic objective is linearized with auxiliary "state" variables
//! (one per interfering bit pair), producing either a linear program over
//! the unit box or a Tanner graph on which min-sum / sum-product message
//! passing runs. Both detectors, exact references (Viterbi, exhaustive
//! search), analytic channel classification, and a Monte-Carlo harness are
//! provided, along with LDPC plumbing for coded runs.
//!
//! Modules:
//! - [`channel`]: taps, modulation, noise, matched filter, Gram coefficients
//! - [`ldpc`]: parity-check matrices, alist I/O, regular code generation, encoding
//! - [`tanner`]: joint channel/code factor graph construction
//! - [`solver`]: bounded-variable primal simplex over sparse inequality systems
//! - [`lp`]: LP relaxation of block detection, with ML certificates
//! - [`mp`]: iterative message-passing detection on the factor graph
//! - [`ml`]: Viterbi and exhaustive maximum-likelihood references
//! - [`analysis`]: channel classification and error-event statistics
//! - [`sim`]: reproducible Monte-Carlo sweeps over noise levels

pub mod analysis;
pub mod channel;
pub mod ldpc;
pub mod lp;
pub mod ml;
pub mod mp;
pub mod sim;
pub mod solver;
pub mod tanner;

pub use channel::{Channel, LambdaSet};
pub use lp::DetectorOutput;
