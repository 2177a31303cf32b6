//! Robust joint design of MIMO radar transmit waveforms and receive filters.
//!
//! The radar picks a space-time code `s` and a linear filter `w`; an extended
//! target picks its impulse response `t` from a ball around a nominal response.
//! The payoff is the output SINR. This crate computes equilibrium strategies of
//! that zero-sum game under three waveform constraint families:
//!
//! * energy only ([`games::design_ec`]),
//! * constant modulus plus similarity to a reference code ([`games::design_cmsc`]),
//! * bounded stop-band energy plus similarity ([`games::design_scsc`]).
//!
//! All convex subproblems are handled by the dense solvers in [`solvers`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod error;
pub mod games;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::{c64, CMat, CVec};
pub use model::{
    lfm_reference, noise_covariance, shift_matrix, spectral_matrix, Band, ConstraintSet,
    reference_t0, DesignResult, IterRecord, Scenario, ScenarioParams, Waveform,
};
pub use detection::detection_probability;
