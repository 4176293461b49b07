//! Casimir-Polder disorder above stochastic rough surfaces and the
//! localization of an expanding quasi-1D Bose-Einstein condensate in it.
//!
//! The crate is organised bottom-up:
//!
//! * [`params`] physical constants, trap parameters and unit scaling
//! * [`surface`] random uni-axial surface profiles
//! * [`casimir`] the lateral Casimir-Polder potential and its statistics
//! * [`gpe`] split-step Gross-Pitaevskii solver
//! * [`theory`] perturbative localization pipeline and power-law fits
//! * [`ensemble`] configuration, presets and disorder-ensemble runs

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod casimir;
pub mod ensemble;
pub mod error;
pub mod gpe;
pub mod params;
pub mod quad;
pub mod surface;
pub mod theory;

pub use error::{Error, Result};
