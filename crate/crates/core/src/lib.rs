//! Design and analysis of microring cavity-QED circuits for trapped atoms.
//!
//! Modules follow the design chain: material dispersion feeds the
//! waveguide mode solver; solved modes give ring figures of merit, the
//! pulley-coupler rate and the evanescent trap fields; rates feed the
//! transmission models and the spectrum fitter. The membrane module is an
//! independent thin-film calculation.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod coupler;
pub mod error;
pub mod materials;
pub mod membrane;
pub mod modesolver;
pub mod resonator;
pub mod spectra;
pub mod trap;
pub mod units;

pub use config::ProjectConfig;
pub use error::{Error, Result};
pub use materials::{AtomData, Material, MaterialDb};
pub use modesolver::{CrossSection, ModeSolution};
pub use resonator::{CavityRates, RingSpec};
