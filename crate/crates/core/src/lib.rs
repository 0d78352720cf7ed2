//! Fourier coefficients of smooth measures carried by submanifolds of flat tori and
//! the round 2-sphere, and numerical checks of their spectral counting asymptotics,
//! heat-flow asymptotics, and the curvature estimates behind them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counting;
pub mod curvature;
pub mod density;
pub mod error;
pub mod gauss;
pub mod heat;
pub mod kahan;
pub mod legendre;
pub mod measures;
pub mod spectra;

pub use error::{Error, Result};
