//! Classical lattice models whose ensemble averages reproduce the 1+1D Dirac
//! equation.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] holds the space-time grid, the two- and four-component
//!   density fields and the signed [`ChargeGrid`] tally.
//! * [`kac`] evolves and samples the Kac persistent random walk.
//! * [`dirac`] evolves the four-state entwined-pair difference scheme and
//!   carries the constant matrices of the Dirac form.
//! * [`entwined`] samples entwined pairs and deposits their signed charge.
//! * [`analysis`] measures continuum residuals and compares sampled grids
//!   against the discrete propagator.

pub mod analysis;
pub mod dirac;
pub mod entwined;
mod error;
pub mod kac;
pub mod lattice;
mod parallel;
pub mod rng;

pub use error::{Error, Result};
pub use lattice::{ChargeGrid, Component, Direction, FourField, LatticeSpec, TwoField};
