//! Simulation and verification engine for a degenerate three-level cascade
//! laser with an intracavity parametric amplifier, coupled to a squeezed
//! vacuum reservoir.
//!
//! [`params`] holds the physical inputs and derived coefficients,
//! [`analytics`] the closed-form steady-state and spectral results, and
//! [`moments`], [`fock`] and [`langevin`] three independent numerical oracles
//! (moment ODEs, truncated Fock-space master equation, doubled phase-space
//! Monte Carlo). [`spectra`] converts correlations to spectra and [`cli`]
//! drives everything from the command line.

pub mod analytics;
pub mod cli;
pub mod error;
pub mod fock;
pub mod langevin;
pub mod moments;
pub mod numerics;
pub mod params;
pub mod spectra;

pub use error::{Error, Result};
pub use params::{derive_coefficients, stability_classify, threshold_epsilon, DerivedCoefficients, Stability, SystemParams};
