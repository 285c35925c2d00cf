//! Numerical design toolkit for photon-triplet generation by third-order
//! spontaneous parametric downconversion in thin air-clad silica fibers.
//!
//! The pipeline runs bottom-up:
//!
//! - [`dispersion`]: material indices and the [`Spectral`] frequency newtype.
//! - [`fibermodes`]: exact HE₁ₘ solver for the silica rod in air.
//! - [`modal`]: modal dispersion (direct and tabulated) consumed by the
//!   phasematching and rate code.
//! - [`phasematch`]: degenerate phasematching `k(3ω) = 3k(ω)`, the phase
//!   mismatch Δk, the sinc phasematching function and the pump envelope.
//! - [`nonlinear`]: overlap integrals, effective area, γ, SPM/XPM
//!   coefficients and free-space Gaussian coupling.
//! - [`triplets`]: joint spectral amplitude, ζ, absolute triplet rate and
//!   marginal spectra.

pub mod constants;
pub mod dispersion;
pub mod error;
pub mod fibermodes;
pub mod interp;
pub mod modal;
pub mod nonlinear;
pub mod phasematch;
pub mod quadrature;
pub mod triplets;

pub use dispersion::{Material, Spectral};
pub use error::{Error, Result};
pub use fibermodes::{FiberSpec, ModeLabel, ModeSolution};
pub use nonlinear::NonlinearSet;
pub use phasematch::{PeakPowerConvention, PhasematchSolution, PumpSpec};
pub use triplets::{JointSpectrumGrid, RateResult, SourceDesign};
