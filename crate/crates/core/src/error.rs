use thiserror::Error;

/// Errors produced by the solvers in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "wavelength {wavelength_um:.4} um outside the {model} validity window [{min_um}, {max_um}] um"
    )]
    OutOfRange {
        model: &'static str,
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
    },

    #[error("{label} not guided at {wavelength_um:.4} um in a {radius_um:.4} um radius fiber (V = {v:.4}, cutoff V = {cutoff:.4})")]
    NotGuided {
        label: String,
        wavelength_um: f64,
        radius_um: f64,
        v: f64,
        cutoff: f64,
    },

    #[error("no bracket for {label} at {wavelength_um:.4} um: scanned {points} points and found {roots_found} roots")]
    NoBracket {
        label: String,
        wavelength_um: f64,
        points: usize,
        roots_found: usize,
    },

    #[error("no phasematching in bracket [{lo_um:.4}, {hi_um:.4}] um: mismatch {mismatch_lo:.6e} .. {mismatch_hi:.6e} rad/m")]
    NoPhasematch {
        lo_um: f64,
        hi_um: f64,
        mismatch_lo: f64,
        mismatch_hi: f64,
    },

    #[error("root refinement failed: {0}")]
    RootRefinement(String),

    #[error("profile is not unit-normalized: integral of |f|^2 = {norm:.6}")]
    NotNormalized { norm: f64 },

    #[error("coupling maximum lies on the bracket endpoint (waist {waist_um:.4} um, fraction {fraction:.4})")]
    NonInteriorMaximum { waist_um: f64, fraction: f64 },

    #[error("frequency {omega:.6e} rad/s outside tabulated window [{lo:.6e}, {hi:.6e}] rad/s")]
    OutsideTable { omega: f64, lo: f64, hi: f64 },

    #[error("grid of {cells} cells exceeds the budget of {budget}; use at most {max_per_axis} points per axis")]
    GridTooLarge {
        cells: usize,
        budget: usize,
        max_per_axis: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
