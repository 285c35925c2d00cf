//! Degenerate phasematching k_HE12(3ω) = 3·k_HE11(ω), the full phase
//! mismatch Δk and the sinc phasematching function.

use std::cell::RefCell;
use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use roots::{find_root_brent, Convergency};
use serde::{Deserialize, Serialize};

use crate::dispersion::{refractive_index, Spectral};
use crate::error::{Error, Result};
use crate::fibermodes::{propagation_constant, FiberSpec, ModeLabel};
use crate::modal::ModalDispersion;
use crate::nonlinear::NonlinearSet;

/// Pump mode of the two-mode scheme.
pub const PUMP_MODE: ModeLabel = ModeLabel::HE12;
/// Mode of all three generated photons.
pub const TRIPLET_MODE: ModeLabel = ModeLabel::HE11;

/// Default radius search window in metres.
pub const DEFAULT_RADIUS_BRACKET: (f64, f64) = (0.15e-6, 1.0e-6);
/// Default triplet-wavelength search window in metres.
pub const DEFAULT_WAVELENGTH_BRACKET: (f64, f64) = (0.8e-6, 2.6e-6);
/// Accepted |k_p(3ω) − 3k(ω)| at a phasematched radius, rad/m.
pub const RESIDUAL_TOLERANCE: f64 = 1e-4;

/// A radius at which the degenerate process is phasematched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasematchSolution {
    pub fiber_radius: f64,
    pub degenerate_freq: Spectral,
    pub pump_freq: Spectral,
    /// k_HE12(3ω) − 3·k_HE11(ω) at `fiber_radius`, rad/m.
    pub residual: f64,
}

/// How a pulse-averaged power is turned into the peak power P.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PeakPowerConvention {
    /// Peak of the Gaussian intensity profile, P = E·σ/√(2π).
    #[default]
    GaussianPeak,
    /// Rectangular-equivalent pulse, P = E / t_fwhm.
    RectangularFwhm,
}

impl PeakPowerConvention {
    pub fn peak_power(self, avg_power: f64, rep_rate: f64, sigma: f64) -> f64 {
        let energy = avg_power / rep_rate;
        match self {
            PeakPowerConvention::GaussianPeak => energy * sigma / (2.0 * PI).sqrt(),
            PeakPowerConvention::RectangularFwhm => energy / pulse_duration_fwhm(sigma),
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            PeakPowerConvention::GaussianPeak => "P = (avg/R) * sigma / sqrt(2 pi) (Gaussian peak)",
            PeakPowerConvention::RectangularFwhm => "P = (avg/R) / t_fwhm (rectangular equivalent)",
        }
    }
}

/// Intensity-FWHM duration of a pulse whose field spectrum is
/// exp[−(ω−ω₀)²/σ²].
pub fn pulse_duration_fwhm(sigma: f64) -> f64 {
    2.0 * (2.0 * LN_2).sqrt() / sigma
}

/// Converts a bandwidth quoted as "GHz" in the sense of 10⁹ rad/s.
pub fn sigma_from_paper_ghz(value: f64) -> f64 {
    value * 1e9
}

/// Gaussian pump pulse train.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpSpec {
    pub center_freq: Spectral,
    /// Envelope bandwidth σ in rad/s.
    pub sigma: f64,
    /// Peak power P in W.
    pub peak_power: f64,
    /// Repetition rate R in Hz.
    pub rep_rate: f64,
    pub avg_power: Option<f64>,
    pub convention: Option<PeakPowerConvention>,
}

impl PumpSpec {
    pub fn new(center_freq: Spectral, sigma: f64, peak_power: f64, rep_rate: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        positive("peak power", peak_power)?;
        positive("repetition rate", rep_rate)?;
        Ok(PumpSpec {
            center_freq,
            sigma,
            peak_power,
            rep_rate,
            avg_power: None,
            convention: None,
        })
    }

    pub fn from_average_power(
        center_freq: Spectral,
        sigma: f64,
        avg_power: f64,
        rep_rate: f64,
        convention: PeakPowerConvention,
    ) -> Result<Self> {
        positive("sigma", sigma)?;
        positive("average power", avg_power)?;
        positive("repetition rate", rep_rate)?;
        Ok(PumpSpec {
            center_freq,
            sigma,
            peak_power: convention.peak_power(avg_power, rep_rate, sigma),
            rep_rate,
            avg_power: Some(avg_power),
            convention: Some(convention),
        })
    }

    pub fn pulse_duration_fwhm(&self) -> f64 {
        pulse_duration_fwhm(self.sigma)
    }

    /// Same pulse train with a different bandwidth; the peak power is
    /// re-derived when the spec was built from an average power.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        match (self.avg_power, self.convention) {
            (Some(avg), Some(conv)) => Self::from_average_power(self.center_freq, sigma, avg, self.rep_rate, conv),
            _ => Self::new(self.center_freq, sigma, self.peak_power, self.rep_rate),
        }
    }

    pub fn with_peak_power(&self, peak_power: f64) -> Result<Self> {
        Self::new(self.center_freq, self.sigma, peak_power, self.rep_rate)
    }

    pub fn with_rep_rate(&self, rep_rate: f64) -> Result<Self> {
        let mut pump = Self::new(self.center_freq, self.sigma, self.peak_power, rep_rate)?;
        pump.avg_power = self.avg_power.map(|avg| avg * rep_rate / self.rep_rate);
        pump.convention = self.convention;
        Ok(pump)
    }
}

fn positive(what: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be positive, got {value}")))
    }
}

/// k_HE12(3ω) − 3·k_HE11(ω) in rad/m.
pub fn degenerate_mismatch(fiber: &FiberSpec, triplet_freq: Spectral) -> Result<f64> {
    let pump = Spectral::from_angular(3.0 * triplet_freq.angular());
    Ok(propagation_constant(fiber, PUMP_MODE, pump)? - 3.0 * propagation_constant(fiber, TRIPLET_MODE, triplet_freq)?)
}

/// Radius below which the pump mode is cut off at `pump_freq`.
pub fn pump_cutoff_radius(fiber: &FiberSpec, pump_freq: Spectral) -> Result<f64> {
    let n1 = refractive_index(fiber.core, pump_freq)?;
    let n2 = refractive_index(fiber.cladding, pump_freq)?;
    Ok(PUMP_MODE.cutoff_v() / (pump_freq.vacuum_wavenumber() * (n1 * n1 - n2 * n2).sqrt()))
}

struct ResidualTolerance;

impl Convergency<f64> for ResidualTolerance {
    fn is_root_found(&mut self, y: f64) -> bool {
        y.abs() < 1e-3 * RESIDUAL_TOLERANCE
    }

    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() <= 4.0 * f64::EPSILON * x1.abs().max(x2.abs())
    }

    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter > 200
    }
}

/// Smallest radius in [lo, hi] at which the pump mode can be solved.
///
/// Just above the nominal HE₁₂ cutoff the cladding parameter W of the root
/// shrinks exponentially and leaves the representable range, so the
/// usable edge sits slightly above the cutoff radius. Located by bisection
/// on solver success to relative 1e-9.
pub fn pump_guidance_edge(template: &FiberSpec, pump_freq: Spectral, lo: f64, hi: f64) -> Result<f64> {
    let solvable = |r: f64| -> Result<bool> {
        match propagation_constant(&template.with_radius(r)?, PUMP_MODE, pump_freq) {
            Ok(_) => Ok(true),
            Err(Error::NotGuided { .. }) | Err(Error::NoBracket { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    if solvable(lo)? {
        return Ok(lo);
    }
    if !solvable(hi)? {
        return propagation_constant(&template.with_radius(hi)?, PUMP_MODE, pump_freq);
    }
    let (mut bad, mut good) = (lo, hi);
    while good - bad > 1e-9 * good {
        let mid = 0.5 * (bad + good);
        if solvable(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

/// Finds the core radius in `bracket` at which `triplet_freq` is
/// degenerately phasematched. `template` supplies materials and length.
///
/// The lower end of the bracket is raised to the pump-mode guidance edge
/// when needed.
pub fn find_phasematch_radius(
    template: &FiberSpec,
    triplet_freq: Spectral,
    bracket: (f64, f64),
) -> Result<PhasematchSolution> {
    let pump_freq = Spectral::from_angular(3.0 * triplet_freq.angular());
    let cutoff = pump_cutoff_radius(template, pump_freq)?;
    let no_root = |m_lo: f64, m_hi: f64| Error::NoPhasematch {
        lo_um: bracket.0 * 1e6,
        hi_um: bracket.1 * 1e6,
        mismatch_lo: m_lo,
        mismatch_hi: m_hi,
    };
    if bracket.1 <= cutoff.max(bracket.0) {
        return Err(no_root(f64::NAN, f64::NAN));
    }
    let lo = pump_guidance_edge(template, pump_freq, bracket.0.max(cutoff), bracket.1)?;
    let hi = bracket.1;
    let mismatch = |r: f64| degenerate_mismatch(&template.with_radius(r)?, triplet_freq);
    let (m_lo, m_hi) = (mismatch(lo)?, mismatch(hi)?);
    if m_lo.signum() == m_hi.signum() {
        return Err(no_root(m_lo, m_hi));
    }
    let failure = RefCell::new(None);
    let root = find_root_brent(
        lo,
        hi,
        |r| {
            mismatch(r).unwrap_or_else(|e| {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            })
        },
        &mut ResidualTolerance,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let radius = root.map_err(|e| Error::RootRefinement(format!("{e:?}")))?;
    let residual = mismatch(radius)?;
    if residual.abs() >= RESIDUAL_TOLERANCE {
        return Err(Error::RootRefinement(format!(
            "radius {:.9} um leaves residual {residual:e} rad/m",
            radius * 1e6
        )));
    }
    Ok(PhasematchSolution {
        fiber_radius: radius,
        degenerate_freq: triplet_freq,
        pump_freq,
        residual,
    })
}

/// Finds the triplet wavelength in `bracket` (metres) that is degenerately
/// phasematched in `fiber`. The long end is pulled in to where the pump
/// mode is still guided.
pub fn find_phasematch_wavelength(fiber: &FiberSpec, bracket: (f64, f64)) -> Result<PhasematchSolution> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!(
            "wavelength bracket must satisfy 0 < lo < hi, got [{lo:e}, {hi:e}] m"
        )));
    }
    let mismatch = |lambda: f64| degenerate_mismatch(fiber, Spectral::from_wavelength(lambda));
    let solvable = |lambda: f64| -> Result<bool> {
        match mismatch(lambda) {
            Ok(_) => Ok(true),
            Err(Error::NotGuided { .. }) | Err(Error::NoBracket { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    let no_root = |m_lo: f64, m_hi: f64| Error::NoPhasematch {
        lo_um: lo * 1e6,
        hi_um: hi * 1e6,
        mismatch_lo: m_lo,
        mismatch_hi: m_hi,
    };
    if !solvable(lo)? {
        return Err(no_root(f64::NAN, f64::NAN));
    }
    let mut top = hi;
    if !solvable(hi)? {
        let (mut good, mut bad) = (lo, hi);
        while bad - good > 1e-9 * good {
            let mid = 0.5 * (good + bad);
            if solvable(mid)? {
                good = mid;
            } else {
                bad = mid;
            }
        }
        top = good;
    }
    let (m_lo, m_hi) = (mismatch(lo)?, mismatch(top)?);
    if m_lo.signum() == m_hi.signum() {
        return Err(no_root(m_lo, m_hi));
    }
    let failure = RefCell::new(None);
    let root = find_root_brent(
        lo,
        top,
        |lambda| {
            mismatch(lambda).unwrap_or_else(|e| {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            })
        },
        &mut ResidualTolerance,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let lambda = root.map_err(|e| Error::RootRefinement(format!("{e:?}")))?;
    let residual = mismatch(lambda)?;
    if residual.abs() >= RESIDUAL_TOLERANCE {
        return Err(Error::RootRefinement(format!(
            "wavelength {:.9} um leaves residual {residual:e} rad/m",
            lambda * 1e6
        )));
    }
    let triplet = Spectral::from_wavelength(lambda);
    Ok(PhasematchSolution {
        fiber_radius: fiber.core_radius,
        degenerate_freq: triplet,
        pump_freq: Spectral::from_angular(3.0 * triplet.angular()),
        residual,
    })
}

/// Phasematching radius at each triplet wavelength, in input order.
pub fn radius_scan(
    template: &FiberSpec,
    wavelengths: &[f64],
    bracket: (f64, f64),
) -> Vec<Result<PhasematchSolution>> {
    wavelengths
        .par_iter()
        .map(|&lambda| find_phasematch_radius(template, Spectral::from_wavelength(lambda), bracket))
        .collect()
}

/// Φ_NL = [γ_p − 2(γ_pr + γ_ps + γ_pi)]·P in rad/m.
pub fn nonlinear_phase(coeffs: &NonlinearSet, peak_power: f64) -> f64 {
    (coeffs.gamma_p - 2.0 * (coeffs.gamma_pr + coeffs.gamma_ps + coeffs.gamma_pi)) * peak_power
}

/// Δk = k_p(ω_r+ω_s+ω_i) − k(ω_r) − k(ω_s) − k(ω_i) + Φ_NL.
///
/// The frequencies are sorted first so the result is bit-identical under
/// any permutation of the arguments.
pub fn phase_mismatch(
    pump: &dyn ModalDispersion,
    triplet: &dyn ModalDispersion,
    w_r: f64,
    w_s: f64,
    w_i: f64,
    phi_nl: f64,
) -> Result<f64> {
    let [a, b, c] = sorted([w_r, w_s, w_i]);
    Ok(pump.beta(frequency_sum(a, b, c))? - triplet.beta(a)? - triplet.beta(b)? - triplet.beta(c)? + phi_nl)
}

pub(crate) fn sorted(mut w: [f64; 3]) -> [f64; 3] {
    w.sort_by(f64::total_cmp);
    w
}

/// Order-independent sum of three frequencies (expects sorted input).
pub(crate) fn frequency_sum(a: f64, b: f64, c: f64) -> f64 {
    (a + b) + c
}

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// φ = sinc(LΔk/2)·exp(iLΔk/2).
pub fn pm_function(delta_k: f64, length: f64) -> Complex64 {
    let x = 0.5 * length * delta_k;
    Complex64::from_polar(sinc(x), x)
}

/// α(ω) = exp[−(ω − ω_p°)²/σ²] evaluated at the frequency sum.
pub fn pump_envelope(freq_sum: f64, pump: &PumpSpec) -> f64 {
    let d = (freq_sum - pump.center_freq.angular()) / pump.sigma;
    (-d * d).exp()
}

/// α(ω_r + ω_s + ω_i), bit-identical under any permutation of the three.
pub fn triplet_envelope(w_r: f64, w_s: f64, w_i: f64, pump: &PumpSpec) -> f64 {
    let [a, b, c] = sorted([w_r, w_s, w_i]);
    pump_envelope(frequency_sum(a, b, c), pump)
}
