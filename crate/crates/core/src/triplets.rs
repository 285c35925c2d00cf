//! Three-photon state: joint spectral amplitude, ζ, the absolute triplet
//! rate and marginal single-photon spectra.
//!
//! The rate is a triple integral over (ω_r, ω_s, ω_i) of
//! `w(ω_r)w(ω_s)w(ω_i)|F|²` with `w = k′ω/n²`. |F|² is a narrow Gaussian
//! in the frequency sum and a sinc² in the two transverse directions, so
//! the integral is done in coordinates adapted to that shape:
//!
//! ```text
//! ω_j = s/3 + ρ·d_j(θ),   d(θ) = cosθ·(1,−1,0)/√2 + sinθ·(1,1,−2)/√6
//! dω_r dω_s dω_i = (1/√3) ds · ρ dρ dθ = (1/(2√3)) ds dt dθ,   t = ρ²
//! ```
//!
//! Near the degenerate point Δk is close to linear in t, so composite
//! Gauss–Legendre panels one sinc period wide resolve the oscillation and
//! the remainder beyond the last panel is added in closed form.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{HBAR, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::dispersion::Spectral;
use crate::error::{Error, Result};
use crate::fibermodes::{solve_mode, FiberSpec};
use crate::modal::{DirectDispersion, DispersionTable, ModalDispersion, TABLE_NODES};
use crate::nonlinear::NonlinearSet;
use crate::phasematch::{
    degenerate_mismatch, find_phasematch_radius, frequency_sum, nonlinear_phase, phase_mismatch, pm_function,
    pump_envelope, sinc, sorted, PhasematchSolution, PumpSpec, DEFAULT_RADIUS_BRACKET, PUMP_MODE, TRIPLET_MODE,
};
use crate::quadrature::{simpson, GaussRule};

/// Relative padding added on each side of a tabulation window.
const WINDOW_PADDING: f64 = 0.08;
/// Largest component of a unit vector orthogonal to (1, 1, 1).
const MAX_TRANSVERSE_COMPONENT: f64 = 0.816_496_580_927_726; // √(2/3)

/// Frequency ranges covered by the dispersion tables, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralWindow {
    pub triplet: (f64, f64),
    pub pump: (f64, f64),
}

impl SpectralWindow {
    pub fn union(&self, other: &SpectralWindow) -> SpectralWindow {
        SpectralWindow {
            triplet: (self.triplet.0.min(other.triplet.0), self.triplet.1.max(other.triplet.1)),
            pump: (self.pump.0.min(other.pump.0), self.pump.1.max(other.pump.1)),
        }
    }

    fn padded(lo: f64, hi: f64) -> (f64, f64) {
        let pad = WINDOW_PADDING * 0.5 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Settings of the rate and spectrum quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureOptions {
    /// Gauss–Legendre nodes across the frequency-sum window.
    pub sum_nodes: usize,
    /// Trapezoid points on the transverse angle.
    pub angle_points: usize,
    /// Gauss–Legendre order per radial panel.
    pub radial_order: usize,
    /// Radial panels per sinc period.
    pub panels_per_zero: usize,
    /// Sinc periods integrated before the closed-form remainder.
    pub sinc_zeros: usize,
    /// Half-width of the frequency-sum window in units of σ.
    pub window_sigmas: f64,
    /// Relative change under refinement above which the result is flagged.
    pub tolerance: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            sum_nodes: 24,
            angle_points: 16,
            radial_order: 8,
            panels_per_zero: 1,
            sinc_zeros: 40,
            window_sigmas: 6.0,
            tolerance: 0.05,
        }
    }
}

impl QuadratureOptions {
    /// Doubles the resolution in every dimension.
    pub fn refined(&self) -> Self {
        QuadratureOptions {
            sum_nodes: 2 * self.sum_nodes,
            angle_points: 2 * self.angle_points,
            panels_per_zero: 2 * self.panels_per_zero,
            ..*self
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sum_nodes == 0
            || self.angle_points < 3
            || self.radial_order == 0
            || self.panels_per_zero == 0
            || self.sinc_zeros == 0
            || !(self.window_sigmas > 0.0)
            || !(self.tolerance > 0.0)
        {
            return Err(Error::InvalidParameter(format!("invalid quadrature options {self:?}")));
        }
        Ok(())
    }
}

/// Local dispersion at the degenerate point, used to size windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegenerateDerivatives {
    /// Triplet-mode group slowness k′(ω), s/m.
    pub triplet_slowness: f64,
    /// Triplet-mode GVD k″(ω), s²/m.
    pub triplet_gvd: f64,
    /// Pump-mode group slowness k_p′(3ω), s/m.
    pub pump_slowness: f64,
}

impl DegenerateDerivatives {
    fn compute(fiber: &FiberSpec, triplet_freq: Spectral) -> Result<Self> {
        let w = triplet_freq.angular();
        let triplet = DirectDispersion::new(*fiber, TRIPLET_MODE);
        let pump = DirectDispersion::new(*fiber, PUMP_MODE);
        let h = 1e-3 * w;
        Ok(DegenerateDerivatives {
            triplet_slowness: triplet.group_slowness(w)?,
            triplet_gvd: (triplet.group_slowness(w + h)? - triplet.group_slowness(w - h)?) / (2.0 * h),
            pump_slowness: pump.group_slowness(3.0 * w)?,
        })
    }
}

/// Radial extent of the transverse integration in t = ρ².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransverseExtent {
    /// Spacing of sinc zeros in t, (rad/s)².
    pub zero_spacing: f64,
    /// Upper limit of the panelled region in t.
    pub t_max: f64,
}

impl TransverseExtent {
    pub fn rho_max(&self) -> f64 {
        self.t_max.sqrt()
    }
}

/// A fully specified, tabulated source.
#[derive(Debug, Clone)]
pub struct SourceDesign {
    pub fiber: FiberSpec,
    pub pump: PumpSpec,
    pub phasematch: PhasematchSolution,
    pub nonlinear: NonlinearSet,
    /// Pump-mode effective index at the pump center, used as n_p in the
    /// rate and ζ prefactors.
    pub pump_mode_index: f64,
    pub derivatives: DegenerateDerivatives,
    /// Nonlinear phase added to Δk, rad/m; zero unless enabled.
    pub phi_nl: f64,
    pump_table: DispersionTable,
    triplet_table: DispersionTable,
}

impl SourceDesign {
    /// Design at the phasematched radius for the pump's third harmonic.
    pub fn phasematched(template: &FiberSpec, pump: PumpSpec, chi3: f64) -> Result<Self> {
        let triplet = Spectral::from_angular(pump.center_freq.angular() / 3.0);
        let pm = find_phasematch_radius(template, triplet, DEFAULT_RADIUS_BRACKET)?;
        Self::at_radius(&template.with_radius(pm.fiber_radius)?, pump, chi3, None)
    }

    /// Design at the fiber's own radius, phasematched or not. Without an
    /// explicit window the tables cover what the rate integral needs.
    pub fn at_radius(fiber: &FiberSpec, pump: PumpSpec, chi3: f64, window: Option<SpectralWindow>) -> Result<Self> {
        let triplet = Spectral::from_angular(pump.center_freq.angular() / 3.0);
        let phasematch = PhasematchSolution {
            fiber_radius: fiber.core_radius,
            degenerate_freq: triplet,
            pump_freq: pump.center_freq,
            residual: degenerate_mismatch(fiber, triplet)?,
        };
        let nonlinear = NonlinearSet::at_design(fiber, triplet, chi3)?;
        let pump_mode_index = solve_mode(fiber, pump.center_freq, PUMP_MODE)?.n_eff;
        let derivatives = DegenerateDerivatives::compute(fiber, triplet)?;
        let window = match window {
            Some(w) => w,
            None => required_window(
                phasematch.residual,
                &derivatives,
                fiber.length,
                &pump,
                &QuadratureOptions::default(),
            ),
        };
        let (pump_table, triplet_table) = build_tables(fiber, &window)?;
        Ok(SourceDesign {
            fiber: *fiber,
            pump,
            phasematch,
            nonlinear,
            pump_mode_index,
            derivatives,
            phi_nl: 0.0,
            pump_table,
            triplet_table,
        })
    }

    pub fn triplet_freq(&self) -> Spectral {
        self.phasematch.degenerate_freq
    }

    pub fn triplet_dispersion(&self) -> &DispersionTable {
        &self.triplet_table
    }

    pub fn pump_dispersion(&self) -> &DispersionTable {
        &self.pump_table
    }

    pub fn window(&self) -> SpectralWindow {
        SpectralWindow {
            triplet: (self.triplet_table.lo(), self.triplet_table.hi()),
            pump: (self.pump_table.lo(), self.pump_table.hi()),
        }
    }

    /// Window the rate integral needs at this design's length and pump.
    pub fn rate_window(&self, opts: &QuadratureOptions) -> SpectralWindow {
        required_window(self.mismatch_offset(), &self.derivatives, self.fiber.length, &self.pump, opts)
    }

    fn mismatch_offset(&self) -> f64 {
        self.phasematch.residual + self.phi_nl
    }

    /// Same fiber radius with a new length, pump and table window. The
    /// existing tables are reused when they already cover `window`.
    pub fn reconfigured(&self, length: f64, pump: PumpSpec, window: Option<SpectralWindow>) -> Result<Self> {
        if (pump.center_freq.angular() / self.pump.center_freq.angular() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(
                "pump center frequency cannot change on an existing design".into(),
            ));
        }
        let mut next = self.clone();
        next.fiber = self.fiber.with_length(length)?;
        next.pump = pump;
        if self.phi_nl != 0.0 {
            next.phi_nl = nonlinear_phase(&self.nonlinear, pump.peak_power);
        }
        let window = window.unwrap_or_else(|| next.rate_window(&QuadratureOptions::default()));
        let covered = next.pump_table.covers(window.pump.0, window.pump.1)
            && next.triplet_table.covers(window.triplet.0, window.triplet.1);
        if !covered {
            let (p, t) = build_tables(&next.fiber, &window.union(&self.window()))?;
            next.pump_table = p;
            next.triplet_table = t;
        }
        Ok(next)
    }

    pub fn with_length(&self, length: f64) -> Result<Self> {
        self.reconfigured(length, self.pump, None)
    }

    pub fn with_pump(&self, pump: PumpSpec) -> Result<Self> {
        self.reconfigured(self.fiber.length, pump, None)
    }

    /// Includes the SPM/XPM phase Φ_NL in every Δk.
    pub fn with_nonlinear_phase(&self) -> Self {
        let mut next = self.clone();
        next.phi_nl = nonlinear_phase(&self.nonlinear, self.pump.peak_power);
        next
    }

    /// Extent of the transverse integration for the given options.
    pub fn transverse_extent(&self, opts: &QuadratureOptions) -> TransverseExtent {
        transverse_extent(self.mismatch_offset(), &self.derivatives, self.fiber.length, &self.pump, opts)
    }

    /// Weight k′ω/n² of one triplet photon.
    fn photon_weight(&self, omega: f64) -> Result<f64> {
        let n = self.triplet_table.n_eff(omega)?;
        Ok(self.triplet_table.group_slowness(omega)? * omega / (n * n))
    }

    fn mismatch(&self, w: [f64; 3]) -> Result<f64> {
        phase_mismatch(&self.pump_table, &self.triplet_table, w[0], w[1], w[2], self.phi_nl)
    }

    /// `w_r w_s w_i |F|²` at the three frequencies; order-independent.
    fn rate_density(&self, w: [f64; 3]) -> Result<f64> {
        let w = sorted(w);
        let alpha = pump_envelope(frequency_sum(w[0], w[1], w[2]), &self.pump);
        let x = 0.5 * self.fiber.length * self.mismatch(w)?;
        let weights = self.photon_weight(w[0])? * self.photon_weight(w[1])? * self.photon_weight(w[2])?;
        Ok(weights * alpha * alpha * sinc(x).powi(2))
    }

    /// Everything in the rate except the sinc², plus the sinc argument.
    fn rate_parts(&self, w: [f64; 3]) -> Result<(f64, f64)> {
        let w = sorted(w);
        let alpha = pump_envelope(frequency_sum(w[0], w[1], w[2]), &self.pump);
        let x = 0.5 * self.fiber.length * self.mismatch(w)?;
        let weights = self.photon_weight(w[0])? * self.photon_weight(w[1])? * self.photon_weight(w[2])?;
        Ok((weights * alpha * alpha, x))
    }

    /// Constant in front of the frequency integral of the rate, including
    /// L²γ²PR/σ².
    pub fn rate_prefactor(&self) -> f64 {
        let n_p = self.pump_mode_index;
        let wp = self.pump.center_freq.angular();
        let l = self.fiber.length;
        let g = self.nonlinear.gamma;
        8.0 * 9.0 * HBAR * SPEED_OF_LIGHT.powi(3) * n_p.powi(3) / (PI * PI * wp * wp)
            * (l * l * g * g * self.pump.peak_power * self.pump.rep_rate / (self.pump.sigma * self.pump.sigma))
    }
}

fn build_tables(fiber: &FiberSpec, window: &SpectralWindow) -> Result<(DispersionTable, DispersionTable)> {
    let (pump, triplet) = rayon::join(
        || DispersionTable::build(*fiber, PUMP_MODE, window.pump.0, window.pump.1, TABLE_NODES),
        || DispersionTable::build(*fiber, TRIPLET_MODE, window.triplet.0, window.triplet.1, TABLE_NODES),
    );
    Ok((pump?, triplet?))
}

fn transverse_extent(
    offset: f64,
    d: &DegenerateDerivatives,
    length: f64,
    pump: &PumpSpec,
    opts: &QuadratureOptions,
) -> TransverseExtent {
    let gvd = d.triplet_gvd.abs();
    // Δk ≈ g(s) − (k″/2)·t near the degenerate point.
    let g_max = (d.pump_slowness - d.triplet_slowness).abs() * opts.window_sigmas * pump.sigma + offset.abs();
    let zero_spacing = 4.0 * PI / (length * gvd);
    TransverseExtent {
        zero_spacing,
        t_max: opts.sinc_zeros as f64 * zero_spacing + 2.0 * g_max / gvd,
    }
}

fn required_window(
    offset: f64,
    d: &DegenerateDerivatives,
    length: f64,
    pump: &PumpSpec,
    opts: &QuadratureOptions,
) -> SpectralWindow {
    let wp = pump.center_freq.angular();
    let half_sum = opts.window_sigmas * pump.sigma;
    let ext = transverse_extent(offset, d, length, pump, opts);
    let spread = MAX_TRANSVERSE_COMPONENT * ext.rho_max();
    SpectralWindow {
        triplet: SpectralWindow::padded((wp - half_sum) / 3.0 - spread, (wp + half_sum) / 3.0 + spread),
        pump: SpectralWindow::padded(wp - half_sum, wp + half_sum),
    }
}

/// F = α(ω_r+ω_s+ω_i)·φ(Δk, L).
pub fn joint_amplitude(design: &SourceDesign, w_r: f64, w_s: f64, w_i: f64) -> Result<Complex64> {
    let w = sorted([w_r, w_s, w_i]);
    let alpha = pump_envelope(frequency_sum(w[0], w[1], w[2]), &design.pump);
    Ok(alpha * pm_function(design.mismatch(w)?, design.fiber.length))
}

/// ℓ(ω) = √(ħω/(πε₀n²)) with the triplet-mode effective index.
pub fn mode_normalization(design: &SourceDesign, omega: f64) -> Result<f64> {
    let n = design.triplet_table.n_eff(omega)?;
    Ok((HBAR * omega / (PI * VACUUM_PERMITTIVITY * n * n)).sqrt())
}

/// G = ℓ(ω_r)ℓ(ω_s)ℓ(ω_i)·F.
pub fn full_joint_amplitude(design: &SourceDesign, w_r: f64, w_s: f64, w_i: f64) -> Result<Complex64> {
    let w = sorted([w_r, w_s, w_i]);
    let ell = mode_normalization(design, w[0])? * mode_normalization(design, w[1])? * mode_normalization(design, w[2])?;
    Ok(ell * joint_amplitude(design, w_r, w_s, w_i)?)
}

/// State-expansion parameter ζ for quantization spacing `delta_k` (rad/m).
/// Depends on the quantization box; the rate does not.
pub fn zeta(design: &SourceDesign, delta_k: f64) -> f64 {
    let n_p = design.pump_mode_index;
    let wp = design.pump.center_freq.angular();
    let l = design.fiber.length;
    let num = 2.0
        * (2.0 * PI).powf(1.5)
        * VACUUM_PERMITTIVITY.powi(3)
        * SPEED_OF_LIGHT.powi(3)
        * n_p.powi(3)
        * design.pump.peak_power
        * l
        * l
        * design.nonlinear.gamma.powi(2);
    (num / (HBAR * HBAR * wp * wp * design.pump.sigma)).sqrt() * delta_k.powf(1.5)
}

/// Record of how a rate was obtained.
#[derive(Debug, Clone, Serialize)]
pub struct RateMetadata {
    pub options: QuadratureOptions,
    pub refined_options: QuadratureOptions,
    pub extent: TransverseExtent,
    pub window: SpectralWindow,
    pub table_nodes: usize,
    pub prefactor: f64,
    pub integral: f64,
    pub integral_base: f64,
    pub length_m: f64,
    pub peak_power_w: f64,
    pub rep_rate_hz: f64,
    pub sigma_rad_per_s: f64,
    pub pump_mode_index: f64,
    pub gamma_per_w_m: f64,
    pub phi_nl_rad_per_m: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateResult {
    pub triplets_per_second: f64,
    /// |refined − base| in triplets per second.
    pub quadrature_error: f64,
    pub converged: bool,
    pub metadata: RateMetadata,
}

/// Unit vector of transverse angle θ in the plane orthogonal to (1,1,1).
fn transverse_direction(theta: f64) -> [f64; 3] {
    let (s, c) = theta.sin_cos();
    let a = c / 2f64.sqrt();
    let b = s / 6f64.sqrt();
    [a + b, -a + b, -2.0 * b]
}

/// ∫∫∫ w_r w_s w_i |F|² dω_r dω_s dω_i in (s, t, θ) coordinates.
pub fn rate_integral(design: &SourceDesign, opts: &QuadratureOptions) -> Result<f64> {
    opts.validate()?;
    let ext = design.transverse_extent(opts);
    let wp = design.pump.center_freq.angular();
    let half = opts.window_sigmas * design.pump.sigma;
    let sum_rule = GaussRule::new(opts.sum_nodes);
    let radial = GaussRule::new(opts.radial_order);
    let panel = ext.zero_spacing / opts.panels_per_zero as f64;
    let panels = (ext.t_max / panel).ceil() as usize;
    let t_max = panel * panels as f64;
    let slope = 0.25 * design.fiber.length * design.derivatives.triplet_gvd.abs();
    let directions: Vec<[f64; 3]> = (0..opts.angle_points)
        .map(|k| transverse_direction(2.0 * PI * k as f64 / opts.angle_points as f64))
        .collect();
    let nodes: Vec<(f64, f64)> = sum_rule.mapped(wp - half, wp + half).collect();

    let slabs: Vec<f64> = nodes
        .par_iter()
        .map(|&(s, ws)| -> Result<f64> {
            let mut over_angle = 0.0;
            for d in &directions {
                let at = |t: f64| {
                    let rho = t.sqrt();
                    [s / 3.0 + rho * d[0], s / 3.0 + rho * d[1], s / 3.0 + rho * d[2]]
                };
                let mut radial_sum = 0.0;
                for p in 0..panels {
                    let lo = panel * p as f64;
                    for (t, wt) in radial.mapped(lo, lo + panel) {
                        radial_sum += wt * design.rate_density(at(t))?;
                    }
                }
                let (envelope, x) = design.rate_parts(at(t_max))?;
                radial_sum += envelope / (slope * 2.0 * x.abs());
                over_angle += radial_sum;
            }
            Ok(ws * over_angle * 2.0 * PI / opts.angle_points as f64)
        })
        .collect::<Result<_>>()?;
    // dω³ = (1/√3) ds · (1/2) dt dθ
    Ok(slabs.iter().sum::<f64>() * 0.5 / 3f64.sqrt())
}

/// Absolute triplet rate with an error estimate from one refinement.
pub fn triplet_rate(design: &SourceDesign, opts: &QuadratureOptions) -> Result<RateResult> {
    let refined_opts = opts.refined();
    let window = design.rate_window(&refined_opts);
    if !(design.triplet_table.covers(window.triplet.0, window.triplet.1)
        && design.pump_table.covers(window.pump.0, window.pump.1))
    {
        let lo = window.triplet.0.min(window.pump.0 / 3.0);
        return Err(Error::OutsideTable {
            omega: lo,
            lo: design.triplet_table.lo(),
            hi: design.triplet_table.hi(),
        });
    }
    let base = rate_integral(design, opts)?;
    let refined = rate_integral(design, &refined_opts)?;
    let prefactor = design.rate_prefactor();
    let rate = prefactor * refined;
    let error = prefactor * (refined - base).abs();
    Ok(RateResult {
        triplets_per_second: rate,
        quadrature_error: error,
        converged: error <= opts.tolerance * rate.abs(),
        metadata: RateMetadata {
            options: *opts,
            refined_options: refined_opts,
            extent: design.transverse_extent(&refined_opts),
            window: design.window(),
            table_nodes: TABLE_NODES,
            prefactor,
            integral: refined,
            integral_base: base,
            length_m: design.fiber.length,
            peak_power_w: design.pump.peak_power,
            rep_rate_hz: design.pump.rep_rate,
            sigma_rad_per_s: design.pump.sigma,
            pump_mode_index: design.pump_mode_index,
            gamma_per_w_m: design.nonlinear.gamma,
            phi_nl_rad_per_m: design.phi_nl,
        },
    })
}

/// Which photon's frequency is kept in a marginal spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Photon {
    R,
    S,
    I,
}

/// Single-photon spectral density in triplets per second per rad/s.
#[derive(Debug, Clone, Serialize)]
pub struct MarginalSpectrum {
    pub omega: Vec<f64>,
    pub density: Vec<f64>,
    /// Simpson integral of the density, triplets per second.
    pub integral: f64,
    pub kept: Photon,
}

impl MarginalSpectrum {
    pub fn peak_omega(&self) -> f64 {
        let (k, _) = self
            .density
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
        self.omega[k]
    }
}

/// Integrates the rate integrand over two of the three frequencies on an
/// odd number of points spanning the transverse extent.
pub fn marginal_spectrum(
    design: &SourceDesign,
    opts: &QuadratureOptions,
    points: usize,
    kept: Photon,
) -> Result<MarginalSpectrum> {
    opts.validate()?;
    if points < 3 || points % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "spectrum needs an odd number of points >= 3, got {points}"
        )));
    }
    let ext = design.transverse_extent(opts);
    let w0 = design.triplet_freq().angular();
    let wp = design.pump.center_freq.angular();
    let half = opts.window_sigmas * design.pump.sigma;
    let nu_max = MAX_TRANSVERSE_COMPONENT * ext.rho_max();
    let step = 2.0 * nu_max / (points - 1) as f64;
    let omega: Vec<f64> = (0..points).map(|k| w0 - nu_max + step * k as f64).collect();
    let sum_rule = GaussRule::new(opts.sum_nodes);
    let radial = GaussRule::new(opts.radial_order);
    // In u = d², Δk falls by k″/4 per unit u, so sinc zeros are spaced
    // twice as far apart as in t.
    let u_spacing = 2.0 * ext.zero_spacing / opts.panels_per_zero as f64;
    let gvd = design.derivatives.triplet_gvd.abs();
    let length = design.fiber.length;
    let place = |fixed: f64, a: f64, b: f64| match kept {
        Photon::R => [fixed, a, b],
        Photon::S => [a, fixed, b],
        Photon::I => [a, b, fixed],
    };

    let density: Vec<f64> = omega
        .par_iter()
        .map(|&wr| -> Result<f64> {
            let mut total = 0.0;
            for (s, ws) in sum_rule.mapped(wp - half, wp + half) {
                let nu = wr - s / 3.0;
                let u_max = (2.0 * ext.t_max - 3.0 * nu * nu).max(4.0 * u_spacing);
                let panels = (u_max / u_spacing).ceil() as usize;
                let at = |d: f64| place(wr, 0.5 * (s - wr) + 0.5 * d, 0.5 * (s - wr) - 0.5 * d);
                let mut inner = 0.0;
                for p in 0..panels {
                    let lo = (u_spacing * p as f64).sqrt();
                    let hi = (u_spacing * (p + 1) as f64).sqrt();
                    for (d, wd) in radial.mapped(lo, hi) {
                        inner += wd * design.rate_density(at(d))?;
                    }
                }
                let d_end = (u_spacing * panels as f64).sqrt();
                let (envelope, x) = design.rate_parts(at(d_end))?;
                inner += envelope / (0.25 * length * gvd * d_end * 2.0 * x.abs());
                // d ∈ (−∞, ∞) is symmetric; dω_s dω_i = (1/2) ds dd.
                total += ws * inner;
            }
            Ok(total)
        })
        .collect::<Result<_>>()?;
    let prefactor = design.rate_prefactor();
    let density: Vec<f64> = density.iter().map(|&v| prefactor * v).collect();
    let integral = simpson(&density, step);
    Ok(MarginalSpectrum {
        omega,
        density,
        integral,
        kept,
    })
}

/// Quantity sampled on a joint-spectrum grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GridKind {
    /// Phasematching function φ (complex).
    PM,
    /// Pump spectral amplitude α (real).
    PSA,
    /// Joint spectral intensity |F|² (real).
    JSI,
    /// Joint spectral amplitude F (complex).
    JSA,
}

/// Uniform frequency axis, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridAxis {
    pub start: f64,
    pub step: f64,
    pub points: usize,
}

impl GridAxis {
    pub fn centered(center: f64, half_width: f64, points: usize) -> Result<Self> {
        if points < 2 || !(half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid axis needs >= 2 points and positive width, got {points} and {half_width:e}"
            )));
        }
        Ok(GridAxis {
            start: center - half_width,
            step: 2.0 * half_width / (points - 1) as f64,
            points,
        })
    }

    pub fn value(&self, k: usize) -> f64 {
        self.start + self.step * k as f64
    }

    pub fn end(&self) -> f64 {
        self.value(self.points - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridValues {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl GridValues {
    /// |value|² for complex grids, the value itself for real ones.
    pub fn intensity(&self, index: usize) -> f64 {
        match self {
            GridValues::Real(v) => v[index],
            GridValues::Complex(v) => v[index].norm_sqr(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            GridValues::Real(v) => v.len(),
            GridValues::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Samples on a 3-D frequency grid, row-major in (ω_r, ω_s, ω_i).
#[derive(Debug, Clone)]
pub struct JointSpectrumGrid {
    pub axes: [GridAxis; 3],
    pub kind: GridKind,
    pub values: GridValues,
    pub length: f64,
    pub sigma: f64,
}

impl JointSpectrumGrid {
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.axes[1].points + j) * self.axes[2].points + k
    }

    pub fn coordinates(&self, index: usize) -> (usize, usize, usize) {
        let nk = self.axes[2].points;
        let nj = self.axes[1].points;
        (index / (nj * nk), (index / nk) % nj, index % nk)
    }

    /// Cell with the largest intensity (first one on ties).
    pub fn argmax(&self) -> (usize, usize, usize) {
        let mut best = (0, f64::MIN);
        for idx in 0..self.values.len() {
            let v = self.values.intensity(idx);
            if v > best.1 {
                best = (idx, v);
            }
        }
        self.coordinates(best.0)
    }
}

pub const DEFAULT_CELL_BUDGET: usize = 10_000_000;

/// Frequency sum at cell (i, j, k): from the index sum when all steps are
/// equal, so cells on one constant-sum plane get bit-identical sums.
fn cell_sum(axes: &[GridAxis; 3], i: usize, j: usize, k: usize) -> f64 {
    if axes[0].step == axes[1].step && axes[1].step == axes[2].step {
        (axes[0].start + axes[1].start + axes[2].start) + (i + j + k) as f64 * axes[0].step
    } else {
        let w = sorted([axes[0].value(i), axes[1].value(j), axes[2].value(k)]);
        frequency_sum(w[0], w[1], w[2])
    }
}

pub fn check_cell_budget(axes: &[GridAxis; 3], budget: usize) -> Result<()> {
    let cells = axes.iter().map(|a| a.points).product::<usize>();
    if cells > budget {
        return Err(Error::GridTooLarge {
            cells,
            budget,
            max_per_axis: (budget as f64).cbrt().floor() as usize,
        });
    }
    Ok(())
}

/// Samples PM, PSA, JSI or JSA on the given axes.
pub fn jsi_grid(design: &SourceDesign, axes: [GridAxis; 3], kind: GridKind, budget: usize) -> Result<JointSpectrumGrid> {
    check_cell_budget(&axes, budget)?;
    let length = design.fiber.length;
    let slab = axes[1].points * axes[2].points;
    let slabs: Vec<GridValues> = (0..axes[0].points)
        .into_par_iter()
        .map(|i| -> Result<GridValues> {
            let wr = axes[0].value(i);
            let mut real = Vec::new();
            let mut complex = Vec::new();
            for j in 0..axes[1].points {
                for k in 0..axes[2].points {
                    let w = [wr, axes[1].value(j), axes[2].value(k)];
                    let alpha = || pump_envelope(cell_sum(&axes, i, j, k), &design.pump);
                    let phi = || -> Result<Complex64> { Ok(pm_function(design.mismatch(sorted(w))?, length)) };
                    match kind {
                        GridKind::PSA => real.push(alpha()),
                        GridKind::PM => complex.push(phi()?),
                        GridKind::JSA => complex.push(alpha() * phi()?),
                        GridKind::JSI => real.push((alpha() * phi()?).norm_sqr()),
                    }
                }
            }
            Ok(if complex.is_empty() {
                debug_assert_eq!(real.len(), slab);
                GridValues::Real(real)
            } else {
                GridValues::Complex(complex)
            })
        })
        .collect::<Result<_>>()?;
    let values = match kind {
        GridKind::PSA | GridKind::JSI => GridValues::Real(
            slabs
                .into_iter()
                .flat_map(|s| match s {
                    GridValues::Real(v) => v,
                    GridValues::Complex(_) => unreachable!(),
                })
                .collect(),
        ),
        GridKind::PM | GridKind::JSA => GridValues::Complex(
            slabs
                .into_iter()
                .flat_map(|s| match s {
                    GridValues::Complex(v) => v,
                    GridValues::Real(_) => unreachable!(),
                })
                .collect(),
        ),
    };
    Ok(JointSpectrumGrid {
        axes,
        kind,
        values,
        length,
        sigma: design.pump.sigma,
    })
}

/// Named grid configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GridPreset {
    /// Visualization parameters quoted with the joint-spectrum figure:
    /// L = 0.6 µm (taken as written; possibly meant 0.6 mm) and
    /// σ = 5.1×10¹² rad/s, axes ±3σ around the degenerate frequency.
    Figure2LengthAsWritten,
    /// The design's own length and bandwidth; axes span four sinc periods
    /// of the transverse structure.
    Design,
}

pub const FIGURE2_LENGTH: f64 = 0.6e-6;
pub const FIGURE2_SIGMA: f64 = 5.1e12;

/// Design reconfigured for `preset` together with its cubic axes.
pub fn preset_design(design: &SourceDesign, preset: GridPreset, points: usize) -> Result<(SourceDesign, [GridAxis; 3])> {
    let w0 = design.triplet_freq().angular();
    let (length, pump, half_width) = match preset {
        GridPreset::Figure2LengthAsWritten => (FIGURE2_LENGTH, design.pump.with_sigma(FIGURE2_SIGMA)?, 3.0 * FIGURE2_SIGMA),
        GridPreset::Design => {
            let opts = QuadratureOptions {
                sinc_zeros: 4,
                ..QuadratureOptions::default()
            };
            let ext = design.transverse_extent(&opts);
            (design.fiber.length, design.pump, MAX_TRANSVERSE_COMPONENT * ext.rho_max())
        }
    };
    let axis = GridAxis::centered(w0, half_width, points)?;
    let axes = [axis; 3];
    let window = SpectralWindow {
        triplet: SpectralWindow::padded(axis.start, axis.end()),
        pump: SpectralWindow::padded(3.0 * axis.start, 3.0 * axis.end()),
    };
    Ok((design.reconfigured(length, pump, Some(window))?, axes))
}
