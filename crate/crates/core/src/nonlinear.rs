//! Transverse overlap integrals: effective area, the nonlinear coefficient
//! γ, SPM/XPM coefficients and free-space Gaussian coupling into the pump
//! mode. Every field here is axially symmetric (or has a known azimuthal
//! dependence), so all integrals reduce to one radial quadrature.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::dispersion::Spectral;
use crate::error::{Error, Result};
use crate::fibermodes::{solve_mode, FiberSpec, HybridModeField, ModeSolution, ScalarModeProfile};
use crate::phasematch::{find_phasematch_radius, PUMP_MODE, TRIPLET_MODE};
use crate::quadrature::RadialQuadrature;

/// Largest accepted deviation of ∬|f|² from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-3;
/// Waist tolerance of the coupling maximization, m.
pub const COUPLING_TOLERANCE: f64 = 1e-10;

/// Axially symmetric scalar amplitude f(r).
pub trait RadialField: Sync {
    fn amplitude(&self, r: f64) -> f64;
    /// Radius of a derivative discontinuity, if any.
    fn breakpoint(&self) -> Option<f64>;
    /// Radius beyond which |f|² is negligible (below e⁻³⁶ of its peak scale).
    fn extent(&self) -> f64;
}

/// x-polarized transverse field e_x = e₀(r) + e₂(r)cos2φ, e_y = e₂(r)sin2φ.
pub trait TransverseField: Sync {
    fn components(&self, r: f64) -> (f64, f64);
    fn breakpoint(&self) -> Option<f64>;
    fn extent(&self) -> f64;
}

impl RadialField for ScalarModeProfile {
    fn amplitude(&self, r: f64) -> f64 {
        ScalarModeProfile::amplitude(self, r)
    }

    fn breakpoint(&self) -> Option<f64> {
        Some(self.core_radius)
    }

    fn extent(&self) -> f64 {
        ScalarModeProfile::extent(self)
    }
}

impl TransverseField for HybridModeField {
    fn components(&self, r: f64) -> (f64, f64) {
        HybridModeField::components(self, r)
    }

    fn breakpoint(&self) -> Option<f64> {
        Some(self.core_radius)
    }

    fn extent(&self) -> f64 {
        HybridModeField::extent(self)
    }
}

/// Unit-power Gaussian √(2/πw²)·exp(−r²/w²), w the 1/e² intensity radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBeam {
    pub waist: f64,
}

impl GaussianBeam {
    pub fn new(waist: f64) -> Result<Self> {
        if waist > 0.0 && waist.is_finite() {
            Ok(GaussianBeam { waist })
        } else {
            Err(Error::InvalidParameter(format!("beam waist must be positive, got {waist}")))
        }
    }
}

impl RadialField for GaussianBeam {
    fn amplitude(&self, r: f64) -> f64 {
        let x = r / self.waist;
        (2.0 / (PI * self.waist * self.waist)).sqrt() * (-x * x).exp()
    }

    fn breakpoint(&self) -> Option<f64> {
        None
    }

    fn extent(&self) -> f64 {
        // exp(−2r²/w²) = e⁻³⁶
        18f64.sqrt() * self.waist
    }
}

impl TransverseField for GaussianBeam {
    fn components(&self, r: f64) -> (f64, f64) {
        (RadialField::amplitude(self, r), 0.0)
    }

    fn breakpoint(&self) -> Option<f64> {
        None
    }

    fn extent(&self) -> f64 {
        RadialField::extent(self)
    }
}

fn layout(breakpoints: impl Iterator<Item = Option<f64>>, extents: impl Iterator<Item = f64>) -> (f64, f64) {
    let extent = extents.fold(0.0, f64::max);
    let breakpoint = breakpoints.flatten().next().unwrap_or(extent / 8.0);
    (breakpoint, extent.max(breakpoint))
}

/// ∬|f|² dA.
pub fn power(field: &dyn RadialField, quad: &RadialQuadrature) -> f64 {
    let (b, e) = layout(std::iter::once(field.breakpoint()), std::iter::once(field.extent()));
    quad.integrate(b, e, |r| field.amplitude(r).powi(2))
}

fn check_normalized(field: &dyn RadialField, quad: &RadialQuadrature) -> Result<()> {
    let norm = power(field, quad);
    if (norm - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// ∬ f_p f_r f_s f_i dA. The three triplet amplitudes are multiplied in
/// sorted order so the value does not depend on their labelling.
pub fn four_field_overlap(
    pump: &dyn RadialField,
    r: &dyn RadialField,
    s: &dyn RadialField,
    i: &dyn RadialField,
    quad: &RadialQuadrature,
) -> f64 {
    let fields = [pump, r, s, i];
    let (b, e) = layout(fields.iter().map(|f| f.breakpoint()), fields.iter().map(|f| f.extent()));
    quad.integrate(b, e, |rad| {
        let mut t = [r.amplitude(rad), s.amplitude(rad), i.amplitude(rad)];
        t.sort_by(f64::total_cmp);
        pump.amplitude(rad) * t[0] * t[1] * t[2]
    })
}

/// A_eff = 1/|∬ f_p f_r f_s f_i dA| for unit-normalized profiles.
pub fn effective_area(
    pump: &dyn RadialField,
    r: &dyn RadialField,
    s: &dyn RadialField,
    i: &dyn RadialField,
) -> Result<f64> {
    effective_area_with(&RadialQuadrature::default(), pump, r, s, i)
}

pub fn effective_area_with(
    quad: &RadialQuadrature,
    pump: &dyn RadialField,
    r: &dyn RadialField,
    s: &dyn RadialField,
    i: &dyn RadialField,
) -> Result<f64> {
    for f in [pump, r, s, i] {
        check_normalized(f, quad)?;
    }
    Ok(1.0 / four_field_overlap(pump, r, s, i, quad).abs())
}

/// γ = 3χ³ω_p/(4ε₀c²n_p²A_eff) in 1/(W·m).
pub fn gamma_coefficient(chi3: f64, pump_freq: Spectral, n_p: f64, a_eff: f64) -> f64 {
    nonlinear_prefactor(chi3, pump_freq, n_p) / a_eff
}

fn nonlinear_prefactor(chi3: f64, pump_freq: Spectral, n_p: f64) -> f64 {
    3.0 * chi3 * pump_freq.angular() / (4.0 * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT.powi(2) * n_p * n_p)
}

/// (γ_p, γ_pr, γ_ps, γ_pi): the γ prefactor times ∬|f_p|⁴ and ∬|f_p|²|f_μ|².
pub fn spm_xpm_coefficients(
    pump: &ModeSolution,
    r: &ModeSolution,
    s: &ModeSolution,
    i: &ModeSolution,
    chi3: f64,
) -> Result<(f64, f64, f64, f64)> {
    let quad = RadialQuadrature::default();
    let fp = pump.scalar_profile();
    let pref = nonlinear_prefactor(chi3, pump.freq, pump.n_core);
    let cross = |m: &ModeSolution| -> Result<f64> {
        let fm = m.scalar_profile();
        check_normalized(&fm, &quad)?;
        Ok(pref * four_field_overlap(&fp, &fp, &fm, &fm, &quad))
    };
    check_normalized(&fp, &quad)?;
    let gamma_p = pref * four_field_overlap(&fp, &fp, &fp, &fp, &quad);
    Ok((gamma_p, cross(r)?, cross(s)?, cross(i)?))
}

/// Overlap conventions, emitted with every result.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NonlinearConventions {
    pub overlap_field: &'static str,
    pub pump_index: &'static str,
    pub spm_overlap: &'static str,
    pub xpm_overlap: &'static str,
}

pub const CONVENTIONS: NonlinearConventions = NonlinearConventions {
    overlap_field: "scalar J0/K0 profile with exact vector U, W; unit power",
    pump_index: "bulk fused-silica index at the pump frequency",
    spm_overlap: "gamma_p = 3 chi3 w_p / (4 eps0 c^2 n_p^2) * int |f_p|^4 dA",
    xpm_overlap: "gamma_pm = 3 chi3 w_p / (4 eps0 c^2 n_p^2) * int |f_p|^2 |f_m|^2 dA",
};

/// Nonlinear coefficients at one design point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonlinearSet {
    /// m².
    pub a_eff: f64,
    /// 1/(W·m).
    pub gamma: f64,
    pub gamma_p: f64,
    pub gamma_pr: f64,
    pub gamma_ps: f64,
    pub gamma_pi: f64,
    /// m²/V².
    pub chi3: f64,
    pub pump_index: f64,
    pub pump_freq: Spectral,
}

impl NonlinearSet {
    pub fn compute(
        pump: &ModeSolution,
        r: &ModeSolution,
        s: &ModeSolution,
        i: &ModeSolution,
        chi3: f64,
    ) -> Result<Self> {
        let a_eff = effective_area(&pump.scalar_profile(), &r.scalar_profile(), &s.scalar_profile(), &i.scalar_profile())?;
        let (gamma_p, gamma_pr, gamma_ps, gamma_pi) = spm_xpm_coefficients(pump, r, s, i, chi3)?;
        Ok(NonlinearSet {
            a_eff,
            gamma: gamma_coefficient(chi3, pump.freq, pump.n_core, a_eff),
            gamma_p,
            gamma_pr,
            gamma_ps,
            gamma_pi,
            chi3,
            pump_index: pump.n_core,
            pump_freq: pump.freq,
        })
    }

    /// Degenerate design: all three photons share one mode solution.
    pub fn degenerate(pump: &ModeSolution, triplet: &ModeSolution, chi3: f64) -> Result<Self> {
        Self::compute(pump, triplet, triplet, triplet, chi3)
    }

    /// Solves both modes for `fiber` at the given triplet frequency.
    pub fn at_design(fiber: &FiberSpec, triplet_freq: Spectral, chi3: f64) -> Result<Self> {
        let pump_freq = Spectral::from_angular(3.0 * triplet_freq.angular());
        let pump = solve_mode(fiber, pump_freq, PUMP_MODE)?;
        let triplet = solve_mode(fiber, triplet_freq, TRIPLET_MODE)?;
        Self::degenerate(&pump, &triplet, chi3)
    }

    pub fn gamma_per_w_km(&self) -> f64 {
        self.gamma * 1e3
    }
}

/// One row of a γ-vs-wavelength scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaPoint {
    pub wavelength: f64,
    pub radius: f64,
    pub nonlinear: NonlinearSet,
}

/// Phasematched radius and nonlinear coefficients at each triplet
/// wavelength, in input order.
pub fn gamma_scan(
    template: &FiberSpec,
    wavelengths: &[f64],
    bracket: (f64, f64),
    chi3: f64,
) -> Vec<Result<GammaPoint>> {
    wavelengths
        .par_iter()
        .map(|&lambda| {
            let freq = Spectral::from_wavelength(lambda);
            let pm = find_phasematch_radius(template, freq, bracket)?;
            let fiber = template.with_radius(pm.fiber_radius)?;
            Ok(GammaPoint {
                wavelength: lambda,
                radius: pm.fiber_radius,
                nonlinear: NonlinearSet::at_design(&fiber, freq, chi3)?,
            })
        })
        .collect()
}

fn inner_product(a: &dyn TransverseField, b: &dyn TransverseField, quad: &RadialQuadrature) -> f64 {
    let (bp, e) = layout([a.breakpoint(), b.breakpoint()].into_iter(), [a.extent(), b.extent()].into_iter());
    quad.integrate(bp, e, |r| {
        let (a0, a2) = a.components(r);
        let (b0, b2) = b.components(r);
        a0 * b0 + a2 * b2
    })
}

/// Power-coupling fraction |⟨a,b⟩|²/(⟨a,a⟩⟨b,b⟩) between two fields.
pub fn field_coupling(a: &dyn TransverseField, b: &dyn TransverseField) -> f64 {
    field_coupling_with(&RadialQuadrature::default(), a, b)
}

pub fn field_coupling_with(quad: &RadialQuadrature, a: &dyn TransverseField, b: &dyn TransverseField) -> f64 {
    let ab = inner_product(a, b, quad);
    ab * ab / (inner_product(a, a, quad) * inner_product(b, b, quad))
}

/// Fraction of a co-polarized Gaussian beam, waist at the input face,
/// coupled into the exact vector field of `pump_mode`.
pub fn gaussian_coupling(pump_mode: &ModeSolution, beam_waist: f64) -> Result<f64> {
    Ok(field_coupling(&pump_mode.vector_field(), &GaussianBeam::new(beam_waist)?))
}

/// Golden-section search for the waist of maximum coupling in `bracket`.
pub fn maximize_coupling(pump_mode: &ModeSolution, bracket: (f64, f64)) -> Result<(f64, f64)> {
    maximize_coupling_with_tolerance(pump_mode, bracket, COUPLING_TOLERANCE)
}

pub fn maximize_coupling_with_tolerance(
    pump_mode: &ModeSolution,
    bracket: (f64, f64),
    tolerance: f64,
) -> Result<(f64, f64)> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!("invalid waist bracket [{lo:e}, {hi:e}]")));
    }
    let field = pump_mode.vector_field();
    let f = |w: f64| field_coupling(&field, &GaussianBeam { waist: w });
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tolerance {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let waist = 0.5 * (a + b);
    let fraction = f(waist);
    if waist - lo < 2.0 * tolerance || hi - waist < 2.0 * tolerance || fraction < f(lo) || fraction < f(hi) {
        return Err(Error::NonInteriorMaximum {
            waist_um: waist * 1e6,
            fraction,
        });
    }
    Ok((waist, fraction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::CHI3_FUSED_SILICA;
    use proptest::prelude::*;

    const RADIUS: f64 = 0.3951847931839625e-6;

    fn modes() -> (ModeSolution, ModeSolution) {
        let fiber = FiberSpec::air_clad_silica(RADIUS, 0.1).unwrap();
        let w = Spectral::from_wavelength_um(1.596);
        (
            solve_mode(&fiber, w.scaled(3.0), PUMP_MODE).unwrap(),
            solve_mode(&fiber, w, TRIPLET_MODE).unwrap(),
        )
    }

    #[test]
    fn gaussian_effective_area_closed_form() {
        let w = 1.3e-6;
        let g = GaussianBeam::new(w).unwrap();
        let a = effective_area(&g, &g, &g, &g).unwrap();
        assert!((a / (PI * w * w) - 1.0).abs() < 1e-10);
        let g2 = GaussianBeam::new(2.0 * w).unwrap();
        let a2 = effective_area(&g2, &g2, &g2, &g2).unwrap();
        assert!((a2 / a - 4.0).abs() < 1e-10);
    }

    #[test]
    fn unnormalized_input_rejected() {
        struct Doubled(GaussianBeam);
        impl RadialField for Doubled {
            fn amplitude(&self, r: f64) -> f64 {
                2.0 * RadialField::amplitude(&self.0, r)
            }
            fn breakpoint(&self) -> Option<f64> {
                None
            }
            fn extent(&self) -> f64 {
                RadialField::extent(&self.0)
            }
        }
        let g = GaussianBeam::new(1e-6).unwrap();
        let d = Doubled(g);
        assert!(matches!(effective_area(&d, &g, &g, &g), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn design_point_gamma() {
        let (pump, triplet) = modes();
        let set = NonlinearSet::degenerate(&pump, &triplet, CHI3_FUSED_SILICA).unwrap();
        // Independent scipy quad of the same overlap.
        assert!((set.gamma_per_w_km() / 21.77006 - 1.0).abs() < 1e-4, "{}", set.gamma_per_w_km());
        assert!((set.a_eff / 1.43683e-11 - 1.0).abs() < 1e-4);
        let back = gamma_coefficient(set.chi3, set.pump_freq, set.pump_index, set.a_eff);
        assert!((back / set.gamma - 1.0).abs() < 1e-10);
        assert!(set.gamma_p > 0.0 && set.gamma_pr > 0.0);
        assert_eq!(set.gamma_pr, set.gamma_pi);
    }

    #[test]
    fn gamma_linear_in_chi3_and_inverse_in_area() {
        let f = Spectral::from_wavelength_um(0.532);
        let g = gamma_coefficient(2e-22, f, 1.46, 1e-11);
        assert_eq!(gamma_coefficient(4e-22, f, 1.46, 1e-11), 2.0 * g);
        assert_eq!(gamma_coefficient(2e-22, f, 1.46, 2e-11), 0.5 * g);
    }

    #[test]
    fn triplet_order_bit_exact() {
        let (pump, triplet) = modes();
        let fiber = triplet.fiber;
        let other = solve_mode(&fiber, Spectral::from_wavelength_um(1.55), TRIPLET_MODE).unwrap();
        let third = solve_mode(&fiber, Spectral::from_wavelength_um(1.65), TRIPLET_MODE).unwrap();
        let (p, a, b, c) = (
            pump.scalar_profile(),
            triplet.scalar_profile(),
            other.scalar_profile(),
            third.scalar_profile(),
        );
        let base = effective_area(&p, &a, &b, &c).unwrap();
        for (x, y, z) in [(&a, &c, &b), (&b, &a, &c), (&c, &b, &a)] {
            assert_eq!(effective_area(&p, x, y, z).unwrap().to_bits(), base.to_bits());
        }
    }

    #[test]
    fn area_converged_under_refinement() {
        let (pump, triplet) = modes();
        let (p, t) = (pump.scalar_profile(), triplet.scalar_profile());
        let base = RadialQuadrature::default();
        let a = effective_area_with(&base, &p, &t, &t, &t).unwrap();
        let b = effective_area_with(&base.refined(), &p, &t, &t, &t).unwrap();
        assert!((a / b - 1.0).abs() < 1e-4);
    }

    #[test]
    fn identical_profiles_give_equal_overlaps() {
        let (pump, _) = modes();
        let (gp, gpr, _, _) = spm_xpm_coefficients(&pump, &pump, &pump, &pump, CHI3_FUSED_SILICA).unwrap();
        assert_eq!(gp, gpr);
        let g = GaussianBeam::new(0.7e-6).unwrap();
        let quad = RadialQuadrature::default();
        let q = four_field_overlap(&g, &g, &g, &g, &quad);
        assert!((q * PI * 0.49e-12 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn nonlinear_phase_negligible_at_design() {
        let (pump, triplet) = modes();
        let set = NonlinearSet::degenerate(&pump, &triplet, CHI3_FUSED_SILICA).unwrap();
        let phi = crate::phasematch::nonlinear_phase(&set, 20.0);
        // XPM dominates: |Φ_NL|·L ≈ 2.4 rad at 10 cm, below π but not negligible.
        assert!((phi * 0.1).abs() < PI, "{phi}");
        assert_eq!(crate::phasematch::nonlinear_phase(&set, 0.0), 0.0);
        let expected = (set.gamma_p - 6.0 * set.gamma_pr) * 20.0;
        assert!((phi - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn self_coupling_is_unity() {
        let (pump, _) = modes();
        let f = pump.vector_field();
        assert!((field_coupling(&f, &f) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn coupling_maximum_interior_and_stable() {
        let (pump, _) = modes();
        let bracket = (0.3e-6, 2.0e-6);
        let (w, frac) = maximize_coupling(&pump, bracket).unwrap();
        assert!(frac >= gaussian_coupling(&pump, bracket.0).unwrap());
        assert!(frac >= gaussian_coupling(&pump, bracket.1).unwrap());
        let (w2, _) = maximize_coupling_with_tolerance(&pump, bracket, 0.5 * COUPLING_TOLERANCE).unwrap();
        assert!((w - w2).abs() < 1e-9);
        // scipy bounded minimization of the same projection
        assert!((w * 1e6 - 0.794114986).abs() < 2e-4);
        assert!((frac - 0.288563682).abs() < 1e-8);
    }

    #[test]
    fn endpoint_maximum_flagged() {
        let (pump, _) = modes();
        assert!(matches!(
            maximize_coupling(&pump, (1.5e-6, 3.0e-6)),
            Err(Error::NonInteriorMaximum { .. })
        ));
    }

    #[test]
    fn gamma_decreases_with_wavelength() {
        let template = FiberSpec::air_clad_silica(0.4e-6, 0.1).unwrap();
        let lambdas: Vec<f64> = (0..7).map(|i| (1.2 + 0.1 * i as f64) * 1e-6).collect();
        let g: Vec<f64> = gamma_scan(&template, &lambdas, crate::phasematch::DEFAULT_RADIUS_BRACKET, CHI3_FUSED_SILICA)
            .into_iter()
            .map(|p| p.unwrap().nonlinear.gamma)
            .collect();
        assert!(g.windows(2).all(|w| w[1] < w[0]), "{g:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn coupling_is_a_fraction(waist in 0.1e-6f64..5e-6) {
            let (pump, _) = modes();
            let c = gaussian_coupling(&pump, waist).unwrap();
            prop_assert!((0.0..1.0).contains(&c));
        }
    }
}
