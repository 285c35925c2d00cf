//! Exact hybrid-mode solver for a two-layer circular step-index waveguide
//! (a fused-silica rod in air).
//!
//! Only the azimuthal order l = 1 HE family is handled. Effective indices
//! come from the full vector eigenvalue equation; the HE branch is written
//! in the pole-free form
//!
//! ```text
//! G(U) = J₀(U)/U + J₁(U)·[ (n₁²+n₂²)/(2n₁²)·κ − 1/U² + R ]
//! κ    = K₁'(W)/(W K₁(W)),
//! R    = sqrt( ((n₁²−n₂²)/(2n₁²))² κ² + (n_eff/n₁)² (1/U² + 1/W²)² )
//! ```
//!
//! whose zeros, ordered by increasing U, are HE₁₁, HE₁₂, ...

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use puruspe::{Jn, Kn};
use serde::{Deserialize, Serialize};

use crate::constants::J1_FIRST_ZERO;
use crate::dispersion::{refractive_index, Material, Spectral};
use crate::error::{Error, Result};
use crate::quadrature::RadialQuadrature;

/// Number of points in the characteristic-equation scan.
pub const SCAN_POINTS: usize = 2000;
/// Number of samples in the stored radial profile.
pub const PROFILE_POINTS: usize = 2000;
/// Stored radial profile extends to this multiple of the core radius.
pub const PROFILE_EXTENT: f64 = 8.0;
/// Relative frequency step for the group-slowness difference quotient.
pub const GROUP_SLOWNESS_STEP: f64 = 1e-5;

/// Geometry and materials of the air-clad taper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    /// Core radius in metres.
    pub core_radius: f64,
    pub core: Material,
    pub cladding: Material,
    /// Interaction length in metres.
    pub length: f64,
}

impl FiberSpec {
    pub fn new(core_radius: f64, core: Material, cladding: Material, length: f64) -> Result<Self> {
        if !(core_radius > 0.0 && core_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "core radius must be positive, got {core_radius}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!("fiber length must be positive, got {length}")));
        }
        Ok(FiberSpec {
            core_radius,
            core,
            cladding,
            length,
        })
    }

    /// Fused-silica core in air.
    pub fn air_clad_silica(core_radius: f64, length: f64) -> Result<Self> {
        Self::new(core_radius, Material::FusedSilica, Material::Air, length)
    }

    pub fn with_radius(&self, core_radius: f64) -> Result<Self> {
        Self::new(core_radius, self.core, self.cladding, self.length)
    }

    pub fn with_length(&self, length: f64) -> Result<Self> {
        Self::new(self.core_radius, self.core, self.cladding, length)
    }

    /// Core and cladding indices at `freq`; errors if the core does not
    /// exceed the cladding.
    pub fn indices(&self, freq: Spectral) -> Result<(f64, f64)> {
        let n1 = refractive_index(self.core, freq)?;
        let n2 = refractive_index(self.cladding, freq)?;
        if n1 <= n2 {
            return Err(Error::InvalidParameter(format!(
                "core index {n1} does not exceed cladding index {n2} at {:.4} um",
                freq.wavelength_um()
            )));
        }
        Ok((n1, n2))
    }

    /// Normalized frequency (2πa/λ)·sqrt(n₁² − n₂²).
    pub fn v_number(&self, freq: Spectral) -> Result<f64> {
        let (n1, n2) = self.indices(freq)?;
        Ok(freq.vacuum_wavenumber() * self.core_radius * (n1 * n1 - n2 * n2).sqrt())
    }
}

/// HE₁ₘ mode label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeLabel {
    radial_order: u32,
}

impl ModeLabel {
    pub const HE11: ModeLabel = ModeLabel { radial_order: 1 };
    pub const HE12: ModeLabel = ModeLabel { radial_order: 2 };

    pub fn he(radial_order: u32) -> Result<Self> {
        if radial_order == 0 {
            return Err(Error::InvalidParameter("radial order must be at least 1".into()));
        }
        Ok(ModeLabel { radial_order })
    }

    pub fn radial_order(self) -> u32 {
        self.radial_order
    }

    /// Cutoff V-number: zero for HE₁₁, the (m−1)-th zero of J₁ otherwise.
    pub fn cutoff_v(self) -> f64 {
        match self.radial_order {
            1 => 0.0,
            m => bessel_j1_zero(m - 1),
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HE1{}", self.radial_order)
    }
}

impl std::str::FromStr for ModeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rest = s
            .trim()
            .to_ascii_uppercase()
            .strip_prefix("HE1")
            .map(str::to_owned)
            .ok_or_else(|| Error::InvalidParameter(format!("unsupported mode label '{s}' (expected HE1m)")))?;
        let m = rest
            .parse::<u32>()
            .map_err(|_| Error::InvalidParameter(format!("unsupported mode label '{s}' (expected HE1m)")))?;
        ModeLabel::he(m)
    }
}

/// k-th positive zero of J₁ by Newton iteration from McMahon's expansion.
pub fn bessel_j1_zero(k: u32) -> f64 {
    if k == 1 {
        return J1_FIRST_ZERO;
    }
    let b = (k as f64 + 0.25) * PI;
    let mut x = b - 3.0 / (8.0 * b);
    for _ in 0..50 {
        let j1 = Jn(1, x);
        let dj1 = Jn(0, x) - j1 / x;
        let dx = j1 / dj1;
        x -= dx;
        if dx.abs() < 1e-15 * x {
            break;
        }
    }
    x
}

/// `eˣ Kₙ(x)`, finite for large arguments.
pub(crate) fn k_scaled(n: u32, x: f64) -> f64 {
    if x < 600.0 {
        return Kn(n, x) * x.exp();
    }
    // Hankel expansion, four terms.
    let mu = 4.0 * (n * n) as f64;
    let z = 8.0 * x;
    let t1 = (mu - 1.0) / z;
    let t2 = t1 * (mu - 9.0) / (2.0 * z);
    let t3 = t2 * (mu - 25.0) / (3.0 * z);
    (PI / (2.0 * x)).sqrt() * (1.0 + t1 + t2 + t3)
}

/// Ratio Kₙ(x)/Kₙ(x₀) for x ≥ x₀ without under/overflow.
fn k_ratio(n: u32, x: f64, x0: f64) -> f64 {
    let decay = (x0 - x).exp();
    if decay == 0.0 {
        0.0
    } else {
        k_scaled(n, x) / k_scaled(n, x0) * decay
    }
}

/// The HE-branch characteristic equation at a fixed (fiber, frequency).
#[derive(Debug, Clone, Copy)]
pub struct CharacteristicEquation {
    n1_sq: f64,
    n2_sq: f64,
    v: f64,
}

impl CharacteristicEquation {
    pub fn new(n_core: f64, n_cladding: f64, v: f64) -> Self {
        CharacteristicEquation {
            n1_sq: n_core * n_core,
            n2_sq: n_cladding * n_cladding,
            v,
        }
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    /// Cladding parameter W for core parameter U.
    pub fn w(&self, u: f64) -> f64 {
        ((self.v - u) * (self.v + u)).sqrt()
    }

    /// n_eff² for core parameter U.
    pub fn n_eff_sq(&self, u: f64) -> f64 {
        let a_k0_sq = self.v * self.v / (self.n1_sq - self.n2_sq);
        self.n1_sq - u * u / a_k0_sq
    }

    /// Returns `(G(U), scale)` where `scale` is the sum of magnitudes of the
    /// terms in G; `|G|/scale` is the normalized residual.
    pub fn eval(&self, u: f64) -> (f64, f64) {
        let w = self.w(u);
        let j0 = Jn(0, u);
        let j1 = Jn(1, u);
        let kappa = -k_scaled(0, w) / k_scaled(1, w) / w - 1.0 / (w * w);
        let contrast = (self.n1_sq - self.n2_sq) / (2.0 * self.n1_sq);
        let mean = (self.n1_sq + self.n2_sq) / (2.0 * self.n1_sq);
        let inv = 1.0 / (u * u) + 1.0 / (w * w);
        let r = (contrast * contrast * kappa * kappa + self.n_eff_sq(u) / self.n1_sq * inv * inv).sqrt();
        let rest = mean * kappa - 1.0 / (u * u) + r;
        let g = j0 / u + j1 * rest;
        let scale = (j0 / u).abs() + j1.abs() * ((mean * kappa).abs() + 1.0 / (u * u) + r);
        (g, scale)
    }

    pub fn residual(&self, u: f64) -> f64 {
        let (g, scale) = self.eval(u);
        g.abs() / scale
    }

    /// Sign-change brackets of G over a uniform scan of U ∈ (0, V), in
    /// order of increasing U (decreasing n_eff).
    pub fn brackets(&self, points: usize) -> Vec<(f64, f64)> {
        let lo = 1e-9 * self.v;
        let hi = self.v * (1.0 - 1e-12);
        let step = (hi - lo) / (points - 1) as f64;
        let samples: Vec<(f64, f64)> = (0..points)
            .map(|k| {
                let u = if k == points - 1 { hi } else { lo + step * k as f64 };
                (u, self.eval(u).0)
            })
            .collect();
        samples
            .windows(2)
            .filter(|p| p[0].1 == 0.0 || p[0].1.signum() != p[1].1.signum())
            .map(|p| (p[0].0, p[1].0))
            .collect()
    }

    /// Bisection to the resolution limit of f64.
    pub fn refine(&self, (mut lo, mut hi): (f64, f64)) -> f64 {
        let mut g_lo = self.eval(lo).0;
        if g_lo == 0.0 {
            return lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let g_mid = self.eval(mid).0;
            if g_mid == 0.0 {
                return mid;
            }
            if g_mid.signum() == g_lo.signum() {
                lo = mid;
                g_lo = g_mid;
            } else {
                hi = mid;
            }
        }
        if self.residual(lo) <= self.residual(hi) {
            lo
        } else {
            hi
        }
    }
}

/// One guided HE₁ₘ mode at one frequency.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub label: ModeLabel,
    pub freq: Spectral,
    pub fiber: FiberSpec,
    pub n_eff: f64,
    /// Propagation constant β = n_eff·ω/c, rad/m.
    pub beta: f64,
    pub n_core: f64,
    pub n_cladding: f64,
    pub v: f64,
    pub u: f64,
    pub w: f64,
    /// Normalized residual of the characteristic equation at the root.
    pub residual: f64,
    /// Sampled scalar profile on [0, 8a].
    pub profile: RadialSampling,
    scalar: ScalarModeProfile,
}

/// Solves for the requested HE₁ₘ mode.
pub fn solve_mode(fiber: &FiberSpec, freq: Spectral, label: ModeLabel) -> Result<ModeSolution> {
    let (n1, n2) = fiber.indices(freq)?;
    let v = freq.vacuum_wavenumber() * fiber.core_radius * (n1 * n1 - n2 * n2).sqrt();
    let cutoff = label.cutoff_v();
    if v <= cutoff {
        return Err(Error::NotGuided {
            label: label.to_string(),
            wavelength_um: freq.wavelength_um(),
            radius_um: fiber.core_radius * 1e6,
            v,
            cutoff,
        });
    }
    let eq = CharacteristicEquation::new(n1, n2, v);
    let brackets = eq.brackets(SCAN_POINTS);
    let index = label.radial_order() as usize - 1;
    let bracket = *brackets.get(index).ok_or_else(|| Error::NoBracket {
        label: label.to_string(),
        wavelength_um: freq.wavelength_um(),
        points: SCAN_POINTS,
        roots_found: brackets.len(),
    })?;
    let u = eq.refine(bracket);
    let w = eq.w(u);
    let n_eff = eq.n_eff_sq(u).sqrt();
    let scalar = ScalarModeProfile::new(fiber.core_radius, u, w);
    Ok(ModeSolution {
        label,
        freq,
        fiber: *fiber,
        n_eff,
        beta: n_eff * freq.vacuum_wavenumber(),
        n_core: n1,
        n_cladding: n2,
        v,
        u,
        w,
        residual: eq.residual(u),
        profile: RadialSampling::sample(&scalar, PROFILE_POINTS),
        scalar,
    })
}

/// Propagation constant β(ω) of a mode, rad/m.
pub fn propagation_constant(fiber: &FiberSpec, label: ModeLabel, freq: Spectral) -> Result<f64> {
    Ok(solve_mode(fiber, freq, label)?.beta)
}

/// Group slowness k′(ω) = dβ/dω in s/m.
pub fn group_slowness(fiber: &FiberSpec, label: ModeLabel, freq: Spectral) -> Result<f64> {
    group_slowness_with_step(fiber, label, freq, GROUP_SLOWNESS_STEP)
}

/// Central difference of β with relative step `h`, Richardson-extrapolated
/// once against step `h/2`.
pub fn group_slowness_with_step(fiber: &FiberSpec, label: ModeLabel, freq: Spectral, h: f64) -> Result<f64> {
    let omega = freq.angular();
    let beta = |factor: f64| propagation_constant(fiber, label, Spectral::from_angular(omega * factor));
    let coarse = (beta(1.0 + h)? - beta(1.0 - h)?) / (2.0 * h * omega);
    let fine = (beta(1.0 + 0.5 * h)? - beta(1.0 - 0.5 * h)?) / (h * omega);
    Ok((4.0 * fine - coarse) / 3.0)
}

impl ModeSolution {
    /// Scalar transverse profile used for the nonlinear overlaps.
    pub fn scalar_profile(&self) -> ScalarModeProfile {
        self.scalar
    }

    /// Exact transverse electric field of the x-polarized mode.
    pub fn vector_field(&self) -> HybridModeField {
        HybridModeField::new(self)
    }

    /// Normalized scalar amplitude f(x, y).
    pub fn field(&self, x: f64, y: f64) -> f64 {
        self.scalar.amplitude(x.hypot(y))
    }

    /// Writes the sampled radial profile as `radius_m,amplitude` CSV.
    pub fn write_profile_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "radius_m,amplitude")?;
        for (r, f) in self.profile.radius.iter().zip(&self.profile.amplitude) {
            writeln!(out, "{r:.9e},{f:.9e}")?;
        }
        Ok(())
    }
}

/// Normalized scalar amplitude f(x, y) of a solved mode.
pub fn mode_field(mode: &ModeSolution, x: f64, y: f64) -> f64 {
    mode.field(x, y)
}

/// Scalar reduction of an HE₁ₘ mode: `J₀(Ur/a)` in the core and the
/// value-matched `K₀(Wr/a)` outside, with U and W taken from the exact
/// vector eigenvalue. Normalized to ∬|f|² dA = 1 in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarModeProfile {
    pub core_radius: f64,
    pub u: f64,
    pub w: f64,
    core_amplitude: f64,
    boundary_value: f64,
}

impl ScalarModeProfile {
    fn new(core_radius: f64, u: f64, w: f64) -> Self {
        let j0 = Jn(0, u);
        let j1 = Jn(1, u);
        let (k0, k1) = (k_scaled(0, w), k_scaled(1, w));
        let ratio = j0 / k0;
        let norm = PI * core_radius * core_radius * (j0 * j0 + j1 * j1 + ratio * ratio * (k1 * k1 - k0 * k0));
        let core_amplitude = 1.0 / norm.sqrt();
        ScalarModeProfile {
            core_radius,
            u,
            w,
            core_amplitude,
            boundary_value: core_amplitude * j0,
        }
    }

    pub fn amplitude(&self, r: f64) -> f64 {
        let rho = r / self.core_radius;
        if rho <= 1.0 {
            self.core_amplitude * Jn(0, self.u * rho)
        } else {
            self.boundary_value * k_ratio(0, self.w * rho, self.w)
        }
    }

    /// Radius beyond which |f|² has decayed by e⁻³⁶ relative to the
    /// boundary.
    pub fn extent(&self) -> f64 {
        self.core_radius * (1.0 + 18.0 / self.w)
    }

    /// ∬|f|² dA beyond radius `r` (r ≥ a), in closed form.
    pub fn tail_power(&self, r: f64) -> f64 {
        let x = self.w * r / self.core_radius;
        if x == 0.0 {
            return f64::INFINITY;
        }
        let (k0x, k1x) = (k_scaled(0, x), k_scaled(1, x));
        let k0w = k_scaled(0, self.w);
        let decay = (2.0 * (self.w - x)).exp();
        let scale = self.boundary_value / k0w;
        PI * r * r * scale * scale * (k1x * k1x - k0x * k0x) * decay
    }
}

/// Radially sampled profile.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSampling {
    pub radius: Vec<f64>,
    pub amplitude: Vec<f64>,
}

impl RadialSampling {
    pub fn sample(profile: &ScalarModeProfile, points: usize) -> Self {
        let r_max = PROFILE_EXTENT * profile.core_radius;
        let radius: Vec<f64> = (0..points).map(|i| r_max * i as f64 / (points - 1) as f64).collect();
        let amplitude = radius.iter().map(|&r| profile.amplitude(r)).collect();
        RadialSampling { radius, amplitude }
    }

    /// Trapezoidal ∬|f|² over the samples.
    pub fn sampled_power(&self) -> f64 {
        self.radius
            .windows(2)
            .zip(self.amplitude.windows(2))
            .map(|(r, f)| 0.5 * (r[1] - r[0]) * 2.0 * PI * (r[0] * f[0] * f[0] + r[1] * f[1] * f[1]))
            .sum()
    }
}

/// Transverse electric field of the x-polarized HE₁ₘ mode,
///
/// ```text
/// e_x = e₀(r) + e₂(r) cos 2φ,   e_y = e₂(r) sin 2φ,
/// ```
///
/// normalized to ∬|e_t|² dA = 1 with e₀(0) > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridModeField {
    pub core_radius: f64,
    pub u: f64,
    pub w: f64,
    a1: f64,
    a2: f64,
    scale: f64,
}

impl HybridModeField {
    fn new(mode: &ModeSolution) -> Self {
        let (u, w, v) = (mode.u, mode.w, mode.v);
        let j1 = Jn(1, u);
        let (k0, k1, k2) = (k_scaled(0, w), k_scaled(1, w), k_scaled(2, w));
        let b1 = (Jn(0, u) - Jn(2, u)) / (2.0 * u * j1);
        let b2 = -(k0 + k2) / (2.0 * w * k1);
        let f2 = (v / (u * w)).powi(2) / (b1 + b2);
        let mut field = HybridModeField {
            core_radius: mode.fiber.core_radius,
            u,
            w,
            a1: 0.5 * (f2 - 1.0),
            a2: 0.5 * (f2 + 1.0),
            scale: 1.0,
        };
        let quad = RadialQuadrature::default();
        let power = quad.integrate(field.core_radius, field.extent(), |r| {
            let (e0, e2) = field.raw(r);
            e0 * e0 + e2 * e2
        });
        let sign = field.raw(0.0).0.signum();
        field.scale = sign / power.sqrt();
        field
    }

    fn raw(&self, r: f64) -> (f64, f64) {
        let rho = r / self.core_radius;
        let j1 = Jn(1, self.u);
        if rho <= 1.0 {
            (
                -self.a1 * Jn(0, self.u * rho) / j1,
                -self.a2 * Jn(2, self.u * rho) / j1,
            )
        } else {
            let x = self.w * rho;
            let c = self.u / self.w;
            (
                -c * self.a1 * k_ratio(0, x, self.w) * k_scaled(0, self.w) / k_scaled(1, self.w),
                c * self.a2 * k_ratio(2, x, self.w) * k_scaled(2, self.w) / k_scaled(1, self.w),
            )
        }
    }

    /// `(e₀(r), e₂(r))`.
    pub fn components(&self, r: f64) -> (f64, f64) {
        let (e0, e2) = self.raw(r);
        (self.scale * e0, self.scale * e2)
    }

    pub fn extent(&self) -> f64 {
        self.core_radius * (1.0 + 18.0 / self.w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::group_index;
    use crate::quadrature::GaussRule;

    const LAMBDA_T: f64 = 1.596e-6;

    fn taper(radius_um: f64) -> FiberSpec {
        FiberSpec::air_clad_silica(radius_um * 1e-6, 0.1).unwrap()
    }

    /// Product form of the full l = 1 vector dispersion relation, covering
    /// both HE and EH branches; independent of the factorized form above.
    fn full_vector_relation(n1: f64, n2: f64, v: f64, u: f64) -> f64 {
        let w = ((v - u) * (v + u)).sqrt();
        let jp = (Jn(0, u) - Jn(1, u) / u) / (u * Jn(1, u));
        let kp = (-Kn(0, w) - Kn(1, w) / w) / (w * Kn(1, w));
        let a_k0_sq = v * v / (n1 * n1 - n2 * n2);
        let neff_sq = n1 * n1 - u * u / a_k0_sq;
        let lhs = (jp + kp) * (n1 * n1 * jp + n2 * n2 * kp);
        let rhs = neff_sq * (1.0 / (u * u) + 1.0 / (w * w)).powi(2);
        (lhs - rhs) / rhs
    }

    #[test]
    fn he12_guided_at_pump_wavelength() {
        let fiber = taper(0.395);
        let v = fiber.v_number(Spectral::from_wavelength(LAMBDA_T / 3.0)).unwrap();
        assert!((v - 4.97).abs() < 0.01, "V = {v}");
        assert!(v > J1_FIRST_ZERO);
        let mode = solve_mode(&fiber, Spectral::from_wavelength(LAMBDA_T / 3.0), ModeLabel::HE12).unwrap();
        assert!(mode.n_eff > mode.n_cladding && mode.n_eff < mode.n_core);
        // scipy brentq on the same branch equation
        assert!((mode.n_eff - 1.0804064820186332).abs() < 1e-9, "{}", mode.n_eff);
        assert!(full_vector_relation(mode.n_core, mode.n_cladding, mode.v, mode.u).abs() < 1e-8);
    }

    #[test]
    fn he11_weakly_guided_at_triplet_wavelength() {
        let fiber = taper(0.395);
        let freq = Spectral::from_wavelength(LAMBDA_T);
        let mode = solve_mode(&fiber, freq, ModeLabel::HE11).unwrap();
        assert!((mode.v - 1.62).abs() < 0.01, "V = {}", mode.v);
        assert!(mode.n_eff > 1.0 && mode.n_eff < 1.1);

        // Brute-force oracle: fine uniform scan of the full product-form
        // relation over n_eff, keeping the first sign change from the top.
        let eq_v = mode.v;
        let (n1, n2) = (mode.n_core, mode.n_cladding);
        let a_k0 = eq_v / (n1 * n1 - n2 * n2).sqrt();
        let u_of = |n: f64| a_k0 * (n1 * n1 - n * n).sqrt();
        let steps = 200_000;
        let mut prev = None;
        let mut found = None;
        for k in 1..steps {
            let n = n1 - (n1 - n2) * k as f64 / steps as f64;
            let f = full_vector_relation(n1, n2, eq_v, u_of(n));
            if let Some((pn, pf)) = prev {
                if f64::signum(f) != f64::signum(pf) && (f - pf).abs() < 1.0 {
                    found = Some(0.5 * (n + pn));
                    break;
                }
            }
            prev = Some((n, f));
        }
        let oracle = found.expect("oracle found no root");
        assert!((mode.n_eff - oracle).abs() < 1e-5, "{} vs {}", mode.n_eff, oracle);
        assert!((mode.n_eff - 1.0805140363334318).abs() < 1e-9);
    }

    #[test]
    fn large_core_approaches_bulk_index() {
        let fiber = taper(50.0);
        let mode = solve_mode(&fiber, Spectral::from_wavelength_um(1.0), ModeLabel::HE11).unwrap();
        assert!((mode.n_core - mode.n_eff) < 1e-3);
        assert!(mode.residual < 1e-10);
    }

    #[test]
    fn below_cutoff_reports_v_number() {
        let fiber = taper(0.2);
        let err = solve_mode(&fiber, Spectral::from_wavelength_um(0.532), ModeLabel::HE12).unwrap_err();
        match err {
            Error::NotGuided { v, cutoff, .. } => {
                assert!(v < cutoff && (cutoff - J1_FIRST_ZERO).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bessel_zeros() {
        assert!((bessel_j1_zero(2) - 7.015_586_669_815_619).abs() < 1e-12);
        assert!((bessel_j1_zero(3) - 10.173_468_135_062_722).abs() < 1e-12);
    }

    #[test]
    fn root_ordering_and_bounds() {
        for &(r, l) in &[(0.395, 0.532), (0.6, 0.8), (1.0, 0.532), (0.5, 0.45)] {
            let fiber = taper(r);
            let f = Spectral::from_wavelength_um(l);
            let m1 = solve_mode(&fiber, f, ModeLabel::HE11).unwrap();
            let m2 = solve_mode(&fiber, f, ModeLabel::HE12).unwrap();
            assert!(m1.n_eff > m2.n_eff);
            for m in [&m1, &m2] {
                assert!(m.n_cladding < m.n_eff && m.n_eff < m.n_core);
                assert!(m.residual < 1e-10, "residual {}", m.residual);
                let beta = m.n_eff * f.angular() / crate::constants::SPEED_OF_LIGHT;
                assert!(((m.beta - beta) / beta).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn n_eff_continuous_in_frequency() {
        let fiber = taper(0.395);
        let freqs: Vec<f64> = (0..50)
            .map(|i| Spectral::from_wavelength_um(0.45 + 0.2 * i as f64 / 49.0).angular())
            .collect();
        let n: Vec<f64> = freqs
            .iter()
            .map(|&w| solve_mode(&fiber, Spectral::from_angular(w), ModeLabel::HE12).unwrap().n_eff)
            .collect();
        let slopes: Vec<f64> = (0..49).map(|i| (n[i + 1] - n[i]) / (freqs[i + 1] - freqs[i])).collect();
        for i in 1..48 {
            let local = 0.5 * (slopes[i - 1].abs() + slopes[i + 1].abs());
            assert!(slopes[i].abs() <= 10.0 * local, "jump at {i}");
        }
    }

    #[test]
    fn profile_shapes() {
        let fiber = taper(0.395);
        let he11 = solve_mode(&fiber, Spectral::from_wavelength(LAMBDA_T), ModeLabel::HE11).unwrap();
        let he12 = solve_mode(&fiber, Spectral::from_wavelength(LAMBDA_T / 3.0), ModeLabel::HE12).unwrap();
        let sign_changes = |m: &ModeSolution| {
            m.profile
                .amplitude
                .windows(2)
                .filter(|p| p[0].signum() != p[1].signum())
                .count()
        };
        assert_eq!(sign_changes(&he11), 0);
        assert!(he11.profile.amplitude.windows(2).all(|p| p[1] <= p[0]));
        assert_eq!(sign_changes(&he12), 1);
        assert!(he12.profile.amplitude[0] > 0.0);
    }

    #[test]
    fn profile_normalized_by_2d_quadrature() {
        let fiber = taper(0.395);
        for (label, lambda) in [(ModeLabel::HE11, LAMBDA_T), (ModeLabel::HE12, LAMBDA_T / 3.0)] {
            let mode = solve_mode(&fiber, Spectral::from_wavelength(lambda), label).unwrap();
            let profile = mode.scalar_profile();
            // Cartesian quadrature over one quadrant on [0, R]², times four.
            let r_max = profile.extent();
            let rule = GaussRule::new(16);
            let a = fiber.core_radius;
            let edges = [0.0, a, 2.0 * a, 4.0 * a, 8.0 * a, 16.0 * a, r_max.max(20.0 * a)];
            let mut total = 0.0;
            for xs in edges.windows(2) {
                for ys in edges.windows(2) {
                    total += rule.composite(xs[0], xs[1], 24, |x| {
                        rule.composite(ys[0], ys[1], 24, |y| mode.field(x, y).powi(2))
                    });
                }
            }
            let power = 4.0 * total;
            assert!((power - 1.0).abs() < 1e-4, "{label}: {power}");
        }
    }

    #[test]
    fn scalar_profile_continuous_at_boundary() {
        let fiber = taper(0.395);
        let mode = solve_mode(&fiber, Spectral::from_wavelength(LAMBDA_T), ModeLabel::HE11).unwrap();
        let p = mode.scalar_profile();
        let a = fiber.core_radius;
        let inside = p.amplitude(a * (1.0 - 1e-12));
        let outside = p.amplitude(a * (1.0 + 1e-12));
        assert!(((inside - outside) / inside).abs() < 1e-6);
    }

    #[test]
    fn sampled_norm_insensitive_to_grid_density() {
        let fiber = taper(0.395);
        let mode = solve_mode(&fiber, Spectral::from_wavelength(LAMBDA_T / 3.0), ModeLabel::HE12).unwrap();
        let p = mode.scalar_profile();
        let tail = p.tail_power(PROFILE_EXTENT * fiber.core_radius);
        let coarse = RadialSampling::sample(&p, PROFILE_POINTS).sampled_power() + tail;
        let fine = RadialSampling::sample(&p, 2 * PROFILE_POINTS).sampled_power() + tail;
        assert!((coarse - fine).abs() < 1e-4);
        assert!((fine - 1.0).abs() < 1e-4);
    }

    #[test]
    fn hybrid_field_normalized_and_continuous_tangential() {
        let fiber = taper(0.395);
        let mode = solve_mode(&fiber, Spectral::from_wavelength(LAMBDA_T / 3.0), ModeLabel::HE12).unwrap();
        let field = mode.vector_field();
        let quad = RadialQuadrature::default().refined();
        let power = quad.integrate(fiber.core_radius, field.extent(), |r| {
            let (e0, e2) = field.components(r);
            e0 * e0 + e2 * e2
        });
        assert!((power - 1.0).abs() < 1e-8);
        // E_φ ∝ e₀ − e₂ is tangential and must be continuous at r = a.
        let a = fiber.core_radius;
        let (i0, i2) = field.components(a * (1.0 - 1e-12));
        let (o0, o2) = field.components(a * (1.0 + 1e-12));
        assert!(((i0 - i2) - (o0 - o2)).abs() < 1e-6 * (i0 - i2).abs());
    }

    #[test]
    fn group_slowness_matches_five_point_stencil() {
        let fiber = taper(0.3951847931839625);
        let freq = Spectral::from_wavelength(LAMBDA_T);
        let k1 = group_slowness(&fiber, ModeLabel::HE11, freq).unwrap();
        let w = freq.angular();
        let h = 1e-4 * w;
        let b = |d: f64| propagation_constant(&fiber, ModeLabel::HE11, Spectral::from_angular(w + d)).unwrap();
        let stencil = (-b(2.0 * h) + 8.0 * b(h) - 8.0 * b(-h) + b(-2.0 * h)) / (12.0 * h);
        assert!(((k1 - stencil) / stencil).abs() < 1e-6, "{k1} vs {stencil}");
        let mode = solve_mode(&fiber, freq, ModeLabel::HE11).unwrap();
        assert!(k1 > mode.n_eff / crate::constants::SPEED_OF_LIGHT);
        // scipy five-point value
        assert!(((k1 - 4.6564970163472066e-09) / k1).abs() < 1e-6);
    }

    #[test]
    fn group_slowness_converges_under_halving() {
        let fiber = taper(0.395);
        let freq = Spectral::from_wavelength(LAMBDA_T / 3.0);
        let a = group_slowness_with_step(&fiber, ModeLabel::HE12, freq, 1e-5).unwrap();
        let b = group_slowness_with_step(&fiber, ModeLabel::HE12, freq, 0.5e-5).unwrap();
        assert!(((a - b) / a).abs() < 1e-6);
    }

    #[test]
    fn group_slowness_bulk_limit() {
        let fiber = taper(50.0);
        let freq = Spectral::from_wavelength_um(1.0);
        let k1 = group_slowness(&fiber, ModeLabel::HE11, freq).unwrap();
        let bulk = group_index(Material::FusedSilica, freq).unwrap() / crate::constants::SPEED_OF_LIGHT;
        assert!(((k1 - bulk) / bulk).abs() < 1e-3);
    }

    #[test]
    fn label_parsing() {
        assert_eq!("HE12".parse::<ModeLabel>().unwrap(), ModeLabel::HE12);
        assert_eq!("he11".parse::<ModeLabel>().unwrap(), ModeLabel::HE11);
        assert!("TE01".parse::<ModeLabel>().is_err());
        assert!(ModeLabel::he(0).is_err());
    }

    #[test]
    fn profile_csv_has_header() {
        let fiber = taper(0.395);
        let mode = solve_mode(&fiber, Spectral::from_wavelength(LAMBDA_T), ModeLabel::HE11).unwrap();
        let mut buf = Vec::new();
        mode.write_profile_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("radius_m,amplitude\n"));
        assert_eq!(text.lines().count(), PROFILE_POINTS + 1);
    }
}
