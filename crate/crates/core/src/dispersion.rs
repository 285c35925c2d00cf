//! Material refractive-index models and frequency bookkeeping.
//!
//! Angular frequency in rad/s is the canonical spectral unit; wavelengths
//! only appear at API boundaries.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{Error, Result};

/// An angular frequency in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Spectral(f64);

impl Spectral {
    /// Panics unless `omega` is finite and positive.
    pub fn from_angular(omega: f64) -> Self {
        assert!(
            omega.is_finite() && omega > 0.0,
            "angular frequency must be finite and positive, got {omega}"
        );
        Spectral(omega)
    }

    /// Vacuum wavelength in metres.
    pub fn from_wavelength(lambda: f64) -> Self {
        assert!(
            lambda.is_finite() && lambda > 0.0,
            "wavelength must be finite and positive, got {lambda}"
        );
        Spectral(2.0 * PI * SPEED_OF_LIGHT / lambda)
    }

    /// Vacuum wavelength in micrometres.
    pub fn from_wavelength_um(lambda_um: f64) -> Self {
        Self::from_wavelength(lambda_um * 1e-6)
    }

    /// Ordinary frequency in Hz.
    pub fn from_hz(nu: f64) -> Self {
        Self::from_angular(2.0 * PI * nu)
    }

    pub fn angular(self) -> f64 {
        self.0
    }

    pub fn wavelength(self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.0
    }

    pub fn wavelength_um(self) -> f64 {
        self.wavelength() * 1e6
    }

    pub fn hz(self) -> f64 {
        self.0 / (2.0 * PI)
    }

    /// Vacuum wavenumber ω/c in rad/m.
    pub fn vacuum_wavenumber(self) -> f64 {
        self.0 / SPEED_OF_LIGHT
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self::from_angular(self.0 * factor)
    }
}

impl fmt::Display for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6e} rad/s ({:.4} um)", self.0, self.wavelength_um())
    }
}

/// One Sellmeier resonance: `B λ² / (λ² − λ₀²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SellmeierTerm {
    pub strength: f64,
    /// Resonance wavelength in metres.
    pub resonance: f64,
}

/// Malitson's fit for fused silica at 20 °C.
const FUSED_SILICA_TERMS: [SellmeierTerm; 3] = [
    SellmeierTerm {
        strength: 0.696_166_3,
        resonance: 0.068_404_3e-6,
    },
    SellmeierTerm {
        strength: 0.407_942_6,
        resonance: 0.116_241_4e-6,
    },
    SellmeierTerm {
        strength: 0.897_479_4,
        resonance: 9.896_161e-6,
    },
];

const SILICA_MIN_WAVELENGTH: f64 = 0.21e-6;
const SILICA_MAX_WAVELENGTH: f64 = 6.7e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Material {
    FusedSilica,
    /// Dispersionless, n = 1 exactly.
    Air,
}

impl Material {
    pub fn sellmeier_terms(self) -> &'static [SellmeierTerm] {
        match self {
            Material::FusedSilica => &FUSED_SILICA_TERMS,
            Material::Air => &[],
        }
    }

    /// Human-readable name of the index model, recorded in run manifests.
    pub fn model_name(self) -> &'static str {
        match self {
            Material::FusedSilica => "fused silica, Malitson three-term Sellmeier (20 C)",
            Material::Air => "air, n = 1",
        }
    }

    /// Vacuum-wavelength window (m) over which the model is valid.
    pub fn validity_window(self) -> Option<(f64, f64)> {
        match self {
            Material::FusedSilica => Some((SILICA_MIN_WAVELENGTH, SILICA_MAX_WAVELENGTH)),
            Material::Air => None,
        }
    }

    fn check_range(self, freq: Spectral) -> Result<()> {
        if let Some((lo, hi)) = self.validity_window() {
            let lambda = freq.wavelength();
            if !(lo..=hi).contains(&lambda) {
                return Err(Error::OutOfRange {
                    model: self.model_name(),
                    wavelength_um: lambda * 1e6,
                    min_um: lo * 1e6,
                    max_um: hi * 1e6,
                });
            }
        }
        Ok(())
    }

    /// `n² − 1` as a sum of Sellmeier terms at angular frequency `omega`.
    fn susceptibility(self, omega: f64) -> f64 {
        self.sellmeier_terms()
            .iter()
            .map(|t| t.strength / (1.0 - resonance_ratio(t, omega)))
            .sum()
    }
}

/// (λ₀/λ)² written in terms of ω.
fn resonance_ratio(term: &SellmeierTerm, omega: f64) -> f64 {
    let k = term.resonance * omega / (2.0 * PI * SPEED_OF_LIGHT);
    k * k
}

/// Refractive index of `material` at `freq`.
pub fn refractive_index(material: Material, freq: Spectral) -> Result<f64> {
    material.check_range(freq)?;
    Ok((1.0 + material.susceptibility(freq.angular())).sqrt())
}

/// Relative step used by [`index_derivative`].
pub const INDEX_DERIVATIVE_STEP: f64 = 1e-6;

/// dn/dω in s/rad by central difference with relative step `1e-6`.
pub fn index_derivative(material: Material, freq: Spectral) -> Result<f64> {
    index_derivative_with_step(material, freq, INDEX_DERIVATIVE_STEP)
}

/// Central difference `[n(ω+h) − n(ω−h)] / 2h` with `h = rel_step·ω`.
///
/// The numerator is formed from the difference of the individual Sellmeier
/// terms, so it carries no cancellation error and the result converges
/// cleanly as the step shrinks.
pub fn index_derivative_with_step(material: Material, freq: Spectral, rel_step: f64) -> Result<f64> {
    let omega = freq.angular();
    let h = rel_step * omega;
    let (lo, hi) = (omega - h, omega + h);
    material.check_range(Spectral::from_angular(lo))?;
    material.check_range(Spectral::from_angular(hi))?;
    if material.sellmeier_terms().is_empty() {
        return Ok(0.0);
    }
    // term(ω+) − term(ω−) = B (x₊ − x₋) / ((1 − x₊)(1 − x₋)),  x = (λ₀ω/2πc)²
    let delta_sq: f64 = material
        .sellmeier_terms()
        .iter()
        .map(|t| {
            let (xp, xm) = (resonance_ratio(t, hi), resonance_ratio(t, lo));
            let scale = t.resonance / (2.0 * PI * SPEED_OF_LIGHT);
            let dx = scale * scale * (hi - lo) * (hi + lo);
            t.strength * dx / ((1.0 - xp) * (1.0 - xm))
        })
        .sum();
    let n_hi = (1.0 + material.susceptibility(hi)).sqrt();
    let n_lo = (1.0 + material.susceptibility(lo)).sqrt();
    Ok(delta_sq / (n_hi + n_lo) / (hi - lo))
}

/// Closed-form dn/dω of the Sellmeier model.
pub fn index_derivative_analytic(material: Material, freq: Spectral) -> Result<f64> {
    let n = refractive_index(material, freq)?;
    let omega = freq.angular();
    let dchi: f64 = material
        .sellmeier_terms()
        .iter()
        .map(|t| {
            let x = resonance_ratio(t, omega);
            t.strength * (2.0 * x / omega) / ((1.0 - x) * (1.0 - x))
        })
        .sum();
    Ok(dchi / (2.0 * n))
}

/// Bulk group index `n + ω dn/dω`.
pub fn group_index(material: Material, freq: Spectral) -> Result<f64> {
    Ok(refractive_index(material, freq)? + freq.angular() * index_derivative(material, freq)?)
}
