//! Run configuration: defaults, TOML file, command-line overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tospdc::constants::CHI3_FUSED_SILICA;
use tospdc::phasematch::{sigma_from_paper_ghz, DEFAULT_RADIUS_BRACKET, DEFAULT_WAVELENGTH_BRACKET};
use tospdc::triplets::{QuadratureOptions, DEFAULT_CELL_BUDGET};
use tospdc::PeakPowerConvention;

use crate::CliError;

pub const DEFAULT_WAVELENGTH_UM: f64 = 1.596;
pub const DEFAULT_LENGTH_CM: f64 = 10.0;
pub const DEFAULT_AVG_POWER_MW: f64 = 200.0;
pub const DEFAULT_REP_RATE_MHZ: f64 = 100.0;
/// Bandwidth giving a 100 ps intensity FWHM, rad/s.
pub const DEFAULT_SIGMA: f64 = 2.355e10;
pub const DEFAULT_SPECTRUM_POINTS: usize = 401;

/// Bandwidth as written by the user: a number in rad/s, or a string such
/// as "23.5GHz_paper" meaning 23.5×10⁹ rad/s.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SigmaInput {
    RadPerSecond(f64),
    Text(String),
}

impl SigmaInput {
    pub fn parse(&self) -> Result<f64, CliError> {
        let value = match self {
            SigmaInput::RadPerSecond(v) => *v,
            SigmaInput::Text(s) => parse_sigma(s)?,
        };
        if !(value > 0.0 && value.is_finite()) {
            return Err(CliError::Config(format!("sigma must be positive, got {value}")));
        }
        Ok(value)
    }
}

pub fn parse_sigma(text: &str) -> Result<f64, CliError> {
    let t = text.trim();
    if let Some(ghz) = t.strip_suffix("GHz_paper") {
        let v: f64 = ghz
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("cannot parse sigma '{text}'")))?;
        return Ok(sigma_from_paper_ghz(v));
    }
    t.parse()
        .map_err(|_| CliError::Config(format!("cannot parse sigma '{text}'; use rad/s or e.g. 23.5GHz_paper")))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDesign {
    degenerate_wavelength_um: Option<f64>,
    fiber_radius_um: Option<f64>,
    length_cm: Option<f64>,
    chi3_m2_per_v2: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilePump {
    avg_power_mw: Option<f64>,
    rep_rate_mhz: Option<f64>,
    sigma: Option<SigmaInput>,
    peak_power_convention: Option<PeakPowerConvention>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileNumerics {
    sum_nodes: Option<usize>,
    angle_points: Option<usize>,
    radial_order: Option<usize>,
    panels_per_zero: Option<usize>,
    sinc_zeros: Option<usize>,
    window_sigmas: Option<f64>,
    rate_tolerance: Option<f64>,
    spectrum_points: Option<usize>,
    cell_budget: Option<usize>,
    radius_bracket_um: Option<[f64; 2]>,
    wavelength_bracket_um: Option<[f64; 2]>,
    include_nonlinear_phase: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    design: FileDesign,
    #[serde(default)]
    pump: FilePump,
    #[serde(default)]
    numerics: FileNumerics,
}

/// Values given on the command line; each one replaces the file value.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub wavelength_um: Option<f64>,
    pub radius_um: Option<f64>,
    pub length_cm: Option<f64>,
    pub chi3: Option<f64>,
    pub avg_power_mw: Option<f64>,
    pub rep_rate_mhz: Option<f64>,
    pub sigma: Option<String>,
    pub peak_power_convention: Option<PeakPowerConvention>,
    pub include_nonlinear_phase: bool,
}

/// Which design quantity is given; the other is solved for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Independent {
    DegenerateWavelengthUm(f64),
    FiberRadiusUm(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignConfig {
    pub independent: Independent,
    pub length_cm: f64,
    pub chi3_m2_per_v2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PumpConfig {
    pub avg_power_mw: f64,
    pub rep_rate_mhz: f64,
    pub sigma_rad_per_s: f64,
    pub peak_power_convention: PeakPowerConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericsConfig {
    pub quadrature: QuadratureOptions,
    pub spectrum_points: usize,
    pub cell_budget: usize,
    pub radius_bracket_um: [f64; 2],
    pub wavelength_bracket_um: [f64; 2],
    pub include_nonlinear_phase: bool,
}

/// Fully resolved configuration; serialized into every manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub design: DesignConfig,
    pub pump: PumpConfig,
    pub numerics: NumericsConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| CliError::Config(format!("invalid config {}: {}", p.display(), e.message())))?
            }
            None => FileConfig::default(),
        };
        Self::resolve(file, overrides)
    }

    fn resolve(file: FileConfig, o: &Overrides) -> Result<Self, CliError> {
        let independent = match (o.wavelength_um, o.radius_um) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give either --wavelength-um or --radius-um, not both".into(),
                ))
            }
            (Some(w), None) => Independent::DegenerateWavelengthUm(w),
            (None, Some(r)) => Independent::FiberRadiusUm(r),
            (None, None) => match (file.design.degenerate_wavelength_um, file.design.fiber_radius_um) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Config(
                        "[design] sets both degenerate_wavelength_um and fiber_radius_um; keep one".into(),
                    ))
                }
                (Some(w), None) => Independent::DegenerateWavelengthUm(w),
                (None, Some(r)) => Independent::FiberRadiusUm(r),
                (None, None) => Independent::DegenerateWavelengthUm(DEFAULT_WAVELENGTH_UM),
            },
        };
        let sigma = match (&o.sigma, &file.pump.sigma) {
            (Some(text), _) => SigmaInput::Text(text.clone()).parse()?,
            (None, Some(input)) => input.parse()?,
            (None, None) => DEFAULT_SIGMA,
        };
        let n = &file.numerics;
        let defaults = QuadratureOptions::default();
        let quadrature = QuadratureOptions {
            sum_nodes: n.sum_nodes.unwrap_or(defaults.sum_nodes),
            angle_points: n.angle_points.unwrap_or(defaults.angle_points),
            radial_order: n.radial_order.unwrap_or(defaults.radial_order),
            panels_per_zero: n.panels_per_zero.unwrap_or(defaults.panels_per_zero),
            sinc_zeros: n.sinc_zeros.unwrap_or(defaults.sinc_zeros),
            window_sigmas: n.window_sigmas.unwrap_or(defaults.window_sigmas),
            tolerance: n.rate_tolerance.unwrap_or(defaults.tolerance),
        };
        let config = RunConfig {
            design: DesignConfig {
                independent,
                length_cm: o.length_cm.or(file.design.length_cm).unwrap_or(DEFAULT_LENGTH_CM),
                chi3_m2_per_v2: o.chi3.or(file.design.chi3_m2_per_v2).unwrap_or(CHI3_FUSED_SILICA),
            },
            pump: PumpConfig {
                avg_power_mw: o.avg_power_mw.or(file.pump.avg_power_mw).unwrap_or(DEFAULT_AVG_POWER_MW),
                rep_rate_mhz: o.rep_rate_mhz.or(file.pump.rep_rate_mhz).unwrap_or(DEFAULT_REP_RATE_MHZ),
                sigma_rad_per_s: sigma,
                peak_power_convention: o
                    .peak_power_convention
                    .or(file.pump.peak_power_convention)
                    .unwrap_or_default(),
            },
            numerics: NumericsConfig {
                quadrature,
                spectrum_points: n.spectrum_points.unwrap_or(DEFAULT_SPECTRUM_POINTS),
                cell_budget: n.cell_budget.unwrap_or(DEFAULT_CELL_BUDGET),
                radius_bracket_um: n
                    .radius_bracket_um
                    .unwrap_or([DEFAULT_RADIUS_BRACKET.0 * 1e6, DEFAULT_RADIUS_BRACKET.1 * 1e6]),
                wavelength_bracket_um: n
                    .wavelength_bracket_um
                    .unwrap_or([DEFAULT_WAVELENGTH_BRACKET.0 * 1e6, DEFAULT_WAVELENGTH_BRACKET.1 * 1e6]),
                include_nonlinear_phase: o.include_nonlinear_phase || n.include_nonlinear_phase.unwrap_or(false),
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn revalidated(self) -> Result<Self, CliError> {
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), CliError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must be positive, got {v}")))
            }
        };
        match self.design.independent {
            Independent::DegenerateWavelengthUm(w) => positive("degenerate_wavelength_um", w)?,
            Independent::FiberRadiusUm(r) => positive("fiber_radius_um", r)?,
        }
        positive("length_cm", self.design.length_cm)?;
        positive("chi3_m2_per_v2", self.design.chi3_m2_per_v2)?;
        positive("avg_power_mw", self.pump.avg_power_mw)?;
        positive("rep_rate_mhz", self.pump.rep_rate_mhz)?;
        let q = &self.numerics.quadrature;
        if q.sum_nodes == 0 || q.angle_points < 3 || q.radial_order == 0 || q.panels_per_zero == 0 || q.sinc_zeros == 0
        {
            return Err(CliError::Config(
                "quadrature needs sum_nodes, radial_order, panels_per_zero, sinc_zeros >= 1 and angle_points >= 3"
                    .into(),
            ));
        }
        positive("window_sigmas", q.window_sigmas)?;
        positive("rate_tolerance", q.tolerance)?;
        if self.numerics.spectrum_points < 3 || self.numerics.spectrum_points % 2 == 0 {
            return Err(CliError::Config(format!(
                "spectrum_points must be odd and >= 3, got {}",
                self.numerics.spectrum_points
            )));
        }
        if self.numerics.cell_budget == 0 {
            return Err(CliError::Config("cell_budget must be positive".into()));
        }
        for (name, [lo, hi]) in [
            ("radius_bracket_um", self.numerics.radius_bracket_um),
            ("wavelength_bracket_um", self.numerics.wavelength_bracket_um),
        ] {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(CliError::Config(format!("{name} must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn length_m(&self) -> f64 {
        self.design.length_cm * 1e-2
    }

    pub fn avg_power_w(&self) -> f64 {
        self.pump.avg_power_mw * 1e-3
    }

    pub fn rep_rate_hz(&self) -> f64 {
        self.pump.rep_rate_mhz * 1e6
    }

    pub fn radius_bracket_m(&self) -> (f64, f64) {
        let [lo, hi] = self.numerics.radius_bracket_um;
        (lo * 1e-6, hi * 1e-6)
    }

    pub fn wavelength_bracket_m(&self) -> (f64, f64) {
        let [lo, hi] = self.numerics.wavelength_bracket_um;
        (lo * 1e-6, hi * 1e-6)
    }
}
