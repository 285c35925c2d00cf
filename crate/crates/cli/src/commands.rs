//! Subcommand bodies. Each returns an in-memory table plus results for the
//! manifest; nothing touches the filesystem here.

use rayon::prelude::*;
use serde_json::{json, Value};
use tospdc::fibermodes::solve_mode;
use tospdc::nonlinear::{gamma_scan, gaussian_coupling, maximize_coupling};
use tospdc::phasematch::{
    find_phasematch_radius, find_phasematch_wavelength, pulse_duration_fwhm, radius_scan, PUMP_MODE, TRIPLET_MODE,
};
use tospdc::triplets::{
    check_cell_budget, jsi_grid, marginal_spectrum, preset_design, triplet_rate, GridAxis, GridKind, GridPreset,
    Photon,
};
use tospdc::{FiberSpec, ModeLabel, PhasematchSolution, PumpSpec, SourceDesign, Spectral};

use crate::config::{Independent, RunConfig};
use crate::output::{Output, Table};
use crate::CliError;

/// Template radius; only materials and length matter before solving.
const TEMPLATE_RADIUS: f64 = 0.4e-6;

/// Radius and degenerate frequency implied by the configuration.
pub fn resolve_design(config: &RunConfig, length: f64) -> Result<(FiberSpec, PhasematchSolution), CliError> {
    let template = FiberSpec::air_clad_silica(TEMPLATE_RADIUS, length)?;
    let pm = match config.design.independent {
        Independent::DegenerateWavelengthUm(w) => {
            find_phasematch_radius(&template, Spectral::from_wavelength_um(w), config.radius_bracket_m())?
        }
        Independent::FiberRadiusUm(r) => {
            find_phasematch_wavelength(&template.with_radius(r * 1e-6)?, config.wavelength_bracket_m())?
        }
    };
    Ok((template.with_radius(pm.fiber_radius)?, pm))
}

pub fn pump_spec(config: &RunConfig, pm: &PhasematchSolution) -> Result<PumpSpec, CliError> {
    Ok(PumpSpec::from_average_power(
        pm.pump_freq,
        config.pump.sigma_rad_per_s,
        config.avg_power_w(),
        config.rep_rate_hz(),
        config.pump.peak_power_convention,
    )?)
}

fn source_design(config: &RunConfig, length: f64) -> Result<SourceDesign, CliError> {
    let (fiber, pm) = resolve_design(config, length)?;
    let pump = pump_spec(config, &pm)?;
    let design = SourceDesign::at_radius(&fiber, pump, config.design.chi3_m2_per_v2, None)?;
    let design = if config.numerics.include_nonlinear_phase {
        design.with_nonlinear_phase()
    } else {
        design
    };
    // Tables wide enough for the configured quadrature and its refinement.
    let window = design.rate_window(&config.numerics.quadrature.refined());
    Ok(design.reconfigured(length, design.pump, Some(window))?)
}

fn design_summary(design: &SourceDesign) -> Value {
    json!({
        "fiber_radius_um": design.fiber.core_radius * 1e6,
        "degenerate_wavelength_um": design.triplet_freq().wavelength_um(),
        "pump_wavelength_um": design.pump.center_freq.wavelength_um(),
        "phasematch_residual_rad_per_m": design.phasematch.residual,
        "peak_power_w": design.pump.peak_power,
        "pulse_duration_fwhm_s": pulse_duration_fwhm(design.pump.sigma),
        "pump_mode_index": design.pump_mode_index,
        "gamma_per_w_km": design.nonlinear.gamma_per_w_km(),
        "a_eff_m2": design.nonlinear.a_eff,
        "phi_nl_rad_per_m": design.phi_nl,
    })
}

/// `count` evenly spaced values from `from` to `to` inclusive.
pub fn linspace(from: f64, to: f64, count: usize) -> Result<Vec<f64>, CliError> {
    if count == 0 || !(from > 0.0) || !(to >= from) || (count == 1 && to != from) {
        return Err(CliError::Config(format!(
            "scan needs 0 < from <= to and points >= 1 (points = 1 only when from = to), got {from}..{to} with {count}"
        )));
    }
    if count == 1 {
        return Ok(vec![from]);
    }
    Ok((0..count).map(|k| from + (to - from) * k as f64 / (count - 1) as f64).collect())
}

pub fn phasematch(config: &RunConfig, scan: Option<Vec<f64>>) -> Result<Output, CliError> {
    let mut table = Table::new(&["wavelength_um", "radius_um", "residual_rad_per_m"]);
    let solutions = match scan {
        Some(wavelengths_um) => {
            let template = FiberSpec::air_clad_silica(TEMPLATE_RADIUS, config.length_m())?;
            let meters: Vec<f64> = wavelengths_um.iter().map(|w| w * 1e-6).collect();
            radius_scan(&template, &meters, config.radius_bracket_m())
                .into_iter()
                .collect::<Result<Vec<_>, _>>()?
        }
        None => vec![resolve_design(config, config.length_m())?.1],
    };
    for pm in &solutions {
        table.push(&[pm.degenerate_freq.wavelength_um(), pm.fiber_radius * 1e6, pm.residual]);
    }
    Ok(Output {
        table,
        results: json!({ "solutions": solutions.len() }),
        converged: true,
    })
}

pub fn modes(config: &RunConfig, label: ModeLabel, at_um: Option<f64>) -> Result<Output, CliError> {
    let (fiber, pm) = resolve_design(config, config.length_m())?;
    let freq = match at_um {
        Some(w) => Spectral::from_wavelength_um(w),
        None if label == TRIPLET_MODE => pm.degenerate_freq,
        None => pm.pump_freq,
    };
    let mode = solve_mode(&fiber, freq, label)?;
    let mut table = Table::new(&["radius_m", "amplitude"]);
    for (r, f) in mode.profile.radius.iter().zip(&mode.profile.amplitude) {
        table.push(&[*r, *f]);
    }
    Ok(Output {
        table,
        results: json!({
            "mode": label.to_string(),
            "wavelength_um": freq.wavelength_um(),
            "fiber_radius_um": fiber.core_radius * 1e6,
            "n_eff": mode.n_eff,
            "beta_rad_per_m": mode.beta,
            "v": mode.v,
            "u": mode.u,
            "w": mode.w,
            "characteristic_residual": mode.residual,
            "amplitude_units": "1/m, unit power over the transverse plane",
        }),
        converged: true,
    })
}

pub fn gamma(config: &RunConfig, wavelengths_um: Vec<f64>) -> Result<Output, CliError> {
    let template = FiberSpec::air_clad_silica(TEMPLATE_RADIUS, config.length_m())?;
    let meters: Vec<f64> = wavelengths_um.iter().map(|w| w * 1e-6).collect();
    let points = gamma_scan(&template, &meters, config.radius_bracket_m(), config.design.chi3_m2_per_v2)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["wavelength_um", "radius_um", "a_eff_um2", "gamma_per_W_km"]);
    for p in &points {
        table.push(&[p.wavelength * 1e6, p.radius * 1e6, p.nonlinear.a_eff * 1e12, p.nonlinear.gamma_per_w_km()]);
    }
    Ok(Output {
        table,
        results: json!({ "points": points.len() }),
        converged: true,
    })
}

pub fn coupling(config: &RunConfig, waists_um: Vec<f64>) -> Result<Output, CliError> {
    let (fiber, pm) = resolve_design(config, config.length_m())?;
    let mode = solve_mode(&fiber, pm.pump_freq, PUMP_MODE)?;
    let fractions = waists_um
        .par_iter()
        .map(|w| gaussian_coupling(&mode, w * 1e-6))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["waist_um", "coupling_fraction"]);
    for (w, f) in waists_um.iter().zip(&fractions) {
        table.push(&[*w, *f]);
    }
    let first = waists_um[0] * 1e-6;
    let last = waists_um[waists_um.len() - 1] * 1e-6;
    let optimum = match maximize_coupling(&mode, (first, last)) {
        Ok((w, f)) => json!({ "waist_um": w * 1e6, "coupling_fraction": f }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    Ok(Output {
        table,
        results: json!({
            "mode": PUMP_MODE.to_string(),
            "pump_wavelength_um": pm.pump_freq.wavelength_um(),
            "fiber_radius_um": fiber.core_radius * 1e6,
            "coupling": "power fraction |<E_mode, E_gauss>|^2 / (<E_mode, E_mode> <E_gauss, E_gauss>) with the full transverse field",
            "optimum": optimum,
        }),
        converged: true,
    })
}

pub fn jsi(config: &RunConfig, preset: GridPreset, points: usize, kind: GridKind) -> Result<Output, CliError> {
    let probe = GridAxis::centered(1.0, 0.5, points.max(2))?;
    check_cell_budget(&[probe; 3], config.numerics.cell_budget)?;
    let base = source_design(config, config.length_m())?;
    let (design, axes) = preset_design(&base, preset, points)?;
    let grid = jsi_grid(&design, axes, kind, config.numerics.cell_budget)?;
    let mut table = Table::new(&["w_r", "w_s", "w_i", "value"]);
    for idx in 0..grid.values.len() {
        let (i, j, k) = grid.coordinates(idx);
        let value = match kind {
            GridKind::JSI | GridKind::PSA => grid.values.intensity(idx),
            GridKind::PM | GridKind::JSA => grid.values.intensity(idx).sqrt(),
        };
        table.push(&[axes[0].value(i), axes[1].value(j), axes[2].value(k), value]);
    }
    let (i, j, k) = grid.argmax();
    Ok(Output {
        table,
        results: json!({
            "preset": preset,
            "kind": kind,
            "value": match kind {
                GridKind::JSI => "|F|^2 = |alpha phi|^2",
                GridKind::PSA => "alpha(w_r + w_s + w_i)",
                GridKind::PM => "|phi(dk, L)|",
                GridKind::JSA => "|F| = |alpha phi|",
            },
            "axes": {
                "units": "rad/s",
                "order": "row-major over (w_r, w_s, w_i)",
                "w_r": axes[0],
                "w_s": axes[1],
                "w_i": axes[2],
            },
            "length_m": grid.length,
            "sigma_rad_per_s": grid.sigma,
            "pump_center_rad_per_s": design.pump.center_freq.angular(),
            "argmax": {
                "index": [i, j, k],
                "frequency_sum_rad_per_s": axes[0].value(i) + axes[1].value(j) + axes[2].value(k),
            },
            "design": design_summary(&design),
        }),
        converged: true,
    })
}

pub fn rate(config: &RunConfig, lengths_cm: &[f64]) -> Result<Output, CliError> {
    let shortest = lengths_cm.iter().copied().fold(f64::INFINITY, f64::min);
    let base = source_design(config, shortest * 1e-2)?;
    let window = base.window();
    let mut table = Table::new(&["length_cm", "rate_per_s", "error_per_s"]);
    let mut runs = Vec::new();
    let mut converged = true;
    for &l in lengths_cm {
        let design = base.reconfigured(l * 1e-2, base.pump, Some(window))?;
        let r = triplet_rate(&design, &config.numerics.quadrature)?;
        table.push(&[l, r.triplets_per_second, r.quadrature_error]);
        converged &= r.converged;
        runs.push(json!({
            "length_cm": l,
            "rate_per_s": r.triplets_per_second,
            "error_per_s": r.quadrature_error,
            "converged": r.converged,
            "metadata": r.metadata,
        }));
    }
    Ok(Output {
        table,
        results: json!({ "design": design_summary(&base), "runs": runs }),
        converged,
    })
}

pub fn spectrum(config: &RunConfig, kept: Photon) -> Result<Output, CliError> {
    let design = source_design(config, config.length_m())?;
    let spec = marginal_spectrum(&design, &config.numerics.quadrature, config.numerics.spectrum_points, kept)?;
    let mut table = Table::new(&["wavelength_um", "density"]);
    for (w, d) in spec.omega.iter().zip(&spec.density).rev() {
        table.push(&[Spectral::from_angular(*w).wavelength_um(), *d]);
    }
    Ok(Output {
        table,
        results: json!({
            "kept_photon": kept,
            "density_units": "triplets per second per rad/s",
            "integral_per_s": spec.integral,
            "peak_wavelength_um": Spectral::from_angular(spec.peak_omega()).wavelength_um(),
            "design": design_summary(&design),
        }),
        converged: true,
    })
}
