//! CSV tables and their JSON run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tospdc::constants::{HBAR, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use tospdc::fibermodes::{GROUP_SLOWNESS_STEP, PROFILE_POINTS, SCAN_POINTS};
use tospdc::modal::TABLE_NODES;
use tospdc::nonlinear::{CONVENTIONS, COUPLING_TOLERANCE, NORMALIZATION_TOLERANCE};
use tospdc::phasematch::{PUMP_MODE, RESIDUAL_TOLERANCE, TRIPLET_MODE};
use tospdc::Material;

use crate::config::RunConfig;

/// A CSV table built in memory so nothing is written on failure.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<&'static str>,
    text: String,
    rows: usize,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            text: format!("{}\n", header.join(",")),
            rows: 0,
        }
    }

    /// Appends one row. Numbers use the shortest round-trip exponent form
    /// so identical values always print identically.
    pub fn push(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.header.len());
        for (k, v) in values.iter().enumerate() {
            if k > 0 {
                self.text.push(',');
            }
            write!(self.text, "{v:e}").unwrap();
        }
        self.text.push('\n');
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

/// Result of one subcommand, ready to be written.
#[derive(Debug)]
pub struct Output {
    pub table: Table,
    pub results: Value,
    /// False when a quadrature failed its refinement check.
    pub converged: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

/// Hash of everything that determines the CSV: subcommand, arguments and
/// resolved configuration.
pub fn config_hash(subcommand: &str, arguments: &Value, config: &RunConfig) -> String {
    let canonical = json!({ "subcommand": subcommand, "arguments": arguments, "config": config });
    sha256_hex(canonical.to_string().as_bytes())
}

pub fn manifest(subcommand: &str, arguments: &Value, config: &RunConfig, output: &Output, csv: &Path, workers: usize) -> Value {
    json!({
        "tool": "tospdc",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": subcommand,
        "config_sha256": config_hash(subcommand, arguments, config),
        "arguments": arguments,
        "config": config,
        "physics": {
            "chi3_m2_per_v2": config.design.chi3_m2_per_v2,
            "core_index_model": Material::FusedSilica.model_name(),
            "cladding_index_model": Material::Air.model_name(),
            "pump_mode": PUMP_MODE.to_string(),
            "triplet_mode": TRIPLET_MODE.to_string(),
            "sigma_convention": "alpha(w) = exp[-(w - w_p)^2 / sigma^2], sigma in rad/s; t_fwhm = 2 sqrt(2 ln 2) / sigma",
            "peak_power_convention": config.pump.peak_power_convention.describe(),
            "nonlinear": CONVENTIONS,
            "constants": {
                "speed_of_light_m_per_s": SPEED_OF_LIGHT,
                "vacuum_permittivity_f_per_m": VACUUM_PERMITTIVITY,
                "hbar_j_s": HBAR,
            },
        },
        "tolerances": {
            "phasematch_residual_rad_per_m": RESIDUAL_TOLERANCE,
            "mode_scan_points": SCAN_POINTS,
            "mode_profile_points": PROFILE_POINTS,
            "group_slowness_relative_step": GROUP_SLOWNESS_STEP,
            "profile_normalization": NORMALIZATION_TOLERANCE,
            "coupling_waist_m": COUPLING_TOLERANCE,
            "dispersion_table_nodes": TABLE_NODES,
            "quadrature": config.numerics.quadrature,
            "cell_budget": config.numerics.cell_budget,
        },
        "output": {
            "csv": csv.file_name().map(|n| n.to_string_lossy().into_owned()),
            "header": output.table.header,
            "rows": output.table.rows(),
            "sha256": sha256_hex(output.table.text.as_bytes()),
        },
        "converged": output.converged,
        "results": output.results,
        "workers": workers,
    })
}

/// Writes the CSV and its manifest; returns the manifest path.
pub fn write(
    subcommand: &str,
    arguments: &Value,
    config: &RunConfig,
    output: &Output,
    csv: &Path,
    workers: usize,
) -> std::io::Result<PathBuf> {
    let manifest_file = manifest_path(csv);
    let body = serde_json::to_string_pretty(&manifest(subcommand, arguments, config, output, csv, workers))?;
    fs::write(csv, &output.table.text)?;
    fs::write(&manifest_file, body + "\n")?;
    Ok(manifest_file)
}
