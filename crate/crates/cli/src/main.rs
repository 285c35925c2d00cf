//! `tospdc`: design, scan and rate calculations for photon-triplet sources
//! in thin air-clad silica fibers.
//!
//! Exit codes: 0 ok, 1 other numerical or I/O failure, 2 configuration
//! error, 3 no phasematching in the bracket, 4 quadrature did not converge
//! (outputs are still written).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use tospdc::triplets::{GridKind, GridPreset, Photon};
use tospdc::{ModeLabel, PeakPowerConvention};

use config::{Overrides, RunConfig};

pub const WORKERS_ENV: &str = "TOSPDC_WORKERS";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(tospdc::Error),
    Io(std::io::Error),
}

impl From<tospdc::Error> for CliError {
    fn from(e: tospdc::Error) -> Self {
        CliError::Compute(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use tospdc::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(E::InvalidParameter(_) | E::OutOfRange { .. } | E::GridTooLarge { .. }) => 2,
            CliError::Compute(E::NoPhasematch { .. }) => 3,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config_error",
            3 => "no_phasematch",
            _ => "failure",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(m) => m.clone(),
            CliError::Compute(e) => e.to_string(),
            CliError::Io(e) => e.to_string(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "tospdc", version, about = "Photon-triplet source design in thin air-clad silica fibers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML file with [design], [pump] and [numerics] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Degenerate triplet wavelength; the radius is solved for.
    #[arg(long, allow_hyphen_values = true)]
    wavelength_um: Option<f64>,
    /// Fiber radius; the degenerate wavelength is solved for.
    #[arg(long, allow_hyphen_values = true)]
    radius_um: Option<f64>,
    /// Fiber length. `rate` accepts a comma-separated list.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    length_cm: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    avg_power_mw: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rep_rate_mhz: Option<f64>,
    /// Pump bandwidth in rad/s, or e.g. "23.5GHz_paper" for 23.5e9 rad/s.
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
    /// χ³ in m²/V².
    #[arg(long, allow_hyphen_values = true)]
    chi3: Option<f64>,
    #[arg(long, value_enum)]
    peak_power: Option<PeakPowerArg>,
    /// Include the SPM/XPM phase in Δk.
    #[arg(long)]
    nonlinear_phase: bool,
    /// Output CSV; the manifest goes next to it as <stem>.manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Phasematching radius for the design wavelength or a wavelength scan.
    Phasematch {
        #[arg(long, requires = "to_um")]
        from_um: Option<f64>,
        #[arg(long, requires = "from_um")]
        to_um: Option<f64>,
        #[arg(long, default_value_t = 13)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Radial amplitude profile of one mode at the design radius.
    Modes {
        #[arg(long, default_value = "HE11")]
        mode: ModeLabel,
        /// Evaluation wavelength; defaults to the triplet (HE11) or pump wavelength.
        #[arg(long)]
        at_um: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// γ and A_eff at the phasematched radius across triplet wavelengths.
    GammaScan {
        #[arg(long, default_value_t = 1.2)]
        from_um: f64,
        #[arg(long, default_value_t = 1.8)]
        to_um: f64,
        #[arg(long, default_value_t = 13)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Gaussian-beam power coupling into the pump mode versus waist.
    CouplingScan {
        #[arg(long, default_value_t = 0.3)]
        from_um: f64,
        #[arg(long, default_value_t = 2.0)]
        to_um: f64,
        #[arg(long, default_value_t = 171)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Joint spectrum on a cubic grid.
    Jsi {
        #[arg(long, value_enum, default_value_t = PresetArg::Figure2)]
        preset: PresetArg,
        #[arg(long, default_value_t = 61)]
        n_points: usize,
        #[arg(long, value_enum, default_value_t = KindArg::Jsi)]
        kind: KindArg,
        #[command(flatten)]
        common: Common,
    },
    /// Absolute triplet rate, optionally for several lengths.
    Rate {
        #[command(flatten)]
        common: Common,
    },
    /// Single-photon marginal spectrum.
    Spectrum {
        /// Odd number of points; overrides numerics.spectrum_points.
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, value_enum, default_value_t = PhotonArg::R)]
        kept: PhotonArg,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum PeakPowerArg {
    GaussianPeak,
    RectangularFwhm,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum PresetArg {
    Figure2,
    Design,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum KindArg {
    Jsi,
    Jsa,
    Pm,
    Psa,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum PhotonArg {
    R,
    S,
    I,
}

impl Common {
    fn overrides(&self, allow_many_lengths: bool) -> Result<Overrides, CliError> {
        if self.length_cm.len() > 1 && !allow_many_lengths {
            return Err(CliError::Config("only `rate` accepts several --length-cm values".into()));
        }
        Ok(Overrides {
            wavelength_um: self.wavelength_um,
            radius_um: self.radius_um,
            length_cm: self.length_cm.first().copied(),
            chi3: self.chi3,
            avg_power_mw: self.avg_power_mw,
            rep_rate_mhz: self.rep_rate_mhz,
            sigma: self.sigma.clone(),
            peak_power_convention: self.peak_power.map(|p| match p {
                PeakPowerArg::GaussianPeak => PeakPowerConvention::GaussianPeak,
                PeakPowerArg::RectangularFwhm => PeakPowerConvention::RectangularFwhm,
            }),
            include_nonlinear_phase: self.nonlinear_phase,
        })
    }
}

fn workers() -> Result<usize, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(text) => {
            let n: usize = text
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got '{text}'")))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(n)
        }
        Err(_) => Ok(rayon::current_num_threads()),
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let workers = workers()?;
    let (name, common, arguments) = match &cli.command {
        Command::Phasematch { from_um, to_um, points, common } => {
            ("phasematch", common, json!({ "from_um": from_um, "to_um": to_um, "points": points }))
        }
        Command::Modes { mode, at_um, common } => ("modes", common, json!({ "mode": mode.to_string(), "at_um": at_um })),
        Command::GammaScan { from_um, to_um, points, common } => {
            ("gamma-scan", common, json!({ "from_um": from_um, "to_um": to_um, "points": points }))
        }
        Command::CouplingScan { from_um, to_um, points, common } => {
            ("coupling-scan", common, json!({ "from_um": from_um, "to_um": to_um, "points": points }))
        }
        Command::Jsi { preset, n_points, kind, common } => (
            "jsi",
            common,
            json!({ "preset": format!("{preset:?}"), "n_points": n_points, "kind": format!("{kind:?}") }),
        ),
        Command::Rate { common } => ("rate", common, json!({ "length_cm": common.length_cm })),
        Command::Spectrum { points, kept, common } => {
            ("spectrum", common, json!({ "points": points, "kept": format!("{kept:?}") }))
        }
    };
    let mut config = RunConfig::load(common.config.as_deref(), &common.overrides(name == "rate")?)?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));

    let result = match cli.command {
        Command::Phasematch { from_um, to_um, points, .. } => {
            let scan = match (from_um, to_um) {
                (Some(a), Some(b)) => Some(commands::linspace(a, b, points)?),
                _ => None,
            };
            commands::phasematch(&config, scan)?
        }
        Command::Modes { mode, at_um, .. } => commands::modes(&config, mode, at_um)?,
        Command::GammaScan { from_um, to_um, points, .. } => {
            commands::gamma(&config, commands::linspace(from_um, to_um, points)?)?
        }
        Command::CouplingScan { from_um, to_um, points, .. } => {
            if points < 2 {
                return Err(CliError::Config("coupling-scan needs at least 2 points".into()));
            }
            commands::coupling(&config, commands::linspace(from_um, to_um, points)?)?
        }
        Command::Jsi { preset, n_points, kind, .. } => {
            if n_points < 2 {
                return Err(CliError::Config("--n-points must be at least 2".into()));
            }
            let preset = match preset {
                PresetArg::Figure2 => GridPreset::Figure2LengthAsWritten,
                PresetArg::Design => GridPreset::Design,
            };
            let kind = match kind {
                KindArg::Jsi => GridKind::JSI,
                KindArg::Jsa => GridKind::JSA,
                KindArg::Pm => GridKind::PM,
                KindArg::Psa => GridKind::PSA,
            };
            commands::jsi(&config, preset, n_points, kind)?
        }
        Command::Rate { .. } => {
            let lengths = if common.length_cm.is_empty() {
                vec![config.design.length_cm]
            } else {
                common.length_cm.clone()
            };
            if let Some(bad) = lengths.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
                return Err(CliError::Config(format!("length_cm must be positive, got {bad}")));
            }
            commands::rate(&config, &lengths)?
        }
        Command::Spectrum { points, kept, .. } => {
            if let Some(p) = points {
                config.numerics.spectrum_points = p;
                config = config.revalidated()?;
            }
            let kept = match kept {
                PhotonArg::R => Photon::R,
                PhotonArg::S => Photon::S,
                PhotonArg::I => Photon::I,
            };
            commands::spectrum(&config, kept)?
        }
    };
    let manifest = output::write(name, &arguments, &config, &result, &out, workers).map_err(CliError::Io)?;
    println!("wrote {} and {}", out.display(), manifest.display());
    Ok(if result.converged { 0 } else { 4 })
}

fn fail(status: &str, code: u8, reason: &str) -> ExitCode {
    eprintln!("{}", json!({ "status": status, "exit_code": code, "reason": reason }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return fail("config_error", 2, first);
        }
    };
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => {
            eprintln!("{}", json!({ "status": "not_converged", "exit_code": code, "reason": "quadrature refinement changed the rate by more than the tolerance" }));
            ExitCode::from(code)
        }
        Err(e) => fail(e.kind(), e.exit_code(), &e.message()),
    }
}
