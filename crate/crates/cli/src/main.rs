//! `spdc`: command-line access to the rate model, coincidence simulation and
//! tomography in `spdc-core`.
//!
//! Exit status is 0 on success, 1 for invalid input or configuration and 2
//! when a computation fails (non-convergence, values outside a model's range).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

/// Errors from a computation, prefixed with the operation that raised them.
pub fn in_op(op: &'static str) -> impl Fn(spdc_core::Error) -> CliError {
    move |e| {
        use spdc_core::Error as E;
        let msg = format!("{op}: {e}");
        match e {
            E::InvalidInput(_) | E::Parse(_) | E::Io(_) | E::Unphysical(_) => CliError::Validation(msg),
            E::Domain(_) | E::Numerical(_) | E::NotConverged { .. } => CliError::Numerical(msg),
        }
    }
}

const MODEL_KEYS: &str = "\
Config keys read:
  film.layer_count, film.chi2, film.dispersion_file
  pump.lambda_nm, pump.waist_m, pump.power_mw, pump.theta_rad
  windows.angular_full_width_rad, windows.band_nm
  grids.omega_points, grids.theta_points, grids.box_points";

const COHERENCE_KEYS: &str = "\
Config keys read:
  film.layer_count, film.chi2, film.dispersion_file
  pump.lambda_nm";

const SIMULATION_KEYS: &str = "\
Config keys read:
  pump.power_mw
  simulation.seed, simulation.pair_rate_per_mw,
  simulation.background_1_hz, simulation.background_2_hz,
  simulation.efficiency_1, simulation.efficiency_2,
  simulation.dark_rate_1_hz, simulation.dark_rate_2_hz,
  simulation.jitter_1_s, simulation.jitter_2_s, simulation.duration_s,
  simulation.bin_width_s, simulation.tau_half_range_s,
  simulation.exclusion_half_width_s, simulation.sweep_powers_mw";

const TOMO_KEYS: &str = "\
Config keys read:
  pump.theta_rad
  simulation.seed
  tomography.counts, tomography.werner_p, tomography.counts_per_setting,
  tomography.target, tomography.method, tomography.handedness,
  tomography.accidental_rate_hz, tomography.max_iterations, tomography.tolerance";

const STATE_KEYS: &str = "\
Config keys read:
  pump.theta_rad";

const SHG_KEYS: &str = "\
Config keys read: none";

#[derive(Parser, Debug)]
#[command(name = "spdc", version, about = "Pair generation, coincidence statistics and tomography for thin χ(2) films")]
struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Random seed for simulated data (overrides simulation.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print a JSON summary on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Directory for output files; without it the primary table goes to stdout.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Frequency-angular spectrum S(ω_s, θ_s), or the full joint grid with --joint.
    #[command(after_help = MODEL_KEYS)]
    Spectrum(SpectrumArgs),
    /// Normalized signal and idler angular emission profiles over the band.
    #[command(after_help = MODEL_KEYS)]
    Profile(ModelArgs),
    /// Rates for the four propagation scenarios and the counter/co ratio.
    #[command(after_help = MODEL_KEYS)]
    Scenarios(ModelArgs),
    /// FWHM of the collected signal spectrum and the correlation time.
    #[command(after_help = MODEL_KEYS)]
    Bandwidth(BandwidthArgs),
    /// Degenerate collinear coherence length.
    #[command(after_help = COHERENCE_KEYS)]
    Coherence(CoherenceArgs),
    /// Simulate detector time tags and their coincidence histogram, or a power sweep.
    #[command(after_help = SIMULATION_KEYS)]
    Simulate(SimulateArgs),
    /// Second-order correlation g2(τ) from simulated or recorded time tags.
    #[command(after_help = SIMULATION_KEYS)]
    G2(G2Args),
    /// Two-qubit polarization tomography from measured or simulated counts.
    #[command(after_help = TOMO_KEYS)]
    Tomo(TomoArgs),
    /// Pair polarization state for a pump angle and its Bell-state fidelities.
    #[command(after_help = STATE_KEYS)]
    State(StateArgs),
    /// Polar SHG pattern for parallel and perpendicular analyzers.
    #[command(after_help = SHG_KEYS)]
    Shg(ShgArgs),
}

#[derive(Args, Debug, Default)]
pub struct ModelArgs {
    /// Number of layers (film.layer_count).
    #[arg(long)]
    pub layers: Option<u32>,
    /// Pump wavelength in nm (pump.lambda_nm).
    #[arg(long)]
    pub pump_nm: Option<f64>,
    /// Pump waist in m (pump.waist_m).
    #[arg(long)]
    pub waist_m: Option<f64>,
    /// Full width of the detection boxes in rad (windows.angular_full_width_rad).
    #[arg(long)]
    pub width_rad: Option<f64>,
    /// Signal band as MIN,MAX in nm (windows.band_nm).
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub band_nm: Option<Vec<f64>>,
    /// grids.omega_points
    #[arg(long)]
    pub omega_points: Option<usize>,
    /// grids.theta_points
    #[arg(long)]
    pub theta_points: Option<usize>,
    /// grids.box_points
    #[arg(long)]
    pub box_points: Option<usize>,
}

impl ModelArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.layers {
            cfg.film.layer_count = v;
        }
        if let Some(v) = self.pump_nm {
            cfg.pump.lambda_nm = v;
        }
        if let Some(v) = self.waist_m {
            cfg.pump.waist_m = v;
        }
        if let Some(v) = self.width_rad {
            cfg.windows.angular_full_width_rad = v;
        }
        if let Some(v) = &self.band_nm {
            cfg.windows.band_nm = [v[0], v[1]];
        }
        if let Some(v) = self.omega_points {
            cfg.grids.omega_points = v;
        }
        if let Some(v) = self.theta_points {
            cfg.grids.theta_points = v;
        }
        if let Some(v) = self.box_points {
            cfg.grids.box_points = v;
        }
    }
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Write the joint grid `omega_thz,theta_s_rad,theta_i_rad,rate` instead of the marginal.
    #[arg(long)]
    pub joint: bool,
    /// Signal angles on the full circle for --joint.
    #[arg(long, default_value_t = 72)]
    pub joint_theta_points: usize,
    /// Signal frequencies for --joint.
    #[arg(long, default_value_t = 16)]
    pub joint_omega_points: usize,
    /// Cover every frequency inside the dispersion range instead of the band.
    #[arg(long)]
    pub full_range: bool,
}

#[derive(Args, Debug)]
pub struct BandwidthArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Collection full width from a numerical aperture, NA / n at the degenerate wavelength.
    #[arg(long, conflicts_with = "width_rad")]
    pub na: Option<f64>,
}

#[derive(Args, Debug)]
pub struct CoherenceArgs {
    /// Pump wavelength in nm (pump.lambda_nm).
    #[arg(long)]
    pub pump_nm: Option<f64>,
    /// Number of layers (film.layer_count).
    #[arg(long)]
    pub layers: Option<u32>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Pump power in mW (pump.power_mw).
    #[arg(long)]
    pub power_mw: Option<f64>,
    /// Simulated duration in s (simulation.duration_s).
    #[arg(long)]
    pub duration_s: Option<f64>,
    /// Run the power sweep over simulation.sweep_powers_mw and fit a line.
    #[arg(long)]
    pub sweep: bool,
}

#[derive(Args, Debug)]
pub struct G2Args {
    /// Pump power in mW (pump.power_mw).
    #[arg(long)]
    pub power_mw: Option<f64>,
    /// Simulated duration in s (simulation.duration_s); for --tags, the
    /// acquisition time, which otherwise is the latest tag.
    #[arg(long)]
    pub duration_s: Option<f64>,
    /// Analyze a `detector,time_s` CSV instead of simulating.
    #[arg(long, value_name = "FILE")]
    pub tags: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TomoArgs {
    /// Counts CSV `basis_1,basis_2,counts,seconds` (tomography.counts).
    #[arg(long, value_name = "FILE")]
    pub counts: Option<PathBuf>,
    /// Pump angle from the armchair axis in rad (pump.theta_rad).
    #[arg(long, alias = "theta")]
    pub theta_rad: Option<f64>,
    /// Weight of the pure state in the Werner mixture (tomography.werner_p).
    #[arg(long)]
    pub werner_p: Option<f64>,
    /// Mean simulated counts per setting (tomography.counts_per_setting).
    #[arg(long)]
    pub counts_per_setting: Option<f64>,
    /// `pump` or a Bell state: phi+, phi-, psi+, psi- (tomography.target).
    #[arg(long)]
    pub target: Option<String>,
    /// `mle` or `linear` (tomography.method).
    #[arg(long)]
    pub method: Option<String>,
    /// Print the sixteen measurement settings and exit.
    #[arg(long)]
    pub list_settings: bool,
}

#[derive(Args, Debug)]
pub struct StateArgs {
    /// Pump angle from the armchair axis in rad (pump.theta_rad).
    #[arg(long, alias = "theta")]
    pub theta_rad: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ShgArgs {
    /// Angles sampled over one turn.
    #[arg(long, default_value_t = 360)]
    pub points: usize,
    /// Tensor magnitude d.
    #[arg(long, default_value_t = 1.0)]
    pub d: f64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.simulation.seed = cli.seed;
    }
    let out = output::Output::new(cli.out.clone(), cli.json)?;
    match &cli.command {
        Command::Spectrum(a) => {
            a.model.apply(&mut cfg);
            commands::spectrum(&cfg, a, &out)
        }
        Command::Profile(a) => {
            a.apply(&mut cfg);
            commands::profile(&cfg, &out)
        }
        Command::Scenarios(a) => {
            a.apply(&mut cfg);
            commands::scenarios(&cfg, &out)
        }
        Command::Bandwidth(a) => {
            a.model.apply(&mut cfg);
            commands::bandwidth(&cfg, a, &out)
        }
        Command::Coherence(a) => {
            if let Some(v) = a.pump_nm {
                cfg.pump.lambda_nm = v;
            }
            if let Some(v) = a.layers {
                cfg.film.layer_count = v;
            }
            commands::coherence(&cfg, &out)
        }
        Command::Simulate(a) => {
            if let Some(v) = a.power_mw {
                cfg.pump.power_mw = v;
            }
            if let Some(v) = a.duration_s {
                cfg.simulation.duration_s = v;
            }
            commands::simulate(&cfg, a.sweep, &out)
        }
        Command::G2(a) => {
            if let Some(v) = a.power_mw {
                cfg.pump.power_mw = v;
            }
            if let Some(v) = a.duration_s {
                cfg.simulation.duration_s = v;
            }
            commands::g2(&cfg, a.tags.as_deref(), a.duration_s, &out)
        }
        Command::Tomo(a) => {
            if let Some(v) = &a.counts {
                cfg.tomography.counts = Some(v.clone());
            }
            if let Some(v) = a.theta_rad {
                cfg.pump.theta_rad = v;
            }
            if let Some(v) = a.werner_p {
                cfg.tomography.werner_p = v;
            }
            if let Some(v) = a.counts_per_setting {
                cfg.tomography.counts_per_setting = v;
            }
            if let Some(v) = &a.target {
                cfg.tomography.target = v.clone();
            }
            if let Some(v) = &a.method {
                cfg.tomography.method = v.clone();
            }
            commands::tomo(&cfg, a.list_settings, &out)
        }
        Command::State(a) => {
            if let Some(v) = a.theta_rad {
                cfg.pump.theta_rad = v;
            }
            commands::state(&cfg, &out)
        }
        Command::Shg(a) => commands::shg(a, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
