//! `hetport`: VAR fitting and portmanteau diagnostics under time-varying
//! volatility.
//!
//! Exit codes: 0 success (including "n.a." cells), 2 input or
//! configuration error, 3 numerical failure.

mod commands;
mod data;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hetport::volatility::{BandwidthMode, Kernel, KernelConfig};

use crate::data::DatasetSpec;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "hetport", version, about = "VAR estimation and residual autocorrelation tests under time-varying volatility")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a VAR(p) by OLS, GLS (known volatility) or ALS.
    Fit(FitArgs),
    /// Portmanteau tests and autocorrelation bounds for fitted residuals.
    Diagnose(DiagnoseArgs),
    /// Simulate a path from a VAR with deterministic volatility.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo size, power or weight experiment.
    Mc(McArgs),
    /// Write closed-form reference values as JSON.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Ols,
    Gls,
    Als,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelArg {
    Gaussian,
    Triangular,
    Epanechnikov,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BandwidthModeArg {
    Single,
    PerCell,
}

/// Volatility smoothing options; flags override `--kernel-config`.
#[derive(Debug, Clone, Args)]
struct KernelArgs {
    /// JSON or TOML file with the full smoothing configuration.
    #[arg(long)]
    kernel_config: Option<PathBuf>,
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    #[arg(long, value_enum)]
    bandwidth_mode: Option<BandwidthModeArg>,
    /// Lower end of the bandwidth grid in units of T^(-1/3).
    #[arg(long)]
    c_min: Option<f64>,
    /// Upper end of the bandwidth grid in units of T^(-1/3).
    #[arg(long)]
    c_max: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// Regularization added to the smoothed covariances.
    #[arg(long)]
    nu: Option<f64>,
    /// Fixed bandwidth; skips cross-validation.
    #[arg(long)]
    bandwidth: Option<f64>,
}

impl KernelArgs {
    fn config(&self) -> Result<KernelConfig, CliError> {
        let mut cfg: KernelConfig = match &self.kernel_config {
            Some(path) => commands::read_config(path)?,
            None => KernelConfig::default(),
        };
        if let Some(k) = self.kernel {
            cfg.kernel = match k {
                KernelArg::Gaussian => Kernel::Gaussian,
                KernelArg::Triangular => Kernel::Triangular,
                KernelArg::Epanechnikov => Kernel::Epanechnikov,
            };
        }
        if let Some(b) = self.bandwidth_mode {
            cfg.bandwidth_mode = match b {
                BandwidthModeArg::Single => BandwidthMode::Single,
                BandwidthModeArg::PerCell => BandwidthMode::PerCell,
            };
        }
        if let Some(v) = self.c_min {
            cfg.c_min = v;
        }
        if let Some(v) = self.c_max {
            cfg.c_max = v;
        }
        if let Some(v) = self.grid_points {
            cfg.grid_points = v;
        }
        if let Some(v) = self.nu {
            cfg.nu = v;
        }
        if self.bandwidth.is_some() {
            cfg.fixed_bandwidth = self.bandwidth;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DatasetSpec,
    /// Autoregressive order.
    #[arg(long, short = 'p', default_value_t = 1)]
    order: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Als)]
    method: MethodArg,
    /// Volatility curve (JSON or TOML), required for GLS.
    #[arg(long)]
    vol: Option<PathBuf>,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Writes the cross-validation criterion over the bandwidth grid (ALS).
    #[arg(long)]
    cv_trace: Option<PathBuf>,
    /// Writes the fit report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    data: DatasetSpec,
    #[arg(long, short = 'p', default_value_t = 1)]
    order: usize,
    /// Numbers of autocorrelations tested.
    #[arg(long, short = 'm', value_delimiter = ',', default_value = "5,15")]
    m: Vec<usize>,
    /// Nominal size of the tests and bounds.
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    /// Known volatility curve; adds the GLS-based tests.
    #[arg(long)]
    vol: Option<PathBuf>,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Writes every test report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Writes robust and naive autocorrelation bounds as CSV.
    #[arg(long)]
    bounds: Option<PathBuf>,
    /// Residuals used for the bounds.
    #[arg(long, value_enum, default_value_t = MethodArg::Als)]
    bounds_method: MethodArg,
    /// Number of lags in the bounds file (default: largest m).
    #[arg(long)]
    bounds_m: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DgpArg {
    /// Bivariate VAR(2) of the simulation study.
    Var2,
    /// Bivariate VAR(1) with coefficient b I.
    Uncorrelated,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VolDesignArg {
    Iid,
    Break,
    Trend,
    ScalarTrend,
    ScalarBreak,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON or TOML simulation config; flags below are ignored when set.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DgpArg::Var2)]
    dgp: DgpArg,
    /// Second-lag coefficient of the VAR(2) design.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    a: f64,
    /// Coefficient of the uncorrelatedness design.
    #[arg(long, default_value_t = -0.3, allow_hyphen_values = true)]
    b: f64,
    #[arg(long, value_enum, default_value_t = VolDesignArg::Iid)]
    vol_design: VolDesignArg,
    /// Explicit volatility curve (JSON or TOML); overrides --vol-design.
    #[arg(long)]
    vol: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    burn_in: usize,
    /// Output CSV (default: standard output).
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct McArgs {
    /// Named design: table1..table4, power-iid, power-break, power-trend,
    /// uncorr-trend, uncorr-break.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON or TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads (0: all cores). Does not change results.
    #[arg(long)]
    workers: Option<usize>,
    /// Root seed of the replication streams.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    lens: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    ms: Option<Vec<usize>>,
    /// Summarize estimated weights instead of rejection rates (implied by table4).
    #[arg(long)]
    weights: bool,
    /// Directory for `<name>.csv`, `<name>.txt` and `<name>.json`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Two-regime volatility (JSON or TOML with s10, s11, s20, s21, tau1, tau2).
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, short = 'm', default_value_t = 3)]
    m: usize,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Diagnose(a) => commands::diagnose(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Mc(a) => commands::mc(a),
        Command::Oracle(a) => commands::oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hetport: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
