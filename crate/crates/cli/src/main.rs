//! Command-line front end: CSV in, fitted models, risk numbers, diagnostics
//! tables, and simulation studies out.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/model error. Results go to
//! stdout (or `--out`); diagnostics go to stderr. Every randomized command
//! takes an explicit `--seed` with a fixed default, never the clock.

mod cmds;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tailmix::study::{CopulaConfig, CopulaStructure, ModelId, PopulationSpec, TwoStepMapping};

/// Fixed default seed for every randomized command.
pub const DEFAULT_SEED: u64 = 20190501;

#[derive(Parser)]
#[command(
    name = "tailmix",
    version,
    about = "Extreme value mixture models, GARCH filtering, and tail risk measures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Log,
    Arithmetic,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TailFractionArg {
    /// Tail mass from the bulk CDF at the threshold.
    Bulk,
    /// Tail mass estimated as a free parameter.
    Parameterized,
}

#[derive(Clone, Copy, ValueEnum)]
enum RiskMethodArg {
    Empirical,
    Model,
    Mc,
    TwoStep,
}

#[derive(Clone, Copy, ValueEnum)]
enum MappingArg {
    /// Long-run filter scale (stationary variance).
    Unconditional,
    /// One-step-ahead forecast scale.
    Forecast,
}

impl MappingArg {
    fn to_mapping(self) -> TwoStepMapping {
        match self {
            MappingArg::Unconditional => TwoStepMapping::UnconditionalScale,
            MappingArg::Forecast => TwoStepMapping::ForecastScale,
        }
    }
}

/// Threshold-grid and fit options shared by the fitting commands.
#[derive(Args, Clone)]
struct FitArgs {
    /// Mixture model, e.g. normGPD, gammaGPDcon, GNG, kernelGPD
    #[arg(long, value_parser = parse_model_no_garch)]
    model: ModelId,
    /// Tail-fraction handling
    #[arg(long, value_enum, default_value = "bulk")]
    tail_fraction: TailFractionArg,
    /// Kernel bulk bandwidth; chosen by cross-validation when omitted
    #[arg(long)]
    bandwidth: Option<f64>,
    /// First threshold candidate, as an empirical quantile level
    #[arg(long, default_value_t = 0.50)]
    grid_start: f64,
    /// Last threshold candidate, as an empirical quantile level
    #[arg(long, default_value_t = 0.95)]
    grid_end: f64,
    /// Quantile step between threshold candidates
    #[arg(long, default_value_t = 0.025)]
    grid_step: f64,
    /// Minimum exceedances a candidate threshold must keep per tail
    #[arg(long, default_value_t = 10)]
    min_exceedances: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a price series into returns
    Returns {
        /// Input CSV: one value column, or (date, value)
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "log")]
        kind: KindArg,
        /// Negate into losses
        #[arg(long)]
        loss: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Descriptive statistics of a series
    Describe {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit an extreme value mixture model with the threshold as a parameter
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a GARCH(1,1) with constant mean by Gaussian quasi-MLE
    Garch {
        #[arg(long = "in")]
        input: PathBuf,
        /// Also write standardized residuals, one per line
        #[arg(long)]
        residuals_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-step fit: GARCH filter, then a mixture on the residuals
    TwoStep {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
        /// Shift residuals onto positive support for positive-only bulks
        #[arg(long)]
        shift_residuals: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// VaR and expected shortfall of a loss series
    Risk {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.99)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "empirical")]
        method: RiskMethodArg,
        /// Mixture model for model/mc/two-step methods
        #[arg(long, value_parser = parse_model_no_garch)]
        model: Option<ModelId>,
        /// Monte Carlo draws for the mc method
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Shift residuals onto positive support (two-step method)
        #[arg(long)]
        shift_residuals: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Threshold diagnostics as plot-ready CSV
    Diagnose {
        #[arg(long = "in")]
        input: PathBuf,
        /// Mean residual life table
        #[arg(long, conflicts_with = "stability")]
        mrl: bool,
        /// Threshold stability table (GPD shape and modified scale)
        #[arg(long)]
        stability: bool,
        /// Number of thresholds in the default grid
        #[arg(long, default_value_t = 40)]
        grid_count: usize,
        /// Highest threshold, as an empirical quantile level
        #[arg(long, default_value_t = 0.975)]
        max_quantile: f64,
        #[arg(long, default_value_t = 10)]
        min_exceedances: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replicated sampling study: RMSE of tail-quantile estimates
    SimulateStudy {
        /// Population, e.g. 'norm(0,4)', 'student(5,0)', 'gumbel(5)',
        /// 'weibull(5,2)', 'reverseweibull(5,2)', 'gamma(5,1)'
        #[arg(long, value_parser = parse_population)]
        pop: PopulationSpec,
        /// Comma-separated model list, e.g. 'GNG,normGPD,gammaGPD GARCH'
        #[arg(long, value_delimiter = ',', value_parser = parse_model, required = true)]
        models: Vec<ModelId>,
        #[arg(long, default_value_t = 500)]
        replicates: usize,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Comma-separated quantile levels
        #[arg(long, value_delimiter = ',',
              default_value = "0.001,0.01,0.05,0.1,0.9,0.95,0.99,0.999")]
        levels: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Dependence: 'ar1:<rho>', 'ar1' (rho uniform per replicate),
        /// or 'randompsd[:factors]'; omitted means iid
        #[arg(long, value_parser = parse_dependence)]
        dependence: Option<CopulaConfig>,
        #[arg(long, value_enum, default_value = "unconditional")]
        two_step_mapping: MappingArg,
        /// Fixed kernel bandwidth (fast mode for kernelGPD)
        #[arg(long)]
        kernel_bandwidth: Option<f64>,
        /// Worker threads for the replicate loop
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_model(s: &str) -> Result<ModelId, String> {
    ModelId::parse(s).map_err(|e| e.to_string())
}

fn parse_model_no_garch(s: &str) -> Result<ModelId, String> {
    let id = parse_model(s)?;
    if id.garch {
        return Err(format!(
            "'{s}': GARCH variants are not valid here; use the two-step command"
        ));
    }
    Ok(id)
}

/// Populations in the notation of the study tables: family(param, param).
fn parse_population(s: &str) -> Result<PopulationSpec, String> {
    use tailmix::dist::BulkFamily;
    let trimmed = s.trim();
    let open = trimmed
        .find('(')
        .ok_or_else(|| format!("'{s}': expected family(params)"))?;
    if !trimmed.ends_with(')') {
        return Err(format!("'{s}': missing closing parenthesis"));
    }
    let name = trimmed[..open].trim().to_ascii_lowercase();
    let args: Result<Vec<f64>, _> = trimmed[open + 1..trimmed.len() - 1]
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect();
    let args = args.map_err(|e| format!("'{s}': {e}"))?;
    let expect = |k: usize| -> Result<(), String> {
        if args.len() == k {
            Ok(())
        } else {
            Err(format!("'{s}': expected {k} parameter(s), got {}", args.len()))
        }
    };
    let family = match name.as_str() {
        "norm" | "normal" => {
            expect(2)?;
            BulkFamily::normal(args[0], args[1])
        }
        "student" | "t" => {
            expect(2)?;
            BulkFamily::student_t(args[0], args[1])
        }
        "gumbel" => {
            expect(1)?;
            BulkFamily::gumbel(0.0, args[0])
        }
        "weibull" => {
            expect(2)?;
            BulkFamily::weibull(args[1], args[0])
        }
        "reverseweibull" | "rweibull" => {
            expect(2)?;
            BulkFamily::reverse_weibull(args[1], args[0])
        }
        "gamma" => {
            expect(2)?;
            BulkFamily::gamma(args[0], args[1])
        }
        "lognormal" => {
            expect(2)?;
            BulkFamily::log_normal(args[0], args[1])
        }
        other => return Err(format!("unknown population family '{other}'")),
    }
    .map_err(|e| e.to_string())?;
    Ok(PopulationSpec::iid(trimmed.to_string(), family))
}

fn parse_dependence(s: &str) -> Result<CopulaConfig, String> {
    let lower = s.trim().to_ascii_lowercase();
    let structure = if lower == "ar1" {
        CopulaStructure::Ar1Uniform
    } else if let Some(rest) = lower.strip_prefix("ar1:") {
        let rho: f64 = rest.parse().map_err(|e| format!("'{s}': {e}"))?;
        CopulaStructure::Ar1 { rho }
    } else if lower == "randompsd" {
        CopulaStructure::RandomPsd { factors: 5 }
    } else if let Some(rest) = lower.strip_prefix("randompsd:") {
        let factors: usize = rest.parse().map_err(|e| format!("'{s}': {e}"))?;
        CopulaStructure::RandomPsd { factors }
    } else {
        return Err(format!(
            "'{s}': expected 'ar1:<rho>', 'ar1', or 'randompsd[:factors]'"
        ));
    };
    let cfg = CopulaConfig {
        structure,
        ..CopulaConfig::default()
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    return ExitCode::SUCCESS;
                }
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cmds::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
