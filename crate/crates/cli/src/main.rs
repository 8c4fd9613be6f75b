//! `simpson`: reversal sensitivity analysis for 2×2×2 contingency tables.

mod output;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use simpson_core::sampling::MIN_SAMPLE;
use simpson_core::verify::verify_theorems;
use simpson_core::{
    analyze_case, evaluate_table, run_conditional, run_unconditional, CellRounding,
    CollapsedTable, ContingencyTable, Error, Filter, Orientation, SamplerConfig,
};

use crate::output::Format;

const TABLE4_HELP: &str = "Observed 2x2 table as four counts a,b,c,d read column by column: \
(x=0,y=1),(x=1,y=1),(x=0,y=0),(x=1,y=0). X is the exposure, Y the outcome.";

const TABLE8_HELP: &str = "Full 2x2x2 table as eight counts in (x,w,y) order with y fastest: \
x0w0y0,x0w0y1,x0w1y0,x0w1y1,x1w0y0,x1w0y1,x1w1y0,x1w1y1.";

#[derive(Parser, Debug)]
#[command(name = "simpson", version, about = "Odds-ratio sensitivity analysis for reversals in 2x2x2 tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate P(reversal | condition) over tables uniform on the 7-simplex.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampler: SamplerFlags,
    },
    /// Estimate the same probabilities over all tables that collapse to an observed 2x2 table.
    SimulateConditional {
        #[arg(long, help = TABLE4_HELP)]
        table: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampler: SamplerFlags,
    },
    /// Odds-ratio threshold a confounder needs to reverse an observed association.
    Analyze {
        #[arg(long, help = TABLE4_HELP)]
        table: String,
        /// Upper bound on the odds ratio between the confounder and the outcome (> 1).
        #[arg(long = "or-wy")]
        or_wy: f64,
        /// Also run the conditional simulation on the observed table.
        #[arg(long)]
        simulate: bool,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampler: SamplerFlags,
    },
    /// Print measures, conditions, reversals and both least-squares fits of one table.
    Evaluate {
        #[arg(long, help = TABLE8_HELP)]
        table8: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Check the reversal/condition implications, the correlation bound and the
    /// least-squares cross-check on sampled tables.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of accepted tables.
    #[arg(long, default_value_t = 50_000)]
    n: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Output path, or `-` for stdout.
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args, Debug)]
struct SamplerFlags {
    /// Permit fewer than 30001 tables.
    #[arg(long)]
    allow_small: bool,
    /// W labeling used when conditions are evaluated.
    #[arg(long, value_enum, default_value_t = OrientationArg::AsSampled)]
    orientation: OrientationArg,
    #[arg(long, value_enum, default_value_t = FilterArg::OrXy)]
    filter: FilterArg,
    /// Cell-count rule for simplex points.
    #[arg(long, value_enum, default_value_t = RoundingArg::Ceiling)]
    rounding: RoundingArg,
    /// Rejections allowed before giving up (default 10 n + 1000).
    #[arg(long)]
    max_rejections: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OrientationArg {
    AsSampled,
    Canonical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FilterArg {
    OrXy,
    OrXyAndOrWy,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RoundingArg {
    Ceiling,
    StrictlyGreater,
}

impl SamplerFlags {
    fn config(&self, common: &Common) -> SamplerConfig {
        SamplerConfig {
            seed: common.seed,
            filter: match self.filter {
                FilterArg::OrXy => Filter::OrXyGt1,
                FilterArg::OrXyAndOrWy => Filter::OrXyAndOrWyGt1,
            },
            orientation: match self.orientation {
                OrientationArg::AsSampled => Orientation::AsSampled,
                OrientationArg::Canonical => Orientation::Canonical,
            },
            rounding: match self.rounding {
                RoundingArg::Ceiling => CellRounding::Ceiling,
                RoundingArg::StrictlyGreater => CellRounding::StrictlyGreater,
            },
            target_accepted: common.n,
            max_rejections: self.max_rejections,
            allow_small: self.allow_small,
        }
    }
}

/// Failure carrying its process exit code.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Budget(String),
    Io(io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Budget(m) => f.write_str(m),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::RejectionBudgetExceeded { .. } => CliError::Budget(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

fn parse_collapsed(s: &str) -> Result<CollapsedTable, CliError> {
    let parsed: CollapsedTable = s.parse()?;
    let table = CollapsedTable::from_column_order(*parsed.cells());
    if table.cells().contains(&0) {
        return Err(CliError::Usage(format!(
            "--table needs four positive counts, got {s}"
        )));
    }
    let margin = table.margin();
    if margin.cross_difference() <= 0 {
        return Err(CliError::Usage(format!(
            "--table must show a positive association (OR_XY > 1), got OR_XY = {:.4}",
            margin.odds_ratio()?
        )));
    }
    Ok(table)
}

fn check_size(cfg: &SamplerConfig) -> Result<(), CliError> {
    if !cfg.allow_small && cfg.target_accepted < MIN_SAMPLE {
        return Err(CliError::Usage(format!(
            "--n {} is below {MIN_SAMPLE}; pass --allow-small to run anyway",
            cfg.target_accepted
        )));
    }
    Ok(())
}

fn emit(out: &str, body: &str) -> Result<(), CliError> {
    if out == "-" {
        io::stdout().write_all(body.as_bytes())?;
    } else {
        fs::write(PathBuf::from(out), body)?;
    }
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("SIMPSON_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("SIMPSON_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Simulate { common, sampler } => {
            let cfg = sampler.config(&common);
            check_size(&cfg)?;
            let report = run_unconditional(&cfg)?;
            emit(&common.out, &output::simulation(&report, common.format))
        }
        Command::SimulateConditional {
            table,
            common,
            sampler,
        } => {
            let collapsed = parse_collapsed(&table)?;
            let cfg = sampler.config(&common);
            check_size(&cfg)?;
            let report = run_conditional(&collapsed, &cfg)?;
            emit(&common.out, &output::simulation(&report, common.format))
        }
        Command::Analyze {
            table,
            or_wy,
            simulate,
            common,
            sampler,
        } => {
            let collapsed = parse_collapsed(&table)?;
            if !(or_wy > 1.0 && or_wy.is_finite()) {
                return Err(CliError::Usage(format!(
                    "--or-wy must be a finite value greater than 1, got {or_wy}"
                )));
            }
            let cfg = sampler.config(&common);
            if simulate {
                check_size(&cfg)?;
            }
            let report = analyze_case(&collapsed, or_wy, simulate.then_some(&cfg))?;
            emit(&common.out, &output::case(&report, common.format))
        }
        Command::Evaluate {
            table8,
            format,
            out,
        } => {
            let table: ContingencyTable = table8.parse()?;
            let evaluation = evaluate_table(&table)?;
            emit(&out, &output::evaluation(&evaluation, format))
        }
        Command::Verify { common } => {
            let cfg = SamplerConfig {
                seed: common.seed,
                target_accepted: common.n,
                allow_small: true,
                ..SamplerConfig::default()
            };
            let report = verify_theorems(&cfg)?;
            emit(&common.out, &output::verification(&report, common.format))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
