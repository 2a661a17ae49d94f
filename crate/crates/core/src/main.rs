use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use symradio::harness::{self, ExperimentConfig, Mutation, Scenario, FULL_REALIZATIONS};
use symradio::Error;

/// Beamforming studies for symbiotic radio.
#[derive(Parser)]
#[command(name = "symradio", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate region of the weighted sum-rate problem over the ρ grid.
    RateRegion(Common),
    /// PSR, CSR, CSR-LC and MISO rates over the SNR grid.
    SnrSweep(Common),
    /// Minimum transmit power over a grid of rate requirements.
    TpmSweep {
        #[command(flatten)]
        common: Common,
        /// Requirement to sweep; defaults to the config's scenario, else ε_c.
        #[arg(long, value_enum)]
        vary: Option<Vary>,
    },
    /// Run the self-check suite and print a JSON report.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Inject a known defect (test hook): psr_bd_rate, ncx2_pdf or
        /// solver_objective.
        #[arg(long)]
        mutate: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Vary {
    EpsC,
    EpsS,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (`.toml` is read as TOML, anything else as JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config's.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of channel realizations; overrides the config's.
    #[arg(long, conflicts_with = "full")]
    realizations: Option<usize>,
    /// Use the full 10^4 realizations.
    #[arg(long)]
    full: bool,
}

enum Failure {
    Config(String),
    Runtime(String),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParams(_) | Error::Parse(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn configure(common: &Common, scenario: impl Fn(Option<Scenario>) -> Scenario) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::for_scenario(scenario(None)),
    };
    cfg.scenario = scenario(Some(cfg.scenario));
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.full {
        cfg.realizations = FULL_REALIZATIONS;
    }
    if let Some(n) = common.realizations {
        cfg.realizations = n;
    }
    if let Some(out) = &common.out {
        cfg.output_path = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cfg: &ExperimentConfig, write: impl FnOnce(&mut dyn Write) -> symradio::Result<()>) -> Result<(), Failure> {
    match &cfg.output_path {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            let mut out = std::io::BufWriter::new(file);
            write(&mut out)?;
            out.flush().map_err(|e| Failure::Runtime(e.to_string()))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            write(&mut out)?;
        }
    }
    Ok(())
}

fn table(common: &Common, scenario: impl Fn(Option<Scenario>) -> Scenario) -> Result<(), Failure> {
    let cfg = configure(common, scenario)?;
    let t = harness::run(&cfg)?;
    emit(&cfg, |out| harness::write_csv(out, &cfg, &t))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::RateRegion(common) => table(&common, |_| Scenario::RateRegion),
        Command::SnrSweep(common) => table(&common, |_| Scenario::SnrSweep),
        Command::TpmSweep { common, vary } => table(&common, |current| match (vary, current) {
            (Some(Vary::EpsC), _) => Scenario::TpmEpsCSweep,
            (Some(Vary::EpsS), _) => Scenario::TpmEpsSSweep,
            (None, Some(s @ (Scenario::TpmEpsCSweep | Scenario::TpmEpsSSweep))) => s,
            (None, _) => Scenario::TpmEpsCSweep,
        }),
        Command::Validate { common, mutate } => {
            let mutation = mutate.as_deref().map(str::parse::<Mutation>).transpose()?;
            let cfg = configure(&common, |_| Scenario::Validate)?;
            let report = harness::run_validation(&cfg, mutation)?;
            emit(&cfg, |out| {
                writeln!(out, "{}", report.to_json())?;
                Ok(())
            })?;
            if report.passed {
                Ok(())
            } else {
                eprintln!("validation failed: {}", report.failed().join(", "));
                Err(Failure::Validation)
            }
        }
    }
}

fn main() -> ExitCode {
    // Usage errors count as invalid configuration (exit 1); exit 2 is
    // reserved for validation failures, so clap's default code is replaced.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg) | Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Validation) => ExitCode::from(2),
    }
}
