use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use treerisk_cli::config::parse_mode;
use treerisk_cli::{run, CliError, Command, Output, Precision, RunConfig};

#[derive(Parser)]
#[command(name = "treerisk", version, about = "Path-based contagion risk on regular trees")]
struct Args {
    /// Key-value config file; built-in defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for random profiles and simulation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (a directory for `figures`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo replications.
    #[arg(long, global = true)]
    reps: Option<u64>,
    /// Simulation mode: `independent` or `shared`.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Worker threads (defaults to all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print every number with full precision instead of 6 significant digits.
    #[arg(long, global = true)]
    full_precision: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Per-path contagion probabilities and expected compromised paths.
    Prob,
    /// Closed-form moments of the path count and of path, local and aggregate losses.
    Moments,
    /// Premiums under each configured principle.
    Price,
    /// Monte Carlo estimates next to their closed forms.
    Simulate,
    /// Exact-enumeration, factorization and quadrature checks.
    Verify,
    /// Full scenario sweep: probabilities, moments and premiums.
    Sweep,
    /// Plot-ready probability and local-loss series (writes two files).
    Figures,
    /// Print the effective configuration in canonical form.
    Config,
}

fn load(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::config(None, None, format!("cannot read {}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = args.reps {
        cfg.replications = reps;
    }
    if let Some(mode) = &args.mode {
        cfg.mode = parse_mode(mode).map_err(|m| CliError::config(None, Some("mode"), m))?;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_outputs(outputs: &[Output], dir_mode: bool, out: Option<&Path>, precision: Precision) -> Result<(), CliError> {
    if dir_mode {
        let dir = out.unwrap_or(Path::new("."));
        fs::create_dir_all(dir)?;
        for o in outputs {
            fs::write(dir.join(o.name), o.table.to_csv(precision)?)?;
        }
        return Ok(());
    }
    for o in outputs {
        let bytes = o.table.to_csv(precision)?;
        match out {
            Some(path) => fs::write(path, bytes)?,
            None => std::io::stdout().lock().write_all(&bytes)?,
        }
    }
    Ok(())
}

fn main_inner(args: &Args) -> Result<(), CliError> {
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::config(None, Some("threads"), e.to_string()))?;
    }
    let cfg = load(args)?;
    let precision = if args.full_precision { Precision::Full } else { Precision::Short };
    let command = match args.command {
        Cmd::Config => {
            print!("{}", cfg.to_canonical());
            return Ok(());
        }
        Cmd::Prob => Command::Prob,
        Cmd::Moments => Command::Moments,
        Cmd::Price => Command::Price,
        Cmd::Simulate => Command::Simulate,
        Cmd::Verify => Command::Verify,
        Cmd::Sweep => Command::Sweep,
        Cmd::Figures => Command::Figures,
    };
    let out = cfg.out.as_deref();
    match run(command, &cfg) {
        Err(CliError::VerificationFailed { failed, report }) => {
            let outputs = [Output { name: "verify.csv", table: report.clone() }];
            write_outputs(&outputs, false, out, precision)?;
            Err(CliError::VerificationFailed { failed, report })
        }
        result => write_outputs(&result?, command == Command::Figures, out, precision),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match main_inner(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("treerisk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
