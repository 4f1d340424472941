//! `cloudexp`: exponents, capacity, jump rate, sweeps, simulation and
//! self-validation from the command line.
//!
//! Exit status is 0 on success, 1 when a computation or validation check
//! fails and 2 on bad usage or unreadable input. `CLOUDEXP_THREADS` sets the
//! worker count.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cloud_exponents::io::{
    parse_channel_file, parse_experiment, parse_inline_channel, parse_input_choice,
    parse_settings_file, run_sweep, ExperimentSpec, InputChoice, Quantity, Range, SimSection,
};
use cloud_exponents::{run_validation, Channel, Level, SolverSettings};

#[derive(Parser)]
#[command(
    name = "cloudexp",
    version,
    about = "Exponents and capacity of random cloud-channel ensembles"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Channel file, or an inline matrix with rows separated by `;`
    #[arg(long, global = true)]
    channel: Option<String>,
    /// Input law `p1,p2,...`, or `optimize`
    #[arg(long = "input-dist", global = true)]
    input_dist: Option<String>,
    #[arg(long, global = true)]
    rate: Option<f64>,
    /// Cloud exponent; repeat for several values
    #[arg(long = "cloud-k", global = true)]
    cloud_k: Vec<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the table here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Solver settings file
    #[arg(long, global = true)]
    settings: Option<PathBuf>,
    /// Rates, cloud exponents and exponents in bits
    #[arg(long, global = true)]
    bits: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Achievable, converse and correct-decoding exponents at one rate
    Exponent,
    /// Ensemble capacity C(W, K)
    Capacity,
    /// Rate below which the converse bound is infinite
    Rmin,
    /// Run an experiment file
    Sweep { spec: PathBuf },
    /// Monte Carlo error probability of the ensemble
    Simulate {
        /// Block length; repeat for several
        #[arg(short, long = "n", required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 100)]
        transmissions: usize,
        /// Lower bound on the number of messages
        #[arg(long = "message-floor")]
        message_floor: Option<u64>,
        /// Also run the type-based decoder
        #[arg(long)]
        suboptimal: bool,
    },
    /// Run the self-check battery and print a JSON report
    Validate {
        #[arg(long)]
        full: bool,
        /// Extra channel files to sanity-check
        channels: Vec<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Compute(String),
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("CLOUDEXP_THREADS") {
        let threads = match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => t,
            _ => {
                eprintln!("error: CLOUDEXP_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        };
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    let c = &cli.common;
    match &cli.command {
        Command::Validate { full, channels } => {
            let level = if *full { Level::Full } else { Level::Quick };
            let report = run_validation(level, channels);
            for f in report.failures() {
                eprintln!(
                    "FAIL [{}] {}: observed {} expected {} tolerance {} {}",
                    f.stage, f.name, f.observed, f.expected, f.tolerance, f.detail
                );
            }
            emit(c.out.as_deref(), &(report.to_json() + "\n"))?;
            Ok(ExitCode::from(if report.passed { 0 } else { 1 }))
        }
        Command::Sweep { spec } => {
            let text = std::fs::read_to_string(spec)
                .map_err(|e| usage(format!("{}: {e}", spec.display())))?;
            let text = match &c.channel {
                Some(ch) => format!("{text}\n{}\n", channel_line(ch)?),
                None => text,
            };
            let mut s = parse_experiment(&text, spec.parent()).map_err(usage)?;
            if let Some(d) = &c.input_dist {
                s.input = parse_input_choice(d).map_err(usage)?;
            }
            if !c.cloud_k.is_empty() {
                s.cloud_ks = c.cloud_k.clone();
            }
            if let Some(r) = c.rate {
                s.rates = Some(Range::new(r, r, 1.0).map_err(usage)?);
            }
            if let Some(seed) = c.seed {
                s.seed = seed;
            }
            if let Some(p) = &c.settings {
                s.settings = parse_settings_file(p).map_err(usage)?;
            }
            if c.out.is_some() {
                s.output = c.out.clone();
            }
            s.bits |= c.bits;
            sweep(&s)
        }
        Command::Exponent => {
            let rate = c.rate.ok_or_else(|| usage("--rate is required"))?;
            let mut s = base_spec(
                c,
                vec![Quantity::Achievable, Quantity::Converse, Quantity::Correct],
            )?;
            s.rates = Some(Range::new(rate, rate, 1.0).map_err(usage)?);
            sweep(&s)
        }
        Command::Capacity => sweep(&base_spec(c, vec![Quantity::Capacity])?),
        Command::Rmin => sweep(&base_spec(c, vec![Quantity::Rmin])?),
        Command::Simulate {
            n,
            instances,
            transmissions,
            message_floor,
            suboptimal,
        } => {
            let rate = c.rate.ok_or_else(|| usage("--rate is required"))?;
            let mut s = base_spec(c, vec![Quantity::Simulate])?;
            s.rates = Some(Range::new(rate, rate, 1.0).map_err(usage)?);
            s.sim = SimSection {
                block_lengths: n.clone(),
                instances: *instances,
                transmissions: *transmissions,
                message_floor: *message_floor,
                suboptimal: *suboptimal,
            };
            sweep(&s)
        }
    }
}

/// A `channel` or `channel_file` line for an experiment file, resolving
/// relative paths against the working directory.
fn channel_line(arg: &str) -> Result<String, Failure> {
    let p = Path::new(arg);
    if p.exists() {
        let abs = std::path::absolute(p).map_err(usage)?;
        Ok(format!("channel_file = {}", abs.display()))
    } else if arg.contains(';') {
        Ok(format!("channel = {arg}"))
    } else {
        Err(usage(format!("channel file {arg:?} not found")))
    }
}

fn load_channel(arg: &str) -> Result<Channel, Failure> {
    if Path::new(arg).exists() {
        parse_channel_file(arg).map_err(|e| usage(format!("{arg}: {e}")))
    } else if arg.contains(';') {
        parse_inline_channel(arg).map_err(usage)
    } else {
        Err(usage(format!("channel file {arg:?} not found")))
    }
}

fn base_spec(c: &Common, quantities: Vec<Quantity>) -> Result<ExperimentSpec, Failure> {
    let channel = load_channel(
        c.channel
            .as_deref()
            .ok_or_else(|| usage("--channel is required"))?,
    )?;
    if c.cloud_k.is_empty() {
        return Err(usage("--cloud-k is required"));
    }
    let input = match &c.input_dist {
        Some(d) => parse_input_choice(d).map_err(usage)?,
        None => InputChoice::Optimize,
    };
    let settings = match &c.settings {
        Some(p) => parse_settings_file(p).map_err(usage)?,
        None => SolverSettings::default(),
    };
    Ok(ExperimentSpec {
        channel,
        input,
        cloud_ks: c.cloud_k.clone(),
        rates: None,
        quantities,
        settings,
        output: c.out.clone(),
        seed: c.seed.unwrap_or(0),
        bits: c.bits,
        sim: SimSection::default(),
    })
}

fn sweep(s: &ExperimentSpec) -> Result<ExitCode, Failure> {
    // shape errors (mixed tables, memory budget) are the caller's fault
    let out = run_sweep(s).map_err(usage)?;
    emit(s.output.as_deref(), &out.csv)?;
    if out.failures > 0 {
        return Err(Failure::Compute(format!(
            "{} of {} rows failed",
            out.failures, out.rows
        )));
    }
    Ok(ExitCode::SUCCESS)
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
