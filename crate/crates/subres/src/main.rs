use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use subres::instance::{LiftChoice, Mode};
use subres::{run, Command, Overrides, PARSE_EXIT};

/// Sub-resonance normal forms of contracting extensions over finite bases.
#[derive(Debug, Parser)]
#[command(name = "subres", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Spectral constants, narrowness and criticality.
    Constants(Args),
    /// Constants plus adapted-form, spectrum and contraction checks.
    Validate(Args),
    /// Taylor normal form and its resonance reduction.
    Build(Args),
    /// Resonance reduction of fiber polynomials given as sub-resonance normal forms.
    Reduce(Args),
    /// Build, then evaluate the coordinate change by the invariance limit.
    Eval(Args),
    /// Build, then run the uniqueness and centralizer suites.
    Verify(Args),
    /// Every stage.
    All(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    /// Instance file (JSON).
    instance: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, value_enum)]
    lift: Option<LiftChoice>,
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluator stopping tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Evaluator iteration limit.
    #[arg(long = "kmax")]
    k_max: Option<usize>,
    /// Random samples per base point.
    #[arg(long)]
    samples: Option<usize>,
    /// Sampling radius, at most sigma.
    #[arg(long)]
    radius: Option<f64>,
    /// Continue past validation failures.
    #[arg(long)]
    force: bool,
    /// Report path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock stage timings in the report.
    #[arg(long)]
    timings: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { PARSE_EXIT } else { 0 });
        }
    };
    let (command, args) = match cli.command {
        Cmd::Constants(a) => (Command::Constants, a),
        Cmd::Validate(a) => (Command::Validate, a),
        Cmd::Build(a) => (Command::Build, a),
        Cmd::Reduce(a) => (Command::Reduce, a),
        Cmd::Eval(a) => (Command::Eval, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::All(a) => (Command::All, a),
    };
    let text = match fs::read_to_string(&args.instance) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.instance.display());
            return ExitCode::from(PARSE_EXIT);
        }
    };
    let overrides = Overrides {
        mode: args.mode,
        lift: args.lift,
        seed: args.seed,
        tol: args.tol,
        k_max: args.k_max,
        samples: args.samples,
        radius: args.radius,
        force: args.force,
        timings: args.timings,
    };
    let outcome = match run(command, &text, &overrides) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}: {e}", args.instance.display());
            return ExitCode::from(PARSE_EXIT);
        }
    };
    let json = outcome.report.to_json();
    match &args.out {
        Some(path) => {
            if let Err(e) = fs::write(path, json) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(PARSE_EXIT);
            }
        }
        None => print!("{json}"),
    }
    eprint!("{}", outcome.report.summary());
    ExitCode::from(outcome.status.code())
}
