use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use p2pcc_sim::{builtin, emit_csv, run, verify_lemma1, verify_lemma2, ScenarioConfig, BUILTIN_NAMES};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_VIOLATIONS: u8 = 3;

/// Simulate the P2P congestion controller and check its queue bounds.
#[derive(Parser, Debug)]
#[command(name = "p2pcc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a built-in or file-defined scenario and write its metrics as CSV.
    Run(RunArgs),
    /// Run the randomised queue-bound suites.
    Verify {
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the built-in scenario names.
    List,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Built-in scenario name (see `list`).
    #[arg(required_unless_present = "config", conflicts_with = "config")]
    scenario: Option<String>,
    /// Scenario JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for the scenario's random draws.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path. Defaults to `<scenario>.csv` in $P2PCC_OUT_DIR or the
    /// working directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Control period T, seconds.
    #[arg(long)]
    period: Option<f64>,
    /// Bandwidth estimation window t_c, seconds.
    #[arg(long)]
    bw_window: Option<f64>,
    /// Print the resolved scenario as JSON instead of running it.
    #[arg(long)]
    dump_config: bool,
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}\n\nUsage: p2pcc run <SCENARIO>|--config <FILE> [OPTIONS]\nRun `p2pcc --help` for details.");
    ExitCode::from(EXIT_USAGE)
}

fn resolve(args: &RunArgs) -> Result<ScenarioConfig, ExitCode> {
    let mut cfg = match (&args.scenario, &args.config) {
        (Some(name), _) => builtin(name, args.seed.unwrap_or(1)).map_err(usage_error)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage_error(format!("{}: {e}", path.display())))?;
            let mut cfg = ScenarioConfig::from_json(&text).map_err(usage_error)?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            cfg
        }
        (None, None) => return Err(usage_error("a scenario name or --config is required")),
    };
    let p = &mut cfg.controller;
    if let Some(v) = args.gamma {
        p.gamma = v;
    }
    if let Some(v) = args.gamma2 {
        p.gamma2 = v;
    }
    if let Some(v) = args.alpha {
        p.alpha = v;
    }
    if let Some(v) = args.period {
        p.period = v;
    }
    if let Some(v) = args.bw_window {
        p.bw_window = v;
    }
    cfg.validate().map_err(usage_error)?;
    Ok(cfg)
}

fn run_command(args: RunArgs) -> ExitCode {
    let cfg = match resolve(&args) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if args.dump_config {
        println!("{}", cfg.to_json());
        return ExitCode::SUCCESS;
    }
    let out = args.out.unwrap_or_else(|| {
        let dir = std::env::var_os("P2PCC_OUT_DIR").map(PathBuf::from).unwrap_or_default();
        dir.join(format!("{}.csv", cfg.name))
    });
    let started = Instant::now();
    let log = match run(&cfg) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    if let Err(e) = emit_csv(&log, &out) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_RUNTIME);
    }
    let s = &log.summary;
    println!(
        "scenario={} seed={} rows={} served={} dropped={} recalibrations={} elapsed_ms={} out={}",
        cfg.name,
        cfg.seed,
        log.rows.len(),
        s.served,
        s.dropped,
        s.dref_recalibrations.len(),
        started.elapsed().as_millis(),
        out.display()
    );
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run(args) => run_command(args),
        Command::Verify { trials, seed } => {
            let l1 = verify_lemma1(trials as usize, seed);
            let l2 = verify_lemma2(trials as usize, seed);
            print!("{}{}", l1.render(), l2.render());
            if l1.passed() && l2.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VIOLATIONS)
            }
        }
        Command::List => {
            for name in BUILTIN_NAMES {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
    }
}
