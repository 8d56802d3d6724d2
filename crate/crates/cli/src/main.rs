//! Batch experiment runner.
//!
//! Usage: `rwpot <experiment> --config PATH [--seed N] [--out DIR] [--threads N]`
//! with experiments lyapunov | rate | compare | criterion | percolation |
//! ldp | stats. Environment overrides: `RWPOT_OUT` (output directory) and
//! `RWPOT_THREADS` (worker count); command-line flags beat both.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 config error,
//! 3 resource/budget error.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use config::Config;
use run::run;

const USAGE: &str = "\
rwpot — random-potential walk experiments

USAGE:
  rwpot <EXPERIMENT> --config PATH [--seed N] [--out DIR] [--threads N]

EXPERIMENTS:
  lyapunov     sample a Lyapunov curve λ ↦ exponent of the shifted potential
  rate         curve plus rate-function values and λ* thresholds
  compare      coupled strict-dominance gap measurement
  criterion    d=1 annealed regime decision (strict gap / coincide)
  percolation  chemical-distance norm estimates on level-set percolation
  ldp          d=1 dynamic-programming endpoint check of the path measure
  stats        white-box probabilities and κ-good crossing statistics

FLAGS:
  --config PATH   experiment config (flat key = value text; required)
  --seed N        override the config seed
  --out DIR       output directory (default: config `out`, else `.`)
  --threads N     worker count (0 = library default)

Environment: RWPOT_OUT and RWPOT_THREADS override config values; flags win.
A run writes its CSV artifacts plus manifest.txt; rerunning any experiment
from its manifest reproduces the CSVs byte for byte.
";

struct Args {
    kind: String,
    config_path: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
}

fn parse_args() -> Result<Args, String> {
    let mut argv = std::env::args().skip(1);
    let kind = match argv.next() {
        Some(k) if k == "--help" || k == "-h" => {
            print!("{USAGE}");
            std::process::exit(0);
        }
        Some(k) => k,
        None => return Err("missing experiment subcommand".into()),
    };
    let mut config_path = None;
    let mut seed = None;
    let mut out = None;
    let mut threads = None;
    while let Some(arg) = argv.next() {
        match arg.as_str() {
            "--config" | "-c" => {
                config_path = Some(PathBuf::from(
                    argv.next().ok_or("missing value for --config")?,
                ))
            }
            "--seed" => {
                seed = Some(
                    argv.next()
                        .ok_or("missing value for --seed")?
                        .parse()
                        .map_err(|_| "--seed must be an unsigned integer")?,
                )
            }
            "--out" => out = Some(PathBuf::from(argv.next().ok_or("missing value for --out")?)),
            "--threads" => {
                threads = Some(
                    argv.next()
                        .ok_or("missing value for --threads")?
                        .parse()
                        .map_err(|_| "--threads must be an unsigned integer")?,
                )
            }
            "--help" | "-h" => {
                print!("{USAGE}");
                std::process::exit(0);
            }
            other => return Err(format!("unknown flag `{other}`")),
        }
    }
    Ok(Args {
        kind,
        config_path: config_path.ok_or("--config is required")?,
        seed,
        out,
        threads,
    })
}

fn main() -> ExitCode {
    let args = match parse_args() {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}\n\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    let text = match std::fs::read_to_string(&args.config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config_path.display());
            return ExitCode::from(2);
        }
    };
    let config = match Config::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    // Precedence: flag > environment > config > default.
    let seed = args
        .seed
        .or_else(|| config.str_opt("seed").and_then(|s| s.parse().ok()))
        .unwrap_or(0);
    let out_dir = args
        .out
        .or_else(|| std::env::var("RWPOT_OUT").ok().map(PathBuf::from))
        .or_else(|| config.str_opt("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let threads = args
        .threads
        .or_else(|| {
            std::env::var("RWPOT_THREADS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .or_else(|| config.str_opt("threads").and_then(|s| s.parse().ok()))
        .unwrap_or(0);
    let active = rwpot_core::exec::configure_threads(threads);

    match run(&args.kind, &config, &out_dir, seed, active) {
        Ok(output) => {
            for line in &output.summary {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
