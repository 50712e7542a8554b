//! `sbmlab`: batch runner for subordinate Brownian motion experiments.

mod config;
mod experiments;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sbmlab_core::rng::DEFAULT_SEED;
use sbmlab_core::Verdict;
use serde_json::json;

use config::{ExperimentConfig, CATALOG};

const EXIT_FAIL: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_ERROR: u8 = 1;

#[derive(Parser)]
#[command(name = "sbmlab", version, about = "Subordinate Brownian motion experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Master seed; overrides SBMLAB_SEED and the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output root directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the available experiments.
    List,
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::List => {
            for (name, desc) in CATALOG {
                println!("{name:<24}{desc}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config) {
            Ok(_) => {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { config, seed, out } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let (seed, source) = match resolve_seed(seed, &cfg) {
                Ok(s) => s,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return ExitCode::from(EXIT_USAGE);
                }
            };
            run(&cfg, seed, source, out)
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_USAGE)
    })?;
    ExperimentConfig::parse(&text).map_err(|errs| {
        for e in errs {
            eprintln!("error: {e}");
        }
        ExitCode::from(EXIT_USAGE)
    })
}

fn resolve_seed(flag: Option<u64>, cfg: &ExperimentConfig) -> Result<(u64, &'static str), String> {
    if let Some(s) = flag {
        return Ok((s, "flag"));
    }
    if let Ok(v) = std::env::var("SBMLAB_SEED") {
        return v
            .trim()
            .parse()
            .map(|s| (s, "env"))
            .map_err(|_| format!("SBMLAB_SEED: '{v}' is not an unsigned integer"));
    }
    Ok(match cfg.mc.seed {
        Some(s) => (s, "config"),
        None => (DEFAULT_SEED, "default"),
    })
}

fn run(cfg: &ExperimentConfig, seed: u64, source: &str, out: Option<PathBuf>) -> ExitCode {
    let root = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("runs"));
    let tag = cfg.tag.clone().unwrap_or_else(|| format!("seed-{seed}"));
    let dir = root.join(&cfg.experiment).join(&tag);

    let outcome = match experiments::run(cfg, seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}: {e}", cfg.experiment);
            return ExitCode::from(EXIT_ERROR);
        }
    };

    let mut files: Vec<String> = vec!["report.json".into()];
    files.extend(outcome.csv.iter().map(|(n, _)| n.clone()));
    let manifest = json!({
        "tool": "sbmlab",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment,
        "tag": tag,
        "seed": seed,
        "seed_source": source,
        "config": cfg,
        "files": files,
    });
    let report = json!({
        "experiment": cfg.experiment,
        "verdict": outcome.verdict,
        "summary": outcome.summary,
        "results": outcome.results,
    });

    let write = || -> std::io::Result<()> {
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("manifest.json"), pretty(&manifest))?;
        fs::write(dir.join("report.json"), pretty(&report))?;
        for (name, body) in &outcome.csv {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    };
    if let Err(e) = write() {
        eprintln!("error: cannot write {}: {e}", dir.display());
        return ExitCode::from(EXIT_ERROR);
    }

    println!("{} {}: {}", outcome.verdict, cfg.experiment, outcome.summary);
    println!("output: {}", dir.display());
    match outcome.verdict {
        Verdict::Pass => ExitCode::SUCCESS,
        Verdict::Fail => ExitCode::from(EXIT_FAIL),
        Verdict::Inconclusive => ExitCode::from(EXIT_INCONCLUSIVE),
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}
