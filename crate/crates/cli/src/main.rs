mod config;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use config::{ConfigError, ExperimentConfig};
use scenario::{scenario_registry, Outcome, RunError};

const EXIT_ASSERTION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(name = "intdim", version, about = "Intermediate-dimension experiments from config files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML or JSON config (or an earlier manifest).
    Run {
        config: PathBuf,
        /// Override the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the config's `out` or `intdim-out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_outputs(dir: &Path, cfg: &ExperimentConfig, outcome: &Outcome, passed: bool) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("results.csv"), &outcome.csv)?;

    let mut summary = format!("scenario: {}\nseed: {}\n", cfg.scenario, cfg.seed);
    for line in &outcome.summary {
        summary.push_str(line);
        summary.push('\n');
    }
    for c in &outcome.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        summary.push_str(&format!("[{tag}] {}: {}\n", c.name, c.detail));
    }
    summary.push_str(if passed { "status: ok\n" } else { "status: assertion failure\n" });
    std::fs::write(dir.join("summary.txt"), &summary)?;

    let canonical = cfg.canonical();
    let manifest = json!({
        "tool": "intdim",
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "config_sha256": sha256_hex(&serde_json::to_vec(&canonical).expect("json")),
        "config": canonical,
        "outputs": {
            "results.csv": sha256_hex(&outcome.csv),
            "summary.txt": sha256_hex(summary.as_bytes()),
        },
        "checks": outcome.checks.iter().map(|c| json!({
            "name": c.name, "passed": c.passed, "detail": c.detail,
        })).collect::<Vec<_>>(),
        "result": outcome.result,
        "passed": passed,
    });
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("json") + "\n",
    )
}

fn run(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<bool, (u8, String)> {
    let config_err = |e: ConfigError| (EXIT_CONFIG, format!("config error: {e}"));
    let mut cfg = ExperimentConfig::load(config).map_err(config_err)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("intdim-out"));
    let registry = scenario_registry();
    let scenario = registry
        .get(&cfg.scenario)
        .map_err(|e| (EXIT_CONFIG, format!("config error: {e}")))?;
    let outcome = scenario.run(&cfg).map_err(|e| match e {
        RunError::Config(e) => config_err(e),
        RunError::Core(e @ intdim::Error::ResourceCap { .. }) => (EXIT_RESOURCE, format!("resource cap: {e}")),
        RunError::Core(e) => (EXIT_CONFIG, format!("error: {e}")),
    })?;
    let passed = outcome.checks.iter().all(|c| c.passed);
    write_outputs(&dir, &cfg, &outcome, passed)
        .map_err(|e| (EXIT_CONFIG, format!("cannot write {}: {e}", dir.display())))?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for c in &outcome.checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("wrote {}", dir.display());
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, out } => match run(&config, seed, out) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(EXIT_ASSERTION),
            Err((code, msg)) => {
                eprintln!("{msg}");
                ExitCode::from(code)
            }
        },
    }
}
