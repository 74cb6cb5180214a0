use std::path::PathBuf;
use std::process::ExitCode;

use bulkedge_core::{run_experiment, CutoffSpec, Error, ExperimentConfig, ExperimentId};
use clap::Parser;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Run one bulk-edge experiment and write its summary and CSV tables.
#[derive(Debug, Parser)]
#[command(name = "bulkedge", version)]
struct Cli {
    /// Experiment id, e.g. duality, landau-check, spectral-flow.
    #[arg(value_parser = parse_experiment)]
    experiment: ExperimentId,

    /// JSON config; a previous summary.json is accepted too.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed for every disorder sample.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory [default: out/<experiment>].
    #[arg(long)]
    out: Option<PathBuf>,

    /// Edge cutoff profile: linear or smoothstep.
    #[arg(long)]
    cutoff: Option<String>,

    /// Worker threads; falls back to BULKEDGE_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,

    /// Gap window E- E+ for streda and spectral-flow.
    #[arg(long, num_args = 2, value_names = ["E_MINUS", "E_PLUS"], allow_negative_numbers = true)]
    window: Option<Vec<f64>>,

    /// Number of k samples for spectral-flow.
    #[arg(long = "kcount")]
    k_count: Option<usize>,
}

fn parse_experiment(s: &str) -> Result<ExperimentId, String> {
    s.parse().map_err(|_| {
        let ids: Vec<&str> = ExperimentId::ALL.iter().map(|e| e.as_str()).collect();
        format!("expected one of: {}", ids.join(", "))
    })
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::new(cli.experiment),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(c) = &cli.cutoff {
        cfg.cutoff = Some(c.parse::<CutoffSpec>()?);
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(w) = &cli.window {
        cfg.window = Some([w[0], w[1]]);
    }
    if cli.k_count.is_some() {
        cfg.k_count = cli.k_count;
    }
    Ok(cfg)
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Output { .. } | Error::UnknownObservable(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(cli.experiment.as_str()));
    if out.exists() && !out.is_dir() {
        eprintln!("error: output path {} is not a directory", out.display());
        return ExitCode::from(EXIT_USAGE);
    }
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let output = match run_experiment(cli.experiment, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_for(&e));
        }
    };
    for c in &output.checks {
        println!("{c}");
    }
    if let Err(e) = output.write_artifacts(&out) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    println!("wrote {}", out.join("summary.json").display());
    if output.passed() {
        ExitCode::SUCCESS
    } else {
        eprintln!(
            "{} of {} checks failed",
            output.checks.iter().filter(|c| !c.pass).count(),
            output.checks.len()
        );
        ExitCode::from(EXIT_FAIL)
    }
}
