//! Runs every acceptance experiment at its default configuration and prints
//! one line per criterion. Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use bulkedge_core::{run_experiment, ExperimentConfig, ExperimentId};

const CRITERIA: [(u32, &str, &[ExperimentId]); 11] = [
    (1, "Landau oracle", &[ExperimentId::LandauCheck]),
    (2, "positive-T duality", &[ExperimentId::Duality]),
    (3, "magnetization equals edge current", &[ExperimentId::Mequalsi]),
    (4, "cutoff independence", &[ExperimentId::GIndependence]),
    (5, "equilibrium current", &[ExperimentId::Equilibrium]),
    (6, "zero-temperature limit", &[ExperimentId::ZeroT]),
    (7, "topological triple", &[ExperimentId::Streda, ExperimentId::SpectralFlow]),
    (8, "edge-potential invariance", &[ExperimentId::EdgePerturb]),
    (9, "profile behavior", &[ExperimentId::Profile]),
    (10, "Birkhoff equivalence", &[ExperimentId::Birkhoff]),
    (11, "engineering determinism", &[ExperimentId::Sweep]),
];

fn main() -> ExitCode {
    // `cargo test -- <filter>` runs only criteria whose number or id matches.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (n, title, ids) in CRITERIA {
        let selected = filter.is_empty()
            || filter
                .iter()
                .any(|f| *f == n.to_string() || ids.iter().any(|id| id.as_str() == f));
        if !selected {
            continue;
        }
        let start = Instant::now();
        let mut pass = true;
        let mut details = Vec::new();
        for &id in ids {
            match run_experiment(id, &ExperimentConfig::new(id)) {
                Ok(out) => {
                    pass &= out.passed();
                    details.extend(out.checks.iter().map(|c| format!("    [{id}] {c}")));
                }
                Err(e) => {
                    pass = false;
                    details.push(format!("    [{id}] error: {e}"));
                }
            }
        }
        println!(
            "criterion {n:>2} {title}: {} ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for d in details {
            println!("{d}");
        }
        if !pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
