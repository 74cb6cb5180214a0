use bulkedge_core::ensemble::{aggregate, task_seed, Axis, SweepGeometry};
use bulkedge_core::landau::{landau_thermo, LandauParams};
use bulkedge_core::{
    run_experiment, run_sweep, CutoffSpec, ExperimentConfig, ExperimentId, ModelParams, ObservableRegistry,
    SweepPlan,
};
use proptest::prelude::*;

fn landau_plan() -> SweepPlan {
    let mut plan = SweepPlan::new(
        "landau",
        ModelParams::landau(1.0, 1.0, 0.1),
        SweepGeometry {
            h: 0.5,
            circumference: 4.0,
            height: 4.0,
        },
    );
    plan.b = vec![0.5, 1.0, 2.0];
    plan.mu = vec![0.4, 1.1];
    plan.master_seed = 11;
    plan
}

#[test]
fn landau_sweep_matches_closed_form_at_any_width() {
    let registry = ObservableRegistry::builtin();
    let mut plan = landau_plan();
    plan.threads = Some(1);
    let one = run_sweep(&plan, &registry).unwrap();
    plan.threads = Some(5);
    let five = run_sweep(&plan, &registry).unwrap();
    assert_eq!(one.to_csv_bytes().unwrap(), five.to_csv_bytes().unwrap());
    assert_eq!(one.rows.len(), 6);
    let col = one.column("n").unwrap();
    for row in &one.rows {
        let t = &row.task;
        let exact = landau_thermo(&LandauParams::new(t.b, t.mu, t.temperature).unwrap()).n;
        assert_eq!(row.values.as_ref().unwrap()[col], exact);
    }
    let groups = aggregate(&one, &[Axis::B]).unwrap();
    let n_groups: Vec<_> = groups.iter().filter(|g| g.column == "n").collect();
    assert_eq!(n_groups.len(), 3);
    assert!(n_groups.iter().all(|g| g.n == 2));
}

#[test]
fn resolved_config_reproduces_the_run() {
    let mut cfg = ExperimentConfig::new(ExperimentId::LandauCheck);
    cfg.options = serde_json::json!({ "numeric": false, "lattice": { "b": [1.0], "mu": [0.7], "T": [0.1] } });
    let first = run_experiment(ExperimentId::LandauCheck, &cfg).unwrap();
    assert!(first.passed());
    let again = run_experiment(ExperimentId::LandauCheck, &first.resolved_config).unwrap();
    assert_eq!(
        serde_json::to_string(&first).unwrap(),
        serde_json::to_string(&again).unwrap()
    );
}

#[test]
fn mismatched_experiment_is_rejected() {
    let cfg = ExperimentConfig::new(ExperimentId::Streda);
    assert!(run_experiment(ExperimentId::Profile, &cfg).is_err());
}

proptest! {
    #[test]
    fn cutoffs_are_monotone(a in -0.5f64..1.5, b in -0.5f64..1.5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for c in [CutoffSpec::Linear, CutoffSpec::default()] {
            prop_assert!(c.eval(lo) >= c.eval(hi));
            prop_assert!((0.0..=1.0).contains(&c.eval(lo)));
        }
    }

    #[test]
    fn landau_density_grows_with_mu(b in 0.3f64..3.0, mu in -1.0f64..5.0, dmu in 0.01f64..1.0, t in 0.05f64..1.0) {
        let lo = landau_thermo(&LandauParams::new(b, mu, t).unwrap());
        let hi = landau_thermo(&LandauParams::new(b, mu + dmu, t).unwrap());
        prop_assert!(hi.n > lo.n);
        prop_assert!(hi.p > lo.p);
    }

    #[test]
    fn task_seeds_separate_keys(master in any::<u64>(), a in "[a-z=|.0-9]{1,24}", b in "[a-z=|.0-9]{1,24}") {
        prop_assume!(a != b);
        prop_assert_ne!(task_seed(master, &a), task_seed(master, &b));
        prop_assert_eq!(task_seed(master, &a), task_seed(master, &a));
    }
}
