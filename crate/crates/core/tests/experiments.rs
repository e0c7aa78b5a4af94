use blowup_motifs::experiment::{
    run_experiment, run_mean_experiment, run_recovery_experiment, run_variance_experiment, ExperimentKind,
    ExperimentSpec, PilotPoint,
};

fn spec(kind: ExperimentKind, text: &str) -> ExperimentSpec {
    ExperimentSpec::from_config_str(text, Some(kind)).unwrap()
}

#[test]
fn zero_lambda_is_rejected() {
    let text = "n = 10\nK = 2\np = 0.3\nq = 0.3\nmotif = 3,1,2/3\ntrials = 10";
    assert!(ExperimentSpec::from_config_str(text, Some(ExperimentKind::Mean)).is_err());
}

#[test]
fn deterministic_graph_has_zero_variance() {
    let s = spec(ExperimentKind::Variance, "n = 12\nK = 1\np = 1\nq = 0\nmotif = 4,1,1/2\ntrials = 50\nseed = 1");
    let r = run_variance_experiment(&s).unwrap();
    let row = r.row("var_R12_same").unwrap();
    assert_eq!(row.estimate, 0.0);
    assert_eq!(row.pass, Some(true));
    assert!(r.row("var_R12_different").is_none());
    assert!(r.notes.iter().any(|n| n.contains("K = 1")));
    assert_eq!(r.row("mean_R12_same").unwrap().estimate, 10.0 * 9.0 * 8.0 * 7.0);
}

#[test]
fn weak_signal_checks_only_the_envelope() {
    let s = spec(ExperimentKind::Variance, "n = 14\nK = 2\np = 0.5\nq = 0.1\nmotif = 4,1,1/2\ntrials = 400\nseed = 2");
    let r = run_variance_experiment(&s).unwrap();
    assert_eq!(r.details["strong_signal_condition"], false);
    assert!(r.rows.iter().all(|row| !row.name.contains("4_over_rho")));
    assert!(r.notes.iter().any(|n| n.contains("only the envelope")));
    assert!(r.all_pass(), "{}", r.to_json());
}

#[test]
fn rows_do_not_depend_on_worker_count() {
    let text = "n = 9\nK = 2\np = 0.7\nq = 0.2\nmotif = 3,1,2/3\ntrials = 5000\nseed = 8";
    let mut a = spec(ExperimentKind::Mean, text);
    a.workers = 1;
    let mut b = a.clone();
    b.workers = 3;
    let (ra, rb) = (run_mean_experiment(&a).unwrap(), run_mean_experiment(&b).unwrap());
    assert_eq!(serde_json::to_string(&ra.rows).unwrap(), serde_json::to_string(&rb.rows).unwrap());
}

#[test]
fn exhausted_budget_gives_a_partial_report() {
    let mut s = spec(ExperimentKind::Mean, "n = 10\nK = 2\np = 0.7\nq = 0.2\nmotif = 3,1,2/3\ntrials = 100000");
    s.budget_secs = 1e-9;
    let r = run_experiment(&s).unwrap();
    assert!(r.partial);
    assert!(!r.all_pass());
    assert!(r.notes.iter().any(|n| n.contains("budget")));
}

#[test]
fn recovery_rows_follow_the_pilot() {
    let text = "n = 14\nK = 2\nq = 0.05\nmotif = 3,1,2/3\nblocks = 2\ntrials = 6\nseed = 3\nlambda_grid = [0.3, 0.9]";
    let s = spec(ExperimentKind::Recovery, text);
    let first = run_recovery_experiment(&s).unwrap();
    assert!(first.rows.iter().all(|r| r.pass.is_none()));
    let grid: Vec<PilotPoint> = serde_json::from_value(first.details["grid"].clone()).unwrap();

    let mut pinned = s.clone();
    pinned.expected = grid.clone();
    let again = run_recovery_experiment(&pinned).unwrap();
    assert!(again.all_pass(), "{}", again.to_json());
    assert_eq!(again.rows.iter().filter(|r| r.pass.is_some()).count(), 4);

    let mut wrong = s;
    wrong.expected = grid.iter().map(|p| PilotPoint { mean_pair_error: p.mean_pair_error + 0.5, ..*p }).collect();
    assert!(!run_recovery_experiment(&wrong).unwrap().all_pass());
}
