//! Small versions of the mean, variance and certification experiments.
//!
//! The full-size configurations live in `configs/`; run them with
//! `sbm-motif experiment <kind> --config configs/<kind>.cfg`.

use blowup_motifs::experiment::{run_experiment, ExperimentKind, ExperimentSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let runs = [
        (ExperimentKind::Mean, "n = 10\nK = 2\np = 0.7\nq = 0.2\nmotif = 3,1,2/3\ntrials = 20000\nseed = 1"),
        (ExperimentKind::Variance, "n = 14\nK = 2\np = 0.5\nq = 0.1\nmotif = 4,1,1/2\ntrials = 2000\nseed = 2"),
        (ExperimentKind::Certify, r#"{"motifs": ["4,1,1/2", "3,1,2/3", "3,1,1/2"], "include_path": true, "include_broken": true}"#),
    ];
    for (kind, config) in runs {
        let spec = ExperimentSpec::from_config_str(config, Some(kind))?;
        let report = run_experiment(&spec)?;
        println!("== {} (all pass: {})", kind.as_str(), report.all_pass());
        report.write_csv(std::io::stdout())?;
        for note in &report.notes {
            println!("note: {note}");
        }
    }
    Ok(())
}
