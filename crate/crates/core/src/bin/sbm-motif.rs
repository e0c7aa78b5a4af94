use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blowup_motifs::counter::{count_blocks, CountResult};
use blowup_motifs::estimator::{make_blocks, recover, EstimatorConfig};
use blowup_motifs::experiment::{run_experiment, ExperimentKind, ExperimentSpec};
use blowup_motifs::motif::{build_blowup_motif, read_motif, write_motif};
use blowup_motifs::rational::Rational;
use blowup_motifs::sbm::{sample, sample_conditioned, Pin, SbmParams, SbmSample};
use blowup_motifs::verifier::{
    certify_exhaustive, certify_sampled, check_boundary_lemma, check_fastener_lemma, SubsetMode, DEFAULT_EXHAUSTIVE_CAP,
};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "sbm-motif", version, about = "Blow-up cycle motifs for SBM community recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or certify a motif document.
    #[command(subcommand)]
    Motif(MotifCommand),
    /// Draw an SBM sample.
    #[command(subcommand)]
    Sbm(SbmCommand),
    /// Per-block motif counts for one vertex pair.
    Count(CountArgs),
    /// Pairwise decisions and clusters for a sample.
    Recover(RecoverArgs),
    /// Run a Monte Carlo experiment or certification sweep.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand)]
enum MotifCommand {
    Build {
        #[arg(long = "L")]
        cycle_length: usize,
        #[arg(long = "B")]
        blowup: usize,
        #[arg(long = "a")]
        rate: Rational,
        #[arg(long)]
        out: PathBuf,
    },
    Check {
        #[arg(long)]
        motif: PathBuf,
        #[arg(long, conflicts_with = "samples")]
        exhaustive: bool,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SbmCommand {
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long = "K")]
        k: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        pin: Option<Pin>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    sample: PathBuf,
    #[arg(long)]
    motif: PathBuf,
    #[arg(long)]
    i: usize,
    #[arg(long)]
    j: usize,
    #[arg(long, default_value_t = 1)]
    blocks: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    sample: PathBuf,
    #[arg(long)]
    motif: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    q: f64,
    #[arg(long = "K")]
    k: usize,
    #[arg(long)]
    blocks: usize,
    #[arg(long, default_value_t = 0.5)]
    threshold_scale: f64,
    /// Include per-pair medians, thresholds and block values.
    #[arg(long)]
    pairs: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    kind: ExperimentKind,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn motif_check(motif: &Path, exhaustive: bool, samples: Option<usize>, seed: u64, report: Option<&Path>) -> Result<bool> {
    let motif = read_motif(motif)?;
    let slack = match samples {
        Some(n) if !exhaustive => certify_sampled(&motif, n, seed),
        _ => certify_exhaustive(&motif, DEFAULT_EXHAUSTIVE_CAP)?,
    };
    let mut ok = slack.min_slack >= Rational::ZERO;
    let mut doc = serde_json::to_value(&slack)?;
    if motif.layout().is_some() {
        let mode = SubsetMode::auto(&motif, samples.unwrap_or(20_000), seed);
        let boundary = check_boundary_lemma(&motif, mode)?;
        let fastener = check_fastener_lemma(&motif, mode)?;
        ok &= boundary.holds && fastener.holds;
        doc["boundary_lemma"] = serde_json::to_value(boundary)?;
        doc["fastener_lemma"] = serde_json::to_value(fastener)?;
    }
    doc["pass"] = json!(ok);
    emit(report, &serde_json::to_string_pretty(&doc)?)?;
    Ok(ok)
}

fn count(args: &CountArgs) -> Result<()> {
    let s = SbmSample::read_json(&args.sample)?;
    let motif = read_motif(&args.motif)?;
    let blocks = make_blocks(s.n(), args.i, args.j, args.blocks)?;
    let y = s.centered(s.params().q).dense();
    let results: Vec<CountResult> = count_blocks(&y, &motif, args.i, args.j, &blocks)?;
    let total: f64 = results.iter().map(|r| r.value).sum();
    let doc = json!({
        "i": args.i,
        "j": args.j,
        "blocks": results.iter().map(|r| r.value).collect::<Vec<_>>(),
        "total": total,
        "num_injections": results.iter().map(|r| r.num_injections).collect::<Vec<_>>(),
        "compensation_error_bound": results.iter().map(|r| r.compensation_error_bound).collect::<Vec<_>>(),
    });
    emit(args.out.as_deref(), &serde_json::to_string_pretty(&doc)?)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Motif(MotifCommand::Build { cycle_length, blowup, rate, out }) => {
            write_motif(&build_blowup_motif(cycle_length, blowup, rate)?, out)?;
        }
        Command::Motif(MotifCommand::Check { motif, exhaustive, samples, seed, report }) => {
            return motif_check(&motif, exhaustive, samples, seed, report.as_deref());
        }
        Command::Sbm(SbmCommand::Sample { n, k, p, q, seed, pin, out }) => {
            let params = SbmParams::new(n, k, p, q, seed)?;
            let s = match pin {
                Some(pin) => sample_conditioned(&params, pin)?,
                None => sample(&params)?,
            };
            s.write_json(out)?;
        }
        Command::Count(args) => count(&args)?,
        Command::Recover(args) => {
            let s = SbmSample::read_json(&args.sample)?;
            let mut config = EstimatorConfig::new(read_motif(&args.motif)?, args.blocks, args.k, args.lambda, args.q);
            config.threshold_scale = args.threshold_scale;
            if !config.block_size_adequate(s.n()) {
                eprintln!("warning: N = {} is below 2|V_cyc| + 4", config.effective_nodes(s.n()));
            }
            let result = recover(&s.centered(args.q).dense(), &config, s.labels(), args.pairs)?;
            std::fs::write(&args.out, serde_json::to_string_pretty(&result)?)?;
        }
        Command::Experiment(args) => {
            let mut spec = ExperimentSpec::from_config_file(&args.config, Some(args.kind))?;
            if let Some(w) = args.workers {
                spec.workers = w;
            }
            let report = run_experiment(&spec)?;
            match &args.out {
                Some(path) => report.write_files(path)?,
                None => {
                    println!("{}", report.to_json());
                    report.write_csv(std::io::stdout())?;
                }
            }
            return Ok(report.all_pass());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
