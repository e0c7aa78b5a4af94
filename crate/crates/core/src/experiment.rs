//! Monte Carlo experiments and certification sweeps with JSON/CSV reports.
//!
//! Every random quantity flows from `spec.seed`: trial `t` of a run uses the
//! model seed `derive_seed(seed, Trial, index)` for a fixed index layout, and
//! per-trial values are reduced in trial order. Reports therefore depend only
//! on the spec, never on thread scheduling.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::counter::{self, check_prop32_condition, expected_count_same, variance_bound_rhs, CountPlan};
use crate::estimator::{recover, EstimatorConfig, EstimatorError};
use crate::motif::{build_blowup_motif, Motif, MotifError};
use crate::rational::Rational;
use crate::rng::{derive_seed, Purpose};
use crate::sbm::{sample, sample_conditioned, Pin, SbmError, SbmParams};
use crate::verifier::{
    certify_exhaustive, certify_sampled, check_boundary_lemma, check_fastener_lemma, check_overlap_cap, SubsetMode,
    VerifyError, DEFAULT_EXHAUSTIVE_CAP,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Sbm(#[from] SbmError),
    #[error(transparent)]
    Motif(#[from] MotifError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Mean,
    Variance,
    Recovery,
    Certify,
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(Value::String(s.to_string())).map_err(|_| format!("unknown experiment `{s}`"))
    }
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Mean => "mean",
            ExperimentKind::Variance => "variance",
            ExperimentKind::Recovery => "recovery",
            ExperimentKind::Certify => "certify",
        }
    }
}

/// `(L, B, a)`, written `"L,B,a"` in configs (e.g. `"4,1,1/2"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MotifTriple {
    pub cycle_length: usize,
    pub blowup: usize,
    pub rate: Rational,
}

impl MotifTriple {
    pub fn new(cycle_length: usize, blowup: usize, rate: Rational) -> Self {
        MotifTriple { cycle_length, blowup, rate }
    }

    pub fn build(&self) -> Result<Motif, MotifError> {
        build_blowup_motif(self.cycle_length, self.blowup, self.rate)
    }
}

impl TryFrom<String> for MotifTriple {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [l, b, a] = parts[..] else {
            return Err(format!("motif `{s}` is not of the form L,B,a"));
        };
        Ok(MotifTriple {
            cycle_length: l.parse().map_err(|e| format!("L in `{s}`: {e}"))?,
            blowup: b.parse().map_err(|e| format!("B in `{s}`: {e}"))?,
            rate: a.parse().map_err(|e| format!("a in `{s}`: {e}"))?,
        })
    }
}

impl From<MotifTriple> for String {
    fn from(t: MotifTriple) -> String {
        format!("{},{},{}", t.cycle_length, t.blowup, t.rate)
    }
}

/// Committed expectation for one recovery grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotPoint {
    pub lambda: f64,
    pub exact_frequency: f64,
    pub mean_pair_error: f64,
    pub pair_error_sd: f64,
}

fn default_workers() -> usize {
    8
}
fn default_budget() -> f64 {
    600.0
}
fn default_threshold_scale() -> f64 {
    0.5
}
fn default_rho() -> f64 {
    2.0
}
fn default_samples() -> usize {
    20_000
}
fn default_overlap_trials() -> usize {
    10_000
}
fn default_cap() -> usize {
    DEFAULT_EXHAUSTIVE_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub n: usize,
    #[serde(rename = "K", default)]
    pub k: usize,
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub q: f64,
    /// Motif for mean, variance and recovery runs.
    #[serde(default)]
    pub motif: Option<MotifTriple>,
    #[serde(default)]
    pub blocks: Option<usize>,
    #[serde(default = "default_threshold_scale")]
    pub threshold_scale: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_budget")]
    pub budget_secs: f64,
    /// Recovery: λ values swept at fixed `q`.
    #[serde(default)]
    pub lambda_grid: Vec<f64>,
    #[serde(default)]
    pub expected: Vec<PilotPoint>,
    /// Certify: motifs in the sweep.
    #[serde(default)]
    pub motifs: Vec<MotifTriple>,
    #[serde(default)]
    pub include_path: bool,
    #[serde(default)]
    pub include_broken: bool,
    #[serde(default = "default_cap")]
    pub exhaustive_cap: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_overlap_trials")]
    pub overlap_trials: usize,
}

impl ExperimentSpec {
    /// A spec of the given kind with every optional field at its default.
    pub fn new(kind: ExperimentKind) -> Self {
        serde_json::from_value(json!({ "kind": kind })).expect("defaults deserialize")
    }

    /// Parses a JSON object or flat `key = value` lines. In the flat form
    /// each value is read as a JSON literal when it parses as one and as a
    /// bare string otherwise; `#` starts a comment.
    pub fn from_config_str(text: &str, kind: Option<ExperimentKind>) -> Result<Self, ExperimentError> {
        let mut map = if text.trim_start().starts_with('{') {
            match serde_json::from_str::<Value>(text)? {
                Value::Object(m) => m,
                _ => return Err(ExperimentError::Config("expected a JSON object".into())),
            }
        } else {
            parse_flat(text)?
        };
        if let Some(kind) = kind {
            let wanted = Value::String(kind.as_str().to_string());
            match map.get("kind") {
                Some(existing) if *existing != wanted => {
                    return Err(ExperimentError::Config(format!("config kind {existing} conflicts with `{}`", kind.as_str())));
                }
                _ => {
                    map.insert("kind".into(), wanted);
                }
            }
        }
        let spec: ExperimentSpec = serde_json::from_value(Value::Object(map))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_config_file(path: impl AsRef<Path>, kind: Option<ExperimentKind>) -> Result<Self, ExperimentError> {
        Self::from_config_str(&std::fs::read_to_string(path)?, kind)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(ExperimentError::Config(msg.to_string())) };
        need(self.workers >= 1, "workers must be at least 1")?;
        need(self.budget_secs > 0.0, "budget_secs must be positive")?;
        match self.kind {
            ExperimentKind::Mean | ExperimentKind::Variance => {
                need(self.trials >= 1, "trials must be at least 1")?;
                need(self.motif.is_some(), "motif is required")?;
                self.params()?;
            }
            ExperimentKind::Recovery => {
                need(self.trials >= 1, "trials must be at least 1")?;
                need(self.motif.is_some(), "motif is required")?;
                need(self.blocks.is_some(), "blocks is required")?;
                need(!self.lambda_grid.is_empty(), "lambda_grid must be nonempty")?;
                for &lambda in &self.lambda_grid {
                    SbmParams::new(self.n, self.k, self.q + lambda, self.q, self.seed)?;
                }
            }
            ExperimentKind::Certify => {
                need(!self.motifs.is_empty() || self.include_path || self.include_broken, "motifs must be nonempty")?;
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<SbmParams, ExperimentError> {
        Ok(SbmParams::new(self.n, self.k, self.p, self.q, self.seed)?)
    }

    fn motif(&self) -> Result<Motif, ExperimentError> {
        let triple = self.motif.ok_or_else(|| ExperimentError::Config("motif is required".into()))?;
        Ok(triple.build()?)
    }
}

fn parse_flat(text: &str) -> Result<Map<String, Value>, ExperimentError> {
    let mut map = Map::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ExperimentError::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let value = value.trim();
        let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
        map.insert(key.trim().to_string(), parsed);
    }
    Ok(map)
}

/// How `pass` is decided for a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `|estimate - target| <= tolerance`
    TwoSided,
    /// `estimate - tolerance <= target`
    UpperBound,
    /// `estimate + tolerance >= target`
    LowerBound,
    /// Informational; never fails.
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub target: f64,
    pub tolerance: f64,
    pub check: Check,
    pub pass: Option<bool>,
}

impl MetricRow {
    pub fn new(name: impl Into<String>, estimate: f64, std_error: f64, target: f64, tolerance: f64, check: Check) -> Self {
        let pass = match check {
            Check::TwoSided => Some((estimate - target).abs() <= tolerance),
            Check::UpperBound => Some(estimate - tolerance <= target),
            Check::LowerBound => Some(estimate + tolerance >= target),
            Check::Report => None,
        };
        MetricRow { name: name.into(), estimate, std_error, target, tolerance, check, pass }
    }

    pub fn info(name: impl Into<String>, estimate: f64, std_error: f64) -> Self {
        MetricRow::new(name, estimate, std_error, f64::NAN, f64::NAN, Check::Report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub seed: u64,
    pub worker_count: usize,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub rows: Vec<MetricRow>,
    pub environment: Environment,
    /// Set when the runtime budget ran out; rows then cover completed trials only.
    pub partial: bool,
    pub notes: Vec<String>,
    pub details: Value,
}

impl Report {
    fn new(spec: &ExperimentSpec) -> Self {
        Report {
            experiment: spec.kind,
            rows: Vec::new(),
            environment: Environment {
                seed: spec.seed,
                worker_count: spec.workers,
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
            partial: false,
            notes: Vec::new(),
            details: Value::Object(Map::new()),
        }
    }

    fn detail(&mut self, key: &str, value: Value) {
        if let Value::Object(m) = &mut self.details {
            m.insert(key.to_string(), value);
        }
    }

    /// True iff the run completed and every asserted row passed.
    pub fn all_pass(&self) -> bool {
        !self.partial && self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn row(&self, name: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["experiment", "name", "estimate", "std_error", "target", "tolerance", "check", "pass"])?;
        for r in &self.rows {
            let check = serde_json::to_value(r.check)?;
            w.write_record([
                self.experiment.as_str().to_string(),
                r.name.clone(),
                r.estimate.to_string(),
                r.std_error.to_string(),
                r.target.to_string(),
                r.tolerance.to_string(),
                check.as_str().unwrap_or_default().to_string(),
                r.pass.map_or(String::new(), |p| p.to_string()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `path` as JSON and the row dump next to it with a `.csv` extension.
    pub fn write_files(&self, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json())?;
        self.write_csv(std::fs::File::create(path.with_extension("csv"))?)
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report, ExperimentError> {
    match spec.kind {
        ExperimentKind::Mean => run_mean_experiment(spec),
        ExperimentKind::Variance => run_variance_experiment(spec),
        ExperimentKind::Recovery => run_recovery_experiment(spec),
        ExperimentKind::Certify => run_certify_sweep(spec),
    }
}

const CHUNK: usize = 2048;

/// Evaluates `f(t)` for `t in 0..trials` in parallel chunks, stopping early
/// once `deadline` passes. Returns the values in trial order.
fn run_trials<F>(trials: usize, deadline: Instant, f: F) -> (Vec<f64>, bool)
where
    F: Fn(usize) -> f64 + Sync,
{
    let mut out = Vec::with_capacity(trials);
    let mut start = 0;
    while start < trials {
        if Instant::now() > deadline {
            return (out, true);
        }
        let end = (start + CHUNK).min(trials);
        let chunk: Vec<f64> = (start..end).into_par_iter().map(&f).collect();
        out.extend(chunk);
        start = end;
    }
    (out, false)
}

/// Index layout for per-trial seeds: the high bits name the stream.
fn trial_index(stream: u64, t: usize) -> u64 {
    (stream << 40) | t as u64
}

fn pin_stream(pin: Pin) -> u64 {
    match pin {
        Pin::Same => 1,
        Pin::Different => 2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Moments {
    count: usize,
    mean: f64,
    variance: f64,
    /// Fourth central moment.
    m4: f64,
}

/// Sample moments with fixed-order compensated sums.
fn moments(values: &[f64]) -> Moments {
    let count = values.len();
    if count == 0 {
        return Moments { count, mean: f64::NAN, variance: f64::NAN, m4: f64::NAN };
    }
    let nf = count as f64;
    let mut s = counter::CompensatedSum::default();
    values.iter().for_each(|&v| s.add(v));
    let mean = s.value() / nf;
    let (mut s2, mut s4) = (counter::CompensatedSum::default(), counter::CompensatedSum::default());
    for &v in values {
        let d = v - mean;
        s2.add(d * d);
        s4.add(d * d * d * d);
    }
    let variance = if count > 1 { s2.value() / (nf - 1.0) } else { 0.0 };
    Moments { count, mean, variance, m4: s4.value() / nf }
}

impl Moments {
    fn mean_se(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }

    /// Large-sample standard error of the sample variance.
    fn variance_se(&self) -> f64 {
        ((self.m4 - self.variance * self.variance).max(0.0) / self.count as f64).sqrt()
    }
}

fn pin_name(pin: Pin) -> &'static str {
    match pin {
        Pin::Same => "same",
        Pin::Different => "different",
    }
}

/// Draws `R_12` under each pin (the pair is vertices 0 and 1).
fn draw_counts(spec: &ExperimentSpec, report: &mut Report, deadline: Instant) -> Result<Vec<(Pin, Vec<f64>)>, ExperimentError> {
    let params = spec.params()?;
    let motif = spec.motif()?;
    let plan = CountPlan::new(&motif);
    let allowed: Vec<usize> = (2..params.n).collect();
    let mut out = Vec::new();
    for pin in [Pin::Same, Pin::Different] {
        if pin == Pin::Different && params.k < 2 {
            report.notes.push("K = 1: the different-pin law is empty and was skipped".into());
            continue;
        }
        let (values, partial) = run_trials(spec.trials, deadline, |t| {
            let seed = derive_seed(spec.seed, Purpose::Trial, trial_index(pin_stream(pin), t));
            let s = sample_conditioned(&params.with_seed(seed), pin).expect("params validated");
            let y = s.centered(params.q).dense();
            counter::count_with_plan(&y, &plan, 0, 1, &allowed).value
        });
        if partial {
            report.partial = true;
            report.notes.push(format!("budget of {}s exhausted after {} {} trials", spec.budget_secs, values.len(), pin_name(pin)));
        }
        out.push((pin, values));
    }
    Ok(out)
}

fn deadline(spec: &ExperimentSpec) -> Instant {
    Instant::now() + Duration::from_secs_f64(spec.budget_secs)
}

/// Monte Carlo mean of `R_12` under both pins against the closed form and 0.
pub fn run_mean_experiment(spec: &ExperimentSpec) -> Result<Report, ExperimentError> {
    spec.validate()?;
    let mut report = Report::new(spec);
    let params = spec.params()?;
    let motif = spec.motif()?;
    let target = expected_count_same(params.n, params.k, params.lambda(), &motif);
    let end = deadline(spec);
    let draws = with_pool(spec.workers, || draw_counts(spec, &mut report, end))??;
    for (pin, values) in draws {
        let m = moments(&values);
        let goal = if pin == Pin::Same { target } else { 0.0 };
        let se = m.mean_se();
        report.rows.push(MetricRow::new(format!("mean_R12_{}", pin_name(pin)), m.mean, se, goal, 4.0 * se, Check::TwoSided));
    }
    report.detail("motif", json!(motif.label()));
    report.detail("closed_form_same", json!(target));
    report.detail("trials", json!(spec.trials));
    Ok(report)
}

/// Empirical variance of `R_12` under both pins against the envelope, and
/// against `(4/ρ)E²` when the strong-signal condition holds.
pub fn run_variance_experiment(spec: &ExperimentSpec) -> Result<Report, ExperimentError> {
    spec.validate()?;
    let mut report = Report::new(spec);
    let params = spec.params()?;
    let motif = spec.motif()?;
    let (lambda, q) = (params.lambda(), params.q);
    let bound = variance_bound_rhs(params.n, params.k, lambda, q, &motif);
    let strong = check_prop32_condition(params.n, params.k, lambda, q, &motif, spec.rho)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    if !bound.hypotheses.all() {
        report.notes.push("variance envelope hypotheses do not all hold; the bound is reported as computed".into());
    }
    if !strong {
        report.notes.push(format!("strong-signal condition fails at rho = {}; only the envelope is checked", spec.rho));
    }
    let end = deadline(spec);
    let draws = with_pool(spec.workers, || draw_counts(spec, &mut report, end))??;
    for (pin, values) in draws {
        let m = moments(&values);
        let se = m.variance_se();
        let name = pin_name(pin);
        report.rows.push(MetricRow::new(format!("var_R12_{name}"), m.variance, se, bound.value, 4.0 * se, Check::UpperBound));
        report.rows.push(MetricRow::info(format!("mean_R12_{name}"), m.mean, m.mean_se()));
        if strong {
            let cap = 4.0 / spec.rho * bound.mean * bound.mean;
            report.rows.push(MetricRow::new(format!("var_R12_{name}_vs_4_over_rho"), m.variance, se, cap, 4.0 * se, Check::UpperBound));
        }
    }
    report.detail("motif", json!(motif.label()));
    report.detail("bound", serde_json::to_value(bound)?);
    report.detail("strong_signal_condition", json!(strong));
    report.detail("trials", json!(spec.trials));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct GridOutcome {
    lambda: f64,
    trials: usize,
    exact_frequency: f64,
    mean_pair_error: f64,
    pair_error_sd: f64,
}

/// Exact-recovery frequency and mean pair error across seeds for each λ on
/// the grid, checked against committed pilot values when present.
pub fn run_recovery_experiment(spec: &ExperimentSpec) -> Result<Report, ExperimentError> {
    spec.validate()?;
    let mut report = Report::new(spec);
    let motif = spec.motif()?;
    let blocks = spec.blocks.expect("validated");
    let end = deadline(spec);
    let mut outcomes = Vec::new();
    for (g, &lambda) in spec.lambda_grid.iter().enumerate() {
        let params = SbmParams::new(spec.n, spec.k, spec.q + lambda, spec.q, spec.seed)?;
        let mut config = EstimatorConfig::new(motif.clone(), blocks, spec.k, lambda, spec.q);
        config.threshold_scale = spec.threshold_scale;
        config.validate(spec.n)?;
        if g == 0 && !config.block_size_adequate(spec.n) {
            report.notes.push(format!("N = {} is below 2|V_cyc| + 4", config.effective_nodes(spec.n)));
        }
        let mut results: Vec<(bool, f64)> = Vec::with_capacity(spec.trials);
        let mut start = 0;
        let run = with_pool(spec.workers, || -> Result<bool, ExperimentError> {
            while start < spec.trials {
                if Instant::now() > end {
                    return Ok(true);
                }
                let stop = (start + 8).min(spec.trials);
                let chunk: Result<Vec<(bool, f64)>, EstimatorError> = (start..stop)
                    .into_par_iter()
                    .map(|t| {
                        let seed = derive_seed(spec.seed, Purpose::Trial, trial_index(g as u64, t));
                        let s = sample(&params.with_seed(seed)).expect("params validated");
                        let r = recover(&s.centered(spec.q).dense(), &config, s.labels(), false)?;
                        Ok((r.exact_match, r.pair_error_rate))
                    })
                    .collect();
                results.extend(chunk?);
                start = stop;
            }
            Ok(false)
        })??;
        if run {
            report.partial = true;
            report.notes.push(format!("budget exhausted at lambda = {lambda} after {} trials", results.len()));
        }
        let exact: Vec<f64> = results.iter().map(|&(e, _)| if e { 1.0 } else { 0.0 }).collect();
        let errors: Vec<f64> = results.iter().map(|&(_, e)| e).collect();
        let (me, mp) = (moments(&exact), moments(&errors));
        outcomes.push(GridOutcome {
            lambda,
            trials: results.len(),
            exact_frequency: me.mean,
            mean_pair_error: mp.mean,
            pair_error_sd: mp.variance.sqrt(),
        });
        if run {
            break;
        }
    }

    for o in &outcomes {
        let t = o.trials as f64;
        let freq_se = (o.exact_frequency * (1.0 - o.exact_frequency) / t).sqrt();
        let err_se = o.pair_error_sd / t.sqrt();
        let exact_name = format!("exact_recovery_frequency[lambda={}]", o.lambda);
        let error_name = format!("mean_pair_error[lambda={}]", o.lambda);
        match spec.expected.iter().find(|p| p.lambda == o.lambda) {
            Some(pilot) => {
                let band = 4.0 * (pilot.exact_frequency * (1.0 - pilot.exact_frequency) / t).sqrt();
                report.rows.push(MetricRow::new(exact_name, o.exact_frequency, freq_se, pilot.exact_frequency, band, Check::TwoSided));
                let band = 4.0 * pilot.pair_error_sd / t.sqrt();
                report.rows.push(MetricRow::new(error_name, o.mean_pair_error, err_se, pilot.mean_pair_error, band, Check::TwoSided));
            }
            None => {
                report.rows.push(MetricRow::info(exact_name, o.exact_frequency, freq_se));
                report.rows.push(MetricRow::info(error_name, o.mean_pair_error, err_se));
            }
        }
    }
    // drops in success frequency beyond two combined standard errors
    let violations = outcomes
        .windows(2)
        .filter(|w| {
            let se = |o: &GridOutcome| o.exact_frequency * (1.0 - o.exact_frequency) / o.trials as f64;
            w[1].exact_frequency + 2.0 * (se(&w[0]) + se(&w[1])).sqrt() < w[0].exact_frequency
        })
        .count();
    report.rows.push(MetricRow::info("monotonicity_violations", violations as f64, 0.0));
    report.detail("motif", json!(motif.label()));
    report.detail("baseline_pair_error", json!(1.0 / spec.k as f64));
    report.detail("grid", serde_json::to_value(&outcomes)?);
    Ok(report)
}

/// The 3-vertex path `v1 - u - v2`.
pub fn path_motif() -> Motif {
    Motif::from_edges(3, 0, 1, [(0, 2), (1, 2)]).expect("path motif is valid")
}

/// `G(4,1,1/2)` with the cycle edge between its first two layers removed.
pub fn broken_motif() -> Motif {
    let m = build_blowup_motif(4, 1, Rational::new(1, 2).expect("1/2")).expect("valid triple");
    let cut = (2, 3);
    Motif::from_edges(m.num_vertices(), m.v1(), m.v2(), m.edges().iter().copied().filter(|&e| e != cut))
        .expect("still connected")
}

/// Builds and certifies each motif: partition slack, the two cycle lemmas
/// and the overlap cap. Invalid triples are listed, not fatal.
pub fn run_certify_sweep(spec: &ExperimentSpec) -> Result<Report, ExperimentError> {
    spec.validate()?;
    let mut report = Report::new(spec);
    let mut entries = Vec::new();
    let mut invalid = Vec::new();
    let end = deadline(spec);
    with_pool(spec.workers, || -> Result<(), ExperimentError> {
        for triple in &spec.motifs {
            if Instant::now() > end {
                report.partial = true;
                report.notes.push("budget exhausted during the sweep".into());
                break;
            }
            let motif = match triple.build() {
                Ok(m) => m,
                Err(e) => {
                    invalid.push(json!({ "motif": String::from(*triple), "error": e.to_string() }));
                    continue;
                }
            };
            let label = motif.label();
            let slack = if motif.num_vertices() <= spec.exhaustive_cap {
                certify_exhaustive(&motif, spec.exhaustive_cap)?
            } else {
                certify_sampled(&motif, spec.samples, spec.seed)
            };
            report.rows.push(MetricRow::new(format!("min_slack[{label}]"), slack.min_slack.to_f64(), 0.0, 0.0, 0.0, Check::LowerBound));
            let mode = SubsetMode::auto(&motif, spec.samples, spec.seed);
            let boundary = check_boundary_lemma(&motif, mode)?;
            let fastener = check_fastener_lemma(&motif, mode)?;
            let flag = |b: bool| if b { 1.0 } else { 0.0 };
            report.rows.push(MetricRow::new(format!("boundary_lemma[{label}]"), flag(boundary.holds), 0.0, 1.0, 0.0, Check::TwoSided));
            report.rows.push(MetricRow::new(format!("fastener_lemma[{label}]"), flag(fastener.holds), 0.0, 1.0, 0.0, Check::TwoSided));
            let overlap = check_overlap_cap(&motif, 2 * motif.num_vertices(), spec.overlap_trials, spec.seed)?;
            report.rows.push(MetricRow::new(format!("overlap_cap[{label}]"), flag(overlap.holds), 0.0, 1.0, 0.0, Check::TwoSided));
            report.rows.push(MetricRow::new(
                format!("overlap_equality_at_full[{label}]"),
                flag(overlap.equality_at_full_overlap),
                0.0,
                1.0,
                0.0,
                Check::TwoSided,
            ));
            entries.push(json!({
                "motif": label,
                "slack": slack,
                "boundary_lemma": boundary,
                "fastener_lemma": fastener,
                "overlap": overlap,
            }));
        }
        if spec.include_path {
            let slack = certify_exhaustive(&path_motif(), spec.exhaustive_cap)?;
            report.rows.push(MetricRow::new("min_slack[path]", slack.min_slack.to_f64(), 0.0, 0.0, 0.0, Check::TwoSided));
            entries.push(json!({ "motif": "path", "slack": slack }));
        }
        if spec.include_broken {
            let slack = certify_exhaustive(&broken_motif(), spec.exhaustive_cap)?;
            report.rows.push(MetricRow::info("min_slack[broken]", slack.min_slack.to_f64(), 0.0));
            entries.push(json!({ "motif": "broken", "slack": slack }));
        }
        Ok(())
    })??;
    if !invalid.is_empty() {
        report.notes.push(format!("{} invalid motif triple(s) skipped", invalid.len()));
    }
    report.detail("motifs", Value::Array(entries));
    report.detail("invalid", Value::Array(invalid));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_and_json_configs_agree() {
        let flat = "n = 10\nK = 2  # communities\np = 0.7\nq = 0.2\nmotif = 3,1,2/3\ntrials = 5\nseed = 9\n";
        let json = r#"{"n": 10, "K": 2, "p": 0.7, "q": 0.2, "motif": "3,1,2/3", "trials": 5, "seed": 9}"#;
        let a = ExperimentSpec::from_config_str(flat, Some(ExperimentKind::Mean)).unwrap();
        let b = ExperimentSpec::from_config_str(json, Some(ExperimentKind::Mean)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.motif, Some(MotifTriple::new(3, 1, Rational::new(2, 3).unwrap())));
        assert_eq!(a.workers, 8);
    }

    #[test]
    fn config_errors() {
        assert!(ExperimentSpec::from_config_str("n 10", Some(ExperimentKind::Mean)).is_err());
        assert!(ExperimentSpec::from_config_str("kind = mean\nbogus = 1", None).is_err());
        assert!(ExperimentSpec::from_config_str("kind = certify\nmotifs = [\"4,1,1/2\"]", Some(ExperimentKind::Mean)).is_err());
        // λ = 0 is rejected
        let flat = "n = 10\nK = 2\np = 0.2\nq = 0.2\nmotif = 3,1,2/3\ntrials = 5";
        assert!(matches!(
            ExperimentSpec::from_config_str(flat, Some(ExperimentKind::Mean)),
            Err(ExperimentError::Sbm(_))
        ));
        assert!(MotifTriple::try_from("4,1".to_string()).is_err());
    }

    #[test]
    fn row_checks() {
        assert_eq!(MetricRow::new("a", 1.0, 0.1, 1.3, 0.4, Check::TwoSided).pass, Some(true));
        assert_eq!(MetricRow::new("a", 1.0, 0.1, 1.5, 0.4, Check::TwoSided).pass, Some(false));
        assert_eq!(MetricRow::new("a", 2.0, 0.1, 1.5, 0.4, Check::UpperBound).pass, Some(false));
        assert_eq!(MetricRow::new("a", 1.8, 0.1, 1.5, 0.4, Check::UpperBound).pass, Some(true));
        assert_eq!(MetricRow::new("a", 0.0, 0.0, 0.0, 0.0, Check::LowerBound).pass, Some(true));
        assert_eq!(MetricRow::info("a", 1.0, 0.0).pass, None);
    }

    #[test]
    fn moments_of_known_data() {
        let m = moments(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((m.m4 - (2.0 * 5.0625 + 2.0 * 0.0625) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn small_mean_run_is_reproducible() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Mean);
        spec.n = 8;
        spec.k = 2;
        spec.p = 0.7;
        spec.q = 0.2;
        spec.motif = Some(MotifTriple::new(3, 1, Rational::new(2, 3).unwrap()));
        spec.trials = 300;
        spec.seed = 4;
        spec.workers = 2;
        let a = run_mean_experiment(&spec).unwrap();
        spec.workers = 2;
        let b = run_mean_experiment(&spec).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.rows.len(), 2);
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 3);
    }

    #[test]
    fn certify_lists_invalid_triples() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Certify);
        spec.motifs = vec![MotifTriple::new(4, 1, Rational::new(1, 2).unwrap()), MotifTriple::new(3, 1, Rational::new(1, 2).unwrap())];
        spec.include_path = true;
        spec.include_broken = true;
        spec.overlap_trials = 200;
        spec.workers = 1;
        let r = run_certify_sweep(&spec).unwrap();
        assert!(r.all_pass(), "{}", r.to_json());
        assert_eq!(r.row("min_slack[path]").unwrap().estimate, 0.0);
        assert!(r.row("min_slack[broken]").unwrap().estimate < 0.0);
        assert_eq!(r.details["invalid"].as_array().unwrap().len(), 1);
    }
}
