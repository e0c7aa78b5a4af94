//! Median-of-means pair decisions and recovery by connected components.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counter::{count_blocks_sequential, expected_count_same, CountError, CountPlan};
use crate::motif::Motif;
use crate::sbm::SymMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("{blocks} blocks do not divide n - 2 = {remaining}; nearest valid n is {suggestion}")]
    Divisibility { remaining: usize, blocks: usize, suggestion: usize },
    #[error("block count must be at least 1")]
    ZeroBlocks,
    #[error("median of an empty list")]
    Empty,
    #[error("truth labels cover {got} vertices, expected {expected}")]
    TruthLength { got: usize, expected: usize },
    #[error("invalid estimator configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Count(#[from] CountError),
}

#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    /// Number of median-of-means blocks `Λ`.
    pub blocks: usize,
    pub threshold_scale: f64,
    pub motif: Motif,
    pub k: usize,
    pub lambda: f64,
    pub q: f64,
}

impl EstimatorConfig {
    pub fn new(motif: Motif, blocks: usize, k: usize, lambda: f64, q: f64) -> Self {
        EstimatorConfig { blocks, threshold_scale: 0.5, motif, k, lambda, q }
    }

    pub fn validate(&self, n: usize) -> Result<(), EstimatorError> {
        if self.blocks == 0 {
            return Err(EstimatorError::ZeroBlocks);
        }
        if self.k == 0 {
            return Err(EstimatorError::Config("K must be at least 1".into()));
        }
        if !(self.threshold_scale > 0.0) || !self.lambda.is_finite() || !self.q.is_finite() {
            return Err(EstimatorError::Config("threshold_scale must be positive and λ, q finite".into()));
        }
        check_divisible(n, self.blocks)
    }

    /// `N = (n - 2)/Λ + 2`, the node count each block behaves like.
    pub fn effective_nodes(&self, n: usize) -> usize {
        (n - 2) / self.blocks + 2
    }

    /// False when `N < 2|V_cyc| + 4`, below which the variance envelope is void.
    pub fn block_size_adequate(&self, n: usize) -> bool {
        self.effective_nodes(n) >= 2 * self.motif.num_internal() + 4
    }

    pub fn threshold(&self, n: usize) -> f64 {
        self.threshold_scale * expected_count_same(self.effective_nodes(n), self.k, self.lambda, &self.motif)
    }
}

/// `round(24 ln n)`.
pub fn paper_default_blocks(n: usize) -> usize {
    (24.0 * (n as f64).ln()).round() as usize
}

fn check_divisible(n: usize, blocks: usize) -> Result<(), EstimatorError> {
    if blocks == 0 {
        return Err(EstimatorError::ZeroBlocks);
    }
    let remaining = n.saturating_sub(2);
    if n < 2 || !remaining.is_multiple_of(blocks) {
        let down = remaining / blocks * blocks;
        let up = down + blocks;
        let suggestion = if remaining - down <= up - remaining && down > 0 { down + 2 } else { up + 2 };
        return Err(EstimatorError::Divisibility { remaining, blocks, suggestion });
    }
    Ok(())
}

/// Deals the sorted vertices of `[n] \ {i, j}` round-robin into `Λ` blocks.
pub fn make_blocks(n: usize, i: usize, j: usize, blocks: usize) -> Result<Vec<Vec<usize>>, EstimatorError> {
    if i == j || i >= n || j >= n {
        return Err(CountError::InvalidPair { i, j, n }.into());
    }
    check_divisible(n, blocks)?;
    let mut out = vec![Vec::with_capacity((n - 2) / blocks); blocks];
    for (t, v) in (0..n).filter(|&v| v != i && v != j).enumerate() {
        out[t % blocks].push(v);
    }
    Ok(out)
}

/// Median with the lower middle element for even lengths.
pub fn median_of_means(values: &[f64]) -> Result<f64, EstimatorError> {
    if values.is_empty() {
        return Err(EstimatorError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[(sorted.len() - 1) / 2])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub i: usize,
    pub j: usize,
    pub median: f64,
    pub threshold: f64,
    pub xhat: f64,
    pub block_values: Vec<f64>,
}

impl PairEstimate {
    pub fn same(&self) -> bool {
        self.median > self.threshold
    }
}

fn decide(i: usize, j: usize, values: Vec<f64>, threshold: f64, k: usize) -> PairEstimate {
    let median = median_of_means(&values).expect("at least one block");
    let indicator = if median > threshold { 1.0 } else { 0.0 };
    PairEstimate { i, j, median, threshold, xhat: indicator - 1.0 / k as f64, block_values: values }
}

pub fn estimate_pair(y: &SymMatrix, config: &EstimatorConfig, i: usize, j: usize) -> Result<PairEstimate, EstimatorError> {
    let n = y.n();
    config.validate(n)?;
    let blocks = make_blocks(n, i, j, config.blocks)?;
    let plan = CountPlan::new(&config.motif);
    let values = count_blocks_sequential(y, &plan, i, j, &blocks).into_iter().map(|r| r.value).collect();
    Ok(decide(i, j, values, config.threshold(n), config.k))
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }

    /// Components as sorted vertex lists, ordered by smallest member.
    pub fn components(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in 0..n {
            let r = self.find(v);
            by_root[r].push(v);
        }
        let mut out: Vec<Vec<usize>> = by_root.into_iter().filter(|c| !c.is_empty()).collect();
        out.sort_by_key(|c| c[0]);
        out
    }
}

/// Connected components of the graph whose edges are the `same` pairs.
pub fn clusters_from_decisions(n: usize, same_pairs: impl IntoIterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(n);
    for (i, j) in same_pairs {
        uf.union(i, j);
    }
    uf.components()
}

/// Groups vertices by label, in the same canonical order as [`clusters_from_decisions`].
pub fn partition_from_labels(z: &[u32]) -> Vec<Vec<usize>> {
    let mut groups: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    for (v, &label) in z.iter().enumerate() {
        groups.entry(label).or_default().push(v);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|c| c[0]);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub n: usize,
    pub k: usize,
    /// Row-major strict upper triangle: `(0,1), (0,2), ..., (n-2,n-1)`.
    pub xhat: Vec<f64>,
    pub clusters: Vec<Vec<usize>>,
    pub exact_match: bool,
    pub pair_error_rate: f64,
    pub threshold: f64,
    pub block_size_adequate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<PairEstimate>>,
}

impl RecoveryResult {
    pub fn xhat_at(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (i.min(j), i.max(j));
        self.xhat[pair_index(self.n, a, b)]
    }
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Runs [`estimate_pair`] on every pair, then clusters the "same" graph and
/// scores it against `truth`.
pub fn recover(y: &SymMatrix, config: &EstimatorConfig, truth: &[u32], keep_pairs: bool) -> Result<RecoveryResult, EstimatorError> {
    let n = y.n();
    config.validate(n)?;
    if truth.len() != n {
        return Err(EstimatorError::TruthLength { got: truth.len(), expected: n });
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let plan = CountPlan::new(&config.motif);
    let threshold = config.threshold(n);
    let estimates: Vec<PairEstimate> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let blocks = make_blocks(n, i, j, config.blocks).expect("validated above");
            let values = count_blocks_sequential(y, &plan, i, j, &blocks).into_iter().map(|r| r.value).collect();
            decide(i, j, values, threshold, config.k)
        })
        .collect();
    Ok(score(n, config, truth, estimates, threshold, keep_pairs))
}

fn score(n: usize, config: &EstimatorConfig, truth: &[u32], estimates: Vec<PairEstimate>, threshold: f64, keep_pairs: bool) -> RecoveryResult {
    let clusters = clusters_from_decisions(n, estimates.iter().filter(|e| e.same()).map(|e| (e.i, e.j)));
    let wrong = estimates.iter().filter(|e| e.same() != (truth[e.i] == truth[e.j])).count();
    let total = estimates.len();
    RecoveryResult {
        n,
        k: config.k,
        xhat: estimates.iter().map(|e| e.xhat).collect(),
        exact_match: clusters == partition_from_labels(truth),
        clusters,
        pair_error_rate: if total == 0 { 0.0 } else { wrong as f64 / total as f64 },
        threshold,
        block_size_adequate: config.block_size_adequate(n),
        pairs: keep_pairs.then_some(estimates),
    }
}
