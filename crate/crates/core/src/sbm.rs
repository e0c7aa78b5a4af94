//! Stochastic block model draws and the quasi-centered adjacency matrix.
//!
//! Community labels are 0-based (`0..K`), and so are vertex indices.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{stream, Purpose};

#[derive(Debug, Error)]
pub enum SbmError {
    #[error("invalid SBM parameters: {0}")]
    InvalidParams(String),
    #[error("pin=different needs at least two communities")]
    PinNeedsTwoCommunities,
    #[error("vertex pair ({0}, {1}) must be two distinct vertices")]
    InvalidPair(usize, usize),
    #[error("malformed sample document: {0}")]
    Document(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Model parameters. `λ = p - q` must be positive.
///
/// `K = 1`, `p = 1` and `q = 0` are accepted so that degenerate
/// deterministic graphs can be generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
}

/// Regime conditions under which the variance bounds are stated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeFlags {
    pub q_at_most_quarter: bool,
    pub q_plus_two_lambda_at_most_one: bool,
}

impl SbmParams {
    pub fn new(n: usize, k: usize, p: f64, q: f64, seed: u64) -> Result<Self, SbmError> {
        let params = SbmParams { n, k, p, q, seed };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), SbmError> {
        let bad = |m: String| Err(SbmError::InvalidParams(m));
        if self.n < 2 {
            return bad(format!("n = {} must be at least 2", self.n));
        }
        if self.k < 1 || self.k > self.n {
            return bad(format!("K = {} must lie in [1, n = {}]", self.k, self.n));
        }
        if !(0.0..1.0).contains(&self.q) {
            return bad(format!("q = {} must lie in [0, 1)", self.q));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad(format!("p = {} must lie in (0, 1]", self.p));
        }
        if self.p <= self.q {
            return bad(format!("p = {} must exceed q = {} (lambda > 0)", self.p, self.q));
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.p - self.q
    }

    pub fn regime(&self) -> RegimeFlags {
        RegimeFlags {
            q_at_most_quarter: self.q <= 0.25,
            q_plus_two_lambda_at_most_one: self.q + 2.0 * self.lambda() <= 1.0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SbmParams { seed, ..self }
    }

    pub fn derived(&self) -> DerivedProbs {
        DerivedProbs::new(self.q, self.lambda())
    }
}

/// `q̄ = q(1 - q)` and `p̄ = q̄ + λ(1 - 2q)`: the variances of a centered
/// entry across and within communities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedProbs {
    pub q_bar: f64,
    pub p_bar: f64,
}

impl DerivedProbs {
    pub fn new(q: f64, lambda: f64) -> Self {
        let q_bar = q * (1.0 - q);
        DerivedProbs { q_bar, p_bar: q_bar + lambda * (1.0 - 2.0 * q) }
    }
}

/// Which relation to force between vertices 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pin {
    Same,
    Different,
}

impl std::str::FromStr for Pin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "same" => Ok(Pin::Same),
            "different" => Ok(Pin::Different),
            other => Err(format!("unknown pin `{other}` (expected same|different)")),
        }
    }
}

/// One SBM draw: labels `z` and the strict upper triangle of `Y*`.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmSample {
    params: SbmParams,
    z: Vec<u32>,
    bits: Vec<u64>,
}

fn triangle_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl SbmSample {
    pub fn from_parts(params: SbmParams, z: Vec<u32>, edges: &[(usize, usize)]) -> Result<Self, SbmError> {
        params.validate()?;
        let n = params.n;
        if z.len() != n {
            return Err(SbmError::Document(format!("expected {n} labels, got {}", z.len())));
        }
        if let Some(&bad) = z.iter().find(|&&c| c as usize >= params.k) {
            return Err(SbmError::Document(format!("label {bad} out of range for K = {}", params.k)));
        }
        let mut sample = SbmSample { params, z, bits: vec![0; (n * (n - 1) / 2).div_ceil(64)] };
        for &(i, j) in edges {
            if i == j || i >= n || j >= n {
                return Err(SbmError::Document(format!("invalid edge ({i}, {j})")));
            }
            sample.set_edge(i, j);
        }
        Ok(sample)
    }

    fn set_edge(&mut self, i: usize, j: usize) {
        let idx = triangle_index(self.params.n, i, j);
        self.bits[idx / 64] |= 1 << (idx % 64);
    }

    pub fn params(&self) -> &SbmParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn labels(&self) -> &[u32] {
        &self.z
    }

    /// `Y*_ij`; symmetric, and `false` on the diagonal.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let idx = triangle_index(self.params.n, i, j);
        self.bits[idx / 64] >> (idx % 64) & 1 == 1
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.has_edge(i, j))
            .collect()
    }

    pub fn centered(&self, q: f64) -> CenteredAdjacency<'_> {
        CenteredAdjacency { sample: self, q }
    }

    pub fn to_document(&self) -> SampleDocument {
        SampleDocument {
            n: self.params.n,
            k: self.params.k,
            p: self.params.p,
            q: self.params.q,
            seed: self.params.seed,
            z: self.z.clone(),
            edges: self.edges().into_iter().map(|(i, j)| [i, j]).collect(),
        }
    }

    pub fn from_document(doc: &SampleDocument) -> Result<Self, SbmError> {
        let params = SbmParams { n: doc.n, k: doc.k, p: doc.p, q: doc.q, seed: doc.seed };
        let edges: Vec<(usize, usize)> = doc.edges.iter().map(|&[i, j]| (i, j)).collect();
        SbmSample::from_parts(params, doc.z.clone(), &edges)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), SbmError> {
        std::fs::write(path, serde_json::to_string(&self.to_document())?)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self, SbmError> {
        let doc: SampleDocument = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        SbmSample::from_document(&doc)
    }
}

/// JSON form of a sample: `{n, K, p, q, seed, z, edges}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDocument {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
    pub z: Vec<u32>,
    pub edges: Vec<[usize; 2]>,
}

/// `Y = Y* - q` off the diagonal.
#[derive(Debug, Clone, Copy)]
pub struct CenteredAdjacency<'a> {
    sample: &'a SbmSample,
    q: f64,
}

impl CenteredAdjacency<'_> {
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.sample.n()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        debug_assert_ne!(i, j);
        if self.sample.has_edge(i, j) {
            1.0 - self.q
        } else {
            -self.q
        }
    }

    /// Dense symmetric copy (zero diagonal) for the counting kernels.
    pub fn dense(&self) -> SymMatrix {
        let n = self.n();
        let (present, absent) = (1.0 - self.q, -self.q);
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                m.set(i, j, if self.sample.has_edge(i, j) { present } else { absent });
            }
        }
        m
    }
}

/// Dense symmetric `n × n` matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    /// Fills every off-diagonal entry with `f(i, j)` for `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
        self.data[j * self.n + i] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

fn draw_edges(params: &SbmParams, z: Vec<u32>) -> SbmSample {
    let n = params.n;
    let mut sample = SbmSample { params: *params, z, bits: vec![0; (n * (n - 1) / 2).div_ceil(64)] };
    let mut rng = stream(params.seed, Purpose::Edges, 0);
    for i in 0..n {
        for j in i + 1..n {
            let prob = if sample.z[i] == sample.z[j] { params.p } else { params.q };
            if rng.gen::<f64>() < prob {
                sample.set_edge(i, j);
            }
        }
    }
    sample
}

/// Draws `z` i.i.d. uniform on `0..K`, then each edge independently with
/// probability `q + λ·1{z_i = z_j}`.
pub fn sample(params: &SbmParams) -> Result<SbmSample, SbmError> {
    params.validate()?;
    let mut rng = stream(params.seed, Purpose::Labels, 0);
    let z = (0..params.n).map(|_| rng.gen_range(0..params.k as u32)).collect();
    Ok(draw_edges(params, z))
}

/// Draws from the SBM conditioned on `z_0 = z_1` (or `z_0 ≠ z_1`).
///
/// The conditional law is built directly: `z_0` uniform, `z_1` equal to it
/// or uniform over the other `K - 1` labels, the rest i.i.d. uniform.
pub fn sample_conditioned(params: &SbmParams, pin: Pin) -> Result<SbmSample, SbmError> {
    params.validate()?;
    if pin == Pin::Different && params.k < 2 {
        return Err(SbmError::PinNeedsTwoCommunities);
    }
    let k = params.k as u32;
    let mut rng = stream(params.seed, Purpose::Labels, 0);
    let mut z = Vec::with_capacity(params.n);
    let first = rng.gen_range(0..k);
    z.push(first);
    z.push(match pin {
        Pin::Same => first,
        Pin::Different => {
            let other = rng.gen_range(0..k - 1);
            if other >= first {
                other + 1
            } else {
                other
            }
        }
    });
    z.extend((2..params.n).map(|_| rng.gen_range(0..k)));
    Ok(draw_edges(params, z))
}

/// `x_ij = 1{z_i = z_j} - 1/K`.
pub fn membership_value(z: &[u32], i: usize, j: usize, k: usize) -> Result<f64, SbmError> {
    if i == j || i >= z.len() || j >= z.len() {
        return Err(SbmError::InvalidPair(i, j));
    }
    let same = if z[i] == z[j] { 1.0 } else { 0.0 };
    Ok(same - 1.0 / k as f64)
}
