//! Motif counts `R_ij` and their closed-form moments.
//!
//! `R_ij = Σ_π Π_{(u,w) ∈ E} Y[π(u), π(w)]` where `π` ranges over injections
//! of the motif into the ambient vertices with `π(v1) = i`, `π(v2) = j` and
//! every other vertex mapped into an allowed set.
//!
//! The count is evaluated by depth-first assignment over the motif's vertex
//! order, multiplying each edge in as soon as both endpoints are placed. The
//! last level is a masked dense sum over all candidates. Contributions are
//! accumulated with Neumaier summation and every result carries an a priori
//! bound on its floating-point error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motif::Motif;
use crate::sbm::{DerivedProbs, SymMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum CountError {
    #[error("i = {i} and j = {j} must be distinct vertices below n = {n}")]
    InvalidPair { i: usize, j: usize, n: usize },
    #[error("allowed vertex {0} is out of range, repeated, or equal to i or j")]
    InvalidAllowed(usize),
    #[error("blocks must be disjoint, of equal size and cover every vertex except i and j: {0}")]
    InvalidBlocks(String),
    #[error("rho = {0} must exceed 1")]
    InvalidRho(f64),
}

/// The ambient pair and the vertices the other motif vertices may use.
#[derive(Debug, Clone)]
pub struct CountRequest<'a> {
    pub motif: &'a Motif,
    pub i: usize,
    pub j: usize,
    pub allowed: Vec<usize>,
}

impl<'a> CountRequest<'a> {
    /// All vertices of `0..n` except `i` and `j`.
    pub fn full(motif: &'a Motif, n: usize, i: usize, j: usize) -> Self {
        CountRequest { motif, i, j, allowed: (0..n).filter(|&v| v != i && v != j).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub value: f64,
    /// `(|allowed|)_{|V|-2}`, saturating at `u64::MAX`.
    pub num_injections: u64,
    /// Bound on `|value - exact|` for the given matrix entries.
    pub compensation_error_bound: f64,
    /// `Σ_π |P_π|`, the scale the error bound is relative to.
    pub magnitude: f64,
}

/// Neumaier (improved Kahan–Babuška) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
    terms: u64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
        self.terms += 1;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn terms(&self) -> u64 {
        self.terms
    }
}

/// `n! / (n - k)!` as an exact-count integer, saturating.
pub fn falling_factorial_u64(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).try_fold(1u64, |acc, t| acc.checked_mul((n - t) as u64)).unwrap_or(u64::MAX)
}

/// `ln(n! / (n - k)!)`; `-inf` when `k > n`.
pub fn ln_falling_factorial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    (0..k).map(|t| ((n - t) as f64).ln()).sum()
}

/// `n! / (n - k)!` by iterated products, falling back to log space on overflow.
pub fn falling_factorial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let direct = (0..k).fold(1.0f64, |acc, t| acc * (n - t) as f64);
    if direct.is_finite() {
        direct
    } else {
        ln_falling_factorial(n, k).exp()
    }
}

/// Evaluation schedule for one motif, reusable across many counts.
///
/// Slot 0 holds `i`, slot 1 holds `j`, slot `2 + k` holds the image of the
/// `k`-th internal vertex in [`Motif::vertex_order`].
#[derive(Debug, Clone)]
pub struct CountPlan {
    /// For each internal level, the slots of its already-placed neighbours.
    back_slots: Vec<Vec<usize>>,
    /// Whether the vertex placed at each level is a neighbour of the last one.
    feeds_last: Vec<bool>,
    num_edges: usize,
}

impl CountPlan {
    pub fn new(motif: &Motif) -> Self {
        let order = motif.vertex_order();
        let mut slot_of = vec![0usize; motif.num_vertices()];
        for (slot, &v) in order.iter().enumerate() {
            slot_of[v] = slot;
        }
        let depth = order.len() - 2;
        let mut back_slots = vec![Vec::new(); depth];
        for &(u, w) in motif.edges() {
            let (a, b) = (slot_of[u].min(slot_of[w]), slot_of[u].max(slot_of[w]));
            back_slots[b - 2].push(a);
        }
        let feeds_last = (0..depth).map(|level| back_slots[depth - 1].contains(&(level + 2))).collect();
        CountPlan { back_slots, feeds_last, num_edges: motif.num_edges() }
    }

    pub fn depth(&self) -> usize {
        self.back_slots.len()
    }

    /// Counts over `[i, j] ++ allowed`; the caller has validated the request.
    fn evaluate(&self, y: &SymMatrix, i: usize, j: usize, allowed: &[usize]) -> CountResult {
        let depth = self.depth();
        let m = allowed.len();
        let num_injections = falling_factorial_u64(m, depth);
        if m < depth {
            return CountResult { value: 0.0, num_injections: 0, compensation_error_bound: 0.0, magnitude: 0.0 };
        }
        let width = m + 2;
        let mut ambient = Vec::with_capacity(width);
        ambient.push(i);
        ambient.push(j);
        ambient.extend_from_slice(allowed);
        let mut local = vec![0.0f64; width * width];
        for (a, &va) in ambient.iter().enumerate() {
            let row = y.row(va);
            for (b, &vb) in ambient.iter().enumerate() {
                if a != b {
                    local[a * width + b] = row[vb];
                }
            }
        }
        let mut free = vec![1.0f64; width];
        free[0] = 0.0;
        free[1] = 0.0;

        // caches[c] is the product of the last vertex's neighbour rows placed so far
        let mut caches = vec![1.0f64; (depth + 1) * width];
        for &slot in &self.back_slots[depth - 1] {
            if slot < 2 {
                for (c, &y) in caches[..width].iter_mut().zip(&local[slot * width..(slot + 1) * width]) {
                    *c *= y;
                }
            }
        }

        let mut walk = Walk {
            plan: self,
            local: &local,
            width,
            free,
            images: vec![0usize; depth + 2],
            caches,
            sum: CompensatedSum::default(),
            magnitude: 0.0,
        };
        walk.images[1] = 1;
        walk.descend(0, 1.0, 0, None);

        let eps = f64::EPSILON / 2.0;
        let steps = (self.num_edges + m + 4) as f64;
        let gamma = steps * eps / (1.0 - steps * eps);
        let terms = walk.sum.terms() as f64;
        let value = walk.sum.value();
        let bound = gamma * walk.magnitude + 2.0 * eps * value.abs() + terms * eps * eps * walk.magnitude;
        CountResult { value, num_injections, compensation_error_bound: bound, magnitude: walk.magnitude }
    }
}

/// `Σ x·y·f` and `Σ |x·y·f|` with four interleaved accumulators.
fn masked_sum(x: &[f64], y: &[f64], f: &[f64]) -> (f64, f64) {
    let n = x.len().min(y.len()).min(f.len());
    let (x, y, f) = (&x[..n], &y[..n], &f[..n]);
    let mut s = [0.0f64; 4];
    let mut a = [0.0f64; 4];
    let (xc, yc, fc) = (x.chunks_exact(4), y.chunks_exact(4), f.chunks_exact(4));
    let (xr, yr, fr) = (xc.remainder(), yc.remainder(), fc.remainder());
    for ((x4, y4), f4) in xc.zip(yc).zip(fc) {
        for l in 0..4 {
            let t = x4[l] * y4[l] * f4[l];
            s[l] += t;
            a[l] += t.abs();
        }
    }
    let (mut s_tail, mut a_tail) = (0.0, 0.0);
    for ((&x, &y), &f) in xr.iter().zip(yr).zip(fr) {
        let t = x * y * f;
        s_tail += t;
        a_tail += t.abs();
    }
    ((s[0] + s[1]) + (s[2] + s[3]) + s_tail, (a[0] + a[1]) + (a[2] + a[3]) + a_tail)
}

struct Walk<'a> {
    plan: &'a CountPlan,
    local: &'a [f64],
    width: usize,
    free: Vec<f64>,
    images: Vec<usize>,
    caches: Vec<f64>,
    sum: CompensatedSum,
    magnitude: f64,
}

impl Walk<'_> {
    /// `cache` indexes the row product for the last level; `extra` is a
    /// neighbour row of the last vertex not yet folded into it.
    fn descend(&mut self, level: usize, partial: f64, cache: usize, extra: Option<usize>) {
        let width = self.width;
        let depth = self.plan.depth();
        if level + 1 == depth {
            let c = &self.caches[cache * width + 2..(cache + 1) * width];
            let free = &self.free[2..];
            let (s, a) = match extra {
                Some(img) => masked_sum(c, &self.local[img * width + 2..(img + 1) * width], free),
                None => masked_sum(c, free, free),
            };
            self.sum.add(partial * s);
            self.magnitude += partial.abs() * a;
            return;
        }
        let feeds = self.plan.feeds_last[level];
        for w in 2..width {
            if self.free[w] == 0.0 {
                continue;
            }
            self.images[level + 2] = w;
            let mut factor = partial;
            for &slot in &self.plan.back_slots[level] {
                factor *= self.local[self.images[slot] * width + w];
            }
            // an exact zero contributes nothing to any injection below it
            if factor == 0.0 {
                continue;
            }
            self.free[w] = 0.0;
            if feeds && level + 2 == depth {
                self.descend(level + 1, factor, cache, Some(w));
            } else if feeds {
                let (head, tail) = self.caches.split_at_mut((level + 1) * width);
                let src = &head[cache * width..(cache + 1) * width];
                let row = &self.local[w * width..(w + 1) * width];
                for ((d, &c), &r) in tail[..width].iter_mut().zip(src).zip(row) {
                    *d = c * r;
                }
                self.descend(level + 1, factor, level + 1, extra);
            } else {
                self.descend(level + 1, factor, cache, extra);
            }
            self.free[w] = 1.0;
        }
    }
}

fn validate_request(n: usize, i: usize, j: usize, allowed: &[usize]) -> Result<(), CountError> {
    if i == j || i >= n || j >= n {
        return Err(CountError::InvalidPair { i, j, n });
    }
    let mut seen = vec![false; n];
    seen[i] = true;
    seen[j] = true;
    for &v in allowed {
        if v >= n || seen[v] {
            return Err(CountError::InvalidAllowed(v));
        }
        seen[v] = true;
    }
    Ok(())
}

/// `R_ij` restricted to injections whose internal images lie in
/// `req.allowed`.
pub fn count_attached(y: &SymMatrix, req: &CountRequest<'_>) -> Result<CountResult, CountError> {
    validate_request(y.n(), req.i, req.j, &req.allowed)?;
    Ok(CountPlan::new(req.motif).evaluate(y, req.i, req.j, &req.allowed))
}

/// Per-block counts `R_ij^(ℓ)`, one per block, in block order.
pub fn count_blocks(
    y: &SymMatrix,
    motif: &Motif,
    i: usize,
    j: usize,
    blocks: &[Vec<usize>],
) -> Result<Vec<CountResult>, CountError> {
    let plan = CountPlan::new(motif);
    count_blocks_with_plan(y, &plan, i, j, blocks)
}

pub fn count_blocks_with_plan(
    y: &SymMatrix,
    plan: &CountPlan,
    i: usize,
    j: usize,
    blocks: &[Vec<usize>],
) -> Result<Vec<CountResult>, CountError> {
    let n = y.n();
    if i == j || i >= n || j >= n {
        return Err(CountError::InvalidPair { i, j, n });
    }
    let size = blocks.first().map_or(0, Vec::len);
    if blocks.iter().any(|b| b.len() != size) {
        return Err(CountError::InvalidBlocks("unequal block sizes".into()));
    }
    let all: Vec<usize> = blocks.iter().flatten().copied().collect();
    validate_request(n, i, j, &all).map_err(|e| CountError::InvalidBlocks(e.to_string()))?;
    if all.len() != n - 2 {
        return Err(CountError::InvalidBlocks(format!("blocks cover {} of {} vertices", all.len(), n - 2)));
    }
    Ok(blocks.par_iter().map(|b| plan.evaluate(y, i, j, b)).collect())
}

/// Sequential variant used inside already-parallel loops.
pub(crate) fn count_blocks_sequential(y: &SymMatrix, plan: &CountPlan, i: usize, j: usize, blocks: &[Vec<usize>]) -> Vec<CountResult> {
    blocks.iter().map(|b| plan.evaluate(y, i, j, b)).collect()
}

/// Evaluates a count on a request known to be valid; used by Monte Carlo
/// loops that reuse one plan.
pub(crate) fn count_with_plan(y: &SymMatrix, plan: &CountPlan, i: usize, j: usize, allowed: &[usize]) -> CountResult {
    plan.evaluate(y, i, j, allowed)
}

/// `E[R_ij | z_i = z_j] = (m-2)!/(m-D-2)! · λ^|E| / K^D` with `D = |V| - 2`,
/// i.e. `(m-2)_D · (λ^r / K)^D`. Zero when fewer than `D` vertices remain.
pub fn expected_count_same(m: usize, k: usize, lambda: f64, motif: &Motif) -> f64 {
    let depth = motif.num_internal();
    if m < depth + 2 || lambda == 0.0 {
        return 0.0;
    }
    let edges = motif.num_edges() as i32;
    let direct = falling_factorial(m - 2, depth) * lambda.powi(edges) / (k as f64).powi(depth as i32);
    if direct.is_finite() && direct > 0.0 {
        direct
    } else {
        (ln_falling_factorial(m - 2, depth) + edges as f64 * lambda.ln() - depth as f64 * (k as f64).ln()).exp()
    }
}

/// Conditions under which [`variance_bound_rhs`] is a proven bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundHypotheses {
    pub q_at_most_quarter: bool,
    pub q_plus_two_lambda_at_most_one: bool,
    pub enough_vertices: bool,
    pub even_fastener_count: bool,
    pub cycle_long_enough: bool,
}

impl BoundHypotheses {
    pub fn all(&self) -> bool {
        self.q_at_most_quarter
            && self.q_plus_two_lambda_at_most_one
            && self.enough_vertices
            && self.even_fastener_count
            && self.cycle_long_enough
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceBound {
    pub value: f64,
    pub mean: f64,
    /// `2D³K²/m · (q̄/λ² ∨ q̄/p̄)^r`
    pub cross_term: f64,
    /// `2D³K/m · (p̄/λ² ∨ 1)^r`
    pub within_term: f64,
    pub hypotheses: BoundHypotheses,
}

fn hypotheses(m: usize, lambda: f64, q: f64, motif: &Motif) -> BoundHypotheses {
    let depth = motif.num_internal();
    // Motifs built by build_blowup_motif always satisfy the structural
    // conditions; generic motifs never claim them.
    let structural = motif.layout().is_some();
    BoundHypotheses {
        q_at_most_quarter: q <= 0.25,
        q_plus_two_lambda_at_most_one: q + 2.0 * lambda <= 1.0,
        enough_vertices: m >= 2 * depth + 4,
        even_fastener_count: structural,
        cycle_long_enough: structural,
    }
}

/// Upper envelope on `var(R_ij)` under either conditional law:
///
/// `E²·D²·[T1 + T2 + T1^D + T2^D]` with `T1 = 2D³K²/m·(q̄/λ² ∨ q̄/p̄)^r`,
/// `T2 = 2D³K/m·(p̄/λ² ∨ 1)^r`, `E = expected_count_same(m, ...)` and the
/// effective vertex count `m` used throughout. The value is returned even
/// when a hypothesis fails; check `hypotheses`.
pub fn variance_bound_rhs(m: usize, k: usize, lambda: f64, q: f64, motif: &Motif) -> VarianceBound {
    let depth = motif.num_internal() as f64;
    let r = motif.ratio().to_f64();
    let DerivedProbs { q_bar, p_bar } = DerivedProbs::new(q, lambda);
    let k = k as f64;
    let scale = 2.0 * depth.powi(3) / m as f64;
    let cross_ratio = (q_bar / (lambda * lambda)).max(q_bar / p_bar);
    let within_ratio = (p_bar / (lambda * lambda)).max(1.0);
    let cross_term = scale * k * k * cross_ratio.powf(r);
    let within_term = scale * k * within_ratio.powf(r);
    let d = motif.num_internal() as i32;
    let mean = expected_count_same(m, k as usize, lambda, motif);
    let value = mean * mean * depth * depth * (cross_term + within_term + cross_term.powi(d) + within_term.powi(d));
    VarianceBound { value, mean, cross_term, within_term, hypotheses: hypotheses(m, lambda, q, motif) }
}

/// `(λ²/(2q̄))^r >= 2K²D⁵ρ/m` and `λ^r >= 2KD⁵ρ/m`.
pub fn check_prop32_condition(m: usize, k: usize, lambda: f64, q: f64, motif: &Motif, rho: f64) -> Result<bool, CountError> {
    if !(rho > 1.0) {
        return Err(CountError::InvalidRho(rho));
    }
    let r = motif.ratio().to_f64();
    let d5 = (motif.num_internal() as f64).powi(5);
    let k = k as f64;
    let q_bar = DerivedProbs::new(q, lambda).q_bar;
    let first = (lambda * lambda / (2.0 * q_bar)).powf(r) >= 2.0 * k * k * d5 * rho / m as f64;
    let second = lambda.powf(r) >= 2.0 * k * d5 * rho / m as f64;
    Ok(first && second)
}
