//! Certification of the partition inequality `|E≠| >= r·(ℓ - 1)`.
//!
//! For every partition of the motif's vertices into `ℓ` groups with `v1` and
//! `v2` in the same group, the number of edges joining distinct groups must
//! be at least `r·(ℓ - 1)` where `r = |E| / (|V| - 2)`. Small motifs are
//! certified by enumerating every restricted-growth string; larger ones by
//! uniform sampling plus a fixed batch of extremal partitions.
//!
//! The module also checks the two cycle-part inequalities the inequality
//! rests on (boundary edges of a cycle subset, and the fastener balance) and
//! the overlap cap `|E∩| <= r·u` for two injections sharing `2 + u` images.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motif::Motif;
use crate::rational::Rational;
use crate::rng::{stream, Purpose};

/// Default vertex cap for exhaustive certification.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 13;
/// Cycle parts with at most this many vertices are checked on all subsets.
pub const EXHAUSTIVE_SUBSET_CAP: usize = 20;

/// Leading elements fixed per parallel task during exhaustive enumeration.
const PREFIX_DEPTH: usize = 6;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("partition has {got} labels but the motif has {expected} vertices")]
    SizeMismatch { expected: usize, got: usize },
    #[error("motif has {vertices} vertices, above the exhaustive cap of {cap}; use certify_sampled instead")]
    CapExceeded { vertices: usize, cap: usize },
    #[error("motif carries no layer metadata")]
    MissingLayout,
    #[error("cycle part has {0} vertices, too many for exhaustive subset enumeration")]
    TooManySubsets(usize),
    #[error("universe of size {got} is smaller than the required {required}")]
    UniverseTooSmall { got: usize, required: usize },
}

/// Canonical partition labels: group ids appear in first-occurrence order
/// over the vertex indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionLabels {
    labels: Vec<usize>,
    num_groups: usize,
}

impl PartitionLabels {
    /// Relabels arbitrary group ids into restricted-growth form.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut mapping = std::collections::HashMap::new();
        let labels: Vec<usize> = raw
            .iter()
            .map(|&g| {
                let next = mapping.len();
                *mapping.entry(g).or_insert(next)
            })
            .collect();
        PartitionLabels { num_groups: mapping.len(), labels }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertifyMode {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlackReport {
    pub min_slack: Rational,
    pub argmin_partition: PartitionLabels,
    pub partitions_checked: u64,
    pub mode: CertifyMode,
}

/// Number of motif edges whose endpoints carry different labels.
pub fn edges_across(motif: &Motif, partition: &PartitionLabels) -> Result<usize, VerifyError> {
    if partition.len() != motif.num_vertices() {
        return Err(VerifyError::SizeMismatch { expected: motif.num_vertices(), got: partition.len() });
    }
    let l = partition.labels();
    Ok(motif.edges().iter().filter(|&&(u, w)| l[u] != l[w]).count())
}

/// `|E≠| - r·(ℓ - 1)` for one partition.
pub fn slack(motif: &Motif, partition: &PartitionLabels) -> Result<Rational, VerifyError> {
    let across = edges_across(motif, partition)? as i64;
    let groups = partition.num_groups() as i64;
    Ok(Rational::from_integer(across) - motif.ratio().scale(groups - 1))
}

/// The motif's vertices as enumeration elements: element 0 is `{v1, v2}`,
/// element `k >= 1` is the `k`-th other vertex in index order. Edges are
/// stored once, at their later endpoint.
struct Elements {
    vertex_of: Vec<usize>,
    element_of: Vec<usize>,
    back_edges: Vec<Vec<usize>>,
    r_num: i64,
    r_den: i64,
}

impl Elements {
    fn new(motif: &Motif) -> Self {
        let order = motif.vertex_order();
        let mut element_of = vec![0; motif.num_vertices()];
        let mut vertex_of = vec![motif.v1()];
        for (k, &v) in order.iter().enumerate().skip(2) {
            element_of[v] = k - 1;
            vertex_of.push(v);
        }
        let mut back_edges = vec![Vec::new(); vertex_of.len()];
        for &(u, w) in motif.edges() {
            let (eu, ew) = (element_of[u], element_of[w]);
            back_edges[eu.max(ew)].push(eu.min(ew));
        }
        let r = motif.ratio();
        Elements { vertex_of, element_of, back_edges, r_num: r.numer(), r_den: r.denom() }
    }

    fn len(&self) -> usize {
        self.vertex_of.len()
    }

    /// Slack scaled by `den(r)`.
    fn scaled_slack(&self, across: i64, groups: usize) -> i64 {
        across * self.r_den - self.r_num * (groups as i64 - 1)
    }

    fn evaluate(&self, rgs: &[u16]) -> (i64, usize) {
        let mut across = 0i64;
        for (k, back) in self.back_edges.iter().enumerate() {
            across += back.iter().filter(|&&b| rgs[b] != rgs[k]).count() as i64;
        }
        let groups = rgs.iter().copied().max().map_or(0, |m| m as usize + 1);
        (self.scaled_slack(across, groups), groups)
    }

    fn to_partition(&self, rgs: &[u16]) -> PartitionLabels {
        let raw: Vec<usize> = self.element_of.iter().map(|&e| rgs[e] as usize).collect();
        PartitionLabels::from_labels(&raw)
    }

    fn report(&self, best: i64, rgs: &[u16], checked: u64, mode: CertifyMode) -> SlackReport {
        SlackReport {
            min_slack: Rational::new(best, self.r_den).expect("den(r) >= 1"),
            argmin_partition: self.to_partition(rgs),
            partitions_checked: checked,
            mode,
        }
    }
}

struct Search<'a> {
    elements: &'a Elements,
    rgs: Vec<u16>,
    best: i64,
    best_rgs: Vec<u16>,
    leaves: u64,
}

impl Search<'_> {
    fn descend(&mut self, pos: usize, groups: usize, across: i64) {
        if pos == self.elements.len() {
            self.leaves += 1;
            let s = self.elements.scaled_slack(across, groups);
            if s < self.best {
                self.best = s;
                self.best_rgs.clone_from(&self.rgs);
            }
            return;
        }
        for label in 0..=groups {
            self.rgs[pos] = label as u16;
            let crossing = self.elements.back_edges[pos]
                .iter()
                .filter(|&&b| self.rgs[b] as usize != label)
                .count() as i64;
            self.descend(pos + 1, groups.max(label + 1), across + crossing);
        }
    }
}

fn rgs_prefixes(len: usize) -> Vec<Vec<u16>> {
    let mut out = vec![vec![0u16]];
    for _ in 1..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                let groups = *p.iter().max().unwrap() as usize + 1;
                (0..=groups).map(move |label| {
                    let mut q = p.clone();
                    q.push(label as u16);
                    q
                })
            })
            .collect();
    }
    out
}

/// Minimum slack over every partition with `v1` and `v2` in the same group.
///
/// Runs in parallel over restricted-growth prefixes; the reported argmin is
/// the lexicographically first minimizer regardless of thread count.
pub fn certify_exhaustive(motif: &Motif, max_vertices: usize) -> Result<SlackReport, VerifyError> {
    if motif.num_vertices() > max_vertices {
        return Err(VerifyError::CapExceeded { vertices: motif.num_vertices(), cap: max_vertices });
    }
    let elements = Elements::new(motif);
    let depth = PREFIX_DEPTH.min(elements.len());
    let results: Vec<(i64, Vec<u16>, u64)> = rgs_prefixes(depth)
        .into_par_iter()
        .map(|prefix| {
            let mut rgs = prefix.clone();
            rgs.resize(elements.len(), 0);
            let mut across = 0i64;
            for (k, &label) in prefix.iter().enumerate() {
                across += elements.back_edges[k].iter().filter(|&&b| prefix[b] != label).count() as i64;
            }
            let groups = *prefix.iter().max().unwrap() as usize + 1;
            let mut search = Search { elements: &elements, best_rgs: rgs.clone(), rgs, best: i64::MAX, leaves: 0 };
            search.descend(depth, groups, across);
            (search.best, search.best_rgs, search.leaves)
        })
        .collect();

    let checked = results.iter().map(|r| r.2).sum();
    let (best, best_rgs, _) = results
        .into_iter()
        .reduce(|acc, next| if next.0 < acc.0 { next } else { acc })
        .expect("at least one prefix");
    Ok(elements.report(best, &best_rgs, checked, CertifyMode::Exhaustive))
}

/// Uniform sampler over restricted-growth strings with element 0 fixed.
struct RgsSampler {
    /// ln of the number of completions from position `pos` with `m` groups.
    ln_completions: Vec<Vec<f64>>,
}

fn ln_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

impl RgsSampler {
    fn new(len: usize) -> Self {
        let mut table = vec![vec![0.0f64; len + 2]; len + 1];
        for pos in (1..len).rev() {
            for m in 1..=pos {
                table[pos][m] = ln_add((m as f64).ln() + table[pos + 1][m], table[pos + 1][m + 1]);
            }
        }
        RgsSampler { ln_completions: table }
    }

    fn sample(&self, len: usize, rng: &mut impl Rng) -> Vec<u16> {
        let mut rgs = vec![0u16; len];
        let mut groups = 1usize;
        for (pos, slot) in rgs.iter_mut().enumerate().skip(1) {
            let p_new = (self.ln_completions[pos + 1][groups + 1] - self.ln_completions[pos][groups]).exp();
            if rng.gen::<f64>() < p_new {
                *slot = groups as u16;
                groups += 1;
            } else {
                *slot = rng.gen_range(0..groups) as u16;
            }
        }
        rgs
    }
}

/// Deterministic extremal partitions (as restricted-growth strings over the
/// enumeration elements): the all-in-one and all-singleton partitions, one
/// merged block of `{v1, v2}` plus a window of internal vertices with the
/// rest singletons, its complement, and layer-aligned partitions.
fn adversarial_batch(motif: &Motif, elements: &Elements) -> Vec<Vec<u16>> {
    let len = elements.len();
    let internal = len - 1;
    let mut batch: Vec<Vec<usize>> = Vec::new();

    batch.push(vec![0; len]);
    let mut all_apart = vec![0usize];
    all_apart.extend(1..len);
    batch.push(all_apart);
    // every internal vertex together, away from v1 and v2
    let mut split = vec![1usize; len];
    split[0] = 0;
    batch.push(split);

    for start in 0..internal {
        for width in 1..=internal {
            if start + width > internal {
                break;
            }
            let window = |k: usize| k > start && k < 1 + start + width;
            // window merged with v1, v2; everything else a singleton
            batch.push((0..len).map(|k| if k == 0 || window(k) { 0 } else { k }).collect());
            // window as singletons; everything else merged with v1, v2
            batch.push((0..len).map(|k| if window(k) { k } else { 0 }).collect());
        }
    }

    if let Some(layout) = motif.layout() {
        let layers = layout.cycle_length;
        let layer_of = |k: usize| layout.positions[&elements.vertex_of[k]].layer;
        batch.push((0..len).map(|k| if k == 0 { 0 } else { layer_of(k) }).collect());
        for start in 1..=layers {
            for width in 1..=layers {
                let in_arc = |k: usize| {
                    let offset = (layer_of(k) + layers - start) % layers;
                    offset < width
                };
                // arc of layers as one group, rest with v1, v2
                batch.push((0..len).map(|k| usize::from(k != 0 && in_arc(k))).collect());
                // arc of layers as one group, rest singletons
                batch.push(
                    (0..len)
                        .map(|k| if k == 0 { 0 } else if in_arc(k) { len } else { k })
                        .collect(),
                );
            }
        }
    }

    batch
        .into_iter()
        .map(|raw| PartitionLabels::from_labels(&raw).labels().iter().map(|&g| g as u16).collect())
        .collect()
}

/// Minimum slack over the adversarial batch plus `num_samples` uniformly
/// drawn partitions. Sample `s` uses its own RNG stream, so the result
/// depends only on `(motif, num_samples, seed)`.
pub fn certify_sampled(motif: &Motif, num_samples: usize, seed: u64) -> SlackReport {
    let elements = Elements::new(motif);
    let len = elements.len();
    let sampler = RgsSampler::new(len);

    let mut candidates = adversarial_batch(motif, &elements);
    let sampled: Vec<Vec<u16>> = (0..num_samples)
        .into_par_iter()
        .map(|s| sampler.sample(len, &mut stream(seed, Purpose::Partitions, s as u64)))
        .collect();
    candidates.extend(sampled);

    let scored: Vec<i64> = candidates.par_iter().map(|rgs| elements.evaluate(rgs).0).collect();
    let (best_idx, best) = scored
        .iter()
        .enumerate()
        .fold((0, i64::MAX), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    elements.report(best, &candidates[best_idx], candidates.len() as u64, CertifyMode::Sampled)
}

/// How cycle subsets are visited by the lemma checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SubsetMode {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

impl SubsetMode {
    /// Exhaustive when the cycle part has at most 20 vertices.
    pub fn auto(motif: &Motif, samples: usize, seed: u64) -> Self {
        match motif.layout() {
            Some(l) if l.positions.len() <= EXHAUSTIVE_SUBSET_CAP => SubsetMode::Exhaustive,
            _ => SubsetMode::Sampled { samples, seed },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaWitness {
    /// Cycle vertices in the violating subset.
    pub subset: Vec<usize>,
    pub lhs: Rational,
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub holds: bool,
    pub mode: SubsetMode,
    pub subsets_checked: u64,
    pub witness: Option<LemmaWitness>,
}

/// Cycle part of a blow-up motif indexed `0..LB` in `(layer, slot)` order.
struct CyclePart {
    vertices: Vec<usize>,
    edges: Vec<(usize, usize)>,
    adjacency_masks: Vec<u64>,
    fastener_mask: u64,
    is_fastener: Vec<bool>,
    blowup: usize,
    rate: Rational,
}

impl CyclePart {
    fn new(motif: &Motif) -> Result<Self, VerifyError> {
        let layout = motif.layout().ok_or(VerifyError::MissingLayout)?;
        let vertices: Vec<usize> = layout.cycle_vertices().collect();
        let index: std::collections::HashMap<usize, usize> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let edges: Vec<(usize, usize)> = motif
            .edges()
            .iter()
            .filter_map(|&(u, w)| Some((*index.get(&u)?, *index.get(&w)?)))
            .collect();
        let mut adjacency_masks = vec![0u64; vertices.len()];
        if vertices.len() <= 64 {
            for &(a, b) in &edges {
                adjacency_masks[a] |= 1 << b;
                adjacency_masks[b] |= 1 << a;
            }
        }
        let is_fastener: Vec<bool> = vertices.iter().map(|&v| layout.is_fastener(v)).collect();
        let fastener_mask = is_fastener
            .iter()
            .enumerate()
            .filter(|(i, &f)| f && *i < 64)
            .fold(0u64, |m, (i, _)| m | 1 << i);
        Ok(CyclePart { vertices, edges, adjacency_masks, fastener_mask, is_fastener, blowup: layout.blowup, rate: layout.rate })
    }

    fn len(&self) -> usize {
        self.vertices.len()
    }

    fn boundary_mask(&self, mask: u64) -> u64 {
        let mut total = 0u64;
        let mut rest = mask;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            total += (self.adjacency_masks[v] & !mask).count_ones() as u64;
        }
        total
    }

    fn boundary_set(&self, inside: &[bool]) -> u64 {
        self.edges.iter().filter(|&&(a, b)| inside[a] != inside[b]).count() as u64
    }

    fn subset_of_mask(&self, mask: u64) -> Vec<usize> {
        (0..self.len()).filter(|&i| mask >> i & 1 == 1).map(|i| self.vertices[i]).collect()
    }

    fn subset_of_set(&self, inside: &[bool]) -> Vec<usize> {
        (0..self.len()).filter(|&i| inside[i]).map(|i| self.vertices[i]).collect()
    }

    /// Subsets used in sampled mode: every contiguous run in `(layer, slot)`
    /// order, then random subsets with a random inclusion rate.
    fn sampled_subsets(&self, samples: usize, seed: u64) -> Vec<Vec<bool>> {
        let n = self.len();
        let mut out = Vec::new();
        for start in 0..n {
            for width in 1..n {
                out.push((0..n).map(|i| (i + n - start) % n < width).collect());
            }
        }
        let drawn: Vec<Vec<bool>> = (0..samples)
            .into_par_iter()
            .map(|s| {
                let mut rng = stream(seed, Purpose::Subsets, s as u64);
                let rate: f64 = rng.gen();
                (0..n).map(|_| rng.gen::<f64>() < rate).collect()
            })
            .collect();
        out.extend(drawn);
        out
    }
}

fn finish_check(mode: SubsetMode, checked: u64, witness: Option<LemmaWitness>) -> LemmaCheck {
    LemmaCheck { holds: witness.is_none(), mode, subsets_checked: checked, witness }
}

/// Every nonempty proper subset `S` of cycle vertices has at least `2B`
/// cycle edges leaving it.
pub fn check_boundary_lemma(motif: &Motif, mode: SubsetMode) -> Result<LemmaCheck, VerifyError> {
    let cycle = CyclePart::new(motif)?;
    let n = cycle.len();
    let need = 2 * cycle.blowup as u64;
    let witness_of = |subset: Vec<usize>, got: u64| LemmaWitness {
        subset,
        lhs: Rational::from_integer(got as i64),
        rhs: Rational::from_integer(need as i64),
    };
    match mode {
        SubsetMode::Exhaustive => {
            if n > EXHAUSTIVE_SUBSET_CAP {
                return Err(VerifyError::TooManySubsets(n));
            }
            let full = (1u64 << n) - 1;
            let found = (1..full)
                .into_par_iter()
                .find_first(|&mask| cycle.boundary_mask(mask) < need)
                .map(|mask| witness_of(cycle.subset_of_mask(mask), cycle.boundary_mask(mask)));
            Ok(finish_check(mode, full - 1, found))
        }
        SubsetMode::Sampled { samples, seed } => {
            let subsets: Vec<Vec<bool>> = cycle
                .sampled_subsets(samples, seed)
                .into_iter()
                .filter(|s| s.iter().any(|&b| b) && !s.iter().all(|&b| b))
                .collect();
            let found = subsets
                .par_iter()
                .find_first(|s| cycle.boundary_set(s) < need)
                .map(|s| witness_of(cycle.subset_of_set(s), cycle.boundary_set(s)));
            Ok(finish_check(mode, subsets.len() as u64, found))
        }
    }
}

/// For every subset `V0` of cycle vertices (the ones sharing the group of
/// `v1`, `v2`): `|E↑(V0)| + 2·|V_fst \ V0| >= 2a·|V_cyc \ V0|`.
pub fn check_fastener_lemma(motif: &Motif, mode: SubsetMode) -> Result<LemmaCheck, VerifyError> {
    let cycle = CyclePart::new(motif)?;
    let n = cycle.len();
    let (a_num, a_den) = (cycle.rate.numer(), cycle.rate.denom());
    // (lhs·den, rhs·den)
    let sides = |boundary: u64, outside_fasteners: u64, outside: u64| {
        ((boundary as i64 + 2 * outside_fasteners as i64) * a_den, 2 * a_num * outside as i64)
    };
    let witness_of = |subset: Vec<usize>, (lhs, rhs): (i64, i64)| LemmaWitness {
        subset,
        lhs: Rational::new(lhs, a_den).unwrap(),
        rhs: Rational::new(rhs, a_den).unwrap(),
    };
    match mode {
        SubsetMode::Exhaustive => {
            if n > EXHAUSTIVE_SUBSET_CAP {
                return Err(VerifyError::TooManySubsets(n));
            }
            let full = (1u64 << n) - 1;
            let eval = |mask: u64| {
                sides(
                    cycle.boundary_mask(mask),
                    (cycle.fastener_mask & !mask).count_ones() as u64,
                    (full & !mask).count_ones() as u64,
                )
            };
            let found = (0..=full)
                .into_par_iter()
                .find_first(|&mask| {
                    let (l, r) = eval(mask);
                    l < r
                })
                .map(|mask| witness_of(cycle.subset_of_mask(mask), eval(mask)));
            Ok(finish_check(mode, full + 1, found))
        }
        SubsetMode::Sampled { samples, seed } => {
            let mut subsets = vec![vec![false; n], vec![true; n]];
            subsets.extend(cycle.sampled_subsets(samples, seed));
            let eval = |s: &[bool]| {
                let outside_fst = (0..n).filter(|&i| !s[i] && cycle.is_fastener[i]).count() as u64;
                let outside = s.iter().filter(|&&b| !b).count() as u64;
                sides(cycle.boundary_set(s), outside_fst, outside)
            };
            let found = subsets
                .par_iter()
                .find_first(|s| {
                    let (l, r) = eval(s);
                    l < r
                })
                .map(|s| witness_of(cycle.subset_of_set(s), eval(s)));
            Ok(finish_check(mode, subsets.len() as u64, found))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapWitness {
    pub u: usize,
    pub shared_edges: usize,
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapCheck {
    pub holds: bool,
    pub trials: u64,
    /// Largest `|E∩|` observed for each `u = 0..=|V|-2`.
    pub max_shared_by_u: Vec<usize>,
    /// Whether `|E∩| = r·u` was observed at full overlap `u = |V| - 2`.
    pub equality_at_full_overlap: bool,
    pub witness: Option<OverlapWitness>,
}

fn shared_edges(motif: &Motif, first: &[usize], second: &[usize]) -> usize {
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let labeled: HashSet<(usize, usize)> = motif.edges().iter().map(|&(u, w)| key(first[u], first[w])).collect();
    motif.edges().iter().filter(|&&(u, w)| labeled.contains(&key(second[u], second[w]))).count()
}

/// Draws pairs of injections `V -> 0..universe_size` that agree on `v1`, `v2`
/// and share exactly `2 + u` images, sweeping `u` over `0..=|V|-2`, and
/// checks `|E∩| <= r·u` exactly.
///
/// Trials alternate between aligned pairs (the second injection agrees with
/// the first on `u` internal vertices) and scrambled pairs (the shared images
/// are reassigned to random internal vertices). The identical pair is always
/// included.
pub fn check_overlap_cap(motif: &Motif, universe_size: usize, trials: usize, seed: u64) -> Result<OverlapCheck, VerifyError> {
    let internal = motif.num_internal();
    let required = 2 * internal + 2;
    if universe_size < required {
        return Err(VerifyError::UniverseTooSmall { got: universe_size, required });
    }
    let nv = motif.num_vertices();
    let r = motif.ratio();
    let order = motif.vertex_order();
    let inner: Vec<usize> = order[2..].to_vec();

    let draw = |t: usize| -> (usize, Vec<usize>, Vec<usize>) {
        let mut rng = stream(seed, Purpose::Injections, t as u64);
        let u = t % (internal + 1);
        let aligned = (t / (internal + 1)).is_multiple_of(2);
        let mut universe: Vec<usize> = (0..universe_size).collect();
        universe.shuffle(&mut rng);
        let mut first = vec![0; nv];
        for (slot, &v) in order.iter().enumerate() {
            first[v] = universe[slot];
        }
        let mut fresh = universe[nv..].iter().copied();
        let mut second = vec![usize::MAX; nv];
        second[motif.v1()] = first[motif.v1()];
        second[motif.v2()] = first[motif.v2()];

        let reused: Vec<usize> = inner.choose_multiple(&mut rng, u).copied().collect();
        if aligned {
            for &v in &reused {
                second[v] = first[v];
            }
        } else {
            let targets: Vec<usize> = inner.choose_multiple(&mut rng, u).copied().collect();
            for (&src, &dst) in reused.iter().zip(&targets) {
                second[dst] = first[src];
            }
        }
        for &v in &inner {
            if second[v] == usize::MAX {
                second[v] = fresh.next().expect("universe holds 2|V|-2 images");
            }
        }
        (u, first, second)
    };

    let mut outcomes: Vec<(usize, usize, Vec<usize>, Vec<usize>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (u, first, second) = draw(t);
            (u, shared_edges(motif, &first, &second), first, second)
        })
        .collect();
    let identity = draw(internal).1;
    outcomes.push((internal, motif.num_edges(), identity.clone(), identity));

    let mut max_shared_by_u = vec![0usize; internal + 1];
    let mut witness = None;
    let mut equality_at_full_overlap = false;
    for (u, shared, first, second) in outcomes {
        max_shared_by_u[u] = max_shared_by_u[u].max(shared);
        let cap = r.scale(u as i64);
        let got = Rational::from_integer(shared as i64);
        if got > cap && witness.is_none() {
            witness = Some(OverlapWitness { u, shared_edges: shared, first, second });
        }
        if u == internal && got == cap {
            equality_at_full_overlap = true;
        }
    }
    Ok(OverlapCheck {
        holds: witness.is_none(),
        trials: trials as u64 + 1,
        max_shared_by_u,
        equality_at_full_overlap,
        witness,
    })
}
