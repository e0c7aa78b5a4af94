//! Blow-up cycle motifs with fasteners.
//!
//! `G(L, B, a)` replaces every node of an `L`-cycle by a layer of `B`
//! vertices, joins consecutive layers by complete bipartite graphs and
//! attaches `a·L·B` of the cycle vertices ("fastener nodes") alternately to
//! the two distinguished vertices `v1` and `v2`. The resulting graph has
//! exactly `(B + a)` edges per non-distinguished vertex.
//!
//! Vertex numbering is fixed: `v1 = 0`, `v2 = 1`, and the cycle vertex in
//! layer `ω` and slot `t` (both 1-based) is `2 + (ω - 1)·B + (t - 1)`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

pub const MOTIF_DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MotifError {
    #[error("fastener rate a = {0} must satisfy 0 < a < 1")]
    RateOutOfRange(Rational),
    #[error("blow-up factor B must be at least 1")]
    ZeroBlowup,
    #[error("cycle length L = {length} must be at least max(3, ceil(2/a)) = {minimum}")]
    CycleTooShort { length: usize, minimum: usize },
    #[error("a·L·B = {0} must be an even integer")]
    OddFastenerCount(Rational),
    #[error("exponent r = {0} must be a finite non-integer value greater than 1")]
    InvalidExponent(f64),
    #[error("eps = {0} must lie in (0, 1)")]
    InvalidTolerance(f64),
    #[error("no fraction with denominator <= {bound} approximates r = {r} within {tolerance}")]
    NoApproximation { r: f64, bound: i64, tolerance: f64 },
    #[error("invalid motif: {0}")]
    Invalid(String),
    #[error("malformed motif document: {0}")]
    Document(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Position of a cycle vertex: `layer` in `1..=L`, `slot` in `1..=B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CyclePosition {
    pub layer: usize,
    pub slot: usize,
}

/// Layer metadata carried by motifs built with [`build_blowup_motif`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlowupLayout {
    pub cycle_length: usize,
    pub blowup: usize,
    pub rate: Rational,
    /// Cycle vertex -> position; the two distinguished vertices are absent.
    pub positions: BTreeMap<usize, CyclePosition>,
    pub fasteners_v1: Vec<usize>,
    pub fasteners_v2: Vec<usize>,
}

impl BlowupLayout {
    pub fn cycle_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.positions.keys().copied()
    }

    pub fn is_fastener(&self, v: usize) -> bool {
        self.fasteners_v1.contains(&v) || self.fasteners_v2.contains(&v)
    }
}

/// A motif: a simple connected graph with two distinguished, non-adjacent
/// vertices. Immutable once constructed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Motif {
    num_vertices: usize,
    v1: usize,
    v2: usize,
    edges: Vec<(usize, usize)>,
    layout: Option<BlowupLayout>,
}

impl Motif {
    /// Builds a generic motif (no layer metadata) after validating it.
    pub fn from_edges(
        num_vertices: usize,
        v1: usize,
        v2: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, MotifError> {
        let mut normalized: Vec<(usize, usize)> = edges
            .into_iter()
            .map(|(u, w)| if u <= w { (u, w) } else { (w, u) })
            .collect();
        normalized.sort_unstable();
        let motif = Motif { num_vertices, v1, v2, edges: normalized, layout: None };
        motif.validate_graph()?;
        Ok(motif)
    }

    fn validate_graph(&self) -> Result<(), MotifError> {
        let n = self.num_vertices;
        let invalid = |msg: String| Err(MotifError::Invalid(msg));
        if n < 3 {
            return invalid(format!("a motif needs at least 3 vertices, got {n}"));
        }
        if self.v1 >= n || self.v2 >= n || self.v1 == self.v2 {
            return invalid(format!("distinguished vertices ({}, {}) must be distinct and < {n}", self.v1, self.v2));
        }
        for w in self.edges.windows(2) {
            if w[0] == w[1] {
                return invalid(format!("duplicate edge {:?}", w[0]));
            }
        }
        for &(u, w) in &self.edges {
            if u == w {
                return invalid(format!("self-loop at vertex {u}"));
            }
            if w >= n {
                return invalid(format!("edge ({u}, {w}) references a vertex >= {n}"));
            }
            if (u, w) == (self.v1.min(self.v2), self.v1.max(self.v2)) {
                return invalid("(v1, v2) must not be an edge".to_string());
            }
        }
        if !self.is_connected() {
            return invalid("motif graph is not connected".to_string());
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let adjacency = self.adjacency();
        let mut seen = vec![false; self.num_vertices];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of non-distinguished vertices, `|V| - 2`.
    pub fn num_internal(&self) -> usize {
        self.num_vertices - 2
    }

    pub fn v1(&self) -> usize {
        self.v1
    }

    pub fn v2(&self) -> usize {
        self.v2
    }

    /// Edges as `(u, w)` with `u < w`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn layout(&self) -> Option<&BlowupLayout> {
        self.layout.as_ref()
    }

    /// Edge-to-internal-vertex ratio `r = |E| / (|V| - 2)`.
    pub fn ratio(&self) -> Rational {
        Rational::new(self.num_edges() as i64, self.num_internal() as i64)
            .expect("motifs have at least one internal vertex")
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adjacency = vec![Vec::new(); self.num_vertices];
        for &(u, w) in &self.edges {
            adjacency[u].push(w);
            adjacency[w].push(u);
        }
        adjacency
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(u, w)| u == v || w == v).count()
    }

    /// Enumeration order used by the counter and the partition enumerator:
    /// `v1`, `v2`, then every other vertex in increasing index order (which
    /// is lexicographic `(layer, slot)` order for blow-up motifs).
    pub fn vertex_order(&self) -> Vec<usize> {
        let mut order = vec![self.v1, self.v2];
        order.extend((0..self.num_vertices).filter(|&v| v != self.v1 && v != self.v2));
        order
    }

    /// Returns a copy without layer metadata, e.g. before editing edges.
    pub fn without_layout(&self) -> Motif {
        Motif { layout: None, ..self.clone() }
    }

    /// Short human label such as `G(4,1,1/2)` or `motif(|V|=3,|E|=2)`.
    pub fn label(&self) -> String {
        match &self.layout {
            Some(l) => format!("G({},{},{})", l.cycle_length, l.blowup, l.rate),
            None => format!("motif(|V|={},|E|={})", self.num_vertices, self.num_edges()),
        }
    }
}

fn validate_parameters(cycle_length: usize, blowup: usize, rate: Rational) -> Result<(), MotifError> {
    if rate <= Rational::ZERO || rate >= Rational::ONE {
        return Err(MotifError::RateOutOfRange(rate));
    }
    if blowup == 0 {
        return Err(MotifError::ZeroBlowup);
    }
    // ceil(2/a) = ceil(2·den/num)
    let two_over_a = ((2 * rate.denom()) as u64).div_ceil(rate.numer() as u64) as usize;
    let minimum = two_over_a.max(3);
    if cycle_length < minimum {
        return Err(MotifError::CycleTooShort { length: cycle_length, minimum });
    }
    let fasteners = rate.scale((cycle_length * blowup) as i64);
    if !fasteners.is_integer() || fasteners.numer() % 2 != 0 {
        return Err(MotifError::OddFastenerCount(fasteners));
    }
    Ok(())
}

/// Number of fastener nodes per layer, `(s_1, ..., s_L)`, from the recurrence
/// `s_0 = 0`, `s_ω = ⌊a·ω·B⌋ - (s_0 + ... + s_{ω-1})`.
pub fn fastener_counts(cycle_length: usize, blowup: usize, rate: Rational) -> Result<Vec<usize>, MotifError> {
    validate_parameters(cycle_length, blowup, rate)?;
    let mut counts = Vec::with_capacity(cycle_length);
    let mut running = 0i64;
    for omega in 1..=cycle_length {
        let target = rate.scale((omega * blowup) as i64).floor();
        let s = target - running;
        counts.push(s as usize);
        running += s;
    }
    Ok(counts)
}

/// Vertex index of cycle position `(layer, slot)` (both 1-based).
pub fn cycle_vertex(blowup: usize, layer: usize, slot: usize) -> usize {
    2 + (layer - 1) * blowup + (slot - 1)
}

/// Constructs `G(L, B, a)`.
///
/// Within a layer the fastener nodes are the lowest slots; fastener nodes are
/// then assigned alternately to `v1` and `v2` in `(layer, slot)` order.
pub fn build_blowup_motif(cycle_length: usize, blowup: usize, rate: Rational) -> Result<Motif, MotifError> {
    let counts = fastener_counts(cycle_length, blowup, rate)?;
    let (v1, v2) = (0usize, 1usize);
    let num_vertices = cycle_length * blowup + 2;

    let mut positions = BTreeMap::new();
    for layer in 1..=cycle_length {
        for slot in 1..=blowup {
            positions.insert(cycle_vertex(blowup, layer, slot), CyclePosition { layer, slot });
        }
    }

    let mut edges = BTreeSet::new();
    for layer in 1..=cycle_length {
        let next = layer % cycle_length + 1;
        for t in 1..=blowup {
            for t2 in 1..=blowup {
                let u = cycle_vertex(blowup, layer, t);
                let w = cycle_vertex(blowup, next, t2);
                edges.insert((u.min(w), u.max(w)));
            }
        }
    }

    let (mut fasteners_v1, mut fasteners_v2) = (Vec::new(), Vec::new());
    let mut toggle = false;
    for (layer, &count) in (1..=cycle_length).zip(&counts) {
        for slot in 1..=count {
            let v = cycle_vertex(blowup, layer, slot);
            if toggle {
                fasteners_v2.push(v);
                edges.insert((v2, v));
            } else {
                fasteners_v1.push(v);
                edges.insert((v1, v));
            }
            toggle = !toggle;
        }
    }

    let layout = BlowupLayout {
        cycle_length,
        blowup,
        rate,
        positions,
        fasteners_v1,
        fasteners_v2,
    };
    let motif = Motif {
        num_vertices,
        v1,
        v2,
        edges: edges.into_iter().collect(),
        layout: Some(layout),
    };
    debug_assert!(motif.validate_graph().is_ok());
    Ok(motif)
}

/// Result of [`approximate_exponent`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExponentApproximation {
    pub cycle_length: usize,
    pub blowup: usize,
    pub rate: Rational,
}

impl ExponentApproximation {
    pub fn exponent(&self) -> Rational {
        Rational::from_integer(self.blowup as i64) + self.rate
    }
}

/// Rational stand-in `B + a` for a non-integer exponent `r > 1`.
///
/// `B = ⌊r⌋`; `a` is the closest fraction in `(0, 1)` to the fractional part
/// of `r` with denominator at most `max(⌈2/(eps·r²)⌉, 2)` (ties go to the
/// smaller denominator); `L = 2·den(a)·B`.
pub fn approximate_exponent(r: f64, eps: f64) -> Result<ExponentApproximation, MotifError> {
    if !r.is_finite() || r <= 1.0 || r.fract() == 0.0 {
        return Err(MotifError::InvalidExponent(r));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(MotifError::InvalidTolerance(eps));
    }
    let blowup = r.floor() as usize;
    let frac = r - r.floor();
    let bound = ((2.0 / (eps * r * r)).ceil() as i64).max(2);
    let tolerance = eps * r * r / 2.0;

    let mut best: Option<(f64, i64, i64)> = None;
    for den in 2..=bound {
        let num = ((frac * den as f64).round() as i64).clamp(1, den - 1);
        let err = (num as f64 / den as f64 - frac).abs();
        if best.is_none_or(|(e, _, _)| err < e) {
            best = Some((err, num, den));
        }
    }
    let (err, num, den) = best.expect("bound >= 2");
    if err > tolerance {
        return Err(MotifError::NoApproximation { r, bound, tolerance });
    }
    let rate = Rational::new(num, den).expect("den >= 2");
    let cycle_length = 2 * rate.denom() as usize * blowup;
    validate_parameters(cycle_length, blowup, rate)?;
    Ok(ExponentApproximation { cycle_length, blowup, rate })
}

/// JSON form of a motif.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifDocument {
    pub version: u32,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub cycle_length: Option<usize>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub blowup: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Rational>,
    pub num_vertices: usize,
    pub v1: usize,
    pub v2: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<BTreeMap<usize, [usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fasteners_v1: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fasteners_v2: Option<Vec<usize>>,
}

pub fn export_motif(motif: &Motif) -> MotifDocument {
    let layout = motif.layout();
    MotifDocument {
        version: MOTIF_DOCUMENT_VERSION,
        cycle_length: layout.map(|l| l.cycle_length),
        blowup: layout.map(|l| l.blowup),
        a: layout.map(|l| l.rate),
        num_vertices: motif.num_vertices,
        v1: motif.v1,
        v2: motif.v2,
        edges: motif.edges.iter().map(|&(u, w)| [u, w]).collect(),
        layers: layout.map(|l| {
            l.positions
                .iter()
                .map(|(&v, p)| (v, [p.layer, p.slot]))
                .collect()
        }),
        fasteners_v1: layout.map(|l| l.fasteners_v1.clone()),
        fasteners_v2: layout.map(|l| l.fasteners_v2.clone()),
    }
}

/// Rebuilds a motif from its document, re-validating every invariant.
///
/// Documents carrying `L`, `B` and `a` must match `G(L, B, a)` exactly;
/// documents without them are accepted as generic motifs.
pub fn import_motif(doc: &MotifDocument) -> Result<Motif, MotifError> {
    if doc.version != MOTIF_DOCUMENT_VERSION {
        return Err(MotifError::Invalid(format!("unsupported document version {}", doc.version)));
    }
    let generic = Motif::from_edges(
        doc.num_vertices,
        doc.v1,
        doc.v2,
        doc.edges.iter().map(|&[u, w]| (u, w)),
    )?;
    match (doc.cycle_length, doc.blowup, doc.a) {
        (None, None, None) => {
            if doc.layers.is_some() || doc.fasteners_v1.is_some() || doc.fasteners_v2.is_some() {
                return Err(MotifError::Invalid("layer metadata present without L, B and a".into()));
            }
            Ok(generic)
        }
        (Some(l), Some(b), Some(a)) => {
            let expected = build_blowup_motif(l, b, a)?;
            let expected_doc = export_motif(&expected);
            if generic.edges != expected.edges
                || (doc.v1, doc.v2, doc.num_vertices) != (expected.v1, expected.v2, expected.num_vertices)
            {
                return Err(MotifError::Invalid(format!("edge set does not match G({l},{b},{a})")));
            }
            if doc.layers != expected_doc.layers
                || doc.fasteners_v1 != expected_doc.fasteners_v1
                || doc.fasteners_v2 != expected_doc.fasteners_v2
            {
                return Err(MotifError::Invalid(format!("layer metadata does not match G({l},{b},{a})")));
            }
            Ok(expected)
        }
        _ => Err(MotifError::Invalid("L, B and a must be given together".into())),
    }
}

pub fn motif_to_json(motif: &Motif) -> String {
    serde_json::to_string_pretty(&export_motif(motif)).expect("motif documents always serialize")
}

pub fn motif_from_json(text: &str) -> Result<Motif, MotifError> {
    let doc: MotifDocument = serde_json::from_str(text)?;
    import_motif(&doc)
}

pub fn read_motif(path: impl AsRef<Path>) -> Result<Motif, MotifError> {
    motif_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_motif(motif: &Motif, path: impl AsRef<Path>) -> Result<(), MotifError> {
    std::fs::write(path, motif_to_json(motif))?;
    Ok(())
}
