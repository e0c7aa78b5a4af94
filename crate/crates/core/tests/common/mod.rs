#![allow(dead_code)]

use blowup_motifs::motif::Motif;
use blowup_motifs::sbm::SymMatrix;
use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Calls `f` on every injection as an explicit image vector indexed by
/// motif vertex.
pub fn for_each_injection(motif: &Motif, i: usize, j: usize, allowed: &[usize], mut f: impl FnMut(&[usize])) {
    let inner: Vec<usize> = (0..motif.num_vertices()).filter(|&v| v != motif.v1() && v != motif.v2()).collect();
    let mut image = vec![0; motif.num_vertices()];
    image[motif.v1()] = i;
    image[motif.v2()] = j;
    for tuple in allowed.iter().copied().permutations(inner.len()) {
        for (&v, &w) in inner.iter().zip(&tuple) {
            image[v] = w;
        }
        f(&image);
    }
}

/// Plain float sum of edge products over the materialized injections.
pub fn float_oracle(y: &SymMatrix, motif: &Motif, i: usize, j: usize, allowed: &[usize]) -> f64 {
    let mut total = 0.0;
    for_each_injection(motif, i, j, allowed, |img| {
        total += motif.edges().iter().map(|&(u, w)| y.get(img[u], img[w])).product::<f64>();
    });
    total
}

pub fn big(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn pow(x: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}

/// Exact value for a matrix whose off-diagonal entries take only the two
/// values `hi` and `lo`: histogram injections by how many motif edges land
/// on `hi` entries, then sum `c_k · hi^k · lo^(|E|-k)` in rationals.
pub fn exact_two_valued(y: &SymMatrix, motif: &Motif, i: usize, j: usize, allowed: &[usize], hi: f64, lo: f64) -> BigRational {
    let edges = motif.num_edges();
    let mut histogram = vec![0u64; edges + 1];
    for_each_injection(motif, i, j, allowed, |img| {
        let k = motif.edges().iter().filter(|&&(u, w)| y.get(img[u], img[w]) == hi).count();
        histogram[k] += 1;
    });
    let (h, l) = (big(hi), big(lo));
    histogram
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .fold(BigRational::zero(), |acc, (k, &c)| {
            acc + BigRational::from_integer(BigInt::from(c)) * pow(&h, k) * pow(&l, edges - k)
        })
}

pub fn abs_diff_within(value: f64, exact: &BigRational, bound: f64) -> bool {
    (big(value) - exact).abs() <= big(bound)
}
