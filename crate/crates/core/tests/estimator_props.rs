use blowup_motifs::counter::{count_attached, expected_count_same, CountRequest};
use blowup_motifs::estimator::{
    clusters_from_decisions, estimate_pair, median_of_means, partition_from_labels, recover, EstimatorConfig,
};
use blowup_motifs::motif::{build_blowup_motif, Motif};
use blowup_motifs::rational::Rational;
use blowup_motifs::sbm::{sample, SbmParams};
use proptest::prelude::*;

fn square() -> Motif {
    build_blowup_motif(4, 1, Rational::new(1, 2).unwrap()).unwrap()
}

fn decide(values: &[f64], threshold: f64) -> bool {
    median_of_means(values).unwrap() > threshold
}

proptest! {
    #[test]
    fn decision_is_scale_invariant(
        values in prop::collection::vec(-1e6f64..1e6, 1..9),
        threshold in 0.0f64..1e5,
        scale in 1e-3f64..1e3,
    ) {
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        // exact when the scale is a power of two
        let pow2 = scale.log2().round().exp2();
        let exact: Vec<f64> = values.iter().map(|v| v * pow2).collect();
        prop_assert_eq!(decide(&values, threshold), decide(&exact, threshold * pow2));
        let m = median_of_means(&values).unwrap();
        if (m - threshold).abs() > 1e-9 * (m.abs() + threshold) {
            prop_assert_eq!(decide(&values, threshold), decide(&scaled, threshold * scale));
        }
    }

    #[test]
    fn clusters_are_components_of_the_same_graph(
        n in 2usize..12,
        raw in prop::collection::vec((0usize..12, 0usize..12), 0..20),
    ) {
        let pairs: Vec<(usize, usize)> = raw.into_iter().map(|(a, b)| (a % n, b % n)).filter(|(a, b)| a != b).collect();
        let clusters = clusters_from_decisions(n, pairs.iter().copied());
        let mut label = vec![0u32; n];
        for (c, members) in clusters.iter().enumerate() {
            for &v in members {
                label[v] = c as u32;
            }
        }
        for &(a, b) in &pairs {
            prop_assert_eq!(label[a], label[b]);
        }
        prop_assert_eq!(partition_from_labels(&label), clusters.clone());
        prop_assert_eq!(clusters.iter().map(Vec::len).sum::<usize>(), n);
    }
}

#[test]
fn single_block_thresholds_the_global_count() {
    let m = square();
    let params = SbmParams::new(12, 2, 0.8, 0.1, 3).unwrap();
    let s = sample(&params).unwrap();
    let y = s.centered(0.1).dense();
    let config = EstimatorConfig::new(m.clone(), 1, 2, 0.7, 0.1);
    for (i, j) in [(0, 1), (2, 9), (5, 11)] {
        let e = estimate_pair(&y, &config, i, j).unwrap();
        let global = count_attached(&y, &CountRequest::full(&m, 12, i, j)).unwrap().value;
        assert_eq!(e.median, global);
        assert_eq!(e.threshold, 0.5 * expected_count_same(12, 2, 0.7, &m));
        assert_eq!(e.same(), global > e.threshold);
    }
}

#[test]
fn recovery_invariants_on_seeded_graphs() {
    let m = square();
    for seed in 0..4 {
        let params = SbmParams::new(22, 2, 0.9, 0.05, seed).unwrap();
        let s = sample(&params).unwrap();
        let y = s.centered(0.05).dense();
        let config = EstimatorConfig::new(m.clone(), 2, 2, 0.85, 0.05);
        let r = recover(&y, &config, s.labels(), true).unwrap();
        let pairs = r.pairs.as_ref().unwrap();
        assert!(r.xhat.iter().all(|&x| x == 0.5 || x == -0.5));
        let same = pairs.iter().filter(|p| p.same()).map(|p| (p.i, p.j));
        assert_eq!(clusters_from_decisions(22, same), r.clusters);
        if r.pair_error_rate == 0.0 {
            assert!(r.exact_match);
        }
        for p in pairs {
            assert_eq!(r.xhat_at(p.i, p.j), p.xhat);
        }
    }
}

#[test]
fn truth_length_is_checked() {
    let y = blowup_motifs::sbm::SymMatrix::zeros(6);
    let config = EstimatorConfig::new(square(), 1, 2, 0.5, 0.1);
    assert!(recover(&y, &config, &[0, 1], false).is_err());
}
