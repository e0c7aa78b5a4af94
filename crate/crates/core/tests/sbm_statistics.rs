use blowup_motifs::sbm::{sample, sample_conditioned, Pin, SbmParams};

const DRAWS: u64 = 100_000;

fn within(mean: f64, target: f64, sd: f64, sigmas: f64) -> bool {
    (mean - target).abs() <= sigmas * sd / (DRAWS as f64).sqrt()
}

#[test]
fn edge_density_is_the_label_mixture() {
    let params = SbmParams::new(2, 2, 0.9, 0.1, 0).unwrap();
    let hits = (0..DRAWS).filter(|&s| sample(&params.with_seed(s)).unwrap().has_edge(0, 1)).count();
    let rate = hits as f64 / DRAWS as f64;
    assert!(within(rate, 0.5, 0.5, 3.0), "density {rate}");
}

#[test]
fn third_label_is_uniform_under_either_pin() {
    let params = SbmParams::new(3, 3, 0.6, 0.2, 0).unwrap();
    for pin in [Pin::Same, Pin::Different] {
        let mut counts = [0u64; 3];
        for s in 0..DRAWS {
            counts[sample_conditioned(&params.with_seed(s), pin).unwrap().labels()[2] as usize] += 1;
        }
        let sd = (1.0f64 / 3.0 * (2.0 / 3.0)).sqrt();
        for c in counts {
            assert!(within(c as f64 / DRAWS as f64, 1.0 / 3.0, sd, 4.0), "{pin:?} {counts:?}");
        }
    }
}

#[test]
fn centered_pair_entry_has_mean_lambda_or_zero() {
    let (p, q) = (0.7, 0.2);
    let params = SbmParams::new(5, 2, p, q, 0).unwrap();
    for (pin, target, rate) in [(Pin::Same, p - q, p), (Pin::Different, 0.0, q)] {
        let total: f64 = (0..DRAWS)
            .map(|s| sample_conditioned(&params.with_seed(s), pin).unwrap().centered(q).entry(0, 1))
            .sum();
        let sd = (rate * (1.0 - rate)).sqrt();
        assert!(within(total / DRAWS as f64, target, sd, 4.0), "{pin:?}");
    }
}

#[test]
fn different_pin_with_two_labels_swaps() {
    let params = SbmParams::new(6, 2, 0.6, 0.2, 0).unwrap();
    for s in 0..200 {
        let z = sample_conditioned(&params.with_seed(s), Pin::Different).unwrap().labels().to_vec();
        assert_eq!(z[1], 1 - z[0]);
    }
    let single = SbmParams::new(6, 1, 0.6, 0.2, 0).unwrap();
    assert!(sample_conditioned(&single, Pin::Different).is_err());
}
