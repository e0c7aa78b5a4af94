//! Recover communities with the median-of-means estimator.

use blowup_motifs::estimator::{paper_default_blocks, recover, EstimatorConfig};
use blowup_motifs::motif::build_blowup_motif;
use blowup_motifs::rational::Rational;
use blowup_motifs::sbm::{sample, SbmParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let motif = build_blowup_motif(3, 1, Rational::new(2, 3)?)?;
    let params = SbmParams::new(26, 2, 0.95, 0.05, 9)?;
    let s = sample(&params)?;
    let blocks = 2;
    println!("n = {}, blocks = {blocks} (24 ln n would be {})", params.n, paper_default_blocks(params.n));

    let mut config = EstimatorConfig::new(motif, blocks, params.k, params.lambda(), params.q);
    for scale in [0.25, 0.5, 1.0] {
        config.threshold_scale = scale;
        let r = recover(&s.centered(params.q).dense(), &config, s.labels(), false)?;
        println!(
            "threshold x{scale}: {} clusters, exact match {}, pair error {:.3}",
            r.clusters.len(),
            r.exact_match,
            r.pair_error_rate
        );
    }
    println!("truth {:?}", s.labels());
    Ok(())
}
