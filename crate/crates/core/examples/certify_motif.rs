//! Check the partition condition and the cycle lemmas on a motif.
//!
//! Small motifs are enumerated exhaustively; larger ones fall back to
//! sampled partitions plus an adversarial batch.

use blowup_motifs::motif::build_blowup_motif;
use blowup_motifs::rational::Rational;
use blowup_motifs::verifier::{
    certify_exhaustive, certify_sampled, check_boundary_lemma, check_fastener_lemma, check_overlap_cap, SubsetMode,
    DEFAULT_EXHAUSTIVE_CAP,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (l, b, num, den) in [(4, 1, 1, 2), (5, 2, 2, 5), (10, 3, 1, 5)] {
        let motif = build_blowup_motif(l, b, Rational::new(num, den)?)?;
        let report = if motif.num_vertices() <= DEFAULT_EXHAUSTIVE_CAP {
            certify_exhaustive(&motif, DEFAULT_EXHAUSTIVE_CAP)?
        } else {
            certify_sampled(&motif, 5_000, 1)
        };
        let mode = SubsetMode::auto(&motif, 5_000, 1);
        let boundary = check_boundary_lemma(&motif, mode)?;
        let fastener = check_fastener_lemma(&motif, mode)?;
        let overlap = check_overlap_cap(&motif, 2 * motif.num_vertices(), 2_000, 1)?;
        println!(
            "{:<12} {:?}: min slack {} over {} partitions, argmin {:?}",
            motif.label(),
            report.mode,
            report.min_slack,
            report.partitions_checked,
            report.argmin_partition.labels()
        );
        println!(
            "{:<12} boundary lemma {}, fastener lemma {}, overlap cap {} (max shared edges by u: {:?})",
            "",
            boundary.holds,
            fastener.holds,
            overlap.holds,
            overlap.max_shared_by_u
        );
    }
    Ok(())
}
