//! Draw SBM graphs, conditioned and not, and look at the centered matrix.

use blowup_motifs::sbm::{membership_value, sample, sample_conditioned, Pin, SbmParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = SbmParams::new(12, 3, 0.6, 0.1, 42)?;
    let regime = params.regime();
    println!("lambda = {}, q <= 1/4: {}, q + 2 lambda <= 1: {}", params.lambda(), regime.q_at_most_quarter, regime.q_plus_two_lambda_at_most_one);

    let s = sample(&params)?;
    println!("labels {:?}", s.labels());
    println!("{} edges", s.edges().len());
    let y = s.centered(params.q);
    for i in 0..4 {
        let row: Vec<String> = (0..4).map(|j| if i == j { "   .".into() } else { format!("{:4.1}", y.entry(i, j)) }).collect();
        println!("  {}", row.join(" "));
    }

    for pin in [Pin::Same, Pin::Different] {
        let c = sample_conditioned(&params.with_seed(7), pin)?;
        let x = membership_value(c.labels(), 0, 1, params.k)?;
        println!("pin {pin:?}: z0 = {}, z1 = {}, x01 = {x:.3}", c.labels()[0], c.labels()[1]);
    }

    let path = std::env::temp_dir().join("sbm_sample.json");
    s.write_json(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
