//! Build `G(L, B, a)`, print its layout, and round-trip the JSON document.
//!
//! ```bash
//! cargo run --example build_motif -- 8 2 1/4
//! ```

use blowup_motifs::motif::{approximate_exponent, build_blowup_motif, motif_from_json, motif_to_json};
use blowup_motifs::rational::Rational;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (l, b, a): (usize, usize, Rational) = match &args[..] {
        [l, b, a] => (l.parse()?, b.parse()?, a.parse()?),
        _ => (8, 2, Rational::new(1, 4)?),
    };
    let motif = build_blowup_motif(l, b, a)?;
    let layout = motif.layout().expect("blow-up motifs carry a layout");
    println!("{}: |V| = {}, |E| = {}, r = {}", motif.label(), motif.num_vertices(), motif.num_edges(), motif.ratio());
    for (v, pos) in &layout.positions {
        let tag = if layout.fasteners_v1.contains(v) {
            " - v1"
        } else if layout.fasteners_v2.contains(v) {
            " - v2"
        } else {
            ""
        };
        println!("  vertex {v:>3}: layer {} slot {}{tag}", pos.layer, pos.slot);
    }

    let text = motif_to_json(&motif);
    assert_eq!(motif_from_json(&text)?, motif);
    println!("document: {} bytes, round trip ok", text.len());

    // a motif for a target density exponent r
    let approx = approximate_exponent(2.3, 0.05)?;
    println!(
        "r = 2.3 within 0.05 -> L = {}, B = {}, a = {} (r = {})",
        approx.cycle_length,
        approx.blowup,
        approx.rate,
        approx.exponent()
    );
    Ok(())
}
