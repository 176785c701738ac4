//! Grade weights: the lower bounds that make the objective lexicographic, and
//! the per-layer cut-off errors used by the stall test.

use spsrecon::bbo::{layer_cutoff, weight_bounds};
use spsrecon::fixtures;

fn main() -> spsrecon::Result<()> {
    let spec = fixtures::six_zone();
    let w = &spec.weights;
    let (w2_min, w1_min) = weight_bounds(&spec.loads, w.semi_vital)?;
    println!("non-vital weight {}", w.non_vital);
    println!("semi-vital weight {} (must exceed {w2_min:.3})", w.semi_vital);
    println!("vital weight {} (must exceed {w1_min:.3})", w.vital);
    for g in 1..=3 {
        println!("layer {g} cut-off O_{g} = {:.0}", layer_cutoff(g, w, &spec.loads)?);
    }
    Ok(())
}
