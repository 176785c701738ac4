//! Full reconfiguration after faults on PB1-PB2 and PB5-PB6, which leave the
//! middle of the port bus without supply.
//!
//!     cargo run --release --example reconfigure -- "pb:3-4,sb:3-4"

use spsrecon::{fixtures, reconfigure, BboParams, FaultSet};

fn main() -> spsrecon::Result<()> {
    let spec = fixtures::six_zone();
    let text = std::env::args().nth(1).unwrap_or_else(|| "pb:1-2,pb:5-6".into());
    let faults = FaultSet::parse(&text, &spec)?;
    let r = reconfigure(&spec, &faults, &BboParams::default())?;

    println!("mode {:?}, feasible {}, {:.1} ms", r.mode, r.feasible, r.elapsed.as_secs_f64() * 1e3);
    println!(
        "restored {:.2} of {:.2} MW, vital shortfall {:.2} MW",
        r.objective.restored / 1e6,
        spec.total_load_power() / 1e6,
        r.vital_shortfall / 1e6
    );
    for m in &r.machines {
        println!("  {}: P_g {:.3} MW, converter loss {:.1} kW", m.generator, m.p_g / 1e6, m.p_loss / 1e3);
    }
    println!("  shed: {}", r.shed_loads(&spec).join(" "));
    println!("  redundancy: {:?}", r.redundancy);
    for h in &r.history {
        println!(
            "  outer {}: G_s={} weighted {:.2} AC ok {} loss est {:?} kW",
            h.iteration,
            h.start_layer,
            h.weighted / 1e6,
            h.ac_feasible,
            h.loss_estimate.iter().map(|l| (l / 1e3).round()).collect::<Vec<_>>()
        );
    }
    for l in &r.layers {
        println!(
            "  layer {}: {} switches, {} generations, {} distinct patterns{}",
            l.layer,
            l.variables,
            l.generations,
            l.distinct,
            if l.skipped { " (skipped)" } else { "" }
        );
    }
    Ok(())
}
