//! Fault-mode classification and the redundancy positions each mode forces.

use spsrecon::mode::forced_redundancy;
use spsrecon::{classify, fixtures, FaultSet};

fn main() -> spsrecon::Result<()> {
    let spec = fixtures::six_zone();
    for text in ["pb:2-3", "pb:1-2,pb:5-6", "pb:3-4,sb:3-4", "pb:2-3,sb:3-4", "pb:1-2,sb:1-2"] {
        let faults = FaultSet::parse(text, &spec)?;
        let ctx = classify(&faults, &spec)?;
        let plan = forced_redundancy(&ctx, &spec);
        let zones: Vec<String> =
            plan.assignment.iter().map(|a| a.map_or("free".to_string(), |s| format!("{s:?}"))).collect();
        println!(
            "{text:<16} {:<10} islands={} zones=[{}] combinations={} unservable loads={}",
            ctx.mode.to_string(),
            ctx.islands.len(),
            zones.join(" "),
            plan.combination_count(),
            ctx.unservable_loads.len()
        );
    }
    Ok(())
}
