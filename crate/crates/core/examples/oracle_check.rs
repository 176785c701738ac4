//! Exhaustive optimum of the reduced two-zone plant against the hybrid search.

use spsrecon::analysis::enumerate_faults;
use spsrecon::{fixtures, oracle_exhaustive, reconfigure, BboParams, FaultSet};

fn main() -> spsrecon::Result<()> {
    let spec = fixtures::two_zone();
    let mut sets = vec![FaultSet::new()];
    sets.extend(enumerate_faults(&spec, 1)?);
    sets.extend(enumerate_faults(&spec, 2)?);
    for faults in sets {
        let best = oracle_exhaustive(&spec, &faults)?;
        let ours = reconfigure(&spec, &faults, &BboParams::default())?;
        println!(
            "{:<14} oracle {:>6.2} ({} evaluations)  nrbbo {:>6.2} ({} evaluations)",
            faults.describe(&spec),
            best.objective.weighted / 1e6,
            best.evaluations,
            ours.objective.weighted / 1e6,
            ours.evaluations
        );
    }
    Ok(())
}
