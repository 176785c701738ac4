//! Exhaustive ground truth for small plants.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluate::{CapacityModel, Evaluator};
use crate::model::{objective_of, BusSide, FaultSet, SwitchConfig, SystemSpec};
use crate::nrbbo::{assemble, ReconfigResult};

pub const ORACLE_MAX_VARIABLES: usize = 24;

struct Best {
    rank: usize,
    config: SwitchConfig,
    weighted: f64,
    evaluations: usize,
}

/// Global optimum over every load switch and every redundancy position,
/// judged by the exact evaluator.
///
/// For each redundancy pattern, loads on dead buses are held off (switching
/// them on is always a violation) and the remaining subsets are tried in
/// descending weighted power until one is feasible. Ties go to the earlier
/// redundancy pattern, then the lower load mask.
pub fn oracle_exhaustive(spec: &SystemSpec, faults: &FaultSet) -> Result<ReconfigResult> {
    let started = Instant::now();
    let l_count = spec.load_count();
    let width = l_count + spec.zone_count;
    if width > ORACLE_MAX_VARIABLES {
        return Err(Error::TooLarge(width, ORACLE_MAX_VARIABLES));
    }
    let eval = Evaluator::new(spec, faults, CapacityModel::Exact)?;

    let per_pattern: Vec<Option<Best>> = (0..1usize << spec.zone_count)
        .into_par_iter()
        .map(|mask| {
            let sides: Vec<BusSide> =
                (0..spec.zone_count).map(|k| if mask >> k & 1 == 1 { BusSide::Sb } else { BusSide::Pb }).collect();
            let live: Vec<usize> =
                (0..l_count).filter(|&l| eval.net.bus_island(spec.load_bus(l, &sides)).is_some()).collect();
            let mut subsets: Vec<(usize, Vec<bool>, f64)> = (0..1usize << live.len())
                .map(|s| {
                    let mut loads = vec![false; l_count];
                    for (bit, &l) in live.iter().enumerate() {
                        loads[l] = s >> bit & 1 == 1;
                    }
                    let w = objective_of(spec, &loads).weighted;
                    (s, loads, w)
                })
                .collect();
            subsets.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
            for (tried, (_, loads, w)) in subsets.into_iter().enumerate() {
                let config = SwitchConfig::from_sides(loads, &sides);
                if eval.evaluate(&config).feasible {
                    return Some(Best { rank: mask, config, weighted: w, evaluations: tried + 1 });
                }
            }
            None
        })
        .collect();

    let evaluations = per_pattern.iter().flatten().map(|b| b.evaluations).sum();
    let best = per_pattern
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.weighted > a.weighted || (b.weighted == a.weighted && b.rank < a.rank) { b } else { a })
        .ok_or_else(|| Error::Infeasible("no switch pattern passes the limits".into()))?;

    let mut result = assemble(spec, faults, "oracle", best.config, &eval);
    result.evaluations = evaluations;
    result.combinations = 1 << spec.zone_count;
    result.elapsed = started.elapsed();
    Ok(result)
}
