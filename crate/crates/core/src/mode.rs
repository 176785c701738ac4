//! Fault-mode distinction and redundancy-switch planning.

use std::fmt;

use serde::Serialize;

use crate::dcflow::{DcNetwork, Island};
use crate::error::{Error, Result};
use crate::model::{Attachment, BusSide, FaultSet, LineKind, SystemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Mode {
    NonIsland,
    SemiIsland,
    Island,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::NonIsland => "NonIsland",
            Mode::SemiIsland => "SemiIsland",
            Mode::Island => "Island",
        })
    }
}

/// How a zone's redundancy pair is treated by the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "side", rename_all = "snake_case")]
pub enum ZoneStatus {
    /// Only one side is energized; the pair must point there.
    Forced(BusSide),
    /// Both sides live but in different islands: the zone can join either.
    Coupled,
    /// Both sides live in one island under a non-island fault: free.
    Undamaged,
    /// Both sides live in one island under an island or semi-island fault:
    /// the pair keeps its pre-fault position.
    Kept(BusSide),
    /// Neither side is energized.
    Dead,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeContext {
    pub mode: Mode,
    pub islands: Vec<Island>,
    pub bus_island: Vec<Option<usize>>,
    /// Ω_c, 0-based zone ids.
    pub coupled_zones: Vec<usize>,
    /// Ω_ud, 0-based zone ids.
    pub undamaged_zones: Vec<usize>,
    pub zones: Vec<ZoneStatus>,
    /// Loads with no energized attachment bus under any redundancy choice.
    pub unservable_loads: Vec<usize>,
}

impl ModeContext {
    pub fn energized(&self, bus: usize) -> bool {
        self.bus_island[bus].is_some()
    }

    /// Per-load flag: the load's bus is energized under `sides`.
    pub fn reachable(&self, spec: &SystemSpec, sides: &[BusSide]) -> Vec<bool> {
        (0..spec.load_count()).map(|l| self.energized(spec.load_bus(l, sides))).collect()
    }
}

/// Classifies a fault set.
///
/// A fault set with at least one PB fault and at least one SB fault is an
/// island fault when some PB and SB fault share a zone index, and a
/// semi-island fault otherwise. Every other fault set is non-island. Island
/// membership is taken from graph connectivity, so more than two faults are
/// handled without special cases.
pub fn classify(faults: &FaultSet, spec: &SystemSpec) -> Result<ModeContext> {
    let lines = faults.lines(spec)?;
    let mut pb_zones = Vec::new();
    let mut sb_zones = Vec::new();
    for &i in &lines {
        let (side, zone) = match spec.lines[i].kind {
            LineKind::Segment { side, zone } => (side, zone),
            LineKind::Tie { converter, side } => {
                let c = &spec.converters[converter];
                (side, if side == BusSide::Pb { c.pb_zone } else { c.sb_zone })
            }
            LineKind::Other => continue,
        };
        match side {
            BusSide::Pb => pb_zones.push(zone),
            BusSide::Sb => sb_zones.push(zone),
        }
    }
    let mode = if !pb_zones.is_empty() && !sb_zones.is_empty() {
        if pb_zones.iter().any(|z| sb_zones.contains(z)) {
            Mode::Island
        } else {
            Mode::SemiIsland
        }
    } else {
        Mode::NonIsland
    };

    let net = DcNetwork::new(spec, faults)?;
    for island in net.islands() {
        if island.buses.len() == island.converters.len() {
            let m = island.converters[0];
            return Err(Error::DegeneratePlant(spec.converters[m].name.clone()));
        }
    }
    let bus_island: Vec<Option<usize>> = (0..spec.bus_count()).map(|b| net.bus_island(b)).collect();

    let mut zones = Vec::with_capacity(spec.zone_count);
    let mut coupled_zones = Vec::new();
    let mut undamaged_zones = Vec::new();
    for k in 0..spec.zone_count {
        let pb = bus_island[spec.pb_bus(k)];
        let sb = bus_island[spec.sb_bus(k)];
        let status = match (pb, sb) {
            (None, None) => ZoneStatus::Dead,
            (Some(_), None) => ZoneStatus::Forced(BusSide::Pb),
            (None, Some(_)) => ZoneStatus::Forced(BusSide::Sb),
            (Some(a), Some(b)) if a != b => {
                coupled_zones.push(k);
                ZoneStatus::Coupled
            }
            _ if mode == Mode::NonIsland => {
                undamaged_zones.push(k);
                ZoneStatus::Undamaged
            }
            _ => ZoneStatus::Kept(spec.initial_redundancy[k]),
        };
        zones.push(status);
    }

    let unservable_loads = spec
        .loads
        .iter()
        .enumerate()
        .filter(|(_, load)| match load.attachment {
            Attachment::Single { bus } => bus_island[bus].is_none(),
            Attachment::Redundant { pb_bus, sb_bus } => bus_island[pb_bus].is_none() && bus_island[sb_bus].is_none(),
        })
        .map(|(l, _)| l)
        .collect();

    Ok(ModeContext {
        mode,
        islands: net.islands().to_vec(),
        bus_island,
        coupled_zones,
        undamaged_zones,
        zones,
        unservable_loads,
    })
}

/// Partial redundancy assignment: fixed zones carry a side, free zones are
/// left to the outer combination search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RedundancyPlan {
    pub assignment: Vec<Option<BusSide>>,
    pub free_zones: Vec<usize>,
}

impl RedundancyPlan {
    pub fn combination_count(&self) -> usize {
        1 << self.free_zones.len()
    }

    /// Every completion of the plan, ordered by Hamming distance from
    /// `initial` on the free zones and then by bit pattern.
    pub fn combinations(&self, initial: &[BusSide]) -> Vec<Vec<BusSide>> {
        let f = self.free_zones.len();
        let mut masks: Vec<u32> = (0..1u32 << f).collect();
        masks.sort_by_key(|&m| (m.count_ones(), m));
        masks
            .into_iter()
            .map(|mask| {
                let mut sides: Vec<BusSide> =
                    self.assignment.iter().zip(initial).map(|(a, &init)| a.unwrap_or(init)).collect();
                for (bit, &k) in self.free_zones.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        sides[k] = initial[k].other();
                    }
                }
                sides
            })
            .collect()
    }
}

/// Redundancy positions imposed by the fault mode.
///
/// Zones fed from one live side are flipped there; zones in Ω_c and Ω_ud are
/// free; under island and semi-island faults the remaining zones keep their
/// pre-fault position. Dead zones keep their position too, since nothing
/// they feed can be restored.
pub fn forced_redundancy(ctx: &ModeContext, spec: &SystemSpec) -> RedundancyPlan {
    let mut assignment = Vec::with_capacity(spec.zone_count);
    let mut free_zones = Vec::new();
    for (k, status) in ctx.zones.iter().enumerate() {
        assignment.push(match *status {
            ZoneStatus::Forced(side) | ZoneStatus::Kept(side) => Some(side),
            ZoneStatus::Dead => Some(spec.initial_redundancy[k]),
            ZoneStatus::Coupled | ZoneStatus::Undamaged => {
                free_zones.push(k);
                None
            }
        });
    }
    RedundancyPlan { assignment, free_zones }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn ctx(text: &str) -> ModeContext {
        let spec = fixtures::six_zone();
        classify(&FaultSet::parse(text, &spec).unwrap(), &spec).unwrap()
    }

    #[test]
    fn same_zone_faults_are_island() {
        let c = ctx("pb:3-4,sb:3-4");
        assert_eq!(c.mode, Mode::Island);
        assert_eq!(c.islands.len(), 2);
        assert!(c.islands.iter().all(|i| !i.converters.is_empty()));
        assert!(c.coupled_zones.is_empty());
        assert!(c.undamaged_zones.is_empty());
    }

    #[test]
    fn staggered_faults_are_semi_island() {
        let c = ctx("pb:2-3,sb:3-4");
        assert_eq!(c.mode, Mode::SemiIsland);
        assert_eq!(c.islands.len(), 2);
        // PB3 sits with AG, SB3 with MG: zone 3 couples the two parts.
        assert_eq!(c.coupled_zones, vec![2]);
        let spec = fixtures::six_zone();
        let plan = forced_redundancy(&c, &spec);
        assert_eq!(plan.free_zones, vec![2]);
        assert_eq!(plan.combination_count(), 2);
    }

    #[test]
    fn one_side_faults_are_non_island() {
        let c = ctx("pb:2-3");
        assert_eq!(c.mode, Mode::NonIsland);
        assert_eq!(c.undamaged_zones.len(), 6);
        let c = ctx("pb:1-2,pb:3-4,pb:5-6");
        assert_eq!(c.mode, Mode::NonIsland);
    }

    #[test]
    fn dead_pb_span_forces_sb() {
        let spec = fixtures::six_zone();
        let c = ctx("pb:1-2,pb:5-6");
        let plan = forced_redundancy(&c, &spec);
        for k in 1..5 {
            assert_eq!(plan.assignment[k], Some(BusSide::Sb));
        }
        assert_eq!(plan.free_zones, vec![0, 5]);
        // Non-vital loads on PB2..PB5 cannot be restored.
        assert_eq!(c.unservable_loads.len(), 4);
    }

    #[test]
    fn island_keeps_positions() {
        let spec = fixtures::six_zone();
        let c = ctx("pb:3-4,sb:3-4");
        let plan = forced_redundancy(&c, &spec);
        assert!(plan.free_zones.is_empty());
        let sides: Vec<BusSide> = plan.assignment.iter().map(|a| a.unwrap()).collect();
        assert_eq!(sides, spec.initial_redundancy);
    }

    #[test]
    fn combinations_order_by_distance() {
        let plan = RedundancyPlan { assignment: vec![None, Some(BusSide::Sb), None], free_zones: vec![0, 2] };
        let init = [BusSide::Pb, BusSide::Pb, BusSide::Pb];
        let combos = plan.combinations(&init);
        assert_eq!(combos.len(), 4);
        assert_eq!(combos[0], vec![BusSide::Pb, BusSide::Sb, BusSide::Pb]);
        assert_eq!(combos[3], vec![BusSide::Sb, BusSide::Sb, BusSide::Sb]);
    }

    #[test]
    fn isolated_converter_is_degenerate() {
        let spec = fixtures::six_zone();
        let mg = spec.converter_bus(0);
        let faults = FaultSet::from_pairs([(mg, spec.pb_bus(0)), (mg, spec.sb_bus(0))]);
        assert!(matches!(classify(&faults, &spec), Err(Error::DegeneratePlant(_))));
    }
}
