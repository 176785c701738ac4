//! Feasibility and objective evaluation shared by every solver.

use serde::Serialize;

use crate::converter::{check_machine_limits, machine_state, MachineState};
use crate::dcflow::{check_dc_limits, DcNetwork, DcSolution};
use crate::error::Result;
use crate::limits::{LimitReport, Quantity};
use crate::model::{objective_of, FaultSet, Objective, SwitchConfig, SystemSpec};

/// How converter capacity is judged during the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CapacityModel {
    /// Slack output bounded by `min(P_oc^max, P_g^max − loss estimate)`.
    Estimated,
    /// Converter Newton solve, generator back-calculation and AC limits for
    /// every candidate.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub feasible: bool,
    pub objective: Objective,
    /// Sum of relative bound excesses, plus one per energized load without a
    /// path to a converter. 0 when feasible.
    pub violation: f64,
    /// Bus most implicated in the worst violation, for repair.
    pub hotspot: Option<usize>,
}

pub struct Evaluator<'a> {
    pub spec: &'a SystemSpec,
    pub net: DcNetwork<'a>,
    pub model: CapacityModel,
    /// Per-converter estimate of converter plus generator-line loss, watts.
    pub loss_estimate: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(spec: &'a SystemSpec, faults: &FaultSet, model: CapacityModel) -> Result<Self> {
        Ok(Evaluator {
            spec,
            net: DcNetwork::new(spec, faults)?,
            model,
            loss_estimate: vec![0.0; spec.converter_count()],
        })
    }

    pub fn with_losses(mut self, loss_estimate: Vec<f64>) -> Self {
        self.loss_estimate = loss_estimate;
        self
    }

    /// Estimated output capacity of a converter.
    pub fn capacity(&self, converter: usize) -> f64 {
        let conv = &self.spec.converters[converter];
        let gen = &self.spec.generators[converter];
        conv.p_oc_max.min(gen.p_max - self.loss_estimate[converter])
    }

    pub fn evaluate(&self, config: &SwitchConfig) -> Evaluation {
        self.evaluate_full(config).0
    }

    /// Evaluation plus the DC solution and machine states it was based on.
    pub fn evaluate_full(&self, config: &SwitchConfig) -> (Evaluation, Option<DcSolution>, Vec<MachineState>) {
        let spec = self.spec;
        let objective = objective_of(spec, &config.loads);
        let sides = config.sides();

        // Loads switched onto dead buses are a violation in themselves; the
        // flow is solved without them so the rest can still be scored.
        let mut effective = config.clone();
        let mut violation = 0.0;
        let mut hotspot = None;
        for l in 0..spec.load_count() {
            let bus = spec.load_bus(l, &sides);
            if config.loads[l] && self.net.bus_island(bus).is_none() {
                effective.loads[l] = false;
                violation += 1.0;
                hotspot.get_or_insert(bus);
            }
        }

        let sol = match self.net.solve(&effective) {
            Ok(sol) => sol,
            Err(_) => {
                return (
                    Evaluation { feasible: false, objective, violation: violation + 1.0, hotspot },
                    None,
                    Vec::new(),
                )
            }
        };
        let mut report = check_dc_limits(&sol, spec);
        let mut machines = Vec::new();
        match self.model {
            CapacityModel::Estimated => {
                for island in &sol.islands {
                    let m = island.slack;
                    let cap = self.capacity(m);
                    let p = sol.converter_power[m];
                    if p > cap {
                        violation += (p - cap) / cap.abs().max(1.0);
                        hotspot.get_or_insert(lowest_voltage_bus(&sol, &island.buses));
                    }
                }
            }
            CapacityModel::Exact => {
                for (m, conv) in spec.converters.iter().enumerate() {
                    match machine_state(conv, sol.converter_power[m]) {
                        Ok(state) => {
                            report.extend(check_machine_limits(conv, &spec.generators[m], m, &state));
                            machines.push(state);
                        }
                        Err(_) => {
                            violation += 1.0;
                            let island = &sol.islands[self.net.converter_island(m)];
                            hotspot.get_or_insert(lowest_voltage_bus(&sol, &island.buses));
                        }
                    }
                }
            }
        }

        let (v, h) = score_report(&report, &sol, spec);
        violation += v;
        if hotspot.is_none() {
            hotspot = h;
        }
        let feasible = violation == 0.0;
        (
            Evaluation { feasible, objective, violation, hotspot: if feasible { None } else { hotspot } },
            Some(sol),
            machines,
        )
    }
}

fn lowest_voltage_bus(sol: &DcSolution, buses: &[usize]) -> usize {
    let mut best = buses[0];
    for &b in buses {
        if sol.voltages[b] < sol.voltages[best] {
            best = b;
        }
    }
    best
}

/// Total relative excess of a limit report and the bus tied to the worst
/// entry.
fn score_report(report: &LimitReport, sol: &DcSolution, spec: &SystemSpec) -> (f64, Option<usize>) {
    let mut total = 0.0;
    let mut worst = 0.0;
    let mut hotspot = None;
    for c in report.violations() {
        let scale = c.max.abs().max(c.min.abs()).max(1.0);
        let excess = if c.value > c.max { c.value - c.max } else { c.min - c.value } / scale;
        // A check can fail on tolerance alone; keep the verdict consistent.
        let excess = excess.max(1e-12);
        total += excess;
        if excess > worst {
            worst = excess;
            hotspot = Some(match c.quantity {
                Quantity::DcVoltage => c.index,
                Quantity::BranchCurrent => {
                    let l = &spec.lines[c.index];
                    if sol.voltages[l.from] < sol.voltages[l.to] {
                        l.from
                    } else {
                        l.to
                    }
                }
                _ => {
                    let island = &sol.islands[sol.bus_island[spec.converter_bus(c.index)].unwrap_or(0)];
                    lowest_voltage_bus(sol, &island.buses)
                }
            });
        }
    }
    (total, hotspot)
}

/// Fitness used by penalty-based baselines: the objective when feasible,
/// otherwise pushed below every feasible value.
pub fn penalized_fitness(spec: &SystemSpec, eval: &Evaluation) -> f64 {
    if eval.feasible {
        eval.objective.weighted
    } else {
        let big: f64 = spec.loads.iter().map(|l| spec.weights.of(l.grade) * l.power).sum();
        eval.objective.weighted - big * (1.0 + eval.violation)
    }
}
