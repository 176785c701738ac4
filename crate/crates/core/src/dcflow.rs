//! Multi-island DC power flow with constant-current loads.
//!
//! Each energized island is solved on its own with one slack converter bus.
//! Non-slack converters inject `P_oc / U`, which makes the system mildly
//! nonlinear; the reduced Laplacian block is factored once per island and the
//! voltages are found by fixed-point iteration.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::admittance::{build_admittance, DcAdmittance};
use crate::converter::output_for_generator_power;
use crate::error::{Error, Result};
use crate::limits::{LimitCheck, LimitReport, Quantity};
use crate::model::{FaultSet, SwitchConfig, SystemSpec};

pub const MAX_ITERATIONS: usize = 100;
pub const TOLERANCE: f64 = 1e-8;

/// Per-unit current base for residual reporting: 1 MW at nominal voltage.
pub fn current_base(spec: &SystemSpec) -> f64 {
    1.0e6 / spec.nominal_dc_voltage
}

/// A connected part of the DC network that contains at least one converter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Island {
    pub buses: Vec<usize>,
    pub converters: Vec<usize>,
    /// Converter index of the slack.
    pub slack: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcSolution {
    /// Bus voltages; 0 on dead buses.
    pub voltages: Vec<f64>,
    /// Converter current injected at each bus.
    pub injections: Vec<f64>,
    /// Total load current drawn at each bus.
    pub load_currents: Vec<f64>,
    /// DC output power of every converter.
    pub converter_power: Vec<f64>,
    /// Line currents, positive from `from` to `to`; 0 for faulted lines.
    pub branch_currents: Vec<f64>,
    /// Island id per bus, `None` when the bus has no path to a converter.
    pub bus_island: Vec<Option<usize>>,
    pub islands: Vec<Island>,
    pub iterations: usize,
    /// Worst bus KCL mismatch in per-unit of [`current_base`].
    pub kcl_residual: f64,
}

impl DcSolution {
    pub fn energized(&self, bus: usize) -> bool {
        self.bus_island[bus].is_some()
    }

    pub fn line_loss(&self, spec: &SystemSpec) -> f64 {
        spec.lines.iter().zip(&self.branch_currents).map(|(l, i)| i * i * l.resistance).sum()
    }

    /// Power actually drawn by loads at the solved voltages.
    pub fn load_power(&self) -> f64 {
        self.voltages.iter().zip(&self.load_currents).map(|(u, i)| u * i).sum()
    }
}

struct IslandSystem {
    slack_bus: usize,
    /// Non-slack buses of the island in reduced-matrix order.
    rest: Vec<usize>,
    /// Off-block column `L[rest, slack]`.
    coupling: DVector<f64>,
    factor: Option<Cholesky<f64, Dyn>>,
}

/// DC network prepared for one fault set.
///
/// The Laplacian does not depend on which loads are switched on, so the
/// factorizations are reused across every configuration evaluated under the
/// same faults.
pub struct DcNetwork<'a> {
    spec: &'a SystemSpec,
    admittance: DcAdmittance,
    islands: Vec<Island>,
    bus_island: Vec<Option<usize>>,
    systems: Vec<IslandSystem>,
}

impl<'a> DcNetwork<'a> {
    pub fn new(spec: &'a SystemSpec, faults: &FaultSet) -> Result<Self> {
        let adm = build_admittance(spec, faults)?;
        DcNetwork::from_admittance(spec, adm)
    }

    pub fn from_admittance(spec: &'a SystemSpec, admittance: DcAdmittance) -> Result<Self> {
        let n = spec.bus_count();
        if admittance.dim() != n {
            return Err(Error::Dimension { what: "admittance rows", expected: n, actual: admittance.dim() });
        }
        let comps = admittance.components(spec);
        let mut islands: Vec<Island> = Vec::new();
        let mut root_island: Vec<Option<usize>> = vec![None; n];
        for m in 0..spec.converter_count() {
            let root = comps[spec.converter_bus(m)];
            match root_island[root] {
                Some(i) => islands[i].converters.push(m),
                None => {
                    root_island[root] = Some(islands.len());
                    islands.push(Island { buses: Vec::new(), converters: vec![m], slack: m });
                }
            }
        }
        let bus_island: Vec<Option<usize>> = (0..n).map(|b| root_island[comps[b]]).collect();
        for (b, isl) in bus_island.iter().enumerate() {
            if let Some(i) = isl {
                islands[*i].buses.push(b);
            }
        }
        for island in &mut islands {
            island.slack = select_slack(spec, &island.converters);
        }

        let mut systems = Vec::with_capacity(islands.len());
        for island in &islands {
            let slack_bus = spec.converter_bus(island.slack);
            let rest: Vec<usize> = island.buses.iter().copied().filter(|&b| b != slack_bus).collect();
            let r = rest.len();
            let reduced = DMatrix::from_fn(r, r, |i, j| admittance.get(rest[i], rest[j]));
            let coupling = DVector::from_fn(r, |i, _| admittance.get(rest[i], slack_bus));
            let factor =
                if r == 0 { None } else { Some(reduced.cholesky().ok_or(Error::SingularMatrix(slack_bus + 1))?) };
            systems.push(IslandSystem { slack_bus, rest, coupling, factor });
        }
        Ok(DcNetwork { spec, admittance, islands, bus_island, systems })
    }

    pub fn spec(&self) -> &SystemSpec {
        self.spec
    }

    pub fn admittance(&self) -> &DcAdmittance {
        &self.admittance
    }

    pub fn islands(&self) -> &[Island] {
        &self.islands
    }

    pub fn bus_island(&self, bus: usize) -> Option<usize> {
        self.bus_island[bus]
    }

    pub fn is_slack(&self, converter: usize) -> bool {
        self.islands.iter().any(|i| i.slack == converter)
    }

    pub fn converter_island(&self, converter: usize) -> usize {
        self.bus_island[self.spec.converter_bus(converter)].expect("converter buses always belong to an island")
    }

    /// Load power of switched-on loads per island, at nominal voltage.
    pub fn island_demand(&self, config: &SwitchConfig) -> Vec<f64> {
        let sides = config.sides();
        let mut demand = vec![0.0; self.islands.len()];
        for (l, load) in self.spec.loads.iter().enumerate() {
            if config.loads[l] {
                if let Some(i) = self.bus_island[self.spec.load_bus(l, &sides)] {
                    demand[i] += load.power;
                }
            }
        }
        demand
    }

    /// Output set-points of the non-slack converters (slack entries are 0).
    ///
    /// A non-slack converter is dispatched to `dispatch_fraction` of its
    /// generator rating, capped at `non_slack_share_cap` of its island's load
    /// and clamped to its output bounds. The slack picks up the remainder.
    pub fn dispatch(&self, config: &SwitchConfig) -> Vec<f64> {
        let demand = self.island_demand(config);
        let mut out = vec![0.0; self.spec.converter_count()];
        for (m, conv) in self.spec.converters.iter().enumerate() {
            if self.is_slack(m) {
                continue;
            }
            let target = output_for_generator_power(conv, conv.dispatch_fraction * self.spec.generators[m].p_max);
            let cap = self.spec.non_slack_share_cap * demand[self.converter_island(m)];
            out[m] = target.min(cap).clamp(conv.p_oc_min, conv.p_oc_max);
        }
        out
    }

    /// Solves with the default dispatch rule.
    pub fn solve(&self, config: &SwitchConfig) -> Result<DcSolution> {
        let injections = self.dispatch(config);
        self.solve_with(config, &injections)
    }

    /// Solves with explicit non-slack converter outputs (watts, indexed by
    /// converter; slack entries are ignored).
    pub fn solve_with(&self, config: &SwitchConfig, injections: &[f64]) -> Result<DcSolution> {
        let spec = self.spec;
        config.check_dimensions(spec)?;
        if injections.len() != spec.converter_count() {
            return Err(Error::Dimension {
                what: "converter injections",
                expected: spec.converter_count(),
                actual: injections.len(),
            });
        }
        let n = spec.bus_count();
        let sides = config.sides();
        let mut load_currents = vec![0.0; n];
        for l in 0..spec.load_count() {
            if config.loads[l] {
                let bus = spec.load_bus(l, &sides);
                if self.bus_island[bus].is_none() {
                    return Err(Error::DisconnectedLoad { load: l + 1, bus: bus + 1 });
                }
                load_currents[bus] += spec.load_current(l);
            }
        }

        // Converter power keyed by bus for the non-slack injections.
        let mut bus_power = vec![0.0; n];
        for m in 0..spec.converter_count() {
            if !self.is_slack(m) {
                bus_power[spec.converter_bus(m)] = injections[m];
            }
        }

        let mut voltages = vec![0.0; n];
        let mut iterations = 0;
        for (island, sys) in self.islands.iter().zip(&self.systems) {
            let u_slack = spec.converters[island.slack].dc_voltage;
            voltages[sys.slack_bus] = u_slack;
            let Some(factor) = &sys.factor else {
                continue;
            };
            let has_power_injection = sys.rest.iter().any(|&b| bus_power[b] != 0.0);
            let mut u = DVector::from_element(sys.rest.len(), u_slack);
            let mut converged = false;
            for it in 1..=MAX_ITERATIONS {
                let mut rhs = DVector::from_fn(sys.rest.len(), |i, _| {
                    let b = sys.rest[i];
                    let inj = if bus_power[b] != 0.0 { bus_power[b] / u[i] } else { 0.0 };
                    inj - load_currents[b] - sys.coupling[i] * u_slack
                });
                factor.solve_mut(&mut rhs);
                if rhs.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::DcDivergence(it));
                }
                let change = (&rhs - &u).norm() / rhs.norm();
                u = rhs;
                iterations = iterations.max(it);
                if !has_power_injection || change < TOLERANCE {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::DcDivergence(MAX_ITERATIONS));
            }
            for (i, &b) in sys.rest.iter().enumerate() {
                voltages[b] = u[i];
            }
        }

        // Network currents L·U give the net injection at every bus.
        let lu = &self.admittance.matrix * DVector::from_column_slice(&voltages);
        let mut injected = vec![0.0; n];
        let mut converter_power = vec![0.0; spec.converter_count()];
        for (m, p) in converter_power.iter_mut().enumerate() {
            let b = spec.converter_bus(m);
            if self.is_slack(m) {
                injected[b] = lu[b] + load_currents[b];
                *p = voltages[b] * injected[b];
            } else {
                injected[b] = bus_power[b] / voltages[b];
                *p = bus_power[b];
            }
        }
        let base = current_base(spec);
        let kcl_residual = (0..n).map(|b| (lu[b] - injected[b] + load_currents[b]).abs() / base).fold(0.0, f64::max);
        let branch_currents = spec
            .lines
            .iter()
            .zip(&self.admittance.in_service)
            .map(|(l, &on)| if on { (voltages[l.from] - voltages[l.to]) / l.resistance } else { 0.0 })
            .collect();

        Ok(DcSolution {
            voltages,
            injections: injected,
            load_currents,
            converter_power,
            branch_currents,
            bus_island: self.bus_island.clone(),
            islands: self.islands.clone(),
            iterations,
            kcl_residual,
        })
    }
}

/// Slack of an island: the converter with the largest generator rating, the
/// lower index on ties.
pub fn select_slack(spec: &SystemSpec, converters: &[usize]) -> usize {
    let mut best = converters[0];
    for &m in &converters[1..] {
        if spec.generators[m].p_max > spec.generators[best].p_max {
            best = m;
        }
    }
    best
}

/// One-shot DC solve with the default slack choice.
pub fn solve_dc(
    adm: &DcAdmittance,
    spec: &SystemSpec,
    config: &SwitchConfig,
    injections: &[f64],
) -> Result<DcSolution> {
    DcNetwork::from_admittance(spec, adm.clone())?.solve_with(config, injections)
}

/// Bus voltage, line current and converter output bounds.
pub fn check_dc_limits(sol: &DcSolution, spec: &SystemSpec) -> LimitReport {
    let mut report = LimitReport::default();
    for (b, &u) in sol.voltages.iter().enumerate() {
        if sol.bus_island[b].is_some() {
            report.push(LimitCheck::new(
                Quantity::DcVoltage,
                spec.bus_label(b),
                b,
                u,
                spec.dc_voltage_min,
                spec.dc_voltage_max,
            ));
        }
    }
    for (i, (line, &current)) in spec.lines.iter().zip(&sol.branch_currents).enumerate() {
        if sol.bus_island[line.from].is_some() {
            report.push(LimitCheck::new(
                Quantity::BranchCurrent,
                spec.line_label(i),
                i,
                current.abs(),
                0.0,
                line.ampacity,
            ));
        }
    }
    for (m, conv) in spec.converters.iter().enumerate() {
        report.push(LimitCheck::new(
            Quantity::ConverterOutput,
            conv.name.clone(),
            m,
            sol.converter_power[m],
            conv.p_oc_min,
            conv.p_oc_max,
        ));
    }
    report
}
