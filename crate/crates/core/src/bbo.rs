//! Layered biogeography-based search over load switches.
//!
//! Loads are searched grade by grade: vital first, then semi-vital, then
//! non-vital. Within a layer only that grade's switches vary; higher grades
//! stay at their layer solutions and lower grades stay off. Every habitat is
//! kept feasible by repair, so HSI is simply the weighted restored power.

use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluate::{Evaluation, Evaluator};
use crate::model::{BusSide, Grade, GradeWeights, LoadSpec, SwitchConfig};

/// Three priority grades, three layers.
pub const LAYER_COUNT: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BboParams {
    /// Population size H.
    pub habitats: usize,
    /// Generation cap N_g per layer.
    pub max_generations: usize,
    /// Maximum emigration rate E.
    pub emigration: f64,
    /// Maximum immigration rate A.
    pub immigration: f64,
    pub elite_count: usize,
    pub mutation_rate: f64,
    /// Extra generations RE run after the improvement drops below O_g.
    pub repetitions: usize,
    /// Forces the start layer G_s instead of screening for it.
    pub start_layer: Option<usize>,
    /// Mutate-until-feasible attempts before greedy repair.
    pub repair_attempts: usize,
    /// Outer NR/BBO iteration cap T.
    pub max_outer_iterations: usize,
    /// Relaxation factor on the loss update (1 = take the new value).
    pub loss_damping: f64,
    pub seed: u64,
}

impl Default for BboParams {
    fn default() -> Self {
        BboParams {
            habitats: 30,
            max_generations: 50,
            emigration: 1.0,
            immigration: 1.0,
            elite_count: 2,
            mutation_rate: 0.05,
            repetitions: 5,
            start_layer: None,
            repair_attempts: 100,
            max_outer_iterations: 10,
            loss_damping: 1.0,
            seed: 1,
        }
    }
}

impl BboParams {
    pub fn validate(&self) -> Result<()> {
        if self.habitats == 0 {
            return Err(Error::parameter("habitats", "at least one habitat is required"));
        }
        if self.max_generations == 0 {
            return Err(Error::parameter("max_generations", "must be >= 1"));
        }
        for (name, v) in [("emigration", self.emigration), ("immigration", self.immigration)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::parameter(name, format!("must lie in (0, 1], got {v}")));
            }
        }
        // elite_count = H is allowed: a one-habitat run keeps its only member.
        if self.elite_count > self.habitats {
            return Err(Error::parameter("elite_count", "must not exceed the habitat count"));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::parameter("mutation_rate", "must lie in [0, 1]"));
        }
        if let Some(g) = self.start_layer {
            if !(1..=LAYER_COUNT).contains(&g) {
                return Err(Error::parameter("start_layer", format!("must lie in 1..={LAYER_COUNT}")));
            }
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::parameter("max_outer_iterations", "must be >= 1"));
        }
        if !(self.loss_damping > 0.0 && self.loss_damping <= 1.0) {
            return Err(Error::parameter("loss_damping", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Numeric settings as a name/value table for result documents.
    pub fn telemetry(&self) -> std::collections::BTreeMap<String, f64> {
        let mut t = std::collections::BTreeMap::new();
        for (k, v) in [
            ("habitats", self.habitats as f64),
            ("max_generations", self.max_generations as f64),
            ("emigration", self.emigration),
            ("immigration", self.immigration),
            ("elite_count", self.elite_count as f64),
            ("mutation_rate", self.mutation_rate),
            ("repetitions", self.repetitions as f64),
            ("repair_attempts", self.repair_attempts as f64),
            ("max_outer_iterations", self.max_outer_iterations as f64),
            ("loss_damping", self.loss_damping),
        ] {
            t.insert(k.to_string(), v);
        }
        t
    }
}

/// Emigration and immigration rates of the habitat at rank `h`, counted
/// from the worst (h = H is the best habitat).
pub fn migration_rates(h: usize, params: &BboParams) -> Result<(f64, f64)> {
    let n = params.habitats;
    if h == 0 || h > n {
        return Err(Error::parameter("rank", format!("must lie in 1..={n}, got {h}")));
    }
    let x = h as f64 / n as f64;
    Ok((params.emigration * x, params.immigration * (1.0 - x)))
}

fn grade_extremes(loads: &[LoadSpec], grade: Grade) -> Option<(f64, f64)> {
    loads.iter().filter(|l| l.grade == grade).map(|l| l.power).fold(None, |acc, p| match acc {
        None => Some((p, p)),
        Some((lo, hi)) => Some((lo.min(p), hi.max(p))),
    })
}

/// Lower bounds on the semi-vital and vital weights, with the non-vital
/// weight as the unit: `w2 > P3max / P2min` and `w1 > w2 · P2max / P1min`.
pub fn weight_bounds(loads: &[LoadSpec], semi_vital_weight: f64) -> Result<(f64, f64)> {
    let empty = |g: Grade| Error::parameter("loads", format!("no {g:?} loads"));
    let (v_min, _) = grade_extremes(loads, Grade::Vital).ok_or_else(|| empty(Grade::Vital))?;
    let (s_min, s_max) = grade_extremes(loads, Grade::SemiVital).ok_or_else(|| empty(Grade::SemiVital))?;
    let (_, n_max) = grade_extremes(loads, Grade::NonVital).ok_or_else(|| empty(Grade::NonVital))?;
    Ok((n_max / s_min, semi_vital_weight * s_max / v_min))
}

/// Cut-off error of layer `g`: `w_g · P_g^min`.
pub fn layer_cutoff(layer: usize, weights: &GradeWeights, loads: &[LoadSpec]) -> Result<f64> {
    let grade =
        Grade::from_layer(layer).ok_or_else(|| Error::parameter("layer", format!("must lie in 1..=3, got {layer}")))?;
    let (p_min, _) = grade_extremes(loads, grade).unwrap_or((0.0, 0.0));
    Ok(weights.of(grade) * p_min)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerTelemetry {
    pub layer: usize,
    /// Switches free in this layer (reachable loads of the grade).
    pub variables: usize,
    pub generations: usize,
    /// Evaluation requests, cache hits included.
    pub evaluations: usize,
    /// Distinct switch patterns evaluated.
    pub distinct: usize,
    pub repairs: usize,
    /// Best HSI after each generation (index 0 is the initial population).
    pub best_history: Vec<f64>,
    /// `true` when the layer was fixed by the start-layer screen.
    pub skipped: bool,
}

#[derive(Debug, Clone)]
struct Habitat {
    bits: Vec<bool>,
    hsi: f64,
    feasible: bool,
    created: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub loads: Vec<bool>,
    pub evaluation: Evaluation,
    pub start_layer: usize,
    pub layers: Vec<LayerTelemetry>,
}

impl SearchOutcome {
    pub fn distinct_total(&self) -> usize {
        self.layers.iter().map(|l| l.distinct).sum()
    }

    pub fn evaluations_total(&self) -> usize {
        self.layers.iter().map(|l| l.evaluations).sum()
    }
}

/// Deepest layer `g` such that every reachable load of a grade above `g`
/// can stay on: the islands' estimated converter capacity covers that
/// demand and the DC solve passes its limits.
pub fn start_layer_check(eval: &Evaluator, sides: &[BusSide], available: &[bool]) -> usize {
    let spec = eval.spec;
    for g in (2..=LAYER_COUNT).rev() {
        let loads: Vec<bool> = spec.loads.iter().zip(available).map(|(l, &a)| a && l.grade.layer() < g).collect();
        let config = SwitchConfig::from_sides(loads, sides);
        let demand = eval.net.island_demand(&config);
        let capacity_ok = eval.net.islands().iter().enumerate().all(|(i, island)| {
            let cap: f64 = island.converters.iter().map(|&m| eval.capacity(m).max(0.0)).sum();
            demand[i] <= cap
        });
        if capacity_ok && eval.evaluate(&config).feasible {
            return g;
        }
    }
    1
}

struct LayerRun<'e, 'a> {
    eval: &'e Evaluator<'a>,
    sides: &'e [BusSide],
    /// Full switch vector with this layer's variables off.
    base: Vec<bool>,
    vars: Vec<usize>,
    cache: HashMap<Vec<bool>, Evaluation>,
    evaluations: usize,
    repairs: usize,
}

impl LayerRun<'_, '_> {
    fn config(&self, bits: &[bool]) -> SwitchConfig {
        let mut loads = self.base.clone();
        for (&l, &b) in self.vars.iter().zip(bits) {
            loads[l] = b;
        }
        SwitchConfig::from_sides(loads, self.sides)
    }

    fn evaluate(&mut self, bits: &[bool]) -> Evaluation {
        self.evaluations += 1;
        if let Some(e) = self.cache.get(bits) {
            return e.clone();
        }
        let e = self.eval.evaluate(&self.config(bits));
        self.cache.insert(bits.to_vec(), e.clone());
        e
    }

    fn habitat(&mut self, bits: Vec<bool>, created: usize) -> Habitat {
        let e = self.evaluate(&bits);
        Habitat {
            hsi: if e.feasible { e.objective.weighted } else { f64::NEG_INFINITY },
            feasible: e.feasible,
            bits,
            created,
        }
    }

    /// Mutates until feasible, then falls back to greedy shedding.
    fn repair<R: Rng>(&mut self, bits: Vec<bool>, p_mut: f64, attempts: usize, rng: &mut R) -> Vec<bool> {
        if self.evaluate(&bits).feasible {
            return bits;
        }
        self.repairs += 1;
        let n = bits.len();
        if n == 0 {
            return bits;
        }
        for _ in 0..attempts {
            let mut cand = bits.clone();
            let mut flipped = false;
            for b in cand.iter_mut() {
                if rng.gen::<f64>() < p_mut {
                    *b = !*b;
                    flipped = true;
                }
            }
            if !flipped {
                let z = rng.gen_range(0..n);
                cand[z] = !cand[z];
            }
            if self.evaluate(&cand).feasible {
                return cand;
            }
        }
        self.greedy(bits)
    }

    /// Switches off layer loads one at a time, nearest the violation first,
    /// smallest first on a bus.
    fn greedy(&mut self, mut bits: Vec<bool>) -> Vec<bool> {
        let spec = self.eval.spec;
        loop {
            let config = self.config(&bits);
            let (e, sol, _) = self.eval.evaluate_full(&config);
            self.evaluations += 1;
            self.cache.insert(bits.clone(), e.clone());
            if e.feasible {
                return bits;
            }
            let on: Vec<usize> = (0..bits.len()).filter(|&z| bits[z]).collect();
            if on.is_empty() {
                return bits;
            }
            let bus_of = |z: usize| spec.load_bus(self.vars[z], self.sides);
            let power = |z: usize| spec.loads[self.vars[z]].power;
            let pick = match (e.hotspot, &sol) {
                (Some(h), Some(sol)) => {
                    let island = sol.bus_island[h];
                    let key = |z: usize| {
                        let b = bus_of(z);
                        let same_bus = b == h;
                        let same_island = island.is_some() && sol.bus_island[b] == island;
                        (!same_bus, !same_island, sol.voltages[b], power(z))
                    };
                    *on.iter()
                        .min_by(|&&x, &&y| key(x).partial_cmp(&key(y)).unwrap_or(std::cmp::Ordering::Equal))
                        .unwrap()
                }
                _ => *on
                    .iter()
                    .max_by(|&&x, &&y| power(x).partial_cmp(&power(y)).unwrap_or(std::cmp::Ordering::Equal))
                    .unwrap(),
            };
            bits[pick] = false;
        }
    }
}

/// Sorted order: HSI descending, earlier creation first on ties.
fn ranking(pop: &[Habitat]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pop.len()).collect();
    idx.sort_by(|&a, &b| {
        pop[b]
            .hsi
            .partial_cmp(&pop[a].hsi)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(pop[a].created.cmp(&pop[b].created))
    });
    idx
}

/// Roulette pick over `weights`, skipping index `skip`.
fn roulette<R: Rng>(weights: &[f64], skip: usize, rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, w)| w).sum();
    if !(total > 0.0) {
        return None;
    }
    let mut r = rng.gen::<f64>() * total;
    let mut last = None;
    for (j, &w) in weights.iter().enumerate() {
        if j == skip {
            continue;
        }
        last = Some(j);
        if r < w {
            return Some(j);
        }
        r -= w;
    }
    last
}

/// One generation of migration and mutation on a ranked population. Elites
/// are carried over untouched; every other habitat immigrates bit by bit
/// from the old population and is then mutated.
pub(crate) fn migrate_and_mutate<R: Rng>(
    population: &[Vec<bool>],
    order: &[usize],
    params: &BboParams,
    rng: &mut R,
) -> Vec<(usize, Vec<bool>)> {
    let n = population.len();
    let mut mu = vec![0.0; n];
    let mut lambda = vec![0.0; n];
    for (pos, &i) in order.iter().enumerate() {
        let (m, l) = migration_rates(n - pos, &BboParams { habitats: n, ..params.clone() }).expect("rank in range");
        mu[i] = m;
        lambda[i] = l;
    }
    let elites = params.elite_count.min(n);
    let mut out = Vec::with_capacity(n - elites);
    for &i in &order[elites..] {
        let mut bits = population[i].clone();
        for z in 0..bits.len() {
            if rng.gen::<f64>() < lambda[i] {
                if let Some(j) = roulette(&mu, i, rng) {
                    bits[z] = population[j][z];
                }
            }
        }
        for b in bits.iter_mut() {
            if rng.gen::<f64>() < params.mutation_rate {
                *b = !*b;
            }
        }
        out.push((i, bits));
    }
    out
}

/// Runs the layered search for one complete redundancy assignment.
///
/// `available` marks loads whose bus is energized under `sides`; the others
/// stay off. Layers below `start_layer` are taken from `prefix` (restricted
/// to available loads) without searching.
pub fn layered_search<R: Rng>(
    eval: &Evaluator,
    sides: &[BusSide],
    available: &[bool],
    start_layer: usize,
    prefix: &[bool],
    params: &BboParams,
    rng: &mut R,
) -> Result<SearchOutcome> {
    params.validate()?;
    let spec = eval.spec;
    let l_count = spec.load_count();
    for (what, v) in [("available flags", available.len()), ("prefix switches", prefix.len())] {
        if v != l_count {
            return Err(Error::Dimension { what, expected: l_count, actual: v });
        }
    }
    if !(1..=LAYER_COUNT).contains(&start_layer) {
        return Err(Error::parameter("start_layer", format!("must lie in 1..={LAYER_COUNT}")));
    }

    let mut current: Vec<bool> = spec
        .loads
        .iter()
        .enumerate()
        .map(|(l, load)| available[l] && prefix[l] && load.grade.layer() < start_layer)
        .collect();
    let mut telemetry = Vec::with_capacity(LAYER_COUNT);
    for g in 1..start_layer {
        let variables = spec.loads.iter().zip(available).filter(|(l, &a)| a && l.grade.layer() == g).count();
        telemetry.push(LayerTelemetry {
            layer: g,
            variables,
            generations: 0,
            evaluations: 0,
            distinct: 1,
            repairs: 0,
            best_history: Vec::new(),
            skipped: true,
        });
    }

    let mut created = 0usize;
    let mut last_eval = None;
    for g in start_layer..=LAYER_COUNT {
        let vars: Vec<usize> = (0..l_count).filter(|&l| available[l] && spec.loads[l].grade.layer() == g).collect();
        let cutoff = layer_cutoff(g, &spec.weights, &spec.loads)?;
        let mut run =
            LayerRun { eval, sides, base: current.clone(), vars, cache: HashMap::new(), evaluations: 0, repairs: 0 };
        let nv = run.vars.len();

        // The prefix check is not part of the search and stays out of the
        // distinct-pattern count.
        if !eval.evaluate(&run.config(&vec![false; nv])).feasible {
            return Err(Error::Infeasible(format!(
                "layer {g} cannot start: the configuration fixed by the layers above violates the limits"
            )));
        }

        let mut population: Vec<Habitat> = Vec::with_capacity(params.habitats);
        for h in 0..params.habitats {
            let bits = match h {
                0 => vec![true; nv],
                1 => vec![false; nv],
                _ => (0..nv).map(|_| rng.gen::<bool>()).collect(),
            };
            let bits = run.repair(bits, params.mutation_rate, params.repair_attempts, rng);
            population.push(run.habitat(bits, created));
            created += 1;
        }

        let mut order = ranking(&population);
        let mut best = population[order[0]].hsi;
        let mut history = vec![best];
        let mut stall = 0usize;
        let mut generations = 0;
        // With fewer free patterns than habitats the first population may
        // already be exhaustive; migration still runs so the count of
        // evaluated patterns stays honest.
        while generations < params.max_generations {
            generations += 1;
            let old: Vec<Vec<bool>> = population.iter().map(|h| h.bits.clone()).collect();
            let offspring = migrate_and_mutate(&old, &order, params, rng);
            for (i, bits) in offspring {
                let bits = run.repair(bits, params.mutation_rate, params.repair_attempts, rng);
                population[i] = run.habitat(bits, created);
                created += 1;
            }
            order = ranking(&population);
            let now = population[order[0]].hsi;
            let e = now - best;
            best = best.max(now);
            history.push(best);
            if e < cutoff {
                stall += 1;
                if stall > params.repetitions {
                    break;
                }
            } else {
                stall = 0;
            }
        }

        let winner = &population[order[0]];
        if !winner.feasible {
            return Err(Error::Infeasible(format!("no feasible habitat in layer {g}")));
        }
        for (&l, &b) in run.vars.iter().zip(&winner.bits) {
            current[l] = b;
        }
        last_eval = Some(run.evaluate(&winner.bits.clone()));
        telemetry.push(LayerTelemetry {
            layer: g,
            variables: nv,
            generations,
            evaluations: run.evaluations,
            distinct: run.cache.len(),
            repairs: run.repairs,
            best_history: history,
            skipped: false,
        });
    }

    Ok(SearchOutcome {
        loads: current,
        evaluation: last_eval.expect("at least one layer is searched"),
        start_layer,
        layers: telemetry,
    })
}
