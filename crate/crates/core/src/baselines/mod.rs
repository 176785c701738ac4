//! Comparison solvers over a flat switch vector: plain BBO, a genetic
//! algorithm, binary PSO and an exhaustive oracle.
//!
//! The decision vector is every load switch followed by one bit per zone
//! (set = SB). No mode distinction is applied; loads left on dead buses are
//! simply penalized by the shared evaluator.

mod ga;
mod oracle;
mod plain;
mod pso;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::bbo::{BboParams, LayerTelemetry};
use crate::error::{Error, Result};
use crate::evaluate::{penalized_fitness, CapacityModel, Evaluator};
use crate::model::{BusSide, FaultSet, SwitchConfig, SystemSpec};
use crate::nrbbo::{assemble, reconfigure, ReconfigResult};

pub use oracle::{oracle_exhaustive, ORACLE_MAX_VARIABLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nrbbo,
    Bbo,
    Ga,
    Pso,
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Nrbbo, Algorithm::Bbo, Algorithm::Ga, Algorithm::Pso, Algorithm::Oracle];
    pub const HEURISTICS: [Algorithm; 4] = [Algorithm::Nrbbo, Algorithm::Bbo, Algorithm::Ga, Algorithm::Pso];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nrbbo => "nrbbo",
            Algorithm::Bbo => "bbo",
            Algorithm::Ga => "ga",
            Algorithm::Pso => "pso",
            Algorithm::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::parameter("algorithm", format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaParams {
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub tournament_size: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams { crossover_rate: 0.8, mutation_rate: 0.02, tournament_size: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsoParams {
    pub inertia: f64,
    pub c1: f64,
    pub c2: f64,
    pub velocity_max: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        PsoParams { inertia: 0.7, c1: 1.5, c2: 1.5, velocity_max: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineParams {
    pub algorithm: Algorithm,
    pub population: usize,
    pub generations: usize,
    pub elite_count: usize,
    /// Per-bit mutation probability of plain BBO.
    pub bbo_mutation_rate: f64,
    pub ga: GaParams,
    pub pso: PsoParams,
    pub seed: u64,
}

impl BaselineParams {
    /// Baseline settings with the population size, generation count,
    /// elitism and seed of an NRBBO run.
    pub fn matched(algorithm: Algorithm, bbo: &BboParams) -> Self {
        BaselineParams {
            algorithm,
            population: bbo.habitats,
            generations: bbo.max_generations,
            elite_count: bbo.elite_count,
            bbo_mutation_rate: bbo.mutation_rate,
            ga: GaParams::default(),
            pso: PsoParams::default(),
            seed: bbo.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(Error::parameter("population", "must be >= 1"));
        }
        if self.generations == 0 {
            return Err(Error::parameter("generations", "must be >= 1"));
        }
        if self.elite_count > self.population {
            return Err(Error::parameter("elite_count", "must not exceed the population"));
        }
        for (name, v) in [
            ("bbo_mutation_rate", self.bbo_mutation_rate),
            ("ga.crossover_rate", self.ga.crossover_rate),
            ("ga.mutation_rate", self.ga.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::parameter(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if self.ga.tournament_size == 0 {
            return Err(Error::parameter("tournament_size", "must be >= 1"));
        }
        if !(self.pso.velocity_max > 0.0) {
            return Err(Error::parameter("velocity_max", "must be positive"));
        }
        Ok(())
    }

    fn telemetry(&self) -> BTreeMap<String, f64> {
        let mut t = BTreeMap::new();
        t.insert("population".into(), self.population as f64);
        t.insert("generations".into(), self.generations as f64);
        match self.algorithm {
            Algorithm::Bbo => {
                t.insert("elite_count".into(), self.elite_count as f64);
                t.insert("mutation_rate".into(), self.bbo_mutation_rate);
            }
            Algorithm::Ga => {
                t.insert("elite_count".into(), self.elite_count as f64);
                t.insert("crossover_rate".into(), self.ga.crossover_rate);
                t.insert("mutation_rate".into(), self.ga.mutation_rate);
                t.insert("tournament_size".into(), self.ga.tournament_size as f64);
            }
            Algorithm::Pso => {
                t.insert("inertia".into(), self.pso.inertia);
                t.insert("c1".into(), self.pso.c1);
                t.insert("c2".into(), self.pso.c2);
                t.insert("velocity_max".into(), self.pso.velocity_max);
            }
            Algorithm::Nrbbo | Algorithm::Oracle => {}
        }
        t
    }
}

/// The flat problem every baseline optimizes: penalized fitness of a
/// load-plus-redundancy bit vector, cached by pattern.
pub(crate) struct FlatProblem<'a> {
    pub spec: &'a SystemSpec,
    pub eval: Evaluator<'a>,
    cache: HashMap<Vec<bool>, f64>,
    pub evaluations: usize,
}

impl<'a> FlatProblem<'a> {
    pub fn new(spec: &'a SystemSpec, faults: &FaultSet) -> Result<Self> {
        Ok(FlatProblem {
            spec,
            eval: Evaluator::new(spec, faults, CapacityModel::Exact)?,
            cache: HashMap::new(),
            evaluations: 0,
        })
    }

    pub fn width(&self) -> usize {
        self.spec.load_count() + self.spec.zone_count
    }

    pub fn decode(&self, bits: &[bool]) -> SwitchConfig {
        let l = self.spec.load_count();
        let sides: Vec<BusSide> = bits[l..].iter().map(|&b| if b { BusSide::Sb } else { BusSide::Pb }).collect();
        SwitchConfig::from_sides(bits[..l].to_vec(), &sides)
    }

    pub fn encode(&self, config: &SwitchConfig) -> Vec<bool> {
        let mut bits = config.loads.clone();
        bits.extend(config.sides().iter().map(|&s| s == BusSide::Sb));
        bits
    }

    pub fn fitness(&mut self, bits: &[bool]) -> f64 {
        self.evaluations += 1;
        if let Some(&f) = self.cache.get(bits) {
            return f;
        }
        let e = self.eval.evaluate(&self.decode(bits));
        let f = penalized_fitness(self.spec, &e);
        self.cache.insert(bits.to_vec(), f);
        f
    }

    pub fn distinct(&self) -> usize {
        self.cache.len()
    }

    /// Initial population: the pre-fault configuration, everything off,
    /// then uniform random patterns.
    pub fn seed_population<R: rand::Rng>(&self, size: usize, rng: &mut R) -> Vec<Vec<bool>> {
        let mut pop = Vec::with_capacity(size);
        pop.push(self.encode(&SwitchConfig::all_on(self.spec)));
        if size > 1 {
            pop.push(self.encode(&SwitchConfig::all_off(self.spec)));
        }
        while pop.len() < size {
            pop.push((0..self.width()).map(|_| rng.gen::<bool>()).collect());
        }
        pop
    }
}

/// Best pattern found by a baseline plus its per-generation trace.
pub(crate) struct FlatOutcome {
    pub best: Vec<bool>,
    pub generations: usize,
    pub best_history: Vec<f64>,
}

/// Runs GA, PSO or plain BBO on the flat decision space.
pub fn solve_baseline(spec: &SystemSpec, faults: &FaultSet, params: &BaselineParams) -> Result<ReconfigResult> {
    let started = Instant::now();
    params.validate()?;
    let mut problem = FlatProblem::new(spec, faults)?;
    let outcome = match params.algorithm {
        Algorithm::Bbo => plain::run(&mut problem, params),
        Algorithm::Ga => ga::run(&mut problem, params),
        Algorithm::Pso => pso::run(&mut problem, params),
        other => {
            return Err(Error::Unsupported(format!("`{other}` is not a flat baseline")));
        }
    };
    let config = problem.decode(&outcome.best);
    let mut result = assemble(spec, faults, params.algorithm.name(), config, &problem.eval);
    result.layers = vec![LayerTelemetry {
        layer: 0,
        variables: problem.width(),
        generations: outcome.generations,
        evaluations: problem.evaluations,
        distinct: problem.distinct(),
        repairs: 0,
        best_history: outcome.best_history,
        skipped: false,
    }];
    result.evaluations = problem.evaluations;
    result.seed = params.seed;
    result.parameters = params.telemetry();
    result.elapsed = started.elapsed();
    Ok(result)
}

/// Dispatches to the named solver. NRBBO uses `bbo` directly; the baselines
/// take matched population, generation and seed settings from it.
pub fn solve(spec: &SystemSpec, faults: &FaultSet, algorithm: Algorithm, bbo: &BboParams) -> Result<ReconfigResult> {
    match algorithm {
        Algorithm::Nrbbo => reconfigure(spec, faults, bbo),
        Algorithm::Oracle => oracle_exhaustive(spec, faults),
        a => solve_baseline(spec, faults, &BaselineParams::matched(a, bbo)),
    }
}

/// Index order by fitness, best first; earlier index first on ties.
pub(crate) fn rank(fitness: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fitness.len()).collect();
    idx.sort_by(|&a, &b| fitness[b].partial_cmp(&fitness[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    idx
}
