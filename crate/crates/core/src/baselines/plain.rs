//! BBO on the flat vector: penalty fitness, no layering, no repair and no
//! stall stop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{rank, BaselineParams, FlatOutcome, FlatProblem};
use crate::bbo::{migrate_and_mutate, BboParams};

pub(crate) fn run(problem: &mut FlatProblem, params: &BaselineParams) -> FlatOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let bbo = BboParams {
        habitats: params.population,
        elite_count: params.elite_count,
        mutation_rate: params.bbo_mutation_rate,
        ..BboParams::default()
    };
    let mut pop = problem.seed_population(params.population, &mut rng);
    let mut fit: Vec<f64> = pop.iter().map(|b| problem.fitness(b)).collect();
    let mut order = rank(&fit);
    let mut best = pop[order[0]].clone();
    let mut best_fit = fit[order[0]];
    let mut history = vec![best_fit];
    for _ in 0..params.generations {
        for (i, bits) in migrate_and_mutate(&pop, &order, &bbo, &mut rng) {
            fit[i] = problem.fitness(&bits);
            pop[i] = bits;
        }
        order = rank(&fit);
        if fit[order[0]] > best_fit {
            best_fit = fit[order[0]];
            best = pop[order[0]].clone();
        }
        history.push(best_fit);
    }
    FlatOutcome { best, generations: params.generations, best_history: history }
}
