//! Generational GA: tournament selection, uniform crossover, bit-flip
//! mutation and elitism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{rank, BaselineParams, FlatOutcome, FlatProblem};

fn tournament<R: Rng>(fit: &[f64], size: usize, rng: &mut R) -> usize {
    let mut pick = rng.gen_range(0..fit.len());
    for _ in 1..size {
        let c = rng.gen_range(0..fit.len());
        if fit[c] > fit[pick] {
            pick = c;
        }
    }
    pick
}

pub(crate) fn run(problem: &mut FlatProblem, params: &BaselineParams) -> FlatOutcome {
    let ga = &params.ga;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pop = problem.seed_population(params.population, &mut rng);
    let mut fit: Vec<f64> = pop.iter().map(|b| problem.fitness(b)).collect();
    let order = rank(&fit);
    let mut best = pop[order[0]].clone();
    let mut best_fit = fit[order[0]];
    let mut history = vec![best_fit];
    for _ in 0..params.generations {
        let order = rank(&fit);
        let mut next: Vec<Vec<bool>> = order[..params.elite_count].iter().map(|&i| pop[i].clone()).collect();
        let mut next_fit: Vec<f64> = order[..params.elite_count].iter().map(|&i| fit[i]).collect();
        while next.len() < params.population {
            let a = tournament(&fit, ga.tournament_size, &mut rng);
            let b = tournament(&fit, ga.tournament_size, &mut rng);
            let mut child = pop[a].clone();
            if rng.gen::<f64>() < ga.crossover_rate {
                for (z, bit) in child.iter_mut().enumerate() {
                    if rng.gen::<bool>() {
                        *bit = pop[b][z];
                    }
                }
            }
            for bit in child.iter_mut() {
                if rng.gen::<f64>() < ga.mutation_rate {
                    *bit = !*bit;
                }
            }
            next_fit.push(problem.fitness(&child));
            next.push(child);
        }
        pop = next;
        fit = next_fit;
        let top = rank(&fit)[0];
        if fit[top] > best_fit {
            best_fit = fit[top];
            best = pop[top].clone();
        }
        history.push(best_fit);
    }
    FlatOutcome { best, generations: params.generations, best_history: history }
}
