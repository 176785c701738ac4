//! Binary PSO: real velocities, bits drawn through a sigmoid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{rank, BaselineParams, FlatOutcome, FlatProblem};

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

pub(crate) fn run(problem: &mut FlatProblem, params: &BaselineParams) -> FlatOutcome {
    let pso = &params.pso;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = problem.width();
    let mut pos = problem.seed_population(params.population, &mut rng);
    let mut vel = vec![vec![0.0; n]; params.population];
    let fit: Vec<f64> = pos.iter().map(|b| problem.fitness(b)).collect();
    let mut pbest = pos.clone();
    let mut pbest_fit = fit.clone();
    let g = rank(&fit)[0];
    let mut gbest = pos[g].clone();
    let mut gbest_fit = fit[g];
    let mut history = vec![gbest_fit];
    let target = |b: bool| if b { 1.0 } else { 0.0 };
    for _ in 0..params.generations {
        for i in 0..params.population {
            for z in 0..n {
                let x = target(pos[i][z]);
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                let v = pso.inertia * vel[i][z]
                    + pso.c1 * r1 * (target(pbest[i][z]) - x)
                    + pso.c2 * r2 * (target(gbest[z]) - x);
                vel[i][z] = v.clamp(-pso.velocity_max, pso.velocity_max);
                pos[i][z] = rng.gen::<f64>() < sigmoid(vel[i][z]);
            }
            let f = problem.fitness(&pos[i]);
            if f > pbest_fit[i] {
                pbest_fit[i] = f;
                pbest[i] = pos[i].clone();
            }
        }
        // Global best is refreshed once per sweep.
        let g = rank(&pbest_fit)[0];
        if pbest_fit[g] > gbest_fit {
            gbest_fit = pbest_fit[g];
            gbest = pbest[g].clone();
        }
        history.push(gbest_fit);
    }
    FlatOutcome { best: gbest, generations: params.generations, best_history: history }
}
