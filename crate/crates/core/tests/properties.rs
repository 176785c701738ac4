//! Randomized invariants, each checked against an independent computation.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use spsrecon::analysis::{power_grid, restored_power_cdf};
use spsrecon::bbo::migration_rates;
use spsrecon::converter::{max_output, residual};
use spsrecon::*;

fn six() -> SystemSpec {
    fixtures::six_zone()
}

fn faults_from_mask(spec: &SystemSpec, mask: u64, segments_only: bool) -> FaultSet {
    let pool: Vec<usize> = if segments_only { spec.faultable_lines() } else { (0..spec.lines.len()).collect() };
    FaultSet::from_lines(spec, pool.into_iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, l)| l))
}

fn sides_from_mask(spec: &SystemSpec, mask: u64) -> Vec<BusSide> {
    (0..spec.zone_count).map(|k| if mask >> k & 1 == 1 { BusSide::Sb } else { BusSide::Pb }).collect()
}

/// Breadth-first search from every converter bus over in-service lines.
fn bfs_energized(spec: &SystemSpec, faults: &FaultSet) -> Vec<Option<usize>> {
    let faulted = faults.lines(spec).unwrap();
    let n = spec.bus_count();
    let mut adj = vec![Vec::new(); n];
    for (i, l) in spec.lines.iter().enumerate() {
        if !faulted.contains(&i) {
            adj[l.from].push(l.to);
            adj[l.to].push(l.from);
        }
    }
    let mut label = vec![None; n];
    for m in 0..spec.converter_count() {
        let start = spec.converter_bus(m);
        if label[start].is_some() {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        label[start] = Some(start);
        while let Some(b) = queue.pop_front() {
            for &c in &adj[b] {
                if label[c].is_none() {
                    label[c] = Some(start);
                    queue.push_back(c);
                }
            }
        }
    }
    label
}

/// Loads restricted to energized buses.
fn live_loads(spec: &SystemSpec, faults: &FaultSet, sides: &[BusSide], mask: u64) -> Vec<bool> {
    let energized = bfs_energized(spec, faults);
    (0..spec.load_count()).map(|l| mask >> l & 1 == 1 && energized[spec.load_bus(l, sides)].is_some()).collect()
}

/// Newton solve of the nonlinear bus equations with a dense LU, for the
/// given non-slack converter outputs.
fn newton_reference(
    spec: &SystemSpec,
    faults: &FaultSet,
    config: &SwitchConfig,
    power: &[f64],
    slack_of: &dyn Fn(usize) -> bool,
) -> Vec<f64> {
    let faulted = faults.lines(spec).unwrap();
    let energized = bfs_energized(spec, faults);
    let n = spec.bus_count();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for (i, l) in spec.lines.iter().enumerate() {
        if faulted.contains(&i) {
            continue;
        }
        let c = 1.0 / l.resistance;
        g[(l.from, l.from)] += c;
        g[(l.to, l.to)] += c;
        g[(l.from, l.to)] -= c;
        g[(l.to, l.from)] -= c;
    }
    let sides = config.sides();
    let mut i_load = vec![0.0; n];
    for l in 0..spec.load_count() {
        if config.loads[l] {
            i_load[spec.load_bus(l, &sides)] += spec.loads[l].power / spec.nominal_dc_voltage;
        }
    }
    let mut p_inj = vec![0.0; n];
    let mut fixed = vec![None; n];
    for (m, &p) in power.iter().enumerate() {
        let b = spec.converter_bus(m);
        if slack_of(m) {
            fixed[b] = Some(spec.converters[m].dc_voltage);
        } else {
            p_inj[b] = p;
        }
    }
    let free: Vec<usize> = (0..n).filter(|&b| energized[b].is_some() && fixed[b].is_none()).collect();
    let mut u: Vec<f64> = (0..n)
        .map(|b| fixed[b].unwrap_or(if energized[b].is_some() { spec.nominal_dc_voltage } else { 0.0 }))
        .collect();
    for _ in 0..50 {
        let f = DVector::from_fn(free.len(), |r, _| {
            let b = free[r];
            let net: f64 = (0..n).map(|j| g[(b, j)] * u[j]).sum();
            net - p_inj[b] / u[b] + i_load[b]
        });
        if f.amax() < 1e-12 {
            break;
        }
        let jac = DMatrix::from_fn(free.len(), free.len(), |r, c| {
            let (b, j) = (free[r], free[c]);
            g[(b, j)] + if b == j { p_inj[b] / (u[b] * u[b]) } else { 0.0 }
        });
        let step = jac.lu().solve(&f).expect("nonsingular Jacobian");
        for (r, &b) in free.iter().enumerate() {
            u[b] -= step[r];
        }
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_is_symmetric_with_zero_row_sums(mask in 0u64..(1 << 22)) {
        let spec = six();
        let faults = faults_from_mask(&spec, mask, false);
        let adm = build_admittance(&spec, &faults).unwrap();
        for i in 0..adm.dim() {
            let row: f64 = (0..adm.dim()).map(|j| adm.get(i, j)).sum();
            prop_assert!(row.abs() < 1e-9);
            for j in 0..adm.dim() {
                prop_assert_eq!(adm.get(i, j), adm.get(j, i));
                if i != j {
                    prop_assert!(adm.get(i, j) <= 0.0);
                }
            }
        }
    }

    #[test]
    fn islands_match_breadth_first_search(mask in 0u64..(1 << 22)) {
        let spec = six();
        let faults = faults_from_mask(&spec, mask, false);
        let Ok(net) = DcNetwork::new(&spec, &faults) else { return Ok(()); };
        let reference = bfs_energized(&spec, &faults);
        for a in 0..spec.bus_count() {
            prop_assert_eq!(net.bus_island(a).is_some(), reference[a].is_some());
            for b in 0..spec.bus_count() {
                if reference[a].is_some() && reference[b].is_some() {
                    prop_assert_eq!(net.bus_island(a) == net.bus_island(b), reference[a] == reference[b]);
                }
            }
        }
    }

    #[test]
    fn removing_a_line_never_joins_islands(mask in 0u64..(1 << 10), extra in 0usize..10) {
        let spec = six();
        let faults = faults_from_mask(&spec, mask, true);
        let mut more = faults.clone();
        let line = &spec.lines[spec.faultable_lines()[extra]];
        more.insert(line.from, line.to);
        let a = build_admittance(&spec, &faults).unwrap().components(&spec);
        let b = build_admittance(&spec, &more).unwrap().components(&spec);
        for x in 0..spec.bus_count() {
            for y in 0..spec.bus_count() {
                if b[x] == b[y] {
                    prop_assert_eq!(a[x], a[y]);
                }
            }
        }
    }

    #[test]
    fn objective_grows_with_switched_on_loads(mask in 0u64..(1 << 36), extra in 0usize..36) {
        let spec = six();
        let loads: Vec<bool> = (0..36).map(|l| mask >> l & 1 == 1).collect();
        let mut more = loads.clone();
        more[extra] = true;
        let a = weighted_objective(&spec, &SwitchConfig::from_sides(loads, &spec.initial_redundancy)).unwrap();
        let b = weighted_objective(&spec, &SwitchConfig::from_sides(more, &spec.initial_redundancy)).unwrap();
        prop_assert!(b.weighted >= a.weighted);
        prop_assert!(b.restored >= a.restored);
    }

    #[test]
    fn dc_solution_matches_dense_newton(fmask in 0u64..(1 << 10), lmask in 0u64..(1 << 36), rmask in 0u64..64) {
        let spec = six();
        let faults = faults_from_mask(&spec, fmask, true);
        let sides = sides_from_mask(&spec, rmask);
        let config = SwitchConfig::from_sides(live_loads(&spec, &faults, &sides, lmask), &sides);
        let net = DcNetwork::new(&spec, &faults).unwrap();
        let power = net.dispatch(&config);
        let sol = net.solve_with(&config, &power).unwrap();
        prop_assert!(sol.kcl_residual < 1e-6);
        let reference = newton_reference(&spec, &faults, &config, &power, &|m| net.is_slack(m));
        for (a, b) in sol.voltages.iter().zip(&reference) {
            prop_assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn more_load_never_raises_voltage(fmask in 0u64..(1 << 10), lmask in 0u64..(1 << 36), extra in 0usize..36) {
        let spec = six();
        let faults = faults_from_mask(&spec, fmask, true);
        let sides = spec.initial_redundancy.clone();
        let loads = live_loads(&spec, &faults, &sides, lmask);
        let mut more = loads.clone();
        more[extra] |= live_loads(&spec, &faults, &sides, u64::MAX)[extra];
        let net = DcNetwork::new(&spec, &faults).unwrap();
        let none = vec![0.0; spec.converter_count()];
        let a = net.solve_with(&SwitchConfig::from_sides(loads, &sides), &none).unwrap();
        let b = net.solve_with(&SwitchConfig::from_sides(more, &sides), &none).unwrap();
        for (x, y) in a.voltages.iter().zip(&b.voltages) {
            prop_assert!(*y <= *x + 1e-9);
        }
    }

    #[test]
    fn converter_newton_residual_and_derivative(frac in 0.0f64..0.98, q in -2.0e6f64..2.0e6, m in 0usize..2) {
        let spec = six();
        let conv = &spec.converters[m];
        let peak = max_output(conv, q).unwrap();
        let p_oc = frac * peak.min(conv.p_oc_max);
        let sol = solve_converter_nr(conv, p_oc, q).unwrap();
        let (f, df) = residual(conv, sol.p_c, p_oc, q);
        prop_assert!(f.abs() < 1e-6 * p_oc.abs().max(1.0));
        let h = 1e-3 * sol.p_c.abs().max(1.0);
        let fd = (residual(conv, sol.p_c + h, p_oc, q).0 - residual(conv, sol.p_c - h, p_oc, q).0) / (2.0 * h);
        prop_assert!((fd - df).abs() <= 1e-5 * df.abs().max(1e-12));
    }

    #[test]
    fn classification_ignores_fault_order(mask in 0u64..(1 << 10), seed in any::<u64>()) {
        let spec = six();
        let mut lines: Vec<usize> = spec.faultable_lines().into_iter().enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1).map(|(_, l)| l).collect();
        let a = classify(&FaultSet::from_lines(&spec, lines.clone()), &spec);
        let n = lines.len();
        if n > 1 {
            lines.rotate_left((seed as usize) % n);
            lines.swap(0, n - 1);
        }
        let b = classify(&FaultSet::from_lines(&spec, lines), &spec);
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn cdf_is_monotone_and_bounded(values in prop::collection::vec(0.0f64..10.8e6, 1..60)) {
        let grid = power_grid(10.8e6, 50);
        let cdf = restored_power_cdf(&values, &grid, 10.8e6).unwrap();
        prop_assert!(cdf.windows(2).all(|w| w[1].probability >= w[0].probability));
        prop_assert!(cdf.iter().all(|p| (0.0..=1.0).contains(&p.probability)));
        prop_assert_eq!(cdf.last().unwrap().probability, 1.0);
    }

    #[test]
    fn rates_sum_to_the_maximum(h in 1usize..60, n in 1usize..60, e in 0.01f64..1.0) {
        prop_assume!(h <= n);
        let p = BboParams { habitats: n, emigration: e, immigration: e, elite_count: 0, ..BboParams::default() };
        let (mu, lambda) = migration_rates(h, &p).unwrap();
        prop_assert!((mu + lambda - e).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn oracle_bounds_every_heuristic(fmask in 0u64..4, seed in 1u64..1000) {
        let spec = fixtures::two_zone();
        let faults = faults_from_mask(&spec, fmask, true);
        let oracle = oracle_exhaustive(&spec, &faults).unwrap();
        let params = BboParams { seed, max_generations: 20, ..BboParams::default() };
        let exact = Evaluator::new(&spec, &faults, CapacityModel::Exact).unwrap();
        for a in Algorithm::HEURISTICS {
            let r = baselines::solve(&spec, &faults, a, &params).unwrap();
            // Cross-check: the shared evaluator agrees with the solver's verdict.
            prop_assert_eq!(exact.evaluate(&r.config).feasible, r.feasible);
            if r.feasible {
                prop_assert!(r.objective.weighted <= oracle.objective.weighted + 1e-6);
            }
        }
    }

    #[test]
    fn layered_runs_stay_within_the_pattern_budget(fmask in 0u64..(1 << 10), seed in 1u64..1000) {
        let spec = six();
        let faults = faults_from_mask(&spec, fmask, true);
        prop_assume!(faults.len() <= 3);
        let Ok(r) = reconfigure(&spec, &faults, &BboParams { seed, ..BboParams::default() }) else { return Ok(()); };
        for layer in &r.layers {
            prop_assert!(layer.distinct <= 1usize << layer.variables);
            prop_assert!(layer.best_history.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}
