//! Fault sweeps, restored-power distributions and multi-run statistics.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{solve, Algorithm};
use crate::bbo::BboParams;
use crate::error::{Error, Result};
use crate::mode::Mode;
use crate::model::{FaultSet, Grade, SystemSpec};
use crate::nrbbo::reconfigure;

/// Every size-`n` set of faultable segments, in lexicographic order of the
/// segment list (PB segments first, then SB).
pub fn enumerate_faults(spec: &SystemSpec, n_faults: usize) -> Result<Vec<FaultSet>> {
    let lines = spec.faultable_lines();
    if n_faults == 0 {
        return Err(Error::parameter("n_faults", "must be >= 1"));
    }
    if n_faults > lines.len() {
        return Err(Error::parameter("n_faults", format!("{n_faults} exceeds the {} faultable segments", lines.len())));
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..n_faults).collect();
    loop {
        out.push(FaultSet::from_lines(spec, idx.iter().map(|&i| lines[i])));
        // Advance to the next combination.
        let mut i = n_faults;
        while i > 0 && idx[i - 1] == lines.len() - n_faults + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return Ok(out);
        }
        idx[i - 1] += 1;
        for j in i..n_faults {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfPoint {
    /// P_d, watts.
    pub power: f64,
    /// P_d over the plant's total load.
    pub normalized: f64,
    /// Prob{P_r ≤ P_d}.
    pub probability: f64,
}

/// Evenly spaced P_d grid from 0 to `max` inclusive.
pub fn power_grid(max: f64, steps: usize) -> Vec<f64> {
    let steps = steps.max(1);
    (0..=steps).map(|i| max * i as f64 / steps as f64).collect()
}

/// Empirical CDF of restored power sampled at `grid`. `total` normalizes the
/// power axis.
pub fn restored_power_cdf(restored: &[f64], grid: &[f64], total: f64) -> Result<Vec<CdfPoint>> {
    if restored.is_empty() {
        return Err(Error::parameter("results", "at least one restored-power value is required"));
    }
    let mut sorted = restored.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = sorted.len() as f64;
    Ok(grid
        .iter()
        .map(|&p| {
            let count = sorted.partition_point(|&r| r <= p);
            CdfPoint { power: p, normalized: if total > 0.0 { p / total } else { 0.0 }, probability: count as f64 / n }
        })
        .collect())
}

/// Result of one scenario in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioOutcome {
    pub faults: String,
    pub mode: Option<Mode>,
    pub feasible: bool,
    /// P_r, watts; 0 when no feasible configuration was found.
    pub restored: f64,
    pub weighted: f64,
    pub vital_shortfall: f64,
    /// Solver error, if the run failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub scenario: String,
    pub n_faults: usize,
    pub scenarios: Vec<ScenarioOutcome>,
    pub cdf: Vec<CdfPoint>,
    /// Share of scenarios in which some vital load stays unserved.
    pub vital_shortfall_fraction: f64,
}

/// Runs NRBBO on every `n`-fault scenario.
pub fn sweep(spec: &SystemSpec, n_faults: usize, params: &BboParams) -> Result<SweepReport> {
    params.validate()?;
    let fault_sets = enumerate_faults(spec, n_faults)?;
    let vital_total: f64 = spec.loads_of(Grade::Vital).map(|l| l.power).sum();
    let scenarios: Vec<ScenarioOutcome> = fault_sets
        .par_iter()
        .map(|faults| match reconfigure(spec, faults, params) {
            Ok(r) => ScenarioOutcome {
                faults: r.faults.clone(),
                mode: r.mode,
                feasible: r.feasible,
                restored: r.restored_if_feasible(),
                weighted: if r.feasible { r.objective.weighted } else { 0.0 },
                vital_shortfall: if r.feasible { r.vital_shortfall } else { vital_total },
                error: None,
            },
            Err(e) => ScenarioOutcome {
                faults: faults.describe(spec),
                mode: None,
                feasible: false,
                restored: 0.0,
                weighted: 0.0,
                vital_shortfall: vital_total,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let total = spec.total_load_power();
    let restored: Vec<f64> = scenarios.iter().map(|s| s.restored).collect();
    let cdf = restored_power_cdf(&restored, &power_grid(total, 108), total)?;
    let short = scenarios.iter().filter(|s| s.vital_shortfall > 0.0).count();
    Ok(SweepReport {
        scenario: spec.name.clone(),
        n_faults,
        vital_shortfall_fraction: short as f64 / scenarios.len() as f64,
        scenarios,
        cdf,
    })
}

/// One solver run in a benchmark.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub habitats: usize,
    pub repetitions: usize,
    pub feasible: bool,
    /// Restored power of a feasible result, otherwise 0.
    pub restored: f64,
    pub weighted: f64,
    pub evaluations: usize,
    /// Wall-clock seconds; left out of JSON so documents are reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub runs: usize,
    pub best: f64,
    pub mean: f64,
    pub worst: f64,
    /// Population standard deviation.
    pub std: f64,
    #[serde(skip)]
    pub time_mean: f64,
    #[serde(skip)]
    pub time_std: f64,
}

impl RunStats {
    pub fn of(records: &[&RunRecord]) -> RunStats {
        let restored: Vec<f64> = records.iter().map(|r| r.restored).collect();
        let times: Vec<f64> = records.iter().map(|r| r.seconds).collect();
        let (mean, std) = mean_std(&restored);
        let (time_mean, time_std) = mean_std(&times);
        RunStats {
            runs: records.len(),
            best: restored.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean,
            worst: restored.iter().copied().fold(f64::INFINITY, f64::min),
            std,
            time_mean,
            time_std,
        }
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub stats: RunStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityCell {
    pub habitats: usize,
    pub repetitions: usize,
    pub stats: RunStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub scenario: String,
    pub faults: String,
    pub runs: usize,
    pub summary: Vec<AlgorithmSummary>,
    pub sensitivity: Vec<SensitivityCell>,
    pub records: Vec<RunRecord>,
}

impl BenchmarkReport {
    pub fn stats(&self, algorithm: Algorithm) -> Option<&RunStats> {
        self.summary.iter().find(|s| s.algorithm == algorithm).map(|s| &s.stats)
    }
}

/// Population sizes and RE values swept for the NRBBO sensitivity table.
pub fn default_sensitivity_grid() -> Vec<(usize, usize)> {
    let mut grid = Vec::new();
    for h in [10, 20, 30, 40, 50] {
        for re in [1, 3, 5, 7, 9] {
            grid.push((h, re));
        }
    }
    grid
}

fn timed_run(spec: &SystemSpec, faults: &FaultSet, algorithm: Algorithm, params: &BboParams) -> RunRecord {
    let started = Instant::now();
    let result = solve(spec, faults, algorithm, params);
    let seconds = started.elapsed().as_secs_f64();
    let (feasible, restored, weighted, evaluations) = match &result {
        Ok(r) if r.feasible => (true, r.objective.restored, r.objective.weighted, r.evaluations),
        Ok(r) => (false, 0.0, 0.0, r.evaluations),
        Err(_) => (false, 0.0, 0.0, 0),
    };
    RunRecord {
        algorithm,
        seed: params.seed,
        habitats: params.habitats,
        repetitions: params.repetitions,
        feasible,
        restored,
        weighted,
        evaluations,
        seconds,
    }
}

/// Runs each algorithm with seeds `1..=runs` on one fault set, then NRBBO
/// over the `(H, RE)` grid. Baselines are matched to `params` in population
/// size and generation count.
pub fn run_benchmark(
    spec: &SystemSpec,
    faults: &FaultSet,
    algorithms: &[Algorithm],
    runs: usize,
    params: &BboParams,
    grid: &[(usize, usize)],
) -> Result<BenchmarkReport> {
    if runs == 0 {
        return Err(Error::parameter("runs", "must be >= 1"));
    }
    params.validate()?;
    let seeds: Vec<u64> = (1..=runs as u64).collect();
    let mut jobs: Vec<(Algorithm, BboParams)> = Vec::new();
    for &a in algorithms {
        for &seed in &seeds {
            jobs.push((a, BboParams { seed, ..params.clone() }));
        }
    }
    for &(h, re) in grid {
        let p = BboParams { habitats: h, repetitions: re, elite_count: params.elite_count.min(h), ..params.clone() };
        p.validate()?;
        for &seed in &seeds {
            jobs.push((Algorithm::Nrbbo, BboParams { seed, ..p.clone() }));
        }
    }
    let records: Vec<RunRecord> = jobs.par_iter().map(|(a, p)| timed_run(spec, faults, *a, p)).collect();

    let main = &records[..algorithms.len() * runs];
    let summary = algorithms
        .iter()
        .enumerate()
        .map(|(i, &algorithm)| AlgorithmSummary {
            algorithm,
            stats: RunStats::of(&main[i * runs..(i + 1) * runs].iter().collect::<Vec<_>>()),
        })
        .collect();
    let rest = &records[algorithms.len() * runs..];
    let sensitivity = grid
        .iter()
        .enumerate()
        .map(|(i, &(habitats, repetitions))| SensitivityCell {
            habitats,
            repetitions,
            stats: RunStats::of(&rest[i * runs..(i + 1) * runs].iter().collect::<Vec<_>>()),
        })
        .collect();
    Ok(BenchmarkReport {
        scenario: spec.name.clone(),
        faults: faults.describe(spec),
        runs,
        summary,
        sensitivity,
        records,
    })
}

#[derive(Serialize)]
struct RunRow<'a> {
    algorithm: &'a str,
    seed: u64,
    habitats: usize,
    repetitions: usize,
    feasible: bool,
    restored_w: f64,
    weighted: f64,
    evaluations: usize,
    seconds: f64,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    algorithm: &'a str,
    runs: usize,
    best_w: f64,
    mean_w: f64,
    worst_w: f64,
    std_w: f64,
    time_mean_s: f64,
    time_std_s: f64,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// One row per run: algorithm, seed, habitats, repetitions, feasible,
/// restored_w, weighted, evaluations, seconds.
pub fn write_runs_csv<W: Write>(report: &BenchmarkReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &report.records {
        w.serialize(RunRow {
            algorithm: r.algorithm.name(),
            seed: r.seed,
            habitats: r.habitats,
            repetitions: r.repetitions,
            feasible: r.feasible,
            restored_w: r.restored,
            weighted: r.weighted,
            evaluations: r.evaluations,
            seconds: r.seconds,
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per algorithm: algorithm, runs, best_w, mean_w, worst_w, std_w,
/// time_mean_s, time_std_s.
pub fn write_summary_csv<W: Write>(report: &BenchmarkReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in &report.summary {
        let st = &s.stats;
        w.serialize(SummaryRow {
            algorithm: s.algorithm.name(),
            runs: st.runs,
            best_w: st.best,
            mean_w: st.mean,
            worst_w: st.worst,
            std_w: st.std,
            time_mean_s: st.time_mean,
            time_std_s: st.time_std,
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ScenarioRow<'a> {
    faults: &'a str,
    mode: String,
    feasible: bool,
    restored_w: f64,
    weighted: f64,
    vital_shortfall_w: f64,
    error: &'a str,
}

/// One row per scenario: faults, mode, feasible, restored_w, weighted,
/// vital_shortfall_w, error.
pub fn write_sweep_csv<W: Write>(report: &SweepReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in &report.scenarios {
        w.serialize(ScenarioRow {
            faults: &s.faults,
            mode: s.mode.map(|m| m.to_string()).unwrap_or_default(),
            feasible: s.feasible,
            restored_w: s.restored,
            weighted: s.weighted,
            vital_shortfall_w: s.vital_shortfall,
            error: s.error.as_deref().unwrap_or(""),
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: power_w, normalized, probability.
pub fn write_cdf_csv<W: Write>(cdf: &[CdfPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["power_w", "normalized", "probability"]).map_err(csv_err)?;
    for p in cdf {
        w.write_record([p.power.to_string(), p.normalized.to_string(), p.probability.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
