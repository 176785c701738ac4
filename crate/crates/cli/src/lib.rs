//! Command-line front end: solve one fault set, sweep fault sets, compare
//! algorithms, or check a scenario file.
//!
//! Exit codes: 0 success; 2 the scenario cannot be restored (no feasible
//! configuration, or vital load left unserved); 1 any other error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spsrecon::analysis::{
    default_sensitivity_grid, run_benchmark, sweep, write_runs_csv, write_sweep_csv, BenchmarkReport, SweepReport,
};
use spsrecon::baselines::solve;
use spsrecon::model::Attachment;
use spsrecon::{load_system_spec_file, Algorithm, BboParams, FaultSet, Grade, ReconfigResult, SystemSpec};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_UNRESTORABLE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "spsrecon", version, about = "Post-fault reconfiguration of MVDC shipboard power systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reconfigure the plant for one fault set.
    Solve(SolveArgs),
    /// Solve every fault set of a given size and report the restored-power CDF.
    Sweep(SweepArgs),
    /// Run several algorithms over seeds 1..=runs and tabulate the results.
    Compare(CompareArgs),
    /// Parse and check a scenario file and print its size.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Nrbbo,
    Bbo,
    Ga,
    Pso,
    Oracle,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Nrbbo => Algorithm::Nrbbo,
            AlgorithmArg::Bbo => Algorithm::Bbo,
            AlgorithmArg::Ga => Algorithm::Ga,
            AlgorithmArg::Pso => Algorithm::Pso,
            AlgorithmArg::Oracle => Algorithm::Oracle,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario TOML file; the `.toml` extension may be omitted.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Population size H.
    #[arg(long)]
    pub habitats: Option<usize>,
    /// Generation cap N_g per layer.
    #[arg(long)]
    pub generations: Option<usize>,
    /// Extra generations RE after improvement stalls.
    #[arg(long)]
    pub re: Option<usize>,
    #[arg(long, env = "SPSRECON_SEED", default_value_t = 1)]
    pub seed: u64,
}

impl SearchArgs {
    fn params(&self) -> Result<BboParams> {
        let mut p = BboParams { seed: self.seed, ..BboParams::default() };
        if let Some(h) = self.habitats {
            p.habitats = h;
            p.elite_count = p.elite_count.min(h);
        }
        if let Some(g) = self.generations {
            p.max_generations = g;
        }
        if let Some(re) = self.re {
            p.repetitions = re;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated faults such as `pb:2-3,sb:4-5`; empty for none.
    #[arg(long, default_value = "")]
    pub faults: String,
    #[arg(long, value_enum, default_value = "nrbbo")]
    pub algorithm: AlgorithmArg,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Faults per scenario.
    #[arg(long)]
    pub n_faults: usize,
    /// Also write the CDF table as CSV here.
    #[arg(long)]
    pub cdf_out: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "")]
    pub faults: String,
    /// Algorithms to compare; repeat or comma-separate. Defaults to all
    /// four heuristics.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub algorithm: Vec<AlgorithmArg>,
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
    /// Also sweep NRBBO over the default (H, RE) grid.
    #[arg(long)]
    pub sensitivity: bool,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<spsrecon::Error>() {
                Some(spsrecon::Error::Infeasible(_) | spsrecon::Error::OuterDivergence { .. }) => EXIT_UNRESTORABLE,
                _ => EXIT_ERROR,
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Validate(a) => cmd_validate(&a),
    }
}

fn load(path: &Path) -> Result<SystemSpec> {
    load_system_spec_file(path).with_context(|| format!("loading scenario `{}`", path.display()))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing `{}`", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Debug, Serialize)]
pub struct SwitchRow {
    pub switch: String,
    pub zone: usize,
    pub grade: Option<Grade>,
    pub bus: String,
    pub power: Option<f64>,
    pub closed: bool,
}

/// Switch table: one row per load switch, then S_P/S_S per zone.
pub fn switch_table(spec: &SystemSpec, result: &ReconfigResult) -> Vec<SwitchRow> {
    let sides = result.config.sides();
    let mut rows: Vec<SwitchRow> = spec
        .loads
        .iter()
        .enumerate()
        .map(|(l, load)| SwitchRow {
            switch: load.name.clone(),
            zone: load.zone + 1,
            grade: Some(load.grade),
            bus: spec.bus_label(spec.load_bus(l, &sides)),
            power: Some(load.power),
            closed: result.config.loads[l],
        })
        .collect();
    for k in 0..spec.zone_count {
        for (label, closed, bus) in [
            ("S_P", result.config.redundancy_pb[k], spec.pb_bus(k)),
            ("S_S", result.config.redundancy_sb[k], spec.sb_bus(k)),
        ] {
            rows.push(SwitchRow {
                switch: format!("Z{}-{label}", k + 1),
                zone: k + 1,
                grade: None,
                bus: spec.bus_label(bus),
                power: None,
                closed,
            });
        }
    }
    rows
}

#[derive(Serialize)]
struct SolveDocument<'a> {
    result: &'a ReconfigResult,
    switches: Vec<SwitchRow>,
}

fn solve_summary(spec: &SystemSpec, r: &ReconfigResult) -> String {
    let mut s = String::new();
    s += &format!("scenario   {}\n", r.scenario);
    s += &format!("faults     {}\n", r.faults);
    s += &format!("algorithm  {} (seed {})\n", r.algorithm, r.seed);
    if let Some(mode) = r.mode {
        s += &format!("mode       {mode}\n");
    }
    s += &format!("feasible   {}\n", r.feasible);
    s += &format!(
        "restored   {:.3} MW of {:.3} MW (weighted {:.3})\n",
        r.objective.restored / 1e6,
        spec.total_load_power() / 1e6,
        r.objective.weighted / 1e6
    );
    s += &format!("vital gap  {:.3} MW\n", r.vital_shortfall / 1e6);
    for m in &r.machines {
        s += &format!(
            "{:<10} P_g {:.3} MW  Q_g {:.3} Mvar  U_g {:.1} V  P_oc {:.3} MW  loss {:.1} kW\n",
            m.generator,
            m.p_g / 1e6,
            m.q_g / 1e6,
            m.u_g,
            m.p_oc / 1e6,
            (m.p_loss + m.line_loss_p) / 1e3
        );
    }
    let shed = r.shed_loads(spec);
    s += &format!("shed       {}\n", if shed.is_empty() { "none".to_string() } else { shed.join(" ") });
    let sides: Vec<String> = r.redundancy.iter().map(|s| format!("{s:?}").to_uppercase()).collect();
    s += &format!("redundancy {}\n", sides.join(" "));
    if r.outer_iterations > 0 {
        s += &format!("outer      {} iteration(s), converged {}\n", r.outer_iterations, r.converged);
    }
    s
}

pub fn cmd_solve(a: &SolveArgs) -> Result<u8> {
    let spec = load(&a.common.scenario)?;
    let faults = FaultSet::parse(&a.faults, &spec).context("parsing --faults")?;
    let params = a.search.params()?;
    let result = solve(&spec, &faults, a.algorithm.into(), &params)?;
    let summary = solve_summary(&spec, &result);
    match a.common.format.unwrap_or(Format::Json) {
        Format::Json => {
            let doc = SolveDocument { result: &result, switches: switch_table(&spec, &result) };
            emit(a.common.out.as_deref(), &json(&doc)?)?;
            eprint!("{summary}");
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in switch_table(&spec, &result) {
                w.serialize(row)?;
            }
            emit(a.common.out.as_deref(), &w.into_inner()?)?;
            eprint!("{summary}");
        }
        Format::Text => emit(a.common.out.as_deref(), summary.as_bytes())?,
    }
    Ok(if result.feasible && result.vital_shortfall == 0.0 { EXIT_OK } else { EXIT_UNRESTORABLE })
}

fn sweep_summary(r: &SweepReport) -> String {
    let mut s = format!(
        "{} {}-fault scenarios on {}\nvital-shortfall fraction {:.4}\n",
        r.scenarios.len(),
        r.n_faults,
        r.scenario,
        r.vital_shortfall_fraction
    );
    for q in [0.1, 0.5, 0.9] {
        if let Some(p) = r.cdf.iter().find(|p| p.probability >= q) {
            s += &format!("P(P_r <= {:.2} MW) = {:.3}\n", p.power / 1e6, p.probability);
        }
    }
    for sc in r.scenarios.iter().filter(|s| s.vital_shortfall > 0.0) {
        s += &format!("short: {} ({:.3} MW vital unserved)\n", sc.faults, sc.vital_shortfall / 1e6);
    }
    s
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<u8> {
    let spec = load(&a.common.scenario)?;
    let params = a.search.params()?;
    let report = sweep(&spec, a.n_faults, &params)?;
    let summary = sweep_summary(&report);
    match a.common.format.unwrap_or(Format::Json) {
        Format::Json => {
            emit(a.common.out.as_deref(), &json(&report)?)?;
            eprint!("{summary}");
        }
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&report, &mut buf)?;
            emit(a.common.out.as_deref(), &buf)?;
            eprint!("{summary}");
        }
        Format::Text => emit(a.common.out.as_deref(), summary.as_bytes())?,
    }
    if let Some(path) = &a.cdf_out {
        let mut buf = Vec::new();
        spsrecon::analysis::write_cdf_csv(&report.cdf, &mut buf)?;
        fs::write(path, buf).with_context(|| format!("writing `{}`", path.display()))?;
    }
    Ok(EXIT_OK)
}

fn compare_summary(r: &BenchmarkReport) -> String {
    let mut s = format!("{} runs on {} with faults {}\n", r.runs, r.scenario, r.faults);
    s += "algorithm   best MW   mean MW  worst MW    std MW   time ms (mean +/- std)\n";
    for a in &r.summary {
        let st = &a.stats;
        s += &format!(
            "{:<9} {:>9.3} {:>9.3} {:>9.3} {:>9.3}   {:.1} +/- {:.1}\n",
            a.algorithm.name(),
            st.best / 1e6,
            st.mean / 1e6,
            st.worst / 1e6,
            st.std / 1e6,
            st.time_mean * 1e3,
            st.time_std * 1e3
        );
    }
    if !r.sensitivity.is_empty() {
        s += "nrbbo sensitivity (H, RE): mean MW / std MW\n";
        for c in &r.sensitivity {
            s += &format!(
                "  ({:>2}, {:>2})  {:.3} / {:.3}\n",
                c.habitats,
                c.repetitions,
                c.stats.mean / 1e6,
                c.stats.std / 1e6
            );
        }
    }
    s
}

pub fn cmd_compare(a: &CompareArgs) -> Result<u8> {
    let spec = load(&a.common.scenario)?;
    let faults = FaultSet::parse(&a.faults, &spec).context("parsing --faults")?;
    let params = a.search.params()?;
    if a.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let algorithms: Vec<Algorithm> = if a.algorithm.is_empty() {
        Algorithm::HEURISTICS.to_vec()
    } else {
        a.algorithm.iter().map(|&x| x.into()).collect()
    };
    let grid = if a.sensitivity { default_sensitivity_grid() } else { Vec::new() };
    let report = run_benchmark(&spec, &faults, &algorithms, a.runs, &params, &grid)?;
    let summary = compare_summary(&report);
    match a.common.format.unwrap_or(Format::Json) {
        Format::Json => {
            emit(a.common.out.as_deref(), &json(&report)?)?;
            eprint!("{summary}");
        }
        Format::Csv => {
            let mut buf = Vec::new();
            write_runs_csv(&report, &mut buf)?;
            emit(a.common.out.as_deref(), &buf)?;
            eprint!("{summary}");
        }
        Format::Text => emit(a.common.out.as_deref(), summary.as_bytes())?,
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub loads: usize,
    pub zones: usize,
    pub buses: usize,
    pub converters: usize,
    pub lines: usize,
    pub faultable_segments: usize,
    pub total_load: f64,
    pub vital_load: f64,
    pub semi_vital_load: f64,
    pub non_vital_load: f64,
    pub generation: f64,
    pub redundant_loads: usize,
}

pub fn scenario_summary(spec: &SystemSpec) -> ScenarioSummary {
    let by = |g: Grade| spec.loads_of(g).map(|l| l.power).sum::<f64>();
    ScenarioSummary {
        name: spec.name.clone(),
        loads: spec.load_count(),
        zones: spec.zone_count,
        buses: spec.bus_count(),
        converters: spec.converter_count(),
        lines: spec.lines.len(),
        faultable_segments: spec.faultable_lines().len(),
        total_load: spec.total_load_power(),
        vital_load: by(Grade::Vital),
        semi_vital_load: by(Grade::SemiVital),
        non_vital_load: by(Grade::NonVital),
        generation: spec.generators.iter().map(|g| g.p_max).sum(),
        redundant_loads: spec.loads.iter().filter(|l| matches!(l.attachment, Attachment::Redundant { .. })).count(),
    }
}

pub fn cmd_validate(a: &ValidateArgs) -> Result<u8> {
    let spec = load(&a.common.scenario)?;
    let s = scenario_summary(&spec);
    let bytes = match a.common.format.unwrap_or(Format::Text) {
        Format::Json => json(&s)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.serialize(&s)?;
            w.into_inner()?
        }
        Format::Text => format!(
            "{}\nL={} K={} N={} M={} lines={} faultable={}\ntotal load {:.1} MW (vital {:.1}, semi-vital {:.1}, non-vital {:.1})\ngeneration {:.1} MW\n",
            s.name,
            s.loads,
            s.zones,
            s.buses,
            s.converters,
            s.lines,
            s.faultable_segments,
            s.total_load / 1e6,
            s.vital_load / 1e6,
            s.semi_vital_load / 1e6,
            s.non_vital_load / 1e6,
            s.generation / 1e6
        )
        .into_bytes(),
    };
    emit(a.common.out.as_deref(), &bytes)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use spsrecon::{fixtures, reconfigure};

    #[test]
    fn help_and_version_exit_zero() {
        assert_eq!(run_from(["spsrecon", "--help"]), EXIT_OK);
        assert_eq!(run_from(["spsrecon", "--version"]), EXIT_OK);
        assert_eq!(run_from(["spsrecon", "sweep", "--scenario", "x.toml"]), EXIT_ERROR);
    }

    #[test]
    fn switch_table_lists_loads_then_redundancy_pairs() {
        let spec = fixtures::six_zone();
        let faults = FaultSet::parse("pb:1-2,pb:5-6", &spec).unwrap();
        let r = reconfigure(&spec, &faults, &BboParams::default()).unwrap();
        let rows = switch_table(&spec, &r);
        assert_eq!(rows.len(), spec.load_count() + 2 * spec.zone_count);
        for (row, on) in rows.iter().zip(&r.config.loads) {
            assert_eq!(row.closed, *on);
        }
        for pair in rows[spec.load_count()..].chunks(2) {
            assert!(pair[0].switch.ends_with("S_P") && pair[1].switch.ends_with("S_S"));
            assert_ne!(pair[0].closed, pair[1].closed);
        }
    }

    #[test]
    fn summary_of_the_six_zone_plant() {
        let s = scenario_summary(&fixtures::six_zone());
        assert_eq!((s.loads, s.zones, s.buses, s.converters), (36, 6, 14, 2));
        assert_eq!(s.redundant_loads, 24);
        assert!((s.total_load - (s.vital_load + s.semi_vital_load + s.non_vital_load)).abs() < 1e-6);
        assert!((s.total_load - 10.8e6).abs() < 1e-3);
    }
}
