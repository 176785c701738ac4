//! NRBBO against plain BBO, GA and binary PSO over seeded runs.
//!
//!     cargo run --release --example compare_algorithms -- 50

use spsrecon::analysis::write_summary_csv;
use spsrecon::{fixtures, run_benchmark, Algorithm, BboParams, FaultSet};

fn main() -> spsrecon::Result<()> {
    let spec = fixtures::six_zone();
    let runs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let faults = FaultSet::parse("pb:1-2,pb:5-6", &spec)?;
    let report = run_benchmark(&spec, &faults, &Algorithm::HEURISTICS, runs, &BboParams::default(), &[])?;
    write_summary_csv(&report, std::io::stdout())?;
    Ok(())
}
