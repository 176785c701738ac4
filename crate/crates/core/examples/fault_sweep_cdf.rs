//! Restored-power CDF over every two- and three-fault scenario.

use spsrecon::analysis::write_cdf_csv;
use spsrecon::{fixtures, sweep, BboParams};

fn main() -> spsrecon::Result<()> {
    let spec = fixtures::six_zone();
    for n in [2, 3] {
        let report = sweep(&spec, n, &BboParams::default())?;
        println!(
            "# {n} faults: {} scenarios, vital shortfall in {:.1}%",
            report.scenarios.len(),
            report.vital_shortfall_fraction * 100.0
        );
        let coarse: Vec<_> = report.cdf.iter().step_by(12).copied().collect();
        write_cdf_csv(&coarse, std::io::stdout())?;
    }
    Ok(())
}
