//! Loads a scenario file (default: the bundled six-zone plant) and prints
//! its buses, lines and load table.
//!
//!     cargo run --example validate_scenario -- path/to/plant.toml

use spsrecon::{fixtures, load_system_spec_file, Grade};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = match std::env::args().nth(1) {
        Some(path) => load_system_spec_file(path)?,
        None => fixtures::six_zone(),
    };
    println!("{}: L={} K={} N={}", spec.name, spec.load_count(), spec.zone_count, spec.bus_count());
    for (i, line) in spec.lines.iter().enumerate() {
        println!(
            "  {:<8} {:>4} - {:<4} R={:.5} ohm  {:.0} A",
            spec.line_label(i),
            spec.bus_label(line.from),
            spec.bus_label(line.to),
            line.resistance,
            line.ampacity
        );
    }
    for g in [Grade::Vital, Grade::SemiVital, Grade::NonVital] {
        let total: f64 = spec.loads_of(g).map(|l| l.power).sum();
        println!("  {g:?}: {} loads, {:.1} MW, weight {}", spec.loads_of(g).count(), total / 1e6, spec.weights.of(g));
    }
    Ok(())
}
