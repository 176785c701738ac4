//! DC power flow of the six-zone plant at full load, before and after a PB
//! segment fault.

use spsrecon::{check_dc_limits, fixtures, DcNetwork, FaultSet, SwitchConfig};

fn main() -> spsrecon::Result<()> {
    let spec = fixtures::six_zone();
    let config = SwitchConfig::all_on(&spec);
    for text in ["", "pb:3-4"] {
        let faults = FaultSet::parse(text, &spec)?;
        let net = DcNetwork::new(&spec, &faults)?;
        let sol = net.solve(&config)?;
        println!("faults: {}", faults.describe(&spec));
        for b in 0..spec.bus_count() {
            print!("{}={:.1} ", spec.bus_label(b), sol.voltages[b]);
        }
        println!();
        for (m, conv) in spec.converters.iter().enumerate() {
            let role = if net.is_slack(m) { "slack" } else { "dispatched" };
            println!("  {} {role}: {:.3} MW", conv.name, sol.converter_power[m] / 1e6);
        }
        println!(
            "  line loss {:.1} kW, KCL residual {:.1e} p.u., {} iteration(s)",
            sol.line_loss(&spec) / 1e3,
            sol.kcl_residual,
            sol.iterations
        );
        for v in check_dc_limits(&sol, &spec).violations() {
            println!("  violation: {v}");
        }
    }
    Ok(())
}
