//! Converter loss curve, Newton solve and generator back-calculation for the
//! main generator's converter.

use spsrecon::converter::{machine_state, max_output};
use spsrecon::{check_ac_limits, fixtures};

fn main() -> spsrecon::Result<()> {
    let spec = fixtures::six_zone();
    let conv = &spec.converters[0];
    if let Some(peak) = max_output(conv, conv.reactive_power) {
        println!("{}: loss curve peaks at {:.1} MW output", conv.name, peak / 1e6);
    }
    println!("  P_oc MW   P_C MW  loss kW   I_C A    P_g MW   U_g V  delta rad  NR its");
    let mut states = Vec::new();
    for p_oc in [0.0, 1e6, 2e6, 4e6, 6e6, 8e6] {
        let st = machine_state(conv, p_oc)?;
        println!(
            "  {:>6.2} {:>8.3} {:>8.1} {:>7.1} {:>9.3} {:>7.1} {:>10.5} {:>7}",
            p_oc / 1e6,
            st.converter.p_c / 1e6,
            st.converter.p_loss / 1e3,
            st.converter.current,
            st.generator.p_g / 1e6,
            st.generator.voltage,
            st.generator.angle,
            st.converter.iterations
        );
        states.push(st);
    }
    // Check the 8 MW point against both machines' limits.
    let last = states.pop().unwrap();
    let ag = machine_state(&spec.converters[1], 3e6)?;
    for v in check_ac_limits(&[last, ag], &spec).violations() {
        println!("  violation: {v}");
    }
    Ok(())
}
