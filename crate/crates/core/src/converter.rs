//! Converter loss model, converter Newton solve and generator back-calculation.

use nalgebra::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::limits::{LimitCheck, LimitReport, Quantity};
use crate::model::{ConverterSpec, GeneratorSpec, SystemSpec};

pub const NR_MAX_ITERATIONS: usize = 50;

// `f64::consts::SQRT_3` is not stable yet.
const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// AC-side current of a converter carrying `p` + j`q` at line voltage `u`.
pub fn converter_current(p: f64, q: f64, u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::ZeroVoltage(u));
    }
    Ok(p.hypot(q) / (SQRT_3 * u))
}

pub fn converter_loss(conv: &ConverterSpec, current: f64) -> f64 {
    conv.constant_loss + conv.linear_loss * current + conv.quadratic_loss * current * current
}

/// Loss at AC-side power `p_c` with the converter's own reactive demand and
/// AC voltage.
pub fn loss_at(conv: &ConverterSpec, p_c: f64) -> f64 {
    let i = p_c.hypot(conv.reactive_power) / (SQRT_3 * conv.ac_voltage);
    converter_loss(conv, i)
}

/// Residual `f(P_C) = P_C − P_oc − P_loss(P_C)` and its derivative in `P_C`.
pub fn residual(conv: &ConverterSpec, p_c: f64, p_oc: f64, q_c: f64) -> (f64, f64) {
    let k = SQRT_3 * conv.ac_voltage;
    let s = p_c.hypot(q_c);
    let i = s / k;
    let f = p_c - p_oc - converter_loss(conv, i);
    // dI/dP is the sign of P at S = 0; pick +1 there so Newton moves up.
    let di = if s > 0.0 { p_c / (s * k) } else { 1.0 / k };
    let df = 1.0 - (conv.linear_loss + 2.0 * conv.quadratic_loss * i) * di;
    (f, df)
}

/// Largest DC output the loss curve allows for reactive demand `q_c`, or
/// `None` when the output is unbounded (no quadratic term).
pub fn max_output(conv: &ConverterSpec, q_c: f64) -> Option<f64> {
    let b = conv.quadratic_loss;
    if b <= 0.0 {
        return None;
    }
    let k = SQRT_3 * conv.ac_voltage;
    // P − loss(P) peaks where dI/dP·(a + 2bI) = 1. With q = 0 that is
    // I* = (k − a) / 2b; with q ≠ 0 solve the 1-D condition by bisection on P.
    let g = |p: f64| residual(conv, p, 0.0, q_c).1;
    let mut hi = k * k / b;
    if g(hi) > 0.0 {
        return Some(hi - loss_at_q(conv, hi, q_c));
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo - loss_at_q(conv, lo, q_c))
}

fn loss_at_q(conv: &ConverterSpec, p: f64, q: f64) -> f64 {
    converter_loss(conv, p.hypot(q) / (SQRT_3 * conv.ac_voltage))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConverterSolution {
    pub p_oc: f64,
    pub p_c: f64,
    pub q_c: f64,
    pub p_loss: f64,
    pub current: f64,
    pub iterations: usize,
    /// `P_oc` inside `[P_oc^min, P_oc^max]`.
    pub output_in_bounds: bool,
    /// `I_C ≤ I_C^max`.
    pub current_in_bounds: bool,
}

/// Newton iteration on `f(P_C) = P_C − P_oc − P_loss(P_C)` with `U_C`, `δ_C`
/// and `Q_C` held fixed.
pub fn solve_converter_nr(conv: &ConverterSpec, p_oc: f64, q_c: f64) -> Result<ConverterSolution> {
    if !(conv.ac_voltage > 0.0) {
        return Err(Error::ZeroVoltage(conv.ac_voltage));
    }
    if let Some(limit) = max_output(conv, q_c) {
        if p_oc > limit {
            return Err(Error::InfeasibleOutput { converter: conv.name.clone(), demand: p_oc });
        }
    }
    let tol = 1e-6 * p_oc.abs().max(1.0);
    let mut p_c = p_oc + conv.constant_loss;
    for it in 0..=NR_MAX_ITERATIONS {
        let (f, df) = residual(conv, p_c, p_oc, q_c);
        if f.abs() < tol {
            let current = p_c.hypot(q_c) / (SQRT_3 * conv.ac_voltage);
            return Ok(ConverterSolution {
                p_oc,
                p_c,
                q_c,
                p_loss: p_c - p_oc,
                current,
                iterations: it,
                output_in_bounds: p_oc >= conv.p_oc_min && p_oc <= conv.p_oc_max,
                current_in_bounds: current <= conv.current_max,
            });
        }
        if !(df > 0.0) {
            break;
        }
        p_c -= f / df;
    }
    Err(Error::NewtonDivergence { converter: conv.name.clone(), iterations: NR_MAX_ITERATIONS })
}

/// DC output that makes the generator deliver `p_g`, inverting first the
/// generator-line loss and then the converter loss. Used for dispatching
/// non-slack converters.
pub fn output_for_generator_power(conv: &ConverterSpec, p_g: f64) -> f64 {
    let u2 = conv.ac_voltage * conv.ac_voltage;
    let r = conv.line_resistance;
    let q = conv.reactive_power;
    // P_C + (P_C² + Q²)·R/U² = P_g, positive root.
    let p_c = if r > 0.0 {
        let a = r / u2;
        let c = q * q * a - p_g;
        (-1.0 + (1.0 - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a)
    } else {
        p_g
    };
    p_c - loss_at(conv, p_c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorState {
    pub p_g: f64,
    pub q_g: f64,
    pub voltage: f64,
    pub angle: f64,
    pub line_loss_p: f64,
    pub line_loss_q: f64,
    /// Line current, equal to the converter AC current.
    pub current: f64,
    /// |S_G − (P_g + jQ_g)| with `S_G` formed from the phasors.
    pub flow_residual: f64,
}

/// Back-calculates the generator terminal from the converter's AC side.
pub fn generator_state(conv: &ConverterSpec, p_c: f64, q_c: f64) -> GeneratorState {
    let u = conv.ac_voltage;
    let (r, x) = (conv.line_resistance, conv.line_reactance);
    let rot = Complex::from_polar(1.0, conv.ac_angle);
    let drop = Complex::new(p_c * r + q_c * x, p_c * x - q_c * r) / u;
    let u_g = rot * (Complex::new(u, 0.0) + drop);

    let s2 = (p_c * p_c + q_c * q_c) / (u * u);
    let line_loss_p = s2 * r;
    let line_loss_q = s2 * x;
    let p_g = p_c + line_loss_p;
    let q_g = q_c + line_loss_q;

    // Branch-flow check: S_G = U_G · conj(I), and conj(I) ∝ S_C / U_C.
    let u_c = Complex::from_polar(u, conv.ac_angle);
    let s_g = u_g * Complex::new(p_c, q_c) / u_c;
    let flow_residual = (s_g - Complex::new(p_g, q_g)).norm();

    GeneratorState {
        p_g,
        q_g,
        voltage: u_g.norm(),
        angle: u_g.arg(),
        line_loss_p,
        line_loss_q,
        current: p_c.hypot(q_c) / (SQRT_3 * u),
        flow_residual,
    }
}

/// Converter and generator solution for one machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MachineState {
    pub converter: ConverterSolution,
    pub generator: GeneratorState,
}

pub fn machine_state(conv: &ConverterSpec, p_oc: f64) -> Result<MachineState> {
    let converter = solve_converter_nr(conv, p_oc, conv.reactive_power)?;
    let generator = generator_state(conv, converter.p_c, converter.q_c);
    Ok(MachineState { converter, generator })
}

/// Limits of one generator and its converter.
pub fn check_machine_limits(
    conv: &ConverterSpec,
    gen: &GeneratorSpec,
    index: usize,
    state: &MachineState,
) -> LimitReport {
    let g = &state.generator;
    let c = &state.converter;
    let mut report = LimitReport::default();
    let name = || gen.name.clone();
    report.push(LimitCheck::new(Quantity::GeneratorActivePower, name(), index, g.p_g, gen.p_min, gen.p_max));
    report.push(LimitCheck::new(Quantity::GeneratorReactivePower, name(), index, g.q_g, gen.q_min, gen.q_max));
    report.push(LimitCheck::new(Quantity::AcVoltage, name(), index, g.voltage, gen.voltage_min, gen.voltage_max));
    report.push(LimitCheck::new(Quantity::AcCurrent, name(), index, g.current, 0.0, gen.current_max));
    report.push(LimitCheck::new(Quantity::AcAngle, name(), index, g.angle, gen.angle_min, gen.angle_max));
    report.push(LimitCheck::new(
        Quantity::BranchFlowResidual,
        name(),
        index,
        g.flow_residual,
        0.0,
        1e-6 * g.p_g.abs().max(1.0),
    ));
    report.push(LimitCheck::new(
        Quantity::ConverterOutput,
        conv.name.clone(),
        index,
        c.p_oc,
        conv.p_oc_min,
        conv.p_oc_max,
    ));
    report.push(LimitCheck::new(
        Quantity::ConverterCurrent,
        conv.name.clone(),
        index,
        c.current,
        0.0,
        conv.current_max,
    ));
    report
}

/// AC-side verdicts for every machine.
pub fn check_ac_limits(states: &[MachineState], spec: &SystemSpec) -> LimitReport {
    let mut report = LimitReport::default();
    for (m, state) in states.iter().enumerate() {
        report.extend(check_machine_limits(&spec.converters[m], &spec.generators[m], m, state));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn conv(p_cpl: f64, a: f64, b: f64) -> ConverterSpec {
        let mut c = fixtures::six_zone().converters[0].clone();
        c.constant_loss = p_cpl;
        c.linear_loss = a;
        c.quadratic_loss = b;
        c.ac_voltage = 3300.0;
        c.ac_angle = 0.0;
        c.reactive_power = 0.0;
        c
    }

    #[test]
    fn current_examples() {
        assert_eq!(converter_current(0.0, 0.0, 1000.0).unwrap(), 0.0);
        let i = converter_current(SQRT_3 * 1e6, 0.0, 1000.0).unwrap();
        assert!((i - 1000.0).abs() < 1e-9);
        // |S| = 5 over √3·U: U = 1/√3 gives 5, U = 5/√3 gives 1.
        assert!((converter_current(3.0, 4.0, 1.0 / SQRT_3).unwrap() - 5.0).abs() < 1e-12);
        assert!((converter_current(3.0, 4.0, 5.0 / SQRT_3).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(converter_current(1.0, 0.0, 0.0), Err(Error::ZeroVoltage(0.0)));
    }

    #[test]
    fn loss_examples() {
        let c = conv(15e3, 0.0, 0.0);
        assert_eq!(converter_loss(&c, 1234.0), 15e3);
        let c = conv(15e3, 3.0, 0.002);
        assert!((converter_loss(&c, 1000.0) - 20e3).abs() < 1e-9);
        assert_eq!(converter_loss(&c, 0.0), 15e3);
    }

    #[test]
    fn lossless_newton_is_identity() {
        let c = conv(0.0, 0.0, 0.0);
        let s = solve_converter_nr(&c, 2e6, 0.0).unwrap();
        assert!((s.p_c - 2e6).abs() < 1e-6);
        assert!(s.p_loss.abs() < 1e-6);
    }

    #[test]
    fn newton_matches_bisection() {
        let c = conv(15e3, 3.0, 0.002);
        let p_oc = 5.95e6;
        let s = solve_converter_nr(&c, p_oc, 0.0).unwrap();
        let (f, _) = residual(&c, s.p_c, p_oc, 0.0);
        assert!(f.abs() < 1e-6 * p_oc);
        // Bisection on f over [P_oc, 2 P_oc].
        let (mut lo, mut hi) = (p_oc, 2.0 * p_oc);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = mid - p_oc - converter_loss(&c, mid / (SQRT_3 * 3300.0));
            if fm < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((s.p_c - lo).abs() < 1.0);
        assert!((s.p_oc - (s.p_c - s.p_loss)).abs() < 1e-6);
    }

    #[test]
    fn output_bound_flag() {
        let mut c = conv(15e3, 3.0, 0.002);
        c.p_oc_max = 4e6;
        let s = solve_converter_nr(&c, 4e6 + 1.0, 0.0).unwrap();
        assert!(!s.output_in_bounds);
        let s = solve_converter_nr(&c, 4e6, 0.0).unwrap();
        assert!(s.output_in_bounds);
    }

    #[test]
    fn beyond_loss_curve_peak_is_infeasible() {
        let c = conv(0.0, 0.0, 50.0);
        let peak = max_output(&c, 0.0).unwrap();
        assert!(matches!(solve_converter_nr(&c, peak * 1.01, 0.0), Err(Error::InfeasibleOutput { .. })));
        assert!(solve_converter_nr(&c, peak * 0.9, 0.0).is_ok());
    }

    #[test]
    fn lossless_line() {
        let mut c = conv(0.0, 0.0, 0.0);
        c.line_resistance = 0.0;
        c.line_reactance = 0.0;
        c.ac_angle = 0.2;
        let g = generator_state(&c, 1e6, 2e5);
        assert!((g.voltage - 3300.0).abs() < 1e-9);
        assert!((g.angle - 0.2).abs() < 1e-12);
        assert_eq!(g.p_g, 1e6);
        assert_eq!(g.q_g, 2e5);
    }

    #[test]
    fn line_loss_hand_value() {
        let mut c = conv(0.0, 0.0, 0.0);
        c.ac_voltage = 1000.0;
        c.line_resistance = 0.01;
        c.line_reactance = 0.0;
        let g = generator_state(&c, 1e6, 0.0);
        assert!((g.line_loss_p - 10e3).abs() < 1e-9);
        assert!((g.p_g - 1.01e6).abs() < 1e-6);
        c.line_resistance = 0.02;
        let g2 = generator_state(&c, 1e6, 0.0);
        assert!((g2.line_loss_p - 2.0 * g.line_loss_p).abs() < 1e-9);
        assert!(g.flow_residual < 1e-6);
    }

    #[test]
    fn dispatch_inversion_round_trips() {
        let c = fixtures::six_zone().converters[1].clone();
        let p_oc = output_for_generator_power(&c, 3.88e6);
        let st = machine_state(&c, p_oc).unwrap();
        assert!((st.generator.p_g - 3.88e6).abs() < 10.0);
    }

    #[test]
    fn ac_limit_examples() {
        let spec = fixtures::six_zone();
        let c = &spec.converters[0];
        let g = &spec.generators[0];
        let mut st = machine_state(c, 5.8e6).unwrap();
        st.generator.p_g = 5.98e6;
        assert!(check_machine_limits(c, g, 0, &st).pass());
        st.generator.p_g = 8.5e6;
        let r = check_machine_limits(c, g, 0, &st);
        let bad: Vec<_> = r.violations().collect();
        assert_eq!(bad[0].quantity, Quantity::GeneratorActivePower);
        assert_eq!(bad[0].max, 8e6);
        st.generator.p_g = 5.98e6;
        st.generator.voltage = 2500.0;
        let r = check_machine_limits(c, g, 0, &st);
        let bad: Vec<_> = r.violations().collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].quantity, Quantity::AcVoltage);
        assert_eq!(bad[0].min, 2970.0);
    }
}
