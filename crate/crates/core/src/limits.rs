//! Bound-check reports shared by the DC and AC feasibility checks.

use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    DcVoltage,
    BranchCurrent,
    ConverterOutput,
    ConverterCurrent,
    GeneratorActivePower,
    GeneratorReactivePower,
    AcVoltage,
    AcCurrent,
    AcAngle,
    BranchFlowResidual,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Quantity::DcVoltage => "DC voltage",
            Quantity::BranchCurrent => "branch current",
            Quantity::ConverterOutput => "converter output P_oc",
            Quantity::ConverterCurrent => "converter current I_C",
            Quantity::GeneratorActivePower => "generator P_g",
            Quantity::GeneratorReactivePower => "generator Q_g",
            Quantity::AcVoltage => "AC voltage",
            Quantity::AcCurrent => "AC line current",
            Quantity::AcAngle => "AC angle",
            Quantity::BranchFlowResidual => "branch-flow residual",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCheck {
    pub quantity: Quantity,
    /// Bus, line or machine label.
    pub element: String,
    /// Index of the element in its spec list (bus, line or converter).
    pub index: usize,
    pub value: f64,
    pub min: f64,
    pub max: f64,
    pub pass: bool,
}

impl LimitCheck {
    pub fn new(quantity: Quantity, element: String, index: usize, value: f64, min: f64, max: f64) -> Self {
        // Relative slack keeps round-off at an exactly-met bound from flipping
        // the verdict.
        let tol = 1e-9 * value.abs().max(1.0);
        let pass = value >= min - tol && value <= max + tol;
        LimitCheck { quantity, element, index, value, min, max, pass }
    }
}

impl fmt::Display for LimitCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} = {:.4} (bounds [{:.4}, {:.4}]) {}",
            self.element,
            self.quantity,
            self.value,
            self.min,
            self.max,
            if self.pass { "ok" } else { "VIOLATED" }
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LimitReport {
    pub checks: Vec<LimitCheck>,
}

impl LimitReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn violations(&self) -> impl Iterator<Item = &LimitCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn push(&mut self, check: LimitCheck) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: LimitReport) {
        self.checks.extend(other.checks);
    }
}
