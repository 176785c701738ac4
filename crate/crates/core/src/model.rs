//! Plant description, switch configuration and fault types.
//!
//! Bus numbering follows the dual-bus layout: port-bus (PB) buses come first
//! (one per zone), then starboard-bus (SB) buses, then one bus per converter.
//! Internally every index is 0-based; [`SystemSpec::bus_label`] gives the
//! 1-based names used in reports and on the command line.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Load priority grade. Grades double as search layers (vital = layer 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grade {
    Vital,
    SemiVital,
    NonVital,
}

impl Grade {
    pub const ALL: [Grade; 3] = [Grade::Vital, Grade::SemiVital, Grade::NonVital];

    /// 1-based layer number.
    pub fn layer(self) -> usize {
        match self {
            Grade::Vital => 1,
            Grade::SemiVital => 2,
            Grade::NonVital => 3,
        }
    }

    pub fn from_layer(layer: usize) -> Option<Grade> {
        match layer {
            1 => Some(Grade::Vital),
            2 => Some(Grade::SemiVital),
            3 => Some(Grade::NonVital),
            _ => None,
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Grade::Vital => "V",
            Grade::SemiVital => "S",
            Grade::NonVital => "N",
        }
    }
}

/// One of the two longitudinal DC buses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusSide {
    Pb,
    Sb,
}

impl BusSide {
    pub fn other(self) -> BusSide {
        match self {
            BusSide::Pb => BusSide::Sb,
            BusSide::Sb => BusSide::Pb,
        }
    }
}

impl fmt::Display for BusSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BusSide::Pb => "PB",
            BusSide::Sb => "SB",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusKind {
    Zone { side: BusSide, zone: usize },
    Converter { converter: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusSpec {
    pub id: usize,
    pub kind: BusKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineKind {
    /// Segment of a longitudinal bus between `zone` and `zone + 1`.
    Segment {
        side: BusSide,
        zone: usize,
    },
    /// Tie between a converter bus and a zone bus.
    Tie {
        converter: usize,
        side: BusSide,
    },
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    pub from: usize,
    pub to: usize,
    /// Ohms, strictly positive.
    pub resistance: f64,
    /// Amperes.
    pub ampacity: f64,
    pub kind: LineKind,
}

impl LineSpec {
    pub fn conductance(&self) -> f64 {
        1.0 / self.resistance
    }

    pub fn connects(&self, a: usize, b: usize) -> bool {
        (self.from == a && self.to == b) || (self.from == b && self.to == a)
    }
}

/// AC-side bounds of the machine feeding one converter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub name: String,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub voltage_min: f64,
    pub voltage_max: f64,
    /// Generator-to-converter line current bound.
    pub current_max: f64,
    pub angle_min: f64,
    pub angle_max: f64,
}

/// AC/DC converter with the three-term loss model and its generator line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverterSpec {
    pub name: String,
    /// Constant loss, W.
    pub constant_loss: f64,
    /// Linear loss coefficient, V.
    pub linear_loss: f64,
    /// Quadratic loss coefficient, ohm.
    pub quadratic_loss: f64,
    pub current_max: f64,
    pub p_oc_min: f64,
    pub p_oc_max: f64,
    /// AC-side line-to-line voltage magnitude held by the converter.
    pub ac_voltage: f64,
    pub ac_angle: f64,
    pub line_resistance: f64,
    pub line_reactance: f64,
    /// Reactive demand at the converter terminal.
    pub reactive_power: f64,
    /// Fraction of generator rating a non-slack converter is dispatched to.
    pub dispatch_fraction: f64,
    /// DC voltage held when this converter is the slack.
    pub dc_voltage: f64,
    pub pb_zone: usize,
    pub sb_zone: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Attachment {
    /// Vital and semi-vital loads: powered from PB or SB through the zone's
    /// redundancy switches.
    Redundant { pb_bus: usize, sb_bus: usize },
    /// Non-vital loads: hard-wired to one bus.
    Single { bus: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSpec {
    pub id: usize,
    pub name: String,
    pub zone: usize,
    pub grade: Grade,
    /// Rated power, W.
    pub power: f64,
    pub attachment: Attachment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradeWeights {
    pub vital: f64,
    pub semi_vital: f64,
    pub non_vital: f64,
}

impl GradeWeights {
    pub fn of(&self, grade: Grade) -> f64 {
        match grade {
            Grade::Vital => self.vital,
            Grade::SemiVital => self.semi_vital,
            Grade::NonVital => self.non_vital,
        }
    }
}

impl Default for GradeWeights {
    fn default() -> Self {
        GradeWeights { vital: 12.0, semi_vital: 4.0, non_vital: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoadModel {
    #[default]
    ConstantCurrent,
    ConstantPower,
    ConstantImpedance,
}

/// Static description of the plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub name: String,
    pub zone_count: usize,
    pub buses: Vec<BusSpec>,
    pub lines: Vec<LineSpec>,
    pub converters: Vec<ConverterSpec>,
    pub generators: Vec<GeneratorSpec>,
    pub loads: Vec<LoadSpec>,
    pub weights: GradeWeights,
    pub nominal_dc_voltage: f64,
    pub nominal_ac_voltage: f64,
    pub dc_voltage_min: f64,
    pub dc_voltage_max: f64,
    pub load_model: LoadModel,
    /// Pre-fault redundancy position of every zone.
    pub initial_redundancy: Vec<BusSide>,
    /// Cap on a non-slack converter's share of its island's load.
    pub non_slack_share_cap: f64,
}

impl SystemSpec {
    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn converter_count(&self) -> usize {
        self.converters.len()
    }

    pub fn load_count(&self) -> usize {
        self.loads.len()
    }

    pub fn pb_bus(&self, zone: usize) -> usize {
        zone
    }

    pub fn sb_bus(&self, zone: usize) -> usize {
        self.zone_count + zone
    }

    pub fn zone_bus(&self, side: BusSide, zone: usize) -> usize {
        match side {
            BusSide::Pb => self.pb_bus(zone),
            BusSide::Sb => self.sb_bus(zone),
        }
    }

    pub fn converter_bus(&self, converter: usize) -> usize {
        2 * self.zone_count + converter
    }

    pub fn bus_converter(&self, bus: usize) -> Option<usize> {
        bus.checked_sub(2 * self.zone_count).filter(|&m| m < self.converter_count())
    }

    /// 1-based display name, e.g. `PB3`, `SB1`, `C2`.
    pub fn bus_label(&self, bus: usize) -> String {
        match self.buses[bus].kind {
            BusKind::Zone { side, zone } => format!("{side}{}", zone + 1),
            BusKind::Converter { converter } => format!("C{}", converter + 1),
        }
    }

    pub fn weight(&self, load: usize) -> f64 {
        self.weights.of(self.loads[load].grade)
    }

    /// Equivalent constant current of a load at nominal DC voltage.
    pub fn load_current(&self, load: usize) -> f64 {
        self.loads[load].power / self.nominal_dc_voltage
    }

    /// Bus a load draws from under a redundancy assignment.
    pub fn load_bus(&self, load: usize, redundancy: &[BusSide]) -> usize {
        let spec = &self.loads[load];
        match spec.attachment {
            Attachment::Single { bus } => bus,
            Attachment::Redundant { pb_bus, sb_bus } => match redundancy[spec.zone] {
                BusSide::Pb => pb_bus,
                BusSide::Sb => sb_bus,
            },
        }
    }

    pub fn loads_of(&self, grade: Grade) -> impl Iterator<Item = &LoadSpec> + '_ {
        self.loads.iter().filter(move |l| l.grade == grade)
    }

    pub fn total_load_power(&self) -> f64 {
        self.loads.iter().map(|l| l.power).sum()
    }

    pub fn line_between(&self, a: usize, b: usize) -> Option<usize> {
        self.lines.iter().position(|l| l.connects(a, b))
    }

    /// Inter-zone PB and SB segments, the elements a fault sweep cuts.
    pub fn faultable_lines(&self) -> Vec<usize> {
        let mut out: Vec<(BusSide, usize, usize)> = self
            .lines
            .iter()
            .enumerate()
            .filter_map(|(i, l)| match l.kind {
                LineKind::Segment { side, zone } => Some((side, zone, i)),
                _ => None,
            })
            .collect();
        out.sort();
        out.into_iter().map(|(_, _, i)| i).collect()
    }

    /// Label of a line, e.g. `pb:2-3` for segments or `C1-PB1` for ties.
    pub fn line_label(&self, line: usize) -> String {
        let l = &self.lines[line];
        match l.kind {
            LineKind::Segment { side, zone } => {
                let tag = match side {
                    BusSide::Pb => "pb",
                    BusSide::Sb => "sb",
                };
                format!("{tag}:{}-{}", zone + 1, zone + 2)
            }
            _ => format!("{}-{}", self.bus_label(l.from), self.bus_label(l.to)),
        }
    }

    /// Checks the structural invariants. Scenario loading calls this; it is
    /// public so hand-built plants can be checked as well.
    pub fn validate(&self) -> Result<()> {
        let k = self.zone_count;
        let m = self.converter_count();
        if k == 0 {
            return Err(Error::validation("zones", "at least one zone is required"));
        }
        if m == 0 {
            return Err(Error::validation("converters", "at least one converter is required"));
        }
        if self.buses.len() != 2 * k + m {
            return Err(Error::validation(
                "buses",
                format!("expected N = 2K + M = {} buses, found {}", 2 * k + m, self.buses.len()),
            ));
        }
        if self.generators.len() != m {
            return Err(Error::validation(
                "generators",
                format!("expected one generator per converter ({m}), found {}", self.generators.len()),
            ));
        }
        if self.initial_redundancy.len() != k {
            return Err(Error::validation("redundancy", "one redundancy position per zone"));
        }
        positive("nominal_dc_voltage", self.nominal_dc_voltage)?;
        positive("nominal_ac_voltage", self.nominal_ac_voltage)?;
        ordered("dc_limits", self.dc_voltage_min, self.dc_voltage_max)?;
        let w = &self.weights;
        if !(w.vital > w.semi_vital && w.semi_vital > w.non_vital && w.non_vital > 0.0) {
            return Err(Error::validation("weights", "weights must satisfy vital > semi_vital > non_vital > 0"));
        }
        if !(self.non_slack_share_cap > 0.0 && self.non_slack_share_cap <= 1.0) {
            return Err(Error::validation("dispatch.non_slack_share_cap", "must lie in (0, 1]"));
        }
        for (i, line) in self.lines.iter().enumerate() {
            let path = format!("lines[{i}]");
            if line.from >= self.buses.len() || line.to >= self.buses.len() || line.from == line.to {
                return Err(Error::validation(path, "line endpoints must be two distinct buses"));
            }
            if !(line.resistance > 0.0) || !line.resistance.is_finite() {
                return Err(Error::validation(format!("{path}.resistance"), "must be > 0"));
            }
            if !(line.ampacity > 0.0) {
                return Err(Error::validation(format!("{path}.ampacity"), "must be > 0"));
            }
        }
        for (i, c) in self.converters.iter().enumerate() {
            let path = format!("converters[{i}]");
            for (field, v) in [
                ("p_cpl", c.constant_loss),
                ("a", c.linear_loss),
                ("b", c.quadratic_loss),
                ("line_resistance", c.line_resistance),
                ("line_reactance", c.line_reactance),
            ] {
                if !(v >= 0.0) {
                    return Err(Error::validation(format!("{path}.{field}"), "must be >= 0"));
                }
            }
            positive(&format!("{path}.ac_voltage"), c.ac_voltage)?;
            positive(&format!("{path}.dc_voltage"), c.dc_voltage)?;
            if !(c.current_max > 0.0) {
                return Err(Error::validation(format!("{path}.current_max"), "must be > 0"));
            }
            ordered(&format!("{path}.p_oc"), c.p_oc_min, c.p_oc_max)?;
            if !(c.dispatch_fraction > 0.0 && c.dispatch_fraction <= 1.0) {
                return Err(Error::validation(format!("{path}.dispatch_fraction"), "must lie in (0, 1]"));
            }
            if c.pb_zone >= k || c.sb_zone >= k {
                return Err(Error::validation(path.to_string(), "tie zone out of range"));
            }
        }
        for (i, g) in self.generators.iter().enumerate() {
            let path = format!("converters[{i}].generator");
            ordered(&format!("{path}.p"), g.p_min, g.p_max)?;
            ordered(&format!("{path}.q"), g.q_min, g.q_max)?;
            ordered(&format!("{path}.voltage"), g.voltage_min, g.voltage_max)?;
            ordered(&format!("{path}.angle"), g.angle_min, g.angle_max)?;
            if !(g.current_max > 0.0) {
                return Err(Error::validation(format!("{path}.current_max"), "must be > 0"));
            }
        }
        for (i, load) in self.loads.iter().enumerate() {
            let path = format!("loads[{i}]");
            if load.id != i {
                return Err(Error::validation(format!("{path}.id"), "load ids must be dense and ordered"));
            }
            if load.zone >= k {
                return Err(Error::validation(format!("{path}.zone"), "zone out of range"));
            }
            if !(load.power > 0.0) || !load.power.is_finite() {
                return Err(Error::validation(format!("{path}.power"), "must be > 0"));
            }
            match (load.grade, load.attachment) {
                (Grade::NonVital, Attachment::Single { bus }) => {
                    let ok = bus == self.pb_bus(load.zone) || bus == self.sb_bus(load.zone);
                    if !ok {
                        return Err(Error::validation(
                            format!("{path}.side"),
                            "non-vital load must sit on its zone's PB or SB bus",
                        ));
                    }
                }
                (Grade::NonVital, _) => {
                    return Err(Error::validation(
                        format!("{path}.grade"),
                        "non-vital loads connect to exactly one bus",
                    ))
                }
                (_, Attachment::Redundant { pb_bus, sb_bus }) => {
                    if pb_bus != self.pb_bus(load.zone) || sb_bus != self.sb_bus(load.zone) {
                        return Err(Error::validation(
                            path,
                            "vital/semi-vital loads attach to their zone's PB and SB buses",
                        ));
                    }
                }
                (_, Attachment::Single { .. }) => {
                    return Err(Error::validation(
                        format!("{path}.grade"),
                        "vital and semi-vital loads need both a PB and an SB attachment",
                    ))
                }
            }
        }
        Ok(())
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(path, format!("must be > 0, got {v}")))
    }
}

fn ordered(path: &str, lo: f64, hi: f64) -> Result<()> {
    if lo <= hi {
        Ok(())
    } else {
        Err(Error::validation(path, format!("min {lo} exceeds max {hi}")))
    }
}

/// Full discrete decision: one switch per load plus the PB/SB redundancy pair
/// of every zone.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SwitchConfig {
    pub loads: Vec<bool>,
    pub redundancy_pb: Vec<bool>,
    pub redundancy_sb: Vec<bool>,
}

impl SwitchConfig {
    /// Builds a configuration, rejecting zones whose redundancy pair is not
    /// mutually exclusive.
    pub fn new(loads: Vec<bool>, redundancy_pb: Vec<bool>, redundancy_sb: Vec<bool>) -> Result<Self> {
        if redundancy_pb.len() != redundancy_sb.len() {
            return Err(Error::Dimension {
                what: "redundancy switches",
                expected: redundancy_pb.len(),
                actual: redundancy_sb.len(),
            });
        }
        for (k, (&p, &s)) in redundancy_pb.iter().zip(&redundancy_sb).enumerate() {
            if p == s {
                return Err(Error::validation(format!("redundancy[{k}]"), "S_P + S_S must equal 1"));
            }
        }
        Ok(SwitchConfig { loads, redundancy_pb, redundancy_sb })
    }

    pub fn from_sides(loads: Vec<bool>, sides: &[BusSide]) -> Self {
        SwitchConfig {
            loads,
            redundancy_pb: sides.iter().map(|&s| s == BusSide::Pb).collect(),
            redundancy_sb: sides.iter().map(|&s| s == BusSide::Sb).collect(),
        }
    }

    pub fn all_on(spec: &SystemSpec) -> Self {
        SwitchConfig::from_sides(vec![true; spec.load_count()], &spec.initial_redundancy)
    }

    pub fn all_off(spec: &SystemSpec) -> Self {
        SwitchConfig::from_sides(vec![false; spec.load_count()], &spec.initial_redundancy)
    }

    pub fn sides(&self) -> Vec<BusSide> {
        self.redundancy_pb.iter().map(|&p| if p { BusSide::Pb } else { BusSide::Sb }).collect()
    }

    pub fn check_dimensions(&self, spec: &SystemSpec) -> Result<()> {
        if self.loads.len() != spec.load_count() {
            return Err(Error::Dimension {
                what: "load switches",
                expected: spec.load_count(),
                actual: self.loads.len(),
            });
        }
        if self.redundancy_pb.len() != spec.zone_count || self.redundancy_sb.len() != spec.zone_count {
            return Err(Error::Dimension {
                what: "redundancy pairs",
                expected: spec.zone_count,
                actual: self.redundancy_pb.len().min(self.redundancy_sb.len()),
            });
        }
        if self.redundancy_pb.iter().zip(&self.redundancy_sb).any(|(p, s)| p == s) {
            return Err(Error::validation("redundancy", "S_P + S_S must equal 1"));
        }
        Ok(())
    }
}

/// Set of faulted DC line segments, stored as normalized `(low, high)` bus
/// pairs (0-based).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaultSet {
    pairs: BTreeSet<(usize, usize)>,
}

impl FaultSet {
    pub fn new() -> Self {
        FaultSet::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        FaultSet { pairs: pairs.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect() }
    }

    pub fn from_lines(spec: &SystemSpec, lines: impl IntoIterator<Item = usize>) -> Self {
        FaultSet::from_pairs(lines.into_iter().map(|i| (spec.lines[i].from, spec.lines[i].to)))
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        self.pairs.insert((a.min(b), a.max(b)));
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    /// Resolves every pair to a line index.
    pub fn lines(&self, spec: &SystemSpec) -> Result<Vec<usize>> {
        self.pairs.iter().map(|&(a, b)| spec.line_between(a, b).ok_or(Error::UnknownLine(a + 1, b + 1))).collect()
    }

    pub fn validate(&self, spec: &SystemSpec) -> Result<()> {
        self.lines(spec).map(|_| ())
    }

    /// Parses a comma-separated fault list.
    ///
    /// `pb:i-j` / `sb:i-j` address the bus segment between zones `i` and `j`
    /// (1-based, adjacent); `bus:i-j` addresses raw 1-based bus numbers.
    pub fn parse(text: &str, spec: &SystemSpec) -> Result<Self> {
        let mut set = FaultSet::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (tag, range) = item.split_once(':').ok_or_else(|| Error::FaultSyntax(item.to_string()))?;
            let (a, b) = range.split_once('-').ok_or_else(|| Error::FaultSyntax(item.to_string()))?;
            let a: usize = a.trim().parse().map_err(|_| Error::FaultSyntax(item.to_string()))?;
            let b: usize = b.trim().parse().map_err(|_| Error::FaultSyntax(item.to_string()))?;
            let limit = match tag.trim().to_ascii_lowercase().as_str() {
                "pb" | "sb" => spec.zone_count,
                "bus" => spec.bus_count(),
                _ => return Err(Error::FaultSyntax(item.to_string())),
            };
            if a == 0 || b == 0 || a > limit || b > limit || a == b {
                return Err(Error::FaultSyntax(item.to_string()));
            }
            let (a, b) = (a - 1, b - 1);
            let (x, y) = match tag.trim().to_ascii_lowercase().as_str() {
                "pb" => (spec.pb_bus(a), spec.pb_bus(b)),
                "sb" => (spec.sb_bus(a), spec.sb_bus(b)),
                _ => (a, b),
            };
            if spec.line_between(x, y).is_none() {
                return Err(Error::UnknownLine(x + 1, y + 1));
            }
            set.insert(x, y);
        }
        Ok(set)
    }

    pub fn describe(&self, spec: &SystemSpec) -> String {
        let labels: Vec<String> = self
            .pairs
            .iter()
            .map(|&(a, b)| match spec.line_between(a, b) {
                Some(i) => spec.line_label(i),
                None => format!("bus:{}-{}", a + 1, b + 1),
            })
            .collect();
        if labels.is_empty() {
            "none".to_string()
        } else {
            labels.join(",")
        }
    }
}

/// Weighted and raw restored power of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    /// Σ w_l s_l P_l, in weighted watts.
    pub weighted: f64,
    /// Σ s_l P_l, in watts.
    pub restored: f64,
}

/// Restoration objective: weighted restored power plus the raw total.
pub fn weighted_objective(spec: &SystemSpec, config: &SwitchConfig) -> Result<Objective> {
    if config.loads.len() != spec.load_count() {
        return Err(Error::Dimension {
            what: "load switches",
            expected: spec.load_count(),
            actual: config.loads.len(),
        });
    }
    Ok(objective_of(spec, &config.loads))
}

pub(crate) fn objective_of(spec: &SystemSpec, switches: &[bool]) -> Objective {
    let mut weighted = 0.0;
    let mut restored = 0.0;
    for (load, &on) in spec.loads.iter().zip(switches) {
        if on {
            weighted += spec.weights.of(load.grade) * load.power;
            restored += load.power;
        }
    }
    Objective { weighted, restored }
}
