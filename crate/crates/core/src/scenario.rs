//! Scenario document format.
//!
//! A scenario is a TOML document. Zones, converters and loads are listed
//! explicitly; the dual-bus line list is generated from `zones` and the
//! converter tie positions unless `network.generate = false`. Entries in
//! `[[lines]]` override a generated line with the same endpoints or add a new
//! one. The full schema is described in `docs/scenario-format.md`.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{
    Attachment, BusKind, BusSide, BusSpec, ConverterSpec, GeneratorSpec, Grade, GradeWeights, LineKind, LineSpec,
    LoadModel, LoadSpec, SystemSpec,
};

pub const DEFAULT_SEGMENT_RESISTANCE: f64 = 0.01;
pub const DEFAULT_TIE_RESISTANCE: f64 = 0.005;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    name: Option<String>,
    zones: usize,
    #[serde(default = "default_dc_voltage")]
    nominal_dc_voltage: f64,
    #[serde(default = "default_ac_voltage")]
    nominal_ac_voltage: f64,
    #[serde(default)]
    load_model: LoadModel,
    #[serde(default)]
    weights: GradeWeights,
    dc_limits: Option<DcLimits>,
    #[serde(default)]
    network: NetworkDoc,
    #[serde(default)]
    dispatch: DispatchDoc,
    #[serde(default)]
    lines: Vec<LineDoc>,
    #[serde(default)]
    redundancy: Vec<RedundancyDoc>,
    converters: Vec<ConverterDoc>,
    #[serde(default)]
    loads: Vec<LoadDoc>,
}

fn default_dc_voltage() -> f64 {
    1000.0
}

fn default_ac_voltage() -> f64 {
    3300.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DcLimits {
    voltage_min: f64,
    voltage_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NetworkDoc {
    generate: bool,
    segment_resistance: f64,
    tie_resistance: f64,
    segment_ampacity: f64,
    tie_ampacity: f64,
}

impl Default for NetworkDoc {
    fn default() -> Self {
        NetworkDoc {
            generate: true,
            segment_resistance: DEFAULT_SEGMENT_RESISTANCE,
            tie_resistance: DEFAULT_TIE_RESISTANCE,
            segment_ampacity: f64::INFINITY,
            tie_ampacity: f64::INFINITY,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DispatchDoc {
    non_slack_share_cap: f64,
}

impl Default for DispatchDoc {
    fn default() -> Self {
        DispatchDoc { non_slack_share_cap: 0.5 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineDoc {
    from: String,
    to: String,
    resistance: Option<f64>,
    ampacity: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RedundancyDoc {
    zone: usize,
    pb: u8,
    sb: u8,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConverterDoc {
    name: String,
    pb_zone: Option<usize>,
    sb_zone: Option<usize>,
    #[serde(default)]
    p_cpl: f64,
    #[serde(default)]
    a: f64,
    #[serde(default)]
    b: f64,
    #[serde(default = "infinite")]
    current_max: f64,
    #[serde(default)]
    p_oc_min: f64,
    p_oc_max: Option<f64>,
    ac_voltage: Option<f64>,
    #[serde(default)]
    ac_angle: f64,
    #[serde(default)]
    line_resistance: f64,
    #[serde(default)]
    line_reactance: f64,
    #[serde(default)]
    reactive_power: f64,
    #[serde(default = "one")]
    dispatch_fraction: f64,
    dc_voltage: Option<f64>,
    generator: GeneratorDoc,
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorDoc {
    name: Option<String>,
    #[serde(default)]
    p_min: f64,
    p_max: f64,
    #[serde(default = "neg_infinite")]
    q_min: f64,
    #[serde(default = "infinite")]
    q_max: f64,
    voltage_min: Option<f64>,
    voltage_max: Option<f64>,
    #[serde(default = "infinite")]
    current_max: f64,
    #[serde(default = "neg_one")]
    angle_min: f64,
    #[serde(default = "one")]
    angle_max: f64,
}

fn neg_infinite() -> f64 {
    f64::NEG_INFINITY
}

fn neg_one() -> f64 {
    -1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadDoc {
    zone: usize,
    grade: Grade,
    power: f64,
    #[serde(default = "one_usize")]
    count: usize,
    name: Option<String>,
    side: Option<BusSide>,
}

fn one_usize() -> usize {
    1
}

/// Parses and validates a scenario document.
pub fn load_system_spec(text: &str) -> Result<SystemSpec> {
    let doc: Document = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    build(doc)
}

/// Reads a scenario from disk. A missing `.toml` extension is tolerated.
pub fn load_system_spec_file(path: impl AsRef<std::path::Path>) -> Result<SystemSpec> {
    let path = path.as_ref();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if path.extension().is_none() => {
            std::fs::read_to_string(path.with_extension("toml")).map_err(|_| Error::from(e))?
        }
        Err(e) => return Err(e.into()),
    };
    load_system_spec(&text)
}

fn build(doc: Document) -> Result<SystemSpec> {
    let k = doc.zones;
    if k == 0 {
        return Err(Error::validation("zones", "at least one zone is required"));
    }
    let m = doc.converters.len();
    if m == 0 {
        return Err(Error::validation("converters", "at least one converter is required"));
    }

    let mut buses = Vec::with_capacity(2 * k + m);
    for side in [BusSide::Pb, BusSide::Sb] {
        for zone in 0..k {
            buses.push(BusSpec { id: buses.len(), kind: BusKind::Zone { side, zone } });
        }
    }
    for converter in 0..m {
        buses.push(BusSpec { id: buses.len(), kind: BusKind::Converter { converter } });
    }

    let mut converters = Vec::with_capacity(m);
    let mut generators = Vec::with_capacity(m);
    for (i, c) in doc.converters.into_iter().enumerate() {
        let path = format!("converters[{i}]");
        // First converter ties into zone 1, the last into zone K.
        let default_zone = if i + 1 == m && m > 1 { k } else { 1 };
        let pb_zone = zone_index(c.pb_zone.unwrap_or(default_zone), k, &format!("{path}.pb_zone"))?;
        let sb_zone = zone_index(c.sb_zone.unwrap_or(default_zone), k, &format!("{path}.sb_zone"))?;
        let g = c.generator;
        let ac_voltage = c.ac_voltage.unwrap_or(doc.nominal_ac_voltage);
        generators.push(GeneratorSpec {
            name: g.name.unwrap_or_else(|| c.name.clone()),
            p_min: g.p_min,
            p_max: g.p_max,
            q_min: g.q_min,
            q_max: g.q_max,
            voltage_min: g.voltage_min.unwrap_or(0.9 * doc.nominal_ac_voltage),
            voltage_max: g.voltage_max.unwrap_or(1.1 * doc.nominal_ac_voltage),
            current_max: g.current_max,
            angle_min: g.angle_min,
            angle_max: g.angle_max,
        });
        converters.push(ConverterSpec {
            name: c.name,
            constant_loss: c.p_cpl,
            linear_loss: c.a,
            quadratic_loss: c.b,
            current_max: c.current_max,
            p_oc_min: c.p_oc_min,
            p_oc_max: c.p_oc_max.unwrap_or(g.p_max),
            ac_voltage,
            ac_angle: c.ac_angle,
            line_resistance: c.line_resistance,
            line_reactance: c.line_reactance,
            reactive_power: c.reactive_power,
            dispatch_fraction: c.dispatch_fraction,
            dc_voltage: c.dc_voltage.unwrap_or(doc.nominal_dc_voltage),
            pb_zone,
            sb_zone,
        });
    }

    let net = &doc.network;
    let mut lines = Vec::new();
    if net.generate {
        for side in [BusSide::Pb, BusSide::Sb] {
            for zone in 0..k.saturating_sub(1) {
                let (from, to) = match side {
                    BusSide::Pb => (zone, zone + 1),
                    BusSide::Sb => (k + zone, k + zone + 1),
                };
                lines.push(LineSpec {
                    from,
                    to,
                    resistance: net.segment_resistance,
                    ampacity: net.segment_ampacity,
                    kind: LineKind::Segment { side, zone },
                });
            }
        }
        for (i, c) in converters.iter().enumerate() {
            let bus = 2 * k + i;
            for (side, zone) in [(BusSide::Pb, c.pb_zone), (BusSide::Sb, c.sb_zone)] {
                let to = match side {
                    BusSide::Pb => zone,
                    BusSide::Sb => k + zone,
                };
                lines.push(LineSpec {
                    from: bus,
                    to,
                    resistance: net.tie_resistance,
                    ampacity: net.tie_ampacity,
                    kind: LineKind::Tie { converter: i, side },
                });
            }
        }
    }
    for (i, l) in doc.lines.iter().enumerate() {
        let path = format!("lines[{i}]");
        let from = bus_ref(&l.from, k, &converters, &format!("{path}.from"))?;
        let to = bus_ref(&l.to, k, &converters, &format!("{path}.to"))?;
        if let Some(existing) = lines.iter_mut().find(|x| x.connects(from, to)) {
            if let Some(r) = l.resistance {
                existing.resistance = r;
            }
            if let Some(a) = l.ampacity {
                existing.ampacity = a;
            }
        } else {
            let kind = infer_kind(from, to, k);
            lines.push(LineSpec {
                from,
                to,
                resistance: l
                    .resistance
                    .ok_or_else(|| Error::validation(format!("{path}.resistance"), "required for new lines"))?,
                ampacity: l.ampacity.unwrap_or(f64::INFINITY),
                kind,
            });
        }
    }

    let mut initial_redundancy = vec![BusSide::Pb; k];
    for (i, r) in doc.redundancy.iter().enumerate() {
        let path = format!("redundancy[{i}]");
        let zone = zone_index(r.zone, k, &format!("{path}.zone"))?;
        if r.pb > 1 || r.sb > 1 || r.pb + r.sb != 1 {
            return Err(Error::validation(path, format!("S_P + S_S must equal 1 (got S_P={}, S_S={})", r.pb, r.sb)));
        }
        initial_redundancy[zone] = if r.pb == 1 { BusSide::Pb } else { BusSide::Sb };
    }

    let mut loads: Vec<LoadSpec> = Vec::new();
    let mut grade_counter = vec![[0usize; 3]; k];
    for (i, l) in doc.loads.iter().enumerate() {
        let path = format!("loads[{i}]");
        let zone = zone_index(l.zone, k, &format!("{path}.zone"))?;
        if l.count == 0 {
            return Err(Error::validation(format!("{path}.count"), "must be >= 1"));
        }
        if l.grade != Grade::NonVital && l.side.is_some() {
            return Err(Error::validation(format!("{path}.side"), "only non-vital loads are hard-wired to one side"));
        }
        for n in 0..l.count {
            let attachment = match l.grade {
                Grade::NonVital => {
                    // Without an explicit side, consecutive copies alternate PB/SB.
                    let side = l.side.unwrap_or(if n % 2 == 0 { BusSide::Pb } else { BusSide::Sb });
                    Attachment::Single {
                        bus: match side {
                            BusSide::Pb => zone,
                            BusSide::Sb => k + zone,
                        },
                    }
                }
                _ => Attachment::Redundant { pb_bus: zone, sb_bus: k + zone },
            };
            let slot = &mut grade_counter[zone][l.grade.layer() - 1];
            *slot += 1;
            let name = match (&l.name, l.count) {
                (Some(name), 1) => name.clone(),
                (Some(name), _) => format!("{name}.{}", n + 1),
                (None, _) => format!("Z{}-{}{}", zone + 1, l.grade.short(), slot),
            };
            loads.push(LoadSpec { id: loads.len(), name, zone, grade: l.grade, power: l.power, attachment });
        }
    }

    let (dc_voltage_min, dc_voltage_max) = match &doc.dc_limits {
        Some(d) => (d.voltage_min, d.voltage_max),
        None => (0.9 * doc.nominal_dc_voltage, 1.1 * doc.nominal_dc_voltage),
    };

    if doc.load_model != LoadModel::ConstantCurrent {
        return Err(Error::Unsupported(format!(
            "load model {:?} is not implemented; use constant-current",
            doc.load_model
        )));
    }

    let spec = SystemSpec {
        name: doc.name.unwrap_or_else(|| format!("{k}-zone plant")),
        zone_count: k,
        buses,
        lines,
        converters,
        generators,
        loads,
        weights: doc.weights,
        nominal_dc_voltage: doc.nominal_dc_voltage,
        nominal_ac_voltage: doc.nominal_ac_voltage,
        dc_voltage_min,
        dc_voltage_max,
        load_model: doc.load_model,
        initial_redundancy,
        non_slack_share_cap: doc.dispatch.non_slack_share_cap,
    };
    spec.validate()?;
    Ok(spec)
}

fn zone_index(zone: usize, k: usize, path: &str) -> Result<usize> {
    if zone == 0 || zone > k {
        Err(Error::validation(path, format!("zone {zone} outside 1..={k}")))
    } else {
        Ok(zone - 1)
    }
}

/// `pb:3`, `sb:1`, `c:2` or a converter name.
fn bus_ref(text: &str, k: usize, converters: &[ConverterSpec], path: &str) -> Result<usize> {
    if let Some(pos) = converters.iter().position(|c| c.name == text) {
        return Ok(2 * k + pos);
    }
    let (tag, idx) =
        text.split_once(':').ok_or_else(|| Error::validation(path, format!("unrecognized bus reference `{text}`")))?;
    let idx: usize =
        idx.trim().parse().map_err(|_| Error::validation(path, format!("unrecognized bus reference `{text}`")))?;
    match tag.trim() {
        "pb" => Ok(zone_index(idx, k, path)?),
        "sb" => Ok(k + zone_index(idx, k, path)?),
        "c" if idx >= 1 && idx <= converters.len() => Ok(2 * k + idx - 1),
        _ => Err(Error::validation(path, format!("unrecognized bus reference `{text}`"))),
    }
}

fn infer_kind(from: usize, to: usize, k: usize) -> LineKind {
    let (a, b) = (from.min(to), from.max(to));
    if b < k && b == a + 1 {
        LineKind::Segment { side: BusSide::Pb, zone: a }
    } else if a >= k && b < 2 * k && b == a + 1 {
        LineKind::Segment { side: BusSide::Sb, zone: a - k }
    } else if b >= 2 * k && a < 2 * k {
        LineKind::Tie { converter: b - 2 * k, side: if a < k { BusSide::Pb } else { BusSide::Sb } }
    } else {
        LineKind::Other
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const MINIMAL: &str = r#"
        zones = 1
        [[converters]]
        name = "G1"
        [converters.generator]
        p_max = 2.0e6
        [[loads]]
        zone = 1
        grade = "vital"
        power = 0.5e6
        [[loads]]
        zone = 1
        grade = "non-vital"
        power = 0.1e6
        side = "sb"
    "#;

    #[test]
    fn six_zone_fixture_dimensions() {
        let spec = fixtures::six_zone();
        assert_eq!(spec.zone_count, 6);
        assert_eq!(spec.bus_count(), 14);
        assert_eq!(spec.converter_count(), 2);
        assert_eq!(spec.load_count(), 36);
        assert!((spec.total_load_power() - 10.8e6).abs() < 1e-3);
        // 5 PB + 5 SB segments + 4 converter ties
        assert_eq!(spec.lines.len(), 14);
        assert_eq!(spec.faultable_lines().len(), 10);
    }

    #[test]
    fn minimal_plant() {
        let spec = load_system_spec(MINIMAL).unwrap();
        assert_eq!(spec.bus_count(), 3);
        assert_eq!(spec.load_count(), 2);
        assert_eq!(spec.lines.len(), 2);
        assert_eq!(spec.loads[1].attachment, Attachment::Single { bus: 1 });
        assert_eq!(spec.dc_voltage_min, 900.0);
    }

    #[test]
    fn redundancy_both_closed_rejected() {
        let text = format!("{MINIMAL}\n[[redundancy]]\nzone = 1\npb = 1\nsb = 1\n");
        match load_system_spec(&text) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "redundancy[0]"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_reported() {
        assert!(matches!(load_system_spec("zones = ["), Err(Error::Parse(_))));
        assert!(matches!(load_system_spec("zones = 1\nconverters = []\nbogus = 3"), Err(Error::Parse(_))));
    }

    #[test]
    fn bad_load_reports_field_path() {
        let text = MINIMAL.replace("power = 0.5e6", "power = -1.0");
        match load_system_spec(&text) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "loads[0].power"),
            other => panic!("expected validation error, got {other:?}"),
        }
        let text = MINIMAL.replace("zone = 1\n        grade = \"vital\"", "zone = 4\n        grade = \"vital\"");
        match load_system_spec(&text) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "loads[0].zone"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn line_override_and_extra_line() {
        let text = format!("{MINIMAL}\n[[lines]]\nfrom = \"G1\"\nto = \"pb:1\"\nresistance = 0.02\nampacity = 100.0\n");
        let spec = load_system_spec(&text).unwrap();
        let i = spec.line_between(2, 0).unwrap();
        assert_eq!(spec.lines[i].resistance, 0.02);
        assert_eq!(spec.lines[i].ampacity, 100.0);
    }

    #[test]
    fn constant_power_model_unsupported() {
        let text = format!("load_model = \"constant-power\"\n{MINIMAL}");
        assert!(matches!(load_system_spec(&text), Err(Error::Unsupported(_))));
    }
}
