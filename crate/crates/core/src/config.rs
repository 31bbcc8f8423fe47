//! Scenario files.
//!
//! A scenario is a TOML document with durations in milliseconds and powers
//! in dB relative to the noise floor:
//!
//! ```toml
//! num_sus = 10
//! selection_probs = [0.5, 0.5]   # optional, uniform when absent
//!
//! [[channels]]
//! mean_idle_ms = 500.0
//! mean_active_ms = 50.0
//! pu_power_db = -20.0
//!
//! [si]
//! zeta = 0.2
//! xi = 0.95
//!
//! [proto]
//! p = 0.01
//! frame_ms = 20.0
//! sensing_time_ms = 3.0
//! sensing_power_db = 5.0
//! data_power_db = 15.0
//! max_power_db = 15.0
//! ```
//!
//! Any numeric leaf can be overridden by a key path such as
//! `channels[1].mean_active_ms` or `proto.sensing_time_ms`.

use std::path::Path;

use serde::{Deserialize, Serialize};
pub use toml::Table;
use toml::Value;

use crate::error::{Error, Result};
use crate::model::{
    validate, ChannelModel, MacTimings, ModelOptions, ProtocolConfig, Scenario, SelfInterference, SensingParams,
};
use crate::optimizer::OptimizerSettings;
use crate::simulator::SimConfig;
use crate::units::{db_to_linear, ms_to_s, s_to_ms};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub mean_idle_ms: f64,
    pub mean_active_ms: f64,
    pub pu_power_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingsSpec {
    pub slot_ms: f64,
    pub difs_ms: f64,
    pub sifs_ms: f64,
    pub rts_ms: f64,
    pub cts_ms: f64,
    pub ack_ms: f64,
    pub prop_delay_ms: f64,
}

impl Default for TimingsSpec {
    fn default() -> Self {
        let t = MacTimings::ieee80211();
        Self {
            slot_ms: s_to_ms(t.slot),
            difs_ms: s_to_ms(t.difs),
            sifs_ms: s_to_ms(t.sifs),
            rts_ms: s_to_ms(t.rts),
            cts_ms: s_to_ms(t.cts),
            ack_ms: s_to_ms(t.ack),
            prop_delay_ms: s_to_ms(t.prop_delay),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiSpec {
    pub zeta: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingSpec {
    pub sampling_freq_hz: f64,
    pub target_detection: f64,
}

impl Default for SensingSpec {
    fn default() -> Self {
        Self {
            sampling_freq_hz: 6e6,
            target_detection: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtoSpec {
    pub p: f64,
    #[serde(default = "default_frame_ms")]
    pub frame_ms: f64,
    pub sensing_time_ms: f64,
    pub sensing_power_db: f64,
    pub data_power_db: f64,
    pub max_power_db: f64,
    #[serde(default = "default_evacuation_ms")]
    pub evacuation_ms: f64,
}

fn default_frame_ms() -> f64 {
    20.0
}

fn default_evacuation_ms() -> f64 {
    25.0
}

fn default_reselect() -> u32 {
    100
}

/// On-disk layout of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub num_sus: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection_probs: Option<Vec<f64>>,
    #[serde(default = "default_reselect")]
    pub reselect_period: u32,
    pub channels: Vec<ChannelSpec>,
    #[serde(default)]
    pub timings: TimingsSpec,
    pub si: SiSpec,
    #[serde(default)]
    pub sensing: SensingSpec,
    pub proto: ProtoSpec,
    #[serde(default)]
    pub model: ModelOptions,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub sim: SimConfig,
}

/// A validated scenario with the run settings that came with it.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub scenario: Scenario,
    pub optimizer: OptimizerSettings,
    pub sim: SimConfig,
}

impl ScenarioFile {
    pub fn into_loaded(self) -> Result<Loaded> {
        let m = self.channels.len();
        let selection_probs = self
            .selection_probs
            .unwrap_or_else(|| vec![1.0 / m.max(1) as f64; m]);
        let t = &self.timings;
        let p = &self.proto;
        let scenario = Scenario {
            num_sus: self.num_sus,
            channels: self
                .channels
                .iter()
                .map(|c| ChannelModel::new(ms_to_s(c.mean_idle_ms), ms_to_s(c.mean_active_ms), db_to_linear(c.pu_power_db)))
                .collect(),
            selection_probs,
            reselect_period: self.reselect_period,
            timings: MacTimings {
                slot: ms_to_s(t.slot_ms),
                difs: ms_to_s(t.difs_ms),
                sifs: ms_to_s(t.sifs_ms),
                rts: ms_to_s(t.rts_ms),
                cts: ms_to_s(t.cts_ms),
                ack: ms_to_s(t.ack_ms),
                prop_delay: ms_to_s(t.prop_delay_ms),
            },
            si: SelfInterference {
                zeta: self.si.zeta,
                xi: self.si.xi,
            },
            sensing: SensingParams {
                sampling_freq: self.sensing.sampling_freq_hz,
                target_detection: self.sensing.target_detection,
            },
            proto: ProtocolConfig {
                p: p.p,
                frame: ms_to_s(p.frame_ms),
                sensing_time: ms_to_s(p.sensing_time_ms),
                sensing_power: db_to_linear(p.sensing_power_db),
                data_power: db_to_linear(p.data_power_db),
                max_power: db_to_linear(p.max_power_db),
                evacuation: ms_to_s(p.evacuation_ms),
            },
            model: self.model,
        };
        self.sim.check()?;
        Ok(Loaded {
            scenario: validate(scenario)?,
            optimizer: self.optimizer,
            sim: self.sim,
        })
    }
}

/// Parse a scenario document without converting it, so keys can be
/// overridden first. A missing `selection_probs` is filled in uniformly.
pub fn parse(text: &str) -> Result<Table> {
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    if !table.contains_key("selection_probs") {
        let m = table.get("channels").and_then(Value::as_array).map_or(0, Vec::len);
        if m > 0 {
            let uniform = vec![Value::Float(1.0 / m as f64); m];
            table.insert("selection_probs".into(), Value::Array(uniform));
        }
    }
    table
        .entry("reselect_period")
        .or_insert(Value::Integer(default_reselect().into()));
    if let Some(Value::Table(proto)) = table.get_mut("proto") {
        proto.entry("frame_ms").or_insert(Value::Float(default_frame_ms()));
        proto.entry("evacuation_ms").or_insert(Value::Float(default_evacuation_ms()));
    }
    for (section, defaults) in default_sections()? {
        let entry = table.entry(section).or_insert_with(|| Value::Table(Table::new()));
        if let Value::Table(t) = entry {
            for (k, v) in defaults {
                t.entry(k).or_insert(v);
            }
        }
    }
    Ok(table)
}

/// Optional sections with every key at its default, so that overrides can
/// address keys the file leaves out.
fn default_sections() -> Result<Vec<(String, Table)>> {
    fn table_of<T: Serialize>(v: &T) -> Result<Table> {
        Table::try_from(v).map_err(|e| Error::Config(e.to_string()))
    }
    Ok(vec![
        ("timings".into(), table_of(&TimingsSpec::default())?),
        ("sensing".into(), table_of(&SensingSpec::default())?),
        ("model".into(), table_of(&ModelOptions::default())?),
        ("optimizer".into(), table_of(&OptimizerSettings::default())?),
        ("sim".into(), table_of(&SimConfig::default())?),
    ])
}

pub fn from_table(table: Table) -> Result<Loaded> {
    let file: ScenarioFile = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    file.into_loaded()
}

pub fn load_str(text: &str) -> Result<Loaded> {
    from_table(parse(text)?)
}

pub fn load_file(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    load_str(&text)
}

enum Segment<'a> {
    Key(&'a str),
    Index(usize),
}

fn segments(path: &str) -> Result<Vec<Segment<'_>>> {
    let bad = || Error::Config(format!("malformed key path `{path}`"));
    let mut out = Vec::new();
    for part in path.split('.') {
        let (name, mut rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if name.is_empty() {
            return Err(bad());
        }
        out.push(Segment::Key(name));
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(bad)?;
            if !rest.starts_with('[') {
                return Err(bad());
            }
            out.push(Segment::Index(rest[1..close].parse().map_err(|_| bad())?));
            rest = &rest[close + 1..];
        }
    }
    Ok(out)
}

/// Set the numeric leaf at `path`. Integer leaves reject fractional values.
/// Setting `selection_probs[k]` for any but the last channel re-balances the
/// last entry so the vector still sums to one.
pub fn set_key(table: &mut Table, path: &str, x: f64) -> Result<()> {
    let segs = segments(path)?;
    let missing = || Error::Config(format!("unknown key path `{path}`"));
    let mut cur: Option<&mut Value> = None;
    for seg in &segs {
        cur = match (cur, seg) {
            (None, Segment::Key(k)) => table.get_mut(*k),
            (Some(v), Segment::Key(k)) => v.as_table_mut().and_then(|t| t.get_mut(*k)),
            (Some(v), Segment::Index(n)) => v.as_array_mut().and_then(|a| a.get_mut(*n)),
            (None, Segment::Index(_)) => None,
        };
        if cur.is_none() {
            return Err(missing());
        }
    }
    let cur = cur.ok_or_else(missing)?;
    *cur = match cur {
        Value::Integer(_) => {
            if x.fract() != 0.0 || !x.is_finite() {
                return Err(Error::Config(format!("`{path}` takes an integer, got {x}")));
            }
            Value::Integer(x as i64)
        }
        Value::Float(_) => Value::Float(x),
        _ => return Err(missing()),
    };

    if let [Segment::Key("selection_probs"), Segment::Index(k)] = segs.as_slice() {
        let arr = table
            .get_mut("selection_probs")
            .and_then(Value::as_array_mut)
            .ok_or_else(missing)?;
        let last = arr.len() - 1;
        if *k < last {
            let others: f64 = arr[..last].iter().filter_map(value_f64).sum();
            arr[last] = Value::Float(1.0 - others);
        }
    }
    Ok(())
}

fn value_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// Read the numeric leaf at `path`.
pub fn get_key(table: &Table, path: &str) -> Result<f64> {
    let segs = segments(path)?;
    let missing = || Error::Config(format!("unknown key path `{path}`"));
    let mut cur: Option<&Value> = None;
    for seg in &segs {
        cur = match (cur, seg) {
            (None, Segment::Key(k)) => table.get(*k),
            (Some(v), Segment::Key(k)) => v.as_table().and_then(|t| t.get(*k)),
            (Some(v), Segment::Index(n)) => v.as_array().and_then(|a| a.get(*n)),
            (None, Segment::Index(_)) => None,
        };
        if cur.is_none() {
            return Err(missing());
        }
    }
    cur.and_then(value_f64).ok_or_else(missing)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"
num_sus = 10

[[channels]]
mean_idle_ms = 500.0
mean_active_ms = 50.0
pu_power_db = -20.0

[[channels]]
mean_idle_ms = 1000.0
mean_active_ms = 100.0
pu_power_db = -20.0

[si]
zeta = 0.2
xi = 0.95

[proto]
p = 0.01
sensing_time_ms = 3.0
sensing_power_db = 5.0
data_power_db = 15.0
max_power_db = 15.0
"#;

    #[test]
    fn loads_with_defaults() {
        let l = load_str(DOC).unwrap();
        let s = &l.scenario;
        assert_eq!(s.selection_probs, vec![0.5, 0.5]);
        assert!((s.channels[0].mean_idle - 0.5).abs() < 1e-15);
        assert!((s.channels[0].pu_power - 0.01).abs() < 1e-15);
        assert!((s.proto.frame - 0.02).abs() < 1e-15);
        assert!((s.timings.rts - MacTimings::ieee80211().rts).abs() < 1e-18);
        assert_eq!(l.optimizer, OptimizerSettings::default());
    }

    #[test]
    fn overrides() {
        let mut t = parse(DOC).unwrap();
        set_key(&mut t, "channels[1].mean_active_ms", 250.0).unwrap();
        set_key(&mut t, "selection_probs[0]", 0.3).unwrap();
        set_key(&mut t, "num_sus", 4.0).unwrap();
        set_key(&mut t, "optimizer.restarts", 5.0).unwrap();
        assert_eq!(get_key(&t, "selection_probs[1]").unwrap(), 0.7);
        let l = from_table(t).unwrap();
        assert!((l.scenario.channels[1].mean_active - 0.25).abs() < 1e-15);
        assert_eq!(l.scenario.num_sus, 4);
        assert_eq!(l.optimizer.restarts, 5);
    }

    #[test]
    fn rejects_bad_paths_and_values() {
        let mut t = parse(DOC).unwrap();
        assert!(set_key(&mut t, "channels[7].mean_idle_ms", 1.0).is_err());
        assert!(set_key(&mut t, "num_sus", 2.5).is_err());
        assert!(set_key(&mut t, "channels[", 1.0).is_err());
        assert!(load_str(&DOC.replace("xi = 0.95", "xi = 0.95\nfoo = 1")).is_err());
    }

    #[test]
    fn infeasible_override_fails_validation() {
        let mut t = parse(DOC).unwrap();
        set_key(&mut t, "proto.sensing_time_ms", 30.0).unwrap();
        match from_table(t) {
            Err(Error::Validation(v)) => assert!(v.mentions("proto.sensing_time_ms")),
            other => panic!("{other:?}"),
        }
    }
}
