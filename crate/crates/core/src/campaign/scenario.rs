use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::EnvironmentModel;
use crate::error::{Error, Result};
use crate::freq::AveragingDomain;
use crate::multi_tx::{
    build_frequency_plan, ClockSpec, FrequencyPlanConfig, LeakageModel, TdmaSchedule, DEFAULT_GUARD_FRACTION,
};
use crate::sliding::{SlidingSounder, SounderConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sliding,
    Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmitterSpec {
    pub id: u32,
    /// Meters.
    pub position: [f64; 3],
    pub tx_power_db: f64,
    /// Free text such as antenna height or mounting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Latitude/longitude carried through to the records untouched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub position: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TdmaConfig {
    pub slot_length_s: f64,
    /// Fraction of each slot trimmed at both ends.
    pub guard_fraction: f64,
}

impl Default for TdmaConfig {
    fn default() -> Self {
        Self {
            slot_length_s: 1.0,
            guard_fraction: DEFAULT_GUARD_FRACTION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ClockConfig {
    pub receiver: ClockSpec,
    /// Applied to every transmitter, each drawing its own realization.
    pub transmitters: ClockSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub mode: Mode,
    pub master_seed: u64,
    pub transmitters: Vec<TransmitterSpec>,
    pub receiver_path: Vec<Waypoint>,
    pub environment: EnvironmentModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sliding: Option<SounderConfig>,
    #[serde(default)]
    pub tdma: TdmaConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<FrequencyPlanConfig>,
    #[serde(default)]
    pub averaging: AveragingDomain,
    #[serde(default)]
    pub clocks: ClockConfig,
    #[serde(default)]
    pub leakage: LeakageModel,
    /// Receiver noise power in dB relative to unit power; absent means noiseless.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_power_dbfs: Option<f64>,
}

/// One invariant violation, located by a JSON path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub path: String,
    pub reason: String,
}

impl std::fmt::Display for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

impl From<Problem> for Error {
    fn from(p: Problem) -> Self {
        Error::Scenario {
            path: p.path,
            reason: p.reason,
        }
    }
}

fn problem(path: impl Into<String>, reason: impl std::fmt::Display) -> Problem {
    Problem {
        path: path.into(),
        reason: reason.to_string(),
    }
}

/// Strips the "invalid parameter" wrapper so the field path carries the name.
fn reason_of(e: &Error) -> String {
    match e {
        Error::InvalidParameter { name, reason } => format!("`{name}` {reason}"),
        other => other.to_string(),
    }
}

impl Scenario {
    /// Parses and validates a scenario document. Schema errors name the
    /// JSON path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario = Self::parse(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Parses without checking invariants.
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Scenario {
                path,
                reason: e.into_inner().to_string(),
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        match self.problems().into_iter().next() {
            Some(p) => Err(p.into()),
            None => Ok(()),
        }
    }

    /// Every invariant violation found.
    pub fn problems(&self) -> Vec<Problem> {
        let mut out = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            out.push(problem(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if self.transmitters.is_empty() {
            out.push(problem("transmitters", "at least one transmitter is required"));
        }
        let mut ids = BTreeSet::new();
        for (i, t) in self.transmitters.iter().enumerate() {
            if !ids.insert(t.id) {
                out.push(problem(format!("transmitters[{i}].id"), format!("duplicate id {}", t.id)));
            }
            if t.position.iter().any(|v| !v.is_finite()) {
                out.push(problem(format!("transmitters[{i}].position"), "coordinates must be finite"));
            }
            if !t.tx_power_db.is_finite() {
                out.push(problem(format!("transmitters[{i}].tx_power_db"), "must be finite"));
            }
        }
        if self.receiver_path.is_empty() {
            out.push(problem("receiver_path", "at least one receiver position is required"));
        }
        for (j, w) in self.receiver_path.iter().enumerate() {
            if w.position.iter().any(|v| !v.is_finite()) {
                out.push(problem(format!("receiver_path[{j}].position"), "coordinates must be finite"));
            }
            for (i, t) in self.transmitters.iter().enumerate() {
                if w.position == t.position {
                    out.push(problem(
                        format!("receiver_path[{j}].position"),
                        format!("coincides with transmitters[{i}]"),
                    ));
                }
            }
        }
        if let Err(e) = self.environment.validate() {
            out.push(problem("environment", reason_of(&e)));
        }
        if let Err(e) = self.leakage.validate() {
            out.push(problem("leakage", reason_of(&e)));
        }
        if let Some(n) = self.noise_power_dbfs {
            if !n.is_finite() {
                out.push(problem("noise_power_dbfs", "must be finite (omit for a noiseless receiver)"));
            }
        }
        match self.mode {
            Mode::Sliding => self.sliding_problems(&mut out),
            Mode::Frequency => self.frequency_problems(&mut out),
        }
        out
    }

    fn sliding_problems(&self, out: &mut Vec<Problem>) {
        let Some(cfg) = &self.sliding else {
            out.push(problem("sliding", "required when mode is \"sliding\""));
            return;
        };
        let sounder = match SlidingSounder::new(cfg.clone()) {
            Ok(s) => s,
            Err(e) => {
                out.push(problem("sliding", reason_of(&e)));
                return;
            }
        };
        let fs = sounder.sample_rate();
        let per_sample = self.environment.delay_grid_s * fs;
        if (per_sample - per_sample.round()).abs() > 1e-6 || per_sample.round() < 1.0 {
            out.push(problem(
                "environment.delay_grid_s",
                format!(
                    "{} s is not a whole number of samples at {fs} samples/s",
                    self.environment.delay_grid_s
                ),
            ));
        }
        let t = &self.tdma;
        if !(0.0..0.5).contains(&t.guard_fraction) {
            out.push(problem("tdma.guard_fraction", format!("must be in [0, 0.5), got {}", t.guard_fraction)));
        }
        match TdmaSchedule::new(self.transmitters.len().max(1), t.slot_length_s, 1) {
            Err(e) => out.push(problem("tdma.slot_length_s", reason_of(&e))),
            Ok(_) => {
                let needed = capture_len(&sounder) as f64 / fs;
                let usable = t.slot_length_s * (1.0 - 2.0 * t.guard_fraction);
                if needed > usable {
                    out.push(problem(
                        "tdma.slot_length_s",
                        format!("trimmed slot of {usable} s is shorter than the {needed} s capture"),
                    ));
                }
            }
        }
    }

    fn frequency_problems(&self, out: &mut Vec<Problem>) {
        let Some(cfg) = &self.frequency else {
            out.push(problem("frequency", "required when mode is \"frequency\""));
            return;
        };
        if let Err(e) = build_frequency_plan(self.transmitters.len().max(1), cfg) {
            out.push(problem("frequency", reason_of(&e)));
        }
    }
}

/// Samples captured per TDMA slot: one settling period, the averaging
/// periods, one period of slack for the strongest path, and a filter length.
pub fn capture_len(sounder: &SlidingSounder) -> usize {
    (sounder.config().averaging_periods + 2) * sounder.period_samples() + sounder.filter_taps().len()
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scenario::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Scenario {
        Scenario {
            schema_version: SCHEMA_VERSION,
            name: Some("unit".into()),
            mode: Mode::Sliding,
            master_seed: 1,
            transmitters: vec![TransmitterSpec {
                id: 1,
                position: [0.0, 0.0, 2.0],
                tx_power_db: 0.0,
                note: None,
            }],
            receiver_path: vec![Waypoint {
                position: [5.0, 0.0, 1.0],
                geo: None,
            }],
            environment: EnvironmentModel {
                reference_loss_db: 40.0,
                path_loss_exponent: 2.0,
                reference_distance_m: 1.0,
                delay_spread_scale_s: 60e-9,
                tap_count_range: [1, 4],
                wall_loss_db: 0.0,
                wall_spacing_m: None,
                delay_grid_s: 60e-9,
                rng_seed: 0,
            },
            sliding: Some(SounderConfig::default()),
            tdma: TdmaConfig::default(),
            frequency: None,
            averaging: AveragingDomain::Db,
            clocks: ClockConfig::default(),
            leakage: LeakageModel::none(),
            noise_power_dbfs: None,
        }
    }

    #[test]
    fn round_trip() {
        let s = small();
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn missing_transmitters_is_named() {
        let mut v: serde_json::Value = serde_json::from_str(&small().to_json()).unwrap();
        v.as_object_mut().unwrap().remove("transmitters");
        let err = Scenario::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("transmitters"), "{err}");

        let mut s = small();
        s.transmitters.clear();
        assert_eq!(s.problems()[0].path, "transmitters");
    }

    #[test]
    fn unknown_mode_is_rejected() {
        let text = small().to_json().replace("\"sliding\",", "\"radar\",");
        let err = Scenario::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("mode"), "{err}");
    }

    #[test]
    fn nested_schema_errors_carry_the_path() {
        let text = small().to_json().replace("\"tx_power_db\": 0.0", "\"tx_power_db\": \"loud\"");
        let err = Scenario::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("transmitters[0].tx_power_db"), "{err}");
    }

    #[test]
    fn mode_needs_its_config() {
        let mut s = small();
        s.mode = Mode::Frequency;
        assert_eq!(s.problems()[0].path, "frequency");
        s.frequency = Some(FrequencyPlanConfig {
            guard_band_hz: 700e3,
            max_frames: Some(1),
            ..Default::default()
        });
        s.transmitters.push(TransmitterSpec {
            id: 2,
            ..s.transmitters[0].clone()
        });
        s.receiver_path[0].position = [9.0, 9.0, 1.0];
        let p = s.problems();
        assert_eq!(p.len(), 1, "{p:?}");
        assert!(p[0].reason.contains("capacity"), "{}", p[0]);
    }

    #[test]
    fn invariant_violations_are_all_reported() {
        let mut s = small();
        s.transmitters.push(s.transmitters[0].clone());
        s.environment.delay_grid_s = 50e-9;
        s.tdma.slot_length_s = 1e-4;
        s.receiver_path[0].position = s.transmitters[0].position;
        let paths: Vec<String> = s.problems().into_iter().map(|p| p.path).collect();
        for want in [
            "transmitters[1].id",
            "receiver_path[0].position",
            "environment.delay_grid_s",
            "tdma.slot_length_s",
        ] {
            assert!(paths.iter().any(|p| p == want), "{want} missing from {paths:?}");
        }
    }
}
