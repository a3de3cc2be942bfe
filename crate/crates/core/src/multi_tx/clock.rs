use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Node clock minus true time: `offset + drift * t + jitter`, where the
/// jitter draw is keyed by an event number so it is reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockModel {
    pub offset_s: f64,
    /// Seconds of error gained per second.
    pub drift: f64,
    pub jitter_std_s: f64,
    pub seed: u64,
}

/// Standard deviation of the per-node offset under NTP synchronization.
pub const NTP_OFFSET_STD_S: f64 = 5e-3;
/// Standard deviation of the per-node offset under GPS synchronization.
pub const GPS_OFFSET_STD_S: f64 = 100e-9;

impl ClockModel {
    pub fn ideal() -> Self {
        Self {
            offset_s: 0.0,
            drift: 0.0,
            jitter_std_s: 0.0,
            seed: 0,
        }
    }

    /// Offset drawn once from N(0, std^2).
    pub fn random_offset(offset_std_s: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: f64 = StandardNormal.sample(&mut rng);
        Self {
            offset_s: offset_std_s * z,
            drift: 0.0,
            jitter_std_s: 0.0,
            seed,
        }
    }

    pub fn ntp(seed: u64) -> Self {
        Self::random_offset(NTP_OFFSET_STD_S, seed)
    }

    pub fn gps(seed: u64) -> Self {
        Self::random_offset(GPS_OFFSET_STD_S, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jitter_std_s >= 0.0) {
            return Err(Error::param("jitter_std_s", format!("must be >= 0, got {}", self.jitter_std_s)));
        }
        if !self.offset_s.is_finite() || !self.drift.is_finite() {
            return Err(Error::param("offset_s", "offset and drift must be finite"));
        }
        Ok(())
    }

    pub fn error_at(&self, time: f64, event: u64) -> f64 {
        let mut e = self.offset_s + self.drift * time;
        if self.jitter_std_s > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(self.seed, &[event, seed::purpose::JITTER]));
            let z: f64 = StandardNormal.sample(&mut rng);
            e += self.jitter_std_s * z;
        }
        e
    }

    /// What this clock reads at true time `time`.
    pub fn local_time(&self, time: f64, event: u64) -> f64 {
        time + self.error_at(time, event)
    }
}

/// Clock description as written in a scenario; random presets are drawn per node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClockSpec {
    #[default]
    Ideal,
    Ntp,
    Gps,
    Fixed {
        offset_s: f64,
        #[serde(default)]
        drift: f64,
        #[serde(default)]
        jitter_std_s: f64,
    },
}

impl ClockSpec {
    pub fn instantiate(&self, seed: u64) -> ClockModel {
        match *self {
            ClockSpec::Ideal => ClockModel::ideal(),
            ClockSpec::Ntp => ClockModel::ntp(seed),
            ClockSpec::Gps => ClockModel::gps(seed),
            ClockSpec::Fixed {
                offset_s,
                drift,
                jitter_std_s,
            } => ClockModel {
                offset_s,
                drift,
                jitter_std_s,
                seed,
            },
        }
    }
}
