use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::channel::{gaussian_noise, MultipathChannel};
use crate::error::{Error, Result};
use crate::signal::BasebandSignal;
use crate::Complex64;

use super::schedule::TdmaSchedule;

/// Where a transmitter sits outside its own slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Parking {
    /// Tuned to the sounding band, emitting a null source.
    #[default]
    InBandNull,
    /// Retuned to an unused band at minimum power.
    OffBand,
}

/// Leakage of parked transmitters, as attenuation in dB below their nominal
/// power. `None` means nothing leaks. Leakage is the transmitter's own
/// waveform, attenuated, through its own channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct LeakageModel {
    pub parked_leakage_db: Option<f64>,
    pub inband_null_leakage_db: Option<f64>,
    pub parking: Parking,
}

impl LeakageModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("parked_leakage_db", self.parked_leakage_db),
            ("inband_null_leakage_db", self.inband_null_leakage_db),
        ] {
            if let Some(db) = v {
                if !(db >= 0.0) {
                    return Err(Error::param(name, format!("attenuation must be >= 0 dB, got {db}")));
                }
            }
        }
        Ok(())
    }

    /// Attenuation in effect for the configured parking mode.
    pub fn active_attenuation_db(&self) -> Option<f64> {
        match self.parking {
            Parking::InBandNull => self.inband_null_leakage_db,
            Parking::OffBand => self.parked_leakage_db,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SceneTransmitter {
    /// One period of the transmitter's endlessly repeated baseband waveform.
    pub waveform: Arc<Vec<Complex64>>,
    /// Absolute channel to the receiver; delays must be whole samples.
    pub channel: MultipathChannel,
    /// Transmitter clock minus true time over the composed window.
    pub clock_error_s: f64,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub sample_rate: f64,
    pub transmitters: Vec<SceneTransmitter>,
    pub leakage: LeakageModel,
    pub noise_power_dbfs: Option<f64>,
    pub noise_seed: u64,
}

/// `len` samples starting at sample `start` of the true-time grid `n / fs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleWindow {
    pub start: i64,
    pub len: usize,
}

/// Received samples over `window`. Transmitter `k` emits sample
/// `waveform[(s + d_k) mod P]` at true sample `s`, with `d_k` its clock error
/// in whole samples, at full amplitude while its own clock places it in its
/// slot and at the leakage level otherwise. Only the window is synthesized,
/// so hour-long schedules cost no more than the capture itself.
pub fn compose_received(scene: &Scene, schedule: &TdmaSchedule, window: SampleWindow) -> Result<BasebandSignal> {
    if scene.transmitters.len() != schedule.transmitter_count() {
        return Err(Error::LengthMismatch {
            expected: schedule.transmitter_count(),
            actual: scene.transmitters.len(),
        });
    }
    scene.leakage.validate()?;
    let fs = scene.sample_rate;
    let leak = scene
        .leakage
        .active_attenuation_db()
        .map(|db| 10f64.powf(-db / 20.0));
    let mut out = vec![Complex64::new(0.0, 0.0); window.len];

    for (k, tx) in scene.transmitters.iter().enumerate() {
        let period = tx.waveform.len();
        if period == 0 {
            return Err(Error::param("waveform", format!("transmitter {k} has an empty waveform")));
        }
        let delays = tx.channel.sample_delays(fs)?;
        let shift = (tx.clock_error_s * fs).round() as i64;
        for (tap, &d) in tx.channel.taps().iter().zip(&delays) {
            for (n, o) in out.iter_mut().enumerate() {
                let local = window.start + n as i64 - d as i64 + shift;
                let w = tx.waveform[local.rem_euclid(period as i64) as usize];
                if schedule.active_transmitter(local as f64 / fs) == k {
                    *o += tap.gain * w;
                } else if let Some(a) = leak {
                    *o += tap.gain * a * w;
                }
            }
        }
    }

    if let Some(dbfs) = scene.noise_power_dbfs {
        let noise = gaussian_noise(window.len, 10f64.powf(dbfs / 10.0), scene.noise_seed);
        for (o, n) in out.iter_mut().zip(noise) {
            *o += n;
        }
    }
    BasebandSignal::new(out, fs, window.start as f64 / fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_channel, Tap};
    use crate::pn::ChipSequence;
    use crate::pulse::{design_rrc, modulate, periodic_waveform};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn constant_tx(value: f64) -> SceneTransmitter {
        SceneTransmitter {
            waveform: Arc::new(vec![c(value)]),
            channel: MultipathChannel::identity(),
            clock_error_s: 0.0,
        }
    }

    fn scene(txs: Vec<SceneTransmitter>, leakage: LeakageModel) -> Scene {
        Scene {
            sample_rate: 1000.0,
            transmitters: txs,
            leakage,
            noise_power_dbfs: None,
            noise_seed: 0,
        }
    }

    #[test]
    fn ideal_tdma_slots_hold_only_their_owner() {
        let sched = TdmaSchedule::new(3, 0.1, 1).unwrap();
        let s = scene(vec![constant_tx(1.0), constant_tx(2.0), constant_tx(4.0)], LeakageModel::none());
        let rx = compose_received(&s, &sched, SampleWindow { start: 0, len: 300 }).unwrap();
        for (n, v) in rx.samples.iter().enumerate() {
            assert_eq!(v.re, [1.0, 2.0, 4.0][n / 100]);
        }
    }

    #[test]
    fn leakage_follows_parking_mode() {
        let sched = TdmaSchedule::new(2, 0.1, 1).unwrap();
        let mut leak = LeakageModel {
            parked_leakage_db: None,
            inband_null_leakage_db: Some(20.0),
            parking: Parking::InBandNull,
        };
        let s = scene(vec![constant_tx(1.0), constant_tx(1.0)], leak);
        let rx = compose_received(&s, &sched, SampleWindow { start: 0, len: 1 }).unwrap();
        assert!((rx.samples[0].re - 1.1).abs() < 1e-12);
        leak.parking = Parking::OffBand;
        let s = scene(vec![constant_tx(1.0), constant_tx(1.0)], leak);
        let rx = compose_received(&s, &sched, SampleWindow { start: 0, len: 1 }).unwrap();
        assert_eq!(rx.samples[0].re, 1.0);
    }

    #[test]
    fn transmitter_clock_error_moves_its_slot() {
        let sched = TdmaSchedule::new(2, 0.1, 1).unwrap();
        let mut late = constant_tx(2.0);
        late.clock_error_s = -0.01;
        let s = scene(vec![constant_tx(1.0), late], LeakageModel::none());
        let rx = compose_received(&s, &sched, SampleWindow { start: 95, len: 20 }).unwrap();
        // Transmitter 1 believes it is 10 ms earlier, so it starts 10 ms late.
        assert_eq!(rx.samples[4].re, 1.0);
        assert_eq!(rx.samples[5].re, 0.0);
        assert_eq!(rx.samples[15].re, 2.0);
    }

    #[test]
    fn single_transmitter_reduces_to_apply_channel() {
        let chips = ChipSequence::m_sequence(5).unwrap();
        let taps = design_rrc(0.35, 10, 4).unwrap();
        let chip_period = 1e-6;
        let fs = 4.0 / chip_period;
        let ch = MultipathChannel::new(vec![
            Tap { gain: c(0.8), delay: 0.0 },
            Tap { gain: Complex64::new(0.1, -0.3), delay: 3e-6 },
        ])
        .unwrap();
        let tx = modulate(&chips, 4, &taps, chip_period).unwrap();
        let direct = apply_channel(&tx, &ch).unwrap();
        let s = Scene {
            sample_rate: fs,
            transmitters: vec![SceneTransmitter {
                waveform: Arc::new(periodic_waveform(&chips, &taps)),
                channel: ch,
                clock_error_s: 0.0,
            }],
            leakage: LeakageModel::none(),
            noise_power_dbfs: None,
            noise_seed: 0,
        };
        let sched = TdmaSchedule::new(1, 1.0, 1).unwrap();
        let rx = compose_received(&s, &sched, SampleWindow { start: 0, len: 400 }).unwrap();
        let half = taps.half();
        // Skip the start-up transient of the finite transmission.
        for n in 100..400 {
            assert!((rx.samples[n] - direct.samples[n + half]).norm() < 1e-12, "sample {n}");
        }
    }

    #[test]
    fn noise_is_seeded() {
        let sched = TdmaSchedule::new(1, 1.0, 1).unwrap();
        let mut s = scene(vec![constant_tx(0.0)], LeakageModel::none());
        s.noise_power_dbfs = Some(-10.0);
        s.noise_seed = 5;
        let w = SampleWindow { start: 10, len: 64 };
        let a = compose_received(&s, &sched, w).unwrap();
        assert_eq!(a.samples, compose_received(&s, &sched, w).unwrap().samples);
        s.noise_seed = 6;
        assert_ne!(a.samples, compose_received(&s, &sched, w).unwrap().samples);
    }

    #[test]
    fn negative_attenuation_is_rejected() {
        let l = LeakageModel {
            inband_null_leakage_db: Some(-3.0),
            ..LeakageModel::none()
        };
        assert!(l.validate().is_err());
    }
}
