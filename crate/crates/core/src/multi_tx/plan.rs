use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::{uniform_carriers, SpectralSkirt, SweepPlan, SweepPlanSpec};

/// Parameters for dividing transmitters into tone plans. Defaults are the
/// Reference sweep (10 steps of 2 MHz from 700 MHz) with a 1 MS/s receiver,
/// L = 4096 and a 25 kHz guard band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrequencyPlanConfig {
    pub first_carrier_hz: f64,
    pub carrier_spacing_hz: f64,
    pub steps: usize,
    pub step_duration_s: f64,
    pub sample_rate_hz: f64,
    pub fft_length: usize,
    pub guard_band_hz: f64,
    /// Spacing between neighboring tones; the guard band when absent.
    pub tone_spacing_hz: Option<f64>,
    /// Upper bound on time frames; `None` allows as many as needed.
    pub max_frames: Option<usize>,
    pub skirt: Option<SpectralSkirt>,
}

impl Default for FrequencyPlanConfig {
    fn default() -> Self {
        Self {
            first_carrier_hz: 700e6,
            carrier_spacing_hz: 2e6,
            steps: 10,
            step_duration_s: 10e-3,
            sample_rate_hz: 1e6,
            fft_length: 4096,
            guard_band_hz: 25e3,
            tone_spacing_hz: None,
            max_frames: None,
            skirt: None,
        }
    }
}

impl FrequencyPlanConfig {
    pub fn carriers_hz(&self) -> Vec<f64> {
        uniform_carriers(self.first_carrier_hz, self.carrier_spacing_hz, self.steps)
    }

    fn bin_hz(&self) -> f64 {
        self.sample_rate_hz / self.fft_length as f64
    }

    /// Tone spacing in whole bins, never below the guard band.
    fn spacing_bins(&self) -> i64 {
        let want = self.tone_spacing_hz.unwrap_or(0.0).max(self.guard_band_hz);
        ((want / self.bin_hz() - 1e-9).ceil() as i64).max(1)
    }

    /// Time taken by one frame's sweep.
    pub fn frame_duration_s(&self) -> f64 {
        self.steps as f64 * self.step_duration_s
    }
}

/// Bin indices of `count` tones laid out symmetrically about DC.
fn tone_bins(count: usize, spacing_bins: i64) -> Vec<i64> {
    (0..count)
        .map(|i| {
            let x = (i as f64 - (count as f64 - 1.0) / 2.0) * spacing_bins as f64;
            x.round() as i64
        })
        .collect()
}

/// Most tones one frame holds: symmetric about DC, `spacing` apart, and
/// each at least half a guard band inside the Nyquist edge.
pub fn frame_capacity(config: &FrequencyPlanConfig) -> usize {
    let sb = config.spacing_bins();
    let edge = config.sample_rate_hz / 2.0 - config.guard_band_hz / 2.0;
    let half_bins = config.fft_length as i64 / 2;
    let fits = |k: usize| {
        tone_bins(k, sb).iter().all(|&b| {
            let f = b as f64 * config.bin_hz();
            f.abs() <= edge && b.abs() < half_bins
        })
    };
    let mut k = 0;
    while k < config.fft_length && fits(k + 1) {
        k += 1;
    }
    k
}

/// Frame and tone of one transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneAssignment {
    pub transmitter_index: usize,
    pub frame: usize,
    pub tone_offset_hz: f64,
}

/// Transmitters split across time frames, each frame a validated sweep plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPlan {
    pub capacity_per_frame: usize,
    pub frames: Vec<SweepPlan>,
    pub assignments: Vec<ToneAssignment>,
}

/// Assigns `k` transmitters bin-centered tones. When `k` exceeds one frame's
/// capacity the transmitters are spread evenly over the fewest frames that
/// hold them; frames sweep one after another.
pub fn build_frequency_plan(k: usize, config: &FrequencyPlanConfig) -> Result<FrequencyPlan> {
    if k == 0 {
        return Err(Error::param("transmitter_count", "must be >= 1"));
    }
    if !(config.sample_rate_hz > 0.0) || config.fft_length < 2 {
        return Err(Error::InvalidPlan("sample_rate_hz and fft_length must be positive".into()));
    }
    let capacity = frame_capacity(config);
    if capacity == 0 {
        return Err(Error::PlanCapacity {
            requested: k,
            capacity,
            max_frames: config.max_frames,
        });
    }
    let frames_needed = k.div_ceil(capacity);
    if config.max_frames.is_some_and(|m| frames_needed > m) {
        return Err(Error::PlanCapacity {
            requested: k,
            capacity,
            max_frames: config.max_frames,
        });
    }
    let per_frame = k.div_ceil(frames_needed);
    let sb = config.spacing_bins();
    let mut frames = Vec::with_capacity(frames_needed);
    let mut assignments = Vec::with_capacity(k);
    for f in 0..frames_needed {
        let members: Vec<usize> = (f * per_frame..((f + 1) * per_frame).min(k)).collect();
        let tones: Vec<f64> = tone_bins(members.len(), sb)
            .into_iter()
            .map(|b| b as f64 * config.bin_hz())
            .collect();
        for (&i, &tone) in members.iter().zip(&tones) {
            assignments.push(ToneAssignment {
                transmitter_index: i,
                frame: f,
                tone_offset_hz: tone,
            });
        }
        let plan: SweepPlan = SweepPlanSpec {
            carriers_hz: config.carriers_hz(),
            tone_offsets_hz: tones,
            step_duration_s: config.step_duration_s,
            sample_rate_hz: config.sample_rate_hz,
            fft_length: config.fft_length,
            guard_band_hz: config.guard_band_hz,
            skirt: config.skirt,
        }
        .try_into()?;
        frames.push(plan);
    }
    Ok(FrequencyPlan {
        capacity_per_frame: capacity,
        frames,
        assignments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wide_guard() -> FrequencyPlanConfig {
        FrequencyPlanConfig {
            guard_band_hz: 150e3,
            ..Default::default()
        }
    }

    #[test]
    fn wide_guard_band_holds_five_or_six() {
        let cap = frame_capacity(&wide_guard());
        assert!((5..=6).contains(&cap), "capacity {cap}");
    }

    #[test]
    fn single_transmitter_gets_one_tone() {
        let p = build_frequency_plan(1, &FrequencyPlanConfig::default()).unwrap();
        assert_eq!(p.frames.len(), 1);
        assert_eq!(p.frames[0].tone_offsets_hz(), &[0.0]);
    }

    #[test]
    fn twelve_transmitters_take_two_frames() {
        let cfg = wide_guard();
        let cap = frame_capacity(&cfg);
        let p = build_frequency_plan(12, &cfg).unwrap();
        assert_eq!(p.frames.len(), 12usize.div_ceil(cap));
        assert_eq!(cap, 6);
        assert!(p.frames.iter().all(|f| f.tone_offsets_hz().len() == 6));
        assert_eq!(p.assignments.len(), 12);
        assert!(p.assignments.windows(2).all(|w| w[0].transmitter_index + 1 == w[1].transmitter_index));
    }

    #[test]
    fn frame_limit_is_enforced() {
        let cfg = FrequencyPlanConfig {
            max_frames: Some(1),
            ..wide_guard()
        };
        match build_frequency_plan(7, &cfg) {
            Err(Error::PlanCapacity { capacity, requested, .. }) => {
                assert_eq!((capacity, requested), (6, 7));
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
        assert!(build_frequency_plan(0, &cfg).is_err());
    }

    #[test]
    fn tones_respect_guard_band_and_grid() {
        for k in 1..=40 {
            let cfg = FrequencyPlanConfig::default();
            let p = build_frequency_plan(k, &cfg).unwrap();
            for f in &p.frames {
                let t = f.tone_offsets_hz();
                for i in 0..t.len() {
                    assert!(t[i].abs() < cfg.sample_rate_hz / 2.0);
                    for j in i + 1..t.len() {
                        assert!((t[i] - t[j]).abs() >= cfg.guard_band_hz);
                    }
                }
            }
        }
    }

    #[test]
    fn impossible_guard_band() {
        let cfg = FrequencyPlanConfig {
            guard_band_hz: 3e6,
            ..Default::default()
        };
        assert!(matches!(build_frequency_plan(1, &cfg), Err(Error::PlanCapacity { capacity: 0, .. })));
    }
}
