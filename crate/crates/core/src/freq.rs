//! Stepped-frequency sounding.
//!
//! Transmitters and the receiver step through the same carrier list. At each
//! step transmitter `k` emits a baseband tone at `f_k`; the receiver takes a
//! length-`L` FFT and reads the tone's power from bin `L * f_k / S_r`. Tones
//! must be bin-centered so that a rectangular window over whole bin periods
//! keeps the transmitters exactly orthogonal.
//!
//! A tone is a steady-state complex exponential, so a static multipath channel
//! acts on it as a single complex gain `H(F_c + f_k)`; captures are built that
//! way rather than by time-domain convolution.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::channel::{gaussian_noise, MultipathChannel};
use crate::error::{Error, Result};
use crate::seed;
use crate::signal::BasebandSignal;

/// Power leaking from a tone into nearby frequencies (phase noise and
/// similar front-end imperfections), relative to the tone's own power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSkirt {
    /// Leakage in dBc at `reference_offset_hz` and closer.
    pub level_dbc: f64,
    pub reference_offset_hz: f64,
    /// Roll-off beyond the reference offset, dB per decade (positive).
    pub slope_db_per_decade: f64,
}

impl SpectralSkirt {
    /// Fraction of a tone's power landing `offset_hz` away from it.
    pub fn leakage_fraction(&self, offset_hz: f64) -> f64 {
        let d = offset_hz.abs();
        let db = if d <= self.reference_offset_hz {
            self.level_dbc
        } else {
            self.level_dbc - self.slope_db_per_decade * (d / self.reference_offset_hz).log10()
        };
        10f64.powf(db / 10.0)
    }
}

/// Validated sweep configuration shared by the transmitters and the receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SweepPlanSpec", into = "SweepPlanSpec")]
pub struct SweepPlan {
    carriers_hz: Vec<f64>,
    tone_offsets_hz: Vec<f64>,
    step_duration_s: f64,
    sample_rate_hz: f64,
    fft_length: usize,
    guard_band_hz: f64,
    skirt: Option<SpectralSkirt>,
}

/// Unvalidated form of [`SweepPlan`], as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlanSpec {
    pub carriers_hz: Vec<f64>,
    pub tone_offsets_hz: Vec<f64>,
    pub step_duration_s: f64,
    pub sample_rate_hz: f64,
    pub fft_length: usize,
    pub guard_band_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skirt: Option<SpectralSkirt>,
}

impl TryFrom<SweepPlanSpec> for SweepPlan {
    type Error = Error;

    fn try_from(s: SweepPlanSpec) -> Result<Self> {
        let plan = SweepPlan {
            carriers_hz: s.carriers_hz,
            tone_offsets_hz: s.tone_offsets_hz,
            step_duration_s: s.step_duration_s,
            sample_rate_hz: s.sample_rate_hz,
            fft_length: s.fft_length,
            guard_band_hz: s.guard_band_hz,
            skirt: s.skirt,
        };
        plan.validate()?;
        Ok(plan)
    }
}

impl From<SweepPlan> for SweepPlanSpec {
    fn from(p: SweepPlan) -> Self {
        SweepPlanSpec {
            carriers_hz: p.carriers_hz,
            tone_offsets_hz: p.tone_offsets_hz,
            step_duration_s: p.step_duration_s,
            sample_rate_hz: p.sample_rate_hz,
            fft_length: p.fft_length,
            guard_band_hz: p.guard_band_hz,
            skirt: p.skirt,
        }
    }
}

/// `count` carriers starting at `first_hz`, `spacing_hz` apart.
pub fn uniform_carriers(first_hz: f64, spacing_hz: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| first_hz + i as f64 * spacing_hz).collect()
}

impl SweepPlan {
    pub fn new(
        carriers_hz: Vec<f64>,
        tone_offsets_hz: Vec<f64>,
        step_duration_s: f64,
        sample_rate_hz: f64,
        fft_length: usize,
        guard_band_hz: f64,
    ) -> Result<Self> {
        SweepPlanSpec {
            carriers_hz,
            tone_offsets_hz,
            step_duration_s,
            sample_rate_hz,
            fft_length,
            guard_band_hz,
            skirt: None,
        }
        .try_into()
    }

    pub fn with_skirt(mut self, skirt: Option<SpectralSkirt>) -> Self {
        self.skirt = skirt;
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidPlan(reason));
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return bad(format!("sample_rate_hz must be positive, got {}", self.sample_rate_hz));
        }
        if self.fft_length < 2 {
            return bad(format!("fft_length must be >= 2, got {}", self.fft_length));
        }
        let block = self.fft_length as f64 / self.sample_rate_hz;
        if !(self.step_duration_s >= block) {
            return bad(format!(
                "step_duration_s {} is shorter than one FFT block ({block} s)",
                self.step_duration_s
            ));
        }
        if !(self.guard_band_hz >= 0.0) {
            return bad(format!("guard_band_hz must be >= 0, got {}", self.guard_band_hz));
        }
        if self.carriers_hz.is_empty() {
            return bad("carrier list is empty".into());
        }
        if self.carriers_hz.iter().any(|c| !c.is_finite()) {
            return bad("carrier frequencies must be finite".into());
        }
        if self.carriers_hz.len() > 1 {
            let spacing = self.carriers_hz[1] - self.carriers_hz[0];
            for (i, w) in self.carriers_hz.windows(2).enumerate() {
                let step = w[1] - w[0];
                if !(step > 0.0) {
                    return bad(format!("carriers_hz[{}] does not increase", i + 1));
                }
                if (step - spacing).abs() > 1e-9 * spacing.abs().max(1.0) {
                    return bad(format!(
                        "carriers_hz[{}]: spacing {step} Hz differs from {spacing} Hz",
                        i + 1
                    ));
                }
            }
        }
        if self.tone_offsets_hz.is_empty() {
            return bad("tone offset list is empty".into());
        }
        let half = self.sample_rate_hz / 2.0;
        for (i, &f) in self.tone_offsets_hz.iter().enumerate() {
            if !(f.abs() < half) {
                return bad(format!(
                    "tone_offsets_hz[{i}] = {f} Hz is outside the Nyquist band (+/-{half} Hz)"
                ));
            }
            if !self.on_grid(f) {
                return bad(format!(
                    "tone_offsets_hz[{i}] = {f} Hz is not a multiple of the bin width {} Hz",
                    self.bin_width_hz()
                ));
            }
        }
        for i in 0..self.tone_offsets_hz.len() {
            for j in i + 1..self.tone_offsets_hz.len() {
                let sep = (self.tone_offsets_hz[i] - self.tone_offsets_hz[j]).abs();
                if sep < self.guard_band_hz * (1.0 - 1e-12) {
                    return bad(format!(
                        "tones {i} and {j} are {sep} Hz apart, inside the {} Hz guard band",
                        self.guard_band_hz
                    ));
                }
            }
        }
        Ok(())
    }

    fn on_grid(&self, f: f64) -> bool {
        let k = f * self.fft_length as f64 / self.sample_rate_hz;
        (k - k.round()).abs() < 1e-6
    }

    pub fn carriers_hz(&self) -> &[f64] {
        &self.carriers_hz
    }

    pub fn tone_offsets_hz(&self) -> &[f64] {
        &self.tone_offsets_hz
    }

    pub fn step_duration_s(&self) -> f64 {
        self.step_duration_s
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn fft_length(&self) -> usize {
        self.fft_length
    }

    pub fn guard_band_hz(&self) -> f64 {
        self.guard_band_hz
    }

    pub fn skirt(&self) -> Option<SpectralSkirt> {
        self.skirt
    }

    pub fn step_count(&self) -> usize {
        self.carriers_hz.len()
    }

    /// Carrier spacing; 0 for a single-step plan.
    pub fn carrier_spacing_hz(&self) -> f64 {
        if self.carriers_hz.len() < 2 {
            0.0
        } else {
            self.carriers_hz[1] - self.carriers_hz[0]
        }
    }

    pub fn bin_width_hz(&self) -> f64 {
        self.sample_rate_hz / self.fft_length as f64
    }

    /// FFT bin of a tone: `L f / S_r`, negative offsets wrapping to `L + L f / S_r`.
    pub fn bin_index(&self, tone_offset_hz: f64) -> Result<usize> {
        if !self.on_grid(tone_offset_hz) {
            return Err(Error::OffGridTone {
                offset_hz: tone_offset_hz,
                bin_hz: self.bin_width_hz(),
            });
        }
        let k = (tone_offset_hz * self.fft_length as f64 / self.sample_rate_hz).round() as i64;
        Ok(k.rem_euclid(self.fft_length as i64) as usize)
    }

    fn contains_tone(&self, f: f64) -> bool {
        let tol = 1e-9 * self.bin_width_hz();
        self.tone_offsets_hz.iter().any(|t| (t - f).abs() <= tol)
    }
}

/// Reference sweep: 10 steps of 2 MHz from 700 MHz, 1 MS/s receiver, L = 4096,
/// 25 kHz guard band, and the given tones.
pub fn default_plan(tone_offsets_hz: Vec<f64>) -> Result<SweepPlan> {
    SweepPlan::new(uniform_carriers(700e6, 2e6, 10), tone_offsets_hz, 10e-3, 1e6, 4096, 25e3)
}

/// `amplitude * exp(j 2 pi offset t)` sampled for `round(duration * rate)` samples.
pub fn generate_tone(offset_hz: f64, duration_s: f64, sample_rate_hz: f64, amplitude: f64) -> Result<BasebandSignal> {
    if !(sample_rate_hz > 0.0) {
        return Err(Error::param("sample_rate_hz", "must be positive"));
    }
    let half = sample_rate_hz / 2.0;
    if !(offset_hz.abs() < half) {
        return Err(Error::Aliasing {
            offset_hz,
            half_rate_hz: half,
        });
    }
    let len = (duration_s * sample_rate_hz).round().max(0.0) as usize;
    let w = 2.0 * PI * offset_hz / sample_rate_hz;
    let samples = (0..len)
        .map(|n| Complex64::from_polar(amplitude, w * n as f64))
        .collect();
    BasebandSignal::new(samples, sample_rate_hz, 0.0)
}

/// Received power of each listed tone, `|X[k]|^2 / L^2` averaged over every
/// whole length-`L` block of the capture.
pub fn bin_powers(capture: &BasebandSignal, plan: &SweepPlan, tone_offsets_hz: &[f64]) -> Result<Vec<f64>> {
    let l = plan.fft_length;
    if capture.len() < l {
        return Err(Error::TooShort {
            needed: l,
            actual: capture.len(),
        });
    }
    if (capture.sample_rate - plan.sample_rate_hz).abs() > 1e-9 * plan.sample_rate_hz {
        return Err(Error::param(
            "capture",
            format!(
                "sample rate {} Hz does not match the plan's {} Hz",
                capture.sample_rate, plan.sample_rate_hz
            ),
        ));
    }
    let bins = tone_offsets_hz
        .iter()
        .map(|&f| {
            let bin = plan.bin_index(f)?;
            if !plan.contains_tone(f) {
                return Err(Error::param("tone_offset", format!("{f} Hz is not a tone of this plan")));
            }
            Ok(bin)
        })
        .collect::<Result<Vec<_>>>()?;

    let fft = FftPlanner::new().plan_fft_forward(l);
    let blocks = capture.len() / l;
    let mut acc = vec![0.0; bins.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    for b in 0..blocks {
        buf.copy_from_slice(&capture.samples[b * l..(b + 1) * l]);
        fft.process(&mut buf);
        for (a, &k) in acc.iter_mut().zip(&bins) {
            *a += buf[k].norm_sqr();
        }
    }
    let scale = 1.0 / (blocks as f64 * (l as f64).powi(2));
    Ok(acc.into_iter().map(|a| a * scale).collect())
}

pub fn bin_power(capture: &BasebandSignal, plan: &SweepPlan, tone_offset_hz: f64) -> Result<f64> {
    Ok(bin_powers(capture, plan, &[tone_offset_hz])?[0])
}

/// Per-step narrowband losses of one transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrowbandLossSet {
    pub transmitter_id: u32,
    pub tone_offset_hz: f64,
    pub carriers_hz: Vec<f64>,
    pub per_carrier_loss_db: Vec<f64>,
}

impl NarrowbandLossSet {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("loss set serializes")
    }

    /// Largest minus smallest narrowband loss.
    pub fn variation_db(&self) -> f64 {
        let max = self.per_carrier_loss_db.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.per_carrier_loss_db.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

fn loss_from_power(tx_power_db: f64, power: f64) -> Result<f64> {
    if !(power > 0.0) {
        return Err(Error::NoSignal);
    }
    Ok(tx_power_db - 10.0 * power.log10())
}

/// Single-transmitter sweep: one channel realization per carrier step. The
/// tone is unit amplitude; channel gains carry the absolute level.
pub fn sweep_sound(
    channels: &[MultipathChannel],
    plan: &SweepPlan,
    tx_power_db: f64,
    transmitter_id: u32,
    tone_offset_hz: f64,
) -> Result<NarrowbandLossSet> {
    if channels.len() != plan.step_count() {
        return Err(Error::LengthMismatch {
            expected: plan.step_count(),
            actual: channels.len(),
        });
    }
    plan.bin_index(tone_offset_hz)?;
    let block = plan.fft_length as f64 / plan.sample_rate_hz;
    let tone = generate_tone(tone_offset_hz, block, plan.sample_rate_hz, 1.0)?;
    let per_carrier_loss_db = plan
        .carriers_hz
        .iter()
        .zip(channels)
        .map(|(&fc, ch)| {
            let received = tone.scaled(ch.frequency_response(fc + tone_offset_hz));
            loss_from_power(tx_power_db, bin_power(&received, plan, tone_offset_hz)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NarrowbandLossSet {
        transmitter_id,
        tone_offset_hz,
        carriers_hz: plan.carriers_hz.clone(),
        per_carrier_loss_db,
    })
}

/// A transmitter's tone in a recorded sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToneEntry {
    pub transmitter_id: u32,
    pub tone_offset_hz: f64,
    #[serde(default)]
    pub tx_power_db: f64,
}

/// Narrowband losses of every listed transmitter from one recorded capture
/// per carrier step.
pub fn losses_from_captures(
    plan: &SweepPlan,
    entries: &[ToneEntry],
    captures: &[BasebandSignal],
) -> Result<Vec<NarrowbandLossSet>> {
    if captures.len() != plan.step_count() {
        return Err(Error::LengthMismatch {
            expected: plan.step_count(),
            actual: captures.len(),
        });
    }
    let tones: Vec<f64> = entries.iter().map(|e| e.tone_offset_hz).collect();
    let mut losses = vec![Vec::with_capacity(captures.len()); entries.len()];
    for capture in captures {
        for ((dst, e), p) in losses.iter_mut().zip(entries).zip(bin_powers(capture, plan, &tones)?) {
            dst.push(loss_from_power(e.tx_power_db, p)?);
        }
    }
    Ok(entries
        .iter()
        .zip(losses)
        .map(|(e, per_carrier_loss_db)| NarrowbandLossSet {
            transmitter_id: e.transmitter_id,
            tone_offset_hz: e.tone_offset_hz,
            carriers_hz: plan.carriers_hz.clone(),
            per_carrier_loss_db,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AveragingDomain {
    /// Arithmetic mean of the dB values.
    #[default]
    Db,
    /// Mean of the linear loss factors, converted back to dB.
    Linear,
}

pub fn mean_wideband_path_loss(losses: &NarrowbandLossSet) -> f64 {
    mean_wideband_path_loss_in(losses, AveragingDomain::Db)
}

pub fn mean_wideband_path_loss_in(losses: &NarrowbandLossSet, domain: AveragingDomain) -> f64 {
    let v = &losses.per_carrier_loss_db;
    if v.is_empty() {
        return f64::NAN;
    }
    match domain {
        AveragingDomain::Db => v.iter().sum::<f64>() / v.len() as f64,
        AveragingDomain::Linear => {
            let mean = v.iter().map(|db| 10f64.powf(db / 10.0)).sum::<f64>() / v.len() as f64;
            10.0 * mean.log10()
        }
    }
}

/// 1 / (2 (N - 1) Δf).
pub fn temporal_resolution(plan: &SweepPlan) -> Result<f64> {
    let n = plan.step_count();
    if n < 2 {
        return Err(Error::InvalidPlan("temporal resolution needs at least two steps".into()));
    }
    Ok(1.0 / (2.0 * (n - 1) as f64 * plan.carrier_spacing_hz()))
}

/// One transmitter taking part in a multi-tone sweep.
#[derive(Debug, Clone)]
pub struct ToneEmitter {
    pub transmitter_id: u32,
    pub tone_offset_hz: f64,
    pub tx_power_db: f64,
    /// Absolute channel to the receiver (reused at every step).
    pub channel: MultipathChannel,
    /// Transmitter clock minus true time, seconds.
    pub clock_error_s: f64,
}

/// Receiver-side options for [`measure_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCapture {
    /// Receiver-clock time at which step 0 begins.
    pub start_time_s: f64,
    pub receiver_clock_error_s: f64,
    /// FFT blocks captured per step, centered in the step.
    pub blocks: usize,
    /// `None` for a noiseless receiver.
    pub noise_power_dbfs: Option<f64>,
    pub seed: u64,
}

impl Default for SweepCapture {
    fn default() -> Self {
        Self {
            start_time_s: 0.0,
            receiver_clock_error_s: 0.0,
            blocks: 1,
            noise_power_dbfs: None,
            seed: 0,
        }
    }
}

/// Simultaneous sweep of several tone transmitters. At each step the
/// receiver captures the sum of every tone whose transmitter is on the same
/// carrier at that instant (a transmitter still on a neighboring carrier is
/// far outside the receive band), plus noise; each transmitter's loss is read
/// from its own bin. With a spectral skirt configured, every other tone's
/// leakage at that offset is added to the bin power.
pub fn measure_sweep(plan: &SweepPlan, emitters: &[ToneEmitter], capture: &SweepCapture) -> Result<Vec<NarrowbandLossSet>> {
    for e in emitters {
        if !plan.contains_tone(e.tone_offset_hz) {
            return Err(Error::param(
                "tone_offset",
                format!("transmitter {} uses {} Hz, not a tone of this plan", e.transmitter_id, e.tone_offset_hz),
            ));
        }
    }
    if capture.blocks == 0 {
        return Err(Error::param("blocks", "must be >= 1"));
    }
    let fs = plan.sample_rate_hz;
    let len = plan.fft_length * capture.blocks;
    let capture_s = len as f64 / fs;
    if capture_s > plan.step_duration_s {
        return Err(Error::InvalidPlan(format!(
            "capture of {capture_s} s does not fit in a {} s step",
            plan.step_duration_s
        )));
    }
    let lead = (plan.step_duration_s - capture_s) / 2.0;
    let tones: Vec<f64> = emitters.iter().map(|e| e.tone_offset_hz).collect();
    let mut losses = vec![Vec::with_capacity(plan.step_count()); emitters.len()];

    for (step, &fc) in plan.carriers_hz.iter().enumerate() {
        let rx_start = capture.start_time_s + step as f64 * plan.step_duration_s + lead;
        let true_start = rx_start - capture.receiver_clock_error_s;
        let mut samples = vec![Complex64::new(0.0, 0.0); len];
        let mut received_power = Vec::with_capacity(emitters.len());
        for e in emitters {
            let h = e.channel.frequency_response(fc + e.tone_offset_hz);
            received_power.push(h.norm_sqr());
            let w = 2.0 * PI * e.tone_offset_hz / fs;
            for (n, s) in samples.iter_mut().enumerate() {
                let t_local = true_start + n as f64 / fs + e.clock_error_s;
                let tx_step = ((t_local - capture.start_time_s) / plan.step_duration_s).floor();
                if tx_step == step as f64 {
                    *s += h * Complex64::from_polar(1.0, w * n as f64);
                }
            }
        }
        if let Some(dbfs) = capture.noise_power_dbfs {
            let noise = gaussian_noise(len, 10f64.powf(dbfs / 10.0), seed::mix(capture.seed, &[step as u64]));
            for (s, n) in samples.iter_mut().zip(noise) {
                *s += n;
            }
        }
        let signal = BasebandSignal {
            samples,
            sample_rate: fs,
            origin_time: rx_start,
        };
        let mut powers = bin_powers(&signal, plan, &tones)?;
        if let Some(skirt) = plan.skirt {
            for (j, p) in powers.iter_mut().enumerate() {
                for (k, pk) in received_power.iter().enumerate() {
                    if k != j {
                        *p += pk * skirt.leakage_fraction(tones[j] - tones[k]);
                    }
                }
            }
        }
        for ((dst, e), p) in losses.iter_mut().zip(emitters).zip(powers) {
            dst.push(loss_from_power(e.tx_power_db, p)?);
        }
    }

    Ok(emitters
        .iter()
        .zip(losses)
        .map(|(e, per_carrier_loss_db)| NarrowbandLossSet {
            transmitter_id: e.transmitter_id,
            tone_offset_hz: e.tone_offset_hz,
            carriers_hz: plan.carriers_hz.clone(),
            per_carrier_loss_db,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Tap;

    fn plan(tones: Vec<f64>) -> SweepPlan {
        default_plan(tones).unwrap()
    }

    fn bin_hz() -> f64 {
        1e6 / 4096.0
    }

    /// Direct DFT evaluation at one bin.
    fn dft_bin_power(x: &[Complex64], k: usize) -> f64 {
        let l = x.len();
        let sum: Complex64 = x
            .iter()
            .enumerate()
            .map(|(n, s)| s * Complex64::from_polar(1.0, -2.0 * PI * (k * n) as f64 / l as f64))
            .sum();
        sum.norm_sqr() / (l * l) as f64
    }

    #[test]
    fn dc_tone_is_constant_with_unit_power() {
        let t = generate_tone(0.0, 1e-3, 1e6, 0.7).unwrap();
        assert_eq!(t.len(), 1000);
        assert!(t.samples.iter().all(|s| *s == Complex64::new(0.7, 0.0)));
        let t = generate_tone(123.0 * bin_hz(), 4096.0 / 1e6, 1e6, 2.0).unwrap();
        assert!((t.mean_power() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn whole_cycles_over_one_block() {
        let m = 17.0;
        let t = generate_tone(m * bin_hz(), 4096.0 / 1e6, 1e6, 1.0).unwrap();
        // One sample past the end would wrap back to the first sample.
        let next = Complex64::from_polar(1.0, 2.0 * PI * m * bin_hz() * 4096.0 / 1e6);
        assert!((next - t.samples[0]).norm() < 1e-9);
    }

    #[test]
    fn tone_aliasing_is_rejected() {
        assert!(matches!(generate_tone(0.5e6, 1e-3, 1e6, 1.0), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn bin_power_matches_dft_definition() {
        let f = -300.0 * bin_hz();
        let p = plan(vec![f]);
        let t = generate_tone(f, 4096.0 / 1e6, 1e6, 1.5).unwrap();
        let got = bin_power(&t, &p, f).unwrap();
        let k = p.bin_index(f).unwrap();
        assert_eq!(k, 4096 - 300);
        assert!((got - dft_bin_power(&t.samples, k)).abs() < 1e-9);
        assert!((got - 2.25).abs() < 1e-9);
        let z = BasebandSignal::zeros(4096, 1e6);
        assert_eq!(bin_power(&z, &p, f).unwrap(), 0.0);
    }

    #[test]
    fn off_grid_and_foreign_tones_are_rejected() {
        let p = plan(vec![100.0 * bin_hz()]);
        let t = BasebandSignal::zeros(4096, 1e6);
        assert!(matches!(bin_power(&t, &p, 1000.3), Err(Error::OffGridTone { .. })));
        assert!(bin_power(&t, &p, 200.0 * bin_hz()).is_err());
        assert!(bin_power(&BasebandSignal::zeros(100, 1e6), &p, 100.0 * bin_hz()).is_err());
    }

    #[test]
    fn plan_validation() {
        let ok = |tones| SweepPlan::new(uniform_carriers(700e6, 2e6, 10), tones, 10e-3, 1e6, 4096, 25e3);
        assert!(ok(vec![0.0, 200.0 * bin_hz()]).is_ok());
        // 50 bins = 12.2 kHz < guard
        assert!(ok(vec![0.0, 50.0 * bin_hz()]).is_err());
        assert!(ok(vec![1000.5]).is_err());
        assert!(ok(vec![2048.0 * bin_hz()]).is_err());
        assert!(SweepPlan::new(vec![700e6, 702e6, 705e6], vec![0.0], 10e-3, 1e6, 4096, 0.0).is_err());
        assert!(SweepPlan::new(vec![700e6, 700e6], vec![0.0], 10e-3, 1e6, 4096, 0.0).is_err());
        assert!(SweepPlan::new(vec![700e6], vec![0.0], 1e-3, 1e6, 4096, 0.0).is_err());
    }

    #[test]
    fn plan_json_is_validated_on_load() {
        let p = plan(vec![0.0]);
        let text = serde_json::to_string(&p).unwrap();
        let back: SweepPlan = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        let bad = text.replace("\"guard_band_hz\":25000.0", "\"guard_band_hz\":-1.0");
        assert_ne!(bad, text);
        assert!(serde_json::from_str::<SweepPlan>(&bad).is_err());
    }

    #[test]
    fn flat_channel_gives_tx_power() {
        let p = plan(vec![40.0 * bin_hz()]);
        let chans = vec![MultipathChannel::identity(); 10];
        let set = sweep_sound(&chans, &p, 0.0, 1, 40.0 * bin_hz()).unwrap();
        assert_eq!(set.per_carrier_loss_db.len(), 10);
        assert!(set.per_carrier_loss_db.iter().all(|l| l.abs() < 1e-9));
        assert!(sweep_sound(&chans[..3], &p, 0.0, 1, 40.0 * bin_hz()).is_err());
    }

    #[test]
    fn two_tap_channel_matches_analytic_response() {
        let f = 40.0 * bin_hz();
        let p = plan(vec![f]);
        let ch = MultipathChannel::new(vec![
            Tap { gain: Complex64::new(1.0, 0.0), delay: 0.0 },
            Tap { gain: Complex64::new(1.0, 0.0), delay: 250e-9 },
        ])
        .unwrap();
        let set = sweep_sound(&vec![ch.clone(); 10], &p, 0.0, 1, f).unwrap();
        for (loss, &fc) in set.per_carrier_loss_db.iter().zip(p.carriers_hz()) {
            let want = -20.0 * ch.frequency_response(fc + f).norm().log10();
            assert!((loss - want).abs() < 0.05);
        }
    }

    #[test]
    fn means() {
        let set = |v: Vec<f64>| NarrowbandLossSet {
            transmitter_id: 0,
            tone_offset_hz: 0.0,
            carriers_hz: vec![0.0; v.len()],
            per_carrier_loss_db: v,
        };
        assert_eq!(mean_wideband_path_loss(&set(vec![80.0; 4])), 80.0);
        assert_eq!(mean_wideband_path_loss(&set(vec![70.0, 90.0])), 80.0);
        let lin = mean_wideband_path_loss_in(&set(vec![70.0, 90.0]), AveragingDomain::Linear);
        assert!((lin - 10.0 * ((1e7 + 1e9) / 2.0f64).log10()).abs() < 1e-9);
    }

    #[test]
    fn resolution_formula() {
        let p = plan(vec![0.0]);
        assert!((temporal_resolution(&p).unwrap() - 27.777_777e-9).abs() < 1e-12);
        let two = SweepPlan::new(vec![1e9, 1.001e9], vec![0.0], 10e-3, 1e6, 4096, 0.0).unwrap();
        assert!((temporal_resolution(&two).unwrap() - 500e-9).abs() < 1e-15);
        let wide = SweepPlan::new(uniform_carriers(700e6, 4e6, 10), vec![0.0], 10e-3, 1e6, 4096, 0.0).unwrap();
        assert!((temporal_resolution(&wide).unwrap() * 2.0 - temporal_resolution(&p).unwrap()).abs() < 1e-18);
        let one = SweepPlan::new(vec![1e9], vec![0.0], 10e-3, 1e6, 4096, 0.0).unwrap();
        assert!(temporal_resolution(&one).is_err());
    }

    #[test]
    fn skirt_leakage_shrinks_with_spacing() {
        let s = SpectralSkirt {
            level_dbc: -30.0,
            reference_offset_hz: 1e3,
            slope_db_per_decade: 20.0,
        };
        assert!((s.leakage_fraction(500.0) - 1e-3).abs() < 1e-15);
        assert!((s.leakage_fraction(-10e3) - 1e-5).abs() < 1e-15);
        assert!(s.leakage_fraction(100e3) < s.leakage_fraction(20e3));
    }

    #[test]
    fn desynchronized_transmitter_is_not_heard() {
        let f = 40.0 * bin_hz();
        let p = plan(vec![f]);
        let e = ToneEmitter {
            transmitter_id: 3,
            tone_offset_hz: f,
            tx_power_db: 0.0,
            channel: MultipathChannel::identity(),
            clock_error_s: 0.0,
        };
        let ok = measure_sweep(&p, std::slice::from_ref(&e), &SweepCapture::default()).unwrap();
        assert!(ok[0].per_carrier_loss_db.iter().all(|l| l.abs() < 1e-9));
        // A full step of clock error puts the transmitter on the next carrier.
        let late = ToneEmitter { clock_error_s: -10e-3, ..e };
        assert!(matches!(measure_sweep(&p, &[late], &SweepCapture::default()), Err(Error::NoSignal)));
    }

    #[test]
    fn recorded_two_tone_captures_separate_cleanly() {
        let (f1, f2) = (-120.0 * bin_hz(), 310.0 * bin_hz());
        let p = plan(vec![f1, f2]);
        let entries = [
            ToneEntry { transmitter_id: 1, tone_offset_hz: f1, tx_power_db: 10.0 },
            ToneEntry { transmitter_id: 2, tone_offset_hz: f2, tx_power_db: 0.0 },
        ];
        let captures: Vec<BasebandSignal> = (0..10)
            .map(|i| {
                let a = generate_tone(f1, 4096.0 / 1e6, 1e6, 0.1).unwrap();
                let b = generate_tone(f2, 4096.0 / 1e6, 1e6, 0.01 * (i + 1) as f64).unwrap();
                let samples = a.samples.iter().zip(&b.samples).map(|(x, y)| x + y).collect();
                BasebandSignal::new(samples, 1e6, 0.0).unwrap()
            })
            .collect();
        let sets = losses_from_captures(&p, &entries, &captures).unwrap();
        for (i, (l1, l2)) in sets[0].per_carrier_loss_db.iter().zip(&sets[1].per_carrier_loss_db).enumerate() {
            assert!((l1 - 30.0).abs() < 1e-6);
            assert!((l2 + 20.0 * (0.01 * (i + 1) as f64).log10()).abs() < 1e-6);
        }
        assert!(losses_from_captures(&p, &entries, &captures[..9]).is_err());
    }
}
