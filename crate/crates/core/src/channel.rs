//! Tapped-delay-line multipath channels, AWGN and synthetic environments.
//!
//! Tap gains are absolute: they fold in the transmit power, so a
//! unit-amplitude reference waveform sent through a channel arrives at the
//! received level, and `sum |gain|^2` is the received power of a unit-power
//! transmission.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::BasebandSignal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub gain: Complex64,
    /// Seconds of excess delay.
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultipathChannel {
    taps: Vec<Tap>,
}

impl MultipathChannel {
    /// Validates: at least one tap, first delay 0, strictly increasing
    /// delays, finite gains with at least one nonzero.
    pub fn new(taps: Vec<Tap>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidChannel("channel has no taps".into()));
        }
        if taps[0].delay != 0.0 {
            return Err(Error::InvalidChannel(format!(
                "first tap delay must be 0, got {}",
                taps[0].delay
            )));
        }
        for (i, t) in taps.iter().enumerate() {
            if !(t.gain.re.is_finite() && t.gain.im.is_finite()) {
                return Err(Error::InvalidChannel(format!("tap {i} gain is not finite")));
            }
            if !t.delay.is_finite() {
                return Err(Error::InvalidChannel(format!("tap {i} delay is not finite")));
            }
            if i > 0 && t.delay <= taps[i - 1].delay {
                return Err(Error::InvalidChannel(format!(
                    "tap {i} delay {} does not exceed tap {} delay {}",
                    t.delay,
                    i - 1,
                    taps[i - 1].delay
                )));
            }
        }
        if taps.iter().all(|t| t.gain.norm_sqr() == 0.0) {
            return Err(Error::InvalidChannel("all tap gains are zero".into()));
        }
        Ok(Self { taps })
    }

    pub fn identity() -> Self {
        Self {
            taps: vec![Tap {
                gain: Complex64::new(1.0, 0.0),
                delay: 0.0,
            }],
        }
    }

    /// Taps at `lag * chip_period` delays; lags must start at 0 and increase.
    pub fn from_chip_lags(taps: &[(usize, Complex64)], chip_period: f64) -> Result<Self> {
        Self::new(
            taps.iter()
                .map(|&(lag, gain)| Tap {
                    gain,
                    delay: lag as f64 * chip_period,
                })
                .collect(),
        )
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(|t| t.gain.norm_sqr()).sum()
    }

    pub fn max_delay(&self) -> f64 {
        self.taps.last().map_or(0.0, |t| t.delay)
    }

    /// Every gain multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            taps: self
                .taps
                .iter()
                .map(|t| Tap {
                    gain: t.gain * factor,
                    delay: t.delay,
                })
                .collect(),
        }
    }

    /// Tap delays as whole samples at `sample_rate`, or the first tap that
    /// falls between samples.
    pub fn sample_delays(&self, sample_rate: f64) -> Result<Vec<usize>> {
        self.taps
            .iter()
            .enumerate()
            .map(|(index, t)| {
                let exact = t.delay * sample_rate;
                let rounded = exact.round();
                if (exact - rounded).abs() > 1e-6 * rounded.max(1.0) {
                    Err(Error::FractionalDelay {
                        index,
                        delay_s: t.delay,
                        period_s: 1.0 / sample_rate,
                    })
                } else {
                    Ok(rounded as usize)
                }
            })
            .collect()
    }

    /// H(f) = sum_l gain_l * exp(-j 2 pi f delay_l).
    pub fn frequency_response(&self, frequency: f64) -> Complex64 {
        self.taps
            .iter()
            .map(|t| t.gain * Complex64::from_polar(1.0, -2.0 * PI * frequency * t.delay))
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_wire()).expect("channel serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: Vec<TapWire> = serde_json::from_str(text)
            .map_err(|e| Error::InvalidChannel(format!("malformed channel JSON: {e}")))?;
        Self::from_wire(&wire)
    }

    pub fn to_wire(&self) -> Vec<TapWire> {
        self.taps
            .iter()
            .map(|t| TapWire {
                gain_re: t.gain.re,
                gain_im: t.gain.im,
                delay_s: t.delay,
            })
            .collect()
    }

    pub fn from_wire(wire: &[TapWire]) -> Result<Self> {
        Self::new(
            wire.iter()
                .map(|t| Tap {
                    gain: Complex64::new(t.gain_re, t.gain_im),
                    delay: t.delay_s,
                })
                .collect(),
        )
    }
}

/// JSON form of one tap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapWire {
    pub gain_re: f64,
    pub gain_im: f64,
    pub delay_s: f64,
}

/// Superposition of scaled, delayed copies of the input. The output is longer
/// than the input by the largest delay in samples.
pub fn apply_channel(signal: &BasebandSignal, channel: &MultipathChannel) -> Result<BasebandSignal> {
    let delays = channel.sample_delays(signal.sample_rate)?;
    let max_delay = *delays.last().expect("channel has taps");
    let mut out = vec![Complex64::new(0.0, 0.0); signal.len() + max_delay];
    for (tap, &d) in channel.taps().iter().zip(&delays) {
        for (o, s) in out[d..].iter_mut().zip(&signal.samples) {
            *o += s * tap.gain;
        }
    }
    Ok(BasebandSignal {
        samples: out,
        sample_rate: signal.sample_rate,
        origin_time: signal.origin_time,
    })
}

/// Circularly symmetric complex Gaussian samples with total variance `power`.
pub fn gaussian_noise(len: usize, power: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = (power / 2.0).sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect()
}

/// Adds complex AWGN of `noise_power_dbfs` (10^(dB/10) total variance).
/// `f64::NEG_INFINITY` leaves the signal untouched.
pub fn add_awgn(signal: &BasebandSignal, noise_power_dbfs: f64, seed: u64) -> BasebandSignal {
    if noise_power_dbfs == f64::NEG_INFINITY {
        return signal.clone();
    }
    let power = 10f64.powf(noise_power_dbfs / 10.0);
    let noise = gaussian_noise(signal.len(), power, seed);
    BasebandSignal {
        samples: signal.samples.iter().zip(noise).map(|(s, n)| s + n).collect(),
        sample_rate: signal.sample_rate,
        origin_time: signal.origin_time,
    }
}

/// Log-distance environment used to synthesize per-link channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentModel {
    /// dB at `reference_distance_m`.
    pub reference_loss_db: f64,
    pub path_loss_exponent: f64,
    pub reference_distance_m: f64,
    /// Mean inter-arrival time and power-decay constant of the echoes, seconds.
    pub delay_spread_scale_s: f64,
    /// Inclusive tap-count range.
    pub tap_count_range: [usize; 2],
    /// Loss per wall crossing when a wall grid is configured.
    #[serde(default)]
    pub wall_loss_db: f64,
    /// Walls every `wall_spacing_m` along x and y; `None` means open space.
    #[serde(default)]
    pub wall_spacing_m: Option<f64>,
    /// Echo delays are snapped to multiples of this (normally the chip period).
    pub delay_grid_s: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl EnvironmentModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::param(name, reason));
        if !(self.path_loss_exponent > 0.0) {
            return bad("path_loss_exponent", format!("must be > 0, got {}", self.path_loss_exponent));
        }
        if !(self.reference_distance_m > 0.0) {
            return bad(
                "reference_distance_m",
                format!("must be > 0, got {}", self.reference_distance_m),
            );
        }
        if !(self.delay_spread_scale_s >= 0.0) {
            return bad(
                "delay_spread_scale_s",
                format!("must be >= 0, got {}", self.delay_spread_scale_s),
            );
        }
        if !(self.delay_grid_s > 0.0) {
            return bad("delay_grid_s", format!("must be > 0, got {}", self.delay_grid_s));
        }
        let [lo, hi] = self.tap_count_range;
        if lo == 0 || lo > hi {
            return bad("tap_count_range", format!("need 1 <= min <= max, got [{lo}, {hi}]"));
        }
        if let Some(s) = self.wall_spacing_m {
            if !(s > 0.0) {
                return bad("wall_spacing_m", format!("must be > 0, got {s}"));
            }
        }
        if !self.reference_loss_db.is_finite() || !self.wall_loss_db.is_finite() {
            return bad("reference_loss_db", "losses must be finite".into());
        }
        Ok(())
    }

    /// Number of grid walls crossed between two points (x and y lines).
    pub fn walls_crossed(&self, a: [f64; 3], b: [f64; 3]) -> u32 {
        match self.wall_spacing_m {
            None => 0,
            Some(s) => {
                let cells = |p: f64| (p / s).floor() as i64;
                ((cells(a[0]) - cells(b[0])).unsigned_abs() + (cells(a[1]) - cells(b[1])).unsigned_abs()) as u32
            }
        }
    }

    /// Model path loss between two positions, dB.
    pub fn path_loss_db(&self, tx: [f64; 3], rx: [f64; 3]) -> f64 {
        let d = distance(tx, rx);
        self.reference_loss_db
            + 10.0 * self.path_loss_exponent * (d / self.reference_distance_m).log10()
            + f64::from(self.walls_crossed(tx, rx)) * self.wall_loss_db
    }
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Draws one channel realization for a link and returns it with the model
/// path loss. Tap delays are 0 followed by exponential inter-arrivals
/// (mean `delay_spread_scale_s`) snapped to `delay_grid_s`; tap powers decay
/// as `exp(-delay / scale)` and are normalized so the total equals the model
/// loss; phases are uniform.
pub fn synthesize_channel(
    env: &EnvironmentModel,
    tx_position: [f64; 3],
    rx_position: [f64; 3],
    seed: u64,
) -> Result<(MultipathChannel, f64)> {
    env.validate()?;
    if distance(tx_position, rx_position) == 0.0 {
        return Err(Error::param("rx_position", "coincides with the transmitter position"));
    }
    let loss_db = env.path_loss_db(tx_position, rx_position);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [lo, hi] = env.tap_count_range;
    let mut count = rng.random_range(lo..=hi);
    let scale = env.delay_spread_scale_s;
    if scale == 0.0 {
        count = 1;
    }

    let grid = env.delay_grid_s;
    let mut slots: Vec<u64> = vec![0];
    if count > 1 {
        let inter = Exp::new(1.0 / scale).expect("positive rate");
        let mut t = 0.0;
        for _ in 1..count {
            t += inter.sample(&mut rng);
            let mut slot = (t / grid).round() as u64;
            let last = *slots.last().expect("nonempty");
            if slot <= last {
                slot = last + 1;
            }
            slots.push(slot);
        }
    }

    let weights: Vec<f64> = slots
        .iter()
        .map(|&s| if scale > 0.0 { (-(s as f64) * grid / scale).exp() } else { 1.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    let target = 10f64.powf(-loss_db / 10.0);
    let taps = slots
        .iter()
        .zip(&weights)
        .map(|(&s, w)| {
            let phase = rng.random_range(0.0..2.0 * PI);
            Tap {
                gain: Complex64::from_polar((w / total * target).sqrt(), phase),
                delay: s as f64 * grid,
            }
        })
        .collect();
    Ok((MultipathChannel::new(taps)?, loss_db))
}
