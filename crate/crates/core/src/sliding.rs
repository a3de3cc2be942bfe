//! Sliding-correlator receiver.
//!
//! Symbol-rate captures are folded over `M` PN periods (coherent averaging),
//! circularly correlated against the chip sequence, and every lag standing
//! out of the correlation floor becomes a tap. Because the off-peak
//! correlation of an m-sequence is exactly `-1/N`, each tap estimate is
//! biased by `-(1/N)` times the sum of the other taps; that bias is removed
//! by solving the small linear system over the detected lags.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pn::{default_taps, ChipSequence, Correlator, CorrelationProfile, DEFAULT_DEGREE10_TAPS};
use crate::pulse::{
    self, design_rrc, fold_periods, modulate, periodic_waveform, recover_from_samples, FilterTaps,
};
use crate::signal::BasebandSignal;

/// Tap acceptance also requires standing this many floor standard deviations
/// above the floor mean.
pub const FLOOR_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    pub rolloff: f64,
    pub span_symbols: usize,
    pub samples_per_symbol: usize,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            rolloff: pulse::DEFAULT_ROLLOFF,
            span_symbols: pulse::DEFAULT_SPAN_SYMBOLS,
            samples_per_symbol: pulse::DEFAULT_SAMPLES_PER_SYMBOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SounderConfig {
    /// Chip period T_s in seconds.
    pub chip_period_s: f64,
    pub pn_degree: u32,
    /// Feedback polynomial below x^degree; `None` picks the tabulated one.
    pub pn_taps: Option<u32>,
    /// Number of PN periods averaged, M.
    pub averaging_periods: usize,
    /// Taps weaker than this many dB below the strongest are dropped.
    pub detection_threshold_db: f64,
    pub tx_power_db: f64,
    /// Report lags relative to the earliest detected arrival.
    pub align_to_first_arrival: bool,
    pub pulse: PulseConfig,
}

impl Default for SounderConfig {
    fn default() -> Self {
        Self {
            chip_period_s: 60e-9,
            pn_degree: 10,
            pn_taps: None,
            averaging_periods: 10,
            detection_threshold_db: 30.0,
            tx_power_db: 0.0,
            align_to_first_arrival: true,
            pulse: PulseConfig::default(),
        }
    }
}

impl SounderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.chip_period_s > 0.0 && self.chip_period_s.is_finite()) {
            return Err(Error::param("chip_period_s", format!("must be > 0, got {}", self.chip_period_s)));
        }
        if self.averaging_periods == 0 {
            return Err(Error::param("averaging_periods", "must be >= 1"));
        }
        if !(self.detection_threshold_db > 0.0) {
            return Err(Error::param(
                "detection_threshold_db",
                format!("must be > 0, got {}", self.detection_threshold_db),
            ));
        }
        if !self.tx_power_db.is_finite() {
            return Err(Error::param("tx_power_db", "must be finite"));
        }
        Ok(())
    }

    pub fn chip_sequence(&self) -> Result<ChipSequence> {
        let taps = match self.pn_taps {
            Some(t) => t,
            None if self.pn_degree == 10 => DEFAULT_DEGREE10_TAPS,
            None => default_taps(self.pn_degree).ok_or_else(|| {
                Error::param("pn_degree", format!("no tabulated polynomial for degree {}", self.pn_degree))
            })?,
        };
        ChipSequence::generate(self.pn_degree, taps, 1)
    }

    pub fn filter_taps(&self) -> Result<FilterTaps> {
        design_rrc(self.pulse.rolloff, self.pulse.span_symbols, self.pulse.samples_per_symbol)
    }

    pub fn sample_rate(&self) -> f64 {
        self.pulse.samples_per_symbol as f64 / self.chip_period_s
    }

    /// Longest delay measurable without aliasing: N * T_s.
    pub fn unambiguous_delay(&self) -> f64 {
        ((1u64 << self.pn_degree) - 1) as f64 * self.chip_period_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileTap {
    /// Chips of excess delay.
    pub lag: usize,
    pub gain: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfile {
    pub taps: Vec<ProfileTap>,
    pub chip_period: f64,
    pub wideband_path_loss_db: f64,
    pub rms_delay_spread: f64,
}

impl DelayProfile {
    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(|t| t.gain.norm_sqr()).sum()
    }

    pub fn to_wire(&self) -> DelayProfileWire {
        DelayProfileWire {
            chip_period_s: self.chip_period,
            taps: self
                .taps
                .iter()
                .map(|t| ProfileTapWire {
                    lag: t.lag,
                    gain_re: t.gain.re,
                    gain_im: t.gain.im,
                })
                .collect(),
            path_loss_db: self.wideband_path_loss_db,
            rms_delay_spread_s: self.rms_delay_spread,
        }
    }

    pub fn from_wire(wire: &DelayProfileWire) -> Self {
        Self {
            taps: wire
                .taps
                .iter()
                .map(|t| ProfileTap {
                    lag: t.lag,
                    gain: Complex64::new(t.gain_re, t.gain_im),
                })
                .collect(),
            chip_period: wire.chip_period_s,
            wideband_path_loss_db: wire.path_loss_db,
            rms_delay_spread: wire.rms_delay_spread_s,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_wire()).expect("profile serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTapWire {
    pub lag: usize,
    pub gain_re: f64,
    pub gain_im: f64,
}

/// JSON form of a [`DelayProfile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayProfileWire {
    pub chip_period_s: f64,
    pub taps: Vec<ProfileTapWire>,
    pub path_loss_db: f64,
    pub rms_delay_spread_s: f64,
}

/// tx_power_db - 10 log10(sum |gain|^2).
pub fn wideband_path_loss(taps: &[ProfileTap], tx_power_db: f64) -> Result<f64> {
    if taps.is_empty() {
        return Err(Error::param("taps", "at least one tap is required"));
    }
    let total: f64 = taps.iter().map(|t| t.gain.norm_sqr()).sum();
    if !(total > 0.0) {
        return Err(Error::param("taps", "total tap power is zero"));
    }
    Ok(tx_power_db - 10.0 * total.log10())
}

/// Square root of the second central moment of the power-delay profile.
pub fn rms_delay_spread(taps: &[ProfileTap], chip_period: f64) -> f64 {
    let total: f64 = taps.iter().map(|t| t.gain.norm_sqr()).sum();
    if taps.len() < 2 || !(total > 0.0) {
        return 0.0;
    }
    let mean = taps
        .iter()
        .map(|t| t.gain.norm_sqr() * t.lag as f64 * chip_period)
        .sum::<f64>()
        / total;
    let var = taps
        .iter()
        .map(|t| t.gain.norm_sqr() * (t.lag as f64 * chip_period - mean).powi(2))
        .sum::<f64>()
        / total;
    var.max(0.0).sqrt()
}

/// Correlation of the first `periods` PN periods of `symbols`, averaged.
pub fn averaged_correlation(
    symbols: &[Complex64],
    correlator: &Correlator,
    periods: usize,
) -> Result<CorrelationProfile> {
    let n = correlator.len();
    if periods == 0 {
        return Err(Error::param("averaging_periods", "must be >= 1"));
    }
    if symbols.len() < periods * n {
        return Err(Error::TooShort {
            needed: periods * n,
            actual: symbols.len(),
        });
    }
    correlator.correlate(&fold_periods(symbols, n, periods))
}

/// Lags that stand out of the correlation floor, in increasing order.
fn detect_lags(values: &[Complex64], threshold_db: f64) -> Vec<usize> {
    let n = values.len();
    let rel = 10f64.powf(-threshold_db / 20.0);
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Vec::new();
    }
    // Start from the single strongest lag and grow the set until the floor
    // statistics (computed without the accepted lags) stop changing it.
    let mut accepted = vec![false; n];
    accepted[CorrelationProfile::peak_of(values)] = true;
    for _ in 0..32 {
        let (mut sum, mut count) = (Complex64::new(0.0, 0.0), 0usize);
        for (v, _) in values.iter().zip(&accepted).filter(|(_, &a)| !a) {
            sum += v;
            count += 1;
        }
        let (mu, sigma) = if count == 0 {
            (Complex64::new(0.0, 0.0), 0.0)
        } else {
            let mu = sum / count as f64;
            let var = values
                .iter()
                .zip(&accepted)
                .filter(|(_, &a)| !a)
                .map(|(v, _)| (v - mu).norm_sqr())
                .sum::<f64>()
                / count as f64;
            (mu, var.sqrt())
        };
        let strongest = values.iter().map(|v| (v - mu).norm()).fold(0.0, f64::max);
        let cut = (rel * strongest).max(FLOOR_SIGMAS * sigma);
        let next: Vec<bool> = values.iter().map(|v| (v - mu).norm() > cut).collect();
        if next == accepted {
            break;
        }
        accepted = next;
    }
    (0..n).filter(|&i| accepted[i]).collect()
}

/// Removes the `-1/N` sidelobe contribution of the other detected taps:
/// solves `R_D = ((1 + 1/N) I - (1/N) J) a` over the detected set.
fn debias(values: &[Complex64], lags: &[usize]) -> Vec<Complex64> {
    let n = values.len() as f64;
    let k = lags.len() as f64;
    let sum: Complex64 = lags.iter().map(|&l| values[l]).sum();
    let shared = sum / (n + 1.0 - k);
    lags.iter()
        .map(|&l| (values[l] + shared) * (n / (n + 1.0)))
        .collect()
}

/// Rotates lags so the earliest arrival (the tap after the largest circular
/// gap) sits at lag 0. Ties keep the unrotated order.
fn align_first_arrival(taps: &mut [ProfileTap], n: usize) {
    if taps.len() < 2 {
        if let Some(t) = taps.first_mut() {
            t.lag = 0;
        }
        return;
    }
    let last = taps.len() - 1;
    let mut best_start = 0;
    let mut best_gap = taps[0].lag + n - taps[last].lag;
    for i in 0..last {
        let gap = taps[i + 1].lag - taps[i].lag;
        if gap > best_gap {
            best_gap = gap;
            best_start = i + 1;
        }
    }
    let origin = taps[best_start].lag;
    for t in taps.iter_mut() {
        t.lag = (t.lag + n - origin) % n;
    }
    taps.sort_by_key(|t| t.lag);
}

fn profile_from_correlation(profile: &CorrelationProfile, config: &SounderConfig) -> Result<DelayProfile> {
    let values = profile.values();
    let lags = detect_lags(values, config.detection_threshold_db);
    if lags.is_empty() {
        return Err(Error::NoSignal);
    }
    let gains = debias(values, &lags);
    let mut taps: Vec<ProfileTap> = lags
        .iter()
        .zip(gains)
        .map(|(&lag, gain)| ProfileTap { lag, gain })
        .collect();
    if config.align_to_first_arrival {
        align_first_arrival(&mut taps, values.len());
    }
    let wideband_path_loss_db = wideband_path_loss(&taps, config.tx_power_db).map_err(|_| Error::NoSignal)?;
    let rms = rms_delay_spread(&taps, config.chip_period_s);
    Ok(DelayProfile {
        taps,
        chip_period: config.chip_period_s,
        wideband_path_loss_db,
        rms_delay_spread: rms,
    })
}

/// Sounds one symbol-rate capture: averages the first `M` periods and
/// extracts the delay profile.
pub fn sound(symbols: &[Complex64], chips: &ChipSequence, config: &SounderConfig) -> Result<DelayProfile> {
    config.validate()?;
    let correlator = Correlator::new(chips);
    let profile = averaged_correlation(symbols, &correlator, config.averaging_periods)?;
    profile_from_correlation(&profile, config)
}

/// Transmit and receive chain for one sounder configuration.
pub struct SlidingSounder {
    config: SounderConfig,
    chips: ChipSequence,
    taps: FilterTaps,
    correlator: Correlator,
}

/// Timing acquired from a capture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Acquisition {
    pub phase: usize,
    /// Symbol index where the averaging window starts.
    pub window_start: usize,
    /// Lag of the strongest path before alignment.
    pub coarse_lag: usize,
}

impl SlidingSounder {
    pub fn new(config: SounderConfig) -> Result<Self> {
        config.validate()?;
        let chips = config.chip_sequence()?;
        let taps = config.filter_taps()?;
        let correlator = Correlator::new(&chips);
        Ok(Self {
            config,
            chips,
            taps,
            correlator,
        })
    }

    pub fn config(&self) -> &SounderConfig {
        &self.config
    }

    pub fn chips(&self) -> &ChipSequence {
        &self.chips
    }

    pub fn filter_taps(&self) -> &FilterTaps {
        &self.taps
    }

    pub fn sample_rate(&self) -> f64 {
        self.config.sample_rate()
    }

    /// Samples per PN period.
    pub fn period_samples(&self) -> usize {
        self.chips.len() * self.taps.samples_per_symbol()
    }

    pub fn transmit(&self, periods: usize) -> Result<BasebandSignal> {
        modulate(&self.chips, periods, &self.taps, self.config.chip_period_s)
    }

    pub fn periodic_waveform(&self) -> Vec<Complex64> {
        periodic_waveform(&self.chips, &self.taps)
    }

    /// Phase search, symbol recovery, and choice of an averaging window that
    /// starts on the strongest path. One leading period is skipped when the
    /// capture is long enough, so channel start-up transients stay out.
    pub fn acquire(&self, samples: &[Complex64]) -> Result<(Acquisition, Vec<Complex64>)> {
        let phase = pulse::estimate_phase_from_samples(samples, &self.correlator, &self.taps)?;
        let symbols = recover_from_samples(samples, &self.taps, phase)?;
        let n = self.chips.len();
        let m = self.config.averaging_periods;
        let coarse = self
            .correlator
            .correlate(&fold_periods(&symbols, n, symbols.len() / n))?;
        let coarse_lag = coarse.peak_lag();
        let window_start = if symbols.len() >= n + coarse_lag + m * n {
            n + coarse_lag
        } else if symbols.len() >= coarse_lag + m * n {
            coarse_lag
        } else {
            return Err(Error::TooShort {
                needed: (coarse_lag + m * n) * self.taps.samples_per_symbol() + self.taps.len(),
                actual: samples.len(),
            });
        };
        Ok((
            Acquisition {
                phase,
                window_start,
                coarse_lag,
            },
            symbols,
        ))
    }

    /// Full receive chain on a raw capture.
    pub fn measure(&self, samples: &[Complex64]) -> Result<DelayProfile> {
        let (acq, symbols) = self.acquire(samples)?;
        let profile = averaged_correlation(
            &symbols[acq.window_start..],
            &self.correlator,
            self.config.averaging_periods,
        )?;
        profile_from_correlation(&profile, &self.config)
    }
}
