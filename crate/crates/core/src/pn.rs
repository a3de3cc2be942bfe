//! Maximal-length pseudo-noise sequences and circular correlation.
//!
//! The generator is a Galois LFSR: each step multiplies the register (viewed
//! as a polynomial over GF(2)) by `x` modulo the feedback polynomial, so a
//! primitive polynomial walks through every nonzero state exactly once per
//! period. The emitted bit is the register bit that overflows on each step;
//! bit 1 maps to chip -1 and bit 0 to chip +1.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest register length accepted by [`Glfsr`].
pub const MAX_DEGREE: u32 = 24;

/// Feedback polynomial used when none is configured: x^10 + x^3 + 1.
pub const DEFAULT_DEGREE10_TAPS: u32 = 0x009;

/// Lower-term masks (the x^degree term is implicit) of one primitive
/// polynomial per degree, indexed by `degree - 2`.
const PRIMITIVE_TAPS: [u32; 23] = [
    0x3,    // 2: x^2 + x + 1
    0x3,    // 3: x^3 + x + 1
    0x3,    // 4: x^4 + x + 1
    0x5,    // 5: x^5 + x^2 + 1
    0x3,    // 6: x^6 + x + 1
    0x3,    // 7: x^7 + x + 1
    0x1d,   // 8: x^8 + x^4 + x^3 + x^2 + 1
    0x11,   // 9: x^9 + x^4 + 1
    DEFAULT_DEGREE10_TAPS,
    0x5,    // 11: x^11 + x^2 + 1
    0x53,   // 12: x^12 + x^6 + x^4 + x + 1
    0x1b,   // 13: x^13 + x^4 + x^3 + x + 1
    0x443,  // 14: x^14 + x^10 + x^6 + x + 1
    0x3,    // 15: x^15 + x + 1
    0x100b, // 16: x^16 + x^12 + x^3 + x + 1
    0x9,    // 17: x^17 + x^3 + 1
    0x81,   // 18: x^18 + x^7 + 1
    0x27,   // 19: x^19 + x^5 + x^2 + x + 1
    0x9,    // 20: x^20 + x^3 + 1
    0x5,    // 21: x^21 + x^2 + 1
    0x3,    // 22: x^22 + x + 1
    0x21,   // 23: x^23 + x^5 + 1
    0x87,   // 24: x^24 + x^7 + x^2 + x + 1
];

/// Tabulated primitive feedback taps for `degree`, if one is known.
pub fn default_taps(degree: u32) -> Option<u32> {
    if (2..=MAX_DEGREE).contains(&degree) {
        Some(PRIMITIVE_TAPS[(degree - 2) as usize])
    } else {
        None
    }
}

/// Galois-form linear feedback shift register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glfsr {
    degree: u32,
    taps: u32,
    state: u32,
}

impl Glfsr {
    /// `taps` holds the polynomial coefficients below x^degree; bit `k` is the
    /// coefficient of x^k.
    pub fn new(degree: u32, taps: u32, seed_state: u32) -> Result<Self> {
        if !(2..=MAX_DEGREE).contains(&degree) {
            return Err(Error::param(
                "degree",
                format!("must be in 2..={MAX_DEGREE}, got {degree}"),
            ));
        }
        let mask = (1u32 << degree) - 1;
        if taps & !mask != 0 {
            return Err(Error::param(
                "taps",
                format!("mask {taps:#x} has bits at or above x^{degree}"),
            ));
        }
        if seed_state == 0 {
            return Err(Error::param("seed_state", "register seed must be nonzero"));
        }
        if seed_state & !mask != 0 {
            return Err(Error::param(
                "seed_state",
                format!("seed {seed_state:#x} does not fit in {degree} bits"),
            ));
        }
        Ok(Self {
            degree,
            taps,
            state: seed_state,
        })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn state(&self) -> u32 {
        self.state
    }

    /// Advances one step and returns the overflowing bit.
    pub fn step(&mut self) -> bool {
        let out = (self.state >> (self.degree - 1)) & 1 == 1;
        let mask = (1u32 << self.degree) - 1;
        self.state = (self.state << 1) & mask;
        if out {
            self.state ^= self.taps;
        }
        out
    }

    /// Number of steps until the register returns to its current state, capped
    /// at `2^degree - 1`. A result below the cap, or a register that never
    /// returns within the cap, means the polynomial is not primitive.
    pub fn period(&self) -> u64 {
        let full = (1u64 << self.degree) - 1;
        let mut probe = self.clone();
        for n in 1..=full {
            probe.step();
            if probe.state == self.state {
                return n;
            }
        }
        full + 1
    }
}

/// One period of a maximal-length sequence mapped to +/-1 chips.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChipSequence {
    chips: Vec<i8>,
}

impl ChipSequence {
    /// Runs a GLFSR for one full period, rejecting polynomials that are not
    /// primitive.
    pub fn generate(degree: u32, taps: u32, seed_state: u32) -> Result<Self> {
        let mut reg = Glfsr::new(degree, taps, seed_state)?;
        let expected = (1u64 << degree) - 1;
        let period = reg.period();
        if period != expected {
            return Err(Error::NonPrimitive {
                degree,
                taps,
                period,
                expected,
            });
        }
        let chips = (0..expected)
            .map(|_| if reg.step() { -1 } else { 1 })
            .collect();
        Ok(Self { chips })
    }

    /// The tabulated m-sequence for `degree`, seeded with state 1.
    pub fn m_sequence(degree: u32) -> Result<Self> {
        let taps = default_taps(degree).ok_or_else(|| {
            Error::param("degree", format!("no tabulated polynomial for degree {degree}"))
        })?;
        Self::generate(degree, taps, 1)
    }

    /// Wraps externally supplied chips; every entry must be +1 or -1.
    pub fn from_chips(chips: Vec<i8>) -> Result<Self> {
        if chips.is_empty() {
            return Err(Error::param("chips", "sequence is empty"));
        }
        if let Some(pos) = chips.iter().position(|&c| c != 1 && c != -1) {
            return Err(Error::param(
                "chips",
                format!("entry {pos} is {} (expected +1 or -1)", chips[pos]),
            ));
        }
        Ok(Self { chips })
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.chips.iter().map(|&c| f64::from(c)).collect()
    }

    /// Periodic extension: `chips[n mod N]`, valid for negative `n` too.
    pub fn periodic_chip(&self, n: i64) -> i8 {
        let len = self.chips.len() as i64;
        self.chips[n.rem_euclid(len) as usize]
    }

    /// One chip per line, `1` or `-1`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.chips.len() * 3);
        for c in &self.chips {
            let _ = writeln!(out, "{c}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut chips = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let value: i8 = line.parse().map_err(|_| {
                Error::param("chips", format!("line {}: `{line}` is not an integer", line_no + 1))
            })?;
            chips.push(value);
        }
        Self::from_chips(chips)
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read_text(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

/// Normalized circular cross-correlation, one value per lag.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    values: Vec<Complex64>,
}

impl CorrelationProfile {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn normalization(&self) -> f64 {
        1.0 / self.values.len() as f64
    }

    /// Lag of the largest magnitude; ties go to the smallest lag.
    pub fn peak_lag(&self) -> usize {
        Self::peak_of(&self.values)
    }

    pub(crate) fn peak_of(values: &[Complex64]) -> usize {
        let mut best = 0;
        let mut best_mag = f64::NEG_INFINITY;
        for (lag, v) in values.iter().enumerate() {
            let mag = v.norm_sqr();
            if mag > best_mag {
                best = lag;
                best_mag = mag;
            }
        }
        best
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }
}

/// FFT-backed circular correlator for a fixed reference sequence.
pub struct Correlator {
    len: usize,
    reference_spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Correlator {
    pub fn new(reference: &ChipSequence) -> Self {
        let len = reference.len();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut reference_spectrum: Vec<Complex64> = reference
            .chips()
            .iter()
            .map(|&c| Complex64::new(f64::from(c), 0.0))
            .collect();
        forward.process(&mut reference_spectrum);
        for v in &mut reference_spectrum {
            *v = v.conj();
        }
        Self {
            len,
            reference_spectrum,
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `values[n] = (1/N) sum_m c[m] * y[(m + n) mod N]`.
    pub fn correlate(&self, observed: &[Complex64]) -> Result<CorrelationProfile> {
        if observed.len() != self.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                actual: observed.len(),
            });
        }
        let mut buf = observed.to_vec();
        self.forward.process(&mut buf);
        for (b, r) in buf.iter_mut().zip(&self.reference_spectrum) {
            *b *= r;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / (self.len as f64 * self.len as f64);
        for v in &mut buf {
            *v *= scale;
        }
        Ok(CorrelationProfile { values: buf })
    }
}

/// Circular correlation of `observed` (one period, symbol rate) against the
/// reference chips.
pub fn circular_correlate(
    reference: &ChipSequence,
    observed: &[Complex64],
) -> Result<CorrelationProfile> {
    Correlator::new(reference).correlate(observed)
}

/// Direct O(N^2) evaluation of [`circular_correlate`].
pub fn circular_correlate_direct(
    reference: &ChipSequence,
    observed: &[Complex64],
) -> Result<CorrelationProfile> {
    let n = reference.len();
    if observed.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: observed.len(),
        });
    }
    let chips = reference.chips();
    let values = (0..n)
        .map(|lag| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &c) in chips.iter().enumerate() {
                acc += observed[(m + lag) % n] * f64::from(c);
            }
            acc / n as f64
        })
        .collect();
    Ok(CorrelationProfile { values })
}
