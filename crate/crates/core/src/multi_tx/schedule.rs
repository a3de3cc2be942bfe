use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::BasebandSignal;

use super::scene::SampleWindow;

/// Fraction of each slot discarded at both ends to absorb clock error.
pub const DEFAULT_GUARD_FRACTION: f64 = 0.05;

/// Round-robin slots: transmitter `i` (0-based) owns
/// `[i dt + r T_p, (i + 1) dt + r T_p)` for every period `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdmaSchedule {
    slot_length_s: f64,
    transmitter_count: usize,
    total_periods: usize,
}

impl TdmaSchedule {
    pub fn new(transmitter_count: usize, slot_length_s: f64, total_periods: usize) -> Result<Self> {
        if transmitter_count == 0 {
            return Err(Error::param("transmitter_count", "must be >= 1"));
        }
        if !(slot_length_s > 0.0 && slot_length_s.is_finite()) {
            return Err(Error::param("slot_length_s", format!("must be positive, got {slot_length_s}")));
        }
        if total_periods == 0 {
            return Err(Error::param("total_periods", "must be >= 1"));
        }
        Ok(Self {
            slot_length_s,
            transmitter_count,
            total_periods,
        })
    }

    pub fn slot_length_s(&self) -> f64 {
        self.slot_length_s
    }

    pub fn transmitter_count(&self) -> usize {
        self.transmitter_count
    }

    pub fn total_periods(&self) -> usize {
        self.total_periods
    }

    /// T_p = dt * N.
    pub fn period_s(&self) -> f64 {
        self.slot_length_s * self.transmitter_count as f64
    }

    /// `[start, end)` of transmitter `tx`'s slot in period `r`.
    pub fn slot(&self, tx: usize, r: usize) -> (f64, f64) {
        let base = r as f64 * self.period_s();
        (
            base + tx as f64 * self.slot_length_s,
            base + (tx + 1) as f64 * self.slot_length_s,
        )
    }

    /// Owner of the slot containing `time` (on whatever clock `time` is read from).
    pub fn active_transmitter(&self, time: f64) -> usize {
        let within = time.rem_euclid(self.period_s());
        ((within / self.slot_length_s).floor() as usize).min(self.transmitter_count - 1)
    }

    /// First period boundary at or after `time`.
    pub fn next_period_start(&self, time: f64) -> f64 {
        (time / self.period_s()).ceil() * self.period_s()
    }
}

/// Trust level of a TDMA segment given the receiver-minus-transmitter clock error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentFlag {
    /// Error smaller than the guard trim: the segment holds only its owner.
    Clean,
    /// Error exceeds the trim: the segment also holds part of a neighbor's slot.
    Contaminated,
    /// Error of half a slot or more: the segment mostly belongs to another transmitter.
    Misattributed,
}

pub fn assess_alignment(relative_error_s: f64, schedule: &TdmaSchedule, guard_fraction: f64) -> AlignmentFlag {
    let e = relative_error_s.abs();
    let dt = schedule.slot_length_s;
    if e >= dt / 2.0 {
        AlignmentFlag::Misattributed
    } else if e >= guard_fraction * dt {
        AlignmentFlag::Contaminated
    } else {
        AlignmentFlag::Clean
    }
}

/// Smallest sample index at or after a fractional position, forgiving
/// rounding noise in the product of a time and a sample rate.
fn ceil_index(x: f64) -> i64 {
    (x - 1e-6).ceil() as i64
}

fn check_guard(guard_fraction: f64) -> Result<()> {
    if !(0.0..0.5).contains(&guard_fraction) {
        return Err(Error::param("guard_fraction", format!("must be in [0, 0.5), got {guard_fraction}")));
    }
    Ok(())
}

/// Splits a capture that starts on a period boundary (receiver clock
/// `capture_start_s`) into one trimmed segment per transmitter.
pub fn segment_capture(
    capture: &BasebandSignal,
    schedule: &TdmaSchedule,
    capture_start_s: f64,
    guard_fraction: f64,
) -> Result<Vec<BasebandSignal>> {
    check_guard(guard_fraction)?;
    let fs = capture.sample_rate;
    let period = (schedule.period_s() * fs).round() as usize;
    if capture.len() < period {
        return Err(Error::TooShort {
            needed: period,
            actual: capture.len(),
        });
    }
    let trim = guard_fraction * schedule.slot_length_s;
    Ok((0..schedule.transmitter_count)
        .map(|i| {
            let (a, b) = (i as f64 * schedule.slot_length_s, (i + 1) as f64 * schedule.slot_length_s);
            let start = ceil_index((a + trim) * fs) as usize;
            let end = (ceil_index((b - trim) * fs) as usize).max(start);
            let mut seg = capture.slice(start, end);
            seg.origin_time = capture_start_s + start as f64 / fs;
            seg
        })
        .collect())
}

/// Sample window (true-time sample grid) the receiver captures for
/// transmitter `tx` in period `r`: the trimmed slot on the receiver clock,
/// with its start pushed up to a multiple of `align` samples. Fails when
/// `len` samples do not fit in the trimmed slot.
#[allow(clippy::too_many_arguments)]
pub fn slot_window(
    schedule: &TdmaSchedule,
    tx: usize,
    r: usize,
    guard_fraction: f64,
    receiver_clock_error_s: f64,
    sample_rate: f64,
    align: usize,
    len: usize,
) -> Result<SampleWindow> {
    check_guard(guard_fraction)?;
    if tx >= schedule.transmitter_count {
        return Err(Error::param("tx", format!("index {tx} outside {} transmitters", schedule.transmitter_count)));
    }
    let (a, b) = schedule.slot(tx, r);
    let trim = guard_fraction * schedule.slot_length_s;
    let first = ceil_index((a + trim - receiver_clock_error_s) * sample_rate);
    let last = ceil_index((b - trim - receiver_clock_error_s) * sample_rate);
    let align = align.max(1) as i64;
    let start = first.div_euclid(align) * align + if first.rem_euclid(align) == 0 { 0 } else { align };
    if start + len as i64 > last {
        return Err(Error::param(
            "slot_length_s",
            format!(
                "slot of {} s cannot hold a {len}-sample capture after a {:.0}% guard trim",
                schedule.slot_length_s,
                guard_fraction * 100.0
            ),
        ));
    }
    Ok(SampleWindow { start, len })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Complex64;

    #[test]
    fn three_transmitter_schedule() {
        let s = TdmaSchedule::new(3, 1.0, 4).unwrap();
        assert_eq!(s.period_s(), 3.0);
        assert_eq!(s.slot(1, 0), (1.0, 2.0));
        assert_eq!(s.slot(1, 1), (4.0, 5.0));
        assert_eq!(s.active_transmitter(0.0), 0);
        assert_eq!(s.active_transmitter(3.0 + 0.5), 0);
        assert_eq!(s.active_transmitter(4.5), 1);
        assert_eq!(s.active_transmitter(2.999), 2);
    }

    #[test]
    fn single_transmitter_owns_everything() {
        let s = TdmaSchedule::new(1, 0.25, 1).unwrap();
        for t in [0.0, 0.1, 0.3, 17.9] {
            assert_eq!(s.active_transmitter(t), 0);
        }
    }

    #[test]
    fn slots_tile_each_period() {
        let s = TdmaSchedule::new(5, 0.7, 3).unwrap();
        for r in 0..3 {
            let mut edges: Vec<(f64, f64)> = (0..5).map(|i| s.slot(i, r)).collect();
            edges.sort_by(|a, b| a.0.total_cmp(&b.0));
            assert!((edges[0].0 - r as f64 * s.period_s()).abs() < 1e-12);
            assert!((edges[4].1 - (r + 1) as f64 * s.period_s()).abs() < 1e-12);
            for w in edges.windows(2) {
                assert!((w[0].1 - w[1].0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn receiver_offset_of_one_slot_shifts_ownership() {
        let s = TdmaSchedule::new(3, 1.0, 2).unwrap();
        for t in [0.2, 1.5, 2.7, 4.1] {
            assert_eq!(s.active_transmitter(t + 1.0), (s.active_transmitter(t) + 1) % 3);
        }
    }

    #[test]
    fn bad_schedules() {
        assert!(TdmaSchedule::new(0, 1.0, 1).is_err());
        assert!(TdmaSchedule::new(2, 0.0, 1).is_err());
        assert!(TdmaSchedule::new(2, 1.0, 0).is_err());
    }

    #[test]
    fn segments_hold_their_own_constants() {
        let s = TdmaSchedule::new(3, 1e-3, 1).unwrap();
        let fs = 1e5;
        let samples = (0..300).map(|n| Complex64::new((n / 100) as f64 + 1.0, 0.0)).collect();
        let cap = BasebandSignal::new(samples, fs, 0.0).unwrap();
        let segs = segment_capture(&cap, &s, 0.0, 0.05).unwrap();
        assert_eq!(segs.len(), 3);
        for (i, seg) in segs.iter().enumerate() {
            assert_eq!(seg.len(), 90);
            assert!(seg.samples.iter().all(|v| v.re == i as f64 + 1.0));
        }
        assert!(segment_capture(&cap.slice(0, 299), &s, 0.0, 0.05).is_err());
    }

    #[test]
    fn alignment_flags() {
        let s = TdmaSchedule::new(3, 1.0, 1).unwrap();
        assert_eq!(assess_alignment(0.01, &s, 0.05), AlignmentFlag::Clean);
        assert_eq!(assess_alignment(-0.06, &s, 0.05), AlignmentFlag::Contaminated);
        assert_eq!(assess_alignment(1.0, &s, 0.05), AlignmentFlag::Misattributed);
    }

    #[test]
    fn windows_are_aligned_and_inside_the_trimmed_slot() {
        let s = TdmaSchedule::new(3, 1e-3, 2).unwrap();
        let w = slot_window(&s, 2, 1, 0.05, 0.0, 1e6, 64, 500).unwrap();
        assert_eq!(w.start % 64, 0);
        assert!(w.start >= 5050 && w.start + 500 <= 5950);
        assert!(slot_window(&s, 2, 1, 0.05, 0.0, 1e6, 64, 1000).is_err());
        let shifted = slot_window(&s, 2, 1, 0.05, 1e-3, 1e6, 1, 500).unwrap();
        let plain = slot_window(&s, 2, 1, 0.05, 0.0, 1e6, 1, 500).unwrap();
        assert_eq!(plain.start - shifted.start, 1000);
    }
}
