use std::sync::Arc;

use chansound::channel::MultipathChannel;
use chansound::freq::{
    bin_powers, generate_tone, mean_wideband_path_loss_in, AveragingDomain, NarrowbandLossSet, SweepPlan,
};
use chansound::multi_tx::{
    build_frequency_plan, compose_received, frame_capacity, FrequencyPlanConfig, LeakageModel, Parking, SampleWindow,
    Scene, SceneTransmitter, TdmaSchedule,
};
use chansound::pn::{circular_correlate, circular_correlate_direct, ChipSequence};
use chansound::pulse::{design_rrc, estimate_timing_phase, modulate};
use chansound::sliding::{sound, SounderConfig};
use chansound::Complex64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn observation(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(complex(), n)
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn correlation_is_linear(x in observation(127), y in observation(127), a in complex(), b in complex()) {
        let seq = ChipSequence::m_sequence(7).unwrap();
        let mix: Vec<Complex64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let rx = circular_correlate(&seq, &x).unwrap();
        let ry = circular_correlate(&seq, &y).unwrap();
        let rm = circular_correlate(&seq, &mix).unwrap();
        for n in 0..127 {
            prop_assert!(close(rm.values()[n], a * rx.values()[n] + b * ry.values()[n], 1e-12));
        }
    }

    #[test]
    fn correlation_follows_circular_shifts(x in observation(127), s in 0usize..127) {
        let seq = ChipSequence::m_sequence(7).unwrap();
        let mut rolled = x.clone();
        rolled.rotate_right(s);
        let r = circular_correlate(&seq, &x).unwrap();
        let rr = circular_correlate(&seq, &rolled).unwrap();
        for n in 0..127 {
            prop_assert!(close(rr.values()[(n + s) % 127], r.values()[n], 1e-12));
        }
    }

    #[test]
    fn fft_matches_direct_sum(x in observation(255)) {
        let seq = ChipSequence::m_sequence(8).unwrap();
        let fast = circular_correlate(&seq, &x).unwrap();
        let slow = circular_correlate_direct(&seq, &x).unwrap();
        for (f, s) in fast.values().iter().zip(slow.values()) {
            prop_assert!(close(*f, *s, 1e-12));
        }
    }

    #[test]
    fn profile_scales_with_the_channel(
        lags in prop::collection::btree_set(1usize..40, 0..4),
        gains in prop::collection::vec(complex(), 5),
        k_db in -60.0f64..20.0,
        k_phase in -3.1f64..3.1,
    ) {
        let cfg = SounderConfig { averaging_periods: 2, ..SounderConfig::default() };
        let chips = ChipSequence::m_sequence(10).unwrap();
        let n = chips.len();
        let mut planted = vec![(0usize, Complex64::new(1.0, 0.2))];
        for (&l, &g) in lags.iter().zip(&gains) {
            planted.push((l, g * 0.5 + Complex64::new(0.05, 0.0)));
        }
        let symbols = |scale: Complex64| -> Vec<Complex64> {
            (0..2 * n)
                .map(|j| {
                    planted
                        .iter()
                        .map(|&(l, g)| scale * g * f64::from(chips.chips()[(j + n - l) % n]))
                        .sum()
                })
                .collect()
        };
        let k = Complex64::from_polar(10f64.powf(k_db / 20.0), k_phase);
        let base = sound(&symbols(Complex64::new(1.0, 0.0)), &chips, &cfg).unwrap();
        let scaled = sound(&symbols(k), &chips, &cfg).unwrap();
        prop_assert_eq!(base.taps.len(), scaled.taps.len());
        for (a, b) in base.taps.iter().zip(&scaled.taps) {
            prop_assert_eq!(a.lag, b.lag);
            prop_assert!(close(b.gain, a.gain * k, 1e-9 * k.norm()));
        }
        let shift = scaled.wideband_path_loss_db - base.wideband_path_loss_db;
        prop_assert!((shift + k_db).abs() < 1e-9);
    }

    #[test]
    fn slots_tile_each_period(n in 1usize..9, slot in 0.01f64..2.0, u in 0.0f64..1.0, r in 0usize..50) {
        let sched = TdmaSchedule::new(n, slot, 1).unwrap();
        // Slots are back to back and fill the period exactly.
        for k in 0..n {
            let (a, b) = sched.slot(k, r);
            prop_assert!((b - a - slot).abs() < 1e-12 * (1.0 + b));
            if k + 1 < n {
                prop_assert_eq!(b, sched.slot(k + 1, r).0);
            }
        }
        prop_assert!((sched.slot(n - 1, r).1 - sched.slot(0, r + 1).0).abs() < 1e-9);
        // Any instant away from a boundary belongs to the slot that contains it.
        let t = r as f64 * sched.period_s() + u * sched.period_s();
        let k = sched.active_transmitter(t);
        let (a, b) = sched.slot(k, r);
        let margin = 1e-9 * (1.0 + t);
        if (t - a).abs() > margin && (t - b).abs() > margin {
            prop_assert!(a <= t && t < b, "t {} outside slot {} [{}, {})", t, k, a, b);
        }
    }

    #[test]
    fn frequency_plans_are_sound(k in 1usize..40, guard_khz in 10.0f64..300.0) {
        let cfg = FrequencyPlanConfig { guard_band_hz: guard_khz * 1e3, ..FrequencyPlanConfig::default() };
        let cap = frame_capacity(&cfg);
        prop_assume!(cap > 0);
        let plan = build_frequency_plan(k, &cfg).unwrap();
        prop_assert_eq!(plan.frames.len(), k.div_ceil(cap));
        prop_assert_eq!(plan.assignments.len(), k);
        let mut seen = vec![false; k];
        for a in &plan.assignments {
            prop_assert!(!seen[a.transmitter_index]);
            seen[a.transmitter_index] = true;
        }
        let bin = cfg.sample_rate_hz / cfg.fft_length as f64;
        for (f, frame) in plan.frames.iter().enumerate() {
            let tones = frame.tone_offsets_hz();
            prop_assert!(tones.len() <= cap);
            for &t in tones {
                prop_assert!((t / bin - (t / bin).round()).abs() < 1e-9);
                prop_assert!(t.abs() <= cfg.sample_rate_hz / 2.0 - cfg.guard_band_hz / 2.0 + 1e-9);
            }
            for w in tones.windows(2) {
                prop_assert!(w[1] - w[0] >= cfg.guard_band_hz - 1e-9);
            }
            let members = plan.assignments.iter().filter(|a| a.frame == f).count();
            prop_assert_eq!(members, tones.len());
        }
    }

    #[test]
    fn averaged_loss_lies_between_extremes(v in prop::collection::vec(20.0f64..160.0, 1..12)) {
        let set = NarrowbandLossSet {
            transmitter_id: 1,
            tone_offset_hz: 0.0,
            carriers_hz: (0..v.len()).map(|i| 7e8 + i as f64 * 2e6).collect(),
            per_carrier_loss_db: v.clone(),
        };
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for domain in [AveragingDomain::Db, AveragingDomain::Linear] {
            let m = mean_wideband_path_loss_in(&set, domain);
            prop_assert!(m >= lo - 1e-9 && m <= hi + 1e-9, "{:?}: {} not in [{}, {}]", domain, m, lo, hi);
        }
    }

    #[test]
    fn tone_power_lands_in_its_bin(
        k1 in -100i32..0, k2 in 1i32..100, a1 in 1e-4f64..2.0, a2 in 1e-4f64..2.0, blocks in 1usize..4,
    ) {
        let (fs, l) = (1.0e6, 256usize);
        let bin = fs / l as f64;
        let (f1, f2) = (f64::from(k1) * bin, f64::from(k2) * bin);
        let plan = SweepPlan::new(vec![7e8], vec![f1, f2], 1e-3, fs, l, bin).unwrap();
        let duration = (blocks * l) as f64 / fs;
        let mut sig = generate_tone(f1, duration, fs, a1).unwrap();
        let other = generate_tone(f2, duration, fs, a2).unwrap();
        sig.samples.iter_mut().zip(&other.samples).for_each(|(s, o)| *s += o);
        let p = bin_powers(&sig, &plan, &[f1, f2]).unwrap();
        prop_assert!((p[0] / (a1 * a1) - 1.0).abs() < 1e-9);
        prop_assert!((p[1] / (a2 * a2) - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn phase_search_ignores_complex_scaling(planted in 0usize..4, k in complex()) {
        prop_assume!(k.norm() > 1e-6);
        let chips = ChipSequence::m_sequence(7).unwrap();
        let taps = design_rrc(0.35, 10, 4).unwrap();
        let mut sig = modulate(&chips, 2, &taps, 60e-9).unwrap();
        let mut samples = vec![Complex64::new(0.0, 0.0); planted];
        samples.extend_from_slice(&sig.samples);
        sig.samples = samples;
        let base = estimate_timing_phase(&sig, &chips, &taps).unwrap();
        sig.samples.iter_mut().for_each(|s| *s *= k);
        prop_assert_eq!(estimate_timing_phase(&sig, &chips, &taps).unwrap(), base);
    }

    #[test]
    fn parked_leakage_falls_with_suppression(s1 in 0.0f64..80.0, extra in 0.1f64..40.0) {
        // Only the parked transmitter is present, so the capture is pure leakage.
        let waveform: Arc<Vec<Complex64>> =
            Arc::new((0..64).map(|i| Complex64::from_polar(1.0, 0.7 * f64::from(i))).collect());
        let power = |suppression: f64| {
            let scene = Scene {
                sample_rate: 1e3,
                transmitters: vec![
                    SceneTransmitter {
                        waveform: Arc::clone(&waveform),
                        channel: MultipathChannel::identity(),
                        clock_error_s: 0.0,
                    },
                    SceneTransmitter {
                        waveform: Arc::clone(&waveform),
                        channel: MultipathChannel::identity().scaled(Complex64::new(0.0, 0.0)),
                        clock_error_s: 0.0,
                    },
                ],
                leakage: LeakageModel {
                    parked_leakage_db: None,
                    inband_null_leakage_db: Some(suppression),
                    parking: Parking::InBandNull,
                },
                noise_power_dbfs: None,
                noise_seed: 0,
            };
            let sched = TdmaSchedule::new(2, 1.0, 1).unwrap();
            let capture = compose_received(&scene, &sched, SampleWindow { start: 1100, len: 500 }).unwrap();
            capture.mean_power()
        };
        let (p1, p2) = (power(s1), power(s1 + extra));
        prop_assert!(p2 < p1);
        prop_assert!((10.0 * (p1 / p2).log10() - extra).abs() < 1e-9);
    }
}
