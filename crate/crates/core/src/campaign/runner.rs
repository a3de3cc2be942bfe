use std::sync::Arc;

use rayon::prelude::*;

use crate::channel::{synthesize_channel, MultipathChannel};
use crate::error::{Error, Result};
use crate::freq::{measure_sweep, mean_wideband_path_loss_in, SweepCapture, ToneEmitter};
use crate::multi_tx::{
    assess_alignment, build_frequency_plan, compose_received, slot_window, AlignmentFlag, ClockModel, Scene,
    SceneTransmitter, TdmaSchedule,
};
use crate::seed::{self, purpose};
use crate::sliding::{SlidingSounder, SounderConfig};
use crate::Complex64;

use super::records::{MeasurementRecord, RecordFlag};
use super::scenario::{capture_len, Mode, Scenario, TransmitterSpec, Waypoint, SCHEMA_VERSION};

/// Seed-path prefixes for per-node draws, kept clear of location indices.
const RECEIVER_NODE: u64 = u64::MAX;
const TRANSMITTER_NODE: u64 = u64::MAX - 1;

/// Seed of the channel between transmitter `id` and location `location`.
pub fn channel_seed(scenario: &Scenario, location: usize, id: u32) -> u64 {
    seed::mix(
        scenario.master_seed,
        &[scenario.environment.rng_seed, location as u64, u64::from(id), purpose::CHANNEL],
    )
}

fn noise_seed(scenario: &Scenario, location: usize, key: u64) -> u64 {
    seed::mix(scenario.master_seed, &[location as u64, key, purpose::NOISE])
}

struct Link {
    channel: MultipathChannel,
    true_loss_db: f64,
    seed: u64,
}

/// Synthesizes each transmitter's channel to `waypoint`, scaled to its
/// transmit power.
fn links(scenario: &Scenario, txs: &[TransmitterSpec], location: usize, waypoint: &Waypoint) -> Result<Vec<Link>> {
    txs.iter()
        .map(|t| {
            let seed = channel_seed(scenario, location, t.id);
            let (channel, true_loss_db) =
                synthesize_channel(&scenario.environment, t.position, waypoint.position, seed)?;
            let amp = 10f64.powf(t.tx_power_db / 20.0);
            Ok(Link {
                channel: channel.scaled(Complex64::new(amp, 0.0)),
                true_loss_db,
                seed,
            })
        })
        .collect()
}

fn clocks(scenario: &Scenario, txs: &[TransmitterSpec]) -> (ClockModel, Vec<ClockModel>) {
    let m = scenario.master_seed;
    let rx = scenario
        .clocks
        .receiver
        .instantiate(seed::mix(m, &[RECEIVER_NODE, purpose::CLOCK]));
    let tx = txs
        .iter()
        .map(|t| {
            scenario
                .clocks
                .transmitters
                .instantiate(seed::mix(m, &[TRANSMITTER_NODE, u64::from(t.id), purpose::CLOCK]))
        })
        .collect();
    (rx, tx)
}

fn blank_record(scenario: &Scenario, location: usize, waypoint: &Waypoint, tx: &TransmitterSpec, link: &Link) -> MeasurementRecord {
    MeasurementRecord {
        schema_version: SCHEMA_VERSION,
        location_index: location,
        x_m: waypoint.position[0],
        y_m: waypoint.position[1],
        geo: waypoint.geo,
        transmitter_id: tx.id,
        mode: scenario.mode,
        wideband_path_loss_db: None,
        rms_delay_spread_s: None,
        delay_profile: None,
        narrowband: None,
        true_path_loss_db: link.true_loss_db,
        seed: link.seed,
        flags: Vec::new(),
    }
}

/// Runs every receiver location against every transmitter. Records come back
/// location-major, then by transmitter id; a sounder that detects nothing
/// yields a flagged record rather than an error. Locations run in parallel
/// with all randomness keyed by (master seed, location, transmitter), so the
/// output does not depend on the thread count.
pub fn run_campaign(scenario: &Scenario) -> Result<Vec<MeasurementRecord>> {
    scenario.validate()?;
    let mut txs = scenario.transmitters.clone();
    txs.sort_by_key(|t| t.id);
    let per_location = match scenario.mode {
        Mode::Sliding => run_sliding(scenario, &txs)?,
        Mode::Frequency => run_frequency(scenario, &txs)?,
    };
    let records: Vec<MeasurementRecord> = per_location.into_iter().flatten().collect();
    log::info!(
        "campaign {}: {} locations x {} transmitters -> {} records ({} flagged)",
        scenario.name.as_deref().unwrap_or("(unnamed)"),
        scenario.receiver_path.len(),
        txs.len(),
        records.len(),
        records.iter().filter(|r| !r.flags.is_empty()).count()
    );
    Ok(records)
}

fn run_sliding(scenario: &Scenario, txs: &[TransmitterSpec]) -> Result<Vec<Vec<MeasurementRecord>>> {
    let base = scenario
        .sliding
        .clone()
        .ok_or_else(|| Error::Scenario {
            path: "sliding".into(),
            reason: "missing".into(),
        })?;
    let sounders = txs
        .iter()
        .map(|t| {
            SlidingSounder::new(SounderConfig {
                tx_power_db: t.tx_power_db,
                ..base.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fs = sounders[0].sample_rate();
    let period = sounders[0].period_samples();
    let len = capture_len(&sounders[0]);
    let waveform = Arc::new(sounders[0].periodic_waveform());
    let schedule = TdmaSchedule::new(txs.len(), scenario.tdma.slot_length_s, scenario.receiver_path.len())?;
    let guard = scenario.tdma.guard_fraction;
    let (rx_clock, tx_clocks) = clocks(scenario, txs);

    let measure_location = |j: usize| -> Result<Vec<MeasurementRecord>> {
        let waypoint = &scenario.receiver_path[j];
        let links = links(scenario, txs, j, waypoint)?;
        // The receiver arrives at location j in period j and captures from
        // the next period boundary on its own clock.
        let r = j;
        let t_ref = schedule.next_period_start(r as f64 * schedule.period_s());
        let e_rx = rx_clock.error_at(t_ref, j as u64);
        let mut scene = Scene {
            sample_rate: fs,
            transmitters: links
                .iter()
                .zip(&tx_clocks)
                .map(|(l, c)| SceneTransmitter {
                    waveform: Arc::clone(&waveform),
                    channel: l.channel.clone(),
                    clock_error_s: c.error_at(t_ref, j as u64),
                })
                .collect(),
            leakage: scenario.leakage,
            noise_power_dbfs: scenario.noise_power_dbfs,
            noise_seed: 0,
        };
        let mut out = Vec::with_capacity(txs.len());
        for (i, tx) in txs.iter().enumerate() {
            let window = slot_window(&schedule, i, r, guard, e_rx, fs, period, len)?;
            scene.noise_seed = noise_seed(scenario, j, u64::from(tx.id));
            let capture = compose_received(&scene, &schedule, window)?;
            let mut rec = blank_record(scenario, j, waypoint, tx, &links[i]);
            match assess_alignment(scene.transmitters[i].clock_error_s - e_rx, &schedule, guard) {
                AlignmentFlag::Clean => {}
                AlignmentFlag::Contaminated => rec.flags.push(RecordFlag::Contaminated),
                AlignmentFlag::Misattributed => rec.flags.push(RecordFlag::Misattributed),
            }
            match sounders[i].measure(&capture.samples) {
                Ok(profile) => {
                    rec.wideband_path_loss_db = Some(profile.wideband_path_loss_db);
                    rec.rms_delay_spread_s = Some(profile.rms_delay_spread);
                    rec.delay_profile = Some(profile.to_wire());
                }
                Err(Error::NoSignal) => rec.flags.push(RecordFlag::NoSignal),
                Err(e) => return Err(e),
            }
            out.push(rec);
        }
        Ok(out)
    };
    (0..scenario.receiver_path.len())
        .into_par_iter()
        .map(measure_location)
        .collect()
}

fn run_frequency(scenario: &Scenario, txs: &[TransmitterSpec]) -> Result<Vec<Vec<MeasurementRecord>>> {
    let cfg = scenario.frequency.clone().ok_or_else(|| Error::Scenario {
        path: "frequency".into(),
        reason: "missing".into(),
    })?;
    let plan = build_frequency_plan(txs.len(), &cfg)?;
    let frame_s = cfg.frame_duration_s();
    let cycle_s = frame_s * plan.frames.len() as f64;
    let (rx_clock, tx_clocks) = clocks(scenario, txs);

    let measure_location = |j: usize| -> Result<Vec<MeasurementRecord>> {
        let waypoint = &scenario.receiver_path[j];
        let links = links(scenario, txs, j, waypoint)?;
        let t0 = j as f64 * cycle_s;
        let e_rx = rx_clock.error_at(t0, j as u64);
        let mut out: Vec<MeasurementRecord> = txs
            .iter()
            .zip(&links)
            .map(|(t, l)| blank_record(scenario, j, waypoint, t, l))
            .collect();
        for (f, frame) in plan.frames.iter().enumerate() {
            let members: Vec<_> = plan.assignments.iter().filter(|a| a.frame == f).collect();
            let emitters: Vec<ToneEmitter> = members
                .iter()
                .map(|a| {
                    let i = a.transmitter_index;
                    ToneEmitter {
                        transmitter_id: txs[i].id,
                        tone_offset_hz: a.tone_offset_hz,
                        tx_power_db: txs[i].tx_power_db,
                        channel: links[i].channel.clone(),
                        clock_error_s: tx_clocks[i].error_at(t0, j as u64),
                    }
                })
                .collect();
            let capture = SweepCapture {
                start_time_s: t0 + f as f64 * frame_s,
                receiver_clock_error_s: e_rx,
                blocks: 1,
                noise_power_dbfs: scenario.noise_power_dbfs,
                seed: noise_seed(scenario, j, f as u64),
            };
            match measure_sweep(frame, &emitters, &capture) {
                Ok(sets) => {
                    for (a, set) in members.iter().zip(sets) {
                        let rec = &mut out[a.transmitter_index];
                        rec.wideband_path_loss_db = Some(mean_wideband_path_loss_in(&set, scenario.averaging));
                        rec.narrowband = Some(set);
                    }
                }
                Err(Error::NoSignal) => {
                    for a in &members {
                        out[a.transmitter_index].flags.push(RecordFlag::NoSignal);
                    }
                }
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    };
    (0..scenario.receiver_path.len())
        .into_par_iter()
        .map(measure_location)
        .collect()
}
