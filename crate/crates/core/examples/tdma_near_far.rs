//! Two TDMA transmitters, the near one 40 dB stronger. While the far one
//! owns its slot the near one is parked; how it is parked decides whether
//! the far measurement survives.

use std::sync::Arc;

use chansound::channel::{synthesize_channel, EnvironmentModel};
use chansound::multi_tx::{compose_received, slot_window, LeakageModel, Parking, Scene, SceneTransmitter, TdmaSchedule};
use chansound::sliding::{SlidingSounder, SounderConfig};
use chansound::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SounderConfig::default();
    let sounder = SlidingSounder::new(cfg.clone())?;
    let env = EnvironmentModel {
        reference_loss_db: 40.0,
        path_loss_exponent: 3.0,
        reference_distance_m: 1.0,
        delay_spread_scale_s: 80e-9,
        tap_count_range: [3, 6],
        wall_loss_db: 0.0,
        wall_spacing_m: None,
        delay_grid_s: cfg.chip_period_s,
        rng_seed: 0,
    };
    let rx = [2.0, 0.0, 1.0];
    let (near, near_loss) = synthesize_channel(&env, [0.0, 0.0, 2.0], rx, 11)?;
    let (far, far_loss) = synthesize_channel(&env, [200.0, 0.0, 2.0], rx, 12)?;
    let far = far.scaled(Complex64::new(10f64.powf((far_loss - near_loss - 40.0) / 20.0), 0.0));
    let truth = -10.0 * far.total_power().log10();
    println!(
        "near link {:.1} dB, far link {truth:.1} dB",
        -10.0 * near.total_power().log10()
    );

    let waveform = Arc::new(sounder.periodic_waveform());
    let schedule = TdmaSchedule::new(2, 2e-3, 1)?;
    let len = (cfg.averaging_periods + 2) * sounder.period_samples() + sounder.filter_taps().len();
    let window = slot_window(&schedule, 1, 0, 0.05, 0.0, sounder.sample_rate(), sounder.period_samples(), len)?;

    let cases = [
        ("no leakage", LeakageModel::none()),
        (
            "in-band null, 30 dB suppression",
            LeakageModel {
                parked_leakage_db: None,
                inband_null_leakage_db: Some(30.0),
                parking: Parking::InBandNull,
            },
        ),
        (
            "in-band null, 60 dB suppression",
            LeakageModel {
                parked_leakage_db: None,
                inband_null_leakage_db: Some(60.0),
                parking: Parking::InBandNull,
            },
        ),
        (
            "parked off-band",
            LeakageModel {
                parked_leakage_db: None,
                inband_null_leakage_db: Some(30.0),
                parking: Parking::OffBand,
            },
        ),
    ];
    for (label, leakage) in cases {
        let scene = Scene {
            sample_rate: sounder.sample_rate(),
            transmitters: vec![
                SceneTransmitter {
                    waveform: Arc::clone(&waveform),
                    channel: near.clone(),
                    clock_error_s: 0.0,
                },
                SceneTransmitter {
                    waveform: Arc::clone(&waveform),
                    channel: far.clone(),
                    clock_error_s: 0.0,
                },
            ],
            leakage,
            noise_power_dbfs: None,
            noise_seed: 0,
        };
        let capture = compose_received(&scene, &schedule, window)?;
        let p = sounder.measure(&capture.samples)?;
        println!(
            "{label:32} far loss {:6.2} dB (error {:+.2} dB), {} taps",
            p.wideband_path_loss_db,
            p.wideband_path_loss_db - truth,
            p.taps.len()
        );
    }
    Ok(())
}
