//! Two transmitters share each 1 MHz step on separate tones. A nearby
//! line-of-sight link stays flat across the 18 MHz sweep; a distant link with
//! strong echoes fades. Also writes one capture per step plus a manifest for
//! `chansound sound-freq --manifest`.

use std::path::PathBuf;

use chansound::channel::{MultipathChannel, Tap};
use chansound::freq::{default_plan, generate_tone, measure_sweep, temporal_resolution, SweepCapture, ToneEmitter};
use chansound::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bin = 1e6 / 4096.0;
    let tones = [-80.0 * bin, 120.0 * bin];
    let plan = default_plan(tones.to_vec())?;
    println!(
        "{} steps of {:.0} MHz from {:.0} MHz, temporal resolution {:.1} ns",
        plan.step_count(),
        plan.carrier_spacing_hz() / 1e6,
        plan.carriers_hz()[0] / 1e6,
        temporal_resolution(&plan)? * 1e9
    );

    let near = MultipathChannel::new(vec![Tap {
        gain: Complex64::from_polar(10f64.powf(-55.0 / 20.0), 0.4),
        delay: 0.0,
    }])?;
    let far = MultipathChannel::new(vec![
        Tap { gain: Complex64::new(1.0, 0.0), delay: 0.0 },
        Tap { gain: Complex64::from_polar(0.75, 0.5), delay: 250e-9 },
        Tap { gain: Complex64::from_polar(0.3, -1.2), delay: 410e-9 },
    ])?
    .scaled(Complex64::new(10f64.powf(-90.0 / 20.0), 0.0));
    let emitters = [(1, near), (2, far)]
        .into_iter()
        .zip(tones)
        .map(|((id, channel), tone)| ToneEmitter {
            transmitter_id: id,
            tone_offset_hz: tone,
            tx_power_db: 0.0,
            channel,
            clock_error_s: 0.0,
        })
        .collect::<Vec<_>>();

    let capture = SweepCapture {
        noise_power_dbfs: Some(-140.0),
        seed: 3,
        ..SweepCapture::default()
    };
    for set in measure_sweep(&plan, &emitters, &capture)? {
        let losses: Vec<String> = set.per_carrier_loss_db.iter().map(|l| format!("{l:.1}")).collect();
        println!(
            "tx {}: variation {:.1} dB, losses [{}]",
            set.transmitter_id,
            set.variation_db(),
            losses.join(", ")
        );
    }

    // The same sweep as files: each step holds both tones, shaped by H.
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("chansound_sweep"));
    std::fs::create_dir_all(&out_dir)?;
    let duration = plan.fft_length() as f64 / plan.sample_rate_hz();
    let mut names = Vec::new();
    for (step, &fc) in plan.carriers_hz().iter().enumerate() {
        let mut sum: Option<chansound::signal::BasebandSignal> = None;
        for e in &emitters {
            let tone = generate_tone(e.tone_offset_hz, duration, plan.sample_rate_hz(), 1.0)?
                .scaled(e.channel.frequency_response(fc + e.tone_offset_hz));
            sum = Some(match sum {
                None => tone,
                Some(mut acc) => {
                    acc.samples.iter_mut().zip(&tone.samples).for_each(|(a, b)| *a += b);
                    acc
                }
            });
        }
        let name = format!("step{step:02}.cf32");
        sum.expect("two emitters").write_capture(&out_dir.join(&name))?;
        names.push(name);
    }
    let entries: Vec<serde_json::Value> = emitters
        .iter()
        .map(|e| serde_json::json!({"transmitter_id": e.transmitter_id, "tone_offset_hz": e.tone_offset_hz}))
        .collect();
    let manifest = serde_json::json!({"plan": plan, "transmitters": entries, "captures": names});
    let path = out_dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
