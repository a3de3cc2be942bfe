//! How many transmitters fit in one frequency frame, and how larger groups
//! are spread over several frames.

use chansound::multi_tx::{build_frequency_plan, frame_capacity, FrequencyPlanConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for guard_khz in [25.0, 100.0, 150.0, 250.0] {
        let cfg = FrequencyPlanConfig {
            guard_band_hz: guard_khz * 1e3,
            ..FrequencyPlanConfig::default()
        };
        println!("guard {guard_khz:5.0} kHz: {} tones per frame", frame_capacity(&cfg));
    }

    let cfg = FrequencyPlanConfig {
        guard_band_hz: 150e3,
        ..FrequencyPlanConfig::default()
    };
    println!("frame duration {:.0} ms", cfg.frame_duration_s() * 1e3);
    for k in [3, 6, 7, 14] {
        let plan = build_frequency_plan(k, &cfg)?;
        println!("{k} transmitters -> {} frame(s)", plan.frames.len());
        for (f, frame) in plan.frames.iter().enumerate() {
            let members: Vec<String> = plan
                .assignments
                .iter()
                .filter(|a| a.frame == f)
                .map(|a| format!("tx{}@{:+.0}kHz", a.transmitter_index, a.tone_offset_hz / 1e3))
                .collect();
            println!("  frame {f} ({} tones): {}", frame.tone_offsets_hz().len(), members.join(" "));
        }
    }
    Ok(())
}
