//! Three transmitters in a building wing, 200 receiver locations, sliding
//! correlator under TDMA. Prints per-transmitter means and writes the records
//! and heat maps to a temporary directory (or the first argument).

use std::path::PathBuf;

use chansound::campaign::{export_heatmap, export_records, load_scenario, run_campaign, summarize};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario_path = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/indoor_wing.json"));
    let scenario = load_scenario(&scenario_path)?;
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("chansound_indoor"));
    std::fs::create_dir_all(&out_dir)?;

    let started = std::time::Instant::now();
    let records = run_campaign(&scenario)?;
    println!(
        "{} records in {:.1} s",
        records.len(),
        started.elapsed().as_secs_f64()
    );

    for s in summarize(&records) {
        println!(
            "tx {}: {}/{} detected, mean path loss {:.1} dB, mean RMS delay spread {:.1} ns",
            s.transmitter_id,
            s.detected,
            s.records,
            s.mean_path_loss_db,
            s.mean_rms_delay_spread_s.unwrap_or(f64::NAN) * 1e9
        );
    }

    export_records(&records, &out_dir.join("records.jsonl"))?;
    for t in &scenario.transmitters {
        export_heatmap(&records, t.id, &out_dir.join(format!("heatmap_tx{}.csv", t.id)))?;
    }
    println!("wrote {}", out_dir.display());
    Ok(())
}
