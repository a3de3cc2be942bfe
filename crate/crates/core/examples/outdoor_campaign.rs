//! Two transmitters around a courtyard, 50 receiver locations, stepped
//! frequency sweep with one tone per transmitter. Prints how much each
//! transmitter's narrowband loss varies across the band.

use std::path::PathBuf;

use chansound::campaign::{export_heatmap, export_records, load_scenario, run_campaign, summarize};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = load_scenario(&PathBuf::from(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/scenarios/courtyard.json"
    )))?;
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("chansound_courtyard"));
    std::fs::create_dir_all(&out_dir)?;

    let records = run_campaign(&scenario)?;
    println!("{} records", records.len());
    for s in summarize(&records) {
        let spans: Vec<f64> = records
            .iter()
            .filter(|r| r.transmitter_id == s.transmitter_id)
            .filter_map(|r| r.narrowband.as_ref().map(|n| n.variation_db()))
            .collect();
        let worst = spans.iter().cloned().fold(0.0, f64::max);
        let median = {
            let mut v = spans.clone();
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        println!(
            "tx {}: mean wideband loss {:.1} dB, band variation median {median:.1} dB, worst {worst:.1} dB",
            s.transmitter_id, s.mean_path_loss_db
        );
    }

    export_records(&records, &out_dir.join("records.jsonl"))?;
    for t in &scenario.transmitters {
        export_heatmap(&records, t.id, &out_dir.join(format!("heatmap_tx{}.csv", t.id)))?;
    }
    println!("wrote {}", out_dir.display());
    Ok(())
}
