use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::NarrowbandLossSet;
use crate::sliding::DelayProfileWire;

use super::scenario::{GeoPoint, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordFlag {
    /// The sounder found nothing above its floor.
    NoSignal,
    /// Clock error exceeded the slot guard trim.
    Contaminated,
    /// Clock error of half a slot or more.
    Misattributed,
}

/// Result of sounding one transmitter from one receiver location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub schema_version: u32,
    pub location_index: usize,
    pub x_m: f64,
    pub y_m: f64,
    pub geo: Option<GeoPoint>,
    pub transmitter_id: u32,
    pub mode: Mode,
    /// `None` when nothing was detected.
    pub wideband_path_loss_db: Option<f64>,
    pub rms_delay_spread_s: Option<f64>,
    pub delay_profile: Option<DelayProfileWire>,
    pub narrowband: Option<NarrowbandLossSet>,
    /// Model path loss of the synthesized link, for scoring.
    pub true_path_loss_db: f64,
    /// Seed of the link's channel realization.
    pub seed: u64,
    pub flags: Vec<RecordFlag>,
}

/// Writes one JSON object per line.
pub fn export_records(records: &[MeasurementRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::param("records", "nothing to export"));
    }
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("record serializes");
        out.push(b'\n');
    }
    write_file(path, &out)
}

pub fn load_records(path: &Path) -> Result<Vec<MeasurementRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

/// CSV of one transmitter's wideband path loss per location, in location
/// order. Locations with no detection have an empty loss cell.
pub fn heatmap_csv(records: &[MeasurementRecord], transmitter_id: u32) -> Result<String> {
    let mut rows: Vec<&MeasurementRecord> = records.iter().filter(|r| r.transmitter_id == transmitter_id).collect();
    if rows.is_empty() {
        return Err(Error::param(
            "transmitter_id",
            format!("no records for transmitter {transmitter_id}"),
        ));
    }
    rows.sort_by_key(|r| r.location_index);
    let mut csv = String::from("x_m,y_m,path_loss_db\n");
    for r in rows {
        let loss = r.wideband_path_loss_db.map(|l| format!("{l:.4}")).unwrap_or_default();
        writeln!(csv, "{},{},{loss}", r.x_m, r.y_m).expect("string write");
    }
    Ok(csv)
}

pub fn export_heatmap(records: &[MeasurementRecord], transmitter_id: u32, path: &Path) -> Result<()> {
    write_file(path, heatmap_csv(records, transmitter_id)?.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Per-transmitter aggregates over a record set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmitterSummary {
    pub transmitter_id: u32,
    pub records: usize,
    pub detected: usize,
    pub mean_path_loss_db: f64,
    pub mean_rms_delay_spread_s: Option<f64>,
}

pub fn summarize(records: &[MeasurementRecord]) -> Vec<TransmitterSummary> {
    let mut ids: Vec<u32> = records.iter().map(|r| r.transmitter_id).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.into_iter()
        .map(|id| {
            let mine: Vec<&MeasurementRecord> = records.iter().filter(|r| r.transmitter_id == id).collect();
            let losses: Vec<f64> = mine.iter().filter_map(|r| r.wideband_path_loss_db).collect();
            let spreads: Vec<f64> = mine.iter().filter_map(|r| r.rms_delay_spread_s).collect();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            TransmitterSummary {
                transmitter_id: id,
                records: mine.len(),
                detected: losses.len(),
                mean_path_loss_db: mean(&losses),
                mean_rms_delay_spread_s: (!spreads.is_empty()).then(|| mean(&spreads)),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(loc: usize, tx: u32, loss: Option<f64>) -> MeasurementRecord {
        MeasurementRecord {
            schema_version: 1,
            location_index: loc,
            x_m: loc as f64,
            y_m: 0.5,
            geo: None,
            transmitter_id: tx,
            mode: Mode::Sliding,
            wideband_path_loss_db: loss,
            rms_delay_spread_s: loss.map(|_| 61.3e-9),
            delay_profile: None,
            narrowband: None,
            true_path_loss_db: 70.123456789,
            seed: 99,
            flags: if loss.is_none() { vec![RecordFlag::NoSignal] } else { vec![] },
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let recs = vec![record(0, 1, Some(71.0 / 3.0)), record(0, 2, None), record(1, 1, Some(80.0))];
        export_records(&recs, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(load_records(&path).unwrap(), recs);
        assert!(export_records(&[], &path).is_err());
    }

    #[test]
    fn heatmap_rows_follow_location_order() {
        let recs = vec![record(2, 1, Some(3.0)), record(0, 1, Some(1.0)), record(1, 1, None), record(0, 2, Some(9.0))];
        let csv = heatmap_csv(&recs, 1).unwrap();
        assert_eq!(csv, "x_m,y_m,path_loss_db\n0,0.5,1.0000\n1,0.5,\n2,0.5,3.0000\n");
        assert!(heatmap_csv(&recs, 7).is_err());
    }

    #[test]
    fn summary_ignores_missing_losses() {
        let recs = vec![record(0, 1, Some(70.0)), record(1, 1, None), record(2, 1, Some(80.0))];
        let s = summarize(&recs);
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].records, s[0].detected), (3, 2));
        assert_eq!(s[0].mean_path_loss_db, 75.0);
    }

    #[test]
    fn io_errors_name_the_path() {
        let err = load_records(Path::new("/nonexistent/dir/r.jsonl")).unwrap_err().to_string();
        assert!(err.contains("/nonexistent/dir/r.jsonl"), "{err}");
    }
}
