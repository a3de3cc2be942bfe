//! Scenario-driven measurement campaigns.
//!
//! A scenario places transmitters, walks a receiver along a scripted path
//! and names the sounder. Running it yields one [`MeasurementRecord`] per
//! (location, transmitter), exported as JSON lines plus one heat-map CSV per
//! transmitter.

mod records;
mod runner;
mod scenario;

pub use records::{
    export_heatmap, export_records, heatmap_csv, load_records, summarize, MeasurementRecord, RecordFlag,
    TransmitterSummary,
};
pub use runner::{channel_seed, run_campaign};
pub use scenario::{
    capture_len, load_scenario, ClockConfig, GeoPoint, Mode, Problem, Scenario, TdmaConfig, TransmitterSpec,
    Waypoint, SCHEMA_VERSION,
};
