//! Command-line front end.
//!
//! Every output lands under `--out-dir` (default `.`, or `CHANSOUND_OUT_DIR`);
//! output names must be plain relative paths. Exit status is 0 on success,
//! 1 on a failed run and 2 on a usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Component, Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use crate::campaign::{self, Scenario};
use crate::error::{Error, Result};
use crate::freq::{self, SweepPlan, ToneEntry};
use crate::pn::{default_taps, ChipSequence, DEFAULT_DEGREE10_TAPS};
use crate::signal::BasebandSignal;
use crate::sliding::{SlidingSounder, SounderConfig};

#[derive(Debug, Parser)]
#[command(name = "chansound", version, about = "Multi-transmitter channel sounding simulator")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Directory receiving every output file.
    #[arg(long, global = true, env = "CHANSOUND_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,

    /// Overrides the scenario's master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Machine-readable results on stdout and diagnostics on stderr.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one period of a maximal-length PN sequence, one chip per line.
    GenPn(GenPnArgs),
    /// Extract a delay profile from a raw capture (.cf32 with .json sidecar).
    SoundSliding(SoundSlidingArgs),
    /// Narrowband losses from a sweep manifest and its captures.
    SoundFreq(SoundFreqArgs),
    /// Run a scenario; writes records.jsonl and one heat map per transmitter.
    Campaign(ScenarioArgs),
    /// Check a scenario, sweep plan or sweep manifest without running it.
    Validate(ScenarioArgs),
}

#[derive(Debug, Args)]
pub struct GenPnArgs {
    #[arg(long, default_value_t = 10)]
    pub degree: u32,
    /// Feedback mask below x^degree, e.g. 0x9.
    #[arg(long, value_parser = parse_hex)]
    pub taps: Option<u32>,
    /// Initial register state (nonzero).
    #[arg(long, default_value_t = 1)]
    pub seed_state: u32,
    #[arg(long, default_value = "pn.txt")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SoundSlidingArgs {
    #[arg(long)]
    pub capture: PathBuf,
    /// Sounder configuration JSON; defaults otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "profile.json")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SoundFreqArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "losses.json")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub scenario: PathBuf,
}

/// Recorded stepped-frequency sweep: the plan, the transmitters' tones and
/// one capture per carrier step (paths relative to the manifest).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepManifest {
    pub plan: SweepPlan,
    pub transmitters: Vec<ToneEntry>,
    pub captures: Vec<PathBuf>,
}

fn parse_hex(s: &str) -> std::result::Result<u32, String> {
    let digits = s.trim_start_matches("0x").trim_start_matches("0X");
    u32::from_str_radix(digits, 16).map_err(|e| format!("`{s}` is not a hex mask: {e}"))
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match CliConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose);
    match execute(&cli) {
        Ok(summary) => {
            if cli.json {
                println!("{}", json!({ "status": "ok", "result": summary }));
            }
            0
        }
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            let mut err = std::io::stderr().lock();
            if cli.json {
                let _ = writeln!(err, "{}", json!({ "status": "error", "message": message }));
            } else {
                let _ = writeln!(err, "error: {message}");
            }
            1
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .is_test(cfg!(test))
        .try_init();
}

/// Output path inside the output directory; absolute names and `..` are refused.
fn output_path(out_dir: &Path, name: &Path) -> Result<PathBuf> {
    let escapes = name
        .components()
        .any(|c| !matches!(c, Component::Normal(_) | Component::CurDir));
    if escapes || name.as_os_str().is_empty() {
        return Err(Error::param(
            "output",
            format!("`{}` must be a relative path inside the output directory", name.display()),
        ));
    }
    Ok(out_dir.join(name))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        Error::format(path, format!("at `{at}`: {}", e.into_inner()))
    })
}

fn execute(cli: &CliConfig) -> Result<serde_json::Value> {
    match &cli.command {
        Command::GenPn(a) => gen_pn(cli, a),
        Command::SoundSliding(a) => sound_sliding(cli, a),
        Command::SoundFreq(a) => sound_freq(cli, a),
        Command::Campaign(a) => run_campaign(cli, a),
        Command::Validate(a) => validate(a),
    }
}

fn gen_pn(cli: &CliConfig, a: &GenPnArgs) -> Result<serde_json::Value> {
    let out = output_path(&cli.out_dir, &a.output)?;
    let taps = match a.taps {
        Some(t) => t,
        None if a.degree == 10 => DEFAULT_DEGREE10_TAPS,
        None => default_taps(a.degree)
            .ok_or_else(|| Error::param("degree", format!("no tabulated polynomial for degree {}", a.degree)))?,
    };
    let seq = ChipSequence::generate(a.degree, taps, a.seed_state)?;
    write_text(&out, &seq.to_text())?;
    log::info!("wrote {} chips to {}", seq.len(), out.display());
    Ok(json!({ "chips": seq.len(), "taps": format!("{taps:#x}"), "output": out }))
}

fn sound_sliding(cli: &CliConfig, a: &SoundSlidingArgs) -> Result<serde_json::Value> {
    let out = output_path(&cli.out_dir, &a.output)?;
    let config: SounderConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => SounderConfig::default(),
    };
    let sounder = SlidingSounder::new(config)?;
    let capture = BasebandSignal::read_capture(&a.capture)?;
    let expected = sounder.sample_rate();
    if (capture.sample_rate - expected).abs() > 1e-6 * expected {
        return Err(Error::format(
            &a.capture,
            format!(
                "sample rate {} Hz does not match the sounder's {expected} Hz",
                capture.sample_rate
            ),
        ));
    }
    let profile = sounder.measure(&capture.samples)?;
    write_text(&out, &profile.to_json())?;
    log::info!(
        "{} taps, path loss {:.2} dB, RMS delay spread {:.1} ns",
        profile.taps.len(),
        profile.wideband_path_loss_db,
        profile.rms_delay_spread * 1e9
    );
    Ok(json!({
        "taps": profile.taps.len(),
        "path_loss_db": profile.wideband_path_loss_db,
        "rms_delay_spread_s": profile.rms_delay_spread,
        "output": out,
    }))
}

fn sound_freq(cli: &CliConfig, a: &SoundFreqArgs) -> Result<serde_json::Value> {
    let out = output_path(&cli.out_dir, &a.output)?;
    let manifest: SweepManifest = read_json(&a.manifest)?;
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    let captures = manifest
        .captures
        .iter()
        .map(|p| BasebandSignal::read_capture(&base.join(p)))
        .collect::<Result<Vec<_>>>()?;
    let sets = freq::losses_from_captures(&manifest.plan, &manifest.transmitters, &captures)?;
    write_text(&out, &serde_json::to_string_pretty(&sets).expect("loss sets serialize"))?;
    let means: Vec<_> = sets
        .iter()
        .map(|s| json!({ "transmitter_id": s.transmitter_id, "mean_path_loss_db": freq::mean_wideband_path_loss(s) }))
        .collect();
    Ok(json!({ "transmitters": means, "output": out }))
}

fn load(a: &ScenarioArgs, seed: Option<u64>) -> Result<Scenario> {
    let mut s = campaign::load_scenario(&a.scenario)?;
    if let Some(seed) = seed {
        s.master_seed = seed;
    }
    Ok(s)
}

fn run_campaign(cli: &CliConfig, a: &ScenarioArgs) -> Result<serde_json::Value> {
    let scenario = load(a, cli.seed)?;
    ensure_dir(&cli.out_dir)?;
    let records = campaign::run_campaign(&scenario)?;
    let records_path = output_path(&cli.out_dir, Path::new("records.jsonl"))?;
    campaign::export_records(&records, &records_path)?;
    let mut heatmaps = Vec::new();
    let mut ids: Vec<u32> = scenario.transmitters.iter().map(|t| t.id).collect();
    ids.sort_unstable();
    for id in ids {
        let p = output_path(&cli.out_dir, Path::new(&format!("heatmap_tx{id}.csv")))?;
        campaign::export_heatmap(&records, id, &p)?;
        heatmaps.push(p);
    }
    let summary = campaign::summarize(&records);
    for s in &summary {
        log::info!(
            "tx {}: {}/{} detected, mean path loss {:.2} dB",
            s.transmitter_id,
            s.detected,
            s.records,
            s.mean_path_loss_db
        );
    }
    Ok(json!({
        "records": records.len(),
        "records_path": records_path,
        "heatmaps": heatmaps,
        "summary": summary,
    }))
}

fn validate(a: &ScenarioArgs) -> Result<serde_json::Value> {
    let path = &a.scenario;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    let kind = if value.get("plan").is_some() {
        let _: SweepManifest = read_json(path)?;
        "sweep manifest"
    } else if value.get("tone_offsets_hz").is_some() {
        let _: SweepPlan = read_json(path)?;
        "sweep plan"
    } else {
        let scenario = Scenario::parse(&text)?;
        let problems = scenario.problems();
        if let Some(first) = problems.first() {
            for p in &problems[1..] {
                log::warn!("{p}");
            }
            return Err(Error::Scenario {
                path: first.path.clone(),
                reason: if problems.len() > 1 {
                    format!("{} (and {} more problem(s))", first.reason, problems.len() - 1)
                } else {
                    first.reason.clone()
                },
            });
        }
        "scenario"
    };
    log::info!("{}: valid {kind}", path.display());
    Ok(json!({ "valid": true, "kind": kind }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_paths_stay_inside() {
        let d = Path::new("/tmp/out");
        assert_eq!(output_path(d, Path::new("a/b.json")).unwrap(), d.join("a/b.json"));
        assert!(output_path(d, Path::new("../x")).is_err());
        assert!(output_path(d, Path::new("/etc/x")).is_err());
        assert!(output_path(d, Path::new("a/../../x")).is_err());
    }

    #[test]
    fn hex_masks() {
        assert_eq!(parse_hex("0x9").unwrap(), 9);
        assert_eq!(parse_hex("1B").unwrap(), 0x1b);
        assert!(parse_hex("zz").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["chansound", "--bogus"]), 2);
        assert_eq!(run(["chansound"]), 2);
        assert_eq!(run(["chansound", "--help"]), 0);
    }
}
