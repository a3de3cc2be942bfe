//! Sounds a planted three-path channel with the sliding correlator, prints
//! the recovered profile and writes the received capture (raw cf32 plus JSON
//! sidecar) so it can be fed to `chansound sound-sliding --capture`.

use std::path::PathBuf;

use chansound::channel::{add_awgn, apply_channel, MultipathChannel};
use chansound::sliding::{SlidingSounder, SounderConfig};
use chansound::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SounderConfig::default();
    let sounder = SlidingSounder::new(cfg.clone())?;
    println!(
        "N = {}, T_s = {:.0} ns, unambiguous delay {:.2} us, M = {}",
        sounder.chips().len(),
        cfg.chip_period_s * 1e9,
        cfg.unambiguous_delay() * 1e6,
        cfg.averaging_periods
    );

    // 70 dB of path loss spread over three echoes.
    let planted = [
        (0usize, Complex64::from_polar(3.0e-4, 0.3)),
        (2, Complex64::from_polar(1.5e-4, -1.1)),
        (7, Complex64::from_polar(0.4e-4, 2.0)),
    ];
    let channel = MultipathChannel::from_chip_lags(&planted, cfg.chip_period_s)?;
    println!("true path loss {:.2} dB", -10.0 * channel.total_power().log10());

    let tx = sounder.transmit(cfg.averaging_periods + 2)?;
    let rx = add_awgn(&apply_channel(&tx, &channel)?, -95.0, 7);
    let profile = sounder.measure(&rx.samples)?;
    for tap in &profile.taps {
        println!(
            "lag {:3} ({:6.1} ns): {:7.2} dB, {:6.1} deg",
            tap.lag,
            tap.lag as f64 * cfg.chip_period_s * 1e9,
            20.0 * tap.gain.norm().log10(),
            tap.gain.arg().to_degrees()
        );
    }
    println!(
        "measured path loss {:.2} dB, RMS delay spread {:.1} ns",
        profile.wideband_path_loss_db,
        profile.rms_delay_spread * 1e9
    );

    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("chansound_sliding"));
    std::fs::create_dir_all(&out_dir)?;
    let path = out_dir.join("capture.cf32");
    rx.write_capture(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
