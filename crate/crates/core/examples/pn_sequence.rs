//! Generates the degree-10 m-sequence, checks its two-valued periodic
//! autocorrelation and optionally writes it as text (one chip per line).

use chansound::pn::{circular_correlate, default_taps, ChipSequence, Glfsr};
use chansound::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let degree = 10;
    let taps = default_taps(degree).ok_or("no default taps")?;
    let lfsr = Glfsr::new(degree, taps, 1)?;
    println!("degree {degree}, taps 0x{taps:03x}, period {}", lfsr.period());

    let seq = ChipSequence::generate(degree, taps, 1)?;
    let ones = seq.chips().iter().filter(|&&c| c == 1).count();
    println!("N = {}, +1 chips {ones}, -1 chips {}", seq.len(), seq.len() - ones);
    let head: Vec<String> = seq.chips()[..16].iter().map(|c| format!("{c:+}")).collect();
    println!("first chips: {}", head.join(" "));

    let obs: Vec<Complex64> = seq.to_f64().into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let prof = circular_correlate(&seq, &obs)?;
    let v = prof.values();
    let (lo, hi) = v[1..]
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x.re), hi.max(x.re)));
    println!("autocorrelation peak {:.6}, off-peak range [{lo:.6}, {hi:.6}] (-1/N = {:.6})", v[0].re, -1.0 / seq.len() as f64);

    if let Some(path) = std::env::args().nth(1) {
        seq.write_text(path.as_ref())?;
        println!("wrote {path}");
    }
    Ok(())
}
