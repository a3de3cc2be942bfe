//! RRC design, matched-filter Nyquist check, round trip and timing-phase
//! recovery on a delayed, noisy chip train.

use chansound::channel::add_awgn;
use chansound::pn::ChipSequence;
use chansound::pulse::{
    design_rrc, design_rrc_with, estimate_timing_phase, modulate, recover_symbols, RrcDesign,
};
use chansound::Complex64;

fn worst_isi(g: &[f64], sps: usize) -> f64 {
    let c = g.len() / 2;
    (1..=c / sps).map(|k| g[c + k * sps].abs()).fold(0.0, f64::max)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (beta, span, sps) = (0.35, 10, 4);
    let taps = design_rrc(beta, span, sps)?;
    let plain = design_rrc_with(RrcDesign::Truncated, beta, span, sps)?;
    println!("{} taps, design {:?}", taps.len(), taps.design());
    println!(
        "worst inter-symbol leakage of the matched pair: {:.1e} (plain truncation {:.1e})",
        worst_isi(&taps.self_convolution(), sps),
        worst_isi(&plain.self_convolution(), sps)
    );

    let chips = ChipSequence::m_sequence(10)?;
    let sig = modulate(&chips, 2, &taps, 60e-9)?;
    let sym = recover_symbols(&sig, &taps, 0)?;
    let err = sym
        .iter()
        .zip(chips.chips().iter().cycle())
        .map(|(s, &c)| (s - f64::from(c)).norm())
        .fold(0.0, f64::max);
    println!("round trip: {} symbols, max error {err:.1e}", sym.len());

    for planted in 0..sps {
        let mut delayed = sig.clone();
        let mut samples = vec![Complex64::new(0.0, 0.0); planted];
        samples.extend_from_slice(&sig.samples);
        delayed.samples = samples;
        let noisy = add_awgn(&delayed, -20.0, planted as u64);
        println!(
            "planted phase {planted} -> estimated {}",
            estimate_timing_phase(&noisy, &chips, &taps)?
        );
    }
    Ok(())
}
