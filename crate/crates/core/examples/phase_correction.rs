//! Common phase error on the scaled link: the mean rotation of the
//! x-polarization constellation before and after pilot-aided correction,
//! per correction mode and launch power.
use coofdm::coding::SchemeKind;
use coofdm::harness::{run_point, ExperimentConfig, Point};
use coofdm::rxdsp::CpeMode;

fn main() -> coofdm::Result<()> {
    let mut cfg = ExperimentConfig::scaled();
    cfg.n_ofdm_symbols = 60;
    cfg.amplifier.ase = !std::env::args().any(|a| a == "--no-ase");
    for mode in [CpeMode::Off, CpeMode::Independent, CpeMode::Tied] {
        cfg.equalizer.cpe = mode;
        for launch_dbm in [-2.0, 2.0, 4.0] {
            let p = Point { scheme: SchemeKind::LpcPcts, pre_edc: 0.5, launch_dbm, seed: 1 };
            let o = run_point(&cfg, &p, None)?;
            println!(
                "{mode:?} {launch_dbm:+.0} dBm: rotation before {:+.4} rad, after {:+.4} rad, mean estimate {:+.4} rad, errors {}",
                o.rotation_before_cpe,
                o.rotation_after_cpe,
                o.phase.mean(),
                o.record.n_errors
            );
        }
    }
    Ok(())
}
