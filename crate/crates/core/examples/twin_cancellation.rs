//! Detector-input SNR of every scheme on the scaled link, and for the twin
//! scheme how much of the distortion survives coherent superposition.
//! Pass `--ase` to switch amplifier noise on.
use coofdm::coding::SchemeKind;
use coofdm::harness::{run_point, ExperimentConfig, Point};

fn main() -> coofdm::Result<()> {
    let mut cfg = ExperimentConfig::scaled();
    cfg.n_ofdm_symbols = 60;
    cfg.amplifier.ase = std::env::args().any(|a| a == "--ase");
    println!("pre_edc launch_dbm  scheme       snr_db  superposed/var_x  corr");
    for pre_edc in [0.0, 0.5] {
        for launch_dbm in [-3.0, 0.0, 3.0, 6.0] {
            for scheme in SchemeKind::ALL {
                let p = Point { scheme, pre_edc, launch_dbm, seed: 1 };
                let o = run_point(&cfg, &p, None)?;
                let s = o.stats;
                println!(
                    "{pre_edc:7.1} {launch_dbm:10.1}  {:<11} {:7.2}  {:16.4}  {:.3}{:+.3}i",
                    scheme.name(),
                    o.decision_snr_db,
                    s.variance_superposed / s.variance_x,
                    s.correlation.re,
                    s.correlation.im
                );
            }
        }
    }
    Ok(())
}
