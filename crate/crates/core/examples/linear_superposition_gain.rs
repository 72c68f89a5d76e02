//! Without Kerr nonlinearity, coherent superposition of the twins halves the
//! amplifier-noise variance.
use coofdm::coding::SchemeKind;
use coofdm::harness::{run_point, ExperimentConfig, Point};

fn main() -> coofdm::Result<()> {
    let mut cfg = ExperimentConfig::scaled();
    cfg.fiber.n2 = 0.0;
    cfg.n_ofdm_symbols = 100;
    for scheme in [SchemeKind::LpcPcts, SchemeKind::Pctw16Qam] {
        for launch_dbm in [-14.0, -10.0] {
            let p = Point { scheme, pre_edc: 0.5, launch_dbm, seed: 3 };
            let s = run_point(&cfg, &p, None)?.stats;
            println!(
                "{:<11} {launch_dbm:+.0} dBm  superposed/single variance {:.4}",
                scheme.name(),
                s.variance_superposed / s.variance_x
            );
        }
    }
    Ok(())
}
