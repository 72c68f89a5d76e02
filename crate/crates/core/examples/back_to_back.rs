//! Every scheme over a zero-span, noiseless link: encoding, framing, OFDM
//! and the receiver chain must reproduce the bits exactly.
use coofdm::coding::SchemeKind;
use coofdm::harness::{run_point, ExperimentConfig, Point};

fn main() -> coofdm::Result<()> {
    let mut cfg = ExperimentConfig::scaled();
    cfg.link.n_spans = 0;
    cfg.amplifier.ase = false;
    cfg.n_ofdm_symbols = 100;
    for scheme in SchemeKind::ALL {
        let p = Point { scheme, pre_edc: 0.5, launch_dbm: 0.0, seed: 1 };
        let r = run_point(&cfg, &p, None)?.record;
        println!("{:<11} {} bits, {} errors, EVM {:.2e}", r.scheme, r.n_bits, r.n_errors, r.evm);
    }
    Ok(())
}
