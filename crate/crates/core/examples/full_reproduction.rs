//! The full 35 x 80 km system at 3 dBm: Q of the twin scheme and the
//! subcarrier-pair scheme with and without half pre-compensation.
//! Takes hours on one core.
use coofdm::coding::SchemeKind;
use coofdm::harness::{run_point, ExperimentConfig, Point};

fn main() -> coofdm::Result<()> {
    let cfg = ExperimentConfig::default();
    for pre_edc in [0.5, 0.0] {
        let mut q = Vec::new();
        for scheme in [SchemeKind::LpcPcts, SchemeKind::Pcsc] {
            let o = run_point(&cfg, &Point { scheme, pre_edc, launch_dbm: 3.0, seed: 1 }, None)?;
            println!(
                "pre-EDC {pre_edc}: {:<9} errors {:>7} of {}  Q {:.2} dB",
                scheme.name(),
                o.record.n_errors,
                o.record.n_bits,
                o.q_effective_db()
            );
            q.push(o.q_effective_db());
        }
        println!("pre-EDC {pre_edc}: delta Q {:.2} dB", q[0] - q[1]);
    }
    Ok(())
}
