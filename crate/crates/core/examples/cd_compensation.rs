//! Linear link (no Kerr effect, no noise): pre-compensation plus receiver
//! compensation returns the transmitted OFDM symbols. What remains is the
//! spectral sidelobe energy beyond the equalizer passband, where the filter
//! phase departs from the exact inverse.
use coofdm::coding::SchemeKind;
use coofdm::harness::{run_point, ExperimentConfig, Point};
use coofdm::rxdsp::dispersion_memory;

fn main() -> coofdm::Result<()> {
    let mut cfg = ExperimentConfig::scaled();
    cfg.fiber.n2 = 0.0;
    cfg.amplifier.ase = false;
    cfg.n_ofdm_symbols = 20;
    let fs = cfg.ofdm.padded_sample_rate();
    for pre_edc in [0.0, 0.5, 1.0] {
        let link = cfg.link_config(pre_edc, 0.0)?;
        let memory = dispersion_memory(link.residual_dispersion(), cfg.ofdm.occupied_bandwidth(), fs);
        let p = Point { scheme: SchemeKind::Pdm4Qam, pre_edc, launch_dbm: 0.0, seed: 1 };
        let o = run_point(&cfg, &p, None)?;
        println!("pre-EDC {pre_edc:.1}: receiver memory {memory:>4} samples, EVM {:.2e}", o.record.evm);
    }
    Ok(())
}
