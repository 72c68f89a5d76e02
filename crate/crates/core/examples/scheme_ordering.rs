//! Q of the twin, subcarrier-pair and 16-QAM twin schemes on the scaled
//! link, three dB above the twin scheme's optimum launch power.
use coofdm::coding::SchemeKind;
use coofdm::harness::{optimum_launch, run_point, ExperimentConfig, Point};

fn main() -> coofdm::Result<()> {
    let mut cfg = ExperimentConfig::scaled();
    let compare_symbols: usize = std::env::args().nth(1).map_or(Ok(cfg.n_ofdm_symbols), |a| a.parse()).expect("symbol count");
    let grid: Vec<f64> = (-2..=8).map(f64::from).collect();
    let (opt, curve) = optimum_launch(&cfg, SchemeKind::LpcPcts, 0.5, &grid, 1)?;
    for (p, q) in &curve {
        println!("lpc-pcts {p:+.1} dBm  Q {q:.2} dB");
    }
    let launch_dbm = opt + 3.0;
    println!("optimum {opt:+.1} dBm, comparing at {launch_dbm:+.1} dBm");
    cfg.n_ofdm_symbols = compare_symbols;
    for seed in 1..=3 {
        for scheme in [SchemeKind::LpcPcts, SchemeKind::Pcsc, SchemeKind::Pctw16Qam] {
            let o = run_point(&cfg, &Point { scheme, pre_edc: 0.5, launch_dbm, seed }, None)?;
            println!(
                "seed {seed} {:<11} errors {:>6}  Q {:.2} dB  (counted {}, gaussian {:.2})",
                scheme.name(),
                o.record.n_errors,
                o.q_effective_db(),
                o.record.q_db.map_or("n/a".into(), |q| format!("{q:.2}")),
                o.q_gauss_db
            );
        }
    }
    Ok(())
}
