//! Launch-power sweep of all schemes on the scaled link, written as CSV,
//! constellation dumps and a manifest. Rerunning resumes where it stopped.
use coofdm::harness::{run_sweep, DumpStage, ExperimentConfig};

fn main() -> coofdm::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "scaled_sweep".into());
    let mut cfg = ExperimentConfig::scaled();
    cfg.launch_dbm = vec![-2.0, 2.0, 6.0];
    cfg.n_ofdm_symbols = 100;
    cfg.workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    cfg.output.dump_stages = vec![DumpStage::XNoCpe, DumpStage::X, DumpStage::DecisionNoCpe, DumpStage::Decision];
    let report = run_sweep(&cfg, out.as_ref())?;
    for r in &report.records {
        println!(
            "{:<11} {:+.0} dBm  BER {:.3e}  Q {}",
            r.scheme,
            r.launch_dbm,
            r.ber,
            r.q_db.map_or("n/a".into(), |q| format!("{q:.2} dB"))
        );
    }
    println!("results in {}", report.csv_path.display());
    Ok(())
}
