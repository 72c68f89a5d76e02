use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coofdm::coding::SchemeKind;
use coofdm::harness::{run_oracle, run_point, run_sweep, validate_report, ExperimentConfig, Point};
use coofdm::metrics::write_records;
use coofdm::Result;

#[derive(Parser)]
#[command(name = "sim", version, about = "Dual-polarization CO-OFDM link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single point; defaults to the first entry of each configured list.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        scheme: Option<SchemeKind>,
        /// Launch power, dBm.
        #[arg(long, allow_hyphen_values = true)]
        power: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fraction of the link dispersion pre-compensated at the transmitter.
        #[arg(long)]
        pre_edc: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every configured point, resuming an interrupted sweep in the same directory.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write first-order perturbation reports.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the configuration and print derived quantities.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig::load(path)?;
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            config,
            scheme,
            power,
            seed,
            pre_edc,
            out,
        } => {
            let cfg = load(&config)?;
            let point = Point {
                scheme: scheme.unwrap_or(cfg.schemes[0]),
                pre_edc: pre_edc.unwrap_or(cfg.pre_edc[0]),
                launch_dbm: power.unwrap_or(cfg.launch_dbm[0]),
                seed: seed.unwrap_or(cfg.seeds[0]),
            };
            if let Some(o) = &out {
                std::fs::create_dir_all(o)?;
            }
            let outcome = run_point(&cfg, &point, out.as_deref())?;
            let r = &outcome.record;
            if let Some(o) = &out {
                write_records(o.join(format!("{}.csv", point.key())), std::slice::from_ref(r))?;
            }
            println!("scheme,pre_edc,launch_dbm,seed,n_bits,n_errors,ber,q_db,evm");
            println!(
                "{},{},{},{},{},{},{:e},{},{:e}",
                r.scheme,
                r.pre_edc,
                r.launch_dbm,
                r.seed,
                r.n_bits,
                r.n_errors,
                r.ber,
                r.q_db.map_or(String::new(), |q| format!("{q:.4}")),
                r.evm
            );
            Ok(true)
        }
        Command::Sweep { config, out } => {
            let cfg = load(&config)?;
            let out = out.unwrap_or_else(|| cfg.out_dir.clone());
            let report = run_sweep(&cfg, &out)?;
            println!("{} points written to {}", report.records.len(), report.csv_path.display());
            for (key, err) in &report.failures {
                eprintln!("failed {key}: {err}");
            }
            Ok(report.failures.is_empty())
        }
        Command::Oracle { config, out } => {
            let cfg = load(&config)?;
            let out = out.unwrap_or_else(|| cfg.out_dir.join("oracle"));
            for s in run_oracle(&cfg, &out)? {
                println!(
                    "{} pre_edc={} spans={}: corr={:.4}{:+.4}i residual={:.4} max|Im eta|/|eta|={:.4}{}",
                    s.label,
                    s.pre_edc,
                    s.n_spans,
                    s.corr_re,
                    s.corr_im,
                    s.residual_ratio,
                    s.max_imag_eta_ratio,
                    s.split_step_rel_error
                        .map_or(String::new(), |e| format!(" split-step error={e:.4}"))
                );
            }
            Ok(true)
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            for line in validate_report(&cfg)? {
                println!("{line}");
            }
            println!("ok");
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
