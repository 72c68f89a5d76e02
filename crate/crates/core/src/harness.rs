//! Experiment configuration and orchestration: single points, launch-power
//! sweeps, oracle reports and configuration checks.
//!
//! A point runs the whole chain: bits, scheme encoding, framing with pilots
//! and training, OFDM modulation, launch scaling, pre-compensation, the
//! fiber link, dispersion compensation, demodulation, one-tap equalization,
//! phase correction, decoding and error counting.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use log::{info, warn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{
    dbm_to_watts, propagate_link_observed, set_launch_power, AmplifierParams, FiberSpec, LinkConfig, StepControl,
};
use crate::coding::{CodingScheme, SchemeKind};
use crate::error::{Error, Result, StageExt};
use crate::grid::{DualPolGrid, SymbolGrid, SymbolKind};
use crate::metrics::{
    count_bit_errors, error_vector_stats, write_constellation, write_records, DumpHeader, ErrorVectorStats,
    MetricsRecord,
};
use crate::ofdm::{
    default_pilot_values, insert_pilots_and_training, ofdm_demodulate, ofdm_modulate, training_grid,
    training_grid_stream, OfdmParams,
};
use crate::oracle::{
    anti_correlation_check, max_imag_ratio, relative_l2_error, split_step_distortion, waveform_distortion,
    write_eta_grid, write_profile, write_summaries, LinkProfile, OracleFrame, OracleSummary,
};
use crate::rxdsp::{cd_compensate, cpe_correct_dual, dispersion_memory, equalize_framed, EqualizerConfig, PhaseTrace};
use crate::signal::{prbs_generate, RandomSource};

/// Stream of the amplifier noise generator, per seed.
const NOISE_STREAM: u64 = 0x4153_45;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub n_spans: usize,
    /// Largest nonlinear phase per split-step step, rad.
    pub max_phase: f64,
    /// Largest split-step step, m.
    pub max_step: f64,
}

impl Default for LinkSection {
    fn default() -> Self {
        let s = StepControl::default();
        Self {
            n_spans: 35,
            max_phase: s.max_phase,
            max_step: s.max_step,
        }
    }
}

/// Receiver stages that can be written as constellation dumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DumpStage {
    /// Equalized x polarization before phase correction.
    XNoCpe,
    /// Equalized x polarization after phase correction.
    X,
    /// Symbols handed to the detector (the coherent superposition for twin schemes), no phase correction.
    DecisionNoCpe,
    /// Symbols handed to the detector after phase correction.
    Decision,
}

impl DumpStage {
    pub fn name(self) -> &'static str {
        match self {
            DumpStage::XNoCpe => "x-no-cpe",
            DumpStage::X => "x",
            DumpStage::DecisionNoCpe => "decision-no-cpe",
            DumpStage::Decision => "decision",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dump_stages: Vec<DumpStage>,
    /// Write the per-symbol phase estimates of every point.
    #[serde(default)]
    pub phase_trace: bool,
    /// Write the field after every span (binary dumps; large).
    #[serde(default)]
    pub dump_spans: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub n_bins: usize,
    pub n_active: usize,
    pub subcarrier_spacing: f64,
    pub scheme: SchemeKind,
    pub launch_dbm: f64,
    pub seed: u64,
    /// Spans of the split-step cross-check.
    pub equivalence_spans: usize,
    /// Step limits of the split-step cross-check.
    pub max_phase: f64,
    pub max_step: f64,
    /// Quadrature nodes per span.
    pub samples_per_span: usize,
    /// The eta grid report covers offsets of `-eta_grid_half..=eta_grid_half` bins.
    pub eta_grid_half: i64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let f = OracleFrame::default();
        Self {
            n_bins: f.n_bins,
            n_active: f.n_active,
            subcarrier_spacing: f.subcarrier_spacing,
            scheme: f.scheme,
            launch_dbm: f.launch_power_dbm,
            seed: f.seed,
            equivalence_spans: 2,
            max_phase: 0.005,
            max_step: 100.0,
            samples_per_span: 4096,
            eta_grid_half: 64,
        }
    }
}

impl OracleConfig {
    pub fn frame(&self) -> OracleFrame {
        OracleFrame {
            n_bins: self.n_bins,
            n_active: self.n_active,
            subcarrier_spacing: self.subcarrier_spacing,
            scheme: self.scheme,
            launch_power_dbm: self.launch_dbm,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.frame().validate()?;
        StepControl {
            max_phase: self.max_phase,
            max_step: self.max_step,
        }
        .validate()?;
        if self.samples_per_span == 0 || self.equivalence_spans == 0 {
            return Err(Error::param("oracle samples_per_span and equivalence_spans must be > 0"));
        }
        if self.eta_grid_half < 0 {
            return Err(Error::param("eta_grid_half must be >= 0"));
        }
        Ok(())
    }
}

/// Everything one sweep needs. Scalars come first so the file serializes
/// as plain keys followed by one table per module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schemes: Vec<SchemeKind>,
    /// Fractions of the link dispersion applied at the transmitter.
    pub pre_edc: Vec<f64>,
    pub launch_dbm: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Payload OFDM symbols per point (training symbols come on top).
    pub n_ofdm_symbols: usize,
    pub out_dir: PathBuf,
    #[serde(default = "one")]
    pub workers: usize,
    pub ofdm: OfdmParams,
    pub link: LinkSection,
    pub fiber: FiberSpec,
    pub amplifier: AmplifierParams,
    pub equalizer: EqualizerConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

fn one() -> usize {
    1
}

impl Default for ExperimentConfig {
    /// 35 x 80 km, 4096-point FFT at 64 GSa/s with 3300 data subcarriers,
    /// all four schemes with and without half pre-compensation.
    fn default() -> Self {
        Self {
            schemes: SchemeKind::ALL.to_vec(),
            pre_edc: vec![0.0, 0.5],
            launch_dbm: (-6..=6).step_by(2).map(f64::from).collect(),
            seeds: vec![1],
            n_ofdm_symbols: 196,
            out_dir: PathBuf::from("results"),
            workers: 1,
            ofdm: OfdmParams::default(),
            link: LinkSection::default(),
            fiber: FiberSpec::default(),
            amplifier: AmplifierParams::default(),
            equalizer: EqualizerConfig::default(),
            output: OutputConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Ten spans and 256 data subcarriers on a 512-point FFT.
    pub fn scaled() -> Self {
        Self {
            pre_edc: vec![0.5],
            n_ofdm_symbols: 294,
            ofdm: OfdmParams::scaled(),
            link: LinkSection {
                n_spans: 10,
                ..LinkSection::default()
            },
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Check every parameter before anything runs.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: &str| Err(Error::Config(m.to_string()));
        if self.schemes.is_empty() {
            return cfg("at least one scheme is required");
        }
        if self.launch_dbm.is_empty() || self.launch_dbm.iter().any(|p| !p.is_finite()) {
            return cfg("launch_dbm must be a non-empty list of finite powers");
        }
        if self.seeds.is_empty() {
            return cfg("at least one seed is required");
        }
        if self.pre_edc.is_empty() || self.pre_edc.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return cfg("pre_edc must be a non-empty list of fractions in [0, 1]");
        }
        if self.n_ofdm_symbols == 0 {
            return cfg("n_ofdm_symbols must be > 0");
        }
        if self.workers == 0 {
            return cfg("workers must be > 0");
        }
        self.ofdm.validate().stage("ofdm")?;
        if self.ofdm.n_data % 2 != 0 {
            return cfg("n_data must be even so that subcarriers pair up");
        }
        self.equalizer.validate().stage("equalizer")?;
        self.oracle.validate().stage("oracle")?;
        for &f in &self.pre_edc {
            self.link_config(f, self.launch_dbm[0]).stage("link")?;
        }
        Ok(())
    }

    pub fn link_config(&self, pre_edc: f64, launch_dbm: f64) -> Result<LinkConfig> {
        let link = LinkConfig {
            n_spans: self.link.n_spans,
            fiber: self.fiber.params()?,
            amp: self.amplifier,
            pre_edc_fraction: pre_edc,
            launch_power_dbm: launch_dbm,
            step: StepControl {
                max_phase: self.link.max_phase,
                max_step: self.link.max_step,
            },
        };
        link.validate()?;
        Ok(link)
    }

    /// All points in output order: scheme, pre-compensation, launch power, seed.
    pub fn points(&self) -> Vec<Point> {
        let mut schemes = self.schemes.clone();
        schemes.sort_by_key(|s| s.name());
        schemes.dedup();
        let mut pts = Vec::new();
        for &scheme in &schemes {
            for &pre_edc in &sorted(&self.pre_edc) {
                for &launch_dbm in &sorted(&self.launch_dbm) {
                    let mut seeds = self.seeds.clone();
                    seeds.sort_unstable();
                    seeds.dedup();
                    for seed in seeds {
                        pts.push(Point {
                            scheme,
                            pre_edc,
                            launch_dbm,
                            seed,
                        });
                    }
                }
            }
        }
        pts
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// One experiment point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub scheme: SchemeKind,
    pub pre_edc: f64,
    pub launch_dbm: f64,
    pub seed: u64,
}

impl Point {
    /// File-name stem identifying the point.
    pub fn key(&self) -> String {
        format!(
            "{}_pre{:.2}_p{:+.2}_s{}",
            self.scheme.name(),
            self.pre_edc,
            self.launch_dbm,
            self.seed
        )
    }
}

/// Result of one point beyond its CSV record.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub record: MetricsRecord,
    /// Error statistics of the equalized, phase-corrected subcarriers.
    pub stats: ErrorVectorStats,
    /// `arg sum r conj(t)` over the x-polarization data subcarriers before
    /// phase correction. Twin superposition hides this rotation, so it is
    /// taken before superposition.
    pub rotation_before_cpe: f64,
    /// The same after phase correction.
    pub rotation_after_cpe: f64,
    /// `10 log10(sum |t|^2 / sum |d - t|^2)` over the phase-corrected decision symbols.
    pub decision_snr_db: f64,
    /// Gaussian-noise Q of the decision symbols: half the alphabet's minimum
    /// distance over the per-dimension RMS error, dB.
    pub q_gauss_db: f64,
    pub phase: PhaseTrace,
}

impl PointOutcome {
    /// Q from the bit error ratio when enough errors were counted, the
    /// Gaussian estimate otherwise.
    pub fn q_effective_db(&self) -> f64 {
        match self.record.q_db {
            Some(q) if !self.record.low_confidence() => q,
            _ => self.q_gauss_db,
        }
    }
}

/// Transmitted grids and the payload they carry.
struct Transmitted {
    framed: DualPolGrid,
    bits: Vec<u8>,
    pilots_x: Vec<Complex64>,
    pilots_y: Vec<Complex64>,
    training: DualPolGrid,
}

fn transmit(cfg: &ExperimentConfig, codec: &dyn CodingScheme, seed: u64) -> Result<Transmitted> {
    let p = &cfg.ofdm;
    let per_symbol = codec.bits_per_ofdm_symbol(p.n_data);
    let bits = prbs_generate(seed, per_symbol * cfg.n_ofdm_symbols);
    let roles = p.roles();
    let mut gx = SymbolGrid::new(roles.clone());
    let mut gy = SymbolGrid::new(roles);
    for chunk in bits.bits().chunks_exact(per_symbol) {
        let s = codec.encode(chunk)?;
        gx.push_data_row(SymbolKind::Data, &s.x)?;
        gy.push_data_row(SymbolKind::Data, &s.y)?;
    }
    let pilots_x = default_pilot_values(p.n_pilots);
    let tx_train = training_grid(p);
    let (pilots_y, ty_train) = if codec.conjugate_twin() {
        (pilots_x.iter().map(|v| v.conj()).collect(), tx_train.conj())
    } else {
        let mut py = pilots_x.clone();
        py.rotate_left(1);
        (py, training_grid_stream(p, 2))
    };
    let framed = DualPolGrid {
        x: insert_pilots_and_training(&gx, p, &pilots_x, &tx_train)?,
        y: insert_pilots_and_training(&gy, p, &pilots_y, &ty_train)?,
    };
    Ok(Transmitted {
        framed,
        bits: bits.bits().to_vec(),
        pilots_x,
        pilots_y,
        training: DualPolGrid {
            x: tx_train,
            y: ty_train,
        },
    })
}

fn data_rows(g: &SymbolGrid) -> Vec<Vec<Complex64>> {
    g.rows_of(SymbolKind::Data).into_iter().map(|i| g.data_values(i)).collect()
}

fn decisions(codec: &dyn CodingScheme, g: &DualPolGrid) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for (x, y) in data_rows(&g.x).iter().zip(data_rows(&g.y)) {
        out.extend(codec.decision_symbols(x, &y)?);
    }
    Ok(out)
}

fn mean_rotation(rx: &[Complex64], tx: &[Complex64]) -> f64 {
    rx.iter().zip(tx).map(|(r, t)| r * t.conj()).sum::<Complex64>().arg()
}

fn decision_snr_db(rx: &[Complex64], tx: &[Complex64]) -> f64 {
    let signal: f64 = tx.iter().map(|t| t.norm_sqr()).sum();
    let error: f64 = rx.iter().zip(tx).map(|(r, t)| (r - t).norm_sqr()).sum();
    10.0 * (signal / error).log10()
}

fn q_gauss_db(rx: &[Complex64], tx: &[Complex64], d_min: f64) -> f64 {
    let error: f64 = rx.iter().zip(tx).map(|(r, t)| (r - t).norm_sqr()).sum::<f64>() / tx.len() as f64;
    20.0 * (d_min / (2.0 * (error / 2.0).sqrt())).log10()
}

/// Run the whole chain for one point. With `out` set, configured dumps go
/// below it.
pub fn run_point(cfg: &ExperimentConfig, point: &Point, out: Option<&Path>) -> Result<PointOutcome> {
    let codec = point.scheme.codec();
    let link = cfg.link_config(point.pre_edc, point.launch_dbm).stage("config")?;
    let tx = transmit(cfg, codec.as_ref(), point.seed).stage("transmit")?;

    let wave = ofdm_modulate(&tx.framed, &cfg.ofdm).stage("modulate")?;
    let wave = set_launch_power(wave, point.launch_dbm).stage("launch")?;
    let key = point.key();
    let span_dir = match (out, cfg.output.dump_spans) {
        (Some(o), true) => {
            let d = o.join("spans");
            fs::create_dir_all(&d)?;
            Some(d)
        }
        _ => None,
    };
    let mut rng = RandomSource::with_stream(point.seed, NOISE_STREAM);
    let rx_wave = propagate_link_observed(wave, &link, &mut rng, |span, w| match &span_dir {
        Some(d) => w.write_binary(d.join(format!("{key}_span{span:03}.bin"))),
        None => Ok(()),
    })
    .stage("link")?;

    let rx_wave = cd_compensate(&rx_wave, &link, &cfg.equalizer).stage("cd-compensate")?;
    let rx = ofdm_demodulate(&rx_wave, &cfg.ofdm).stage("demodulate")?;
    let eq = DualPolGrid {
        x: equalize_framed(&rx.x, &tx.training.x).stage("channel-estimate")?,
        y: equalize_framed(&rx.y, &tx.training.y).stage("channel-estimate")?,
    };
    let (cx, cy, phase) =
        cpe_correct_dual(&eq.x, &eq.y, &tx.pilots_x, &tx.pilots_y, cfg.equalizer.cpe).stage("cpe")?;
    let corrected = DualPolGrid { x: cx, y: cy };

    let mut rx_bits = Vec::with_capacity(tx.bits.len());
    for (x, y) in data_rows(&corrected.x).iter().zip(data_rows(&corrected.y)) {
        rx_bits.extend(codec.decode(x, &y).stage("decode")?);
    }
    let n_errors = count_bit_errors(&tx.bits, &rx_bits).stage("count")?;
    let stats = error_vector_stats(&corrected, &tx.framed).stage("metrics")?;

    let tx_dec = decisions(codec.as_ref(), &tx.framed)?;
    let tx_x = data_rows(&tx.framed.x).concat();
    let dec_no_cpe = decisions(codec.as_ref(), &eq)?;
    let dec = decisions(codec.as_ref(), &corrected)?;
    let record = MetricsRecord::new(
        point.scheme.name(),
        point.pre_edc,
        point.launch_dbm,
        point.seed,
        tx.bits.len(),
        n_errors,
        stats.evm,
    );
    if record.low_confidence() {
        warn!("{key}: only {n_errors} bit errors; BER estimate is low-confidence");
    }

    if let Some(o) = out {
        write_point_artifacts(cfg, point, o, &eq, &corrected, &dec_no_cpe, &dec, &phase)?;
    }
    Ok(PointOutcome {
        record,
        stats,
        rotation_before_cpe: mean_rotation(&data_rows(&eq.x).concat(), &tx_x),
        rotation_after_cpe: mean_rotation(&data_rows(&corrected.x).concat(), &tx_x),
        decision_snr_db: decision_snr_db(&dec, &tx_dec),
        q_gauss_db: q_gauss_db(&dec, &tx_dec, codec.alphabet().min_distance()),
        phase,
    })
}

#[allow(clippy::too_many_arguments)]
fn write_point_artifacts(
    cfg: &ExperimentConfig,
    point: &Point,
    out: &Path,
    eq: &DualPolGrid,
    corrected: &DualPolGrid,
    dec_no_cpe: &[Complex64],
    dec: &[Complex64],
    phase: &PhaseTrace,
) -> Result<()> {
    let key = point.key();
    if !cfg.output.dump_stages.is_empty() {
        let dir = out.join("constellations");
        fs::create_dir_all(&dir)?;
        for stage in &cfg.output.dump_stages {
            let points: Vec<Complex64> = match stage {
                DumpStage::XNoCpe => data_rows(&eq.x).concat(),
                DumpStage::X => data_rows(&corrected.x).concat(),
                DumpStage::DecisionNoCpe => dec_no_cpe.to_vec(),
                DumpStage::Decision => dec.to_vec(),
            };
            let header = DumpHeader {
                scheme: point.scheme.name().to_string(),
                launch_dbm: point.launch_dbm,
                stage: stage.name().to_string(),
            };
            write_constellation(&points, &header, dir.join(format!("{key}_{}.txt", stage.name())))?;
        }
    }
    if cfg.output.phase_trace {
        let dir = out.join("phase");
        fs::create_dir_all(&dir)?;
        phase.write_csv(dir.join(format!("{key}.csv")))?;
    }
    Ok(())
}

/// Launch power with the highest Gaussian Q estimate for one scheme, searched
/// over `grid` (dBm) at a single seed. Returns the optimum and every `(dBm, Q)`.
///
/// The estimate is defined at every power, including those with no counted
/// errors, so the curve has no jump where counting takes over.
pub fn optimum_launch(
    cfg: &ExperimentConfig,
    scheme: SchemeKind,
    pre_edc: f64,
    grid: &[f64],
    seed: u64,
) -> Result<(f64, Vec<(f64, f64)>)> {
    let mut curve = Vec::with_capacity(grid.len());
    for &launch_dbm in grid {
        let p = Point {
            scheme,
            pre_edc,
            launch_dbm,
            seed,
        };
        curve.push((launch_dbm, run_point(cfg, &p, None)?.q_gauss_db));
    }
    let best = curve
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|c| c.0)
        .ok_or_else(|| Error::param("empty launch power grid"))?;
    Ok((best, curve))
}

/// Provenance written next to the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub n_points: usize,
    pub completed: Vec<String>,
    pub failures: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        toml::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    /// Sorted by scheme, pre-compensation, launch power and seed.
    pub records: Vec<MetricsRecord>,
    pub failures: BTreeMap<String, String>,
    pub csv_path: PathBuf,
}

fn load_point(path: &Path) -> Option<MetricsRecord> {
    crate::metrics::read_records(path).ok()?.into_iter().next()
}

/// Run every point of the configuration and write `results.csv`,
/// `manifest.toml` and one file per finished point under `out`.
///
/// Points already finished by an earlier run with the same configuration
/// are read back instead of recomputed. A failing point is recorded in the
/// manifest and does not stop the others.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<SweepReport> {
    cfg.validate()?;
    let point_dir = out.join("points");
    fs::create_dir_all(&point_dir)?;
    let hash = cfg.hash()?;
    let manifest_path = out.join("manifest.toml");
    let resumable = RunManifest::load(&manifest_path)
        .map(|m| m.config_sha256 == hash)
        .unwrap_or(false);
    cfg.save(out.join("config.toml"))?;

    let points = cfg.points();
    let mut manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: hash,
        seeds: cfg.seeds.clone(),
        n_points: points.len(),
        completed: Vec::new(),
        failures: BTreeMap::new(),
    };
    let mut results: Vec<Option<MetricsRecord>> = points
        .iter()
        .map(|p| {
            if resumable {
                load_point(&point_dir.join(format!("{}.csv", p.key())))
            } else {
                None
            }
        })
        .collect();
    manifest.completed = points
        .iter()
        .zip(&results)
        .filter(|(_, r)| r.is_some())
        .map(|(p, _)| p.key())
        .collect();
    manifest.save(&manifest_path)?;

    let todo: Vec<usize> = (0..points.len()).filter(|&i| results[i].is_none()).collect();
    if todo.len() < points.len() {
        info!("resuming: {} of {} points already done", points.len() - todo.len(), points.len());
    }
    let next = AtomicUsize::new(0);
    let (send, recv) = mpsc::channel::<(usize, Result<PointOutcome>)>();
    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..cfg.workers.min(todo.len().max(1)) {
            let send = send.clone();
            let (next, todo, points) = (&next, &todo, &points);
            scope.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&i) = todo.get(k) else { break };
                let r = run_point(cfg, &points[i], Some(out));
                if send.send((i, r)).is_err() {
                    break;
                }
            });
        }
        drop(send);
        for (i, r) in recv {
            let key = points[i].key();
            match r {
                Ok(o) => {
                    info!(
                        "{key}: BER {:.3e} ({} errors), Q {}",
                        o.record.ber,
                        o.record.n_errors,
                        o.record.q_db.map_or("n/a".to_string(), |q| format!("{q:.2} dB"))
                    );
                    write_records(point_dir.join(format!("{key}.csv")), std::slice::from_ref(&o.record))?;
                    results[i] = Some(o.record);
                    manifest.completed.push(key);
                }
                Err(e) => {
                    warn!("{key} failed: {e}");
                    manifest.failures.insert(key, e.to_string());
                }
            }
            manifest.save(&manifest_path)?;
        }
        Ok(())
    })?;

    manifest.completed.sort();
    manifest.save(&manifest_path)?;
    let records: Vec<MetricsRecord> = results.into_iter().flatten().collect();
    let csv_path = out.join("results.csv");
    write_records(&csv_path, &records)?;
    Ok(SweepReport {
        records,
        failures: manifest.failures,
        csv_path,
    })
}

/// Oracle runs for every configured pre-compensation fraction: the split-step
/// cross-check on a short link and the anti-correlation analysis on the full
/// link. Writes `oracle_summary.csv` plus eta grids and profiles under `out`.
pub fn run_oracle(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<OracleSummary>> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let o = &cfg.oracle;
    let frame = o.frame();
    let wave = frame.build().stage("oracle frame")?;
    let dw = 2.0 * std::f64::consts::PI * frame.subcarrier_spacing;
    let mut rows = Vec::new();
    for &pre in &sorted(&cfg.pre_edc) {
        let mut short = cfg.link_config(pre, o.launch_dbm)?;
        short.n_spans = o.equivalence_spans;
        short.step = StepControl {
            max_phase: o.max_phase,
            max_step: o.max_step,
        };
        let prof = LinkProfile::from_link(&short, o.samples_per_span)?;
        let d = waveform_distortion(&wave, &prof, &short.fiber).stage("oracle")?;
        let (sx, sy) = split_step_distortion(&wave, &short).stage("split-step")?;
        let err = relative_l2_error(&sx, &d.delta_x).max(relative_l2_error(&sy, &d.delta_y));
        let (corr, residual) = anti_correlation_check(&d.delta_x, &d.delta_y)?;
        rows.push(OracleSummary {
            label: "equivalence".into(),
            pre_edc: pre,
            n_spans: short.n_spans,
            launch_dbm: o.launch_dbm,
            corr_re: corr.re,
            corr_im: corr.im,
            residual_ratio: residual,
            max_imag_eta_ratio: max_imag_ratio(&prof, dw, o.eta_grid_half),
            split_step_rel_error: Some(err),
        });

        let full = cfg.link_config(pre, o.launch_dbm)?;
        if full.n_spans == 0 {
            continue;
        }
        let prof = LinkProfile::from_link(&full, o.samples_per_span)?;
        let d = waveform_distortion(&wave, &prof, &full.fiber).stage("oracle")?;
        let (corr, residual) = anti_correlation_check(&d.delta_x, &d.delta_y)?;
        rows.push(OracleSummary {
            label: "anti-correlation".into(),
            pre_edc: pre,
            n_spans: full.n_spans,
            launch_dbm: o.launch_dbm,
            corr_re: corr.re,
            corr_im: corr.im,
            residual_ratio: residual,
            max_imag_eta_ratio: max_imag_ratio(&prof, dw, o.eta_grid_half),
            split_step_rel_error: None,
        });
        let tag = format!("pre{pre:.2}");
        write_eta_grid(out.join(format!("eta_{tag}.csv")), &prof, dw, o.eta_grid_half)?;
        write_profile(out.join(format!("profile_{tag}.csv")), &prof.with_samples(64)?)?;
    }
    write_summaries(out.join("oracle_summary.csv"), &rows)?;
    Ok(rows)
}

/// Validate and describe the derived quantities of a configuration.
pub fn validate_report(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    cfg.validate()?;
    let p = &cfg.ofdm;
    let fiber = cfg.fiber.params()?;
    let mut lines = vec![
        format!("config sha256 {}", cfg.hash()?),
        format!(
            "fiber: alpha {:.4e} 1/m, beta2 {:.4e} s^2/m, gamma {:.4e} 1/(W m)",
            fiber.alpha, fiber.beta2, fiber.gamma
        ),
        format!(
            "ofdm: {} data + {} pilot subcarriers, spacing {:.4} MHz, prefix {} samples, occupied {:.2} GHz",
            p.n_data,
            p.n_pilots,
            p.subcarrier_spacing() / 1e6,
            p.cp_samples(),
            p.occupied_bandwidth() / 1e9
        ),
        format!("net bit rate {:.2} Gb/s", p.net_bit_rate(4.0) / 1e9),
        format!(
            "ASE variance per polarization and span {:.3e} W",
            cfg.amplifier.ase_variance(p.padded_sample_rate())
        ),
        format!("{} points", cfg.points().len()),
    ];
    for &pre in &sorted(&cfg.pre_edc) {
        let link = cfg.link_config(pre, cfg.launch_dbm[0])?;
        let memory = dispersion_memory(link.residual_dispersion(), p.occupied_bandwidth(), p.padded_sample_rate());
        lines.push(format!(
            "pre-EDC {pre}: receiver dispersion memory {memory} samples, equalizer overlap {}{}",
            cfg.equalizer.overlap,
            if memory > cfg.equalizer.overlap { " (too short)" } else { "" }
        ));
        if link.n_spans > 0 {
            let prof = LinkProfile::from_link(&link, 16)?;
            lines.push(format!(
                "pre-EDC {pre}: dispersion map anti-symmetry error {:.3}",
                prof.antisymmetry_error()
            ));
        }
    }
    let total = dbm_to_watts(cfg.launch_dbm.iter().cloned().fold(f64::MIN, f64::max));
    lines.push(format!("highest launch power {:.3} mW", total * 1e3));
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            schemes: SchemeKind::ALL.to_vec(),
            pre_edc: vec![0.5],
            launch_dbm: vec![0.0],
            seeds: vec![1],
            n_ofdm_symbols: 8,
            ofdm: OfdmParams {
                fft_size: 128,
                n_data: 64,
                training_period: 10,
                ..OfdmParams::default()
            },
            link: LinkSection {
                n_spans: 1,
                ..LinkSection::default()
            },
            equalizer: EqualizerConfig {
                block_size: 2048,
                overlap: 512,
                ..EqualizerConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn config_round_trip() {
        for c in [ExperimentConfig::default(), ExperimentConfig::scaled(), tiny()] {
            let text = c.to_toml().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c);
            assert_eq!(c.hash().unwrap(), ExperimentConfig::from_toml(&text).unwrap().hash().unwrap());
        }
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_values() {
        let mut text = tiny().to_toml().unwrap();
        text = text.replace("[ofdm]", "[ofdm]\nbogus = 1");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))));
        let mut c = tiny();
        c.pre_edc = vec![1.5];
        assert!(c.validate().is_err());
        let mut c = tiny();
        c.launch_dbm.clear();
        assert!(c.validate().is_err());
        let mut c = tiny();
        c.equalizer.overlap = 4096;
        assert!(c.validate().is_err());
    }

    #[test]
    fn points_are_sorted() {
        let mut c = tiny();
        c.schemes = vec![SchemeKind::Pcsc, SchemeKind::LpcPcts];
        c.launch_dbm = vec![2.0, -2.0];
        c.seeds = vec![3, 1];
        let keys: Vec<String> = c.points().iter().map(|p| p.key()).collect();
        assert_eq!(keys.len(), 8);
        assert_eq!(keys[0], "lpc-pcts_pre0.50_p-2.00_s1");
        assert_eq!(keys[7], "pcsc_pre0.50_p+2.00_s3");
    }

    #[test]
    fn back_to_back_is_error_free_and_deterministic() {
        let mut c = tiny();
        c.link.n_spans = 0;
        c.amplifier.ase = false;
        for scheme in SchemeKind::ALL {
            let p = Point {
                scheme,
                pre_edc: 0.5,
                launch_dbm: 0.0,
                seed: 4,
            };
            let a = run_point(&c, &p, None).unwrap();
            assert_eq!(a.record.n_errors, 0, "{scheme}");
            assert!(a.record.evm < 1e-9);
            let b = run_point(&c, &p, None).unwrap();
            assert_eq!(a.record, b.record);
        }
    }

    #[test]
    fn gaussian_q_tracks_counted_q_on_a_linear_link() {
        let mut c = tiny();
        c.fiber.n2 = 0.0;
        c.n_ofdm_symbols = 400;
        for scheme in [SchemeKind::Pdm4Qam, SchemeKind::Pcsc] {
            let p = Point {
                scheme,
                pre_edc: 0.5,
                launch_dbm: -22.0,
                seed: 2,
            };
            let o = run_point(&c, &p, None).unwrap();
            assert!(!o.record.low_confidence(), "{scheme}: {} errors", o.record.n_errors);
            let q = o.record.q_db.unwrap();
            assert!((q - o.q_gauss_db).abs() < 0.3, "{scheme}: {q} vs {}", o.q_gauss_db);
        }
    }

    #[test]
    fn sweep_writes_and_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny();
        c.schemes = vec![SchemeKind::LpcPcts];
        c.output.dump_stages = vec![DumpStage::Decision, DumpStage::XNoCpe];
        c.output.phase_trace = true;
        let r = run_sweep(&c, dir.path()).unwrap();
        assert_eq!(r.records.len(), 1);
        assert!(r.failures.is_empty());
        let text = fs::read_to_string(&r.csv_path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(dir.path().join("constellations").read_dir().unwrap().count() == 2);
        let m = RunManifest::load(dir.path().join("manifest.toml")).unwrap();
        assert_eq!(m.completed.len(), 1);

        // second run reads the finished point back
        let again = run_sweep(&c, dir.path()).unwrap();
        assert_eq!(again.records, r.records);
    }

    #[test]
    fn validate_report_lists_derived_values() {
        let lines = validate_report(&ExperimentConfig::default()).unwrap();
        assert!(lines.iter().any(|l| l.starts_with("net bit rate 196")));
    }
}
