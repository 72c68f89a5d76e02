//! Bit-error counting, Q factor, error-vector statistics and constellation dumps.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::coding::{ml_detect, qpsk, qpsk_map};
use crate::error::{Error, Result};
use crate::grid::{DualPolGrid, SymbolGrid, SymbolKind};
use crate::signal::{gaussian_noise, prbs_generate, BitStream, RandomSource};

/// Error count below which a BER estimate is flagged as unstable.
pub const MIN_STABLE_ERRORS: usize = 100;

/// Hamming distance of two equal-length bit slices.
pub fn count_bit_errors(tx: &[u8], rx: &[u8]) -> Result<usize> {
    if tx.len() != rx.len() {
        return Err(Error::LengthMismatch {
            expected: tx.len(),
            actual: rx.len(),
        });
    }
    Ok(tx.iter().zip(rx).filter(|(a, b)| a != b).count())
}

/// `(errors, errors / length)`.
pub fn count_ber(tx: &BitStream, rx: &BitStream) -> Result<(usize, f64)> {
    if tx.is_empty() {
        return Err(Error::param("cannot count errors over zero bits"));
    }
    let e = count_bit_errors(tx.bits(), rx.bits())?;
    Ok((e, e as f64 / tx.len() as f64))
}

/// `20 log10(sqrt(2) erfc^-1(2 BER))`, defined for `0 < ber < 0.5`.
pub fn q_from_ber(ber: f64) -> Result<f64> {
    if !(ber > 0.0 && ber < 0.5) {
        return Err(Error::Undefined(format!("Q factor needs 0 < BER < 0.5, got {ber}")));
    }
    Ok(20.0 * (2f64.sqrt() * erfc_inv(2.0 * ber)).log10())
}

/// Gray-coded QPSK bit error probability at symbol SNR `es_n0` (linear).
pub fn qpsk_ber_theory(es_n0: f64) -> f64 {
    0.5 * erfc((es_n0 / 2.0).sqrt())
}

/// Second-order statistics of `e = rx - tx` over the data subcarriers of data symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorVectorStats {
    /// RMS error relative to RMS transmitted amplitude, both polarizations.
    pub evm: f64,
    pub variance_x: f64,
    pub variance_y: f64,
    /// Variance of `(e_x + conj(e_y)) / 2`, the error left after coherent superposition.
    pub variance_superposed: f64,
    /// `<e_x, -conj(e_y)> / (|e_x| |e_y|)`: 1 for perfectly anti-correlated errors.
    pub correlation: Complex64,
}

fn data_values(g: &SymbolGrid) -> Vec<Complex64> {
    g.rows_of(SymbolKind::Data)
        .into_iter()
        .flat_map(|i| g.data_values(i))
        .collect()
}

pub fn error_vector_stats(rx: &DualPolGrid, tx: &DualPolGrid) -> Result<ErrorVectorStats> {
    for (a, b) in [(&rx.x, &tx.x), (&rx.y, &tx.y)] {
        if !a.same_shape(b) {
            return Err(Error::param("received and transmitted grids differ in shape"));
        }
    }
    let (rx_x, rx_y) = (data_values(&rx.x), data_values(&rx.y));
    let (tx_x, tx_y) = (data_values(&tx.x), data_values(&tx.y));
    let n = tx_x.len();
    if n == 0 {
        return Err(Error::param("no data subcarriers to compare"));
    }
    let ex: Vec<Complex64> = rx_x.iter().zip(&tx_x).map(|(r, t)| r - t).collect();
    let ey: Vec<Complex64> = rx_y.iter().zip(&tx_y).map(|(r, t)| r - t).collect();
    let power = |v: &[Complex64]| v.iter().map(|e| e.norm_sqr()).sum::<f64>();
    let (px, py) = (power(&ex), power(&ey));
    let ps = ex
        .iter()
        .zip(&ey)
        .map(|(a, b)| ((a + b.conj()) * 0.5).norm_sqr())
        .sum::<f64>();
    let signal = power(&tx_x) + power(&tx_y);
    let inner: Complex64 = ex.iter().zip(&ey).map(|(a, b)| a * (-b)).sum();
    let correlation = if px > 0.0 && py > 0.0 {
        inner / (px * py).sqrt()
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(ErrorVectorStats {
        evm: if signal > 0.0 { ((px + py) / signal).sqrt() } else { 0.0 },
        variance_x: px / n as f64,
        variance_y: py / n as f64,
        variance_superposed: ps / n as f64,
        correlation,
    })
}

/// Descriptive header of a constellation dump.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpHeader {
    pub scheme: String,
    pub launch_dbm: f64,
    /// Where in the receiver the points were taken, e.g. `superposed+cpe`.
    pub stage: String,
}

/// Write one `re,im` line per point after a `# key=value` header.
pub fn write_constellation(points: &[Complex64], header: &DumpHeader, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# constellation v1")?;
    writeln!(w, "# scheme={}", header.scheme)?;
    writeln!(w, "# launch_dbm={}", header.launch_dbm)?;
    writeln!(w, "# stage={}", header.stage)?;
    for p in points {
        writeln!(w, "{},{}", p.re, p.im)?;
    }
    w.flush()?;
    Ok(())
}

/// Dump the data subcarriers of every data symbol of `grid`.
pub fn dump_constellation(grid: &SymbolGrid, header: &DumpHeader, path: impl AsRef<Path>) -> Result<()> {
    write_constellation(&data_values(grid), header, path)
}

/// Parse a dump written by [`write_constellation`]; blank lines and `#` lines
/// other than the header keys are skipped.
pub fn read_constellation(path: impl AsRef<Path>) -> Result<(DumpHeader, Vec<Complex64>)> {
    let path = path.as_ref();
    let mut header = DumpHeader {
        scheme: String::new(),
        launch_dbm: f64::NAN,
        stage: String::new(),
    };
    let mut points = Vec::new();
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(c) = t.strip_prefix('#') {
            if let Some((k, v)) = c.trim().split_once('=') {
                match k.trim() {
                    "scheme" => header.scheme = v.trim().to_string(),
                    "stage" => header.stage = v.trim().to_string(),
                    "launch_dbm" => {
                        header.launch_dbm = v.trim().parse().map_err(|e| parse_err(i + 1, format!("{e}")))?
                    }
                    _ => {}
                }
            }
            continue;
        }
        let (re, im) = t
            .split_once(',')
            .ok_or_else(|| parse_err(i + 1, format!("expected `re,im`, got `{t}`")))?;
        let re: f64 = re.trim().parse().map_err(|e| parse_err(i + 1, format!("{e}")))?;
        let im: f64 = im.trim().parse().map_err(|e| parse_err(i + 1, format!("{e}")))?;
        points.push(Complex64::new(re, im));
    }
    Ok((header, points))
}

/// One experiment point; serializes to the results CSV columns in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub scheme: String,
    pub pre_edc: f64,
    pub launch_dbm: f64,
    pub seed: u64,
    pub n_bits: usize,
    pub n_errors: usize,
    pub ber: f64,
    /// Empty when the BER is 0 or at least 0.5.
    pub q_db: Option<f64>,
    pub evm: f64,
}

impl MetricsRecord {
    pub fn new(scheme: &str, pre_edc: f64, launch_dbm: f64, seed: u64, n_bits: usize, n_errors: usize, evm: f64) -> Self {
        let ber = if n_bits == 0 { 0.0 } else { n_errors as f64 / n_bits as f64 };
        Self {
            scheme: scheme.to_string(),
            pre_edc,
            launch_dbm,
            seed,
            n_bits,
            n_errors,
            ber,
            q_db: q_from_ber(ber).ok(),
            evm,
        }
    }

    /// Fewer than [`MIN_STABLE_ERRORS`] errors were counted.
    pub fn low_confidence(&self) -> bool {
        self.n_errors < MIN_STABLE_ERRORS
    }

    /// Q from the BER, or from the EVM when no error was counted.
    pub fn q_or_evm_db(&self) -> f64 {
        self.q_db.unwrap_or(-20.0 * self.evm.log10())
    }
}

pub fn write_records(path: impl AsRef<Path>, records: &[MetricsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if records.is_empty() {
        w.write_record([
            "scheme", "pre_edc", "launch_dbm", "seed", "n_bits", "n_errors", "ber", "q_db", "evm",
        ])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Measured versus analytic BER of one AWGN QPSK run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnPoint {
    pub snr_db: f64,
    pub n_bits: usize,
    pub n_errors: usize,
    pub ber: f64,
    pub theory: f64,
}

impl AwgnPoint {
    /// Binomial standard deviation of the BER estimate at the analytic rate.
    pub fn sigma(&self) -> f64 {
        (self.theory * (1.0 - self.theory) / self.n_bits as f64).sqrt()
    }

    pub fn within(&self, n_sigma: f64) -> bool {
        (self.ber - self.theory).abs() <= n_sigma * self.sigma()
    }
}

/// Send `n_bits` through unit-energy Gray QPSK with complex AWGN at symbol
/// SNR `snr_db` and count errors with the same detector and counter the
/// link uses.
pub fn awgn_qpsk(snr_db: f64, n_bits: usize, seed: u64) -> Result<AwgnPoint> {
    let q = qpsk().normalized();
    let bits = prbs_generate(seed, n_bits - n_bits % 2);
    let symbols = qpsk_map(bits.bits())?;
    let es_n0 = 10f64.powf(snr_db / 10.0);
    let mut rng = RandomSource::with_stream(seed, 0xa569);
    let noise = gaussian_noise(&mut rng, symbols.len(), 0.5 / es_n0)?;
    let scale = 1.0 / 2f64.sqrt();
    let mut rx_bits = Vec::with_capacity(bits.len());
    for (s, e) in symbols.iter().zip(noise) {
        q.push_label_bits(ml_detect(s * scale + e, &q), &mut rx_bits);
    }
    let rx = BitStream::from_bits(rx_bits, seed)?;
    let (n_errors, ber) = count_ber(&bits, &rx)?;
    Ok(AwgnPoint {
        snr_db,
        n_bits: bits.len(),
        n_errors,
        ber,
        theory: qpsk_ber_theory(es_n0),
    })
}
