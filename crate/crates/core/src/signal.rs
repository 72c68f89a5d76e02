//! Sampled dual-polarization fields, bit sources and seeded noise.
//!
//! Every random draw in the simulator comes from a [`RandomSource`], a ChaCha8
//! generator addressed by `(seed, stream)`. Distinct streams of the same seed
//! are independent, which lets one experiment point hand out separate streams
//! for its payload bits and for the ASE of each amplifier without the draws
//! of one consumer shifting another.
//!
//! The "PRBS" payload is a seeded uniform bit generator rather than a
//! maximal-length LFSR sequence; no particular polynomial is required by the
//! link model.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Complex baseband field of both polarizations, sampled at `sample_rate`.
///
/// Samples are in `sqrt(W)` once a launch power has been applied, so
/// `|x|^2 + |y|^2` is instantaneous optical power.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPolWaveform {
    x: Vec<Complex64>,
    y: Vec<Complex64>,
    sample_rate: f64,
}

impl DualPolWaveform {
    pub fn new(x: Vec<Complex64>, y: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::param("waveform must contain at least one sample"));
        }
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                actual: y.len(),
            });
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::param(format!("sample rate must be > 0, got {sample_rate}")));
        }
        Ok(Self { x, y, sample_rate })
    }

    pub fn x(&self) -> &[Complex64] {
        &self.x
    }

    pub fn y(&self) -> &[Complex64] {
        &self.y
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Mutable access to both polarizations at once.
    pub fn pols_mut(&mut self) -> (&mut [Complex64], &mut [Complex64]) {
        (&mut self.x, &mut self.y)
    }

    pub fn into_parts(self) -> (Vec<Complex64>, Vec<Complex64>, f64) {
        (self.x, self.y, self.sample_rate)
    }

    /// Mean of `|x|^2 + |y|^2` over all samples.
    pub fn mean_power(&self) -> f64 {
        let total: f64 = self
            .x
            .iter()
            .zip(&self.y)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .sum();
        total / self.len() as f64
    }

    /// Largest instantaneous `|x|^2 + |y|^2`.
    pub fn peak_power(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.x
            .iter()
            .chain(&self.y)
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.x.iter_mut().chain(self.y.iter_mut()) {
            *v *= s;
        }
    }

    /// Write the plain-text dump:
    ///
    /// ```text
    /// # dualpol-waveform v1
    /// # sample_rate <Sa/s>
    /// # length <samples>
    /// x re,im re,im ...
    /// y re,im re,im ...
    /// ```
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# dualpol-waveform v1")?;
        writeln!(w, "# sample_rate {}", self.sample_rate)?;
        writeln!(w, "# length {}", self.len())?;
        for (tag, pol) in [("x", &self.x), ("y", &self.y)] {
            write!(w, "{tag}")?;
            for v in pol.iter() {
                write!(w, " {},{}", v.re, v.im)?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_text(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let reader = BufReader::new(File::open(path)?);
        let mut sample_rate = None;
        let mut length = None;
        let mut x = None;
        let mut y = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let mut parts = line.split_whitespace();
            match parts.next() {
                None => continue,
                Some("#") => match (parts.next(), parts.next()) {
                    (Some("sample_rate"), Some(v)) => {
                        sample_rate =
                            Some(v.parse::<f64>().map_err(|e| perr(lineno, e.to_string()))?)
                    }
                    (Some("length"), Some(v)) => {
                        length = Some(v.parse::<usize>().map_err(|e| perr(lineno, e.to_string()))?)
                    }
                    _ => {}
                },
                Some(tag @ ("x" | "y")) => {
                    let samples = parts
                        .map(|tok| parse_pair(tok).ok_or_else(|| perr(lineno, format!("bad sample `{tok}`"))))
                        .collect::<Result<Vec<_>>>()?;
                    if tag == "x" {
                        x = Some(samples);
                    } else {
                        y = Some(samples);
                    }
                }
                Some(other) => return Err(perr(lineno, format!("unexpected token `{other}`"))),
            }
        }
        let sample_rate = sample_rate.ok_or_else(|| perr(0, "missing sample_rate header".into()))?;
        let x = x.ok_or_else(|| perr(0, "missing x line".into()))?;
        let y = y.ok_or_else(|| perr(0, "missing y line".into()))?;
        if let Some(n) = length {
            if n != x.len() {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: x.len(),
                });
            }
        }
        Self::new(x, y, sample_rate)
    }

    /// Little-endian binary dump: magic `DPW1`, `u64` length, `f64` sample
    /// rate, then `length` (re, im) `f64` pairs for x followed by y.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(b"DPW1")?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&self.sample_rate.to_le_bytes())?;
        for v in self.x.iter().chain(&self.y) {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"DPW1" {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: "bad magic".into(),
            });
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let sample_rate = f64::from_le_bytes(b8);
        let mut read_pol = |r: &mut BufReader<File>| -> Result<Vec<Complex64>> {
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                r.read_exact(&mut b8)?;
                let re = f64::from_le_bytes(b8);
                r.read_exact(&mut b8)?;
                out.push(Complex64::new(re, f64::from_le_bytes(b8)));
            }
            Ok(out)
        };
        let x = read_pol(&mut r)?;
        let y = read_pol(&mut r)?;
        Self::new(x, y, sample_rate)
    }
}

fn parse_pair(tok: &str) -> Option<Complex64> {
    let (re, im) = tok.split_once(',')?;
    Some(Complex64::new(re.parse().ok()?, im.parse().ok()?))
}

/// Payload bits together with the seed that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream {
    bits: Vec<u8>,
    seed: u64,
}

impl BitStream {
    /// Wrap externally produced bits; every value must be 0 or 1.
    pub fn from_bits(bits: Vec<u8>, seed: u64) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::param(format!("bit {pos} has value {}", bits[pos])));
        }
        Ok(Self { bits, seed })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Seeded, stream-addressable random source.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    /// An independent source sharing this seed.
    pub fn fork(&self, stream: u64) -> Self {
        Self::with_stream(self.seed, stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Position in the keystream, in 32-bit words.
    pub fn word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// Deterministic pseudo-random bits.
pub fn prbs_generate(seed: u64, n: usize) -> BitStream {
    let mut rng = RandomSource::with_stream(seed, PRBS_STREAM);
    let mut bits = Vec::with_capacity(n);
    while bits.len() < n {
        let word = rng.next_u64();
        let take = (n - bits.len()).min(64);
        bits.extend((0..take).map(|i| ((word >> i) & 1) as u8));
    }
    BitStream { bits, seed }
}

const PRBS_STREAM: u64 = 0x5052_4253;

/// `n` circular complex Gaussian samples, each quadrature with the given variance.
pub fn gaussian_noise(
    rng: &mut RandomSource,
    n: usize,
    variance_per_component: f64,
) -> Result<Vec<Complex64>> {
    if !(variance_per_component >= 0.0) {
        return Err(Error::param(format!(
            "noise variance must be >= 0, got {variance_per_component}"
        )));
    }
    if variance_per_component == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); n]);
    }
    let sigma = variance_per_component.sqrt();
    Ok((0..n)
        .map(|_| Complex64::new(sigma * rng.standard_normal(), sigma * rng.standard_normal()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waveform_rejects_bad_shapes() {
        let one = vec![Complex64::new(1.0, 0.0)];
        assert!(DualPolWaveform::new(vec![], vec![], 1.0).is_err());
        assert!(DualPolWaveform::new(one.clone(), vec![], 1.0).is_err());
        assert!(DualPolWaveform::new(one.clone(), one.clone(), 0.0).is_err());
        assert!(DualPolWaveform::new(one.clone(), one, 2.0).is_ok());
    }

    #[test]
    fn prbs_empty_and_deterministic() {
        assert!(prbs_generate(1, 0).is_empty());
        assert_eq!(prbs_generate(1, 8), prbs_generate(1, 8));
        assert_ne!(prbs_generate(1, 64).bits(), prbs_generate(2, 64).bits());
    }

    #[test]
    fn prbs_is_balanced() {
        let s = prbs_generate(1, 1_000_000);
        let mean = s.bits().iter().map(|&b| b as f64).sum::<f64>() / s.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn prbs_prefix_stable() {
        let long = prbs_generate(7, 200);
        let short = prbs_generate(7, 130);
        assert_eq!(&long.bits()[..130], short.bits());
    }

    #[test]
    fn noise_variance_zero_and_negative() {
        let mut rng = RandomSource::new(3);
        let z = gaussian_noise(&mut rng, 10, 0.0).unwrap();
        assert!(z.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
        assert!(gaussian_noise(&mut rng, 10, -1.0).is_err());
        assert!(gaussian_noise(&mut rng, 10, f64::NAN).is_err());
    }

    #[test]
    fn noise_has_requested_variance() {
        let mut rng = RandomSource::new(11);
        let n = 1_000_000;
        let v = gaussian_noise(&mut rng, n, 1.0).unwrap();
        let mean_re = v.iter().map(|c| c.re).sum::<f64>() / n as f64;
        let mean_im = v.iter().map(|c| c.im).sum::<f64>() / n as f64;
        let var_re = v.iter().map(|c| (c.re - mean_re).powi(2)).sum::<f64>() / (n - 1) as f64;
        let var_im = v.iter().map(|c| (c.im - mean_im).powi(2)).sum::<f64>() / (n - 1) as f64;
        let cross = v.iter().map(|c| c.re * c.im).sum::<f64>() / n as f64;
        assert!((var_re - 1.0).abs() < 0.01, "{var_re}");
        assert!((var_im - 1.0).abs() < 0.01, "{var_im}");
        assert!(mean_re.abs() < 0.01 && mean_im.abs() < 0.01);
        assert!(cross.abs() < 0.01);
    }

    #[test]
    fn noise_reproducible_from_same_position() {
        let mut a = RandomSource::with_stream(5, 9);
        let mut b = RandomSource::with_stream(5, 9);
        assert_eq!(
            gaussian_noise(&mut a, 100, 0.5).unwrap(),
            gaussian_noise(&mut b, 100, 0.5).unwrap()
        );
        assert_eq!(a.word_pos(), b.word_pos());
        let mut c = a.fork(10);
        assert_ne!(
            gaussian_noise(&mut a, 4, 1.0).unwrap(),
            gaussian_noise(&mut c, 4, 1.0).unwrap()
        );
    }

    #[test]
    fn text_and_binary_dumps_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = RandomSource::new(1);
        let x = gaussian_noise(&mut rng, 33, 1e-3).unwrap();
        let y = gaussian_noise(&mut rng, 33, 2e-3).unwrap();
        let w = DualPolWaveform::new(x, y, 64e9).unwrap();
        let t = dir.path().join("w.txt");
        w.write_text(&t).unwrap();
        assert_eq!(DualPolWaveform::read_text(&t).unwrap(), w);
        let b = dir.path().join("w.bin");
        w.write_binary(&b).unwrap();
        assert_eq!(DualPolWaveform::read_binary(&b).unwrap(), w);
    }
}
