//! First-order perturbation model of the Manakov link.
//!
//! The transmitted spectra `X(w)`, `Y(w)` (before pre-compensation) acquire
//! the distortion
//!
//! ```text
//! dX(w) = i (8/9) gamma / N^2 * sum_{w1,w2} eta(p) [X(w1) X(w2) X*(w3) + Y(w1) X(w2) Y*(w3)]
//! w3 = w1 + w2 - w,   p = (w^2 + w3^2 - w1^2 - w2^2) / 2 = (w - w1)(w - w2)
//! eta(p) = integral over the fiber of exp(G(z) - i p C(z)) dz
//! ```
//!
//! expressed in the frame where the linear link response has been removed,
//! i.e. comparable with `H_link^-1 (E_nonlinear - E_linear)`. Spectra use the
//! unnormalized forward DFT. `G` is the log power gain and `C` the
//! accumulated dispersion (pre-compensation included) at distance `z`.
//!
//! When twin inputs satisfy `Y(w) = X*(w)` and `eta` is real, the two
//! distortions obey `dY = -conj(dX)`, which is what coherent superposition
//! cancels.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{propagate_link, set_launch_power, FiberParams, LinkConfig};
use crate::coding::SchemeKind;
use crate::error::{Error, Result};
use crate::fft;
use crate::signal::{prbs_generate, DualPolWaveform, RandomSource};

/// Largest transform the double sum is allowed to run on.
pub const MAX_ORACLE_BINS: usize = 256;

/// A stretch of fiber along which `G` and `C` vary linearly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub length: f64,
    pub g0: f64,
    /// dG/dz, 1/m.
    pub g_slope: f64,
    pub c0: f64,
    /// dC/dz, s^2/m.
    pub c_slope: f64,
}

/// Log-power and accumulated-dispersion evolution along the link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkProfile {
    segments: Vec<Segment>,
    samples_per_segment: usize,
    /// Log power gain after the final element (amplifier included).
    g_end: f64,
}

impl LinkProfile {
    pub fn new(segments: Vec<Segment>, samples_per_segment: usize, g_end: f64) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::param("link profile needs at least one segment"));
        }
        if samples_per_segment == 0 {
            return Err(Error::param("samples_per_segment must be > 0"));
        }
        if segments.iter().any(|s| !(s.length > 0.0)) {
            return Err(Error::param("segment lengths must be > 0"));
        }
        Ok(Self {
            segments,
            samples_per_segment,
            g_end,
        })
    }

    /// One segment per span: loss inside the fiber, amplifier gain at each
    /// span end, dispersion starting from the pre-compensation offset.
    pub fn from_link(link: &LinkConfig, samples_per_span: usize) -> Result<Self> {
        link.validate()?;
        if link.n_spans == 0 {
            return Err(Error::param("link profile needs at least one span"));
        }
        let f = &link.fiber;
        let step_g = link.amp.gain().ln() - f.alpha * f.span_length;
        let segments = (0..link.n_spans)
            .map(|j| Segment {
                length: f.span_length,
                g0: j as f64 * step_g,
                g_slope: -f.alpha,
                c0: link.pre_edc_dispersion() + j as f64 * f.beta2 * f.span_length,
                c_slope: f.beta2,
            })
            .collect();
        Self::new(segments, samples_per_span, link.n_spans as f64 * step_g)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn samples_per_segment(&self) -> usize {
        self.samples_per_segment
    }

    pub fn with_samples(&self, samples_per_segment: usize) -> Result<Self> {
        Self::new(self.segments.clone(), samples_per_segment, self.g_end)
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    pub fn g_end(&self) -> f64 {
        self.g_end
    }

    /// Accumulated dispersion at the receiver, s^2.
    pub fn c_end(&self) -> f64 {
        let s = self.segments.last().expect("non-empty");
        s.c0 + s.c_slope * s.length
    }

    /// `(z, G, C)` at every quadrature node; segment ends appear twice
    /// (before and after a lumped element).
    pub fn samples(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        let mut z0 = 0.0;
        for s in &self.segments {
            let dz = s.length / self.samples_per_segment as f64;
            for i in 0..=self.samples_per_segment {
                let u = i as f64 * dz;
                out.push((z0 + u, s.g0 + s.g_slope * u, s.c0 + s.c_slope * u));
            }
            z0 += s.length;
        }
        out
    }

    fn c_at(&self, z: f64) -> f64 {
        let mut z0 = 0.0;
        for s in &self.segments {
            if z <= z0 + s.length {
                return s.c0 + s.c_slope * (z - z0);
            }
            z0 += s.length;
        }
        self.c_end()
    }

    /// `max |C(z) + C(L - z)| / max |C|` over the quadrature nodes; zero for
    /// a perfectly anti-symmetric dispersion map.
    pub fn antisymmetry_error(&self) -> f64 {
        let l = self.length();
        let samples = self.samples();
        let cmax = samples.iter().map(|s| s.2.abs()).fold(0.0, f64::max);
        if cmax == 0.0 {
            return 0.0;
        }
        samples
            .iter()
            .map(|&(z, _, c)| (c + self.c_at(l - z)).abs())
            .fold(0.0, f64::max)
            / cmax
    }

    /// Trapezoidal integral of `exp(G(z) - i p C(z))`.
    pub fn eta_p(&self, p: f64) -> Complex64 {
        let m = self.samples_per_segment;
        let mut total = Complex64::new(0.0, 0.0);
        for s in &self.segments {
            let dz = s.length / m as f64;
            let mut term = Complex64::new(s.g0, -p * s.c0).exp();
            let ratio = Complex64::new(s.g_slope * dz, -p * s.c_slope * dz).exp();
            let mut sum = term * 0.5;
            for _ in 1..m {
                term *= ratio;
                sum += term;
            }
            term *= ratio;
            sum += term * 0.5;
            total += sum * dz;
        }
        total
    }

    /// `integral exp(G) dz`, the effective length of the whole link.
    pub fn effective_length(&self) -> f64 {
        self.eta_p(0.0).re
    }
}

/// Nonlinear transfer function at frequency offsets `w1`, `w2` (rad/s).
pub fn eta(w1: f64, w2: f64, profile: &LinkProfile) -> Complex64 {
    profile.eta_p(w1 * w2)
}

/// First-order distortion spectra on both polarizations.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionField {
    pub delta_x: Vec<Complex64>,
    pub delta_y: Vec<Complex64>,
    /// Peak `|x|^2 + |y|^2` of the input frame, W.
    pub power_scale: f64,
    /// `integral exp(G) dz`, m.
    pub l_eff: f64,
}

/// Evaluate the double sum for every output bin.
///
/// `spec_x`, `spec_y` are unnormalized DFTs of one period of the launched
/// field sampled at `sample_rate`.
pub fn first_order_distortion(
    spec_x: &[Complex64],
    spec_y: &[Complex64],
    sample_rate: f64,
    profile: &LinkProfile,
    fiber: &FiberParams,
) -> Result<DistortionField> {
    let n = spec_x.len();
    if spec_y.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: spec_y.len(),
        });
    }
    if n == 0 || n > MAX_ORACLE_BINS {
        return Err(Error::param(format!(
            "oracle grid has {n} bins; the double sum is limited to 1..={MAX_ORACLE_BINS}"
        )));
    }
    let dw = 2.0 * std::f64::consts::PI * sample_rate / n as f64;
    let occupied: Vec<usize> = (0..n)
        .filter(|&k| spec_x[k] != Complex64::new(0.0, 0.0) || spec_y[k] != Complex64::new(0.0, 0.0))
        .collect();
    let bin = |k: usize| fft::signed_bin(k, n);

    let mut cache: HashMap<i64, Complex64> = HashMap::new();
    let coef = Complex64::new(0.0, fiber.manakov_factor * fiber.gamma / (n * n) as f64);
    let mut delta_x = vec![Complex64::new(0.0, 0.0); n];
    let mut delta_y = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let b = bin(k);
        let mut sx = Complex64::new(0.0, 0.0);
        let mut sy = Complex64::new(0.0, 0.0);
        for &k1 in &occupied {
            let b1 = bin(k1);
            for &k2 in &occupied {
                let k3 = (k1 + k2 + n - k) % n;
                let (x3, y3) = (spec_x[k3], spec_y[k3]);
                if x3 == Complex64::new(0.0, 0.0) && y3 == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let b2 = bin(k2);
                let b3 = bin(k3);
                let m = (b * b + b3 * b3 - b1 * b1 - b2 * b2) / 2;
                let h = *cache
                    .entry(m)
                    .or_insert_with(|| profile.eta_p(m as f64 * dw * dw));
                let (x1, x2, y1, y2) = (spec_x[k1], spec_x[k2], spec_y[k1], spec_y[k2]);
                sx += h * (x1 * x2 * x3.conj() + y1 * x2 * y3.conj());
                sy += h * (y1 * y2 * y3.conj() + x1 * y2 * x3.conj());
            }
        }
        delta_x[k] = coef * sx;
        delta_y[k] = coef * sy;
    }

    let mut tx = spec_x.to_vec();
    let mut ty = spec_y.to_vec();
    fft::inverse(&mut tx);
    fft::inverse(&mut ty);
    let power_scale = tx
        .iter()
        .zip(&ty)
        .map(|(a, b)| (a.norm_sqr() + b.norm_sqr()) / (n * n) as f64)
        .fold(0.0, f64::max);
    Ok(DistortionField {
        delta_x,
        delta_y,
        power_scale,
        l_eff: profile.effective_length(),
    })
}

/// Oracle distortion of a time-domain frame.
pub fn waveform_distortion(wave: &DualPolWaveform, profile: &LinkProfile, fiber: &FiberParams) -> Result<DistortionField> {
    let mut sx = wave.x().to_vec();
    let mut sy = wave.y().to_vec();
    fft::forward(&mut sx);
    fft::forward(&mut sy);
    first_order_distortion(&sx, &sy, wave.sample_rate(), profile, fiber)
}

/// Split-step reference for the oracle: `H_link^-1 (E_nonlinear - E_linear)`
/// as unnormalized spectra, with amplifier noise switched off.
pub fn split_step_distortion(wave: &DualPolWaveform, link: &LinkConfig) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let mut quiet = *link;
    quiet.amp.ase = false;
    let mut linear = quiet;
    linear.fiber.gamma = 0.0;
    let mut rng = RandomSource::new(0);
    let nl = propagate_link(wave.clone(), &quiet, &mut rng)?;
    let lin = propagate_link(wave.clone(), &linear, &mut rng)?;
    let profile = LinkProfile::from_link(link, 1)?;
    let n = wave.len();
    let w = fft::angular_frequencies(n, wave.sample_rate());
    let amp = (-0.5 * profile.g_end()).exp();
    let mut out = Vec::with_capacity(2);
    for (a, b) in [(nl.x(), lin.x()), (nl.y(), lin.y())] {
        let mut d: Vec<Complex64> = a.iter().zip(b).map(|(u, v)| u - v).collect();
        fft::forward(&mut d);
        for (v, w) in d.iter_mut().zip(&w) {
            *v *= Complex64::from_polar(amp, -0.5 * profile.c_end() * w * w);
        }
        out.push(d);
    }
    let dy = out.pop().expect("two pols");
    let dx = out.pop().expect("two pols");
    Ok((dx, dy))
}

/// Anti-correlation of the two distortion spectra.
///
/// `corr = <dx, -conj(dy)> / (|dx| |dy|)` and
/// `residual_ratio = |dx + conj(dy)|^2 / |dx|^2`: the distortion power left
/// after coherent superposition relative to one polarization.
pub fn anti_correlation_check(delta_x: &[Complex64], delta_y: &[Complex64]) -> Result<(Complex64, f64)> {
    if delta_x.len() != delta_y.len() {
        return Err(Error::LengthMismatch {
            expected: delta_x.len(),
            actual: delta_y.len(),
        });
    }
    let nx: f64 = delta_x.iter().map(|v| v.norm_sqr()).sum();
    let ny: f64 = delta_y.iter().map(|v| v.norm_sqr()).sum();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::Undefined("anti-correlation of a zero distortion field".into()));
    }
    let inner: Complex64 = delta_x.iter().zip(delta_y).map(|(a, b)| a * (-b)).sum();
    let residual: f64 = delta_x.iter().zip(delta_y).map(|(a, b)| (a + b.conj()).norm_sqr()).sum();
    Ok((inner / (nx * ny).sqrt(), residual / nx))
}

/// `|a - b| / |b|`.
pub fn relative_l2_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(u, v)| (u - v).norm_sqr()).sum();
    let den: f64 = b.iter().map(|v| v.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Test frame for the oracle: one period of scheme symbols on a small grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleFrame {
    pub n_bins: usize,
    pub n_active: usize,
    /// Hz.
    pub subcarrier_spacing: f64,
    pub scheme: SchemeKind,
    pub launch_power_dbm: f64,
    pub seed: u64,
}

impl Default for OracleFrame {
    fn default() -> Self {
        Self {
            n_bins: 256,
            n_active: 64,
            subcarrier_spacing: 15.625e6,
            scheme: SchemeKind::LpcPcts,
            launch_power_dbm: -6.0,
            seed: 1,
        }
    }
}

impl OracleFrame {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins > MAX_ORACLE_BINS || self.n_active == 0 || self.n_active + 1 > self.n_bins {
            return Err(Error::param(format!(
                "oracle frame needs 0 < n_active < n_bins <= {MAX_ORACLE_BINS}"
            )));
        }
        if self.n_active % 2 != 0 {
            return Err(Error::param("oracle n_active must be even"));
        }
        if !(self.subcarrier_spacing > 0.0) || !self.launch_power_dbm.is_finite() {
            return Err(Error::param("invalid oracle subcarrier spacing or launch power"));
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.subcarrier_spacing * self.n_bins as f64
    }

    /// FFT indices of the active subcarriers, symmetric about an empty DC bin.
    pub fn active_bins(&self) -> Vec<usize> {
        let h = self.n_active / 2;
        (1..=h).chain(self.n_bins - h..self.n_bins).collect()
    }

    pub fn build(&self) -> Result<DualPolWaveform> {
        self.validate()?;
        let codec = self.scheme.codec();
        let bits = prbs_generate(self.seed, codec.bits_per_ofdm_symbol(self.n_active));
        let sym = codec.encode(bits.bits())?;
        let mut x = vec![Complex64::new(0.0, 0.0); self.n_bins];
        let mut y = x.clone();
        // frequency order: negative bins first
        let mut order = self.active_bins();
        order.sort_by_key(|&k| fft::signed_bin(k, self.n_bins));
        for (i, &k) in order.iter().enumerate() {
            x[k] = sym.x[i];
            y[k] = sym.y[i];
        }
        fft::inverse_unitary(&mut x);
        fft::inverse_unitary(&mut y);
        set_launch_power(DualPolWaveform::new(x, y, self.sample_rate())?, self.launch_power_dbm)
    }
}

/// Write `w1,w2,re_eta,im_eta` for every pair of bin offsets in `-half..=half`.
pub fn write_eta_grid(path: impl AsRef<Path>, profile: &LinkProfile, dw: f64, half: i64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["w1", "w2", "re_eta", "im_eta"])?;
    for a in -half..=half {
        for b in -half..=half {
            let (w1, w2) = (a as f64 * dw, b as f64 * dw);
            let e = eta(w1, w2, profile);
            w.write_record([w1.to_string(), w2.to_string(), e.re.to_string(), e.im.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Largest `|Im eta| / |eta|` over offsets `-half..=half` bins.
pub fn max_imag_ratio(profile: &LinkProfile, dw: f64, half: i64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut seen = HashMap::new();
    for a in -half..=half {
        for b in -half..=half {
            let e = *seen.entry(a * b).or_insert_with(|| profile.eta_p((a * b) as f64 * dw * dw));
            worst = worst.max(e.im.abs() / e.norm());
        }
    }
    worst
}

/// One row of the oracle summary report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub label: String,
    pub pre_edc: f64,
    pub n_spans: usize,
    pub launch_dbm: f64,
    pub corr_re: f64,
    pub corr_im: f64,
    pub residual_ratio: f64,
    pub max_imag_eta_ratio: f64,
    pub split_step_rel_error: Option<f64>,
}

pub fn write_summaries(path: impl AsRef<Path>, rows: &[OracleSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `z,G,C` at every quadrature node.
pub fn write_profile(path: impl AsRef<Path>, profile: &LinkProfile) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "z,g,c")?;
    for (z, g, c) in profile.samples() {
        writeln!(f, "{z},{g},{c}")?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LinkConfig;

    fn lossless(length: f64, beta2: f64) -> LinkProfile {
        LinkProfile::new(
            vec![Segment {
                length,
                g0: 0.0,
                g_slope: 0.0,
                c0: 0.0,
                c_slope: beta2,
            }],
            1000,
            0.0,
        )
        .unwrap()
    }

    /// Closed form of one lossy span's integral: (1 - e^{-(a + i p b) L}) / (a + i p b).
    fn span_integral(alpha: f64, pb: f64, l: f64) -> Complex64 {
        let s = Complex64::new(alpha, pb);
        (Complex64::new(1.0, 0.0) - (-s * l).exp()) / s
    }

    #[test]
    fn eta_at_zero_product() {
        let p = lossless(80e3, -2e-26);
        assert!((eta(0.0, 1e11, &p) - Complex64::new(80e3, 0.0)).norm() < 1e-6);
        let mut link = LinkConfig::standard(1);
        link.amp.gain_db = 0.0;
        let p = LinkProfile::from_link(&link, 4096).unwrap();
        let leff = link.fiber.effective_length();
        assert!((eta(1e10, 0.0, &p).re / leff - 1.0).abs() < 1e-6);
        assert!((p.effective_length() / leff - 1.0).abs() < 1e-6);
    }

    #[test]
    fn eta_matches_closed_form_per_span() {
        let link = LinkConfig::standard(3);
        let prof = LinkProfile::from_link(&link, 4096).unwrap();
        let f = link.fiber;
        for p in [1e18, 1e19, 5e19] {
            let mut want = Complex64::new(0.0, 0.0);
            for j in 0..3 {
                let c0 = j as f64 * f.beta2 * f.span_length;
                want += Complex64::from_polar(1.0, -p * c0) * span_integral(f.alpha, p * f.beta2, f.span_length);
            }
            let got = prof.eta_p(p);
            assert!((got - want).norm() / want.norm() < 1e-4, "{p}: {got} vs {want}");
        }
    }

    #[test]
    fn eta_symmetric_in_arguments_and_converged() {
        let mut link = LinkConfig::standard(35);
        link.pre_edc_fraction = 0.5;
        let prof = LinkProfile::from_link(&link, 4096).unwrap();
        let fine = prof.with_samples(8192).unwrap();
        let dw = 2.0 * std::f64::consts::PI * 15.625e6;
        for (a, b) in [(3.0, 17.0), (-20.0, 31.0), (64.0, 64.0)] {
            let e = eta(a * dw, b * dw, &prof);
            assert_eq!(e, eta(b * dw, a * dw, &prof));
            assert!((eta(a * dw, b * dw, &fine) - e).norm() / e.norm() < 1e-4);
        }
    }

    #[test]
    fn half_pre_edc_gives_antisymmetric_map_and_real_eta() {
        let mut link = LinkConfig::standard(35);
        link.pre_edc_fraction = 0.5;
        let sym = LinkProfile::from_link(&link, 256).unwrap();
        assert!(sym.antisymmetry_error() < 1e-9);
        link.pre_edc_fraction = 0.0;
        let asym = LinkProfile::from_link(&link, 256).unwrap();
        assert!(asym.antisymmetry_error() > 0.5);
        let dw = 2.0 * std::f64::consts::PI * 15.625e6;
        assert!(max_imag_ratio(&sym, dw, 64) < 0.05);
        assert!(max_imag_ratio(&asym, dw, 64) > 0.05);
    }

    fn frame(seed: u64) -> DualPolWaveform {
        OracleFrame {
            n_bins: 64,
            n_active: 16,
            seed,
            ..OracleFrame::default()
        }
        .build()
        .unwrap()
    }

    #[test]
    fn zero_input_and_cubic_scaling() {
        let link = LinkConfig::standard(2);
        let prof = LinkProfile::from_link(&link, 64).unwrap();
        let z = vec![Complex64::new(0.0, 0.0); 32];
        let d = first_order_distortion(&z, &z, 1e9, &prof, &link.fiber).unwrap();
        assert!(d.delta_x.iter().chain(&d.delta_y).all(|v| v.norm() == 0.0));

        let w = frame(2);
        let d1 = waveform_distortion(&w, &prof, &link.fiber).unwrap();
        let mut w2 = w.clone();
        w2.scale(1.7);
        let d2 = waveform_distortion(&w2, &prof, &link.fiber).unwrap();
        let scaled: Vec<Complex64> = d1.delta_x.iter().map(|v| v * 1.7f64.powi(3)).collect();
        assert!(relative_l2_error(&scaled, &d2.delta_x) < 1e-12);
    }

    #[test]
    fn rejects_large_grids() {
        let link = LinkConfig::standard(1);
        let prof = LinkProfile::from_link(&link, 8).unwrap();
        let z = vec![Complex64::new(1.0, 0.0); 512];
        assert!(first_order_distortion(&z, &z, 1e9, &prof, &link.fiber).is_err());
    }

    #[test]
    fn agrees_with_split_step_at_low_power() {
        let mut link = LinkConfig::standard(1);
        link.step.max_step = 100.0;
        let w = frame(3);
        let prof = LinkProfile::from_link(&link, 2048).unwrap();
        let d = waveform_distortion(&w, &prof, &link.fiber).unwrap();
        let (sx, sy) = split_step_distortion(&w, &link).unwrap();
        assert!(relative_l2_error(&sx, &d.delta_x) < 0.05);
        assert!(relative_l2_error(&sy, &d.delta_y) < 0.05);
    }

    #[test]
    fn anti_correlation_definitions() {
        let dx = vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.1)];
        let neg: Vec<Complex64> = dx.iter().map(|v| -v.conj()).collect();
        let (c, r) = anti_correlation_check(&dx, &neg).unwrap();
        assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(r.abs() < 1e-12);
        let pos: Vec<Complex64> = dx.iter().map(|v| v.conj()).collect();
        let (c, r) = anti_correlation_check(&dx, &pos).unwrap();
        assert!((c + Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((r - 4.0).abs() < 1e-12);
        let z = vec![Complex64::new(0.0, 0.0); 2];
        assert!(anti_correlation_check(&dx, &z).is_err());
        assert!(anti_correlation_check(&dx, &dx[..1]).is_err());
    }

    #[test]
    fn reports_write() {
        let dir = tempfile::tempdir().unwrap();
        let link = LinkConfig::standard(2);
        let prof = LinkProfile::from_link(&link, 16).unwrap();
        write_eta_grid(dir.path().join("eta.csv"), &prof, 1e8, 2).unwrap();
        let text = std::fs::read_to_string(dir.path().join("eta.csv")).unwrap();
        assert_eq!(text.lines().count(), 26);
        write_profile(dir.path().join("profile.csv"), &prof).unwrap();
        write_summaries(
            dir.path().join("summary.csv"),
            &[OracleSummary {
                label: "a".into(),
                pre_edc: 0.5,
                n_spans: 2,
                launch_dbm: 0.0,
                corr_re: 1.0,
                corr_im: 0.0,
                residual_ratio: 0.0,
                max_imag_eta_ratio: 0.0,
                split_step_rel_error: None,
            }],
        )
        .unwrap();
    }
}
