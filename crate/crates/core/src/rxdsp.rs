//! Receiver DSP: bulk dispersion compensation, training-based one-tap
//! equalization and pilot-aided common phase error correction.

use std::f64::consts::PI;
use std::path::Path;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::LinkConfig;
use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{SubcarrierRole, SymbolGrid, SymbolKind};
use crate::signal::DualPolWaveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CpeMode {
    Off,
    /// Separate phase estimate per polarization.
    Independent,
    /// One shared estimate from the pilots of both polarizations.
    Tied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EqualizerConfig {
    /// FFT length of the overlap-save blocks; power of two.
    pub block_size: usize,
    /// Length of the dispersion filter; power of two, below `block_size`.
    pub overlap: usize,
    /// Fraction of the sampled band over which the filter is the exact
    /// inverse of the fiber; outside it the phase is flattened to keep the
    /// impulse response short.
    #[serde(default = "passband")]
    pub passband_fraction: f64,
    #[serde(default = "independent")]
    pub cpe: CpeMode,
}

fn passband() -> f64 {
    0.9
}

fn independent() -> CpeMode {
    CpeMode::Independent
}

impl Default for EqualizerConfig {
    fn default() -> Self {
        Self {
            block_size: 16384,
            overlap: 4096,
            passband_fraction: passband(),
            cpe: CpeMode::Independent,
        }
    }
}

impl EqualizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.block_size.is_power_of_two() || !self.overlap.is_power_of_two() {
            return Err(Error::param("block_size and overlap must be powers of two"));
        }
        if self.overlap >= self.block_size {
            return Err(Error::param(format!(
                "overlap {} must be smaller than block_size {}",
                self.overlap, self.block_size
            )));
        }
        if !(self.passband_fraction > 0.0 && self.passband_fraction < 1.0) {
            return Err(Error::param("passband_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Samples spanned by the group-delay spread of accumulated dispersion
/// `dispersion` (s^2) over a band of `bandwidth` Hz.
pub fn dispersion_memory(dispersion: f64, bandwidth: f64, sample_rate: f64) -> usize {
    (dispersion.abs() * 2.0 * PI * bandwidth * sample_rate).ceil() as usize
}

/// Phase `D g(w) / 2` with `g(w) = w^2` inside the passband. Beyond it the
/// group delay `g'(w) / 2` follows a quintic that meets `w` with matching
/// slope and curvature at the passband edge and reaches zero, flat, at
/// Nyquist, so the response is periodic and smooth.
fn smooth_phase(w: f64, wp: f64, wn: f64) -> f64 {
    let a = w.abs();
    if a <= wp {
        return w * w;
    }
    let span = wn - wp;
    let u = ((a - wp) / span).min(1.0);
    // tau = wp + span * P(u), P = u + c3 u^3 + c4 u^4 + c5 u^5, P(1) = -wp / span
    let b = -wp / span - 1.0;
    let (c3, c4, c5) = (4.0 + 10.0 * b, -7.0 - 15.0 * b, 3.0 + 6.0 * b);
    let int_p = u * u / 2.0 + c3 * u.powi(4) / 4.0 + c4 * u.powi(5) / 5.0 + c5 * u.powi(6) / 6.0;
    wp * wp + 2.0 * (wp * span * u + span * span * int_p)
}

/// Fixed FIR taps, lag `l` stored at index `l mod overlap`.
fn dispersion_taps(dispersion: f64, sample_rate: f64, eq: &EqualizerConfig) -> Vec<Complex64> {
    let m = eq.overlap;
    let wn = PI * sample_rate;
    let wp = eq.passband_fraction * wn;
    let mut h: Vec<Complex64> = fft::angular_frequencies(m, sample_rate)
        .into_iter()
        .map(|w| Complex64::from_polar(1.0, 0.5 * dispersion * smooth_phase(w, wp, wn)))
        .collect();
    fft::inverse(&mut h);
    let inv = 1.0 / m as f64;
    h.iter_mut().for_each(|v| *v *= inv);
    h
}

/// Circular convolution of one polarization with the taps, by overlap-save.
fn overlap_save(x: &[Complex64], taps: &[Complex64], block: usize) -> Vec<Complex64> {
    let n = x.len();
    let m = taps.len();
    let half = m / 2;
    let step = block - m;
    let mut filter = vec![Complex64::new(0.0, 0.0); block];
    for (k, &t) in taps.iter().enumerate() {
        let lag = fft::signed_bin(k, m);
        filter[lag.rem_euclid(block as i64) as usize] = t;
    }
    fft::forward(&mut filter);
    let inv = 1.0 / block as f64;
    filter.iter_mut().for_each(|v| *v *= inv);

    let mut out = Vec::with_capacity(n + step);
    let mut buf = vec![Complex64::new(0.0, 0.0); block];
    let mut start = 0usize;
    while out.len() < n {
        for (i, v) in buf.iter_mut().enumerate() {
            // cyclic extension by half the filter length on each side
            *v = x[(start + i + n * (1 + half / n.max(1)) - half) % n];
        }
        fft::forward(&mut buf);
        for (v, f) in buf.iter_mut().zip(&filter) {
            *v *= f;
        }
        fft::inverse(&mut buf);
        out.extend_from_slice(&buf[half..half + step]);
        start += step;
    }
    out.truncate(n);
    out
}

/// Remove the dispersion left after pre-compensation,
/// `(1 - pre_edc_fraction) * beta2 * L`, with an overlap-save FIR equalizer.
///
/// The waveform is filtered as one period of a periodic signal, so the
/// output has the input's length and the block size only changes rounding.
pub fn cd_compensate(wave: &DualPolWaveform, link: &LinkConfig, eq: &EqualizerConfig) -> Result<DualPolWaveform> {
    eq.validate()?;
    let d = link.residual_dispersion();
    if d == 0.0 {
        return Ok(wave.clone());
    }
    let fs = wave.sample_rate();
    let memory = dispersion_memory(d, eq.passband_fraction * fs, fs);
    if memory > eq.overlap {
        warn!(
            "dispersion memory is {memory} samples but the equalizer overlap is {}; block edges will be inexact",
            eq.overlap
        );
    }
    let taps = dispersion_taps(-d, fs, eq);
    DualPolWaveform::new(
        overlap_save(wave.x(), &taps, eq.block_size),
        overlap_save(wave.y(), &taps, eq.block_size),
        fs,
    )
}

/// One complex tap per subcarrier (1 on null subcarriers).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub taps: Vec<Complex64>,
    /// OFDM symbols processed since the training that produced the taps.
    pub staleness: usize,
}

/// Average of `received / known` over the training rows.
pub fn estimate_channel(rx_training: &SymbolGrid, known_training: &SymbolGrid) -> Result<ChannelEstimate> {
    if !rx_training.same_shape(known_training) {
        return Err(Error::param("received and known training grids differ in shape"));
    }
    let rows = rx_training.n_rows();
    if rows == 0 {
        return Err(Error::param("channel estimation needs at least one training symbol"));
    }
    let mut taps = vec![Complex64::new(0.0, 0.0); rx_training.width()];
    for (c, role) in rx_training.roles().iter().enumerate() {
        if !role.is_active() {
            taps[c] = Complex64::new(1.0, 0.0);
            continue;
        }
        for r in 0..rows {
            let k = known_training.row(r)[c];
            if k.norm_sqr() == 0.0 {
                return Err(Error::Numerical(format!(
                    "known training symbol {r} is zero on active subcarrier {c}"
                )));
            }
            taps[c] += rx_training.row(r)[c] / k;
        }
        taps[c] /= rows as f64;
    }
    Ok(ChannelEstimate { taps, staleness: 0 })
}

/// Divide every row of `grid` by the taps.
pub fn equalize(grid: &mut SymbolGrid, est: &ChannelEstimate) -> Result<()> {
    if est.taps.len() != grid.width() {
        return Err(Error::LengthMismatch {
            expected: grid.width(),
            actual: est.taps.len(),
        });
    }
    for i in 0..grid.n_rows() {
        for (v, t) in grid.row_mut(i).iter_mut().zip(&est.taps) {
            *v /= t;
        }
    }
    Ok(())
}

/// Equalize a framed grid, re-estimating at every run of training rows
/// from the most recent training pair.
pub fn equalize_framed(rx: &SymbolGrid, known_training: &SymbolGrid) -> Result<SymbolGrid> {
    let mut out = rx.clone();
    let mut est: Option<ChannelEstimate> = None;
    let mut i = 0;
    while i < rx.n_rows() {
        if rx.kind(i) == SymbolKind::Training {
            let start = i;
            while i < rx.n_rows() && rx.kind(i) == SymbolKind::Training {
                i += 1;
            }
            let rows: Vec<usize> = (start..i).collect();
            if rows.len() != known_training.n_rows() {
                return Err(Error::param(format!(
                    "training run of {} symbols, expected {}",
                    rows.len(),
                    known_training.n_rows()
                )));
            }
            est = Some(estimate_channel(&rx.select_rows(&rows), known_training)?);
            continue;
        }
        let e = est
            .as_mut()
            .ok_or_else(|| Error::param("data symbol precedes the first training symbol"))?;
        e.staleness += 1;
        for (v, t) in out.row_mut(i).iter_mut().zip(&e.taps) {
            *v /= t;
        }
        i += 1;
    }
    Ok(out)
}

/// Per-symbol phase estimates, `NaN` on rows without pilots.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PhaseTrace {
    /// `symbol,pol,phase_rad` for every data row.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["symbol", "pol", "phase_rad"])?;
        for (pol, trace) in [("x", &self.x), ("y", &self.y)] {
            for (i, p) in trace.iter().enumerate() {
                if !p.is_nan() {
                    w.write_record([i.to_string(), pol.to_string(), p.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Mean of the estimates that exist, radians.
    pub fn mean(&self) -> f64 {
        let v: Vec<f64> = self.x.iter().chain(&self.y).copied().filter(|p| !p.is_nan()).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }
}

fn pilot_correlation(row: &[Complex64], pilots: &[usize], values: &[Complex64]) -> Complex64 {
    pilots.iter().zip(values).map(|(&c, &k)| row[c] * k.conj()).sum()
}

fn nearest_branch(raw: f64, previous: Option<f64>) -> f64 {
    match previous {
        Some(p) => raw + 2.0 * PI * ((p - raw) / (2.0 * PI)).round(),
        None => raw,
    }
}

/// Derotate every data row of one polarization by the pilot phase.
///
/// `phi = arg sum_pilots received * conj(known)`; the trace is unwrapped by
/// nearest-branch continuation.
pub fn cpe_correct(grid: &SymbolGrid, pilot_values: &[Complex64]) -> Result<(SymbolGrid, Vec<f64>)> {
    let (x, _, trace) = cpe_correct_pair(grid, None, pilot_values, None, CpeMode::Independent)?;
    Ok((x, trace.x))
}

/// CPE on both polarizations. `pilots_y` defaults to `pilots_x`.
pub fn cpe_correct_dual(
    x: &SymbolGrid,
    y: &SymbolGrid,
    pilots_x: &[Complex64],
    pilots_y: &[Complex64],
    mode: CpeMode,
) -> Result<(SymbolGrid, SymbolGrid, PhaseTrace)> {
    let (cx, cy, trace) = cpe_correct_pair(x, Some(y), pilots_x, Some(pilots_y), mode)?;
    Ok((cx, cy.expect("y given"), trace))
}

fn cpe_correct_pair(
    x: &SymbolGrid,
    y: Option<&SymbolGrid>,
    pilots_x: &[Complex64],
    pilots_y: Option<&[Complex64]>,
    mode: CpeMode,
) -> Result<(SymbolGrid, Option<SymbolGrid>, PhaseTrace)> {
    let pilots: Vec<usize> = x.bins_with(SubcarrierRole::Pilot).collect();
    if pilots.is_empty() && mode != CpeMode::Off {
        return Err(Error::param("phase correction needs at least one pilot per symbol"));
    }
    if pilot_values_mismatch(pilots.len(), pilots_x, pilots_y) {
        return Err(Error::LengthMismatch {
            expected: pilots.len(),
            actual: pilots_x.len(),
        });
    }
    if let Some(y) = y {
        if !x.same_shape(y) {
            return Err(Error::param("polarization grids differ in shape"));
        }
    }
    let mut cx = x.clone();
    let mut cy = y.cloned();
    let rows = x.n_rows();
    let mut trace = PhaseTrace {
        x: vec![f64::NAN; rows],
        y: vec![f64::NAN; if y.is_some() { rows } else { 0 }],
    };
    if mode == CpeMode::Off {
        return Ok((cx, cy, trace));
    }
    let (mut prev_x, mut prev_y) = (None, None);
    for i in 0..rows {
        if x.kind(i) != SymbolKind::Data {
            continue;
        }
        let sx = pilot_correlation(x.row(i), &pilots, pilots_x);
        let sy = y.map(|y| pilot_correlation(y.row(i), &pilots, pilots_y.unwrap_or(pilots_x)));
        let (raw_x, raw_y) = match (mode, sy) {
            (CpeMode::Tied, Some(sy)) => {
                let s = sx + sy;
                zero_check(s, i)?;
                (s.arg(), Some(s.arg()))
            }
            (_, sy) => {
                zero_check(sx, i)?;
                if let Some(s) = sy {
                    zero_check(s, i)?;
                }
                (sx.arg(), sy.map(|s| s.arg()))
            }
        };
        let phi_x = nearest_branch(raw_x, prev_x);
        prev_x = Some(phi_x);
        trace.x[i] = phi_x;
        let rot = Complex64::from_polar(1.0, -phi_x);
        cx.row_mut(i).iter_mut().for_each(|v| *v *= rot);
        if let (Some(cy), Some(raw)) = (cy.as_mut(), raw_y) {
            let phi_y = nearest_branch(raw, prev_y);
            prev_y = Some(phi_y);
            trace.y[i] = phi_y;
            let rot = Complex64::from_polar(1.0, -phi_y);
            cy.row_mut(i).iter_mut().for_each(|v| *v *= rot);
        }
    }
    Ok((cx, cy, trace))
}

fn pilot_values_mismatch(n: usize, px: &[Complex64], py: Option<&[Complex64]>) -> bool {
    px.len() != n || py.is_some_and(|p| p.len() != n)
}

fn zero_check(s: Complex64, row: usize) -> Result<()> {
    if s.norm_sqr() == 0.0 {
        Err(Error::Numerical(format!("zero pilot energy in symbol {row}")))
    } else {
        Ok(())
    }
}
