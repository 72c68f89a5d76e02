//! Fiber link: dispersion pre-compensation, Manakov split-step propagation,
//! lumped EDFAs with inline ASE, launch-power scaling.
//!
//! Fields are in sqrt(W). The spectrum convention is `X(w) = sum x(t) e^{-iwt}`,
//! under which the Manakov equation
//!
//! ```text
//! dE/dz = -(alpha - g)/2 E - i beta2/2 d2E/dt2 + i (8/9) gamma (|Ex|^2 + |Ey|^2) E
//! ```
//!
//! has the linear solution `E(w, z) = E(w, 0) exp(i beta2 w^2 z / 2 - alpha z / 2)`.
//! Every accumulated dispersion below is a `beta2 * length` product in s^2
//! acting through `exp(i D w^2 / 2)`.
//!
//! The waveform is treated as one period of a periodic signal, so dispersion
//! wraps around its ends.

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::signal::{gaussian_noise, DualPolWaveform, RandomSource};

/// Polarization-averaging factor of the Manakov equation.
pub const MANAKOV_FACTOR: f64 = 8.0 / 9.0;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Fiber coefficients in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberParams {
    /// Power attenuation, 1/m.
    pub alpha: f64,
    /// Group-velocity dispersion, s^2/m.
    pub beta2: f64,
    /// Nonlinear coefficient, 1/(W m).
    pub gamma: f64,
    pub manakov_factor: f64,
    /// Span length, m.
    pub span_length: f64,
}

impl FiberParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::param(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.span_length > 0.0 && self.span_length.is_finite()) {
            return Err(Error::param("span_length must be > 0"));
        }
        if !self.beta2.is_finite() || !self.gamma.is_finite() {
            return Err(Error::param("beta2 and gamma must be finite"));
        }
        if self.manakov_factor != MANAKOV_FACTOR {
            return Err(Error::param("manakov_factor must be exactly 8/9"));
        }
        Ok(())
    }

    /// Span loss as a linear power ratio `exp(alpha L)`.
    pub fn span_loss(&self) -> f64 {
        (self.alpha * self.span_length).exp()
    }

    /// `(1 - exp(-alpha L)) / alpha` for one span.
    pub fn effective_length(&self) -> f64 {
        if self.alpha == 0.0 {
            self.span_length
        } else {
            -(-self.alpha * self.span_length).exp_m1() / self.alpha
        }
    }
}

/// Fiber as specified on a datasheet; converted to [`FiberParams`] with [`FiberSpec::params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    pub alpha_db_per_km: f64,
    pub dispersion_ps_nm_km: f64,
    pub wavelength_nm: f64,
    /// Nonlinear index, m^2/W.
    pub n2: f64,
    pub effective_area_um2: f64,
    pub span_length_km: f64,
}

impl Default for FiberSpec {
    fn default() -> Self {
        Self {
            alpha_db_per_km: 0.2,
            dispersion_ps_nm_km: 16.0,
            wavelength_nm: 1550.0,
            n2: 2.4e-20,
            effective_area_um2: 80.0,
            span_length_km: 80.0,
        }
    }
}

impl FiberSpec {
    pub fn params(&self) -> Result<FiberParams> {
        if !(self.wavelength_nm > 0.0) || !(self.effective_area_um2 > 0.0) {
            return Err(Error::param("wavelength and effective area must be > 0"));
        }
        let lambda = self.wavelength_nm * 1e-9;
        let d = self.dispersion_ps_nm_km * 1e-6; // s/m^2
        let p = FiberParams {
            alpha: self.alpha_db_per_km * 1e-3 * std::f64::consts::LN_10 / 10.0,
            beta2: -d * lambda * lambda / (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT),
            gamma: 2.0 * std::f64::consts::PI * self.n2 / (lambda * self.effective_area_um2 * 1e-12),
            manakov_factor: MANAKOV_FACTOR,
            span_length: self.span_length_km * 1e3,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn carrier_frequency(&self) -> f64 {
        SPEED_OF_LIGHT / (self.wavelength_nm * 1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplifierParams {
    pub gain_db: f64,
    pub noise_figure_db: f64,
    /// Hz.
    pub center_frequency: f64,
    #[serde(default = "yes")]
    pub ase: bool,
}

fn yes() -> bool {
    true
}

impl Default for AmplifierParams {
    fn default() -> Self {
        Self {
            gain_db: 16.0,
            noise_figure_db: 4.0,
            center_frequency: 193.4e12,
            ase: true,
        }
    }
}

impl AmplifierParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain_db >= 0.0 && self.gain_db.is_finite()) {
            return Err(Error::param(format!("gain_db must be >= 0, got {}", self.gain_db)));
        }
        if !(self.center_frequency > 0.0) {
            return Err(Error::param("center_frequency must be > 0"));
        }
        if !self.noise_figure_db.is_finite() {
            return Err(Error::param("noise_figure_db must be finite"));
        }
        if self.ase && self.noise_figure_db < 10.0 * 2f64.log10() {
            warn!(
                "noise figure {} dB is below the 3 dB quantum limit",
                self.noise_figure_db
            );
        }
        Ok(())
    }

    pub fn gain(&self) -> f64 {
        10f64.powf(self.gain_db / 10.0)
    }

    /// Spontaneous emission factor; zero with ASE disabled.
    pub fn n_sp(&self) -> f64 {
        if self.ase {
            10f64.powf(self.noise_figure_db / 10.0) / 2.0
        } else {
            0.0
        }
    }

    /// One-sided ASE power spectral density per polarization, W/Hz.
    pub fn ase_psd(&self) -> f64 {
        (self.gain() - 1.0) * self.n_sp() * PLANCK * self.center_frequency
    }

    /// Complex noise variance per sample and polarization at `sample_rate`.
    pub fn ase_variance(&self, sample_rate: f64) -> f64 {
        self.ase_psd() * sample_rate
    }
}

/// Split-step step-size control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepControl {
    /// Largest nonlinear phase rotation per step at peak power, rad.
    pub max_phase: f64,
    /// Hard cap on the step length, m.
    pub max_step: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            max_phase: 0.05,
            max_step: 1000.0,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_phase > 0.0) || !(self.max_step > 0.0) {
            return Err(Error::param("step control limits must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    pub n_spans: usize,
    pub fiber: FiberParams,
    pub amp: AmplifierParams,
    pub pre_edc_fraction: f64,
    /// Total average power over both polarizations at each span input, dBm.
    pub launch_power_dbm: f64,
    pub step: StepControl,
}

impl LinkConfig {
    /// 35 x 80 km standard fiber with 16 dB / 4 dB NF amplifiers.
    pub fn standard(n_spans: usize) -> Self {
        Self {
            n_spans,
            fiber: FiberSpec::default().params().expect("default fiber is valid"),
            amp: AmplifierParams::default(),
            pre_edc_fraction: 0.0,
            launch_power_dbm: 0.0,
            step: StepControl::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fiber.validate()?;
        self.amp.validate()?;
        self.step.validate()?;
        if !(0.0..=1.0).contains(&self.pre_edc_fraction) {
            return Err(Error::param(format!(
                "pre_edc_fraction must lie in [0, 1], got {}",
                self.pre_edc_fraction
            )));
        }
        if !self.launch_power_dbm.is_finite() {
            return Err(Error::param("launch_power_dbm must be finite"));
        }
        Ok(())
    }

    pub fn total_length(&self) -> f64 {
        self.n_spans as f64 * self.fiber.span_length
    }

    /// `beta2 * L` over the whole link, s^2.
    pub fn total_dispersion(&self) -> f64 {
        self.fiber.beta2 * self.total_length()
    }

    /// Accumulated dispersion applied at the transmitter, s^2.
    pub fn pre_edc_dispersion(&self) -> f64 {
        -self.pre_edc_fraction * self.total_dispersion()
    }

    /// Dispersion the receiver must still remove, s^2 of fiber-equivalent `beta2 * L`.
    pub fn residual_dispersion(&self) -> f64 {
        (1.0 - self.pre_edc_fraction) * self.total_dispersion()
    }
}

pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    1e-3 * 10f64.powf(p_dbm / 10.0)
}

/// Scale so that the mean of `|x|^2 + |y|^2` equals `p_dbm`.
pub fn set_launch_power(mut wave: DualPolWaveform, p_dbm: f64) -> Result<DualPolWaveform> {
    let p = wave.mean_power();
    if p == 0.0 || !p.is_finite() {
        return Err(Error::param("cannot set the launch power of an all-zero waveform"));
    }
    wave.scale((dbm_to_watts(p_dbm) / p).sqrt());
    Ok(wave)
}

/// Multiply each polarization's spectrum by `exp(i D w^2 / 2) * amplitude`.
pub fn apply_dispersion(wave: &mut DualPolWaveform, dispersion: f64, amplitude: f64) {
    if dispersion == 0.0 && amplitude == 1.0 {
        return;
    }
    let h = transfer(wave.len(), wave.sample_rate(), dispersion, amplitude);
    let (x, y) = wave.pols_mut();
    for pol in [x, y] {
        fft::forward(pol);
        let n = pol.len() as f64;
        for (v, hk) in pol.iter_mut().zip(&h) {
            *v *= hk / n;
        }
        fft::inverse(pol);
    }
}

fn transfer(n: usize, sample_rate: f64, dispersion: f64, amplitude: f64) -> Vec<Complex64> {
    fft::angular_frequencies(n, sample_rate)
        .into_iter()
        .map(|w| Complex64::from_polar(amplitude, 0.5 * dispersion * w * w))
        .collect()
}

/// All-pass filter of accumulated dispersion `-pre_edc_fraction * beta2 * L_total`.
pub fn pre_edc(mut wave: DualPolWaveform, link: &LinkConfig) -> DualPolWaveform {
    apply_dispersion(&mut wave, link.pre_edc_dispersion(), 1.0);
    wave
}

fn check_finite(wave: &DualPolWaveform, z: f64) -> Result<()> {
    if wave.is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "non-finite field after {z:.1} m of propagation; reduce the launch power or step size"
        )))
    }
}

/// Step length at peak power `peak`, bounded by the remaining distance.
fn choose_step(fiber: &FiberParams, step: &StepControl, peak: f64, remaining: f64) -> f64 {
    let rate = fiber.manakov_factor * fiber.gamma * peak;
    let dz = if rate > 0.0 {
        (step.max_phase / rate).min(step.max_step)
    } else {
        step.max_step
    };
    dz.min(remaining)
}

/// Advance through one span with the symmetrized split-step method.
///
/// Each step is half linear, full nonlinear at the step midpoint, half
/// linear; consecutive half steps are merged into one transform pair. The
/// step length keeps the peak nonlinear phase below `step.max_phase`.
pub fn propagate_span(
    wave: DualPolWaveform,
    fiber: &FiberParams,
    step: &StepControl,
) -> Result<DualPolWaveform> {
    fiber.validate()?;
    step.validate()?;
    let (mut x, mut y, fs) = wave.into_parts();
    let n = x.len();
    let w = fft::angular_frequencies(n, fs);
    let inv_n = 1.0 / n as f64;
    // Most steps share one length, so the transfer function is cached on it.
    let mut cached: (f64, Vec<Complex64>) = (f64::NAN, Vec::new());
    let mut linear = |x: &mut [Complex64], y: &mut [Complex64], h: f64| {
        if cached.0 != h {
            let d = 0.5 * fiber.beta2 * h;
            let a = (-0.5 * fiber.alpha * h).exp() * inv_n;
            cached = (h, w.iter().map(|w| Complex64::from_polar(a, d * w * w)).collect());
        }
        for pol in [x, y] {
            fft::forward(pol);
            for (v, h) in pol.iter_mut().zip(&cached.1) {
                *v *= h;
            }
            fft::inverse(pol);
        }
    };
    let peak = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .zip(y)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .fold(0.0, f64::max)
    };

    let length = fiber.span_length;
    let k = fiber.manakov_factor * fiber.gamma;
    let mut z = 0.0;
    let mut dz = choose_step(fiber, step, peak(&x, &y), length);
    linear(&mut x, &mut y, 0.5 * dz);
    loop {
        if k != 0.0 {
            for (a, b) in x.iter_mut().zip(y.iter_mut()) {
                let rot = Complex64::from_polar(1.0, k * (a.norm_sqr() + b.norm_sqr()) * dz);
                *a *= rot;
                *b *= rot;
            }
        }
        z += dz;
        let remaining = length - z;
        if remaining <= 1e-9 * length {
            linear(&mut x, &mut y, 0.5 * dz);
            break;
        }
        let next = choose_step(fiber, step, peak(&x, &y), remaining);
        linear(&mut x, &mut y, 0.5 * (dz + next));
        dz = next;
    }
    let out = DualPolWaveform::new(x, y, fs)?;
    check_finite(&out, z)?;
    Ok(out)
}

/// Lumped amplifier: field gain `sqrt(G)` plus white circular Gaussian ASE on each polarization.
pub fn edfa(mut wave: DualPolWaveform, amp: &AmplifierParams, rng: &mut RandomSource) -> Result<DualPolWaveform> {
    amp.validate()?;
    wave.scale(amp.gain().sqrt());
    let var = amp.ase_variance(wave.sample_rate());
    if var > 0.0 {
        let n = wave.len();
        let nx = gaussian_noise(rng, n, 0.5 * var)?;
        let ny = gaussian_noise(rng, n, 0.5 * var)?;
        let (x, y) = wave.pols_mut();
        for (v, e) in x.iter_mut().zip(nx) {
            *v += e;
        }
        for (v, e) in y.iter_mut().zip(ny) {
            *v += e;
        }
    }
    Ok(wave)
}

/// Pre-EDC followed by `n_spans` of fiber and amplifier.
pub fn propagate_link(wave: DualPolWaveform, link: &LinkConfig, rng: &mut RandomSource) -> Result<DualPolWaveform> {
    propagate_link_observed(wave, link, rng, |_, _| Ok(()))
}

/// [`propagate_link`] calling `observe(span, field)` after every amplifier (spans count from 1).
pub fn propagate_link_observed(
    wave: DualPolWaveform,
    link: &LinkConfig,
    rng: &mut RandomSource,
    mut observe: impl FnMut(usize, &DualPolWaveform) -> Result<()>,
) -> Result<DualPolWaveform> {
    link.validate()?;
    let mut wave = pre_edc(wave, link);
    for span in 1..=link.n_spans {
        wave = propagate_span(wave, &link.fiber, &link.step)
            .map_err(|e| Error::Numerical(format!("span {span}: {e}")))?;
        wave = edfa(wave, &link.amp, rng)?;
        observe(span, &wave)?;
    }
    Ok(wave)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn noise_wave(n: usize, seed: u64, fs: f64) -> DualPolWaveform {
        let mut rng = RandomSource::new(seed);
        let x = gaussian_noise(&mut rng, n, 0.5).unwrap();
        let y = gaussian_noise(&mut rng, n, 0.5).unwrap();
        DualPolWaveform::new(x, y, fs).unwrap()
    }

    fn power_spectrum(v: &[Complex64]) -> Vec<f64> {
        let mut b = v.to_vec();
        fft::forward(&mut b);
        b.iter().map(|v| v.norm_sqr()).collect()
    }

    #[test]
    fn derived_fiber_constants() {
        let f = FiberSpec::default().params().unwrap();
        assert!((f.beta2 * 1e27 - (-20.4)).abs() < 0.1, "{}", f.beta2);
        assert!((f.gamma * 1e3 - 1.22).abs() < 0.01, "{}", f.gamma);
        assert!((10.0 * f.span_loss().log10() - 16.0).abs() < 1e-9);
        assert!(FiberSpec {
            effective_area_um2: 0.0,
            ..FiberSpec::default()
        }
        .params()
        .is_err());
        let mut bad = f;
        bad.manakov_factor = 0.9;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn launch_power() {
        let w = set_launch_power(noise_wave(1000, 1, 1e9), 0.0).unwrap();
        assert!((w.mean_power() - 1e-3).abs() < 1e-15);
        let w = set_launch_power(w, 3.0).unwrap();
        assert!((w.mean_power() - 1.995e-3).abs() < 1e-6);
        let again = set_launch_power(w.clone(), 3.0).unwrap();
        assert!((again.mean_power() / w.mean_power() - 1.0).abs() < 1e-14);
        let z = vec![c(0.0, 0.0); 8];
        assert!(set_launch_power(DualPolWaveform::new(z.clone(), z, 1.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn dispersion_only_is_all_pass() {
        let mut fiber = FiberSpec::default().params().unwrap();
        fiber.gamma = 0.0;
        fiber.alpha = 0.0;
        let w = noise_wave(4096, 2, 64e9);
        let out = propagate_span(w.clone(), &fiber, &StepControl::default()).unwrap();
        let (a, b) = (power_spectrum(w.x()), power_spectrum(out.x()));
        let scale = a.iter().cloned().fold(0.0, f64::max);
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn energy_conserved_without_loss() {
        let mut fiber = FiberSpec::default().params().unwrap();
        fiber.alpha = 0.0;
        let mut w = noise_wave(2048, 3, 64e9);
        w = set_launch_power(w, 6.0).unwrap();
        let out = propagate_span(w.clone(), &fiber, &StepControl::default()).unwrap();
        let rel = (out.mean_power() - w.mean_power()).abs() / w.mean_power();
        assert!(rel < 1e-8, "{rel}");
    }

    #[test]
    fn cw_nonlinear_phase() {
        let mut fiber = FiberSpec::default().params().unwrap();
        fiber.alpha = 0.0;
        fiber.beta2 = 0.0;
        let p: f64 = 10e-3;
        let x = vec![c(p.sqrt(), 0.0); 64];
        let y = vec![c(0.0, 0.0); 64];
        let out = propagate_span(DualPolWaveform::new(x, y, 1e9).unwrap(), &fiber, &StepControl::default()).unwrap();
        let want = MANAKOV_FACTOR * fiber.gamma * p * fiber.span_length;
        for v in out.x() {
            assert!((v.arg() - want).abs() < 1e-6);
            assert!((v.norm_sqr() - p).abs() < 1e-15);
        }
    }

    #[test]
    fn loss_only_attenuates_16_db() {
        let mut fiber = FiberSpec::default().params().unwrap();
        fiber.gamma = 0.0;
        fiber.beta2 = 0.0;
        let w = noise_wave(512, 4, 1e9);
        let out = propagate_span(w.clone(), &fiber, &StepControl::default()).unwrap();
        let db = 10.0 * (w.mean_power() / out.mean_power()).log10();
        assert!((db - 16.0).abs() < 1e-9, "{db}");
    }

    #[test]
    fn rejects_overflow() {
        let fiber = FiberSpec::default().params().unwrap();
        let x = vec![c(f64::MAX, 0.0); 16];
        let w = DualPolWaveform::new(x.clone(), x, 1e9).unwrap();
        assert!(matches!(
            propagate_span(w, &fiber, &StepControl::default()),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn amplifier_gain_and_identity() {
        let mut rng = RandomSource::new(5);
        let w = noise_wave(256, 6, 1e9);
        let quiet = AmplifierParams {
            ase: false,
            ..AmplifierParams::default()
        };
        let out = edfa(w.clone(), &quiet, &mut rng).unwrap();
        assert!((out.mean_power() / w.mean_power() - quiet.gain()).abs() < 1e-12);
        let unity = AmplifierParams { gain_db: 0.0, ..quiet };
        assert_eq!(edfa(w.clone(), &unity, &mut rng).unwrap(), w);
    }

    #[test]
    fn ase_variance_matches_formula() {
        let amp = AmplifierParams::default();
        // (G - 1) n_sp h nu fs
        let g = 10f64.powf(1.6);
        let nsp = 10f64.powf(0.4) / 2.0;
        let want = (g - 1.0) * nsp * 6.626e-34 * 1.934e14 * 64e9;
        assert!((amp.ase_variance(64e9) / want - 1.0).abs() < 1e-3);
        assert!((amp.ase_variance(64e9) - 4.0e-7).abs() < 0.1e-7);

        let n = 1_000_000;
        let z = vec![c(0.0, 0.0); n];
        let w = DualPolWaveform::new(z.clone(), z, 64e9).unwrap();
        let out = edfa(w, &amp, &mut RandomSource::new(7)).unwrap();
        for pol in [out.x(), out.y()] {
            let var = pol.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
            assert!((var / amp.ase_variance(64e9) - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn pre_edc_and_compensation_cancel() {
        let mut link = LinkConfig::standard(4);
        link.pre_edc_fraction = 0.5;
        link.fiber.gamma = 0.0;
        link.amp.ase = false;
        let w = noise_wave(4096, 8, 64e9);
        let mut out = propagate_link(w.clone(), &link, &mut RandomSource::new(0)).unwrap();
        apply_dispersion(&mut out, -link.residual_dispersion(), 1.0);
        let err: f64 = out.x().iter().zip(w.x()).map(|(a, b)| (a - b).norm_sqr()).sum();
        let norm: f64 = w.x().iter().map(|v| v.norm_sqr()).sum();
        assert!((err / norm).sqrt() < 1e-8);
        // magnitude spectrum unchanged by pre-EDC
        let pre = pre_edc(w.clone(), &link);
        for (p, q) in power_spectrum(w.y()).iter().zip(power_spectrum(pre.y())) {
            assert!((p - q).abs() < 1e-9 * p.max(1.0));
        }
    }

    #[test]
    fn zero_spans_is_pre_edc_only() {
        let mut link = LinkConfig::standard(0);
        link.pre_edc_fraction = 0.5;
        let w = noise_wave(128, 9, 64e9);
        let out = propagate_link(w.clone(), &link, &mut RandomSource::new(0)).unwrap();
        assert_eq!(out, pre_edc(w, &link));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let link = LinkConfig::standard(2);
        let w = set_launch_power(noise_wave(1024, 10, 64e9), 0.0).unwrap();
        let a = propagate_link(w.clone(), &link, &mut RandomSource::new(11)).unwrap();
        let b = propagate_link(w, &link, &mut RandomSource::new(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_link() {
        let mut link = LinkConfig::standard(1);
        link.pre_edc_fraction = 1.5;
        assert!(link.validate().is_err());
        let mut link = LinkConfig::standard(1);
        link.step.max_phase = 0.0;
        assert!(link.validate().is_err());
    }
}
