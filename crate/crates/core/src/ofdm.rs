//! OFDM framing: subcarrier layout, pilots, training symbols, cyclic prefix.
//!
//! Grid columns are in natural frequency order: column `c` holds signed FFT
//! bin `c - fft_size/2`, so DC sits at column `fft_size/2`. The active band
//! (`n_data + n_pilots` subcarriers) is split symmetrically around DC, which
//! itself is left empty; the remaining subcarriers at the band edges are
//! nulls that give the waveform its oversampling margin. Pilots sit at
//! evenly spaced positions inside the active band.
//!
//! Transforms use the unitary convention (`1/sqrt(N)` both ways), so grid
//! energy and time-domain energy (without the prefix) agree.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coding::qpsk;
use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{DualPolGrid, SubcarrierRole, SymbolGrid, SymbolKind};
use crate::signal::{DualPolWaveform, RandomSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfdmParams {
    pub fft_size: usize,
    pub n_data: usize,
    pub n_pilots: usize,
    pub cp_fraction: f64,
    /// Samples per second at the nominal (unpadded) FFT size.
    pub sample_rate: f64,
    /// Training symbols are the first `training_symbols` of every `training_period`.
    pub training_period: usize,
    pub training_symbols: usize,
    /// 1 for none, 2 to double the time-domain sampling with zero subcarriers.
    #[serde(default = "one")]
    pub zero_pad_factor: usize,
}

fn one() -> usize {
    1
}

impl Default for OfdmParams {
    fn default() -> Self {
        Self {
            fft_size: 4096,
            n_data: 3300,
            n_pilots: 4,
            cp_fraction: 0.03,
            sample_rate: 64e9,
            training_period: 100,
            training_symbols: 2,
            zero_pad_factor: 1,
        }
    }
}

impl OfdmParams {
    /// Reduced layout for quick runs: 256 data subcarriers on a 512-point FFT.
    pub fn scaled() -> Self {
        Self {
            fft_size: 512,
            n_data: 256,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fft_size < 2 {
            return Err(Error::param("fft_size must be at least 2"));
        }
        if self.n_data + self.n_pilots + 1 > self.fft_size {
            return Err(Error::param(format!(
                "{} data + {} pilot subcarriers plus DC do not fit in {} bins",
                self.n_data, self.n_pilots, self.fft_size
            )));
        }
        if self.n_data == 0 {
            return Err(Error::param("n_data must be > 0"));
        }
        if !(self.cp_fraction >= 0.0 && self.cp_fraction < 1.0) {
            return Err(Error::param(format!("cp_fraction {} outside [0, 1)", self.cp_fraction)));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::param("sample_rate must be > 0"));
        }
        if self.training_symbols == 0 || self.training_symbols >= self.training_period {
            return Err(Error::param(format!(
                "need 0 < training_symbols ({}) < training_period ({})",
                self.training_symbols, self.training_period
            )));
        }
        if !matches!(self.zero_pad_factor, 1 | 2) {
            return Err(Error::param("zero_pad_factor must be 1 or 2"));
        }
        Ok(())
    }

    pub fn cp_samples(&self) -> usize {
        (self.cp_fraction * self.fft_size as f64).round() as usize
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.sample_rate / self.fft_size as f64
    }

    /// Transform length actually used in the time domain.
    pub fn padded_fft_size(&self) -> usize {
        self.fft_size * self.zero_pad_factor
    }

    pub fn padded_sample_rate(&self) -> f64 {
        self.sample_rate * self.zero_pad_factor as f64
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        (self.fft_size + self.cp_samples()) * self.zero_pad_factor
    }

    pub fn n_active(&self) -> usize {
        self.n_data + self.n_pilots
    }

    /// Width of the occupied band in Hz (outermost active subcarriers inclusive).
    pub fn occupied_bandwidth(&self) -> f64 {
        let neg = self.n_active() - self.n_active() / 2;
        let pos = self.n_active() / 2;
        (neg + pos + 1) as f64 * self.subcarrier_spacing()
    }

    /// Columns of the active subcarriers in frequency order.
    pub fn active_columns(&self) -> Vec<usize> {
        let center = self.fft_size / 2;
        let pos = self.n_active() / 2;
        let neg = self.n_active() - pos;
        (center - neg..center).chain(center + 1..=center + pos).collect()
    }

    /// Pilots sit near the centres of `n_pilots` equal slices of the active
    /// band, nudged so that every run of data subcarriers between them has
    /// even length; subcarrier pairs then never straddle a pilot.
    pub fn pilot_columns(&self) -> Vec<usize> {
        let active = self.active_columns();
        let n = active.len();
        (0..self.n_pilots)
            .map(|j| {
                let mut i = ((2 * j + 1) * n) / (2 * self.n_pilots);
                if i % 2 != j % 2 {
                    i -= 1;
                }
                active[i]
            })
            .collect()
    }

    pub fn roles(&self) -> Vec<SubcarrierRole> {
        let mut roles = vec![SubcarrierRole::Null; self.fft_size];
        for c in self.active_columns() {
            roles[c] = SubcarrierRole::Data;
        }
        for c in self.pilot_columns() {
            roles[c] = SubcarrierRole::Pilot;
        }
        roles
    }

    /// Kind of the `i`-th OFDM symbol in the transmitted sequence.
    pub fn symbol_kind(&self, i: usize) -> SymbolKind {
        if i % self.training_period < self.training_symbols {
            SymbolKind::Training
        } else {
            SymbolKind::Data
        }
    }

    /// Fraction of OFDM symbols that carry payload.
    pub fn training_efficiency(&self) -> f64 {
        (self.training_period - self.training_symbols) as f64 / self.training_period as f64
    }

    /// Net payload rate in bit/s for a scheme carrying `bits_per_subcarrier`
    /// bits on each data subcarrier (summed over both polarizations).
    pub fn net_bit_rate(&self, bits_per_subcarrier: f64) -> f64 {
        let symbol_duration = (self.fft_size + self.cp_samples()) as f64 / self.sample_rate;
        bits_per_subcarrier * self.n_data as f64 / symbol_duration * self.training_efficiency()
    }

    /// Text manifest of the subcarrier layout: `column,bin,frequency_hz,role`.
    pub fn write_layout(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# column,bin,frequency_hz,role")?;
        let half = (self.fft_size / 2) as i64;
        for (c, role) in self.roles().iter().enumerate() {
            let bin = c as i64 - half;
            writeln!(
                w,
                "{c},{bin},{},{}",
                bin as f64 * self.subcarrier_spacing(),
                role.name()
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Known unit-power QPSK pilot values, one per pilot subcarrier.
pub fn default_pilot_values(n_pilots: usize) -> Vec<Complex64> {
    let q = qpsk().normalized();
    (0..n_pilots).map(|j| q.point(j % 4)).collect()
}

/// Seed of the training sequence known to both ends.
pub const TRAINING_SEED: u64 = 0x7452_4149_4e49_4e47;

/// `params.training_symbols` rows of unit-power random QPSK on every active subcarrier.
pub fn training_grid(params: &OfdmParams) -> SymbolGrid {
    training_grid_stream(params, 1)
}

/// [`training_grid`] drawn from another stream of the training seed.
pub fn training_grid_stream(params: &OfdmParams, stream: u64) -> SymbolGrid {
    let q = qpsk().normalized();
    let mut rng = RandomSource::with_stream(TRAINING_SEED, stream);
    let roles = params.roles();
    let mut grid = SymbolGrid::new(roles.clone());
    for _ in 0..params.training_symbols {
        let row: Vec<Complex64> = roles
            .iter()
            .map(|r| {
                if r.is_active() {
                    q.point((rng.next_u64() % 4) as usize)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        grid.push_row(SymbolKind::Training, &row).expect("layout-shaped row");
    }
    grid
}

/// Interleave training symbols into a data grid and write the pilots.
///
/// `data` holds payload rows on the layout of `params` with zero at pilot
/// columns. Every `training_period` output rows begin with the rows of
/// `training`.
pub fn insert_pilots_and_training(
    data: &SymbolGrid,
    params: &OfdmParams,
    pilot_values: &[Complex64],
    training: &SymbolGrid,
) -> Result<SymbolGrid> {
    let roles = params.roles();
    if data.roles() != roles.as_slice() {
        return Err(Error::param("data grid does not follow the configured subcarrier layout"));
    }
    if training.roles() != roles.as_slice() || training.n_rows() != params.training_symbols {
        return Err(Error::param(format!(
            "training grid must have {} rows on the configured layout",
            params.training_symbols
        )));
    }
    let pilots = params.pilot_columns();
    if pilot_values.len() != pilots.len() {
        return Err(Error::LengthMismatch {
            expected: pilots.len(),
            actual: pilot_values.len(),
        });
    }
    for i in 0..data.n_rows() {
        if let Some(&c) = pilots.iter().find(|&&c| data.row(i)[c] != Complex64::new(0.0, 0.0)) {
            return Err(Error::LayoutCollision {
                bin: c,
                existing: "pilot",
                requested: "data",
            });
        }
    }

    let per_frame = params.training_period - params.training_symbols;
    let mut out = SymbolGrid::new(roles);
    for chunk in (0..data.n_rows()).collect::<Vec<_>>().chunks(per_frame) {
        for t in 0..training.n_rows() {
            out.push_row(SymbolKind::Training, training.row(t))?;
        }
        for &i in chunk {
            let mut row = data.row(i).to_vec();
            for (&c, &p) in pilots.iter().zip(pilot_values) {
                row[c] = p;
            }
            out.push_row(SymbolKind::Data, &row)?;
        }
    }
    Ok(out)
}

fn modulate_pol(grid: &SymbolGrid, params: &OfdmParams) -> Vec<Complex64> {
    let n = params.fft_size;
    let nn = params.padded_fft_size();
    let cp = params.cp_samples() * params.zero_pad_factor;
    let half = (n / 2) as i64;
    let mut out = Vec::with_capacity(grid.n_rows() * (nn + cp));
    let mut buf = vec![Complex64::new(0.0, 0.0); nn];
    for row in grid.rows() {
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (c, &v) in row.iter().enumerate() {
            let bin = c as i64 - half;
            buf[bin.rem_euclid(nn as i64) as usize] = v;
        }
        fft::inverse_unitary(&mut buf);
        out.extend_from_slice(&buf[nn - cp..]);
        out.extend_from_slice(&buf);
    }
    out
}

/// Inverse transform each row, prepend the cyclic prefix and concatenate.
pub fn ofdm_modulate(grid: &DualPolGrid, params: &OfdmParams) -> Result<DualPolWaveform> {
    params.validate()?;
    for g in [&grid.x, &grid.y] {
        if g.width() != params.fft_size {
            return Err(Error::LengthMismatch {
                expected: params.fft_size,
                actual: g.width(),
            });
        }
    }
    if grid.x.n_rows() != grid.y.n_rows() || grid.x.n_rows() == 0 {
        return Err(Error::param("both polarizations need the same, non-zero number of symbols"));
    }
    DualPolWaveform::new(
        modulate_pol(&grid.x, params),
        modulate_pol(&grid.y, params),
        params.padded_sample_rate(),
    )
}

fn demodulate_pol(samples: &[Complex64], params: &OfdmParams, roles: &[SubcarrierRole]) -> Result<SymbolGrid> {
    let n = params.fft_size;
    let nn = params.padded_fft_size();
    let cp = params.cp_samples() * params.zero_pad_factor;
    let half = (n / 2) as i64;
    let n_rows = samples.len() / params.symbol_len();
    let mut kinds = Vec::with_capacity(n_rows);
    let mut symbols = Vec::with_capacity(n_rows * n);
    let mut buf = vec![Complex64::new(0.0, 0.0); nn];
    for (i, sym) in samples.chunks_exact(params.symbol_len()).enumerate() {
        buf.copy_from_slice(&sym[cp..]);
        fft::forward_unitary(&mut buf);
        for (c, role) in roles.iter().enumerate() {
            let bin = c as i64 - half;
            symbols.push(if role.is_active() {
                buf[bin.rem_euclid(nn as i64) as usize]
            } else {
                Complex64::new(0.0, 0.0)
            });
        }
        kinds.push(params.symbol_kind(i));
    }
    SymbolGrid::from_parts(roles.to_vec(), kinds, symbols)
}

/// Strip the cyclic prefix and forward transform each symbol.
///
/// Rows are tagged with the training schedule of `params`; null subcarriers
/// come back as exact zeros.
pub fn ofdm_demodulate(wave: &DualPolWaveform, params: &OfdmParams) -> Result<DualPolGrid> {
    params.validate()?;
    let len = params.symbol_len();
    if wave.len() % len != 0 {
        return Err(Error::param(format!(
            "waveform length {} is not a multiple of the symbol length {len}",
            wave.len()
        )));
    }
    let roles = params.roles();
    Ok(DualPolGrid {
        x: demodulate_pol(wave.x(), params, &roles)?,
        y: demodulate_pol(wave.y(), params, &roles)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::gaussian_noise;

    fn small() -> OfdmParams {
        OfdmParams {
            fft_size: 64,
            n_data: 40,
            n_pilots: 4,
            cp_fraction: 0.125,
            sample_rate: 1e9,
            training_period: 10,
            training_symbols: 2,
            zero_pad_factor: 1,
        }
    }

    fn random_grid(params: &OfdmParams, rows: usize, seed: u64) -> SymbolGrid {
        let mut rng = RandomSource::new(seed);
        let roles = params.roles();
        let mut g = SymbolGrid::new(roles.clone());
        for i in 0..rows {
            let noise = gaussian_noise(&mut rng, roles.len(), 0.5).unwrap();
            let row: Vec<Complex64> = roles
                .iter()
                .zip(noise)
                .map(|(r, v)| if r.is_active() { v } else { Complex64::new(0.0, 0.0) })
                .collect();
            g.push_row(params.symbol_kind(i), &row).unwrap();
        }
        g
    }

    #[test]
    fn default_layout_counts() {
        let p = OfdmParams::default();
        p.validate().unwrap();
        assert_eq!(p.cp_samples(), 123);
        assert!((p.subcarrier_spacing() - 15.625e6).abs() < 1e-6);
        let roles = p.roles();
        let count = |r| roles.iter().filter(|&&x| x == r).count();
        assert_eq!(count(SubcarrierRole::Data), 3300);
        assert_eq!(count(SubcarrierRole::Pilot), 4);
        assert_eq!(count(SubcarrierRole::Null), 4096 - 3304);
        assert_eq!(roles[2048], SubcarrierRole::Null);
        // symmetric split around DC
        let active = p.active_columns();
        assert_eq!(2048 - active[0], active[active.len() - 1] - 2048);
    }

    #[test]
    fn data_runs_between_pilots_are_even() {
        for p in [OfdmParams::default(), OfdmParams::scaled(), small()] {
            let roles = p.roles();
            let mut run = 0;
            for c in p.active_columns() {
                if roles[c] == SubcarrierRole::Pilot {
                    assert_eq!(run % 2, 0);
                    run = 0;
                } else {
                    run += 1;
                }
            }
            assert_eq!(run % 2, 0);
        }
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = small();
        p.n_data = 64;
        assert!(p.validate().is_err());
        let mut p = small();
        p.training_symbols = 10;
        assert!(p.validate().is_err());
        let mut p = small();
        p.zero_pad_factor = 3;
        assert!(p.validate().is_err());
    }

    #[test]
    fn net_rate_near_200g() {
        let rate = OfdmParams::default().net_bit_rate(4.0);
        assert!((rate / 200e9 - 1.0).abs() < 0.05, "{rate}");
    }

    #[test]
    fn single_subcarrier_has_constant_modulus() {
        let p = small();
        let mut g = SymbolGrid::new(p.roles());
        let mut row = vec![Complex64::new(0.0, 0.0); p.fft_size];
        let col = p.active_columns()[3];
        row[col] = Complex64::new(1.0, 0.0);
        g.push_row(SymbolKind::Data, &row).unwrap();
        let w = ofdm_modulate(&DualPolGrid { x: g.clone(), y: g }, &p).unwrap();
        let m = 1.0 / (p.fft_size as f64).sqrt();
        assert!(w.x().iter().all(|v| (v.norm() - m).abs() < 1e-14));
    }

    #[test]
    fn zero_grid_gives_zero_waveform() {
        let p = small();
        let mut g = SymbolGrid::new(p.roles());
        g.push_row(SymbolKind::Data, &vec![Complex64::new(0.0, 0.0); p.fft_size]).unwrap();
        let w = ofdm_modulate(&DualPolGrid { x: g.clone(), y: g }, &p).unwrap();
        assert_eq!(w.peak_power(), 0.0);
    }

    #[test]
    fn round_trip_and_parseval() {
        for pad in [1, 2] {
            let p = OfdmParams {
                zero_pad_factor: pad,
                ..small()
            };
            let g = DualPolGrid {
                x: random_grid(&p, 12, 1),
                y: random_grid(&p, 12, 2),
            };
            let w = ofdm_modulate(&g, &p).unwrap();
            assert_eq!(w.len(), 12 * p.symbol_len());
            let back = ofdm_demodulate(&w, &p).unwrap();
            for (a, b) in g.x.rows().zip(back.x.rows()) {
                for (u, v) in a.iter().zip(b) {
                    assert!((u - v).norm() < 1e-12);
                }
            }
            assert_eq!(back.x.kinds(), g.x.kinds());
            // nulls exactly zero
            for c in g.x.bins_with(SubcarrierRole::Null) {
                assert!(back.y.rows().all(|r| r[c] == Complex64::new(0.0, 0.0)));
            }
            // Parseval without the prefix
            let cp = p.cp_samples() * pad;
            let td: f64 = w
                .x()
                .chunks(p.symbol_len())
                .map(|s| s[cp..].iter().map(|v| v.norm_sqr()).sum::<f64>())
                .sum();
            assert!((td - g.x.energy()).abs() < 1e-10 * g.x.energy());
        }
    }

    #[test]
    fn cyclic_delay_within_prefix_is_a_linear_phase() {
        let p = small();
        let cp = p.cp_samples();
        let g = DualPolGrid {
            x: random_grid(&p, 4, 3),
            y: random_grid(&p, 4, 4),
        };
        let w = ofdm_modulate(&g, &p).unwrap();
        for d in [1, cp / 2, cp] {
            let (mut x, mut y, fs) = w.clone().into_parts();
            x.rotate_right(d);
            y.rotate_right(d);
            let back = ofdm_demodulate(&DualPolWaveform::new(x, y, fs).unwrap(), &p).unwrap();
            let half = (p.fft_size / 2) as f64;
            for (a, b) in g.x.rows().zip(back.x.rows()) {
                for (c, (u, v)) in a.iter().zip(b).enumerate() {
                    let bin = c as f64 - half;
                    let ph = -2.0 * std::f64::consts::PI * bin * d as f64 / p.fft_size as f64;
                    assert!((u * Complex64::from_polar(1.0, ph) - v).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn demodulate_rejects_wrong_length() {
        let p = small();
        let z = vec![Complex64::new(0.0, 0.0); p.symbol_len() + 1];
        let w = DualPolWaveform::new(z.clone(), z, p.sample_rate).unwrap();
        assert!(ofdm_demodulate(&w, &p).is_err());
    }

    #[test]
    fn pilots_and_training_insertion() {
        let p = OfdmParams {
            training_period: 100,
            ..small()
        };
        let mut data = SymbolGrid::new(p.roles());
        let mut rng = RandomSource::new(9);
        let n_data_bins = data.n_data();
        for _ in 0..196 {
            let v = gaussian_noise(&mut rng, n_data_bins, 0.5).unwrap();
            data.push_data_row(SymbolKind::Data, &v).unwrap();
        }
        let pilots = default_pilot_values(p.n_pilots);
        let training = training_grid(&p);
        let framed = insert_pilots_and_training(&data, &p, &pilots, &training).unwrap();
        assert_eq!(framed.n_rows(), 200);
        // each 100-symbol frame holds exactly two training symbols
        for frame in 0..2 {
            let n_train = (frame * 100..(frame + 1) * 100)
                .filter(|&i| framed.kind(i) == SymbolKind::Training)
                .count();
            assert_eq!(n_train, 2);
        }
        for i in 0..framed.n_rows() {
            assert_eq!(framed.kind(i), p.symbol_kind(i));
        }
        let data_rows = framed.rows_of(SymbolKind::Data);
        for (k, &i) in data_rows.iter().enumerate() {
            assert_eq!(framed.data_values(i), data.data_values(k));
            for (&c, &v) in p.pilot_columns().iter().zip(&pilots) {
                assert_eq!(framed.row(i)[c], v);
            }
        }
    }

    #[test]
    fn insertion_rejects_collisions() {
        let p = small();
        let mut data = SymbolGrid::new(p.roles());
        let mut row = vec![Complex64::new(0.0, 0.0); p.fft_size];
        row[p.pilot_columns()[0]] = Complex64::new(1.0, 0.0);
        data.push_row(SymbolKind::Data, &row).unwrap();
        let err = insert_pilots_and_training(&data, &p, &default_pilot_values(4), &training_grid(&p));
        assert!(matches!(err, Err(Error::LayoutCollision { .. })));
        let empty = SymbolGrid::new(p.roles());
        assert!(insert_pilots_and_training(&empty, &p, &default_pilot_values(3), &training_grid(&p)).is_err());
    }

    #[test]
    fn layout_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("layout.txt");
        small().write_layout(&path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().count(), 65);
        assert_eq!(text.lines().filter(|l| l.ends_with(",pilot")).count(), 4);
    }
}
