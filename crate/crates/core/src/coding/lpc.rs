//! Linear polarization coding: two QPSK symbols folded into one 16-point codeword.
//!
//! A pair `(a, b)` of Gray QPSK symbols becomes `a + b/2`; the x polarization
//! carries the codeword and the y polarization its complex conjugate. With
//! the half-amplitude ratio the 16 codewords form the uniform grid
//! `{±0.5, ±1.5}^2`. The codeword label is the 2-bit label of `a` followed by
//! the 2-bit label of `b`, so the receiver's look-up table is a bit split.

use num_complex::Complex64;

use super::constellation::{qpsk, Constellation};
use crate::error::{Error, Result};

/// Amplitude ratio of the second QPSK symbol.
pub const LPC_RATIO: f64 = 0.5;

/// `a + ratio * b` for every pair of QPSK symbols, indexed by `label(a) << 2 | label(b)`.
pub fn lpc_alphabet(ratio: f64) -> Result<Constellation> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::param(format!("amplitude ratio must lie in (0, 1), got {ratio}")));
    }
    let q = qpsk();
    let mut points = Vec::with_capacity(16);
    let mut labels = Vec::with_capacity(16);
    for label in 0..16u32 {
        let a = q.point_for_label(label >> 2).expect("2-bit label");
        let b = q.point_for_label(label & 0b11).expect("2-bit label");
        points.push(a + b * ratio);
        labels.push(label);
    }
    Constellation::new(points, labels)
}

fn is_qpsk(v: Complex64) -> bool {
    (v.re.abs() - 1.0).abs() < 1e-12 && (v.im.abs() - 1.0).abs() < 1e-12
}

/// Encode unnormalized QPSK symbols pairwise.
///
/// Returns `(S_x, S_y)` with `S_x[k] = A[2k] + A[2k+1]/2` and `S_y = conj(S_x)`.
pub fn lpc_encode(qpsk_symbols: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if qpsk_symbols.len() % 2 != 0 {
        return Err(Error::param(format!(
            "linear polarization coding needs an even symbol count, got {}",
            qpsk_symbols.len()
        )));
    }
    if let Some(bad) = qpsk_symbols.iter().find(|v| !is_qpsk(**v)) {
        return Err(Error::InvalidSymbol(format!("{bad} is not a ±1±i QPSK symbol")));
    }
    let sx: Vec<Complex64> = qpsk_symbols
        .chunks_exact(2)
        .map(|p| p[0] + p[1] * LPC_RATIO)
        .collect();
    let sy = sx.iter().map(|v| v.conj()).collect();
    Ok((sx, sy))
}

/// Receiver combining of a conjugate twin pair: `((Bx + By*)/2, (Bx* + By)/2)`.
pub fn coherent_superpose(bx: Complex64, by: Complex64) -> (Complex64, Complex64) {
    ((bx + by.conj()) * 0.5, (bx.conj() + by) * 0.5)
}

/// Look-up table from codeword index to the unnormalized QPSK pair `(A(2k-1), A(2k))`.
pub fn lut_decode(index: usize) -> Result<(Complex64, Complex64)> {
    if index >= 16 {
        return Err(Error::IndexOutOfRange { index, size: 16 });
    }
    let q = qpsk();
    let label = index as u32;
    Ok((
        q.point_for_label(label >> 2).expect("2-bit label"),
        q.point_for_label(label & 0b11).expect("2-bit label"),
    ))
}
