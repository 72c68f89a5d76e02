//! Phase-conjugated subcarrier coding within one polarization.
//!
//! Adjacent data subcarriers carry the unitary combination
//! `S(2k-1) = (A(2k-1) + A(2k))/√2`, `S(2k) = (A*(2k-1) - A*(2k))/√2`,
//! and the receiver undoes it with
//! `Ã(2k-1) = (R(2k-1) + R*(2k))/√2`, `Ã(2k) = (R(2k-1) - R*(2k))/√2`.
//! The two polarizations carry independent data.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

fn check_even(n: usize) -> Result<()> {
    if n % 2 != 0 {
        return Err(Error::param(format!(
            "subcarrier pair coding needs an even symbol count, got {n}"
        )));
    }
    Ok(())
}

pub fn pcsc_encode(symbols: &[Complex64]) -> Result<Vec<Complex64>> {
    check_even(symbols.len())?;
    let mut out = Vec::with_capacity(symbols.len());
    for p in symbols.chunks_exact(2) {
        out.push((p[0] + p[1]) * FRAC_1_SQRT_2);
        out.push((p[0].conj() - p[1].conj()) * FRAC_1_SQRT_2);
    }
    Ok(out)
}

pub fn pcsc_decode(received: &[Complex64]) -> Result<Vec<Complex64>> {
    check_even(received.len())?;
    let mut out = Vec::with_capacity(received.len());
    for p in received.chunks_exact(2) {
        out.push((p[0] + p[1].conj()) * FRAC_1_SQRT_2);
        out.push((p[0] - p[1].conj()) * FRAC_1_SQRT_2);
    }
    Ok(out)
}
