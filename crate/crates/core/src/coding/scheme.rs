use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::constellation::{ml_detect, qam16, qpsk, Constellation};
use super::lpc::{coherent_superpose, lpc_alphabet, lpc_encode, lut_decode, LPC_RATIO};
use super::pcsc::{pcsc_decode, pcsc_encode};
use crate::error::{Error, Result};

/// The four compared transmission schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeKind {
    #[serde(rename = "lpc-pcts")]
    LpcPcts,
    #[serde(rename = "pcsc")]
    Pcsc,
    #[serde(rename = "pctw-16qam")]
    Pctw16Qam,
    #[serde(rename = "pdm-4qam")]
    Pdm4Qam,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::LpcPcts,
        SchemeKind::Pcsc,
        SchemeKind::Pctw16Qam,
        SchemeKind::Pdm4Qam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::LpcPcts => "lpc-pcts",
            SchemeKind::Pcsc => "pcsc",
            SchemeKind::Pctw16Qam => "pctw-16qam",
            SchemeKind::Pdm4Qam => "pdm-4qam",
        }
    }

    pub fn codec(self) -> Box<dyn CodingScheme> {
        match self {
            SchemeKind::LpcPcts => Box::new(LpcPcts::new()),
            SchemeKind::Pcsc => Box::new(Pcsc::new()),
            SchemeKind::Pctw16Qam => Box::new(Pctw16Qam::new()),
            SchemeKind::Pdm4Qam => Box::new(Pdm4Qam::new()),
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param(format!("unknown scheme `{s}`")))
    }
}

/// Data-subcarrier symbols of one OFDM symbol on both polarizations.
#[derive(Debug, Clone, PartialEq)]
pub struct PolSymbols {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

/// Common interface of the transmission schemes.
///
/// Every scheme carries 4 bits per data subcarrier across the polarization
/// pair and emits unit mean-power symbols on each polarization.
pub trait CodingScheme: Send + Sync {
    fn kind(&self) -> SchemeKind;

    /// Whether y carries the conjugate of x (pilots and training follow suit).
    fn conjugate_twin(&self) -> bool;

    fn bits_per_ofdm_symbol(&self, n_data: usize) -> usize {
        4 * n_data
    }

    /// Map `4 * n_data` bits onto the data subcarriers of both polarizations.
    fn encode(&self, bits: &[u8]) -> Result<PolSymbols>;

    /// Unit-power symbols the detector decides on, in bit order.
    fn decision_symbols(&self, x: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>>;

    /// Unit-power alphabet used by the detector.
    fn alphabet(&self) -> &Constellation;

    /// Recover the payload bits from equalized data-subcarrier values.
    fn decode(&self, x: &[Complex64], y: &[Complex64]) -> Result<Vec<u8>> {
        let alphabet = self.alphabet();
        let decisions = self.decision_symbols(x, y)?;
        let mut bits = Vec::with_capacity(decisions.len() * alphabet.bits_per_symbol() as usize);
        for r in decisions {
            alphabet.push_label_bits(ml_detect(r, alphabet), &mut bits);
        }
        Ok(bits)
    }
}

fn check_bits(bits: &[u8], multiple: usize) -> Result<()> {
    if bits.len() % multiple != 0 {
        return Err(Error::param(format!(
            "bit count {} is not a multiple of {multiple}",
            bits.len()
        )));
    }
    Ok(())
}

fn check_pols(x: &[Complex64], y: &[Complex64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(())
}

fn superpose_all(x: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
    check_pols(x, y)?;
    Ok(x.iter().zip(y).map(|(&bx, &by)| coherent_superpose(bx, by).0).collect())
}

/// Linear polarization coded phase-conjugated twin signals.
#[derive(Debug, Clone)]
pub struct LpcPcts {
    alphabet: Constellation,
    scale: f64,
}

impl LpcPcts {
    pub fn new() -> Self {
        let raw = lpc_alphabet(LPC_RATIO).expect("valid ratio");
        let scale = 1.0 / raw.mean_power().sqrt();
        Self {
            alphabet: raw.scaled(scale),
            scale,
        }
    }
}

impl Default for LpcPcts {
    fn default() -> Self {
        Self::new()
    }
}

impl CodingScheme for LpcPcts {
    fn kind(&self) -> SchemeKind {
        SchemeKind::LpcPcts
    }

    fn conjugate_twin(&self) -> bool {
        true
    }

    fn encode(&self, bits: &[u8]) -> Result<PolSymbols> {
        check_bits(bits, 4)?;
        let a = super::constellation::qpsk_map(bits)?;
        let (sx, sy) = lpc_encode(&a)?;
        Ok(PolSymbols {
            x: sx.into_iter().map(|v| v * self.scale).collect(),
            y: sy.into_iter().map(|v| v * self.scale).collect(),
        })
    }

    fn decision_symbols(&self, x: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
        superpose_all(x, y)
    }

    fn alphabet(&self) -> &Constellation {
        &self.alphabet
    }

    /// Minimum-distance codeword, then the look-up table back to the QPSK pair.
    fn decode(&self, x: &[Complex64], y: &[Complex64]) -> Result<Vec<u8>> {
        let q = qpsk();
        let mut bits = Vec::with_capacity(4 * x.len());
        for r in self.decision_symbols(x, y)? {
            let (a, b) = lut_decode(ml_detect(r, &self.alphabet))?;
            for s in [a, b] {
                q.push_label_bits(ml_detect(s, &q), &mut bits);
            }
        }
        Ok(bits)
    }
}

/// Gray 16-QAM on x with its conjugate twin on y.
#[derive(Debug, Clone)]
pub struct Pctw16Qam {
    alphabet: Constellation,
}

impl Pctw16Qam {
    pub fn new() -> Self {
        Self {
            alphabet: qam16().normalized(),
        }
    }
}

impl Default for Pctw16Qam {
    fn default() -> Self {
        Self::new()
    }
}

impl CodingScheme for Pctw16Qam {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Pctw16Qam
    }

    fn conjugate_twin(&self) -> bool {
        true
    }

    fn encode(&self, bits: &[u8]) -> Result<PolSymbols> {
        check_bits(bits, 4)?;
        let x = self.alphabet.map_bits(bits)?;
        let y = x.iter().map(|v| v.conj()).collect();
        Ok(PolSymbols { x, y })
    }

    fn decision_symbols(&self, x: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
        superpose_all(x, y)
    }

    fn alphabet(&self) -> &Constellation {
        &self.alphabet
    }
}

/// QPSK with adjacent-subcarrier conjugate pair coding, independently per polarization.
#[derive(Debug, Clone)]
pub struct Pcsc {
    alphabet: Constellation,
}

impl Pcsc {
    pub fn new() -> Self {
        Self {
            alphabet: qpsk().normalized(),
        }
    }
}

impl Default for Pcsc {
    fn default() -> Self {
        Self::new()
    }
}

impl CodingScheme for Pcsc {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Pcsc
    }

    fn conjugate_twin(&self) -> bool {
        false
    }

    fn encode(&self, bits: &[u8]) -> Result<PolSymbols> {
        check_bits(bits, 8)?;
        let (bx, by) = bits.split_at(bits.len() / 2);
        Ok(PolSymbols {
            x: pcsc_encode(&self.alphabet.map_bits(bx)?)?,
            y: pcsc_encode(&self.alphabet.map_bits(by)?)?,
        })
    }

    fn decision_symbols(&self, x: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
        check_pols(x, y)?;
        let mut out = pcsc_decode(x)?;
        out.extend(pcsc_decode(y)?);
        Ok(out)
    }

    fn alphabet(&self) -> &Constellation {
        &self.alphabet
    }
}

/// Plain polarization-multiplexed QPSK.
#[derive(Debug, Clone)]
pub struct Pdm4Qam {
    alphabet: Constellation,
}

impl Pdm4Qam {
    pub fn new() -> Self {
        Self {
            alphabet: qpsk().normalized(),
        }
    }
}

impl Default for Pdm4Qam {
    fn default() -> Self {
        Self::new()
    }
}

impl CodingScheme for Pdm4Qam {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Pdm4Qam
    }

    fn conjugate_twin(&self) -> bool {
        false
    }

    fn encode(&self, bits: &[u8]) -> Result<PolSymbols> {
        check_bits(bits, 4)?;
        let (bx, by) = bits.split_at(bits.len() / 2);
        Ok(PolSymbols {
            x: self.alphabet.map_bits(bx)?,
            y: self.alphabet.map_bits(by)?,
        })
    }

    fn decision_symbols(&self, x: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
        check_pols(x, y)?;
        Ok(x.iter().chain(y).copied().collect())
    }

    fn alphabet(&self) -> &Constellation {
        &self.alphabet
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::prbs_generate;

    #[test]
    fn names_round_trip() {
        for k in SchemeKind::ALL {
            assert_eq!(k.name().parse::<SchemeKind>().unwrap(), k);
            assert_eq!(k.codec().kind(), k);
        }
        assert!("qam64".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn every_scheme_is_a_bijection_over_one_symbol() {
        let n_data = 3300;
        for k in SchemeKind::ALL {
            let codec = k.codec();
            let bits = prbs_generate(42, codec.bits_per_ofdm_symbol(n_data));
            let tx = codec.encode(bits.bits()).unwrap();
            assert_eq!(tx.x.len(), n_data);
            assert_eq!(tx.y.len(), n_data);
            assert_eq!(codec.decode(&tx.x, &tx.y).unwrap(), bits.bits(), "{k}");
        }
    }

    #[test]
    fn exhaustive_codeword_round_trip() {
        // all 16 4-bit patterns on two subcarriers (PCSC pairs need 8 bits per polarization)
        for k in SchemeKind::ALL {
            let codec = k.codec();
            for pattern in 0u32..256 {
                let bits: Vec<u8> = (0..8).rev().map(|i| ((pattern >> i) & 1) as u8).collect();
                let tx = codec.encode(&bits).unwrap();
                assert_eq!(codec.decode(&tx.x, &tx.y).unwrap(), bits, "{k} {pattern:08b}");
            }
        }
    }

    #[test]
    fn twins_are_conjugate_and_independent_pols_are_not() {
        let bits = prbs_generate(5, 4 * 64);
        for k in SchemeKind::ALL {
            let codec = k.codec();
            let tx = codec.encode(bits.bits()).unwrap();
            let twin = tx.x.iter().zip(&tx.y).all(|(a, b)| (a.conj() - b).norm() < 1e-15);
            assert_eq!(twin, codec.conjugate_twin(), "{k}");
        }
    }

    #[test]
    fn alphabets_have_unit_power() {
        for k in SchemeKind::ALL {
            let p = k.codec().alphabet().mean_power();
            assert!((p - 1.0).abs() < 1e-12, "{k}: {p}");
        }
        // the transmitted LPC codewords live on the same unit-power grid
        let lpc = LpcPcts::new();
        let mut all = Vec::new();
        for pattern in 0u8..16 {
            let bits: Vec<u8> = (0..4).rev().map(|i| (pattern >> i) & 1).collect();
            all.push(lpc.encode(&bits).unwrap().x[0]);
        }
        let p = all.iter().map(|v| v.norm_sqr()).sum::<f64>() / 16.0;
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_bit_counts() {
        assert!(LpcPcts::new().encode(&[0, 1, 0]).is_err());
        assert!(Pcsc::new().encode(&[0, 1, 0, 1]).is_err());
        assert!(Pdm4Qam::new().decode(&[Complex64::new(1.0, 0.0)], &[]).is_err());
    }
}
