use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A labeled symbol alphabet.
///
/// `labels[i]` is the bit label of `points[i]`; labels are read MSB first,
/// so label `0b01` of a 2-bit alphabet is the bit sequence `0, 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    labels: Vec<u32>,
    index_of_label: Vec<usize>,
    bits_per_symbol: u32,
}

impl Constellation {
    pub fn new(points: Vec<Complex64>, labels: Vec<u32>) -> Result<Self> {
        let n = points.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::param(format!("alphabet size {n} is not a power of two")));
        }
        if labels.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: labels.len(),
            });
        }
        let mut index_of_label = vec![usize::MAX; n];
        for (i, &l) in labels.iter().enumerate() {
            let slot = index_of_label
                .get_mut(l as usize)
                .ok_or_else(|| Error::param(format!("label {l} out of range")))?;
            if *slot != usize::MAX {
                return Err(Error::param(format!("label {l} used twice")));
            }
            *slot = i;
        }
        Ok(Self {
            points,
            labels,
            index_of_label,
            bits_per_symbol: n.trailing_zeros(),
        })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    pub fn label(&self, index: usize) -> u32 {
        self.labels[index]
    }

    pub fn index_of_label(&self, label: u32) -> Option<usize> {
        self.index_of_label.get(label as usize).copied()
    }

    pub fn point_for_label(&self, label: u32) -> Option<Complex64> {
        self.index_of_label(label).map(|i| self.points[i])
    }

    pub fn mean_power(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    /// Smallest distance between any two distinct points.
    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.min((self.points[i] - self.points[j]).norm());
            }
        }
        best
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| p * s).collect(),
            ..self.clone()
        }
    }

    /// The same alphabet rescaled to unit mean power.
    pub fn normalized(&self) -> Self {
        self.scaled(1.0 / self.mean_power().sqrt())
    }

    /// Map bits (MSB first, `bits_per_symbol` per symbol) to points.
    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let k = self.bits_per_symbol as usize;
        if bits.len() % k != 0 {
            return Err(Error::param(format!(
                "bit count {} is not a multiple of {k}",
                bits.len()
            )));
        }
        bits.chunks(k)
            .map(|chunk| {
                let label = bits_to_label(chunk)?;
                Ok(self.points[self.index_of_label[label as usize]])
            })
            .collect()
    }

    /// Append the label bits of `index` to `out`.
    pub fn push_label_bits(&self, index: usize, out: &mut Vec<u8>) {
        label_to_bits(self.labels[index], self.bits_per_symbol, out);
    }

    /// Plain-text reference table: `index,label,re,im` per line, label in binary.
    pub fn write_table(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# index,label,re,im")?;
        for (i, (p, l)) in self.points.iter().zip(&self.labels).enumerate() {
            writeln!(
                w,
                "{i},{:0width$b},{},{}",
                l,
                p.re,
                p.im,
                width = self.bits_per_symbol as usize
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn bits_to_label(bits: &[u8]) -> Result<u32> {
    bits.iter().try_fold(0u32, |acc, &b| match b {
        0 | 1 => Ok((acc << 1) | b as u32),
        _ => Err(Error::param(format!("bit value {b} is not 0 or 1"))),
    })
}

pub(crate) fn label_to_bits(label: u32, n: u32, out: &mut Vec<u8>) {
    for i in (0..n).rev() {
        out.push(((label >> i) & 1) as u8);
    }
}

/// Index of the alphabet point nearest to `r`; ties go to the lowest index.
pub fn ml_detect(r: Complex64, alphabet: &Constellation) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in alphabet.points().iter().enumerate() {
        let d = (r - p).norm_sqr();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Gray QPSK before normalization: `00 -> +1+i, 01 -> -1+i, 11 -> -1-i, 10 -> +1-i`.
pub fn qpsk() -> Constellation {
    Constellation::new(
        vec![c(1.0, 1.0), c(-1.0, 1.0), c(-1.0, -1.0), c(1.0, -1.0)],
        vec![0b00, 0b01, 0b11, 0b10],
    )
    .expect("static table")
}

/// Gray square 16-QAM on `{±1, ±3}^2` before normalization.
///
/// The first two label bits select the in-phase level
/// (`00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3`), the last two the quadrature
/// level (`00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3`).
pub fn qam16() -> Constellation {
    const I_LEVELS: [(u32, f64); 4] = [(0b00, -3.0), (0b01, -1.0), (0b11, 1.0), (0b10, 3.0)];
    const Q_LEVELS: [(u32, f64); 4] = [(0b00, 3.0), (0b01, 1.0), (0b11, -1.0), (0b10, -3.0)];
    let mut points = Vec::with_capacity(16);
    let mut labels = Vec::with_capacity(16);
    for (ql, q) in Q_LEVELS {
        for (il, i) in I_LEVELS {
            points.push(c(i, q));
            labels.push((il << 2) | ql);
        }
    }
    Constellation::new(points, labels).expect("static table")
}

/// Map bit pairs to unnormalized Gray QPSK symbols.
pub fn qpsk_map(bits: &[u8]) -> Result<Vec<Complex64>> {
    if bits.len() % 2 != 0 {
        return Err(Error::param(format!("QPSK needs an even bit count, got {}", bits.len())));
    }
    qpsk().map_bits(bits)
}

/// Map 4-bit groups to unnormalized Gray 16-QAM symbols.
pub fn qam16_map(bits: &[u8]) -> Result<Vec<Complex64>> {
    if bits.len() % 4 != 0 {
        return Err(Error::param(format!(
            "16-QAM needs a multiple of 4 bits, got {}",
            bits.len()
        )));
    }
    qam16().map_bits(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label_bits(l: u32, n: u32) -> Vec<u8> {
        let mut v = Vec::new();
        label_to_bits(l, n, &mut v);
        v
    }

    #[test]
    fn qpsk_table() {
        assert_eq!(qpsk_map(&[0, 0]).unwrap(), vec![c(1.0, 1.0)]);
        assert_eq!(qpsk_map(&[1, 1]).unwrap(), vec![c(-1.0, -1.0)]);
        assert_eq!(qpsk_map(&[0, 1]).unwrap(), vec![c(-1.0, 1.0)]);
        assert_eq!(qpsk_map(&[1, 0]).unwrap(), vec![c(1.0, -1.0)]);
        assert_eq!(
            qpsk_map(&[0, 0, 1, 1]).unwrap(),
            vec![c(1.0, 1.0), c(-1.0, -1.0)]
        );
        assert!(qpsk_map(&[0, 1, 1]).is_err());
        assert!(qpsk_map(&[0, 2]).is_err());
    }

    #[test]
    fn qam16_table_and_power() {
        assert_eq!(qam16_map(&[0, 0, 0, 0]).unwrap(), vec![c(-3.0, 3.0)]);
        assert!(qam16_map(&[0, 0, 0]).is_err());
        // enumeration: mean of i^2 + q^2 over {±1,±3}^2
        let mut total = 0.0;
        for i in [-3.0f64, -1.0, 1.0, 3.0] {
            for q in [-3.0f64, -1.0, 1.0, 3.0] {
                total += i * i + q * q;
            }
        }
        assert!((total / 16.0 - 10.0).abs() < 1e-15);
        assert!((qam16().mean_power() - 10.0).abs() < 1e-12);
    }

    fn assert_gray(alphabet: &Constellation, spacing: f64) {
        let mut pairs = 0;
        for i in 0..alphabet.len() {
            for j in i + 1..alphabet.len() {
                let d = (alphabet.point(i) - alphabet.point(j)).norm();
                if (d - spacing).abs() < 1e-9 {
                    pairs += 1;
                    let diff = (alphabet.label(i) ^ alphabet.label(j)).count_ones();
                    assert_eq!(diff, 1, "points {i} and {j} differ in {diff} bits");
                }
            }
        }
        assert!(pairs > 0);
    }

    #[test]
    fn gray_adjacency() {
        assert_gray(&qpsk(), 2.0);
        // 24 horizontal/vertical neighbour pairs on a 4x4 grid
        assert_gray(&qam16(), 2.0);
    }

    #[test]
    fn ml_detect_ties_and_exact() {
        let a = qpsk();
        for i in 0..4 {
            assert_eq!(ml_detect(a.point(i), &a), i);
        }
        // equidistant from +1+i (index 0) and -1+i (index 1)
        assert_eq!(ml_detect(c(0.0, 1.0), &a), 0);
        assert_eq!(ml_detect(c(-0.0001, 1.0), &a), 1);
    }

    #[test]
    fn labels_round_trip_through_bits() {
        let a = qam16();
        for i in 0..16 {
            let bits = label_bits(a.label(i), 4);
            assert_eq!(a.map_bits(&bits).unwrap(), vec![a.point(i)]);
        }
    }

    #[test]
    fn rejects_malformed_alphabets() {
        assert!(Constellation::new(vec![c(0.0, 0.0); 3], vec![0, 1, 2]).is_err());
        assert!(Constellation::new(vec![c(0.0, 0.0); 2], vec![0, 0]).is_err());
        assert!(Constellation::new(vec![c(0.0, 0.0); 2], vec![0, 2]).is_err());
    }

    #[test]
    fn table_export() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("qpsk.txt");
        qpsk().write_table(&p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.contains("2,11,-1,-1"));
        assert_eq!(text.lines().count(), 5);
    }
}
