//! Frequency-domain OFDM payload: one row per OFDM symbol, one column per subcarrier.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubcarrierRole {
    Data,
    Pilot,
    Null,
}

impl SubcarrierRole {
    pub fn name(self) -> &'static str {
        match self {
            SubcarrierRole::Data => "data",
            SubcarrierRole::Pilot => "pilot",
            SubcarrierRole::Null => "null",
        }
    }

    pub fn is_active(self) -> bool {
        !matches!(self, SubcarrierRole::Null)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Data,
    Training,
}

/// Complex subcarrier values of a sequence of OFDM symbols for one polarization.
///
/// Null subcarriers hold exactly zero in every row; the role map is shared by
/// all rows, so pilot positions are identical across symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    roles: Vec<SubcarrierRole>,
    kinds: Vec<SymbolKind>,
    symbols: Vec<Complex64>,
}

impl SymbolGrid {
    pub fn new(roles: Vec<SubcarrierRole>) -> Self {
        Self {
            roles,
            kinds: Vec::new(),
            symbols: Vec::new(),
        }
    }

    /// A grid whose every subcarrier carries data.
    pub fn all_data(width: usize) -> Self {
        Self::new(vec![SubcarrierRole::Data; width])
    }

    pub fn width(&self) -> usize {
        self.roles.len()
    }

    pub fn n_rows(&self) -> usize {
        self.kinds.len()
    }

    pub fn roles(&self) -> &[SubcarrierRole] {
        &self.roles
    }

    pub fn kinds(&self) -> &[SymbolKind] {
        &self.kinds
    }

    pub fn n_data(&self) -> usize {
        self.bins_with(SubcarrierRole::Data).count()
    }

    pub fn bins_with(&self, role: SubcarrierRole) -> impl Iterator<Item = usize> + '_ {
        self.roles
            .iter()
            .enumerate()
            .filter(move |(_, r)| **r == role)
            .map(|(i, _)| i)
    }

    pub fn data_bins(&self) -> Vec<usize> {
        self.bins_with(SubcarrierRole::Data).collect()
    }

    pub fn pilot_bins(&self) -> Vec<usize> {
        self.bins_with(SubcarrierRole::Pilot).collect()
    }

    /// Append a full row. Values on null subcarriers must be exactly zero.
    pub fn push_row(&mut self, kind: SymbolKind, row: &[Complex64]) -> Result<()> {
        if row.len() != self.width() {
            return Err(Error::LengthMismatch {
                expected: self.width(),
                actual: row.len(),
            });
        }
        for (bin, (v, role)) in row.iter().zip(&self.roles).enumerate() {
            if *role == SubcarrierRole::Null && *v != Complex64::new(0.0, 0.0) {
                return Err(Error::param(format!("null subcarrier {bin} carries {v}")));
            }
        }
        self.kinds.push(kind);
        self.symbols.extend_from_slice(row);
        Ok(())
    }

    /// Append a row from data-subcarrier values only; pilots are left at zero.
    pub fn push_data_row(&mut self, kind: SymbolKind, data: &[Complex64]) -> Result<()> {
        let bins = self.data_bins();
        if data.len() != bins.len() {
            return Err(Error::LengthMismatch {
                expected: bins.len(),
                actual: data.len(),
            });
        }
        let mut row = vec![Complex64::new(0.0, 0.0); self.width()];
        for (&b, &v) in bins.iter().zip(data) {
            row[b] = v;
        }
        self.kinds.push(kind);
        self.symbols.extend_from_slice(&row);
        Ok(())
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let w = self.width();
        &self.symbols[i * w..(i + 1) * w]
    }

    /// Mutable row access. Callers must keep null subcarriers at zero.
    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        let w = self.width();
        &mut self.symbols[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.symbols.chunks(self.width().max(1))
    }

    pub fn kind(&self, i: usize) -> SymbolKind {
        self.kinds[i]
    }

    /// Values on the data subcarriers of row `i`, in bin order.
    pub fn data_values(&self, i: usize) -> Vec<Complex64> {
        let row = self.row(i);
        self.bins_with(SubcarrierRole::Data).map(|b| row[b]).collect()
    }

    /// Indices of rows of the given kind.
    pub fn rows_of(&self, kind: SymbolKind) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.kinds[i] == kind).collect()
    }

    /// A new grid with the selected rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut out = Self::new(self.roles.clone());
        for &i in rows {
            out.kinds.push(self.kinds[i]);
            out.symbols.extend_from_slice(self.row(i));
        }
        out
    }

    /// Sum of `|v|^2` over every cell.
    pub fn energy(&self) -> f64 {
        self.symbols.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn conj(&self) -> Self {
        Self {
            roles: self.roles.clone(),
            kinds: self.kinds.clone(),
            symbols: self.symbols.iter().map(|v| v.conj()).collect(),
        }
    }

    pub(crate) fn from_parts(
        roles: Vec<SubcarrierRole>,
        kinds: Vec<SymbolKind>,
        symbols: Vec<Complex64>,
    ) -> Result<Self> {
        if symbols.len() != roles.len() * kinds.len() {
            return Err(Error::LengthMismatch {
                expected: roles.len() * kinds.len(),
                actual: symbols.len(),
            });
        }
        Ok(Self {
            roles,
            kinds,
            symbols,
        })
    }

    /// Same shape and role map as `other`.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.roles == other.roles && self.n_rows() == other.n_rows()
    }
}

/// One grid per polarization.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPolGrid {
    pub x: SymbolGrid,
    pub y: SymbolGrid,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn null_cells_must_be_zero() {
        let mut g = SymbolGrid::new(vec![
            SubcarrierRole::Null,
            SubcarrierRole::Data,
            SubcarrierRole::Pilot,
        ]);
        assert!(g.push_row(SymbolKind::Data, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(g.push_row(SymbolKind::Data, &[c(0.0, 0.0), c(1.0, 0.0)]).is_err());
        g.push_row(SymbolKind::Data, &[c(0.0, 0.0), c(2.0, 1.0), c(1.0, 1.0)]).unwrap();
        g.push_data_row(SymbolKind::Training, &[c(3.0, 0.0)]).unwrap();
        assert_eq!(g.n_rows(), 2);
        assert_eq!(g.data_values(0), vec![c(2.0, 1.0)]);
        assert_eq!(g.row(1), &[c(0.0, 0.0), c(3.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(g.rows_of(SymbolKind::Training), vec![1]);
        assert_eq!(g.pilot_bins(), vec![2]);
    }
}
