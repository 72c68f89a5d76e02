use crate::grid::{DualPolGrid, SymbolGrid};

/// Phase-conjugated twin waves: x carries the grid, y its element-wise conjugate.
pub fn pctw_encode(grid: &SymbolGrid) -> DualPolGrid {
    DualPolGrid {
        x: grid.clone(),
        y: grid.conj(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::lpc::coherent_superpose;
    use crate::grid::SymbolKind;
    use num_complex::Complex64;

    #[test]
    fn conjugate_twin() {
        let mut g = SymbolGrid::all_data(3);
        g.push_row(
            SymbolKind::Data,
            &[
                Complex64::new(1.0, 3.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(3.0, 0.0),
            ],
        )
        .unwrap();
        let t = pctw_encode(&g);
        assert_eq!(t.y.row(0)[0], Complex64::new(1.0, -3.0));
        // all-real entries are conjugation fixed points
        assert_eq!(t.x.row(0)[1..], t.y.row(0)[1..]);
        for (bx, by) in t.x.row(0).iter().zip(t.y.row(0)) {
            assert_eq!(coherent_superpose(*bx, *by).0, *bx);
        }
    }
}
