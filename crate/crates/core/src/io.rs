//! Machine-readable output: observables CSV, state snapshots, and
//! operator/symbol exports.
//!
//! Numbers are written with 17 significant digits, `.` decimal separator
//! and no locale dependence, so identical runs produce byte-identical
//! files.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{McmfState, MeanFieldState, MixedDensity, Observables};
use crate::weyl::{Basis, Grid1D, GridSymbol, OperatorMatrix};

/// 17 significant digits, scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Header for the observables CSV with `n` populations.
pub fn observables_header(n: usize) -> String {
    let mut cols = vec!["t".to_string(), "trace".to_string(), "energy".to_string()];
    for i in 0..n {
        cols.push(format!("pop_{}", i + 1));
    }
    for c in ["mean_k", "mean_x", "var_k", "var_x"] {
        cols.push(c.to_string());
    }
    cols.join(",")
}

/// One observables row matching [`observables_header`].
pub fn observables_row(o: &Observables) -> String {
    let mut cols = vec![fmt_f64(o.time), fmt_f64(o.trace), fmt_f64(o.energy)];
    for p in &o.populations {
        cols.push(fmt_f64(*p));
    }
    cols.push(fmt_f64(o.mean_k));
    cols.push(fmt_f64(o.mean_x));
    cols.push(fmt_f64(o.var_k));
    cols.push(fmt_f64(o.var_x));
    cols.join(",")
}

pub fn write_observables(
    mut w: impl Write,
    n_states: usize,
    series: &[Observables],
) -> std::io::Result<()> {
    writeln!(w, "{}", observables_header(n_states))?;
    for o in series {
        writeln!(w, "{}", observables_row(o))?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ComplexRepr {
    re: f64,
    im: f64,
}

/// JSON snapshot of a mean-field state.
#[derive(Serialize, Deserialize)]
pub struct MeanFieldSnapshot {
    pub time: f64,
    pub amplitudes: Vec<[f64; 2]>,
    pub kc: f64,
    pub xc: f64,
}

impl MeanFieldSnapshot {
    pub fn of(time: f64, s: &MeanFieldState) -> Self {
        Self {
            time,
            amplitudes: s.amplitudes.iter().map(|c| [c.re, c.im]).collect(),
            kc: s.kc,
            xc: s.xc,
        }
    }
}

/// JSON snapshot of a multiconfiguration state.
#[derive(Serialize, Deserialize)]
pub struct McmfSnapshot {
    pub time: f64,
    pub varrho: Vec<Vec<[f64; 2]>>,
    pub kc: Vec<Vec<f64>>,
    pub xc: Vec<Vec<f64>>,
}

impl McmfSnapshot {
    pub fn of(time: f64, s: &McmfState) -> Self {
        let n = s.n_states();
        Self {
            time,
            varrho: (0..n)
                .map(|i| (0..n).map(|j| [s.varrho[[i, j]].re, s.varrho[[i, j]].im]).collect())
                .collect(),
            kc: (0..n).map(|i| (0..n).map(|j| s.kc[[i, j]]).collect()).collect(),
            xc: (0..n).map(|i| (0..n).map(|j| s.xc[[i, j]]).collect()).collect(),
        }
    }
}

/// Binary snapshot of a mixed density: a short ASCII header line
/// `qcdyn-density n kpoints kextent xpoints xextent time`, then the
/// `n·n` component fields row-major as little-endian f64 (re, im)
/// interleaved, k index outer, x index inner.
pub fn write_density_binary(
    mut w: impl Write,
    time: f64,
    rho: &MixedDensity,
) -> std::io::Result<()> {
    writeln!(
        w,
        "qcdyn-density {} {} {} {} {} {}",
        rho.n_states(),
        rho.kgrid().n_points(),
        fmt_f64(rho.kgrid().extent()),
        rho.xgrid().n_points(),
        fmt_f64(rho.xgrid().extent()),
        fmt_f64(time),
    )?;
    for i in 0..rho.n_states() {
        for j in 0..rho.n_states() {
            for v in rho.field(i, j).iter() {
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
pub struct MatrixExport {
    pub dim: usize,
    pub basis: Basis,
    pub grid: Option<Grid1D>,
    /// Row-major `[re, im]` pairs.
    pub entries: Vec<[f64; 2]>,
}

impl MatrixExport {
    pub fn of(op: &OperatorMatrix) -> Self {
        Self {
            dim: op.dim(),
            basis: op.basis(),
            grid: op.grid(),
            entries: op.entries().iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

/// Binary export of an operator matrix: ASCII header `qcdyn-operator dim`,
/// then row-major little-endian f64 (re, im) pairs.
pub fn write_operator_binary(mut w: impl Write, op: &OperatorMatrix) -> std::io::Result<()> {
    writeln!(w, "qcdyn-operator {}", op.dim())?;
    for v in op.entries().iter() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
pub struct GridSymbolExport {
    pub kgrid: Grid1D,
    pub xgrid: Grid1D,
    /// Row-major `[re, im]` pairs, k index outer.
    pub values: Vec<[f64; 2]>,
}

impl GridSymbolExport {
    pub fn of(sym: &GridSymbol) -> Self {
        Self {
            kgrid: sym.kgrid(),
            xgrid: sym.xgrid(),
            values: sym.values().iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn into_symbol(self) -> Result<GridSymbol, crate::error::GridError> {
        let n = (self.kgrid.n_points(), self.xgrid.n_points());
        let values = Array2::from_shape_vec(n, self.values.iter().map(|p| C64::new(p[0], p[1])).collect())
            .map_err(|_| crate::error::GridError::ShapeMismatch { expected: n, got: (0, 0) })?;
        GridSymbol::from_values(self.kgrid, self.xgrid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for &x in &[0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-300, -7.25e17] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
            assert!(!s.contains(','));
        }
    }

    #[test]
    fn observables_row_has_matching_columns() {
        let o = Observables {
            time: 0.5,
            trace: 1.0,
            energy: 2.0,
            populations: vec![0.25, 0.75],
            mean_k: 0.0,
            mean_x: -1.0,
            var_k: 0.1,
            var_x: 0.2,
        };
        let header = observables_header(2);
        let row = observables_row(&o);
        assert_eq!(header.split(',').count(), row.split(',').count());
    }

    #[test]
    fn grid_symbol_export_round_trips() {
        let h = crate::symbols::PlanckConstant::new(std::f64::consts::TAU).unwrap();
        let xg = Grid1D::new(16, 4.0).unwrap();
        let sym = GridSymbol::sample(|k, x| C64::new(k * x, k - x), xg, h);
        let text = serde_json::to_string(&GridSymbolExport::of(&sym)).unwrap();
        let back: GridSymbolExport = serde_json::from_str(&text).unwrap();
        let sym2 = back.into_symbol().unwrap();
        assert_eq!(sym.values(), sym2.values());
    }
}
