//! Symbol/operator correspondence on periodic grids.
//!
//! A symbol `σ(k, x)` sampled on conjugate grids maps to the kernel of an
//! integral operator through
//! `K_σ(x,y) = h⁻¹ Σ_k σ(k, (x+y)/2) e^{2πi(x−y)k/h} Δk`,
//! with the Kohn-Nirenberg variant evaluating the symbol at the left point
//! `x` instead of the midpoint. Grids are periodic with power-of-two sizes
//! and the k grid is conjugate to the x grid: `Δx · Δk = h / n`. Midpoints
//! are taken along the short arc of the periodic box, so every shift
//! diagonal of the kernel samples the symbol uniformly.
//!
//! The grid star product here composes kernels, so for one conjugate pair
//! `x ♯ k = xk + ih/4π`. The polynomial star product in [`crate::symbols`]
//! uses the opposite sign of the imaginary part (its normalization is tied
//! to the classical limit); the two agree after `h → −h`, and every
//! constant is pinned by the composition tests below.

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::GridError;
use crate::numerics::hermitian_eigen;
use crate::symbols::PlanckConstant;

/// Relative kernel content allowed at the extreme translation shifts; more
/// means the symbol's k-support is not resolved by the grid.
const NYQUIST_TAIL: f64 = 0.05;

/// Uniform periodic grid over `[-extent/2, extent/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n_points: usize,
    extent: f64,
}

impl Grid1D {
    pub fn new(n_points: usize, extent: f64) -> Result<Self, GridError> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(GridError::BadGridSize(n_points));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(GridError::BadExtent(extent));
        }
        Ok(Self { n_points, extent })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.n_points as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        -0.5 * self.extent + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    /// Conjugate momentum grid at Planck constant `h`: same point count,
    /// extent `n h / L`, so that `Δx Δk = h/n`.
    pub fn conjugate(&self, h: PlanckConstant) -> Grid1D {
        Grid1D {
            n_points: self.n_points,
            extent: self.n_points as f64 * h.value() / self.extent,
        }
    }
}

/// A symbol sampled on a (k grid × x grid) box, indexed `[k, x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSymbol {
    kgrid: Grid1D,
    xgrid: Grid1D,
    values: Array2<C64>,
}

impl GridSymbol {
    pub fn from_values(kgrid: Grid1D, xgrid: Grid1D, values: Array2<C64>) -> Result<Self, GridError> {
        let expected = (kgrid.n_points(), xgrid.n_points());
        if values.dim() != expected {
            return Err(GridError::ShapeMismatch { expected, got: values.dim() });
        }
        Ok(Self { kgrid, xgrid, values })
    }

    /// Sample `f(k, x)` on the x grid and its conjugate k grid.
    pub fn sample(f: impl Fn(f64, f64) -> C64, xgrid: Grid1D, h: PlanckConstant) -> Self {
        let kgrid = xgrid.conjugate(h);
        let n = xgrid.n_points();
        let mut values = Array2::zeros((n, n));
        for ik in 0..n {
            for ix in 0..n {
                values[[ik, ix]] = f(kgrid.point(ik), xgrid.point(ix));
            }
        }
        Self { kgrid, xgrid, values }
    }

    pub fn kgrid(&self) -> Grid1D {
        self.kgrid
    }

    pub fn xgrid(&self) -> Grid1D {
        self.xgrid
    }

    pub fn values(&self) -> &Array2<C64> {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest pointwise difference to another symbol on the same grids.
    pub fn max_distance(&self, other: &GridSymbol) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn grids_conjugate(&self, h: PlanckConstant) -> Result<(), GridError> {
        let expect = self.xgrid.conjugate(h);
        let rel = (self.kgrid.extent() - expect.extent()).abs() / expect.extent();
        if self.kgrid.n_points() != self.xgrid.n_points() || rel > 1e-12 {
            return Err(GridError::IncompatibleGrids);
        }
        Ok(())
    }
}

/// Which basis an operator matrix is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    PositionGrid,
    HoEigenbasis,
}

/// Dense operator matrix: kernel samples `K(x_a, x_b)` on a position grid,
/// or plain matrix elements in a truncated eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    entries: Array2<C64>,
    basis: Basis,
    grid: Option<Grid1D>,
}

impl OperatorMatrix {
    pub fn from_kernel(grid: Grid1D, entries: Array2<C64>) -> Result<Self, GridError> {
        let n = grid.n_points();
        if entries.dim() != (n, n) {
            return Err(GridError::ShapeMismatch { expected: (n, n), got: entries.dim() });
        }
        Ok(Self { dim: n, entries, basis: Basis::PositionGrid, grid: Some(grid) })
    }

    pub fn in_eigenbasis(entries: Array2<C64>) -> Self {
        let dim = entries.nrows();
        Self { dim, entries, basis: Basis::HoEigenbasis, grid: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn grid(&self) -> Option<Grid1D> {
        self.grid
    }

    /// Raw kernel samples (position grid) or matrix elements (eigenbasis).
    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    /// Dimensionless operator matrix acting on sample vectors. On a
    /// position grid this is the kernel scaled by the quadrature weight.
    pub fn op_matrix(&self) -> Array2<C64> {
        match self.basis {
            Basis::PositionGrid => {
                let w = self.grid.expect("grid basis").spacing();
                self.entries.mapv(|v| v * w)
            }
            Basis::HoEigenbasis => self.entries.clone(),
        }
    }

    /// Apply to a grid function: matrix-vector product scaled by the grid
    /// spacing (rectangle-rule quadrature).
    pub fn apply(&self, f: &Array1<C64>) -> Result<Array1<C64>, GridError> {
        if f.len() != self.dim {
            return Err(GridError::DimensionMismatch(self.dim, f.len()));
        }
        Ok(self.op_matrix().dot(f))
    }

    /// Operator composition `self ∘ other` (includes the quadrature weight).
    pub fn compose(&self, other: &OperatorMatrix) -> Result<OperatorMatrix, GridError> {
        if self.basis != other.basis || self.dim != other.dim {
            return Err(GridError::BasisMismatch);
        }
        match self.basis {
            Basis::PositionGrid => {
                let grid = self.grid.expect("grid basis");
                let w = grid.spacing();
                let entries = self.entries.dot(&other.entries).mapv(|v| v * w);
                OperatorMatrix::from_kernel(grid, entries)
            }
            Basis::HoEigenbasis => {
                Ok(OperatorMatrix::in_eigenbasis(self.entries.dot(&other.entries)))
            }
        }
    }

    /// Max deviation from Hermitian symmetry of the entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.dim {
            for b in 0..self.dim {
                worst = worst.max((self.entries[[a, b]] - self.entries[[b, a]].conj()).norm());
            }
        }
        worst
    }

    /// Largest entry magnitude of `self − other` for the dimensionless
    /// operator matrices.
    pub fn max_op_distance(&self, other: &OperatorMatrix) -> f64 {
        let a = self.op_matrix();
        let b = other.op_matrix();
        a.iter().zip(b.iter()).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues (ascending) and quadrature-orthonormal eigenvector
    /// columns of a Hermitian operator.
    pub fn eigendecompose(&self) -> (Array1<f64>, Array2<C64>) {
        let (vals, mut vecs) = hermitian_eigen(&self.op_matrix());
        if let Some(grid) = self.grid {
            let w = grid.spacing().sqrt();
            vecs.mapv_inplace(|v| v / w);
        }
        (vals, vecs)
    }
}

fn forward_fft(buf: &mut [C64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

fn inverse_fft_unnorm(buf: &mut [C64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(buf.len()).process(buf);
}

/// Band-limited 2x upsampling of one axis via spectral zero padding.
fn upsample_axis(values: &Array2<C64>, axis: Axis) -> Array2<C64> {
    let n = values.len_of(axis);
    let other = values.len_of(Axis(1 - axis.0));
    let mut out = match axis.0 {
        0 => Array2::zeros((2 * n, other)),
        _ => Array2::zeros((other, 2 * n)),
    };
    let mut line = vec![C64::new(0.0, 0.0); n];
    let mut fine = vec![C64::new(0.0, 0.0); 2 * n];
    for j in 0..other {
        for (i, v) in line.iter_mut().enumerate() {
            *v = match axis.0 {
                0 => values[[i, j]],
                _ => values[[j, i]],
            };
        }
        forward_fft(&mut line);
        for v in fine.iter_mut() {
            *v = C64::new(0.0, 0.0);
        }
        // Coefficients normalized by 1/n; the Nyquist bin is split evenly.
        for (m, c) in line.iter().enumerate() {
            let c = c / n as f64;
            if m < n / 2 {
                fine[m] = c;
            } else if m == n / 2 {
                fine[n / 2] = 0.5 * c;
                fine[2 * n - n / 2] = 0.5 * c;
            } else {
                fine[m + n] = c;
            }
        }
        inverse_fft_unnorm(&mut fine);
        for i in 0..2 * n {
            match axis.0 {
                0 => out[[i, j]] = fine[i],
                _ => out[[j, i]] = fine[i],
            }
        }
    }
    out
}

fn signed_shift(a: usize, b: usize, n: usize) -> isize {
    let m = (a + n - b) % n;
    if m <= n / 2 {
        m as isize
    } else {
        m as isize - n as isize
    }
}

/// Shared implementation of the two kernel orderings.
fn kernel_impl(
    symbol: &GridSymbol,
    h: PlanckConstant,
    midpoint: bool,
) -> Result<OperatorMatrix, GridError> {
    symbol.grids_conjugate(h)?;
    let n = symbol.xgrid.n_points();
    let dk = symbol.kgrid.spacing();
    // Shift spectra per symbol column: S[m, c] = Σ_j σ[j, c] e^{2πi m j/n}.
    let cols = if midpoint {
        upsample_axis(&symbol.values, Axis(1))
    } else {
        symbol.values.clone()
    };
    let ncols = cols.len_of(Axis(1));
    let mut spectra = Array2::zeros((n, ncols));
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for c in 0..ncols {
        for (j, v) in buf.iter_mut().enumerate() {
            *v = cols[[j, c]];
        }
        inverse_fft_unnorm(&mut buf);
        for m in 0..n {
            spectra[[m, c]] = buf[m];
        }
    }
    let scale = dk / h.value();
    let nf = 2 * n;
    let mut entries = Array2::zeros((n, n));
    for a in 0..n {
        for b in 0..n {
            let d = signed_shift(a, b, n);
            let m = d.rem_euclid(n as isize) as usize;
            let col = if midpoint {
                (2 * b as isize + d).rem_euclid(nf as isize) as usize
            } else {
                a
            };
            let sign = if d.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
            entries[[a, b]] = spectra[[m, col]] * scale * sign;
        }
    }
    let op = OperatorMatrix::from_kernel(symbol.xgrid, entries)?;

    // Locality check: kernel content at the extreme shifts signals
    // unresolved k-support.
    let mut peak = 0.0f64;
    let mut tail = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            let d = signed_shift(a, b, n).unsigned_abs();
            let v = op.entries[[a, b]].norm();
            peak = peak.max(v);
            if d >= n / 2 - 1 {
                tail = tail.max(v);
            }
        }
    }
    if peak > 0.0 && tail / peak > NYQUIST_TAIL {
        return Err(GridError::NyquistViolation { tail: tail / peak, threshold: NYQUIST_TAIL });
    }
    Ok(op)
}

/// Weyl kernel: symbol evaluated at the midpoint `(x+y)/2`; real symbols
/// yield Hermitian kernels.
pub fn weyl_kernel(symbol: &GridSymbol, h: PlanckConstant) -> Result<OperatorMatrix, GridError> {
    kernel_impl(symbol, h, true)
}

/// Weyl kernel built from a symbol function, evaluating the midpoints
/// exactly instead of interpolating sampled values. Useful for symbols
/// that are not periodic-smooth (plain polynomials in particular).
pub fn weyl_kernel_fn(
    f: impl Fn(f64, f64) -> C64,
    xgrid: Grid1D,
    h: PlanckConstant,
) -> Result<OperatorMatrix, GridError> {
    let kgrid = xgrid.conjugate(h);
    let n = xgrid.n_points();
    let nf = 2 * n;
    let fine = |idx: usize| -0.5 * xgrid.extent() + idx as f64 * 0.5 * xgrid.spacing();
    let mut cols = Array2::zeros((n, nf));
    for j in 0..n {
        for c in 0..nf {
            cols[[j, c]] = f(kgrid.point(j), fine(c));
        }
    }
    let mut spectra = Array2::zeros((n, nf));
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for c in 0..nf {
        for (j, v) in buf.iter_mut().enumerate() {
            *v = cols[[j, c]];
        }
        inverse_fft_unnorm(&mut buf);
        for m in 0..n {
            spectra[[m, c]] = buf[m];
        }
    }
    let scale = kgrid.spacing() / h.value();
    let mut entries = Array2::zeros((n, n));
    for a in 0..n {
        for b in 0..n {
            let d = signed_shift(a, b, n);
            let m = d.rem_euclid(n as isize) as usize;
            let col = (2 * b as isize + d).rem_euclid(nf as isize) as usize;
            let sign = if d.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
            entries[[a, b]] = spectra[[m, col]] * scale * sign;
        }
    }
    OperatorMatrix::from_kernel(xgrid, entries)
}

/// Kohn-Nirenberg kernel: symbol evaluated at the left point `x`, which
/// keeps momentum factors rightmost in operator products.
pub fn kn_kernel(symbol: &GridSymbol, h: PlanckConstant) -> Result<OperatorMatrix, GridError> {
    kernel_impl(symbol, h, false)
}

/// Inverse of [`weyl_kernel`]: recover the symbol from kernel samples.
///
/// Each signed shift diagonal of the kernel carries one momentum mode of
/// the symbol sampled along the box; the round trip is exact to spectral
/// accuracy for symbols with position modes inside the Nyquist band.
pub fn symbol_from_kernel(
    op: &OperatorMatrix,
    h: PlanckConstant,
) -> Result<GridSymbol, GridError> {
    if op.basis != Basis::PositionGrid {
        return Err(GridError::BasisMismatch);
    }
    let grid = op.grid.expect("grid basis");
    let n = grid.n_points();
    let kgrid = grid.conjugate(h);
    let scale = kgrid.spacing() / h.value();

    // Phase-space mode coefficients folded with the box-offset signs:
    // coeffs[mu, nu] with σ[j,b] = Σ coeffs e^{2πι(mu j + nu b)/n}.
    let mut coeffs = Array2::zeros((n, n));
    let mut diag = vec![C64::new(0.0, 0.0); n];
    let pi = std::f64::consts::PI;
    for m_idx in 0..n {
        let d = if m_idx <= n / 2 { m_idx as isize } else { m_idx as isize - n as isize };
        let sign = if d.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
        for (b, v) in diag.iter_mut().enumerate() {
            let a = (b as isize + d).rem_euclid(n as isize) as usize;
            *v = op.entries[[a, b]] * sign / (scale * n as f64);
        }
        forward_fft(&mut diag);
        // Momentum mode mu = −d; demodulate the half-step midpoint phase.
        let mu_idx = (-d).rem_euclid(n as isize) as usize;
        for nu_idx in 0..n {
            let nu = if nu_idx < n / 2 { nu_idx as isize } else { nu_idx as isize - n as isize };
            let demod = C64::new(0.0, -pi * nu as f64 * d as f64 / n as f64).exp();
            coeffs[[mu_idx, nu_idx]] = diag[nu_idx] * demod / n as f64;
        }
    }
    // σ[j, b] = Σ coeffs e^{2πi(mu j + nu b)/n}: unnormalized inverse DFT.
    crate::numerics::fft_axis(&mut coeffs, Axis(0), true);
    crate::numerics::fft_axis(&mut coeffs, Axis(1), true);
    let values = coeffs.mapv(|v| v * (n * n) as f64);
    GridSymbol::from_values(kgrid, grid, values)
}

fn signed_index(idx: usize, n: usize) -> isize {
    if idx < n / 2 {
        idx as isize
    } else {
        idx as isize - n as isize
    }
}

/// Grid evaluation of the star product of two sampled symbols.
///
/// Uses the exact shift form `σ♯τ = Σ_{c,d} T[c,d] σ(k + hd/2, x − hc/2)
/// e^{2πi(ck + dx)}` over the spectral modes `T` of `τ`, with band-limited
/// interpolation for the half-step shifts. Composes like the kernels:
/// `weyl_kernel(σ♯τ) ≈ weyl_kernel(σ) ∘ weyl_kernel(τ)`.
pub fn grid_star(
    sigma: &GridSymbol,
    tau: &GridSymbol,
    h: PlanckConstant,
) -> Result<GridSymbol, GridError> {
    sigma.grids_conjugate(h)?;
    tau.grids_conjugate(h)?;
    if sigma.kgrid != tau.kgrid || sigma.xgrid != tau.xgrid {
        return Err(GridError::IncompatibleGrids);
    }
    let n = sigma.xgrid.n_points();
    let nf = 2 * n;

    // W[mc, md] = T[mc, md] (−1)^{mc+md}: plain 2D FFT coefficients of τ.
    let mut what = tau.values.clone();
    crate::numerics::fft_axis(&mut what, Axis(0), false);
    crate::numerics::fft_axis(&mut what, Axis(1), false);
    let tnorm = 1.0 / (n * n) as f64;

    // σ upsampled on both axes, then row FFTs along the fine x axis.
    let sigma_fine = upsample_axis(&upsample_axis(&sigma.values, Axis(0)), Axis(1));
    let mut row_hat = sigma_fine;
    {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(nf);
        let mut buf = vec![C64::new(0.0, 0.0); nf];
        for r in 0..nf {
            for (q, v) in buf.iter_mut().enumerate() {
                *v = row_hat[[r, q]];
            }
            fft.process(&mut buf);
            for (q, v) in buf.iter().enumerate() {
                row_hat[[r, q]] = *v;
            }
        }
    }

    let mut planner = FftPlanner::new();
    let fft_fwd = planner.plan_fft_forward(nf);
    let fft_inv = planner.plan_fft_inverse(nf);

    let tau_period = std::f64::consts::TAU;
    let mut out = Array2::zeros((n, n));
    let mut g = vec![C64::new(0.0, 0.0); nf];
    let mut work = vec![C64::new(0.0, 0.0); nf];
    for md_idx in 0..n {
        let md = signed_index(md_idx, n);
        // G[r] = Σ_mc W[mc, md] e^{−2πi mc r / nf} over signed mc slots.
        for v in g.iter_mut() {
            *v = C64::new(0.0, 0.0);
        }
        for mc_idx in 0..n {
            let mc = signed_index(mc_idx, n);
            let slot = mc.rem_euclid(nf as isize) as usize;
            g[slot] += what[[mc_idx, md_idx]] * tnorm;
        }
        fft_fwd.process(&mut g);
        for j in 0..n {
            let row = (2 * j as isize + md).rem_euclid(nf as isize) as usize;
            for (q, v) in work.iter_mut().enumerate() {
                let gq = g[(q + nf - 2 * j) % nf];
                *v = gq * row_hat[[row, q]];
            }
            fft_inv.process(&mut work);
            let inv_scale = 1.0 / nf as f64;
            for b in 0..n {
                let phase = C64::new(0.0, tau_period * md_idx as f64 * b as f64 / n as f64).exp();
                out[[j, b]] += work[2 * b] * inv_scale * phase;
            }
        }
    }
    GridSymbol::from_values(sigma.kgrid, sigma.xgrid, out)
}

/// Oscillator eigenbasis from dense diagonalization of the kernel of
/// `(k² + x²)/2`: eigenvalues ascending and quadrature-orthonormal
/// eigenvectors.
pub fn ho_eigenbasis(
    xgrid: Grid1D,
    h: PlanckConstant,
) -> Result<(Array1<f64>, Array2<C64>), GridError> {
    let symbol = GridSymbol::sample(|k, x| C64::new(0.5 * (k * k + x * x), 0.0), xgrid, h);
    let op = weyl_kernel(&symbol, h)?;
    Ok(op.eigendecompose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn h_one() -> PlanckConstant {
        PlanckConstant::new(TAU).unwrap()
    }

    fn grid(n: usize, l: f64) -> Grid1D {
        Grid1D::new(n, l).unwrap()
    }

    #[test]
    fn grid_invariants_are_enforced() {
        assert!(Grid1D::new(7, 1.0).is_err());
        assert!(Grid1D::new(12, 1.0).is_err());
        assert!(Grid1D::new(16, -1.0).is_err());
        let g = grid(16, 8.0);
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.point(0), -4.0);
    }

    #[test]
    fn constant_symbol_gives_identity_action() {
        let h = h_one();
        let xg = grid(32, 12.0);
        let sym = GridSymbol::sample(|_, _| C64::new(1.0, 0.0), xg, h);
        let op = weyl_kernel(&sym, h).unwrap();
        let m = op.op_matrix();
        for a in 0..32 {
            for b in 0..32 {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((m[[a, b]] - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
        let f: Array1<C64> = Array1::from_iter(
            (0..32).map(|i| C64::new((-((i as f64) - 16.0).powi(2) / 8.0).exp(), 0.0)),
        );
        let g = op.apply(&f).unwrap();
        for i in 0..32 {
            assert!((g[i] - f[i]).norm() < 1e-12);
        }
        let opkn = kn_kernel(&sym, h).unwrap();
        assert!(op.max_op_distance(&opkn) < 1e-12);
    }

    #[test]
    fn position_symbol_gives_diagonal_multiplication() {
        let h = h_one();
        let xg = grid(32, 12.0);
        let sym = GridSymbol::sample(|_, x| C64::new(x, 0.0), xg, h);
        let op = weyl_kernel(&sym, h).unwrap();
        let m = op.op_matrix();
        for a in 0..32 {
            for b in 0..32 {
                let expect = if a == b { xg.point(a) } else { 0.0 };
                assert!((m[[a, b]] - C64::new(expect, 0.0)).norm() < 1e-10, "entry {a},{b}");
            }
        }
        let opkn = kn_kernel(&sym, h).unwrap();
        assert!(op.max_op_distance(&opkn) < 1e-10);
    }

    #[test]
    fn real_symbol_yields_hermitian_kernel() {
        let h = h_one();
        let xg = grid(64, 16.0);
        let kg = xg.conjugate(h);
        let (lk, lx) = (kg.extent(), xg.extent());
        let sym = GridSymbol::sample(
            |k, x| {
                C64::new(
                    (TAU * k / lk).cos() + 0.5 * (TAU * 2.0 * x / lx).sin() * (TAU * k / lk).sin(),
                    0.0,
                )
            },
            xg,
            h,
        );
        let op = weyl_kernel(&sym, h).unwrap();
        assert!(op.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn oscillator_symbol_has_uniform_spectrum() {
        // Spacing h/2π between neighboring eigenvalues, ground state at
        // half the spacing; h = 2π makes the gaps exactly 1.
        let h = h_one();
        let xg = grid(128, 20.0);
        let (vals, _) = ho_eigenbasis(xg, h).unwrap();
        assert!((vals[0] - 0.5).abs() < 1e-8, "ground {:.12}", vals[0]);
        for m in 0..20 {
            let gap = vals[m + 1] - vals[m];
            assert!((gap - 1.0).abs() < 1e-8, "gap {m}: {gap:.12}");
        }
    }

    #[test]
    fn oscillator_kernel_reproduces_its_eigenvector() {
        let h = h_one();
        let xg = grid(64, 16.0);
        let sym = GridSymbol::sample(|k, x| C64::new(0.5 * (k * k + x * x), 0.0), xg, h);
        let op = weyl_kernel(&sym, h).unwrap();
        let (vals, vecs) = op.eigendecompose();
        let ground: Array1<C64> = vecs.column(0).to_owned();
        let applied = op.apply(&ground).unwrap();
        for i in 0..64 {
            assert!((applied[i] - ground[i] * vals[0]).norm() < 1e-8);
        }
    }

    #[test]
    fn round_trip_recovers_band_limited_symbol() {
        let h = h_one();
        let xg = grid(64, 16.0);
        let kg = xg.conjugate(h);
        let sym = GridSymbol::sample(
            |k, x| {
                let u = TAU * k / kg.extent();
                let v = TAU * x / xg.extent();
                C64::new((2.0 * u).cos() * (3.0 * v).sin() + 0.3 * u.sin(), 0.2 * v.cos())
            },
            xg,
            h,
        );
        let op = weyl_kernel(&sym, h).unwrap();
        let back = symbol_from_kernel(&op, h).unwrap();
        let rel = back.max_distance(&sym) / sym.max_abs();
        assert!(rel < 1e-10, "relative error {rel:.3e}");
    }

    #[test]
    fn symbol_of_identity_matrix_is_one() {
        let h = h_one();
        let xg = grid(32, 8.0);
        let n = xg.n_points();
        let w = xg.spacing();
        let mut k = Array2::zeros((n, n));
        for a in 0..n {
            k[[a, a]] = C64::new(1.0 / w, 0.0);
        }
        let op = OperatorMatrix::from_kernel(xg, k).unwrap();
        let sym = symbol_from_kernel(&op, h).unwrap();
        for v in sym.values().iter() {
            assert!((v - C64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn round_trip_through_symbol_of_position_kernel() {
        let h = h_one();
        let xg = grid(32, 8.0);
        let sym = GridSymbol::sample(|_, x| C64::new(x, 0.0), xg, h);
        let op = weyl_kernel(&sym, h).unwrap();
        let back = symbol_from_kernel(&op, h).unwrap();
        assert!(back.max_distance(&sym) < 1e-10);
    }

    #[test]
    fn nyquist_violation_is_reported() {
        let h = h_one();
        let xg = grid(32, 8.0);
        let kg = xg.conjugate(h);
        // Oscillates at the k-Nyquist rate: kernel content at maximal shift.
        let sym = GridSymbol::sample(
            |k, _| C64::new((std::f64::consts::PI * k / kg.spacing()).cos(), 0.0),
            xg,
            h,
        );
        match weyl_kernel(&sym, h) {
            Err(GridError::NyquistViolation { .. }) => {}
            other => panic!("expected Nyquist violation, got {other:?}"),
        }
    }

    #[test]
    fn kn_and_weyl_orderings_differ_by_symmetrization() {
        // For σ = kx the Weyl kernel acts like the symmetrized product
        // ½(X·K + K·X) and the Kohn-Nirenberg kernel like X·K, where X is
        // the diagonal position matrix and K the FFT-derivative circulant.
        let h = h_one();
        let n = 64;
        let xg = grid(n, 24.0);
        let kg = xg.conjugate(h);
        // Explicit FFT-derivative matrix: momentum j_signed·Δk on mode j.
        let mut kmat = Array2::zeros((n, n));
        for a in 0..n {
            for b in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..n {
                    let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                    let phase = TAU * (a as f64 - b as f64) * j as f64 / n as f64;
                    acc += C64::new(m * kg.spacing(), 0.0) * C64::new(0.0, phase).exp();
                }
                kmat[[a, b]] = acc / n as f64;
            }
        }
        let xmat = Array2::from_diag(&Array1::from_iter(
            (0..n).map(|i| C64::new(xg.point(i), 0.0)),
        ));
        let w = weyl_kernel_fn(|k, x| C64::new(k * x, 0.0), xg, h).unwrap();
        let skx = GridSymbol::sample(|k, x| C64::new(k * x, 0.0), xg, h);
        let kn = kn_kernel(&skx, h).unwrap();
        // KN gives exactly X·K as a matrix.
        let xk = xmat.dot(&kmat);
        let kn_op = kn.op_matrix();
        let scale = xk.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for a in 0..n {
            for b in 0..n {
                assert!((kn_op[[a, b]] - xk[[a, b]]).norm() / scale < 1e-10, "kn entry {a},{b}");
            }
        }
        // Weyl matches the symmetrized product on interior-supported states
        // (the periodic wrap makes entry-level comparisons moot there).
        let sym = (xmat.dot(&kmat) + kmat.dot(&xmat)).mapv(|v| v * 0.5);
        let f: Array1<C64> = Array1::from_iter(
            (0..n).map(|i| C64::new((-(xg.point(i)).powi(2)).exp(), 0.0)),
        );
        let w_action = w.op_matrix().dot(&f);
        let sym_action = sym.dot(&f);
        let fscale = sym_action.iter().map(|v| v.norm()).fold(0.0, f64::max);
        // Away from the periodic wrap the kernels agree entrywise; compare
        // on the interior, where the state lives.
        for i in n / 4..3 * n / 4 {
            assert!(
                (w_action[i] - sym_action[i]).norm() / fscale < 1e-9,
                "weyl vs symmetrized at {i}: {:.3e}",
                (w_action[i] - sym_action[i]).norm() / fscale
            );
        }
        // The two orderings genuinely differ for kx.
        assert!(w.max_op_distance(&kn) > 1e-3);
    }

    #[test]
    fn grid_star_with_identity_returns_the_other_factor() {
        let h = h_one();
        let xg = grid(32, 8.0);
        let kg = xg.conjugate(h);
        let sym = GridSymbol::sample(
            |k, x| {
                C64::new(
                    (TAU * 2.0 * k / kg.extent()).cos() * (TAU * x / xg.extent()).sin(),
                    0.1 * (TAU * k / kg.extent()).sin(),
                )
            },
            xg,
            h,
        );
        let one = GridSymbol::sample(|_, _| C64::new(1.0, 0.0), xg, h);
        let left = grid_star(&one, &sym, h).unwrap();
        let right = grid_star(&sym, &one, h).unwrap();
        assert!(left.max_distance(&sym) < 1e-10, "left err {:.3e}", left.max_distance(&sym));
        assert!(right.max_distance(&sym) < 1e-10, "right err {:.3e}", right.max_distance(&sym));
    }

    #[test]
    fn grid_star_of_fourier_modes_has_exact_phase() {
        // e_μ(k) ♯ e_ν(x) = e^{iπμν/n} e_μ e_ν in this composition
        // convention; the reversed order carries the conjugate phase.
        let h = h_one();
        let n = 32;
        let xg = grid(n, 8.0);
        let kg = xg.conjugate(h);
        let mu = 3.0;
        let nu = 2.0;
        let ek = GridSymbol::sample(|k, _| C64::new(0.0, TAU * mu * k / kg.extent()).exp(), xg, h);
        let ex = GridSymbol::sample(|_, x| C64::new(0.0, TAU * nu * x / xg.extent()).exp(), xg, h);
        let prod = GridSymbol::sample(
            |k, x| C64::new(0.0, TAU * (mu * k / kg.extent() + nu * x / xg.extent())).exp(),
            xg,
            h,
        );
        let phase = C64::new(0.0, std::f64::consts::PI * mu * nu / n as f64).exp();
        let fwd = grid_star(&ek, &ex, h).unwrap();
        let expect_fwd =
            GridSymbol::from_values(kg, xg, prod.values().mapv(|v| v * phase)).unwrap();
        assert!(
            fwd.max_distance(&expect_fwd) < 1e-10,
            "err {:.3e}",
            fwd.max_distance(&expect_fwd)
        );
        let rev = grid_star(&ex, &ek, h).unwrap();
        let expect_rev =
            GridSymbol::from_values(kg, xg, prod.values().mapv(|v| v * phase.conj())).unwrap();
        assert!(rev.max_distance(&expect_rev) < 1e-10);
    }

    #[test]
    fn grid_star_matches_kernel_composition() {
        let h = h_one();
        let xg = grid(32, 8.0);
        let kg = xg.conjugate(h);
        let mk = |a: f64, b: f64, c: f64| {
            move |k: f64, x: f64| {
                let u = TAU * k / kg.extent();
                let v = TAU * x / xg.extent();
                C64::new(a * u.cos() * v.cos() + b * (2.0 * v).sin(), c * u.sin())
            }
        };
        let s1 = GridSymbol::sample(mk(1.0, 0.4, 0.2), xg, h);
        let s2 = GridSymbol::sample(mk(0.7, -0.3, 0.5), xg, h);
        let composed =
            weyl_kernel(&s1, h).unwrap().compose(&weyl_kernel(&s2, h).unwrap()).unwrap();
        let star = grid_star(&s1, &s2, h).unwrap();
        let from_star = weyl_kernel(&star, h).unwrap();
        let err = composed.max_op_distance(&from_star);
        assert!(err < 1e-8, "composition error {err:.3e}");
    }
}
