//! Time propagation of mixed quantum-classical states.
//!
//! Three schemes share one Hamiltonian description (an N×N Hermitian
//! matrix of polynomials in the classical pair `(k', x')`):
//!
//! * **Liouville-von Neumann** ([`lvn_rhs`]): a matrix of classical
//!   phase-plane distributions `ρ_ij(k', x')` evolves under the commutator
//!   `(2πi/h)[H, ρ]` plus a Poisson-type derivative coupling. The coupling
//!   uses symmetrized (Jordan) products of the derivative matrices, which
//!   preserves Hermiticity and the trace exactly and reduces to the plain
//!   product whenever the factors commute.
//! * **Mean field** ([`mf_rhs`]): one classical trajectory driven by
//!   quantum expectation values, amplitudes driven by `−(2πi/h) H c`.
//! * **Multiconfiguration mean field** ([`mcmf_rhs`]): a quantum density
//!   matrix with one classical trajectory per configuration pair, the
//!   Hamiltonian entries evaluated each at their own phase point and the
//!   off-diagonal trajectories slaved to the diagonal averages.
//!
//! Propagation is fixed-step fourth-order Runge-Kutta; nothing is
//! renormalized silently, so the conserved quantities drift only by the
//! integrator error and are reported per step.

use ndarray::{Array2, Axis};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;
use crate::numerics::{dominant_eigenvector, spectral_derivative};
use crate::symbols::{PhaseVar, PlanckConstant, PolySymbol, Sector, VarContext};
use crate::weyl::Grid1D;

/// Context for the classical-only polynomials in a Hamiltonian matrix.
pub fn classical_context() -> VarContext {
    VarContext::new(0, 1)
}

/// N×N Hermitian matrix of polynomial symbols in one classical pair.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    n_states: usize,
    entries: Vec<PolySymbol>,
}

impl HamiltonianSpec {
    /// Build from row-major entries; checks Hermiticity as polynomials.
    pub fn new(n_states: usize, entries: Vec<PolySymbol>) -> Result<Self, DynamicsError> {
        if entries.len() != n_states * n_states {
            return Err(DynamicsError::StateShapeMismatch(entries.len(), n_states * n_states));
        }
        let mut defect = 0.0f64;
        for i in 0..n_states {
            for j in 0..n_states {
                let d = entries[i * n_states + j]
                    .max_coeff_distance(&entries[j * n_states + i].conj())
                    .map_err(DynamicsError::Symbol)?;
                defect = defect.max(d);
            }
        }
        let scale = entries.iter().map(|e| e.max_abs_coeff()).fold(1.0, f64::max);
        if defect > 1e-12 * scale {
            return Err(DynamicsError::NonHermitianHamiltonian(defect));
        }
        Ok(Self { n_states, entries })
    }

    /// Classical-independent Hamiltonian from a constant Hermitian matrix.
    pub fn constant(matrix: &Array2<C64>) -> Result<Self, DynamicsError> {
        let n = matrix.nrows();
        let ctx = classical_context();
        let entries = matrix.iter().map(|&v| PolySymbol::constant(ctx, v)).collect();
        Self::new(n, entries)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn entry(&self, i: usize, j: usize) -> &PolySymbol {
        &self.entries[i * self.n_states + j]
    }

    fn derivative(&self, i: usize, j: usize, var: PhaseVar) -> PolySymbol {
        self.entry(i, j).differentiate(var).expect("classical context")
    }

    /// Matrix value at a classical phase point.
    pub fn eval(&self, kc: f64, xc: f64) -> Array2<C64> {
        let n = self.n_states;
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] = self.entry(i, j).evaluate_classical(kc, xc).expect("point length");
            }
        }
        out
    }

    /// Gradient matrices `(∂H/∂k', ∂H/∂x')` at a classical phase point.
    pub fn eval_gradient(&self, kc: f64, xc: f64) -> (Array2<C64>, Array2<C64>) {
        let n = self.n_states;
        let ck = PhaseVar::momentum(Sector::Classical, 0);
        let cx = PhaseVar::position(Sector::Classical, 0);
        let mut dk = Array2::zeros((n, n));
        let mut dx = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                dk[[i, j]] =
                    self.derivative(i, j, ck).evaluate_classical(kc, xc).expect("point length");
                dx[[i, j]] =
                    self.derivative(i, j, cx).evaluate_classical(kc, xc).expect("point length");
            }
        }
        (dk, dx)
    }

    /// Sample the entries and their classical gradients on a grid pair.
    pub fn sample(&self, kgrid: Grid1D, xgrid: Grid1D) -> HamiltonianGrid {
        let n = self.n_states;
        let ck = PhaseVar::momentum(Sector::Classical, 0);
        let cx = PhaseVar::position(Sector::Classical, 0);
        let field = |p: &PolySymbol| {
            let mut f = Array2::zeros((kgrid.n_points(), xgrid.n_points()));
            for (ik, kv) in kgrid.points().iter().enumerate() {
                for (ix, xv) in xgrid.points().iter().enumerate() {
                    f[[ik, ix]] = p.evaluate_classical(*kv, *xv).expect("point length");
                }
            }
            f
        };
        let mut values = Vec::with_capacity(n * n);
        let mut dk = Vec::with_capacity(n * n);
        let mut dx = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let e = self.entry(i, j);
                values.push(field(e));
                dk.push(field(&e.differentiate(ck).expect("classical context")));
                dx.push(field(&e.differentiate(cx).expect("classical context")));
            }
        }
        HamiltonianGrid { n_states: n, kgrid, xgrid, values, dk, dx }
    }
}

/// Grid-sampled Hamiltonian matrix and its classical gradients.
pub struct HamiltonianGrid {
    n_states: usize,
    kgrid: Grid1D,
    xgrid: Grid1D,
    values: Vec<Array2<C64>>,
    dk: Vec<Array2<C64>>,
    dx: Vec<Array2<C64>>,
}

impl HamiltonianGrid {
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    fn value(&self, i: usize, j: usize) -> &Array2<C64> {
        &self.values[i * self.n_states + j]
    }

    fn grad_k(&self, i: usize, j: usize) -> &Array2<C64> {
        &self.dk[i * self.n_states + j]
    }

    fn grad_x(&self, i: usize, j: usize) -> &Array2<C64> {
        &self.dx[i * self.n_states + j]
    }
}

/// N×N matrix of classical phase-plane distributions `ρ_ij(k', x')`.
///
/// Index layout: `ρ_ij = conj(ψ_i) ψ_j` for a pure quantum state `ψ`, the
/// arrangement under which the componentwise evolution below carries a
/// `+(2πi/h)` commutator prefactor. Populations, trace, Hermiticity and
/// every reported observable are layout-independent.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDensity {
    n_states: usize,
    kgrid: Grid1D,
    xgrid: Grid1D,
    fields: Vec<Array2<C64>>,
}

impl MixedDensity {
    pub fn new(
        n_states: usize,
        kgrid: Grid1D,
        xgrid: Grid1D,
        fields: Vec<Array2<C64>>,
    ) -> Result<Self, DynamicsError> {
        if fields.len() != n_states * n_states {
            return Err(DynamicsError::StateShapeMismatch(fields.len(), n_states * n_states));
        }
        let shape = (kgrid.n_points(), xgrid.n_points());
        for f in &fields {
            if f.dim() != shape {
                return Err(DynamicsError::Grid(crate::error::GridError::ShapeMismatch {
                    expected: shape,
                    got: f.dim(),
                }));
            }
        }
        Ok(Self { n_states, kgrid, xgrid, fields })
    }

    /// Quantum state `|index⟩⟨index|` times a normalized Gaussian blob at
    /// `(k0, x0)` with width `w` (a delta stand-in on the grid).
    pub fn pure_gaussian(
        n_states: usize,
        index: usize,
        kgrid: Grid1D,
        xgrid: Grid1D,
        center: (f64, f64),
        width: f64,
    ) -> Result<Self, DynamicsError> {
        let mut g = Array2::zeros((kgrid.n_points(), xgrid.n_points()));
        for (ik, kv) in kgrid.points().iter().enumerate() {
            for (ix, xv) in xgrid.points().iter().enumerate() {
                let r2 = (kv - center.0).powi(2) + (xv - center.1).powi(2);
                g[[ik, ix]] = C64::new((-r2 / (2.0 * width * width)).exp(), 0.0);
            }
        }
        let total: f64 = g.iter().map(|v| v.re).sum::<f64>() * kgrid.spacing() * xgrid.spacing();
        g.mapv_inplace(|v| v / total);
        let shape = (kgrid.n_points(), xgrid.n_points());
        let mut fields = vec![Array2::zeros(shape); n_states * n_states];
        fields[index * n_states + index] = g;
        Self::new(n_states, kgrid, xgrid, fields)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn kgrid(&self) -> Grid1D {
        self.kgrid
    }

    pub fn xgrid(&self) -> Grid1D {
        self.xgrid
    }

    pub fn field(&self, i: usize, j: usize) -> &Array2<C64> {
        &self.fields[i * self.n_states + j]
    }

    fn weight(&self) -> f64 {
        self.kgrid.spacing() * self.xgrid.spacing()
    }

    /// Quadrature trace `Σ_i ∬ ρ_ii`.
    pub fn trace(&self) -> f64 {
        (0..self.n_states)
            .map(|i| self.field(i, i).iter().map(|v| v.re).sum::<f64>())
            .sum::<f64>()
            * self.weight()
    }

    /// Per-state populations `∬ ρ_ii` (unnormalized).
    pub fn populations(&self) -> Vec<f64> {
        (0..self.n_states)
            .map(|i| self.field(i, i).iter().map(|v| v.re).sum::<f64>() * self.weight())
            .collect()
    }

    /// Largest pointwise violation of `ρ_ij = conj(ρ_ji)`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n_states {
            for j in i..self.n_states {
                let a = self.field(i, j);
                let b = self.field(j, i);
                for (u, v) in a.iter().zip(b.iter()) {
                    worst = worst.max((u - v.conj()).norm());
                }
            }
        }
        worst
    }

    /// Classically integrated density matrix `M_ij = ∬ ρ_ij`.
    pub fn integrated_matrix(&self) -> Array2<C64> {
        let n = self.n_states;
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                m[[i, j]] = self.field(i, j).sum() * self.weight();
            }
        }
        m
    }

    /// Mean and variance of `(k', x')` under `Σ_i ρ_ii`, normalized by the
    /// trace.
    pub fn classical_moments(&self) -> ((f64, f64), (f64, f64)) {
        let w = self.weight();
        let mut norm = 0.0;
        let (mut mk, mut mx) = (0.0, 0.0);
        let (mut sk, mut sx) = (0.0, 0.0);
        let kpts = self.kgrid.points();
        let xpts = self.xgrid.points();
        for i in 0..self.n_states {
            let f = self.field(i, i);
            for (ik, kv) in kpts.iter().enumerate() {
                for (ix, xv) in xpts.iter().enumerate() {
                    let p = f[[ik, ix]].re * w;
                    norm += p;
                    mk += p * kv;
                    mx += p * xv;
                    sk += p * kv * kv;
                    sx += p * xv * xv;
                }
            }
        }
        if norm.abs() > 0.0 {
            mk /= norm;
            mx /= norm;
            sk = sk / norm - mk * mk;
            sx = sx / norm - mx * mx;
        }
        ((mk, mx), (sk, sx))
    }

    /// `Re tr(Hρ)` by quadrature, normalized by the trace.
    pub fn energy(&self, ham: &HamiltonianGrid) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n_states {
            for j in 0..self.n_states {
                let h = ham.value(i, j);
                let r = self.field(j, i);
                acc += h.iter().zip(r.iter()).map(|(a, b)| (a * b).re).sum::<f64>();
            }
        }
        acc * self.weight() / self.trace()
    }
}

/// Right-hand side of the matrix Liouville-von Neumann equation:
/// `(2πi/h)[H, ρ]` pointwise plus the classical coupling
/// `−(½{∂_k'H, ∂_x'ρ} − ½{∂_k'ρ, ∂_x'H})` (the prefactor
/// `(2πi/h)(ih/2π) = −1` is folded in). Symmetrized products keep the
/// increment Hermitian and trace-free for every Hermitian `ρ`.
pub fn lvn_rhs(
    rho: &MixedDensity,
    ham: &HamiltonianGrid,
    h: PlanckConstant,
) -> Result<MixedDensity, DynamicsError> {
    let n = rho.n_states;
    if ham.n_states != n {
        return Err(DynamicsError::StateShapeMismatch(ham.n_states, n));
    }
    let shape = (rho.kgrid.n_points(), rho.xgrid.n_points());
    let kext = rho.kgrid.extent();
    let xext = rho.xgrid.extent();
    // Spectral derivatives of every component.
    let mut drho_k = Vec::with_capacity(n * n);
    let mut drho_x = Vec::with_capacity(n * n);
    for f in &rho.fields {
        drho_k.push(spectral_derivative(f, Axis(0), kext));
        drho_x.push(spectral_derivative(f, Axis(1), xext));
    }
    let pref = C64::new(0.0, std::f64::consts::TAU / h.value());
    let mut out = vec![Array2::<C64>::zeros(shape); n * n];
    for i in 0..n {
        for j in 0..n {
            let acc = &mut out[i * n + j];
            for k in 0..n {
                let h_ik = ham.value(i, k);
                let h_kj = ham.value(k, j);
                let r_kj = &rho.fields[k * n + j];
                let r_ik = &rho.fields[i * n + k];
                let dk_h_ik = ham.grad_k(i, k);
                let dk_h_kj = ham.grad_k(k, j);
                let dx_h_ik = ham.grad_x(i, k);
                let dx_h_kj = ham.grad_x(k, j);
                let dx_r_kj = &drho_x[k * n + j];
                let dx_r_ik = &drho_x[i * n + k];
                let dk_r_kj = &drho_k[k * n + j];
                let dk_r_ik = &drho_k[i * n + k];
                for (idx, a) in acc.indexed_iter_mut() {
                    let comm = h_ik[idx] * r_kj[idx] - r_ik[idx] * h_kj[idx];
                    let coupling = 0.5
                        * (dk_h_ik[idx] * dx_r_kj[idx] + dx_r_ik[idx] * dk_h_kj[idx]
                            - dk_r_ik[idx] * dx_h_kj[idx]
                            - dx_h_ik[idx] * dk_r_kj[idx]);
                    *a += pref * comm - coupling;
                }
            }
        }
    }
    MixedDensity::new(n, rho.kgrid, rho.xgrid, out)
}

/// Unit-norm amplitudes plus one classical phase point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub amplitudes: Vec<C64>,
    pub kc: f64,
    pub xc: f64,
}

impl MeanFieldState {
    pub fn new(amplitudes: Vec<C64>, kc: f64, xc: f64) -> Self {
        Self { amplitudes, kc, xc }
    }

    /// Basis state `|index⟩` at the classical point.
    pub fn basis(n_states: usize, index: usize, kc: f64, xc: f64) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); n_states];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes, kc, xc }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Normalized weight matrix `w_ij = conj(c_i) c_j / Σ|c|²`.
    fn weights(&self) -> Array2<C64> {
        let n = self.amplitudes.len();
        let norm = self.norm_sqr();
        let mut w = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                w[[i, j]] = self.amplitudes[i].conj() * self.amplitudes[j] / norm;
            }
        }
        w
    }

    /// Normalized quantum populations.
    pub fn populations(&self) -> Vec<f64> {
        let norm = self.norm_sqr();
        self.amplitudes.iter().map(|c| c.norm_sqr() / norm).collect()
    }

    /// Normalized energy `⟨H(k', x')⟩`.
    pub fn energy(&self, ham: &HamiltonianSpec) -> f64 {
        let hm = ham.eval(self.kc, self.xc);
        let w = self.weights();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.amplitudes.len() {
            for j in 0..self.amplitudes.len() {
                acc += w[[i, j]] * hm[[i, j]];
            }
        }
        acc.re
    }
}

/// Mean-field right-hand side: `ċ = −(2πi/h) H(k', x') c`, classical pair
/// driven by the gradients of the normalized expectation `⟨H⟩`.
pub fn mf_rhs(
    state: &MeanFieldState,
    ham: &HamiltonianSpec,
    h: PlanckConstant,
) -> Result<MeanFieldState, DynamicsError> {
    let n = ham.n_states();
    if state.amplitudes.len() != n {
        return Err(DynamicsError::StateShapeMismatch(state.amplitudes.len(), n));
    }
    let hm = ham.eval(state.kc, state.xc);
    let pref = C64::new(0.0, -std::f64::consts::TAU / h.value());
    let mut dc = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            acc += hm[[i, j]] * state.amplitudes[j];
        }
        dc[i] = pref * acc;
    }
    let (gk, gx) = ham.eval_gradient(state.kc, state.xc);
    let w = state.weights();
    let mut mean_gk = C64::new(0.0, 0.0);
    let mut mean_gx = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            mean_gk += w[[i, j]] * gk[[i, j]];
            mean_gx += w[[i, j]] * gx[[i, j]];
        }
    }
    Ok(MeanFieldState { amplitudes: dc, kc: -mean_gx.re, xc: mean_gk.re })
}

/// Quantum density matrix plus symmetric matrices of per-configuration
/// classical momenta and positions.
#[derive(Debug, Clone, PartialEq)]
pub struct McmfState {
    pub varrho: Array2<C64>,
    pub kc: Array2<f64>,
    pub xc: Array2<f64>,
}

impl McmfState {
    /// Pure basis state with every configuration at the same phase point.
    pub fn basis(n_states: usize, index: usize, kc: f64, xc: f64) -> Self {
        let mut varrho = Array2::zeros((n_states, n_states));
        varrho[[index, index]] = C64::new(1.0, 0.0);
        Self {
            varrho,
            kc: Array2::from_elem((n_states, n_states), kc),
            xc: Array2::from_elem((n_states, n_states), xc),
        }
    }

    pub fn n_states(&self) -> usize {
        self.varrho.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.varrho.diag().iter().map(|v| v.re).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        let tr = self.trace();
        self.varrho.diag().iter().map(|v| v.re / tr).collect()
    }

    fn symmetry_defect(&self) -> f64 {
        let n = self.n_states();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst
                    .max((self.kc[[i, j]] - self.kc[[j, i]]).abs())
                    .max((self.xc[[i, j]] - self.xc[[j, i]]).abs());
            }
        }
        worst
    }

    /// Trace-normalized energy with each entry evaluated at its own pair.
    pub fn energy(&self, ham: &HamiltonianSpec) -> f64 {
        let n = self.n_states();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let hj = ham
                    .entry(j, i)
                    .evaluate_classical(self.kc[[j, i]], self.xc[[j, i]])
                    .expect("point length");
                acc += self.varrho[[i, j]] * hj;
            }
        }
        acc.re / self.trace()
    }

    /// Population-weighted mean of the diagonal phase points.
    pub fn classical_mean(&self) -> (f64, f64) {
        let pops = self.populations();
        let mut mk = 0.0;
        let mut mx = 0.0;
        for (i, p) in pops.iter().enumerate() {
            mk += p * self.kc[[i, i]];
            mx += p * self.xc[[i, i]];
        }
        (mk, mx)
    }
}

/// Multiconfiguration mean-field right-hand side.
///
/// Quantum part: `(2πi/h) Σ_k [H_ik(p_ik) ϱ_kj − ϱ_ik H_kj(p_kj)]` with
/// each Hamiltonian entry at its own configuration point. Diagonal
/// trajectories follow `k̇'_ii = −Re Σ_k ∂H_ki/∂x'(p_ki)`,
/// `ẋ'_ii = +Re Σ_k ∂H_ki/∂k'(p_ki)`; off-diagonal trajectories move with
/// the average of the two diagonals, which keeps the matrices symmetric.
pub fn mcmf_rhs(
    state: &McmfState,
    ham: &HamiltonianSpec,
    h: PlanckConstant,
) -> Result<McmfState, DynamicsError> {
    let n = ham.n_states();
    if state.n_states() != n {
        return Err(DynamicsError::StateShapeMismatch(state.n_states(), n));
    }
    let defect = state.symmetry_defect();
    if defect > 1e-12 {
        return Err(DynamicsError::AsymmetricConfiguration(defect));
    }
    let ck = PhaseVar::momentum(Sector::Classical, 0);
    let cx = PhaseVar::position(Sector::Classical, 0);
    // Hamiltonian entries at their own configuration points.
    let mut hval = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            hval[[i, j]] = ham
                .entry(i, j)
                .evaluate_classical(state.kc[[i, j]], state.xc[[i, j]])
                .expect("point length");
        }
    }
    let pref = C64::new(0.0, std::f64::consts::TAU / h.value());
    let mut dvarrho = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += hval[[i, k]] * state.varrho[[k, j]] - state.varrho[[i, k]] * hval[[k, j]];
            }
            dvarrho[[i, j]] = pref * acc;
        }
    }
    // Diagonal classical rates.
    let mut dk_diag = vec![0.0f64; n];
    let mut dx_diag = vec![0.0f64; n];
    for i in 0..n {
        let mut fx = C64::new(0.0, 0.0);
        let mut fk = C64::new(0.0, 0.0);
        for k in 0..n {
            let p = (state.kc[[k, i]], state.xc[[k, i]]);
            fx += ham
                .derivative(k, i, cx)
                .evaluate_classical(p.0, p.1)
                .expect("point length");
            fk += ham
                .derivative(k, i, ck)
                .evaluate_classical(p.0, p.1)
                .expect("point length");
        }
        dk_diag[i] = -fx.re;
        dx_diag[i] = fk.re;
    }
    let mut dkc = Array2::zeros((n, n));
    let mut dxc = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            dkc[[i, j]] = (dk_diag[i] + dk_diag[j]) / 2.0;
            dxc[[i, j]] = (dx_diag[i] + dx_diag[j]) / 2.0;
        }
    }
    Ok(McmfState { varrho: dvarrho, kc: dkc, xc: dxc })
}

/// Scalar update `y + (dt/6)(k1 + 2k2 + 2k3 + k4)`, shared by every state
/// type so that reductions between schemes reproduce bit for bit.
#[inline]
pub fn rk4_scalar_f64(y: f64, k1: f64, k2: f64, k3: f64, k4: f64, dt: f64) -> f64 {
    y + (dt / 6.0) * (((k1 + 2.0 * k2) + 2.0 * k3) + k4)
}

#[inline]
pub fn rk4_scalar_c64(y: C64, k1: C64, k2: C64, k3: C64, k4: C64, dt: f64) -> C64 {
    C64::new(
        rk4_scalar_f64(y.re, k1.re, k2.re, k3.re, k4.re, dt),
        rk4_scalar_f64(y.im, k1.im, k2.im, k3.im, k4.im, dt),
    )
}

/// State algebra needed by the Runge-Kutta stepper.
pub trait Rk4State: Clone {
    /// `self + a·k` (componentwise; used for the stage states).
    fn add_scaled(&self, k: &Self, a: f64) -> Self;
    /// Classical fourth-order combination of the four stage slopes.
    fn rk4_combine(&self, k1: &Self, k2: &Self, k3: &Self, k4: &Self, dt: f64) -> Self;
    fn all_finite(&self) -> bool;
}

#[inline]
fn axpy_c64(y: C64, k: C64, a: f64) -> C64 {
    C64::new(y.re + a * k.re, y.im + a * k.im)
}

impl Rk4State for MeanFieldState {
    fn add_scaled(&self, k: &Self, a: f64) -> Self {
        Self {
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&k.amplitudes)
                .map(|(&y, &s)| axpy_c64(y, s, a))
                .collect(),
            kc: self.kc + a * k.kc,
            xc: self.xc + a * k.xc,
        }
    }

    fn rk4_combine(&self, k1: &Self, k2: &Self, k3: &Self, k4: &Self, dt: f64) -> Self {
        Self {
            amplitudes: (0..self.amplitudes.len())
                .map(|i| {
                    rk4_scalar_c64(
                        self.amplitudes[i],
                        k1.amplitudes[i],
                        k2.amplitudes[i],
                        k3.amplitudes[i],
                        k4.amplitudes[i],
                        dt,
                    )
                })
                .collect(),
            kc: rk4_scalar_f64(self.kc, k1.kc, k2.kc, k3.kc, k4.kc, dt),
            xc: rk4_scalar_f64(self.xc, k1.xc, k2.xc, k3.xc, k4.xc, dt),
        }
    }

    fn all_finite(&self) -> bool {
        self.amplitudes.iter().all(|c| c.re.is_finite() && c.im.is_finite())
            && self.kc.is_finite()
            && self.xc.is_finite()
    }
}

impl Rk4State for McmfState {
    fn add_scaled(&self, k: &Self, a: f64) -> Self {
        Self {
            varrho: ndarray::Zip::from(&self.varrho)
                .and(&k.varrho)
                .map_collect(|&y, &s| axpy_c64(y, s, a)),
            kc: ndarray::Zip::from(&self.kc).and(&k.kc).map_collect(|&y, &s| y + a * s),
            xc: ndarray::Zip::from(&self.xc).and(&k.xc).map_collect(|&y, &s| y + a * s),
        }
    }

    fn rk4_combine(&self, k1: &Self, k2: &Self, k3: &Self, k4: &Self, dt: f64) -> Self {
        let n = self.n_states();
        let mut varrho = self.varrho.clone();
        let mut kc = self.kc.clone();
        let mut xc = self.xc.clone();
        for i in 0..n {
            for j in 0..n {
                varrho[[i, j]] = rk4_scalar_c64(
                    self.varrho[[i, j]],
                    k1.varrho[[i, j]],
                    k2.varrho[[i, j]],
                    k3.varrho[[i, j]],
                    k4.varrho[[i, j]],
                    dt,
                );
                kc[[i, j]] = rk4_scalar_f64(
                    self.kc[[i, j]],
                    k1.kc[[i, j]],
                    k2.kc[[i, j]],
                    k3.kc[[i, j]],
                    k4.kc[[i, j]],
                    dt,
                );
                xc[[i, j]] = rk4_scalar_f64(
                    self.xc[[i, j]],
                    k1.xc[[i, j]],
                    k2.xc[[i, j]],
                    k3.xc[[i, j]],
                    k4.xc[[i, j]],
                    dt,
                );
            }
        }
        Self { varrho, kc, xc }
    }

    fn all_finite(&self) -> bool {
        self.varrho.iter().all(|c| c.re.is_finite() && c.im.is_finite())
            && self.kc.iter().all(|v| v.is_finite())
            && self.xc.iter().all(|v| v.is_finite())
    }
}

impl Rk4State for MixedDensity {
    fn add_scaled(&self, k: &Self, a: f64) -> Self {
        let fields = self
            .fields
            .iter()
            .zip(&k.fields)
            .map(|(y, s)| {
                ndarray::Zip::from(y).and(s).map_collect(|&yv, &sv| axpy_c64(yv, sv, a))
            })
            .collect();
        Self { n_states: self.n_states, kgrid: self.kgrid, xgrid: self.xgrid, fields }
    }

    fn rk4_combine(&self, k1: &Self, k2: &Self, k3: &Self, k4: &Self, dt: f64) -> Self {
        let mut fields = Vec::with_capacity(self.fields.len());
        for idx in 0..self.fields.len() {
            let y = &self.fields[idx];
            let mut out = y.clone();
            for (pos, v) in out.indexed_iter_mut() {
                *v = rk4_scalar_c64(
                    y[pos],
                    k1.fields[idx][pos],
                    k2.fields[idx][pos],
                    k3.fields[idx][pos],
                    k4.fields[idx][pos],
                    dt,
                );
            }
            fields.push(out);
        }
        Self { n_states: self.n_states, kgrid: self.kgrid, xgrid: self.xgrid, fields }
    }

    fn all_finite(&self) -> bool {
        self.fields
            .iter()
            .all(|f| f.iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }
}

/// One classical fourth-order Runge-Kutta step.
pub fn step_rk4<S: Rk4State>(
    state: &S,
    mut rhs: impl FnMut(&S) -> Result<S, DynamicsError>,
    dt: f64,
) -> Result<S, DynamicsError> {
    let half = dt / 2.0;
    let k1 = rhs(state)?;
    let k2 = rhs(&state.add_scaled(&k1, half))?;
    let k3 = rhs(&state.add_scaled(&k2, half))?;
    let k4 = rhs(&state.add_scaled(&k3, dt))?;
    Ok(state.rk4_combine(&k1, &k2, &k3, &k4, dt))
}

/// Fixed-step propagation with per-step observation. The observer runs on
/// the initial state (step 0) and after every step; invariants are never
/// restored silently. Aborts with the step index if the state leaves the
/// finite range.
pub fn propagate<S: Rk4State>(
    state: &S,
    mut rhs: impl FnMut(&S) -> Result<S, DynamicsError>,
    dt: f64,
    n_steps: usize,
    mut observe: impl FnMut(usize, &S),
) -> Result<S, DynamicsError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(DynamicsError::BadTimeStep(dt));
    }
    let mut current = state.clone();
    observe(0, &current);
    for step in 1..=n_steps {
        current = step_rk4(&current, &mut rhs, dt)?;
        if !current.all_finite() {
            return Err(DynamicsError::Instability { step });
        }
        observe(step, &current);
    }
    Ok(current)
}

/// Per-step scalar observables shared by all schemes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Observables {
    pub time: f64,
    /// Raw conserved quantity: quadrature trace (full equation), amplitude
    /// norm (mean field) or density-matrix trace (multiconfiguration).
    pub trace: f64,
    pub energy: f64,
    pub populations: Vec<f64>,
    pub mean_k: f64,
    pub mean_x: f64,
    pub var_k: f64,
    pub var_x: f64,
}

pub fn observe_lvn(time: f64, rho: &MixedDensity, ham: &HamiltonianGrid) -> Observables {
    let trace = rho.trace();
    let ((mk, mx), (vk, vx)) = rho.classical_moments();
    Observables {
        time,
        trace,
        energy: rho.energy(ham),
        populations: rho.populations().iter().map(|p| p / trace).collect(),
        mean_k: mk,
        mean_x: mx,
        var_k: vk,
        var_x: vx,
    }
}

pub fn observe_mf(time: f64, state: &MeanFieldState, ham: &HamiltonianSpec) -> Observables {
    Observables {
        time,
        trace: state.norm_sqr(),
        energy: state.energy(ham),
        populations: state.populations(),
        mean_k: state.kc,
        mean_x: state.xc,
        var_k: 0.0,
        var_x: 0.0,
    }
}

pub fn observe_mcmf(time: f64, state: &McmfState, ham: &HamiltonianSpec) -> Observables {
    let (mk, mx) = state.classical_mean();
    let pops = state.populations();
    let mut vk = 0.0;
    let mut vx = 0.0;
    for (i, p) in pops.iter().enumerate() {
        vk += p * (state.kc[[i, i]] - mk).powi(2);
        vx += p * (state.xc[[i, i]] - mx).powi(2);
    }
    Observables {
        time,
        trace: state.trace(),
        energy: state.energy(ham),
        populations: pops,
        mean_k: mk,
        mean_x: mx,
        var_k: vk,
        var_x: vx,
    }
}

/// Purity floor below which a mixed density is rejected as a mean-field
/// reduction candidate.
pub const PURITY_THRESHOLD: f64 = 0.9;

/// Reduce a near-product mixed density to a mean-field state: amplitudes
/// from the dominant eigenvector of the classically integrated density
/// matrix, classical point from the centroid. Errors when the quantum
/// purity `tr(M²)/tr(M)²` falls below [`PURITY_THRESHOLD`].
pub fn constrain_to_meanfield(rho: &MixedDensity) -> Result<MeanFieldState, DynamicsError> {
    let mut m = rho.integrated_matrix();
    let tr: C64 = m.diag().iter().sum();
    m.mapv_inplace(|v| v / tr);
    let m2 = m.dot(&m);
    let purity: f64 = m2.diag().iter().map(|v| v.re).sum();
    if purity < PURITY_THRESHOLD {
        return Err(DynamicsError::NotFactorizable { purity, threshold: PURITY_THRESHOLD });
    }
    let (_, vec) = dominant_eigenvector(&m, 300);
    let ((mk, mx), _) = rho.classical_moments();
    // The bra-major layout stores conj(ψ_i)ψ_j; undo the conjugation.
    Ok(MeanFieldState { amplitudes: vec.iter().map(|c| c.conj()).collect(), kc: mk, xc: mx })
}

/// Dense von Neumann right-hand side `(2πi/h)[H, ρ]` for a constant
/// Hamiltonian matrix; reference dynamics for the reduction checks.
pub fn von_neumann_rhs(rho: &Array2<C64>, hmat: &Array2<C64>, h: PlanckConstant) -> Array2<C64> {
    let pref = C64::new(0.0, std::f64::consts::TAU / h.value());
    (hmat.dot(rho) - rho.dot(hmat)).mapv(|v| v * pref)
}

/// Plain dense-matrix state for the von Neumann reference propagator.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixState(pub Array2<C64>);

impl Rk4State for MatrixState {
    fn add_scaled(&self, k: &Self, a: f64) -> Self {
        MatrixState(
            ndarray::Zip::from(&self.0).and(&k.0).map_collect(|&y, &s| axpy_c64(y, s, a)),
        )
    }

    fn rk4_combine(&self, k1: &Self, k2: &Self, k3: &Self, k4: &Self, dt: f64) -> Self {
        let mut out = self.0.clone();
        for (pos, v) in out.indexed_iter_mut() {
            *v = rk4_scalar_c64(self.0[pos], k1.0[pos], k2.0[pos], k3.0[pos], k4.0[pos], dt);
        }
        MatrixState(out)
    }

    fn all_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Helper for tests and the command line: quantum-only phase frequencies
/// of a Hamiltonian sampled at a phase point, used to pick `dt` so the
/// fastest Bohr period is resolved.
pub fn fastest_bohr_frequency(ham: &HamiltonianSpec, h: PlanckConstant, kc: f64, xc: f64) -> f64 {
    let m = ham.eval(kc, xc);
    let (vals, _) = crate::numerics::hermitian_eigen(&m);
    let spread = vals[vals.len() - 1] - vals[0];
    std::f64::consts::TAU / h.value() * spread / std::f64::consts::TAU
}

/// Time step resolving the fastest Bohr period with at least `steps_per
/// period` samples (40 by default in the interfaces).
pub fn resolved_time_step(
    ham: &HamiltonianSpec,
    h: PlanckConstant,
    kc: f64,
    xc: f64,
    steps_per_period: f64,
) -> f64 {
    let f = fastest_bohr_frequency(ham, h, kc, xc).max(1.0 / std::f64::consts::TAU);
    1.0 / (f * steps_per_period)
}
