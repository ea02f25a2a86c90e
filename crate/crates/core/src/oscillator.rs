//! Analytic coupled quantum-classical harmonic oscillator.
//!
//! One classical and one quantum oscillator coupled by a quadratic term
//! `(α/2)(x' − x)²`. The normal modes have frequencies `ω₁ = 1` and
//! `ω₂ = √(1+2α)`; each mode advances as `e^{2iω t}` in its complex
//! coordinate `z = k + ix`, and the original coordinates mix through the
//! coefficients `a(t) = (e^{2iω₁t}+e^{2iω₂t})/2`, `b(t) =
//! (e^{2iω₁t}−e^{2iω₂t})/2`. The quantum subsystem starts in a monomial
//! state `z^n` (squared norm `n!` under the holomorphic inner product) and
//! evolves into a combination of `z^k`, `k ≤ n`, so the coupling only
//! transfers population downward. This module provides the closed-form
//! solution used as the reference for the propagation schemes.

use num_complex::Complex64 as C64;

use crate::dynamics::HamiltonianSpec;
use crate::error::OscillatorError;
use crate::symbols::{PhaseVar, PlanckConstant, PolySymbol, Sector, VarContext};

/// Configuration of the coupled pair: coupling strength, initial classical
/// phase point `z' = k' + ix'`, and the initial quantum level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorConfig {
    pub alpha: f64,
    pub z0_classical: C64,
    pub n_quantum: usize,
}

impl OscillatorConfig {
    pub fn new(alpha: f64, z0_classical: C64, n_quantum: usize) -> Result<Self, OscillatorError> {
        if 1.0 + 2.0 * alpha <= 0.0 || !alpha.is_finite() {
            return Err(OscillatorError::InvalidAlpha(alpha));
        }
        Ok(Self { alpha, z0_classical, n_quantum })
    }
}

/// Mixed state of the pair: classical phase point plus amplitudes of the
/// monomials `z^k`, `k = 0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedOscState {
    pub z_classical: C64,
    pub quantum_coeffs: Vec<C64>,
}

impl MixedOscState {
    /// Distance combining the classical point and the quantum amplitude
    /// vector (global-phase sensitive).
    pub fn distance(&self, other: &MixedOscState) -> f64 {
        let dz = (self.z_classical - other.z_classical).norm();
        let dq: f64 = self
            .quantum_coeffs
            .iter()
            .zip(other.quantum_coeffs.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        dz.max(dq)
    }
}

/// Normal-mode frequencies `(1, √(1+2α))`.
pub fn normal_modes(alpha: f64) -> Result<(f64, f64), OscillatorError> {
    if 1.0 + 2.0 * alpha <= 0.0 || !alpha.is_finite() {
        return Err(OscillatorError::InvalidAlpha(alpha));
    }
    Ok((1.0, (1.0 + 2.0 * alpha).sqrt()))
}

/// Mixing coefficients `a = (e^{2iω₁t}+e^{2iω₂t})/2`,
/// `b = (e^{2iω₁t}−e^{2iω₂t})/2`; they satisfy `a+b = e^{2iω₁t}` and
/// `a−b = e^{2iω₂t}` identically.
pub fn mixing_coefficients(t: f64, alpha: f64) -> Result<(C64, C64), OscillatorError> {
    let (w1, w2) = normal_modes(alpha)?;
    let e1 = C64::new(0.0, 2.0 * w1 * t).exp();
    let e2 = C64::new(0.0, 2.0 * w2 * t).exp();
    Ok(((e1 + e2) * 0.5, (e1 - e2) * 0.5))
}

/// Closed-form state at time `t` from the initial data in `cfg`.
///
/// The classical point follows the mixing map with a vanishing quantum
/// phase point (the monomial `z^n` carries no mean displacement), so
/// `z'(t) = a(t) z'₀`. The quantum amplitudes come from the binomial
/// expansion of `(b(t) z'₀ + a(t) z)^n`, with the classical support factor
/// taken at the initial point.
pub fn evolve_state(cfg: &OscillatorConfig, t: f64) -> Result<MixedOscState, OscillatorError> {
    let (a, b) = mixing_coefficients(t, cfg.alpha)?;
    let n = cfg.n_quantum;
    let weight = b * cfg.z0_classical;
    let mut coeffs = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let binom = binomial(n, k);
        coeffs.push(a.powu(k as u32) * weight.powu((n - k) as u32) * binom);
    }
    Ok(MixedOscState { z_classical: a * cfg.z0_classical, quantum_coeffs: coeffs })
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Transition probabilities `P(n→k)`, `k = 0..n`, from the squared
/// amplitudes of [`evolve_state`] under the monomial norms `‖z^k‖² = k!`,
/// normalized to unit total.
pub fn transition_probabilities(
    cfg: &OscillatorConfig,
    t: f64,
) -> Result<Vec<f64>, OscillatorError> {
    let state = evolve_state(cfg, t)?;
    let mut weights: Vec<f64> = state
        .quantum_coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c.norm_sqr() * factorial(k))
        .collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for w in weights.iter_mut() {
            *w /= total;
        }
    }
    Ok(weights)
}

/// Common period of `e^{2iω₁t}` and `e^{2iω₂t}` when `ω₂/ω₁` is rational
/// (`p/q` in lowest terms gives `qπ`), `None` for an irrational ratio.
///
/// Rational detection by continued fractions with tolerance `1e-12`.
pub fn recurrence_time(alpha: f64) -> Result<Option<f64>, OscillatorError> {
    let (_, w2) = normal_modes(alpha)?;
    Ok(rational_approx(w2, 1e-12, 1_000_000).map(|(_, q)| q as f64 * std::f64::consts::PI))
}

/// Continued-fraction rational approximation: convergent `p/q` with
/// `|x − p/q| < tol`, or `None` before the denominator exceeds `max_den`.
fn rational_approx(x: f64, tol: f64, max_den: u64) -> Option<(u64, u64)> {
    let mut a = x.floor();
    let mut frac = x - a;
    let (mut p0, mut q0, mut p1, mut q1) = (1u64, 0u64, a as u64, 1u64);
    for _ in 0..64 {
        if (x - p1 as f64 / q1 as f64).abs() < tol {
            return Some((p1, q1));
        }
        if frac.abs() < f64::EPSILON {
            break;
        }
        let inv = 1.0 / frac;
        a = inv.floor();
        frac = inv - a;
        let p2 = (a as u64).saturating_mul(p1).saturating_add(p0);
        let q2 = (a as u64).saturating_mul(q1).saturating_add(q0);
        if q2 > max_den {
            return None;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    ((x - p1 as f64 / q1 as f64).abs() < tol).then_some((p1, q1))
}

/// Coupled Hamiltonian as a polynomial symbol over one quantum pair
/// `(x, k)` and one classical pair `(x', k')`:
/// `½(k'² + k² + x'² + x²) + (α/2)(x' − x)²`.
pub fn hamiltonian_symbol(cfg: &OscillatorConfig) -> PolySymbol {
    let ctx = VarContext::new(1, 1);
    let half = C64::new(0.5, 0.0);
    let qx = PhaseVar::position(Sector::Quantum, 0);
    let qk = PhaseVar::momentum(Sector::Quantum, 0);
    let cx = PhaseVar::position(Sector::Classical, 0);
    let ck = PhaseVar::momentum(Sector::Classical, 0);
    let alpha = cfg.alpha;
    let term = |powers: &[(PhaseVar, u16)], c: C64| PolySymbol::monomial(ctx, powers, c).unwrap();
    let mut acc = PolySymbol::zero(ctx);
    for t in [
        term(&[(ck, 2)], half),
        term(&[(qk, 2)], half),
        term(&[(cx, 2)], half + C64::new(0.5 * alpha, 0.0)),
        term(&[(qx, 2)], half + C64::new(0.5 * alpha, 0.0)),
        term(&[(cx, 1), (qx, 1)], C64::new(-alpha, 0.0)),
    ] {
        acc = acc.add(&t).unwrap();
    }
    acc
}

/// Fock-basis position matrix `x̂ = √(ħ/2)(a + a†)` at `ħ = h/2π`.
pub fn position_matrix(n_states: usize, h: PlanckConstant) -> ndarray::Array2<C64> {
    let s = (h.hbar() / 2.0).sqrt();
    let mut m = ndarray::Array2::zeros((n_states, n_states));
    for i in 0..n_states.saturating_sub(1) {
        let v = C64::new(s * ((i + 1) as f64).sqrt(), 0.0);
        m[[i, i + 1]] = v;
        m[[i + 1, i]] = v;
    }
    m
}

/// Fock-basis momentum matrix `k̂ = i√(ħ/2)(a† − a)`, so `[x̂, k̂] = iħ`.
pub fn momentum_matrix(n_states: usize, h: PlanckConstant) -> ndarray::Array2<C64> {
    let s = (h.hbar() / 2.0).sqrt();
    let mut m = ndarray::Array2::zeros((n_states, n_states));
    for i in 0..n_states.saturating_sub(1) {
        let v = s * ((i + 1) as f64).sqrt();
        m[[i, i + 1]] = C64::new(0.0, -v);
        m[[i + 1, i]] = C64::new(0.0, v);
    }
    m
}

/// Quantum-basis Hamiltonian matrix for the coupled pair, expressed in the
/// action form of the normal modes so that the first-moment flow of the
/// propagation schemes reproduces the `(a, b)` mixing map:
///
/// `H = c₊(k'² + x'² + k̂² + x̂²) + (ω₁−ω₂)(k'·k̂ + x'·x̂)`, `c₊ = (ω₁+ω₂)/2`,
///
/// truncated to `n_states` levels with `(k̂² + x̂²) = 2ħ(N̂ + ½)` kept exact
/// on the diagonal. Each mode then advances as `e^{2iωt}`, matching the
/// analytic solution; without the coupling (`α = 0`) the matrix is
/// diagonal and no transitions occur.
pub fn benchmark_hamiltonian(
    alpha: f64,
    n_states: usize,
    h: PlanckConstant,
) -> Result<HamiltonianSpec, OscillatorError> {
    let (w1, w2) = normal_modes(alpha)?;
    let cplus = 0.5 * (w1 + w2);
    let cminus = w1 - w2;
    let hbar = h.hbar();
    let ctx = VarContext::new(0, 1);
    let cx = PhaseVar::position(Sector::Classical, 0);
    let ck = PhaseVar::momentum(Sector::Classical, 0);
    let xm = position_matrix(n_states, h);
    let km = momentum_matrix(n_states, h);
    let mut entries = Vec::with_capacity(n_states * n_states);
    for i in 0..n_states {
        for j in 0..n_states {
            let mut e = PolySymbol::zero(ctx);
            if i == j {
                let quad = PolySymbol::monomial(ctx, &[(ck, 2)], C64::new(cplus, 0.0))
                    .unwrap()
                    .add(&PolySymbol::monomial(ctx, &[(cx, 2)], C64::new(cplus, 0.0)).unwrap())
                    .unwrap();
                let level = C64::new(2.0 * cplus * hbar * (i as f64 + 0.5), 0.0);
                e = e.add(&quad).unwrap().add(&PolySymbol::constant(ctx, level)).unwrap();
            }
            let kc = km[[i, j]] * cminus;
            let xc = xm[[i, j]] * cminus;
            if kc != C64::new(0.0, 0.0) {
                e = e.add(&PolySymbol::monomial(ctx, &[(ck, 1)], kc).unwrap()).unwrap();
            }
            if xc != C64::new(0.0, 0.0) {
                e = e.add(&PolySymbol::monomial(ctx, &[(cx, 1)], xc).unwrap()).unwrap();
            }
            entries.push(e);
        }
    }
    Ok(HamiltonianSpec::new(n_states, entries).expect("construction is Hermitian"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg(alpha: f64, n: usize) -> OscillatorConfig {
        OscillatorConfig::new(alpha, C64::new(0.8, -0.3), n).unwrap()
    }

    #[test]
    fn normal_mode_frequencies() {
        assert_eq!(normal_modes(0.0).unwrap(), (1.0, 1.0));
        assert_eq!(normal_modes(1.5).unwrap(), (1.0, 2.0));
        assert_eq!(normal_modes(4.0).unwrap(), (1.0, 3.0));
        assert!(normal_modes(-0.5).is_err());
        assert!(OscillatorConfig::new(-0.6, C64::new(0.0, 0.0), 0).is_err());
    }

    #[test]
    fn mixing_coefficients_identities() {
        for &alpha in &[0.0, 0.7, 1.5, 3.2] {
            let (w1, w2) = normal_modes(alpha).unwrap();
            for i in 0..20 {
                let t = 0.37 * i as f64;
                let (a, b) = mixing_coefficients(t, alpha).unwrap();
                let e1 = C64::new(0.0, 2.0 * w1 * t).exp();
                let e2 = C64::new(0.0, 2.0 * w2 * t).exp();
                assert!((a + b - e1).norm() < 1e-14);
                assert!((a - b - e2).norm() < 1e-14);
            }
        }
        let (a, b) = mixing_coefficients(0.0, 0.9).unwrap();
        assert!((a - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(b.norm() < 1e-15);
    }

    #[test]
    fn alpha_zero_never_mixes() {
        for i in 0..10 {
            let t = 0.61 * i as f64;
            let (a, b) = mixing_coefficients(t, 0.0).unwrap();
            assert!(b.norm() < 1e-15);
            assert!((a - C64::new(0.0, 2.0 * t).exp()).norm() < 1e-14);
        }
    }

    #[test]
    fn complete_swap_at_quarter_period() {
        // ω₂ = 2: e^{iπ} = −1 and e^{2iπ} = 1 make a = 0, b = −1.
        let (a, b) = mixing_coefficients(PI / 2.0, 1.5).unwrap();
        assert!(a.norm() < 1e-14);
        assert!((b + C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn evolve_state_initial_condition_and_swap() {
        let c = cfg(1.5, 1);
        let s0 = evolve_state(&c, 0.0).unwrap();
        assert!((s0.z_classical - c.z0_classical).norm() < 1e-14);
        assert!((s0.quantum_coeffs[1] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(s0.quantum_coeffs[0].norm() < 1e-14);
        // At t = π/2 the z¹ channel empties into z⁰ with weight b·z'₀.
        let s = evolve_state(&c, PI / 2.0).unwrap();
        assert!(s.quantum_coeffs[1].norm() < 1e-14);
        assert!((s.quantum_coeffs[0] + c.z0_classical).norm() < 1e-13);
    }

    #[test]
    fn alpha_zero_keeps_pure_state_up_to_phase() {
        let c = cfg(0.0, 3);
        let s = evolve_state(&c, 0.83).unwrap();
        assert!((s.z_classical - C64::new(0.0, 2.0 * 0.83).exp() * c.z0_classical).norm() < 1e-13);
        for k in 0..3 {
            assert!(s.quantum_coeffs[k].norm() < 1e-15);
        }
        assert!((s.quantum_coeffs[3].norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn probabilities_normalize_and_only_decrease() {
        for &alpha in &[0.0, 1.5, 0.4] {
            let c = cfg(alpha, 4);
            for i in 0..12 {
                let t = 0.29 * i as f64;
                let p = transition_probabilities(&c, t).unwrap();
                assert_eq!(p.len(), 5, "no channels above the initial level");
                let total: f64 = p.iter().sum();
                assert!((total - 1.0).abs() < 1e-12, "total {total}");
                assert!(p.iter().all(|&w| w >= 0.0));
            }
        }
        let p0 = transition_probabilities(&cfg(1.5, 4), 0.0).unwrap();
        assert!((p0[4] - 1.0).abs() < 1e-14);
        let pz = transition_probabilities(&cfg(0.0, 4), 1.3).unwrap();
        assert!((pz[4] - 1.0).abs() < 1e-14, "no transitions without coupling");
    }

    #[test]
    fn recurrence_times() {
        assert!((recurrence_time(1.5).unwrap().unwrap() - PI).abs() < 1e-12);
        assert!((recurrence_time(0.0).unwrap().unwrap() - PI).abs() < 1e-12);
        assert!((recurrence_time(4.0).unwrap().unwrap() - PI).abs() < 1e-12);
        // ω₂ = √2 is irrational.
        assert!(recurrence_time(0.5).unwrap().is_none());
        // ω₂ = 3/2 needs two base periods.
        let alpha = (2.25 - 1.0) / 2.0;
        assert!((recurrence_time(alpha).unwrap().unwrap() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn state_returns_at_recurrence() {
        let c = cfg(1.5, 3);
        let t = recurrence_time(1.5).unwrap().unwrap();
        let s = evolve_state(&c, t).unwrap();
        let s0 = evolve_state(&c, 0.0).unwrap();
        assert!(s.distance(&s0) < 1e-10, "distance {:.3e}", s.distance(&s0));
    }

    #[test]
    fn hamiltonian_symbol_expansion() {
        let ctx = VarContext::new(1, 1);
        let c = cfg(1.0, 0);
        let hs = hamiltonian_symbol(&c);
        // α = 1: the cross term αx'x enters with coefficient −1.
        let cx = PhaseVar::position(Sector::Classical, 0);
        let qx = PhaseVar::position(Sector::Quantum, 0);
        let cross = PolySymbol::monomial(ctx, &[(cx, 1), (qx, 1)], C64::new(1.0, 0.0)).unwrap();
        let mut exp = vec![0u16; ctx.n_vars()];
        for (e, _) in cross.terms() {
            exp = e.to_vec();
        }
        assert_eq!(hs.coeff(&exp), C64::new(-1.0, 0.0));
        // Symmetric under exchanging the quantum and classical pairs.
        for (e, coef) in hs.terms() {
            let swapped = vec![e[2], e[3], e[0], e[1]];
            assert_eq!(hs.coeff(&swapped), coef, "asymmetry at {e:?}");
        }
        // α = 0 leaves two uncoupled oscillators.
        let h0 = hamiltonian_symbol(&cfg(0.0, 0));
        assert_eq!(h0.coeff(&exp), C64::new(0.0, 0.0));
        assert_eq!(h0.n_terms(), 4);
    }

    #[test]
    fn ladder_matrices_satisfy_commutator() {
        let h = PlanckConstant::new(std::f64::consts::TAU).unwrap();
        let n = 8;
        let x = position_matrix(n, h);
        let k = momentum_matrix(n, h);
        let comm = x.dot(&k) - k.dot(&x);
        // [x̂, k̂] = iħ away from the truncation corner.
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let expect = if i == j { C64::new(0.0, h.hbar()) } else { C64::new(0.0, 0.0) };
                assert!((comm[[i, j]] - expect).norm() < 1e-12, "entry {i},{j}");
            }
        }
    }
}
