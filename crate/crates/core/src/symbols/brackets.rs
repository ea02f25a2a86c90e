//! Poisson, Moyal and quantum-classical brackets on polynomial symbols.
//!
//! The quantum star product is normalized so that for one conjugate pair
//! `x ⋆ k = xk - ih/4π`, which makes `(2πi/h)(σ⋆τ - τ⋆σ)` tend to the
//! Poisson bracket `{σ,τ}` (with `{x,k} = +1`) as `h → 0`. For polynomial
//! symbols every series below terminates and the results are exact.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use super::{PlanckConstant, PolySymbol, Sector, VarContext};
use crate::error::SymbolError;

/// Which conjugate pairs a Poisson bracket sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectorFilter {
    Quantum,
    Classical,
    Both,
}

/// (position slot, momentum slot) for every pair in the selected sectors.
fn pair_slots(ctx: VarContext, filter: SectorFilter) -> Vec<(usize, usize)> {
    let nq = ctx.quantum_pairs;
    let nc = ctx.classical_pairs;
    let mut out = Vec::new();
    if matches!(filter, SectorFilter::Quantum | SectorFilter::Both) {
        for i in 0..nq {
            out.push((i, nq + i));
        }
    }
    if matches!(filter, SectorFilter::Classical | SectorFilter::Both) {
        for i in 0..nc {
            out.push((2 * nq + i, 2 * nq + nc + i));
        }
    }
    out
}

/// Repeated partial derivative given per-slot orders.
fn derive_multi(p: &PolySymbol, orders: &[u16]) -> PolySymbol {
    let ctx = p.context();
    let mut terms: Vec<(Vec<u16>, C64)> = Vec::new();
    'term: for (e, c) in p.terms() {
        let mut factor = 1.0f64;
        let mut ne = e.to_vec();
        for (slot, (&have, &want)) in e.iter().zip(orders).enumerate() {
            if have < want {
                continue 'term;
            }
            for step in 0..want {
                factor *= (have - step) as f64;
            }
            ne[slot] = have - want;
        }
        terms.push((ne, c * factor));
    }
    let mut acc = PolySymbol::zero(ctx);
    for (e, c) in terms {
        let ctx_vars = ctx;
        let mono = PolySymbol::monomial(
            ctx_vars,
            &e.iter()
                .enumerate()
                .filter(|(_, &x)| x > 0)
                .map(|(slot, &x)| (ctx.var_at(slot), x))
                .collect::<Vec<_>>(),
            c,
        )
        .expect("slots come from the same context");
        acc = acc.add(&mono).expect("same context");
    }
    acc
}

/// Maximum total degree in the quantum variables.
fn quantum_degree(p: &PolySymbol) -> usize {
    let ctx = p.context();
    let nq = ctx.quantum_pairs;
    p.terms()
        .map(|(e, _)| e[..2 * nq].iter().map(|&x| x as usize).sum())
        .max()
        .unwrap_or(0)
}

/// Derivative allocation on the (left, right) factors with an integer weight.
type Level = BTreeMap<(Vec<u16>, Vec<u16>), f64>;

fn initial_level(ctx: VarContext) -> Level {
    let mut m = BTreeMap::new();
    m.insert((vec![0; ctx.n_vars()], vec![0; ctx.n_vars()]), 1.0);
    m
}

/// One application of the Poisson bidifferential
/// `Σ_p (∂_{x_p} ⊗ ∂_{k_p} - ∂_{k_p} ⊗ ∂_{x_p})` over the given pairs.
fn apply_poisson_bidiff(level: &Level, pairs: &[(usize, usize)]) -> Level {
    let mut next: Level = BTreeMap::new();
    let mut bump = |da: &[u16], db: &[u16], sa: usize, sb: usize, w: f64| {
        let mut na = da.to_vec();
        let mut nb = db.to_vec();
        na[sa] += 1;
        nb[sb] += 1;
        *next.entry((na, nb)).or_insert(0.0) += w;
    };
    for ((da, db), &w) in level {
        for &(xs, ks) in pairs {
            bump(da, db, xs, ks, w);
            bump(da, db, ks, xs, -w);
        }
    }
    next.retain(|_, w| *w != 0.0);
    next
}

/// One application of the one-sided bidifferential `Σ_p ∂_{k_p} ⊗ ∂_{x_p}`.
fn apply_kn_bidiff(level: &Level, pairs: &[(usize, usize)]) -> Level {
    let mut next: Level = BTreeMap::new();
    for ((da, db), &w) in level {
        for &(xs, ks) in pairs {
            let mut na = da.clone();
            let mut nb = db.clone();
            na[ks] += 1;
            nb[xs] += 1;
            *next.entry((na, nb)).or_insert(0.0) += w;
        }
    }
    next
}

/// `Σ entries w · (∂^a σ)(∂^b τ)`, with `1/j!` folded by the caller.
fn level_sum(level: &Level, sigma: &PolySymbol, tau: &PolySymbol) -> PolySymbol {
    let mut acc = PolySymbol::zero(sigma.context());
    for ((da, db), &w) in level {
        let prod = derive_multi(sigma, da)
            .mul(&derive_multi(tau, db))
            .expect("same context");
        acc = acc.add(&prod.scale(C64::new(w, 0.0))).expect("same context");
    }
    acc
}

/// Antisymmetry-exact assembly of odd levels: the level map pairs each
/// allocation `(a, b)` with `(b, a)` at opposite weight, and each pair is
/// folded as one subtraction so swapping the arguments negates every
/// coefficient bit for bit.
fn level_sum_grouped(level: &Level, sigma: &PolySymbol, tau: &PolySymbol) -> PolySymbol {
    let mut acc = PolySymbol::zero(sigma.context());
    for ((da, db), &w) in level {
        if da >= db {
            continue;
        }
        let fwd = derive_multi(sigma, da).mul(&derive_multi(tau, db)).expect("same context");
        let rev = derive_multi(sigma, db).mul(&derive_multi(tau, da)).expect("same context");
        let diff = fwd.sub(&rev).expect("same context");
        acc = acc.add(&diff.scale(C64::new(w, 0.0))).expect("same context");
    }
    acc
}

/// Poisson bracket `Σ_p ∂σ/∂x_p ∂τ/∂k_p − ∂σ/∂k_p ∂τ/∂x_p` over the
/// pairs selected by `filter`; the convention is `{x, k} = +1`.
pub fn poisson_bracket(
    sigma: &PolySymbol,
    tau: &PolySymbol,
    filter: SectorFilter,
) -> Result<PolySymbol, SymbolError> {
    if sigma.context() != tau.context() {
        return Err(SymbolError::ContextMismatch(sigma.context(), tau.context()));
    }
    let ctx = sigma.context();
    let mut acc = PolySymbol::zero(ctx);
    for (xs, ks) in pair_slots(ctx, filter) {
        let mut ox = vec![0u16; ctx.n_vars()];
        let mut ok = vec![0u16; ctx.n_vars()];
        ox[xs] = 1;
        ok[ks] = 1;
        let t1 = derive_multi(sigma, &ox).mul(&derive_multi(tau, &ok))?;
        let t2 = derive_multi(sigma, &ok).mul(&derive_multi(tau, &ox))?;
        acc = acc.add(&t1.sub(&t2)?)?;
    }
    Ok(acc)
}

/// The `j`-th order term of the star expansion: `P^j(σ,τ)/j!` where `P` is
/// the quantum-sector Poisson bidifferential. The full product is
/// `σ⋆τ = Σ_j (−ih/4π)^j · star_order_term(σ,τ,j)`.
pub fn star_order_term(
    sigma: &PolySymbol,
    tau: &PolySymbol,
    j: usize,
) -> Result<PolySymbol, SymbolError> {
    if sigma.context() != tau.context() {
        return Err(SymbolError::ContextMismatch(sigma.context(), tau.context()));
    }
    let ctx = sigma.context();
    let pairs = pair_slots(ctx, SectorFilter::Quantum);
    let mut level = initial_level(ctx);
    let mut fact = 1.0;
    for step in 0..j {
        level = apply_poisson_bidiff(&level, &pairs);
        fact *= (step + 1) as f64;
    }
    Ok(level_sum(&level, sigma, tau).scale(C64::new(1.0 / fact, 0.0)))
}

/// Weyl-ordered star product in the quantum variables; classical variables
/// multiply pointwise. The series terminates for polynomials, so the
/// result is exact.
pub fn moyal_star(
    sigma: &PolySymbol,
    tau: &PolySymbol,
    h: PlanckConstant,
) -> Result<PolySymbol, SymbolError> {
    if sigma.context() != tau.context() {
        return Err(SymbolError::ContextMismatch(sigma.context(), tau.context()));
    }
    let ctx = sigma.context();
    let pairs = pair_slots(ctx, SectorFilter::Quantum);
    let j_max = quantum_degree(sigma).min(quantum_degree(tau));
    let unit = C64::new(0.0, -h.value() / (4.0 * std::f64::consts::PI));
    let mut acc = PolySymbol::zero(ctx);
    let mut level = initial_level(ctx);
    let mut coef = C64::new(1.0, 0.0);
    for j in 0..=j_max {
        if j > 0 {
            level = apply_poisson_bidiff(&level, &pairs);
            coef = coef * unit / (j as f64);
            if level.is_empty() {
                break;
            }
        }
        acc = acc.add(&level_sum(&level, sigma, tau).scale(coef))?;
    }
    Ok(acc)
}

/// Moyal commutator `σ⋆τ − τ⋆σ`, assembled from the odd star orders only
/// (the even orders cancel identically). Antisymmetric bit for bit;
/// `[σ,σ]` is exactly zero.
pub fn moyal_commutator(
    sigma: &PolySymbol,
    tau: &PolySymbol,
    h: PlanckConstant,
) -> Result<PolySymbol, SymbolError> {
    if sigma.context() != tau.context() {
        return Err(SymbolError::ContextMismatch(sigma.context(), tau.context()));
    }
    if sigma == tau {
        return Ok(PolySymbol::zero(sigma.context()));
    }
    let ctx = sigma.context();
    let pairs = pair_slots(ctx, SectorFilter::Quantum);
    let j_max = quantum_degree(sigma).min(quantum_degree(tau));
    let unit = C64::new(0.0, -h.value() / (4.0 * std::f64::consts::PI));
    let mut acc = PolySymbol::zero(ctx);
    let mut level = initial_level(ctx);
    let mut coef = C64::new(1.0, 0.0);
    for j in 1..=j_max {
        level = apply_poisson_bidiff(&level, &pairs);
        coef = coef * unit / (j as f64);
        if level.is_empty() {
            break;
        }
        if j % 2 == 1 {
            let term = level_sum_grouped(&level, sigma, tau);
            acc = acc.add(&term.scale(coef * 2.0))?;
        }
    }
    Ok(acc)
}

/// Classical-derivative coupling `Σ_c [∂σ/∂k'_c ⋆ ∂τ/∂x'_c − ∂τ/∂k'_c ⋆ ∂σ/∂x'_c]`
/// with Weyl-ordered composition of the derivative factors.
fn classical_coupling(
    sigma: &PolySymbol,
    tau: &PolySymbol,
    h: PlanckConstant,
) -> Result<PolySymbol, SymbolError> {
    let ctx = sigma.context();
    let mut acc = PolySymbol::zero(ctx);
    for (xs, ks) in pair_slots(ctx, SectorFilter::Classical) {
        let dk_sigma = derive_multi(sigma, &slot_order(ctx, ks));
        let dx_sigma = derive_multi(sigma, &slot_order(ctx, xs));
        let dk_tau = derive_multi(tau, &slot_order(ctx, ks));
        let dx_tau = derive_multi(tau, &slot_order(ctx, xs));
        let fwd = moyal_star(&dk_sigma, &dx_tau, h)?;
        let rev = moyal_star(&dk_tau, &dx_sigma, h)?;
        acc = acc.add(&fwd.sub(&rev)?)?;
    }
    Ok(acc)
}

fn slot_order(ctx: VarContext, slot: usize) -> Vec<u16> {
    let mut o = vec![0u16; ctx.n_vars()];
    o[slot] = 1;
    o
}

/// Quantum-classical bracket: the Moyal commutator plus `(ih/2π)` times the
/// classical-derivative coupling. Reduces exactly to the Moyal commutator
/// on classical-free symbols and to `(ih/2π) {σ,τ}` on quantum-free ones.
pub fn qc_bracket(
    sigma: &PolySymbol,
    tau: &PolySymbol,
    h: PlanckConstant,
) -> Result<PolySymbol, SymbolError> {
    if sigma.context() != tau.context() {
        return Err(SymbolError::ContextMismatch(sigma.context(), tau.context()));
    }
    if sigma == tau {
        return Ok(PolySymbol::zero(sigma.context()));
    }
    let comm = moyal_commutator(sigma, tau, h)?;
    let coupling = classical_coupling(sigma, tau, h)?;
    let pref = C64::new(0.0, h.value() / std::f64::consts::TAU);
    comm.add(&coupling.scale(pref))
}

/// Kohn-Nirenberg star product: one-sided derivatives, momentum factors on
/// the right, normalized so `[x,k]` agrees with the Weyl commutator on
/// degree-one symbols.
fn kn_star(
    sigma: &PolySymbol,
    tau: &PolySymbol,
    h: PlanckConstant,
) -> Result<PolySymbol, SymbolError> {
    if sigma.context() != tau.context() {
        return Err(SymbolError::ContextMismatch(sigma.context(), tau.context()));
    }
    let ctx = sigma.context();
    let pairs = pair_slots(ctx, SectorFilter::Quantum);
    let j_max = quantum_degree(sigma).min(quantum_degree(tau));
    let unit = C64::new(0.0, h.value() / std::f64::consts::TAU);
    let mut acc = PolySymbol::zero(ctx);
    let mut level = initial_level(ctx);
    let mut coef = C64::new(1.0, 0.0);
    for j in 0..=j_max {
        if j > 0 {
            level = apply_kn_bidiff(&level, &pairs);
            coef = coef * unit / (j as f64);
            if level.is_empty() {
                break;
            }
        }
        acc = acc.add(&level_sum(&level, sigma, tau).scale(coef))?;
    }
    Ok(acc)
}

/// Classical coupling with Kohn-Nirenberg-ordered derivative factors.
fn classical_coupling_kn(
    sigma: &PolySymbol,
    tau: &PolySymbol,
    h: PlanckConstant,
) -> Result<PolySymbol, SymbolError> {
    let ctx = sigma.context();
    let mut acc = PolySymbol::zero(ctx);
    for (xs, ks) in pair_slots(ctx, SectorFilter::Classical) {
        let dk_sigma = derive_multi(sigma, &slot_order(ctx, ks));
        let dx_sigma = derive_multi(sigma, &slot_order(ctx, xs));
        let dk_tau = derive_multi(tau, &slot_order(ctx, ks));
        let dx_tau = derive_multi(tau, &slot_order(ctx, xs));
        let fwd = kn_star(&dk_sigma, &dx_tau, h)?;
        let rev = kn_star(&dk_tau, &dx_sigma, h)?;
        acc = acc.add(&fwd.sub(&rev)?)?;
    }
    Ok(acc)
}

/// Quantum-classical bracket in the Kohn-Nirenberg ordering. Agrees with
/// [`qc_bracket`] at leading order in `h` and exactly on degree-one or
/// purely classical symbols.
pub fn qc_bracket_kn(
    sigma: &PolySymbol,
    tau: &PolySymbol,
    h: PlanckConstant,
) -> Result<PolySymbol, SymbolError> {
    if sigma.context() != tau.context() {
        return Err(SymbolError::ContextMismatch(sigma.context(), tau.context()));
    }
    if sigma == tau {
        return Ok(PolySymbol::zero(sigma.context()));
    }
    let comm = kn_star(sigma, tau, h)?.sub(&kn_star(tau, sigma, h)?)?;
    let coupling = classical_coupling_kn(sigma, tau, h)?;
    let pref = C64::new(0.0, h.value() / std::f64::consts::TAU);
    comm.add(&coupling.scale(pref))
}

/// `qc_bracket` expanded by powers of `h`: returns `(power, coefficient
/// polynomial)` pairs so that the bracket equals `Σ h^power · poly`.
///
/// The leading entry has power 1, and `2πi` times its polynomial is the
/// full quantum-plus-classical Poisson bracket.
pub fn qc_bracket_h_series(
    sigma: &PolySymbol,
    tau: &PolySymbol,
) -> Result<Vec<(u32, PolySymbol)>, SymbolError> {
    if sigma.context() != tau.context() {
        return Err(SymbolError::ContextMismatch(sigma.context(), tau.context()));
    }
    let ctx = sigma.context();
    let qpairs = pair_slots(ctx, SectorFilter::Quantum);
    let mut by_power: BTreeMap<u32, PolySymbol> = BTreeMap::new();
    let mut push = |power: u32, poly: PolySymbol, map: &mut BTreeMap<u32, PolySymbol>| {
        if poly.is_zero() {
            return;
        }
        let entry = map.entry(power).or_insert_with(|| PolySymbol::zero(ctx));
        *entry = entry.add(&poly).expect("same context");
    };

    // Commutator part: odd orders of the star series, coefficient
    // 2 (−i/4π)^j / j! at power h^j.
    let unit = C64::new(0.0, -1.0 / (4.0 * std::f64::consts::PI));
    let j_max = quantum_degree(sigma).min(quantum_degree(tau));
    let mut level = initial_level(ctx);
    let mut coef = C64::new(1.0, 0.0);
    for j in 1..=j_max {
        level = apply_poisson_bidiff(&level, &qpairs);
        coef = coef * unit / (j as f64);
        if level.is_empty() {
            break;
        }
        if j % 2 == 1 {
            let term = level_sum_grouped(&level, sigma, tau).scale(coef * 2.0);
            push(j as u32, term, &mut by_power);
        }
    }

    // Classical coupling: (i/2π) h × the star series of the derivative
    // factors, so star order m lands at power h^{m+1}.
    let pref = C64::new(0.0, 1.0 / std::f64::consts::TAU);
    for (xs, ks) in pair_slots(ctx, SectorFilter::Classical) {
        let dk_sigma = derive_multi(sigma, &slot_order(ctx, ks));
        let dx_sigma = derive_multi(sigma, &slot_order(ctx, xs));
        let dk_tau = derive_multi(tau, &slot_order(ctx, ks));
        let dx_tau = derive_multi(tau, &slot_order(ctx, xs));
        let m_max = quantum_degree(&dk_sigma)
            .min(quantum_degree(&dx_tau))
            .max(quantum_degree(&dk_tau).min(quantum_degree(&dx_sigma)));
        for m in 0..=m_max {
            let fwd = star_order_term(&dk_sigma, &dx_tau, m)?;
            let rev = star_order_term(&dk_tau, &dx_sigma, m)?;
            let diff = fwd.sub(&rev)?;
            let c = pref * unit.powu(m as u32);
            push(m as u32 + 1, diff.scale(c), &mut by_power);
        }
    }

    Ok(by_power.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::super::{PhaseVar, VarKind};
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn ctx11() -> VarContext {
        VarContext::new(1, 1)
    }

    fn qx(ctx: VarContext) -> PolySymbol {
        PolySymbol::var(ctx, PhaseVar::position(Sector::Quantum, 0)).unwrap()
    }

    fn qk(ctx: VarContext) -> PolySymbol {
        PolySymbol::var(ctx, PhaseVar::momentum(Sector::Quantum, 0)).unwrap()
    }

    fn cx(ctx: VarContext) -> PolySymbol {
        PolySymbol::var(ctx, PhaseVar::position(Sector::Classical, 0)).unwrap()
    }

    fn ck(ctx: VarContext) -> PolySymbol {
        PolySymbol::var(ctx, PhaseVar::momentum(Sector::Classical, 0)).unwrap()
    }

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn poisson_of_conjugate_pair_is_one() {
        let ctx = ctx11();
        let b = poisson_bracket(&qx(ctx), &qk(ctx), SectorFilter::Quantum).unwrap();
        assert_eq!(b, PolySymbol::constant(ctx, one()));
    }

    #[test]
    fn poisson_is_antisymmetric_and_vanishes_on_diagonal() {
        let ctx = ctx11();
        let s = qx(ctx).mul(&qk(ctx)).unwrap().add(&ck(ctx)).unwrap();
        let b = poisson_bracket(&s, &s, SectorFilter::Both).unwrap();
        assert!(b.is_zero());
    }

    #[test]
    fn poisson_of_square_against_momentum() {
        // {x², k} = 2x, checked against an evaluation-based oracle that does
        // not go through the bracket code path.
        let ctx = ctx11();
        let x2 = qx(ctx).mul(&qx(ctx)).unwrap();
        let b = poisson_bracket(&x2, &qk(ctx), SectorFilter::Quantum).unwrap();
        for t in 0..5 {
            let xv = -1.0 + 0.5 * t as f64;
            let pt = [C64::new(xv, 0.0), C64::new(0.3, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
            let lhs = b.evaluate(&pt).unwrap();
            assert!((lhs - C64::new(2.0 * xv, 0.0)).norm() < 1e-14);
        }
        assert_eq!(b, qx(ctx).scale(C64::new(2.0, 0.0)));
    }

    #[test]
    fn star_with_identity_and_constants() {
        let ctx = ctx11();
        let h = PlanckConstant::new(0.7).unwrap();
        let s = qx(ctx).mul(&qk(ctx)).unwrap().add(&cx(ctx)).unwrap();
        let id = PolySymbol::constant(ctx, one());
        assert_eq!(moyal_star(&s, &id, h).unwrap(), s);
        assert_eq!(moyal_star(&id, &s, h).unwrap(), s);
        let c1 = PolySymbol::constant(ctx, C64::new(2.0, 1.0));
        let c2 = PolySymbol::constant(ctx, C64::new(-0.5, 3.0));
        assert_eq!(
            moyal_star(&c1, &c2, h).unwrap(),
            PolySymbol::constant(ctx, C64::new(2.0, 1.0) * C64::new(-0.5, 3.0))
        );
    }

    #[test]
    fn star_of_conjugate_pair_matches_first_order_term() {
        let ctx = ctx11();
        let h = PlanckConstant::new(0.37).unwrap();
        let xk = qx(ctx).mul(&qk(ctx)).unwrap();
        let shift = C64::new(0.0, -h.value() / (4.0 * PI));
        let xs = moyal_star(&qx(ctx), &qk(ctx), h).unwrap();
        assert_eq!(xs, xk.add(&PolySymbol::constant(ctx, shift)).unwrap());
        let ks = moyal_star(&qk(ctx), &qx(ctx), h).unwrap();
        assert_eq!(ks, xk.add(&PolySymbol::constant(ctx, -shift)).unwrap());
        // The commutator is the j = 1 term alone for degree-one symbols and
        // (2πi/h)[x,k] recovers the Poisson value exactly.
        let comm = moyal_commutator(&qx(ctx), &qk(ctx), h).unwrap();
        let scaled = comm.scale(C64::new(0.0, TAU / h.value()));
        assert!(scaled.max_coeff_distance(&PolySymbol::constant(ctx, one())).unwrap() < 1e-15);
    }

    #[test]
    fn commutator_equals_star_difference() {
        let ctx = ctx11();
        let h = PlanckConstant::new(0.9).unwrap();
        let a = qx(ctx)
            .mul(&qx(ctx))
            .unwrap()
            .mul(&qk(ctx))
            .unwrap()
            .add(&qk(ctx).scale(C64::new(0.0, 1.5)))
            .unwrap();
        let b = qk(ctx).mul(&qk(ctx)).unwrap().add(&qx(ctx)).unwrap();
        let direct = moyal_star(&a, &b, h).unwrap().sub(&moyal_star(&b, &a, h).unwrap()).unwrap();
        let comm = moyal_commutator(&a, &b, h).unwrap();
        let scale = direct.max_abs_coeff().max(1.0);
        assert!(comm.max_coeff_distance(&direct).unwrap() < 1e-14 * scale);
    }

    #[test]
    fn commutator_of_disjoint_quantum_variables_vanishes() {
        let ctx = VarContext::new(2, 0);
        let h = PlanckConstant::new(1.3).unwrap();
        let a = PolySymbol::var(ctx, PhaseVar::position(Sector::Quantum, 0))
            .unwrap()
            .mul(&PolySymbol::var(ctx, PhaseVar::momentum(Sector::Quantum, 0)).unwrap())
            .unwrap();
        let b = PolySymbol::var(ctx, PhaseVar::position(Sector::Quantum, 1))
            .unwrap()
            .mul(&PolySymbol::var(ctx, PhaseVar::position(Sector::Quantum, 1)).unwrap())
            .unwrap();
        assert!(moyal_commutator(&a, &b, h).unwrap().is_zero());
    }

    #[test]
    fn qc_bracket_on_classical_pair_gives_poisson_value() {
        let ctx = ctx11();
        let h = PlanckConstant::new(TAU).unwrap();
        let b = qc_bracket(&cx(ctx), &ck(ctx), h).unwrap();
        let scaled = b.scale(C64::new(0.0, TAU / h.value()));
        assert_eq!(scaled, PolySymbol::constant(ctx, one()));
    }

    #[test]
    fn qc_bracket_reduces_to_moyal_commutator_on_quantum_symbols() {
        let ctx = ctx11();
        let h = PlanckConstant::new(0.41).unwrap();
        let a = qx(ctx).mul(&qx(ctx)).unwrap().mul(&qk(ctx)).unwrap();
        let b = qk(ctx).add(&qx(ctx).scale(C64::new(0.0, -2.0))).unwrap();
        let qc = qc_bracket(&a, &b, h).unwrap();
        let comm = moyal_commutator(&a, &b, h).unwrap();
        assert_eq!(qc, comm);
    }

    #[test]
    fn qc_bracket_vanishes_on_equal_arguments() {
        let ctx = ctx11();
        let h = PlanckConstant::new(0.8).unwrap();
        let s = qx(ctx).mul(&ck(ctx)).unwrap().add(&qk(ctx)).unwrap();
        assert!(qc_bracket(&s, &s, h).unwrap().is_zero());
        assert!(qc_bracket_kn(&s, &s, h).unwrap().is_zero());
    }

    #[test]
    fn kn_bracket_matches_weyl_on_degree_one_and_classical_symbols() {
        let ctx = ctx11();
        let h = PlanckConstant::new(0.63).unwrap();
        let w = qc_bracket(&qx(ctx), &qk(ctx), h).unwrap();
        let kn = qc_bracket_kn(&qx(ctx), &qk(ctx), h).unwrap();
        assert!(w.max_coeff_distance(&kn).unwrap() < 1e-16);
        let wc = qc_bracket(&cx(ctx), &ck(ctx), h).unwrap();
        let knc = qc_bracket_kn(&cx(ctx), &ck(ctx), h).unwrap();
        assert_eq!(wc, knc);
    }

    #[test]
    fn h_series_leading_power_is_the_full_poisson_bracket() {
        let ctx = ctx11();
        let a = qx(ctx)
            .mul(&qk(ctx))
            .unwrap()
            .mul(&ck(ctx))
            .unwrap()
            .add(&cx(ctx).mul(&cx(ctx)).unwrap())
            .unwrap();
        let b = qk(ctx)
            .mul(&qk(ctx))
            .unwrap()
            .add(&cx(ctx).mul(&qx(ctx)).unwrap())
            .unwrap();
        let series = qc_bracket_h_series(&a, &b).unwrap();
        let lead = series.iter().find(|(p, _)| *p == 1).map(|(_, s)| s.clone()).unwrap();
        let scaled = lead.scale(C64::new(0.0, TAU));
        let pb = poisson_bracket(&a, &b, SectorFilter::Both).unwrap();
        let scale = pb.max_abs_coeff().max(1.0);
        assert!(scaled.max_coeff_distance(&pb).unwrap() < 1e-14 * scale);
    }

    #[test]
    fn mismatched_contexts_are_rejected() {
        let a = PolySymbol::constant(VarContext::new(1, 1), one());
        let b = PolySymbol::constant(VarContext::new(1, 0), one());
        let h = PlanckConstant::new(1.0).unwrap();
        assert!(matches!(
            moyal_star(&a, &b, h),
            Err(SymbolError::ContextMismatch(..))
        ));
        assert!(poisson_bracket(&a, &b, SectorFilter::Both).is_err());
        assert!(qc_bracket(&a, &b, h).is_err());
    }

    #[test]
    fn derive_multi_uses_falling_factorials() {
        let ctx = ctx11();
        let x3 = qx(ctx).mul(&qx(ctx)).unwrap().mul(&qx(ctx)).unwrap();
        let mut orders = vec![0u16; ctx.n_vars()];
        orders[ctx.slot(PhaseVar::new(Sector::Quantum, VarKind::Position, 0)).unwrap()] = 2;
        let d2 = derive_multi(&x3, &orders);
        assert_eq!(d2, qx(ctx).scale(C64::new(6.0, 0.0)));
    }
}
