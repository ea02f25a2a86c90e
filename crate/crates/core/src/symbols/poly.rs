//! Sparse multivariate polynomials with complex coefficients.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{PhaseVar, VarContext};
use crate::error::SymbolError;

/// Relative magnitude below which a coefficient is dropped after an operation.
const PRUNE_REL: f64 = 1e-14;

/// A polynomial symbol in canonical sparse form: no stored coefficient is
/// zero, terms are keyed by exponent vectors in the context's variable
/// order, and the term map is sorted lexicographically.
///
/// Two symbols are equal iff their contexts and canonical term maps are equal.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySymbol {
    ctx: VarContext,
    terms: BTreeMap<Vec<u16>, C64>,
}

impl PolySymbol {
    pub fn zero(ctx: VarContext) -> Self {
        Self { ctx, terms: BTreeMap::new() }
    }

    pub fn constant(ctx: VarContext, value: C64) -> Self {
        let mut terms = BTreeMap::new();
        if value != C64::new(0.0, 0.0) {
            terms.insert(vec![0; ctx.n_vars()], value);
        }
        Self { ctx, terms }
    }

    /// The symbol of a single variable.
    pub fn var(ctx: VarContext, v: PhaseVar) -> Result<Self, SymbolError> {
        Self::monomial(ctx, &[(v, 1)], C64::new(1.0, 0.0))
    }

    /// `coeff * prod_i var_i^{e_i}`.
    pub fn monomial(
        ctx: VarContext,
        powers: &[(PhaseVar, u16)],
        coeff: C64,
    ) -> Result<Self, SymbolError> {
        let mut exps = vec![0u16; ctx.n_vars()];
        for &(v, e) in powers {
            let slot = ctx.slot(v)?;
            exps[slot] += e;
        }
        let mut terms = BTreeMap::new();
        if coeff != C64::new(0.0, 0.0) {
            terms.insert(exps, coeff);
        }
        Ok(Self { ctx, terms })
    }

    pub fn context(&self) -> VarContext {
        self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Iterate terms in lexicographic exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u16], C64)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn coeff(&self, exps: &[u16]) -> C64 {
        self.terms.get(exps).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Total degree of the largest term, 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as usize).sum())
            .max()
            .unwrap_or(0)
    }

    fn check_ctx(&self, other: &Self) -> Result<(), SymbolError> {
        if self.ctx == other.ctx {
            Ok(())
        } else {
            Err(SymbolError::ContextMismatch(self.ctx, other.ctx))
        }
    }

    /// Drop coefficients below `PRUNE_REL` times the largest magnitude.
    fn canonicalize(&mut self) {
        let max = self.max_abs_coeff();
        if max == 0.0 {
            self.terms.clear();
            return;
        }
        let cut = PRUNE_REL * max;
        self.terms.retain(|_, c| c.norm() >= cut && *c != C64::new(0.0, 0.0));
    }

    pub fn add(&self, other: &Self) -> Result<Self, SymbolError> {
        self.check_ctx(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            let entry = out.terms.entry(e.clone()).or_insert(C64::new(0.0, 0.0));
            *entry += c;
        }
        out.canonicalize();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SymbolError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect();
        Self { ctx: self.ctx, terms }
    }

    pub fn scale(&self, factor: C64) -> Self {
        if factor == C64::new(0.0, 0.0) {
            return Self::zero(self.ctx);
        }
        let mut out = Self {
            ctx: self.ctx,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * factor)).collect(),
        };
        out.canonicalize();
        out
    }

    /// Product in canonical accumulation order.
    ///
    /// Per-bucket contributions are summed in an order keyed by the
    /// unordered pair of factor exponents (with the value bits breaking
    /// ties), so `mul(a, b)` and `mul(b, a)` produce bit-identical
    /// coefficients.
    pub fn mul(&self, other: &Self) -> Result<Self, SymbolError> {
        self.check_ctx(other)?;
        let mut contribs: Vec<(Vec<u16>, Vec<u16>, Vec<u16>, C64)> =
            Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let out: Vec<u16> = ea.iter().zip(eb).map(|(&a, &b)| a + b).collect();
                let (lo, hi) = if ea <= eb { (ea.clone(), eb.clone()) } else { (eb.clone(), ea.clone()) };
                contribs.push((out, lo, hi, ca * cb));
            }
        }
        contribs.sort_unstable_by(|l, r| {
            (&l.0, &l.1, &l.2, l.3.re.to_bits(), l.3.im.to_bits()).cmp(&(
                &r.0,
                &r.1,
                &r.2,
                r.3.re.to_bits(),
                r.3.im.to_bits(),
            ))
        });
        let mut terms: BTreeMap<Vec<u16>, C64> = BTreeMap::new();
        for (out, _, _, v) in contribs {
            *terms.entry(out).or_insert(C64::new(0.0, 0.0)) += v;
        }
        let mut res = Self { ctx: self.ctx, terms };
        res.canonicalize();
        Ok(res)
    }

    /// Partial derivative with respect to a context variable.
    pub fn differentiate(&self, v: PhaseVar) -> Result<Self, SymbolError> {
        let slot = self.ctx.slot(v)?;
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[slot] == 0 {
                continue;
            }
            let mut ne = e.clone();
            ne[slot] -= 1;
            terms.insert(ne, c * (e[slot] as f64));
        }
        Ok(Self { ctx: self.ctx, terms })
    }

    /// Evaluate at a point, coordinates in the context's variable order.
    pub fn evaluate(&self, point: &[C64]) -> Result<C64, SymbolError> {
        if point.len() != self.ctx.n_vars() {
            return Err(SymbolError::PointLength { expected: self.ctx.n_vars(), got: point.len() });
        }
        let mut acc = C64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut term = *c;
            for (slot, &exp) in e.iter().enumerate() {
                for _ in 0..exp {
                    term *= point[slot];
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Evaluate a symbol over a single classical pair at real `(k', x')`.
    ///
    /// Valid for contexts with no quantum variables and one classical pair.
    pub fn evaluate_classical(&self, kp: f64, xp: f64) -> Result<C64, SymbolError> {
        self.evaluate(&[C64::new(xp, 0.0), C64::new(kp, 0.0)])
    }

    /// Complex-conjugate all coefficients (the variables are real).
    pub fn conj(&self) -> Self {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), c.conj())).collect();
        Self { ctx: self.ctx, terms }
    }

    /// Largest coefficient magnitude of `self - other`.
    pub fn max_coeff_distance(&self, other: &Self) -> Result<f64, SymbolError> {
        Ok(self.sub(other)?.max_abs_coeff())
    }

    /// True when the symbol involves no variable of the given sector.
    pub fn is_free_of_sector(&self, sector: super::Sector) -> bool {
        self.terms.keys().all(|e| {
            e.iter().enumerate().all(|(slot, &exp)| {
                exp == 0 || self.ctx.var_at(slot).sector != sector
            })
        })
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exp: Vec<u16>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    vars: Vec<PhaseVar>,
    terms: Vec<TermRepr>,
}

impl Serialize for PolySymbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = PolyRepr {
            vars: self.ctx.vars(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermRepr { exp: e.clone(), re: c.re, im: c.im })
                .collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PolySymbol {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(deserializer)?;
        let quantum_pairs = repr.vars.iter().filter(|v| v.sector == super::Sector::Quantum).count() / 2;
        let classical_pairs = repr.vars.iter().filter(|v| v.sector == super::Sector::Classical).count() / 2;
        let ctx = VarContext::new(quantum_pairs, classical_pairs);
        if repr.vars != ctx.vars() {
            return Err(D::Error::custom("variable list is not in canonical order"));
        }
        let mut terms = BTreeMap::new();
        for t in repr.terms {
            if t.exp.len() != ctx.n_vars() {
                return Err(D::Error::custom("exponent vector length mismatch"));
            }
            let c = C64::new(t.re, t.im);
            if c != C64::new(0.0, 0.0) {
                terms.insert(t.exp, c);
            }
        }
        Ok(Self { ctx, terms })
    }
}
