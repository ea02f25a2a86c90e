//! Exact polynomial symbol algebra over quantum and classical phase variables.
//!
//! Symbols are sparse complex-coefficient polynomials in the variables of a
//! [`VarContext`]: `quantum_pairs` conjugate pairs `(x_i, k_i)` and
//! `classical_pairs` pairs `(x'_i, k'_i)`. All brackets treat positions and
//! momenta with the convention `{x, k} = +1`.

mod brackets;
mod poly;

pub use brackets::{
    moyal_commutator, moyal_star, poisson_bracket, qc_bracket, qc_bracket_h_series,
    qc_bracket_kn, star_order_term, SectorFilter,
};
pub use poly::PolySymbol;

use serde::{Deserialize, Serialize};

use crate::error::SymbolError;

/// Which of the two commuting sectors a variable belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Quantum,
    Classical,
}

/// Position or momentum within a conjugate pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Position,
    Momentum,
}

/// A single phase-space variable, identified by sector, kind and pair index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PhaseVar {
    pub sector: Sector,
    pub kind: VarKind,
    pub index: usize,
}

impl PhaseVar {
    pub fn new(sector: Sector, kind: VarKind, index: usize) -> Self {
        Self { sector, kind, index }
    }

    pub fn position(sector: Sector, index: usize) -> Self {
        Self::new(sector, VarKind::Position, index)
    }

    pub fn momentum(sector: Sector, index: usize) -> Self {
        Self::new(sector, VarKind::Momentum, index)
    }
}

/// Number of conjugate pairs per sector; fixes the variable layout of a symbol.
///
/// Variables are ordered lexicographically by `(sector, kind, index)`:
/// quantum positions, quantum momenta, classical positions, classical
/// momenta. Exponent vectors and serialized terms follow this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarContext {
    pub quantum_pairs: usize,
    pub classical_pairs: usize,
}

impl VarContext {
    pub fn new(quantum_pairs: usize, classical_pairs: usize) -> Self {
        Self { quantum_pairs, classical_pairs }
    }

    /// Total number of scalar variables.
    pub fn n_vars(&self) -> usize {
        2 * (self.quantum_pairs + self.classical_pairs)
    }

    /// Slot of a variable in the canonical ordering.
    pub fn slot(&self, var: PhaseVar) -> Result<usize, SymbolError> {
        let (pairs, base) = match var.sector {
            Sector::Quantum => (self.quantum_pairs, 0),
            Sector::Classical => (self.classical_pairs, 2 * self.quantum_pairs),
        };
        if var.index >= pairs {
            return Err(SymbolError::VariableNotInContext(var, *self));
        }
        let kind_offset = match var.kind {
            VarKind::Position => 0,
            VarKind::Momentum => pairs,
        };
        Ok(base + kind_offset + var.index)
    }

    /// Variable stored at a given slot.
    pub fn var_at(&self, slot: usize) -> PhaseVar {
        let nq = self.quantum_pairs;
        let nc = self.classical_pairs;
        if slot < nq {
            PhaseVar::position(Sector::Quantum, slot)
        } else if slot < 2 * nq {
            PhaseVar::momentum(Sector::Quantum, slot - nq)
        } else if slot < 2 * nq + nc {
            PhaseVar::position(Sector::Classical, slot - 2 * nq)
        } else {
            PhaseVar::momentum(Sector::Classical, slot - 2 * nq - nc)
        }
    }

    /// All variables in canonical order.
    pub fn vars(&self) -> Vec<PhaseVar> {
        (0..self.n_vars()).map(|s| self.var_at(s)).collect()
    }
}

/// Planck constant of the quantum sector, in the `e^{2πi}` Fourier
/// bookkeeping of the crate; the effective quantum of action is `h/2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanckConstant(f64);

impl PlanckConstant {
    pub fn new(h: f64) -> Result<Self, SymbolError> {
        if h > 0.0 && h.is_finite() {
            Ok(Self(h))
        } else {
            Err(SymbolError::NonPositivePlanck(h))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// `h / 2π`, the quantum of action in ordinary units.
    pub fn hbar(&self) -> f64 {
        self.0 / std::f64::consts::TAU
    }
}
