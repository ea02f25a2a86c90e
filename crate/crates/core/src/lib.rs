//! Phase-space symbol calculus and mixed quantum-classical dynamics.
//!
//! The crate is organized around four layers:
//!
//! * [`symbols`] — exact polynomial symbol algebra: Poisson brackets, the
//!   Moyal star product and commutator (the series terminates for
//!   polynomials), and the quantum-classical bracket in Weyl and
//!   Kohn-Nirenberg orderings.
//! * [`weyl`] — the symbol/operator correspondence on periodic grids:
//!   integral kernels, operator matrices, the inverse (Wigner-type)
//!   transform, and a grid evaluation of the star product used as an
//!   independent oracle for the symbol algebra.
//! * [`dynamics`] — time propagation of mixed states in three schemes:
//!   the matrix Liouville-von Neumann equation on classical phase-plane
//!   grids, mean-field trajectories, and the multiconfiguration
//!   mean-field scheme.
//! * [`oscillator`] — the analytic coupled quantum-classical harmonic
//!   oscillator used as the ground-truth reference for the propagation
//!   schemes.
//!
//! Conventions: Fourier factors are kept in the `e^{2πi}` form, so the
//! effective quantum of action is `h/2π`. The Poisson bracket is
//! normalized so `{x, k} = +1` for a conjugate (position, momentum)
//! pair, and `(2πi/h)` times the Moyal commutator tends to the Poisson
//! bracket as `h → 0`.

pub mod dynamics;
pub mod error;
pub mod io;
pub mod numerics;
pub mod oscillator;
pub mod symbols;
pub mod verify;
pub mod weyl;

pub use error::{DynamicsError, GridError, OscillatorError, SymbolError};
pub use symbols::{PhaseVar, PlanckConstant, PolySymbol, Sector, VarContext, VarKind};

/// Shorthand used throughout the crate.
pub type C64 = num_complex::Complex64;
