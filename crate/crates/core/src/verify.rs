//! Randomized verification suite for the bracket identities.
//!
//! Used both by the command-line `verify` subcommand and by the acceptance
//! tests. Each identity draws seeded random polynomials (coefficients in
//! the unit disk) and reports the worst residual together with the
//! documented tolerance.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SymbolError;
use crate::symbols::{
    moyal_commutator, moyal_star, poisson_bracket, qc_bracket, PlanckConstant, PolySymbol,
    SectorFilter, VarContext,
};

/// The identities the suite can exercise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    Antisymmetry,
    Jacobi,
    ClassicalLimit,
    Reduction,
    Associativity,
}

impl Identity {
    pub const ALL: [Identity; 5] = [
        Identity::Antisymmetry,
        Identity::Jacobi,
        Identity::ClassicalLimit,
        Identity::Reduction,
        Identity::Associativity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Identity::Antisymmetry => "antisymmetry",
            Identity::Jacobi => "jacobi",
            Identity::ClassicalLimit => "classical_limit",
            Identity::Reduction => "reduction",
            Identity::Associativity => "associativity",
        }
    }
}

/// Configuration for one identity run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub identity: Identity,
    /// Total-degree bound of the random polynomials.
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Planck constant for the h-pointwise identities.
    #[serde(default = "default_h")]
    pub h: f64,
    /// Sweep used by the classical-limit slope fit.
    #[serde(default = "default_h_sweep")]
    pub h_sweep: Vec<f64>,
}

fn default_degree() -> usize {
    3
}
fn default_trials() -> usize {
    200
}
fn default_h() -> f64 {
    1e-4
}
fn default_h_sweep() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}

impl VerifyConfig {
    pub fn new(identity: Identity) -> Self {
        Self {
            identity,
            degree: default_degree(),
            trials: default_trials(),
            seed: 0,
            h: default_h(),
            h_sweep: default_h_sweep(),
        }
    }
}

/// Outcome of one identity run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: Identity,
    pub degree: usize,
    pub trials: usize,
    pub seed: u64,
    pub h: f64,
    pub max_residual: f64,
    pub tolerance: f64,
    /// Fitted slope for the classical-limit identity, otherwise `None`.
    pub slope: Option<f64>,
    pub pass: bool,
}

impl IdentityReport {
    pub fn summary_line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        match self.slope {
            Some(s) => format!(
                "{}: slope={:.4} (target 2.00 +/- {}) max_residual={:.3e} {}",
                self.identity.name(),
                s,
                self.tolerance,
                self.max_residual,
                status
            ),
            None => format!(
                "{}: max_residual={:.3e} tol={:.1e} {}",
                self.identity.name(),
                self.max_residual,
                self.tolerance,
                status
            ),
        }
    }
}

/// Documented pass tolerances, pinned once here.
pub fn tolerance(identity: Identity) -> f64 {
    match identity {
        Identity::Antisymmetry => 0.0,
        Identity::Jacobi => 1e-10,
        Identity::ClassicalLimit => 0.05,
        Identity::Reduction => 0.0,
        Identity::Associativity => 1e-10,
    }
}

/// Random polynomial of total degree at most `degree`, coefficients in the
/// unit disk.
pub fn random_symbol(ctx: VarContext, degree: usize, rng: &mut impl Rng) -> PolySymbol {
    fn disk(rng: &mut impl Rng) -> C64 {
        loop {
            let re = rng.gen_range(-1.0..1.0);
            let im = rng.gen_range(-1.0..1.0);
            let c = C64::new(re, im);
            if c.norm() <= 1.0 {
                return c;
            }
        }
    }
    let n = ctx.n_vars();
    let mut exps = vec![0u16; n];
    let mut acc = PolySymbol::zero(ctx);
    loop {
        let total: usize = exps.iter().map(|&e| e as usize).sum();
        if total <= degree {
            let powers: Vec<_> = exps
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(slot, &e)| (ctx.var_at(slot), e))
                .collect();
            let mono = PolySymbol::monomial(ctx, &powers, disk(rng)).expect("context vars");
            acc = acc.add(&mono).expect("same context");
        }
        // Odometer over exponent vectors bounded by `degree` per slot.
        let mut slot = 0;
        loop {
            if slot == n {
                return acc;
            }
            if (exps[slot] as usize) < degree {
                exps[slot] += 1;
                break;
            }
            exps[slot] = 0;
            slot += 1;
        }
    }
}

fn mixed_ctx() -> VarContext {
    VarContext::new(1, 1)
}

/// Run one identity and report the worst residual.
pub fn run_identity(cfg: &VerifyConfig) -> Result<IdentityReport, SymbolError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tol = tolerance(cfg.identity);
    let mut max_residual = 0.0f64;
    let mut slope = None;
    let h = PlanckConstant::new(cfg.h)?;

    match cfg.identity {
        Identity::Antisymmetry => {
            for _ in 0..cfg.trials {
                let a = random_symbol(mixed_ctx(), cfg.degree, &mut rng);
                let b = random_symbol(mixed_ctx(), cfg.degree, &mut rng);
                let r = qc_bracket(&a, &b, h)?.add(&qc_bracket(&b, &a, h)?)?;
                max_residual = max_residual.max(r.max_abs_coeff());
                let rs = qc_bracket(&a, &a, h)?;
                max_residual = max_residual.max(rs.max_abs_coeff());
            }
        }
        Identity::Jacobi => {
            for _ in 0..cfg.trials {
                let a = random_symbol(mixed_ctx(), cfg.degree, &mut rng);
                let b = random_symbol(mixed_ctx(), cfg.degree, &mut rng);
                let c = random_symbol(mixed_ctx(), cfg.degree, &mut rng);
                let j = qc_bracket(&qc_bracket(&a, &b, h)?, &c, h)?
                    .add(&qc_bracket(&qc_bracket(&b, &c, h)?, &a, h)?)?
                    .add(&qc_bracket(&qc_bracket(&c, &a, h)?, &b, h)?)?;
                max_residual = max_residual.max(j.max_abs_coeff());
            }
        }
        Identity::ClassicalLimit => {
            // One quantum pair, fixed degree-4 symbols per trial; the
            // deviation of (2πi/h)[σ,τ] from {σ,τ} scales as h².
            let ctx = VarContext::new(1, 0);
            let trials = cfg.trials.clamp(1, 20);
            let mut worst: Option<f64> = None;
            for _ in 0..trials {
                let a = random_symbol(ctx, 4, &mut rng);
                let b = random_symbol(ctx, 4, &mut rng);
                let pb = poisson_bracket(&a, &b, SectorFilter::Quantum)?;
                let mut pts = Vec::new();
                for &hv in &cfg.h_sweep {
                    let hc = PlanckConstant::new(hv)?;
                    let comm = moyal_commutator(&a, &b, hc)?;
                    let scaled = comm.scale(C64::new(0.0, std::f64::consts::TAU / hv));
                    let err = scaled.max_coeff_distance(&pb)?;
                    if err > 0.0 {
                        pts.push((hv.ln(), err.ln()));
                    }
                }
                if pts.len() < 2 {
                    continue;
                }
                let n = pts.len() as f64;
                let sx: f64 = pts.iter().map(|p| p.0).sum();
                let sy: f64 = pts.iter().map(|p| p.1).sum();
                let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
                let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
                let fitted = (n * sxy - sx * sy) / (n * sxx - sx * sx);
                match worst {
                    Some(w) if (w - 2.0).abs() >= (fitted - 2.0).abs() => {}
                    _ => worst = Some(fitted),
                }
                max_residual = max_residual.max((fitted - 2.0).abs());
            }
            slope = worst;
        }
        Identity::Reduction => {
            // Quantum-only symbols: the bracket must equal the Moyal
            // commutator as a term map. Classical-only symbols: (2πi/h)
            // times the bracket must equal the Poisson bracket exactly;
            // run at h = 2π so the prefactor arithmetic is exact.
            let hq = h;
            let hc = PlanckConstant::new(std::f64::consts::TAU)?;
            let qctx = VarContext::new(1, 0);
            let cctx = VarContext::new(0, 1);
            for _ in 0..cfg.trials {
                let a = random_symbol(qctx, cfg.degree, &mut rng);
                let b = random_symbol(qctx, cfg.degree, &mut rng);
                let qc = qc_bracket(&a, &b, hq)?;
                let comm = moyal_commutator(&a, &b, hq)?;
                if qc != comm {
                    max_residual = max_residual.max(qc.max_coeff_distance(&comm)?).max(f64::MIN_POSITIVE);
                }
                let ca = random_symbol(cctx, cfg.degree, &mut rng);
                let cb = random_symbol(cctx, cfg.degree, &mut rng);
                let qcc = qc_bracket(&ca, &cb, hc)?
                    .scale(C64::new(0.0, std::f64::consts::TAU / hc.value()));
                let pb = poisson_bracket(&ca, &cb, SectorFilter::Classical)?;
                if qcc != pb {
                    max_residual = max_residual.max(qcc.max_coeff_distance(&pb)?).max(f64::MIN_POSITIVE);
                }
            }
        }
        Identity::Associativity => {
            for _ in 0..cfg.trials {
                let a = random_symbol(mixed_ctx(), cfg.degree, &mut rng);
                let b = random_symbol(mixed_ctx(), cfg.degree, &mut rng);
                let c = random_symbol(mixed_ctx(), cfg.degree, &mut rng);
                let left = moyal_star(&moyal_star(&a, &b, h)?, &c, h)?;
                let right = moyal_star(&a, &moyal_star(&b, &c, h)?, h)?;
                let scale = left.max_abs_coeff().max(right.max_abs_coeff()).max(1.0);
                max_residual = max_residual.max(left.max_coeff_distance(&right)? / scale);
            }
        }
    }

    let pass = match cfg.identity {
        Identity::Antisymmetry | Identity::Reduction => max_residual == 0.0,
        Identity::ClassicalLimit => slope.map(|s| (s - 2.0).abs() <= tol).unwrap_or(false),
        _ => max_residual < tol,
    };
    Ok(IdentityReport {
        identity: cfg.identity,
        degree: cfg.degree,
        trials: cfg.trials,
        seed: cfg.seed,
        h: cfg.h,
        max_residual,
        tolerance: tol,
        slope,
        pass,
    })
}
