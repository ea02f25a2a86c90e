use num_complex::Complex64 as C64;
use qcdyn::dynamics::*;
use qcdyn::oscillator::*;
use qcdyn::symbols::PlanckConstant;
use qcdyn::weyl::Grid1D;

fn run_case(hbar: f64, n_grid: usize, ell: f64, width: f64, n_states: usize, dt: f64) {
    let h = PlanckConstant::new(std::f64::consts::TAU * hbar).unwrap();
    let alpha = 1.5;
    let ham = benchmark_hamiltonian(alpha, n_states, h).unwrap();
    let kg = Grid1D::new(n_grid, ell).unwrap();
    let xg = Grid1D::new(n_grid, ell).unwrap();
    let grid = ham.sample(kg, xg);
    let z0 = C64::new(0.8, 0.6);
    let rho0 = MixedDensity::pure_gaussian(n_states, 2, kg, xg, (z0.re, z0.im), width).unwrap();
    let steps = (std::f64::consts::FRAC_PI_2 / dt).round() as usize;
    let start = std::time::Instant::now();
    match propagate(&rho0, |s| lvn_rhs(s, &grid, h), dt, steps, |_, _| {}) {
        Ok(rho) => {
            let tr = rho.trace();
            let pops: Vec<f64> = rho.populations().iter().map(|p| p / tr).collect();
            let up: f64 = pops[3..].iter().sum();
            let down: f64 = pops[..2].iter().sum();
            eprintln!(
                "hbar={hbar:.0e} grid={n_grid} L={ell} w={width} N={n_states} dt={dt:.1e}: up={up:+.3e} down={down:+.3e} pops={:?} ({:?})",
                &pops[..4.min(pops.len())],
                start.elapsed()
            );
        }
        Err(e) => eprintln!("hbar={hbar:.0e} grid={n_grid} w={width} dt={dt:.1e}: {e}"),
    }
}

#[test]
fn probe_matrix() {
    // hbar scaling of the population artifacts.
    run_case(2e3, 32, 16.0, 1.0, 6, 4.0e-3);
    run_case(1e5, 32, 16.0, 1.0, 6, 6.0e-4);
}
