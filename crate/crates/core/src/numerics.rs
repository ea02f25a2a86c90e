//! Shared numerical helpers: FFTs on periodic grids, spectral derivatives
//! and a dense Hermitian eigensolver.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

/// Signed FFT bin frequencies in cycles per unit length: `m / extent` with
/// `m = 0, 1, ..., n/2-1, -n/2, ..., -1`.
pub fn fft_freqs(n: usize, extent: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let m = if i <= n / 2 - 1 { i as isize } else { i as isize - n as isize };
            m as f64 / extent
        })
        .collect()
}

/// In-place forward FFT of every lane along `axis` (unnormalized).
pub fn fft_axis(field: &mut Array2<C64>, axis: Axis, inverse: bool) {
    let n = field.len_of(axis);
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for mut lane in field.lanes_mut(axis) {
        for (b, v) in buf.iter_mut().zip(lane.iter()) {
            *b = *v;
        }
        fft.process(&mut buf);
        let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
        for (v, b) in lane.iter_mut().zip(buf.iter()) {
            *v = b * scale;
        }
    }
}

/// Spectral partial derivative of a periodic 2D field along `axis`.
///
/// The grid along `axis` has physical length `extent`; values are sampled
/// on uniformly spaced points. Differentiation is exact for band-limited
/// fields.
pub fn spectral_derivative(field: &Array2<C64>, axis: Axis, extent: f64) -> Array2<C64> {
    let mut hat = field.clone();
    fft_axis(&mut hat, axis, false);
    let n = field.len_of(axis);
    let freqs = fft_freqs(n, extent);
    let tau = std::f64::consts::TAU;
    for (i, mut lane) in hat.axis_iter_mut(axis).enumerate() {
        // The unpaired Nyquist mode has no odd-symmetric derivative; zero
        // it so real fields stay real.
        let factor = if i == n / 2 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(0.0, tau * freqs[i])
        };
        for v in lane.iter_mut() {
            *v *= factor;
        }
    }
    fft_axis(&mut hat, axis, true);
    hat
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues ascending together
/// with the matching orthonormal eigenvector columns.
pub fn hermitian_eigen(mat: &Array2<C64>) -> (Array1<f64>, Array2<C64>) {
    let n = mat.nrows();
    assert_eq!(n, mat.ncols(), "matrix must be square");
    let dm = DMatrix::from_fn(n, n, |r, c| mat[[r, c]]);
    let se = dm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let mut values = Array1::zeros(n);
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = se.eigenvalues[src];
        for r in 0..n {
            vectors[[r, dst]] = se.eigenvectors[(r, src)];
        }
    }
    (values, vectors)
}

/// Largest-eigenvalue eigenvector of a Hermitian positive semidefinite
/// matrix by power iteration; returns (eigenvalue, unit eigenvector).
pub fn dominant_eigenvector(mat: &Array2<C64>, iters: usize) -> (f64, Array1<C64>) {
    let n = mat.nrows();
    let mut v: Array1<C64> = Array1::from_elem(n, C64::new(1.0, 0.0));
    v[0] += C64::new(0.3, 0.1);
    let norm = |w: &Array1<C64>| w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let nv = norm(&v);
    v.mapv_inplace(|c| c / nv);
    let mut lambda = 0.0;
    for _ in 0..iters {
        let mut w: Array1<C64> = Array1::zeros(n);
        for r in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..n {
                acc += mat[[r, c]] * v[c];
            }
            w[r] = acc;
        }
        let nw = norm(&w);
        if nw == 0.0 {
            break;
        }
        lambda = nw;
        w.mapv_inplace(|c| c / nw);
        v = w;
    }
    (lambda, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn spectral_derivative_of_plane_wave() {
        let n = 32;
        let l = 5.0;
        let mut f = Array2::zeros((n, 4));
        for i in 0..n {
            let x = i as f64 * l / n as f64;
            for j in 0..4 {
                f[[i, j]] = (C64::new(0.0, std::f64::consts::TAU * 3.0 * x / l)).exp();
            }
        }
        let d = spectral_derivative(&f, Axis(0), l);
        for i in 0..n {
            for j in 0..4 {
                let expect = f[[i, j]] * C64::new(0.0, std::f64::consts::TAU * 3.0 / l);
                assert!((d[[i, j]] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hermitian_eigen_of_known_matrix() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let m = array![
            [C64::new(1.0, 0.0), C64::new(0.0, 1.0)],
            [C64::new(0.0, -1.0), C64::new(1.0, 0.0)]
        ];
        let (vals, vecs) = hermitian_eigen(&m);
        assert!((vals[0] - 0.0).abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
        // Residual check A v = λ v.
        for j in 0..2 {
            for r in 0..2 {
                let mut av = C64::new(0.0, 0.0);
                for c in 0..2 {
                    av += m[[r, c]] * vecs[[c, j]];
                }
                assert!((av - vecs[[r, j]] * vals[j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dominant_eigenvector_of_projector() {
        let m = array![
            [C64::new(0.9, 0.0), C64::new(0.3, 0.0)],
            [C64::new(0.3, 0.0), C64::new(0.1, 0.0)]
        ];
        let (lam, v) = dominant_eigenvector(&m, 200);
        let (vals, vecs) = hermitian_eigen(&m);
        assert!((lam - vals[1]).abs() < 1e-10);
        let overlap: C64 = v.iter().zip(vecs.column(1).iter()).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-8);
    }
}
