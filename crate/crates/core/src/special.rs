//! Normal distribution helpers and Gauss-Legendre quadrature.

use libm::{erf, erfc};
use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::erf::erfc_inv;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `2 Phi(x) - 1`, computed without cancellation near zero.
pub fn signed_norm_cdf(x: f64) -> f64 {
    erf(x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile for `p` in `(0, 1)`.
pub fn norm_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Nodes and weights of the `m`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    if m == 0 {
        return (Vec::new(), Vec::new());
    }
    let jacobi = DMatrix::from_fn(m, m, |i, j| {
        if i.abs_diff(j) == 1 {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], 2.0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Integrates `f` over `[a, b]` with an `m`-point rule on each of `panels`
/// equal subintervals.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, m: usize, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(m);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let mid = lo + 0.5 * h;
        for (xi, wi) in x.iter().zip(&w) {
            total += wi * f(mid + 0.5 * h * xi);
        }
    }
    0.5 * h * total
}

/// Integrates `f` over the cube `[a, b]^dim` with a tensor Gauss-Legendre
/// rule of `m` points per axis.
pub fn integrate_tensor<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    m: usize,
) -> f64 {
    let (x, w) = gauss_legendre(m);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut idx = vec![0usize; dim];
    let mut point = vec![mid; dim];
    let mut total = 0.0;
    loop {
        let mut weight = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            point[k] = mid + half * x[i];
            weight *= w[i];
        }
        total += weight * f(&point);
        let mut k = 0;
        loop {
            if k == dim {
                return total * half.powi(dim as i32);
            }
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
