//! Dense kernels on row-major design matrices, plus the power iteration used
//! for the top eigenvalue of the scaled Gram matrix.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

/// `X β` for a row-major `X`.
pub fn mat_vec(x: ArrayView2<f64>, beta: ArrayView1<f64>) -> Array1<f64> {
    x.dot(&beta)
}

/// `Xᵀ v`, accumulated row by row so the inner loop stays contiguous.
pub fn mat_t_vec(x: ArrayView2<f64>, v: ArrayView1<f64>) -> Array1<f64> {
    let mut out = Array1::zeros(x.ncols());
    for (row, &vi) in x.rows().into_iter().zip(v.iter()) {
        if vi != 0.0 {
            out.scaled_add(vi, &row);
        }
    }
    out
}

pub fn norm2(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

pub fn dist2_sq(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(u, v)| (u - v) * (u - v)).sum()
}

pub const POWER_MAX_ITER: usize = 1000;
pub const POWER_REL_TOL: f64 = 1e-8;

/// Largest eigenvalue of `n⁻¹ XᵀX` by power iteration on the Rayleigh
/// quotient. The start vector is a unit Gaussian draw from `seed`.
/// Returns 0 for an all-zero design.
pub fn gram_top_eigenvalue(x: ArrayView2<f64>, seed: u64) -> f64 {
    let (n, p) = x.dim();
    if n == 0 || p == 0 || x.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut v: Array1<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = norm2(v.view());
    v /= nv;

    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let xv = mat_vec(x, v.view());
        let rayleigh = xv.dot(&xv) / n as f64;
        let next = mat_t_vec(x, xv.view());
        let norm = norm2(next.view());
        if norm == 0.0 {
            // start vector landed in the null space; restart from a nonzero row
            let row = x
                .rows()
                .into_iter()
                .find(|r| r.iter().any(|&v| v != 0.0))
                .expect("design has a nonzero entry");
            v = &row / norm2(row);
            continue;
        }
        v = next / norm;
        let converged = (rayleigh - estimate).abs() <= POWER_REL_TOL * rayleigh.abs();
        estimate = rayleigh;
        if converged {
            break;
        }
    }
    // one last quotient at the final vector
    let xv = mat_vec(x, v.view());
    estimate.max(xv.dot(&xv) / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::{array, Array2};

    #[test]
    fn transpose_product_matches_ndarray() {
        let x = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let v = array![0.5, -1.0];
        let ours = mat_t_vec(x.view(), v.view());
        let reference = x.t().dot(&v);
        assert_eq!(ours, reference);
    }

    #[test]
    fn eigenvalue_of_scaled_identity() {
        let n = 6;
        let x = Array2::<f64>::eye(n) * (n as f64).sqrt();
        assert_relative_eq!(gram_top_eigenvalue(x.view(), 3), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn eigenvalue_of_diagonal_gram() {
        // XᵀX / n = diag(4, 1) / 2
        let x = array![[2.0, 0.0], [0.0, 1.0]];
        assert_relative_eq!(gram_top_eigenvalue(x.view(), 0), 2.0, max_relative = 1e-7);
    }

    #[test]
    fn zero_design_gives_zero() {
        let x = Array2::<f64>::zeros((3, 4));
        assert_eq!(gram_top_eigenvalue(x.view(), 1), 0.0);
    }
}
