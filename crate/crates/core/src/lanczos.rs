//! Seeded Lanczos iteration for extremal eigenvalues of matrix-free
//! Hermitian operators, with full reorthogonalization so the norms it
//! reports are reproducible run to run.

use ndarray::Array2;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dense::eigh_real;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    pub max_dim: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            max_dim: 200,
            rel_tol: 1e-6,
            seed: 7,
        }
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest |eigenvalue| of the Hermitian operator given by `apply`
/// (which must accumulate `A * input` into its second argument).
pub fn extremal_abs_eigenvalue<F>(dim: usize, apply: F, opts: &LanczosOptions) -> Result<f64>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let max_dim = opts.max_dim.min(dim).max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v0: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let n0 = norm(&v0);
    for x in v0.iter_mut() {
        *x /= n0;
    }

    let mut basis: Vec<Vec<Complex64>> = vec![v0];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];

    for j in 0..max_dim {
        w.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        apply(&basis[j], &mut w);

        if j > 0 {
            let b = betas[j - 1];
            for (x, y) in w.iter_mut().zip(&basis[j - 1]) {
                *x -= b * y;
            }
        }
        let alpha = inner(&basis[j], &w).re;
        for (x, y) in w.iter_mut().zip(&basis[j]) {
            *x -= alpha * y;
        }
        alphas.push(alpha);

        // Two Gram-Schmidt passes against the whole basis.
        for _ in 0..2 {
            for v in &basis {
                let c = inner(v, &w);
                if c.norm() > 0.0 {
                    for (x, y) in w.iter_mut().zip(v) {
                        *x -= c * y;
                    }
                }
            }
        }

        let beta = norm(&w);
        let (theta, resid) = extremal_ritz(&alphas, &betas, beta)?;
        let scale = theta.abs().max(1e-300);

        // Invariant subspace: the Krylov space is exhausted and the Ritz
        // values are exact.
        if beta <= 1e-12 * scale.max(1.0) || basis.len() == dim {
            return Ok(theta.abs());
        }
        if j >= 4 && resid <= opts.rel_tol * scale {
            return Ok(theta.abs());
        }

        betas.push(beta);
        let next: Vec<Complex64> = w.iter().map(|x| x / beta).collect();
        basis.push(next);
    }

    Err(Error::NormNotConverged(max_dim))
}

/// Ritz value of largest magnitude from the current tridiagonal, together
/// with its residual bound `beta_j * |y_last|`.
fn extremal_ritz(alphas: &[f64], betas: &[f64], beta_next: f64) -> Result<(f64, f64)> {
    let k = alphas.len();
    let mut t = Array2::<f64>::zeros((k, k));
    for i in 0..k {
        t[[i, i]] = alphas[i];
        if i + 1 < k {
            t[[i, i + 1]] = betas[i];
            t[[i + 1, i]] = betas[i];
        }
    }
    let (vals, vecs) = eigh_real(&t)?;
    let mut best = (0.0f64, f64::INFINITY);
    let mut best_abs = -1.0f64;
    for (idx, &v) in vals.iter().enumerate() {
        if v.abs() > best_abs {
            best_abs = v.abs();
            let y_last = vecs[[k - 1, idx]];
            best = (v, beta_next * y_last.abs());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator_norm() {
        // A = diag(0, 1, ..., dim-1) with a sign flip to put the extremal
        // value at the negative end.
        let dim = 64;
        let apply = |v: &[Complex64], out: &mut [Complex64]| {
            for (i, (x, o)) in v.iter().zip(out.iter_mut()).enumerate() {
                let d = if i == 5 { -80.0 } else { i as f64 };
                *o += d * x;
            }
        };
        let got = extremal_abs_eigenvalue(dim, apply, &LanczosOptions::default()).unwrap();
        assert!((got - 80.0).abs() < 1e-4 * 80.0, "got {got}");
    }

    #[test]
    fn small_space_exhaustion_is_exact() {
        let dim = 4;
        let apply = |v: &[Complex64], out: &mut [Complex64]| {
            let d = [1.0, -3.0, 2.0, 0.5];
            for i in 0..4 {
                out[i] += d[i] * v[i];
            }
        };
        let got = extremal_abs_eigenvalue(dim, apply, &LanczosOptions::default()).unwrap();
        assert!((got - 3.0).abs() < 1e-9);
    }
}
