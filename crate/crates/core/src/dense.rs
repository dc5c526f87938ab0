//! Dense linear algebra backing the exact-evolution oracle, operator-norm
//! checks, and the matrix-logarithm fit. Everything here is limited to the
//! configured dense dimension; the production evolution path never calls it.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hermitian eigendecomposition (values ascending, eigenvectors in columns
/// with `A v_j = lambda_j v_j`).
///
/// Depending on the memory order handed to LAPACK the backend may
/// effectively decompose the transposed (conjugated) matrix; a probe-vector
/// residual picks the convention that actually satisfies the eigenproblem.
pub fn eigh(m: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
    let (vals, raw) = m.eigh(UPLO::Lower)?;
    let scale = frobenius_norm(m).max(1e-300);
    let conjugated = raw.mapv(|v| v.conj());
    for vecs in [raw, conjugated] {
        if pairing_residual(m, &vals, &vecs) <= 1e-8 * scale {
            return Ok((vals, vecs));
        }
    }
    Err(Error::Linalg(
        "eigendecomposition failed the eigenproblem residual check".into(),
    ))
}

/// `||A (V y) - V (D y)||` for a fixed probe vector `y`.
fn pairing_residual(m: &Array2<Complex64>, vals: &Array1<f64>, vecs: &Array2<Complex64>) -> f64 {
    let n = vals.len();
    let probe = Array1::from_iter(
        (0..n).map(|k| Complex64::new(1.0 + (k as f64 * 0.37).sin(), (k as f64 * 0.61).cos())),
    );
    let vy = vecs.dot(&probe);
    let scaled = Array1::from_iter(probe.iter().zip(vals).map(|(p, &d)| p * d));
    let vdy = vecs.dot(&scaled);
    let avy = m.dot(&vy);
    let norm_probe = probe.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    (&avy - &vdy)
        .iter()
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt()
        / norm_probe.max(1e-300)
}

/// Real-symmetric eigendecomposition, used for Lanczos tridiagonals.
pub fn eigh_real(m: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let (vals, vecs) = m.eigh(UPLO::Lower)?;
    Ok((vals, vecs))
}

/// Cached Hermitian eigendecomposition with unitary-evolution helpers.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    vals: Array1<f64>,
    vecs: Array2<Complex64>,
    adjoint: Array2<Complex64>,
}

impl HermitianEig {
    pub fn new(h: &Array2<Complex64>) -> Result<HermitianEig> {
        let (vals, vecs) = eigh(h)?;
        let adjoint = vecs.t().mapv(|v| v.conj());
        Ok(HermitianEig {
            vals,
            vecs,
            adjoint,
        })
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.vals
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Dense `exp(-i H dt)`.
    pub fn evolution_matrix(&self, dt: f64) -> Array2<Complex64> {
        let dim = self.vals.len();
        let mut scaled = self.vecs.clone();
        for (j, col) in scaled.columns_mut().into_iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -self.vals[j] * dt);
            let mut col = col;
            col.mapv_inplace(|v| v * phase);
        }
        let mut out = Array2::zeros((dim, dim));
        ndarray::linalg::general_mat_mul(
            Complex64::new(1.0, 0.0),
            &scaled,
            &self.adjoint,
            Complex64::new(0.0, 0.0),
            &mut out,
        );
        out
    }

    /// `exp(-i H dt)` applied to an amplitude vector.
    pub fn apply_evolution(&self, dt: f64, amps: &[Complex64]) -> Vec<Complex64> {
        let dim = self.vals.len();
        assert_eq!(amps.len(), dim);
        let x = Array1::from(amps.to_vec());
        let mut y = self.adjoint.dot(&x);
        for (j, v) in y.iter_mut().enumerate() {
            *v *= Complex64::from_polar(1.0, -self.vals[j] * dt);
        }
        self.vecs.dot(&y).to_vec()
    }
}

/// Operator (2-)norm via the largest eigenvalue of `M^dag M`.
pub fn operator_norm(m: &Array2<Complex64>) -> Result<f64> {
    let adjoint = m.t().mapv(|v| v.conj());
    let gram = adjoint.dot(m);
    let (vals, _) = eigh(&gram)?;
    Ok(vals.iter().fold(0.0f64, |a, &v| a.max(v)).max(0.0).sqrt())
}

/// Principal logarithm of a matrix close to the identity, via the Mercator
/// series on `X = M - 1`. Fails when the series does not contract.
pub fn log_near_identity(m: &Array2<Complex64>, tol: f64) -> Result<Array2<Complex64>> {
    let dim = m.nrows();
    let mut x = m.clone();
    for i in 0..dim {
        x[[i, i]] -= Complex64::new(1.0, 0.0);
    }
    if frobenius_norm(&x) >= 0.7 * (dim as f64).sqrt() {
        return Err(Error::Linalg(
            "matrix too far from identity for series logarithm".into(),
        ));
    }
    let mut out = x.clone();
    let mut power = x.clone();
    for k in 2..=80 {
        power = power.dot(&x);
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        let coeff = Complex64::new(sign / k as f64, 0.0);
        out.zip_mut_with(&power, |o, p| *o += coeff * p);
        if frobenius_norm(&power) / k as f64 <= tol {
            return Ok(out);
        }
    }
    Err(Error::Linalg(
        "matrix logarithm series did not converge".into(),
    ))
}

pub fn frobenius_norm(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Real part of the Frobenius inner product `<a, b> = tr(a^dag b)`.
pub fn frobenius_inner_re(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

#[cfg(test)]
pub mod tests_support {
    //! Independent Kronecker-product oracle used by unit tests. Builds dense
    //! operators directly from per-site 2x2 matrices, bypassing the bitmask
    //! code paths under test.

    use super::*;

    pub fn sigma(letter: char) -> Array2<Complex64> {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match letter {
            'I' => ndarray::array![[one, z], [z, one]],
            'X' => ndarray::array![[z, one], [one, z]],
            'Y' => ndarray::array![[z, -i], [i, z]],
            'Z' => ndarray::array![[one, z], [z, -one]],
            _ => panic!("bad Pauli letter {letter}"),
        }
    }

    /// Kronecker product with site 0 as the least-significant bit, matching
    /// the amplitude-index convention.
    pub fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
        let (ra, ca) = a.dim();
        let (rb, cb) = b.dim();
        let mut out = Array2::zeros((ra * rb, ca * cb));
        for i in 0..ra {
            for j in 0..ca {
                for k in 0..rb {
                    for l in 0..cb {
                        out[[i * rb + k, j * cb + l]] = a[[i, j]] * b[[k, l]];
                    }
                }
            }
        }
        out
    }

    /// Dense operator for a letter string, site 0 leftmost in the string and
    /// least significant in the index.
    pub fn dense_from_letters(letters: &str) -> Array2<Complex64> {
        let mut out = ndarray::array![[Complex64::new(1.0, 0.0)]];
        // Higher sites occupy higher bits, so fold from the last letter down.
        for c in letters.chars().rev() {
            out = kron(&out, &sigma(c));
        }
        out
    }

    pub fn matmul(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
        a.dot(b)
    }

    pub fn mat_approx_eq(a: &Array2<Complex64>, b: &Array2<Complex64>, tol: f64) -> bool {
        a.dim() == b.dim()
            && a.iter()
                .zip(b.iter())
                .all(|(x, y)| (x - y).norm() <= tol + 1e-15)
    }

    #[test]
    fn eigh_satisfies_the_eigenproblem() {
        // Random complex Hermitian matrix: A = V D V^dag must reconstruct.
        let n = 8;
        let mut s = 9876543210u64;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mut a = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let re = next();
                let im = if i == j { 0.0 } else { next() };
                a[[i, j]] = Complex64::new(re, im);
                a[[j, i]] = Complex64::new(re, -im);
            }
        }
        let (vals, vecs) = eigh(&a).unwrap();
        let d = Array2::from_diag(&vals.mapv(|v| Complex64::new(v, 0.0)));
        let recon = vecs.dot(&d).dot(&vecs.t().mapv(|v| v.conj()));
        let dev = a
            .iter()
            .zip(recon.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0f64, f64::max);
        assert!(dev < 1e-10, "reconstruction deviation {dev}");
    }

    #[test]
    fn evolution_matrix_matches_closed_form_rotation() {
        // exp(-i phi Y) has real entries [[cos, -sin], [sin, cos]].
        let z = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let y = ndarray::array![[z, -i], [i, z]];
        let eig = HermitianEig::new(&y).unwrap();
        let phi = 0.41f64;
        let u = eig.evolution_matrix(phi);
        let want = ndarray::array![
            [
                Complex64::new(phi.cos(), 0.0),
                Complex64::new(-phi.sin(), 0.0)
            ],
            [
                Complex64::new(phi.sin(), 0.0),
                Complex64::new(phi.cos(), 0.0)
            ]
        ];
        assert!(tests_support::mat_approx_eq(&u, &want, 1e-12));
    }

    #[test]
    fn pauli_sum_dense_matches_kron_oracle() {
        use crate::pauli::{PauliString, PauliSum};
        let mut s = PauliSum::zero(3);
        s.add_term(PauliString::parse("XYZ").unwrap(), Complex64::new(0.5, 0.0));
        s.add_term(
            PauliString::parse("IZI").unwrap(),
            Complex64::new(-1.25, 0.0),
        );
        let got = s.to_dense(12).unwrap();
        let want = dense_from_letters("XYZ").mapv(|v| v * 0.5)
            + dense_from_letters("IZI").mapv(|v| v * -1.25);
        assert!(mat_approx_eq(&got, &want, 1e-14));
    }
}
