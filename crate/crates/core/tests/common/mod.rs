//! Property checks shared by the standalone property suites and the
//! acceptance gate. The dense comparisons here build operators through an
//! independent Kronecker-product oracle rather than the bitmask paths under
//! test.

use ndarray::Array2;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use trotter24::baselines::neville_extrapolate;
use trotter24::formulas::{apply_formula, make_t2, make_t4};
use trotter24::models;
use trotter24::pauli::{multiply, PauliString, PauliSum};
use trotter24::statevector::{CommutingLayer, StateVector};

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

fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
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

/// Site 0 leftmost in the string, least significant in the index.
pub fn dense_from_letters(letters: &str) -> Array2<Complex64> {
    let mut out = ndarray::array![[Complex64::new(1.0, 0.0)]];
    for c in letters.chars().rev() {
        out = kron(&out, &sigma(c));
    }
    out
}

pub fn dense_from_sum(s: &PauliSum) -> Array2<Complex64> {
    let dim = 1usize << s.num_sites();
    let mut out = Array2::zeros((dim, dim));
    for (string, coeff) in s.iter() {
        out = out + dense_from_letters(&string.letters()).mapv(|v| v * coeff);
    }
    out
}

/// Random generator whose terms are guaranteed to pairwise commute, drawn
/// from one of four commuting families.
pub fn random_commuting_sum(rng: &mut ChaCha8Rng, l: usize) -> PauliSum {
    let mask = (1u64 << l) - 1;
    let mut sum = PauliSum::zero(l);
    match rng.random_range(0..4u8) {
        // Pure-X, pure-Z, pure-Y mask families commute internally.
        0 => {
            for _ in 0..3 {
                let m = rng.random_range(1..=mask);
                sum.add_term(
                    PauliString::new(m, 0, l),
                    Complex64::new(rng.random_range(-1.0..1.0), 0.0),
                );
            }
        }
        1 => {
            for _ in 0..3 {
                let m = rng.random_range(1..=mask);
                sum.add_term(
                    PauliString::new(0, m, l),
                    Complex64::new(rng.random_range(-1.0..1.0), 0.0),
                );
            }
        }
        2 => {
            for _ in 0..3 {
                let m = rng.random_range(1..=mask);
                sum.add_term(
                    PauliString::new(m, m, l),
                    Complex64::new(rng.random_range(-1.0..1.0), 0.0),
                );
            }
        }
        // Disjoint supports: one random letter per site, each site its own
        // term.
        _ => {
            for j in 0..l {
                let (x, z) = match rng.random_range(0..3u8) {
                    0 => (1u64 << j, 0),
                    1 => (0, 1u64 << j),
                    _ => (1u64 << j, 1u64 << j),
                };
                sum.add_term(
                    PauliString::new(x, z, l),
                    Complex64::new(rng.random_range(-1.0..1.0), 0.0),
                );
            }
        }
    }
    sum
}

/// Norm preservation over 1000 random layers and states.
pub fn check_unitarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for trial in 0..1000 {
        let l = rng.random_range(2..=6usize);
        let sum = random_commuting_sum(&mut rng, l);
        if sum.is_empty() {
            continue;
        }
        let layer = CommutingLayer::new(sum).unwrap();
        let psi = StateVector::random(l, trial);
        let theta = rng.random_range(-2.0..2.0);
        let out = layer.apply(&psi, theta).unwrap();
        assert!(
            (out.norm() - 1.0).abs() < 1e-10,
            "trial {trial}: norm drift {}",
            (out.norm() - 1.0).abs()
        );
    }
}

/// Applying a layer at `theta` then `-theta` restores the state.
pub fn check_layer_reversibility() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for trial in 0..200 {
        let l = rng.random_range(2..=6usize);
        let sum = random_commuting_sum(&mut rng, l);
        if sum.is_empty() {
            continue;
        }
        let layer = CommutingLayer::new(sum).unwrap();
        let psi = StateVector::random(l, 1000 + trial);
        let theta = rng.random_range(-2.0..2.0);
        let back = layer
            .apply(&layer.apply(&psi, theta).unwrap(), -theta)
            .unwrap();
        assert!(
            psi.max_amp_deviation(&back) < 1e-12,
            "trial {trial}: residue {}",
            psi.max_amp_deviation(&back)
        );
    }
}

/// The palindromic formulas invert under stepsize negation.
pub fn check_time_reversal_symmetric_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for l in [3usize, 4, 5] {
        let h = models::ising_x(l, -1.0, 0.2, -2.0).unwrap();
        for trial in 0..20 {
            let psi = StateVector::random(l, 2000 + trial);
            let dt = rng.random_range(0.01..0.4);
            for f in [make_t2(), make_t4()] {
                let fwd = apply_formula(&f, &h, dt, &psi).unwrap();
                let back = apply_formula(&f, &h, -dt, &fwd).unwrap();
                assert!(
                    psi.max_amp_deviation(&back) < 1e-12,
                    "{} at L={l}, dt={dt}: residue {}",
                    f.label(),
                    psi.max_amp_deviation(&back)
                );
            }
        }
    }
}

/// Bitmask products against the independent Kronecker oracle: all 16
/// single-site pairs and 100 random 3-site pairs, exact in phase.
pub fn check_pauli_dense_equivalence() {
    let letters = ["I", "X", "Y", "Z"];
    for a in letters {
        for b in letters {
            assert_product_matches_dense(a, b);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let alphabet = ['I', 'X', 'Y', 'Z'];
    for _ in 0..100 {
        let a: String = (0..3).map(|_| alphabet[rng.random_range(0..4)]).collect();
        let b: String = (0..3).map(|_| alphabet[rng.random_range(0..4)]).collect();
        assert_product_matches_dense(&a, &b);
    }
}

fn assert_product_matches_dense(a: &str, b: &str) {
    let p = PauliString::parse(a).unwrap();
    let q = PauliString::parse(b).unwrap();
    let r = multiply(&p, &q);
    let want = dense_from_letters(a).dot(&dense_from_letters(b));
    let got = dense_from_letters(&r.letters()).mapv(|v| v * r.phase().to_complex());
    let max_dev = want
        .iter()
        .zip(got.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0f64, f64::max);
    assert!(max_dev == 0.0, "{a} * {b}: deviation {max_dev}");
}

/// Extrapolation weights always sum to one (constants are preserved).
pub fn check_neville_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(59);
    for _ in 0..200 {
        let n = rng.random_range(1..=7usize);
        let mut points = Vec::with_capacity(n);
        let mut x = rng.random_range(0.5..1.0);
        for _ in 0..n {
            points.push((x, rng.random_range(-5.0..5.0)));
            x *= rng.random_range(0.3..0.8);
        }
        let result = neville_extrapolate(&points).unwrap();
        let sum: f64 = result.coefficients.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "weights sum {sum} for {points:?}");
    }
}

/// A composed sequence of layer exponentials equals the dense product of
/// exponentials.
pub fn check_layer_composition_matches_dense() {
    use trotter24::dense::HermitianEig;
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for trial in 0..20 {
        let l = rng.random_range(2..=6usize);
        let dim = 1usize << l;
        let mut dense = Array2::<Complex64>::eye(dim);
        let psi = StateVector::random(l, 3000 + trial);
        let mut state = psi.clone();
        for _ in 0..4 {
            let sum = random_commuting_sum(&mut rng, l);
            if sum.is_empty() {
                continue;
            }
            let theta = rng.random_range(-1.0..1.0);
            let layer = CommutingLayer::new(sum.clone()).unwrap();
            state = layer.apply(&state, theta).unwrap();
            let u = HermitianEig::new(&dense_from_sum(&sum))
                .unwrap()
                .evolution_matrix(theta);
            dense = u.dot(&dense);
        }
        let via_dense: Vec<Complex64> = dense
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(psi.amplitudes()).map(|(m, a)| m * a).sum())
            .collect();
        let via_dense = StateVector::from_amplitudes(l, via_dense).unwrap();
        assert!(
            state.max_amp_deviation(&via_dense) < 1e-12,
            "trial {trial}: deviation {}",
            state.max_amp_deviation(&via_dense)
        );
    }
}
