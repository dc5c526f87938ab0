//! Pauli-string algebra over bitmask pairs.
//!
//! A string is stored as `(x_mask, z_mask)` plus a power of `i`; the phase
//! convention is fixed so that the canonical operator for a mask pair is the
//! Hermitian tensor product of single-site Paulis (`Y` where both bits are
//! set). Products and commutation tests are then popcount parities, which is
//! what makes nested commutators of many-body Hamiltonians cheap to build
//! symbolically.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lanczos::{extremal_abs_eigenvalue, LanczosOptions};

/// Coefficients with magnitude below this are dropped after arithmetic.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-14;

/// Largest site count for which dense 2^L x 2^L materialization is allowed.
pub const DEFAULT_DENSE_LIMIT: usize = 12;

const HERMITIAN_TOL: f64 = 1e-12;

/// Power of the imaginary unit, the phase group of Pauli products.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    fn from_exponent(k: u32) -> Phase {
        Phase((k % 4) as u8)
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        })
    }
}

/// A single Pauli string `phase * P(x, z)` on `num_sites` sites, where
/// `P(x, z) = i^{|x & z|} X^x Z^z` is the Hermitian canonical string.
///
/// Site `j` corresponds to bit `j` of the masks.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PauliString {
    x_mask: u64,
    z_mask: u64,
    phase: Phase,
    num_sites: usize,
}

fn parity(mask: u64) -> u32 {
    mask.count_ones() & 1
}

impl PauliString {
    /// Canonical (phase `+1`) string from mask pair.
    pub fn new(x_mask: u64, z_mask: u64, num_sites: usize) -> PauliString {
        assert!(num_sites <= 64, "at most 64 sites supported");
        let live = mask_for(num_sites);
        assert!(
            x_mask & !live == 0 && z_mask & !live == 0,
            "mask bits set beyond site count"
        );
        PauliString {
            x_mask,
            z_mask,
            phase: Phase::ONE,
            num_sites,
        }
    }

    pub fn identity(num_sites: usize) -> PauliString {
        PauliString::new(0, 0, num_sites)
    }

    /// Single-site constructors.
    pub fn x(site: usize, num_sites: usize) -> PauliString {
        PauliString::new(1 << site, 0, num_sites)
    }
    pub fn y(site: usize, num_sites: usize) -> PauliString {
        PauliString::new(1 << site, 1 << site, num_sites)
    }
    pub fn z(site: usize, num_sites: usize) -> PauliString {
        PauliString::new(0, 1 << site, num_sites)
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }
    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }
    pub fn phase(&self) -> Phase {
        self.phase
    }
    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// Parse a string like `"XIZZ"` (site 0 leftmost) into a canonical string.
    pub fn parse(s: &str) -> Result<PauliString> {
        let mut x = 0u64;
        let mut z = 0u64;
        let n = s.len();
        if n > 64 {
            return Err(Error::InvalidConfig(format!(
                "Pauli string '{s}' longer than 64 sites"
            )));
        }
        for (j, c) in s.chars().enumerate() {
            match c {
                'I' => {}
                'X' => x |= 1 << j,
                'Y' => {
                    x |= 1 << j;
                    z |= 1 << j;
                }
                'Z' => z |= 1 << j,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "invalid Pauli letter '{other}' in '{s}'"
                    )))
                }
            }
        }
        Ok(PauliString::new(x, z, n))
    }

    /// Letters of the canonical string, site 0 leftmost. The phase is not
    /// encoded here.
    pub fn letters(&self) -> String {
        (0..self.num_sites)
            .map(|j| match ((self.x_mask >> j) & 1, (self.z_mask >> j) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (1, 1) => 'Y',
                _ => 'Z',
            })
            .collect()
    }

    /// True when the two strings commute (symplectic product is even).
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        (parity(self.x_mask & other.z_mask) ^ parity(self.z_mask & other.x_mask)) == 0
    }
}

/// Group product of two Pauli strings with exact phase tracking.
pub fn multiply(p: &PauliString, q: &PauliString) -> PauliString {
    assert_eq!(
        p.num_sites, q.num_sites,
        "Pauli product requires equal site counts"
    );
    let x = p.x_mask ^ q.x_mask;
    let z = p.z_mask ^ q.z_mask;
    // Exponent of i, derived from X^x Z^z reordering plus the canonical
    // i^{|x & z|} factors on operands and result.
    let k = p.phase.0 as u32
        + q.phase.0 as u32
        + (p.x_mask & p.z_mask).count_ones()
        + (q.x_mask & q.z_mask).count_ones()
        + 2 * (p.z_mask & q.x_mask).count_ones()
        + 3 * (x & z).count_ones();
    PauliString {
        x_mask: x,
        z_mask: z,
        phase: Phase::from_exponent(k),
        num_sites: p.num_sites,
    }
}

fn mask_for(num_sites: usize) -> u64 {
    if num_sites == 64 {
        u64::MAX
    } else {
        (1u64 << num_sites) - 1
    }
}

/// A weighted sum of Pauli strings.
///
/// Terms map canonical mask pairs to complex coefficients; string phases are
/// folded into the coefficients on insertion, so a sum is Hermitian exactly
/// when every stored coefficient is real.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    terms: BTreeMap<(u64, u64), Complex64>,
    num_sites: usize,
}

impl PauliSum {
    pub fn zero(num_sites: usize) -> PauliSum {
        PauliSum {
            terms: BTreeMap::new(),
            num_sites,
        }
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterate terms in canonical (mask-ordered) deterministic order.
    pub fn iter(&self) -> impl Iterator<Item = (PauliString, Complex64)> + '_ {
        self.terms
            .iter()
            .map(move |(&(x, z), &c)| (PauliString::new(x, z, self.num_sites), c))
    }

    /// Add `coeff * string`, folding the string's phase into the coefficient.
    pub fn add_term(&mut self, string: PauliString, coeff: Complex64) {
        assert_eq!(string.num_sites, self.num_sites);
        let c = coeff * string.phase.to_complex();
        let entry = self
            .terms
            .entry((string.x_mask, string.z_mask))
            .or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() < DEFAULT_PRUNE_THRESHOLD {
            self.terms.remove(&(string.x_mask, string.z_mask));
        }
    }

    pub fn from_terms<I>(num_sites: usize, terms: I) -> PauliSum
    where
        I: IntoIterator<Item = (PauliString, Complex64)>,
    {
        let mut sum = PauliSum::zero(num_sites);
        for (s, c) in terms {
            sum.add_term(s, c);
        }
        sum
    }

    pub fn scaled(&self, factor: Complex64) -> PauliSum {
        let mut out = self.clone();
        if factor.norm() == 0.0 {
            return PauliSum::zero(self.num_sites);
        }
        for c in out.terms.values_mut() {
            *c *= factor;
        }
        out.prune(DEFAULT_PRUNE_THRESHOLD);
        out
    }

    pub fn add(&self, other: &PauliSum) -> PauliSum {
        assert_eq!(self.num_sites, other.num_sites);
        let mut out = self.clone();
        for (&k, &c) in &other.terms {
            let entry = out.terms.entry(k).or_insert(Complex64::new(0.0, 0.0));
            *entry += c;
        }
        out.prune(DEFAULT_PRUNE_THRESHOLD);
        out
    }

    /// Drop terms with coefficient magnitude below `threshold`.
    pub fn prune(&mut self, threshold: f64) {
        self.terms.retain(|_, c| c.norm() >= threshold);
    }

    /// Operator product, expanding all pairwise string products.
    pub fn product(&self, other: &PauliSum) -> PauliSum {
        assert_eq!(self.num_sites, other.num_sites);
        let mut out = PauliSum::zero(self.num_sites);
        for (p, cp) in self.iter() {
            for (q, cq) in other.iter() {
                out.add_term(multiply(&p, &q), cp * cq);
            }
        }
        out
    }

    /// True when every coefficient is real to within roundoff, which in the
    /// canonical basis is exactly Hermiticity of the dense operator.
    pub fn is_hermitian(&self) -> bool {
        let scale = self.terms.values().map(|c| c.norm()).fold(1.0f64, f64::max);
        self.terms
            .values()
            .all(|c| c.im.abs() <= HERMITIAN_TOL * scale)
    }

    /// True when every coefficient is purely imaginary (operator is i times
    /// a Hermitian one).
    pub fn is_anti_hermitian(&self) -> bool {
        let scale = self.terms.values().map(|c| c.norm()).fold(1.0f64, f64::max);
        self.terms
            .values()
            .all(|c| c.re.abs() <= HERMITIAN_TOL * scale)
    }

    /// True when all stored strings pairwise commute.
    pub fn terms_pairwise_commute(&self) -> bool {
        let strings: Vec<PauliString> = self.iter().map(|(s, _)| s).collect();
        for (i, p) in strings.iter().enumerate() {
            for q in &strings[i + 1..] {
                if !p.commutes_with(q) {
                    return false;
                }
            }
        }
        true
    }

    /// Matrix-free action on an amplitude vector: `out += sum * input`.
    ///
    /// `out` must be zeroed by the caller when a plain product is wanted.
    pub fn accumulate_action(&self, input: &[Complex64], out: &mut [Complex64]) {
        let dim = 1usize << self.num_sites;
        assert_eq!(input.len(), dim);
        assert_eq!(out.len(), dim);
        for (&(x, z), &c) in &self.terms {
            let base = Phase::from_exponent((x & z).count_ones()).to_complex() * c;
            let xs = x as usize;
            for n in 0..dim {
                let amp = input[n];
                let sign = if parity(n as u64 & z) == 1 { -1.0 } else { 1.0 };
                out[n ^ xs] += base * sign * amp;
            }
        }
    }

    /// Dense `2^L x 2^L` materialization; refused above `dense_limit`.
    pub fn to_dense(&self, dense_limit: usize) -> Result<Array2<Complex64>> {
        if self.num_sites > dense_limit {
            return Err(Error::DenseLimit {
                sites: self.num_sites,
                limit: dense_limit,
            });
        }
        let dim = 1usize << self.num_sites;
        let mut m = Array2::<Complex64>::zeros((dim, dim));
        for (&(x, z), &c) in &self.terms {
            let base = Phase::from_exponent((x & z).count_ones()).to_complex() * c;
            let xs = x as usize;
            for n in 0..dim {
                let sign = if parity(n as u64 & z) == 1 { -1.0 } else { 1.0 };
                m[[n ^ xs, n]] += base * sign;
            }
        }
        Ok(m)
    }

    /// Largest absolute eigenvalue.
    ///
    /// Hermitian sums are handled directly; anti-Hermitian ones are rotated
    /// by `i` first. Dense eigendecomposition below the dense limit, seeded
    /// Lanczos with full reorthogonalization above it.
    pub fn spectral_norm(&self, opts: &NormOptions) -> Result<f64> {
        if self.terms.is_empty() {
            return Ok(0.0);
        }
        let hermitian = if self.is_hermitian() {
            self.clone()
        } else if self.is_anti_hermitian() {
            self.scaled(Complex64::new(0.0, 1.0))
        } else {
            return Err(Error::NonHermitian);
        };
        if self.num_sites <= opts.dense_limit {
            let dense = hermitian.to_dense(opts.dense_limit)?;
            let vals = crate::dense::eigh(&dense)?.0;
            Ok(vals.iter().fold(0.0f64, |m, &v| m.max(v.abs())))
        } else {
            let dim = 1usize << self.num_sites;
            let lanczos = LanczosOptions {
                max_dim: opts.max_krylov,
                rel_tol: opts.rel_tol,
                seed: opts.seed,
            };
            extremal_abs_eigenvalue(dim, |v, out| hermitian.accumulate_action(v, out), &lanczos)
        }
    }

    /// Textual term list `{coefficient, string}` used in config files.
    ///
    /// Only real-coefficient (Hermitian) sums are representable; round-trips
    /// exactly through `from_text_terms`.
    pub fn to_text_terms(&self) -> Result<Vec<(f64, String)>> {
        if !self.is_hermitian() {
            return Err(Error::NonHermitian);
        }
        Ok(self.iter().map(|(s, c)| (c.re, s.letters())).collect())
    }

    pub fn from_text_terms(num_sites: usize, terms: &[(f64, String)]) -> Result<PauliSum> {
        let mut sum = PauliSum::zero(num_sites);
        for (coeff, letters) in terms {
            let s = PauliString::parse(letters)?;
            if s.num_sites() != num_sites {
                return Err(Error::SiteMismatch(s.num_sites(), num_sites));
            }
            sum.add_term(s, Complex64::new(*coeff, 0.0));
        }
        Ok(sum)
    }
}

/// `ab - ba`, skipping string pairs that commute (their products cancel
/// exactly, so only anticommuting pairs contribute `2ab`).
pub fn commutator(a: &PauliSum, b: &PauliSum) -> PauliSum {
    assert_eq!(a.num_sites(), b.num_sites());
    let mut out = PauliSum::zero(a.num_sites());
    for (p, cp) in a.iter() {
        for (q, cq) in b.iter() {
            if p.commutes_with(&q) {
                continue;
            }
            out.add_term(multiply(&p, &q), 2.0 * cp * cq);
        }
    }
    out
}

/// Options for `PauliSum::spectral_norm`.
#[derive(Clone, Copy, Debug)]
pub struct NormOptions {
    pub dense_limit: usize,
    pub max_krylov: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            dense_limit: DEFAULT_DENSE_LIMIT,
            max_krylov: 200,
            rel_tol: 1e-6,
            seed: 7,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::tests_support::{dense_from_letters, mat_approx_eq, matmul};
    use num_complex::Complex64 as C;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn single_site_product_phases() {
        let z = PauliString::z(0, 1);
        let x = PauliString::x(0, 1);
        let y = PauliString::y(0, 1);
        let zx = multiply(&z, &x);
        assert_eq!(zx.letters(), "Y");
        assert_eq!(zx.phase(), Phase::I);

        let xx = multiply(&x, &x);
        assert!(xx.is_identity());
        assert_eq!(xx.phase(), Phase::ONE);

        let xy = multiply(&x, &y);
        assert_eq!(xy.letters(), "Z");
        assert_eq!(xy.phase(), Phase::I);
    }

    #[test]
    fn product_matches_dense_all_single_site_pairs() {
        let letters = ["I", "X", "Y", "Z"];
        for a in letters {
            for b in letters {
                let p = PauliString::parse(a).unwrap();
                let q = PauliString::parse(b).unwrap();
                let r = multiply(&p, &q);
                let dense = matmul(&dense_from_letters(a), &dense_from_letters(b));
                let got = dense_from_letters(&r.letters()).mapv(|v| v * r.phase().to_complex());
                assert!(
                    mat_approx_eq(&dense, &got, 0.0),
                    "{a} * {b}: phase mismatch"
                );
            }
        }
    }

    #[test]
    fn product_matches_dense_random_three_site_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let letters = ['I', 'X', 'Y', 'Z'];
        for _ in 0..100 {
            let a: String = (0..3).map(|_| letters[rng.random_range(0..4)]).collect();
            let b: String = (0..3).map(|_| letters[rng.random_range(0..4)]).collect();
            let p = PauliString::parse(&a).unwrap();
            let q = PauliString::parse(&b).unwrap();
            let r = multiply(&p, &q);
            let dense = matmul(&dense_from_letters(&a), &dense_from_letters(&b));
            let got = dense_from_letters(&r.letters()).mapv(|v| v * r.phase().to_complex());
            assert!(mat_approx_eq(&dense, &got, 0.0), "{a} * {b}");
        }
    }

    #[test]
    fn two_site_product_with_dense_oracle() {
        // (X (x) Z) * (Z (x) Z): per-site X*Z = -i Y on site 0, Z*Z = I on site 1.
        let p = PauliString::parse("XZ").unwrap();
        let q = PauliString::parse("ZZ").unwrap();
        let r = multiply(&p, &q);
        assert_eq!(r.letters(), "YI");
        let dense = matmul(&dense_from_letters("XZ"), &dense_from_letters("ZZ"));
        let got = dense_from_letters("YI").mapv(|v| v * r.phase().to_complex());
        assert!(mat_approx_eq(&dense, &got, 0.0));
        assert_eq!(r.phase(), Phase::MINUS_I);
    }

    #[test]
    fn commutator_single_site() {
        let z = PauliSum::from_terms(1, [(PauliString::z(0, 1), c(1.0, 0.0))]);
        let x = PauliSum::from_terms(1, [(PauliString::x(0, 1), c(1.0, 0.0))]);
        let zx = commutator(&z, &x);
        // [Z, X] = 2iY
        assert_eq!(zx.num_terms(), 1);
        let (s, coeff) = zx.iter().next().unwrap();
        assert_eq!(s.letters(), "Y");
        assert!((coeff - c(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn self_commutator_vanishes() {
        let a = PauliSum::from_terms(
            2,
            [
                (PauliString::x(0, 2), c(0.7, 0.0)),
                (PauliString::parse("ZZ").unwrap(), c(-1.3, 0.0)),
            ],
        );
        assert!(commutator(&a, &a).is_empty());
    }

    #[test]
    fn nested_commutator_single_site() {
        // A = X, B = Z: [B, [B, A]] = 4 X.
        let a = PauliSum::from_terms(1, [(PauliString::x(0, 1), c(1.0, 0.0))]);
        let b = PauliSum::from_terms(1, [(PauliString::z(0, 1), c(1.0, 0.0))]);
        let nested = commutator(&b, &commutator(&b, &a));
        assert_eq!(nested.num_terms(), 1);
        let (s, coeff) = nested.iter().next().unwrap();
        assert_eq!(s.letters(), "X");
        assert!((coeff - c(4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn commutator_antisymmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let l = 3;
            let rand_sum = |rng: &mut ChaCha8Rng| {
                let mut s = PauliSum::zero(l);
                for _ in 0..4 {
                    let x = rng.random_range(0..8u64);
                    let z = rng.random_range(0..8u64);
                    s.add_term(
                        PauliString::new(x, z, l),
                        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    );
                }
                s
            };
            let a = rand_sum(&mut rng);
            let b = rand_sum(&mut rng);
            let ab = commutator(&a, &b);
            let ba = commutator(&b, &a);
            let sum = ab.add(&ba);
            assert!(sum.is_empty(), "commutator not antisymmetric");
        }
    }

    #[test]
    fn hermiticity_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let l = 3;
            let rand_herm = |rng: &mut ChaCha8Rng| {
                let mut s = PauliSum::zero(l);
                for _ in 0..4 {
                    let x = rng.random_range(0..8u64);
                    let z = rng.random_range(0..8u64);
                    s.add_term(
                        PauliString::new(x, z, l),
                        c(rng.random_range(-1.0..1.0), 0.0),
                    );
                }
                s
            };
            let a = rand_herm(&mut rng);
            let b = rand_herm(&mut rng);
            let comm = commutator(&a, &b);
            assert!(comm.scaled(c(0.0, 1.0)).is_hermitian());
            assert!(commutator(&b, &comm).is_hermitian());
        }
    }

    #[test]
    fn is_hermitian_matches_dense_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let l = rng.random_range(1..=4usize);
            let dim_mask = (1u64 << l) - 1;
            let mut s = PauliSum::zero(l);
            for _ in 0..5 {
                let x = rng.random_range(0..=dim_mask);
                let z = rng.random_range(0..=dim_mask);
                let coeff = if rng.random_bool(0.5) {
                    c(rng.random_range(-1.0..1.0), 0.0)
                } else {
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                };
                s.add_term(PauliString::new(x, z, l), coeff);
            }
            let dense = s.to_dense(4).unwrap();
            let adjoint = dense.t().mapv(|v| v.conj());
            let dense_hermitian = mat_approx_eq(&dense, &adjoint, 1e-12);
            assert_eq!(s.is_hermitian(), dense_hermitian);
        }
    }

    #[test]
    fn to_dense_examples() {
        let two_z = PauliSum::from_terms(1, [(PauliString::z(0, 1), c(2.0, 0.0))]);
        let m = two_z.to_dense(12).unwrap();
        assert!((m[[0, 0]] - c(2.0, 0.0)).norm() < 1e-15);
        assert!((m[[1, 1]] - c(-2.0, 0.0)).norm() < 1e-15);
        assert!(m[[0, 1]].norm() < 1e-15 && m[[1, 0]].norm() < 1e-15);

        let empty = PauliSum::zero(2);
        let m = empty.to_dense(12).unwrap();
        assert!(m.iter().all(|v| v.norm() == 0.0));

        let over = PauliSum::zero(13);
        assert!(matches!(
            over.to_dense(12),
            Err(Error::DenseLimit {
                sites: 13,
                limit: 12
            })
        ));
    }

    #[test]
    fn spectral_norm_closed_forms() {
        let two_z = PauliSum::from_terms(1, [(PauliString::z(0, 1), c(2.0, 0.0))]);
        assert!((two_z.spectral_norm(&NormOptions::default()).unwrap() - 2.0).abs() < 1e-12);

        let xz = PauliSum::from_terms(
            1,
            [
                (PauliString::x(0, 1), c(1.0, 0.0)),
                (PauliString::z(0, 1), c(1.0, 0.0)),
            ],
        );
        let norm = xz.spectral_norm(&NormOptions::default()).unwrap();
        assert!((norm - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_iterative_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for l in [4usize, 6, 8] {
            let dim_mask = (1u64 << l) - 1;
            let mut s = PauliSum::zero(l);
            for _ in 0..6 {
                let x = rng.random_range(0..=dim_mask);
                let z = rng.random_range(0..=dim_mask);
                s.add_term(
                    PauliString::new(x, z, l),
                    c(rng.random_range(-1.0..1.0), 0.0),
                );
            }
            let dense_opts = NormOptions::default();
            let iter_opts = NormOptions {
                dense_limit: 0,
                ..NormOptions::default()
            };
            let nd = s.spectral_norm(&dense_opts).unwrap();
            let ni = s.spectral_norm(&iter_opts).unwrap();
            assert!(
                (nd - ni).abs() <= 1e-6 * nd.max(1e-30),
                "L={l}: dense {nd} vs iterative {ni}"
            );
        }
    }

    #[test]
    fn prune_drops_noise_terms() {
        let mut s = PauliSum::zero(2);
        s.add_term(PauliString::x(0, 2), c(1.0, 0.0));
        s.add_term(PauliString::z(1, 2), c(1e-16, 0.0));
        assert_eq!(s.num_terms(), 1);
        s.add_term(PauliString::x(0, 2), c(-1.0, 0.0));
        assert!(s.is_empty());
    }

    #[test]
    fn text_terms_round_trip() {
        let sum = PauliSum::from_terms(
            4,
            [
                (PauliString::parse("XIZZ").unwrap(), c(-2.0, 0.0)),
                (PauliString::parse("IYII").unwrap(), c(0.25, 0.0)),
            ],
        );
        let text = sum.to_text_terms().unwrap();
        let back = PauliSum::from_text_terms(4, &text).unwrap();
        assert_eq!(sum, back);
    }
}
