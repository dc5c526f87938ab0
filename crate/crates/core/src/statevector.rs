//! Dense state-vector engine: exact exponential layers for mutually
//! commuting Pauli sums, inner products and expectations, and the dense
//! exact-evolution oracle.
//!
//! Site `j` of a chain maps to bit `j` of the amplitude index.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dense::HermitianEig;
use crate::error::{Error, Result};
use crate::pauli::{PauliSum, DEFAULT_DENSE_LIMIT};

/// Dense complex amplitudes over the 2^L computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    num_sites: usize,
}

/// Single-qubit polarization axes for product-state preparation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarization {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
    PlusZ,
    MinusZ,
}

impl Polarization {
    fn spinor(self) -> [Complex64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Polarization::PlusX => [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            Polarization::MinusX => [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
            Polarization::PlusY => [Complex64::new(h, 0.0), Complex64::new(0.0, h)],
            Polarization::MinusY => [Complex64::new(h, 0.0), Complex64::new(0.0, -h)],
            Polarization::PlusZ => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            Polarization::MinusZ => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        }
    }
}

impl StateVector {
    pub fn from_amplitudes(num_sites: usize, amps: Vec<Complex64>) -> Result<StateVector> {
        if amps.len() != 1 << num_sites {
            return Err(Error::InvalidConfig(format!(
                "amplitude count {} does not match 2^{num_sites}",
                amps.len()
            )));
        }
        Ok(StateVector { amps, num_sites })
    }

    /// Computational-basis state |index>.
    pub fn basis(num_sites: usize, index: usize) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_sites];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector { amps, num_sites }
    }

    /// Product state with every site polarized along the given axis.
    pub fn polarized(num_sites: usize, axis: Polarization) -> StateVector {
        let spinor = axis.spinor();
        let dim = 1usize << num_sites;
        let mut amps = Vec::with_capacity(dim);
        for n in 0..dim {
            let mut a = Complex64::new(1.0, 0.0);
            for j in 0..num_sites {
                a *= spinor[(n >> j) & 1];
            }
            amps.push(a);
        }
        StateVector { amps, num_sites }
    }

    /// Seeded random normalized state.
    pub fn random(num_sites: usize, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps: Vec<Complex64> = (0..1usize << num_sites)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut s = StateVector { amps, num_sites };
        s.normalize();
        s
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in self.amps.iter_mut() {
                *a /= n;
            }
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.num_sites != other.num_sites {
            return Err(Error::SiteMismatch(self.num_sites, other.num_sites));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn max_amp_deviation(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Little-endian interleaved re/im doubles; a debugging aid, not a
    /// stability contract.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(num_sites: usize, r: &mut R) -> Result<StateVector> {
        let dim = 1usize << num_sites;
        let mut amps = Vec::with_capacity(dim);
        let mut buf = [0u8; 16];
        for _ in 0..dim {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            amps.push(Complex64::new(re, im));
        }
        StateVector::from_amplitudes(num_sites, amps)
    }
}

/// `|<phi|psi>|^2`.
pub fn fidelity(phi: &StateVector, psi: &StateVector) -> Result<f64> {
    Ok(phi.inner(psi)?.norm_sqr())
}

/// `<psi|O|psi>` for a Hermitian observable; the imaginary residue is
/// asserted below 1e-10 and discarded.
pub fn expectation(obs: &PauliSum, psi: &StateVector) -> Result<f64> {
    if obs.num_sites() != psi.num_sites {
        return Err(Error::SiteMismatch(obs.num_sites(), psi.num_sites));
    }
    if !obs.is_hermitian() {
        return Err(Error::NonHermitian);
    }
    let mut applied = vec![Complex64::new(0.0, 0.0); psi.amps.len()];
    obs.accumulate_action(&psi.amps, &mut applied);
    let val: Complex64 = psi
        .amps
        .iter()
        .zip(&applied)
        .map(|(a, b)| a.conj() * b)
        .sum();
    debug_assert!(
        val.im.abs() < 1e-10,
        "imaginary residue {} in Hermitian expectation",
        val.im
    );
    Ok(val.re)
}

#[derive(Clone, Debug)]
enum ApplyPlan {
    /// All strings diagonal: precomputed eigenvalue per basis state.
    Diagonal { eigenvalues: Vec<f64> },
    /// Identical single-site terms with a common coefficient (e.g. a uniform
    /// transverse field): rotation angle hoisted out of the site loop.
    UniformSingleSite {
        rotations: Vec<TermRotation>,
        coeff: f64,
    },
    /// General commuting terms: per-term 2x2 rotations in the +-1 eigenbasis
    /// of each string.
    PerTerm { rotations: Vec<TermRotation> },
}

#[derive(Clone, Copy, Debug)]
struct TermRotation {
    x_mask: u64,
    z_mask: u64,
    coeff: f64,
    /// i^{|x & z|}, the canonical-string phase.
    string_phase: Complex64,
}

/// Exponential layer `exp(-i theta G)` for a Hermitian generator `G` whose
/// terms pairwise commute, applied exactly (each term's exponential is a
/// closed-form involution rotation).
#[derive(Clone, Debug)]
pub struct CommutingLayer {
    generator: PauliSum,
    plan: ApplyPlan,
    num_sites: usize,
}

fn parity64(v: u64) -> bool {
    v.count_ones() & 1 == 1
}

impl CommutingLayer {
    pub fn new(generator: PauliSum) -> Result<CommutingLayer> {
        if !generator.is_hermitian() {
            return Err(Error::NonHermitian);
        }
        if !generator.terms_pairwise_commute() {
            return Err(Error::NonCommutingLayer);
        }
        let num_sites = generator.num_sites();
        let rotations: Vec<TermRotation> = generator
            .iter()
            .map(|(s, c)| TermRotation {
                x_mask: s.x_mask(),
                z_mask: s.z_mask(),
                coeff: c.re,
                string_phase: phase_i_pow((s.x_mask() & s.z_mask()).count_ones()),
            })
            .collect();

        let plan = if rotations.iter().all(|r| r.x_mask == 0) {
            let dim = 1usize << num_sites;
            let mut eigenvalues = vec![0.0f64; dim];
            for r in &rotations {
                for (n, e) in eigenvalues.iter_mut().enumerate() {
                    *e += if parity64(n as u64 & r.z_mask) {
                        -r.coeff
                    } else {
                        r.coeff
                    };
                }
            }
            ApplyPlan::Diagonal { eigenvalues }
        } else if uniform_single_site(&rotations) {
            let coeff = rotations[0].coeff;
            ApplyPlan::UniformSingleSite { rotations, coeff }
        } else {
            ApplyPlan::PerTerm { rotations }
        };

        Ok(CommutingLayer {
            generator,
            plan,
            num_sites,
        })
    }

    pub fn generator(&self) -> &PauliSum {
        &self.generator
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn apply(&self, state: &StateVector, theta: f64) -> Result<StateVector> {
        let mut out = state.clone();
        self.apply_in_place(&mut out, theta)?;
        Ok(out)
    }

    pub fn apply_in_place(&self, state: &mut StateVector, theta: f64) -> Result<()> {
        if state.num_sites != self.num_sites {
            return Err(Error::SiteMismatch(state.num_sites, self.num_sites));
        }
        if theta == 0.0 {
            return Ok(());
        }
        match &self.plan {
            ApplyPlan::Diagonal { eigenvalues } => {
                for (a, &e) in state.amps.iter_mut().zip(eigenvalues) {
                    *a *= Complex64::from_polar(1.0, -theta * e);
                }
            }
            ApplyPlan::UniformSingleSite { rotations, coeff } => {
                let (sin, cos) = (theta * coeff).sin_cos();
                for r in rotations {
                    rotate_term(&mut state.amps, r, cos, sin);
                }
            }
            ApplyPlan::PerTerm { rotations } => {
                for r in rotations {
                    let (sin, cos) = (theta * r.coeff).sin_cos();
                    rotate_term(&mut state.amps, r, cos, sin);
                }
            }
        }
        Ok(())
    }
}

fn phase_i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn uniform_single_site(rotations: &[TermRotation]) -> bool {
    if rotations.is_empty() {
        return false;
    }
    let first = &rotations[0];
    let axis = (first.x_mask != 0, first.z_mask != 0);
    rotations.iter().all(|r| {
        (r.x_mask | r.z_mask).count_ones() == 1
            && (r.x_mask != 0, r.z_mask != 0) == axis
            && r.coeff == first.coeff
    })
}

/// `exp(-i phi c P)` on the amplitudes, using `P^2 = 1`:
/// `cos(phi c) - i sin(phi c) P`.
fn rotate_term(amps: &mut [Complex64], r: &TermRotation, cos: f64, sin: f64) {
    let minus_i_sin = Complex64::new(0.0, -sin) * r.string_phase;
    if r.x_mask == 0 {
        let plus = Complex64::new(cos, 0.0) + minus_i_sin;
        let minus = Complex64::new(cos, 0.0) - minus_i_sin;
        for (n, a) in amps.iter_mut().enumerate() {
            *a *= if parity64(n as u64 & r.z_mask) {
                minus
            } else {
                plus
            };
        }
        return;
    }
    let pivot = 1usize << (63 - r.x_mask.leading_zeros());
    let xs = r.x_mask as usize;
    for n in 0..amps.len() {
        if n & pivot != 0 {
            continue;
        }
        let m = n ^ xs;
        let an = amps[n];
        let am = amps[m];
        // (P a)[n] picks up the Z-parity sign of the source index.
        let sign_from_m = if parity64(m as u64 & r.z_mask) {
            -1.0
        } else {
            1.0
        };
        let sign_from_n = if parity64(n as u64 & r.z_mask) {
            -1.0
        } else {
            1.0
        };
        amps[n] = cos * an + minus_i_sin * sign_from_m * am;
        amps[m] = cos * am + minus_i_sin * sign_from_n * an;
    }
}

/// Exact propagator `exp(-i H dt)` from a cached dense eigendecomposition.
#[derive(Clone, Debug)]
pub struct ExactPropagator {
    eig: HermitianEig,
    num_sites: usize,
}

impl ExactPropagator {
    pub fn new(h: &PauliSum, dense_limit: usize) -> Result<ExactPropagator> {
        if !h.is_hermitian() {
            return Err(Error::NonHermitian);
        }
        let dense = h.to_dense(dense_limit)?;
        Ok(ExactPropagator {
            eig: HermitianEig::new(&dense)?,
            num_sites: h.num_sites(),
        })
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn evolve(&self, state: &StateVector, dt: f64) -> Result<StateVector> {
        if state.num_sites != self.num_sites {
            return Err(Error::SiteMismatch(state.num_sites, self.num_sites));
        }
        let amps = self.eig.apply_evolution(dt, &state.amps);
        StateVector::from_amplitudes(self.num_sites, amps)
    }

    /// Dense `exp(-i H dt)`, for operator-norm comparisons.
    pub fn evolution_matrix(&self, dt: f64) -> ndarray::Array2<Complex64> {
        self.eig.evolution_matrix(dt)
    }
}

/// One-shot exact evolution; loops should hold an [`ExactPropagator`] so the
/// eigendecomposition is reused.
pub fn exact_evolve(state: &StateVector, h: &PauliSum, dt: f64) -> Result<StateVector> {
    ExactPropagator::new(h, DEFAULT_DENSE_LIMIT)?.evolve(state, dt)
}
