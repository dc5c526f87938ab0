//! Circuit-implementable one-step error estimators: the fidelity and
//! observable errors of a second-order step measured against a third- or
//! fourth-order companion step, plus the variance form built from the
//! leading error operator.

use ndarray::Array2;
use num_complex::Complex64;

use crate::dense::{frobenius_inner_re, frobenius_norm, log_near_identity, HermitianEig};
use crate::error::{Error, Result};
use crate::formulas::{self, PartId, SplitHamiltonian};
use crate::pauli::{commutator, PauliSum, DEFAULT_DENSE_LIMIT};
use crate::statevector::{expectation, fidelity, ExactPropagator, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Fidelity,
    Observable,
}

/// Which formula pair produced the estimate: (2,4) or (2,3).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormulaPair {
    TwoFour,
    TwoThree,
}

#[derive(Clone, Copy, Debug)]
pub struct ErrorEstimate {
    pub value: f64,
    pub kind: ErrorKind,
    pub pair: FormulaPair,
    pub dt: f64,
    pub t: f64,
}

/// An estimate together with both evolved states, so an accepted step can
/// reuse the second-order state without recomputation.
#[derive(Clone, Debug)]
pub struct EtaStep {
    pub estimate: ErrorEstimate,
    pub psi2: StateVector,
    pub psi4: StateVector,
}

fn fidelity_eta(value: f64) -> Result<f64> {
    if value < -1e-12 {
        return Err(Error::NegativeFidelity(value));
    }
    Ok(value.max(0.0))
}

/// `1 - |<psi4|psi2>|^2` with both states evolved from `psi`.
pub fn eta_f_24(h: &SplitHamiltonian, psi: &StateVector, t: f64, dt: f64) -> Result<EtaStep> {
    let psi2 = formulas::t2_step(h, t, dt, psi)?;
    let psi4 = formulas::t4_step(h, t, dt, psi)?;
    let value = fidelity_eta(1.0 - fidelity(&psi4, &psi2)?)?;
    Ok(EtaStep {
        estimate: ErrorEstimate {
            value,
            kind: ErrorKind::Fidelity,
            pair: FormulaPair::TwoFour,
            dt,
            t,
        },
        psi2,
        psi4,
    })
}

/// Signed `<psi4|O|psi4> - <psi2|O|psi2>`; the caller compares `|eta|`.
pub fn eta_o_24(
    h: &SplitHamiltonian,
    obs: &PauliSum,
    psi: &StateVector,
    t: f64,
    dt: f64,
) -> Result<EtaStep> {
    let psi2 = formulas::t2_step(h, t, dt, psi)?;
    let psi4 = formulas::t4_step(h, t, dt, psi)?;
    let value = expectation(obs, &psi4)? - expectation(obs, &psi2)?;
    Ok(EtaStep {
        estimate: ErrorEstimate {
            value,
            kind: ErrorKind::Observable,
            pair: FormulaPair::TwoFour,
            dt,
            t,
        },
        psi2,
        psi4,
    })
}

/// (2,3) fidelity variant; time-independent Hamiltonians only.
pub fn eta_f_23(h: &SplitHamiltonian, psi: &StateVector, t: f64, dt: f64) -> Result<EtaStep> {
    if !h.is_time_independent() {
        return Err(Error::TimeDependent);
    }
    let psi2 = formulas::t2_step(h, t, dt, psi)?;
    let psi3 = formulas::t3_step(h, t, dt, psi)?;
    let value = fidelity_eta(1.0 - fidelity(&psi3, &psi2)?)?;
    Ok(EtaStep {
        estimate: ErrorEstimate {
            value,
            kind: ErrorKind::Fidelity,
            pair: FormulaPair::TwoThree,
            dt,
            t,
        },
        psi2,
        psi4: psi3,
    })
}

/// (2,3) observable variant; time-independent Hamiltonians only.
pub fn eta_o_23(
    h: &SplitHamiltonian,
    obs: &PauliSum,
    psi: &StateVector,
    t: f64,
    dt: f64,
) -> Result<EtaStep> {
    if !h.is_time_independent() {
        return Err(Error::TimeDependent);
    }
    let psi2 = formulas::t2_step(h, t, dt, psi)?;
    let psi3 = formulas::t3_step(h, t, dt, psi)?;
    let value = expectation(obs, &psi3)? - expectation(obs, &psi2)?;
    Ok(EtaStep {
        estimate: ErrorEstimate {
            value,
            kind: ErrorKind::Observable,
            pair: FormulaPair::TwoThree,
            dt,
            t,
        },
        psi2,
        psi4: psi3,
    })
}

/// Reference evolution for exact per-step errors: a cached dense propagator
/// where available, a tiny-step fourth-order composite otherwise.
pub enum ExactReference<'a> {
    Dense(&'a ExactPropagator),
    TinyStepT4 {
        h: &'a SplitHamiltonian,
        dt_ref: f64,
    },
}

impl ExactReference<'_> {
    pub fn evolve(&self, psi: &StateVector, t: f64, dt: f64) -> Result<StateVector> {
        match self {
            ExactReference::Dense(prop) => prop.evolve(psi, dt),
            ExactReference::TinyStepT4 { h, dt_ref } => {
                formulas::t4_reference_evolve(h, t, t + dt, *dt_ref, psi)
            }
        }
    }
}

/// Actual one-step fidelity error of the second-order step.
pub fn eta_f_exact(
    h: &SplitHamiltonian,
    reference: &ExactReference,
    psi: &StateVector,
    t: f64,
    dt: f64,
) -> Result<f64> {
    let psi2 = formulas::t2_step(h, t, dt, psi)?;
    let exact = reference.evolve(psi, t, dt)?;
    fidelity_eta(1.0 - fidelity(&exact, &psi2)?)
}

/// Actual signed one-step observable error of the second-order step.
pub fn eta_o_exact(
    h: &SplitHamiltonian,
    reference: &ExactReference,
    obs: &PauliSum,
    psi: &StateVector,
    t: f64,
    dt: f64,
) -> Result<f64> {
    let psi2 = formulas::t2_step(h, t, dt, psi)?;
    let exact = reference.evolve(psi, t, dt)?;
    Ok(expectation(obs, &exact)? - expectation(obs, &psi2)?)
}

/// Fitted coefficients of the leading error operator in the nested
/// commutator basis, derived from the dense matrix logarithm rather than
/// transcribed constants.
#[derive(Clone, Copy, Debug)]
pub struct BchCalibration {
    pub c1: f64,
    pub c2: f64,
    /// Relative Frobenius residual of the two-commutator fit.
    pub residual_rel: f64,
}

/// Largest system size accepted for the dense-logarithm calibration.
pub const CALIBRATION_MAX_SITES: usize = 4;

/// Calibrate the leading error operator of the second-order step on a small
/// instance: fit the `dt^3` component of `log(U(dt)^dag T2(dt))` in the span
/// of the doubly nested commutators.
///
/// The coefficients are universal, so a small-system calibration transfers
/// to larger instances of the same split.
pub fn calibrate_bch(h: &SplitHamiltonian, dt: f64) -> Result<BchCalibration> {
    if h.num_sites() > CALIBRATION_MAX_SITES {
        return Err(Error::DenseLimit {
            sites: h.num_sites(),
            limit: CALIBRATION_MAX_SITES,
        });
    }
    if !h.is_time_independent() {
        return Err(Error::TimeDependent);
    }
    let a = h.part(PartId::A);
    let b = h.part(PartId::B);
    let limit = CALIBRATION_MAX_SITES;

    let eig_h = HermitianEig::new(&h.hamiltonian()?.to_dense(limit)?)?;
    let eig_a = HermitianEig::new(&a.to_dense(limit)?)?;
    let eig_b = HermitianEig::new(&b.to_dense(limit)?)?;
    let log_over_dt3 = |step: f64| -> Result<Array2<Complex64>> {
        let t2 = eig_a
            .evolution_matrix(step / 2.0)
            .dot(&eig_b.evolution_matrix(step))
            .dot(&eig_a.evolution_matrix(step / 2.0));
        let m = eig_h.evolution_matrix(-step).dot(&t2);
        Ok(log_near_identity(&m, 1e-15)?.mapv(|v| v / step.powi(3)))
    };

    // log(U^dag T2)/dt^3 = K3 + K4 dt + K5 dt^2 + ... (the similarity
    // transform brings in even orders too); a three-point Richardson stage
    // removes both subleading terms.
    let k_full = log_over_dt3(dt)?;
    let k_half = log_over_dt3(dt / 2.0)?;
    let k_quarter = log_over_dt3(dt / 4.0)?;
    let k3 =
        k_full.mapv(|v| v / 3.0) - k_half.mapv(|v| v * 2.0) + k_quarter.mapv(|v| v * 8.0 / 3.0);

    // Gamma = i K3 is Hermitian up to fit noise; keep the Hermitian part.
    let gamma_raw = k3.mapv(|v| v * Complex64::new(0.0, 1.0));
    let gamma = (&gamma_raw + &gamma_raw.t().mapv(|v| v.conj())).mapv(|v| v * 0.5);

    let d1 = commutator(a, &commutator(a, b)).to_dense(limit)?;
    let d2 = commutator(b, &commutator(a, b)).to_dense(limit)?;
    let g11 = frobenius_inner_re(&d1, &d1);
    let g12 = frobenius_inner_re(&d1, &d2);
    let g22 = frobenius_inner_re(&d2, &d2);
    let r1 = frobenius_inner_re(&d1, &gamma);
    let r2 = frobenius_inner_re(&d2, &gamma);
    let gamma_norm = frobenius_norm(&gamma);

    let det = g11 * g22 - g12 * g12;
    let (c1, c2) = if det.abs() <= 1e-12 * (g11 * g22).max(1e-300) {
        // Degenerate basis (e.g. commuting parts); only the zero fit exists.
        if gamma_norm > 1e-10 {
            return Err(Error::Linalg(
                "commutator basis degenerate but error operator nonzero".into(),
            ));
        }
        (0.0, 0.0)
    } else {
        ((g22 * r1 - g12 * r2) / det, (g11 * r2 - g12 * r1) / det)
    };

    let fit = d1.mapv(|v| v * c1) + d2.mapv(|v| v * c2);
    let residual = frobenius_norm(&(&gamma - &fit));
    let residual_rel = if gamma_norm > 0.0 {
        residual / gamma_norm
    } else {
        0.0
    };
    Ok(BchCalibration {
        c1,
        c2,
        residual_rel,
    })
}

/// Variance-form estimator of the one-step fidelity error: the variance of
/// the leading Hermitian error operator, scaled by `dt^6`.
#[derive(Clone, Debug)]
pub struct VarianceEstimator {
    gamma: PauliSum,
}

impl VarianceEstimator {
    /// Build the symbolic error operator for `h` from calibrated
    /// coefficients (reusable across system sizes).
    pub fn new(h: &SplitHamiltonian, calib: &BchCalibration) -> Result<VarianceEstimator> {
        if !h.is_time_independent() {
            return Err(Error::TimeDependent);
        }
        if h.num_sites() > DEFAULT_DENSE_LIMIT {
            return Err(Error::DenseLimit {
                sites: h.num_sites(),
                limit: DEFAULT_DENSE_LIMIT,
            });
        }
        let a = h.part(PartId::A);
        let b = h.part(PartId::B);
        let ab = commutator(a, b);
        let gamma = commutator(a, &ab)
            .scaled(Complex64::new(calib.c1, 0.0))
            .add(&commutator(b, &ab).scaled(Complex64::new(calib.c2, 0.0)));
        Ok(VarianceEstimator { gamma })
    }

    /// The Hermitian leading error operator (per `dt^3`).
    pub fn gamma(&self) -> &PauliSum {
        &self.gamma
    }

    /// `dt^6 * Var_psi(Gamma)`.
    pub fn estimate(&self, psi: &StateVector, dt: f64) -> Result<f64> {
        if self.gamma.num_sites() != psi.num_sites() {
            return Err(Error::SiteMismatch(self.gamma.num_sites(), psi.num_sites()));
        }
        let mut applied = vec![Complex64::new(0.0, 0.0); psi.amplitudes().len()];
        self.gamma.accumulate_action(psi.amplitudes(), &mut applied);
        let sq: f64 = applied.iter().map(|v| v.norm_sqr()).sum();
        let mean: Complex64 = psi
            .amplitudes()
            .iter()
            .zip(&applied)
            .map(|(a, b)| a.conj() * b)
            .sum();
        debug_assert!(mean.im.abs() < 1e-9, "error operator not Hermitian?");
        let var = (sq - mean.re * mean.re).max(0.0);
        Ok(dt.powi(6) * var)
    }
}

/// One-shot variance estimate: calibrates on `h` itself, which must be a
/// small instance. For larger systems calibrate once on a small instance
/// and reuse via [`VarianceEstimator::new`].
pub fn eta_f_variance(h: &SplitHamiltonian, psi: &StateVector, dt: f64) -> Result<f64> {
    let calib = calibrate_bch(h, DEFAULT_CALIBRATION_DT)?;
    VarianceEstimator::new(h, &calib)?.estimate(psi, dt)
}

/// Base stepsize for the calibration's Richardson stage; small enough that
/// the remaining higher-order contamination sits well under the 1% residual
/// target for chain Hamiltonians at unit couplings.
pub const DEFAULT_CALIBRATION_DT: f64 = 0.02;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::statevector::Polarization;

    fn commuting_split(l: usize) -> SplitHamiltonian {
        // Both parts diagonal, so every formula is exact.
        let a = models::diagonal_part(l, 0.0, 0.7);
        let b = models::diagonal_part(l, -0.4, 0.0);
        SplitHamiltonian::new(a, b).unwrap()
    }

    /// Mid-trajectory benchmark state: the polarized start evolved exactly
    /// for a while. At t = 0 the polarized state has extra symmetry that
    /// suppresses the leading observable-error term.
    fn evolved_state(h: &SplitHamiltonian, prop: &ExactPropagator, t: f64) -> StateVector {
        let psi0 = StateVector::polarized(h.num_sites(), Polarization::MinusY);
        prop.evolve(&psi0, t).unwrap()
    }

    #[test]
    fn commuting_parts_give_zero_estimates() {
        let l = 4;
        let h = commuting_split(l);
        let psi = StateVector::random(l, 3);
        let obs = models::magnetization_x(l);
        assert!(eta_f_24(&h, &psi, 0.0, 0.2).unwrap().estimate.value < 1e-12);
        assert!(
            eta_o_24(&h, &obs, &psi, 0.0, 0.2)
                .unwrap()
                .estimate
                .value
                .abs()
                < 1e-10
        );
        assert!(eta_f_23(&h, &psi, 0.0, 0.2).unwrap().estimate.value < 1e-12);
        assert!(
            eta_o_23(&h, &obs, &psi, 0.0, 0.2)
                .unwrap()
                .estimate
                .value
                .abs()
                < 1e-10
        );
        assert!(eta_f_variance(&h, &psi, 0.2).unwrap() < 1e-24);
    }

    #[test]
    fn eta_f_24_halving_ratio_is_sixth_order() {
        let l = 6;
        let h = models::ising_x(l, -1.0, 0.2, -2.0).unwrap();
        let psi = StateVector::polarized(l, Polarization::MinusY);
        let big = eta_f_24(&h, &psi, 0.0, 0.1).unwrap().estimate.value;
        let small = eta_f_24(&h, &psi, 0.0, 0.05).unwrap().estimate.value;
        let ratio = big / small;
        assert!((50.0..=80.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn eta_o_24_halving_ratio_is_third_order() {
        let l = 6;
        let h = models::ising_x(l, -1.0, 0.2, -2.0).unwrap();
        let prop = ExactPropagator::new(&h.hamiltonian().unwrap(), 12).unwrap();
        let obs = models::magnetization_x(l);
        let psi = evolved_state(&h, &prop, 0.5);
        let big = eta_o_24(&h, &obs, &psi, 0.0, 0.05)
            .unwrap()
            .estimate
            .value
            .abs();
        let small = eta_o_24(&h, &obs, &psi, 0.0, 0.025)
            .unwrap()
            .estimate
            .value
            .abs();
        let ratio = big / small;
        assert!((7.0..=9.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn estimator_tracks_exact_error_as_dt_shrinks() {
        let l = 6;
        let h = models::ising_x(l, -1.0, 0.2, -2.0).unwrap();
        let prop = ExactPropagator::new(&h.hamiltonian().unwrap(), 12).unwrap();
        let reference = ExactReference::Dense(&prop);
        let psi = evolved_state(&h, &prop, 0.5);
        let mut gaps = Vec::new();
        for dt in [0.1, 0.05, 0.025] {
            let est = eta_f_24(&h, &psi, 0.0, dt).unwrap().estimate.value;
            let exact = eta_f_exact(&h, &reference, &psi, 0.0, dt).unwrap();
            gaps.push(((est - exact).abs() / exact, dt));
        }
        // Relative gap shrinks roughly as dt^2 (two orders below eta_F).
        assert!(gaps[2].0 < gaps[1].0 && gaps[1].0 < gaps[0].0, "{gaps:?}");
        let slope = ((gaps[0].0 / gaps[2].0).ln()) / (0.1f64 / 0.025).ln();
        assert!((1.5..=2.5).contains(&slope), "gap slope {slope}");
    }

    #[test]
    fn eta_o_24_gap_scales_fifth_order() {
        let l = 6;
        let h = models::ising_x(l, -1.0, 0.2, -2.0).unwrap();
        let prop = ExactPropagator::new(&h.hamiltonian().unwrap(), 12).unwrap();
        let reference = ExactReference::Dense(&prop);
        let obs = models::magnetization_x(l);
        let psi = evolved_state(&h, &prop, 0.5);
        let gap = |dt: f64| {
            let est = eta_o_24(&h, &obs, &psi, 0.0, dt).unwrap().estimate.value;
            let exact = eta_o_exact(&h, &reference, &obs, &psi, 0.0, dt).unwrap();
            (est - exact).abs()
        };
        let slope = (gap(0.1) / gap(0.025)).ln() / (0.1f64 / 0.025).ln();
        assert!((4.5..=5.5).contains(&slope), "gap slope {slope}");
    }

    #[test]
    fn two_three_variant_agrees_to_leading_order() {
        let l = 6;
        let h = models::ising_x(l, -1.0, 0.2, -2.0).unwrap();
        let psi = StateVector::polarized(l, Polarization::MinusY);
        let ratio_at = |dt: f64| {
            let f24 = eta_f_24(&h, &psi, 0.0, dt).unwrap().estimate.value;
            let f23 = eta_f_23(&h, &psi, 0.0, dt).unwrap().estimate.value;
            f23 / f24
        };
        let coarse = ratio_at(0.1);
        let fine = ratio_at(0.025);
        assert!((fine - 1.0).abs() < (coarse - 1.0).abs());
        assert!((fine - 1.0).abs() < 0.05, "ratio at fine dt: {fine}");

        let big = eta_f_23(&h, &psi, 0.0, 0.1).unwrap().estimate.value;
        let small = eta_f_23(&h, &psi, 0.0, 0.05).unwrap().estimate.value;
        let halving = big / small;
        assert!((50.0..=80.0).contains(&halving), "ratio {halving}");
    }

    #[test]
    fn estimators_are_state_specific() {
        let l = 5;
        let h = models::ising_x(l, -1.0, 0.2, -2.0).unwrap();
        let polarized = StateVector::polarized(l, Polarization::MinusY);
        let random = StateVector::random(l, 23);
        let a = eta_f_24(&h, &polarized, 0.0, 0.1).unwrap().estimate.value;
        let b = eta_f_24(&h, &random, 0.0, 0.1).unwrap().estimate.value;
        assert!((a - b).abs() > 1e-8 * a.max(b));
    }

    #[test]
    fn calibration_residual_is_small() {
        let h = models::ising_x(4, -1.0, 0.2, -2.0).unwrap();
        let calib = calibrate_bch(&h, DEFAULT_CALIBRATION_DT).unwrap();
        assert!(
            calib.residual_rel < 0.01,
            "fit residual {}",
            calib.residual_rel
        );
    }

    #[test]
    fn calibrated_coefficients_fixture() {
        // Frozen from the dense-logarithm fit; they match the analytic
        // symmetric-splitting values 1/24 and 1/12 in this basis.
        let h = models::ising_x(3, -1.0, 0.2, -2.0).unwrap();
        let calib = calibrate_bch(&h, DEFAULT_CALIBRATION_DT).unwrap();
        assert!((calib.c1 - 1.0 / 24.0).abs() < 1e-6, "c1 = {}", calib.c1);
        assert!((calib.c2 - 1.0 / 12.0).abs() < 1e-6, "c2 = {}", calib.c2);
    }

    #[test]
    fn variance_estimator_matches_exact_eta_f() {
        let l = 4;
        let h = models::ising_x(l, -1.0, 0.2, -2.0).unwrap();
        let prop = ExactPropagator::new(&h.hamiltonian().unwrap(), 12).unwrap();
        let reference = ExactReference::Dense(&prop);
        let psi = StateVector::polarized(l, Polarization::MinusY);
        let dt = 0.02;
        let var = eta_f_variance(&h, &psi, dt).unwrap();
        let exact = eta_f_exact(&h, &reference, &psi, 0.0, dt).unwrap();
        let ratio = var / exact;
        assert!((0.95..=1.05).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn variance_zero_on_eigenstate() {
        let l = 2;
        let h = models::ising_x(l, -1.0, 0.2, -2.0).unwrap();
        let calib = calibrate_bch(&h, DEFAULT_CALIBRATION_DT).unwrap();
        let est = VarianceEstimator::new(&h, &calib).unwrap();
        // Take an eigenvector of the dense error operator as input.
        let dense = est.gamma().to_dense(4).unwrap();
        let (_, vecs) = crate::dense::eigh(&dense).unwrap();
        let amps: Vec<Complex64> = vecs.column(0).to_vec();
        let psi = StateVector::from_amplitudes(l, amps).unwrap();
        assert!(est.estimate(&psi, 0.1).unwrap() < 1e-18);
    }

    #[test]
    fn variance_is_nonnegative() {
        let l = 3;
        let h = models::ising_x(l, -1.0, 0.2, -2.0).unwrap();
        let calib = calibrate_bch(&h, DEFAULT_CALIBRATION_DT).unwrap();
        let est = VarianceEstimator::new(&h, &calib).unwrap();
        for seed in 0..20 {
            let psi = StateVector::random(l, seed);
            assert!(est.estimate(&psi, 0.1).unwrap() >= 0.0);
        }
    }

    #[test]
    fn three_fidelity_estimators_agree_with_exact() {
        let l = 6;
        let h = models::ising_x(l, -1.0, 0.2, -2.0).unwrap();
        let prop = ExactPropagator::new(&h.hamiltonian().unwrap(), 12).unwrap();
        let reference = ExactReference::Dense(&prop);
        let small = models::ising_x(4, -1.0, 0.2, -2.0).unwrap();
        let calib = calibrate_bch(&small, DEFAULT_CALIBRATION_DT).unwrap();
        let var_est = VarianceEstimator::new(&h, &calib).unwrap();
        let psi = StateVector::polarized(l, Polarization::MinusY);

        let mut prev_worst = f64::INFINITY;
        for dt in [0.1, 0.05, 0.025] {
            let exact = eta_f_exact(&h, &reference, &psi, 0.0, dt).unwrap();
            let e24 = eta_f_24(&h, &psi, 0.0, dt).unwrap().estimate.value;
            let e23 = eta_f_23(&h, &psi, 0.0, dt).unwrap().estimate.value;
            let ev = var_est.estimate(&psi, dt).unwrap();
            let worst = [e24, e23, ev]
                .iter()
                .map(|v| (v / exact - 1.0).abs())
                .fold(0.0f64, f64::max);
            assert!(worst < 0.15, "dt={dt}: worst relative gap {worst}");
            assert!(worst <= prev_worst + 1e-12, "not improving at dt={dt}");
            prev_worst = worst;
        }
    }
}
