//! Product formulas as ordered coefficient schedules: symmetric second
//! order, Ruth's third order, Forest-Ruth-Suzuki fourth order, and the
//! time-dependent midpoint and minimal fourth-order variants for scalar
//! modulated Hamiltonians `H(t) = a(t) A + b(t) B`.
//!
//! Factors are listed left to right as they appear in the operator product
//! and applied to states right to left; every factor means
//! `exp(-i * angle * G)` for its part's generator.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::quad;
use crate::statevector::{CommutingLayer, StateVector};

/// Which Hamiltonian part an exponential factor acts with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartId {
    A,
    B,
}

/// Scalar time modulation of a Hamiltonian part.
#[derive(Clone)]
pub enum TimeProfile {
    Constant(f64),
    /// `f(t) = t`.
    Ramp,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for TimeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeProfile::Constant(c) => write!(f, "Constant({c})"),
            TimeProfile::Ramp => write!(f, "Ramp"),
            TimeProfile::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

const QUAD_TOL: f64 = 1e-12;

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant(c) => *c,
            TimeProfile::Ramp => t,
            TimeProfile::Custom(f) => f(t),
        }
    }

    /// Definite integral over `[t0, t1]`; closed form where known,
    /// adaptive quadrature otherwise.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        match self {
            TimeProfile::Constant(c) => c * (t1 - t0),
            TimeProfile::Ramp => 0.5 * (t1 * t1 - t0 * t0),
            TimeProfile::Custom(f) => quad::integrate(|s| f(s), t0, t1, QUAD_TOL),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, TimeProfile::Constant(_))
    }

    pub fn is_constant_one(&self) -> bool {
        matches!(self, TimeProfile::Constant(c) if *c == 1.0)
    }
}

/// A two-part Hamiltonian `H(t) = a(t) A + b(t) B` with each part's terms
/// mutually commuting, so its exponential layers are exact.
#[derive(Clone, Debug)]
pub struct SplitHamiltonian {
    part_a: PauliSum,
    part_b: PauliSum,
    a_mod: TimeProfile,
    b_mod: TimeProfile,
    layer_a: CommutingLayer,
    layer_b: CommutingLayer,
}

impl SplitHamiltonian {
    pub fn new(part_a: PauliSum, part_b: PauliSum) -> Result<SplitHamiltonian> {
        SplitHamiltonian::with_modulations(
            part_a,
            part_b,
            TimeProfile::Constant(1.0),
            TimeProfile::Constant(1.0),
        )
    }

    pub fn with_modulations(
        part_a: PauliSum,
        part_b: PauliSum,
        a_mod: TimeProfile,
        b_mod: TimeProfile,
    ) -> Result<SplitHamiltonian> {
        if part_a.num_sites() != part_b.num_sites() {
            return Err(Error::SiteMismatch(part_a.num_sites(), part_b.num_sites()));
        }
        let layer_a = CommutingLayer::new(part_a.clone())?;
        let layer_b = CommutingLayer::new(part_b.clone())?;
        Ok(SplitHamiltonian {
            part_a,
            part_b,
            a_mod,
            b_mod,
            layer_a,
            layer_b,
        })
    }

    pub fn num_sites(&self) -> usize {
        self.part_a.num_sites()
    }

    pub fn part(&self, id: PartId) -> &PauliSum {
        match id {
            PartId::A => &self.part_a,
            PartId::B => &self.part_b,
        }
    }

    pub fn a_mod(&self) -> &TimeProfile {
        &self.a_mod
    }

    pub fn b_mod(&self) -> &TimeProfile {
        &self.b_mod
    }

    pub fn layer(&self, id: PartId) -> &CommutingLayer {
        match id {
            PartId::A => &self.layer_a,
            PartId::B => &self.layer_b,
        }
    }

    pub fn is_time_independent(&self) -> bool {
        self.a_mod.is_constant() && self.b_mod.is_constant()
    }

    /// `a(t) A + b(t) B`; with constant modulations this is the plain sum.
    pub fn hamiltonian_at(&self, t: f64) -> PauliSum {
        let a = self
            .part_a
            .scaled(num_complex::Complex64::new(self.a_mod.value(t), 0.0));
        let b = self
            .part_b
            .scaled(num_complex::Complex64::new(self.b_mod.value(t), 0.0));
        a.add(&b)
    }

    /// The time-independent Hamiltonian; errors when modulated.
    pub fn hamiltonian(&self) -> Result<PauliSum> {
        if !self.is_time_independent() {
            return Err(Error::TimeDependent);
        }
        Ok(self.hamiltonian_at(0.0))
    }
}

/// Ordered exponential factors `(part, coefficient)`; coefficients are per
/// unit stepsize and each part's coefficients sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductFormula {
    factors: Vec<(PartId, f64)>,
    order: u32,
    label: &'static str,
}

impl ProductFormula {
    pub fn factors(&self) -> &[(PartId, f64)] {
        &self.factors
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn label(&self) -> &'static str {
        self.label
    }

    /// Concrete angles for a stepsize.
    pub fn schedule(&self, dt: f64) -> FactorSchedule {
        FactorSchedule {
            angles: self.factors.iter().map(|&(p, c)| (p, c * dt)).collect(),
        }
    }
}

/// `s = (2 - 2^(1/3))^(-1)`, the fourth-order splitting constant.
pub fn frs_s() -> f64 {
    1.0 / (2.0 - 2f64.powf(1.0 / 3.0))
}

/// Symmetric second-order formula `e^{-iA dt/2} e^{-iB dt} e^{-iA dt/2}`.
pub fn make_t2() -> ProductFormula {
    ProductFormula {
        factors: vec![(PartId::A, 0.5), (PartId::B, 1.0), (PartId::A, 0.5)],
        order: 2,
        label: "T2",
    }
}

/// Ruth's third-order formula.
pub fn make_t3() -> ProductFormula {
    ProductFormula {
        factors: vec![
            (PartId::A, 7.0 / 24.0),
            (PartId::B, 2.0 / 3.0),
            (PartId::A, 3.0 / 4.0),
            (PartId::B, -2.0 / 3.0),
            (PartId::A, -1.0 / 24.0),
            (PartId::B, 1.0),
        ],
        order: 3,
        label: "T3",
    }
}

/// Forest-Ruth-Suzuki fourth-order formula (seven exponentials, negative
/// middle substep).
pub fn make_t4() -> ProductFormula {
    let s = frs_s();
    ProductFormula {
        factors: vec![
            (PartId::A, s / 2.0),
            (PartId::B, s),
            (PartId::A, (1.0 - s) / 2.0),
            (PartId::B, 1.0 - 2.0 * s),
            (PartId::A, (1.0 - s) / 2.0),
            (PartId::B, s),
            (PartId::A, s / 2.0),
        ],
        order: 4,
        label: "T4",
    }
}

/// Concrete factor schedule: absolute angles, listed in operator-product
/// order (leftmost applied last).
#[derive(Clone, Debug, PartialEq)]
pub struct FactorSchedule {
    angles: Vec<(PartId, f64)>,
}

impl FactorSchedule {
    pub fn angles(&self) -> &[(PartId, f64)] {
        &self.angles
    }
}

/// Apply a schedule to a state, right to left.
pub fn apply_schedule(
    h: &SplitHamiltonian,
    schedule: &FactorSchedule,
    psi: &StateVector,
) -> Result<StateVector> {
    let mut state = psi.clone();
    for &(part, angle) in schedule.angles.iter().rev() {
        h.layer(part).apply_in_place(&mut state, angle)?;
    }
    Ok(state)
}

/// Apply a time-independent formula with stepsize `dt`.
pub fn apply_formula(
    formula: &ProductFormula,
    h: &SplitHamiltonian,
    dt: f64,
    psi: &StateVector,
) -> Result<StateVector> {
    if !h.is_time_independent() {
        return Err(Error::TimeDependent);
    }
    // Constant modulations other than one rescale the effective parts.
    let (ca, cb) = (h.a_mod.value(0.0), h.b_mod.value(0.0));
    let schedule = FactorSchedule {
        angles: formula
            .factors
            .iter()
            .map(|&(p, c)| {
                let scale = match p {
                    PartId::A => ca,
                    PartId::B => cb,
                };
                (p, c * scale * dt)
            })
            .collect(),
    };
    apply_schedule(h, &schedule, psi)
}

/// Midpoint rule `T2(t, dt)`: both parts evaluated at `t + dt/2`.
pub fn make_midpoint_t2(h: &SplitHamiltonian, t: f64, dt: f64) -> FactorSchedule {
    let mid = t + 0.5 * dt;
    let a = h.a_mod.value(mid);
    let b = h.b_mod.value(mid);
    FactorSchedule {
        angles: vec![
            (PartId::A, 0.5 * a * dt),
            (PartId::B, b * dt),
            (PartId::A, 0.5 * a * dt),
        ],
    }
}

/// Modulation integrals entering the time-dependent fourth-order formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaIntegrals {
    pub beta1: f64,
    pub beta2: f64,
    pub beta12: f64,
    pub u: f64,
}

/// `beta1`, `beta2`, `beta12` and `u = beta12 / beta2` over `[t, t + dt]`,
/// using closed forms for the built-in profiles.
pub fn beta_integrals(h: &SplitHamiltonian, t: f64, dt: f64) -> Result<BetaIntegrals> {
    let beta1 = h.a_mod.integral(t, t + dt);
    let beta2 = h.b_mod.integral(t, t + dt);
    let beta12 = match (&h.a_mod, &h.b_mod) {
        (TimeProfile::Constant(_), TimeProfile::Constant(_)) => 0.0,
        (TimeProfile::Ramp, TimeProfile::Ramp) => 0.0,
        (TimeProfile::Ramp, TimeProfile::Constant(cb)) => -cb * dt.powi(3) / 12.0,
        (TimeProfile::Constant(ca), TimeProfile::Ramp) => ca * dt.powi(3) / 12.0,
        _ => beta12_quadrature(h, t, dt),
    };
    if beta2.abs() < 1e-12 * dt.abs() {
        return Err(Error::FormulaDegenerate { beta2, dt });
    }
    Ok(BetaIntegrals {
        beta1,
        beta2,
        beta12,
        u: beta12 / beta2,
    })
}

/// The antisymmetrized double integral
/// `1/2 int_t^{t+dt} dt2 int_t^{t2} dt1 [b(t2) a(t1) - a(t2) b(t1)]`
/// evaluated by nested adaptive quadrature; cross-checks the closed forms.
pub fn beta12_quadrature(h: &SplitHamiltonian, t: f64, dt: f64) -> f64 {
    let a = |s: f64| h.a_mod.value(s);
    let b = |s: f64| h.b_mod.value(s);
    let inner_tol = QUAD_TOL / dt.abs().max(1e-3);
    let outer = |t2: f64| {
        let fa = quad::integrate(a, t, t2, inner_tol);
        let fb = quad::integrate(b, t, t2, inner_tol);
        b(t2) * fa - a(t2) * fb
    };
    0.5 * quad::integrate(outer, t, t + dt, QUAD_TOL)
}

/// Minimal time-dependent fourth-order formula for scalar-modulated parts:
/// seven exponentials with the A-edge angles shifted by `u = beta12/beta2`.
///
/// With constant modulations this reduces exactly to the fourth-order
/// formula scaled by `dt`.
pub fn make_tdep_t4(h: &SplitHamiltonian, t: f64, dt: f64) -> Result<FactorSchedule> {
    let BetaIntegrals {
        beta1,
        beta2,
        beta12: _,
        u,
    } = beta_integrals(h, t, dt)?;
    warn_if_u_large(h, t, dt, u);
    let s = frs_s();
    Ok(FactorSchedule {
        angles: vec![
            (PartId::A, s * beta1 / 2.0 - u),
            (PartId::B, s * beta2),
            (PartId::A, (1.0 - s) * beta1 / 2.0),
            (PartId::B, (1.0 - 2.0 * s) * beta2),
            (PartId::A, (1.0 - s) * beta1 / 2.0),
            (PartId::B, s * beta2),
            (PartId::A, s * beta1 / 2.0 + u),
        ],
    })
}

/// `u` is expected to be O(dt^2); estimate the model's coefficient from a
/// small reference stepsize and warn when a call breaks the scaling badly.
fn warn_if_u_large(h: &SplitHamiltonian, t: f64, dt: f64, u: f64) {
    if u == 0.0 || dt == 0.0 {
        return;
    }
    let dt_ref = 1e-3;
    let beta2_ref = h.b_mod.integral(t, t + dt_ref);
    if beta2_ref.abs() < 1e-300 {
        return;
    }
    let u_ref = match (&h.a_mod, &h.b_mod) {
        (TimeProfile::Constant(_), TimeProfile::Constant(_)) => 0.0,
        _ => beta12_quadrature(h, t, dt_ref) / beta2_ref,
    };
    let c = (u_ref.abs() / (dt_ref * dt_ref)).max(1e-12);
    if u.abs() > 10.0 * c * dt * dt {
        eprintln!(
            "warning: u = {u:.3e} is not O(dt^2) at t = {t}, dt = {dt} (expected ~{:.3e})",
            c * dt * dt
        );
    }
}

/// One T2-family step: the plain formula for time-independent Hamiltonians,
/// the midpoint rule otherwise.
pub fn t2_step(h: &SplitHamiltonian, t: f64, dt: f64, psi: &StateVector) -> Result<StateVector> {
    if h.is_time_independent() {
        apply_formula(&make_t2(), h, dt, psi)
    } else {
        apply_schedule(h, &make_midpoint_t2(h, t, dt), psi)
    }
}

/// One T4-family step, time-dependent variant when modulated.
pub fn t4_step(h: &SplitHamiltonian, t: f64, dt: f64, psi: &StateVector) -> Result<StateVector> {
    if h.is_time_independent() {
        apply_formula(&make_t4(), h, dt, psi)
    } else {
        apply_schedule(h, &make_tdep_t4(h, t, dt)?, psi)
    }
}

/// One third-order step; defined for time-independent Hamiltonians only.
pub fn t3_step(h: &SplitHamiltonian, _t: f64, dt: f64, psi: &StateVector) -> Result<StateVector> {
    apply_formula(&make_t3(), h, dt, psi)
}

/// Dense exponentials of the two parts, cached for building whole-formula
/// matrices in operator-norm comparisons at oracle scale.
#[derive(Clone, Debug)]
pub struct DenseParts {
    eig_a: crate::dense::HermitianEig,
    eig_b: crate::dense::HermitianEig,
}

impl DenseParts {
    pub fn new(h: &SplitHamiltonian, dense_limit: usize) -> Result<DenseParts> {
        Ok(DenseParts {
            eig_a: crate::dense::HermitianEig::new(&h.part(PartId::A).to_dense(dense_limit)?)?,
            eig_b: crate::dense::HermitianEig::new(&h.part(PartId::B).to_dense(dense_limit)?)?,
        })
    }

    /// The dense operator realized by a formula at stepsize `dt`.
    pub fn formula_matrix(
        &self,
        formula: &ProductFormula,
        dt: f64,
    ) -> ndarray::Array2<num_complex::Complex64> {
        self.schedule_matrix(&formula.schedule(dt))
    }

    /// The dense operator realized by a concrete schedule.
    pub fn schedule_matrix(
        &self,
        schedule: &FactorSchedule,
    ) -> ndarray::Array2<num_complex::Complex64> {
        let mut acc: Option<ndarray::Array2<num_complex::Complex64>> = None;
        for &(part, angle) in &schedule.angles {
            let factor = match part {
                PartId::A => self.eig_a.evolution_matrix(angle),
                PartId::B => self.eig_b.evolution_matrix(angle),
            };
            acc = Some(match acc {
                None => factor,
                Some(m) => m.dot(&factor),
            });
        }
        acc.expect("schedule has at least one factor")
    }
}

/// High-accuracy reference evolution over `[t0, t1]` by composing
/// fourth-order steps no larger than `dt_ref`; serves as the accurate
/// solution where the dense oracle is unavailable (time-dependent
/// Hamiltonians, large systems).
pub fn t4_reference_evolve(
    h: &SplitHamiltonian,
    t0: f64,
    t1: f64,
    dt_ref: f64,
    psi: &StateVector,
) -> Result<StateVector> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(psi.clone());
    }
    let n = (span.abs() / dt_ref).ceil().max(1.0) as usize;
    let step = span / n as f64;
    let mut state = psi.clone();
    for k in 0..n {
        let t = t0 + k as f64 * step;
        state = t4_step(h, t, step, &state)?;
    }
    Ok(state)
}
