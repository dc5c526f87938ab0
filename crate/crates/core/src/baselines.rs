//! The two comparison methods for the adaptive controller: a priori
//! commutator-norm stepsize bounds and fixed-step second-order evolution
//! with polynomial extrapolation to zero stepsize.

use serde::Serialize;

use crate::adaptive::SimulationTrace;
use crate::error::{Error, Result};
use crate::estimators::ExactReference;
use crate::formulas::{self, apply_formula, make_t2, PartId, SplitHamiltonian};
use crate::pauli::{commutator, NormOptions, PauliSum};
use crate::statevector::{expectation, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TighterSide {
    AB,
    BA,
}

/// Nested-commutator norms and the derived tight-bound coefficients
/// `W_{A,B} = ||[B,[B,A]]|| + ||[A,[B,A]]|| / 2` (and with parts swapped).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WNormReport {
    pub l: usize,
    pub norm_bba: f64,
    pub norm_aba: f64,
    pub w_ab: f64,
    pub w_ba: f64,
    pub tighter: TighterSide,
}

impl WNormReport {
    pub fn w_tighter(&self) -> f64 {
        self.w_ab.min(self.w_ba)
    }
}

/// Build the nested commutators symbolically and evaluate their spectral
/// norms. `||[A,[A,B]]|| = ||[A,[B,A]]||` and likewise with parts swapped,
/// so two norms determine both orderings.
pub fn w_norms(h: &SplitHamiltonian, opts: &NormOptions) -> Result<WNormReport> {
    if !h.is_time_independent() {
        return Err(Error::TimeDependent);
    }
    let a = h.part(PartId::A);
    let b = h.part(PartId::B);
    let ba = commutator(b, a);
    let bba = commutator(b, &ba);
    let aba = commutator(a, &ba);
    let norm_bba = bba.spectral_norm(opts)?;
    let norm_aba = aba.spectral_norm(opts)?;
    let w_ab = norm_bba + 0.5 * norm_aba;
    let w_ba = norm_aba + 0.5 * norm_bba;
    Ok(WNormReport {
        l: h.num_sites(),
        norm_bba,
        norm_aba,
        w_ab,
        w_ba,
        tighter: if w_ab <= w_ba {
            TighterSide::AB
        } else {
            TighterSide::BA
        },
    })
}

/// A priori maximum stepsize `(eps / W)^(1/3)` using the tighter ordering,
/// guaranteeing a one-step operator error at most `eps`.
pub fn dt_bound(h: &SplitHamiltonian, epsilon: f64, opts: &NormOptions) -> Result<f64> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidConfig("tolerance must be positive".into()));
    }
    let report = w_norms(h, opts)?;
    Ok((epsilon / report.w_tighter()).powf(1.0 / 3.0))
}

/// Same bound from a precomputed report, for tabulating several tolerances
/// without repeating the norm evaluation.
pub fn dt_bound_from_report(report: &WNormReport, epsilon: f64) -> f64 {
    (epsilon / report.w_tighter()).powf(1.0 / 3.0)
}

/// `<psi0| T2(t/M)^dag^M O T2(t/M)^M |psi0>`: fixed-step second-order
/// evolution to time `t` in `m` steps, then the expectation.
pub fn fixed_step_expectation(
    h: &SplitHamiltonian,
    obs: &PauliSum,
    psi0: &StateVector,
    t: f64,
    m: usize,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidConfig("step count must be at least 1".into()));
    }
    let dt = t / m as f64;
    let formula = make_t2();
    let mut state = psi0.clone();
    for _ in 0..m {
        state = apply_formula(&formula, h, dt, &state)?;
    }
    expectation(obs, &state)
}

/// Polynomial extrapolation of `(eps, value)` samples to `eps = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct NevilleResult {
    pub estimate: f64,
    /// Effective weights: `estimate = sum c_i y_i`; they sum to one.
    pub coefficients: Vec<f64>,
}

fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i]);
        }
    }
    p[0]
}

/// Neville's algorithm evaluated at zero; the effective weights are obtained
/// by running the same tableau on unit samples.
pub fn neville_extrapolate(points: &[(f64, f64)]) -> Result<NevilleResult> {
    if points.is_empty() {
        return Err(Error::InvalidConfig("no extrapolation points".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    for (i, &x) in xs.iter().enumerate() {
        for &y in &xs[i + 1..] {
            if x == y {
                return Err(Error::DuplicateAbscissa(x));
            }
        }
    }
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let estimate = neville_at_zero(&xs, &ys);
    let coefficients = (0..xs.len())
        .map(|i| {
            let mut unit = vec![0.0; xs.len()];
            unit[i] = 1.0;
            neville_at_zero(&xs, &unit)
        })
        .collect();
    Ok(NevilleResult {
        estimate,
        coefficients,
    })
}

/// One row of the extrapolation-vs-adaptive comparison table.
#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    pub t: f64,
    pub method: String,
    pub m_or_eps: f64,
    pub estimate: f64,
    pub abs_error: f64,
    /// Exponentials applied on the costliest circuit of the method.
    pub gate_count: usize,
}

/// Compare the adaptive run against `m`-th order extrapolation under matched
/// gate complexity: for the accepted time of step `N`, the extrapolation may
/// use step counts `M <= N` (the `m+1` largest integers by default).
pub fn compare_extrapolation_vs_adaptive(
    h: &SplitHamiltonian,
    obs: &PauliSum,
    psi0: &StateVector,
    trace: &SimulationTrace,
    m_values: &[usize],
    reference: &ExactReference,
) -> Result<Vec<CompareRow>> {
    let mut rows = Vec::new();
    let mut trotter = psi0.clone();
    let mut exact = psi0.clone();
    let mut t_n = trace.header.t_ini;

    for (i, entry) in trace.schedule.iter().enumerate() {
        let n = i + 1;
        trotter = formulas::t2_step(h, entry.t, entry.dt, &trotter)?;
        exact = reference.evolve(&exact, entry.t, entry.dt)?;
        t_n += entry.dt;
        let exact_value = expectation(obs, &exact)?;

        let adaptive_value = expectation(obs, &trotter)?;
        let trials: usize = trace.steps[i].trial_dts.len();
        rows.push(CompareRow {
            t: t_n,
            method: "trotter24".into(),
            m_or_eps: n as f64,
            estimate: adaptive_value,
            abs_error: (adaptive_value - exact_value).abs(),
            gate_count: (i + 1) * 10 + trials.saturating_sub(1) * 10,
        });

        for &m in m_values {
            if n < m + 1 {
                continue;
            }
            // The m+1 largest step counts not exceeding N.
            let step_counts: Vec<usize> = (0..=m).map(|k| n - k).collect();
            let mut points = Vec::with_capacity(m + 1);
            for &mm in &step_counts {
                let value = fixed_step_expectation(h, obs, psi0, t_n, mm)?;
                let eps_m = 1.0 / mm as f64;
                points.push((eps_m, value));
                rows.push(CompareRow {
                    t: t_n,
                    method: "fixed_step".into(),
                    m_or_eps: eps_m,
                    estimate: value,
                    abs_error: (value - exact_value).abs(),
                    gate_count: 3 * mm,
                });
            }
            let extrapolated = neville_extrapolate(&points)?;
            rows.push(CompareRow {
                t: t_n,
                method: "extrapolation".into(),
                m_or_eps: m as f64,
                estimate: extrapolated.estimate,
                abs_error: (extrapolated.estimate - exact_value).abs(),
                gate_count: 3 * n,
            });
        }
    }
    Ok(rows)
}
