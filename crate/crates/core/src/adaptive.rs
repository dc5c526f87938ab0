//! Adaptive-stepsize controllers: fidelity-based and observable-based loops
//! that measure the one-step error with the (2,4) estimator, accept or
//! reject the trial stepsize against a tolerance, and update it through the
//! leading-order scaling relation with a safety constant.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{self, EtaStep, ExactReference};
use crate::formulas::{self, SplitHamiltonian};
use crate::pauli::{NormOptions, PauliSum};
use crate::statevector::{expectation, fidelity, StateVector};

/// How the accepted step relates to the stepsize update.
///
/// `Prose` applies the step at the measured stepsize and carries the updated
/// value into the next step's trial. `Pseudocode` follows the literal
/// pseudocode ordering in which the update happens before the step is taken,
/// so the applied stepsize was never itself measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateSemantics {
    Prose,
    Pseudocode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    Fidelity,
    Observable,
}

/// Controller parameters; `epsilon` is the fidelity tolerance or the
/// relative observable tolerance depending on the mode.
#[derive(Clone, Debug, Serialize)]
pub struct ControllerConfig {
    pub t_ini: f64,
    pub t_fin: f64,
    pub epsilon: f64,
    pub safety_c: f64,
    pub dt0: f64,
    pub dt_min: f64,
    /// Growth cap on trial stepsizes; defaults to `10 * dt0`.
    pub dt_max: Option<f64>,
    pub max_rejections_per_step: usize,
    pub clamp_final: bool,
    pub semantics: UpdateSemantics,
    #[serde(skip)]
    pub observable: Option<PauliSum>,
    pub obs_norm: Option<f64>,
}

impl ControllerConfig {
    pub fn new(t_ini: f64, t_fin: f64, epsilon: f64) -> ControllerConfig {
        ControllerConfig {
            t_ini,
            t_fin,
            epsilon,
            safety_c: 0.95,
            dt0: 0.1,
            dt_min: 1e-10,
            dt_max: None,
            max_rejections_per_step: 30,
            clamp_final: false,
            semantics: UpdateSemantics::Prose,
            observable: None,
            obs_norm: None,
        }
    }

    pub fn dt_max(&self) -> f64 {
        self.dt_max.unwrap_or(10.0 * self.dt0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.safety_c > 0.0 && self.safety_c <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "safety constant must lie in (0, 1], got {}",
                self.safety_c
            )));
        }
        if self.safety_c == 1.0 {
            eprintln!("warning: safety constant 1.0 leaves no rejection margin");
        }
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if self.dt0 <= 0.0 {
            return Err(Error::InvalidConfig(
                "initial stepsize must be positive".into(),
            ));
        }
        if self.t_fin < self.t_ini {
            return Err(Error::InvalidConfig(format!(
                "final time {} precedes initial time {}",
                self.t_fin, self.t_ini
            )));
        }
        if self.dt_min >= self.dt0 {
            return Err(Error::InvalidConfig(
                "abort floor dt_min must be below dt0".into(),
            ));
        }
        Ok(())
    }
}

/// One accepted step of a controller run.
#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub step_index: usize,
    pub t_before: f64,
    pub dt_accepted: f64,
    /// Fidelity mode: nonnegative. Observable mode: signed difference; the
    /// acceptance test compared its magnitude.
    pub eta_measured: f64,
    pub rejections: usize,
    pub trial_dts: Vec<f64>,
    pub observables_after: BTreeMap<String, f64>,
    /// `N^2 eps` (fidelity) or `N eps ||O||` (observable) for this step count.
    pub budget_bound: f64,
}

/// One entry of the accepted schedule.
#[derive(Clone, Debug, Serialize)]
pub struct ScheduleEntry {
    pub formula: String,
    pub t: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceHeader {
    pub version: String,
    pub mode: ControlMode,
    pub semantics: UpdateSemantics,
    pub t_ini: f64,
    pub t_fin: f64,
    pub epsilon: f64,
    pub safety_c: f64,
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub clamp_final: bool,
    pub obs_norm: Option<f64>,
}

/// The persisted outcome of a controller run: per-step records plus the
/// accepted schedule that reproduces the final state.
#[derive(Clone, Debug)]
pub struct SimulationTrace {
    pub header: TraceHeader,
    pub steps: Vec<StepRecord>,
    pub schedule: Vec<ScheduleEntry>,
    pub final_state: StateVector,
}

impl SimulationTrace {
    pub fn total_rejections(&self) -> usize {
        self.steps.iter().map(|s| s.rejections).sum()
    }

    pub fn accepted_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn mean_accepted_dt(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.dt_accepted).sum::<f64>() / self.steps.len() as f64
    }

    /// Final time as the compensated sum of accepted stepsizes.
    pub fn t_final(&self) -> f64 {
        self.header.t_ini + compensated_sum(self.steps.iter().map(|s| s.dt_accepted))
    }

    /// Replay the accepted schedule, returning the state after each step.
    pub fn replay_states(
        &self,
        h: &SplitHamiltonian,
        psi0: &StateVector,
    ) -> Result<Vec<StateVector>> {
        let mut out = Vec::with_capacity(self.schedule.len());
        let mut state = psi0.clone();
        for entry in &self.schedule {
            state = formulas::t2_step(h, entry.t, entry.dt, &state)?;
            out.push(state.clone());
        }
        Ok(out)
    }

    /// JSON-lines dump: one header line, then one object per step, then one
    /// per schedule entry. Field order is fixed by the struct definitions.
    pub fn write_jsonl<W: Write>(&self, w: &mut W) -> Result<()> {
        #[derive(Serialize)]
        struct HeaderLine<'a> {
            record: &'static str,
            #[serde(flatten)]
            header: &'a TraceHeader,
        }
        #[derive(Serialize)]
        struct StepLine<'a> {
            record: &'static str,
            #[serde(flatten)]
            step: &'a StepRecord,
        }
        #[derive(Serialize)]
        struct ScheduleLine<'a> {
            record: &'static str,
            #[serde(flatten)]
            entry: &'a ScheduleEntry,
        }
        serde_json::to_writer(
            &mut *w,
            &HeaderLine {
                record: "header",
                header: &self.header,
            },
        )?;
        writeln!(w)?;
        for step in &self.steps {
            serde_json::to_writer(
                &mut *w,
                &StepLine {
                    record: "step",
                    step,
                },
            )?;
            writeln!(w)?;
        }
        for entry in &self.schedule {
            serde_json::to_writer(
                &mut *w,
                &ScheduleLine {
                    record: "unitary",
                    entry,
                },
            )?;
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Neumaier-compensated sum; the trace invariant `sum(dt) = t_last - t_ini`
/// is exact under this summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

struct LoopState {
    t_offset: f64,
    comp: f64,
}

impl LoopState {
    fn new() -> LoopState {
        LoopState {
            t_offset: 0.0,
            comp: 0.0,
        }
    }

    fn advance(&mut self, dt: f64) {
        let t = self.t_offset + dt;
        if self.t_offset.abs() >= dt.abs() {
            self.comp += (self.t_offset - t) + dt;
        } else {
            self.comp += (dt - t) + self.t_offset;
        }
        self.t_offset = t;
    }

    fn elapsed(&self) -> f64 {
        self.t_offset + self.comp
    }
}

struct ControlLaw {
    mode: ControlMode,
    /// Acceptance threshold the measured error magnitude is compared to.
    threshold: f64,
    /// Update exponent: 1/6 for fidelity control, 1/3 for observable control.
    exponent: f64,
}

fn run_controller<F>(
    config: &ControllerConfig,
    h: &SplitHamiltonian,
    psi0: &StateVector,
    law: ControlLaw,
    tracked: &BTreeMap<String, PauliSum>,
    measure: F,
) -> Result<SimulationTrace>
where
    F: Fn(&StateVector, f64, f64) -> Result<EtaStep>,
{
    config.validate()?;
    let dt_max = config.dt_max();
    let span = config.t_fin - config.t_ini;
    let done_floor = 1e-12 * span.abs().max(1.0);

    let update = |dt: f64, eta_mag: f64| -> f64 {
        if eta_mag < 1e-14 {
            return dt_max;
        }
        (config.safety_c * (law.threshold / eta_mag).powf(law.exponent) * dt).min(dt_max)
    };

    let mut state = psi0.clone();
    let mut clock = LoopState::new();
    let mut dt = config.dt0.min(dt_max);
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut schedule: Vec<ScheduleEntry> = Vec::new();

    loop {
        let t = config.t_ini + clock.elapsed();
        let remaining = span - clock.elapsed();
        let trial = if config.clamp_final {
            if remaining <= done_floor {
                break;
            }
            dt.min(remaining)
        } else {
            // The paper-style loop condition: continue while t + dt < t_fin.
            if clock.elapsed() + dt >= span {
                break;
            }
            dt
        };

        let mut rejections = 0usize;
        let mut trial_dts = vec![trial];
        let mut current = trial;
        let (eta, step_result, dt_next) = loop {
            let step_result = measure(&state, t, current)?;
            let eta = step_result.estimate.value;
            let next = update(current, eta.abs());
            if eta.abs() <= law.threshold {
                break (eta, step_result, next);
            }
            rejections += 1;
            if rejections > config.max_rejections_per_step {
                return Err(Error::TooManyRejections {
                    t,
                    count: rejections,
                });
            }
            current = next;
            if current < config.dt_min {
                return Err(Error::StepsizeUnderflow {
                    dt: current,
                    floor: config.dt_min,
                    t,
                });
            }
            trial_dts.push(current);
        };

        // Prose semantics: evolve with the measured stepsize. Pseudocode
        // semantics: evolve with the already-updated one.
        let (dt_used, new_state) = match config.semantics {
            UpdateSemantics::Prose => (current, step_result.psi2),
            UpdateSemantics::Pseudocode => {
                let replayed = formulas::t2_step(h, t, dt_next, &state)?;
                (dt_next, replayed)
            }
        };

        state = new_state;
        clock.advance(dt_used);
        let n = steps.len() + 1;
        let budget_bound = match law.mode {
            ControlMode::Fidelity => (n * n) as f64 * config.epsilon,
            ControlMode::Observable => n as f64 * law.threshold,
        };
        let mut observables_after = BTreeMap::new();
        for (name, obs) in tracked {
            observables_after.insert(name.clone(), expectation(obs, &state)?);
        }
        schedule.push(ScheduleEntry {
            formula: if h.is_time_independent() {
                "T2".to_string()
            } else {
                "T2(t)".to_string()
            },
            t,
            dt: dt_used,
        });
        steps.push(StepRecord {
            step_index: n,
            t_before: t,
            dt_accepted: dt_used,
            eta_measured: eta,
            rejections,
            trial_dts,
            observables_after,
            budget_bound,
        });
        dt = dt_next;
    }

    Ok(SimulationTrace {
        header: TraceHeader {
            version: env!("CARGO_PKG_VERSION").to_string(),
            mode: law.mode,
            semantics: config.semantics,
            t_ini: config.t_ini,
            t_fin: config.t_fin,
            epsilon: config.epsilon,
            safety_c: config.safety_c,
            dt0: config.dt0,
            dt_min: config.dt_min,
            dt_max,
            clamp_final: config.clamp_final,
            obs_norm: config.obs_norm,
        },
        steps,
        schedule,
        final_state: state,
    })
}

/// Fidelity-based adaptive run: accept while the (2,4) fidelity estimate
/// stays at or below `epsilon`; the update exponent is 1/6.
pub fn run_fidelity(
    config: &ControllerConfig,
    h: &SplitHamiltonian,
    psi0: &StateVector,
    tracked: &BTreeMap<String, PauliSum>,
) -> Result<SimulationTrace> {
    run_controller(
        config,
        h,
        psi0,
        ControlLaw {
            mode: ControlMode::Fidelity,
            threshold: config.epsilon,
            exponent: 1.0 / 6.0,
        },
        tracked,
        |state, t, dt| estimators::eta_f_24(h, state, t, dt),
    )
}

/// Observable-based adaptive run: accept while `|eta| <= epsilon * ||O||`;
/// the update exponent is 1/3 and drives `|eta|` toward that same scaled
/// threshold.
pub fn run_observable(
    config: &ControllerConfig,
    h: &SplitHamiltonian,
    obs: &PauliSum,
    psi0: &StateVector,
    tracked: &BTreeMap<String, PauliSum>,
) -> Result<SimulationTrace> {
    let norm = match config.obs_norm {
        Some(n) => n,
        None => obs.spectral_norm(&NormOptions::default())?,
    };
    if norm <= 0.0 {
        return Err(Error::ZeroNormObservable);
    }
    let mut cfg = config.clone();
    cfg.obs_norm = Some(norm);
    run_controller(
        &cfg,
        h,
        psi0,
        ControlLaw {
            mode: ControlMode::Observable,
            threshold: config.epsilon * norm,
            exponent: 1.0 / 3.0,
        },
        tracked,
        |state, t, dt| estimators::eta_o_24(h, obs, state, t, dt),
    )
}

/// One row of a budget-verification replay.
#[derive(Clone, Debug, Serialize)]
pub struct BudgetRow {
    pub step_index: usize,
    pub t_after: f64,
    pub delta_f: Option<f64>,
    pub bound_f: Option<f64>,
    pub delta_o: Option<f64>,
    pub bound_o: Option<f64>,
    pub within: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetReport {
    pub rows: Vec<BudgetRow>,
    pub all_within: bool,
}

/// Replay the accepted schedule against exact evolution and report the
/// accumulated errors against their leading-order budgets: `N^2 eps` for the
/// fidelity error, `N sqrt(eps) ||O||` (fidelity mode) or `N eps ||O||`
/// (observable mode) for the observable error.
pub fn verify_budget(
    trace: &SimulationTrace,
    h: &SplitHamiltonian,
    psi0: &StateVector,
    reference: &ExactReference,
    obs: Option<&PauliSum>,
) -> Result<BudgetReport> {
    let mut trotter = psi0.clone();
    let mut exact = psi0.clone();
    let mut rows = Vec::with_capacity(trace.schedule.len());
    let mut all_within = true;
    let eps = trace.header.epsilon;

    for (i, entry) in trace.schedule.iter().enumerate() {
        trotter = formulas::t2_step(h, entry.t, entry.dt, &trotter)?;
        exact = reference.evolve(&exact, entry.t, entry.dt)?;
        let n = (i + 1) as f64;

        let (delta_f, bound_f, delta_o, bound_o) = match trace.header.mode {
            ControlMode::Fidelity => {
                let df = 1.0 - fidelity(&exact, &trotter)?;
                let (d_o, b_o) = match (obs, trace.header.obs_norm) {
                    (Some(o), norm) => {
                        let norm = norm.unwrap_or(1.0);
                        let diff = (expectation(o, &exact)? - expectation(o, &trotter)?).abs();
                        (Some(diff), Some(n * eps.sqrt() * norm))
                    }
                    _ => (None, None),
                };
                (Some(df), Some(n * n * eps), d_o, b_o)
            }
            ControlMode::Observable => {
                let o = obs.ok_or(Error::InvalidConfig(
                    "observable-mode budget replay needs the observable".into(),
                ))?;
                let norm = trace.header.obs_norm.unwrap_or(1.0);
                let diff = (expectation(o, &exact)? - expectation(o, &trotter)?).abs();
                (None, None, Some(diff), Some(n * eps * norm))
            }
        };

        let within = delta_f.zip(bound_f).is_none_or(|(d, b)| d <= b)
            && delta_o.zip(bound_o).is_none_or(|(d, b)| d <= b);
        all_within &= within;
        rows.push(BudgetRow {
            step_index: i + 1,
            t_after: entry.t + entry.dt,
            delta_f,
            bound_f,
            delta_o,
            bound_o,
            within,
        });
    }
    Ok(BudgetReport { rows, all_within })
}

/// Aggregates for one safety-constant setting.
#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub safety_c: f64,
    pub mean_dt: f64,
    pub rejection_rate: f64,
    pub accepted_steps: usize,
    pub rejections: usize,
}

/// Run the fidelity controller once per safety constant (in parallel; each
/// run owns its state) and aggregate mean stepsize and rejection rate.
pub fn sweep_safety_c(
    config: &ControllerConfig,
    h: &SplitHamiltonian,
    psi0: &StateVector,
    c_values: &[f64],
) -> Result<Vec<SweepPoint>> {
    use rayon::prelude::*;
    let tracked = BTreeMap::new();
    c_values
        .par_iter()
        .map(|&c| {
            let mut cfg = config.clone();
            cfg.safety_c = c;
            let trace = run_fidelity(&cfg, h, psi0, &tracked)?;
            let steps = trace.accepted_steps();
            let rejections = trace.total_rejections();
            Ok(SweepPoint {
                safety_c: c,
                mean_dt: trace.mean_accepted_dt(),
                rejection_rate: if steps > 0 {
                    rejections as f64 / steps as f64
                } else {
                    0.0
                },
                accepted_steps: steps,
                rejections,
            })
        })
        .collect()
}
