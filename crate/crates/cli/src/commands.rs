//! Subcommand implementations: each consumes a validated config, runs the
//! corresponding experiment, and writes plot-ready data files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Result};
use serde::Serialize;

use trotter24::adaptive::{self, BudgetReport, ControllerConfig, SimulationTrace};
use trotter24::baselines;
use trotter24::estimators::{self, ExactReference};
use trotter24::formulas::{self, SplitHamiltonian};
use trotter24::models;
use trotter24::pauli::{NormOptions, DEFAULT_DENSE_LIMIT};
use trotter24::statevector::ExactPropagator;

use crate::config::{ExperimentConfig, Mode, ModelSpec};

fn controller_config(cfg: &ExperimentConfig) -> ControllerConfig {
    let mut c = ControllerConfig::new(cfg.t_ini, cfg.t_fin, cfg.epsilon);
    c.safety_c = cfg.safety_c;
    c.dt0 = cfg.dt0;
    if let Some(v) = cfg.dt_min {
        c.dt_min = v;
    }
    c.dt_max = cfg.dt_max;
    if let Some(v) = cfg.max_rejections_per_step {
        c.max_rejections_per_step = v;
    }
    c.clamp_final = cfg.clamp_final;
    c.obs_norm = cfg.obs_norm;
    c
}

fn norm_options(cfg: &ExperimentConfig) -> NormOptions {
    NormOptions {
        seed: cfg.seed,
        ..NormOptions::default()
    }
}

fn run_trace(cfg: &ExperimentConfig, h: &SplitHamiltonian) -> Result<SimulationTrace> {
    let psi0 = cfg.initial_state();
    let tracked = BTreeMap::from([("m_x".to_string(), models::magnetization_x(cfg.l))]);
    let ctrl = controller_config(cfg);
    let trace = match cfg.mode {
        Mode::Fidelity => adaptive::run_fidelity(&ctrl, h, &psi0, &tracked)?,
        Mode::Observable => {
            let obs = cfg.build_observable()?;
            let mut ctrl = ctrl;
            if ctrl.obs_norm.is_none() {
                ctrl.obs_norm = Some(obs.spectral_norm(&norm_options(cfg))?);
            }
            adaptive::run_observable(&ctrl, h, &obs, &psi0, &tracked)?
        }
    };
    Ok(trace)
}

fn budget_reference<'a>(
    cfg: &ExperimentConfig,
    h: &'a SplitHamiltonian,
    prop: &'a mut Option<ExactPropagator>,
) -> Result<Option<ExactReference<'a>>> {
    if !cfg.dense_oracle {
        return Ok(None);
    }
    if cfg.l > DEFAULT_DENSE_LIMIT {
        eprintln!(
            "note: dense oracle unavailable at L = {} (limit {DEFAULT_DENSE_LIMIT}); skipping budget replay",
            cfg.l
        );
        return Ok(None);
    }
    if h.is_time_independent() {
        *prop = Some(ExactPropagator::new(
            &h.hamiltonian()?,
            DEFAULT_DENSE_LIMIT,
        )?);
        Ok(Some(ExactReference::Dense(prop.as_ref().unwrap())))
    } else {
        // Time-ordered reference: composite fourth-order steps at dt = 1e-2.
        Ok(Some(ExactReference::TinyStepT4 { h, dt_ref: 1e-2 }))
    }
}

#[derive(Serialize)]
struct RunSummary<'a> {
    config: &'a ExperimentConfig,
    accepted_steps: usize,
    total_rejections: usize,
    mean_dt: f64,
    t_final: f64,
    wall_time_s: f64,
    budget_all_within: Option<bool>,
}

pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let started = Instant::now();
    let h = cfg.build_hamiltonian()?;
    let trace = run_trace(cfg, &h)?;

    let mut prop = None;
    let reference = budget_reference(cfg, &h, &mut prop)?;
    let budget: Option<BudgetReport> = match reference {
        Some(reference) => {
            let obs = cfg.build_observable()?;
            Some(adaptive::verify_budget(
                &trace,
                &h,
                &cfg.initial_state(),
                &reference,
                Some(&obs),
            )?)
        }
        None => None,
    };

    std::fs::create_dir_all(out)?;
    let trace_path = out.join("trace.jsonl");
    let mut w = BufWriter::new(File::create(&trace_path)?);
    trace.write_jsonl(&mut w)?;
    if let Some(report) = &budget {
        #[derive(Serialize)]
        struct BudgetLine<'a> {
            record: &'static str,
            #[serde(flatten)]
            row: &'a adaptive::BudgetRow,
        }
        for row in &report.rows {
            serde_json::to_writer(
                &mut w,
                &BudgetLine {
                    record: "budget",
                    row,
                },
            )?;
            writeln!(w)?;
        }
    }
    w.flush()?;

    let summary = RunSummary {
        config: cfg,
        accepted_steps: trace.accepted_steps(),
        total_rejections: trace.total_rejections(),
        mean_dt: trace.mean_accepted_dt(),
        t_final: trace.t_final(),
        wall_time_s: started.elapsed().as_secs_f64(),
        budget_all_within: budget.as_ref().map(|b| b.all_within),
    };
    serde_json::to_writer_pretty(File::create(out.join("summary.json"))?, &summary)?;

    println!(
        "run: {} steps, {} rejections, mean dt {:.5}, reached t = {:.6} in {:.2}s",
        summary.accepted_steps,
        summary.total_rejections,
        summary.mean_dt,
        summary.t_final,
        summary.wall_time_s
    );
    if let Some(ok) = summary.budget_all_within {
        println!(
            "budget replay: {}",
            if ok {
                "within bounds at every step"
            } else {
                "VIOLATED"
            }
        );
    }
    println!("trace: {}", trace_path.display());
    Ok(())
}

pub fn cmd_bounds(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let section = cfg.bounds.clone().unwrap_or(crate::config::BoundsSection {
        l_values: vec![cfg.l],
        epsilons: vec![1e-2, 1e-3],
        dense_limit: None,
    });
    let mut opts = norm_options(cfg);
    if let Some(limit) = section.dense_limit {
        opts.dense_limit = limit;
    }

    std::fs::create_dir_all(out)?;
    let mut wtr = csv::Writer::from_path(out.join("bounds.csv"))?;
    wtr.write_record([
        "l", "norm_bba", "norm_aba", "w_ab", "w_ba", "tighter", "epsilon", "dt_bound",
    ])?;
    for &l in &section.l_values {
        let h = match cfg.model {
            ModelSpec::IsingX | ModelSpec::IsingRamp => {
                let c = &cfg.couplings;
                models::ising_x(l, c.j_z, c.h_z, c.h_x)?
            }
            ModelSpec::Custom(_) => {
                if l != cfg.l {
                    bail!("custom models cannot be rescaled over l_values");
                }
                cfg.build_hamiltonian()?
            }
        };
        let report = baselines::w_norms(&h, &opts)?;
        println!(
            "L={l}: ||[B,[B,A]]||={:.6e} ||[A,[B,A]]||={:.6e} W_AB={:.6e} W_BA={:.6e} tighter={:?}",
            report.norm_bba, report.norm_aba, report.w_ab, report.w_ba, report.tighter
        );
        for &eps in &section.epsilons {
            let bound = baselines::dt_bound_from_report(&report, eps);
            println!("    dt_bound(eps={eps:.1e}) = {bound:.6e}");
            wtr.write_record([
                l.to_string(),
                format!("{:.12e}", report.norm_bba),
                format!("{:.12e}", report.norm_aba),
                format!("{:.12e}", report.w_ab),
                format!("{:.12e}", report.w_ba),
                format!("{:?}", report.tighter),
                format!("{eps:e}"),
                format!("{bound:.12e}"),
            ])?;
        }
    }
    wtr.flush()?;
    println!("table: {}", out.join("bounds.csv").display());
    Ok(())
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pairs.len() < 2 {
        return f64::NAN;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    num / den
}

pub fn cmd_scaling(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    if cfg.l > DEFAULT_DENSE_LIMIT {
        bail!("scaling needs the dense oracle; L must be at most {DEFAULT_DENSE_LIMIT}");
    }
    let section = cfg.scaling.clone().unwrap_or_default();
    let h = cfg.build_hamiltonian()?;
    if !h.is_time_independent() {
        bail!("scaling tables are defined for time-independent Hamiltonians");
    }
    let obs = cfg.build_observable()?;
    let prop = ExactPropagator::new(&h.hamiltonian()?, DEFAULT_DENSE_LIMIT)?;
    let reference = ExactReference::Dense(&prop);
    let psi = prop.evolve(&cfg.initial_state(), section.at_t)?;

    // Variance column: calibrate on a small instance of the same couplings.
    let variance = match cfg.model {
        ModelSpec::IsingX | ModelSpec::IsingRamp => {
            let c = &cfg.couplings;
            let small = models::ising_x(4.min(cfg.l), c.j_z, c.h_z, c.h_x)?;
            let calib = estimators::calibrate_bch(&small, estimators::DEFAULT_CALIBRATION_DT)?;
            Some(estimators::VarianceEstimator::new(&h, &calib)?)
        }
        ModelSpec::Custom(_) if cfg.l <= estimators::CALIBRATION_MAX_SITES => {
            let calib = estimators::calibrate_bch(&h, estimators::DEFAULT_CALIBRATION_DT)?;
            Some(estimators::VarianceEstimator::new(&h, &calib)?)
        }
        _ => None,
    };

    let eig_h =
        trotter24::dense::HermitianEig::new(&h.hamiltonian()?.to_dense(DEFAULT_DENSE_LIMIT)?)?;
    let parts = formulas::DenseParts::new(&h, DEFAULT_DENSE_LIMIT)?;
    let formula_matrix = |f: &formulas::ProductFormula, dt: f64| parts.formula_matrix(f, dt);

    let names = [
        "eta_f",
        "eta_f24",
        "eta_f23",
        "eta_var",
        "eta_o",
        "eta_o24",
        "eta_o23",
        "op_err_t2",
        "op_err_t3",
        "op_err_t4",
    ];
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for &dt in &section.dt_grid {
        let exact = reference.evolve(&psi, 0.0, dt)?;
        let psi2 = formulas::t2_step(&h, 0.0, dt, &psi)?;
        let eta_f = 1.0 - trotter24::statevector::fidelity(&exact, &psi2)?;
        let eta_o = (trotter24::statevector::expectation(&obs, &exact)?
            - trotter24::statevector::expectation(&obs, &psi2)?)
        .abs();
        let f24 = estimators::eta_f_24(&h, &psi, 0.0, dt)?.estimate.value;
        let o24 = estimators::eta_o_24(&h, &obs, &psi, 0.0, dt)?
            .estimate
            .value
            .abs();
        let f23 = estimators::eta_f_23(&h, &psi, 0.0, dt)?.estimate.value;
        let o23 = estimators::eta_o_23(&h, &obs, &psi, 0.0, dt)?
            .estimate
            .value
            .abs();
        let var = match &variance {
            Some(v) => v.estimate(&psi, dt)?,
            None => f64::NAN,
        };
        let u = eig_h.evolution_matrix(dt);
        let e2 =
            trotter24::dense::operator_norm(&(&u - &formula_matrix(&formulas::make_t2(), dt)))?;
        let e3 =
            trotter24::dense::operator_norm(&(&u - &formula_matrix(&formulas::make_t3(), dt)))?;
        let e4 =
            trotter24::dense::operator_norm(&(&u - &formula_matrix(&formulas::make_t4(), dt)))?;
        for (col, v) in columns
            .iter_mut()
            .zip([eta_f, f24, f23, var, eta_o, o24, o23, e2, e3, e4])
        {
            col.push(v);
        }
    }

    std::fs::create_dir_all(out)?;
    let mut wtr = csv::Writer::from_path(out.join("scaling.csv"))?;
    let mut header = vec!["dt".to_string()];
    header.extend(names.iter().map(|s| s.to_string()));
    wtr.write_record(&header)?;
    for (i, &dt) in section.dt_grid.iter().enumerate() {
        let mut row = vec![format!("{dt}")];
        row.extend(columns.iter().map(|c| format!("{:.12e}", c[i])));
        wtr.write_record(&row)?;
    }
    let mut slope_row = vec!["slope".to_string()];
    println!("fitted log-log slopes over dt grid {:?}:", section.dt_grid);
    for (name, col) in names.iter().zip(&columns) {
        let slope = fit_slope(&section.dt_grid, col);
        println!("    {name:10} {slope:6.3}");
        slope_row.push(format!("{slope:.6}"));
    }
    wtr.write_record(&slope_row)?;
    wtr.flush()?;
    println!("table: {}", out.join("scaling.csv").display());
    Ok(())
}

pub fn cmd_compare_extrapolation(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    if cfg.l > DEFAULT_DENSE_LIMIT {
        bail!("extrapolation comparison needs the dense oracle; L must be at most {DEFAULT_DENSE_LIMIT}");
    }
    let section = cfg.extrapolation.clone().unwrap_or_default();
    let h = cfg.build_hamiltonian()?;
    if !h.is_time_independent() {
        bail!("extrapolation comparison is defined for time-independent Hamiltonians");
    }
    let obs = cfg.build_observable()?;
    let psi0 = cfg.initial_state();

    let mut run_cfg = cfg.clone();
    run_cfg.mode = Mode::Observable;
    let trace = run_trace(&run_cfg, &h)?;
    let prop = ExactPropagator::new(&h.hamiltonian()?, DEFAULT_DENSE_LIMIT)?;
    let rows = baselines::compare_extrapolation_vs_adaptive(
        &h,
        &obs,
        &psi0,
        &trace,
        &section.m_values,
        &ExactReference::Dense(&prop),
    )?;

    std::fs::create_dir_all(out)?;
    let mut wtr = csv::Writer::from_path(out.join("extrapolation.csv"))?;
    wtr.write_record([
        "t",
        "method",
        "m_or_eps",
        "estimate",
        "abs_error",
        "gate_count",
    ])?;
    for r in &rows {
        wtr.write_record([
            format!("{:.12}", r.t),
            r.method.clone(),
            format!("{}", r.m_or_eps),
            format!("{:.12e}", r.estimate),
            format!("{:.12e}", r.abs_error),
            r.gate_count.to_string(),
        ])?;
    }
    wtr.flush()?;
    serde_json::to_writer_pretty(File::create(out.join("extrapolation.json"))?, &rows)?;
    println!(
        "compared {} accepted times against extrapolation orders {:?}",
        trace.accepted_steps(),
        section.m_values
    );
    println!("table: {}", out.join("extrapolation.csv").display());
    Ok(())
}

pub fn cmd_sweep_c(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let section = cfg.sweep.clone().unwrap_or_default();
    let h = cfg.build_hamiltonian()?;
    let psi0 = cfg.initial_state();
    let ctrl = controller_config(cfg);
    let points = adaptive::sweep_safety_c(&ctrl, &h, &psi0, &section.c_values)?;

    std::fs::create_dir_all(out)?;
    let mut wtr = csv::Writer::from_path(out.join("sweep_c.csv"))?;
    wtr.write_record([
        "safety_c",
        "mean_dt",
        "rejection_rate",
        "accepted_steps",
        "rejections",
    ])?;
    for p in &points {
        println!(
            "C={:.2}: mean dt {:.5}, rejection rate {:.4} ({} rejections over {} steps)",
            p.safety_c, p.mean_dt, p.rejection_rate, p.rejections, p.accepted_steps
        );
        wtr.write_record([
            format!("{}", p.safety_c),
            format!("{:.12e}", p.mean_dt),
            format!("{:.12e}", p.rejection_rate),
            p.accepted_steps.to_string(),
            p.rejections.to_string(),
        ])?;
    }
    wtr.flush()?;
    println!("table: {}", out.join("sweep_c.csv").display());
    Ok(())
}
