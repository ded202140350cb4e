//! Alternating optimization of `(P_W, P_V)` and the IRS phases for the
//! ergodic secrecy rate (LBI model).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::scenario::{wrap_phase, ChannelStatistics, PhaseMatrix};

use super::phase::{esr_objective, esr_phase_gradient};
use super::projection::feasibility_violation;
use super::sca::{algorithm1, sca_gradients};
use super::{rel_change, TraceRow, ARMIJO_C, INITIAL_STEP, MAX_PHASE_STEP, SHRINK, STEP_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AoOptions {
    pub max_outer: usize,
    pub rel_tol: f64,
    /// `false` freezes `P_V = 0` and designs the wiretap system.
    pub an: bool,
    pub eve: usize,
}

impl Default for AoOptions {
    fn default() -> Self {
        Self {
            max_outer: 100,
            rel_tol: 1e-6,
            an: true,
            eve: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AoState {
    pub p_w: CMat,
    pub p_v: CMat,
    pub theta: PhaseMatrix,
    /// Completed outer iterations.
    pub t: usize,
    /// One row per iterate; `objective_nats` is the ESR `[K]^+`.
    pub trace: Vec<TraceRow>,
    /// Secrecy mean `K` per iterate, before the positive part.
    pub mean_trace: Vec<f64>,
    /// SCA gradients of the last linearization (zero when none was taken).
    pub grad_w: CMat,
    pub grad_v: CMat,
    pub warnings: Vec<String>,
}

impl AoState {
    pub fn esr_nats(&self) -> f64 {
        self.mean_trace.last().copied().unwrap_or(0.0).max(0.0)
    }

    pub fn mean_nats(&self) -> f64 {
        self.mean_trace.last().copied().unwrap_or(0.0)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Armijo ascent step on the phases, trying `step0` first; returns the new
/// phases, objective and step (zero when the step floor was reached).
fn phase_step(
    stats: &ChannelStatistics,
    p_w: &CMat,
    p_v: &CMat,
    eve: usize,
    k: f64,
    grad: &[f64],
    step0: f64,
) -> Result<(PhaseMatrix, f64, f64)> {
    let g2: f64 = grad.iter().map(|x| x * x).sum();
    let theta = stats.theta().clone();
    if g2 == 0.0 {
        return Ok((theta, k, 0.0));
    }
    let mut step = step0;
    while step >= STEP_FLOOR {
        let cand = PhaseMatrix::new(
            theta
                .angles()
                .iter()
                .zip(grad)
                .map(|(t, g)| wrap_phase(t + step * g))
                .collect(),
        );
        let kc = esr_objective(&stats.with_theta(cand.clone())?, p_w, p_v, eve)?;
        if kc >= k + ARMIJO_C * step * g2 {
            return Ok((cand, kc, step));
        }
        step *= SHRINK;
    }
    Ok((theta, k, 0.0))
}

/// Algorithm 2: SCA linearization, Algorithm 1 on the covariances, then one
/// Armijo phase step, until the relative change of `K` drops below
/// `rel_tol` or `max_outer` rounds have run.
pub fn algorithm2_ao(
    stats: &ChannelStatistics,
    p_w: &CMat,
    p_v: &CMat,
    budget: f64,
    opts: AoOptions,
) -> Result<AoState> {
    let m = stats.m();
    if p_w.shape() != (m, m) || p_v.shape() != (m, m) {
        return Err(Error::Dimension(format!("covariances must be {m}×{m}")));
    }
    let p_v = if opts.an { p_v.clone() } else { CMat::zeros(m, m) };
    let viol = feasibility_violation(p_w, &p_v, budget);
    if viol > 1e-9 * budget.max(1.0) {
        return Err(Error::Infeasible(format!("initial covariances violate the power budget by {viol:e}")));
    }
    let mut stats = stats.clone();
    let mut w = p_w.clone();
    let mut v = p_v;
    let mut k = esr_objective(&stats, &w, &v, opts.eve)?;
    let g0 = esr_phase_gradient(&stats, &w, &v, opts.eve)?;
    let mut state = AoState {
        p_w: w.clone(),
        p_v: v.clone(),
        theta: stats.theta().clone(),
        t: 0,
        trace: vec![TraceRow {
            iter: 0,
            objective_nats: k.max(0.0),
            step_size: 0.0,
            grad_norm: norm(&g0),
            feasibility_violation: viol,
        }],
        mean_trace: vec![k],
        grad_w: CMat::zeros(m, m),
        grad_v: CMat::zeros(m, m),
        warnings: Vec::new(),
    };
    // the phase search restarts from twice the last accepted step
    let mut step0 = INITIAL_STEP;
    for t in 1..=opts.max_outer {
        let lin = sca_gradients(&stats, &w, &v, opts.eve)?;
        let a1 = algorithm1(&stats, &lin, &w, &v, budget, opts.an, opts.eve)?;
        state.warnings.extend(a1.warnings.iter().map(|s| format!("round {t}: {s}")));
        let k_cov = esr_objective(&stats, &a1.p_w, &a1.p_v, opts.eve)?;
        // the SCA bound guarantees ascent up to solver round-off
        if k_cov >= k {
            w = a1.p_w;
            v = a1.p_v;
        }
        let k1 = k.max(k_cov);
        let grad = esr_phase_gradient(&stats, &w, &v, opts.eve)?;
        let (theta, k2, step) = phase_step(&stats, &w, &v, opts.eve, k1, &grad, step0)?;
        step0 = if step > 0.0 { (2.0 * step).min(MAX_PHASE_STEP) } else { INITIAL_STEP };
        stats = stats.with_theta(theta)?;
        state.t = t;
        state.grad_w = lin.grad_w;
        state.grad_v = if opts.an { lin.grad_v } else { CMat::zeros(m, m) };
        state.trace.push(TraceRow {
            iter: t,
            objective_nats: k2.max(0.0),
            step_size: step,
            grad_norm: norm(&grad),
            feasibility_violation: feasibility_violation(&w, &v, budget),
        });
        state.mean_trace.push(k2);
        let change = rel_change(k2, k);
        k = k2;
        if change < opts.rel_tol {
            break;
        }
    }
    state.p_w = linalg::hermitian_part(&w);
    state.p_v = linalg::hermitian_part(&v);
    state.theta = stats.theta().clone();
    Ok(state)
}
