//! Covariance design for the LBI model: SCA linearization of the negative
//! log-det terms and the γ-alternation that solves the convexified problem.
//!
//! With `A_k = T_k^{+/2}` the deterministic equivalent is stationary in its
//! fixed point, so `∂D̄_k/∂P = α_k A_k^H (I + α_k A_k P A_k^H)^{-1} A_k`.

use crate::error::{Error, Result};
use crate::fixedpoint::{LbiProblem, LbiSolution};
use crate::linalg::{self, CMat};
use crate::scenario::{ChannelStatistics, ModelKind, User};

use super::projection::{feasibility_violation, psd_trace_project};
use super::{rel_change, ARMIJO_C, INITIAL_STEP, SHRINK, STEP_FLOOR};

/// `D̄` of one user at covariance `p`, with its gradient in `p`.
#[derive(Debug, Clone)]
pub struct TermEval {
    pub value: f64,
    pub grad: CMat,
    pub solution: LbiSolution,
}

fn require_lbi(stats: &ChannelStatistics) -> Result<()> {
    if stats.kind != ModelKind::Lbi {
        return Err(Error::Model("covariance design is implemented for the LBI model".into()));
    }
    Ok(())
}

pub fn lbi_term(stats: &ChannelStatistics, user: User, p: &CMat) -> Result<TermEval> {
    require_lbi(stats)?;
    let u = stats.user(user)?;
    let a = stats.lbi_transmit_half(user)?;
    let t_eff = linalg::congruence(&a, p);
    let prob = LbiProblem::new(&u.r, &t_eff, u.noise, stats.m())?;
    let solution = prob.solve()?;
    let value = prob.det_equiv(&solution);
    let grad = linalg::hermitian_part(&(a.adjoint() * &solution.l_t * &a)) * linalg::c(solution.alpha);
    Ok(TermEval { value, grad, solution })
}

/// Gradients of `N(P_W, P_V) = D̄_{E,U} + D̄_{B,V}`, the part of the secrecy
/// rate that enters with a negative sign.
#[derive(Debug, Clone)]
pub struct ScaGradients {
    pub grad_w: CMat,
    pub grad_v: CMat,
    /// `N` at the linearization point.
    pub n_value: f64,
    pub alpha_eu: f64,
    pub alpha_bv: f64,
}

pub fn sca_gradients(stats: &ChannelStatistics, p_w: &CMat, p_v: &CMat, eve: usize) -> Result<ScaGradients> {
    let eu = lbi_term(stats, User::Eve(eve), &(p_w + p_v))?;
    let bv = lbi_term(stats, User::Bob, p_v)?;
    Ok(ScaGradients {
        grad_w: eu.grad.clone(),
        grad_v: &eu.grad + &bv.grad,
        n_value: eu.value + bv.value,
        alpha_eu: eu.solution.alpha,
        alpha_bv: bv.solution.alpha,
    })
}

/// `N(P_W, P_V)`.
pub fn n_value(stats: &ChannelStatistics, p_w: &CMat, p_v: &CMat, eve: usize) -> Result<f64> {
    Ok(lbi_term(stats, User::Eve(eve), &(p_w + p_v))?.value + lbi_term(stats, User::Bob, p_v)?.value)
}

/// Convexified objective `D̄_{B,U} + D̄_{E,V} − ⟨∇_W N, P_W⟩ − ⟨∇_V N, P_V⟩`
/// (constants of the linearization dropped).
pub fn sca_surrogate(stats: &ChannelStatistics, lin: &ScaGradients, p_w: &CMat, p_v: &CMat, eve: usize) -> Result<f64> {
    let bu = lbi_term(stats, User::Bob, &(p_w + p_v))?.value;
    let ev = lbi_term(stats, User::Eve(eve), p_v)?.value;
    Ok(bu + ev - linalg::real_inner(&lin.grad_w, p_w) - linalg::real_inner(&lin.grad_v, p_v))
}

/// Inner problem at fixed `α_{B,U}(γ₁)` and `α_{E,V}(γ₂)`:
/// `log det(I + α₁ A_B P_U A_B^H) + log det(I + α₂ A_E P_V A_E^H) − ⟨G_W, P_W⟩ − ⟨G_V, P_V⟩`.
#[derive(Debug, Clone)]
pub struct P6Problem {
    pub a_b: CMat,
    pub a_e: CMat,
    pub alpha1: f64,
    pub alpha2: f64,
    pub grad_w: CMat,
    pub grad_v: CMat,
    pub budget: f64,
    /// `false` freezes `P_V = 0` (wiretap design).
    pub an: bool,
}

impl P6Problem {
    fn logdet_term(a: &CMat, alpha: f64, p: &CMat) -> Result<(f64, CMat)> {
        let l = a.nrows();
        let inner = linalg::identity(l) + linalg::congruence(a, p) * linalg::c(alpha);
        let value = linalg::logdet_hpd(&inner)?;
        let inv = linalg::inverse_hpd(&inner)?;
        let grad = linalg::hermitian_part(&(a.adjoint() * inv * a)) * linalg::c(alpha);
        Ok((value, grad))
    }

    pub fn objective(&self, p_w: &CMat, p_v: &CMat) -> Result<f64> {
        Ok(self.eval(p_w, p_v)?.0)
    }

    /// Objective and its gradients in `(P_W, P_V)`.
    pub fn eval(&self, p_w: &CMat, p_v: &CMat) -> Result<(f64, CMat, CMat)> {
        let (fb, gb) = Self::logdet_term(&self.a_b, self.alpha1, &(p_w + p_v))?;
        let (fe, ge) = Self::logdet_term(&self.a_e, self.alpha2, p_v)?;
        let f = fb + fe - linalg::real_inner(&self.grad_w, p_w) - linalg::real_inner(&self.grad_v, p_v);
        let gw = &gb - &self.grad_w;
        let gv = if self.an {
            gb + ge - &self.grad_v
        } else {
            CMat::zeros(p_v.nrows(), p_v.ncols())
        };
        Ok((f, gw, gv))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    pub max_iter: usize,
    /// Relative objective change that ends the ascent.
    pub tol: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    pub p_w: CMat,
    pub p_v: CMat,
    pub objective: f64,
    pub iterations: usize,
    /// The line search hit the step floor before the tolerance was met.
    pub stalled: bool,
}

/// Projected gradient ascent on the inner problem.
///
/// Steps are taken in `P / P̄` with `P̄ = budget / M`, so the initial unit step
/// is scale free.
pub fn solve_inner_p6(problem: &P6Problem, p_w: &CMat, p_v: &CMat, opts: InnerOptions) -> Result<InnerResult> {
    let m = p_w.nrows();
    let pbar = problem.budget / m as f64;
    let (mut w, mut v) = psd_trace_project(p_w, p_v, problem.budget);
    if !problem.an {
        v = CMat::zeros(m, m);
    }
    let (mut f, mut gw, mut gv) = problem.eval(&w, &v)?;
    let mut stalled = false;
    let mut it = 0;
    while it < opts.max_iter {
        it += 1;
        let mut step = INITIAL_STEP;
        let accepted = loop {
            let s = linalg::c(step * pbar * pbar);
            let (cw, cv) = psd_trace_project(&(&w + &gw * s), &(&v + &gv * s), problem.budget);
            let (fc, gwc, gvc) = problem.eval(&cw, &cv)?;
            let ascent = linalg::real_inner(&gw, &(&cw - &w)) + linalg::real_inner(&gv, &(&cv - &v));
            if fc >= f + ARMIJO_C * ascent {
                break Some((cw, cv, fc, gwc, gvc));
            }
            step *= SHRINK;
            if step < STEP_FLOOR {
                break None;
            }
        };
        let Some((cw, cv, fc, gwc, gvc)) = accepted else {
            stalled = true;
            break;
        };
        let change = rel_change(fc, f);
        let moved = linalg::frobenius(&(&cw - &w)) + linalg::frobenius(&(&cv - &v));
        w = cw;
        v = cv;
        f = fc;
        gw = gwc;
        gv = gvc;
        if change < opts.tol || moved <= 1e-14 * pbar {
            break;
        }
    }
    Ok(InnerResult {
        p_w: w,
        p_v: v,
        objective: f,
        iterations: it,
        stalled,
    })
}

#[derive(Debug, Clone)]
pub struct Algorithm1Result {
    pub p_w: CMat,
    pub p_v: CMat,
    /// Convexified objective after each γ-update, starting with the input.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

pub const ALGORITHM1_MAX_ITER: usize = 200;
pub const ALGORITHM1_TOL: f64 = 1e-6;

/// Alternates the γ-updates and the inner problem until the convexified
/// objective settles. A candidate that lowers the objective is pulled back
/// along the segment from the previous iterate, which keeps the trace
/// nondecreasing.
pub fn algorithm1(
    stats: &ChannelStatistics,
    lin: &ScaGradients,
    p_w: &CMat,
    p_v: &CMat,
    budget: f64,
    an: bool,
    eve: usize,
) -> Result<Algorithm1Result> {
    require_lbi(stats)?;
    if feasibility_violation(p_w, p_v, budget) > 1e-9 * budget.max(1.0) {
        return Err(Error::Infeasible("Algorithm 1 start violates the power constraint".into()));
    }
    let a_b = stats.lbi_transmit_half(User::Bob)?;
    let a_e = stats.lbi_transmit_half(User::Eve(eve))?;
    let mut w = p_w.clone();
    let mut v = if an { p_v.clone() } else { CMat::zeros(p_v.nrows(), p_v.ncols()) };
    let mut s = sca_surrogate(stats, lin, &w, &v, eve)?;
    let mut trace = vec![s];
    let mut warnings = Vec::new();
    let mut converged = false;
    let mut it = 0;
    while it < ALGORITHM1_MAX_ITER {
        it += 1;
        let alpha1 = lbi_term(stats, User::Bob, &(&w + &v))?.solution.alpha;
        let alpha2 = lbi_term(stats, User::Eve(eve), &v)?.solution.alpha;
        let problem = P6Problem {
            a_b: a_b.clone(),
            a_e: a_e.clone(),
            alpha1,
            alpha2,
            grad_w: lin.grad_w.clone(),
            grad_v: lin.grad_v.clone(),
            budget,
            an,
        };
        let inner = solve_inner_p6(&problem, &w, &v, InnerOptions::default())?;
        if inner.stalled {
            warnings.push(format!("inner ascent stalled at iteration {it}"));
        }
        let (iw, iv) = (inner.p_w, inner.p_v);
        let (mut cw, mut cv) = (iw.clone(), iv.clone());
        let mut cs = sca_surrogate(stats, lin, &cw, &cv, eve)?;
        let mut t = 1.0;
        while cs < s {
            t *= SHRINK;
            if t < STEP_FLOOR {
                break;
            }
            cw = &w + (&iw - &w) * linalg::c(t);
            cv = &v + (&iv - &v) * linalg::c(t);
            cs = sca_surrogate(stats, lin, &cw, &cv, eve)?;
        }
        if cs < s {
            // no ascent along the segment: the current point is kept
            trace.push(s);
            converged = true;
            break;
        }
        let change = rel_change(cs, s);
        w = cw;
        v = cv;
        s = cs;
        trace.push(s);
        if change < ALGORITHM1_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        warnings.push(format!("Algorithm 1 stopped after {ALGORITHM1_MAX_ITER} iterations"));
    }
    Ok(Algorithm1Result {
        p_w: w,
        p_v: v,
        trace,
        iterations: it,
        converged,
        warnings,
    })
}
