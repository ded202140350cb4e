//! Phase gradient of the Gaussian outage surrogate `P(Θ) = Φ((R − C̄_S)/√V_S)`
//! for the double-scattering wiretap system, and the descent that uses it.
//!
//! `Θ` enters only through `S_k = S_k^{-/2} S_k^{+/2}`. For element `l`,
//! `dS_k = dS_k^{-/2} S_k^{+/2} + S_k^{-/2} dS_k^{+/2}` with
//! `dS_k^{+/2} = j e^{jθ_l} T_{S,k}^{1/2} e_l e_l^T R_S^{1/2}`.
//! The fixed-point derivatives `p = (δ', ω', ω̄')` solve `A_k p = q_{k,l}`:
//!
//! ```text
//! A_k = [ z ν_{R,I}     M ω̄ ν_R / L    M ω ν_R / L ]
//!       [ −ν_{S,I}/δ²   1              ν_S         ]
//!       [ 0             ν_T            1           ]
//! q_{k,l} = (0, (1/M)(Tr dS G_S − ω̄ Tr dS G_S S G_S), 0)
//! ```
//!
//! with `ν_{R,I} = (1/L) Tr R G_R²` and `ν_{S,I} = (1/M) Tr S G_S²`. The mean
//! derivative is `C̄' = ω̄ Tr G_S dS`; the variance derivative is carried
//! through every trace by first-order dual numbers.

use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixedpoint::{DsSolution, MiDescriptor, MiTerm, PrecoderTag, Precoders};
use crate::linalg::{self, CMat};
use crate::scenario::{wrap_phase, ChannelStatistics, ModelKind, PhaseMatrix, User};
use crate::secrecy::{self, Scheme};

use super::{rel_change, TraceRow, ARMIJO_C, INITIAL_STEP, MAX_PHASE_STEP, SHRINK, STEP_FLOOR};

/// Value and first derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dual {
    v: f64,
    d: f64,
}

impl Dual {
    fn new(v: f64, d: f64) -> Self {
        Self { v, d }
    }

    fn cst(v: f64) -> Self {
        Self { v, d: 0.0 }
    }

    fn ln(self) -> Self {
        Self::new(self.v.ln(), self.d / self.v)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual::new(self.v / o.v, (self.d * o.v - self.v * o.d) / (o.v * o.v))
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, s: f64) -> Dual {
        Dual::new(self.v * s, self.d * s)
    }
}

/// Matrix with its directional derivative.
#[derive(Debug, Clone)]
struct DMat {
    v: CMat,
    d: CMat,
}

impl DMat {
    fn cst(v: &CMat) -> Self {
        Self {
            d: CMat::zeros(v.nrows(), v.ncols()),
            v: v.clone(),
        }
    }

    fn mul(&self, o: &DMat) -> DMat {
        DMat {
            v: &self.v * &o.v,
            d: &self.d * &o.v + &self.v * &o.d,
        }
    }

    fn adjoint(&self) -> DMat {
        DMat {
            v: self.v.adjoint(),
            d: self.d.adjoint(),
        }
    }

    /// `Re Tr(A B)`.
    fn tr_prod(&self, o: &DMat) -> Dual {
        let v = linalg::trace_product(&self.v, &o.v).re;
        let d = linalg::trace_product(&self.d, &o.v).re + linalg::trace_product(&self.v, &o.d).re;
        Dual::new(v, d)
    }
}

/// Base-point quantities of one user's signal term.
struct TermBase {
    term: MiTerm,
    a: Matrix3<f64>,
    /// `G_S S G_S`.
    gsg: CMat,
    /// `T_{S,k}^{1/2}`.
    t_s_half: CMat,
}

impl TermBase {
    fn new(stats: &ChannelStatistics, pre: &Precoders, user: User) -> Result<Self> {
        let term = MiTerm::build(stats, pre, MiDescriptor::new(user, PrecoderTag::W))?;
        let sol = term.ds().expect("double-scattering term").clone();
        let (m, l) = (term.m as f64, term.l as f64);
        let rg = &term.r * &sol.g_r;
        let sg = &term.s * &sol.g_s;
        let tg = &term.t_eff * &sol.g_t;
        let nu_r = linalg::trace_product(&rg, &rg).re / l;
        let nu_ri = linalg::trace_product(&rg, &sol.g_r).re / l;
        let nu_s = linalg::trace_product(&sg, &sg).re / m;
        let nu_si = linalg::trace_product(&sg, &sol.g_s).re / m;
        let nu_t = linalg::trace_product(&tg, &tg).re / m;
        let (d, w, wb) = (sol.delta, sol.omega, sol.omega_bar);
        #[rustfmt::skip]
        let a = Matrix3::new(
            term.z * nu_ri, m * wb * nu_r / l, m * w * nu_r / l,
            -nu_si / (d * d), 1.0, nu_s,
            0.0, nu_t, 1.0,
        );
        let scale: f64 = a.row_iter().map(|r| r.norm()).product();
        if !(a.determinant().abs() > 1e-14 * scale) {
            return Err(Error::Degenerate(format!(
                "fixed-point Jacobian of {} is singular",
                term.descriptor.label()
            )));
        }
        let gsg = &sol.g_s * &term.s * &sol.g_s;
        let t_s_half = stats.user(user)?.t_s_half().clone();
        Ok(Self { term, a, gsg, t_s_half })
    }

    fn sol(&self) -> &DsSolution {
        self.term.ds().expect("double-scattering term")
    }
}

/// One term differentiated along `θ_l`.
struct TermDual {
    r: DMat,
    g_r: DMat,
    s: DMat,
    g_s: DMat,
    half: DMat,
    t: DMat,
    g_t: DMat,
    delta: Dual,
    omega_bar: Dual,
    /// `C̄'`.
    d_mean: f64,
    p: [f64; 3],
    residual: f64,
}

fn differentiate(base: &TermBase, r_s_half: &CMat, phase: num_complex::Complex64, l_idx: usize) -> Result<TermDual> {
    let t = &base.term;
    let sol = base.sol();
    let (m, l) = (t.m as f64, t.l as f64);
    let dim = t.l;
    // rank-one derivative of S^{+/2}
    let col = base.t_s_half.column(l_idx) * (num_complex::Complex64::i() * phase);
    let row = r_s_half.row(l_idx);
    let dhalf = &col * &row;
    let ds = linalg::hermitian_part(&(dhalf.adjoint() * &t.half + t.half.adjoint() * &dhalf));

    let (d, w, wb) = (sol.delta, sol.omega, sol.omega_bar);
    let q2 = (linalg::trace_product(&ds, &sol.g_s).re - wb * linalg::trace_product(&ds, &base.gsg).re) / m;
    let q = Vector3::new(0.0, q2, 0.0);
    let p = base
        .a
        .lu()
        .solve(&q)
        .ok_or_else(|| Error::Degenerate("fixed-point Jacobian is singular".into()))?;
    let residual = (base.a * p - q).norm();
    let (dd, dw, dwb) = (p[0], p[1], p[2]);

    let a = sol.a(t.m, t.l);
    let da = m * (dw * wb + w * dwb) / (l * d) - a * dd / d;
    let g_r_d = -(&sol.g_r * &t.r * &sol.g_r) * linalg::c(da);
    let inner = linalg::identity(dim) * linalg::c(-dd / (d * d)) + &t.s * linalg::c(dwb) + &ds * linalg::c(wb);
    let g_s_d = -(&sol.g_s * inner * &sol.g_s);
    let g_t_d = -(&sol.g_t * &t.t_eff * &sol.g_t) * linalg::c(dw);

    Ok(TermDual {
        r: DMat::cst(&t.r),
        g_r: DMat {
            v: sol.g_r.clone(),
            d: g_r_d,
        },
        s: DMat {
            v: t.s.clone(),
            d: ds.clone(),
        },
        g_s: DMat {
            v: sol.g_s.clone(),
            d: g_s_d,
        },
        half: DMat {
            v: t.half.clone(),
            d: dhalf,
        },
        t: DMat::cst(&t.t_eff),
        g_t: DMat {
            v: sol.g_t.clone(),
            d: g_t_d,
        },
        delta: Dual::new(d, dd),
        omega_bar: Dual::new(wb, dwb),
        d_mean: wb * linalg::trace_product(&sol.g_s, &ds).re,
        p: [dd, dw, dwb],
        residual,
    })
}

/// Covariance entry `−1{share} log Δ − log Δ_S` with its derivative.
fn cov_entry(k: &TermDual, l: &TermDual, share: bool, m: f64, lf: f64) -> Result<(Dual, Option<Dual>)> {
    let nu_s = k.s.mul(&k.g_s).tr_prod(&l.s.mul(&l.g_s)) * (1.0 / m);
    let nu_t = k.t.mul(&k.g_t).tr_prod(&l.t.mul(&l.g_t)) * (1.0 / m);
    let delta_s = Dual::cst(1.0) - nu_s * nu_t;
    if !(delta_s.v > 0.0) {
        return Err(Error::InvalidCovariance(format!("Δ_S = {:e}", delta_s.v)));
    }
    let mut entry = -delta_s.ln();
    let mut delta_out = None;
    if share {
        let nu_r = k.r.mul(&k.g_r).tr_prod(&l.r.mul(&l.g_r)) * (1.0 / lf);
        let cross = k.half.adjoint().mul(&l.half);
        let nu_si = cross.tr_prod(&l.g_s.mul(&k.g_s)) * (1.0 / m);
        let dk = k.delta;
        let dl = l.delta;
        let delta = Dual::cst(1.0)
            - k.omega_bar * l.omega_bar * nu_r * nu_s * (m / lf) / (dk * dl)
            - nu_r * nu_si * nu_si * nu_t * (m / lf) / (dk * dk * dl * dl * delta_s);
        if !(delta.v > 0.0) {
            return Err(Error::InvalidCovariance(format!("Δ = {:e}", delta.v)));
        }
        entry = entry - delta.ln();
        delta_out = Some(delta);
    }
    Ok((entry, delta_out))
}

/// All partials of the outage surrogate with the intermediates of the chain.
#[derive(Debug, Clone, Serialize)]
pub struct SopGradient {
    pub sop: f64,
    pub threshold_nats: f64,
    /// `C̄_S = C̄_B − C̄_E` (noise floors removed).
    pub mean_nats: f64,
    pub variance: f64,
    /// `(R − C̄_S)/√V_S`.
    pub t: f64,
    /// `∂P/∂θ_l`.
    pub grad: Vec<f64>,
    /// `∂C̄_S/∂θ_l`.
    pub d_mean: Vec<f64>,
    /// `∂V_S/∂θ_l`.
    pub d_variance: Vec<f64>,
    /// `∂Δ_{kk}/∂θ_l` for Bob and the eavesdropper.
    pub d_delta: Vec<[f64; 2]>,
    /// `(δ', ω', ω̄')` of Bob and the eavesdropper.
    pub p: Vec<[[f64; 3]; 2]>,
    /// Largest `‖A_k p − q_{k,l}‖`.
    pub solve_residual: f64,
}

fn require_ds(stats: &ChannelStatistics) -> Result<()> {
    if stats.kind != ModelKind::DoubleScattering {
        return Err(Error::Model("the outage phase gradient needs the double-scattering model".into()));
    }
    Ok(())
}

/// Outage surrogate of the wiretap system at threshold `r` (nats).
pub fn sop_objective(stats: &ChannelStatistics, p_w: &CMat, r: f64, eve: usize) -> Result<f64> {
    let m = stats.m();
    let pre = Precoders::new(p_w.clone(), CMat::zeros(m, m))?;
    secrecy::analyze(stats, &pre, Scheme::Wiretap, eve)?.sop(r)
}

pub fn sop_phase_gradient(stats: &ChannelStatistics, p_w: &CMat, r: f64, eve: usize) -> Result<SopGradient> {
    require_ds(stats)?;
    let (m, l) = (stats.m(), stats.l());
    let pre = Precoders::new(p_w.clone(), CMat::zeros(m, m))?;
    let bob = TermBase::new(stats, &pre, User::Bob)?;
    let eve_t = TermBase::new(stats, &pre, User::Eve(eve))?;
    let mean = bob.term.rate() - eve_t.term.rate();
    let angles = stats.theta().angles().to_vec();
    let r_s_half = stats.r_s_half();
    let (mf, lf) = (m as f64, l as f64);

    let per_element = (0..l)
        .into_par_iter()
        .map(|i| {
            let phase = num_complex::Complex64::from_polar(1.0, angles[i]);
            let b = differentiate(&bob, r_s_half, phase, i)?;
            let e = differentiate(&eve_t, r_s_half, phase, i)?;
            let (mbb, dbb) = cov_entry(&b, &b, true, mf, lf)?;
            let (mee, dee) = cov_entry(&e, &e, true, mf, lf)?;
            let (mbe, _) = cov_entry(&b, &e, false, mf, lf)?;
            let var = mbb + mee - mbe * 2.0;
            Ok((
                var,
                b.d_mean - e.d_mean,
                [dbb.map_or(0.0, |x| x.d), dee.map_or(0.0, |x| x.d)],
                [b.p, e.p],
                b.residual.max(e.residual),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let variance = per_element.first().map(|x| x.0.v).unwrap_or_else(|| f64::NAN);
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::InvalidCovariance(format!("secrecy variance {variance:e} is not positive")));
    }
    let sd = variance.sqrt();
    let t = (r - mean) / sd;
    let dens = (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut out = SopGradient {
        sop: secrecy::phi(t),
        threshold_nats: r,
        mean_nats: mean,
        variance,
        t,
        grad: Vec::with_capacity(l),
        d_mean: Vec::with_capacity(l),
        d_variance: Vec::with_capacity(l),
        d_delta: Vec::with_capacity(l),
        p: Vec::with_capacity(l),
        solve_residual: 0.0,
    };
    for (var, dmean, ddelta, p, res) in per_element {
        let dt = -dmean / sd - 0.5 * (r - mean) * var.d / (variance * sd);
        out.grad.push(dens * dt);
        out.d_mean.push(dmean);
        out.d_variance.push(var.d);
        out.d_delta.push(ddelta);
        out.p.push(p);
        out.solve_residual = out.solve_residual.max(res);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SopOptions {
    pub max_iter: usize,
    /// Gradient norm that counts as stationary.
    pub grad_tol: f64,
    pub eve: usize,
}

impl Default for SopOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            grad_tol: 1e-6,
            eve: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SopRun {
    pub theta: PhaseMatrix,
    /// `objective_nats` holds the outage probability of each iterate.
    pub trace: Vec<TraceRow>,
    pub initial_sop: f64,
    pub final_sop: f64,
}

/// Gradient descent on the phases with Armijo backtracking
/// `P(θ − γg) ≤ P(θ) − cγ‖g‖²`, starting from the phases held by `stats`.
pub fn optimize_sop(stats: &ChannelStatistics, p_w: &CMat, r: f64, opts: SopOptions) -> Result<SopRun> {
    require_ds(stats)?;
    let mut stats = stats.clone();
    let mut g = sop_phase_gradient(&stats, p_w, r, opts.eve)?;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut p = g.sop;
    let initial = p;
    let mut trace = vec![TraceRow {
        iter: 0,
        objective_nats: p,
        step_size: 0.0,
        grad_norm: norm(&g.grad),
        feasibility_violation: 0.0,
    }];
    let mut step0 = INITIAL_STEP;
    for it in 1..=opts.max_iter {
        let gn = norm(&g.grad);
        if gn < opts.grad_tol {
            break;
        }
        let g2 = gn * gn;
        let mut step = step0;
        let mut accepted = None;
        while step >= STEP_FLOOR {
            let cand = PhaseMatrix::new(
                stats
                    .theta()
                    .angles()
                    .iter()
                    .zip(&g.grad)
                    .map(|(t, d)| wrap_phase(t - step * d))
                    .collect(),
            );
            let cs = stats.with_theta(cand)?;
            let pc = sop_objective(&cs, p_w, r, opts.eve)?;
            if pc <= p - ARMIJO_C * step * g2 {
                accepted = Some((cs, pc));
                break;
            }
            step *= SHRINK;
        }
        let Some((cs, pc)) = accepted else {
            break;
        };
        let change = rel_change(pc, p);
        step0 = (2.0 * step).min(MAX_PHASE_STEP);
        stats = cs;
        p = pc;
        g = sop_phase_gradient(&stats, p_w, r, opts.eve)?;
        trace.push(TraceRow {
            iter: it,
            objective_nats: p,
            step_size: step,
            grad_norm: norm(&g.grad),
            feasibility_violation: 0.0,
        });
        if change < 1e-12 {
            break;
        }
    }
    Ok(SopRun {
        theta: stats.theta().clone(),
        trace,
        initial_sop: initial,
        final_sop: p,
    })
}
