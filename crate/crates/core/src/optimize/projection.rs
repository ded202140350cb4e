use crate::linalg::{self, CMat, HermitianEigen};

/// Euclidean projection of `x` onto `{y ≥ 0, Σ y ≤ budget}`.
pub fn project_capped_simplex(x: &[f64], budget: f64) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= budget {
        return clipped;
    }
    // projection onto {y ≥ 0, Σ y = budget}
    let mut s: Vec<f64> = x.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (i, v) in s.iter().enumerate() {
        acc += v;
        let t = (acc - budget) / (i + 1) as f64;
        if *v - t > 0.0 {
            tau = t;
        }
    }
    x.iter().map(|v| (v - tau).max(0.0)).collect()
}

/// Nearest (Frobenius) pair of PSD matrices with `Tr P_W + Tr P_V ≤ budget`.
///
/// Eigenvectors are kept and the stacked eigenvalues are projected onto the
/// capped simplex.
pub fn psd_trace_project(p_w: &CMat, p_v: &CMat, budget: f64) -> (CMat, CMat) {
    let ew = HermitianEigen::new(p_w);
    let ev = HermitianEigen::new(p_v);
    let stacked: Vec<f64> = ew.values.iter().chain(ev.values.iter()).cloned().collect();
    let proj = project_capped_simplex(&stacked, budget.max(0.0));
    let (pw, pv) = proj.split_at(ew.dim());
    (rebuild(&ew, pw), rebuild(&ev, pv))
}

/// `U diag(vals) U^H`.
pub(crate) fn rebuild(e: &HermitianEigen, vals: &[f64]) -> CMat {
    let mut scaled = e.vectors.clone();
    for (j, v) in vals.iter().enumerate() {
        for x in scaled.column_mut(j).iter_mut() {
            *x *= *v;
        }
    }
    linalg::hermitian_part(&(scaled * e.vectors.adjoint()))
}

/// `max(0, Tr P_W + Tr P_V − budget, −λ_min(P_W), −λ_min(P_V))`.
pub fn feasibility_violation(p_w: &CMat, p_v: &CMat, budget: f64) -> f64 {
    let tr = (linalg::trace(p_w) + linalg::trace(p_v)).re;
    let mw = HermitianEigen::new(p_w).min();
    let mv = if p_v.nrows() > 0 { HermitianEigen::new(p_v).min() } else { 0.0 };
    0f64.max(tr - budget).max(-mw).max(-mv)
}
