//! Asymptotic covariance of jointly Gaussian MI fluctuations.
//!
//! Double scattering, for terms `k, l`:
//! `[M]_{kl} = −1{X_k = X_l} log Δ_{kl} − log Δ_{S,kl}` with
//! `Δ_{S,kl} = 1 − ν_S ν_T` and
//! `Δ_{kl} = 1 − M ω̄_k ω̄_l ν_R ν_S / (L δ_k δ_l) − M ν_R ν_{S,I}² ν_T / (L δ_k² δ_l² Δ_{S,kl})`.
//!
//! LBI: `[F]_{kl} = −1{X_k = X_l} log Ξ_{kl}`, `Ξ_{kl} = 1 − γ_R γ_T`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fixedpoint::{MiDescriptor, MiTerm, Precoders};
use crate::linalg::{self, CMat};
use crate::scenario::{ChannelStatistics, ModelKind};

/// Cross-resolvent traces of an ordered pair of MI terms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairQuantities {
    /// `(1/L) Tr R_k G_{R,k} R_l G_{R,l}`; only when both terms share `X`.
    pub nu_r: Option<f64>,
    /// `(1/M) Tr S_k G_{S,k} S_l G_{S,l}`.
    pub nu_s: f64,
    /// `(1/M) Tr S_k^{-/2} S_l^{+/2} G_{S,l} G_{S,k}`; only with shared `X`.
    pub nu_si: Option<f64>,
    /// `(1/M) Tr T_k G_{T,k} T_l G_{T,l}`.
    pub nu_t: f64,
    pub delta_s: f64,
    pub delta: Option<f64>,
    /// LBI: `(1/M) Tr R_k L_{R,k} R_l L_{R,l}`.
    pub gamma_r: Option<f64>,
    /// LBI: `(1/M) Tr T_k L_{T,k} T_l L_{T,l}`.
    pub gamma_t: Option<f64>,
    pub xi: Option<f64>,
    pub share_x: bool,
    /// Set when a determinant-like quantity leaves `(0, ∞)`.
    pub warning: Option<String>,
}

fn tr(a: &CMat, b: &CMat) -> f64 {
    linalg::trace_product(a, b).re
}

/// Table quantities for the ordered pair `(k, l)`.
pub fn pair_quantities(k: &MiTerm, l: &MiTerm, share_x: bool) -> Result<PairQuantities> {
    if k.kind != l.kind {
        return Err(Error::Model("pair mixes channel models".into()));
    }
    if share_x && k.n() != l.n() {
        return Err(Error::Dimension("terms sharing X must have the same receive dimension".into()));
    }
    let m = k.m as f64;
    let mut q = PairQuantities {
        share_x,
        ..Default::default()
    };
    match (k.lbi(), l.lbi(), k.ds(), l.ds()) {
        (Some(sk), Some(sl), _, _) => {
            if share_x {
                let g_r = tr(&(&k.r * &sk.l_r), &(&l.r * &sl.l_r)) / m;
                let g_t = tr(&(&k.t_eff * &sk.l_t), &(&l.t_eff * &sl.l_t)) / m;
                let xi = 1.0 - g_r * g_t;
                if !(xi > 0.0) {
                    q.warning = Some(format!("Ξ = {xi:e} outside (0, 1]"));
                }
                q.gamma_r = Some(g_r);
                q.gamma_t = Some(g_t);
                q.xi = Some(xi);
            }
        }
        (_, _, Some(sk), Some(sl)) => {
            let lf = k.l as f64;
            q.nu_s = tr(&(&k.s * &sk.g_s), &(&l.s * &sl.g_s)) / m;
            q.nu_t = tr(&(&k.t_eff * &sk.g_t), &(&l.t_eff * &sl.g_t)) / m;
            q.delta_s = 1.0 - q.nu_s * q.nu_t;
            if !(q.delta_s > 0.0) {
                q.warning = Some(format!("Δ_S = {:e} outside (0, 1]", q.delta_s));
            }
            if share_x {
                let nu_r = tr(&(&k.r * &sk.g_r), &(&l.r * &sl.g_r)) / lf;
                let cross = k.half.adjoint() * &l.half;
                let nu_si = tr(&cross, &(&sl.g_s * &sk.g_s)) / m;
                let (dk, dl) = (sk.delta, sl.delta);
                let delta = 1.0
                    - m * sk.omega_bar * sl.omega_bar * nu_r * q.nu_s / (lf * dk * dl)
                    - m * nu_r * nu_si * nu_si * q.nu_t / (lf * dk * dk * dl * dl * q.delta_s);
                if !(delta > 0.0) && q.warning.is_none() {
                    q.warning = Some(format!("Δ = {delta:e} outside (0, 1]"));
                }
                q.nu_r = Some(nu_r);
                q.nu_si = Some(nu_si);
                q.delta = Some(delta);
            }
        }
        _ => unreachable!("kind checked above"),
    }
    Ok(q)
}

fn neg_log(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(-v.ln())
    } else {
        Err(Error::InvalidCovariance(format!("{what} = {v:e}; outside the asymptotic regime")))
    }
}

/// Double-scattering covariance entry.
pub fn cov_entry_ds(pair: &PairQuantities, share_x: bool) -> Result<f64> {
    let mut v = neg_log(pair.delta_s, "Δ_S")?;
    if share_x {
        let d = pair
            .delta
            .ok_or_else(|| Error::Model("Δ was not evaluated for a shared-X pair".into()))?;
        v += neg_log(d, "Δ")?;
    }
    Ok(v)
}

/// LBI covariance entry; exactly zero for independent `X`.
pub fn cov_entry_lbi(gamma_r: f64, gamma_t: f64, share_x: bool) -> Result<f64> {
    if !share_x {
        return Ok(0.0);
    }
    neg_log(1.0 - gamma_r * gamma_t, "Ξ")
}

fn entry(pair: &PairQuantities, kind: ModelKind) -> Result<f64> {
    match kind {
        ModelKind::DoubleScattering => cov_entry_ds(pair, pair.share_x),
        ModelKind::Lbi => match (pair.gamma_r, pair.gamma_t) {
            (Some(r), Some(t)) => cov_entry_lbi(r, t, pair.share_x),
            _ => Ok(0.0),
        },
    }
}

/// Joint covariance (and deterministic means) of a list of MI terms.
#[derive(Debug, Clone)]
pub struct CovMatrix {
    pub descriptors: Vec<MiDescriptor>,
    pub means: Vec<f64>,
    pub matrix: DMatrix<f64>,
    pub warnings: Vec<String>,
}

impl CovMatrix {
    pub fn dim(&self) -> usize {
        self.descriptors.len()
    }

    /// `u^T M u`.
    pub fn quadratic_form(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim() {
            return Err(Error::Dimension(format!("selector of length {} for {} terms", u.len(), self.dim())));
        }
        let mut acc = 0.0;
        for i in 0..u.len() {
            for j in 0..u.len() {
                acc += u[i] * self.matrix[(i, j)] * u[j];
            }
        }
        Ok(acc)
    }

    pub fn index_of(&self, d: &MiDescriptor) -> Option<usize> {
        self.descriptors.iter().position(|x| x == d)
    }
}

/// Builds every term and the symmetrized covariance matrix.
pub fn joint_cov(descriptors: &[MiDescriptor], stats: &ChannelStatistics, precoders: &Precoders) -> Result<CovMatrix> {
    let terms = descriptors
        .iter()
        .map(|d| MiTerm::build(stats, precoders, *d))
        .collect::<Result<Vec<_>>>()?;
    joint_cov_terms(&terms)
}

pub fn joint_cov_terms(terms: &[MiTerm]) -> Result<CovMatrix> {
    if terms.is_empty() {
        return Err(Error::Dimension("no MI terms given".into()));
    }
    let k = terms.len();
    let kind = terms[0].kind;
    let mut matrix = DMatrix::zeros(k, k);
    let mut warnings = Vec::new();
    for i in 0..k {
        for j in i..k {
            let share = terms[i].descriptor.shared_x_group == terms[j].descriptor.shared_x_group;
            let pair = pair_quantities(&terms[i], &terms[j], share)?;
            if let Some(w) = &pair.warning {
                warnings.push(format!("{}/{}: {w}", terms[i].descriptor.label(), terms[j].descriptor.label()));
            }
            let v = entry(&pair, kind)?;
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }
    Ok(CovMatrix {
        descriptors: terms.iter().map(|t| t.descriptor).collect(),
        means: terms.iter().map(|t| t.mean).collect(),
        matrix,
        warnings,
    })
}
