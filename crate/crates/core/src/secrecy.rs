//! Ergodic secrecy rate and secrecy outage probability, with and without
//! artificial noise, for one or several eavesdroppers.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cltcov::{joint_cov_terms, CovMatrix};
use crate::error::{Error, Result};
use crate::fixedpoint::{MiDescriptor, MiTerm, PrecoderTag, Precoders};
use crate::linalg::CMat;
use crate::scenario::{trial_rng, ChannelStatistics, ModelKind, User};

pub fn nats_to_bits(v: f64) -> f64 {
    v / LN_2
}

pub fn bits_to_nats(v: f64) -> f64 {
    v * LN_2
}

pub fn positive_part(v: f64) -> f64 {
    v.max(0.0)
}

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Wiretap,
    An,
}

impl Scheme {
    /// MI terms per user, with their sign in the secrecy rate.
    fn user_terms(self) -> &'static [(PrecoderTag, f64)] {
        match self {
            Scheme::Wiretap => &[(PrecoderTag::W, 1.0)],
            Scheme::An => &[(PrecoderTag::U, 1.0), (PrecoderTag::V, -1.0)],
        }
    }
}

/// Analytic secrecy quantities for Bob against one eavesdropper.
#[derive(Debug, Clone, Serialize)]
pub struct SecrecyReport {
    pub regime: ModelKind,
    pub an_enabled: bool,
    pub eve: usize,
    /// Deterministic secrecy mean before the positive part, nats.
    pub mean_nats: f64,
    pub esr_nats: f64,
    pub esr_bits: f64,
    /// Asymptotic variance of the secrecy rate, nats².
    pub variance: f64,
    #[serde(skip)]
    pub cov: Option<CovMatrix>,
}

impl SecrecyReport {
    /// Outage probability at threshold `r` (nats).
    pub fn sop(&self, r: f64) -> Result<f64> {
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::InvalidCovariance(format!("secrecy variance {:e} is not positive", self.variance)));
        }
        Ok(phi((r - self.mean_nats) / self.variance.sqrt()))
    }

    pub fn sop_bits(&self, r_bits: f64) -> Result<f64> {
        self.sop(bits_to_nats(r_bits))
    }

    pub fn sop_curve_bits(&self, r_bits: &[f64]) -> Result<Vec<f64>> {
        r_bits.iter().map(|&r| self.sop_bits(r)).collect()
    }
}

/// MI terms of `users` under `scheme`, with `(user index, sign)` per term.
pub fn scheme_descriptors(scheme: Scheme, users: &[User]) -> (Vec<MiDescriptor>, Vec<(usize, f64)>) {
    let mut ds = Vec::new();
    let mut signs = Vec::new();
    for &u in users {
        for &(tag, s) in scheme.user_terms() {
            signs.push((u.index(), s));
            ds.push(MiDescriptor::new(u, tag));
        }
    }
    (ds, signs)
}

/// Term weights of `C_B − C_{E_eve}`: Bob's terms enter with +, Eve's with −.
pub fn secrecy_weights(signs: &[(usize, f64)], eve: usize) -> Vec<f64> {
    signs
        .iter()
        .map(|&(u, s)| {
            if u == 0 {
                s
            } else if u == eve + 1 {
                -s
            } else {
                0.0
            }
        })
        .collect()
}

fn user_rate(terms: &[MiTerm], signs: &[(usize, f64)], user: usize) -> f64 {
    // (UU − N log z) − (UV − N log z), or the single W term without the noise floor
    let mine: Vec<usize> = (0..terms.len()).filter(|&i| signs[i].0 == user).collect();
    match mine.len() {
        1 => terms[mine[0]].rate(),
        _ => mine.iter().map(|&i| signs[i].1 * terms[i].mean).sum(),
    }
}

/// ESR/variance report for Bob against Eve `eve`.
pub fn analyze(stats: &ChannelStatistics, precoders: &Precoders, scheme: Scheme, eve: usize) -> Result<SecrecyReport> {
    let (desc, signs) = scheme_descriptors(scheme, &[User::Bob, User::Eve(eve)]);
    stats.user(User::Eve(eve))?;
    let terms = desc
        .iter()
        .map(|d| MiTerm::build(stats, precoders, *d))
        .collect::<Result<Vec<_>>>()?;
    let mean = user_rate(&terms, &signs, 0) - user_rate(&terms, &signs, eve + 1);
    let cov = joint_cov_terms(&terms)?;
    let variance = cov.quadratic_form(&secrecy_weights(&signs, eve))?;
    let esr = positive_part(mean);
    Ok(SecrecyReport {
        regime: stats.kind,
        an_enabled: scheme == Scheme::An,
        eve,
        mean_nats: mean,
        esr_nats: esr,
        esr_bits: nats_to_bits(esr),
        variance,
        cov: Some(cov),
    })
}

fn check_budget(p: &CMat, m: usize) -> Result<()> {
    if p.shape() != (m, m) {
        return Err(Error::Dimension(format!("precoder is {}×{}, M = {m}", p.nrows(), p.ncols())));
    }
    Ok(())
}

pub fn esr_wiretap(stats: &ChannelStatistics, p_w: &CMat) -> Result<SecrecyReport> {
    check_budget(p_w, stats.m())?;
    let pre = Precoders::new(p_w.clone(), CMat::zeros(stats.m(), stats.m()))?;
    analyze(stats, &pre, Scheme::Wiretap, 0)
}

pub fn esr_an(stats: &ChannelStatistics, p_w: &CMat, p_v: &CMat) -> Result<SecrecyReport> {
    check_budget(p_w, stats.m())?;
    let pre = Precoders::new(p_w.clone(), p_v.clone())?;
    analyze(stats, &pre, Scheme::An, 0)
}

/// Wiretap SOP at `r` nats.
pub fn sop_wiretap(stats: &ChannelStatistics, p_w: &CMat, r: f64) -> Result<f64> {
    esr_wiretap(stats, p_w)?.sop(r)
}

pub fn sop_an(stats: &ChannelStatistics, p_w: &CMat, p_v: &CMat, r: f64) -> Result<f64> {
    esr_an(stats, p_w, p_v)?.sop(r)
}

/// Jointly Gaussian per-Eve secrecy rates `F_i = C_B − C_{E_i}`.
#[derive(Debug, Clone)]
pub struct MultiEveModel {
    pub mu: DVector<f64>,
    pub q: DMatrix<f64>,
}

/// Relative diagonal jitter added before the Cholesky factorization.
pub const MVN_JITTER: f64 = 1e-10;

impl MultiEveModel {
    pub fn new(mu: DVector<f64>, q: DMatrix<f64>) -> Result<Self> {
        if mu.is_empty() || q.shape() != (mu.len(), mu.len()) {
            return Err(Error::Dimension("mean and covariance sizes disagree".into()));
        }
        if mu.iter().chain(q.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("multi-eavesdropper model".into()));
        }
        Ok(Self { mu, q })
    }

    /// Builds the model from the joint covariance of Bob's and every Eve's terms.
    pub fn from_stats(stats: &ChannelStatistics, precoders: &Precoders, scheme: Scheme) -> Result<Self> {
        let users = stats.users();
        let (desc, signs) = scheme_descriptors(scheme, &users);
        let terms = desc
            .iter()
            .map(|d| MiTerm::build(stats, precoders, *d))
            .collect::<Result<Vec<_>>>()?;
        let cov = joint_cov_terms(&terms)?;
        let k = stats.eves.len();
        let bob = user_rate(&terms, &signs, 0);
        let mu = DVector::from_fn(k, |i, _| bob - user_rate(&terms, &signs, i + 1));
        let sel: Vec<Vec<f64>> = (0..k).map(|i| secrecy_weights(&signs, i)).collect();
        let q = DMatrix::from_fn(k, k, |i, j| {
            let mut acc = 0.0;
            for a in 0..desc.len() {
                for b in 0..desc.len() {
                    acc += sel[i][a] * cov.matrix[(a, b)] * sel[j][b];
                }
            }
            acc
        });
        Self::new(mu, q)
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }

    /// Restriction to a subset of eavesdroppers.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        if idx.iter().any(|&i| i >= self.k()) {
            return Err(Error::Dimension("eavesdropper index out of range".into()));
        }
        Self::new(
            DVector::from_fn(idx.len(), |i, _| self.mu[idx[i]]),
            DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.q[(idx[i], idx[j])]),
        )
    }

    fn cholesky(&self) -> Result<DMatrix<f64>> {
        let k = self.k();
        let scale = (0..k).map(|i| self.q[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let sym = (&self.q + self.q.transpose()) * 0.5 + DMatrix::identity(k, k) * (MVN_JITTER * scale);
        nalgebra::Cholesky::new(sym)
            .map(|c| c.l())
            .ok_or_else(|| Error::Model("eavesdropper covariance is not positive semidefinite".into()))
    }
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
}

const MVN_CHUNK: usize = 16_384;

/// `1 − P(F_i > r for all i)` at each threshold (nats), one shared sample set.
pub fn sop_multi_eve_curve(model: &MultiEveModel, rs: &[f64], n_samples: usize, seed: u64) -> Result<Vec<McEstimate>> {
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be positive".into()));
    }
    let l = model.cholesky()?;
    let k = model.k();
    let chunks = n_samples.div_ceil(MVN_CHUNK);
    let counts: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = trial_rng(seed, c as u64);
            let len = MVN_CHUNK.min(n_samples - c * MVN_CHUNK);
            let mut mins = Vec::with_capacity(len);
            let mut g = DVector::zeros(k);
            for _ in 0..len {
                for v in g.iter_mut() {
                    *v = rng.sample::<f64, _>(StandardNormal);
                }
                let x = &model.mu + &l * &g;
                mins.push(x.min());
            }
            rs.iter().map(|&r| mins.iter().filter(|&&v| v < r).count() as u64).collect()
        })
        .collect();
    let n = n_samples as f64;
    Ok((0..rs.len())
        .map(|j| {
            let hits: u64 = counts.iter().map(|c| c[j]).sum();
            let p = hits as f64 / n;
            McEstimate {
                value: p,
                stderr: (p * (1.0 - p) / n).sqrt(),
            }
        })
        .collect())
}

pub fn sop_multi_eve(model: &MultiEveModel, r: f64, n_samples: usize, seed: u64) -> Result<McEstimate> {
    Ok(sop_multi_eve_curve(model, &[r], n_samples, seed)?[0])
}
