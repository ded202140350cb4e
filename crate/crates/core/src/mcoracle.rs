//! Monte-Carlo ground truth: exact MIs on sampled channels.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fixedpoint::{MiDescriptor, Precoders};
use crate::linalg::{self, CMat};
use crate::scenario::{ChannelSampler, ChannelStatistics};

/// `log det(zI + H P H^H)` in nats, via the eigenvalues of `H P H^H`.
pub fn mi_exact(z: f64, h: &CMat, p: &CMat) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Domain(format!("noise power must be positive, got {z}")));
    }
    if !linalg::all_finite(h) || !linalg::all_finite(p) {
        return Err(Error::NonFinite("channel or precoder".into()));
    }
    if h.ncols() != p.nrows() || p.nrows() != p.ncols() {
        return Err(Error::Dimension("channel and precoder sizes disagree".into()));
    }
    let n = h.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let g = linalg::congruence(h, p);
    let eig = g.symmetric_eigenvalues();
    let mut acc = n as f64 * z.ln();
    for v in eig.iter() {
        let t = (v / z).ln_1p();
        if !t.is_finite() {
            return Err(Error::NonFinite("log det argument is not positive".into()));
        }
        acc += t;
    }
    Ok(acc)
}

/// Streaming mean and covariance; merges are order-deterministic.
#[derive(Debug, Clone)]
pub struct Welford {
    pub n: u64,
    pub mean: DVector<f64>,
    m2: DMatrix<f64>,
}

impl Welford {
    pub fn new(k: usize) -> Self {
        Self {
            n: 0,
            mean: DVector::zeros(k),
            m2: DMatrix::zeros(k, k),
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let k = self.mean.len();
        let d: Vec<f64> = (0..k).map(|i| x[i] - self.mean[i]).collect();
        let inv = 1.0 / self.n as f64;
        for i in 0..k {
            self.mean[i] += d[i] * inv;
        }
        for i in 0..k {
            let e = x[i] - self.mean[i];
            for j in 0..k {
                self.m2[(j, i)] += d[j] * e;
            }
        }
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let d = &other.mean - &self.mean;
        self.m2 += &other.m2 + &d * d.transpose() * (na * nb / n);
        self.mean += &d * (nb / n);
        self.n += other.n;
    }

    /// Unbiased covariance, symmetrized.
    pub fn covariance(&self) -> DMatrix<f64> {
        let c = &self.m2 / ((self.n.max(2) - 1) as f64);
        (&c + c.transpose()) * 0.5
    }
}

/// Empirical CDF over stored samples.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self { sorted: values }
    }

    /// Fraction of samples strictly below `x`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        self.sorted.partition_point(|&v| v < x) as f64 / self.sorted.len() as f64
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct McRun {
    pub n_trials: usize,
    pub seed: u64,
    pub descriptors: Vec<MiDescriptor>,
    /// Row-major `n_trials × K` MI values, nats.
    pub samples: Vec<f64>,
    /// Noise floor `N log z` of each term.
    pub floors: Vec<f64>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

pub const MIN_TRIALS: usize = 100;
const CHUNK: usize = 256;

impl McRun {
    pub fn k(&self) -> usize {
        self.descriptors.len()
    }

    pub fn trial(&self, t: usize) -> &[f64] {
        &self.samples[t * self.k()..(t + 1) * self.k()]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_trials).map(|t| self.samples[t * self.k() + j]).collect()
    }

    pub fn stderr(&self) -> Vec<f64> {
        (0..self.k())
            .map(|i| (self.cov[(i, i)] / self.n_trials as f64).sqrt())
            .collect()
    }

    /// Standard error of each sample covariance entry.
    pub fn cov_stderr(&self) -> DMatrix<f64> {
        let k = self.k();
        let n = self.n_trials as f64;
        let mut acc = DMatrix::<f64>::zeros(k, k);
        for t in 0..self.n_trials {
            let x = self.trial(t);
            for i in 0..k {
                for j in 0..k {
                    let p = (x[i] - self.mean[i]) * (x[j] - self.mean[j]);
                    acc[(i, j)] += (p - self.cov[(i, j)]).powi(2);
                }
            }
        }
        acc.map(|v| (v / (n - 1.0) / n).sqrt())
    }

    /// Per-trial `Σ w_i (MI_i − floor_i)`; with Bob's terms at `+` and
    /// Eve's at `−` this is the instantaneous secrecy rate.
    pub fn combination(&self, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.k() {
            return Err(Error::Dimension("weight vector length".into()));
        }
        Ok((0..self.n_trials)
            .map(|t| {
                self.trial(t)
                    .iter()
                    .zip(weights)
                    .zip(&self.floors)
                    .map(|((v, w), f)| w * (v - f))
                    .sum()
            })
            .collect())
    }

    /// Mean and standard error of a combination.
    pub fn combination_stats(&self, weights: &[f64]) -> Result<(f64, f64)> {
        let v = self.combination(weights)?;
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok((mean, (var / n).sqrt()))
    }

    pub fn combination_cdf(&self, weights: &[f64]) -> Result<EmpiricalCdf> {
        Ok(EmpiricalCdf::new(self.combination(weights)?))
    }

    /// CSV with columns `trial, mi_<label>..., secrecy_rate_nats`.
    pub fn write_csv(&self, path: &Path, weights: &[f64]) -> Result<()> {
        let rates = self.combination(weights)?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut header = String::from("trial");
        for d in &self.descriptors {
            header.push_str(&format!(",mi_{}", d.label()));
        }
        header.push_str(",secrecy_rate_nats");
        writeln!(f, "{header}")?;
        for t in 0..self.n_trials {
            let mut line = t.to_string();
            for v in self.trial(t) {
                line.push_str(&format!(",{v:.12e}"));
            }
            line.push_str(&format!(",{:.12e}", rates[t]));
            writeln!(f, "{line}")?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Sampler groups: users inherit the shared-X group of their terms.
fn user_groups(stats: &ChannelStatistics, descriptors: &[MiDescriptor]) -> Result<Vec<usize>> {
    let users = stats.users();
    let mut groups: Vec<Option<usize>> = vec![None; users.len()];
    for d in descriptors {
        let i = stats.user(d.user).map(|_| d.user.index())?;
        match groups[i] {
            None => groups[i] = Some(d.shared_x_group),
            Some(g) if g != d.shared_x_group => {
                return Err(Error::Config(format!(
                    "terms of user {} are assigned to different X groups",
                    d.user.label()
                )))
            }
            _ => {}
        }
    }
    // unused users get fresh ids
    let mut next = descriptors.iter().map(|d| d.shared_x_group).max().map_or(0, |m| m + 1);
    Ok(groups
        .into_iter()
        .map(|g| {
            g.unwrap_or_else(|| {
                next += 1;
                next - 1
            })
        })
        .collect())
}

/// Joint per-trial MIs. Terms of one user are evaluated on the same draw.
pub fn run_mc(
    stats: &ChannelStatistics,
    precoders: &Precoders,
    descriptors: &[MiDescriptor],
    n_trials: usize,
    seed: u64,
) -> Result<McRun> {
    if n_trials < MIN_TRIALS {
        return Err(Error::Config(format!("at least {MIN_TRIALS} trials are required, got {n_trials}")));
    }
    if descriptors.is_empty() {
        return Err(Error::Config("no MI terms requested".into()));
    }
    let sampler = ChannelSampler::with_groups(stats, user_groups(stats, descriptors)?)?;
    let k = descriptors.len();
    let mut noise = Vec::with_capacity(k);
    let mut floors = Vec::with_capacity(k);
    let mut pre = Vec::with_capacity(k);
    for d in descriptors {
        let u = stats.user(d.user)?;
        noise.push(u.noise);
        floors.push(u.n() as f64 * u.noise.ln());
        pre.push(precoders.get(d.precoder));
    }
    let chunks = n_trials.div_ceil(CHUNK);
    let parts: Vec<(Vec<f64>, Welford)> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<(Vec<f64>, Welford)> {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n_trials);
            let mut vals = Vec::with_capacity((hi - lo) * k);
            let mut w = Welford::new(k);
            let mut row = vec![0.0; k];
            for t in lo..hi {
                let s = sampler.sample(seed, t as u64);
                for (j, d) in descriptors.iter().enumerate() {
                    row[j] = mi_exact(noise[j], s.channel(d.user), &pre[j])?;
                }
                w.push(&row);
                vals.extend_from_slice(&row);
            }
            Ok((vals, w))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut samples = Vec::with_capacity(n_trials * k);
    let mut acc = Welford::new(k);
    for (v, w) in &parts {
        samples.extend_from_slice(v);
        acc.merge(w);
    }
    Ok(McRun {
        n_trials,
        seed,
        descriptors: descriptors.to_vec(),
        samples,
        floors,
        mean: acc.mean.clone(),
        cov: acc.covariance(),
    })
}
