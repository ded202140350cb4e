//! Fixed-point systems of the two channel models and the deterministic
//! equivalents of the mean mutual information.
//!
//! LBI (`α, ᾱ`):
//! `α = (1/M) Tr R (zI + ᾱR)^{-1}`, `ᾱ = (1/M) Tr T (I + αT)^{-1}`,
//! `D̄ = log det(zI + ᾱR) + log det(I + αT) − M α ᾱ`.
//!
//! Double scattering (`δ, ω, ω̄`), with `a = M ω ω̄ / (L δ)`:
//! `δ = (1/L) Tr R (zI + aR)^{-1}`, `ω = (1/M) Tr S (I/δ + ω̄S)^{-1}`,
//! `ω̄ = (1/M) Tr T (I + ωT)^{-1}`,
//! `C̄ = log det(zI + aR) + log det(I + δω̄S) + log det(I + ωT) − 2M ω ω̄`.
//!
//! Both systems are solved on the eigenvalues of the three matrices, so
//! every trace is a scalar sum. The identity in each resolvent is sized by
//! the matrix it multiplies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, HermitianEigen};
use crate::scenario::{ChannelStatistics, ModelKind, User};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub damping: f64,
    pub max_iter: usize,
    /// Required relative residual of the returned point.
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iter: 10_000,
            tol: 1e-10,
        }
    }
}

fn rel_change(new: f64, old: f64) -> f64 {
    let d = (new - old).abs();
    if d == 0.0 {
        0.0
    } else {
        d / new.abs().max(old.abs())
    }
}

// A map value of exactly zero comes from a zero matrix and is taken as is.
fn damp(x: f64, fx: f64, lam: f64) -> f64 {
    if fx == 0.0 {
        0.0
    } else {
        (1.0 - lam) * x + lam * fx
    }
}

/// Eigenvalues (clipped at zero) together with the eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    eig: HermitianEigen,
}

impl Spectrum {
    pub fn new(a: &CMat, what: &str) -> Result<Self> {
        if !linalg::all_finite(a) {
            return Err(Error::NonFinite(format!("{what} has non-finite entries")));
        }
        let eig = HermitianEigen::new(a);
        let values = eig.clipped_values(what)?;
        Ok(Self { values, eig })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `U f(λ) U^H` on the clipped eigenvalues.
    pub fn func(&self, f: impl Fn(f64) -> f64) -> CMat {
        self.eig.apply(|v| f(v.max(0.0)))
    }

    pub fn sum(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.values.iter().map(|&v| f(v)).sum()
    }
}

// ---------------------------------------------------------------- LBI

#[derive(Debug, Clone)]
pub struct LbiProblem {
    pub r: Spectrum,
    pub t: Spectrum,
    pub z: f64,
    /// Trace normalization (`M`).
    pub m: usize,
}

#[derive(Debug, Clone)]
pub struct LbiSolution {
    pub alpha: f64,
    pub alpha_bar: f64,
    pub iterations: usize,
    pub residual: f64,
    /// `(zI + ᾱR)^{-1}`.
    pub l_r: CMat,
    /// `(I + αT)^{-1}`.
    pub l_t: CMat,
}

impl LbiProblem {
    pub fn new(r: &CMat, t_eff: &CMat, z: f64, m: usize) -> Result<Self> {
        check_noise(z)?;
        if m == 0 {
            return Err(Error::Dimension("normalization M must be positive".into()));
        }
        Ok(Self {
            r: Spectrum::new(r, "receive correlation")?,
            t: Spectrum::new(t_eff, "effective transmit correlation")?,
            z,
            m,
        })
    }

    pub fn map(&self, alpha: f64, alpha_bar: f64) -> (f64, f64) {
        let m = self.m as f64;
        let z = self.z;
        let a = self.r.sum(|r| r / (z + alpha_bar * r)) / m;
        let ab = self.t.sum(|t| t / (1.0 + alpha * t)) / m;
        (a, ab)
    }

    pub fn residual(&self, alpha: f64, alpha_bar: f64) -> f64 {
        let (a, ab) = self.map(alpha, alpha_bar);
        rel_change(a, alpha).max(rel_change(ab, alpha_bar))
    }

    pub fn solve(&self) -> Result<LbiSolution> {
        self.solve_from((1.0, 1.0), SolverOptions::default())
    }

    pub fn solve_from(&self, start: (f64, f64), opts: SolverOptions) -> Result<LbiSolution> {
        let (mut a, mut ab) = start;
        if !(a > 0.0 && ab > 0.0) {
            return Err(Error::Domain("fixed-point start must be positive".into()));
        }
        let lam = opts.damping;
        let mut it = 0;
        loop {
            let (fa, fab) = self.map(a, ab);
            let na = damp(a, fa, lam);
            let nab = damp(ab, fab, lam);
            let change = rel_change(na, a).max(rel_change(nab, ab));
            a = na;
            ab = nab;
            it += 1;
            if !(a.is_finite() && ab.is_finite()) {
                return Err(Error::NonFinite("LBI fixed-point iterate".into()));
            }
            if change < opts.tol * 1e-3 {
                break;
            }
            if it >= opts.max_iter {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual: self.residual(a, ab),
                });
            }
        }
        let residual = self.residual(a, ab);
        if residual >= opts.tol {
            return Err(Error::NoConvergence { iterations: it, residual });
        }
        let z = self.z;
        Ok(LbiSolution {
            alpha: a,
            alpha_bar: ab,
            iterations: it,
            residual,
            l_r: self.r.func(|r| 1.0 / (z + ab * r)),
            l_t: self.t.func(|t| 1.0 / (1.0 + a * t)),
        })
    }

    pub fn det_equiv(&self, sol: &LbiSolution) -> f64 {
        let n = self.r.dim() as f64;
        let z = self.z;
        n * z.ln() + self.r.sum(|r| (sol.alpha_bar * r / z).ln_1p()) + self.t.sum(|t| (sol.alpha * t).ln_1p())
            - self.m as f64 * sol.alpha * sol.alpha_bar
    }
}

/// Solves the LBI system with trace normalization `m`.
pub fn solve_lbi(r: &CMat, t_eff: &CMat, z: f64, m: usize) -> Result<LbiSolution> {
    LbiProblem::new(r, t_eff, z, m)?.solve()
}

/// `D̄` in nats.
pub fn det_equiv_lbi(z: f64, r: &CMat, t_eff: &CMat, m: usize) -> Result<f64> {
    let p = LbiProblem::new(r, t_eff, z, m)?;
    let sol = p.solve()?;
    Ok(p.det_equiv(&sol))
}

// ---------------------------------------------------------------- double scattering

#[derive(Debug, Clone)]
pub struct DsProblem {
    pub r: Spectrum,
    pub s: Spectrum,
    pub t: Spectrum,
    pub z: f64,
    pub m: usize,
    pub l: usize,
}

#[derive(Debug, Clone)]
pub struct DsSolution {
    pub delta: f64,
    pub omega: f64,
    pub omega_bar: f64,
    pub iterations: usize,
    pub residual: f64,
    /// `(zI + aR)^{-1}`.
    pub g_r: CMat,
    /// `(I/δ + ω̄S)^{-1}`.
    pub g_s: CMat,
    /// `(I + δω̄S)^{-1}`.
    pub f_s: CMat,
    /// `(I + ωT)^{-1}`.
    pub g_t: CMat,
}

impl DsSolution {
    /// `a = M ω ω̄ / (L δ)`.
    pub fn a(&self, m: usize, l: usize) -> f64 {
        m as f64 * self.omega * self.omega_bar / (l as f64 * self.delta)
    }
}

impl DsProblem {
    pub fn new(r: &CMat, s: &CMat, t_eff: &CMat, z: f64, m: usize, l: usize) -> Result<Self> {
        check_noise(z)?;
        if m == 0 || l == 0 {
            return Err(Error::Dimension("M and L must be positive".into()));
        }
        if s.nrows() != l {
            return Err(Error::Dimension(format!("S is {}×{}, expected L = {l}", s.nrows(), s.ncols())));
        }
        let r = Spectrum::new(r, "receive correlation")?;
        if r.sum(|v| v) <= 0.0 {
            return Err(Error::Model("receive correlation has zero trace; δ degenerates to 0".into()));
        }
        Ok(Self {
            r,
            s: Spectrum::new(s, "IRS correlation S")?,
            t: Spectrum::new(t_eff, "effective transmit correlation")?,
            z,
            m,
            l,
        })
    }

    pub fn map(&self, delta: f64, omega: f64, omega_bar: f64) -> (f64, f64, f64) {
        let (m, l) = (self.m as f64, self.l as f64);
        let z = self.z;
        let a = m * omega * omega_bar / (l * delta);
        let d = self.r.sum(|r| r / (z + a * r)) / l;
        let w = self.s.sum(|s| s * delta / (1.0 + delta * omega_bar * s)) / m;
        let wb = self.t.sum(|t| t / (1.0 + omega * t)) / m;
        (d, w, wb)
    }

    pub fn residual(&self, delta: f64, omega: f64, omega_bar: f64) -> f64 {
        let (d, w, wb) = self.map(delta, omega, omega_bar);
        rel_change(d, delta).max(rel_change(w, omega)).max(rel_change(wb, omega_bar))
    }

    pub fn solve(&self) -> Result<DsSolution> {
        self.solve_from((1.0, 1.0, 1.0), SolverOptions::default())
    }

    pub fn solve_from(&self, start: (f64, f64, f64), opts: SolverOptions) -> Result<DsSolution> {
        let (mut d, mut w, mut wb) = start;
        if !(d > 0.0 && w > 0.0 && wb > 0.0) {
            return Err(Error::Domain("fixed-point start must be positive".into()));
        }
        let lam = opts.damping;
        let mut it = 0;
        loop {
            let (fd, fw, fwb) = self.map(d, w, wb);
            let nd = damp(d, fd, lam);
            let nw = damp(w, fw, lam);
            let nwb = damp(wb, fwb, lam);
            let change = rel_change(nd, d).max(rel_change(nw, w)).max(rel_change(nwb, wb));
            d = nd;
            w = nw;
            wb = nwb;
            it += 1;
            if !(d.is_finite() && w.is_finite() && wb.is_finite()) {
                return Err(Error::NonFinite("double-scattering fixed-point iterate".into()));
            }
            if d <= f64::MIN_POSITIVE {
                return Err(Error::Model("δ collapsed to 0".into()));
            }
            if change < opts.tol * 1e-3 {
                break;
            }
            if it >= opts.max_iter {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual: self.residual(d, w, wb),
                });
            }
        }
        let residual = self.residual(d, w, wb);
        if residual >= opts.tol {
            return Err(Error::NoConvergence { iterations: it, residual });
        }
        let z = self.z;
        let a = self.m as f64 * w * wb / (self.l as f64 * d);
        Ok(DsSolution {
            delta: d,
            omega: w,
            omega_bar: wb,
            iterations: it,
            residual,
            g_r: self.r.func(|r| 1.0 / (z + a * r)),
            g_s: self.s.func(|s| d / (1.0 + d * wb * s)),
            f_s: self.s.func(|s| 1.0 / (1.0 + d * wb * s)),
            g_t: self.t.func(|t| 1.0 / (1.0 + w * t)),
        })
    }

    pub fn det_equiv(&self, sol: &DsSolution) -> f64 {
        let n = self.r.dim() as f64;
        let z = self.z;
        let a = sol.a(self.m, self.l);
        let dw = sol.delta * sol.omega_bar;
        n * z.ln()
            + self.r.sum(|r| (a * r / z).ln_1p())
            + self.s.sum(|s| (dw * s).ln_1p())
            + self.t.sum(|t| (sol.omega * t).ln_1p())
            - 2.0 * self.m as f64 * sol.omega * sol.omega_bar
    }
}

pub fn solve_ds(r: &CMat, s: &CMat, t_eff: &CMat, z: f64, m: usize, l: usize) -> Result<DsSolution> {
    DsProblem::new(r, s, t_eff, z, m, l)?.solve()
}

/// `C̄` in nats.
pub fn det_equiv_ds(z: f64, r: &CMat, s: &CMat, t_eff: &CMat, m: usize, l: usize) -> Result<f64> {
    let p = DsProblem::new(r, s, t_eff, z, m, l)?;
    let sol = p.solve()?;
    Ok(p.det_equiv(&sol))
}

fn check_noise(z: f64) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("noise power must be positive, got {z}")))
    }
}

/// `A P A^H` for a transmit factor `A` (`T^{1/2}`, or `T_k^{+/2}` in the LBI model).
pub fn effective_transmit_corr(half: &CMat, p: &CMat) -> Result<CMat> {
    if p.nrows() != p.ncols() || half.ncols() != p.nrows() {
        return Err(Error::Dimension(format!(
            "transmit factor is {}×{}, precoder {}×{}",
            half.nrows(),
            half.ncols(),
            p.nrows(),
            p.ncols()
        )));
    }
    Ok(linalg::congruence(half, p))
}

// ---------------------------------------------------------------- MI terms

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrecoderTag {
    /// Signal only.
    W,
    /// Artificial noise only.
    V,
    /// Signal plus artificial noise.
    U,
}

#[derive(Debug, Clone)]
pub struct Precoders {
    pub p_w: CMat,
    pub p_v: CMat,
}

impl Precoders {
    pub fn new(p_w: CMat, p_v: CMat) -> Result<Self> {
        if p_w.shape() != p_v.shape() || p_w.nrows() != p_w.ncols() {
            return Err(Error::Dimension("P_W and P_V must be square and of equal size".into()));
        }
        linalg::check_psd(&p_w, "P_W")?;
        linalg::check_psd(&p_v, "P_V")?;
        Ok(Self { p_w, p_v })
    }

    pub fn get(&self, tag: PrecoderTag) -> CMat {
        match tag {
            PrecoderTag::W => self.p_w.clone(),
            PrecoderTag::V => self.p_v.clone(),
            PrecoderTag::U => &self.p_w + &self.p_v,
        }
    }

    pub fn total_power(&self) -> f64 {
        (linalg::trace(&self.p_w) + linalg::trace(&self.p_v)).re
    }
}

/// One mutual-information term `log det(zI + H P H^H)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MiDescriptor {
    pub user: User,
    pub precoder: PrecoderTag,
    /// Terms in the same group see the same `X` draw.
    pub shared_x_group: usize,
}

impl MiDescriptor {
    /// Terms of one user share that user's `X`.
    pub fn new(user: User, precoder: PrecoderTag) -> Self {
        Self {
            user,
            precoder,
            shared_x_group: user.index(),
        }
    }

    pub fn label(&self) -> String {
        format!("{}{:?}", self.user.label(), self.precoder)
    }
}

#[derive(Debug, Clone)]
pub enum FixedPointSolution {
    Lbi(LbiSolution),
    Ds(DsSolution),
}

/// A solved MI term with every matrix the covariance and gradient code needs.
#[derive(Debug, Clone)]
pub struct MiTerm {
    pub descriptor: MiDescriptor,
    pub kind: ModelKind,
    pub m: usize,
    pub l: usize,
    pub z: f64,
    pub p: CMat,
    /// Receive correlation including path loss.
    pub r: CMat,
    /// LBI: `T^{+/2}` with the variance ratio folded in (`L × M`).
    /// Double scattering: `S^{+/2}` (`L × L`).
    pub half: CMat,
    /// Double scattering: `S = S^{-/2} S^{+/2}`; LBI: empty.
    pub s: CMat,
    /// Double scattering: `T^{1/2}`; LBI: empty.
    pub t_half: CMat,
    /// LBI: `T^{+/2} P T^{-/2}` (`L × L`); double scattering: `T^{1/2} P T^{1/2}`.
    pub t_eff: CMat,
    pub solution: FixedPointSolution,
    /// Deterministic equivalent of the mean MI, nats.
    pub mean: f64,
}

impl MiTerm {
    pub fn build(stats: &ChannelStatistics, precoders: &Precoders, d: MiDescriptor) -> Result<Self> {
        let user = stats.user(d.user)?;
        let p = precoders.get(d.precoder);
        if p.nrows() != stats.m() {
            return Err(Error::Dimension(format!("precoder is {}×{}, M = {}", p.nrows(), p.ncols(), stats.m())));
        }
        let z = user.noise;
        let (m, l) = (stats.m(), stats.l());
        match stats.kind {
            ModelKind::Lbi => {
                let half = stats.lbi_transmit_half(d.user)?;
                let t_eff = effective_transmit_corr(&half, &p)?;
                let prob = LbiProblem::new(&user.r, &t_eff, z, m)?;
                let sol = prob.solve()?;
                let mean = prob.det_equiv(&sol);
                Ok(Self {
                    descriptor: d,
                    kind: stats.kind,
                    m,
                    l,
                    z,
                    p,
                    r: user.r.clone(),
                    half,
                    s: CMat::zeros(0, 0),
                    t_half: CMat::zeros(0, 0),
                    t_eff,
                    solution: FixedPointSolution::Lbi(sol),
                    mean,
                })
            }
            ModelKind::DoubleScattering => {
                let half = stats.cascade_half(d.user)?;
                let s = linalg::hermitian_part(&(half.adjoint() * &half));
                let t_half = stats.t_half().clone();
                let t_eff = effective_transmit_corr(&t_half, &p)?;
                let prob = DsProblem::new(&user.r, &s, &t_eff, z, m, l)?;
                let sol = prob.solve()?;
                let mean = prob.det_equiv(&sol);
                Ok(Self {
                    descriptor: d,
                    kind: stats.kind,
                    m,
                    l,
                    z,
                    p,
                    r: user.r.clone(),
                    half,
                    s,
                    t_half,
                    t_eff,
                    solution: FixedPointSolution::Ds(sol),
                    mean,
                })
            }
        }
    }

    pub fn n(&self) -> usize {
        self.r.nrows()
    }

    pub fn lbi(&self) -> Option<&LbiSolution> {
        match &self.solution {
            FixedPointSolution::Lbi(s) => Some(s),
            FixedPointSolution::Ds(_) => None,
        }
    }

    pub fn ds(&self) -> Option<&DsSolution> {
        match &self.solution {
            FixedPointSolution::Ds(s) => Some(s),
            FixedPointSolution::Lbi(_) => None,
        }
    }

    /// `mean − N log z`: the rate part without the noise floor.
    pub fn rate(&self) -> f64 {
        self.mean - self.n() as f64 * self.z.ln()
    }
}
