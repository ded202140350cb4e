//! Deterministic model objects (correlation matrices, LoS channel, path
//! loss, phase shifts) and random channel realizations.

mod config;
mod sample;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};

pub use config::{
    parse_theta_text, AngularCorrelation, CorrelationEntry, CorrelationsConfig, DimensionsConfig,
    LosConfig, ModelConfig, ModelKindConfig, NamedCorrelation, NoiseConfig, OptimizerConfig,
    PathlossConfig, PowerConfig, QuadratureConfig, Scenario, ScenarioConfig, ThetaConfig, ThetaInit,
};
pub use sample::{complex_gaussian, sample_channel, trial_rng, ChannelSample, ChannelSampler};

/// Parameters of the angular correlation model for a uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    /// Relative antenna spacing in wavelengths.
    pub d_r: f64,
    /// Mean angle in degrees.
    pub eta: f64,
    /// Angle spread in degrees.
    pub delta: f64,
    /// Matrix dimension.
    pub n: usize,
}

impl CorrelationSpec {
    pub fn new(d_r: f64, eta: f64, delta: f64, n: usize) -> Self {
        Self { d_r, eta, delta, n }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("correlation dimension must be at least 1".into()));
        }
        if !(self.d_r > 0.0 && self.d_r.is_finite()) {
            return Err(Error::Config(format!("antenna spacing d_r must be > 0, got {}", self.d_r)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!("angle spread delta must be > 0, got {}", self.delta)));
        }
        if !self.eta.is_finite() {
            return Err(Error::Config("mean angle eta must be finite".into()));
        }
        Ok(())
    }
}

/// Composite trapezoid rule over `φ ∈ [-180°, 180°]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub step_deg: f64,
    /// Maximum allowed gap between the estimate at `step` and at `2 step`.
    pub tolerance: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            step_deg: 0.01,
            tolerance: 1e-6,
        }
    }
}

/// Correlation matrix `[C]_{m,n} = ∫ N(φ; η, δ²) e^{j 2π d_r (m-n) sin φ} dφ`.
///
/// The matrix is Hermitian Toeplitz, so only the `n` distinct lags are
/// integrated.
pub fn build_correlation_matrix(spec: &CorrelationSpec) -> Result<CMat> {
    build_correlation_matrix_with(spec, Quadrature::default())
}

pub fn build_correlation_matrix_with(spec: &CorrelationSpec, quad: Quadrature) -> Result<CMat> {
    spec.validate()?;
    let intervals = 360.0 / quad.step_deg;
    let n_int = intervals.round() as usize;
    if !(quad.step_deg > 0.0) || n_int < 2 || n_int % 2 != 0 || (intervals - n_int as f64).abs() > 1e-6 {
        return Err(Error::Config(format!(
            "quadrature step {}° must split 360° into an even number of intervals",
            quad.step_deg
        )));
    }
    let h = 360.0 / n_int as f64;
    let norm = 1.0 / (2.0 * PI * spec.delta * spec.delta).sqrt();
    // density and sin φ on the grid
    let grid: Vec<(f64, f64)> = (0..=n_int)
        .map(|i| {
            let phi = -180.0 + h * i as f64;
            let w = norm * (-(phi - spec.eta).powi(2) / (2.0 * spec.delta * spec.delta)).exp();
            (w, (PI * phi / 180.0).sin())
        })
        .collect();

    let mut lags = Vec::with_capacity(spec.n);
    for lag in 0..spec.n {
        let k = 2.0 * PI * spec.d_r * lag as f64;
        let mut fine = Complex64::new(0.0, 0.0);
        let mut coarse = Complex64::new(0.0, 0.0);
        for (i, &(w, s)) in grid.iter().enumerate() {
            let v = Complex64::from_polar(w, k * s);
            let end = i == 0 || i == n_int;
            fine += if end { v * 0.5 } else { v };
            if i % 2 == 0 {
                coarse += if end { v * 0.5 } else { v };
            }
        }
        fine *= h;
        coarse *= 2.0 * h;
        if (fine - coarse).norm() > quad.tolerance {
            return Err(Error::Config(format!(
                "correlation quadrature not converged at step {}° (lag {lag}, gap {:e})",
                quad.step_deg,
                (fine - coarse).norm()
            )));
        }
        lags.push(fine);
    }

    let mut out = CMat::zeros(spec.n, spec.n);
    for m in 0..spec.n {
        for n in 0..spec.n {
            out[(m, n)] = if m >= n { lags[m - n] } else { lags[n - m].conj() };
        }
        out[(m, m)] = c(lags[0].re);
    }
    Ok(out)
}

/// Geometry of the BS-IRS line-of-sight link; spacings in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosGeometry {
    pub d_bs: f64,
    pub d_irs: f64,
}

impl Default for LosGeometry {
    fn default() -> Self {
        Self { d_bs: 1.0, d_irs: 1.0 }
    }
}

/// Full-rank LoS BS-IRS matrix (`L × M`, unit-modulus entries).
///
/// Angles are deterministic uniform grids: `θ₁(l) = π l / L` over the IRS
/// elements, and `θ₂(m) = π m / M`, `φ₂(m) = 2π m / M` over the BS antennas
/// (zero-based indices). Entry `(l, m)` has phase
/// `2π [d_BS · m · sin θ₁(l) + d_IRS · l · sin θ₂(m) sin φ₂(m)]`.
pub fn build_los_channel(geom: LosGeometry, m: usize, l: usize) -> CMat {
    CMat::from_fn(l, m, |li, mi| {
        let th1 = PI * li as f64 / l as f64;
        let th2 = PI * mi as f64 / m as f64;
        let ph2 = 2.0 * PI * mi as f64 / m as f64;
        let phase = 2.0
            * PI
            * (geom.d_bs * mi as f64 * th1.sin() + geom.d_irs * li as f64 * th2.sin() * ph2.sin());
        Complex64::from_polar(1.0, phase)
    })
}

/// Distance-based path loss `c_ref / d^alpha`.
pub fn path_loss(c_ref: f64, d: f64, alpha: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    Ok(c_ref / d.powf(alpha))
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// IRS phase shifts `θ ∈ [0, 2π)^L`; the matrix form is `diag(e^{jθ_l})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatrix(Vec<f64>);

impl PhaseMatrix {
    pub fn new(theta: Vec<f64>) -> Self {
        Self(theta.into_iter().map(wrap_phase).collect())
    }

    pub fn zeros(l: usize) -> Self {
        Self(vec![0.0; l])
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn matrix(&self) -> CMat {
        let l = self.0.len();
        let mut out = CMat::zeros(l, l);
        for (i, &t) in self.0.iter().enumerate() {
            out[(i, i)] = Complex64::from_polar(1.0, t);
        }
        out
    }
}

pub fn wrap_phase(t: f64) -> f64 {
    let w = t.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lbi,
    DoubleScattering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum User {
    Bob,
    Eve(usize),
}

impl User {
    /// Position in `[Bob, Eve 0, Eve 1, ...]`.
    pub fn index(self) -> usize {
        match self {
            User::Bob => 0,
            User::Eve(i) => i + 1,
        }
    }

    pub fn label(self) -> String {
        match self {
            User::Bob => "B".into(),
            User::Eve(i) => format!("E{}", i + 1),
        }
    }
}

/// Per-user statistics. `r` already carries the cascaded path loss.
#[derive(Debug, Clone)]
pub struct UserStatistics {
    pub r: CMat,
    pub t_s: CMat,
    pub noise: f64,
    r_half: CMat,
    t_s_half: CMat,
}

impl UserStatistics {
    pub fn new(r: CMat, t_s: CMat, noise: f64) -> Result<Self> {
        if !(noise > 0.0) || !noise.is_finite() {
            return Err(Error::Config(format!("noise power must be positive, got {noise}")));
        }
        if r.nrows() == 0 || r.nrows() != r.ncols() || t_s.nrows() != t_s.ncols() {
            return Err(Error::Dimension("user correlation matrices must be square".into()));
        }
        let r_half = linalg::psd_sqrt(&r, "receive correlation")?;
        let t_s_half = linalg::psd_sqrt(&t_s, "IRS transmit correlation")?;
        Ok(Self {
            r,
            t_s,
            noise,
            r_half,
            t_s_half,
        })
    }

    pub fn n(&self) -> usize {
        self.r.nrows()
    }

    pub fn r_half(&self) -> &CMat {
        &self.r_half
    }

    pub fn t_s_half(&self) -> &CMat {
        &self.t_s_half
    }
}

/// The deterministic matrices defining one statistical channel state.
#[derive(Debug, Clone)]
pub struct ChannelStatistics {
    pub kind: ModelKind,
    m: usize,
    l: usize,
    pub bob: UserStatistics,
    pub eves: Vec<UserStatistics>,
    /// IRS receive correlation (double scattering only).
    pub r_s: CMat,
    /// BS transmit correlation (double scattering only).
    pub t: CMat,
    /// LoS BS-IRS channel, `L × M` (LBI only).
    pub h_t0: CMat,
    theta: PhaseMatrix,
    r_s_half: CMat,
    t_half: CMat,
}

impl ChannelStatistics {
    /// LoS BS-IRS model.
    pub fn lbi(bob: UserStatistics, eves: Vec<UserStatistics>, h_t0: CMat, theta: PhaseMatrix) -> Result<Self> {
        let (l, m) = h_t0.shape();
        let out = Self {
            kind: ModelKind::Lbi,
            m,
            l,
            bob,
            eves,
            r_s: linalg::identity(l),
            t: linalg::identity(m),
            h_t0,
            theta,
            r_s_half: linalg::identity(l),
            t_half: linalg::identity(m),
        };
        out.validate()?;
        Ok(out)
    }

    /// Double-scattering model.
    pub fn double_scattering(
        bob: UserStatistics,
        eves: Vec<UserStatistics>,
        r_s: CMat,
        t: CMat,
        theta: PhaseMatrix,
    ) -> Result<Self> {
        let l = r_s.nrows();
        let m = t.nrows();
        let r_s_half = linalg::psd_sqrt(&r_s, "IRS receive correlation")?;
        let t_half = linalg::psd_sqrt(&t, "BS correlation")?;
        let out = Self {
            kind: ModelKind::DoubleScattering,
            m,
            l,
            bob,
            eves,
            r_s,
            t,
            h_t0: CMat::from_element(l, m, c(1.0)),
            theta,
            r_s_half,
            t_half,
        };
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.l == 0 {
            return Err(Error::Dimension("M and L must be at least 1".into()));
        }
        if self.theta.len() != self.l {
            return Err(Error::Dimension(format!(
                "phase vector has {} entries, IRS has {}",
                self.theta.len(),
                self.l
            )));
        }
        for u in std::iter::once(&self.bob).chain(self.eves.iter()) {
            if u.t_s.nrows() != self.l {
                return Err(Error::Dimension("IRS transmit correlation must be L × L".into()));
            }
        }
        if self.r_s.shape() != (self.l, self.l) || self.t.shape() != (self.m, self.m) {
            return Err(Error::Dimension("R_S must be L × L and T must be M × M".into()));
        }
        if self.kind == ModelKind::Lbi && self.h_t0.iter().any(|z| (z.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::Model("LoS channel entries must have unit modulus".into()));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn theta(&self) -> &PhaseMatrix {
        &self.theta
    }

    pub fn with_theta(&self, theta: PhaseMatrix) -> Result<Self> {
        let mut out = self.clone();
        out.theta = theta;
        out.validate()?;
        Ok(out)
    }

    pub fn users(&self) -> Vec<User> {
        std::iter::once(User::Bob)
            .chain((0..self.eves.len()).map(User::Eve))
            .collect()
    }

    pub fn user(&self, user: User) -> Result<&UserStatistics> {
        match user {
            User::Bob => Ok(&self.bob),
            User::Eve(i) => self
                .eves
                .get(i)
                .ok_or_else(|| Error::Config(format!("no eavesdropper with index {i}"))),
        }
    }

    pub fn r_s_half(&self) -> &CMat {
        &self.r_s_half
    }

    pub fn t_half(&self) -> &CMat {
        &self.t_half
    }

    /// Variance ratio folded into the LBI transmit side: the fixed point
    /// normalizes traces by `1/M` while `X_k` has entries of variance `1/L`.
    pub fn lbi_scale(&self) -> f64 {
        self.m as f64 / self.l as f64
    }

    /// Physical IRS-side factor of the cascade.
    ///
    /// LBI: `T_{S,k}^{1/2} Θ H_{T,0}` (`L × M`).
    /// Double scattering: `S_k^{+/2} = T_{S,k}^{1/2} Θ R_S^{1/2}` (`L × L`).
    pub fn cascade_half(&self, user: User) -> Result<CMat> {
        let u = self.user(user)?;
        let theta = self.theta.matrix();
        Ok(match self.kind {
            ModelKind::Lbi => u.t_s_half() * theta * &self.h_t0,
            ModelKind::DoubleScattering => u.t_s_half() * theta * &self.r_s_half,
        })
    }

    /// `T_k^{+/2}` as seen by the LBI fixed point (variance ratio included).
    pub fn lbi_transmit_half(&self, user: User) -> Result<CMat> {
        if self.kind != ModelKind::Lbi {
            return Err(Error::Model("LBI transmit factor requested for a double-scattering model".into()));
        }
        Ok(self.cascade_half(user)? * c(self.lbi_scale().sqrt()))
    }

    /// `S_k = S_k^{-/2} S_k^{+/2}` (double scattering).
    pub fn ds_s(&self, user: User) -> Result<CMat> {
        let half = self.cascade_half(user)?;
        Ok(linalg::hermitian_part(&(half.adjoint() * half)))
    }
}
