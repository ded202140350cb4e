//! JSON scenario files.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    build_correlation_matrix_with, build_los_channel, dbm_to_watts, path_loss, ChannelStatistics,
    CorrelationSpec, LosGeometry, ModelKind, PhaseMatrix, Quadrature, UserStatistics,
};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub dimensions: DimensionsConfig,
    pub model: ModelConfig,
    pub correlations: CorrelationsConfig,
    pub pathloss: PathlossConfig,
    pub noise: NoiseConfig,
    pub power: PowerConfig,
    #[serde(default)]
    pub theta: ThetaConfig,
    #[serde(default)]
    pub los: Option<LosConfig>,
    #[serde(default)]
    pub quadrature: Option<QuadratureConfig>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionsConfig {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N_B")]
    pub n_b: usize,
    #[serde(rename = "N_E")]
    pub n_e: Vec<usize>,
    #[serde(rename = "K_eves")]
    pub k_eves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKindConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKindConfig {
    Lbi,
    Double,
}

/// A correlation matrix: either the string `"identity"` or an angular
/// model `{ "d_r", "eta", "delta" }` whose size comes from `dimensions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorrelationEntry {
    Named(NamedCorrelation),
    Angular(AngularCorrelation),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedCorrelation {
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngularCorrelation {
    pub d_r: f64,
    pub eta: f64,
    pub delta: f64,
}

impl CorrelationEntry {
    fn build(&self, n: usize, quad: Quadrature, what: &str) -> Result<CMat> {
        match self {
            CorrelationEntry::Named(NamedCorrelation::Identity) => Ok(linalg::identity(n)),
            CorrelationEntry::Angular(a) => {
                build_correlation_matrix_with(&CorrelationSpec::new(a.d_r, a.eta, a.delta, n), quad)
                    .map_err(|e| Error::Config(format!("correlations.{what}: {e}")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationsConfig {
    #[serde(rename = "R_B")]
    pub r_b: CorrelationEntry,
    #[serde(rename = "R_E")]
    pub r_e: Vec<CorrelationEntry>,
    #[serde(rename = "T_S_B")]
    pub t_s_b: CorrelationEntry,
    #[serde(rename = "T_S_E")]
    pub t_s_e: Vec<CorrelationEntry>,
    /// IRS receive side; double scattering only.
    #[serde(rename = "R_S", default)]
    pub r_s: Option<CorrelationEntry>,
    /// BS side; double scattering only, identity when omitted.
    #[serde(rename = "T", default)]
    pub t: Option<CorrelationEntry>,
}

/// Reference losses are given in dB at 1 m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathlossConfig {
    pub c1_db: f64,
    pub c2_db: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub d_bs_irs: f64,
    pub d_irs_b: f64,
    pub d_irs_e: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma2_dbm: f64,
    /// Per-eavesdropper override.
    #[serde(default)]
    pub sigma2_e_dbm: Option<Vec<f64>>,
}

/// `P_dbm` is the per-antenna budget, so `Tr P_W + Tr P_V ≤ M P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    #[serde(rename = "P_dbm")]
    pub p_dbm: f64,
    pub split_w: f64,
    pub split_v: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaConfig {
    #[serde(default)]
    pub init: ThetaInit,
    /// Seed for `uniform`.
    #[serde(default)]
    pub seed: u64,
    /// Phase file for `file`, relative to the config file.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaInit {
    #[default]
    Zeros,
    Uniform,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LosConfig {
    pub d_bs: f64,
    pub d_irs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub step_deg: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_sop_iters")]
    pub sop_max_iter: usize,
    /// Rate threshold used by the SOP phase optimizer, bit/s/Hz.
    #[serde(default = "default_sop_rate")]
    pub sop_rate_bits: f64,
}

fn default_max_outer() -> usize {
    100
}
fn default_rel_tol() -> f64 {
    1e-6
}
fn default_sop_iters() -> usize {
    100
}
fn default_sop_rate() -> f64 {
    1.0
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_outer: default_max_outer(),
            rel_tol: default_rel_tol(),
            sop_max_iter: default_sop_iters(),
            sop_rate_bits: default_sop_rate(),
        }
    }
}

/// A validated scenario with its statistics built.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub stats: ChannelStatistics,
    /// Per-antenna power budget `P` in watts.
    pub power: f64,
    pub p_w: CMat,
    pub p_v: CMat,
}

impl Scenario {
    /// `M P`.
    pub fn budget(&self) -> f64 {
        self.stats.m() as f64 * self.power
    }
}

fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be a positive finite number, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, "must be finite"))
    }
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)?;
        let cfg = Self::from_json_str(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn kind(&self) -> ModelKind {
        match self.model.kind {
            ModelKindConfig::Lbi => ModelKind::Lbi,
            ModelKindConfig::Double => ModelKind::DoubleScattering,
        }
    }

    /// Schema checks that do not need any numerics.
    pub fn validate(&self) -> Result<()> {
        let d = &self.dimensions;
        for (f, v) in [("dimensions.M", d.m), ("dimensions.L", d.l), ("dimensions.N_B", d.n_b)] {
            if v == 0 {
                return Err(bad(f, "must be at least 1"));
            }
        }
        if d.k_eves == 0 {
            return Err(bad("dimensions.K_eves", "at least one eavesdropper is required"));
        }
        let k = d.k_eves;
        let lists = [
            ("dimensions.N_E", d.n_e.len()),
            ("correlations.R_E", self.correlations.r_e.len()),
            ("correlations.T_S_E", self.correlations.t_s_e.len()),
            ("pathloss.d_irs_e", self.pathloss.d_irs_e.len()),
        ];
        for (f, len) in lists {
            if len != k {
                return Err(bad(f, format!("has {len} entries but K_eves = {k}")));
            }
        }
        if let Some(s) = &self.noise.sigma2_e_dbm {
            if s.len() != k {
                return Err(bad("noise.sigma2_e_dbm", format!("has {} entries but K_eves = {k}", s.len())));
            }
            for v in s {
                finite("noise.sigma2_e_dbm", *v)?;
            }
        }
        if d.n_e.iter().any(|&n| n == 0) {
            return Err(bad("dimensions.N_E", "every entry must be at least 1"));
        }
        match self.kind() {
            ModelKind::DoubleScattering => {
                if self.correlations.r_s.is_none() {
                    return Err(bad("correlations.R_S", "required for the double-scattering model"));
                }
                if self.los.is_some() {
                    return Err(bad("los", "only meaningful for the lbi model"));
                }
            }
            ModelKind::Lbi => {
                if self.correlations.r_s.is_some() || self.correlations.t.is_some() {
                    return Err(bad("correlations", "R_S and T are only meaningful for the double model"));
                }
            }
        }
        let p = &self.pathloss;
        finite("pathloss.c1_db", p.c1_db)?;
        finite("pathloss.c2_db", p.c2_db)?;
        positive("pathloss.alpha1", p.alpha1)?;
        positive("pathloss.alpha2", p.alpha2)?;
        positive("pathloss.d_bs_irs", p.d_bs_irs)?;
        positive("pathloss.d_irs_b", p.d_irs_b)?;
        for v in &p.d_irs_e {
            positive("pathloss.d_irs_e", *v)?;
        }
        finite("noise.sigma2_dbm", self.noise.sigma2_dbm)?;
        finite("power.P_dbm", self.power.p_dbm)?;
        let (w, v) = (self.power.split_w, self.power.split_v);
        if !(w >= 0.0 && v >= 0.0 && w.is_finite() && v.is_finite()) {
            return Err(bad("power", "split_w and split_v must be nonnegative"));
        }
        if w + v > 1.0 + 1e-12 {
            return Err(bad("power", format!("split_w + split_v = {} exceeds 1", w + v)));
        }
        if self.theta.init == ThetaInit::File && self.theta.path.is_none() {
            return Err(bad("theta.path", "required when init = \"file\""));
        }
        if let Some(q) = self.quadrature {
            positive("quadrature.step_deg", q.step_deg)?;
            positive("quadrature.tolerance", q.tolerance)?;
        }
        if let Some(l) = self.los {
            positive("los.d_bs", l.d_bs)?;
            positive("los.d_irs", l.d_irs)?;
        }
        let o = &self.optimizer;
        positive("optimizer.rel_tol", o.rel_tol)?;
        finite("optimizer.sop_rate_bits", o.sop_rate_bits)?;
        Ok(())
    }

    fn initial_theta(&self, base: &Path) -> Result<PhaseMatrix> {
        let l = self.dimensions.l;
        match self.theta.init {
            ThetaInit::Zeros => Ok(PhaseMatrix::zeros(l)),
            ThetaInit::Uniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.theta.seed);
                Ok(PhaseMatrix::new((0..l).map(|_| rng.random::<f64>() * 2.0 * PI).collect()))
            }
            ThetaInit::File => {
                let rel = self.theta.path.as_ref().expect("validated");
                let path = if rel.is_absolute() { rel.clone() } else { base.join(rel) };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| bad("theta.path", format!("{}: {e}", path.display())))?;
                let v = parse_theta_text(&text)?;
                if v.len() != l {
                    return Err(bad("theta.path", format!("{} phases given, L = {l}", v.len())));
                }
                Ok(PhaseMatrix::new(v))
            }
        }
    }

    /// Builds the statistics; `base` resolves a relative phase file.
    pub fn build(&self, base: &Path) -> Result<Scenario> {
        self.validate()?;
        let d = &self.dimensions;
        let quad = self
            .quadrature
            .map(|q| Quadrature {
                step_deg: q.step_deg,
                tolerance: q.tolerance,
            })
            .unwrap_or_default();
        let p = &self.pathloss;
        let beta1 = path_loss(10f64.powf(p.c1_db / 10.0), p.d_bs_irs, p.alpha1)?;
        let c2 = 10f64.powf(p.c2_db / 10.0);
        let noise_b = dbm_to_watts(self.noise.sigma2_dbm);

        let corr = &self.correlations;
        let r_b = corr.r_b.build(d.n_b, quad, "R_B")? * c(beta1 * path_loss(c2, p.d_irs_b, p.alpha2)?);
        let bob = UserStatistics::new(r_b, corr.t_s_b.build(d.l, quad, "T_S_B")?, noise_b)?;
        let mut eves = Vec::with_capacity(d.k_eves);
        for i in 0..d.k_eves {
            let beta = beta1 * path_loss(c2, p.d_irs_e[i], p.alpha2)?;
            let r = corr.r_e[i].build(d.n_e[i], quad, &format!("R_E[{i}]"))? * c(beta);
            let t_s = corr.t_s_e[i].build(d.l, quad, &format!("T_S_E[{i}]"))?;
            let noise = self
                .noise
                .sigma2_e_dbm
                .as_ref()
                .map(|s| dbm_to_watts(s[i]))
                .unwrap_or(noise_b);
            eves.push(UserStatistics::new(r, t_s, noise)?);
        }

        let theta = self.initial_theta(base)?;
        let stats = match self.kind() {
            ModelKind::Lbi => {
                let geom = self
                    .los
                    .map(|g| LosGeometry {
                        d_bs: g.d_bs,
                        d_irs: g.d_irs,
                    })
                    .unwrap_or_default();
                ChannelStatistics::lbi(bob, eves, build_los_channel(geom, d.m, d.l), theta)?
            }
            ModelKind::DoubleScattering => {
                let r_s = corr.r_s.as_ref().expect("validated").build(d.l, quad, "R_S")?;
                let t = match &corr.t {
                    Some(e) => e.build(d.m, quad, "T")?,
                    None => linalg::identity(d.m),
                };
                ChannelStatistics::double_scattering(bob, eves, r_s, t, theta)?
            }
        };
        let power = dbm_to_watts(self.power.p_dbm);
        Ok(Scenario {
            config: self.clone(),
            p_w: linalg::scaled_identity(d.m, self.power.split_w * power),
            p_v: linalg::scaled_identity(d.m, self.power.split_v * power),
            stats,
            power,
        })
    }
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self> {
        let (cfg, base) = ScenarioConfig::from_path(path)?;
        cfg.build(&base)
    }
}

/// Parses a phase file: numbers in radians separated by whitespace or
/// commas; `#` starts a comment.
pub fn parse_theta_text(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        for tok in body.split(|ch: char| ch == ',' || ch.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::Config(format!("theta file line {}: '{tok}' is not a number", lineno + 1)))?;
            if !v.is_finite() {
                return Err(Error::Config(format!("theta file line {}: non-finite phase", lineno + 1)));
            }
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("theta file holds no phases".into()));
    }
    Ok(out)
}
