//! Command-line front end. Every subcommand reads one scenario file and
//! writes CSV/JSON files into the output directory; identical arguments give
//! byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cltcov::joint_cov;
use crate::error::{Error, Result};
use crate::fixedpoint::Precoders;
use crate::linalg::{CMat, HermitianEigen};
use crate::mcoracle::run_mc;
use crate::optimize::{self, AoOptions, SopOptions};
use crate::scenario::{Scenario, ScenarioConfig};
use crate::secrecy::{self, bits_to_nats, nats_to_bits, MultiEveModel, Scheme};

/// Environment variable that caps the worker threads.
pub const THREADS_ENV: &str = "IRS_SECRECY_THREADS";

#[derive(Debug, Parser)]
#[command(name = "irs-secrecy", version, about = "Secrecy rate and outage analysis for IRS-aided MIMO links")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created when missing.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Rate threshold grid in bit/s/Hz.
#[derive(Debug, Clone, Args)]
pub struct Grid {
    #[arg(long = "r-min", default_value_t = 0.0, allow_negative_numbers = true)]
    pub r_min: f64,
    #[arg(long = "r-max", default_value_t = 4.0, allow_negative_numbers = true)]
    pub r_max: f64,
    #[arg(long = "r-steps", default_value_t = 40)]
    pub r_steps: usize,
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.r_steps == 0 || !(self.r_max >= self.r_min) || !self.r_min.is_finite() || !self.r_max.is_finite() {
            return Err(Error::Config("threshold grid needs r-steps ≥ 1 and r-min ≤ r-max".into()));
        }
        if self.r_steps == 1 {
            return Ok(vec![self.r_min]);
        }
        let h = (self.r_max - self.r_min) / (self.r_steps - 1) as f64;
        Ok((0..self.r_steps).map(|i| self.r_min + h * i as f64).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeArg {
    Wiretap,
    An,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Wiretap => Scheme::Wiretap,
            SchemeArg::An => Scheme::An,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ergodic secrecy rate against every eavesdropper (esr.json).
    Esr {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = SchemeArg::An)]
        scheme: SchemeArg,
    },
    /// Outage probability over a threshold grid (sop.csv).
    Sop {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, value_enum, default_value_t = SchemeArg::An)]
        scheme: SchemeArg,
        /// Monte-Carlo channel trials for the empirical column; 0 skips it.
        #[arg(long, default_value_t = 0)]
        trials: usize,
        /// Normal samples for the multi-eavesdropper probability.
        #[arg(long, default_value_t = 100_000)]
        mvn_samples: usize,
    },
    /// Analytic against empirical means and covariances (mc_means.csv, mc_cov.csv).
    McValidate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = SchemeArg::An)]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 20_000)]
        trials: usize,
    },
    /// Alternating covariance and phase design for the secrecy rate (LBI).
    OptimizeEsr {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = SchemeArg::An)]
        scheme: SchemeArg,
        /// Overrides `optimizer.max_outer`.
        #[arg(long)]
        max_outer: Option<usize>,
    },
    /// Phase design for the outage probability (double scattering, wiretap).
    OptimizeSop {
        #[command(flatten)]
        common: Common,
        /// Overrides `optimizer.sop_rate_bits`.
        #[arg(long)]
        rate_bits: Option<f64>,
        /// Overrides `optimizer.sop_max_iter`.
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Outage curves and secrecy rate for several transmit powers (sweep.csv).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, value_enum, default_value_t = SchemeArg::An)]
        scheme: SchemeArg,
        #[arg(long = "p-dbm", value_delimiter = ',', default_values_t = vec![30.0, 50.0], allow_negative_numbers = true)]
        p_dbm: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        mvn_samples: usize,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Esr { common, .. }
            | Command::Sop { common, .. }
            | Command::McValidate { common, .. }
            | Command::OptimizeEsr { common, .. }
            | Command::OptimizeSop { common, .. }
            | Command::Sweep { common, .. } => common,
        }
    }
}

/// Worker count from `IRS_SECRECY_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(None),
    }
}

fn load(path: &Path) -> Result<(ScenarioConfig, PathBuf)> {
    ScenarioConfig::from_path(path).map_err(|e| match e {
        Error::Json(j) => Error::Config(format!("{}: {j}", path.display())),
        Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
        other => other,
    })
}

fn with_context(e: Error, path: &Path) -> Error {
    match e {
        Error::Config(_) | Error::Io(_) | Error::Json(_) => e,
        other => Error::Model(format!("scenario {}: {other}", path.display())),
    }
}

fn precoders(sc: &Scenario, scheme: Scheme) -> Result<Precoders> {
    let m = sc.stats.m();
    match scheme {
        Scheme::Wiretap => Precoders::new(sc.p_w.clone(), CMat::zeros(m, m)),
        Scheme::An => Precoders::new(sc.p_w.clone(), sc.p_v.clone()),
    }
}

fn write(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn eigenvalues(p: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = HermitianEigen::new(p).values.iter().map(|x| x.max(0.0)).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Runs one command; returns a one-line summary for the terminal.
pub fn run(cli: &Cli) -> Result<String> {
    let common = cli.command.common();
    let (cfg, base) = load(&common.config)?;
    std::fs::create_dir_all(&common.out)?;
    let sc = cfg.build(&base)?;
    dispatch(&cli.command, &cfg, &base, &sc).map_err(|e| with_context(e, &common.config))
}

fn dispatch(cmd: &Command, cfg: &ScenarioConfig, base: &Path, sc: &Scenario) -> Result<String> {
    match cmd {
        Command::Esr { common, scheme } => run_esr(sc, (*scheme).into(), &common.out),
        Command::Sop {
            common,
            grid,
            scheme,
            trials,
            mvn_samples,
        } => run_sop(sc, (*scheme).into(), &grid.points()?, *trials, *mvn_samples, common),
        Command::McValidate { common, scheme, trials } => run_mc_validate(sc, (*scheme).into(), *trials, common),
        Command::OptimizeEsr {
            common,
            scheme,
            max_outer,
        } => run_optimize_esr(sc, *scheme, *max_outer, &common.out),
        Command::OptimizeSop {
            common,
            rate_bits,
            max_iter,
        } => run_optimize_sop(sc, *rate_bits, *max_iter, &common.out),
        Command::Sweep {
            common,
            grid,
            scheme,
            p_dbm,
            mvn_samples,
        } => run_sweep(cfg, base, (*scheme).into(), &grid.points()?, p_dbm, *mvn_samples, common),
    }
}

#[derive(Serialize)]
struct EsrEntry {
    eve: usize,
    esr_nats: f64,
    esr_bits: f64,
    variance_nats2: f64,
}

#[derive(Serialize)]
struct EsrFile {
    model: crate::scenario::ModelKind,
    scheme: Scheme,
    eves: Vec<EsrEntry>,
}

fn run_esr(sc: &Scenario, scheme: Scheme, out: &Path) -> Result<String> {
    let pre = precoders(sc, scheme)?;
    let mut eves = Vec::new();
    for e in 0..sc.stats.eves.len() {
        let rep = secrecy::analyze(&sc.stats, &pre, scheme, e)?;
        eves.push(EsrEntry {
            eve: e,
            esr_nats: rep.esr_nats,
            esr_bits: rep.esr_bits,
            variance_nats2: rep.variance,
        });
    }
    let summary = eves
        .iter()
        .map(|e| format!("E{}: {:.6} bit/s/Hz", e.eve + 1, e.esr_bits))
        .collect::<Vec<_>>()
        .join(", ");
    let file = EsrFile {
        model: sc.stats.kind,
        scheme,
        eves,
    };
    let path = write(out, "esr.json", &to_json(&file)?)?;
    Ok(format!("ESR {summary} -> {}", path.display()))
}

/// Analytic outage curve: the Gaussian CDF for one eavesdropper, the
/// normal-vector probability for several.
fn analytic_sop_curve(sc: &Scenario, scheme: Scheme, r_bits: &[f64], mvn_samples: usize, seed: u64) -> Result<Vec<f64>> {
    let pre = precoders(sc, scheme)?;
    if sc.stats.eves.len() == 1 {
        let rep = secrecy::analyze(&sc.stats, &pre, scheme, 0)?;
        return rep.sop_curve_bits(r_bits);
    }
    let model = MultiEveModel::from_stats(&sc.stats, &pre, scheme)?;
    let rs: Vec<f64> = r_bits.iter().map(|&r| bits_to_nats(r)).collect();
    Ok(secrecy::sop_multi_eve_curve(&model, &rs, mvn_samples, seed)?
        .into_iter()
        .map(|e| e.value)
        .collect())
}

/// Per-trial secrecy rate against the strongest eavesdropper, nats.
fn empirical_rates(sc: &Scenario, scheme: Scheme, trials: usize, seed: u64) -> Result<Vec<f64>> {
    let pre = precoders(sc, scheme)?;
    let users = sc.stats.users();
    let (desc, signs) = secrecy::scheme_descriptors(scheme, &users);
    let run = run_mc(&sc.stats, &pre, &desc, trials, seed)?;
    let per_eve = (0..sc.stats.eves.len())
        .map(|e| run.combination(&secrecy::secrecy_weights(&signs, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..trials)
        .map(|t| per_eve.iter().map(|v| v[t]).fold(f64::INFINITY, f64::min))
        .collect())
}

fn run_sop(sc: &Scenario, scheme: Scheme, r_bits: &[f64], trials: usize, mvn: usize, c: &Common) -> Result<String> {
    let analytic = analytic_sop_curve(sc, scheme, r_bits, mvn, c.seed)?;
    let mut csv = String::new();
    if trials > 0 {
        let rates = empirical_rates(sc, scheme, trials, c.seed)?;
        let cdf = crate::mcoracle::EmpiricalCdf::new(rates);
        csv.push_str("R_bits,sop_analytic,sop_empirical,stderr\n");
        let n = trials as f64;
        for (r, a) in r_bits.iter().zip(&analytic) {
            let p = cdf.eval(bits_to_nats(*r));
            let se = (p * (1.0 - p) / n).sqrt();
            let _ = writeln!(csv, "{r},{a},{p},{se}");
        }
    } else {
        csv.push_str("R_bits,sop_analytic\n");
        for (r, a) in r_bits.iter().zip(&analytic) {
            let _ = writeln!(csv, "{r},{a}");
        }
    }
    let path = write(&c.out, "sop.csv", &csv)?;
    Ok(format!("SOP at {} thresholds -> {}", r_bits.len(), path.display()))
}

fn run_mc_validate(sc: &Scenario, scheme: Scheme, trials: usize, c: &Common) -> Result<String> {
    let pre = precoders(sc, scheme)?;
    let users = sc.stats.users();
    let (desc, _) = secrecy::scheme_descriptors(scheme, &users);
    let analytic = joint_cov(&desc, &sc.stats, &pre)?;
    let run = run_mc(&sc.stats, &pre, &desc, trials, c.seed)?;
    let se = run.stderr();
    let mut fails = 0;
    let mut means = String::from("term,analytic_nats,empirical_nats,stderr,tolerance,pass\n");
    for (i, d) in desc.iter().enumerate() {
        let tol = 0.05f64.max(3.0 * se[i]);
        let pass = (analytic.means[i] - run.mean[i]).abs() <= tol;
        fails += usize::from(!pass);
        let _ = writeln!(
            means,
            "{},{},{},{},{},{}",
            d.label(),
            analytic.means[i],
            run.mean[i],
            se[i],
            tol,
            pass
        );
    }
    let cse = run.cov_stderr();
    let mut cov = String::from("row,col,analytic,empirical,stderr,tolerance,pass\n");
    for i in 0..desc.len() {
        for j in i..desc.len() {
            let a = analytic.matrix[(i, j)];
            let tol = (0.1 * a.abs()).max(3.0 * cse[(i, j)]);
            let pass = (a - run.cov[(i, j)]).abs() <= tol;
            fails += usize::from(!pass);
            let _ = writeln!(
                cov,
                "{},{},{},{},{},{},{}",
                desc[i].label(),
                desc[j].label(),
                a,
                run.cov[(i, j)],
                cse[(i, j)],
                tol,
                pass
            );
        }
    }
    write(&c.out, "mc_means.csv", &means)?;
    let path = write(&c.out, "mc_cov.csv", &cov)?;
    Ok(format!(
        "{} terms, {trials} trials, {fails} check(s) outside tolerance -> {}",
        desc.len(),
        path.display()
    ))
}

#[derive(Serialize)]
struct OptimizeEsrFile {
    scheme: SchemeArg,
    iterations: usize,
    esr_nats: f64,
    esr_bits: f64,
    theta: Vec<f64>,
    p_w_eigenvalues: Vec<f64>,
    p_v_eigenvalues: Vec<f64>,
    warnings: Vec<String>,
}

fn run_optimize_esr(sc: &Scenario, scheme: SchemeArg, max_outer: Option<usize>, out: &Path) -> Result<String> {
    let o = &sc.config.optimizer;
    let opts = AoOptions {
        max_outer: max_outer.unwrap_or(o.max_outer),
        rel_tol: o.rel_tol,
        an: scheme == SchemeArg::An,
        eve: 0,
    };
    let st = optimize::algorithm2_ao(&sc.stats, &sc.p_w, &sc.p_v, sc.budget(), opts)?;
    optimize::write_trace_csv(&out.join("optimize_esr_trace.csv"), &st.trace)?;
    let file = OptimizeEsrFile {
        scheme,
        iterations: st.t,
        esr_nats: st.esr_nats(),
        esr_bits: nats_to_bits(st.esr_nats()),
        theta: st.theta.angles().to_vec(),
        p_w_eigenvalues: eigenvalues(&st.p_w),
        p_v_eigenvalues: eigenvalues(&st.p_v),
        warnings: st.warnings.clone(),
    };
    let path = write(out, "optimize_esr.json", &to_json(&file)?)?;
    Ok(format!(
        "ESR {:.6} -> {:.6} bit/s/Hz in {} iterations -> {}",
        nats_to_bits(st.mean_trace[0].max(0.0)),
        file.esr_bits,
        st.t,
        path.display()
    ))
}

#[derive(Serialize)]
struct OptimizeSopFile {
    rate_bits: f64,
    iterations: usize,
    initial_sop: f64,
    final_sop: f64,
    theta: Vec<f64>,
    p_w_eigenvalues: Vec<f64>,
    p_v_eigenvalues: Vec<f64>,
}

fn run_optimize_sop(sc: &Scenario, rate_bits: Option<f64>, max_iter: Option<usize>, out: &Path) -> Result<String> {
    let o = &sc.config.optimizer;
    let rate_bits = rate_bits.unwrap_or(o.sop_rate_bits);
    let opts = SopOptions {
        max_iter: max_iter.unwrap_or(o.sop_max_iter),
        ..Default::default()
    };
    let run = optimize::optimize_sop(&sc.stats, &sc.p_w, bits_to_nats(rate_bits), opts)?;
    optimize::write_trace_csv(&out.join("optimize_sop_trace.csv"), &run.trace)?;
    let m = sc.stats.m();
    let file = OptimizeSopFile {
        rate_bits,
        iterations: run.trace.len() - 1,
        initial_sop: run.initial_sop,
        final_sop: run.final_sop,
        theta: run.theta.angles().to_vec(),
        p_w_eigenvalues: eigenvalues(&sc.p_w),
        p_v_eigenvalues: vec![0.0; m],
    };
    let path = write(out, "optimize_sop.json", &to_json(&file)?)?;
    Ok(format!(
        "SOP {:.6} -> {:.6} at {rate_bits} bit/s/Hz -> {}",
        run.initial_sop,
        run.final_sop,
        path.display()
    ))
}

fn run_sweep(
    cfg: &ScenarioConfig,
    base: &Path,
    scheme: Scheme,
    r_bits: &[f64],
    p_dbm: &[f64],
    mvn: usize,
    c: &Common,
) -> Result<String> {
    if p_dbm.is_empty() {
        return Err(Error::Config("--p-dbm needs at least one value".into()));
    }
    let mut csv = String::from("P_dbm,R_bits,sop,esr_bits\n");
    for &p in p_dbm {
        let mut cfg = cfg.clone();
        cfg.power.p_dbm = p;
        let sc = cfg.build(base)?;
        let pre = precoders(&sc, scheme)?;
        let esr = (0..sc.stats.eves.len())
            .map(|e| secrecy::analyze(&sc.stats, &pre, scheme, e).map(|r| r.esr_bits))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let sop = analytic_sop_curve(&sc, scheme, r_bits, mvn, c.seed)?;
        for (r, s) in r_bits.iter().zip(sop) {
            let _ = writeln!(csv, "{p},{r},{s},{esr}");
        }
    }
    let path = write(&c.out, "sweep.csv", &csv)?;
    Ok(format!("{} power levels -> {}", p_dbm.len(), path.display()))
}
