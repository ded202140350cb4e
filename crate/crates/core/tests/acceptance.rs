//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero when any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use irs_secrecy::cltcov::joint_cov;
use irs_secrecy::fixedpoint::{DsProblem, LbiProblem, MiTerm, Precoders};
use irs_secrecy::linalg::{self, c, CMat};
use irs_secrecy::mcoracle::run_mc;
use irs_secrecy::optimize::{self, AoOptions, SopOptions};
use irs_secrecy::scenario::{complex_gaussian, trial_rng, PhaseMatrix, Scenario, ScenarioConfig};
use irs_secrecy::secrecy::{self, bits_to_nats, MultiEveModel, Scheme};
use rand::Rng;
use serde_json::json;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Receive correlation `C(1, eta, delta)`, IRS-side correlation
/// `C(1, ts.0, ts.1)` and IRS distance of one eavesdropper.
struct Eve {
    eta: f64,
    delta: f64,
    ts: (f64, f64),
    d: f64,
}

const EVE_A: Eve = Eve {
    eta: 60.0,
    delta: 5.0,
    ts: (5.0, 5.0),
    d: 40.0,
};
const EVE_B: Eve = Eve {
    eta: -45.0,
    delta: 5.0,
    ts: (5.0, 5.0),
    d: 35.0,
};
/// Closer than Bob and seen through a different part of the IRS, so that
/// artificial noise has directions to exploit.
const EVE_NEAR: Eve = Eve {
    eta: 60.0,
    delta: 5.0,
    ts: (-30.0, 10.0),
    d: 20.0,
};

/// Correlation and path-loss settings of the simulation section: `C(1,0,5)`
/// at Bob, `C(1,5,5)` on Bob's IRS link and `R_S`, `T = I`, Bob at 30 m.
/// `theta_seed = None` starts from zero phases.
fn config(
    double: bool,
    m: usize,
    l: usize,
    n: usize,
    p_dbm: f64,
    eves: &[Eve],
    theta_seed: Option<u64>,
) -> ScenarioConfig {
    let k = eves.len();
    let corr = |eta: f64, delta: f64| json!({"d_r": 1.0, "eta": eta, "delta": delta});
    let mut correlations = json!({
        "R_B": corr(0.0, 5.0),
        "R_E": eves.iter().map(|e| corr(e.eta, e.delta)).collect::<Vec<_>>(),
        "T_S_B": corr(5.0, 5.0),
        "T_S_E": eves.iter().map(|e| corr(e.ts.0, e.ts.1)).collect::<Vec<_>>(),
    });
    if double {
        correlations["R_S"] = corr(5.0, 5.0);
        correlations["T"] = json!("identity");
    }
    let v = json!({
        "dimensions": {"M": m, "L": l, "N_B": n, "N_E": vec![n; k], "K_eves": k},
        "model": {"kind": if double { "double" } else { "lbi" }},
        "correlations": correlations,
        "pathloss": {"c1_db": -23.05, "c2_db": -25.95, "alpha1": 2.2, "alpha2": 3.67,
                     "d_bs_irs": 20.0, "d_irs_b": 30.0, "d_irs_e": eves.iter().map(|e| e.d).collect::<Vec<_>>()},
        "noise": {"sigma2_dbm": -94.0},
        "power": {"P_dbm": p_dbm, "split_w": 0.9, "split_v": 0.1},
        "theta": match theta_seed {
            Some(seed) => json!({"init": "uniform", "seed": seed}),
            None => json!({"init": "zeros"}),
        },
    });
    ScenarioConfig::from_json_str(&v.to_string()).expect("valid acceptance scenario")
}

fn build(cfg: &ScenarioConfig) -> Scenario {
    cfg.build(Path::new(".")).expect("scenario builds")
}

fn random_psd(n: usize, rank: usize, scale: f64, seed: u64) -> CMat {
    let mut rng = trial_rng(seed, 11);
    let g = complex_gaussian(&mut rng, n, rank, 1.0);
    linalg::hermitian_part(&(&g * g.adjoint())) * c(scale / rank as f64)
}

fn criterion_1() -> Outcome {
    let (m, l, n) = (64, 64, 32);
    let mut worst_res = 0.0f64;
    let mut worst_time = Duration::ZERO;
    for seed in 0..50u64 {
        let mut rng = trial_rng(seed, 12);
        let rank = |rng: &mut rand_chacha::ChaCha8Rng, d: usize| rng.random_range(d / 4..=2 * d);
        let scale = |rng: &mut rand_chacha::ChaCha8Rng| 10f64.powf(rng.random_range(-2.0..2.0));
        let z = 10f64.powf(rng.random_range(-3.0..0.0));
        let (rk_r, rk_t, rk_s) = (rank(&mut rng, n), rank(&mut rng, m), rank(&mut rng, l));
        let r = random_psd(n, rk_r, scale(&mut rng), 1000 + seed);
        let t = random_psd(m, rk_t, scale(&mut rng), 2000 + seed);
        let s = random_psd(l, rk_s, scale(&mut rng), 3000 + seed);

        let start = Instant::now();
        let lbi = LbiProblem::new(&r, &t, z, m).map_err(err)?;
        let sol = lbi.solve().map_err(|e| format!("LBI seed {seed}: {e}"))?;
        worst_time = worst_time.max(start.elapsed());
        worst_res = worst_res.max(lbi.residual(sol.alpha, sol.alpha_bar));

        let start = Instant::now();
        let ds = DsProblem::new(&r, &s, &t, z, m, l).map_err(err)?;
        let sol = ds.solve().map_err(|e| format!("DS seed {seed}: {e}"))?;
        worst_time = worst_time.max(start.elapsed());
        worst_res = worst_res.max(ds.residual(sol.delta, sol.omega, sol.omega_bar));
    }
    check(
        worst_res < 1e-10 && worst_time < Duration::from_secs(1),
        format!(
            "100 solves at M=L=64: max residual {worst_res:.2e} (< 1e-10), slowest {:.1} ms (< 1000)",
            worst_time.as_secs_f64() * 1e3
        ),
    )
}

/// Largest `|analytic − empirical|` over the four AN terms, the largest
/// error relative to the term's rate, and whether every term is inside
/// `max(0.05, 3 SE)`.
fn mean_errors(sc: &Scenario, trials: usize, seed: u64) -> Result<(f64, f64, bool), String> {
    let pre = Precoders::new(sc.p_w.clone(), sc.p_v.clone()).map_err(err)?;
    let (desc, _) = secrecy::scheme_descriptors(Scheme::An, &sc.stats.users());
    let run = run_mc(&sc.stats, &pre, &desc, trials, seed).map_err(err)?;
    let se = run.stderr();
    let mut worst = 0.0f64;
    let mut worst_rel = 0.0f64;
    let mut ok = true;
    for (i, d) in desc.iter().enumerate() {
        let term = MiTerm::build(&sc.stats, &pre, *d).map_err(err)?;
        let e = (term.mean - run.mean[i]).abs();
        worst = worst.max(e);
        worst_rel = worst_rel.max(e / term.rate().abs());
        ok &= e <= 0.05f64.max(3.0 * se[i]);
    }
    Ok((worst, worst_rel, ok))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    for double in [false, true] {
        let small = build(&config(double, 8, 16, 4, 30.0, &[EVE_A], Some(3)));
        let large = build(&config(double, 16, 32, 8, 30.0, &[EVE_A], Some(3)));
        let (e, _, ok) = mean_errors(&small, 20_000, 21)?;
        // the budget M P grows with M, so the size comparison is relative to
        // the rate, with enough trials for the bias to clear the sampling noise
        let (_, e1, _) = mean_errors(&small, 100_000, 23)?;
        let (_, e2, _) = mean_errors(&large, 100_000, 24)?;
        pass &= ok && e2 < e1;
        notes.push(format!(
            "{}: max err {e:.4} nats within max(0.05, 3 SE): {ok}; relative err at 1e5 trials {e1:.2e} -> {e2:.2e} with doubled dims",
            if double { "DS" } else { "LBI" }
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 120.0;
    check(pass, format!("{}; {secs:.1} s (≤ 120)", notes.join("; ")))
}

fn criterion_3() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for double in [false, true] {
        let sc = build(&config(double, 6, 32, 4, 30.0, &[EVE_A], Some(5)));
        let pre = Precoders::new(sc.p_w.clone(), sc.p_v.clone()).map_err(err)?;
        let (desc, _) = secrecy::scheme_descriptors(Scheme::An, &sc.stats.users());
        let cov = joint_cov(&desc, &sc.stats, &pre).map_err(err)?;
        let run = run_mc(&sc.stats, &pre, &desc, 20_000, 31).map_err(err)?;
        let cse = run.cov_stderr();
        let mut worst = 0.0f64;
        for i in 0..desc.len() {
            for j in 0..desc.len() {
                let a = cov.matrix[(i, j)];
                let tol = (0.1 * a.abs()).max(3.0 * cse[(i, j)]);
                let r = (a - run.cov[(i, j)]).abs() / tol;
                worst = worst.max(r);
            }
        }
        pass &= worst <= 1.0;
        notes.push(format!(
            "{}: worst |err|/tol {worst:.3}",
            if double { "DS" } else { "LBI" }
        ));
    }
    check(pass, format!("4-term AN covariance at L=32, 2e4 trials: {}", notes.join(", ")))
}

fn grid(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| r_min + (r_max - r_min) * i as f64 / (n - 1) as f64).collect()
}

fn criterion_4() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for double in [false, true] {
        // figure settings: M = 6, three receive antennas, phases not designed
        let sc = build(&config(double, 6, 32, 3, 30.0, &[EVE_A], None));
        let pre = Precoders::new(sc.p_w.clone(), sc.p_v.clone()).map_err(err)?;
        let rep = secrecy::analyze(&sc.stats, &pre, Scheme::An, 0).map_err(err)?;
        let (desc, signs) = secrecy::scheme_descriptors(Scheme::An, &sc.stats.users());
        let run = run_mc(&sc.stats, &pre, &desc, 100_000, 41).map_err(err)?;
        let cdf = run.combination_cdf(&secrecy::secrecy_weights(&signs, 0)).map_err(err)?;
        // 40 thresholds spanning the bulk of the distribution
        let sd = rep.variance.sqrt();
        let rs = grid(rep.mean_nats - 3.0 * sd, rep.mean_nats + 3.0 * sd, 40);
        let mut worst = 0.0f64;
        for r in rs {
            worst = worst.max((rep.sop(r).map_err(err)? - cdf.eval(r)).abs());
        }
        pass &= worst <= 0.03;
        notes.push(format!("{}: {worst:.4}", if double { "DS" } else { "LBI" }));
    }
    check(pass, format!("max |Φ-approx − empirical CDF| over 40 thresholds, 1e5 trials (≤ 0.03): {}", notes.join(", ")))
}

fn multi_eve_curve(sc: &Scenario, rs: &[f64], n: usize, seed: u64) -> Result<Vec<secrecy::McEstimate>, String> {
    let pre = Precoders::new(sc.p_w.clone(), sc.p_v.clone()).map_err(err)?;
    let model = MultiEveModel::from_stats(&sc.stats, &pre, Scheme::An).map_err(err)?;
    secrecy::sop_multi_eve_curve(&model, rs, n, seed).map_err(err)
}

fn criterion_5() -> Outcome {
    let n = 1_000_000;
    // K = 1: normal-vector estimate against the closed form
    let one = build(&config(true, 6, 32, 4, 30.0, &[EVE_A], Some(5)));
    let pre = Precoders::new(one.p_w.clone(), one.p_v.clone()).map_err(err)?;
    let rep = secrecy::analyze(&one.stats, &pre, Scheme::An, 0).map_err(err)?;
    let sd = rep.variance.sqrt();
    let rs = grid(rep.mean_nats - 2.0 * sd, rep.mean_nats + 2.0 * sd, 9);
    let est = multi_eve_curve(&one, &rs, n, 51)?;
    let mut worst_z = 0.0f64;
    for (r, e) in rs.iter().zip(&est) {
        let exact = rep.sop(*r).map_err(err)?;
        worst_z = worst_z.max((e.value - exact).abs() / e.stderr.max(1e-300));
    }
    let ok1 = worst_z <= 3.0;

    // K = 2 against each single eavesdropper
    let two_cfg = config(true, 6, 32, 4, 30.0, &[EVE_A, EVE_B], Some(5));
    let two = build(&two_cfg);
    let pre = Precoders::new(two.p_w.clone(), two.p_v.clone()).map_err(err)?;
    let singles = (0..2)
        .map(|e| secrecy::analyze(&two.stats, &pre, Scheme::An, e))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let rs = grid(0.0, bits_to_nats(4.0), 40);
    let est = multi_eve_curve(&two, &rs, n, 52)?;
    let mut ok2 = true;
    for (r, e) in rs.iter().zip(&est) {
        let single = singles.iter().map(|s| s.sop(*r).unwrap()).fold(0.0, f64::max);
        ok2 &= e.value >= single - 3.0 * e.stderr;
    }

    // 50 dBm against 30 dBm
    let mut hi_cfg = two_cfg.clone();
    hi_cfg.power.p_dbm = 50.0;
    let hi = multi_eve_curve(&build(&hi_cfg), &rs, n, 53)?;
    let mut ok3 = true;
    let mut strictly = 0;
    for (lo, hi) in est.iter().zip(&hi) {
        let slack = 3.0 * (lo.stderr.powi(2) + hi.stderr.powi(2)).sqrt();
        ok3 &= hi.value <= lo.value + slack;
        strictly += usize::from(hi.value < lo.value);
    }
    // saturated thresholds (both probabilities at 1) cannot be strictly ordered
    let unsaturated = est.iter().zip(&hi).filter(|(l, h)| l.value < 1.0 || h.value < 1.0).count();
    ok3 &= strictly == unsaturated;
    check(
        ok1 && ok2 && ok3,
        format!(
            "K=1 worst deviation {worst_z:.2} SE (≤ 3): {ok1}; K=2 ≥ max single-eve: {ok2}; 50 dBm below 30 dBm at {strictly}/{unsaturated} unsaturated thresholds: {ok3}"
        ),
    )
}

fn max_rel_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale.max(1e-300)
}

fn random_theta(l: usize, seed: u64) -> PhaseMatrix {
    let mut rng = trial_rng(seed, 61);
    PhaseMatrix::new((0..l).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect())
}

fn random_hermitian(m: usize, seed: u64) -> CMat {
    let mut rng = trial_rng(seed, 62);
    linalg::hermitian_part(&complex_gaussian(&mut rng, m, m, 1.0))
}

fn criterion_6() -> Outcome {
    let lbi = build(&config(false, 4, 8, 2, 40.0, &[EVE_A], Some(0)));
    let ds = build(&config(true, 3, 6, 2, 40.0, &[EVE_A], Some(0)));
    let h = 1e-6;
    let (mut e_esr, mut e_sca, mut e_sop) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..10u64 {
        // phase gradient of the secrecy mean
        let stats = lbi.stats.with_theta(random_theta(lbi.stats.l(), seed)).map_err(err)?;
        let g = optimize::esr_phase_gradient(&stats, &lbi.p_w, &lbi.p_v, 0).map_err(err)?;
        let base = stats.theta().angles().to_vec();
        let k_at = |th: Vec<f64>| {
            let s = stats.with_theta(PhaseMatrix::new(th)).unwrap();
            optimize::esr_objective(&s, &lbi.p_w, &lbi.p_v, 0).unwrap()
        };
        let fd: Vec<f64> = (0..base.len())
            .map(|i| {
                let (mut p, mut m) = (base.clone(), base.clone());
                p[i] += h;
                m[i] -= h;
                (k_at(p) - k_at(m)) / (2.0 * h)
            })
            .collect();
        e_esr = e_esr.max(max_rel_error(&g, &fd));

        // covariance gradients of N = D̄_EU + D̄_BV along random Hermitian directions
        let p_w = random_psd(4, 4, 10.0, 100 + seed);
        let p_v = random_psd(4, 4, 2.0, 200 + seed);
        let lin = optimize::sca_gradients(&stats, &p_w, &p_v, 0).map_err(err)?;
        let (dw, dv) = (random_hermitian(4, 300 + seed), random_hermitian(4, 400 + seed));
        let hp = 1e-5;
        let n_at = |t: f64| {
            optimize::sca_gradients(&stats, &(&p_w + &dw * c(t)), &(&p_v + &dv * c(t)), 0)
                .unwrap()
                .n_value
        };
        let fd = (n_at(hp) - n_at(-hp)) / (2.0 * hp);
        let an = linalg::real_inner(&lin.grad_w, &dw) + linalg::real_inner(&lin.grad_v, &dv);
        e_sca = e_sca.max((an - fd).abs() / fd.abs().max(1e-300));

        // outage probability gradient with the implicit fixed-point derivatives
        let dstats = ds.stats.with_theta(random_theta(ds.stats.l(), 50 + seed)).map_err(err)?;
        let mean = secrecy::esr_wiretap(&dstats, &ds.p_w).map_err(err)?.mean_nats;
        let r = mean.max(0.05);
        let g = optimize::sop_phase_gradient(&dstats, &ds.p_w, r, 0).map_err(err)?;
        let base = dstats.theta().angles().to_vec();
        let p_at = |th: Vec<f64>| {
            let s = dstats.with_theta(PhaseMatrix::new(th)).unwrap();
            optimize::sop_objective(&s, &ds.p_w, r, 0).unwrap()
        };
        let fd: Vec<f64> = (0..base.len())
            .map(|i| {
                let (mut p, mut m) = (base.clone(), base.clone());
                p[i] += h;
                m[i] -= h;
                (p_at(p) - p_at(m)) / (2.0 * h)
            })
            .collect();
        e_sop = e_sop.max(max_rel_error(&g.grad, &fd));
    }
    check(
        e_esr <= 1e-4 && e_sca <= 1e-4 && e_sop <= 1e-3,
        format!("max rel error over 10 points: esr phase {e_esr:.2e} (≤ 1e-4), sca {e_sca:.2e} (≤ 1e-4), sop phase {e_sop:.2e} (≤ 1e-3)"),
    )
}

fn criterion_7() -> Outcome {
    // both designs start from P_W = 0.9 P I and the same phases; the AN run
    // also starts with P_V = 0.1 P I
    let mut monotone = true;
    let mut ordered = 0;
    let mut pairs = Vec::new();
    for seed in 0..4u64 {
        let sc = build(&config(false, 4, 16, 2, 40.0, &[EVE_NEAR], Some(seed)));
        let run = |an: bool| {
            let opts = AoOptions {
                max_outer: 100,
                an,
                ..Default::default()
            };
            optimize::algorithm2_ao(&sc.stats, &sc.p_w, &sc.p_v, sc.budget(), opts)
        };
        let with_an = run(true).map_err(err)?;
        let wiretap = run(false).map_err(err)?;
        monotone &= [&with_an, &wiretap]
            .iter()
            .all(|s| s.mean_trace.windows(2).all(|w| w[1] >= w[0] - 1e-8));
        ordered += usize::from(with_an.esr_nats() >= wiretap.esr_nats());
        pairs.push(format!("{:.3}/{:.3}", with_an.esr_nats(), wiretap.esr_nats()));
    }

    let ds = build(&config(true, 6, 32, 4, 30.0, &[EVE_A], Some(0)));
    let r = bits_to_nats(1.0);
    let mut improved = 0;
    for seed in 0..20u64 {
        let stats = ds.stats.with_theta(random_theta(ds.stats.l(), 700 + seed)).map_err(err)?;
        let res = optimize::optimize_sop(
            &stats,
            &ds.p_w,
            r,
            SopOptions {
                max_iter: 30,
                ..Default::default()
            },
        )
        .map_err(err)?;
        improved += usize::from(res.final_sop < res.initial_sop);
    }
    check(
        monotone && ordered == 4 && improved >= 18,
        format!(
            "AO traces monotone: {monotone}; final ESR AN ≥ wiretap on {ordered}/4 phase inits (nats, AN/wiretap: {}); SOP improved on {improved}/20 inits (≥ 18)",
            pairs.join(", ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut worst_esr = 0.0f64;
    let mut worst_sop = 0.0f64;
    for double in [false, true] {
        let sc = build(&config(double, 4, 16, 2, 30.0, &[EVE_A], Some(8)));
        let zero = CMat::zeros(4, 4);
        let an = secrecy::esr_an(&sc.stats, &sc.p_w, &zero).map_err(err)?;
        let wt = secrecy::esr_wiretap(&sc.stats, &sc.p_w).map_err(err)?;
        worst_esr = worst_esr.max((an.esr_nats - wt.esr_nats).abs() / wt.esr_nats.abs().max(1.0));
        for r_bits in [0.0, 0.5, 1.0, 2.0] {
            let r = bits_to_nats(r_bits);
            let a = secrecy::sop_an(&sc.stats, &sc.p_w, &zero, r).map_err(err)?;
            let w = secrecy::sop_wiretap(&sc.stats, &sc.p_w, r).map_err(err)?;
            worst_sop = worst_sop.max((a - w).abs());
        }
    }
    // Eve identical to Bob: the secrecy mean vanishes and the rate is clamped at 0
    let mirror = Eve {
        eta: 0.0,
        delta: 5.0,
        ts: (5.0, 5.0),
        d: 30.0,
    };
    let sym_cfg = config(false, 4, 16, 2, 30.0, &[mirror], Some(8));
    let sym = build(&sym_cfg);
    let rep = secrecy::esr_an(&sym.stats, &sym.p_w, &sym.p_v).map_err(err)?;
    let clamp_sym = rep.esr_nats == 0.0 && rep.mean_nats.abs() < 1e-9;
    // a closer eavesdropper makes the mean negative; the rate must still be 0
    let close = Eve {
        eta: 0.0,
        delta: 5.0,
        ts: (5.0, 5.0),
        d: 10.0,
    };
    let near_cfg = config(false, 4, 16, 2, 30.0, &[close], Some(8));
    let near = build(&near_cfg);
    let rep = secrecy::esr_wiretap(&near.stats, &near.p_w).map_err(err)?;
    let clamp_neg = rep.mean_nats < 0.0 && rep.esr_nats == 0.0;
    check(
        worst_esr <= 1e-12 && worst_sop <= 1e-10 && clamp_sym && clamp_neg,
        format!(
            "esr_an(P_W,0) vs esr_wiretap {worst_esr:.1e} (≤ 1e-12); sop {worst_sop:.1e} (≤ 1e-10); symmetric ESR = 0: {clamp_sym}; negative mean clamped: {clamp_neg}"
        ),
    )
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn criterion_9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_irs-secrecy");
    let cfg = configs_dir();
    let ds = cfg.join("ds_outage.json");
    let lbi = cfg.join("lbi_esr.json");
    let two = cfg.join("ds_two_eves.json");
    let runs: Vec<(&str, PathBuf, Vec<&str>)> = vec![
        ("esr", ds.clone(), vec![]),
        ("sop", two.clone(), vec!["--trials", "2000", "--mvn-samples", "20000", "--r-steps", "10"]),
        ("mc-validate", ds.clone(), vec!["--trials", "1000"]),
        ("optimize-esr", lbi, vec!["--max-outer", "10"]),
        ("optimize-sop", ds, vec!["--max-iter", "10"]),
        ("sweep", two, vec!["--mvn-samples", "20000", "--r-steps", "10"]),
    ];
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut files = 0;
    for (cmd, config, extra) in &runs {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = tmp.path().join(format!("{cmd}-{rep}"));
            let status = Command::new(bin)
                .arg(cmd)
                .arg("--config")
                .arg(config)
                .arg("--out")
                .arg(&out)
                .args(["--seed", "7"])
                .args(extra)
                .output()
                .map_err(err)?;
            if !status.status.success() {
                return Err(format!("{cmd} failed: {}", String::from_utf8_lossy(&status.stderr)));
            }
            outputs.push(read_dir_sorted(&out));
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{cmd}: outputs differ between identical runs"));
        }
        if outputs[0].is_empty() {
            return Err(format!("{cmd}: no output files"));
        }
        files += outputs[0].len();
    }
    Ok(format!("{} subcommands run twice with seed 7, {files} files byte-identical", runs.len()))
}

fn main() {
    // `cargo test -- <filter>` passes arguments; run everything regardless
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("fixed-point correctness", criterion_1),
        ("deterministic-equivalent accuracy", criterion_2),
        ("CLT covariance", criterion_3),
        ("SOP curves", criterion_4),
        ("multi-eavesdropper SOP", criterion_5),
        ("gradient fidelity", criterion_6),
        ("optimizer behavior", criterion_7),
        ("reduction identities", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {} PASS {name} [{secs:.1}s]: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {} FAIL {name} [{secs:.1}s]: {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
