//! Secrecy-rate objective in the IRS phases and its gradient (LBI model).
//!
//! With `C = Θ H_{T,0} P H_{T,0}^H Θ^H` and `W = T_S^{1/2} L_T T_S^{1/2}`,
//! `∂D̄/∂θ_i = −2 α (M/L) Im[(C W)_{ii}]`.

use crate::error::{Error, Result};
use crate::fixedpoint::{LbiProblem, MiDescriptor, MiTerm, PrecoderTag, Precoders};
use crate::linalg::{self, CMat};
use crate::scenario::{ChannelStatistics, ModelKind, User};

/// `(user, precoder, sign)` of the four terms of the AN-aided secrecy rate.
fn signed_terms(eve: usize) -> [(User, PrecoderTag, f64); 4] {
    [
        (User::Bob, PrecoderTag::U, 1.0),
        (User::Bob, PrecoderTag::V, -1.0),
        (User::Eve(eve), PrecoderTag::U, -1.0),
        (User::Eve(eve), PrecoderTag::V, 1.0),
    ]
}

/// Secrecy mean `K = D̄_{B,U} − D̄_{B,V} − D̄_{E,U} + D̄_{E,V}` in nats, before
/// the positive part. `P_V = 0` gives the wiretap rate.
pub fn esr_objective(stats: &ChannelStatistics, p_w: &CMat, p_v: &CMat, eve: usize) -> Result<f64> {
    let pre = Precoders::new(p_w.clone(), p_v.clone())?;
    let mut k = 0.0;
    for (user, tag, sign) in signed_terms(eve) {
        let term = MiTerm::build(stats, &pre, MiDescriptor::new(user, tag))?;
        k += sign * term.rate();
    }
    Ok(k)
}

fn term_phase_gradient(stats: &ChannelStatistics, user: User, p: &CMat) -> Result<Vec<f64>> {
    let l = stats.l();
    if linalg::max_abs(p) == 0.0 {
        return Ok(vec![0.0; l]);
    }
    let u = stats.user(user)?;
    let scale = stats.lbi_scale();
    let g = stats.theta().matrix() * &stats.h_t0;
    let cmat = linalg::congruence(&g, p);
    let t_s_half = u.t_s_half();
    let t_eff = linalg::congruence(t_s_half, &cmat) * linalg::c(scale);
    let prob = LbiProblem::new(&u.r, &t_eff, u.noise, stats.m())?;
    let sol = prob.solve()?;
    let w = t_s_half * &sol.l_t * t_s_half;
    let cw = cmat * w;
    Ok((0..l).map(|i| -2.0 * sol.alpha * scale * cw[(i, i)].im).collect())
}

/// `∇_θ K` over the four log-det terms.
pub fn esr_phase_gradient(stats: &ChannelStatistics, p_w: &CMat, p_v: &CMat, eve: usize) -> Result<Vec<f64>> {
    if stats.kind != ModelKind::Lbi {
        return Err(Error::Model("the phase gradient of the secrecy rate needs the LBI model".into()));
    }
    let pre = Precoders::new(p_w.clone(), p_v.clone())?;
    let mut grad = vec![0.0; stats.l()];
    for (user, tag, sign) in signed_terms(eve) {
        let g = term_phase_gradient(stats, user, &pre.get(tag))?;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += sign * b;
        }
    }
    Ok(grad)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::scenario::{trial_rng, PhaseMatrix};
    use crate::test_support::{scenario, SMALL_LBI};
    use rand::Rng;

    pub(crate) fn random_theta(l: usize, seed: u64) -> PhaseMatrix {
        let mut rng = trial_rng(seed, 3);
        PhaseMatrix::new((0..l).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect())
    }

    fn fd_gradient(stats: &ChannelStatistics, p_w: &CMat, p_v: &CMat, h: f64) -> Vec<f64> {
        let base = stats.theta().angles().to_vec();
        (0..base.len())
            .map(|i| {
                let mut plus = base.clone();
                plus[i] += h;
                let mut minus = base.clone();
                minus[i] -= h;
                let kp = esr_objective(&stats.with_theta(PhaseMatrix::new(plus)).unwrap(), p_w, p_v, 0).unwrap();
                let km = esr_objective(&stats.with_theta(PhaseMatrix::new(minus)).unwrap(), p_w, p_v, 0).unwrap();
                (kp - km) / (2.0 * h)
            })
            .collect()
    }

    pub(crate) fn max_rel_error(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale.max(1e-300)
    }

    #[test]
    fn matches_central_differences_at_random_phases() {
        let sc = scenario(SMALL_LBI);
        for seed in 0..10 {
            let stats = sc.stats.with_theta(random_theta(sc.stats.l(), seed)).unwrap();
            let g = esr_phase_gradient(&stats, &sc.p_w, &sc.p_v, 0).unwrap();
            let fd = fd_gradient(&stats, &sc.p_w, &sc.p_v, 1e-6);
            let err = max_rel_error(&g, &fd);
            assert!(err <= 1e-4, "seed {seed}: {err:e}");
        }
    }

    #[test]
    fn single_element_surface() {
        let text = SMALL_LBI.replace("\"L\": 8", "\"L\": 1");
        let sc = scenario(&text);
        let stats = sc.stats.with_theta(PhaseMatrix::new(vec![0.7])).unwrap();
        let g = esr_phase_gradient(&stats, &sc.p_w, &sc.p_v, 0).unwrap();
        let fd = fd_gradient(&stats, &sc.p_w, &sc.p_v, 1e-6);
        // one element only rotates the whole cascade: K does not depend on it
        assert!(g[0].abs() < 1e-8 && fd[0].abs() < 1e-6, "{} {}", g[0], fd[0]);
    }

    #[test]
    fn phase_invariant_scenario_has_zero_gradient() {
        let text = SMALL_LBI
            .replace("\"T_S_B\": {\"d_r\": 1.0, \"eta\": 5.0, \"delta\": 5.0}", "\"T_S_B\": \"identity\"")
            .replace("\"T_S_E\": [{\"d_r\": 1.0, \"eta\": -30.0, \"delta\": 10.0}]", "\"T_S_E\": [\"identity\"]");
        let sc = scenario(&text);
        let stats = sc.stats.with_theta(random_theta(sc.stats.l(), 4)).unwrap();
        let g = esr_phase_gradient(&stats, &sc.p_w, &sc.p_v, 0).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-8), "{g:?}");
    }

    #[test]
    fn wiretap_objective_ignores_zero_noise_terms() {
        let sc = scenario(SMALL_LBI);
        let m = sc.stats.m();
        let zero = CMat::zeros(m, m);
        let k = esr_objective(&sc.stats, &sc.p_w, &zero, 0).unwrap();
        let rep = crate::secrecy::esr_wiretap(&sc.stats, &sc.p_w).unwrap();
        assert!((k - rep.mean_nats).abs() < 1e-12 * k.abs().max(1.0));
        let g_an = esr_phase_gradient(&sc.stats, &sc.p_w, &zero, 0).unwrap();
        assert_eq!(g_an.len(), sc.stats.l());
    }

    #[test]
    fn double_scattering_is_rejected() {
        let (stats, _) = crate::test_support::small_ds();
        let m = stats.m();
        let p = linalg::identity(m);
        assert!(esr_phase_gradient(&stats, &p, &CMat::zeros(m, m), 0).is_err());
    }
}
