use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ChannelStatistics, ModelKind, User};
use crate::error::{Error, Result};
use crate::linalg::CMat;

/// One joint realization: a channel per user, in `ChannelStatistics::users` order.
#[derive(Debug, Clone)]
pub struct ChannelSample {
    pub h: Vec<CMat>,
    pub seed: u64,
    pub trial: u64,
}

impl ChannelSample {
    pub fn channel(&self, user: User) -> &CMat {
        &self.h[user.index()]
    }
}

/// Draws joint channel realizations.
///
/// `X` draws follow the shared-X groups (one draw per group); in the
/// double-scattering model one `Y` is shared by every user.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    kind: ModelKind,
    m: usize,
    l: usize,
    r_half: Vec<CMat>,
    cascade: Vec<CMat>,
    t_half: CMat,
    x_groups: Vec<usize>,
}

/// Matrix with i.i.d. `CN(0, var)` entries.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, var: f64) -> CMat {
    let s = (var / 2.0).sqrt();
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// RNG for one trial: the master seed selects the key, the trial the stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

impl ChannelSampler {
    /// Every user gets an independent `X`.
    pub fn new(stats: &ChannelStatistics) -> Result<Self> {
        let groups = (0..=stats.eves.len()).collect();
        Self::with_groups(stats, groups)
    }

    pub fn with_groups(stats: &ChannelStatistics, x_groups: Vec<usize>) -> Result<Self> {
        let users = stats.users();
        if x_groups.len() != users.len() {
            return Err(Error::Dimension(format!(
                "{} shared-X group ids for {} users",
                x_groups.len(),
                users.len()
            )));
        }
        let mut r_half = Vec::new();
        let mut cascade = Vec::new();
        for &u in &users {
            r_half.push(stats.user(u)?.r_half().clone());
            cascade.push(stats.cascade_half(u)?);
        }
        for i in 0..users.len() {
            for j in 0..i {
                if x_groups[i] == x_groups[j] && r_half[i].nrows() != r_half[j].nrows() {
                    return Err(Error::Dimension(
                        "users sharing an X draw must have the same number of antennas".into(),
                    ));
                }
            }
        }
        Ok(Self {
            kind: stats.kind,
            m: stats.m(),
            l: stats.l(),
            r_half,
            cascade,
            t_half: stats.t_half().clone(),
            x_groups,
        })
    }

    pub fn n_users(&self) -> usize {
        self.r_half.len()
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<CMat> {
        // Y first, then one X per group in order of first appearance
        let y = match self.kind {
            ModelKind::DoubleScattering => Some(complex_gaussian(rng, self.l, self.m, 1.0 / self.m as f64)),
            ModelKind::Lbi => None,
        };
        let mut drawn: Vec<(usize, CMat)> = Vec::new();
        let mut out = Vec::with_capacity(self.n_users());
        for (k, &g) in self.x_groups.iter().enumerate() {
            let n = self.r_half[k].nrows();
            let x = match drawn.iter().find(|(id, _)| *id == g) {
                Some((_, x)) => x.clone(),
                None => {
                    let x = complex_gaussian(rng, n, self.l, 1.0 / self.l as f64);
                    drawn.push((g, x.clone()));
                    x
                }
            };
            let left = &self.r_half[k] * x;
            let h = match &y {
                None => left * &self.cascade[k],
                Some(y) => left * (&self.cascade[k] * y) * &self.t_half,
            };
            out.push(h);
        }
        out
    }

    pub fn sample(&self, seed: u64, trial: u64) -> ChannelSample {
        let mut rng = trial_rng(seed, trial);
        ChannelSample {
            h: self.sample_with(&mut rng),
            seed,
            trial,
        }
    }
}

/// Single-user convenience draw (trial 0 of `seed`).
pub fn sample_channel(stats: &ChannelStatistics, user: User, seed: u64) -> Result<CMat> {
    let sampler = ChannelSampler::new(stats)?;
    let mut s = sampler.sample(seed, 0).h;
    Ok(s.swap_remove(user.index()))
}
