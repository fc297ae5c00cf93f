//! Reference problems and seeded random generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{DeterministicProfile, FiniteStaticTeam, Sense};
use crate::reduction::SequentialFiniteTeam;

/// CHSH team with the ±1 reward: DMs observe independent uniform bits and win when
/// `u¹ ⊕ u² = y¹ · y²`.
pub fn chsh_team() -> FiniteStaticTeam {
    let mut cost = Vec::with_capacity(16);
    for y1 in 0..2 {
        for y2 in 0..2 {
            for u1 in 0..2usize {
                for u2 in 0..2usize {
                    cost.push(if (u1 ^ u2) == y1 * y2 { 1.0 } else { -1.0 });
                }
            }
        }
    }
    FiniteStaticTeam::new(1, vec![2, 2], vec![2, 2], vec![0.25; 4], cost, Sense::Maximize).expect("CHSH team is valid")
}

/// Popescu–Rohrlich box on the CHSH layout: `P(u | y) = ½` when `u¹ ⊕ u² = y¹ y²`.
pub fn pr_box_probs() -> Vec<f64> {
    let mut probs = Vec::with_capacity(16);
    for y1 in 0..2 {
        for y2 in 0..2 {
            for u1 in 0..2usize {
                for u2 in 0..2usize {
                    probs.push(if (u1 ^ u2) == y1 * y2 { 0.25 * 0.5 } else { 0.0 });
                }
            }
        }
    }
    probs
}

/// Seeded sampler over small random teams.
pub struct TeamSampler {
    rng: ChaCha8Rng,
}

impl TeamSampler {
    pub fn new(seed: u64) -> Self {
        TeamSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Probability vector with strictly positive entries.
    pub fn distribution(&mut self, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| self.rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|x| x / total).collect()
    }

    /// Probability vector that may contain zeros.
    pub fn sparse_distribution(&mut self, n: usize) -> Vec<f64> {
        loop {
            let raw: Vec<f64> = (0..n)
                .map(|_| {
                    if self.rng.random_bool(0.3) {
                        0.0
                    } else {
                        self.rng.random_range(0.05..1.0)
                    }
                })
                .collect();
            let total: f64 = raw.iter().sum();
            if total > 0.0 {
                return raw.iter().map(|x| x / total).collect();
            }
        }
    }

    pub fn size(&mut self, max: usize) -> usize {
        self.rng.random_range(1..=max)
    }

    /// Team whose prior is `P0(ω0) ∏ Q^i(y^i)`, with every size in `1..=max_size` and a
    /// uniform random cost in `[-1, 1]`.
    pub fn product_team(&mut self, num_dms: usize, max_size: usize, sense: Sense) -> FiniteStaticTeam {
        let omega0 = self.size(max_size);
        let obs: Vec<usize> = (0..num_dms).map(|_| self.size(max_size)).collect();
        let act: Vec<usize> = (0..num_dms).map(|_| self.size(max_size)).collect();
        self.product_team_with_sizes(omega0, obs, act, sense)
    }

    pub fn product_team_with_sizes(
        &mut self,
        omega0: usize,
        obs: Vec<usize>,
        act: Vec<usize>,
        sense: Sense,
    ) -> FiniteStaticTeam {
        let p0 = self.distribution(omega0);
        let qs: Vec<Vec<f64>> = obs.iter().map(|&n| self.distribution(n)).collect();
        let num_obs: usize = obs.iter().product();
        let num_acts: usize = act.iter().product();
        let mut prior = Vec::with_capacity(omega0 * num_obs);
        for w in p0.iter() {
            for y in 0..num_obs {
                let mut rem = y;
                let mut p = *w;
                for (i, q) in qs.iter().enumerate().rev() {
                    p *= q[rem % obs[i]];
                    rem /= obs[i];
                }
                prior.push(p);
            }
        }
        renormalize(&mut prior);
        let cost = (0..omega0 * num_obs * num_acts)
            .map(|_| self.rng.random_range(-1.0..1.0))
            .collect();
        FiniteStaticTeam::new(omega0, obs, act, prior, cost, sense).expect("sampled team is valid")
    }

    /// Team with an arbitrary (generally correlated) prior.
    pub fn correlated_team(&mut self, num_dms: usize, max_size: usize, sense: Sense) -> FiniteStaticTeam {
        let omega0 = self.size(max_size);
        let obs: Vec<usize> = (0..num_dms).map(|_| self.size(max_size)).collect();
        let act: Vec<usize> = (0..num_dms).map(|_| self.size(max_size)).collect();
        let num_obs: usize = obs.iter().product();
        let num_acts: usize = act.iter().product();
        let prior = self.sparse_distribution(omega0 * num_obs);
        let cost = (0..omega0 * num_obs * num_acts)
            .map(|_| self.rng.random_range(-1.0..1.0))
            .collect();
        FiniteStaticTeam::new(omega0, obs, act, prior, cost, sense).expect("sampled team is valid")
    }

    /// Sequential team with sparse random kernels and a cost in `[-1, 1]`.
    pub fn sequential_team(&mut self, num_dms: usize, max_size: usize) -> SequentialFiniteTeam {
        let omega0 = self.size(max_size);
        let obs: Vec<usize> = (0..num_dms).map(|_| self.size(max_size)).collect();
        let act: Vec<usize> = (0..num_dms).map(|_| self.size(max_size)).collect();
        let p0 = self.distribution(omega0);
        let mut contexts = omega0;
        let mut kernels = Vec::with_capacity(num_dms);
        for i in 0..num_dms {
            let mut k = Vec::with_capacity(contexts * obs[i]);
            for _ in 0..contexts {
                k.extend(self.sparse_distribution(obs[i]));
            }
            kernels.push(k);
            contexts *= act[i];
        }
        let num_acts: usize = act.iter().product();
        let cost = (0..omega0 * num_acts)
            .map(|_| self.rng.random_range(-1.0..1.0))
            .collect();
        SequentialFiniteTeam::new(p0, obs, act, kernels, cost, Sense::Minimize).expect("sampled team is valid")
    }

    /// Uniformly random deterministic profile.
    pub fn profile_for(&mut self, obs_sizes: &[usize], act_sizes: &[usize]) -> DeterministicProfile {
        DeterministicProfile::new(
            obs_sizes
                .iter()
                .zip(act_sizes)
                .map(|(&ny, &nu)| (0..ny).map(|_| self.rng.random_range(0..nu)).collect())
                .collect(),
        )
    }
}

/// Rescales so the entries sum to one; keeps sampled priors inside the input tolerance.
pub(crate) fn renormalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
}
