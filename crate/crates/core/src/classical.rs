//! Optimization over deterministic team policies.
//!
//! Individual and common randomization never improve the optimal value, so the optimum over
//! deterministic profiles is also the optimum over randomized and correlated-by-common-
//! randomness policies. [`randomization_no_gain_check`] confirms this numerically by solving
//! an LP over mixtures of every deterministic strategic measure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, TeamError};
use crate::linprog::{solve_lp, LpProblem, LpStatus};
use crate::model::{DeterministicProfile, FiniteStaticTeam, Sense, StrategicMeasure};

/// Largest number of deterministic profiles [`enumerate_optimal`] will visit.
pub const ENUMERATION_CAP: u64 = 100_000_000;
/// Largest number of profiles listed by [`randomization_no_gain_check`].
pub const MIXTURE_CAP: u64 = 100_000;

const BLOCK: u64 = 1 << 14;

/// Result of exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalSolution {
    pub value: f64,
    pub profile: DeterministicProfile,
    /// Number of profiles evaluated.
    pub profiles: u64,
}

/// `W(y, u) = Σ_ω0 μ(ω0, y) c(ω0, y, u)`, so a profile's value is `Σ_y W(y, γ(y))`.
struct Payoff {
    w: Vec<f64>,
    num_acts: usize,
    /// `obs[y * N + i]` is `y^i`.
    obs: Vec<usize>,
    num_dms: usize,
    act_strides: Vec<usize>,
    act_sizes: Vec<usize>,
    obs_sizes: Vec<usize>,
}

impl Payoff {
    fn new(team: &FiniteStaticTeam) -> Self {
        let ny = team.num_joint_obs();
        let nu = team.num_joint_actions();
        let mut w = vec![0.0; ny * nu];
        for o in 0..team.omega0_size() {
            for y in 0..ny {
                let p = team.prior_at(o, y);
                if p == 0.0 {
                    continue;
                }
                for u in 0..nu {
                    w[y * nu + u] += p * team.cost_at(o, y, u);
                }
            }
        }
        let n = team.num_dms();
        let mut obs = Vec::with_capacity(ny * n);
        for y in 0..ny {
            for i in 0..n {
                obs.push(team.obs_component(y, i));
            }
        }
        Payoff {
            w,
            num_acts: nu,
            obs,
            num_dms: n,
            act_strides: team.act_strides().to_vec(),
            act_sizes: team.act_sizes().to_vec(),
            obs_sizes: team.obs_sizes().to_vec(),
        }
    }

    fn num_joint_obs(&self) -> usize {
        self.w.len() / self.num_acts
    }

    /// Offsets of each DM's cells in the flattened DM-major digit vector.
    fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.num_dms);
        let mut acc = 0;
        for &s in &self.obs_sizes {
            off.push(acc);
            acc += s;
        }
        off
    }

    fn joint_action(&self, digits: &[usize], offsets: &[usize], y: usize) -> usize {
        let ys = &self.obs[y * self.num_dms..(y + 1) * self.num_dms];
        (0..self.num_dms)
            .map(|i| digits[offsets[i] + ys[i]] * self.act_strides[i])
            .sum()
    }

    fn value(&self, digits: &[usize], offsets: &[usize]) -> f64 {
        (0..self.num_joint_obs())
            .map(|y| self.w[y * self.num_acts + self.joint_action(digits, offsets, y)])
            .sum()
    }

    /// Radix of each digit, first digit most significant.
    fn radices(&self) -> Vec<usize> {
        self.obs_sizes
            .iter()
            .zip(&self.act_sizes)
            .flat_map(|(&ny, &nu)| std::iter::repeat_n(nu, ny))
            .collect()
    }

    fn profile(&self, digits: &[usize]) -> DeterministicProfile {
        let offsets = self.offsets();
        DeterministicProfile::new(
            (0..self.num_dms)
                .map(|i| digits[offsets[i]..offsets[i] + self.obs_sizes[i]].to_vec())
                .collect(),
        )
    }

    fn digits(profile: &DeterministicProfile) -> Vec<usize> {
        profile.maps().iter().flatten().copied().collect()
    }
}

/// `∏_i |U^i|^{|Y^i|}` as a float (it may overflow an integer).
pub fn profile_count(team: &FiniteStaticTeam) -> f64 {
    team.obs_sizes()
        .iter()
        .zip(team.act_sizes())
        .map(|(&ny, &nu)| (nu as f64).powi(ny as i32))
        .product()
}

fn decode(mut k: u64, radices: &[usize], digits: &mut [usize]) {
    for (d, &r) in digits.iter_mut().zip(radices).rev() {
        *d = (k % r as u64) as usize;
        k /= r as u64;
    }
}

fn increment(radices: &[usize], digits: &mut [usize]) {
    for (d, &r) in digits.iter_mut().zip(radices).rev() {
        *d += 1;
        if *d < r {
            return;
        }
        *d = 0;
    }
}

/// `(value, index)` ordering: better value first, then smaller index.
fn better(sense: Sense, a: (f64, u64), b: (f64, u64)) -> bool {
    sense.improves(a.0, b.0) || (a.0 == b.0 && a.1 < b.1)
}

/// Exact optimum over all deterministic profiles, visiting at most [`ENUMERATION_CAP`].
pub fn enumerate_optimal(team: &FiniteStaticTeam) -> Result<ClassicalSolution> {
    enumerate_optimal_with_cap(team, ENUMERATION_CAP)
}

/// Exhaustive search; ties go to the lexicographically smallest profile (DM-major, then
/// observation order). The result does not depend on the number of worker threads.
pub fn enumerate_optimal_with_cap(team: &FiniteStaticTeam, cap: u64) -> Result<ClassicalSolution> {
    let count = profile_count(team);
    if count > cap as f64 {
        return Err(TeamError::TooLarge(format!(
            "{count:.3e} deterministic profiles exceed the enumeration cap {cap}; use best_response_search"
        )));
    }
    let total = count as u64;
    let payoff = Payoff::new(team);
    let radices = payoff.radices();
    let offsets = payoff.offsets();
    let sense = team.sense();
    let blocks = total.div_ceil(BLOCK);
    let (value, index) = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK;
            let end = (start + BLOCK).min(total);
            let mut digits = vec![0; radices.len()];
            decode(start, &radices, &mut digits);
            let mut best = (payoff.value(&digits, &offsets), start);
            for k in start + 1..end {
                increment(&radices, &mut digits);
                let v = payoff.value(&digits, &offsets);
                if sense.improves(v, best.0) {
                    best = (v, k);
                }
            }
            best
        })
        .reduce(
            || (f64::NAN, u64::MAX),
            |a, b| {
                if a.1 == u64::MAX || (b.1 != u64::MAX && better(sense, b, a)) {
                    b
                } else {
                    a
                }
            },
        );
    let mut digits = vec![0; radices.len()];
    decode(index, &radices, &mut digits);
    Ok(ClassicalSolution {
        value,
        profile: payoff.profile(&digits),
        profiles: total,
    })
}

/// Trace of a person-by-person search.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseOutcome {
    pub value: f64,
    pub profile: DeterministicProfile,
    pub rounds: usize,
    /// True when the last round changed nothing (a person-by-person optimum).
    pub converged: bool,
    /// Value before the first round and after each round.
    pub history: Vec<f64>,
}

/// Uniformly random deterministic profile drawn from a seeded stream.
pub fn random_profile(team: &FiniteStaticTeam, seed: u64) -> DeterministicProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DeterministicProfile::new(
        team.obs_sizes()
            .iter()
            .zip(team.act_sizes())
            .map(|(&ny, &nu)| (0..ny).map(|_| rng.random_range(0..nu)).collect())
            .collect(),
    )
}

/// Person-by-person improvement. Each round sweeps every DM and observation symbol and
/// replaces the action by a best response to the rest of the profile, keeping the current
/// action on ties. Starts from `init`, or from `random_profile(team, seed)` when absent.
pub fn best_response_search(
    team: &FiniteStaticTeam,
    init: Option<&DeterministicProfile>,
    max_rounds: usize,
    seed: u64,
) -> Result<BestResponseOutcome> {
    let start = match init {
        Some(p) => {
            p.validate_for(team)?;
            p.clone()
        }
        None => random_profile(team, seed),
    };
    let payoff = Payoff::new(team);
    let offsets = payoff.offsets();
    let sense = team.sense();
    let mut digits = Payoff::digits(&start);
    let mut history = vec![payoff.value(&digits, &offsets)];
    let mut converged = false;
    let mut rounds = 0;

    // Joint observations grouped by each DM's own symbol.
    let groups: Vec<Vec<Vec<usize>>> = (0..payoff.num_dms)
        .map(|i| {
            let mut g = vec![Vec::new(); payoff.obs_sizes[i]];
            for y in 0..payoff.num_joint_obs() {
                g[payoff.obs[y * payoff.num_dms + i]].push(y);
            }
            g
        })
        .collect();

    while rounds < max_rounds {
        rounds += 1;
        let mut changed = false;
        for i in 0..payoff.num_dms {
            let stride = payoff.act_strides[i];
            for yi in 0..payoff.obs_sizes[i] {
                let cell = offsets[i] + yi;
                let current = digits[cell];
                let score = |a: usize, digits: &[usize]| -> f64 {
                    groups[i][yi]
                        .iter()
                        .map(|&y| {
                            let u = payoff.joint_action(digits, &offsets, y) - current * stride + a * stride;
                            payoff.w[y * payoff.num_acts + u]
                        })
                        .sum()
                };
                let mut best_a = current;
                let mut best_v = score(current, &digits);
                for a in 0..payoff.act_sizes[i] {
                    if a == current {
                        continue;
                    }
                    let v = score(a, &digits);
                    if sense.improves(v, best_v) {
                        best_a = a;
                        best_v = v;
                    }
                }
                if best_a != current {
                    digits[cell] = best_a;
                    changed = true;
                }
            }
        }
        history.push(payoff.value(&digits, &offsets));
        if !changed {
            converged = true;
            break;
        }
    }
    Ok(BestResponseOutcome {
        value: *history.last().expect("history is non-empty"),
        profile: payoff.profile(&digits),
        rounds,
        converged,
        history,
    })
}

/// Best of `restarts` searches from random profiles seeded `seed, seed + 1, …`; ties go to
/// the earliest restart.
pub fn best_response_restarts(
    team: &FiniteStaticTeam,
    restarts: usize,
    max_rounds: usize,
    seed: u64,
) -> Result<BestResponseOutcome> {
    if restarts == 0 {
        return Err(TeamError::validation("restarts", "need at least one restart"));
    }
    let outcomes = (0..restarts)
        .into_par_iter()
        .map(|r| best_response_search(team, None, max_rounds, seed.wrapping_add(r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, o) in outcomes.iter().enumerate() {
        if team.sense().improves(o.value, outcomes[best].value) {
            best = k;
        }
    }
    Ok(outcomes.into_iter().nth(best).expect("restarts > 0"))
}

/// Returns `(j_det, j_conv)`: the enumerated optimum and the optimum of an LP over mixture
/// weights of every deterministic strategic measure.
pub fn randomization_no_gain_check(team: &FiniteStaticTeam) -> Result<(f64, f64)> {
    let count = profile_count(team);
    if count > MIXTURE_CAP as f64 {
        return Err(TeamError::TooLarge(format!(
            "{count:.3e} deterministic profiles exceed the mixture cap {MIXTURE_CAP}"
        )));
    }
    let det = enumerate_optimal(team)?;
    let payoff = Payoff::new(team);
    let radices = payoff.radices();
    let offsets = payoff.offsets();
    let total = count as usize;
    let sign = team.sense().sign();
    let mut lp = LpProblem::new(total);
    let mut digits = vec![0; radices.len()];
    for k in 0..total {
        lp.set_cost(k, sign * payoff.value(&digits, &offsets));
        increment(&radices, &mut digits);
    }
    let ones: Vec<(usize, f64)> = (0..total).map(|k| (k, 1.0)).collect();
    lp.add_constraint(&ones, 1.0);
    let sol = solve_lp(&lp)?;
    if !sol.is_optimal() {
        return Err(TeamError::Numeric(format!("mixture LP ended {}", sol.status)));
    }
    Ok((det.value, sign * sol.objective))
}

/// Outcome of [`mixture_representation`].
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFit {
    pub status: LpStatus,
    /// Profiles with positive weight, in enumeration order (empty unless feasible).
    pub support: Vec<(DeterministicProfile, f64)>,
    /// Largest violation of the matching rows by the returned weights.
    pub residual: f64,
    /// Infeasibility certificate over the matching rows followed by the weight-sum row.
    pub farkas: Option<Vec<f64>>,
}

/// Looks for weights `w ≥ 0`, `Σ w = 1`, independent of `(ω0, y)`, with
/// `Σ_γ w_γ 1{γ(y) = u} = P(u | ω0, y)` wherever `μ(ω0, y) > 0`: a representation of
/// `target` as a common-randomness mixture of deterministic profiles.
pub fn mixture_representation(team: &FiniteStaticTeam, target: &StrategicMeasure) -> Result<MixtureFit> {
    target.validate_for(team)?;
    let count = profile_count(team);
    if count > MIXTURE_CAP as f64 {
        return Err(TeamError::TooLarge(format!(
            "{count:.3e} deterministic profiles exceed the mixture cap {MIXTURE_CAP}"
        )));
    }
    let payoff = Payoff::new(team);
    let radices = payoff.radices();
    let offsets = payoff.offsets();
    let total = count as usize;
    let nu = team.num_joint_actions();
    let ny = team.num_joint_obs();
    // Joint action of every profile at every joint observation.
    let mut actions = Vec::with_capacity(total * ny);
    let mut digits = vec![0; radices.len()];
    for _ in 0..total {
        actions.extend((0..ny).map(|y| payoff.joint_action(&digits, &offsets, y)));
        increment(&radices, &mut digits);
    }
    let mut lp = LpProblem::new(total);
    let mut terms = Vec::new();
    for o in 0..team.omega0_size() {
        for y in 0..ny {
            let mu = team.prior_at(o, y);
            if mu <= 0.0 {
                continue;
            }
            for u in 0..nu {
                terms.clear();
                terms.extend((0..total).filter(|&k| actions[k * ny + y] == u).map(|k| (k, 1.0)));
                lp.add_constraint(&terms, target.get(team, o, y, u) / mu);
            }
        }
    }
    let ones: Vec<(usize, f64)> = (0..total).map(|k| (k, 1.0)).collect();
    lp.add_constraint(&ones, 1.0);
    let sol = solve_lp(&lp)?;
    let (support, residual) = if sol.is_optimal() {
        let mut digits = vec![0; radices.len()];
        let mut support = Vec::new();
        for k in 0..total {
            if sol.x[k] > 0.0 {
                support.push((payoff.profile(&digits), sol.x[k]));
            }
            increment(&radices, &mut digits);
        }
        (support, lp.primal_residual(&sol.x))
    } else {
        (Vec::new(), f64::INFINITY)
    };
    Ok(MixtureFit {
        status: sol.status,
        support,
        residual,
        farkas: sol.farkas,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::instances::{chsh_team, TeamSampler};
    use crate::model::profile_value;

    /// Plain recursive enumeration used as an oracle.
    fn brute_force(team: &FiniteStaticTeam) -> (f64, DeterministicProfile) {
        let cells: Vec<(usize, usize)> = (0..team.num_dms())
            .flat_map(|i| (0..team.obs_sizes()[i]).map(move |y| (i, y)))
            .collect();
        let mut maps: Vec<Vec<usize>> = team.obs_sizes().iter().map(|&n| vec![0; n]).collect();
        let mut best: Option<(f64, DeterministicProfile)> = None;
        fn rec(
            team: &FiniteStaticTeam,
            cells: &[(usize, usize)],
            k: usize,
            maps: &mut Vec<Vec<usize>>,
            best: &mut Option<(f64, DeterministicProfile)>,
        ) {
            if k == cells.len() {
                let p = DeterministicProfile::new(maps.clone());
                let v = profile_value(team, &p);
                if best.as_ref().is_none_or(|(b, _)| team.sense().improves(v, *b)) {
                    *best = Some((v, p));
                }
                return;
            }
            let (i, y) = cells[k];
            for a in 0..team.act_sizes()[i] {
                maps[i][y] = a;
                rec(team, cells, k + 1, maps, best);
            }
        }
        rec(team, &cells, 0, &mut maps, &mut best);
        best.unwrap()
    }

    #[test]
    fn pr_box_is_not_a_mixture_but_product_policies_are() {
        let team = chsh_team();
        let pr = StrategicMeasure::from_probs(&team, crate::instances::pr_box_probs()).unwrap();
        let fit = mixture_representation(&team, &pr).unwrap();
        assert_eq!(fit.status, LpStatus::Infeasible);
        assert!(fit.farkas.is_some());

        let half = vec![vec![0.5, 0.5]; 2];
        let policy = crate::model::BehavioralPolicy::new(vec![half.clone(), half]).unwrap();
        let m = crate::model::strategic_measure_of_behavioral(&team, &policy).unwrap();
        let fit = mixture_representation(&team, &m).unwrap();
        assert_eq!(fit.status, LpStatus::Optimal);
        assert!(fit.residual <= 1e-9);
        let total: f64 = fit.support.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn chsh_optimum_is_one_half_over_sixteen_profiles() {
        let sol = enumerate_optimal(&chsh_team()).unwrap();
        assert_eq!(sol.value, 0.5);
        assert_eq!(sol.profiles, 16);
        assert_eq!(sol.profile, DeterministicProfile::zeros(&chsh_team()));
    }

    #[test]
    fn observation_free_team_picks_best_joint_action() {
        let p0 = [0.3, 0.7];
        let c = [[4.0, 1.0, 3.0, 2.0], [0.0, 2.0, 1.0, 5.0]];
        let cost: Vec<f64> = c.iter().flatten().copied().collect();
        let team =
            FiniteStaticTeam::with_static_cost(2, vec![1, 1], vec![2, 2], p0.to_vec(), cost, Sense::Minimize).unwrap();
        let expected = (0..4)
            .map(|u| p0[0] * c[0][u] + p0[1] * c[1][u])
            .fold(f64::INFINITY, f64::min);
        assert_eq!(enumerate_optimal(&team).unwrap().value, expected);
    }

    #[test]
    fn constant_cost_returns_first_profile() {
        let mut sampler = TeamSampler::new(3);
        let t = sampler.product_team_with_sizes(2, vec![2, 3], vec![3, 2], Sense::Minimize);
        let team = FiniteStaticTeam::new(
            2,
            vec![2, 3],
            vec![3, 2],
            t.prior().to_vec(),
            vec![7.0; t.num_cells()],
            Sense::Minimize,
        )
        .unwrap();
        let sol = enumerate_optimal(&team).unwrap();
        assert!((sol.value - 7.0).abs() < 1e-12);
        assert_eq!(sol.profile, DeterministicProfile::zeros(&team));
    }

    #[test]
    fn cap_is_enforced() {
        let team = FiniteStaticTeam::new(
            1,
            vec![30],
            vec![2],
            vec![1.0 / 30.0; 30],
            vec![0.0; 60],
            Sense::Minimize,
        )
        .unwrap();
        match enumerate_optimal_with_cap(&team, 1000) {
            Err(TeamError::TooLarge(msg)) => assert!(msg.contains("best_response_search")),
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn thread_count_does_not_change_the_result() {
        let team = TeamSampler::new(11).correlated_team(3, 3, Sense::Minimize);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| enumerate_optimal_with_cap(&team, ENUMERATION_CAP).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one, run(7));
    }

    #[test]
    fn ties_resolve_to_smallest_index_across_blocks() {
        // 2^16 profiles span four blocks; every profile with γ(0) = 1 is optimal.
        let mut cost = Vec::new();
        for y in 0..16 {
            for u in 0..2 {
                cost.push(if y == 0 && u == 1 { -1.0 } else { 0.0 });
            }
        }
        let team = FiniteStaticTeam::new(1, vec![16], vec![2], vec![1.0 / 16.0; 16], cost, Sense::Minimize).unwrap();
        let sol = enumerate_optimal(&team).unwrap();
        let mut expected = vec![0; 16];
        expected[0] = 1;
        assert_eq!(sol.profile.maps(), &[expected]);
    }

    #[test]
    fn chsh_best_response_reaches_one_half_from_worst_profile() {
        let team = chsh_team();
        let worst = DeterministicProfile::new(vec![vec![0, 0], vec![1, 1]]);
        assert_eq!(profile_value(&team, &worst), -0.5);
        let out = best_response_search(&team, Some(&worst), 50, 0).unwrap();
        assert!(out.converged);
        assert_eq!(out.value, enumerate_optimal(&team).unwrap().value);
    }

    #[test]
    fn optimal_init_is_a_fixed_point() {
        let team = TeamSampler::new(5).correlated_team(2, 3, Sense::Maximize);
        let opt = enumerate_optimal(&team).unwrap();
        let out = best_response_search(&team, Some(&opt.profile), 10, 0).unwrap();
        assert_eq!(out.profile, opt.profile);
        assert_eq!(out.rounds, 1);
        assert!(out.converged);
    }

    #[test]
    fn restarts_match_enumeration_on_most_instances() {
        let mut hits = 0;
        for seed in 0..200u64 {
            let team = TeamSampler::new(seed).correlated_team(2, 3, Sense::Minimize);
            let exact = brute_force(&team).0;
            let heur = best_response_restarts(&team, 20, 100, seed * 1000).unwrap().value;
            if (heur - exact).abs() <= 1e-12 {
                hits += 1;
            }
        }
        assert!(hits >= 190, "only {hits} of 200 instances matched");
    }

    #[test]
    fn chsh_has_no_gain_from_randomization() {
        let (det, conv) = randomization_no_gain_check(&chsh_team()).unwrap();
        assert_eq!(det, 0.5);
        assert!((conv - 0.5).abs() <= 1e-9);
    }

    #[test]
    fn single_dm_has_no_gain_from_randomization() {
        let team = TeamSampler::new(9).correlated_team(1, 4, Sense::Minimize);
        let (det, conv) = randomization_no_gain_check(&team).unwrap();
        assert!((det - conv).abs() <= 1e-9);
    }

    fn relabel(team: &FiniteStaticTeam, obs_perm: &[Vec<usize>], act_perm: &[Vec<usize>]) -> FiniteStaticTeam {
        let n = team.num_dms();
        let mut prior = vec![0.0; team.prior().len()];
        let mut cost = vec![0.0; team.num_cells()];
        for o in 0..team.omega0_size() {
            for y in 0..team.num_joint_obs() {
                let ys: Vec<usize> = (0..n).map(|i| obs_perm[i][team.obs_component(y, i)]).collect();
                let y2 = team.obs_index(&ys);
                prior[o * team.num_joint_obs() + y2] = team.prior_at(o, y);
                for u in 0..team.num_joint_actions() {
                    let us: Vec<usize> = (0..n).map(|i| act_perm[i][team.act_component(u, i)]).collect();
                    cost[team.cell_index(o, y2, team.act_index(&us))] = team.cost_at(o, y, u);
                }
            }
        }
        FiniteStaticTeam::new(
            team.omega0_size(),
            team.obs_sizes().to_vec(),
            team.act_sizes().to_vec(),
            prior,
            cost,
            team.sense(),
        )
        .unwrap()
    }

    fn rotation(n: usize, k: usize) -> Vec<usize> {
        (0..n).map(|j| (j + k) % n).rev().collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn enumeration_matches_brute_force(seed in 0u64..100_000) {
            let team = TeamSampler::new(seed).correlated_team(3, 2, Sense::Minimize);
            let sol = enumerate_optimal(&team).unwrap();
            let (v, _) = brute_force(&team);
            prop_assert!((sol.value - v).abs() <= 1e-12);
            prop_assert!((profile_value(&team, &sol.profile) - v).abs() <= 1e-12);
        }

        #[test]
        fn relabeling_preserves_the_optimum(seed in 0u64..100_000, k in 0usize..3) {
            let team = TeamSampler::new(seed).correlated_team(2, 3, Sense::Minimize);
            let obs_perm: Vec<Vec<usize>> = team.obs_sizes().iter().map(|&s| rotation(s, k)).collect();
            let act_perm: Vec<Vec<usize>> = team.act_sizes().iter().map(|&s| rotation(s, k + 1)).collect();
            let a = enumerate_optimal(&team).unwrap().value;
            let b = enumerate_optimal(&relabel(&team, &obs_perm, &act_perm)).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn maximum_is_negated_minimum(seed in 0u64..100_000) {
            let team = TeamSampler::new(seed).correlated_team(2, 3, Sense::Maximize);
            let max = enumerate_optimal(&team).unwrap().value;
            let min = enumerate_optimal(&team.negated()).unwrap().value;
            prop_assert_eq!(max, -min);
        }

        #[test]
        fn best_response_is_monotone(seed in 0u64..100_000, sense in prop::bool::ANY) {
            let sense = if sense { Sense::Maximize } else { Sense::Minimize };
            let team = TeamSampler::new(seed).correlated_team(3, 3, sense);
            let out = best_response_search(&team, None, 50, seed).unwrap();
            for w in out.history.windows(2) {
                prop_assert!(!sense.improves(w[0], w[1] - sense.sign() * 1e-12));
            }
        }

        #[test]
        fn mixtures_do_not_beat_deterministic_profiles(seed in 0u64..100_000) {
            let team = TeamSampler::new(seed).correlated_team(2, 2, Sense::Minimize);
            let (det, conv) = randomization_no_gain_check(&team).unwrap();
            prop_assert!((det - conv).abs() <= 1e-9);
        }
    }
}
