//! Finite static teams, strategic measures and classical policies.
//!
//! All tensors are dense and row-major. A team over `Ω0 × Y¹ × … × Y^N × U¹ × … × U^N`
//! stores its prior over `(ω0, y)` and its cost over `(ω0, y, u)`; joint observations
//! and joint actions are flattened with the first decision maker most significant.

mod schema;

pub use schema::{load_problem, load_team, parse_team, LoadedProblem, ProblemFile};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TeamError};

/// Largest dense `Ω0 × Y × U` tensor a team may allocate.
pub const MAX_CELLS: usize = 100_000_000;
/// Tolerance for user-supplied distributions.
pub const INPUT_TOL: f64 = 1e-12;
/// Tolerance for distributions produced by floating-point accumulation.
pub const MEASURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// `+1` for minimization, `-1` for maximization; multiplying a value by it turns
    /// every problem into a minimization.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }

    /// Strict improvement of `candidate` over `incumbent`.
    pub fn improves(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Sense::Minimize => candidate < incumbent,
            Sense::Maximize => candidate > incumbent,
        }
    }

    pub fn best(self, a: f64, b: f64) -> f64 {
        if self.improves(b, a) {
            b
        } else {
            a
        }
    }

    pub fn flipped(self) -> Sense {
        match self {
            Sense::Minimize => Sense::Maximize,
            Sense::Maximize => Sense::Minimize,
        }
    }
}

impl std::fmt::Display for Sense {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sense::Minimize => f.write_str("minimize"),
            Sense::Maximize => f.write_str("maximize"),
        }
    }
}

/// Row-major strides for a list of dimension sizes (last dimension fastest).
pub(crate) fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![1; sizes.len()];
    for i in (0..sizes.len().saturating_sub(1)).rev() {
        out[i] = out[i + 1] * sizes[i + 1];
    }
    out
}

fn checked_product(sizes: &[usize]) -> Option<usize> {
    sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s))
}

/// A finite static team: spaces, joint prior `μ(ω0, y)`, a measurement-dependent cost
/// `c(ω0, y, u)` and the optimization sense.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteStaticTeam {
    omega0_size: usize,
    obs_sizes: Vec<usize>,
    act_sizes: Vec<usize>,
    prior: Vec<f64>,
    cost: Vec<f64>,
    sense: Sense,
    obs_strides: Vec<usize>,
    act_strides: Vec<usize>,
    num_obs: usize,
    num_acts: usize,
}

impl FiniteStaticTeam {
    /// Builds and validates a team whose cost tensor covers `Ω0 × Y × U`.
    pub fn new(
        omega0_size: usize,
        obs_sizes: Vec<usize>,
        act_sizes: Vec<usize>,
        prior: Vec<f64>,
        cost: Vec<f64>,
        sense: Sense,
    ) -> Result<Self> {
        if obs_sizes.is_empty() {
            return Err(TeamError::validation(
                "num_dms",
                "a team needs at least one decision maker",
            ));
        }
        if obs_sizes.len() != act_sizes.len() {
            return Err(TeamError::validation(
                "act_sizes",
                format!(
                    "{} observation sizes but {} action sizes",
                    obs_sizes.len(),
                    act_sizes.len()
                ),
            ));
        }
        if omega0_size == 0 {
            return Err(TeamError::validation("omega0_size", "must be positive"));
        }
        for (i, (&y, &u)) in obs_sizes.iter().zip(&act_sizes).enumerate() {
            if y == 0 {
                return Err(TeamError::validation(format!("obs_sizes[{i}]"), "must be positive"));
            }
            if u == 0 {
                return Err(TeamError::validation(format!("act_sizes[{i}]"), "must be positive"));
            }
        }
        let too_large = || TeamError::TooLarge(format!("tensor exceeds {MAX_CELLS} cells"));
        let num_obs = checked_product(&obs_sizes).ok_or_else(too_large)?;
        let num_acts = checked_product(&act_sizes).ok_or_else(too_large)?;
        let prior_len = omega0_size.checked_mul(num_obs).ok_or_else(too_large)?;
        let cells = prior_len.checked_mul(num_acts).ok_or_else(too_large)?;
        if cells > MAX_CELLS {
            return Err(too_large());
        }
        if prior.len() != prior_len {
            return Err(TeamError::validation(
                "prior",
                format!("expected {prior_len} entries over Ω0 × Y, found {}", prior.len()),
            ));
        }
        if cost.len() != cells {
            return Err(TeamError::validation(
                "cost",
                format!("expected {cells} entries over Ω0 × Y × U, found {}", cost.len()),
            ));
        }
        validate_distribution("prior", &prior, INPUT_TOL)?;
        if let Some(pos) = cost.iter().position(|c| !c.is_finite()) {
            return Err(TeamError::validation(format!("cost[{pos}]"), "entry is not finite"));
        }
        Ok(FiniteStaticTeam {
            omega0_size,
            obs_strides: strides(&obs_sizes),
            act_strides: strides(&act_sizes),
            obs_sizes,
            act_sizes,
            prior,
            cost,
            sense,
            num_obs,
            num_acts,
        })
    }

    /// Builds a team whose cost `c(ω0, u)` does not depend on the measurements; the cost
    /// is repeated across every observation slice.
    pub fn with_static_cost(
        omega0_size: usize,
        obs_sizes: Vec<usize>,
        act_sizes: Vec<usize>,
        prior: Vec<f64>,
        cost_omega_u: Vec<f64>,
        sense: Sense,
    ) -> Result<Self> {
        let num_obs = checked_product(&obs_sizes).unwrap_or(usize::MAX);
        let num_acts = checked_product(&act_sizes).unwrap_or(usize::MAX);
        if omega0_size.saturating_mul(num_obs).saturating_mul(num_acts) > MAX_CELLS {
            return Err(TeamError::TooLarge(format!("tensor exceeds {MAX_CELLS} cells")));
        }
        if cost_omega_u.len() != omega0_size * num_acts {
            return Err(TeamError::validation(
                "cost",
                format!(
                    "expected {} entries over Ω0 × U, found {}",
                    omega0_size * num_acts,
                    cost_omega_u.len()
                ),
            ));
        }
        let mut cost = Vec::with_capacity(omega0_size * num_obs * num_acts);
        for w in 0..omega0_size {
            let slice = &cost_omega_u[w * num_acts..(w + 1) * num_acts];
            for _ in 0..num_obs {
                cost.extend_from_slice(slice);
            }
        }
        Self::new(omega0_size, obs_sizes, act_sizes, prior, cost, sense)
    }

    pub fn num_dms(&self) -> usize {
        self.obs_sizes.len()
    }

    pub fn omega0_size(&self) -> usize {
        self.omega0_size
    }

    pub fn obs_sizes(&self) -> &[usize] {
        &self.obs_sizes
    }

    pub fn act_sizes(&self) -> &[usize] {
        &self.act_sizes
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Number of joint observations `|Y¹| ⋯ |Y^N|`.
    pub fn num_joint_obs(&self) -> usize {
        self.num_obs
    }

    /// Number of joint actions `|U¹| ⋯ |U^N|`.
    pub fn num_joint_actions(&self) -> usize {
        self.num_acts
    }

    /// Number of cells in the `Ω0 × Y × U` tensor.
    pub fn num_cells(&self) -> usize {
        self.cost.len()
    }

    pub fn prior_at(&self, omega0: usize, y: usize) -> f64 {
        self.prior[omega0 * self.num_obs + y]
    }

    pub fn cost_at(&self, omega0: usize, y: usize, u: usize) -> f64 {
        self.cost[self.cell_index(omega0, y, u)]
    }

    #[inline]
    pub fn cell_index(&self, omega0: usize, y: usize, u: usize) -> usize {
        (omega0 * self.num_obs + y) * self.num_acts + u
    }

    /// Component `i` of the flat joint observation `y`.
    #[inline]
    pub fn obs_component(&self, y: usize, i: usize) -> usize {
        (y / self.obs_strides[i]) % self.obs_sizes[i]
    }

    #[inline]
    pub fn act_component(&self, u: usize, i: usize) -> usize {
        (u / self.act_strides[i]) % self.act_sizes[i]
    }

    pub fn obs_strides(&self) -> &[usize] {
        &self.obs_strides
    }

    pub fn act_strides(&self) -> &[usize] {
        &self.act_strides
    }

    pub fn obs_digits(&self, y: usize) -> Vec<usize> {
        (0..self.num_dms()).map(|i| self.obs_component(y, i)).collect()
    }

    pub fn act_digits(&self, u: usize) -> Vec<usize> {
        (0..self.num_dms()).map(|i| self.act_component(u, i)).collect()
    }

    pub fn obs_index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.obs_strides).map(|(d, s)| d * s).sum()
    }

    pub fn act_index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.act_strides).map(|(d, s)| d * s).sum()
    }

    /// Same team with the opposite sense and negated cost.
    pub fn negated(&self) -> FiniteStaticTeam {
        let mut out = self.clone();
        out.cost.iter_mut().for_each(|c| *c = -*c);
        out.sense = self.sense.flipped();
        out
    }

    /// Marginal of `μ` on `Ω0`.
    pub fn omega0_marginal(&self) -> Vec<f64> {
        (0..self.omega0_size)
            .map(|w| self.prior[w * self.num_obs..(w + 1) * self.num_obs].iter().sum())
            .collect()
    }

    /// Marginal of `μ` on `Y^i`.
    pub fn obs_marginal(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.obs_sizes[i]];
        for w in 0..self.omega0_size {
            for y in 0..self.num_obs {
                out[self.obs_component(y, i)] += self.prior_at(w, y);
            }
        }
        out
    }

    /// Largest deviation of `μ` from the product of its `Ω0` and `Y^i` marginals.
    pub fn product_prior_residual(&self) -> f64 {
        let p0 = self.omega0_marginal();
        let qs: Vec<Vec<f64>> = (0..self.num_dms()).map(|i| self.obs_marginal(i)).collect();
        let mut worst: f64 = 0.0;
        for w in 0..self.omega0_size {
            for y in 0..self.num_obs {
                let mut prod = p0[w];
                for (i, q) in qs.iter().enumerate() {
                    prod *= q[self.obs_component(y, i)];
                }
                worst = worst.max((self.prior_at(w, y) - prod).abs());
            }
        }
        worst
    }
}

fn validate_distribution(field: &str, probs: &[f64], tol: f64) -> Result<()> {
    if let Some(pos) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
        return Err(TeamError::validation(
            format!("{field}[{pos}]"),
            format!("entry {} is negative or not finite", probs[pos]),
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(TeamError::validation(
            field,
            format!("entries sum to {total}, expected 1"),
        ));
    }
    Ok(())
}

/// Joint law of `(ω0, y, u)` induced by a policy, stored over the team's `Ω0 × Y × U` layout.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategicMeasure {
    probs: Vec<f64>,
}

impl StrategicMeasure {
    /// Wraps raw probabilities laid out like the team's cost tensor and checks them.
    pub fn from_probs(team: &FiniteStaticTeam, probs: Vec<f64>) -> Result<Self> {
        let m = StrategicMeasure { probs };
        m.validate_for(team)?;
        Ok(m)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn get(&self, team: &FiniteStaticTeam, omega0: usize, y: usize, u: usize) -> f64 {
        self.probs[team.cell_index(omega0, y, u)]
    }

    /// Largest entrywise gap between `Σ_u P(ω0, y, u)` and `μ(ω0, y)`.
    pub fn marginal_residual(&self, team: &FiniteStaticTeam) -> f64 {
        let na = team.num_joint_actions();
        self.probs
            .chunks(na)
            .zip(team.prior())
            .map(|(block, mu)| (block.iter().sum::<f64>() - mu).abs())
            .fold(0.0, f64::max)
    }

    pub fn validate_for(&self, team: &FiniteStaticTeam) -> Result<()> {
        if self.probs.len() != team.num_cells() {
            return Err(TeamError::ShapeMismatch(format!(
                "measure has {} cells, team has {}",
                self.probs.len(),
                team.num_cells()
            )));
        }
        if let Some(pos) = self.probs.iter().position(|p| !p.is_finite() || *p < -MEASURE_TOL) {
            return Err(TeamError::validation(
                format!("measure[{pos}]"),
                "negative or not finite",
            ));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > MEASURE_TOL {
            return Err(TeamError::validation("measure", format!("total mass {total}")));
        }
        let gap = self.marginal_residual(team);
        if gap > MEASURE_TOL {
            return Err(TeamError::validation(
                "measure",
                format!("(ω0, y)-marginal differs from the prior by {gap:.3e}"),
            ));
        }
        Ok(())
    }

    pub fn is_valid_for(&self, team: &FiniteStaticTeam) -> bool {
        self.validate_for(team).is_ok()
    }

    /// Conditional action law `P(u | ω0, y)`; `None` where `μ(ω0, y) = 0`.
    pub fn conditional(&self, team: &FiniteStaticTeam, omega0: usize, y: usize) -> Option<Vec<f64>> {
        let mu = team.prior_at(omega0, y);
        if mu <= 0.0 {
            return None;
        }
        let start = team.cell_index(omega0, y, 0);
        Some(
            self.probs[start..start + team.num_joint_actions()]
                .iter()
                .map(|p| p / mu)
                .collect(),
        )
    }
}

/// One deterministic decision rule `γ^i : Y^i → U^i` per decision maker.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DeterministicProfile {
    maps: Vec<Vec<usize>>,
}

impl DeterministicProfile {
    pub fn new(maps: Vec<Vec<usize>>) -> Self {
        DeterministicProfile { maps }
    }

    /// Every decision maker plays action 0 everywhere.
    pub fn zeros(team: &FiniteStaticTeam) -> Self {
        DeterministicProfile {
            maps: team.obs_sizes().iter().map(|&n| vec![0; n]).collect(),
        }
    }

    pub fn maps(&self) -> &[Vec<usize>] {
        &self.maps
    }

    pub fn action(&self, dm: usize, y: usize) -> usize {
        self.maps[dm][y]
    }

    pub fn set_action(&mut self, dm: usize, y: usize, u: usize) {
        self.maps[dm][y] = u;
    }

    pub fn validate_for(&self, team: &FiniteStaticTeam) -> Result<()> {
        validate_profile_shape(&self.maps, team.obs_sizes(), team.act_sizes())
    }

    /// Flat joint action chosen at the flat joint observation `y`.
    #[inline]
    pub fn joint_action(&self, team: &FiniteStaticTeam, y: usize) -> usize {
        let mut u = 0;
        for (i, map) in self.maps.iter().enumerate() {
            u += map[team.obs_component(y, i)] * team.act_strides()[i];
        }
        u
    }
}

pub(crate) fn validate_profile_shape(maps: &[Vec<usize>], obs: &[usize], act: &[usize]) -> Result<()> {
    if maps.len() != obs.len() {
        return Err(TeamError::ShapeMismatch(format!(
            "profile has {} rules, team has {} decision makers",
            maps.len(),
            obs.len()
        )));
    }
    for (i, map) in maps.iter().enumerate() {
        if map.len() != obs[i] {
            return Err(TeamError::ShapeMismatch(format!(
                "rule {i} covers {} observations, expected {}",
                map.len(),
                obs[i]
            )));
        }
        if let Some(y) = map.iter().position(|&u| u >= act[i]) {
            return Err(TeamError::validation(
                format!("profile[{i}][{y}]"),
                format!("action {} out of range 0..{}", map[y], act[i]),
            ));
        }
    }
    Ok(())
}

/// Individually randomized policy: a row-stochastic kernel `Π^i(u | y)` per decision maker,
/// indexed `kernels[i][y][u]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehavioralPolicy {
    kernels: Vec<Vec<Vec<f64>>>,
}

impl BehavioralPolicy {
    pub fn new(kernels: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        for (i, kernel) in kernels.iter().enumerate() {
            for (y, row) in kernel.iter().enumerate() {
                validate_distribution(&format!("kernel[{i}][{y}]"), row, INPUT_TOL)?;
            }
        }
        Ok(BehavioralPolicy { kernels })
    }

    /// Point-mass kernels of a deterministic profile.
    pub fn from_profile(team: &FiniteStaticTeam, profile: &DeterministicProfile) -> Self {
        let kernels = profile
            .maps()
            .iter()
            .enumerate()
            .map(|(i, map)| {
                map.iter()
                    .map(|&u| {
                        let mut row = vec![0.0; team.act_sizes()[i]];
                        row[u] = 1.0;
                        row
                    })
                    .collect()
            })
            .collect();
        BehavioralPolicy { kernels }
    }

    pub fn kernels(&self) -> &[Vec<Vec<f64>>] {
        &self.kernels
    }

    pub fn prob(&self, dm: usize, y: usize, u: usize) -> f64 {
        self.kernels[dm][y][u]
    }

    pub fn validate_for(&self, team: &FiniteStaticTeam) -> Result<()> {
        if self.kernels.len() != team.num_dms() {
            return Err(TeamError::ShapeMismatch(format!(
                "policy has {} kernels, team has {} decision makers",
                self.kernels.len(),
                team.num_dms()
            )));
        }
        for (i, kernel) in self.kernels.iter().enumerate() {
            if kernel.len() != team.obs_sizes()[i] || kernel.iter().any(|row| row.len() != team.act_sizes()[i]) {
                return Err(TeamError::ShapeMismatch(format!(
                    "kernel {i} is not {} x {}",
                    team.obs_sizes()[i],
                    team.act_sizes()[i]
                )));
            }
        }
        Ok(())
    }
}

/// `P(ω0, y, u) = μ(ω0, y) ∏_i 1{u^i = γ^i(y^i)}`.
pub fn strategic_measure_of(team: &FiniteStaticTeam, profile: &DeterministicProfile) -> Result<StrategicMeasure> {
    profile.validate_for(team)?;
    let mut probs = vec![0.0; team.num_cells()];
    for w in 0..team.omega0_size() {
        for y in 0..team.num_joint_obs() {
            let u = profile.joint_action(team, y);
            probs[team.cell_index(w, y, u)] = team.prior_at(w, y);
        }
    }
    Ok(StrategicMeasure { probs })
}

/// `P(ω0, y, u) = μ(ω0, y) ∏_i Π^i(u^i | y^i)`.
pub fn strategic_measure_of_behavioral(team: &FiniteStaticTeam, policy: &BehavioralPolicy) -> Result<StrategicMeasure> {
    policy.validate_for(team)?;
    let n = team.num_dms();
    let na = team.num_joint_actions();
    let mut probs = vec![0.0; team.num_cells()];
    let mut joint = vec![0.0; na];
    for y in 0..team.num_joint_obs() {
        let ys = team.obs_digits(y);
        for (u, slot) in joint.iter_mut().enumerate() {
            let mut p = 1.0;
            for i in 0..n {
                p *= policy.prob(i, ys[i], team.act_component(u, i));
            }
            *slot = p;
        }
        for w in 0..team.omega0_size() {
            let mu = team.prior_at(w, y);
            let start = team.cell_index(w, y, 0);
            for (dst, p) in probs[start..start + na].iter_mut().zip(&joint) {
                *dst = mu * p;
            }
        }
    }
    Ok(StrategicMeasure { probs })
}

/// Expected cost (or reward) `Σ P · c`.
pub fn evaluate(team: &FiniteStaticTeam, measure: &StrategicMeasure) -> Result<f64> {
    measure.validate_for(team)?;
    Ok(measure.probs.iter().zip(team.cost()).map(|(p, c)| p * c).sum())
}

/// `Σ_{ω0, y} μ(ω0, y) c(ω0, y, γ(y))` without materializing the measure.
pub fn profile_value(team: &FiniteStaticTeam, profile: &DeterministicProfile) -> f64 {
    let mut total = 0.0;
    for w in 0..team.omega0_size() {
        for y in 0..team.num_joint_obs() {
            let mu = team.prior_at(w, y);
            if mu != 0.0 {
                total += mu * team.cost_at(w, y, profile.joint_action(team, y));
            }
        }
    }
    total
}
