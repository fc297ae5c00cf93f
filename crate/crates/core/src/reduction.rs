//! Independent static reduction of finite sequential teams.
//!
//! Decision makers act in index order. DM `i` observes `y^i ~ g^i(· | ω0, u¹, …, u^{i-1})`;
//! the cost `c(ω0, u)` does not depend on the measurements. Changing measure to a product
//! of reference laws `Q^i` turns the team into a static one whose measurements are mutually
//! independent and independent of `ω0`, with the densities `f_i = g^i / Q^i` absorbed into
//! a measurement-dependent cost.
//!
//! Kernels may only condition on `ω0` and earlier actions. Teams whose measurements depend
//! on earlier measurements directly must be rewritten (e.g. by enlarging `Ω0`) first.

use crate::error::{Result, TeamError};
use crate::model::{
    evaluate, strategic_measure_of, strategic_measure_of_behavioral, strides, BehavioralPolicy, DeterministicProfile,
    FiniteStaticTeam, Sense, INPUT_TOL, MAX_CELLS,
};

/// A finite sequential team with controlled measurement kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct SequentialFiniteTeam {
    p0: Vec<f64>,
    obs_sizes: Vec<usize>,
    act_sizes: Vec<usize>,
    /// `kernels[i][ctx * |Y^i| + y]` with `ctx` row-major over `(ω0, u¹, …, u^{i-1})`.
    kernels: Vec<Vec<f64>>,
    cost: Vec<f64>,
    sense: Sense,
    act_strides: Vec<usize>,
}

impl SequentialFiniteTeam {
    pub fn new(
        p0: Vec<f64>,
        obs_sizes: Vec<usize>,
        act_sizes: Vec<usize>,
        kernels: Vec<Vec<f64>>,
        cost: Vec<f64>,
        sense: Sense,
    ) -> Result<Self> {
        let n = obs_sizes.len();
        if n == 0 || act_sizes.len() != n {
            return Err(TeamError::validation(
                "obs_sizes",
                "need one observation and action size per DM",
            ));
        }
        if obs_sizes.iter().chain(&act_sizes).any(|&s| s == 0) || p0.is_empty() {
            return Err(TeamError::validation("sizes", "all sizes must be positive"));
        }
        if p0.iter().any(|p| !p.is_finite() || *p < 0.0) || (p0.iter().sum::<f64>() - 1.0).abs() > INPUT_TOL {
            return Err(TeamError::validation(
                "prior",
                "P0 must be a probability vector over Ω0",
            ));
        }
        if kernels.len() != n {
            return Err(TeamError::validation(
                "kernels",
                format!("expected {n} kernels, found {}", kernels.len()),
            ));
        }
        let num_acts: usize = act_sizes.iter().product();
        let cells = p0.len() as f64 * obs_sizes.iter().product::<usize>() as f64 * num_acts as f64;
        if cells > MAX_CELLS as f64 {
            return Err(TeamError::TooLarge(format!("reduced tensor exceeds {MAX_CELLS} cells")));
        }
        if cost.len() != p0.len() * num_acts {
            return Err(TeamError::validation(
                "cost",
                format!(
                    "expected {} entries over Ω0 × U, found {}",
                    p0.len() * num_acts,
                    cost.len()
                ),
            ));
        }
        if cost.iter().any(|c| !c.is_finite()) {
            return Err(TeamError::validation("cost", "entries must be finite"));
        }
        let mut contexts = p0.len();
        for i in 0..n {
            let k = &kernels[i];
            if k.len() != contexts * obs_sizes[i] {
                return Err(TeamError::validation(
                    format!("kernels[{i}]"),
                    format!("expected {} entries, found {}", contexts * obs_sizes[i], k.len()),
                ));
            }
            for (ctx, row) in k.chunks(obs_sizes[i]).enumerate() {
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (row.iter().sum::<f64>() - 1.0).abs() > INPUT_TOL {
                    return Err(TeamError::validation(
                        format!("kernels[{i}] context {ctx}"),
                        "row is not a probability vector",
                    ));
                }
            }
            contexts *= act_sizes[i];
        }
        Ok(SequentialFiniteTeam {
            act_strides: strides(&act_sizes),
            p0,
            obs_sizes,
            act_sizes,
            kernels,
            cost,
            sense,
        })
    }

    pub fn num_dms(&self) -> usize {
        self.obs_sizes.len()
    }

    pub fn omega0_size(&self) -> usize {
        self.p0.len()
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn obs_sizes(&self) -> &[usize] {
        &self.obs_sizes
    }

    pub fn act_sizes(&self) -> &[usize] {
        &self.act_sizes
    }

    pub fn kernels(&self) -> &[Vec<f64>] {
        &self.kernels
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Number of conditioning contexts `(ω0, u¹, …, u^{i-1})` of DM `i`.
    pub fn num_contexts(&self, i: usize) -> usize {
        self.p0.len() * self.act_sizes[..i].iter().product::<usize>()
    }

    /// Context index of DM `i` for `ω0` and the joint action `u` (only `u¹..u^{i-1}` matter).
    #[inline]
    pub fn context(&self, i: usize, omega0: usize, u: usize) -> usize {
        let mut ctx = omega0;
        for j in 0..i {
            ctx = ctx * self.act_sizes[j] + (u / self.act_strides[j]) % self.act_sizes[j];
        }
        ctx
    }

    pub fn kernel(&self, i: usize, ctx: usize, y: usize) -> f64 {
        self.kernels[i][ctx * self.obs_sizes[i] + y]
    }

    pub fn cost_at(&self, omega0: usize, u: usize) -> f64 {
        self.cost[omega0 * self.act_sizes.iter().product::<usize>() + u]
    }

    /// Expected cost of a randomized policy, chaining the kernels in DM order.
    pub fn value_behavioral(&self, policy: &BehavioralPolicy) -> Result<f64> {
        let k = policy.kernels();
        if k.len() != self.num_dms()
            || k.iter()
                .enumerate()
                .any(|(i, rows)| rows.len() != self.obs_sizes[i] || rows.iter().any(|r| r.len() != self.act_sizes[i]))
        {
            return Err(TeamError::ShapeMismatch(
                "policy does not match the sequential team".into(),
            ));
        }
        let mut total = 0.0;
        for (w, &p) in self.p0.iter().enumerate() {
            if p != 0.0 {
                total += p * self.chain(policy, 0, w, w, 0);
            }
        }
        Ok(total)
    }

    fn chain(&self, policy: &BehavioralPolicy, i: usize, omega0: usize, ctx: usize, u: usize) -> f64 {
        if i == self.num_dms() {
            return self.cost_at(omega0, u);
        }
        let mut total = 0.0;
        for y in 0..self.obs_sizes[i] {
            let g = self.kernel(i, ctx, y);
            if g == 0.0 {
                continue;
            }
            for a in 0..self.act_sizes[i] {
                let pi = policy.prob(i, y, a);
                if pi != 0.0 {
                    let next = ctx * self.act_sizes[i] + a;
                    total += g * pi * self.chain(policy, i + 1, omega0, next, u + a * self.act_strides[i]);
                }
            }
        }
        total
    }

    /// Expected cost of a deterministic profile.
    pub fn value(&self, profile: &DeterministicProfile) -> Result<f64> {
        crate::model::validate_profile_shape(profile.maps(), &self.obs_sizes, &self.act_sizes)?;
        let kernels = profile
            .maps()
            .iter()
            .enumerate()
            .map(|(i, map)| {
                map.iter()
                    .map(|&a| {
                        let mut row = vec![0.0; self.act_sizes[i]];
                        row[a] = 1.0;
                        row
                    })
                    .collect()
            })
            .collect();
        self.value_behavioral(&BehavioralPolicy::new(kernels)?)
    }
}

/// Reference measures and densities of a static reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionArtifacts {
    /// `Q^i` over `Y^i`.
    pub reference_measures: Vec<Vec<f64>>,
    /// `f_i(y^i, ω0, u¹, …, u^{i-1})`, laid out like the kernels.
    pub densities: Vec<Vec<f64>>,
}

impl ReductionArtifacts {
    /// Largest entrywise gap between `f_i · Q^i` and `g^i`.
    pub fn reconstruction_residual(&self, team: &SequentialFiniteTeam) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..team.num_dms() {
            let ny = team.obs_sizes()[i];
            for (idx, (&f, &g)) in self.densities[i].iter().zip(&team.kernels()[i]).enumerate() {
                worst = worst.max((f * self.reference_measures[i][idx % ny] - g).abs());
            }
        }
        worst
    }

    fn check_shape(&self, team: &SequentialFiniteTeam) -> Result<()> {
        let n = team.num_dms();
        if self.reference_measures.len() != n || self.densities.len() != n {
            return Err(TeamError::ShapeMismatch(
                "artifacts do not match the number of DMs".into(),
            ));
        }
        for i in 0..n {
            if self.reference_measures[i].len() != team.obs_sizes()[i]
                || self.densities[i].len() != team.kernels()[i].len()
            {
                return Err(TeamError::ShapeMismatch(format!(
                    "artifacts for DM {i} have the wrong size"
                )));
            }
        }
        Ok(())
    }
}

/// Support of `y^i` over every conditioning context.
fn support(team: &SequentialFiniteTeam, i: usize) -> Vec<bool> {
    let ny = team.obs_sizes()[i];
    let mut out = vec![false; ny];
    for (idx, &g) in team.kernels()[i].iter().enumerate() {
        if g > 0.0 {
            out[idx % ny] = true;
        }
    }
    out
}

/// Static reduction with `Q^i` uniform on the support of `y^i`.
pub fn static_reduce(team: &SequentialFiniteTeam) -> Result<(FiniteStaticTeam, ReductionArtifacts)> {
    let refs = (0..team.num_dms())
        .map(|i| {
            let supp = support(team, i);
            let count = supp.iter().filter(|&&s| s).count() as f64;
            supp.iter().map(|&s| if s { 1.0 / count } else { 0.0 }).collect()
        })
        .collect();
    static_reduce_with_references(team, refs)
}

/// Static reduction against caller-supplied reference measures, which must charge every
/// observation some context can produce.
pub fn static_reduce_with_references(
    team: &SequentialFiniteTeam,
    reference_measures: Vec<Vec<f64>>,
) -> Result<(FiniteStaticTeam, ReductionArtifacts)> {
    let n = team.num_dms();
    if reference_measures.len() != n {
        return Err(TeamError::ShapeMismatch(
            "one reference measure per DM is required".into(),
        ));
    }
    let mut densities = Vec::with_capacity(n);
    for (i, q) in reference_measures.iter().enumerate() {
        let ny = team.obs_sizes()[i];
        if q.len() != ny
            || q.iter().any(|p| !p.is_finite() || *p < 0.0)
            || (q.iter().sum::<f64>() - 1.0).abs() > INPUT_TOL
        {
            return Err(TeamError::validation(
                format!("reference_measures[{i}]"),
                "not a probability vector over Y^i",
            ));
        }
        let mut f = Vec::with_capacity(team.kernels()[i].len());
        for (idx, &g) in team.kernels()[i].iter().enumerate() {
            let qy = q[idx % ny];
            if qy > 0.0 {
                f.push(g / qy);
            } else if g > 0.0 {
                return Err(TeamError::validation(
                    format!("reference_measures[{i}][{}]", idx % ny),
                    "reference measure does not dominate the kernel",
                ));
            } else {
                f.push(0.0);
            }
        }
        densities.push(f);
    }

    let omega0 = team.omega0_size();
    let obs = team.obs_sizes().to_vec();
    let act = team.act_sizes().to_vec();
    let obs_strides = strides(&obs);
    let num_obs: usize = obs.iter().product();
    let num_acts: usize = act.iter().product();

    let mut prior = Vec::with_capacity(omega0 * num_obs);
    for &p in team.p0() {
        for y in 0..num_obs {
            let mut v = p;
            for i in 0..n {
                v *= reference_measures[i][(y / obs_strides[i]) % obs[i]];
            }
            prior.push(v);
        }
    }

    let mut cost = Vec::with_capacity(omega0 * num_obs * num_acts);
    for w in 0..omega0 {
        for y in 0..num_obs {
            for u in 0..num_acts {
                let mut v = team.cost_at(w, u);
                for i in 0..n {
                    let yi = (y / obs_strides[i]) % obs[i];
                    v *= densities[i][team.context(i, w, u) * obs[i] + yi];
                }
                cost.push(v);
            }
        }
    }
    let reduced = FiniteStaticTeam::new(omega0, obs, act, prior, cost, team.sense())?;
    Ok((
        reduced,
        ReductionArtifacts {
            reference_measures,
            densities,
        },
    ))
}

/// Evaluates `profile` on the sequential team by forward chaining and on its reduction;
/// returns `(J_dynamic, J_static)`.
pub fn verify_reduction(
    team: &SequentialFiniteTeam,
    artifacts: &ReductionArtifacts,
    reduced: &FiniteStaticTeam,
    profile: &DeterministicProfile,
) -> Result<(f64, f64)> {
    artifacts.check_shape(team)?;
    check_reduced(team, reduced)?;
    let dynamic = team.value(profile)?;
    let static_value = evaluate(reduced, &strategic_measure_of(reduced, profile)?)?;
    Ok((dynamic, static_value))
}

/// Randomized counterpart of [`verify_reduction`].
pub fn verify_reduction_behavioral(
    team: &SequentialFiniteTeam,
    artifacts: &ReductionArtifacts,
    reduced: &FiniteStaticTeam,
    policy: &BehavioralPolicy,
) -> Result<(f64, f64)> {
    artifacts.check_shape(team)?;
    check_reduced(team, reduced)?;
    let dynamic = team.value_behavioral(policy)?;
    let static_value = evaluate(reduced, &strategic_measure_of_behavioral(reduced, policy)?)?;
    Ok((dynamic, static_value))
}

fn check_reduced(team: &SequentialFiniteTeam, reduced: &FiniteStaticTeam) -> Result<()> {
    if reduced.obs_sizes() != team.obs_sizes()
        || reduced.act_sizes() != team.act_sizes()
        || reduced.omega0_size() != team.omega0_size()
    {
        return Err(TeamError::ShapeMismatch(
            "reduced team does not match the sequential team".into(),
        ));
    }
    Ok(())
}
