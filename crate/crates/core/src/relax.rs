//! Linear relaxations over strategic measures: non-signaling (NS), local-Markov (M) and the
//! centralized bound, together with dual certificates and the hierarchy report.
//!
//! Both LPs need a product prior `μ(ω0, y) = P0(ω0) ∏ Q^i(y^i)`; reduce a team with
//! [`crate::reduction::static_reduce`] first if needed. Conditional constraints are
//! linearized with auxiliary conditional tables scaled by the known `μ`, one family per DM:
//!
//! * NS: `Σ_{u^k} P(ω0, y, u) = μ(ω0, y) R_k(u^{-k}, y^{-k})`, `Σ_{u^{-k}} R_k(·, y^{-k}) = 1`.
//! * M: `Σ_{u^{-k}} P(ω0, y, u) = μ(ω0, y) S_k(u^k, y^k)`, `Σ_{u^k} S_k(·, y^k) = 1`.
//!
//! When `|Ω0| > 1`, NS also carries a joint family `P(ω0, y, u) = μ(ω0, y) T(u, y)`,
//! `Σ_u T(·, y) = 1`: the leave-one-out rows alone would let `u` depend on `ω0` (with one DM
//! they are empty). It is stored as family `N`, after the per-DM ones.
//!
//! Cells with `μ = 0` generate no conditional rows.

use std::fmt::Write as _;

use serde::Serialize;

use crate::classical::enumerate_optimal;
use crate::error::{Result, TeamError};
use crate::linprog::{solve_lp, LpProblem, LpSolution};
use crate::model::{strides, FiniteStaticTeam, Sense, StrategicMeasure};
use crate::quantum::{solve_xor_team, XorTeam, XOR_RESTARTS, XOR_TOL};

/// Largest tolerated deviation of the prior from the product of its marginals.
pub const PRODUCT_TOL: f64 = 1e-10;
/// Largest dense constraint matrix the builders will allocate.
pub const MAX_LP_ENTRIES: usize = 50_000_000;
/// Tolerance for certificates and the hierarchy chain.
pub const CHAIN_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RelaxationKind {
    NonSignaling,
    LocalMarkov,
}

impl std::fmt::Display for RelaxationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RelaxationKind::NonSignaling => "NS",
            RelaxationKind::LocalMarkov => "M",
        })
    }
}

/// How the conditional constraints of DM `k` split `(y, u)`.
///
/// For NS the action part is `u^{-k}` and the observation part `y^{-k}`; for M both are the
/// DM's own components. Family `N` (NS only, when `joint`) uses the whole of `u` and `y`.
#[derive(Debug, Clone)]
struct Split {
    kind: RelaxationKind,
    obs_sizes: Vec<usize>,
    act_sizes: Vec<usize>,
    joint: bool,
}

fn digit(index: usize, sizes: &[usize], strides: &[usize], k: usize) -> usize {
    (index / strides[k]) % sizes[k]
}

/// Row-major index of `index` over `sizes` with component `k` removed.
fn drop_component(index: usize, sizes: &[usize], k: usize) -> usize {
    let st = strides(sizes);
    let mut out = 0;
    for j in 0..sizes.len() {
        if j != k {
            out = out * sizes[j] + digit(index, sizes, &st, j);
        }
    }
    out
}

impl Split {
    fn new(team: &FiniteStaticTeam, kind: RelaxationKind) -> Self {
        Split {
            kind,
            obs_sizes: team.obs_sizes().to_vec(),
            act_sizes: team.act_sizes().to_vec(),
            joint: kind == RelaxationKind::NonSignaling && team.omega0_size() > 1,
        }
    }

    fn num_families(&self) -> usize {
        self.act_sizes.len() + usize::from(self.joint)
    }

    fn is_joint(&self, k: usize) -> bool {
        k == self.act_sizes.len()
    }

    fn num_act_parts(&self, k: usize) -> usize {
        if self.is_joint(k) {
            return self.act_sizes.iter().product();
        }
        match self.kind {
            RelaxationKind::NonSignaling => self.act_sizes.iter().product::<usize>() / self.act_sizes[k],
            RelaxationKind::LocalMarkov => self.act_sizes[k],
        }
    }

    fn num_obs_parts(&self, k: usize) -> usize {
        if self.is_joint(k) {
            return self.obs_sizes.iter().product();
        }
        match self.kind {
            RelaxationKind::NonSignaling => self.obs_sizes.iter().product::<usize>() / self.obs_sizes[k],
            RelaxationKind::LocalMarkov => self.obs_sizes[k],
        }
    }

    fn act_part(&self, k: usize, u: usize) -> usize {
        if self.is_joint(k) {
            return u;
        }
        match self.kind {
            RelaxationKind::NonSignaling => drop_component(u, &self.act_sizes, k),
            RelaxationKind::LocalMarkov => digit(u, &self.act_sizes, &strides(&self.act_sizes), k),
        }
    }

    fn obs_part(&self, k: usize, y: usize) -> usize {
        if self.is_joint(k) {
            return y;
        }
        match self.kind {
            RelaxationKind::NonSignaling => drop_component(y, &self.obs_sizes, k),
            RelaxationKind::LocalMarkov => digit(y, &self.obs_sizes, &strides(&self.obs_sizes), k),
        }
    }
}

/// Which constraint a row encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKey {
    /// `Σ_u P(ω0, y, u) = μ(ω0, y)`; `cell` indexes `Ω0 × Y`.
    Marginal { cell: usize },
    /// Conditional constraint of family `dm` (a DM, or `N` for the joint NS family) at `(ω0, y) = cell` for action part `part`.
    Conditional { dm: usize, cell: usize, part: usize },
    /// Normalization of DM `k`'s auxiliary table at observation part `part`.
    Normalization { dm: usize, part: usize },
}

/// A relaxation LP and its variable/row layout.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub kind: RelaxationKind,
    pub lp: LpProblem,
    /// `P(ω0, y, u)` occupies columns `0..num_cells` in the team's cell order.
    pub num_cells: usize,
    /// First column of DM `k`'s auxiliary table; entry `(p, q)` sits at
    /// `aux_offsets[k] + p * num_obs_parts(k) + q`.
    pub aux_offsets: Vec<usize>,
    pub rows: Vec<RowKey>,
    sense: Sense,
    split: Split,
}

impl Relaxation {
    /// Number of conditional families: one per DM, plus the joint NS family if present.
    pub fn num_families(&self) -> usize {
        self.split.num_families()
    }

    pub fn num_act_parts(&self, k: usize) -> usize {
        self.split.num_act_parts(k)
    }

    pub fn num_obs_parts(&self, k: usize) -> usize {
        self.split.num_obs_parts(k)
    }

    pub fn aux_index(&self, k: usize, act_part: usize, obs_part: usize) -> usize {
        self.aux_offsets[k] + act_part * self.num_obs_parts(k) + obs_part
    }
}

pub fn check_product_prior(team: &FiniteStaticTeam) -> Result<()> {
    let r = team.product_prior_residual();
    if r > PRODUCT_TOL {
        return Err(TeamError::NonProductPrior(format!(
            "deviation {r:.3e} from the product of marginals; apply reduction::static_reduce first"
        )));
    }
    Ok(())
}

fn build(team: &FiniteStaticTeam, kind: RelaxationKind) -> Result<Relaxation> {
    check_product_prior(team)?;
    let split = Split::new(team, kind);
    let n = split.num_families();
    let num_cells = team.num_cells();
    let mut aux_offsets = Vec::with_capacity(n);
    let mut num_vars = num_cells;
    for k in 0..n {
        aux_offsets.push(num_vars);
        num_vars += split.num_act_parts(k) * split.num_obs_parts(k);
    }
    let wy = team.omega0_size() * team.num_joint_obs();
    let positive = team.prior().iter().filter(|&&p| p > 0.0).count();
    let num_rows: usize = wy
        + (0..n)
            .map(|k| positive * split.num_act_parts(k) + split.num_obs_parts(k))
            .sum::<usize>();
    if (num_rows as f64) * (num_vars as f64) > MAX_LP_ENTRIES as f64 {
        return Err(TeamError::TooLarge(format!(
            "{kind} LP would have {num_rows} rows and {num_vars} columns"
        )));
    }

    let mut lp = LpProblem::new(num_vars);
    let sign = team.sense().sign();
    for (j, &c) in team.cost().iter().enumerate() {
        lp.set_cost(j, sign * c);
    }
    let nu = team.num_joint_actions();
    let ny = team.num_joint_obs();
    let mut rows = Vec::with_capacity(num_rows);
    let mut terms = Vec::new();
    for cell in 0..wy {
        terms.clear();
        terms.extend((0..nu).map(|u| (cell * nu + u, 1.0)));
        lp.add_constraint(&terms, team.prior()[cell]);
        rows.push(RowKey::Marginal { cell });
    }
    for k in 0..n {
        let parts = split.num_act_parts(k);
        let obs_parts = split.num_obs_parts(k);
        let act_part: Vec<usize> = (0..nu).map(|u| split.act_part(k, u)).collect();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); parts];
        for (u, &p) in act_part.iter().enumerate() {
            members[p].push(u);
        }
        for cell in 0..wy {
            let mu = team.prior()[cell];
            if mu <= 0.0 {
                continue;
            }
            let q = split.obs_part(k, cell % ny);
            for (p, us) in members.iter().enumerate() {
                terms.clear();
                terms.extend(us.iter().map(|&u| (cell * nu + u, 1.0)));
                terms.push((aux_offsets[k] + p * obs_parts + q, -mu));
                lp.add_constraint(&terms, 0.0);
                rows.push(RowKey::Conditional { dm: k, cell, part: p });
            }
        }
        for q in 0..obs_parts {
            terms.clear();
            terms.extend((0..parts).map(|p| (aux_offsets[k] + p * obs_parts + q, 1.0)));
            lp.add_constraint(&terms, 1.0);
            rows.push(RowKey::Normalization { dm: k, part: q });
        }
    }
    Ok(Relaxation {
        kind,
        lp,
        num_cells,
        aux_offsets,
        rows,
        sense: team.sense(),
        split,
    })
}

/// Non-signaling LP. The objective is `sign · c`, so the LP always minimizes.
pub fn build_ns_lp(team: &FiniteStaticTeam) -> Result<Relaxation> {
    build(team, RelaxationKind::NonSignaling)
}

/// Local-Markov LP, laid out like [`build_ns_lp`].
pub fn build_m_lp(team: &FiniteStaticTeam) -> Result<Relaxation> {
    build(team, RelaxationKind::LocalMarkov)
}

/// Optimal value of a relaxation together with an optimal measure.
#[derive(Debug, Clone)]
pub struct RelaxSolution {
    /// Value in the team's own sense.
    pub value: f64,
    pub measure: StrategicMeasure,
    pub lp: LpSolution,
}

pub fn solve_relaxation(team: &FiniteStaticTeam, relax: &Relaxation) -> Result<RelaxSolution> {
    let sol = solve_lp(&relax.lp)?;
    if !sol.is_optimal() {
        return Err(TeamError::Numeric(format!("{} LP ended {}", relax.kind, sol.status)));
    }
    let probs: Vec<f64> = sol.x[..relax.num_cells].iter().map(|p| p.max(0.0)).collect();
    Ok(RelaxSolution {
        value: relax.sense.sign() * sol.objective,
        measure: StrategicMeasure::from_probs(team, probs)?,
        lp: sol,
    })
}

pub fn solve_ns(team: &FiniteStaticTeam) -> Result<RelaxSolution> {
    solve_relaxation(team, &build_ns_lp(team)?)
}

pub fn solve_m(team: &FiniteStaticTeam) -> Result<RelaxSolution> {
    solve_relaxation(team, &build_m_lp(team)?)
}

/// `Σ_{ω0,y} μ(ω0, y) · opt_u c(ω0, y, u)`: the value with every DM seeing everything.
pub fn centralized_bound(team: &FiniteStaticTeam) -> f64 {
    let nu = team.num_joint_actions();
    let sense = team.sense();
    team.prior()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(cell, &p)| {
            let row = &team.cost()[cell * nu..(cell + 1) * nu];
            p * row[1..].iter().fold(row[0], |a, &b| sense.best(a, b))
        })
        .sum()
}

fn conditional_residual(team: &FiniteStaticTeam, measure: &StrategicMeasure, kind: RelaxationKind) -> f64 {
    let split = Split::new(team, kind);
    let nu = team.num_joint_actions();
    let ny = team.num_joint_obs();
    let mut worst = measure.marginal_residual(team);
    for k in 0..split.num_families() {
        let parts = split.num_act_parts(k);
        let act_part: Vec<usize> = (0..nu).map(|u| split.act_part(k, u)).collect();
        // Range of each conditional over the cells sharing an observation part.
        let mut lo = vec![f64::INFINITY; parts * split.num_obs_parts(k)];
        let mut hi = vec![f64::NEG_INFINITY; lo.len()];
        for (cell, &mu) in team.prior().iter().enumerate() {
            if mu <= 0.0 {
                continue;
            }
            let q = split.obs_part(k, cell % ny);
            let mut sums = vec![0.0; parts];
            for u in 0..nu {
                sums[act_part[u]] += measure.probs()[cell * nu + u];
            }
            for (p, s) in sums.iter().enumerate() {
                let v = s / mu;
                let idx = p * split.num_obs_parts(k) + q;
                lo[idx] = lo[idx].min(v);
                hi[idx] = hi[idx].max(v);
            }
        }
        for (l, h) in lo.iter().zip(&hi) {
            if h.is_finite() {
                worst = worst.max(h - l);
            }
        }
    }
    worst
}

/// Largest violation of the non-signaling conditions: for each DM `k`, the law of
/// `u^{-k}` given `(ω0, y)` must not depend on `(ω0, y^k)`, and the law of `u` given
/// `(ω0, y)` must not depend on `ω0`. Includes the marginal residual.
pub fn ns_residual(team: &FiniteStaticTeam, measure: &StrategicMeasure) -> f64 {
    conditional_residual(team, measure, RelaxationKind::NonSignaling)
}

/// Largest violation of the local-Markov conditions `P(u^k | ω0, y) = P(u^k | y^k)`.
pub fn m_residual(team: &FiniteStaticTeam, measure: &StrategicMeasure) -> f64 {
    conditional_residual(team, measure, RelaxationKind::LocalMarkov)
}

/// Dual multipliers of a relaxation grouped by constraint family, with their check.
///
/// With `c' = sign · c`, the multipliers satisfy, up to `max_violation`,
/// `α(ω0,y) + Σ_k β_k(ω0,y,p_k(u)) ≤ c'(ω0,y,u)` for every cell and
/// `γ_k(q) − Σ_{(ω0,y) : q_k(y) = q} μ(ω0,y) β_k(ω0,y,p) ≤ 0` for every auxiliary entry.
/// Then `Σ μ α + Σ_k Σ_q γ_k(q)` is a lower bound on `c'`-cost over the relaxation, hence
/// `bound` (in the team's sense) bounds every classical, quantum and relaxed value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualReport {
    pub kind: RelaxationKind,
    pub sense: Sense,
    /// `α` over `Ω0 × Y`.
    pub alpha: Vec<f64>,
    /// `β_k` over `Ω0 × Y × parts_k` (zero where `μ = 0`), one entry per family.
    pub beta: Vec<Vec<f64>>,
    /// `γ_k` over observation parts.
    pub gamma: Vec<Vec<f64>>,
    /// Certified bound in the team's sense.
    pub bound: f64,
    /// Primal LP value in the team's sense.
    pub lp_value: f64,
    /// Largest violation of the dual inequalities.
    pub max_violation: f64,
    pub verified: bool,
}

pub fn dual_certificate(team: &FiniteStaticTeam, relax: &Relaxation, sol: &LpSolution) -> Result<DualReport> {
    if !sol.is_optimal() {
        return Err(TeamError::Numeric(format!(
            "dual certificate needs an optimal solution, got {}",
            sol.status
        )));
    }
    if sol.duals.len() != relax.rows.len() {
        return Err(TeamError::ShapeMismatch(
            "solution does not belong to this relaxation".into(),
        ));
    }
    let n = relax.num_families();
    let nu = team.num_joint_actions();
    let ny = team.num_joint_obs();
    let wy = team.omega0_size() * ny;
    let mut alpha = vec![0.0; wy];
    let mut beta: Vec<Vec<f64>> = (0..n).map(|k| vec![0.0; wy * relax.num_act_parts(k)]).collect();
    let mut gamma: Vec<Vec<f64>> = (0..n).map(|k| vec![0.0; relax.num_obs_parts(k)]).collect();
    for (row, &lam) in relax.rows.iter().zip(&sol.duals) {
        match *row {
            RowKey::Marginal { cell } => alpha[cell] = lam,
            RowKey::Conditional { dm, cell, part } => beta[dm][cell * relax.num_act_parts(dm) + part] = lam,
            RowKey::Normalization { dm, part } => gamma[dm][part] = lam,
        }
    }

    let sign = team.sense().sign();
    let mut violation: f64 = 0.0;
    for cell in 0..wy {
        for u in 0..nu {
            let mut lhs = alpha[cell];
            for (k, b) in beta.iter().enumerate() {
                lhs += b[cell * relax.num_act_parts(k) + relax.split.act_part(k, u)];
            }
            violation = violation.max(lhs - sign * team.cost()[cell * nu + u]);
        }
    }
    for k in 0..n {
        let parts = relax.num_act_parts(k);
        let mut lhs: Vec<f64> = (0..parts * relax.num_obs_parts(k))
            .map(|idx| gamma[k][idx % relax.num_obs_parts(k)])
            .collect();
        for (cell, &mu) in team.prior().iter().enumerate() {
            if mu <= 0.0 {
                continue;
            }
            let q = relax.split.obs_part(k, cell % ny);
            for p in 0..parts {
                lhs[p * relax.num_obs_parts(k) + q] -= mu * beta[k][cell * parts + p];
            }
        }
        violation = violation.max(lhs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)));
    }
    let b: f64 = team.prior().iter().zip(&alpha).map(|(m, a)| m * a).sum::<f64>() + gamma.iter().flatten().sum::<f64>();
    let bound = sign * b;
    let lp_value = sign * sol.objective;
    let violation = violation.max(0.0);
    Ok(DualReport {
        kind: relax.kind,
        sense: team.sense(),
        alpha,
        beta,
        gamma,
        bound,
        lp_value,
        max_violation: violation,
        verified: violation <= CHAIN_TOL && (bound - lp_value).abs() <= CHAIN_TOL,
    })
}

impl DualReport {
    /// Plain-text certificate: header, bound, check results, then every multiplier.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# teamcorr dual certificate");
        let _ = writeln!(s, "relaxation {}", self.kind);
        let _ = writeln!(s, "sense {}", self.sense);
        let _ = writeln!(s, "bound {:.17e}", self.bound);
        let _ = writeln!(s, "lp_value {:.17e}", self.lp_value);
        let _ = writeln!(s, "max_violation {:.3e}", self.max_violation);
        let _ = writeln!(s, "verified {}", self.verified);
        let _ = writeln!(s, "alpha {}", self.alpha.len());
        for v in &self.alpha {
            let _ = writeln!(s, "{v:.17e}");
        }
        for (k, b) in self.beta.iter().enumerate() {
            let _ = writeln!(s, "beta {k} {}", b.len());
            for v in b {
                let _ = writeln!(s, "{v:.17e}");
            }
        }
        for (k, g) in self.gamma.iter().enumerate() {
            let _ = writeln!(s, "gamma {k} {}", g.len());
            for v in g {
                let _ = writeln!(s, "{v:.17e}");
            }
        }
        s
    }
}

/// Correlation classes in hierarchy order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CorrelationClass {
    Classical,
    Quantum,
    NonSignaling,
    LocalMarkov,
    Centralized,
}

impl CorrelationClass {
    pub fn tag(self) -> &'static str {
        match self {
            CorrelationClass::Classical => "classical",
            CorrelationClass::Quantum => "quantum",
            CorrelationClass::NonSignaling => "NS",
            CorrelationClass::LocalMarkov => "M",
            CorrelationClass::Centralized => "CJ",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyReport {
    pub sense: Sense,
    /// Values from most to least restrictive class.
    pub entries: Vec<(CorrelationClass, f64)>,
    /// Adjacent pairs that go the wrong way by more than [`CHAIN_TOL`].
    pub violations: Vec<(CorrelationClass, CorrelationClass)>,
}

impl HierarchyReport {
    pub fn chain_holds(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn value(&self, class: CorrelationClass) -> Option<f64> {
        self.entries.iter().find(|(c, _)| *c == class).map(|(_, v)| *v)
    }
}

/// Values of every applicable class. The quantum value is included only when requested and
/// the team has XOR shape; it is a lower bound (for maximization) from the vector solver.
pub fn hierarchy_report(team: &FiniteStaticTeam, include_quantum_xor: bool) -> Result<HierarchyReport> {
    let classical = enumerate_optimal(team).map_err(|e| e.tagged("classical"))?.value;
    let quantum = if include_quantum_xor {
        match XorTeam::from_team(team) {
            Some(x) => Some(
                solve_xor_team(&x, XOR_RESTARTS, XOR_TOL, 0)
                    .map_err(|e| e.tagged("quantum"))?
                    .value_in_sense(team),
            ),
            None => None,
        }
    } else {
        None
    };
    let ns = solve_ns(team).map_err(|e| e.tagged("NS"))?.value;
    let m = solve_m(team).map_err(|e| e.tagged("M"))?.value;
    let cj = centralized_bound(team);

    let mut entries = vec![(CorrelationClass::Classical, classical)];
    if let Some(q) = quantum {
        entries.push((CorrelationClass::Quantum, q));
    }
    entries.push((CorrelationClass::NonSignaling, ns));
    entries.push((CorrelationClass::LocalMarkov, m));
    entries.push((CorrelationClass::Centralized, cj));
    let sense = team.sense();
    let violations = entries
        .windows(2)
        .filter(|w| sense.improves(w[0].1, w[1].1 - sense.sign() * CHAIN_TOL))
        .map(|w| (w[0].0, w[1].0))
        .collect();
    Ok(HierarchyReport {
        sense,
        entries,
        violations,
    })
}
