//! Numerical checks of two constructive counterexamples: conditional independence lost under
//! setwise limits of square-wave policies, and the acausal gain of wide-sense admissible
//! policies in a frozen-state POMDP.
//!
//! Square-wave probabilities use closed-form interval lengths. With dyadic endpoints and
//! `n` a power of two every quantity is a dyadic rational, so the `f64` arithmetic is exact.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classical::{mixture_representation, MixtureFit};
use crate::error::{Result, TeamError};
use crate::linprog::LpStatus;
use crate::model::{FiniteStaticTeam, Sense, StrategicMeasure};

/// Square-wave policies of frequency `n`: both DMs play `1` on
/// `B_{n,1} = ∪_k [(2k−2)/(2n), (2k−1)/(2n))` and `0` elsewhere in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SquareWaveSystem {
    pub n: usize,
}

impl SquareWaveSystem {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(TeamError::validation("n", "frequency must be positive"));
        }
        Ok(SquareWaveSystem { n })
    }

    fn half_period(&self) -> f64 {
        1.0 / (2 * self.n) as f64
    }

    /// `L_{nk}` for `k = 1..=n`.
    pub fn left(&self, k: usize) -> (f64, f64) {
        let h = self.half_period();
        ((2 * k - 2) as f64 * h, (2 * k - 1) as f64 * h)
    }

    /// `R_{nk}` for `k = 1..=n`.
    pub fn right(&self, k: usize) -> (f64, f64) {
        let h = self.half_period();
        ((2 * k - 1) as f64 * h, (2 * k) as f64 * h)
    }

    /// `|[0, x] ∩ B_{n,1}|` for `x ∈ [0, 1]`.
    pub fn b1_length_below(&self, x: f64) -> f64 {
        let h = self.half_period();
        let periods = (x / (2.0 * h)).floor();
        let rest = x - periods * 2.0 * h;
        periods * h + rest.min(h)
    }

    /// Action of both DMs at `y`.
    pub fn action(&self, y: f64) -> usize {
        let h = self.half_period();
        usize::from(((y / h).floor() as i64) % 2 == 0)
    }
}

fn check_interval(s: f64, t: f64, hi: f64) -> Result<()> {
    if !(0.0 <= s && s <= t && t <= hi) {
        return Err(TeamError::validation(
            "interval",
            format!("need 0 ≤ s ≤ t ≤ {hi}, got [{s}, {t}]"),
        ));
    }
    Ok(())
}

/// `P_n(u¹ = a, y ∈ [s, t], u² = b)` with `y` uniform on `[0, 1]`.
pub fn square_wave_prob(n: usize, a: usize, interval: (f64, f64), b: usize) -> Result<f64> {
    let sys = SquareWaveSystem::new(n)?;
    let (s, t) = interval;
    check_interval(s, t, 1.0)?;
    if a > 1 || b > 1 {
        return Err(TeamError::validation("action", "square-wave actions are 0 or 1"));
    }
    if a != b {
        return Ok(0.0);
    }
    let ones = sys.b1_length_below(t) - sys.b1_length_below(s);
    Ok(if a == 1 { ones } else { (t - s) - ones })
}

/// Setwise limit `P(a, [s, t], b) = 1{a = b} (t − s) / 2`.
pub fn square_wave_limit(a: usize, interval: (f64, f64), b: usize) -> f64 {
    if a == b {
        0.5 * (interval.1 - interval.0)
    } else {
        0.0
    }
}

/// Every interval `[i/2^m, j/2^m]`, `0 ≤ i < j ≤ 2^m`.
pub fn dyadic_intervals(m: u32) -> Vec<(f64, f64)> {
    let d = 1usize << m;
    let scale = d as f64;
    (0..d)
        .flat_map(|i| (i + 1..=d).map(move |j| (i as f64 / scale, j as f64 / scale)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiRow {
    pub n: usize,
    pub max_deviation: f64,
    pub bound: f64,
    /// Largest gap between `P_n(u¹, u² | cell)` and the product of its marginals over the
    /// cells `L_{nk}`, `R_{nk}`.
    pub ci_residual: f64,
    /// `P_n(u¹ = 1 | y ∈ L_{nk}, u² = b)` is one for both `b` with positive mass.
    pub left_cells_forced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiReport {
    pub rows: Vec<CiRow>,
    pub intervals: usize,
    /// `P(u¹ = 1 | u² = 1)` under the limit.
    pub limit_conditional: f64,
    /// `P(u¹ = 1)` under the limit.
    pub limit_marginal: f64,
}

impl CiReport {
    pub fn deviations_within_bound(&self) -> bool {
        self.rows.iter().all(|r| r.max_deviation <= r.bound)
    }

    pub fn every_pn_is_conditionally_independent(&self) -> bool {
        self.rows.iter().all(|r| r.ci_residual == 0.0 && r.left_cells_forced)
    }

    pub fn limit_violates_independence(&self) -> bool {
        self.limit_conditional != self.limit_marginal
    }

    pub fn passed(&self) -> bool {
        self.deviations_within_bound()
            && self.every_pn_is_conditionally_independent()
            && self.limit_violates_independence()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "square-wave policies, {} test intervals", self.intervals);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "n = {:>5}  max |P_n - P| = {:.6e}  bound 1/(2n) = {:.6e}  ci residual = {:.1e}",
                r.n, r.max_deviation, r.bound, r.ci_residual
            );
        }
        let _ = writeln!(
            s,
            "limit: P(u1=1 | u2=1) = {}  vs  P(u1=1) = {}",
            self.limit_conditional, self.limit_marginal
        );
        let _ = writeln!(s, "deviation bound {}", verdict(self.deviations_within_bound()));
        let _ = writeln!(
            s,
            "P_n conditionally independent given y {}",
            verdict(self.every_pn_is_conditionally_independent())
        );
        let _ = writeln!(
            s,
            "limit breaks conditional independence {}",
            verdict(self.limit_violates_independence())
        );
        s
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Conditional-independence residual of `P_n` over its own cells.
fn square_wave_ci(n: usize) -> Result<(f64, bool)> {
    let sys = SquareWaveSystem::new(n)?;
    let mut residual: f64 = 0.0;
    let mut forced = true;
    for k in 1..=n {
        for (cell, is_left) in [(sys.left(k), true), (sys.right(k), false)] {
            let width = cell.1 - cell.0;
            let mut joint = [[0.0; 2]; 2];
            for (a, row) in joint.iter_mut().enumerate() {
                for (b, v) in row.iter_mut().enumerate() {
                    *v = square_wave_prob(n, a, cell, b)? / width;
                }
            }
            for a in 0..2 {
                for b in 0..2 {
                    let p1 = joint[a][0] + joint[a][1];
                    let p2 = joint[0][b] + joint[1][b];
                    residual = residual.max((joint[a][b] - p1 * p2).abs());
                }
            }
            if is_left {
                for b in 0..2 {
                    let col = joint[0][b] + joint[1][b];
                    if col > 0.0 && joint[1][b] / col != 1.0 {
                        forced = false;
                    }
                }
            }
        }
    }
    Ok((residual, forced))
}

/// Setwise deviations of `P_n` from the limit over `intervals`, the cellwise conditional
/// independence of each `P_n`, and the limit's conditionals.
pub fn verify_ci_failure(n_list: &[usize], intervals: &[(f64, f64)]) -> Result<CiReport> {
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut dev: f64 = 0.0;
        for &iv in intervals {
            for a in 0..2 {
                for b in 0..2 {
                    dev = dev.max((square_wave_prob(n, a, iv, b)? - square_wave_limit(a, iv, b)).abs());
                }
            }
        }
        let (ci_residual, left_cells_forced) = square_wave_ci(n)?;
        rows.push(CiRow {
            n,
            max_deviation: dev,
            bound: 1.0 / (2 * n) as f64,
            ci_residual,
            left_cells_forced,
        });
    }
    let whole = (0.0, 1.0);
    let joint11 = square_wave_limit(1, whole, 1);
    let u2_one = square_wave_limit(0, whole, 1) + joint11;
    Ok(CiReport {
        rows,
        intervals: intervals.len(),
        limit_conditional: joint11 / u2_one,
        limit_marginal: square_wave_limit(1, whole, 1) + square_wave_limit(1, whole, 0),
    })
}

/// CSV rows `n,max_deviation` under a versioned header.
pub fn deviation_csv(report: &CiReport) -> String {
    let mut s = String::from("# teamcorr-v1\nn,max_deviation\n");
    for r in &report.rows {
        let _ = writeln!(s, "{},{:.17e}", r.n, r.max_deviation);
    }
    s
}

/// Four-action variant on `y ∈ [0, 2]`: `y = v + x` with `v` uniform on `[0, 1]` and `x` a
/// fair bit. On `[0, 1]` both DMs play `1` on `B_{n,1}` and `0` elsewhere; on `(1, 2]` they
/// play `3` on `1 + B_{n,1}` and `2` elsewhere.
pub fn lc_prob(n: usize, a: usize, interval: (f64, f64), b: usize) -> Result<f64> {
    let (s, t) = interval;
    check_interval(s, t, 2.0)?;
    if a > 3 || b > 3 {
        return Err(TeamError::validation("action", "actions are 0..=3"));
    }
    if a != b {
        return Ok(0.0);
    }
    // Density ½ on [0, 2]; the lower half carries actions 0/1, the upper half 2/3.
    let (lo, hi, shift) = if a < 2 {
        (s.min(1.0), t.min(1.0), 0.0)
    } else {
        (s.max(1.0), t.max(1.0), 1.0)
    };
    Ok(0.5 * square_wave_prob(n, a % 2, (lo - shift, hi - shift), a % 2)?)
}

/// Limit of [`lc_prob`]: `¼ 1{a = b}` times the length of the interval's part on `a`'s half.
pub fn lc_limit(a: usize, interval: (f64, f64), b: usize) -> f64 {
    if a != b {
        return 0.0;
    }
    let (s, t) = interval;
    let len = if a < 2 {
        t.min(1.0) - s.min(1.0)
    } else {
        t.max(1.0) - s.max(1.0)
    };
    0.25 * len
}

/// Surrogate team: both DMs observe which half of `[0, 2]` holds `y`.
pub fn lc_surrogate_team() -> FiniteStaticTeam {
    let prior = vec![0.5, 0.0, 0.0, 0.5];
    FiniteStaticTeam::new(1, vec![2, 2], vec![4, 4], prior, vec![0.0; 64], Sense::Minimize)
        .expect("surrogate team is valid")
}

/// The limit measure on the surrogate: `u¹ = u²`, uniform over `{0, 1}` on the lower half
/// and over `{2, 3}` on the upper half.
pub fn lc_limit_on_surrogate(team: &FiniteStaticTeam) -> Result<StrategicMeasure> {
    let mut probs = vec![0.0; team.num_cells()];
    for (cell, pair) in [(0usize, [0usize, 1]), (1, [2, 3])] {
        let y = team.obs_index(&[cell, cell]);
        for a in pair {
            probs[team.cell_index(0, y, team.act_index(&[a, a]))] = lc_limit(a, (cell as f64, cell as f64 + 1.0), a);
        }
    }
    StrategicMeasure::from_probs(team, probs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LcReport {
    pub n: usize,
    pub max_deviation: f64,
    pub bound: f64,
    /// Largest conditional-independence gap of `P_n` on its own cells.
    pub pn_lr_residual: f64,
    pub mixture_status: String,
    /// Common-randomness mixture reproducing the limit on the surrogate, when one exists.
    pub mixture: Vec<(Vec<Vec<usize>>, f64)>,
    pub mixture_residual: f64,
    pub farkas: Option<Vec<f64>>,
}

impl LcReport {
    pub fn converges(&self) -> bool {
        self.max_deviation <= self.bound
    }

    pub fn pn_in_lr(&self) -> bool {
        self.pn_lr_residual <= 1e-12
    }

    /// True only when the mixture LP is infeasible.
    pub fn exclusion_certified(&self) -> bool {
        self.mixture_status == LpStatus::Infeasible.to_string()
    }

    pub fn passed(&self) -> bool {
        self.converges() && self.pn_in_lr() && self.exclusion_certified()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "four-action square-wave policies, n = {}", self.n);
        let _ = writeln!(
            s,
            "max |P_n - P| = {:.6e}  bound = {:.6e}  {}",
            self.max_deviation,
            self.bound,
            verdict(self.converges())
        );
        let _ = writeln!(
            s,
            "P_n in L_R on its cells: residual {:.1e}  {}",
            self.pn_lr_residual,
            verdict(self.pn_in_lr())
        );
        let _ = writeln!(s, "mixture LP on the two-cell surrogate: {}", self.mixture_status);
        if let Some(z) = &self.farkas {
            let _ = writeln!(s, "infeasibility certificate: {z:?}");
        }
        for (maps, w) in &self.mixture {
            let _ = writeln!(s, "  weight {w:.6}  u1 map {:?}  u2 map {:?}", maps[0], maps[1]);
        }
        let _ = writeln!(s, "limit excluded from L_C {}", verdict(self.exclusion_certified()));
        s
    }
}

/// Convergence of the four-action policies over dyadic intervals of `[0, 2]` at resolution
/// `2^-6`, membership of `P_n` in `L_R` on its own cells, and the mixture LP for the limit on
/// the two-cell surrogate.
pub fn verify_lc_failure(n: usize) -> Result<LcReport> {
    SquareWaveSystem::new(n)?;
    let mut dev: f64 = 0.0;
    for (s, t) in dyadic_intervals(7) {
        let iv = (2.0 * s, 2.0 * t);
        for a in 0..4 {
            dev = dev.max((lc_prob(n, a, iv, a)? - lc_limit(a, iv, a)).abs());
        }
    }
    // On every cell of either half both actions are fixed, so P_n factorizes exactly.
    let (residual, _) = square_wave_ci(n)?;
    let team = lc_surrogate_team();
    let target = lc_limit_on_surrogate(&team)?;
    let MixtureFit {
        status,
        support,
        residual: mixture_residual,
        farkas,
    } = mixture_representation(&team, &target)?;
    Ok(LcReport {
        n,
        max_deviation: dev,
        bound: 1.0 / (2 * n) as f64,
        pn_lr_residual: residual,
        mixture_status: status.to_string(),
        mixture: support.into_iter().map(|(p, w)| (p.maps().to_vec(), w)).collect(),
        mixture_residual,
        farkas,
    })
}

/// Pattern of the best deterministic action sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ActionPattern {
    /// `u_n` constant: rewarded when `x¹ · x² = 0`.
    Constant,
    /// `u_n` alternating: rewarded when `x¹ · x² = 1`.
    Alternating,
}

/// POMDP with state `(x¹, x², x³)`, uninformative observations and reward
/// `1{x³ ⊕ u = x¹ · x²}`, where `x³_{n+1} = u_n`.
///
/// `pi0` and the rows of `lambda` are indexed by `2x¹ + x²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PomdpCounterexample {
    pub pi0: [f64; 4],
    pub gamma0: [f64; 2],
    pub lambda: [[f64; 4]; 4],
}

fn check_distribution(name: &str, p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !x.is_finite() || x < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > crate::model::INPUT_TOL {
        return Err(TeamError::validation(
            name,
            format!("{p:?} is not a probability vector"),
        ));
    }
    Ok(())
}

const IDENTITY4: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

impl PomdpCounterexample {
    pub fn new(pi0: [f64; 4], gamma0: [f64; 2], lambda: [[f64; 4]; 4]) -> Result<Self> {
        check_distribution("pi0", &pi0)?;
        check_distribution("gamma0", &gamma0)?;
        for (r, row) in lambda.iter().enumerate() {
            check_distribution(&format!("lambda[{r}]"), row)?;
        }
        for s in 0..4 {
            let next: f64 = (0..4).map(|r| pi0[r] * lambda[r][s]).sum();
            if (next - pi0[s]).abs() > crate::model::INPUT_TOL {
                return Err(TeamError::validation("lambda", "pi0 is not invariant"));
            }
        }
        Ok(PomdpCounterexample { pi0, gamma0, lambda })
    }

    /// Frozen `(x¹, x²)`.
    pub fn frozen(pi0: [f64; 4], gamma0: [f64; 2]) -> Result<Self> {
        Self::new(pi0, gamma0, IDENTITY4)
    }

    /// `π0 = ½ δ_(0,0) + ½ δ_(1,1)`, `x³_0` uniform.
    pub fn balanced() -> Self {
        Self::frozen([0.5, 0.0, 0.0, 0.5], [0.5, 0.5]).expect("balanced instance is valid")
    }

    /// `π0(x¹ · x² = 1)`.
    pub fn prob_product_one(&self) -> f64 {
        self.pi0[3]
    }

    pub fn is_frozen(&self) -> bool {
        self.lambda == IDENTITY4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PomdpClassical {
    pub value: f64,
    pub pattern: ActionPattern,
}

/// Best average reward of an admissible (hence deterministic-sequence) policy:
/// `max{π0(x¹x² = 0), π0(x¹x² = 1)}`. Only the frozen-state kernel is supported.
pub fn pomdp_classical_value(ce: &PomdpCounterexample) -> Result<PomdpClassical> {
    if !ce.is_frozen() {
        return Err(TeamError::Unsupported(
            "classical value is certified only for the identity state kernel".into(),
        ));
    }
    let one = ce.prob_product_one();
    let zero = 1.0 - one;
    Ok(if zero >= one {
        PomdpClassical {
            value: zero,
            pattern: ActionPattern::Constant,
        }
    } else {
        PomdpClassical {
            value: one,
            pattern: ActionPattern::Alternating,
        }
    })
}

/// Exact expected average reward over steps `1..=T` of the action sequence `a_0, …, a_T`
/// under the frozen kernel.
pub fn sequence_value(ce: &PomdpCounterexample, actions: &[usize]) -> Result<f64> {
    if !ce.is_frozen() {
        return Err(TeamError::Unsupported(
            "sequence values need the identity state kernel".into(),
        ));
    }
    if actions.len() < 2 {
        return Err(TeamError::validation("actions", "need at least two actions"));
    }
    let one = ce.prob_product_one();
    let total: f64 = actions
        .windows(2)
        .map(|w| if (w[0] ^ w[1]) == 1 { one } else { 1.0 - one })
        .sum();
    Ok(total / (actions.len() - 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WideSenseRun {
    pub horizon: usize,
    /// Average of `1{x³_n ⊕ u_n = x¹_n x²_n}` over `n = 1..=T`.
    pub average_reward: f64,
    /// Fraction of `u_1, …, u_T` equal to one.
    pub ones_fraction: f64,
    pub final_action: usize,
}

fn sample(rng: &mut ChaCha8Rng, p: &[f64]) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &w) in p.iter().enumerate() {
        acc += w;
        if r < acc {
            return k;
        }
    }
    p.len() - 1
}

/// Simulates the clairvoyant realization `u_n = u_{n−1} ⊕ x¹_n x²_n` with `u_0` uniform. It
/// satisfies the pairwise rule of the wide-sense policy and collects reward one at every
/// step, which no causal policy can.
pub fn pomdp_widesense_sim(ce: &PomdpCounterexample, horizon: usize, seed: u64) -> Result<WideSenseRun> {
    if horizon == 0 {
        return Err(TeamError::validation("horizon", "must be at least one"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = sample(&mut rng, &ce.pi0);
    let mut u_prev = usize::from(rng.random_bool(0.5));
    let (mut reward, mut ones) = (0usize, 0usize);
    for _ in 1..=horizon {
        state = sample(&mut rng, &ce.lambda[state]);
        let x3 = u_prev;
        let prod = usize::from(state == 3);
        let u = u_prev ^ prod;
        reward += usize::from((x3 ^ u) == prod);
        ones += u;
        u_prev = u;
    }
    Ok(WideSenseRun {
        horizon,
        average_reward: reward as f64 / horizon as f64,
        ones_fraction: ones as f64 / horizon as f64,
        final_action: u_prev,
    })
}

/// Fraction of runs (seeds `seed..seed + runs`) whose final action is one.
pub fn pomdp_final_action_frequency(ce: &PomdpCounterexample, horizon: usize, runs: usize, seed: u64) -> Result<f64> {
    if runs == 0 {
        return Err(TeamError::validation("runs", "must be at least one"));
    }
    let mut ones = 0;
    for r in 0..runs {
        ones += pomdp_widesense_sim(ce, horizon, seed.wrapping_add(r as u64))?.final_action;
    }
    Ok(ones as f64 / runs as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PomdpReport {
    pub classical: PomdpClassical,
    pub widesense: WideSenseRun,
    pub final_action_frequency: f64,
    pub runs: usize,
}

impl PomdpReport {
    pub fn passed(&self) -> bool {
        self.widesense.average_reward == 1.0
            && (self.final_action_frequency - 0.5).abs() <= 3.0 / (self.runs as f64).sqrt()
            && self.classical.value < 1.0
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "wide-sense vs classical average reward: {:.1} vs {}",
            self.widesense.average_reward, self.classical.value
        );
        let _ = writeln!(s, "classical pattern: {:?}", self.classical.pattern);
        let _ = writeln!(
            s,
            "final action one in {:.4} of {} runs (uniform within {:.4})",
            self.final_action_frequency,
            self.runs,
            3.0 / (self.runs as f64).sqrt()
        );
        let _ = writeln!(s, "wide-sense gain {}", verdict(self.passed()));
        s
    }
}

/// Classical value, one clairvoyant run and the ensemble marginal check.
pub fn pomdp_report(ce: &PomdpCounterexample, horizon: usize, runs: usize, seed: u64) -> Result<PomdpReport> {
    Ok(PomdpReport {
        classical: pomdp_classical_value(ce)?,
        widesense: pomdp_widesense_sim(ce, horizon, seed)?,
        final_action_frequency: pomdp_final_action_frequency(ce, horizon.min(64), runs, seed)?,
        runs,
    })
}
