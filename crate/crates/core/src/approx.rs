//! Quantized finite approximation of Witsenhausen's two-stage team and evaluation of the
//! extended policies on the continuous model.
//!
//! The continuous model: `y¹ ~ N(0, σ²)`, `u¹ = γ¹(y¹)`, `y² = u¹ + v` with `v ~ N(0, 1)`,
//! `u² = γ²(y²)`, cost `k²(u¹ − y¹)² + (u² − u¹)²`. After the static reduction `y²` is a
//! standard normal independent of `y¹` and the cost is multiplied by the density of the
//! measurement kernel. The finite team quantizes the kernel itself: the reduced cost in
//! cell `j` of `y²` carries `P(u¹ + v ∈ S_j) / P(v ∈ S_j)`, which converges to
//! `exp(−((u¹)² − 2y²u¹)/2)` as the cells shrink and keeps the finite team an exact
//! reduction of a quantized-measurement team.

use gauss_quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Result, TeamError};
use crate::model::{profile_value, DeterministicProfile, FiniteStaticTeam, Sense};

/// Half-width added to the `u¹` range to get the `y²` range (in units of the noise std).
pub const Y2_MARGIN: f64 = 5.0;
/// Points of the golden-section bracket scan in [`affine_benchmark`].
const AFFINE_SCAN: usize = 2001;
const AFFINE_TOL: f64 = 1e-10;

/// Uniform nearest-neighbor quantizer on `[−M, M]` with an overflow symbol.
///
/// Symbol `0` is the overflow symbol; symbols `1..=n` are the cells from left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    range: f64,
    levels: Vec<f64>,
}

pub fn make_uniform_quantizer(m: f64, n: usize) -> Result<Quantizer> {
    if !(m.is_finite() && m > 0.0) {
        return Err(TeamError::validation("M", format!("range must be positive, got {m}")));
    }
    if n == 0 {
        return Err(TeamError::validation("n", "need at least one level"));
    }
    let w = 2.0 * m / n as f64;
    let levels = (0..n).map(|j| -m + (j as f64 + 0.5) * w).collect();
    Ok(Quantizer { range: m, levels })
}

impl Quantizer {
    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Levels plus the overflow symbol.
    pub fn num_symbols(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn cell_width(&self) -> f64 {
        2.0 * self.range / self.levels.len() as f64
    }

    /// Symbol of `t`; points equidistant from two levels go to the lower one.
    pub fn symbol(&self, t: f64) -> usize {
        if !(-self.range..=self.range).contains(&t) {
            return 0;
        }
        let pos = ((t + self.range) / self.cell_width()).ceil() as isize - 1;
        pos.clamp(0, self.levels.len() as isize - 1) as usize + 1
    }

    /// Representative of `t`: its level, or the nearest boundary level when out of range.
    pub fn quantize(&self, t: f64) -> f64 {
        match self.symbol(t) {
            0 if t < 0.0 => self.levels[0],
            0 => *self.levels.last().expect("at least one level"),
            s => self.levels[s - 1],
        }
    }

    /// Interval of cell symbol `s ≥ 1`.
    pub fn cell(&self, s: usize) -> (f64, f64) {
        let w = self.cell_width();
        let lo = -self.range + (s - 1) as f64 * w;
        (lo, lo + w)
    }
}

/// Upper tail `P(Z > x)` of a standard normal.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `P(a < Z ≤ b)` for a standard normal, computed on the side that avoids cancellation.
pub fn normal_mass(a: f64, b: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    if a >= 0.0 {
        normal_sf(a) - normal_sf(b)
    } else if b <= 0.0 {
        normal_sf(-b) - normal_sf(-a)
    } else {
        1.0 - normal_sf(-a) - normal_sf(b)
    }
}

/// Witsenhausen's instance: cost `k²(u¹ − y¹)² + (u² − u¹)²`, `y¹ ~ N(0, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitsenhausenInstance {
    pub k: f64,
    pub sigma: f64,
}

impl WitsenhausenInstance {
    pub fn new(k: f64, sigma: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(TeamError::validation("k", format!("must be positive, got {k}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(TeamError::validation("sigma", format!("must be positive, got {sigma}")));
        }
        Ok(WitsenhausenInstance { k, sigma })
    }

    /// Density of the measurement kernel relative to the reduced `y²` law.
    pub fn density(u1: f64, y2: f64) -> f64 {
        (-(u1 * u1 - 2.0 * y2 * u1) / 2.0).exp()
    }

    /// Value of the affine first stage `u¹ = λ y¹` followed by the conditional mean.
    pub fn affine_value(&self, lambda: f64) -> f64 {
        let (k2, s2) = (self.k * self.k, self.sigma * self.sigma);
        let l2s2 = lambda * lambda * s2;
        k2 * s2 * (lambda - 1.0).powi(2) + l2s2 / (1.0 + l2s2)
    }
}

/// Action grid with nodes at every cell edge of an `n`-level quantizer on `[−M, M]`, plus
/// zero. Doubling `n` refines the grid without dropping nodes.
pub fn nested_grid(m: f64, n: usize) -> Vec<f64> {
    let w = 2.0 * m / n as f64;
    let mut g: Vec<f64> = (0..=n).map(|j| -m + j as f64 * w).collect();
    if n % 2 == 1 {
        g.push(0.0);
        g.sort_by(f64::total_cmp);
    } else {
        g[n / 2] = 0.0;
    }
    g
}

/// Quantizers, action grids and the quantized kernel of one finite approximation.
#[derive(Debug, Clone)]
pub struct WitsenhausenModel {
    pub inst: WitsenhausenInstance,
    pub qy1: Quantizer,
    pub qy2: Quantizer,
    pub grid_u1: Vec<f64>,
    pub grid_u2: Vec<f64>,
    /// Masses of the `y¹` symbols (overflow first).
    pub mu1: Vec<f64>,
    /// Masses of the `y²` symbols under the reduced (standard normal) law.
    pub mu2: Vec<f64>,
    /// `P(u¹ + v ∈ S_j)` for every `u¹` grid point and `y²` symbol `j`.
    kernel: Vec<f64>,
}

fn symbol_masses(q: &Quantizer, scale: f64, shift: f64) -> Vec<f64> {
    let m = q.range();
    let mut out = Vec::with_capacity(q.num_symbols());
    out.push(normal_sf((m - shift) / scale) + normal_sf((m + shift) / scale));
    for s in 1..q.num_symbols() {
        let (a, b) = q.cell(s);
        out.push(normal_mass((a - shift) / scale, (b - shift) / scale));
    }
    out
}

fn check_grid(name: &str, g: &[f64]) -> Result<()> {
    if g.is_empty() {
        return Err(TeamError::validation(name, "grid is empty"));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(TeamError::validation(name, "grid has a non-finite point"));
    }
    Ok(())
}

impl WitsenhausenModel {
    pub fn new(
        inst: WitsenhausenInstance,
        qy1: Quantizer,
        qy2: Quantizer,
        grid_u1: Vec<f64>,
        grid_u2: Vec<f64>,
    ) -> Result<Self> {
        check_grid("grid_u1", &grid_u1)?;
        check_grid("grid_u2", &grid_u2)?;
        let mut mu1 = symbol_masses(&qy1, inst.sigma, 0.0);
        let mut mu2 = symbol_masses(&qy2, 1.0, 0.0);
        crate::instances::renormalize(&mut mu1);
        crate::instances::renormalize(&mut mu2);
        let kernel = grid_u1.iter().flat_map(|&u| symbol_masses(&qy2, 1.0, u)).collect();
        Ok(WitsenhausenModel {
            inst,
            qy1,
            qy2,
            grid_u1,
            grid_u2,
            mu1,
            mu2,
            kernel,
        })
    }

    /// Standard layout: `y¹` on `[−Mσ, Mσ]`, both action grids nested on the same range,
    /// `y²` on that range widened by [`Y2_MARGIN`].
    pub fn standard(inst: WitsenhausenInstance, levels: usize, m_factor: f64) -> Result<Self> {
        if !(m_factor.is_finite() && m_factor > 0.0) {
            return Err(TeamError::validation(
                "M_factor",
                format!("must be positive, got {m_factor}"),
            ));
        }
        let m1 = m_factor * inst.sigma;
        let qy1 = make_uniform_quantizer(m1, levels)?;
        let grid = nested_grid(m1, levels);
        let qy2 = make_uniform_quantizer(m1 + Y2_MARGIN, levels)?;
        WitsenhausenModel::new(inst, qy1, qy2, grid.clone(), grid)
    }

    pub fn kernel(&self, a: usize, j: usize) -> f64 {
        self.kernel[a * self.qy2.num_symbols() + j]
    }

    /// Quantized reduced density `P(u¹ + v ∈ S_j) / P(v ∈ S_j)`; zero where `S_j` has no mass.
    pub fn density(&self, a: usize, j: usize) -> f64 {
        if self.mu2[j] > 0.0 {
            self.kernel(a, j) / self.mu2[j]
        } else {
            0.0
        }
    }

    /// First-stage cost `k²(u¹ − y¹)²` at the representative of symbol `i`. The overflow
    /// symbol averages its two boundary representatives, which carry equal mass.
    pub fn stage_one_cost(&self, i: usize, a: usize) -> f64 {
        let k2 = self.inst.k * self.inst.k;
        let u = self.grid_u1[a];
        if i == 0 {
            let levels = self.qy1.levels();
            let (lo, hi) = (levels[0], levels[levels.len() - 1]);
            k2 * 0.5 * ((u - lo).powi(2) + (u - hi).powi(2))
        } else {
            k2 * (u - self.qy1.levels()[i - 1]).powi(2)
        }
    }

    /// Expected cost of a profile computed from the model tables; agrees with
    /// `profile_value` on the built team.
    pub fn finite_value(&self, profile: &DeterministicProfile) -> f64 {
        let (g1, g2) = (&profile.maps()[0], &profile.maps()[1]);
        (0..self.qy1.num_symbols())
            .map(|i| {
                let a = g1[i];
                let u1 = self.grid_u1[a];
                let second: f64 = (0..self.qy2.num_symbols())
                    .map(|j| self.kernel(a, j) * (self.grid_u2[g2[j]] - u1).powi(2))
                    .sum();
                self.mu1[i] * (self.stage_one_cost(i, a) + second)
            })
            .sum()
    }

    fn cost_entry(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        let d = self.grid_u2[b] - self.grid_u1[a];
        (self.stage_one_cost(i, a) + d * d) * self.density(a, j)
    }

    /// The finite static team: observations are the quantizer symbols, actions the grid
    /// indices, the prior is `μ₁ ⊗ μ₂` and the cost carries the quantized density.
    pub fn build_team(&self) -> Result<FiniteStaticTeam> {
        let (n1, n2) = (self.qy1.num_symbols(), self.qy2.num_symbols());
        let (na, nb) = (self.grid_u1.len(), self.grid_u2.len());
        let cells = [n1, n2, na, nb].iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));
        match cells {
            Some(c) if c <= crate::model::MAX_CELLS => {}
            _ => {
                return Err(TeamError::TooLarge(format!(
                    "Witsenhausen team with {n1}×{n2} symbols and {na}×{nb} actions exceeds the cell cap"
                )))
            }
        }
        let prior: Vec<f64> = self
            .mu1
            .iter()
            .flat_map(|&p| self.mu2.iter().map(move |&q| p * q))
            .collect();
        let block = n2 * na * nb;
        let mut cost = vec![0.0; n1 * block];
        cost.par_chunks_mut(block).enumerate().for_each(|(i, chunk)| {
            for j in 0..n2 {
                for a in 0..na {
                    for b in 0..nb {
                        chunk[(j * na + a) * nb + b] = self.cost_entry(i, j, a, b);
                    }
                }
            }
        });
        FiniteStaticTeam::new(1, vec![n1, n2], vec![na, nb], prior, cost, Sense::Minimize)
    }

    fn nearest(grid: &[f64], t: f64) -> usize {
        let mut best = 0;
        for (a, &g) in grid.iter().enumerate() {
            if (g - t).abs() < (grid[best] - t).abs() {
                best = a;
            }
        }
        best
    }

    fn rep1(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.qy1.levels()[i - 1]
        }
    }

    fn rep2(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.qy2.levels()[j - 1]
        }
    }

    /// First stage given pointwise on representatives; the overflow symbol maps to the
    /// value at zero. The second stage is the best response.
    pub fn profile_from_first_stage(&self, first: impl Fn(f64) -> f64) -> DeterministicProfile {
        let g1: Vec<usize> = (0..self.qy1.num_symbols())
            .map(|i| Self::nearest(&self.grid_u1, first(self.rep1(i))))
            .collect();
        let g2 = self.best_second_stage(&g1, None);
        DeterministicProfile::new(vec![g1, g2])
    }

    /// Affine profile `u¹ = λ y¹`, `u² = λ²σ²/(1 + λ²σ²) · y²`, rounded to the grids.
    pub fn affine_profile(&self, lambda: f64) -> DeterministicProfile {
        let g1 = (0..self.qy1.num_symbols())
            .map(|i| Self::nearest(&self.grid_u1, lambda * self.rep1(i)))
            .collect();
        let l2s2 = (lambda * self.inst.sigma).powi(2);
        let gain = l2s2 / (1.0 + l2s2);
        let g2 = (0..self.qy2.num_symbols())
            .map(|j| Self::nearest(&self.grid_u2, gain * self.rep2(j)))
            .collect();
        DeterministicProfile::new(vec![g1, g2])
    }

    /// Best second stage for a first stage; keeps `current` on ties when given.
    pub fn best_second_stage(&self, g1: &[usize], current: Option<&[usize]>) -> Vec<usize> {
        (0..self.qy2.num_symbols())
            .map(|j| {
                let score = |b: usize| -> f64 {
                    let u2 = self.grid_u2[b];
                    g1.iter()
                        .enumerate()
                        .map(|(i, &a)| self.mu1[i] * self.kernel(a, j) * (u2 - self.grid_u1[a]).powi(2))
                        .sum()
                };
                argmin_keep(self.grid_u2.len(), current.map(|c| c[j]), score)
            })
            .collect()
    }

    /// Best first stage for a second stage; keeps `current` on ties when given.
    pub fn best_first_stage(&self, g2: &[usize], current: Option<&[usize]>) -> Vec<usize> {
        let second: Vec<f64> = (0..self.grid_u1.len())
            .map(|a| {
                (0..self.qy2.num_symbols())
                    .map(|j| self.kernel(a, j) * (self.grid_u2[g2[j]] - self.grid_u1[a]).powi(2))
                    .sum()
            })
            .collect();
        (0..self.qy1.num_symbols())
            .into_par_iter()
            .map(|i| {
                argmin_keep(self.grid_u1.len(), current.map(|c| c[i]), |a| {
                    self.stage_one_cost(i, a) + second[a]
                })
            })
            .collect()
    }
}

fn argmin_keep(n: usize, current: Option<usize>, score: impl Fn(usize) -> f64) -> usize {
    let mut best = current.unwrap_or(0);
    let mut best_v = score(best);
    for a in 0..n {
        if a == best {
            continue;
        }
        let v = score(a);
        if v < best_v {
            best = a;
            best_v = v;
        }
    }
    best
}

/// Best affine first stage: `(λ*, J(λ*))`.
///
/// `J(λ)` is bimodal on `[0, 2]` for small `k`, so the minimum is bracketed by a scan and
/// then refined by golden-section search.
pub fn affine_benchmark(inst: &WitsenhausenInstance) -> (f64, f64) {
    let f = |l: f64| inst.affine_value(l);
    let h = 2.0 / (AFFINE_SCAN - 1) as f64;
    let mut best = 0;
    for s in 1..AFFINE_SCAN {
        if f(s as f64 * h) < f(best as f64 * h) {
            best = s;
        }
    }
    let mut lo = (best.saturating_sub(1)) as f64 * h;
    let mut hi = ((best + 1).min(AFFINE_SCAN - 1)) as f64 * h;
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > AFFINE_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut lambda = 0.5 * (lo + hi);
    // The scan endpoints are candidates too.
    for cand in [0.0, 2.0] {
        if f(cand) < f(lambda) {
            lambda = cand;
        }
    }
    (lambda, f(lambda))
}

/// Result of the alternating stage optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct WitsenhausenSolution {
    pub finite_value: f64,
    pub profile: DeterministicProfile,
    /// Name of the initialization that produced the kept profile.
    pub init: String,
    pub rounds: usize,
}

/// Alternating stage optimization on the finite team from several initializations: zero,
/// identity, best affine, two-point signaling `±σ`, two seeded random first stages, and
/// `extra` when given. The best run is kept; ties go to the earliest initialization.
pub fn solve_witsenhausen(
    team: &FiniteStaticTeam,
    model: &WitsenhausenModel,
    max_rounds: usize,
    seed: u64,
    extra: Option<&DeterministicProfile>,
) -> Result<WitsenhausenSolution> {
    let (n1, n2) = (model.qy1.num_symbols(), model.qy2.num_symbols());
    if team.obs_sizes() != [n1, n2] || team.act_sizes() != [model.grid_u1.len(), model.grid_u2.len()] {
        return Err(TeamError::ShapeMismatch("team was not built from this model".into()));
    }
    let sigma = model.inst.sigma;
    let mut inits: Vec<(String, DeterministicProfile)> = vec![
        ("zero".into(), model.profile_from_first_stage(|_| 0.0)),
        ("identity".into(), model.affine_profile(1.0)),
        ("affine".into(), model.affine_profile(affine_benchmark(&model.inst).0)),
        (
            "two-point".into(),
            model.profile_from_first_stage(|y| sigma * y.signum()),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for r in 0..2 {
        let g1: Vec<usize> = (0..n1).map(|_| rng.random_range(0..model.grid_u1.len())).collect();
        let g2 = model.best_second_stage(&g1, None);
        inits.push((format!("random-{r}"), DeterministicProfile::new(vec![g1, g2])));
    }
    if let Some(p) = extra {
        p.validate_for(team)?;
        inits.push(("warm-start".into(), p.clone()));
    }

    let mut best: Option<WitsenhausenSolution> = None;
    for (name, init) in inits {
        let (profile, rounds) = alternate(team, model, init, max_rounds);
        let value = profile_value(team, &profile);
        if best.as_ref().is_none_or(|b| value < b.finite_value) {
            best = Some(WitsenhausenSolution {
                finite_value: value,
                profile,
                init: name,
                rounds,
            });
        }
    }
    Ok(best.expect("at least one initialization"))
}

fn alternate(
    team: &FiniteStaticTeam,
    model: &WitsenhausenModel,
    init: DeterministicProfile,
    max_rounds: usize,
) -> (DeterministicProfile, usize) {
    let mut g1 = init.maps()[0].clone();
    let mut g2 = init.maps()[1].clone();
    let mut value = profile_value(team, &init);
    let mut rounds = 0;
    while rounds < max_rounds {
        rounds += 1;
        let new2 = model.best_second_stage(&g1, Some(&g2));
        let new1 = model.best_first_stage(&new2, Some(&g1));
        let candidate = DeterministicProfile::new(vec![new1.clone(), new2.clone()]);
        let v = profile_value(team, &candidate);
        let changed = new1 != g1 || new2 != g2;
        if v > value || !changed {
            break;
        }
        g1 = new1;
        g2 = new2;
        value = v;
    }
    (DeterministicProfile::new(vec![g1, g2]), rounds)
}

/// Maps a profile of a coarser model onto a finer one whose cells and grids nest in it.
pub fn lift_profile(
    coarse: &WitsenhausenModel,
    profile: &DeterministicProfile,
    fine: &WitsenhausenModel,
) -> Result<DeterministicProfile> {
    let find = |grid: &[f64], t: f64| -> Result<usize> {
        grid.iter()
            .position(|&g| (g - t).abs() <= 1e-12 * (1.0 + t.abs()))
            .ok_or_else(|| TeamError::ShapeMismatch(format!("grid point {t} missing from the finer grid")))
    };
    let lift = |qc: &Quantizer, qf: &Quantizer, map: &[usize], gc: &[f64], gf: &[f64]| -> Result<Vec<usize>> {
        (0..qf.num_symbols())
            .map(|s| {
                let cs = if s == 0 { 0 } else { qc.symbol(qf.levels()[s - 1]) };
                find(gf, gc[map[cs]])
            })
            .collect()
    };
    Ok(DeterministicProfile::new(vec![
        lift(
            &coarse.qy1,
            &fine.qy1,
            &profile.maps()[0],
            &coarse.grid_u1,
            &fine.grid_u1,
        )?,
        lift(
            &coarse.qy2,
            &fine.qy2,
            &profile.maps()[1],
            &coarse.grid_u2,
            &fine.grid_u2,
        )?,
    ]))
}

/// Composite Gauss–Legendre rule: `points` nodes on each of `panels` panels per cell. The
/// panel count doubles until two successive values agree to `tol`, at most `max_doublings`
/// times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub points: usize,
    pub panels: usize,
    pub tol: f64,
    pub max_doublings: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            points: 8,
            panels: 2,
            tol: 1e-9,
            max_doublings: 6,
        }
    }
}

/// Value of an extended policy on the continuous model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuousValue {
    pub value: f64,
    /// Difference between the last two panel counts.
    pub error_estimate: f64,
    pub panels: usize,
}

fn composite(rule: &GaussLegendre, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * h;
            rule.integrate(lo, lo + h, &f)
        })
        .sum()
}

/// `∫_{|y| > M} (u − y)² φ_σ(y) dy`.
fn tail_square_moment(u: f64, sigma: f64, m: f64) -> f64 {
    let a = m / sigma;
    let (q, p) = (normal_sf(a), normal_pdf(a));
    let upper = u * u * q - 2.0 * u * sigma * p + sigma * sigma * (a * p + q);
    let lower = u * u * q + 2.0 * u * sigma * p + sigma * sigma * (a * p + q);
    upper + lower
}

fn extended_value(
    model: &WitsenhausenModel,
    profile: &DeterministicProfile,
    rule: &GaussLegendre,
    panels: usize,
) -> f64 {
    let (g1, g2) = (&profile.maps()[0], &profile.maps()[1]);
    let (k2, sigma) = (model.inst.k * model.inst.k, model.inst.sigma);
    let m2 = model.qy2.range();
    // E[(γ²(Q(u¹ + v)) − u¹)²] for every first-stage action in use.
    let inner = |a: usize| -> f64 {
        let u1 = model.grid_u1[a];
        let tail = normal_sf(m2 - u1) + normal_sf(m2 + u1);
        let mut s = tail * (model.grid_u2[g2[0]] - u1).powi(2);
        for j in 1..model.qy2.num_symbols() {
            let (lo, hi) = model.qy2.cell(j);
            let mass = composite(rule, lo, hi, panels, |y| normal_pdf(y - u1));
            s += mass * (model.grid_u2[g2[j]] - u1).powi(2);
        }
        s
    };
    let mut cache = vec![None; model.grid_u1.len()];
    let mut inner_at = |a: usize| -> f64 { *cache[a].get_or_insert_with(|| inner(a)) };

    let m1 = model.qy1.range();
    let u0 = model.grid_u1[g1[0]];
    let tail_mass = 2.0 * normal_sf(m1 / sigma);
    let mut total = k2 * tail_square_moment(u0, sigma, m1) + tail_mass * inner_at(g1[0]);
    for i in 1..model.qy1.num_symbols() {
        let (lo, hi) = model.qy1.cell(i);
        let u1 = model.grid_u1[g1[i]];
        let cost = composite(rule, lo, hi, panels, |y| {
            k2 * (u1 - y).powi(2) * normal_pdf(y / sigma) / sigma
        });
        let mass = composite(rule, lo, hi, panels, |y| normal_pdf(y / sigma) / sigma);
        total += cost + mass * inner_at(g1[i]);
    }
    total
}

fn gl_rule(points: usize) -> Result<GaussLegendre> {
    GaussLegendre::new(points).map_err(|e| TeamError::validation("quad.points", e.to_string()))
}

/// Expected cost of `u¹ = γ¹(Q₁(y¹))`, `u² = γ²(Q₂(y²))` on the continuous model.
pub fn extend_and_evaluate(
    model: &WitsenhausenModel,
    profile: &DeterministicProfile,
    quad: &QuadSpec,
) -> Result<ContinuousValue> {
    let maps = profile.maps();
    if maps.len() != 2
        || maps[0].len() != model.qy1.num_symbols()
        || maps[1].len() != model.qy2.num_symbols()
        || maps[0].iter().any(|&a| a >= model.grid_u1.len())
        || maps[1].iter().any(|&b| b >= model.grid_u2.len())
    {
        return Err(TeamError::ShapeMismatch("profile does not match the model".into()));
    }
    if quad.panels == 0 {
        return Err(TeamError::validation("quad.panels", "must be positive"));
    }
    let rule = gl_rule(quad.points)?;
    let mut panels = quad.panels;
    let mut prev = extended_value(model, profile, &rule, panels);
    let mut estimate = f64::INFINITY;
    for _ in 0..=quad.max_doublings {
        panels *= 2;
        let next = extended_value(model, profile, &rule, panels);
        estimate = (next - prev).abs();
        prev = next;
        if estimate <= quad.tol {
            return Ok(ContinuousValue {
                value: next,
                error_estimate: estimate,
                panels,
            });
        }
    }
    Err(TeamError::Quadrature {
        estimate,
        tolerance: quad.tol,
    })
}

/// Continuous value of the two-point signaling policy `u¹ = σ sign(y¹)`, `u² = σ sign(y²)`,
/// computed by quadrature over `[0, 12σ]` and doubled by symmetry.
pub fn two_point_reference(inst: &WitsenhausenInstance, quad: &QuadSpec) -> Result<f64> {
    let rule = gl_rule(quad.points)?;
    let (k2, s) = (inst.k * inst.k, inst.sigma);
    let value = |panels: usize| -> f64 {
        let first = composite(&rule, 0.0, 12.0 * s, panels * 48, |y| {
            k2 * (s - y).powi(2) * normal_pdf(y / s) / s
        });
        // Second stage errs when u¹ + v changes sign; the mistake costs (2σ)².
        let miss = composite(&rule, s, s + 40.0, panels * 40, normal_pdf);
        2.0 * first + 4.0 * s * s * miss
    };
    let mut panels = quad.panels.max(1);
    let mut prev = value(panels);
    for _ in 0..=quad.max_doublings {
        panels *= 2;
        let next = value(panels);
        let estimate = (next - prev).abs();
        prev = next;
        if estimate <= quad.tol {
            return Ok(next);
        }
    }
    Err(TeamError::Quadrature {
        estimate: f64::NAN,
        tolerance: quad.tol,
    })
}

/// Run parameters of the Witsenhausen pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitsenhausenConfig {
    pub k: f64,
    pub sigma: f64,
    pub n_levels: usize,
    /// Half-range of the `y¹` quantizer in units of `σ`.
    pub m_factor: f64,
    pub quad_panels: usize,
    pub seed: u64,
}

impl Default for WitsenhausenConfig {
    fn default() -> Self {
        WitsenhausenConfig {
            k: 0.2,
            sigma: 5.0,
            n_levels: 64,
            m_factor: 4.0,
            quad_panels: 2,
            seed: 0,
        }
    }
}

impl WitsenhausenConfig {
    pub fn instance(&self) -> Result<WitsenhausenInstance> {
        WitsenhausenInstance::new(self.k, self.sigma)
    }

    pub fn quad(&self) -> QuadSpec {
        QuadSpec {
            panels: self.quad_panels.max(1),
            ..QuadSpec::default()
        }
    }

    /// Grid sizes of the refinement chain: `n_levels` halved while the result stays at
    /// least 16, coarsest first.
    pub fn level_chain(&self) -> Vec<usize> {
        let mut chain = vec![self.n_levels];
        let mut n = self.n_levels;
        while n.is_multiple_of(2) && n / 2 >= 16 {
            n /= 2;
            chain.push(n);
        }
        chain.reverse();
        chain
    }
}

/// One grid size of a refinement run.
#[derive(Debug, Clone)]
pub struct RefinementStep {
    pub levels: usize,
    pub finite_value: f64,
    pub continuous: ContinuousValue,
    pub solution: WitsenhausenSolution,
    pub model: WitsenhausenModel,
}

/// Alternating rounds per initialization.
pub const WITSENHAUSEN_MAX_ROUNDS: usize = 500;

/// Solves every grid of the chain, warm-starting each from the previous profile.
pub fn solve_refinement_chain(cfg: &WitsenhausenConfig) -> Result<Vec<RefinementStep>> {
    let inst = cfg.instance()?;
    let quad = cfg.quad();
    let mut steps: Vec<RefinementStep> = Vec::new();
    for levels in cfg.level_chain() {
        let model = WitsenhausenModel::standard(inst, levels, cfg.m_factor)?;
        let team = model.build_team()?;
        let warm = match steps.last() {
            Some(prev) => Some(lift_profile(&prev.model, &prev.solution.profile, &model)?),
            None => None,
        };
        let solution = solve_witsenhausen(&team, &model, WITSENHAUSEN_MAX_ROUNDS, cfg.seed, warm.as_ref())?;
        drop(team);
        let continuous = extend_and_evaluate(&model, &solution.profile, &quad)?;
        steps.push(RefinementStep {
            levels,
            finite_value: solution.finite_value,
            continuous,
            solution,
            model,
        });
    }
    Ok(steps)
}
