//! Quantum-correlated strategic measures.
//!
//! A strategy is a shared density matrix on `⊗_i C^{d_i}` and, for every DM and
//! observation, a POVM over the DM's actions. The induced conditional law is
//! `P(u | ω0, y) = Tr((M^{1,y¹}(u¹) ⊗ … ⊗ M^{N,y^N}(u^N)) ρ)`.
//!
//! For two-DM XOR teams the optimal quantum value reduces to a bilinear problem over unit
//! vectors, `max Σ g(y¹, y²) ⟨a_{y¹}, b_{y²}⟩`, which [`solve_xor_team`] attacks by
//! alternating maximization from seeded random starts.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TeamError};
use crate::model::{evaluate, FiniteStaticTeam, Sense, StrategicMeasure};

/// Tolerance for Hermiticity, positivity, trace and completeness checks.
pub const QUANTUM_TOL: f64 = 1e-10;
/// Largest joint Hilbert-space dimension accepted by [`QuantumStrategy::new`].
pub const MAX_JOINT_DIM: usize = 64;
pub const XOR_RESTARTS: usize = 32;
pub const XOR_TOL: f64 = 1e-13;
/// Observation-count cap for the vector solver.
pub const XOR_MAX_OBS: usize = 64;
/// Observation-count cap for exact sign enumeration.
pub const XOR_CLASSICAL_MAX_OBS: usize = 20;
const XOR_MAX_ITERS: usize = 100_000;

pub type CMatrix = DMatrix<Complex64>;

/// Real matrix lifted to complex entries.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| Complex64::new(x, 0.0)))
}

/// Rank-one projector onto `(cos θ, sin θ)`.
pub fn projector(theta: f64) -> CMatrix {
    let (s, c) = theta.sin_cos();
    real_matrix(2, 2, &[c * c, c * s, c * s, s * s])
}

/// `E_{a,b}` on `C^d`, zero-based.
pub fn matrix_unit(d: usize, a: usize, b: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(a, b)] = Complex64::new(1.0, 0.0);
    m
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_part(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `Tr(A B)` without forming the product.
fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut t = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            t += a[(i, j)] * b[(j, i)];
        }
    }
    t
}

/// Shared state and local measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumStrategy {
    dims: Vec<usize>,
    rho: CMatrix,
    /// `povms[i][y][u]`.
    povms: Vec<Vec<Vec<CMatrix>>>,
}

impl QuantumStrategy {
    /// Symmetrizes `ρ` and every POVM element, then checks the state and measurement axioms.
    pub fn new(dims: Vec<usize>, rho: CMatrix, povms: Vec<Vec<Vec<CMatrix>>>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) || povms.len() != dims.len() {
            return Err(TeamError::validation(
                "dims",
                "need one positive dimension and POVM family per DM",
            ));
        }
        let joint: usize = dims.iter().product();
        if joint > MAX_JOINT_DIM {
            return Err(TeamError::TooLarge(format!(
                "joint dimension {joint} exceeds {MAX_JOINT_DIM}"
            )));
        }
        if rho.nrows() != joint || rho.ncols() != joint {
            return Err(TeamError::validation(
                "rho",
                format!("expected a {joint}×{joint} matrix"),
            ));
        }
        if hermitian_defect(&rho) > QUANTUM_TOL {
            return Err(TeamError::validation("rho", "not Hermitian"));
        }
        let rho = hermitian_part(&rho);
        if (rho.trace().re - 1.0).abs() > QUANTUM_TOL {
            return Err(TeamError::validation(
                "rho",
                format!("trace {} is not 1", rho.trace().re),
            ));
        }
        if min_eigenvalue(&rho) < -QUANTUM_TOL {
            return Err(TeamError::validation("rho", "not positive semidefinite"));
        }
        let mut clean = Vec::with_capacity(povms.len());
        for (i, family) in povms.into_iter().enumerate() {
            let d = dims[i];
            let mut fam = Vec::with_capacity(family.len());
            for (y, elements) in family.into_iter().enumerate() {
                if elements.is_empty() {
                    return Err(TeamError::validation(format!("povms[{i}][{y}]"), "empty measurement"));
                }
                let mut total = CMatrix::zeros(d, d);
                let mut els = Vec::with_capacity(elements.len());
                for (u, m) in elements.into_iter().enumerate() {
                    let field = format!("povms[{i}][{y}][{u}]");
                    if m.nrows() != d || m.ncols() != d {
                        return Err(TeamError::validation(field, format!("expected a {d}×{d} matrix")));
                    }
                    if hermitian_defect(&m) > QUANTUM_TOL {
                        return Err(TeamError::validation(field, "not Hermitian"));
                    }
                    let m = hermitian_part(&m);
                    if min_eigenvalue(&m) < -QUANTUM_TOL {
                        return Err(TeamError::validation(field, "not positive semidefinite"));
                    }
                    total += &m;
                    els.push(m);
                }
                let defect = (total - CMatrix::identity(d, d))
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                if defect > QUANTUM_TOL {
                    return Err(TeamError::validation(
                        format!("povms[{i}][{y}]"),
                        "elements do not sum to the identity",
                    ));
                }
                fam.push(els);
            }
            clean.push(fam);
        }
        Ok(QuantumStrategy {
            dims,
            rho,
            povms: clean,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    pub fn povms(&self) -> &[Vec<Vec<CMatrix>>] {
        &self.povms
    }

    /// `P(u | y)` for a joint observation and action given as per-DM digits.
    pub fn conditional(&self, ys: &[usize], us: &[usize]) -> f64 {
        let mut k = self.povms[0][ys[0]][us[0]].clone();
        for i in 1..self.dims.len() {
            k = k.kronecker(&self.povms[i][ys[i]][us[i]]);
        }
        trace_of_product(&k, &self.rho).re
    }
}

/// Maximally entangled two-qubit state and the measurement angles that attain the
/// quantum CHSH value.
pub fn chsh_reference_strategy() -> QuantumStrategy {
    let mut rho = CMatrix::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            rho += matrix_unit(2, a, b).kronecker(&matrix_unit(2, a, b)).scale(0.5);
        }
    }
    let dm1 = vec![
        vec![projector(0.0), projector(PI / 2.0)],
        vec![projector(PI / 4.0), projector(3.0 * PI / 4.0)],
    ];
    let dm2 = vec![
        vec![projector(PI / 8.0), projector(5.0 * PI / 8.0)],
        vec![projector(7.0 * PI / 8.0), projector(3.0 * PI / 8.0)],
    ];
    QuantumStrategy::new(vec![2, 2], rho, vec![dm1, dm2]).expect("reference strategy is valid")
}

/// Strategic measure `μ(ω0, y) P(u | y)` of a quantum strategy and its value.
pub fn evaluate_quantum(team: &FiniteStaticTeam, qs: &QuantumStrategy) -> Result<(StrategicMeasure, f64)> {
    let n = team.num_dms();
    if qs.povms.len() != n {
        return Err(TeamError::ShapeMismatch(format!(
            "strategy has {} DMs, team has {n}",
            qs.povms.len()
        )));
    }
    for i in 0..n {
        if qs.povms[i].len() != team.obs_sizes()[i] || qs.povms[i].iter().any(|f| f.len() != team.act_sizes()[i]) {
            return Err(TeamError::ShapeMismatch(format!(
                "POVMs of DM {i} do not match its observation and action sizes"
            )));
        }
    }
    let ny = team.num_joint_obs();
    let nu = team.num_joint_actions();
    let mut table = vec![0.0; ny * nu];
    for y in 0..ny {
        let ys = team.obs_digits(y);
        for u in 0..nu {
            let p = qs.conditional(&ys, &team.act_digits(u));
            if p < -QUANTUM_TOL {
                return Err(TeamError::Numeric(format!("negative probability {p:.3e}")));
            }
            table[y * nu + u] = p.max(0.0);
        }
    }
    let mut probs = Vec::with_capacity(team.num_cells());
    for o in 0..team.omega0_size() {
        for y in 0..ny {
            let mu = team.prior_at(o, y);
            probs.extend(table[y * nu..(y + 1) * nu].iter().map(|p| mu * p));
        }
    }
    let measure = StrategicMeasure::from_probs(team, probs)?;
    let value = evaluate(team, &measure)?;
    Ok((measure, value))
}

/// Two-DM XOR team: reward `s(y)` when `u¹ ⊕ u² = 0` and `−s(y)` otherwise, so the
/// expected reward of correlated ±1 outputs is `Σ g(y¹, y²) E[a b]` with `g = μ s`.
///
/// The usual XOR game has `s = (−1)^{h}`; [`XorTeam::from_team`] also accepts real `s`,
/// in which case `h` records only its sign.
#[derive(Debug, Clone, PartialEq)]
pub struct XorTeam {
    mu: Vec<Vec<f64>>,
    h: Vec<Vec<u8>>,
    g: Vec<Vec<f64>>,
}

/// On-disk XOR team (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XorFile {
    pub mu: Vec<Vec<f64>>,
    pub h: Vec<Vec<u8>>,
}

impl XorTeam {
    pub fn new(mu: Vec<Vec<f64>>, h: Vec<Vec<u8>>) -> Result<Self> {
        let rows = mu.len();
        let cols = mu.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || mu.iter().any(|r| r.len() != cols) {
            return Err(TeamError::validation("mu", "must be a non-empty rectangular matrix"));
        }
        if h.len() != rows || h.iter().any(|r| r.len() != cols) {
            return Err(TeamError::validation("h", "must have the shape of mu"));
        }
        if h.iter().flatten().any(|&b| b > 1) {
            return Err(TeamError::validation("h", "entries must be 0 or 1"));
        }
        let flat: Vec<f64> = mu.iter().flatten().copied().collect();
        if flat.iter().any(|p| !p.is_finite() || *p < 0.0) || (flat.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(TeamError::validation("mu", "must be a probability matrix"));
        }
        let g = mu
            .iter()
            .zip(&h)
            .map(|(mr, hr)| mr.iter().zip(hr).map(|(&m, &b)| if b == 1 { -m } else { m }).collect())
            .collect();
        Ok(XorTeam { mu, h, g })
    }

    /// Recognizes a team with `Ω0` trivial, binary actions and
    /// `c(y,00) = c(y,11) = −c(y,01) = −c(y,10)`.
    pub fn from_team(team: &FiniteStaticTeam) -> Option<Self> {
        if team.num_dms() != 2 || team.omega0_size() != 1 || team.act_sizes() != [2, 2] {
            return None;
        }
        let (n1, n2) = (team.obs_sizes()[0], team.obs_sizes()[1]);
        let mut mu = vec![vec![0.0; n2]; n1];
        let mut h = vec![vec![0u8; n2]; n1];
        let mut g = vec![vec![0.0; n2]; n1];
        for y1 in 0..n1 {
            for y2 in 0..n2 {
                let y = team.obs_index(&[y1, y2]);
                let c = |u| team.cost_at(0, y, u);
                let s = c(0);
                let tol = 1e-12 * (1.0 + s.abs());
                if (c(3) - s).abs() > tol || (c(1) + s).abs() > tol || (c(2) + s).abs() > tol {
                    return None;
                }
                let m = team.prior_at(0, y);
                mu[y1][y2] = m;
                h[y1][y2] = u8::from(s < 0.0);
                g[y1][y2] = m * s;
            }
        }
        Some(XorTeam { mu, h, g })
    }

    pub fn from_file(file: XorFile) -> Result<Self> {
        XorTeam::new(file.mu, file.h)
    }

    pub fn mu(&self) -> &[Vec<f64>] {
        &self.mu
    }

    pub fn h(&self) -> &[Vec<u8>] {
        &self.h
    }

    pub fn g(&self) -> &[Vec<f64>] {
        &self.g
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.g.len(), self.g[0].len())
    }

    /// Equivalent maximize-sense team with reward `±s(y)`; `s = 0` where `μ = 0`.
    pub fn to_team(&self) -> Result<FiniteStaticTeam> {
        let (n1, n2) = self.shape();
        let mut prior = Vec::with_capacity(n1 * n2);
        let mut cost = Vec::with_capacity(n1 * n2 * 4);
        for y1 in 0..n1 {
            for y2 in 0..n2 {
                let m = self.mu[y1][y2];
                let s = if m > 0.0 { self.g[y1][y2] / m } else { 0.0 };
                prior.push(m);
                cost.extend([s, -s, -s, s]);
            }
        }
        FiniteStaticTeam::new(1, vec![n1, n2], vec![2, 2], prior, cost, Sense::Maximize)
    }
}

pub fn parse_xor(text: &str) -> Result<XorTeam> {
    let file: XorFile = serde_json::from_str(text).map_err(|e| TeamError::Parse(e.to_string()))?;
    XorTeam::from_file(file)
}

pub fn load_xor(path: impl AsRef<Path>) -> Result<XorTeam> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| TeamError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_xor(&text)
}

/// Exact classical XOR value `max_{a, b ∈ {±1}} Σ g a b`: enumerate `a`, then each `b_j`
/// takes the sign of its column sum.
pub fn xor_classical_value(x: &XorTeam) -> Result<f64> {
    let (n1, n2) = x.shape();
    if n1.min(n2) > XOR_CLASSICAL_MAX_OBS {
        return Err(TeamError::TooLarge(format!(
            "sign enumeration needs an observation count ≤ {XOR_CLASSICAL_MAX_OBS}"
        )));
    }
    let (g, n1, n2) = if n1 <= n2 {
        (x.g.clone(), n1, n2)
    } else {
        let t = (0..n2).map(|j| (0..n1).map(|i| x.g[i][j]).collect()).collect();
        (t, n2, n1)
    };
    let best = (0u64..1 << n1)
        .into_par_iter()
        .map(|mask| {
            (0..n2)
                .map(|j| {
                    (0..n1)
                        .map(|i| if mask >> i & 1 == 1 { -g[i][j] } else { g[i][j] })
                        .sum::<f64>()
                        .abs()
                })
                .sum::<f64>()
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(best)
}

/// Output of the vector solver.
#[derive(Debug, Clone, PartialEq)]
pub struct XorSolution {
    /// `Σ g ⟨a, b⟩` at the returned vectors: a lower bound on the quantum value.
    pub value: f64,
    /// Unit vectors for DM 1 observations.
    pub u: Vec<Vec<f64>>,
    /// Unit vectors for DM 2 observations.
    pub v: Vec<Vec<f64>>,
    pub classical_value: f64,
    /// Restart that produced `value`.
    pub restart: usize,
    /// Objective after each half-step of the winning restart.
    pub history: Vec<f64>,
}

impl XorSolution {
    /// Value in the sense of `team`: minimizing is maximizing with `−g`, whose optimum
    /// is the negated maximum.
    pub fn value_in_sense(&self, team: &FiniteStaticTeam) -> f64 {
        match team.sense() {
            Sense::Maximize => self.value,
            Sense::Minimize => -self.value,
        }
    }
}

fn standard_normal<R: rand::Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn random_unit<R: rand::Rng>(rng: &mut R, d: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| standard_normal(rng));
        let n = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}

struct Run {
    value: f64,
    u: Vec<DVector<f64>>,
    v: Vec<DVector<f64>>,
    history: Vec<f64>,
}

fn objective(g: &[Vec<f64>], u: &[DVector<f64>], v: &[DVector<f64>]) -> f64 {
    let mut s = 0.0;
    for (i, row) in g.iter().enumerate() {
        for (j, &gij) in row.iter().enumerate() {
            if gij != 0.0 {
                s += gij * u[i].dot(&v[j]);
            }
        }
    }
    s
}

fn alternate(g: &[Vec<f64>], tol: f64, rng: &mut ChaCha8Rng) -> Run {
    let n1 = g.len();
    let n2 = g[0].len();
    let d = n1 + n2;
    let mut u: Vec<DVector<f64>> = (0..n1).map(|_| random_unit(rng, d)).collect();
    let mut v: Vec<DVector<f64>> = (0..n2).map(|_| random_unit(rng, d)).collect();
    let mut history = vec![objective(g, &u, &v)];
    for _ in 0..XOR_MAX_ITERS {
        let before = *history.last().expect("non-empty");
        for (j, vj) in v.iter_mut().enumerate() {
            let mut s = DVector::zeros(d);
            for (i, ui) in u.iter().enumerate() {
                s.axpy(g[i][j], ui, 1.0);
            }
            let n = s.norm();
            *vj = if n > 1e-300 { s / n } else { random_unit(rng, d) };
        }
        history.push(objective(g, &u, &v));
        for (i, ui) in u.iter_mut().enumerate() {
            let mut s = DVector::zeros(d);
            for (j, vj) in v.iter().enumerate() {
                s.axpy(g[i][j], vj, 1.0);
            }
            let n = s.norm();
            *ui = if n > 1e-300 { s / n } else { random_unit(rng, d) };
        }
        let after = objective(g, &u, &v);
        history.push(after);
        if after - before < tol {
            break;
        }
    }
    Run {
        value: *history.last().expect("non-empty"),
        u,
        v,
        history,
    }
}

/// Best of `restarts` alternating-maximization runs. Restart `r` draws from the ChaCha8
/// stream `r` of `seed`, so the result does not depend on scheduling; ties go to the
/// smallest restart index.
pub fn solve_xor_team(x: &XorTeam, restarts: usize, tol: f64, seed: u64) -> Result<XorSolution> {
    let (n1, n2) = x.shape();
    if n1 > XOR_MAX_OBS || n2 > XOR_MAX_OBS {
        return Err(TeamError::TooLarge(format!(
            "XOR solver handles at most {XOR_MAX_OBS} observations per DM"
        )));
    }
    if restarts == 0 {
        return Err(TeamError::validation("restarts", "need at least one restart"));
    }
    let runs: Vec<Run> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            alternate(&x.g, tol, &mut rng)
        })
        .collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.value > runs[best].value {
            best = r;
        }
    }
    let run = runs.into_iter().nth(best).expect("restarts > 0");
    let classical_value = if n1.min(n2) <= XOR_CLASSICAL_MAX_OBS {
        xor_classical_value(x)?
    } else {
        f64::NAN
    };
    Ok(XorSolution {
        value: run.value,
        u: run.u.iter().map(|c| c.iter().copied().collect()).collect(),
        v: run.v.iter().map(|c| c.iter().copied().collect()).collect(),
        classical_value,
        restart: best,
        history: run.history,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;
    use crate::classical::enumerate_optimal;
    use crate::instances::{chsh_team, TeamSampler};
    use crate::model::{strategic_measure_of_behavioral, BehavioralPolicy};
    use crate::relax::ns_residual;

    const HI: f64 = (2.0 + std::f64::consts::SQRT_2) / 8.0;
    const LO: f64 = (2.0 - std::f64::consts::SQRT_2) / 8.0;

    fn chsh_xor() -> XorTeam {
        XorTeam::new(vec![vec![0.25; 2]; 2], vec![vec![0, 0], vec![0, 1]]).unwrap()
    }

    #[test]
    fn reference_state_and_projectors_are_valid() {
        let qs = chsh_reference_strategy();
        assert!((qs.rho().trace().re - 1.0).abs() < 1e-15);
        let sum = projector(0.0) + projector(PI / 2.0);
        assert!((sum - CMatrix::identity(2, 2)).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn reference_strategy_conditional_table() {
        // Maximally entangled state: P(u | y) = ½ cos²(θ(u¹, y¹) − φ(u², y²)).
        let theta = [[0.0, PI / 2.0], [PI / 4.0, 3.0 * PI / 4.0]];
        let phi = [[PI / 8.0, 5.0 * PI / 8.0], [7.0 * PI / 8.0, 3.0 * PI / 8.0]];
        let team = chsh_team();
        let (m, value) = evaluate_quantum(&team, &chsh_reference_strategy()).unwrap();
        for y1 in 0..2 {
            for y2 in 0..2 {
                let y = team.obs_index(&[y1, y2]);
                for u1 in 0..2 {
                    for u2 in 0..2 {
                        let p = m.get(&team, 0, y, team.act_index(&[u1, u2])) / 0.25;
                        let expected = 0.5 * (theta[y1][u1] - phi[y2][u2]).cos().powi(2);
                        assert!((p - expected).abs() <= 1e-12);
                        let win = (u1 ^ u2) == y1 * y2;
                        assert!((p - if win { HI } else { LO }).abs() <= 1e-12);
                    }
                }
            }
        }
        assert!((value - 2.0f64.sqrt() / 2.0).abs() <= 1e-12);
        assert!(ns_residual(&team, &m) <= 1e-8);
    }

    #[test]
    fn one_dimensional_povms_are_behavioral_policies() {
        let team = TeamSampler::new(2).product_team_with_sizes(2, vec![2, 3], vec![3, 2], Sense::Minimize);
        let mut sampler = TeamSampler::new(8);
        let kernels: Vec<Vec<Vec<f64>>> = (0..2)
            .map(|i| {
                (0..team.obs_sizes()[i])
                    .map(|_| sampler.distribution(team.act_sizes()[i]))
                    .collect()
            })
            .collect();
        let povms = kernels
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|r| r.iter().map(|&p| real_matrix(1, 1, &[p])).collect())
                    .collect()
            })
            .collect();
        let qs = QuantumStrategy::new(vec![1, 1], real_matrix(1, 1, &[1.0]), povms).unwrap();
        let (m, _) = evaluate_quantum(&team, &qs).unwrap();
        let expected = strategic_measure_of_behavioral(&team, &BehavioralPolicy::new(kernels).unwrap()).unwrap();
        for (a, b) in m.probs().iter().zip(expected.probs()) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn separable_state_is_a_mixture_of_two_product_policies() {
        let e11 = matrix_unit(2, 0, 0);
        let e22 = matrix_unit(2, 1, 1);
        let sigma = e11.kronecker(&e11).scale(0.5) + e22.kronecker(&e22).scale(0.5);
        let reference = chsh_reference_strategy();
        let qs = QuantumStrategy::new(vec![2, 2], sigma, reference.povms().to_vec()).unwrap();
        let team = chsh_team();
        let (m, _) = evaluate_quantum(&team, &qs).unwrap();
        let policy_for = |e: &CMatrix| {
            let kernels = reference
                .povms()
                .iter()
                .map(|fam| {
                    fam.iter()
                        .map(|els| els.iter().map(|el| trace_of_product(el, e).re).collect())
                        .collect()
                })
                .collect();
            strategic_measure_of_behavioral(&team, &BehavioralPolicy::new(kernels).unwrap()).unwrap()
        };
        let (a, b) = (policy_for(&e11), policy_for(&e22));
        for ((p, x), y) in m.probs().iter().zip(a.probs()).zip(b.probs()) {
            assert!((p - 0.5 * (x + y)).abs() <= 1e-12);
        }
    }

    #[test]
    fn invalid_strategies_are_rejected() {
        let good = chsh_reference_strategy();
        let mut bad_rho = good.rho().clone();
        bad_rho[(0, 0)] += Complex64::new(0.1, 0.0);
        assert!(QuantumStrategy::new(vec![2, 2], bad_rho, good.povms().to_vec()).is_err());
        let mut povms = good.povms().to_vec();
        povms[0][0][1] = projector(0.3);
        assert!(QuantumStrategy::new(vec![2, 2], good.rho().clone(), povms).is_err());
        let neg = real_matrix(2, 2, &[1.5, 0.0, 0.0, -0.5]);
        let povms = vec![vec![vec![neg, real_matrix(2, 2, &[-0.5, 0.0, 0.0, 1.5])]]; 2];
        assert!(QuantumStrategy::new(vec![2, 2], good.rho().clone(), povms).is_err());
    }

    #[test]
    fn chsh_xor_value_is_tsirelson_bound() {
        let sol = solve_xor_team(&chsh_xor(), XOR_RESTARTS, XOR_TOL, 0).unwrap();
        assert!((sol.value - 2.0f64.sqrt() / 2.0).abs() <= 1e-9);
        assert_eq!(sol.classical_value, 0.5);
        for w in sol.history.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn chsh_team_is_recognized_as_xor() {
        let x = XorTeam::from_team(&chsh_team()).unwrap();
        assert_eq!(x.g(), chsh_xor().g());
        assert_eq!(x.h(), chsh_xor().h());
        assert_eq!(x.to_team().unwrap(), chsh_team());
        assert!(XorTeam::from_team(&TeamSampler::new(1).product_team(2, 2, Sense::Maximize)).is_none());
    }

    #[test]
    fn scalar_and_diagonal_xor_values() {
        let one = XorTeam {
            mu: vec![vec![1.0]],
            h: vec![vec![0]],
            g: vec![vec![0.3]],
        };
        assert!((solve_xor_team(&one, 4, XOR_TOL, 1).unwrap().value - 0.3).abs() <= 1e-12);
        let diag = XorTeam::new(vec![vec![0.7, 0.0], vec![0.0, 0.3]], vec![vec![0, 0], vec![0, 0]]).unwrap();
        let sol = solve_xor_team(&diag, 8, XOR_TOL, 1).unwrap();
        assert!((sol.value - 1.0).abs() <= 1e-9);
        assert!((sol.classical_value - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn positive_g_classical_value_is_total_mass() {
        let x = XorTeam::new(vec![vec![0.1, 0.2, 0.05], vec![0.3, 0.25, 0.1]], vec![vec![0; 3]; 2]).unwrap();
        assert!((xor_classical_value(&x).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn xor_file_round_trips() {
        let x = parse_xor(r#"{"mu": [[0.25, 0.25], [0.25, 0.25]], "h": [[0, 0], [0, 1]]}"#).unwrap();
        assert_eq!(x, chsh_xor());
        assert!(parse_xor(r#"{"mu": [[0.5, 0.5]], "h": [[0, 2]]}"#).is_err());
    }

    fn random_unitary(rng: &mut ChaCha8Rng) -> CMatrix {
        let (a, b, c): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let t = rng.random::<f64>() * PI / 2.0;
        let alpha = Complex64::from_polar(t.cos(), 2.0 * PI * a);
        let beta = Complex64::from_polar(t.sin(), 2.0 * PI * b);
        let phase = Complex64::from_polar(1.0, 2.0 * PI * c);
        CMatrix::from_row_slice(2, 2, &[alpha, -beta.conj(), beta, alpha.conj()]) * phase
    }

    proptest! {
        #[test]
        fn local_unitaries_leave_the_value_unchanged(seed in 0u64..100_000, dm in 0usize..2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_unitary(&mut rng);
            prop_assert!((u.adjoint() * &u - CMatrix::identity(2, 2)).iter().all(|z| z.norm() < 1e-12));
            let reference = chsh_reference_strategy();
            let lift = if dm == 0 { u.kronecker(&CMatrix::identity(2, 2)) } else { CMatrix::identity(2, 2).kronecker(&u) };
            let rho = &lift * reference.rho() * lift.adjoint();
            let mut povms = reference.povms().to_vec();
            for fam in povms[dm].iter_mut() {
                for el in fam.iter_mut() {
                    *el = &u * &*el * u.adjoint();
                }
            }
            let qs = QuantumStrategy::new(vec![2, 2], rho, povms).unwrap();
            let (_, v) = evaluate_quantum(&chsh_team(), &qs).unwrap();
            prop_assert!((v - 2.0f64.sqrt() / 2.0).abs() <= 1e-10);
        }

        #[test]
        fn random_strategies_are_non_signaling(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Random pure state and random projective measurements.
            let psi = DVector::from_fn(4, |_, _| Complex64::new(standard_normal(&mut rng), standard_normal(&mut rng)));
            let norm = psi.norm();
            let psi = psi.unscale(norm);
            let rho = &psi * psi.adjoint();
            let povms = (0..2)
                .map(|_| {
                    (0..2)
                        .map(|_| {
                            let u = random_unitary(&mut rng);
                            let p0 = &u * matrix_unit(2, 0, 0) * u.adjoint();
                            let p1 = CMatrix::identity(2, 2) - &p0;
                            vec![p0, p1]
                        })
                        .collect()
                })
                .collect();
            let qs = QuantumStrategy::new(vec![2, 2], rho, povms).unwrap();
            let team = TeamSampler::new(seed).product_team_with_sizes(2, vec![2, 2], vec![2, 2], Sense::Minimize);
            let (m, _) = evaluate_quantum(&team, &qs).unwrap();
            prop_assert!(ns_residual(&team, &m) <= 1e-8);
        }

        #[test]
        fn xor_value_lies_between_classical_and_total_mass(seed in 0u64..100_000) {
            let mut sampler = TeamSampler::new(seed);
            let n1 = sampler.size(4);
            let n2 = sampler.size(4);
            let flat = sampler.distribution(n1 * n2);
            let mu: Vec<Vec<f64>> = flat.chunks(n2).map(<[f64]>::to_vec).collect();
            let h: Vec<Vec<u8>> = (0..n1).map(|_| (0..n2).map(|_| u8::from(sampler.rng().random_bool(0.5))).collect()).collect();
            let x = XorTeam::new(mu, h).unwrap();
            let sol = solve_xor_team(&x, 8, XOR_TOL, seed).unwrap();
            prop_assert!(sol.value >= sol.classical_value - 1e-9);
            prop_assert!(sol.value <= 1.0 + 1e-12);
            for w in sol.history.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12);
            }
        }

        #[test]
        fn classical_xor_value_matches_team_enumeration(seed in 0u64..100_000) {
            let mut sampler = TeamSampler::new(seed);
            let mu: Vec<Vec<f64>> = sampler.distribution(4).chunks(2).map(<[f64]>::to_vec).collect();
            let h: Vec<Vec<u8>> = (0..2).map(|_| (0..2).map(|_| u8::from(sampler.rng().random_bool(0.5))).collect()).collect();
            let x = XorTeam::new(mu, h).unwrap();
            let team = x.to_team().unwrap();
            prop_assert!((xor_classical_value(&x).unwrap() - enumerate_optimal(&team).unwrap().value).abs() <= 1e-12);
        }
    }
}
