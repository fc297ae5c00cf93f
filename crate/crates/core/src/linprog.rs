//! Dense revised simplex for `minimize cᵀx subject to Ax = b, x ≥ 0`.
//!
//! Two phases with one artificial column per row. The basis inverse is kept explicitly,
//! updated by rank-one pivots and rebuilt from an LU factorization every
//! [`LpConfig::refactor_every`] iterations. Pricing uses the most negative reduced cost and
//! falls back to Bland's smallest-index rule during runs of degenerate pivots, which rules
//! out cycling. All choices are deterministic.

use nalgebra::DMatrix;

use crate::error::{Result, TeamError};

/// Solver tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpConfig {
    /// Smallest pivot element accepted in the ratio test.
    pub pivot_tol: f64,
    /// Primal feasibility tolerance (also the phase-one infeasibility threshold).
    pub feas_tol: f64,
    /// Reduced-cost threshold for optimality.
    pub opt_tol: f64,
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_limit: usize,
    pub max_iterations: usize,
    pub max_refactor_attempts: usize,
}

pub const LP_CONFIG: LpConfig = LpConfig {
    pivot_tol: 1e-10,
    feas_tol: 1e-8,
    opt_tol: 1e-10,
    refactor_every: 64,
    degenerate_limit: 25,
    max_iterations: 500_000,
    max_refactor_attempts: 3,
};

impl Default for LpConfig {
    fn default() -> Self {
        LP_CONFIG
    }
}

/// `minimize cᵀx` subject to `Ax = b`, `x ≥ 0`. Rows are stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    num_vars: usize,
    c: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl LpProblem {
    /// Empty problem over `num_vars` nonnegative variables with zero objective.
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            c: vec![0.0; num_vars],
            a: Vec::new(),
            b: Vec::new(),
        }
    }

    /// Builds a problem from dense rows.
    pub fn from_rows(c: Vec<f64>, rows: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let n = c.len();
        if rows.len() != b.len() {
            return Err(TeamError::ShapeMismatch(format!(
                "{} rows but {} right-hand sides",
                rows.len(),
                b.len()
            )));
        }
        let mut p = LpProblem::new(n);
        p.c = c;
        for (i, (row, rhs)) in rows.into_iter().zip(b).enumerate() {
            if row.len() != n {
                return Err(TeamError::ShapeMismatch(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            p.a.extend(row);
            p.b.push(rhs);
        }
        p.check_finite()?;
        Ok(p)
    }

    fn check_finite(&self) -> Result<()> {
        if self.c.iter().chain(&self.a).chain(&self.b).any(|v| !v.is_finite()) {
            return Err(TeamError::validation("lp", "non-finite coefficient"));
        }
        Ok(())
    }

    pub fn set_cost(&mut self, var: usize, value: f64) {
        self.c[var] = value;
    }

    /// Appends `Σ coeff · x_var = rhs`; repeated variables accumulate. Returns the row index.
    pub fn add_constraint(&mut self, terms: &[(usize, f64)], rhs: f64) -> usize {
        let start = self.a.len();
        self.a.resize(start + self.num_vars, 0.0);
        for &(j, v) in terms {
            self.a[start + j] += v;
        }
        self.b.push(rhs);
        self.b.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.c
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.num_vars..(i + 1) * self.num_vars]
    }

    #[inline]
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.num_vars + j]
    }

    /// `‖Ax − b‖_∞` together with the largest negativity of `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().map(|v| -v).fold(0.0, f64::max);
        for i in 0..self.num_rows() {
            let lhs: f64 = self.row(i).iter().zip(x).map(|(a, x)| a * x).sum();
            worst = worst.max((lhs - self.b[i]).abs());
        }
        worst
    }

    /// Reduced costs `c − Aᵀλ`.
    pub fn reduced_costs(&self, duals: &[f64]) -> Vec<f64> {
        let mut d = self.c.clone();
        for (i, &y) in duals.iter().enumerate() {
            if y != 0.0 {
                for (dj, a) in d.iter_mut().zip(self.row(i)) {
                    *dj -= y * a;
                }
            }
        }
        d
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl std::fmt::Display for LpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        })
    }
}

/// Certificate quantities recomputed from the returned vectors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    /// `max(‖Ax − b‖_∞, max_j −x_j)`.
    pub primal: f64,
    /// `max_j −(c − Aᵀλ)_j`, clipped at zero.
    pub dual: f64,
    /// `max_j |x_j (c − Aᵀλ)_j|`.
    pub complementarity: f64,
    /// `|cᵀx − bᵀλ|`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Row multipliers `λ` (empty unless optimal).
    pub duals: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    /// For infeasible problems, `z` with `zᵀA ≤ 0` and `zᵀb > 0`.
    pub farkas: Option<Vec<f64>>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    solve_lp_with(p, &LP_CONFIG)
}

pub fn solve_lp_with(p: &LpProblem, cfg: &LpConfig) -> Result<LpSolution> {
    p.check_finite()?;
    let mut s = Simplex::new(p, cfg);
    s.run()
}

struct Simplex<'a> {
    p: &'a LpProblem,
    cfg: &'a LpConfig,
    m: usize,
    n: usize,
    /// Row signs making the right-hand side nonnegative.
    sign: Vec<f64>,
    b: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl<'a> Simplex<'a> {
    fn new(p: &'a LpProblem, cfg: &'a LpConfig) -> Self {
        let m = p.num_rows();
        let n = p.num_vars();
        let sign: Vec<f64> = p.b.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
        let b: Vec<f64> = p.b.iter().zip(&sign).map(|(b, s)| b * s).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut is_basic = vec![false; n + m];
        is_basic[n..].iter_mut().for_each(|v| *v = true);
        Simplex {
            p,
            cfg,
            m,
            n,
            sign,
            xb: b.clone(),
            b,
            basis: (n..n + m).collect(),
            is_basic,
            binv,
            iterations: 0,
        }
    }

    /// Entry of the sign-corrected constraint matrix, artificial columns included.
    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        if j < self.n {
            self.sign[i] * self.p.coeff(i, j)
        } else if j - self.n == i {
            1.0
        } else {
            0.0
        }
    }

    fn column(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        if j >= self.n {
            let r = j - self.n;
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.binv[i * m + r];
            }
            return out;
        }
        for k in 0..m {
            let a = self.entry(k, j);
            if a != 0.0 {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += self.binv[i * m + k] * a;
                }
            }
        }
        out
    }

    fn duals(&self, costs: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &bv) in self.basis.iter().enumerate() {
            let cb = costs[bv];
            if cb != 0.0 {
                for (k, yk) in y.iter_mut().enumerate() {
                    *yk += cb * self.binv[r * m + k];
                }
            }
        }
        y
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        if m == 0 {
            return Ok(());
        }
        let mut bmat = DMatrix::<f64>::zeros(m, m);
        for (r, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                bmat[(i, r)] = self.entry(i, j);
            }
        }
        let inv = bmat
            .lu()
            .try_inverse()
            .ok_or_else(|| TeamError::Numeric("basis matrix became singular".into()))?;
        for i in 0..m {
            for k in 0..m {
                self.binv[i * m + k] = inv[(i, k)];
            }
        }
        for i in 0..m {
            let v: f64 = (0..m).map(|k| self.binv[i * m + k] * self.b[k]).sum();
            self.xb[i] = if v < 0.0 && v > -self.cfg.feas_tol { 0.0 } else { v };
        }
        Ok(())
    }

    fn pivot(&mut self, r: usize, entering: usize, col: &[f64]) {
        let m = self.m;
        let piv = col[r];
        let theta = self.xb[r] / piv;
        for i in 0..m {
            if i != r {
                self.xb[i] -= theta * col[i];
                if self.xb[i] < 0.0 && self.xb[i] > -self.cfg.feas_tol {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[r] = theta.max(0.0);
        let row_r: Vec<f64> = self.binv[r * m..(r + 1) * m].iter().map(|v| v / piv).collect();
        for i in 0..m {
            if i != r && col[i] != 0.0 {
                let f = col[i];
                for k in 0..m {
                    self.binv[i * m + k] -= f * row_r[k];
                }
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&row_r);
        self.is_basic[self.basis[r]] = false;
        self.is_basic[entering] = true;
        self.basis[r] = entering;
    }

    /// Runs simplex iterations for `costs`; only columns below `allowed` may enter.
    fn optimize(&mut self, costs: &[f64], allowed: usize) -> Result<PhaseEnd> {
        let m = self.m;
        let mut degenerate_run = 0usize;
        let mut since_refactor = 0usize;
        loop {
            if self.iterations >= self.cfg.max_iterations {
                return Err(TeamError::Numeric(format!(
                    "iteration limit {} reached",
                    self.cfg.max_iterations
                )));
            }
            if since_refactor >= self.cfg.refactor_every {
                self.refactor()?;
                since_refactor = 0;
            }
            let y = self.duals(costs);
            let bland = degenerate_run >= self.cfg.degenerate_limit;
            let mut d: Vec<f64> = costs[..allowed].to_vec();
            for (i, yi) in y.iter().enumerate() {
                let ys = yi * self.sign[i];
                if ys != 0.0 {
                    for (dj, a) in d.iter_mut().zip(self.p.row(i)) {
                        *dj -= ys * a;
                    }
                }
            }
            for (j, dj) in d.iter_mut().enumerate().skip(self.n) {
                *dj -= y[j - self.n];
            }
            let mut entering = None;
            let mut best = -self.cfg.opt_tol;
            for (j, &dj) in d.iter().enumerate() {
                if self.is_basic[j] || dj >= best {
                    continue;
                }
                entering = Some(j);
                if bland {
                    break;
                }
                best = dj;
            }
            let Some(j) = entering else {
                return Ok(PhaseEnd::Optimal);
            };
            let col = self.column(j);
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for r in 0..m {
                if col[r] <= self.cfg.pivot_tol {
                    continue;
                }
                let ratio = self.xb[r].max(0.0) / col[r];
                match leave {
                    None => {
                        leave = Some(r);
                        best_ratio = ratio;
                    }
                    Some(l) => {
                        let tol = 1e-12 * best_ratio.max(1.0);
                        if ratio < best_ratio - tol {
                            leave = Some(r);
                            best_ratio = ratio;
                        } else if ratio <= best_ratio + tol && self.basis[r] < self.basis[l] {
                            leave = Some(r);
                            best_ratio = best_ratio.min(ratio);
                        }
                    }
                }
            }
            let Some(r) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            if best_ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, j, &col);
            self.iterations += 1;
            since_refactor += 1;
        }
    }

    fn run(&mut self) -> Result<LpSolution> {
        let (m, n) = (self.m, self.n);
        let mut phase1 = vec![0.0; n + m];
        phase1[n..].iter_mut().for_each(|c| *c = 1.0);
        match self.optimize(&phase1, n)? {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded => return Err(TeamError::Numeric("phase one reported unbounded".into())),
        }
        self.refactor()?;
        let infeasibility: f64 = self
            .basis
            .iter()
            .zip(&self.xb)
            .filter(|(&j, _)| j >= n)
            .map(|(_, &v)| v)
            .sum();
        let scale = 1.0 + self.b.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if infeasibility > self.cfg.feas_tol * scale {
            let y = self.duals(&phase1);
            let farkas: Vec<f64> = y.iter().zip(&self.sign).map(|(y, s)| y * s).collect();
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                duals: Vec::new(),
                objective: f64::NAN,
                dual_objective: f64::NAN,
                residuals: Residuals::default(),
                iterations: self.iterations,
                farkas: Some(farkas),
            });
        }
        self.drive_out_artificials();

        let mut costs = self.p.c.clone();
        costs.resize(n + m, 0.0);
        let mut attempts = 0;
        loop {
            match self.optimize(&costs, n)? {
                PhaseEnd::Unbounded => {
                    return Ok(LpSolution {
                        status: LpStatus::Unbounded,
                        x: Vec::new(),
                        duals: Vec::new(),
                        objective: f64::NEG_INFINITY,
                        dual_objective: f64::NAN,
                        residuals: Residuals::default(),
                        iterations: self.iterations,
                        farkas: None,
                    })
                }
                PhaseEnd::Optimal => {}
            }
            self.refactor()?;
            let sol = self.certify(&costs);
            let r = &sol.residuals;
            let ok = r.primal <= self.cfg.feas_tol && r.dual <= self.cfg.feas_tol;
            if ok {
                return Ok(sol);
            }
            attempts += 1;
            if attempts >= self.cfg.max_refactor_attempts {
                return Err(TeamError::Numeric(format!(
                    "residuals stayed above tolerance after {attempts} refactorizations \
                     (primal {:.2e}, dual {:.2e})",
                    r.primal, r.dual
                )));
            }
        }
    }

    /// Pivots zero-level artificials out of the basis; rows where no structural column can
    /// replace them are redundant and keep their artificial at zero.
    fn drive_out_artificials(&mut self) {
        let (m, n) = (self.m, self.n);
        for r in 0..m {
            if self.basis[r] < n {
                continue;
            }
            let mut row = vec![0.0; n];
            for k in 0..m {
                let bk = self.binv[r * m + k];
                if bk != 0.0 {
                    for (j, rj) in row.iter_mut().enumerate() {
                        *rj += bk * self.entry(k, j);
                    }
                }
            }
            let candidate = (0..n).find(|&j| !self.is_basic[j] && row[j].abs() > 1e-9);
            if let Some(j) = candidate {
                let col = self.column(j);
                self.xb[r] = 0.0;
                self.pivot(r, j, &col);
            }
        }
    }

    fn certify(&self, costs: &[f64]) -> LpSolution {
        let n = self.n;
        let mut x = vec![0.0; n];
        for (&j, &v) in self.basis.iter().zip(&self.xb) {
            if j < n {
                x[j] = v;
            }
        }
        let y = self.duals(costs);
        let duals: Vec<f64> = y.iter().zip(&self.sign).map(|(y, s)| y * s).collect();
        let d = self.p.reduced_costs(&duals);
        let objective = self.p.value_at(&x);
        let dual_objective: f64 = duals.iter().zip(&self.p.b).map(|(l, b)| l * b).sum();
        let residuals = Residuals {
            primal: self.p.primal_residual(&x),
            dual: d.iter().map(|v| -v).fold(0.0, f64::max),
            complementarity: x.iter().zip(&d).map(|(x, d)| (x * d).abs()).fold(0.0, f64::max),
            gap: (objective - dual_objective).abs(),
        };
        LpSolution {
            status: LpStatus::Optimal,
            x,
            duals,
            objective,
            dual_objective,
            residuals,
            iterations: self.iterations,
            farkas: None,
        }
    }
}
