//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use teamcorr::approx::{affine_benchmark, two_point_reference, WitsenhausenInstance};
use teamcorr::classical::randomization_no_gain_check;
use teamcorr::counterexamples::{
    dyadic_intervals, pomdp_classical_value, pomdp_widesense_sim, verify_ci_failure, PomdpCounterexample,
};
use teamcorr::instances::{chsh_team, pr_box_probs, TeamSampler};
use teamcorr::linprog::{solve_lp, LpProblem};
use teamcorr::quantum::{chsh_reference_strategy, evaluate_quantum, solve_xor_team, XOR_RESTARTS, XOR_TOL};
use teamcorr::reduction::verify_reduction;
use teamcorr::relax::{build_ns_lp, dual_certificate, ns_residual, solve_relaxation, CHAIN_TOL};
use teamcorr::{
    enumerate_optimal, hierarchy_report, solve_refinement_chain, static_reduce, Sense, StrategicMeasure,
    WitsenhausenConfig, XorTeam,
};

struct Check {
    ok: bool,
    detail: String,
}

impl Check {
    fn new() -> Self {
        Check {
            ok: true,
            detail: String::new(),
        }
    }

    fn require(&mut self, cond: bool, what: impl AsRef<str>) {
        if !cond {
            self.ok = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(what.as_ref());
        }
    }

    fn note(&mut self, what: impl AsRef<str>) {
        if self.ok && self.detail.is_empty() {
            self.detail = what.as_ref().to_string();
        }
    }
}

type Criterion = fn(&mut Check) -> Result<(), teamcorr::TeamError>;

fn within(limit: Duration, elapsed: Duration, c: &mut Check) {
    c.require(elapsed < limit, format!("took {elapsed:?}, limit {limit:?}"));
}

fn chsh_classical(c: &mut Check) -> teamcorr::Result<()> {
    let team = chsh_team();
    let t = Instant::now();
    let sol = enumerate_optimal(&team)?;
    let elapsed = t.elapsed();
    c.require((sol.value - 0.5).abs() <= 1e-12, format!("value {}", sol.value));
    c.require(sol.profiles == 16, format!("{} profiles", sol.profiles));
    within(Duration::from_millis(1), elapsed, c);
    c.note(format!(
        "value {} over {} profiles in {elapsed:?}",
        sol.value, sol.profiles
    ));
    Ok(())
}

fn chsh_quantum(c: &mut Check) -> teamcorr::Result<()> {
    let t = Instant::now();
    let x = XorTeam::new(vec![vec![0.25; 2]; 2], vec![vec![0, 0], vec![0, 1]])?;
    let target = 2.0 * 2f64.sqrt() / 4.0;
    let sol = solve_xor_team(&x, XOR_RESTARTS, XOR_TOL, 0)?;
    c.require((sol.value - target).abs() <= 1e-9, format!("xor value {}", sol.value));

    let team = chsh_team();
    let qs = chsh_reference_strategy();
    let (_, value) = evaluate_quantum(&team, &qs)?;
    c.require(
        (value - target).abs() <= 1e-12,
        format!("reference strategy value {value}"),
    );
    let (hi, lo) = ((2.0 + 2f64.sqrt()) / 8.0, (2.0 - 2f64.sqrt()) / 8.0);
    let mut worst: f64 = 0.0;
    for y1 in 0..2 {
        for y2 in 0..2 {
            for u1 in 0..2usize {
                for u2 in 0..2usize {
                    let expected = if (u1 ^ u2) == y1 * y2 { hi } else { lo };
                    worst = worst.max((qs.conditional(&[y1, y2], &[u1, u2]) - expected).abs());
                }
            }
        }
    }
    c.require(worst <= 1e-12, format!("conditional entries off by {worst:e}"));
    within(Duration::from_millis(100), t.elapsed(), c);
    c.note(format!(
        "xor value {:.13}, conditionals within {worst:.1e}, {:?}",
        sol.value,
        t.elapsed()
    ));
    Ok(())
}

fn chsh_ns(c: &mut Check) -> teamcorr::Result<()> {
    let t = Instant::now();
    let team = chsh_team();
    let relax = build_ns_lp(&team)?;
    let sol = solve_relaxation(&team, &relax)?;
    c.require((sol.value - 1.0).abs() <= 1e-8, format!("NS value {}", sol.value));
    let pr = StrategicMeasure::from_probs(&team, pr_box_probs())?;
    let residual = ns_residual(&team, &pr);
    c.require(residual <= 1e-9, format!("PR-box residual {residual:e}"));
    let cert = dual_certificate(&team, &relax, &sol.lp)?;
    c.require((cert.bound - 1.0).abs() <= 1e-7, format!("dual bound {}", cert.bound));
    c.require(cert.verified, format!("certificate violation {:e}", cert.max_violation));
    within(Duration::from_secs(1), t.elapsed(), c);
    c.note(format!(
        "value {}, PR residual {residual:e}, dual bound {}, {:?}",
        sol.value,
        cert.bound,
        t.elapsed()
    ));
    Ok(())
}

/// Random XOR team with product `μ` and observation sizes up to 3.
fn xor_shaped(seed: u64) -> teamcorr::Result<teamcorr::FiniteStaticTeam> {
    let mut s = TeamSampler::new(seed);
    let (n1, n2) = (s.size(3), s.size(3));
    let p = s.distribution(n1);
    let q = s.distribution(n2);
    let mu = p.iter().map(|a| q.iter().map(|b| a * b).collect()).collect();
    let h = (0..n1)
        .map(|_| (0..n2).map(|_| s.rng().random_range(0..2u8)).collect())
        .collect();
    XorTeam::new(mu, h)?.to_team()
}

fn hierarchy(c: &mut Check) -> teamcorr::Result<()> {
    let t = Instant::now();
    let mut teams = vec![chsh_team()];
    for seed in 0..100u64 {
        teams.push(if seed % 4 == 0 {
            xor_shaped(seed)?
        } else {
            TeamSampler::new(seed).product_team(2, 3, Sense::Maximize)
        });
    }
    let mut with_quantum = 0;
    for (i, team) in teams.iter().enumerate() {
        let report = hierarchy_report(team, true)?;
        if report.value(teamcorr::CorrelationClass::Quantum).is_some() {
            with_quantum += 1;
        }
        let v: Vec<f64> = report.entries.iter().map(|e| e.1).collect();
        let ordered = v.windows(2).all(|w| w[0] <= w[1] + CHAIN_TOL);
        c.require(ordered && report.chain_holds(), format!("team {i}: chain {v:?}"));
    }
    within(Duration::from_secs(30), t.elapsed(), c);
    c.note(format!(
        "{} teams, {with_quantum} with a quantum value, {:?}",
        teams.len(),
        t.elapsed()
    ));
    Ok(())
}

fn randomization(c: &mut Check) -> teamcorr::Result<()> {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut s = TeamSampler::new(1000 + seed);
        let sense = if seed % 2 == 0 {
            Sense::Minimize
        } else {
            Sense::Maximize
        };
        let team = if seed % 3 == 0 {
            s.correlated_team(2, 3, sense)
        } else {
            s.product_team(2, 3, sense)
        };
        let (det, conv) = randomization_no_gain_check(&team)?;
        worst = worst.max((det - conv).abs());
    }
    c.require(worst <= 1e-9, format!("|j_det - j_conv| up to {worst:e}"));
    within(Duration::from_secs(10), t.elapsed(), c);
    c.note(format!("max |j_det - j_conv| = {worst:e}, {:?}", t.elapsed()));
    Ok(())
}

fn reduction(c: &mut Check) -> teamcorr::Result<()> {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let mut s = TeamSampler::new(5000 + seed);
        let n = 1 + (seed % 3) as usize;
        let team = s.sequential_team(n, 3);
        let (reduced, artifacts) = static_reduce(&team)?;
        let profile = s.profile_for(team.obs_sizes(), team.act_sizes());
        let (dynamic, stat) = verify_reduction(&team, &artifacts, &reduced, &profile)?;
        worst = worst.max((dynamic - stat).abs());
    }
    c.require(worst <= 1e-10, format!("|J_dynamic - J_static| up to {worst:e}"));
    within(Duration::from_secs(5), t.elapsed(), c);
    c.note(format!("max |J_dynamic - J_static| = {worst:e}, {:?}", t.elapsed()));
    Ok(())
}

fn square_wave(c: &mut Check) -> teamcorr::Result<()> {
    let t = Instant::now();
    let ns: Vec<usize> = (4..=10).map(|e| 1usize << e).collect();
    let report = verify_ci_failure(&ns, &dyadic_intervals(6))?;
    c.require(report.deviations_within_bound(), "deviation above 1/(2n)");
    c.require(
        report.every_pn_is_conditionally_independent(),
        "some P_n fails cellwise independence",
    );
    c.require(
        report.limit_conditional == 1.0 && report.limit_marginal == 0.5,
        format!("limit {} vs {}", report.limit_conditional, report.limit_marginal),
    );
    within(Duration::from_secs(1), t.elapsed(), c);
    let worst = report
        .rows
        .iter()
        .map(|r| r.max_deviation * 2.0 * r.n as f64)
        .fold(0.0, f64::max);
    c.note(format!(
        "{} intervals, max 2n|P_n - P| = {worst}, limit 1 vs 0.5, {:?}",
        report.intervals,
        t.elapsed()
    ));
    Ok(())
}

fn pomdp(c: &mut Check) -> teamcorr::Result<()> {
    let t = Instant::now();
    let ce = PomdpCounterexample::balanced();
    let classical = pomdp_classical_value(&ce)?.value;
    c.require(classical == 0.5, format!("classical value {classical}"));
    for seed in [0u64, 1, 42, 2024, u64::MAX] {
        let run = pomdp_widesense_sim(&ce, 10_000, seed)?;
        c.require(
            run.average_reward == 1.0,
            format!("seed {seed}: reward {}", run.average_reward),
        );
    }
    within(Duration::from_secs(1), t.elapsed(), c);
    c.note(format!("wide-sense 1.0 vs classical {classical}, {:?}", t.elapsed()));
    Ok(())
}

fn witsenhausen(c: &mut Check) -> teamcorr::Result<()> {
    let t = Instant::now();
    let cfg = WitsenhausenConfig::default();
    let inst = WitsenhausenInstance::new(cfg.k, cfg.sigma)?;
    let (lambda, affine) = affine_benchmark(&inst);
    let scan = (0..=200_000)
        .map(|i| inst.affine_value(-2.0 + 4.0 * i as f64 / 200_000.0))
        .fold(f64::INFINITY, f64::min);
    c.require(
        (scan - affine).abs() <= 1e-8,
        format!("affine oracle {affine} vs scan {scan}"),
    );
    let reference = two_point_reference(&inst, &cfg.quad())?;
    let steps = solve_refinement_chain(&cfg)?;
    let levels: Vec<usize> = steps.iter().map(|s| s.levels).collect();
    c.require(levels == [16, 32, 64], format!("grids {levels:?}"));
    let finite: Vec<f64> = steps.iter().map(|s| s.finite_value).collect();
    c.require(
        finite.windows(2).all(|w| w[1] <= w[0]),
        format!("finite values {finite:?}"),
    );
    let last = steps.last().expect("chain is non-empty").continuous.value;
    c.require(last < affine, format!("continuous {last} not below affine {affine}"));
    c.require(last < 0.45, format!("continuous {last} not below 0.45"));
    within(Duration::from_secs(120), t.elapsed(), c);
    c.note(format!(
        "finite {finite:.4?}, continuous {last:.4}, affine {affine:.4} at {lambda:.4}, two-point {reference:.4}, {:?}",
        t.elapsed()
    ));
    Ok(())
}

/// Standard-form LP with a known primal point and dual-feasible cost, so it has an optimum.
fn random_feasible_lp(seed: u64) -> LpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=50);
    let m = rng.random_range(1..=n);
    let a: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let x0: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                rng.random_range(0.0..2.0)
            } else {
                0.0
            }
        })
        .collect();
    let b = a.iter().map(|r| r.iter().zip(&x0).map(|(p, q)| p * q).sum()).collect();
    let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let c = (0..n)
        .map(|j| (0..m).map(|i| a[i][j] * y[i]).sum::<f64>() + rng.random_range(0.0..1.0))
        .collect();
    LpProblem::from_rows(c, a, b).expect("generated LP is well formed")
}

fn lp_engine(c: &mut Check) -> teamcorr::Result<()> {
    let t = Instant::now();
    let (mut primal, mut dual, mut gap): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for seed in 0..100u64 {
        let lp = random_feasible_lp(seed);
        let sol = solve_lp(&lp)?;
        if !sol.is_optimal() {
            c.require(false, format!("seed {seed}: {}", sol.status));
            continue;
        }
        primal = primal.max(sol.residuals.primal);
        dual = dual.max(sol.residuals.dual);
        gap = gap.max(sol.residuals.gap);
        let again = solve_lp(&lp)?;
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        let same = bits(&sol.x) == bits(&again.x)
            && bits(&sol.duals) == bits(&again.duals)
            && sol.objective.to_bits() == again.objective.to_bits();
        c.require(same, format!("seed {seed}: re-solve differs"));
    }
    c.require(primal <= 1e-8, format!("primal residual {primal:e}"));
    c.require(dual <= 1e-8, format!("dual residual {dual:e}"));
    c.require(gap <= 1e-7, format!("duality gap {gap:e}"));
    within(Duration::from_secs(5), t.elapsed(), c);
    c.note(format!(
        "residuals {primal:.1e}/{dual:.1e}, gap {gap:.1e}, {:?}",
        t.elapsed()
    ));
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("CHSH classical value", chsh_classical),
        ("CHSH quantum value", chsh_quantum),
        ("CHSH non-signaling value", chsh_ns),
        ("hierarchy chain", hierarchy),
        ("randomization gives no gain", randomization),
        ("static reduction equivalence", reduction),
        ("square-wave counterexample", square_wave),
        ("POMDP counterexample", pomdp),
        ("Witsenhausen refinement", witsenhausen),
        ("LP engine", lp_engine),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let mut c = Check::new();
        if let Err(e) = run(&mut c) {
            c.ok = false;
            c.detail = format!("error: {e}");
        }
        failed += usize::from(!c.ok);
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if c.ok { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
