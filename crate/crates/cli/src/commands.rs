use std::path::Path;
use std::time::Instant;

use teamcorr::approx::affine_benchmark;
use teamcorr::classical::enumerate_optimal;
use teamcorr::counterexamples::{
    deviation_csv, dyadic_intervals, pomdp_report, verify_ci_failure, verify_lc_failure, PomdpCounterexample,
};
use teamcorr::model::load_problem;
use teamcorr::quantum::{solve_xor_team, XorTeam, XOR_RESTARTS, XOR_TOL};
use teamcorr::relax::{build_m_lp, build_ns_lp, centralized_bound, dual_certificate, solve_relaxation};
use teamcorr::{
    hierarchy_report, solve_refinement_chain, static_reduce, FiniteStaticTeam, LoadedProblem, TeamError,
    WitsenhausenConfig,
};

use crate::args::{Class, CounterexampleArgs, HierarchyArgs, SolveArgs, Which, WitsenhausenArgs};
use crate::output::{CliError, Outcome};

type Result<T> = std::result::Result<T, CliError>;

/// Loads a problem file; sequential teams are solved through their static reduction.
fn load(path: &Path) -> Result<(FiniteStaticTeam, bool)> {
    Ok(match load_problem(path)? {
        LoadedProblem::Static(team) => (team, false),
        LoadedProblem::Sequential(seq) => (static_reduce(&seq)?.0, true),
    })
}

fn problem_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
        .replace(',', "_")
}

fn columns(base: &[&'static str], timing: bool) -> Vec<&'static str> {
    let mut c = base.to_vec();
    if timing {
        c.push("wall_time_s");
    }
    c
}

fn with_time(mut fields: Vec<String>, start: Option<Instant>) -> Vec<String> {
    if let Some(t) = start {
        fields.push(format!("{:.6}", t.elapsed().as_secs_f64()));
    }
    fields
}

fn class_tag(class: Class) -> &'static str {
    match class {
        Class::Classical => "classical",
        Class::Quantum => "quantum",
        Class::Ns => "NS",
        Class::M => "M",
        Class::Cj => "CJ",
    }
}

pub fn solve(args: &SolveArgs, timing: bool) -> Result<Outcome> {
    let (team, reduced) = load(&args.problem)?;
    let start = timing.then(Instant::now);
    let mut out = Outcome::new(&columns(&["problem", "class", "value"], timing));
    if reduced {
        out.line("sequential problem: solving its static reduction");
    }
    if args.certificate.is_some() && !matches!(args.class, Class::Ns | Class::M) {
        return Err(CliError::Usage("--certificate applies to the ns and m classes".into()));
    }
    let value = match args.class {
        Class::Classical => {
            let sol = enumerate_optimal(&team)?;
            out.line(format!("value {}", sol.value));
            out.line(format!("profiles evaluated {}", sol.profiles));
            for (i, map) in sol.profile.maps().iter().enumerate() {
                let acts: Vec<String> = map.iter().map(|u| u.to_string()).collect();
                out.line(format!("dm {} actions by observation: {}", i + 1, acts.join(" ")));
            }
            sol.value
        }
        Class::Quantum => {
            let x = XorTeam::from_team(&team)
                .ok_or_else(|| CliError::Usage("the quantum class needs a two-DM XOR-shaped team".into()))?;
            let sol = solve_xor_team(&x, XOR_RESTARTS, XOR_TOL, args.seed)?;
            let v = sol.value_in_sense(&team);
            out.line(format!("value {v}"));
            out.line(format!("restart {} of {XOR_RESTARTS}", sol.restart));
            v
        }
        Class::Ns | Class::M => {
            let relax = if args.class == Class::Ns {
                build_ns_lp(&team)?
            } else {
                build_m_lp(&team)?
            };
            let sol = solve_relaxation(&team, &relax)?;
            out.line(format!("value {}", sol.value));
            if let Some(path) = &args.certificate {
                let cert = dual_certificate(&team, &relax, &sol.lp)?;
                std::fs::write(path, cert.to_text()).map_err(|source| CliError::Write {
                    path: path.display().to_string(),
                    source,
                })?;
                out.line(format!("dual bound {} (verified: {})", cert.bound, cert.verified));
                if !cert.verified {
                    out.fail("dual certificate does not verify");
                }
            }
            sol.value
        }
        Class::Cj => {
            let v = centralized_bound(&team);
            out.line(format!("value {v}"));
            v
        }
    };
    out.row(&with_time(
        vec![
            problem_name(&args.problem),
            class_tag(args.class).into(),
            value.to_string(),
        ],
        start,
    ));
    Ok(out)
}

pub fn hierarchy(args: &HierarchyArgs, timing: bool) -> Result<Outcome> {
    let (team, _) = load(&args.problem)?;
    let start = timing.then(Instant::now);
    let report = hierarchy_report(&team, args.xor)?;
    let mut out = Outcome::new(&columns(&["problem", "class", "value"], timing));
    out.line(format!("sense {}", report.sense));
    let name = problem_name(&args.problem);
    for (class, v) in &report.entries {
        out.line(format!("{:<10} {v}", class.tag()));
        out.row(&with_time(vec![name.clone(), class.tag().into(), v.to_string()], start));
    }
    if args.xor && report.value(teamcorr::CorrelationClass::Quantum).is_none() {
        out.line("quantum value skipped: team is not XOR shaped");
    }
    if report.chain_holds() {
        out.line("chain holds");
    } else {
        for (a, b) in &report.violations {
            out.line(format!("chain violated between {} and {}", a.tag(), b.tag()));
        }
        out.fail("correlation hierarchy out of order");
    }
    Ok(out)
}

pub fn witsenhausen(args: &WitsenhausenArgs, timing: bool) -> Result<Outcome> {
    let cfg = WitsenhausenConfig {
        k: args.k,
        sigma: args.sigma,
        n_levels: args.levels,
        m_factor: args.m_factor,
        quad_panels: args.quad_panels,
        seed: args.seed,
    };
    let inst = cfg.instance()?;
    let start = timing.then(Instant::now);
    let steps = solve_refinement_chain(&cfg)?;
    let mut out = Outcome::new(&columns(
        &["levels", "finite_value", "continuous_value", "quadrature_bound"],
        timing,
    ));
    out.line(format!("k = {}, sigma = {}", args.k, args.sigma));
    for s in &steps {
        out.line(format!(
            "levels {:>4}  finite {:.6}  continuous {:.6}  quadrature bound {:.1e}  init {}",
            s.levels, s.finite_value, s.continuous.value, s.continuous.error_estimate, s.solution.init
        ));
        out.row(&with_time(
            vec![
                s.levels.to_string(),
                s.finite_value.to_string(),
                s.continuous.value.to_string(),
                format!("{:e}", s.continuous.error_estimate),
            ],
            start,
        ));
    }
    let (lambda, affine) = affine_benchmark(&inst);
    out.line(format!("affine benchmark {affine:.6} at lambda {lambda:.6}"));
    if let Some(last) = steps.last() {
        let verdict = if last.continuous.value < affine {
            "below"
        } else {
            "not below"
        };
        out.line(format!("continuous value {verdict} the affine benchmark"));
    }
    if steps.windows(2).any(|w| w[1].finite_value > w[0].finite_value) {
        out.fail("finite values increase under grid refinement");
    }
    Ok(out)
}

pub fn counterexample(args: &CounterexampleArgs) -> Result<Outcome> {
    match args.which {
        Which::Squarewave => {
            let ns: Vec<usize> = match args.n {
                Some(n) => vec![n],
                None => (4..=10).map(|e| 1usize << e).collect(),
            };
            let report = verify_ci_failure(&ns, &dyadic_intervals(6))?;
            let mut out = Outcome::from_csv(deviation_csv(&report));
            out.text = report.to_text();
            if !report.passed() {
                out.fail("square-wave checks");
            }
            Ok(out)
        }
        Which::Lc => {
            let n = args.n.unwrap_or(1024);
            let report = verify_lc_failure(n)?;
            let mut out = Outcome::new(&["n", "max_deviation", "mixture_status"]);
            out.row(&[
                n.to_string(),
                format!("{:e}", report.max_deviation),
                report.mixture_status.clone(),
            ]);
            out.text = report.to_text();
            if !report.passed() {
                out.fail("the limit measure has a common-randomness representation on the surrogate; exclusion not certified");
            }
            Ok(out)
        }
        Which::Pomdp => {
            if args.runs == 0 {
                return Err(TeamError::validation("runs", "must be at least one").into());
            }
            let ce = PomdpCounterexample::balanced();
            let report = pomdp_report(&ce, args.horizon, args.runs, args.seed)?;
            let mut out = Outcome::new(&[
                "horizon",
                "seed",
                "widesense_reward",
                "classical_value",
                "final_action_frequency",
            ]);
            out.row(&[
                args.horizon.to_string(),
                args.seed.to_string(),
                report.widesense.average_reward.to_string(),
                report.classical.value.to_string(),
                report.final_action_frequency.to_string(),
            ]);
            out.text = report.to_text();
            if !report.passed() {
                out.fail("wide-sense gain");
            }
            Ok(out)
        }
    }
}
