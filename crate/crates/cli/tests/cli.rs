use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use teamcorr::instances::TeamSampler;
use teamcorr::{FiniteStaticTeam, ProblemFile, Sense};

fn teamcorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teamcorr"))
        .args(args)
        .env_remove("TEAMCORR_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn chsh() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/chsh.json")
}

fn write_team(dir: &Path, name: &str, team: &FiniteStaticTeam) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, ProblemFile::from_team(team).to_json()).unwrap();
    path
}

#[test]
fn chsh_classical_value_and_profile() {
    let o = teamcorr(&["solve", "--problem", chsh().to_str().unwrap(), "--class", "classical"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("value 0.5\n"), "{text}");
    assert!(text.contains("profiles evaluated 16"));
    assert!(text.contains("dm 2 actions by observation"));
}

#[test]
fn chsh_ns_value_is_one() {
    let o = teamcorr(&["solve", "--problem", chsh().to_str().unwrap(), "--class", "ns"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = stdout(&o).trim().strip_prefix("value ").unwrap().parse().unwrap();
    assert!((v - 1.0).abs() <= 1e-8);
}

#[test]
fn chsh_file_matches_the_library_instance() {
    let text = std::fs::read_to_string(chsh()).unwrap();
    let team = teamcorr::model::parse_team(&text).unwrap();
    let reference = teamcorr::instances::chsh_team();
    assert_eq!(team.cost(), reference.cost());
    assert_eq!(team.prior(), reference.prior());
}

#[test]
fn quantum_class_reaches_tsirelson_and_rejects_other_shapes() {
    let o = teamcorr(&[
        "solve",
        "--problem",
        chsh().to_str().unwrap(),
        "--class",
        "quantum",
        "--seed",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let first = stdout(&o);
    let v: f64 = first
        .lines()
        .next()
        .unwrap()
        .strip_prefix("value ")
        .unwrap()
        .parse()
        .unwrap();
    assert!((v - 0.5f64.sqrt()).abs() <= 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let three = TeamSampler::new(4).product_team_with_sizes(1, vec![2, 2], vec![3, 2], Sense::Maximize);
    let p = write_team(dir.path(), "three.json", &three);
    let o = teamcorr(&["solve", "--problem", p.to_str().unwrap(), "--class", "quantum"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dual_certificate_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.txt");
    let o = teamcorr(&[
        "solve",
        "--problem",
        chsh().to_str().unwrap(),
        "--class",
        "ns",
        "--certificate",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verified: true"));
    let text = std::fs::read_to_string(cert).unwrap();
    assert!(text.starts_with("# teamcorr dual certificate\n"));
    assert!(text.contains("\nbound "));

    let o = teamcorr(&[
        "solve",
        "--problem",
        chsh().to_str().unwrap(),
        "--class",
        "cj",
        "--certificate",
        "x",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn input_errors_exit_2() {
    let o = teamcorr(&["solve", "--problem", "does/not/exist.json", "--class", "ns"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"num_dms\": 2").unwrap();
    let o = teamcorr(&["solve", "--problem", bad.to_str().unwrap(), "--class", "ns"]);
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(
        &bad,
        r#"{"num_dms":1,"omega0_size":1,"obs_sizes":[2],"act_sizes":[2],"sense":"minimize","prior":[0.7,0.7],"cost":[0,0,0,0]}"#,
    )
    .unwrap();
    let o = teamcorr(&["solve", "--problem", bad.to_str().unwrap(), "--class", "classical"]);
    assert_eq!(o.status.code(), Some(2));

    let o = teamcorr(&["solve", "--problem", chsh().to_str().unwrap(), "--class", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = teamcorr(&["witsenhausen", "--k", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = teamcorr(&["witsenhausen", "--k", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = teamcorr(&["--threads", "0", "counterexample", "--which", "pomdp"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oversized_enumeration_is_a_solver_error() {
    let dir = tempfile::tempdir().unwrap();
    let big = TeamSampler::new(1).product_team_with_sizes(1, vec![30, 30], vec![3, 3], Sense::Minimize);
    let p = write_team(dir.path(), "big.json", &big);
    let o = teamcorr(&["solve", "--problem", p.to_str().unwrap(), "--class", "classical"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sequential_problems_are_solved_through_the_reduction() {
    // DM 1 sees ω0 and DM 2 sees DM 1's action; DM 2 must guess ω0.
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("signal.json");
    std::fs::write(
        &p,
        r#"{"num_dms":2,"omega0_size":2,"obs_sizes":[2,2],"act_sizes":[2,2],"sense":"minimize",
            "prior":[0.5,0.5],"cost":[0,1,0,1,1,0,1,0],
            "kernels":[[1,0,0,1],[1,0,0,1,1,0,0,1]]}"#,
    )
    .unwrap();
    let o = teamcorr(&["solve", "--problem", p.to_str().unwrap(), "--class", "classical"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("static reduction"));
    assert!(text.contains("value 0\n"), "{text}");
}

#[test]
fn hierarchy_on_chsh_and_constant_costs() {
    let o = teamcorr(&[
        "hierarchy",
        "--problem",
        chsh().to_str().unwrap(),
        "--xor",
        "--out",
        "-",
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# teamcorr-v1");
    assert_eq!(lines[1], "problem,class,value");
    assert_eq!(lines[2], "chsh,classical,0.5");
    assert!(lines[3].starts_with("chsh,quantum,0.70710678118654"));
    assert_eq!(lines.len(), 7);

    let dir = tempfile::tempdir().unwrap();
    let flat = FiniteStaticTeam::new(
        1,
        vec![2, 3],
        vec![2, 2],
        vec![1.0 / 6.0; 6],
        vec![0.25; 24],
        Sense::Minimize,
    )
    .unwrap();
    let p = write_team(dir.path(), "flat.json", &flat);
    let o = teamcorr(&["hierarchy", "--problem", p.to_str().unwrap(), "--out", "-", "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let values: Vec<f64> = csv
        .lines()
        .skip(2)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 4);
    assert!(values.iter().all(|v| (v - 0.25).abs() <= 1e-9), "{csv}");
}

#[test]
fn hierarchy_on_seeded_random_teams_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let team = TeamSampler::new(seed).product_team(2, 3, Sense::Maximize);
        let p = write_team(dir.path(), &format!("r{seed}.json"), &team);
        let o = teamcorr(&["hierarchy", "--problem", p.to_str().unwrap(), "--xor"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("chain holds"));
    }
}

#[test]
fn csv_goes_to_a_file_and_timing_adds_a_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = teamcorr(&[
        "solve",
        "--problem",
        chsh().to_str().unwrap(),
        "--class",
        "m",
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("# teamcorr-v1\nproblem,class,value\nchsh,M,"));

    let o = teamcorr(&[
        "--timing",
        "solve",
        "--problem",
        chsh().to_str().unwrap(),
        "--class",
        "cj",
        "--out",
        "-",
        "--quiet",
    ]);
    let csv = stdout(&o);
    assert!(csv.contains("problem,class,value,wall_time_s\n"));
    assert_eq!(csv.lines().nth(2).unwrap().split(',').count(), 4);
}

#[test]
fn witsenhausen_output_is_deterministic_across_thread_counts() {
    let run = |threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_teamcorr"))
            .args(["witsenhausen", "--levels", "32", "--seed", "7", "--out", "-", "--quiet"])
            .env("TEAMCORR_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        o.stdout
    };
    let a = run("1");
    assert_eq!(a, run("1"));
    assert_eq!(a, run("4"));
    let csv = String::from_utf8(a).unwrap();
    assert!(csv.starts_with("# teamcorr-v1\nlevels,finite_value,continuous_value,quadrature_bound\n16,"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn witsenhausen_single_level_reports_k2_sigma2() {
    let o = teamcorr(&["witsenhausen", "--levels", "1", "--out", "-", "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let row: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
    let continuous: f64 = row[2].parse().unwrap();
    assert!((continuous - 1.0).abs() <= 1e-9, "{csv}");
}

#[test]
fn squarewave_counterexample_passes() {
    let o = teamcorr(&["counterexample", "--which", "squarewave", "--n", "1024", "--out", "-"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let dev: f64 = csv.lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(dev <= 1.0 / 2048.0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("limit breaks conditional independence PASS"));
}

#[test]
fn pomdp_counterexample_reports_the_doubling() {
    let o = teamcorr(&["counterexample", "--which", "pomdp", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("1.0 vs 0.5"));
}

#[test]
fn lc_counterexample_reports_its_mixture_lp_and_fails_the_exclusion() {
    let o = teamcorr(&["counterexample", "--which", "lc", "--n", "256"]);
    assert_eq!(o.status.code(), Some(4));
    let text = stdout(&o);
    assert!(text.contains("mixture LP on the two-cell surrogate"));
    assert!(text.contains("limit excluded from L_C FAIL"));
}
