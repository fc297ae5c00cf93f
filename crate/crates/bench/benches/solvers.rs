use criterion::{black_box, criterion_group, criterion_main, Criterion};

use teamcorr::approx::{solve_witsenhausen, WitsenhausenModel, WITSENHAUSEN_MAX_ROUNDS};
use teamcorr::instances::{chsh_team, TeamSampler};
use teamcorr::quantum::{solve_xor_team, XOR_RESTARTS, XOR_TOL};
use teamcorr::relax::{solve_m, solve_ns};
use teamcorr::{enumerate_optimal, Sense, WitsenhausenInstance, XorTeam};

fn classical(c: &mut Criterion) {
    let chsh = chsh_team();
    c.bench_function("enumerate chsh", |b| {
        b.iter(|| enumerate_optimal(black_box(&chsh)).unwrap())
    });
    let team = TeamSampler::new(7).product_team_with_sizes(1, vec![4, 4, 3], vec![3, 3, 2], Sense::Minimize);
    c.bench_function("enumerate 3 dms, 3^8 * 2^3 profiles", |b| {
        b.iter(|| enumerate_optimal(black_box(&team)).unwrap())
    });
}

fn relaxations(c: &mut Criterion) {
    let team = TeamSampler::new(3).product_team_with_sizes(2, vec![3, 3], vec![3, 3], Sense::Maximize);
    c.bench_function("ns lp 2 dms 3x3", |b| b.iter(|| solve_ns(black_box(&team)).unwrap()));
    c.bench_function("m lp 2 dms 3x3", |b| b.iter(|| solve_m(black_box(&team)).unwrap()));
}

fn quantum(c: &mut Criterion) {
    let x = XorTeam::new(vec![vec![1.0 / 64.0; 8]; 8], vec![vec![0; 8]; 8]).unwrap();
    c.bench_function("xor 8x8", |b| {
        b.iter(|| solve_xor_team(black_box(&x), XOR_RESTARTS, XOR_TOL, 0).unwrap())
    });
}

fn witsenhausen(c: &mut Criterion) {
    let inst = WitsenhausenInstance::new(0.2, 5.0).unwrap();
    let model = WitsenhausenModel::standard(inst, 16, 4.0).unwrap();
    let team = model.build_team().unwrap();
    let mut group = c.benchmark_group("witsenhausen");
    group.sample_size(10);
    group.bench_function("build team 16 levels", |b| b.iter(|| model.build_team().unwrap()));
    group.bench_function("solve 16 levels", |b| {
        b.iter(|| solve_witsenhausen(&team, &model, WITSENHAUSEN_MAX_ROUNDS, 0, None).unwrap())
    });
    group.finish();
}

criterion_group!(benches, classical, relaxations, quantum, witsenhausen);
criterion_main!(benches);
