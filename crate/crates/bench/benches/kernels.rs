use criterion::{black_box, criterion_group, criterion_main, Criterion};
use shadowtrace::chain::build_chain_graph;
use shadowtrace::entropy::separated_set;
use shadowtrace::horseshoe::{build_certificate, find_loop_family};
use shadowtrace::measure::{dstar, periodic_orbit_measure, TestFunctionFamily};
use shadowtrace::rational::{pow2_neg, rat};
use shadowtrace::shadow::{has_shadowing_at_resolution, is_positively_shadowable_at};
use shadowtrace::{SymbolicSystem, System, SystemPoint};
use shadowtrace_bench::{circle, mixture, periodic, sigma2};

fn separated_sets(c: &mut Criterion) {
    let s = sigma2();
    c.bench_function("separated_set/window/n=10", |b| {
        b.iter(|| separated_set(&s, None, black_box(10), &rat(3, 4), true).unwrap())
    });
    let net = circle(120);
    c.bench_function("separated_set/clique/circle120", |b| {
        b.iter(|| separated_set(&net, None, black_box(3), &rat(1, 30), true).unwrap())
    });
}

fn chains(c: &mut Criterion) {
    let net = circle(360);
    c.bench_function("chain_graph/circle360", |b| b.iter(|| build_chain_graph(&net, &rat(1, 100)).unwrap().decompose()));
}

fn shadowing(c: &mut Criterion) {
    let gm: System = SymbolicSystem::golden_mean().into();
    c.bench_function("shadowing/golden_mean/m=3", |b| {
        b.iter(|| has_shadowing_at_resolution(&gm, &pow2_neg(5), &pow2_neg(3), 12, false).unwrap())
    });
    let net = circle(360);
    c.bench_function("positive/circle360", |b| {
        b.iter(|| is_positively_shadowable_at(&net, &SystemPoint::Net(180), &rat(1, 20), &rat(1, 100), 10).unwrap())
    });
}

fn measures(c: &mut Criterion) {
    let s = sigma2();
    let fam = TestFunctionFamily::standard(&s).unwrap();
    let mu = mixture(&s);
    let nu = periodic_orbit_measure(&s, &periodic(&[0, 0, 1, 1, 0, 1, 0])).unwrap();
    c.bench_function("dstar/sigma2", |b| b.iter(|| dstar(&s, &mu, &nu, &fam).unwrap()));
}

fn horseshoes(c: &mut Criterion) {
    let s = sigma2();
    let fam = find_loop_family(&s, &periodic(&[0]), &rat(1, 5), &rat(1, 8), 16, 2).unwrap().unwrap();
    c.bench_function("certificate/sigma2/L=6", |b| b.iter(|| build_certificate(&s, &fam, 6).unwrap()));
}

criterion_group!(benches, separated_sets, chains, shadowing, measures, horseshoes);
criterion_main!(benches);
