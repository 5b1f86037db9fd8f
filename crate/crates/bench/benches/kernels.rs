use std::hint::black_box;
use criterion::{criterion_group, criterion_main, Criterion};
use mce_bench::fixture;
use mce_core::expr::{eval_jet2, parse_expr};
use mce_core::profile::{build_profile, entropy_curve, log_grid};
use mce_core::special::incomplete_gamma_upper;
use mce_core::{ball_volume, huisken_direct, QuadSpec};

fn special(c: &mut Criterion) {
    c.bench_function("incomplete_gamma_upper", |b| {
        b.iter(|| {
            let mut s = 0.0;
            for k in 1..10 {
                s += incomplete_gamma_upper(black_box(k as f64 / 2.0), black_box(3.7)).unwrap();
            }
            s
        })
    });
}

fn jets(c: &mut Criterion) {
    let e = parse_expr("exp(sin(u) + v^2) * cosh(v) / (1 + u^2)", 2).unwrap();
    c.bench_function("eval_jet2", |b| b.iter(|| eval_jet2(&e, black_box(&[0.3, -0.7])).unwrap()));
}

fn quadrature(c: &mut Criterion) {
    let spec = QuadSpec { eps: 1e-8, ..QuadSpec::default() };
    let (catenoid, y0) = fixture("catenoid");
    let mut g = c.benchmark_group("quad");
    g.sample_size(10);
    g.bench_function("huisken_direct catenoid tau=10", |b| {
        b.iter(|| huisken_direct(&catenoid, &y0, black_box(10.0), &spec).unwrap())
    });
    g.bench_function("ball_volume catenoid r=5", |b| {
        b.iter(|| ball_volume(&catenoid, &y0, black_box(5.0), &spec).unwrap())
    });
    g.finish();
}

fn profiles(c: &mut Criterion) {
    let spec = QuadSpec { eps: 1e-8, ..QuadSpec::default() };
    let (catenoid, y0) = fixture("catenoid");
    let p = build_profile(&catenoid, &y0, &log_grid(0.5, 50.0, 24), &spec).unwrap();
    let taus = log_grid(0.1, 100.0, 25);
    c.bench_function("entropy_curve catenoid 25 taus", |b| b.iter(|| entropy_curve(&p, &taus).unwrap()));
}

criterion_group!(benches, special, jets, quadrature, profiles);
criterion_main!(benches);
