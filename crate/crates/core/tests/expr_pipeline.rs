use mce_core::expr::{eval_jet2, eval_value, parse_expr, BinOp, Expr, Func};
use mce_core::geom::ChartJet;
use mce_core::{mean_curvature_vector, make_surface, SurfaceSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

const N: usize = 2;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0..N).prop_map(Expr::var),
        (0.0f64..4.0).prop_map(|c| Expr::constant((c * 8.0).round() / 8.0)),
    ]
}

fn ast() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::neg),
            (prop::sample::select(Func::ALL.to_vec()), inner.clone()).prop_map(|(f, e)| Expr::call(f, e)),
            (
                prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
            (inner, -3i32..=4).prop_map(|(e, k)| Expr::pow(e, k)),
        ]
    })
}

/// Fourth-order central difference of `g` along axis `a`.
fn diff4(g: &impl Fn(&[f64]) -> Option<Vec<f64>>, u: &[f64], a: usize, h: f64) -> Option<Vec<f64>> {
    let at = |s: f64| {
        let mut v = u.to_vec();
        v[a] += s * h;
        g(&v)
    };
    let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
    Some((0..m2.len()).map(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h)).collect())
}

/// `diff4` at h and h/2; `None` unless the two agree well enough for the
/// smaller step to serve as a reference.
fn reliable_diff(g: impl Fn(&[f64]) -> Option<Vec<f64>>, u: &[f64], a: usize, h: f64) -> Option<Vec<f64>> {
    let coarse = diff4(&g, u, a, h)?;
    let fine = diff4(&g, u, a, 0.5 * h)?;
    let consistent = coarse.iter().zip(&fine).all(|(c, f)| (c - f).abs() / 15.0 <= 1e-8 * (1.0 + f.abs()));
    consistent.then_some(fine)
}

fn close(ad: f64, fd: f64, rtol: f64) -> bool {
    (ad - fd).abs() <= rtol * (1.0 + ad.abs())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, max_global_rejects: 100_000, ..ProptestConfig::default() })]

    #[test]
    fn printed_ast_reparses(e in ast()) {
        let printed = e.to_string();
        let again = parse_expr(&printed, N).unwrap();
        prop_assert!(e.same_structure(&again), "{printed}");
    }

    #[test]
    fn ad_matches_finite_differences(e in ast(), u0 in -1.0f64..1.0, u1 in -1.0f64..1.0) {
        let u = [u0, u1];
        let jet = eval_jet2(&e, &u);
        prop_assume!(jet.is_ok());
        let jet = jet.unwrap();
        let big = |x: f64| !x.is_finite() || x.abs() > 1e4;
        prop_assume!(!big(jet.value) && !jet.grad.iter().any(|&g| big(g)) && !jet.hessian().iter().any(|&g| big(g)));

        let h = 1e-3;
        let value = |v: &[f64]| eval_value(&e, v).ok().filter(|x| x.is_finite()).map(|x| vec![x]);
        let grad = |v: &[f64]| eval_jet2(&e, v).ok().map(|j| j.grad).filter(|g| g.iter().all(|x| x.is_finite()));
        for a in 0..N {
            let fd = reliable_diff(value, &u, a, h);
            let fdg = reliable_diff(grad, &u, a, h);
            prop_assume!(fd.is_some() && fdg.is_some());
            let (fd, fdg) = (fd.unwrap(), fdg.unwrap());
            prop_assert!(close(jet.grad[a], fd[0], 1e-5), "d/du{a} of {e}: {} vs {}", jet.grad[a], fd[0]);
            for b in 0..N {
                prop_assert!(close(jet.hess(b, a), fdg[b], 1e-5), "d2/du{a}du{b} of {e}: {} vs {}", jet.hess(b, a), fdg[b]);
            }
        }
    }
}

#[test]
fn parsed_catenoid_matches_builtin() {
    let spec = SurfaceSpec::from_json(
        r#"{"name":"expr","exprs":"cosh(v)*cos(u); cosh(v)*sin(u); v","n":2,"ambient":3,
            "domain":[[0,6.283185307179586],[null,null]],"periodic":[true,false]}"#,
    )
    .unwrap();
    let parsed = spec.build().unwrap().surface;
    let builtin = make_surface("catenoid", &BTreeMap::new()).unwrap().surface;
    let (cp, cb) = (&parsed.charts()[0], &builtin.charts()[0]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let u = [rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(-3.0..3.0)];
        let (a, b): (ChartJet, ChartJet) = (cp.jet(&u).unwrap(), cb.jet(&u).unwrap());
        let pairs = a.point.iter().chain(&a.jacobian).chain(&a.hessian).zip(b.point.iter().chain(&b.jacobian).chain(&b.hessian));
        for (x, y) in pairs {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()), "{x} vs {y} at {u:?}");
        }
    }
}

#[test]
fn zoo_jets_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for name in ["catenoid", "helicoid", "enneper", "sphere"] {
        let m = make_surface(name, &BTreeMap::new()).unwrap().surface;
        let chart = &m.charts()[0];
        for _ in 0..50 {
            let u = [rng.random_range(0.3..2.8), rng.random_range(-1.5..1.5)];
            let jet = chart.jet(&u).unwrap();
            let n = jet.dim();
            let point = |v: &[f64]| chart.point(v).ok();
            let first = |v: &[f64]| chart.first_order(v).ok().map(|(_, j)| j);
            for a in 0..n {
                let dp = diff4(&point, &u, a, 1e-3).unwrap();
                let dj = diff4(&first, &u, a, 1e-3).unwrap();
                for i in 0..jet.ambient_dim() {
                    assert!(close(jet.d(i, a), dp[i], 1e-8), "{name} d{i}/du{a}");
                    for b in 0..n {
                        assert!(close(jet.dd(i, b, a), dj[i * n + b], 1e-8), "{name} d2{i}/du{a}du{b}");
                    }
                }
            }
        }
    }
}

#[test]
fn mean_curvature_is_normal() {
    // the sphere's H is 2/R along the inward normal; a graph gives a generic test
    let spec = SurfaceSpec::from_json(
        r#"{"name":"expr","exprs":"u; v; u^2 - v^3/3 + sin(u*v)","n":2,"ambient":3,
            "domain":[[-1,1],[-1,1]],"minimal":false}"#,
    )
    .unwrap();
    let m = spec.build().unwrap().surface;
    let sphere = make_surface("sphere", &BTreeMap::new()).unwrap().surface;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for chart in [&m.charts()[0], &sphere.charts()[0]] {
        for _ in 0..100 {
            let u = [rng.random_range(0.2..0.9), rng.random_range(-0.9..0.9)];
            let jet = chart.jet(&u).unwrap();
            let h = mean_curvature_vector(chart, &u).unwrap();
            for a in 0..2 {
                let dot: f64 = (0..3).map(|i| h[i] * jet.d(i, a)).sum();
                let scale = h.iter().map(|x| x * x).sum::<f64>().sqrt() * (0..3).map(|i| jet.d(i, a).powi(2)).sum::<f64>().sqrt();
                assert!(dot.abs() <= 1e-12 * scale.max(1.0), "H·X_u{a} = {dot}");
            }
        }
    }
    let h = mean_curvature_vector(&sphere.charts()[0], &[1.0, 0.5]).unwrap();
    let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((norm - 2.0).abs() < 1e-12);
}

#[test]
fn malformed_surfaces_name_the_span() {
    let cases = [
        ("u; v; u*", 8),
        ("u; v; sin(u", 11),
        ("u; v; foo(u)", 6),
        ("u; v; u $ v", 8),
        ("u; v; (u + v", 12),
    ];
    for (src, at) in cases {
        let spec = SurfaceSpec {
            exprs: Some(src.into()),
            n: Some(2),
            ambient: Some(3),
            domain: Some(vec![[Some(0.0), Some(1.0)]; 2]),
            ..SurfaceSpec::named("expr")
        };
        let err = spec.build().unwrap_err();
        let mce_core::zoo::ZooError::Expr(e) = err else { panic!("{src}: {err}") };
        let span = e.span().expect("span");
        assert!(span.start <= at && at <= span.end, "{src}: {span}");
        assert!(e.render(src).contains('^'));
    }
}
