mod common;

use std::sync::Arc;

use cartan_core::calculus::jacobian_of;
use cartan_core::connection::{check_integral_products, parallel_transport};
use cartan_core::groupoid::vertical_basis;
use cartan_core::models::nabla_omega;
use cartan_core::models::maurer_cartan_se2;
use cartan_core::{
    check_multiplicative, infinitesimalize, BasePath, GroupoidModel, KernelHom, Matrix, Provenance, Route, Vector,
};
use rand::Rng;

const ROUTE_SAMPLES: usize = 100;
const ROUTE_TOL: f64 = 1e-4;

/// A smooth vertical section `m ↦ basis(unit m)·c(m)` with quadratic
/// coefficients.
fn test_section(model: &dyn GroupoidModel, seed: u64) -> impl Fn(&Vector) -> Vector + '_ {
    let mut rng = common::rng(seed);
    let k = model.dim() - model.base_dim();
    let n = model.base_dim();
    let c0 = Vector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
    let c1 = Matrix::from_fn(k, n, |_, _| rng.random_range(-1.0..1.0));
    let c2 = Vector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
    move |m: &Vector| {
        let coeffs = &c0 + &c1 * m + &c2 * m.norm_squared();
        vertical_basis(model, &model.unit(m)) * coeffs
    }
}

#[test]
fn connections_of_the_zoo_are_multiplicative() {
    for e in common::full_zoo() {
        let report = check_multiplicative(&e.s, 77, 100, 1e-7).unwrap();
        assert!(report.passed(), "{}: {report:?}", e.name);
    }
}

#[test]
fn perturbing_a_connection_breaks_multiplicativity() {
    for e in common::arithmetic_zoo() {
        let model = e.model.clone();
        let phi = Arc::new(move |m: &Vector| {
            let basis = vertical_basis(model.as_ref(), &model.unit(m));
            let n = model.base_dim();
            let coeffs = Matrix::from_fn(basis.ncols(), n, |i, j| 0.1 * (1.0 + m[0]) * ((i + 2 * j) as f64).cos());
            KernelHom::new(m.clone(), basis * coeffs)
        });
        let bad = e.s.perturbed(phi);
        assert!(!bad.is_verified());
        let report = check_multiplicative(&bad, 5, 100, 1e-7).unwrap();
        assert!(report.max_error > 1e-3, "{}: fault went unnoticed ({:e})", e.name, report.max_error);
    }
}

#[test]
fn flow_and_transport_routes_agree() {
    for e in common::full_zoo() {
        let model: &dyn GroupoidModel = e.model.as_ref();
        let flow = infinitesimalize(&e.s, Route::Flow);
        let transport = infinitesimalize(&e.s, Route::Transport);
        assert_eq!(flow.provenance, Provenance::FlowFormula);
        assert_eq!(transport.provenance, Provenance::ParallelTransport);
        let x = test_section(model, 8);
        let mut rng = common::rng(9);
        let inner = model.base_box().scaled(0.7);
        let mut worst: f64 = 0.0;
        for _ in 0..ROUTE_SAMPLES {
            let m = inner.sample(&mut rng);
            let v = Vector::from_fn(model.base_dim(), |_, _| rng.random_range(-1.0..1.0));
            let a = flow.nabla(&m, &v, &x).unwrap();
            let b = transport.nabla(&m, &v, &x).unwrap();
            worst = worst.max((a - b).amax());
        }
        assert!(worst <= ROUTE_TOL, "{}: routes differ by {worst:e}", e.name);
    }
}

#[test]
fn classical_route_agrees_on_the_gauge_model() {
    let e = common::build("se2-so2");
    let model: &dyn GroupoidModel = e.model.as_ref();
    let classical = nabla_omega(&maurer_cartan_se2());
    let flow = infinitesimalize(&e.s, Route::Flow);
    let x = test_section(model, 10);
    let mut rng = common::rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..ROUTE_SAMPLES {
        let m = model.base_box().scaled(0.7).sample(&mut rng);
        let v = Vector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        worst = worst.max((classical.nabla(&m, &v, &x).unwrap() - flow.nabla(&m, &v, &x).unwrap()).amax());
    }
    assert!(worst <= ROUTE_TOL, "classical route differs by {worst:e}");
}

#[test]
fn constant_bisections_induce_the_trivial_derivative() {
    for name in ["pair-R2", "translation-R2", "se2-action", "so3-sphere"] {
        let e = common::build(name);
        let model: &dyn GroupoidModel = e.model.as_ref();
        let nabla = infinitesimalize(&e.s, Route::Flow);
        let x = test_section(model, 12);
        let mut rng = common::rng(13);
        for _ in 0..20 {
            let m = model.base_box().scaled(0.7).sample(&mut rng);
            let v = Vector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            let expected = jacobian_of(&x, &m, 1e-5) * &v;
            let got = nabla.nabla(&m, &v, &x).unwrap();
            assert!((got - expected).amax() <= 1e-6, "{name}");
        }
    }
}

#[test]
fn derivative_obeys_the_leibniz_rule() {
    for e in common::arithmetic_zoo() {
        let model: &dyn GroupoidModel = e.model.as_ref();
        let nabla = infinitesimalize(&e.s, Route::Flow);
        let x = test_section(model, 14);
        let f = |m: &Vector| 1.0 + m[0] * m[1] - 0.5 * m[1];
        let fx = |m: &Vector| x(m) * f(m);
        let mut rng = common::rng(15);
        for _ in 0..20 {
            let m = model.base_box().scaled(0.7).sample(&mut rng);
            let v = Vector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            let df = (f(&(&m + &v * 1e-6)) - f(&(&m - &v * 1e-6))) / 2e-6;
            let expected = x(&m) * df + nabla.nabla(&m, &v, &x).unwrap() * f(&m);
            let got = nabla.nabla(&m, &v, &fx).unwrap();
            assert!((got - expected).amax() <= 1e-5, "{}", e.name);
            let doubled = nabla.nabla(&m, &(&v * 2.0), &x).unwrap();
            assert!((doubled - nabla.nabla(&m, &v, &x).unwrap() * 2.0).amax() <= 1e-5, "{}", e.name);
        }
    }
}

#[test]
fn horizontal_bisections_compose_to_horizontal_bisections() {
    for name in ["pair-R2", "se2-action", "se2-so2"] {
        let e = common::build(name);
        let report = check_integral_products(&e.s, 16, 10).unwrap();
        assert!(report.factor_error <= 1e-5, "{name}: {report:?}");
        assert!(report.product_error <= 1e-6, "{name}: {report:?}");
    }
}

#[test]
fn transport_along_a_closed_loop_returns_home() {
    for name in ["se2-action", "isojet-euclidean"] {
        let e = common::build(name);
        let model: &dyn GroupoidModel = e.model.as_ref();
        let m = model.base_box().center();
        let g = model.unit(&m);
        let a = Vector::from_vec(vec![0.2, 0.0]);
        let b = Vector::from_vec(vec![0.2, 0.2]);
        let out = [BasePath::segment(&m, &(&m + &a)), BasePath::segment(&(&m + &a), &(&m + &b))];
        let back = BasePath::segment(&(&m + &b), &m);
        let mut h = g.clone();
        for p in out.iter().chain(std::iter::once(&back)) {
            h = parallel_transport(&e.s, p, 0.0, 1.0, &h).unwrap();
        }
        assert!((h - g).amax() <= 1e-8, "{name}");
    }
}
