mod common;

use std::sync::Arc;

use cartan_core::calculus::BoxDomain;
use cartan_core::models::classical::{
    curvature_in_frame, representative_jet, roundtrip_connection_error, roundtrip_omega_error, se2_bracket, so3_bracket,
    PrincipalBundle,
};
use cartan_core::models::{
    classical_curvature, classical_to_groupoid, maurer_cartan_se2, nabla_omega, plane_frames_omega, recover_omega,
    ClassicalCartan, PlaneFrames,
};
use cartan_core::groupoid::vertical_basis;
use cartan_core::{infinitesimalize, CartanConnection, Error, GroupoidModel, Matrix, Route, Vector};
use rand::Rng;

fn forms() -> [ClassicalCartan; 2] {
    [maurer_cartan_se2(), plane_frames_omega(1.0)]
}

#[test]
fn plane_frame_forms_are_cartan_connections() {
    for w in forms() {
        let inv = w.check_invariants(1, 100).unwrap();
        assert!(inv.fundamental <= 1e-9, "{}: {inv:?}", w.label);
        assert!(inv.equivariance <= 1e-9, "{}: {inv:?}", w.label);
        assert!(inv.min_det > 0.5, "{}: {inv:?}", w.label);
    }
}

#[test]
fn connection_jets_do_not_depend_on_the_representative() {
    for w in forms() {
        let b = w.bundle.clone();
        let mut rng = common::rng(2);
        let bx = b.total_box().scaled(0.7);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let (q, p) = (bx.sample(&mut rng), bx.sample(&mut rng));
            let h = b.h_exp(&Vector::from_fn(b.algebra_dim(), |_, _| rng.random_range(-0.5..0.5)));
            let (g1, mu1) = representative_jet(&w, &q, &p).unwrap();
            let (g2, mu2) = representative_jet(&w, &b.act(&q, &h), &b.act(&p, &h)).unwrap();
            worst = worst.max((g1 - g2).amax()).max((mu1 - mu2).amax());
        }
        assert!(worst <= 1e-8, "{}: {worst:e}", w.label);
    }
}

#[test]
fn classical_forms_round_trip_through_the_gauge_groupoid() {
    let m0 = Vector::from_vec(vec![0.1, -0.05]);
    for w in forms() {
        let err = roundtrip_omega_error(&w, &m0, 3, 50).unwrap();
        assert!(err <= 1e-6, "{}: {err:e}", w.label);
    }
}

#[test]
fn groupoid_connections_round_trip_through_the_fibre_bundle() {
    for name in ["se2-action", "se2-so2", "isojet-sphere", "isojet-perturbed"] {
        let e = common::build(name);
        let m0 = e.model.base_box().center();
        let err = roundtrip_connection_error(&e.s, &m0, 4, 30).unwrap();
        assert!(err <= 1e-6, "{name}: {err:e}");
        let inv = recover_omega(&e.s, &m0).unwrap().check_invariants(5, 20).unwrap();
        assert!(inv.fundamental <= 1e-7 && inv.equivariance <= 1e-7, "{name}: {inv:?}");
    }
}

#[test]
fn classical_and_groupoid_derivatives_agree() {
    for w in forms() {
        let (model, s) = classical_to_groupoid(&w, 1, 30).unwrap();
        let classical = nabla_omega(&w);
        let flow = infinitesimalize(&s, Route::Flow);
        let m: &dyn GroupoidModel = model.as_ref();
        let mut rng = common::rng(6);
        let c = Matrix::from_fn(1, 2, |_, _| rng.random_range(-1.0..1.0));
        let x = |p: &Vector| vertical_basis(m, &m.unit(p)) * (Vector::from_vec(vec![0.3, -0.2, 0.5]) + Vector::from_vec(vec![p[0], p[1] * p[1], (&c * p)[0]]));
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let p = m.base_box().scaled(0.7).sample(&mut rng);
            let v = Vector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            worst = worst.max((classical.nabla(&p, &v, &x).unwrap() - flow.nabla(&p, &v, &x).unwrap()).amax());
        }
        assert!(worst <= 1e-4, "{}: {worst:e}", w.label);
    }
}

/// `[x, y]` for right-invariant fields: minus the commutator of the matrices
/// `[[0, −w, a₁], [w, 0, a₂], [0, 0, 0]]`.
fn se2_right_bracket(x: &Vector, y: &Vector) -> Vector {
    let hat = |v: &Vector| Matrix::from_row_slice(3, 3, &[0.0, -v[2], v[0], v[2], 0.0, v[1], 0.0, 0.0, 0.0]);
    let c = hat(y) * hat(x) - hat(x) * hat(y);
    Vector::from_vec(vec![c[(0, 2)], c[(1, 2)], c[(1, 0)]])
}

#[test]
fn maurer_cartan_form_is_flat_for_its_own_bracket() {
    let curv = classical_curvature(&maurer_cartan_se2(), &se2_bracket, 1, 5).unwrap();
    assert!(curv.omega_norm <= 1e-6, "{curv:?}");
    assert!(curv.derivative_norm <= 1e-4, "{curv:?}");
    assert!(curv.antisymmetry <= 1e-8);
    let mut rng = common::rng(7);
    for _ in 0..20 {
        let x = Vector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let y = Vector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        assert!((se2_bracket(&x, &y) - se2_right_bracket(&x, &y)).amax() <= 1e-14);
    }
}

#[test]
fn foreign_bracket_gives_constant_curvature() {
    let w = maurer_cartan_se2();
    let curv = classical_curvature(&w, &so3_bracket, 1, 5).unwrap();
    assert!(curv.derivative_norm <= 1e-4, "{curv:?}");
    let p = Vector::from_vec(vec![0.2, -0.1, 0.4]);
    let kappa = curvature_in_frame(&w, &so3_bracket, &p).unwrap();
    for a in 0..3 {
        for b in 0..3 {
            let (ea, eb) = (unit(a), unit(b));
            let cross = nalgebra::Vector3::new(ea[0], ea[1], ea[2]).cross(&nalgebra::Vector3::new(eb[0], eb[1], eb[2]));
            let expected = se2_right_bracket(&ea, &eb) + Vector::from_vec(vec![cross[0], cross[1], cross[2]]);
            assert!((&kappa[a][b] - &expected).amax() <= 1e-6, "({a},{b}): {} vs {expected}", kappa[a][b]);
        }
    }
    assert!(curv.omega_norm >= 0.5);
}

fn unit(i: usize) -> Vector {
    let mut e = Vector::zeros(3);
    e[i] = 1.0;
    e
}

#[test]
fn twisted_form_curvature_matches_its_closed_form() {
    let c = 1.0;
    let w = plane_frames_omega(c);
    let mut rng = common::rng(8);
    for _ in 0..10 {
        let p = w.bundle.total_box().scaled(0.8).sample(&mut rng);
        let (y1, theta) = (p[0], p[2]);
        let (s, co) = theta.sin_cos();
        // Translation part of ω⁻¹e_a is R_θ a; its dy₂ component feeds the twist.
        let shift = |e: &Vector| c * y1 * y1 * (s * e[0] + co * e[1]);
        let kappa = curvature_in_frame(&w, &se2_bracket, &p).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let (ea, eb) = (unit(a), unit(b));
                let ta = &ea - unit(2) * shift(&ea);
                let tb = &eb - unit(2) * shift(&eb);
                let area = ea[0] * eb[1] - ea[1] * eb[0];
                let expected = se2_right_bracket(&ta, &tb) + unit(2) * (2.0 * c * y1 * area) - se2_right_bracket(&ea, &eb);
                assert!((&kappa[a][b] - &expected).amax() <= 1e-6, "({a},{b}) at {p}: {} vs {expected}", kappa[a][b]);
            }
        }
    }
    let curv = classical_curvature(&w, &se2_bracket, 1, 5).unwrap();
    assert!(curv.omega_norm > 1e-3 && curv.derivative_norm > 1e-3, "{curv:?}");
}

/// Plane frames whose normaliser misses the slice.
struct SkewedFrames;

impl PrincipalBundle for SkewedFrames {
    fn name(&self) -> String {
        "skewed".into()
    }
    fn total_dim(&self) -> usize {
        3
    }
    fn base_dim(&self) -> usize {
        2
    }
    fn algebra_dim(&self) -> usize {
        1
    }
    fn project(&self, p: &Vector) -> Vector {
        PlaneFrames.project(p)
    }
    fn act(&self, p: &Vector, h: &Vector) -> Vector {
        PlaneFrames.act(p, h)
    }
    fn h_mul(&self, a: &Vector, b: &Vector) -> Vector {
        a + b
    }
    fn h_inv(&self, a: &Vector) -> Vector {
        -a
    }
    fn h_identity(&self) -> Vector {
        Vector::zeros(1)
    }
    fn h_exp(&self, xi: &Vector) -> Vector {
        xi.clone()
    }
    fn slice(&self, m: &Vector) -> Vector {
        PlaneFrames.slice(m)
    }
    fn normalizer(&self, p: &Vector) -> Vector {
        Vector::from_vec(vec![0.1 - p[2]])
    }
    fn total_box(&self) -> BoxDomain {
        PlaneFrames.total_box()
    }
    fn base_box(&self) -> BoxDomain {
        PlaneFrames.base_box()
    }
}

#[test]
fn inconsistent_slices_are_rejected() {
    let mc = maurer_cartan_se2();
    let skewed = ClassicalCartan::new(
        Arc::new(SkewedFrames),
        "skewed",
        Arc::new(move |p: &Vector| mc.omega_matrix(p)),
        Matrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]),
        Arc::new(|_h: &Vector, xi: &Vector| xi.clone()),
    );
    assert!(matches!(classical_to_groupoid(&skewed, 1, 10), Err(Error::Slice(_))));
}

/// The bundle of additive groups `ℝ × ℝ²`; every arrow is an isotropy arrow.
struct LineBundle;

impl GroupoidModel for LineBundle {
    fn name(&self) -> String {
        "line-bundle".into()
    }
    fn base_dim(&self) -> usize {
        2
    }
    fn dim(&self) -> usize {
        3
    }
    fn source(&self, g: &Vector) -> Vector {
        g.rows(1, 2).into_owned()
    }
    fn target(&self, g: &Vector) -> Vector {
        g.rows(1, 2).into_owned()
    }
    fn unit(&self, m: &Vector) -> Vector {
        Vector::from_vec(vec![0.0, m[0], m[1]])
    }
    fn mul(&self, g: &Vector, h: &Vector) -> Vector {
        Vector::from_vec(vec![g[0] + h[0], h[1], h[2]])
    }
    fn inv(&self, g: &Vector) -> Vector {
        Vector::from_vec(vec![-g[0], g[1], g[2]])
    }
    fn retract_source(&self, g: &Vector, m: &Vector) -> Vector {
        Vector::from_vec(vec![g[0], m[0], m[1]])
    }
    fn retract_target(&self, g: &Vector, m: &Vector) -> Vector {
        Vector::from_vec(vec![g[0], m[0], m[1]])
    }
    fn domain_box(&self) -> BoxDomain {
        BoxDomain::cube(3, 0.5)
    }
    fn base_box(&self) -> BoxDomain {
        BoxDomain::cube(2, 0.5)
    }
}

#[test]
fn bundles_of_groups_have_no_fibre_bundle() {
    let model = Arc::new(LineBundle);
    let s = CartanConnection::new(model, "flat", |_g: &Vector| Matrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]))
        .verified(1, 20)
        .unwrap();
    let m0 = Vector::zeros(2);
    assert!(matches!(recover_omega(&s, &m0), Err(Error::Transitivity(_))));
}
