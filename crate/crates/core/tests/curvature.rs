mod common;

use cartan_core::calculus::jacobian_of;
use cartan_core::curvature::{curvature_with_step, CURVATURE_STEP};
use cartan_core::models::{classical_to_groupoid, make_isometry_jet_groupoid, metrics, plane_frames_omega};
use cartan_core::{
    curvature, flatness_experiment, infinitesimalize, reconstruct_action, Error, Grid, GroupoidModel, Matrix,
    MetricChart, ReconstructionResult, Route, Vector,
};

const TOL: f64 = 1e-4;

#[test]
fn flat_models_have_vanishing_curvature_and_torsion() {
    for name in [
        "pair-R2",
        "translation-R2",
        "se2-action",
        "so3-sphere",
        "se2-so2",
        "isojet-euclidean",
        "isojet-sphere",
        "isojet-hyperbolic",
    ] {
        let e = common::build(name);
        let nabla = infinitesimalize(&e.s, Route::Flow);
        let report = flatness_experiment(&e.s, &nabla, 3, 20, TOL).unwrap();
        assert!(report.flat(), "{name}: curvature {:e}", report.max_curvature);
        assert!(report.involutive(), "{name}: torsion {:e}", report.max_torsion);
        assert!(report.antisymmetry <= 1e-8, "{name}: antisymmetry {:e}", report.antisymmetry);
    }
}

#[test]
fn perturbed_metric_is_curved_and_non_involutive() {
    let e = common::build("isojet-perturbed");
    let nabla = infinitesimalize(&e.s, Route::Flow);
    let report = flatness_experiment(&e.s, &nabla, 3, 20, TOL).unwrap();
    assert!(report.agreement());
    assert!(report.fraction_both_above(10.0) >= 0.8, "{:?}", report.rows);
}

/// Gaussian curvature of `(1 + εx₁²)δ` and its `x₁`-derivative.
fn conformal_gauss(eps: f64, x1: f64) -> (f64, f64) {
    let k = |x: f64| -eps * (1.0 - eps * x * x) / (1.0 + eps * x * x).powi(3);
    let h = 1e-5;
    (k(x1), (k(x1 + h) - k(x1 - h)) / (2.0 * h))
}

#[test]
fn curvature_of_the_perturbed_metric_tracks_the_gauss_curvature_gradient() {
    // On an isometric-jet algebroid the curvature of the prolongation
    // connection is the covariant derivative of the Riemann tensor; for a
    // conformally flat surface its sup-norm is `λ|∂₁K|` in the chart frame.
    let eps = 1.0;
    let (_, s) = make_isometry_jet_groupoid(metrics::perturbed(eps), 2, 20).unwrap();
    let nabla = infinitesimalize(&s, Route::Flow);
    for p in [[0.1, 0.2], [-0.25, 0.1], [0.3, -0.3], [0.2, 0.0], [-0.15, -0.2]] {
        let m = Vector::from_vec(p.to_vec());
        let lambda = 1.0 + eps * p[0] * p[0];
        let (_, dk) = conformal_gauss(eps, p[0]);
        let expected = lambda * dk.abs();
        let got = curvature(&nabla, &m).unwrap().sup_norm();
        assert!((got - expected).abs() <= 1e-3 * expected, "{p:?}: {got:e} vs {expected:e}");
    }
    let axis = curvature(&nabla, &Vector::from_vec(vec![0.0, 0.15])).unwrap().sup_norm();
    assert!(axis <= TOL, "curvature on the symmetry axis {axis:e}");
}

#[test]
fn curvature_stencil_converges() {
    let e = common::build("isojet-sphere");
    let nabla = infinitesimalize(&e.s, Route::Flow);
    let m = Vector::from_vec(vec![0.25, -0.28]);
    let coarse = curvature_with_step(&nabla, &m, 4.0 * CURVATURE_STEP).unwrap().sup_norm();
    let fine = curvature(&nabla, &m).unwrap().sup_norm();
    assert!(fine < coarse, "{fine:e} !< {coarse:e}");
    assert!(fine <= 1e-5);
}

#[test]
fn twisted_gauge_connection_is_curved() {
    let (_, s) = classical_to_groupoid(&plane_frames_omega(1.0), 1, 20).unwrap();
    let nabla = infinitesimalize(&s, Route::Flow);
    let report = flatness_experiment(&s, &nabla, 4, 10, TOL).unwrap();
    assert!(!report.flat() && !report.involutive());
    assert!(report.fraction_both_above(10.0) >= 0.8);
}

fn reconstruct(name: &'static str) -> ReconstructionResult {
    let e = common::build(name);
    let nabla = infinitesimalize(&e.s, Route::Transport);
    let grid = Grid::new(e.model.base_box().center(), 2);
    reconstruct_action(&nabla, &grid).unwrap()
}

fn killing_form(r: &ReconstructionResult) -> Matrix {
    let d = r.dim_g0;
    let ad = |a: usize| Matrix::from_fn(d, d, |k, j| r.constant(k, a, j));
    Matrix::from_fn(d, d, |a, b| (ad(a) * ad(b)).trace())
}

fn assert_consistent(name: &str, r: &ReconstructionResult) {
    assert!(r.holonomy <= TOL, "{name}: holonomy {:e}", r.holonomy);
    assert!(r.jacobi_residual <= 1e-5, "{name}: jacobi {:e}", r.jacobi_residual);
    assert!(r.homomorphism_residual <= 1e-5, "{name}: homomorphism {:e}", r.homomorphism_residual);
    assert!(r.parallelism_residual <= 1e-5, "{name}: parallelism {:e}", r.parallelism_residual);
}

/// `max |L_X g|` at a few points for the action field `X` of section `a`.
fn killing_defect(metric: &MetricChart, r: &ReconstructionResult, a: usize) -> f64 {
    let field = |m: &Vector| r.action_field(a, m).unwrap();
    let mut worst: f64 = 0.0;
    for p in [[0.0, 0.0], [0.05, -0.04], [-0.06, 0.03]] {
        let m = Vector::from_vec(p.to_vec());
        let x = field(&m);
        let dx = jacobian_of(field, &m, 1e-3);
        let g = metric.g(&m);
        let mut lie = dx.transpose() * &g + &g * &dx;
        for k in 0..2 {
            let mut e = Vector::zeros(2);
            e[k] = 1e-5;
            lie += (metric.g(&(&m + &e)) - metric.g(&(&m - &e))) / 2e-5 * x[k];
        }
        worst = worst.max(lie.amax());
    }
    worst
}

#[test]
fn flat_translations_reconstruct_an_abelian_algebra() {
    for name in ["pair-R2", "translation-R2"] {
        let r = reconstruct(name);
        assert_eq!(r.dim_g0, 2, "{name}");
        assert!(r.max_constant() <= 1e-6, "{name}: {:e}", r.max_constant());
        assert_consistent(name, &r);
    }
}

#[test]
fn euclidean_motions_reconstruct_a_solvable_algebra() {
    for name in ["se2-action", "se2-so2", "isojet-euclidean"] {
        let r = reconstruct(name);
        assert_eq!(r.dim_g0, 3, "{name}");
        assert_eq!(r.derived_rank, 2, "{name}");
        let k = killing_form(&r);
        assert_eq!(k.rank(1e-6), 1, "{name}: killing form {k}");
        assert!(k.symmetric_eigenvalues().iter().all(|&l| l <= 1e-6), "{name}");
        assert_consistent(name, &r);
    }
}

#[test]
fn round_sphere_reconstructs_a_compact_simple_algebra() {
    for name in ["so3-sphere", "isojet-sphere"] {
        let r = reconstruct(name);
        assert_eq!(r.dim_g0, 3, "{name}");
        assert_eq!(r.derived_rank, 3, "{name}");
        let eig = killing_form(&r).symmetric_eigenvalues();
        assert!(eig.iter().all(|&l| l < -1e-3), "{name}: killing eigenvalues {eig}");
        assert_consistent(name, &r);
    }
}

#[test]
fn hyperbolic_plane_reconstructs_a_split_simple_algebra() {
    let r = reconstruct("isojet-hyperbolic");
    assert_eq!(r.dim_g0, 3);
    assert_eq!(r.derived_rank, 3);
    let eig = killing_form(&r).symmetric_eigenvalues();
    let pos = eig.iter().filter(|&&l| l > 1e-3).count();
    let neg = eig.iter().filter(|&&l| l < -1e-3).count();
    assert_eq!((pos, neg), (2, 1), "killing eigenvalues {eig}");
    assert_consistent("isojet-hyperbolic", &r);
}

#[test]
fn reconstructed_isometry_fields_preserve_the_metric() {
    for (name, metric) in [("isojet-sphere", metrics::sphere()), ("isojet-hyperbolic", metrics::hyperbolic())] {
        let r = reconstruct(name);
        for a in 0..r.dim_g0 {
            let d = killing_defect(&metric, &r, a);
            assert!(d <= 1e-5, "{name}: section {a} moves the metric by {d:e}");
        }
    }
}

#[test]
fn curved_connections_refuse_reconstruction() {
    let e = common::build("isojet-perturbed");
    let nabla = infinitesimalize(&e.s, Route::Transport);
    let grid = Grid::new(e.model.base_box().center(), 2);
    assert!(matches!(reconstruct_action(&nabla, &grid), Err(Error::Flatness(_))));
    let (model, s) = classical_to_groupoid(&plane_frames_omega(1.0), 1, 20).unwrap();
    let grid = Grid::new(model.base_box().center(), 2);
    let nabla = infinitesimalize(&s, Route::Transport);
    assert!(matches!(reconstruct_action(&nabla, &grid), Err(Error::Flatness(_))));
}

#[test]
fn flatness_experiment_needs_a_verified_connection() {
    let model = std::sync::Arc::new(cartan_core::models::SurfaceIsoJet::new(metrics::sphere()).unwrap());
    let s = cartan_core::models::isojet::prolongation_connection(model.clone());
    let nabla = infinitesimalize(&s, Route::Flow);
    let _ = model.dim();
    assert!(matches!(flatness_experiment(&s, &nabla, 1, 2, TOL), Err(Error::NotMultiplicative(_))));
}
