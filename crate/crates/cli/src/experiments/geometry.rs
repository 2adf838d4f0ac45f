use cartan_core::calculus::{jacobian_of, MetricChart};
use cartan_core::curvature::algebroid_rank;
use cartan_core::{
    curvature, flatness_experiment, infinitesimalize, reconstruct_action, Error, Grid, ReconstructionResult, Route, Vector,
};

use super::{nanmax, worst, Ctx};

const FLAT_TOL: f64 = 1e-4;

pub(super) fn flatness(cx: &mut Ctx) {
    let n = cx.samples;
    let tol = cx.tolerance("curvature", FLAT_TOL);
    let nabla = infinitesimalize(&cx.inst.s, Route::Flow);
    let report = flatness_experiment(&cx.inst.s, &nabla, cx.sub_seed(1), n, tol);
    let field = |f: fn(&cartan_core::FlatnessReport) -> f64| report.clone().map(|r| f(&r));
    if cx.inst.expect_flat {
        cx.upper("curvature", FLAT_TOL, n, |_| field(|r| r.max_curvature));
        cx.upper("torsion", FLAT_TOL, n, |_| field(|r| r.max_torsion));
    } else {
        cx.lower("curved-fraction", 0.8, n, |_| field(|r| r.fraction_both_above(10.0)));
        cx.note(format!("share of points with curvature and torsion both above {:e}", 10.0 * tol));
    }
    cx.upper("antisymmetry", 1e-8, n, |_| field(|r| r.antisymmetry));
    let torsion_tol = cx.tolerance("torsion", FLAT_TOL);
    cx.upper("agreement", 0.0, n, |_| {
        field(|r| r.max_curvature).and_then(|c| {
            let t = field(|r| r.max_torsion)?;
            Ok(if (c <= tol) == (t <= torsion_tol) { 0.0 } else { 1.0 })
        })
    });
    cx.note("0 when curvature and torsion fall on the same side of their tolerances");
    if cx.inst.kind == crate::registry::ModelKind::Surface("perturbed") && cx.inst.eps != 0.0 {
        gauss_gradient(cx, &nabla);
    }
}

/// On the conformal metric `(1 + εx₁²)δ` the curvature of the prolongation
/// derivative has sup-norm `λ|∂₁K|` in the chart frame, and vanishes on
/// `x₁ = 0`.
fn gauss_gradient(cx: &mut Ctx, nabla: &cartan_core::AlgebroidConnection) {
    let eps = cx.inst.eps;
    let probes = [[0.1, 0.2], [-0.25, 0.1], [0.3, -0.3], [0.2, 0.0], [-0.15, -0.2]];
    cx.upper("gauss-gradient", 1e-3, probes.len(), |_| {
        let k = |x: f64| -eps * (1.0 - eps * x * x) / (1.0 + eps * x * x).powi(3);
        worst(probes.len(), |i| {
            let p = probes[i];
            let h = 1e-5;
            let expected = (1.0 + eps * p[0] * p[0]) * ((k(p[0] + h) - k(p[0] - h)) / (2.0 * h)).abs();
            let got = curvature(nabla, &Vector::from_vec(p.to_vec()))?.sup_norm();
            Ok((got - expected).abs() / expected)
        })
    });
    cx.note("relative error against the Gauss curvature gradient");
    cx.upper("symmetry-axis", FLAT_TOL, 1, |_| Ok(curvature(nabla, &Vector::from_vec(vec![0.0, 0.15]))?.sup_norm()));
}

pub(super) fn reconstruct(cx: &mut Ctx) {
    let half_steps = cx.samples;
    let nodes = (2 * half_steps + 1).pow(2);
    let m0 = cx.model().base_box().center();
    let nabla = infinitesimalize(&cx.inst.s, Route::Transport);
    let result = reconstruct_action(&nabla, &Grid::new(m0.clone(), half_steps));
    if let Err(Error::Flatness(h)) = &result {
        let h = *h;
        cx.upper("holonomy", FLAT_TOL, nodes, |_| Ok(h));
        cx.note("parallel transport is path dependent; nothing to reconstruct");
        return;
    }
    let field = |f: fn(&ReconstructionResult) -> f64| result.as_ref().map(f).map_err(Clone::clone);
    cx.upper("holonomy", FLAT_TOL, nodes, |_| field(|r| r.holonomy));
    let rank = algebroid_rank(cx.model(), &m0);
    cx.upper("dimension", 0.0, 1, |_| field(|r| r.dim_g0 as f64).map(|d| (d - rank as f64).abs()));
    if let Ok(r) = &result {
        cx.note(format!("reconstructed algebra has dimension {}, algebroid rank {rank}", r.dim_g0));
    }
    cx.upper("jacobi", 1e-5, nodes, |_| field(|r| r.jacobi_residual));
    cx.upper("homomorphism", 1e-5, nodes, |_| field(|r| r.homomorphism_residual));
    cx.upper("parallelism", 1e-5, nodes, |_| field(|r| r.parallelism_residual));
    if let Some(surface) = cx.inst.surface.clone() {
        cx.upper("killing", 1e-5, 3, |_| {
            let r = result.as_ref().map_err(Clone::clone)?;
            worst(r.dim_g0, |a| killing_defect(&surface.metric, r, a, &m0))
        });
        cx.note("largest Lie derivative of the metric along a reconstructed action field");
    }
}

/// `max |L_X g|` near `m0` for the action field of parallel section `a`.
fn killing_defect(metric: &MetricChart, r: &ReconstructionResult, a: usize, m0: &Vector) -> cartan_core::Result<f64> {
    let field = |m: &Vector| r.action_field(a, m).unwrap_or_else(|_| Vector::from_element(m.len(), f64::NAN));
    let mut out: f64 = 0.0;
    for off in [[0.0, 0.0], [0.05, -0.04], [-0.06, 0.03]] {
        let m = m0 + Vector::from_vec(off.to_vec());
        let x = r.action_field(a, &m)?;
        let dx = jacobian_of(field, &m, 1e-3);
        let g = metric.g(&m);
        let mut lie = dx.transpose() * &g + &g * &dx;
        for k in 0..2 {
            let mut e = Vector::zeros(2);
            e[k] = 1e-5;
            lie += (metric.g(&(&m + &e)) - metric.g(&(&m - &e))) / 2e-5 * x[k];
        }
        out = nanmax(out, lie.amax());
    }
    Ok(out)
}
