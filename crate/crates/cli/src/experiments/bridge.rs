use cartan_core::groupoid::sample_arrow;
use cartan_core::models::classical::{
    representative_jet, roundtrip_connection_error, roundtrip_omega_error, ClassicalCartan,
};
use cartan_core::models::{classical_curvature, nabla_omega, recover_omega};
use cartan_core::{curvature, infinitesimalize, Route, Vector};
use rand::Rng;

use super::{least, nanmax, random_vector, test_section, worst, Ctx};
use crate::registry::DEFAULT_BRACKET;

const CURVATURE_POINTS: usize = 5;

pub(super) fn classical_bridge(cx: &mut Ctx) {
    let n = cx.samples;
    let m0 = cx.model().base_box().center();
    cx.upper("connection-roundtrip", 1e-6, n, |cx| roundtrip_connection_error(&cx.inst.s, &m0, cx.sub_seed(1), n));
    cx.note("groupoid connection rebuilt from its recovered Cartan form");
    cx.upper("recovered-invariants", 1e-7, n, |cx| {
        let inv = recover_omega(&cx.inst.s, &m0)?.check_invariants(cx.sub_seed(2), n)?;
        Ok(nanmax(inv.fundamental, inv.equivariance))
    });
    let Some(omega) = cx.inst.classical.clone() else { return };
    cx.upper("invariants", 1e-9, n, |cx| {
        let inv = omega.check_invariants(cx.sub_seed(3), n)?;
        Ok(nanmax(inv.fundamental, inv.equivariance))
    });
    cx.upper("representative", 1e-8, n, |cx| representative_residual(cx, &omega, n));
    cx.upper("omega-roundtrip", 1e-6, n, |cx| roundtrip_omega_error(&omega, &m0, cx.sub_seed(5), n));
    cx.note("Cartan form recovered from its groupoid connection, after fibre identification");
    cx.upper("nabla-agreement", 1e-4, n, |cx| {
        let model = cx.model();
        let classical = nabla_omega(&omega);
        let flow = infinitesimalize(&cx.inst.s, Route::Flow);
        let mut rng = cx.rng(6);
        let x = test_section(model, &mut rng);
        let inner = model.base_box().scaled(0.7);
        worst(n, |_| {
            let m = inner.sample(&mut rng);
            let v = random_vector(model.base_dim(), &mut rng);
            Ok((classical.nabla(&m, &v, &x)? - flow.nabla(&m, &v, &x)?).amax())
        })
    });

    let (bracket_name, bracket) = cx.inst.bracket.clone().expect("gauge models carry a bracket");
    let curv = classical_curvature(&omega, bracket.as_ref(), cx.sub_seed(7), CURVATURE_POINTS);
    if cx.inst.twist == 0.0 && bracket_name == DEFAULT_BRACKET {
        cx.upper("structure-curvature", 1e-6, CURVATURE_POINTS, |_| curv.as_ref().map(|c| c.omega_norm).map_err(Clone::clone));
        cx.note("curvature of the Maurer-Cartan form");
    }
    // The premise is decided on the classical derivative itself.
    let premise = {
        let mut rng = cx.rng(8);
        let inner = cx.model().base_box().scaled(0.6);
        let derivative = nabla_omega(&omega);
        worst(CURVATURE_POINTS, |_| Ok(curvature(&derivative, &inner.sample(&mut rng))?.sup_norm()))
    };
    let flat_tol = 1e-4;
    cx.upper("flat-implies-parallel", 1e-4, CURVATURE_POINTS, |_| curv.as_ref().map(|c| c.derivative_norm).map_err(Clone::clone));
    match premise {
        Ok(r) if r <= flat_tol => cx.note(format!("derivative is flat (curvature {r:.3e}); bracket {bracket_name}")),
        Ok(r) => {
            let note = format!("premise fails: derivative curvature {r:.3e} exceeds {flat_tol:e}; holds vacuously");
            if let Some(c) = cx.last() {
                c.pass = true;
                c.detail = Some(note);
            }
        }
        Err(e) => {
            if let Some(c) = cx.last() {
                c.pass = false;
                c.detail = Some(format!("premise could not be evaluated: {e}"));
            }
        }
    }
}

/// Jets built from two representatives of the same arrow coincide.
fn representative_residual(cx: &Ctx, omega: &ClassicalCartan, n: usize) -> cartan_core::Result<f64> {
    let b = omega.bundle.clone();
    let mut rng = cx.rng(4);
    let bx = b.total_box().scaled(0.7);
    worst(n, |_| {
        let (q, p) = (bx.sample(&mut rng), bx.sample(&mut rng));
        let h = b.h_exp(&Vector::from_fn(b.algebra_dim(), |_, _| rng.random_range(-0.5..0.5)));
        let (g1, mu1) = representative_jet(omega, &q, &p)?;
        let (g2, mu2) = representative_jet(omega, &b.act(&q, &h), &b.act(&p, &h))?;
        Ok(nanmax((g1 - g2).amax(), (mu1 - mu2).amax()))
    })
}

pub(super) fn riemannian(cx: &mut Ctx) {
    let n = cx.samples;
    let surface = cx.inst.surface.clone().expect("surface models carry their iso-jet groupoid");
    cx.upper("isometry", 1e-9, n, |cx| {
        let mut rng = cx.rng(1);
        worst(n, |_| Ok(surface.isometry_defect(&sample_arrow(surface.as_ref(), &mut rng)?.coords)))
    });
    let defects = |stream: u64, cx: &Ctx| -> cartan_core::Result<(f64, f64)> {
        let mut rng = cx.rng(stream);
        let mut out = (0.0_f64, 0.0_f64);
        for _ in 0..n {
            let g = sample_arrow(surface.as_ref(), &mut rng)?;
            let mu = cx.inst.s.matrix(&g.coords);
            let (asym, metric) = surface.second_order_defects(&g.coords, &mu);
            out = (nanmax(out.0, asym), nanmax(out.1, metric));
        }
        Ok(out)
    };
    let both = defects(2, cx);
    cx.upper("holonomy-symmetry", 1e-7, n, |_| both.as_ref().map(|d| d.0).map_err(Clone::clone));
    cx.note("asymmetry of the second derivative of the prolonged isometry");
    cx.upper("metric-first-order", 1e-7, n, |_| both.as_ref().map(|d| d.1).map_err(Clone::clone));
    cx.note("first derivative of the pulled-back metric defect");
    let k = n.min(20);
    cx.lower("rotation-rate-detected", 1e-3, k, |cx| {
        let mut rng = cx.rng(3);
        least(k, |_| {
            let g = sample_arrow(surface.as_ref(), &mut rng)?;
            let mut mu = cx.inst.s.matrix(&g.coords);
            mu[(4, rng.random_range(0..2))] += 0.01;
            let (asym, metric) = surface.second_order_defects(&g.coords, &mu);
            Ok(nanmax(asym, metric))
        })
    });
    cx.note("smallest defect after shifting the rotation rate by 0.01");
}
