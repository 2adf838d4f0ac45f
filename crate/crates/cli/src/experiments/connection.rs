use std::sync::Arc;

use cartan_core::calculus::jacobian_of;
use cartan_core::connection::check_integral_products;
use cartan_core::groupoid::vertical_basis;
use cartan_core::models::nabla_omega;
use cartan_core::{check_multiplicative, infinitesimalize, GroupoidModel, KernelHom, Matrix, Route, Vector};

use super::{nanmax, random_vector, test_section, worst, Ctx};
use crate::registry::ModelKind;

const ROUTE_TOL: f64 = 1e-4;

pub(super) fn multiplicativity(cx: &mut Ctx) {
    let n = cx.samples;
    let tol = cx.tolerance("multiplicative", cartan_core::connection::MULTIPLICATIVE_TOL);
    cx.upper("multiplicative", tol, n, |cx| {
        let r = check_multiplicative(&cx.inst.s, cx.sub_seed(1), n, tol)?;
        Ok(nanmax(r.max_error, r.unit_error))
    });
    cx.lower("fault-detected", 1e-3, n, |cx| {
        let model = cx.inst.model.clone();
        let phi = Arc::new(move |m: &Vector| {
            let basis = vertical_basis(model.as_ref(), &model.unit(m));
            let coeffs =
                Matrix::from_fn(basis.ncols(), model.base_dim(), |i, j| 0.1 * (1.0 + m[0]) * ((i + 2 * j) as f64).cos());
            KernelHom::new(m.clone(), basis * coeffs)
        });
        let bad = cx.inst.s.perturbed(phi);
        Ok(check_multiplicative(&bad, cx.sub_seed(2), n, tol)?.max_error)
    });
    cx.note("largest defect of a deliberately perturbed connection");
    let m = n.min(10);
    cx.upper("integral-products", 1e-6, m, |cx| {
        let r = check_integral_products(&cx.inst.s, cx.sub_seed(3), m)?;
        Ok(nanmax(r.factor_error, r.product_error))
    });
}

pub(super) fn nabla_compare(cx: &mut Ctx) {
    let n = cx.samples;
    cx.upper("flow-vs-transport", ROUTE_TOL, n, |cx| {
        let model = cx.model();
        let flow = infinitesimalize(&cx.inst.s, Route::Flow);
        let transport = infinitesimalize(&cx.inst.s, Route::Transport);
        routes_differ(model, &|m, v, x| flow.nabla(m, v, x), &|m, v, x| transport.nabla(m, v, x), cx, n, 1)
    });
    if let Some(omega) = &cx.inst.classical {
        let classical = nabla_omega(omega);
        cx.upper("classical-vs-flow", ROUTE_TOL, n, |cx| {
            let flow = infinitesimalize(&cx.inst.s, Route::Flow);
            routes_differ(cx.model(), &|m, v, x| classical.nabla(m, v, x), &|m, v, x| flow.nabla(m, v, x), cx, n, 2)
        });
    }
    let trivial = matches!(
        cx.inst.kind,
        ModelKind::Pair(_) | ModelKind::Translation(_) | ModelKind::PlaneMotions | ModelKind::SphereRotations
    );
    let k = n.min(20);
    if trivial {
        // Constant bisections differentiate sections componentwise.
        cx.upper("trivial-derivative", 1e-6, k, |cx| {
            let model = cx.model();
            let nabla = infinitesimalize(&cx.inst.s, Route::Flow);
            let mut rng = cx.rng(3);
            let x = test_section(model, &mut rng);
            let inner = model.base_box().scaled(0.7);
            worst(k, |_| {
                let m = inner.sample(&mut rng);
                let v = random_vector(model.base_dim(), &mut rng);
                let expected = jacobian_of(&x, &m, 1e-5) * &v;
                Ok((nabla.nabla(&m, &v, &x)? - expected).amax())
            })
        });
    }
    cx.upper("leibniz", 1e-5, k, |cx| {
        let model = cx.model();
        let nabla = infinitesimalize(&cx.inst.s, Route::Flow);
        let mut rng = cx.rng(4);
        let x = test_section(model, &mut rng);
        let f = |m: &Vector| 1.0 + m[0] * m.iter().last().unwrap() - 0.5 * m.iter().last().unwrap();
        let fx = |m: &Vector| x(m) * f(m);
        let inner = model.base_box().scaled(0.7);
        worst(k, |_| {
            let m = inner.sample(&mut rng);
            let v = random_vector(model.base_dim(), &mut rng);
            let df = (f(&(&m + &v * 1e-6)) - f(&(&m - &v * 1e-6))) / 2e-6;
            let dx = nabla.nabla(&m, &v, &x)?;
            let product = (nabla.nabla(&m, &v, &fx)? - (x(&m) * df + &dx * f(&m))).amax();
            let linear = (nabla.nabla(&m, &(&v * 2.0), &x)? - &dx * 2.0).amax();
            Ok(nanmax(product, linear))
        })
    });
}

type NablaEval<'a> = dyn Fn(&Vector, &Vector, &dyn Fn(&Vector) -> Vector) -> cartan_core::Result<Vector> + 'a;

/// `max |∇_v X (first) − ∇_v X (second)|` over seeded `(m, v)` and one
/// seeded section `X`.
fn routes_differ(
    model: &dyn GroupoidModel,
    first: &NablaEval,
    second: &NablaEval,
    cx: &Ctx,
    count: usize,
    stream: u64,
) -> cartan_core::Result<f64> {
    let mut rng = cx.rng(stream);
    let x = test_section(model, &mut rng);
    let inner = model.base_box().scaled(0.7);
    worst(count, |_| {
        let m = inner.sample(&mut rng);
        let v = random_vector(model.base_dim(), &mut rng);
        Ok((first(&m, &v, &x)? - second(&m, &v, &x)?).amax())
    })
}
