use cartan_core::groupoid::{
    oracle_jet_inverse, oracle_jet_mul, right_translation_jacobian, sample_arrow, sample_composable, solve_target,
    vertical_basis,
};
use cartan_core::jet::{
    act_on_kernel_section, adjoint_algebroid_matrix, adjoint_kernel, adjoint_tangent, assemble_bisection, aut_inv,
    aut_mul, kernel_quotient, sample_composable_jets, sample_jet, sample_kernel, vee,
};
use cartan_core::{
    jet_assemble, jet_decompose, jet_invert, jet_mul, mul_kernel_left, mul_kernel_right, Arrow, GroupoidModel, Jet1,
    KernelHom, Matrix, Vector,
};
use rand::Rng;

use super::{nanmax, random_vector, worst, Ctx};

const ARROW_TOL: f64 = 1e-10;
const FD_TOL: f64 = 1e-5;
const SPREAD: f64 = 0.3;

pub(super) fn jet_axioms(cx: &mut Ctx) {
    let n = cx.samples;
    cx.upper("associativity", ARROW_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(1);
        worst(n, |_| {
            let h = sample_arrow(model, &mut rng)?;
            let g = sample_composable(model, &mut rng, &h)?;
            let k = sample_composable(model, &mut rng, &g)?;
            let gh = model.mul(&g.coords, &h.coords);
            let left = model.mul(&model.mul(&k.coords, &g.coords), &h.coords);
            let assoc = (left - model.mul(&k.coords, &gh)).amax();
            let ends = nanmax((model.source(&gh) - &h.source).amax(), (model.target(&gh) - &g.target).amax());
            Ok(nanmax(assoc, ends))
        })
    });
    cx.upper("units", ARROW_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(2);
        worst(n, |_| {
            let h = sample_arrow(model, &mut rng)?;
            let m = &h.source;
            let u = model.unit(m);
            Ok([
                (model.source(&u) - m).amax(),
                (model.target(&u) - m).amax(),
                (model.mul(&h.coords, &u) - &h.coords).amax(),
                (model.mul(&model.unit(&h.target), &h.coords) - &h.coords).amax(),
            ]
            .into_iter()
            .fold(0.0, nanmax))
        })
    });
    cx.upper("inverses", ARROW_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(3);
        worst(n, |_| {
            let h = sample_arrow(model, &mut rng)?;
            let hi = model.inv(&h.coords);
            Ok([
                (model.mul(&h.coords, &hi) - model.unit(&h.target)).amax(),
                (model.mul(&hi, &h.coords) - model.unit(&h.source)).amax(),
                (model.inv(&hi) - &h.coords).amax(),
            ]
            .into_iter()
            .fold(0.0, nanmax))
        })
    });
    cx.upper("jet-product", FD_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(4);
        worst(n, |_| {
            let (mu1, mu2) = sample_composable_jets(model, &cx.inst.s, SPREAD, &mut rng)?;
            let fast = jet_mul(model, &mu1, &mu2, &cx.inst.s)?;
            Ok(fast.distance(&oracle_jet_mul(model, &mu1, &mu2)?))
        })
    });
    cx.upper("right-kernel-product", FD_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(5);
        worst(n, |_| right_product_residual(cx, model, &mut rng))
    });
    cx.upper("decompose-assemble", FD_TOL, n, |cx| {
        let model = cx.model();
        let s = &cx.inst.s;
        let mut rng = cx.rng(6);
        worst(n, |_| {
            let mu = sample_jet(model, s, SPREAD, &mut rng)?;
            let (g, phi) = jet_decompose(model, &mu, s)?;
            let rebuilt = jet_assemble(model, &g, &phi, s)?.distance(&mu);
            let oracle = oracle_jet_mul(model, &vee(model, &phi)?, &s.eval(&g))?.distance(&mu);
            Ok(nanmax(rebuilt, oracle))
        })
    });
}

fn right_product_residual<R: Rng>(cx: &Ctx, model: &dyn GroupoidModel, rng: &mut R) -> cartan_core::Result<f64> {
    let mu = sample_jet(model, &cx.inst.s, SPREAD, rng)?;
    let phi = sample_kernel(model, mu.base(), SPREAD, rng)?;
    let fast = mul_kernel_right(model, &mu, &phi)?;
    Ok(fast.distance(&oracle_jet_mul(model, &mu, &vee(model, &phi)?)?))
}

pub(super) fn inversion(cx: &mut Ctx) {
    let n = cx.samples;
    cx.upper("jet-inverse", FD_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(1);
        worst(n, |_| {
            let mu = sample_jet(model, &cx.inst.s, SPREAD, &mut rng)?;
            Ok(jet_invert(model, &mu)?.distance(&oracle_jet_inverse(model, &mu)?))
        })
    });
    cx.upper("double-inverse", FD_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(2);
        worst(n, |_| {
            let mu = sample_jet(model, &cx.inst.s, SPREAD, &mut rng)?;
            Ok(jet_invert(model, &jet_invert(model, &mu)?)?.distance(&mu))
        })
    });
    cx.upper("inverse-product", FD_TOL, n, |cx| {
        let model = cx.model();
        let s = &cx.inst.s;
        let mut rng = cx.rng(3);
        worst(n, |_| {
            let mu = sample_jet(model, s, SPREAD, &mut rng)?;
            let inv = jet_invert(model, &mu)?;
            let left = jet_mul(model, &mu, &inv, s)?.distance(&Jet1::identity(model, &mu.arrow.target));
            let right = jet_mul(model, &inv, &mu, s)?.distance(&Jet1::identity(model, mu.base()));
            Ok(nanmax(left, right))
        })
    });
}

pub(super) fn kernel_products(cx: &mut Ctx) {
    let n = cx.samples;
    cx.upper("right-product", FD_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(1);
        worst(n, |_| right_product_residual(cx, model, &mut rng))
    });
    cx.upper("left-product", FD_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(2);
        worst(n, |_| {
            let mu = sample_jet(model, &cx.inst.s, SPREAD, &mut rng)?;
            let phi = sample_kernel(model, &mu.arrow.target, SPREAD, &mut rng)?;
            let fast = mul_kernel_left(model, &phi, &mu)?;
            Ok(fast.distance(&oracle_jet_mul(model, &vee(model, &phi)?, &mu)?))
        })
    });
    cx.upper("quotient", FD_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(3);
        worst(n, |_| {
            let mu = sample_jet(model, &cx.inst.s, SPREAD, &mut rng)?;
            let phi = sample_kernel(model, mu.base(), SPREAD, &mut rng)?;
            let nu = mul_kernel_right(model, &mu, &phi)?;
            let psi = kernel_quotient(model, &nu, &mu)?;
            let slow = oracle_jet_mul(model, &nu, &oracle_jet_inverse(model, &mu)?)?;
            Ok(vee(model, &psi)?.distance(&slow))
        })
    });
    cx.upper("conjugation", FD_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(4);
        worst(n, |_| {
            let mu = sample_jet(model, &cx.inst.s, SPREAD, &mut rng)?;
            let phi = sample_kernel(model, mu.base(), SPREAD, &mut rng)?;
            let left = oracle_jet_mul(model, &mu, &vee(model, &phi)?)?;
            let slow = oracle_jet_mul(model, &left, &oracle_jet_inverse(model, &mu)?)?;
            Ok(vee(model, &adjoint_kernel(model, &mu, &phi)?)?.distance(&slow))
        })
    });
    cx.upper("difference", FD_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(5);
        worst(n, |_| {
            let mu = sample_jet(model, &cx.inst.s, SPREAD, &mut rng)?;
            let phi = sample_kernel(model, mu.base(), SPREAD, &mut rng)?;
            let nu = oracle_jet_mul(model, &mu, &vee(model, &phi)?)?;
            let tr = right_translation_jacobian(model, &mu.arrow.coords, &model.unit(&mu.arrow.target));
            let predicted = tr * adjoint_algebroid_matrix(model, &mu) * &phi.phi;
            Ok((&mu.mu - &nu.mu - predicted).amax())
        })
    });
}

/// A smooth kernel section `m ↦ basis(m)·(C₀ + m₀C₁)`.
fn kernel_section<'a, R: Rng>(model: &'a dyn GroupoidModel, rng: &mut R) -> impl Fn(&Vector) -> KernelHom + 'a {
    let k = model.dim() - model.base_dim();
    let n = model.base_dim();
    let c0 = Matrix::from_fn(k, n, |_, _| rng.random_range(-0.2..0.2));
    let c1 = Matrix::from_fn(k, n, |_, _| rng.random_range(-0.2..0.2));
    move |m: &Vector| {
        let basis = vertical_basis(model, &model.unit(m));
        KernelHom::new(m.clone(), basis * (&c0 + &c1 * m[0]))
    }
}

pub(super) fn semidirect(cx: &mut Ctx) {
    let n = cx.samples;
    cx.upper("vee-morphism", FD_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(1);
        let inner = model.base_box().scaled(0.8);
        worst(n, |_| {
            let m = inner.sample(&mut rng);
            let psi = sample_kernel(model, &m, SPREAD, &mut rng)?;
            let phi = sample_kernel(model, &m, SPREAD, &mut rng)?;
            let (vpsi, vphi) = (vee(model, &psi)?, vee(model, &phi)?);
            let prod = vee(model, &aut_mul(model, &psi, &phi)?)?.distance(&oracle_jet_mul(model, &vpsi, &vphi)?);
            let inv = vee(model, &aut_inv(model, &phi)?)?.distance(&oracle_jet_inverse(model, &vphi)?);
            Ok(nanmax(prod, inv))
        })
    });
    cx.upper("kernel-action", FD_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(2);
        let inner = model.base_box().scaled(0.8);
        worst(n, |_| {
            let m = inner.sample(&mut rng);
            let phi = sample_kernel(model, &m, SPREAD, &mut rng)?;
            let jet = vee(model, &phi)?;
            let v = random_vector(model.base_dim(), &mut rng);
            let tangent = (adjoint_tangent(model, &jet, &v) - phi.tm_part(model) * &v).amax();
            let basis = vertical_basis(model, &model.unit(&m));
            let x = &basis * random_vector(basis.ncols(), &mut rng);
            let algebroid = (adjoint_algebroid_matrix(model, &jet) * &x - phi.g_part(model, &x)).amax();
            Ok(nanmax(tangent, algebroid))
        })
    });
    cx.upper("kernel-group", FD_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(3);
        let inner = model.base_box().scaled(0.8);
        worst(n, |_| {
            let m = inner.sample(&mut rng);
            let a = sample_kernel(model, &m, SPREAD, &mut rng)?;
            let b = sample_kernel(model, &m, SPREAD, &mut rng)?;
            let c = sample_kernel(model, &m, SPREAD, &mut rng)?;
            let ab_c = aut_mul(model, &aut_mul(model, &a, &b)?, &c)?;
            let a_bc = aut_mul(model, &a, &aut_mul(model, &b, &c)?)?;
            let unit = aut_mul(model, &a, &aut_inv(model, &a)?)?;
            Ok(nanmax(ab_c.distance(&a_bc), unit.phi.amax()))
        })
    });
    cx.upper("splitting", FD_TOL, n, |cx| {
        let model = cx.model();
        let s = &cx.inst.s;
        let mut rng = cx.rng(4);
        worst(n, |_| {
            let (mu1, mu2) = sample_composable_jets(model, s, SPREAD, &mut rng)?;
            let (g1, phi1) = jet_decompose(model, &mu1, s)?;
            let (g2, phi2) = jet_decompose(model, &mu2, s)?;
            let left_form = mul_kernel_left(model, &phi1, &s.eval(&g1))?.distance(&mu1);
            let phi = aut_mul(model, &phi1, &adjoint_kernel(model, &s.eval(&g1), &phi2)?)?;
            let g = Arrow::new(model, model.mul(&g1.coords, &g2.coords));
            let product = jet_assemble(model, &g, &phi, s)?.distance(&oracle_jet_mul(model, &mu1, &mu2)?);
            Ok(nanmax(left_form, product))
        })
    });
    cx.upper("bisection-law", FD_TOL, n, |cx| {
        let model = cx.model();
        let mut rng = cx.rng(5);
        worst(n, |_| {
            let (j1, j2) = sample_composable_jets(model, &cx.inst.s, 0.2, &mut rng)?;
            let b1 = |x: &Vector| model.extend_bisection(&j1, x);
            let b2 = |x: &Vector| model.extend_bisection(&j2, x);
            let big1 = kernel_section(model, &mut rng);
            let big2 = kernel_section(model, &mut rng);
            let m = j2.base().clone();
            let mid = j2.arrow.target.clone();
            let first = assemble_bisection(model, &b2, &big2, &m)?;
            let second = assemble_bisection(model, &b1, &big1, &mid)?;
            let pointwise = oracle_jet_mul(model, &second, &first)?;

            let b12 = |x: &Vector| {
                let h = b2(x);
                model.mul(&b1(&model.target(&h)), &h)
            };
            let moved = |y: &Vector| -> cartan_core::Result<KernelHom> {
                let x = solve_target(model, &b1, y, &mid)?;
                act_on_kernel_section(model, &b1, &big2, &x)
            };
            // The assembled bisection needs a total kernel section; failures
            // surface as a non-finite residual.
            let combined = |y: &Vector| match moved(y).and_then(|k| aut_mul(model, &big1(y), &k)) {
                Ok(k) => k,
                Err(_) => KernelHom::new(y.clone(), Matrix::from_element(model.dim(), model.base_dim(), f64::NAN)),
            };
            let assembled = assemble_bisection(model, &b12, &combined, &m)?;
            Ok(assembled.distance(&pointwise))
        })
    });
}
