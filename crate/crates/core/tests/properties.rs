use std::sync::Arc;

use cartan_core::calculus::{derivative4, BoxDomain};
use cartan_core::groupoid::vertical_basis;
use cartan_core::jet::{adjoint_kernel, aut_inv, aut_mul, vee};
use cartan_core::models::{make_action_groupoid, make_pair_groupoid, PlaneMotions, SphereRotations};
use cartan_core::{jet_invert, GroupoidModel, Jet1, KernelHom, Matrix, Vector};
use proptest::prelude::*;

fn small() -> impl Strategy<Value = f64> {
    -0.3f64..0.3
}

fn kernel(model: &dyn GroupoidModel, m: &Vector, c: &[f64]) -> KernelHom {
    let basis = vertical_basis(model, &model.unit(m));
    let coeffs = Matrix::from_column_slice(basis.ncols(), model.base_dim(), &c[..basis.ncols() * model.base_dim()]);
    KernelHom::new(m.clone(), basis * coeffs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plane_motion_products_are_associative(
        a in prop::array::uniform3(small()), b in prop::array::uniform3(small()),
        c in prop::array::uniform3(small()), m in prop::array::uniform2(small()),
    ) {
        let model = cartan_core::models::ActionGroupoid::new(PlaneMotions);
        let arrow = |t: [f64; 3], base: &Vector| Vector::from_vec(vec![t[0], t[1], t[2], base[0], base[1]]);
        let h = arrow(c, &Vector::from_vec(m.to_vec()));
        let g = arrow(b, &model.target(&h));
        let k = arrow(a, &model.target(&g));
        let left = model.mul(&model.mul(&k, &g), &h);
        let right = model.mul(&k, &model.mul(&g, &h));
        prop_assert!((left - right).amax() <= 1e-12);
    }

    #[test]
    fn rotation_products_invert(a in prop::array::uniform3(small()), m in prop::array::uniform2(small())) {
        let model = cartan_core::models::ActionGroupoid::new(SphereRotations);
        let g = Vector::from_vec(vec![a[0], a[1], a[2], m[0], m[1]]);
        let back = model.mul(&model.inv(&g), &g);
        prop_assert!((back - model.unit(&model.source(&g))).amax() <= 1e-12);
    }

    #[test]
    fn kernel_products_form_a_group(
        x in prop::collection::vec(small(), 12), y in prop::collection::vec(small(), 12),
        z in prop::collection::vec(small(), 12), m in prop::array::uniform2(small()),
    ) {
        let (model, _) = make_action_groupoid(PlaneMotions, 1, 4).unwrap();
        let model: &dyn GroupoidModel = model.as_ref();
        let m = Vector::from_vec(m.to_vec());
        let (a, b, c) = (kernel(model, &m, &x), kernel(model, &m, &y), kernel(model, &m, &z));
        let ab_c = aut_mul(model, &aut_mul(model, &a, &b).unwrap(), &c).unwrap();
        let a_bc = aut_mul(model, &a, &aut_mul(model, &b, &c).unwrap()).unwrap();
        prop_assert!(ab_c.distance(&a_bc) <= 1e-12);
        prop_assume!(a.is_invertible(model));
        let inv = aut_inv(model, &a).unwrap();
        prop_assert!(aut_mul(model, &inv, &a).unwrap().phi.amax() <= 1e-10);
    }

    #[test]
    fn jet_inversion_is_an_involution(
        coeffs in prop::collection::vec(small(), 4), g in prop::array::uniform4(-0.5f64..0.5),
    ) {
        let (model, s) = make_pair_groupoid(2, 0.5, 1, 4).unwrap();
        let model: &dyn GroupoidModel = model.as_ref();
        let arrow = cartan_core::Arrow::new(model, Vector::from_vec(g.to_vec()));
        let basis = vertical_basis(model, &arrow.coords);
        let mu = s.matrix(&arrow.coords) + basis * Matrix::from_column_slice(2, 2, &coeffs);
        let jet = Jet1 { arrow, mu };
        prop_assume!(jet.ad_tangent_matrix(model).determinant().abs() > 0.1);
        let back = jet_invert(model, &jet_invert(model, &jet).unwrap()).unwrap();
        prop_assert!(back.distance(&jet) <= 1e-8);
    }

    #[test]
    fn adjoint_of_identity_jets_fixes_kernel_elements(
        x in prop::collection::vec(small(), 4), m in prop::array::uniform2(small()),
    ) {
        let (model, _) = make_pair_groupoid(2, 0.5, 1, 4).unwrap();
        let model: &dyn GroupoidModel = model.as_ref();
        let m = Vector::from_vec(m.to_vec());
        let phi = kernel(model, &m, &x);
        prop_assume!(phi.is_invertible(model));
        let id = Jet1::identity(model, &m);
        prop_assert!(adjoint_kernel(model, &id, &phi).unwrap().distance(&phi) <= 1e-9);
        let jet = vee(model, &phi).unwrap();
        prop_assert!((jet.ad_tangent_matrix(model) - phi.tm_part(model)).amax() <= 1e-9);
    }

    #[test]
    fn box_samples_stay_inside(seed in any::<u64>(), w in 0.1f64..2.0) {
        let bx = BoxDomain::cube(3, w);
        let mut rng: rand_chacha::ChaCha8Rng = rand::SeedableRng::seed_from_u64(seed);
        let x = bx.sample(&mut rng);
        prop_assert!(bx.contains(&x));
        prop_assert!(bx.scaled(0.5).contains(&(x * 0.5)));
    }

    #[test]
    fn fourth_order_stencil_is_exact_on_quartics(c in prop::array::uniform5(-2.0f64..2.0), h in 1e-3f64..1e-1) {
        let p = |t: f64| Vector::from_element(1, c[0] + c[1] * t + c[2] * t * t + c[3] * t.powi(3) + c[4] * t.powi(4));
        prop_assert!((derivative4(p, h)[0] - c[1]).abs() <= 1e-10);
    }
}

#[test]
fn shared_models_are_thread_safe() {
    let (model, s) = make_pair_groupoid(1, 0.5, 1, 4).unwrap();
    let shared: Arc<dyn GroupoidModel> = model;
    let handles: Vec<_> = (0..4)
        .map(|i| {
            let s = s.clone();
            let model = shared.clone();
            std::thread::spawn(move || {
                let g = Vector::from_vec(vec![0.1 * i as f64, -0.1]);
                s.eval_coords(&g).validate(model.as_ref()).is_ok()
            })
        })
        .collect();
    assert!(handles.into_iter().all(|h| h.join().unwrap()));
}
