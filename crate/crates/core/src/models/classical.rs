//! Classical Cartan connections on principal bundles and their gauge
//! groupoids.
//!
//! A bundle is presented in one chart of its total space `P` together with a
//! smooth slice `x ↦ slice(x)` of the projection and a normaliser `p ↦ h`
//! with `p·h = slice(π(p))`. Cosets `[q, p]` of the gauge groupoid are stored
//! by their representative with `p = slice(π(p))`, giving the chart
//! `(q, x)` with source `x` and target `π(q)`. Elements of the structure
//! group are opaque coordinate vectors interpreted by the bundle.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{derivative4, flow, jacobian_of, BoxDomain, MatFn, Matrix, Vector, FD_STEP, OUTER_STEP};
use crate::connection::{AlgebroidConnection, CartanConnection, Provenance};
use crate::error::{Error, Result};
use crate::groupoid::{
    left_translation_jacobian, kernel_basis, right_translation_jacobian, target_jacobian, vertical_basis,
    GroupoidModel, SharedModel,
};
use crate::jet::{adjoint_algebroid_matrix, jet_invert};

/// A principal bundle in coordinates, with a local slice of the projection.
pub trait PrincipalBundle: Send + Sync {
    fn name(&self) -> String;
    fn total_dim(&self) -> usize;
    fn base_dim(&self) -> usize;
    fn algebra_dim(&self) -> usize;
    fn project(&self, p: &Vector) -> Vector;
    /// The right action `p·h`.
    fn act(&self, p: &Vector, h: &Vector) -> Vector;
    fn h_mul(&self, a: &Vector, b: &Vector) -> Vector;
    fn h_inv(&self, a: &Vector) -> Vector;
    fn h_identity(&self) -> Vector;
    /// Exponential of `Σ ξ_i e_i` for the bundle's basis `e_i` of the
    /// structure algebra.
    fn h_exp(&self, xi: &Vector) -> Vector;
    fn slice(&self, m: &Vector) -> Vector;
    /// `h` with `p·h = slice(π(p))`.
    fn normalizer(&self, p: &Vector) -> Vector;
    fn total_box(&self) -> BoxDomain;
    fn base_box(&self) -> BoxDomain;
}

pub type HRep = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;
pub type Bracket = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;

/// A `V`-valued parallelism `ω` on a principal bundle, with `𝔥 ⊂ V` and a
/// right representation of the structure group on `V`.
#[derive(Clone)]
pub struct ClassicalCartan {
    pub bundle: Arc<dyn PrincipalBundle>,
    pub label: String,
    omega: MatFn,
    /// Columns: the image in `V` of the bundle's algebra basis.
    pub h_basis: Matrix,
    h_rep: HRep,
}

impl std::fmt::Debug for ClassicalCartan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClassicalCartan")
            .field("bundle", &self.bundle.name())
            .field("label", &self.label)
            .field("h_basis", &self.h_basis)
            .finish()
    }
}

/// Residuals of the defining conditions of a classical Cartan connection.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalInvariants {
    pub samples: usize,
    /// `max |ω(ξ†) − ξ|`.
    pub fundamental: f64,
    /// `max |ω(vh) − ω(v)h|`.
    pub equivariance: f64,
    /// `min |det ω_p|`.
    pub min_det: f64,
}

impl ClassicalCartan {
    pub fn new(
        bundle: Arc<dyn PrincipalBundle>,
        label: impl Into<String>,
        omega: MatFn,
        h_basis: Matrix,
        h_rep: HRep,
    ) -> Self {
        Self { bundle, label: label.into(), omega, h_basis, h_rep }
    }

    /// Matrix of `ω_p` in chart coordinates.
    pub fn omega_matrix(&self, p: &Vector) -> Matrix {
        (self.omega)(p)
    }

    pub fn omega(&self, p: &Vector, v: &Vector) -> Vector {
        self.omega_matrix(p) * v
    }

    pub fn omega_inverse(&self, p: &Vector) -> Result<Matrix> {
        self.omega_matrix(p)
            .try_inverse()
            .ok_or_else(|| Error::Singular(format!("ω is not a parallelism at {:?}", p.as_slice())))
    }

    /// `ξ ↦ ξh`.
    pub fn represent(&self, h: &Vector, xi: &Vector) -> Vector {
        (self.h_rep)(h, xi)
    }

    /// Fundamental field `e_i†(p) = d/ds p·exp(s e_i)`.
    pub fn fundamental(&self, p: &Vector, i: usize) -> Vector {
        let k = self.bundle.algebra_dim();
        let curve = |s: f64| {
            let mut xi = Vector::zeros(k);
            xi[i] = s;
            self.bundle.act(p, &self.bundle.h_exp(&xi))
        };
        (curve(FD_STEP) - curve(-FD_STEP)) / (2.0 * FD_STEP)
    }

    pub fn check_invariants(&self, seed: u64, count: usize) -> Result<ClassicalInvariants> {
        let b = self.bundle.as_ref();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bx = b.total_box().scaled(0.8);
        let k = b.algebra_dim();
        let mut out = ClassicalInvariants { samples: count, fundamental: 0.0, equivariance: 0.0, min_det: f64::INFINITY };
        for _ in 0..count {
            let p = bx.sample(&mut rng);
            let w = self.omega_matrix(&p);
            out.min_det = out.min_det.min(w.determinant().abs());
            for i in 0..k {
                let err = (&w * self.fundamental(&p, i) - self.h_basis.column(i)).amax();
                out.fundamental = out.fundamental.max(err);
            }
            let xi = Vector::from_fn(k, |_, _| rng.random_range(-0.3..0.3));
            let h = b.h_exp(&xi);
            let v = Vector::from_fn(p.len(), |_, _| rng.random_range(-1.0..1.0));
            let ph = b.act(&p, &h);
            let vh = jacobian_of(|y| b.act(y, &h), &p, FD_STEP) * &v;
            let err = (self.omega(&ph, &vh) - self.represent(&h, &self.omega(&p, &v))).amax();
            out.equivariance = out.equivariance.max(err);
        }
        if !out.fundamental.is_finite() || !out.equivariance.is_finite() {
            return Err(Error::NonFinite("classical invariants".into()));
        }
        Ok(out)
    }
}

/// The gauge groupoid `(P × P)/H` in slice coordinates `(q, x)`.
pub struct GaugeGroupoid {
    pub bundle: Arc<dyn PrincipalBundle>,
}

impl GaugeGroupoid {
    pub fn new(bundle: Arc<dyn PrincipalBundle>) -> Self {
        Self { bundle }
    }

    fn split(&self, g: &Vector) -> (Vector, Vector) {
        let k = self.bundle.total_dim();
        (g.rows(0, k).into_owned(), g.rows(k, self.bundle.base_dim()).into_owned())
    }

    fn join(q: &Vector, x: &Vector) -> Vector {
        let mut g = Vector::zeros(q.len() + x.len());
        g.rows_mut(0, q.len()).copy_from(q);
        g.rows_mut(q.len(), x.len()).copy_from(x);
        g
    }

    /// Chart coordinates of the coset `[q, p]`.
    pub fn coset(&self, q: &Vector, p: &Vector) -> Vector {
        let b = self.bundle.as_ref();
        Self::join(&b.act(q, &b.normalizer(p)), &b.project(p))
    }
}

impl GroupoidModel for GaugeGroupoid {
    fn name(&self) -> String {
        self.bundle.name()
    }

    fn base_dim(&self) -> usize {
        self.bundle.base_dim()
    }

    fn dim(&self) -> usize {
        self.bundle.total_dim() + self.bundle.base_dim()
    }

    fn source(&self, g: &Vector) -> Vector {
        self.split(g).1
    }

    fn target(&self, g: &Vector) -> Vector {
        self.bundle.project(&self.split(g).0)
    }

    fn unit(&self, m: &Vector) -> Vector {
        Self::join(&self.bundle.slice(m), m)
    }

    fn mul(&self, g: &Vector, h: &Vector) -> Vector {
        let b = self.bundle.as_ref();
        let (q1, _) = self.split(g);
        let (q2, x2) = self.split(h);
        Self::join(&b.act(&q1, &b.h_inv(&b.normalizer(&q2))), &x2)
    }

    fn inv(&self, g: &Vector) -> Vector {
        let b = self.bundle.as_ref();
        let (q, x) = self.split(g);
        Self::join(&b.act(&b.slice(&x), &b.normalizer(&q)), &b.project(&q))
    }

    fn retract_source(&self, g: &Vector, m: &Vector) -> Vector {
        Self::join(&self.split(g).0, m)
    }

    fn retract_target(&self, g: &Vector, m: &Vector) -> Vector {
        let b = self.bundle.as_ref();
        let (q, x) = self.split(g);
        Self::join(&b.act(&b.slice(m), &b.h_inv(&b.normalizer(&q))), &x)
    }

    fn domain_box(&self) -> BoxDomain {
        self.bundle.total_box().product(&self.bundle.base_box())
    }

    fn base_box(&self) -> BoxDomain {
        self.bundle.base_box()
    }

    fn transitive_slice(&self, _m0: &Vector, m: &Vector) -> Option<Vector> {
        Some(Self::join(&self.bundle.slice(m), _m0))
    }
}

/// Jet of `S^ω` at the coset `[q, p]`, computed from that representative:
/// the chart arrow and the `N × n` matrix.
pub fn representative_jet(omega: &ClassicalCartan, q: &Vector, p: &Vector) -> Result<(Vector, Matrix)> {
    let b = omega.bundle.as_ref();
    let x = b.project(p);
    let back = b.normalizer(p);
    let h = b.h_inv(&back);
    let s = b.slice(&x);
    let carry_q = jacobian_of(|y| b.act(y, &back), q, FD_STEP);
    let carry_s = jacobian_of(|y| b.act(y, &h), &s, FD_STEP);
    let dslice = jacobian_of(|y| b.slice(y), &x, FD_STEP);
    let top = carry_q * omega.omega_inverse(q)? * omega.omega_matrix(p) * carry_s * dslice;
    let (k, n) = (b.total_dim(), b.base_dim());
    let mut mu = Matrix::zeros(k + n, n);
    mu.view_mut((0, 0), (k, n)).copy_from(&top);
    mu.view_mut((k, 0), (n, n)).fill_with_identity();
    Ok((GaugeGroupoid::join(&b.act(q, &back), &x), mu))
}

fn check_slice(bundle: &dyn PrincipalBundle, seed: u64, count: usize) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let bx = bundle.total_box();
    for _ in 0..count {
        let p = bx.sample(&mut rng);
        let x = bundle.project(&p);
        let gap = (bundle.act(&p, &bundle.normalizer(&p)) - bundle.slice(&x)).amax();
        let back = (bundle.project(&bundle.slice(&x)) - &x).amax();
        if !(gap <= 1e-8 && back <= 1e-8) {
            return Err(Error::Slice(format!("normaliser misses the slice by {:e} at {:?}", gap.max(back), p.as_slice())));
        }
    }
    Ok(())
}

/// The gauge groupoid of `ω`'s bundle with the connection `S^ω`, verified
/// multiplicative.
pub fn classical_to_groupoid(
    omega: &ClassicalCartan,
    seed: u64,
    count: usize,
) -> Result<(Arc<GaugeGroupoid>, CartanConnection)> {
    check_slice(omega.bundle.as_ref(), seed, count)?;
    let model = Arc::new(GaugeGroupoid::new(omega.bundle.clone()));
    let s = s_omega(omega, model.clone()).verified(seed, count)?;
    Ok((model, s))
}

/// `S^ω` on a given gauge model, without verification.
pub fn s_omega(omega: &ClassicalCartan, model: Arc<GaugeGroupoid>) -> CartanConnection {
    let w = omega.clone();
    let k = omega.bundle.total_dim();
    let n = omega.bundle.base_dim();
    let label = format!("S^omega[{}]", omega.label);
    CartanConnection::new(model, label, move |g: &Vector| {
        let q = g.rows(0, k).into_owned();
        let x = g.rows(k, n).into_owned();
        let p = w.bundle.slice(&x);
        match representative_jet(&w, &q, &p) {
            Ok((_, mu)) => mu,
            Err(_) => Matrix::from_element(k + n, n, f64::NAN),
        }
    })
}

/// The source fibre over `m0` of a transitive groupoid, as a principal bundle
/// over the base with the isotropy group at `m0` as structure group.
pub struct FibreBundle {
    s: CartanConnection,
    m0: Vector,
    /// `𝔥 = ker # ∩ 𝔤|_{m0}` as `N`-vectors.
    algebra: Matrix,
    fibre_jac: Matrix,
    embed_jac: Matrix,
    exp_steps: usize,
}

impl FibreBundle {
    pub fn new(s: CartanConnection, m0: &Vector) -> Result<Self> {
        let model = s.model().clone();
        let m = model.as_ref();
        let transitivity = || Error::Transitivity(m0.iter().copied().collect());
        let g0 = m.transitive_slice(m0, m0).ok_or_else(transitivity)?;
        if (m.target(&g0) - m0).amax() > 1e-8 {
            return Err(transitivity());
        }
        let u = m.unit(m0);
        let vert = vertical_basis(m, &u);
        let anchor = target_jacobian(m, &u) * &vert;
        let n = m.base_dim();
        let rank = anchor.clone().svd(false, false).singular_values.iter().filter(|s| **s > 1e-8).count();
        if rank < n {
            return Err(transitivity());
        }
        let null = kernel_basis(&anchor);
        let algebra = &vert * null;
        let fibre_jac = jacobian_of(|g| m.fibre_coords(g), &u, FD_STEP);
        let p0 = m.fibre_coords(&u);
        let embed_jac = jacobian_of(|p| m.fibre_embed(p, m0), &p0, FD_STEP);
        Ok(Self { s, m0: m0.clone(), algebra, fibre_jac, embed_jac, exp_steps: 8 })
    }

    fn model(&self) -> &dyn GroupoidModel {
        self.s.model().as_ref()
    }

    pub fn embed(&self, p: &Vector) -> Vector {
        self.model().fibre_embed(p, &self.m0)
    }

    pub fn base_point(&self) -> &Vector {
        &self.m0
    }

    /// `ω(v) = Ad_{S(g)}⁻¹(TR_{g⁻¹}·v)` in fibre coordinates of `𝔤|_{m0}`.
    pub fn omega_matrix(&self, p: &Vector) -> Matrix {
        let m = self.model();
        let g = self.embed(p);
        let tr = right_translation_jacobian(m, &m.inv(&g), &g);
        match jet_invert(m, &self.s.eval_coords(&g)) {
            Ok(inv) => &self.fibre_jac * adjoint_algebroid_matrix(m, &inv) * tr * &self.embed_jac,
            Err(_) => Matrix::from_element(p.len(), p.len(), f64::NAN),
        }
    }

    /// `ξh = Ad_{S(h)}⁻¹ ξ` for an isotropy arrow `h`.
    pub fn represent(&self, h: &Vector, xi: &Vector) -> Vector {
        let m = self.model();
        match jet_invert(m, &self.s.eval_coords(h)) {
            Ok(inv) => &self.fibre_jac * adjoint_algebroid_matrix(m, &inv) * (&self.embed_jac * xi),
            Err(_) => Vector::from_element(xi.len(), f64::NAN),
        }
    }

    pub fn algebra_in_v(&self) -> Matrix {
        &self.fibre_jac * &self.algebra
    }
}

impl PrincipalBundle for FibreBundle {
    fn name(&self) -> String {
        format!("fibre[{}]", self.model().name())
    }

    fn total_dim(&self) -> usize {
        self.model().dim() - self.model().base_dim()
    }

    fn base_dim(&self) -> usize {
        self.model().base_dim()
    }

    fn algebra_dim(&self) -> usize {
        self.algebra.ncols()
    }

    fn project(&self, p: &Vector) -> Vector {
        self.model().target(&self.embed(p))
    }

    fn act(&self, p: &Vector, h: &Vector) -> Vector {
        let m = self.model();
        m.fibre_coords(&m.mul(&self.embed(p), h))
    }

    fn h_mul(&self, a: &Vector, b: &Vector) -> Vector {
        self.model().mul(a, b)
    }

    fn h_inv(&self, a: &Vector) -> Vector {
        self.model().inv(a)
    }

    fn h_identity(&self) -> Vector {
        self.model().unit(&self.m0)
    }

    /// Flow of the left-invariant field `TL_g·ξ` from the identity.
    fn h_exp(&self, xi: &Vector) -> Vector {
        let m = self.model();
        let v = &self.algebra * xi;
        let u = m.unit(&self.m0);
        let field = |g: &Vector| left_translation_jacobian(m, g, &u) * &v;
        flow(field, &u, 1.0, self.exp_steps).unwrap_or_else(|_| Vector::from_element(u.len(), f64::NAN))
    }

    fn slice(&self, x: &Vector) -> Vector {
        let m = self.model();
        match m.transitive_slice(&self.m0, x) {
            Some(g) => m.fibre_coords(&g),
            None => Vector::from_element(self.total_dim(), f64::NAN),
        }
    }

    fn normalizer(&self, p: &Vector) -> Vector {
        let m = self.model();
        let g = self.embed(p);
        let s = m.transitive_slice(&self.m0, &m.target(&g)).unwrap_or_else(|| Vector::from_element(g.len(), f64::NAN));
        m.mul(&m.inv(&g), &s)
    }

    fn total_box(&self) -> BoxDomain {
        let m = self.model();
        let bx = m.domain_box();
        let lo = m.fibre_coords(&Vector::from_vec(bx.lo.clone()));
        let hi = m.fibre_coords(&Vector::from_vec(bx.hi.clone()));
        let (lo, hi): (Vec<f64>, Vec<f64>) = lo.iter().zip(hi.iter()).map(|(a, b)| (a.min(*b), a.max(*b))).unzip();
        BoxDomain::new(lo, hi).scaled(0.5)
    }

    fn base_box(&self) -> BoxDomain {
        self.model().base_box()
    }
}

/// The classical Cartan connection on the source fibre over `m0` defined by a
/// Cartan connection on a transitive groupoid.
pub fn recover_omega(s: &CartanConnection, m0: &Vector) -> Result<ClassicalCartan> {
    let bundle = Arc::new(FibreBundle::new(s.clone(), m0)?);
    let h_basis = bundle.algebra_in_v();
    let om = bundle.clone();
    let rep = bundle.clone();
    Ok(ClassicalCartan::new(
        bundle,
        format!("recovered[{}]", s.label()),
        Arc::new(move |p| om.omega_matrix(p)),
        h_basis,
        Arc::new(move |h, xi| rep.represent(h, xi)),
    ))
}

/// Isomorphism from the gauge groupoid of the recovered fibre bundle back to
/// the original groupoid: `(q, x) ↦ embed(q)·slice(x)⁻¹`.
pub fn fibre_identification(model: &dyn GroupoidModel, m0: &Vector, c: &Vector) -> Vector {
    let k = model.dim() - model.base_dim();
    let q = c.rows(0, k).into_owned();
    let x = c.rows(k, model.base_dim()).into_owned();
    let slice = model
        .transitive_slice(m0, &x)
        .unwrap_or_else(|| Vector::from_element(model.dim(), f64::NAN));
    model.mul(&model.fibre_embed(&q, m0), &model.inv(&slice))
}

/// Largest distance between `S(Ψ(c))` and `TΨ·S'(c)` over seeded samples,
/// where `S'` is the rebuilt connection on the gauge groupoid of the
/// recovered bundle and `Ψ` is [`fibre_identification`].
pub fn roundtrip_connection_error(s: &CartanConnection, m0: &Vector, seed: u64, count: usize) -> Result<f64> {
    let omega = recover_omega(s, m0)?;
    let gauge = Arc::new(GaugeGroupoid::new(omega.bundle.clone()));
    let rebuilt = s_omega(&omega, gauge.clone());
    let model = s.model().as_ref();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bx = gauge.domain_box().scaled(0.8);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let c = bx.sample(&mut rng);
        let psi = |y: &Vector| fibre_identification(model, m0, y);
        let g = psi(&c);
        let dpsi = jacobian_of(psi, &c, FD_STEP);
        let pushed = dpsi * rebuilt.matrix(&c);
        let err = (s.matrix(&g) - pushed).amax();
        worst = worst.max(if err.is_finite() { err } else { f64::INFINITY });
    }
    Ok(worst)
}

/// Largest `|ω(p, v) − ω(p0, ω'(p, v))|` over seeded samples, where `ω'` is
/// recovered from `S^ω` on the source fibre over `m0` and `p0 = slice(m0)`.
pub fn roundtrip_omega_error(omega: &ClassicalCartan, m0: &Vector, seed: u64, count: usize) -> Result<f64> {
    let (_, s) = classical_to_groupoid(omega, seed, count.min(50))?;
    let recovered = recover_omega(&s, m0)?;
    let p0 = omega.bundle.slice(m0);
    let w0 = omega.omega_matrix(&p0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let bx = omega.bundle.total_box().scaled(0.8);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let p = bx.sample(&mut rng);
        let err = (omega.omega_matrix(&p) - &w0 * recovered.omega_matrix(&p)).amax();
        worst = worst.max(if err.is_finite() { err } else { f64::INFINITY });
    }
    Ok(worst)
}

/// H-invariant vector field on `P` extending `w` along the slice.
fn invariant_field(b: &dyn PrincipalBundle, w: &dyn Fn(&Vector) -> Vector, p: &Vector) -> Vector {
    let x = b.project(p);
    let h = b.h_inv(&b.normalizer(p));
    let s = b.slice(&x);
    jacobian_of(|y| b.act(y, &h), &s, FD_STEP) * w(&x)
}

/// `∇^ω_v Z = ∇̄_X Y − [X, Y]` at `slice(m)`, with `X` the invariant field of
/// `Z` and `Y` the invariant field of `x ↦ Dslice(x)·v`.
pub fn nabla_omega_at(omega: &ClassicalCartan, m: &Vector, v: &Vector, z: &dyn Fn(&Vector) -> Vector) -> Result<Vector> {
    let b = omega.bundle.as_ref();
    let k = b.total_dim();
    let p = b.slice(m);
    let wz = |x: &Vector| z(x).rows(0, k).into_owned();
    let wy = |x: &Vector| jacobian_of(|y| b.slice(y), x, FD_STEP) * v;
    let xf = |q: &Vector| invariant_field(b, &wz, q);
    let yf = |q: &Vector| invariant_field(b, &wy, q);
    let xp = xf(&p);
    let yp = yf(&p);
    let d_omega_y = derivative4(|t| {
        let q = &p + &xp * t;
        omega.omega(&q, &yf(&q))
    }, OUTER_STEP);
    let bar = omega.omega_inverse(&p)? * d_omega_y;
    let bracket = derivative4(|t| yf(&(&p + &xp * t)), OUTER_STEP) - derivative4(|t| xf(&(&p + &yp * t)), OUTER_STEP);
    let top = bar - bracket;
    let mut out = Vector::zeros(k + b.base_dim());
    out.rows_mut(0, k).copy_from(&top);
    if !out.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("classical covariant derivative".into()));
    }
    Ok(out)
}

/// `∇^ω` as an algebroid connection on the gauge groupoid.
pub fn nabla_omega(omega: &ClassicalCartan) -> AlgebroidConnection {
    let model: SharedModel = Arc::new(GaugeGroupoid::new(omega.bundle.clone()));
    let w = omega.clone();
    AlgebroidConnection::new(model, Provenance::ClassicalParallelism, Arc::new(move |m, v, z| nabla_omega_at(&w, m, v, z)))
}

/// Curvature `Ω` of `ω` and its `∇̄`-derivative in the `ω`-frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalCurvature {
    pub points: usize,
    /// `max |Ω(ω⁻¹e_a, ω⁻¹e_b)|`.
    pub omega_norm: f64,
    /// `max |∇̄_{ω⁻¹e_c} Ω|`.
    pub derivative_norm: f64,
    /// `max |Ω(X, Y) + Ω(Y, X)|`.
    pub antisymmetry: f64,
    /// `Ω` in the `ω`-frame at the first sample, `values[a][b]`.
    pub first: Vec<Vec<Vector>>,
}

/// `κ(a, b) = Ω(ω⁻¹e_a, ω⁻¹e_b)` with `Ω(X, Y) = dω(X, Y) − [ω X, ω Y]`.
pub fn curvature_in_frame(omega: &ClassicalCartan, bracket: &dyn Fn(&Vector, &Vector) -> Vector, p: &Vector) -> Result<Vec<Vec<Vector>>> {
    let d = p.len();
    let w = omega.omega_matrix(p);
    let winv = omega.omega_inverse(p)?;
    let dw: Vec<Matrix> = (0..d)
        .map(|i| {
            let flat = derivative4(|t| {
                let mut q = p.clone();
                q[i] += t;
                let m = omega.omega_matrix(&q);
                Vector::from_column_slice(m.as_slice())
            }, OUTER_STEP);
            Matrix::from_column_slice(d, d, flat.as_slice())
        })
        .collect();
    // Ω on coordinate fields: Ω_ij = ∂_i(ω e_j) − ∂_j(ω e_i) − [ω e_i, ω e_j].
    let coord = |i: usize, j: usize| -> Vector {
        dw[i].column(j) - dw[j].column(i) - bracket(&w.column(i).into_owned(), &w.column(j).into_owned())
    };
    let table: Vec<Vec<Vector>> = (0..d).map(|i| (0..d).map(|j| coord(i, j)).collect()).collect();
    let mut out = vec![vec![Vector::zeros(d); d]; d];
    for a in 0..d {
        for b in 0..d {
            let mut acc = Vector::zeros(d);
            for i in 0..d {
                for j in 0..d {
                    acc += &table[i][j] * (winv[(i, a)] * winv[(j, b)]);
                }
            }
            out[a][b] = acc;
        }
    }
    Ok(out)
}

/// Evaluates `Ω` and `∇̄Ω` at seeded points of the total space. The bracket
/// on `V` is part of the model data and must be supplied.
pub fn classical_curvature(
    omega: &ClassicalCartan,
    bracket: &dyn Fn(&Vector, &Vector) -> Vector,
    seed: u64,
    count: usize,
) -> Result<ClassicalCurvature> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bx = omega.bundle.total_box().scaled(0.8);
    let mut out = ClassicalCurvature { points: count, omega_norm: 0.0, derivative_norm: 0.0, antisymmetry: 0.0, first: Vec::new() };
    for idx in 0..count {
        let p = bx.sample(&mut rng);
        let d = p.len();
        let kappa = curvature_in_frame(omega, bracket, &p)?;
        for a in 0..d {
            for b in 0..d {
                out.omega_norm = out.omega_norm.max(kappa[a][b].amax());
                out.antisymmetry = out.antisymmetry.max((&kappa[a][b] + &kappa[b][a]).amax());
            }
        }
        let winv = omega.omega_inverse(&p)?;
        for c in 0..d {
            let dir = winv.column(c).into_owned();
            let flat = |t: f64| -> Vector {
                let q = &p + &dir * t;
                match curvature_in_frame(omega, bracket, &q) {
                    Ok(k) => Vector::from_iterator(d * d * d, k.iter().flat_map(|row| row.iter().flat_map(|v| v.iter().copied()))),
                    Err(_) => Vector::from_element(d * d * d, f64::NAN),
                }
            };
            let deriv = derivative4(flat, 1e-2);
            out.derivative_norm = out.derivative_norm.max(deriv.amax());
        }
        if idx == 0 {
            out.first = kappa;
        }
    }
    if !out.omega_norm.is_finite() || !out.derivative_norm.is_finite() {
        return Err(Error::NonFinite("classical curvature".into()));
    }
    Ok(out)
}

fn rot2(theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// `SE(2) → ℝ²` with structure group `SO(2)`; total-space coordinates
/// `(y₁, y₂, θ)` for the motion `m ↦ R_θ m + y`.
#[derive(Debug, Clone, Default)]
pub struct PlaneFrames;

impl PrincipalBundle for PlaneFrames {
    fn name(&self) -> String {
        "se2-so2".into()
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
        p.rows(0, 2).into_owned()
    }
    fn act(&self, p: &Vector, h: &Vector) -> Vector {
        Vector::from_vec(vec![p[0], p[1], p[2] + h[0]])
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
        Vector::from_vec(vec![m[0], m[1], 0.0])
    }
    fn normalizer(&self, p: &Vector) -> Vector {
        Vector::from_vec(vec![-p[2]])
    }
    fn total_box(&self) -> BoxDomain {
        BoxDomain::new(vec![-0.5, -0.5, -1.0], vec![0.5, 0.5, 1.0])
    }
    fn base_box(&self) -> BoxDomain {
        BoxDomain::cube(2, 0.5)
    }
}

/// `ω = (R_{−θ}dy, dθ + c·y₁²·dy₂)` on [`PlaneFrames`], valued in
/// `V = ℝ² ⊕ ℝ` with `𝔥` the last axis. `c = 0` is the Maurer–Cartan form.
pub fn plane_frames_omega(c: f64) -> ClassicalCartan {
    let omega = move |p: &Vector| {
        let mut w = Matrix::zeros(3, 3);
        w.view_mut((0, 0), (2, 2)).copy_from(&rot2(-p[2]));
        w[(2, 1)] = c * p[0] * p[0];
        w[(2, 2)] = 1.0;
        w
    };
    let rep = |h: &Vector, xi: &Vector| {
        let a = rot2(-h[0]) * xi.rows(0, 2);
        Vector::from_vec(vec![a[0], a[1], xi[2]])
    };
    let label = if c == 0.0 { "maurer-cartan".to_string() } else { format!("twisted(c={c})") };
    ClassicalCartan::new(
        Arc::new(PlaneFrames),
        label,
        Arc::new(omega),
        Matrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]),
        Arc::new(rep),
    )
}

/// The Maurer–Cartan form of `SE(2)`.
pub fn maurer_cartan_se2() -> ClassicalCartan {
    plane_frames_omega(0.0)
}

/// Bracket of right-invariant fields on `se(2)` in coordinates
/// `(a₁, a₂, w)`; the negative of the matrix commutator.
pub fn se2_bracket(x: &Vector, y: &Vector) -> Vector {
    // Matrix commutator: (w₁ J a₂ − w₂ J a₁, 0) with J the quarter turn.
    let (a1, w1) = ((x[0], x[1]), x[2]);
    let (a2, w2) = ((y[0], y[1]), y[2]);
    let j = |a: (f64, f64)| (-a.1, a.0);
    let (p, q) = (j(a2), j(a1));
    Vector::from_vec(vec![-(w1 * p.0 - w2 * q.0), -(w1 * p.1 - w2 * q.1), 0.0])
}

/// Bracket of right-invariant fields on `so(3)` with `V = ℝ³` ordered so the
/// last axis generates rotations of the first two: `−x × y`.
pub fn so3_bracket(x: &Vector, y: &Vector) -> Vector {
    let a = nalgebra::Vector3::new(x[0], x[1], x[2]);
    let b = nalgebra::Vector3::new(y[0], y[1], y[2]);
    let c = -a.cross(&b);
    Vector::from_vec(vec![c[0], c[1], c[2]])
}

/// Bracket choice for classical curvature computations.
pub fn bracket_by_name(name: &str) -> Option<Bracket> {
    match name {
        "se2" => Some(Arc::new(se2_bracket)),
        "so3" => Some(Arc::new(so3_bracket)),
        _ => None,
    }
}
