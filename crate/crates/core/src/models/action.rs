use std::sync::Arc;

use nalgebra::{UnitQuaternion, Vector3};

use crate::calculus::{BoxDomain, Matrix, Vector};
use crate::connection::CartanConnection;
use crate::error::Result;
use crate::groupoid::GroupoidModel;

/// A Lie group acting on a chart of the base, both in coordinates.
pub trait GroupAction: Send + Sync {
    fn name(&self) -> String;
    fn group_dim(&self) -> usize;
    fn base_dim(&self) -> usize;
    fn identity(&self) -> Vector;
    fn compose(&self, a: &Vector, b: &Vector) -> Vector;
    fn inverse(&self, a: &Vector) -> Vector;
    /// The left action `a·m`.
    fn act(&self, a: &Vector, m: &Vector) -> Vector;
    fn group_box(&self) -> BoxDomain;
    fn base_box(&self) -> BoxDomain;
    /// A group element carrying `m0` to `m`, smooth in `m`.
    fn carry(&self, m0: &Vector, m: &Vector) -> Option<Vector>;
}

/// The action groupoid `G₀ × M`: `(a, m)` goes from `m` to `a·m`.
pub struct ActionGroupoid<A> {
    pub action: A,
}

impl<A: GroupAction> ActionGroupoid<A> {
    pub fn new(action: A) -> Self {
        Self { action }
    }

    fn split(&self, g: &Vector) -> (Vector, Vector) {
        let k = self.action.group_dim();
        (g.rows(0, k).into_owned(), g.rows(k, self.action.base_dim()).into_owned())
    }

    fn join(&self, a: &Vector, m: &Vector) -> Vector {
        let k = a.len();
        let mut g = Vector::zeros(k + m.len());
        g.rows_mut(0, k).copy_from(a);
        g.rows_mut(k, m.len()).copy_from(m);
        g
    }
}

impl<A: GroupAction> GroupoidModel for ActionGroupoid<A> {
    fn name(&self) -> String {
        self.action.name()
    }

    fn base_dim(&self) -> usize {
        self.action.base_dim()
    }

    fn dim(&self) -> usize {
        self.action.group_dim() + self.action.base_dim()
    }

    fn source(&self, g: &Vector) -> Vector {
        self.split(g).1
    }

    fn target(&self, g: &Vector) -> Vector {
        let (a, m) = self.split(g);
        self.action.act(&a, &m)
    }

    fn unit(&self, m: &Vector) -> Vector {
        self.join(&self.action.identity(), m)
    }

    fn mul(&self, g: &Vector, h: &Vector) -> Vector {
        let (a, _) = self.split(g);
        let (b, m) = self.split(h);
        self.join(&self.action.compose(&a, &b), &m)
    }

    fn inv(&self, g: &Vector) -> Vector {
        let (a, m) = self.split(g);
        self.join(&self.action.inverse(&a), &self.action.act(&a, &m))
    }

    fn retract_source(&self, g: &Vector, m: &Vector) -> Vector {
        self.join(&self.split(g).0, m)
    }

    fn retract_target(&self, g: &Vector, m: &Vector) -> Vector {
        let (a, _) = self.split(g);
        let back = self.action.act(&self.action.inverse(&a), m);
        self.join(&a, &back)
    }

    fn domain_box(&self) -> BoxDomain {
        self.action.group_box().product(&self.action.base_box())
    }

    fn base_box(&self) -> BoxDomain {
        self.action.base_box()
    }

    fn in_chart(&self, g: &Vector) -> bool {
        g.iter().all(|v| v.is_finite()) && self.target(g).iter().all(|v| v.is_finite() && v.abs() < 1e3)
    }

    fn source_jacobian(&self, _g: &Vector) -> Option<Matrix> {
        let (k, n) = (self.action.group_dim(), self.action.base_dim());
        let mut j = Matrix::zeros(n, k + n);
        j.view_mut((0, k), (n, n)).fill_with_identity();
        Some(j)
    }

    fn transitive_slice(&self, m0: &Vector, m: &Vector) -> Option<Vector> {
        self.action.carry(m0, m).map(|a| self.join(&a, m0))
    }
}

/// The canonical connection: `S(a, m)` is the jet of the constant bisection
/// `m' ↦ (a, m')`.
pub fn constant_bisections<A: GroupAction + 'static>(model: Arc<ActionGroupoid<A>>) -> CartanConnection {
    let (k, n) = (model.action.group_dim(), model.action.base_dim());
    CartanConnection::new(model, "constant-bisections", move |_g: &Vector| {
        let mut mu = Matrix::zeros(k + n, n);
        mu.view_mut((k, 0), (n, n)).fill_with_identity();
        mu
    })
}

pub fn make_action_groupoid<A: GroupAction + 'static>(
    action: A,
    seed: u64,
    count: usize,
) -> Result<(Arc<ActionGroupoid<A>>, CartanConnection)> {
    let model = Arc::new(ActionGroupoid::new(action));
    let s = constant_bisections(model.clone()).verified(seed, count)?;
    Ok((model, s))
}

/// Translations of `ℝⁿ`.
#[derive(Debug, Clone)]
pub struct Translations {
    pub n: usize,
    pub half_width: f64,
}

impl GroupAction for Translations {
    fn name(&self) -> String {
        format!("translation-R{}", self.n)
    }
    fn group_dim(&self) -> usize {
        self.n
    }
    fn base_dim(&self) -> usize {
        self.n
    }
    fn identity(&self) -> Vector {
        Vector::zeros(self.n)
    }
    fn compose(&self, a: &Vector, b: &Vector) -> Vector {
        a + b
    }
    fn inverse(&self, a: &Vector) -> Vector {
        -a
    }
    fn act(&self, a: &Vector, m: &Vector) -> Vector {
        a + m
    }
    fn group_box(&self) -> BoxDomain {
        BoxDomain::cube(self.n, self.half_width)
    }
    fn base_box(&self) -> BoxDomain {
        BoxDomain::cube(self.n, self.half_width)
    }
    fn carry(&self, m0: &Vector, m: &Vector) -> Option<Vector> {
        Some(m - m0)
    }
}

fn rot2(theta: f64) -> nalgebra::Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    nalgebra::Matrix2::new(c, -s, s, c)
}

/// Rigid motions of the plane, coordinates `(θ, t₁, t₂)`; `(θ, t)·m = R_θ m + t`.
#[derive(Debug, Clone, Default)]
pub struct PlaneMotions;

impl PlaneMotions {
    fn parts(a: &Vector) -> (f64, nalgebra::Vector2<f64>) {
        (a[0], nalgebra::Vector2::new(a[1], a[2]))
    }

    fn pack(theta: f64, t: nalgebra::Vector2<f64>) -> Vector {
        Vector::from_vec(vec![theta, t[0], t[1]])
    }
}

impl GroupAction for PlaneMotions {
    fn name(&self) -> String {
        "se2-action".into()
    }
    fn group_dim(&self) -> usize {
        3
    }
    fn base_dim(&self) -> usize {
        2
    }
    fn identity(&self) -> Vector {
        Vector::zeros(3)
    }
    fn compose(&self, a: &Vector, b: &Vector) -> Vector {
        let (ta, va) = Self::parts(a);
        let (tb, vb) = Self::parts(b);
        Self::pack(ta + tb, va + rot2(ta) * vb)
    }
    fn inverse(&self, a: &Vector) -> Vector {
        let (t, v) = Self::parts(a);
        Self::pack(-t, -(rot2(-t) * v))
    }
    fn act(&self, a: &Vector, m: &Vector) -> Vector {
        let (t, v) = Self::parts(a);
        let p = rot2(t) * nalgebra::Vector2::new(m[0], m[1]) + v;
        Vector::from_vec(vec![p[0], p[1]])
    }
    fn group_box(&self) -> BoxDomain {
        BoxDomain::new(vec![-1.0, -0.5, -0.5], vec![1.0, 0.5, 0.5])
    }
    fn base_box(&self) -> BoxDomain {
        BoxDomain::cube(2, 0.5)
    }
    fn carry(&self, m0: &Vector, m: &Vector) -> Option<Vector> {
        Some(Vector::from_vec(vec![0.0, m[0] - m0[0], m[1] - m0[1]]))
    }
}

/// Inverse stereographic projection from the north pole.
pub fn unproject(x: &Vector) -> Vector3<f64> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    Vector3::new(2.0 * x[0], 2.0 * x[1], r2 - 1.0) / (1.0 + r2)
}

pub fn project(p: &Vector3<f64>) -> Vector {
    Vector::from_vec(vec![p[0] / (1.0 - p[2]), p[1] / (1.0 - p[2])])
}

/// Rotations acting on the stereographic chart of the sphere; group
/// coordinates are rotation vectors.
#[derive(Debug, Clone, Default)]
pub struct SphereRotations;

fn rotation(a: &Vector) -> UnitQuaternion<f64> {
    UnitQuaternion::from_scaled_axis(Vector3::new(a[0], a[1], a[2]))
}

/// Rotation vector of `q`, accurate for small angles.
fn rotation_vector(q: &UnitQuaternion<f64>) -> Vector {
    let q = if q.w < 0.0 { -q.into_inner() } else { q.into_inner() };
    let im = q.imag();
    let s = im.norm();
    let scale = if s < 1e-12 { 2.0 / q.w } else { 2.0 * s.atan2(q.w) / s };
    Vector::from_vec(vec![im[0] * scale, im[1] * scale, im[2] * scale])
}

impl GroupAction for SphereRotations {
    fn name(&self) -> String {
        "so3-sphere".into()
    }
    fn group_dim(&self) -> usize {
        3
    }
    fn base_dim(&self) -> usize {
        2
    }
    fn identity(&self) -> Vector {
        Vector::zeros(3)
    }
    fn compose(&self, a: &Vector, b: &Vector) -> Vector {
        rotation_vector(&(rotation(a) * rotation(b)))
    }
    fn inverse(&self, a: &Vector) -> Vector {
        -a
    }
    fn act(&self, a: &Vector, m: &Vector) -> Vector {
        project(&(rotation(a) * unproject(m)))
    }
    fn group_box(&self) -> BoxDomain {
        BoxDomain::cube(3, 0.3)
    }
    fn base_box(&self) -> BoxDomain {
        BoxDomain::cube(2, 0.5)
    }
    fn carry(&self, m0: &Vector, m: &Vector) -> Option<Vector> {
        let p0 = unproject(m0);
        let p = unproject(m);
        let axis = p0.cross(&p);
        let angle = axis.norm().atan2(p0.dot(&p));
        let scale = if angle.abs() < 1e-8 { 1.0 + angle * angle / 6.0 } else { angle / angle.sin() };
        let v = axis * scale;
        Some(Vector::from_vec(vec![v[0], v[1], v[2]]))
    }
}
