//! Lie groupoids presented in a single chart.
//!
//! Conventions: for arrows `g, h` the product `gh` is defined when
//! `source(g) = target(h)`, and then `source(gh) = source(h)`,
//! `target(gh) = target(g)`. Local bisections are local right inverses of the
//! source map. A one-jet of a bisection at `m` is stored as the linear map
//! `T_m M → T_g G`, an `N × n` matrix in chart coordinates.
//!
//! Everything here is computed from the structure maps alone; the bisection
//! oracle realises multiplication of one-jets by literally composing
//! representative bisections and differentiating the result.

use std::sync::Arc;

use rand::Rng;

use crate::calculus::{
    derivative4, differentiate, jacobian_of, BoxDomain, ChartMap, Matrix, Vector, DET_THRESHOLD,
    FD_STEP, OUTER_STEP,
};
use crate::error::{Error, Result};

/// Tolerance for composability and verticality checks.
pub const COMPOSABLE_TOL: f64 = 1e-8;

pub type Bisection = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
/// A local section of the algebroid: `m ↦` an `N`-vector at `unit(m)`.
pub type Section = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type SharedModel = Arc<dyn GroupoidModel>;

/// Coordinate presentation of a Lie groupoid.
pub trait GroupoidModel: Send + Sync {
    fn name(&self) -> String;
    /// Dimension `n` of the base.
    fn base_dim(&self) -> usize;
    /// Chart dimension `N` of the arrow space.
    fn dim(&self) -> usize;
    fn source(&self, g: &Vector) -> Vector;
    fn target(&self, g: &Vector) -> Vector;
    fn unit(&self, m: &Vector) -> Vector;
    /// Product `gh`; callers guarantee `source(g) = target(h)`.
    fn mul(&self, g: &Vector, h: &Vector) -> Vector;
    fn inv(&self, g: &Vector) -> Vector;
    /// Nearby arrow with source `m`; the identity when `source(g) = m`.
    fn retract_source(&self, g: &Vector, m: &Vector) -> Vector;
    /// Nearby arrow with target `m`; the identity when `target(g) = m`.
    fn retract_target(&self, g: &Vector, m: &Vector) -> Vector;
    /// Box from which arrows are sampled.
    fn domain_box(&self) -> BoxDomain;
    /// Box from which base points are sampled.
    fn base_box(&self) -> BoxDomain;

    /// Whether `g` lies where the chart is valid.
    fn in_chart(&self, g: &Vector) -> bool {
        g.iter().all(|v| v.is_finite())
    }

    /// Value at `x` of a local bisection whose one-jet is `jet`.
    fn extend_bisection(&self, jet: &Jet1, x: &Vector) -> Vector {
        let g = &jet.arrow.coords + &jet.mu * (x - &jet.arrow.source);
        self.retract_source(&g, x)
    }

    fn source_jacobian(&self, _g: &Vector) -> Option<Matrix> {
        None
    }

    fn target_jacobian(&self, _g: &Vector) -> Option<Matrix> {
        None
    }

    /// Some arrow from `m0` to `m`, smooth in `m`; `None` if the model cannot
    /// connect the two points.
    fn transitive_slice(&self, _m0: &Vector, _m: &Vector) -> Option<Vector> {
        None
    }

    /// Coordinates along the source fibre (all but the source block).
    fn fibre_coords(&self, g: &Vector) -> Vector {
        let k = self.dim() - self.base_dim();
        g.rows(0, k).into_owned()
    }

    /// Inverse of [`GroupoidModel::fibre_coords`] on the fibre over `m0`.
    fn fibre_embed(&self, p: &Vector, m0: &Vector) -> Vector {
        let mut g = Vector::zeros(self.dim());
        g.rows_mut(0, p.len()).copy_from(p);
        g.rows_mut(p.len(), m0.len()).copy_from(m0);
        g
    }
}

/// An arrow with cached source and target.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrow {
    pub coords: Vector,
    pub source: Vector,
    pub target: Vector,
}

impl Arrow {
    pub fn new(model: &dyn GroupoidModel, coords: Vector) -> Self {
        let source = model.source(&coords);
        let target = model.target(&coords);
        Self { coords, source, target }
    }

    pub fn unit(model: &dyn GroupoidModel, m: &Vector) -> Self {
        Self::new(model, model.unit(m))
    }
}

/// A vector tangent to a source fibre at an identity arrow.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebroidVec {
    pub base: Vector,
    pub vec: Vector,
}

impl AlgebroidVec {
    /// Builds the vector, checking that it is tangent to the source fibre.
    pub fn new(model: &dyn GroupoidModel, base: Vector, vec: Vector) -> Result<Self> {
        let residual = (source_jacobian(model, &model.unit(&base)) * &vec).amax();
        if residual > 1e-9 * vec.amax().max(1.0) {
            return Err(Error::Tolerance(residual));
        }
        Ok(Self { base, vec })
    }
}

/// One-jet of a local bisection: arrow `g` with `μ: T_{α(g)}M → T_g G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet1 {
    pub arrow: Arrow,
    pub mu: Matrix,
}

impl Jet1 {
    /// Builds a jet after checking `Tα·μ = id` and `det(Tβ·μ) ≠ 0`.
    pub fn new(model: &dyn GroupoidModel, arrow: Arrow, mu: Matrix) -> Result<Self> {
        let jet = Self { arrow, mu };
        jet.validate(model)?;
        Ok(jet)
    }

    /// The identity jet `T_m ι` at `m`.
    pub fn identity(model: &dyn GroupoidModel, m: &Vector) -> Self {
        let n = model.base_dim();
        let mu = jacobian_of(|x| model.unit(x), m, FD_STEP);
        debug_assert_eq!(mu.ncols(), n);
        Self { arrow: Arrow::unit(model, m), mu }
    }

    pub fn base(&self) -> &Vector {
        &self.arrow.source
    }

    pub fn validate(&self, model: &dyn GroupoidModel) -> Result<()> {
        let n = model.base_dim();
        let ta = source_jacobian(model, &self.arrow.coords) * &self.mu;
        let residual = (ta - Matrix::identity(n, n)).amax();
        if residual > 1e-9 {
            return Err(Error::NotABisection(format!("source condition violated by {residual:e}")));
        }
        let det = self.ad_tangent_matrix(model).determinant();
        if det.abs() <= DET_THRESHOLD {
            return Err(Error::NotABisection(format!("target map degenerate, det = {det:e}")));
        }
        Ok(())
    }

    /// The induced map `T_m M → T_{m'} M`, `v ↦ Tβ·μ(v)`.
    pub fn ad_tangent_matrix(&self, model: &dyn GroupoidModel) -> Matrix {
        target_jacobian(model, &self.arrow.coords) * &self.mu
    }

    /// Max-norm distance between two jets (arrow and matrix).
    pub fn distance(&self, other: &Jet1) -> f64 {
        let da = (&self.arrow.coords - &other.arrow.coords).amax();
        let dm = (&self.mu - &other.mu).amax();
        da.max(dm)
    }
}

pub fn source_jacobian(model: &dyn GroupoidModel, g: &Vector) -> Matrix {
    model
        .source_jacobian(g)
        .unwrap_or_else(|| jacobian_of(|x| model.source(x), g, FD_STEP))
}

pub fn target_jacobian(model: &dyn GroupoidModel, g: &Vector) -> Matrix {
    model
        .target_jacobian(g)
        .unwrap_or_else(|| jacobian_of(|x| model.target(x), g, FD_STEP))
}

/// The structure maps whose tangent maps are exposed.
#[derive(Debug, Clone, Copy)]
pub enum StructureMap<'a> {
    /// `h ↦ gh`.
    LeftMul(&'a Arrow),
    /// `h ↦ hg`.
    RightMul(&'a Arrow),
    Inversion,
    Source,
    Target,
}

/// Tangent of a structure map at `at` applied to `v`. Off-fibre curve points
/// are pulled back onto the composable set by the model's retractions.
pub fn tangent_map(
    model: &dyn GroupoidModel,
    which: StructureMap<'_>,
    at: &Arrow,
    v: &Vector,
) -> Result<Vector> {
    match which {
        StructureMap::LeftMul(g) => {
            let gap = (&at.target - &g.source).amax();
            if gap > COMPOSABLE_TOL {
                return Err(Error::Composition(format!("left translation: gap {gap:e}")));
            }
            Ok(left_translation_jacobian(model, &g.coords, &at.coords) * v)
        }
        StructureMap::RightMul(g) => {
            let gap = (&at.source - &g.target).amax();
            if gap > COMPOSABLE_TOL {
                return Err(Error::Composition(format!("right translation: gap {gap:e}")));
            }
            Ok(right_translation_jacobian(model, &g.coords, &at.coords) * v)
        }
        StructureMap::Inversion => Ok(inversion_jacobian(model, &at.coords) * v),
        StructureMap::Source => Ok(source_jacobian(model, &at.coords) * v),
        StructureMap::Target => Ok(target_jacobian(model, &at.coords) * v),
    }
}

/// Jacobian at `h` of `h ↦ g·retract(h)`.
pub fn left_translation_jacobian(model: &dyn GroupoidModel, g: &Vector, h: &Vector) -> Matrix {
    let a = model.source(g);
    jacobian_of(|x| model.mul(g, &model.retract_target(x, &a)), h, FD_STEP)
}

/// Jacobian at `h` of `h ↦ retract(h)·g`.
pub fn right_translation_jacobian(model: &dyn GroupoidModel, g: &Vector, h: &Vector) -> Matrix {
    let b = model.target(g);
    jacobian_of(|x| model.mul(&model.retract_source(x, &b), g), h, FD_STEP)
}

pub fn inversion_jacobian(model: &dyn GroupoidModel, g: &Vector) -> Matrix {
    jacobian_of(|x| model.inv(x), g, FD_STEP)
}

/// The anchor `#X = Tβ·X`.
pub fn anchor(model: &dyn GroupoidModel, x: &AlgebroidVec) -> Vector {
    target_jacobian(model, &model.unit(&x.base)) * &x.vec
}

/// Orthonormal basis (columns) of the kernel of `Tα` at the arrow `g`.
pub fn vertical_basis(model: &dyn GroupoidModel, g: &Vector) -> Matrix {
    kernel_basis(&source_jacobian(model, g))
}

/// Orthonormal basis of the null space of a full-row-rank matrix, built by
/// Gram–Schmidt on the projected coordinate axes (deterministic).
pub fn kernel_basis(a: &Matrix) -> Matrix {
    let (r, c) = a.shape();
    let k = c - r;
    let aat = a * a.transpose();
    let inv = aat.try_inverse().expect("matrix must have full row rank");
    let projector = Matrix::identity(c, c) - a.transpose() * inv * a;
    let mut cols: Vec<Vector> = Vec::with_capacity(k);
    for j in 0..c {
        if cols.len() == k {
            break;
        }
        let mut v = projector.column(j).into_owned();
        for q in &cols {
            v -= q * q.dot(&v);
        }
        if v.norm() > 1e-6 {
            cols.push(v.normalize());
        }
    }
    Matrix::from_columns(&cols)
}

/// The right-invariant extension `X^R(g) = TR_g·X(β(g))`.
pub fn right_invariant(model: &dyn GroupoidModel, x: &dyn Fn(&Vector) -> Vector, g: &Vector) -> Vector {
    let b = model.target(g);
    let u = model.unit(&b);
    let xv = x(&b);
    let h = FD_STEP;
    let p = model.mul(&model.retract_source(&(&u + &xv * h), &b), g);
    let q = model.mul(&model.retract_source(&(&u - &xv * h), &b), g);
    (p - q) / (2.0 * h)
}

/// Bracket of two sections through their right-invariant extensions,
/// `[X, Y] = DY^R·X^R − DX^R·Y^R` at `unit(m)`.
pub fn algebroid_bracket(
    model: &dyn GroupoidModel,
    x: &dyn Fn(&Vector) -> Vector,
    y: &dyn Fn(&Vector) -> Vector,
    m: &Vector,
) -> Result<AlgebroidVec> {
    algebroid_bracket_with_step(model, x, y, m, OUTER_STEP)
}

/// [`algebroid_bracket`] with an explicit stencil step.
pub fn algebroid_bracket_with_step(
    model: &dyn GroupoidModel,
    x: &dyn Fn(&Vector) -> Vector,
    y: &dyn Fn(&Vector) -> Vector,
    m: &Vector,
    step: f64,
) -> Result<AlgebroidVec> {
    let u = model.unit(m);
    let xr = right_invariant(model, x, &u);
    let yr = right_invariant(model, y, &u);
    let dy = derivative4(|t| right_invariant(model, y, &(&u + &xr * t)), step);
    let dx = derivative4(|t| right_invariant(model, x, &(&u + &yr * t)), step);
    let vec = dy - dx;
    if !vec.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("algebroid bracket".into()));
    }
    Ok(AlgebroidVec { base: m.clone(), vec })
}

/// Lie bracket `[U, W] = DW·U − DU·W` of vector fields on the base.
pub fn vector_field_bracket(
    u: &dyn Fn(&Vector) -> Vector,
    w: &dyn Fn(&Vector) -> Vector,
    m: &Vector,
) -> Vector {
    vector_field_bracket_with_step(u, w, m, OUTER_STEP)
}

pub fn vector_field_bracket_with_step(
    u: &dyn Fn(&Vector) -> Vector,
    w: &dyn Fn(&Vector) -> Vector,
    m: &Vector,
    step: f64,
) -> Vector {
    let um = u(m);
    let wm = w(m);
    let dw = derivative4(|t| w(&(m + &um * t)), step);
    let du = derivative4(|t| u(&(m + &wm * t)), step);
    dw - du
}

/// One-jet at `m` of the local bisection `b`.
pub fn oracle_jet(model: &dyn GroupoidModel, b: &dyn Fn(&Vector) -> Vector, m: &Vector) -> Result<Jet1> {
    let g = b(m);
    let residual = (model.source(&g) - m).amax();
    if residual > 1e-9 {
        return Err(Error::NotABisection(format!("source of b(m) misses m by {residual:e}")));
    }
    let mu = jacobian_of(|x| b(x), m, FD_STEP);
    if !mu.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("bisection derivative".into()));
    }
    Jet1::new(model, Arrow::new(model, g), mu)
}

/// Same as [`oracle_jet`] for a bisection given as a [`ChartMap`], honouring
/// its analytic jacobian when present.
pub fn oracle_jet_chart(model: &dyn GroupoidModel, b: &ChartMap, m: &Vector) -> Result<Jet1> {
    let g = b.eval(m);
    let residual = (model.source(&g) - m).amax();
    if residual > 1e-9 {
        return Err(Error::NotABisection(format!("source of b(m) misses m by {residual:e}")));
    }
    let mu = differentiate(b, m)?;
    Jet1::new(model, Arrow::new(model, g), mu)
}

/// Pointwise product `(b₁b₂)(m) = b₁(β(b₂(m)))·b₂(m)` of local bisections.
pub fn compose_bisections(
    model: &dyn GroupoidModel,
    b1: &dyn Fn(&Vector) -> Vector,
    b2: &dyn Fn(&Vector) -> Vector,
    m: &Vector,
) -> Vector {
    let h = b2(m);
    let g = b1(&model.target(&h));
    model.mul(&g, &h)
}

/// Ground-truth product of one-jets: extend, compose, differentiate.
pub fn oracle_jet_mul(model: &dyn GroupoidModel, j1: &Jet1, j2: &Jet1) -> Result<Jet1> {
    let gap = (&j2.arrow.target - &j1.arrow.source).amax();
    if gap > COMPOSABLE_TOL {
        return Err(Error::Composition(format!("jet product: gap {gap:e}")));
    }
    let b1 = |x: &Vector| model.extend_bisection(j1, x);
    let b2 = |x: &Vector| model.extend_bisection(j2, x);
    oracle_jet(model, &|x| compose_bisections(model, &b1, &b2, x), j2.base())
}

/// Solves `β(b(x)) = target` by Newton's method starting at `x0`.
pub fn solve_target(
    model: &dyn GroupoidModel,
    b: &dyn Fn(&Vector) -> Vector,
    target: &Vector,
    x0: &Vector,
) -> Result<Vector> {
    let phi = |x: &Vector| model.target(&b(x));
    let mut x = x0.clone();
    for _ in 0..50 {
        let r = phi(&x) - target;
        if r.amax() < 1e-14 {
            return Ok(x);
        }
        let j = jacobian_of(phi, &x, FD_STEP);
        let dx = j
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::NotABisection("target map not invertible".into()))?;
        x -= dx;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("bisection inversion".into()));
        }
    }
    let r = (phi(&x) - target).amax();
    if r < 1e-11 {
        Ok(x)
    } else {
        Err(Error::NotABisection(format!("target inversion stalled at residual {r:e}")))
    }
}

/// Value at `y` of the inverse bisection `y ↦ b(φ⁻¹(y))⁻¹`, `φ = β∘b`.
pub fn inverse_bisection(
    model: &dyn GroupoidModel,
    b: &dyn Fn(&Vector) -> Vector,
    y: &Vector,
    guess: &Vector,
) -> Result<Vector> {
    let x = solve_target(model, b, y, guess)?;
    Ok(model.inv(&b(&x)))
}

/// Ground-truth inverse of a one-jet via the inverse representative bisection.
pub fn oracle_jet_inverse(model: &dyn GroupoidModel, j: &Jet1) -> Result<Jet1> {
    let b = |x: &Vector| model.extend_bisection(j, x);
    let m = j.base().clone();
    let mp = j.arrow.target.clone();
    let n = model.base_dim();
    let mut cols = Vec::with_capacity(n);
    let mut err = None;
    for i in 0..n {
        let mut e = Vector::zeros(n);
        e[i] = FD_STEP;
        let p = inverse_bisection(model, &b, &(&mp + &e), &m);
        let q = inverse_bisection(model, &b, &(&mp - &e), &m);
        match (p, q) {
            (Ok(p), Ok(q)) => cols.push((p - q) / (2.0 * FD_STEP)),
            (Err(e), _) | (_, Err(e)) => {
                err = Some(e);
                break;
            }
        }
    }
    if let Some(e) = err {
        return Err(e);
    }
    let g = model.inv(&j.arrow.coords);
    Jet1::new(model, Arrow::new(model, g), Matrix::from_columns(&cols))
}

/// Uniform arrow from the model's box, rejecting points outside the chart.
pub fn sample_arrow<R: Rng + ?Sized>(model: &dyn GroupoidModel, rng: &mut R) -> Result<Arrow> {
    let bx = model.domain_box();
    for _ in 0..1000 {
        let g = bx.sample(rng);
        if model.in_chart(&g) {
            return Ok(Arrow::new(model, g));
        }
    }
    Err(Error::Sampling(format!("no valid arrow in the box of {}", model.name())))
}

/// Arrow `g₁` composable with `g₂` (`source(g₁) = target(g₂)`).
pub fn sample_composable<R: Rng + ?Sized>(
    model: &dyn GroupoidModel,
    rng: &mut R,
    g2: &Arrow,
) -> Result<Arrow> {
    let bx = model.domain_box();
    for _ in 0..1000 {
        let g = model.retract_source(&bx.sample(rng), &g2.target);
        if model.in_chart(&g) && model.in_chart(&model.mul(&g, &g2.coords)) {
            return Ok(Arrow::new(model, g));
        }
    }
    Err(Error::Sampling(format!("no composable partner in the box of {}", model.name())))
}
