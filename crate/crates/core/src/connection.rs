//! Cartan connections on groupoids and their infinitesimal counterparts.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calculus::{derivative4, flow_between, steps_for, Matrix, Vector, OUTER_STEP};
use crate::error::{Error, Result};
use crate::groupoid::{
    compose_bisections, oracle_jet, oracle_jet_mul, right_invariant, sample_arrow, sample_composable,
    Arrow, GroupoidModel, Jet1, SharedModel,
};
use crate::jet::{mul_kernel_right, KernelHom};

/// Default tolerance for the multiplicativity check against the oracle.
pub const MULTIPLICATIVE_TOL: f64 = 1e-7;

pub type ConnectionFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;
pub type KernelSection = Arc<dyn Fn(&Vector) -> KernelHom + Send + Sync>;

/// Outcome of comparing `S(gh)` with `S(g)·S(h)` on random composable pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicativityReport {
    pub seed: u64,
    pub samples: usize,
    pub max_error: f64,
    pub unit_error: f64,
    pub tolerance: f64,
}

impl MultiplicativityReport {
    pub fn passed(&self) -> bool {
        self.max_error.max(self.unit_error) <= self.tolerance
    }
}

/// A field of horizontal jets `g ↦ S(g)`.
#[derive(Clone)]
pub struct CartanConnection {
    model: SharedModel,
    label: String,
    s: ConnectionFn,
    report: Option<MultiplicativityReport>,
}

impl fmt::Debug for CartanConnection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CartanConnection")
            .field("model", &self.model.name())
            .field("label", &self.label)
            .field("report", &self.report)
            .finish()
    }
}

impl CartanConnection {
    pub fn new(
        model: SharedModel,
        label: impl Into<String>,
        s: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        Self { model, label: label.into(), s: Arc::new(s), report: None }
    }

    pub fn model(&self) -> &SharedModel {
        &self.model
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The `N × n` matrix of `S(g)`.
    pub fn matrix(&self, g: &Vector) -> Matrix {
        (self.s)(g)
    }

    pub fn eval(&self, g: &Arrow) -> Jet1 {
        Jet1 { arrow: g.clone(), mu: (self.s)(&g.coords) }
    }

    pub fn eval_coords(&self, g: &Vector) -> Jet1 {
        self.eval(&Arrow::new(self.model.as_ref(), g.clone()))
    }

    pub fn report(&self) -> Option<&MultiplicativityReport> {
        self.report.as_ref()
    }

    pub fn is_verified(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.passed())
    }

    /// Runs [`check_multiplicative`] and records the outcome.
    pub fn verified(mut self, seed: u64, count: usize) -> Result<Self> {
        self.report = Some(check_multiplicative(&self, seed, count, MULTIPLICATIVE_TOL)?);
        Ok(self)
    }

    /// `S'(g) = S(g)·φ(α(g))^∨`. The result carries no verification record.
    pub fn perturbed(&self, phi: KernelSection) -> CartanConnection {
        let base = self.clone();
        let model = self.model.clone();
        let s = move |g: &Vector| {
            let jet = base.eval_coords(g);
            let k = phi(&jet.arrow.source);
            match mul_kernel_right(model.as_ref(), &jet, &k) {
                Ok(j) => j.mu,
                Err(_) => Matrix::from_element(jet.mu.nrows(), jet.mu.ncols(), f64::NAN),
            }
        };
        CartanConnection::new(self.model.clone(), format!("{} (perturbed)", self.label), s)
    }
}

/// Compares `S(g₁g₂)` with the oracle product `S(g₁)·S(g₂)` and `S(unit(m))`
/// with `T_m unit` on seeded random samples.
pub fn check_multiplicative(
    s: &CartanConnection,
    seed: u64,
    count: usize,
    tolerance: f64,
) -> Result<MultiplicativityReport> {
    let model = s.model.as_ref();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error: f64 = 0.0;
    let mut unit_error: f64 = 0.0;
    for _ in 0..count {
        let g2 = sample_arrow(model, &mut rng)?;
        let g1 = sample_composable(model, &mut rng, &g2)?;
        let product = oracle_jet_mul(model, &s.eval(&g1), &s.eval(&g2))?;
        let direct = s.eval(&product.arrow);
        max_error = max_error.max(direct.distance(&product));
        let unit = Jet1::identity(model, &g2.source);
        unit_error = unit_error.max(s.eval(&unit.arrow).distance(&unit));
    }
    if !max_error.is_finite() || !unit_error.is_finite() {
        return Err(Error::NonFinite("multiplicativity check".into()));
    }
    Ok(MultiplicativityReport { seed, samples: count, max_error, unit_error, tolerance })
}

/// A polynomial path `γ(t) = start + t·velocity + t²·accel` in the base.
#[derive(Debug, Clone, PartialEq)]
pub struct BasePath {
    pub start: Vector,
    pub velocity: Vector,
    pub accel: Vector,
}

impl BasePath {
    pub fn straight(start: Vector, velocity: Vector) -> Self {
        let accel = Vector::zeros(start.len());
        Self { start, velocity, accel }
    }

    pub fn quadratic(start: Vector, velocity: Vector, accel: Vector) -> Self {
        Self { start, velocity, accel }
    }

    /// The segment from `a` to `b` parametrised by `[0, 1]`.
    pub fn segment(a: &Vector, b: &Vector) -> Self {
        Self::straight(a.clone(), b - a)
    }

    pub fn point(&self, t: f64) -> Vector {
        &self.start + &self.velocity * t + &self.accel * (t * t)
    }

    pub fn tangent(&self, t: f64) -> Vector {
        &self.velocity + &self.accel * (2.0 * t)
    }
}

/// Parallel action `A^γ_{t0,t1}`: the horizontal lift of `γ` through `g`
/// (with `source(g) = γ(t0)`) evaluated at `t1`.
pub fn parallel_transport(s: &CartanConnection, path: &BasePath, t0: f64, t1: f64, g: &Vector) -> Result<Vector> {
    parallel_transport_steps(s, path, t0, t1, g, steps_for(t1 - t0))
}

/// [`parallel_transport`] with an explicit number of RK4 steps.
pub fn parallel_transport_steps(
    s: &CartanConnection,
    path: &BasePath,
    t0: f64,
    t1: f64,
    g: &Vector,
    steps: usize,
) -> Result<Vector> {
    let model = s.model.as_ref();
    flow_between(|t, x| s.matrix(x) * path.tangent(t), g, t0, t1, steps, |x| model.in_chart(x))
}

/// How an [`AlgebroidConnection`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Differentiated flows of right-invariant fields.
    FlowFormula,
    /// Differentiated parallel action along straight paths.
    ParallelTransport,
    /// Built from a classical parallelism on a principal bundle.
    ClassicalParallelism,
}

pub type NablaFn =
    Arc<dyn Fn(&Vector, &Vector, &dyn Fn(&Vector) -> Vector) -> Result<Vector> + Send + Sync>;

/// A linear connection `(m, v, X) ↦ ∇_v X (m)` on the algebroid.
#[derive(Clone)]
pub struct AlgebroidConnection {
    model: SharedModel,
    nabla: NablaFn,
    pub provenance: Provenance,
}

impl fmt::Debug for AlgebroidConnection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlgebroidConnection")
            .field("model", &self.model.name())
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl AlgebroidConnection {
    pub fn new(model: SharedModel, provenance: Provenance, nabla: NablaFn) -> Self {
        Self { model, nabla, provenance }
    }

    pub fn model(&self) -> &SharedModel {
        &self.model
    }

    pub fn nabla(&self, m: &Vector, v: &Vector, x: &dyn Fn(&Vector) -> Vector) -> Result<Vector> {
        (self.nabla)(m, v, x)
    }
}

/// Which construction [`infinitesimalize`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Flow,
    Transport,
}

pub fn infinitesimalize(s: &CartanConnection, route: Route) -> AlgebroidConnection {
    let conn = s.clone();
    match route {
        Route::Flow => AlgebroidConnection::new(
            s.model.clone(),
            Provenance::FlowFormula,
            Arc::new(move |m, v, x| nabla_by_flow(&conn, m, v, x)),
        ),
        Route::Transport => AlgebroidConnection::new(
            s.model.clone(),
            Provenance::ParallelTransport,
            Arc::new(move |m, v, x| nabla_by_transport(&conn, &BasePath::straight(m.clone(), v.clone()), x)),
        ),
    }
}

fn flow_of(model: &dyn GroupoidModel, x: &dyn Fn(&Vector) -> Vector, g: &Vector, t: f64) -> Result<Vector> {
    flow_between(|_, y| right_invariant(model, x, y), g, 0.0, t, steps_for(t), |y| model.in_chart(y))
}

/// `∇_v X = ∂_t T(Φ^t_{X^R}∘unit)·v − ∂_t S(Φ^t_{X^R}(m))·v` at `t = 0`.
pub fn nabla_by_flow(s: &CartanConnection, m: &Vector, v: &Vector, x: &dyn Fn(&Vector) -> Vector) -> Result<Vector> {
    let model = s.model.as_ref();
    let failure = std::cell::RefCell::new(None::<Error>);
    let guard = |r: Result<Vector>| match r {
        Ok(g) => g,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            Vector::zeros(model.dim())
        }
    };
    let unit = model.unit(m);
    let pushed = derivative4(
        |t| derivative4(|h| guard(flow_of(model, x, &model.unit(&(m + v * h)), t)), OUTER_STEP),
        OUTER_STEP,
    );
    let lifted = derivative4(|t| s.matrix(&guard(flow_of(model, x, &unit, t))) * v, OUTER_STEP);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(pushed - lifted)
}

/// `∇_{γ̇(0)} X = ∂_t a^γ_{t,0} X(γ(t))` at `t = 0`.
pub fn nabla_by_transport(s: &CartanConnection, path: &BasePath, x: &dyn Fn(&Vector) -> Vector) -> Result<Vector> {
    let model = s.model.as_ref();
    let failure = std::cell::RefCell::new(None::<Error>);
    let transported = |t: f64| -> Vector {
        let p = path.point(t);
        let unit = model.unit(&p);
        let xv = x(&p);
        derivative4(
            |h| {
                let g = model.retract_source(&(&unit + &xv * h), &p);
                match parallel_transport(s, path, t, 0.0, &g) {
                    Ok(g) => g,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        Vector::zeros(model.dim())
                    }
                }
            },
            OUTER_STEP,
        )
    };
    let out = derivative4(transported, OUTER_STEP);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(out)
}

/// The local bisection through `g` obtained by lifting straight segments
/// from `source(g)` horizontally; integral for `D` when `D` is involutive.
pub fn radial_bisection<'a>(s: &'a CartanConnection, g: &Vector, steps: usize) -> impl Fn(&Vector) -> Result<Vector> + 'a {
    let g = g.clone();
    let m = s.model.source(&g);
    move |x: &Vector| parallel_transport_steps(s, &BasePath::segment(&m, x), 0.0, 1.0, &g, steps)
}

/// Residuals for the tangency of horizontal bisections and their products.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralBisectionReport {
    pub samples: usize,
    /// `max |T_x b − S(b(x))|` over the factors.
    pub factor_error: f64,
    /// `max |T_x(b₁b₂) − S((b₁b₂)(x))|`.
    pub product_error: f64,
}

/// Draws pairs of horizontal bisections through composable arrows and checks
/// that they and their products stay tangent to `D`.
pub fn check_integral_products(s: &CartanConnection, seed: u64, count: usize) -> Result<IntegralBisectionReport> {
    let model = s.model.as_ref();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = 16;
    let mut factor_error: f64 = 0.0;
    let mut product_error: f64 = 0.0;
    for _ in 0..count {
        let g2 = sample_arrow(model, &mut rng)?;
        let g1 = sample_composable(model, &mut rng, &g2)?;
        let b1 = radial_bisection(s, &g1.coords, steps);
        let b2 = radial_bisection(s, &g2.coords, steps);
        let failure = std::cell::RefCell::new(None::<Error>);
        let eval = |b: &dyn Fn(&Vector) -> Result<Vector>, x: &Vector| match b(x) {
            Ok(g) => g,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Vector::from_element(model.dim(), f64::NAN)
            }
        };
        let f1 = |x: &Vector| eval(&b1, x);
        let f2 = |x: &Vector| eval(&b2, x);
        let x = &g2.source;
        let j2 = oracle_jet(model, &f2, x)?;
        factor_error = factor_error.max(j2.distance(&s.eval(&j2.arrow)));
        let j1 = oracle_jet(model, &f1, &g1.source)?;
        factor_error = factor_error.max(j1.distance(&s.eval(&j1.arrow)));
        let jp = oracle_jet(model, &|y| compose_bisections(model, &f1, &f2, y), x)?;
        product_error = product_error.max(jp.distance(&s.eval(&jp.arrow)));
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
    }
    Ok(IntegralBisectionReport { samples: count, factor_error, product_error })
}
