//! Numerical kernel shared by every other module: chart maps and their
//! derivatives, fixed-step Runge–Kutta flows, and Levi-Civita symbols of a
//! metric given in a chart.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;
pub type VecFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type MatFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;

/// Step of the inner central differences.
pub const FD_STEP: f64 = 1e-5;
/// Step of outer derivatives taken over numerically computed data.
pub const OUTER_STEP: f64 = 1e-3;
/// Largest time step used by the Runge–Kutta integrator.
pub const RK4_MAX_DT: f64 = 1e-2;
/// Threshold below which determinants count as singular.
pub const DET_THRESHOLD: f64 = 1e-9;

/// Axis-aligned box in a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box bounds must have equal length");
        assert!(lo.iter().zip(&hi).all(|(a, b)| a < b), "empty box");
        Self { lo, hi }
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
    }

    /// Concatenation of two boxes, in order.
    pub fn product(&self, other: &BoxDomain) -> Self {
        let lo = self.lo.iter().chain(&other.lo).copied().collect();
        let hi = self.hi.iter().chain(&other.hi).copied().collect();
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.margin(x) >= 0.0
    }

    /// Signed distance to the boundary in the max norm; negative outside.
    pub fn margin(&self, x: &Vector) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (a, b))| (v - a).min(b - v))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        Vector::from_iterator(
            self.dim(),
            self.lo.iter().zip(&self.hi).map(|(a, b)| rng.random_range(*a..*b)),
        )
    }

    pub fn center(&self) -> Vector {
        Vector::from_iterator(self.dim(), self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)))
    }

    /// Box shrunk towards its centre by `factor` in (0, 1].
    pub fn scaled(&self, factor: f64) -> Self {
        let c = self.center();
        let lo = self.lo.iter().enumerate().map(|(i, a)| c[i] + factor * (a - c[i])).collect();
        let hi = self.hi.iter().enumerate().map(|(i, b)| c[i] + factor * (b - c[i])).collect();
        Self::new(lo, hi)
    }
}

/// A smooth map between chart domains, with an optional analytic derivative.
#[derive(Clone)]
pub struct ChartMap {
    pub dim_in: usize,
    pub dim_out: usize,
    eval: VecFn,
    jacobian: Option<MatFn>,
    domain: Option<BoxDomain>,
}

impl std::fmt::Debug for ChartMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChartMap")
            .field("dim_in", &self.dim_in)
            .field("dim_out", &self.dim_out)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("domain", &self.domain)
            .finish()
    }
}

impl ChartMap {
    pub fn new(
        dim_in: usize,
        dim_out: usize,
        eval: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self { dim_in, dim_out, eval: Arc::new(eval), jacobian: None, domain: None }
    }

    pub fn with_jacobian(
        mut self,
        jacobian: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn with_domain(mut self, domain: BoxDomain) -> Self {
        assert_eq!(domain.dim(), self.dim_in);
        self.domain = Some(domain);
        self
    }

    /// The same map with the analytic jacobian dropped.
    pub fn without_jacobian(&self) -> Self {
        Self { jacobian: None, ..self.clone() }
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn domain(&self) -> Option<&BoxDomain> {
        self.domain.as_ref()
    }

    pub fn eval(&self, x: &Vector) -> Vector {
        (self.eval)(x)
    }

    /// `self ∘ inner`; an analytic jacobian is kept when both factors have one.
    pub fn compose(&self, inner: &ChartMap) -> ChartMap {
        assert_eq!(inner.dim_out, self.dim_in);
        let (f, g) = (self.eval.clone(), inner.eval.clone());
        let mut out = ChartMap::new(inner.dim_in, self.dim_out, move |x| f(&g(x)));
        if let (Some(df), Some(dg)) = (self.jacobian.clone(), inner.jacobian.clone()) {
            let g = inner.eval.clone();
            out = out.with_jacobian(move |x| df(&g(x)) * dg(x));
        }
        out.domain = inner.domain.clone();
        out
    }
}

fn check_finite(values: &Vector, context: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context.to_string()))
    }
}

/// Derivative of `f` at `x`: the analytic jacobian when present, otherwise
/// central differences with step [`FD_STEP`].
pub fn differentiate(f: &ChartMap, x: &Vector) -> Result<Matrix> {
    if let Some(domain) = &f.domain {
        if domain.margin(x) < FD_STEP {
            return Err(Error::Domain { point: x.iter().copied().collect(), margin: FD_STEP });
        }
    }
    match &f.jacobian {
        Some(jac) => {
            let j = jac(x);
            if j.iter().all(|v| v.is_finite()) {
                Ok(j)
            } else {
                Err(Error::NonFinite("analytic jacobian".into()))
            }
        }
        None => differentiate_fd(f, x, FD_STEP),
    }
}

/// Central-difference jacobian with an explicit step.
pub fn differentiate_fd(f: &ChartMap, x: &Vector, h: f64) -> Result<Matrix> {
    check_finite(&f.eval(x), "chart map evaluation")?;
    let mut jac = Matrix::zeros(f.dim_out, f.dim_in);
    let mut xp = x.clone();
    for i in 0..f.dim_in {
        xp[i] = x[i] + h;
        let fp = f.eval(&xp);
        xp[i] = x[i] - h;
        let fm = f.eval(&xp);
        xp[i] = x[i];
        check_finite(&fp, "chart map evaluation")?;
        check_finite(&fm, "chart map evaluation")?;
        jac.set_column(i, &((fp - fm) / (2.0 * h)));
    }
    Ok(jac)
}

/// Richardson-extrapolated central differences, `(4 D(h/2) - D(h)) / 3`.
pub fn differentiate_richardson(f: &ChartMap, x: &Vector, h: f64) -> Result<Matrix> {
    let coarse = differentiate_fd(f, x, h)?;
    let fine = differentiate_fd(f, x, 0.5 * h)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Central-difference jacobian of a plain closure.
pub fn jacobian_of(f: impl Fn(&Vector) -> Vector, x: &Vector, h: f64) -> Matrix {
    let mut xp = x.clone();
    let mut cols = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        cols.push((fp - fm) / (2.0 * h));
    }
    Matrix::from_columns(&cols)
}

/// Central difference of `f` at `x` along `v`.
pub fn directional(f: impl Fn(&Vector) -> Vector, x: &Vector, v: &Vector, h: f64) -> Vector {
    (f(&(x + v * h)) - f(&(x - v * h))) / (2.0 * h)
}

/// Fourth-order central difference of a curve `t ↦ f(t)` at `t = 0`.
pub fn derivative4(f: impl Fn(f64) -> Vector, h: f64) -> Vector {
    (f(-2.0 * h) - f(-h) * 8.0 + f(h) * 8.0 - f(2.0 * h)) / (12.0 * h)
}

/// Number of Runge–Kutta steps keeping the step at most [`RK4_MAX_DT`].
pub fn steps_for(duration: f64) -> usize {
    ((duration.abs() / RK4_MAX_DT).ceil() as usize).max(1)
}

/// Autonomous flow of `field` for time `t`, classical RK4 with `steps` steps.
pub fn flow(field: impl Fn(&Vector) -> Vector, x0: &Vector, t: f64, steps: usize) -> Result<Vector> {
    flow_between(|_, x| field(x), x0, 0.0, t, steps, |_| true)
}

/// Non-autonomous RK4 from `t0` to `t1`; `inside` guards the chart box.
pub fn flow_between(
    field: impl Fn(f64, &Vector) -> Vector,
    x0: &Vector,
    t0: f64,
    t1: f64,
    steps: usize,
    inside: impl Fn(&Vector) -> bool,
) -> Result<Vector> {
    assert!(steps >= 1, "flow needs at least one step");
    let dt = (t1 - t0) / steps as f64;
    let mut x = x0.clone();
    for k in 0..steps {
        let t = t0 + dt * k as f64;
        let k1 = field(t, &x);
        let k2 = field(t + 0.5 * dt, &(&x + &k1 * (0.5 * dt)));
        let k3 = field(t + 0.5 * dt, &(&x + &k2 * (0.5 * dt)));
        let k4 = field(t + dt, &(&x + &k3 * dt));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        check_finite(&x, "flow trajectory")?;
        if !inside(&x) {
            return Err(Error::Escape(t + dt));
        }
    }
    Ok(x)
}

/// Riemannian metric in a chart.
#[derive(Clone)]
pub struct MetricChart {
    pub name: String,
    pub dim: usize,
    g: MatFn,
    domain: BoxDomain,
}

impl std::fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricChart").field("name", &self.name).field("dim", &self.dim).finish()
    }
}

impl MetricChart {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        domain: BoxDomain,
        g: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), dim, g: Arc::new(g), domain }
    }

    pub fn g(&self, x: &Vector) -> Matrix {
        (self.g)(x)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    /// Checks symmetry and positive definiteness at `x`.
    pub fn validate_at(&self, x: &Vector) -> Result<()> {
        let g = self.g(x);
        if g.nrows() != self.dim || g.ncols() != self.dim {
            return Err(Error::Metric(format!("expected a {0}x{0} matrix", self.dim)));
        }
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::Metric(format!("non-finite components at {:?}", x.as_slice())));
        }
        if (&g - g.transpose()).amax() > 1e-12 * g.amax().max(1.0) {
            return Err(Error::Metric("metric matrix is not symmetric".into()));
        }
        let min_eig = g.clone().symmetric_eigenvalues().min();
        if min_eig <= 0.0 {
            return Err(Error::Metric(format!(
                "not positive definite at {:?} (min eigenvalue {min_eig:e})",
                x.as_slice()
            )));
        }
        Ok(())
    }

    /// Orthonormal frame `E` with `Eᵀ g E = I`, from the Cholesky factor.
    pub fn frame(&self, x: &Vector) -> Result<Matrix> {
        let chol = self
            .g(x)
            .cholesky()
            .ok_or_else(|| Error::SingularMetric(x.iter().copied().collect()))?;
        let l = chol.l();
        l.transpose()
            .try_inverse()
            .ok_or_else(|| Error::SingularMetric(x.iter().copied().collect()))
    }
}

/// Christoffel symbols `Γ^k_ij` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    pub dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim * dim] }
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    fn set_sym(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let d = self.dim;
        self.data[(k * d + i) * d + j] = v;
        self.data[(k * d + j) * d + i] = v;
    }

    /// The matrix `(Γ^k_ij)_{ij}` for fixed `k`.
    pub fn slice(&self, k: usize) -> Matrix {
        Matrix::from_fn(self.dim, self.dim, |i, j| self.get(k, i, j))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Levi-Civita symbols `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
pub fn christoffel(metric: &MetricChart, x: &Vector) -> Result<Christoffel> {
    let d = metric.dim;
    let g = metric.g(x);
    if g.determinant().abs() < DET_THRESHOLD {
        return Err(Error::SingularMetric(x.iter().copied().collect()));
    }
    let ginv = g
        .try_inverse()
        .ok_or_else(|| Error::SingularMetric(x.iter().copied().collect()))?;
    let mut dg = Vec::with_capacity(d);
    let mut xp = x.clone();
    for l in 0..d {
        xp[l] = x[l] + FD_STEP;
        let gp = metric.g(&xp);
        xp[l] = x[l] - FD_STEP;
        let gm = metric.g(&xp);
        xp[l] = x[l];
        dg.push((gp - gm) / (2.0 * FD_STEP));
    }
    if dg.iter().any(|m| !m.iter().all(|v| v.is_finite())) {
        return Err(Error::NonFinite("metric derivative".into()));
    }
    let mut out = Christoffel::zeros(d);
    for k in 0..d {
        for i in 0..d {
            for j in i..d {
                let s: f64 = (0..d)
                    .map(|l| ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                    .sum();
                out.set_sym(k, i, j, 0.5 * s);
            }
        }
    }
    Ok(out)
}
