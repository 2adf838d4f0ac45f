//! Curvature of algebroid connections, involutivity of horizontal plane
//! fields, and reconstruction of an action algebra from a flat connection.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calculus::{derivative4, steps_for, Matrix, Vector, OUTER_STEP};
use crate::connection::{AlgebroidConnection, CartanConnection};
use crate::error::{Error, Result};
use crate::groupoid::{
    algebroid_bracket_with_step, sample_arrow, target_jacobian, vector_field_bracket_with_step,
    vertical_basis, Arrow, GroupoidModel, SharedModel,
};

/// Lattice spacing of reconstruction grids.
pub const GRID_SPACING: f64 = 0.05;
/// Default threshold separating flat from curved.
/// Stencil spacing for derivatives of connection coefficients.
pub const CURVATURE_STEP: f64 = GRID_SPACING / 4.0;

pub const FLATNESS_TOL: f64 = 1e-4;
/// Largest admissible mismatch between transports along homotopic paths.
pub const HOLONOMY_TOL: f64 = 1e-4;
/// Stencil step for brackets of transported sections.
pub const SECTION_BRACKET_STEP: f64 = 1e-2;

const GRAM_THRESHOLD: f64 = 1e-9;

/// Orthonormal frames of the algebroid aligned to a reference frame by the
/// nearest rotation.
#[derive(Clone)]
pub struct AlgebroidFrame {
    model: SharedModel,
    reference: Matrix,
}

impl AlgebroidFrame {
    pub fn new(model: SharedModel, m0: &Vector) -> Self {
        let reference = vertical_basis(model.as_ref(), &model.unit(m0));
        Self { model, reference }
    }

    pub fn rank(&self) -> usize {
        self.reference.ncols()
    }

    /// `N × r` frame at `unit(m)`.
    pub fn at(&self, m: &Vector) -> Result<Matrix> {
        let raw = vertical_basis(self.model.as_ref(), &self.model.unit(m));
        let overlap = self.reference.transpose() * &raw;
        let gram = (overlap.transpose() * &overlap).determinant();
        if gram.abs() < GRAM_THRESHOLD {
            return Err(Error::Frame(gram));
        }
        let svd = overlap.svd(true, true);
        let (u, vt) = (svd.u.expect("svd u"), svd.v_t.expect("svd v"));
        Ok(raw * vt.transpose() * u.transpose())
    }

    /// Frame vector `a` as a section; NaN where the frame degenerates.
    pub fn section(&self, a: usize) -> impl Fn(&Vector) -> Vector + '_ {
        move |m: &Vector| match self.at(m) {
            Ok(e) => e.column(a).into_owned(),
            Err(_) => Vector::from_element(self.model.dim(), f64::NAN),
        }
    }
}

fn finite(v: Vector, what: &str) -> Result<Vector> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// The `r × r` matrix `Γ(v)` with `∇_v e_a = Σ_b Γ(v)_{ba} e_b` at `m`.
pub fn connection_matrix(nabla: &AlgebroidConnection, frame: &AlgebroidFrame, m: &Vector, v: &Vector) -> Result<Matrix> {
    let e = frame.at(m)?;
    let r = frame.rank();
    let mut out = Matrix::zeros(r, r);
    for a in 0..r {
        let section = frame.section(a);
        let d = finite(nabla.nabla(m, v, &section)?, "covariant derivative of a frame vector")?;
        out.set_column(a, &(e.transpose() * d));
    }
    Ok(out)
}

/// Connection coefficients `Γ_i = Γ(∂_i)` at `m`.
pub fn connection_coefficients(nabla: &AlgebroidConnection, frame: &AlgebroidFrame, m: &Vector) -> Result<Vec<Matrix>> {
    let n = m.len();
    (0..n)
        .map(|i| {
            let mut e = Vector::zeros(n);
            e[i] = 1.0;
            connection_matrix(nabla, frame, m, &e)
        })
        .collect()
}

/// `R(∂_i, ∂_j)` in frame coordinates at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    pub m: Vector,
    pub n: usize,
    pub rank: usize,
    components: Vec<Matrix>,
}

impl CurvatureTensor {
    pub fn component(&self, i: usize, j: usize) -> &Matrix {
        &self.components[i * self.n + j]
    }

    /// Largest absolute entry.
    pub fn sup_norm(&self) -> f64 {
        self.components.iter().fold(0.0, |a, c| a.max(c.amax()))
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max((self.component(i, j) + self.component(j, i)).amax());
            }
        }
        worst
    }
}

/// `R_ij = ∂_iΓ_j − ∂_jΓ_i + [Γ_i, Γ_j]` with a fourth-order stencil of
/// spacing [`CURVATURE_STEP`].
pub fn curvature(nabla: &AlgebroidConnection, m: &Vector) -> Result<CurvatureTensor> {
    curvature_with_step(nabla, m, CURVATURE_STEP)
}

/// [`curvature`] with an explicit stencil spacing.
pub fn curvature_with_step(nabla: &AlgebroidConnection, m: &Vector, spacing: f64) -> Result<CurvatureTensor> {
    let frame = AlgebroidFrame::new(nabla.model().clone(), m);
    let n = m.len();
    let r = frame.rank();
    let gamma = connection_coefficients(nabla, &frame, m)?;
    let failure = RefCell::new(None::<Error>);
    // dgamma[i][j] = ∂_i Γ_j, flattened column-wise.
    let mut dgamma = Vec::with_capacity(n);
    for i in 0..n {
        let d = derivative4(
            |t| {
                let mut p = m.clone();
                p[i] += t;
                match connection_coefficients(nabla, &frame, &p) {
                    Ok(gs) => Vector::from_iterator(n * r * r, gs.iter().flat_map(|g| g.iter().copied())),
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        Vector::zeros(n * r * r)
                    }
                }
            },
            spacing,
        );
        dgamma.push(d);
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let block = |i: usize, j: usize| Matrix::from_column_slice(r, r, &dgamma[i].as_slice()[j * r * r..(j + 1) * r * r]);
    let mut components = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                components.push(Matrix::zeros(r, r));
                continue;
            }
            let c = block(i, j) - block(j, i) + &gamma[i] * &gamma[j] - &gamma[j] * &gamma[i];
            components.push(c);
        }
    }
    Ok(CurvatureTensor { m: m.clone(), n, rank: r, components })
}

/// Brackets `[V_i, V_j] mod D` of the horizontal lifts `V_i(g) = S(g)e_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Torsion {
    pub arrow: Vector,
    pub components: Vec<(usize, usize, Vector)>,
}

impl Torsion {
    pub fn sup_norm(&self) -> f64 {
        self.components.iter().fold(0.0, |a, (_, _, v)| a.max(v.amax()))
    }
}

pub fn frobenius_torsion(s: &CartanConnection, g: &Arrow) -> Result<Torsion> {
    let n = s.model().base_dim();
    let lift = |i: usize, x: &Vector| s.matrix(x).column(i).into_owned();
    let sg = s.matrix(&g.coords);
    let proj = {
        let gram = sg.transpose() * &sg;
        let inv = gram
            .try_inverse()
            .ok_or_else(|| Error::Singular("horizontal plane degenerate".into()))?;
        Matrix::identity(sg.nrows(), sg.nrows()) - &sg * inv * sg.transpose()
    };
    let mut components = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let vi = lift(i, &g.coords);
            let vj = lift(j, &g.coords);
            let dvj = derivative4(|t| lift(j, &(&g.coords + &vi * t)), OUTER_STEP);
            let dvi = derivative4(|t| lift(i, &(&g.coords + &vj * t)), OUTER_STEP);
            let bracket = finite(dvj - dvi, "bracket of horizontal lifts")?;
            components.push((i, j, &proj * bracket));
        }
    }
    Ok(Torsion { arrow: g.coords.clone(), components })
}

/// One sampled point of the flatness experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatnessRow {
    pub index: usize,
    pub point: Vector,
    pub arrow: Vector,
    pub curvature: f64,
    pub torsion: f64,
}

/// Paired curvature and torsion norms over seeded samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatnessReport {
    pub seed: u64,
    pub tolerance: f64,
    pub rows: Vec<FlatnessRow>,
    pub max_curvature: f64,
    pub max_torsion: f64,
    pub antisymmetry: f64,
}

impl FlatnessReport {
    pub fn flat(&self) -> bool {
        self.max_curvature <= self.tolerance
    }

    pub fn involutive(&self) -> bool {
        self.max_torsion <= self.tolerance
    }

    /// Whether curvature and torsion fall on the same side of the tolerance.
    pub fn agreement(&self) -> bool {
        self.flat() == self.involutive()
    }

    /// Fraction of rows where both norms exceed `factor × tolerance`.
    pub fn fraction_both_above(&self, factor: f64) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        let t = factor * self.tolerance;
        let hits = self.rows.iter().filter(|r| r.curvature > t && r.torsion > t).count();
        hits as f64 / self.rows.len() as f64
    }
}

/// Samples base points (curvature) and arrows (torsion) with one seeded
/// generator and tabulates both norms.
pub fn flatness_experiment(
    s: &CartanConnection,
    nabla: &AlgebroidConnection,
    seed: u64,
    count: usize,
    tolerance: f64,
) -> Result<FlatnessReport> {
    if !s.is_verified() {
        return Err(Error::NotMultiplicative("flatness experiment needs a verified connection".into()));
    }
    let model = s.model().as_ref();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inner = model.base_box().scaled(0.6);
    let mut rows = Vec::with_capacity(count);
    let mut antisymmetry: f64 = 0.0;
    for index in 0..count {
        let point = inner.sample(&mut rng);
        let arrow = sample_arrow(model, &mut rng)?;
        let r = curvature(nabla, &point)?;
        antisymmetry = antisymmetry.max(r.antisymmetry_residual());
        let tau = frobenius_torsion(s, &arrow)?;
        rows.push(FlatnessRow { index, point, arrow: arrow.coords, curvature: r.sup_norm(), torsion: tau.sup_norm() });
    }
    let max_curvature = rows.iter().fold(0.0, |a: f64, r| a.max(r.curvature));
    let max_torsion = rows.iter().fold(0.0, |a: f64, r| a.max(r.torsion));
    Ok(FlatnessReport { seed, tolerance, rows, max_curvature, max_torsion, antisymmetry })
}

/// Square lattice in the first two base coordinates around `m0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub m0: Vector,
    pub spacing: f64,
    pub half_steps: usize,
}

impl Grid {
    pub fn new(m0: Vector, half_steps: usize) -> Self {
        Self { m0, spacing: GRID_SPACING, half_steps }
    }

    pub fn point(&self, a: i64, b: i64) -> Vector {
        let mut p = self.m0.clone();
        p[0] += a as f64 * self.spacing;
        if p.len() > 1 {
            p[1] += b as f64 * self.spacing;
        }
        p
    }
}

/// Transports coefficient matrices by `Ċ = −Γ(ṁ)C` along straight segments.
struct Transporter<'a> {
    nabla: &'a AlgebroidConnection,
    frame: &'a AlgebroidFrame,
}

impl Transporter<'_> {
    fn segment(&self, from: &Vector, to: &Vector, c0: &Matrix, steps: usize) -> Result<Matrix> {
        let dm = to - from;
        let h = 1.0 / steps as f64;
        let rhs = |tau: f64, c: &Matrix| -> Result<Matrix> {
            let p = from + &dm * tau;
            Ok(-(connection_matrix(self.nabla, self.frame, &p, &dm)? * c))
        };
        let mut c = c0.clone();
        for k in 0..steps {
            let t = k as f64 * h;
            let k1 = rhs(t, &c)?;
            let k2 = rhs(t + 0.5 * h, &(&c + &k1 * (0.5 * h)))?;
            let k3 = rhs(t + 0.5 * h, &(&c + &k2 * (0.5 * h)))?;
            let k4 = rhs(t + h, &(&c + &k3 * h))?;
            c += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        Ok(c)
    }
}

/// The `∇`-parallel extension of the frame at `m0`, evaluated by radial
/// transport with a fixed step count.
#[derive(Clone)]
pub struct ParallelSections {
    nabla: AlgebroidConnection,
    frame: AlgebroidFrame,
    m0: Vector,
    steps: usize,
    memo: Arc<Mutex<HashMap<Vec<u64>, Matrix>>>,
}

impl ParallelSections {
    pub fn new(nabla: AlgebroidConnection, m0: &Vector, radius: f64) -> Self {
        let frame = AlgebroidFrame::new(nabla.model().clone(), m0);
        Self { nabla, frame, m0: m0.clone(), steps: steps_for(radius / 2.0), memo: Arc::default() }
    }

    pub fn rank(&self) -> usize {
        self.frame.rank()
    }

    /// Coefficients of all transported sections at `m`, one per column.
    pub fn coefficients(&self, m: &Vector) -> Result<Matrix> {
        let key: Vec<u64> = m.iter().map(|x| x.to_bits()).collect();
        if let Some(c) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(c.clone());
        }
        let r = self.rank();
        let c = Transporter { nabla: &self.nabla, frame: &self.frame }.segment(&self.m0, m, &Matrix::identity(r, r), self.steps)?;
        self.memo.lock().expect("memo lock").insert(key, c.clone());
        Ok(c)
    }

    /// All transported sections at `m` as `N`-vectors (columns).
    pub fn values(&self, m: &Vector) -> Result<Matrix> {
        Ok(self.frame.at(m)? * self.coefficients(m)?)
    }

    pub fn section(&self, a: usize, m: &Vector) -> Result<Vector> {
        Ok(self.values(m)?.column(a).into_owned())
    }

    /// The fundamental vector field `ξ_a† = #ξ_a`.
    pub fn action_field(&self, a: usize, m: &Vector) -> Result<Vector> {
        let model = self.nabla.model();
        Ok(target_jacobian(model.as_ref(), &model.unit(m)) * self.section(a, m)?)
    }
}

/// Parallel sections, their bracket table and the residuals validating it.
#[derive(Clone)]
pub struct ReconstructionResult {
    pub m0: Vector,
    pub dim_g0: usize,
    /// `c[(k, i, j)]` stored as `structure[k][(i, j)]`.
    pub structure: Vec<Matrix>,
    pub holonomy: f64,
    pub jacobi_residual: f64,
    pub homomorphism_residual: f64,
    pub parallelism_residual: f64,
    pub derived_rank: usize,
    pub sections: Arc<ParallelSections>,
}

impl std::fmt::Debug for ReconstructionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReconstructionResult")
            .field("dim_g0", &self.dim_g0)
            .field("structure", &self.structure)
            .field("holonomy", &self.holonomy)
            .field("jacobi_residual", &self.jacobi_residual)
            .field("homomorphism_residual", &self.homomorphism_residual)
            .field("parallelism_residual", &self.parallelism_residual)
            .field("derived_rank", &self.derived_rank)
            .finish()
    }
}

impl ReconstructionResult {
    pub fn constant(&self, k: usize, i: usize, j: usize) -> f64 {
        self.structure[k][(i, j)]
    }

    /// Largest structure constant in absolute value.
    pub fn max_constant(&self) -> f64 {
        self.structure.iter().fold(0.0, |a, c| a.max(c.amax()))
    }

    pub fn action_field(&self, a: usize, m: &Vector) -> Result<Vector> {
        self.sections.action_field(a, m)
    }
}

/// Largest mismatch between transports along x-then-y and y-then-x lattice
/// paths from the grid centre.
pub fn grid_holonomy(nabla: &AlgebroidConnection, grid: &Grid) -> Result<f64> {
    let n = grid.m0.len();
    if n < 2 {
        return Ok(0.0);
    }
    let frame = AlgebroidFrame::new(nabla.model().clone(), &grid.m0);
    let tr = Transporter { nabla, frame: &frame };
    let r = frame.rank();
    let steps = steps_for(grid.spacing);
    let k = grid.half_steps as i64;
    let walk = |start: Matrix, fixed: i64, along_x: bool| -> Result<Vec<(i64, Matrix)>> {
        let at = |s: i64| if along_x { grid.point(s, fixed) } else { grid.point(fixed, s) };
        let mut out = vec![(0, start.clone())];
        for dir in [1i64, -1] {
            let mut c = start.clone();
            for s in 1..=k {
                c = tr.segment(&at((s - 1) * dir), &at(s * dir), &c, steps)?;
                out.push((s * dir, c.clone()));
            }
        }
        Ok(out)
    };
    let id = Matrix::identity(r, r);
    let x_axis = walk(id.clone(), 0, true)?;
    let y_axis = walk(id, 0, false)?;
    let mut x_first = std::collections::BTreeMap::new();
    for (a, c) in &x_axis {
        for (b, cb) in walk(c.clone(), *a, false)? {
            x_first.insert((*a, b), cb);
        }
    }
    let mut worst: f64 = 0.0;
    for (b, c) in &y_axis {
        for (a, ca) in walk(c.clone(), *b, true)? {
            worst = worst.max((&ca - &x_first[&(a, *b)]).amax());
        }
    }
    Ok(worst)
}

/// Extends a basis of the algebroid at `m0` to `∇`-parallel sections and
/// reads off the bracket table of the resulting Lie algebra.
pub fn reconstruct_action(nabla: &AlgebroidConnection, grid: &Grid) -> Result<ReconstructionResult> {
    let holonomy = grid_holonomy(nabla, grid)?;
    if holonomy > HOLONOMY_TOL {
        return Err(Error::Flatness(holonomy));
    }
    let model = nabla.model().clone();
    let m0 = grid.m0.clone();
    let radius = grid.spacing * grid.half_steps as f64 * 2f64.sqrt() + 0.05;
    let sections = Arc::new(ParallelSections::new(nabla.clone(), &m0, radius));
    let r = sections.rank();
    let frame0 = sections.frame.at(&m0)?;
    let failure = RefCell::new(None::<Error>);
    let guard = |v: Result<Vector>, dim: usize| match v {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            Vector::from_element(dim, f64::NAN)
        }
    };
    let big_n = model.dim();
    let mut structure = vec![Matrix::zeros(r, r); r];
    for i in 0..r {
        for j in (i + 1)..r {
            let xi = |m: &Vector| guard(sections.section(i, m), big_n);
            let xj = |m: &Vector| guard(sections.section(j, m), big_n);
            let b = algebroid_bracket_with_step(model.as_ref(), &xi, &xj, &m0, SECTION_BRACKET_STEP)?;
            let c = frame0.transpose() * &b.vec;
            for k in 0..r {
                structure[k][(i, j)] = c[k];
                structure[k][(j, i)] = -c[k];
            }
        }
    }
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }

    let mut jacobi_residual: f64 = 0.0;
    for a in 0..r {
        for b in 0..r {
            for c in 0..r {
                for k in 0..r {
                    let mut sum = 0.0;
                    for l in 0..r {
                        sum += structure[l][(a, b)] * structure[k][(l, c)]
                            + structure[l][(b, c)] * structure[k][(l, a)]
                            + structure[l][(c, a)] * structure[k][(l, b)];
                    }
                    jacobi_residual = jacobi_residual.max(sum.abs());
                }
            }
        }
    }

    let n = model.base_dim();
    let probes: Vec<Vector> = {
        let k = grid.half_steps as i64;
        let mut v = vec![m0.clone()];
        if n >= 2 && k > 0 {
            v.push(grid.point(k, 0));
            v.push(grid.point(0, -k));
            v.push(grid.point(-k, k));
        }
        v
    };
    let mut homomorphism_residual: f64 = 0.0;
    for p in &probes {
        for i in 0..r {
            for j in (i + 1)..r {
                let fi = |m: &Vector| guard(sections.action_field(i, m), n);
                let fj = |m: &Vector| guard(sections.action_field(j, m), n);
                let lhs = vector_field_bracket_with_step(&fi, &fj, p, SECTION_BRACKET_STEP);
                let mut rhs = Vector::zeros(n);
                for k in 0..r {
                    rhs += guard(sections.action_field(k, p), n) * structure[k][(i, j)];
                }
                homomorphism_residual = homomorphism_residual.max((lhs - rhs).amax());
            }
        }
    }

    let mut parallelism_residual: f64 = 0.0;
    for p in &probes {
        for a in 0..r {
            let xa = |m: &Vector| guard(sections.section(a, m), big_n);
            for i in 0..n {
                let mut e = Vector::zeros(n);
                e[i] = 1.0;
                let d = nabla.nabla(p, &e, &xa)?;
                parallelism_residual = parallelism_residual.max(d.amax());
            }
        }
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }

    let derived_rank = {
        let mut cols = Vec::new();
        for i in 0..r {
            for j in (i + 1)..r {
                cols.push(Vector::from_iterator(r, (0..r).map(|k| structure[k][(i, j)])));
            }
        }
        if cols.is_empty() {
            0
        } else {
            Matrix::from_columns(&cols).rank(1e-4)
        }
    };

    Ok(ReconstructionResult {
        m0,
        dim_g0: r,
        structure,
        holonomy,
        jacobi_residual,
        homomorphism_residual,
        parallelism_residual,
        derived_rank,
        sections,
    })
}

/// Vertical frame dimension of a model at `m`.
pub fn algebroid_rank(model: &dyn GroupoidModel, m: &Vector) -> usize {
    vertical_basis(model, &model.unit(m)).ncols()
}
