//! Orientation-preserving isometric one-jets of a Riemannian surface.
//!
//! An arrow `(m, m′, θ)` is the linear isometry `A = E(m′) R_θ E(m)⁻¹` from
//! `T_mM` to `T_{m′}M`, where `E` is the Cholesky orthonormal frame of the
//! metric chart.

use std::sync::Arc;

use crate::calculus::{christoffel, derivative4, BoxDomain, Matrix, MetricChart, Vector, FD_STEP, OUTER_STEP};
use crate::connection::CartanConnection;
use crate::error::{Error, Result};
use crate::groupoid::GroupoidModel;

#[derive(Debug, Clone)]
pub struct SurfaceIsoJet {
    pub metric: MetricChart,
    theta_half_width: f64,
}

fn rot2(theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, -s, s, c])
}

fn quarter_turn() -> Matrix {
    Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
}

impl SurfaceIsoJet {
    pub fn new(metric: MetricChart) -> Result<Self> {
        if metric.dim != 2 {
            return Err(Error::Metric(format!("surface model needs a 2-dimensional metric, got {}", metric.dim)));
        }
        let bx = metric.domain().clone();
        for x in [bx.center(), Vector::from_vec(bx.lo.clone()), Vector::from_vec(bx.hi.clone())] {
            metric.validate_at(&x)?;
        }
        Ok(Self { metric, theta_half_width: 1.0 })
    }

    pub fn parts(g: &Vector) -> (Vector, Vector, f64) {
        (g.rows(0, 2).into_owned(), g.rows(2, 2).into_owned(), g[4])
    }

    pub fn pack(m: &Vector, mp: &Vector, theta: f64) -> Vector {
        Vector::from_vec(vec![m[0], m[1], mp[0], mp[1], theta])
    }

    fn frame(&self, x: &Vector) -> Matrix {
        self.metric.frame(x).unwrap_or_else(|_| Matrix::from_element(2, 2, f64::NAN))
    }

    fn frame_inverse(&self, x: &Vector) -> Matrix {
        self.frame(x).try_inverse().unwrap_or_else(|| Matrix::from_element(2, 2, f64::NAN))
    }

    /// The isometry `T_mM → T_{m′}M` named by the arrow.
    pub fn tangent_map(&self, g: &Vector) -> Matrix {
        let (m, mp, theta) = Self::parts(g);
        self.frame(&mp) * rot2(theta) * self.frame_inverse(&m)
    }

    /// `max |Aᵀ g(m′) A − g(m)|`.
    pub fn isometry_defect(&self, g: &Vector) -> f64 {
        let (m, mp, _) = Self::parts(g);
        let a = self.tangent_map(g);
        (a.transpose() * self.metric.g(&mp) * &a - self.metric.g(&m)).amax()
    }

    /// Covariantly constant derivative of `A`:
    /// `∂_iA^k_j = A^k_c Γ^c_ij(m) − Γ^k_ab(m′) A^a_i A^b_j`, returned per `i`.
    pub fn prolonged_derivative(&self, g: &Vector) -> Result<[Matrix; 2]> {
        let (m, mp, _) = Self::parts(g);
        let a = self.tangent_map(g);
        let gam = christoffel(&self.metric, &m)?;
        let gamp = christoffel(&self.metric, &mp)?;
        let mut out = [Matrix::zeros(2, 2), Matrix::zeros(2, 2)];
        for (i, d) in out.iter_mut().enumerate() {
            for k in 0..2 {
                for j in 0..2 {
                    let mut v = 0.0;
                    for c in 0..2 {
                        v += a[(k, c)] * gam.get(c, i, j);
                    }
                    for p in 0..2 {
                        for q in 0..2 {
                            v -= gamp.get(k, p, q) * a[(p, i)] * a[(q, j)];
                        }
                    }
                    d[(k, j)] = v;
                }
            }
        }
        Ok(out)
    }

    /// Jet of the bisection through `g` whose tangent-map part is
    /// covariantly constant to first order.
    pub fn prolongation_jet(&self, g: &Vector) -> Result<Matrix> {
        let (m, mp, theta) = Self::parts(g);
        let a = self.tangent_map(g);
        let da = self.prolonged_derivative(g)?;
        let e_mp = self.frame(&mp);
        let e_mp_inv = self.frame_inverse(&mp);
        let e_m = self.frame(&m);
        let e_m_inv = self.frame_inverse(&m);
        let r = rot2(theta);
        let jr = quarter_turn() * &r;
        let mut mu = Matrix::zeros(5, 2);
        for i in 0..2 {
            let ai = a.column(i).into_owned();
            let d_frame = (self.frame(&(&mp + &ai * FD_STEP)) - self.frame(&(&mp - &ai * FD_STEP))) / (2.0 * FD_STEP);
            let mut step = Vector::zeros(2);
            step[i] = FD_STEP;
            let d_inv = (self.frame_inverse(&(&m + &step)) - self.frame_inverse(&(&m - &step))) / (2.0 * FD_STEP);
            let rest = d_frame * &r * &e_m_inv + &e_mp * &r * d_inv;
            let residual = &e_mp_inv * (&da[i] - rest) * &e_m;
            let dtheta = jr.dot(&residual) / 2.0;
            mu[(i, i)] = 1.0;
            mu[(2, i)] = a[(0, i)];
            mu[(3, i)] = a[(1, i)];
            mu[(4, i)] = dtheta;
        }
        if !mu.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("prolongation jet at {:?}", g.as_slice())));
        }
        Ok(mu)
    }

    /// Holonomy and first-order metric defects of the second-order
    /// extension read off a jet `mu` at `g`: the asymmetry of `∂_iA^k_j` in
    /// `(i, j)`, and `max |∂_i(Tφᵀ g(φ) Tφ − g)|` at the source for
    /// `φ(x) = m′ + A(x − m) + ½ ∂A(x − m)(x − m)`.
    pub fn second_order_defects(&self, g: &Vector, mu: &Matrix) -> (f64, f64) {
        let (m, mp, theta) = Self::parts(g);
        let along = |x: &Vector| {
            let d = x - &m;
            let h = Self::pack(x, &(&mp + mu.rows(2, 2) * &d), theta + (mu.row(4) * &d)[0]);
            self.tangent_map(&h)
        };
        let da: Vec<Matrix> = (0..2)
            .map(|i| {
                let mut s = Vector::zeros(2);
                s[i] = FD_STEP;
                (along(&(&m + &s)) - along(&(&m - &s))) / (2.0 * FD_STEP)
            })
            .collect();
        let mut asym: f64 = 0.0;
        for k in 0..2 {
            asym = asym.max((da[0][(k, 1)] - da[1][(k, 0)]).abs());
        }
        let a = self.tangent_map(g);
        let hess = |d: &Vector| -> Matrix {
            // Tφ(x) = A + Σ_i ∂_iA_sym (x − m)_i.
            let mut t = a.clone();
            for i in 0..2 {
                for k in 0..2 {
                    for j in 0..2 {
                        let sym = 0.5 * (da[i][(k, j)] + da[j][(k, i)]);
                        t[(k, j)] += sym * d[i];
                    }
                }
            }
            t
        };
        let phi = |d: &Vector| -> Vector {
            let mut y = &mp + &a * d;
            for k in 0..2 {
                let mut acc = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        acc += 0.5 * da[i][(k, j)] * d[i] * d[j];
                    }
                }
                y[k] += acc;
            }
            y
        };
        let pullback = |d: &Vector| {
            let t = hess(d);
            t.transpose() * self.metric.g(&phi(d)) * &t - self.metric.g(&(&m + d))
        };
        let mut metric: f64 = 0.0;
        for i in 0..2 {
            let mut e = Vector::zeros(2);
            e[i] = 1.0;
            let deriv = derivative4(|t| Vector::from_column_slice(pullback(&(&e * t)).as_slice()), OUTER_STEP);
            metric = metric.max(deriv.amax());
        }
        (asym, metric)
    }
}

impl GroupoidModel for SurfaceIsoJet {
    fn name(&self) -> String {
        format!("isojet-{}", self.metric.name)
    }

    fn base_dim(&self) -> usize {
        2
    }

    fn dim(&self) -> usize {
        5
    }

    fn source(&self, g: &Vector) -> Vector {
        g.rows(0, 2).into_owned()
    }

    fn target(&self, g: &Vector) -> Vector {
        g.rows(2, 2).into_owned()
    }

    fn unit(&self, m: &Vector) -> Vector {
        Self::pack(m, m, 0.0)
    }

    fn mul(&self, g: &Vector, h: &Vector) -> Vector {
        let (_, b, t1) = Self::parts(g);
        let (c, _, t2) = Self::parts(h);
        Self::pack(&c, &b, t1 + t2)
    }

    fn inv(&self, g: &Vector) -> Vector {
        let (a, b, t) = Self::parts(g);
        Self::pack(&b, &a, -t)
    }

    fn retract_source(&self, g: &Vector, m: &Vector) -> Vector {
        let (_, b, t) = Self::parts(g);
        Self::pack(m, &b, t)
    }

    fn retract_target(&self, g: &Vector, m: &Vector) -> Vector {
        let (a, _, t) = Self::parts(g);
        Self::pack(&a, m, t)
    }

    fn domain_box(&self) -> BoxDomain {
        let b = self.metric.domain();
        b.product(b).product(&BoxDomain::cube(1, self.theta_half_width))
    }

    fn base_box(&self) -> BoxDomain {
        self.metric.domain().clone()
    }

    fn in_chart(&self, g: &Vector) -> bool {
        g.iter().all(|v| v.is_finite()) && self.metric.validate_at(&g.rows(0, 2).into_owned()).is_ok() && self.metric.validate_at(&g.rows(2, 2).into_owned()).is_ok()
    }

    fn source_jacobian(&self, _g: &Vector) -> Option<Matrix> {
        let mut j = Matrix::zeros(2, 5);
        j[(0, 0)] = 1.0;
        j[(1, 1)] = 1.0;
        Some(j)
    }

    fn target_jacobian(&self, _g: &Vector) -> Option<Matrix> {
        let mut j = Matrix::zeros(2, 5);
        j[(0, 2)] = 1.0;
        j[(1, 3)] = 1.0;
        Some(j)
    }

    fn transitive_slice(&self, m0: &Vector, m: &Vector) -> Option<Vector> {
        Some(Self::pack(m0, m, 0.0))
    }

    fn fibre_coords(&self, g: &Vector) -> Vector {
        g.rows(2, 3).into_owned()
    }

    fn fibre_embed(&self, p: &Vector, m0: &Vector) -> Vector {
        Self::pack(m0, &p.rows(0, 2).into_owned(), p[2])
    }
}

/// The prolongation connection of a surface iso-jet model, unverified.
pub fn prolongation_connection(model: Arc<SurfaceIsoJet>) -> CartanConnection {
    let inner = model.clone();
    CartanConnection::new(model, "prolongation", move |g: &Vector| {
        inner.prolongation_jet(g).unwrap_or_else(|_| Matrix::from_element(5, 2, f64::NAN))
    })
}

/// Iso-jet groupoid of `metric` with its verified prolongation connection.
pub fn make_isometry_jet_groupoid(metric: MetricChart, seed: u64, count: usize) -> Result<(Arc<SurfaceIsoJet>, CartanConnection)> {
    let model = Arc::new(SurfaceIsoJet::new(metric)?);
    let s = prolongation_connection(model.clone()).verified(seed, count)?;
    Ok((model, s))
}
