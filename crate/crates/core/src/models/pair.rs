use std::sync::Arc;

use crate::calculus::{BoxDomain, Matrix, Vector};
use crate::connection::CartanConnection;
use crate::error::Result;
use crate::groupoid::GroupoidModel;

/// The pair groupoid of a box in `ℝⁿ`: an arrow `(q, p)` goes from `p` to `q`.
#[derive(Debug, Clone)]
pub struct PairGroupoid {
    n: usize,
    half_width: f64,
}

impl PairGroupoid {
    pub fn new(n: usize, half_width: f64) -> Self {
        Self { n, half_width }
    }

    fn split(&self, g: &Vector) -> (Vector, Vector) {
        (g.rows(0, self.n).into_owned(), g.rows(self.n, self.n).into_owned())
    }

    fn join(&self, q: &Vector, p: &Vector) -> Vector {
        let mut g = Vector::zeros(2 * self.n);
        g.rows_mut(0, self.n).copy_from(q);
        g.rows_mut(self.n, self.n).copy_from(p);
        g
    }
}

impl GroupoidModel for PairGroupoid {
    fn name(&self) -> String {
        format!("pair-R{}", self.n)
    }

    fn base_dim(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        2 * self.n
    }

    fn source(&self, g: &Vector) -> Vector {
        g.rows(self.n, self.n).into_owned()
    }

    fn target(&self, g: &Vector) -> Vector {
        g.rows(0, self.n).into_owned()
    }

    fn unit(&self, m: &Vector) -> Vector {
        self.join(m, m)
    }

    fn mul(&self, g: &Vector, h: &Vector) -> Vector {
        let (r, _) = self.split(g);
        let (_, p) = self.split(h);
        self.join(&r, &p)
    }

    fn inv(&self, g: &Vector) -> Vector {
        let (q, p) = self.split(g);
        self.join(&p, &q)
    }

    fn retract_source(&self, g: &Vector, m: &Vector) -> Vector {
        self.join(&self.target(g), m)
    }

    fn retract_target(&self, g: &Vector, m: &Vector) -> Vector {
        self.join(m, &self.source(g))
    }

    fn domain_box(&self) -> BoxDomain {
        BoxDomain::cube(2 * self.n, self.half_width)
    }

    fn base_box(&self) -> BoxDomain {
        BoxDomain::cube(self.n, self.half_width)
    }

    fn source_jacobian(&self, _g: &Vector) -> Option<Matrix> {
        let mut j = Matrix::zeros(self.n, 2 * self.n);
        j.view_mut((0, self.n), (self.n, self.n)).fill_with_identity();
        Some(j)
    }

    fn target_jacobian(&self, _g: &Vector) -> Option<Matrix> {
        let mut j = Matrix::zeros(self.n, 2 * self.n);
        j.view_mut((0, 0), (self.n, self.n)).fill_with_identity();
        Some(j)
    }

    fn transitive_slice(&self, m0: &Vector, m: &Vector) -> Option<Vector> {
        Some(self.join(m, m0))
    }
}

/// The chart parallelism: `S(q, p)` is the jet of `m ↦ (q + m − p, m)`.
pub fn chart_parallelism(model: Arc<PairGroupoid>) -> CartanConnection {
    let n = model.n;
    CartanConnection::new(model, "chart-parallelism", move |_g: &Vector| {
        let mut mu = Matrix::zeros(2 * n, n);
        mu.view_mut((0, 0), (n, n)).fill_with_identity();
        mu.view_mut((n, 0), (n, n)).fill_with_identity();
        mu
    })
}

/// Pair groupoid over `[-half_width, half_width]ⁿ` with its verified chart
/// parallelism.
pub fn make_pair_groupoid(n: usize, half_width: f64, seed: u64, count: usize) -> Result<(Arc<PairGroupoid>, CartanConnection)> {
    let model = Arc::new(PairGroupoid::new(n, half_width));
    let s = chart_parallelism(model.clone()).verified(seed, count)?;
    Ok((model, s))
}
