use crate::calculus::{BoxDomain, Matrix, MetricChart, Vector};

fn conformal(name: &str, domain: BoxDomain, factor: impl Fn(&Vector) -> f64 + Send + Sync + 'static) -> MetricChart {
    MetricChart::new(name, 2, domain, move |x| Matrix::identity(2, 2) * factor(x))
}

pub fn euclidean() -> MetricChart {
    conformal("euclidean", BoxDomain::cube(2, 0.5), |_| 1.0)
}

/// Round sphere in stereographic coordinates.
pub fn sphere() -> MetricChart {
    conformal("sphere", BoxDomain::cube(2, 0.5), |x| {
        let r2 = x.norm_squared();
        4.0 / ((1.0 + r2) * (1.0 + r2))
    })
}

/// Hyperbolic plane in the Poincaré disc.
pub fn hyperbolic() -> MetricChart {
    conformal("hyperbolic", BoxDomain::cube(2, 0.4), |x| {
        let r2 = x.norm_squared();
        4.0 / ((1.0 - r2) * (1.0 - r2))
    })
}

/// `(1 + ε x₁²) δ`, which has non-constant curvature for `ε ≠ 0`.
pub fn perturbed(eps: f64) -> MetricChart {
    conformal("perturbed", BoxDomain::cube(2, 0.5), move |x| 1.0 + eps * x[0] * x[0])
}

pub fn by_name(name: &str, eps: f64) -> Option<MetricChart> {
    match name {
        "euclidean" => Some(euclidean()),
        "sphere" => Some(sphere()),
        "hyperbolic" => Some(hyperbolic()),
        "perturbed" => Some(perturbed(eps)),
        _ => None,
    }
}
