//! Named verification suites.
//!
//! Each experiment is a fixed list of checks. A check draws from its own
//! ChaCha8 stream of the run seed, so adding or skipping checks never shifts
//! the samples seen by the others.

mod bridge;
mod connection;
mod geometry;
mod jets;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};

use cartan_core::groupoid::vertical_basis;
use cartan_core::{GroupoidModel, Matrix, Vector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::error::LabResult;
use crate::registry::{self, Instance, ModelKind};
use crate::report::{Bound, Check, Report};

pub struct Experiment {
    pub name: &'static str,
    pub summary: &'static str,
    /// Every check the experiment can emit; tolerance overrides must name one.
    pub checks: &'static [&'static str],
    pub default_samples: usize,
    accepts: fn(ModelKind) -> bool,
    body: fn(&mut Ctx),
}

impl Experiment {
    pub fn accepts(&self, kind: ModelKind) -> bool {
        (self.accepts)(kind)
    }
}

fn any(_: ModelKind) -> bool {
    true
}

fn transitive_with_isotropy(kind: ModelKind) -> bool {
    !matches!(kind, ModelKind::Pair(_) | ModelKind::Translation(_))
}

pub const EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "jet-axioms",
        summary: "groupoid axioms and closed-form jet products against composed bisections",
        checks: &["associativity", "units", "inverses", "jet-product", "right-kernel-product", "decompose-assemble"],
        default_samples: 200,
        accepts: any,
        body: jets::jet_axioms,
    },
    Experiment {
        name: "inversion",
        summary: "closed-form jet inverse against inverted bisections",
        checks: &["jet-inverse", "double-inverse", "inverse-product"],
        default_samples: 200,
        accepts: any,
        body: jets::inversion,
    },
    Experiment {
        name: "kernel-products",
        summary: "products of jets with kernel elements, quotients and conjugation",
        checks: &["right-product", "left-product", "quotient", "conjugation", "difference"],
        default_samples: 200,
        accepts: any,
        body: jets::kernel_products,
    },
    Experiment {
        name: "semidirect",
        summary: "kernel group laws, the splitting by the connection and the bisection product law",
        checks: &["vee-morphism", "kernel-action", "kernel-group", "splitting", "bisection-law"],
        default_samples: 200,
        accepts: any,
        body: jets::semidirect,
    },
    Experiment {
        name: "multiplicativity",
        summary: "multiplicativity of the connection, fault detection and horizontal bisection products",
        checks: &["multiplicative", "fault-detected", "integral-products"],
        default_samples: 100,
        accepts: any,
        body: connection::multiplicativity,
    },
    Experiment {
        name: "nabla-compare",
        summary: "algebroid derivative by the flow formula, by parallel transport and classically",
        checks: &["flow-vs-transport", "classical-vs-flow", "trivial-derivative", "leibniz"],
        default_samples: 100,
        accepts: any,
        body: connection::nabla_compare,
    },
    Experiment {
        name: "flatness",
        summary: "curvature of the derivative against torsion of the horizontal distribution",
        checks: &["curvature", "torsion", "antisymmetry", "agreement", "curved-fraction", "gauss-gradient", "symmetry-axis"],
        default_samples: 20,
        accepts: any,
        body: geometry::flatness,
    },
    Experiment {
        name: "reconstruct",
        summary: "Lie algebra action rebuilt from parallel sections on a grid (samples = grid half-width in steps)",
        checks: &["holonomy", "dimension", "jacobi", "homomorphism", "parallelism", "killing"],
        default_samples: 2,
        accepts: any,
        body: geometry::reconstruct,
    },
    Experiment {
        name: "classical-bridge",
        summary: "round trips between groupoid connections and Cartan forms, and classical curvature",
        checks: &[
            "connection-roundtrip",
            "recovered-invariants",
            "invariants",
            "representative",
            "omega-roundtrip",
            "nabla-agreement",
            "structure-curvature",
            "flat-implies-parallel",
        ],
        default_samples: 30,
        accepts: transitive_with_isotropy,
        body: bridge::classical_bridge,
    },
    Experiment {
        name: "riemannian",
        summary: "isometric jets and second-order isometry of the prolongation connection",
        checks: &["isometry", "holonomy-symmetry", "metric-first-order", "rotation-rate-detected"],
        default_samples: 50,
        accepts: ModelKind::is_surface,
        body: bridge::riemannian,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

/// Validates `config`, builds the model and runs every check.
pub fn run(config: &ExperimentConfig) -> LabResult<Report> {
    config.validate()?;
    let exp = find(&config.experiment).expect("validated experiment");
    let samples = config.sample_count.unwrap_or(exp.default_samples);
    let built = catch_unwind(AssertUnwindSafe(|| registry::build(&config.model, config.seed)));
    let checks = match built {
        Ok(Ok(inst)) => {
            let mut cx = Ctx { inst: &inst, seed: config.seed, samples, overrides: &config.tolerances, checks: Vec::new() };
            if let Err(p) = catch_unwind(AssertUnwindSafe(|| (exp.body)(&mut cx))) {
                cx.checks.push(Check::failed("experiment", 0, 0.0, Bound::Upper, panic_text(p)));
            }
            cx.checks
        }
        Ok(Err(e)) => vec![Check::failed("model-setup", 0, 0.0, Bound::Upper, e.to_string())],
        Err(p) => vec![Check::failed("model-setup", 0, 0.0, Bound::Upper, panic_text(p))],
    };
    Ok(Report::new(exp.name, config.model.clone(), config.seed, samples, checks))
}

fn panic_text(p: Box<dyn std::any::Any + Send>) -> String {
    let msg = p
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown".into());
    format!("panicked: {msg}")
}

/// State shared by the checks of one run.
pub(crate) struct Ctx<'a> {
    pub inst: &'a Instance,
    pub seed: u64,
    pub samples: usize,
    overrides: &'a BTreeMap<String, f64>,
    checks: Vec<Check>,
}

impl Ctx<'_> {
    pub fn model(&self) -> &dyn GroupoidModel {
        self.inst.model.as_ref()
    }

    /// Stream `stream` of the run seed.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// A seed for library routines that own their generator.
    pub fn sub_seed(&self, stream: u64) -> u64 {
        self.rng(stream).next_u64()
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.overrides.get(name).copied().unwrap_or(default)
    }

    pub fn upper(&mut self, name: &str, default: f64, samples: usize, f: impl FnOnce(&Self) -> cartan_core::Result<f64>) {
        self.record(name, default, Bound::Upper, samples, f);
    }

    pub fn lower(&mut self, name: &str, default: f64, samples: usize, f: impl FnOnce(&Self) -> cartan_core::Result<f64>) {
        self.record(name, default, Bound::Lower, samples, f);
    }

    fn record(
        &mut self,
        name: &str,
        default: f64,
        bound: Bound,
        samples: usize,
        f: impl FnOnce(&Self) -> cartan_core::Result<f64>,
    ) {
        let tol = self.tolerance(name, default);
        let check = match catch_unwind(AssertUnwindSafe(|| f(self))) {
            Ok(Ok(v)) if v.is_nan() => Check::failed(name, samples, tol, bound, "non-finite residual".into()),
            Ok(Ok(v)) => Check::new(name, samples, v, tol, bound),
            Ok(Err(e)) => Check::failed(name, samples, tol, bound, e.to_string()),
            Err(p) => Check::failed(name, samples, tol, bound, panic_text(p)),
        };
        self.checks.push(check);
    }

    /// Appends a note to the most recent check.
    pub fn note(&mut self, detail: impl Into<String>) {
        if let Some(c) = self.checks.last_mut() {
            c.detail = Some(detail.into());
        }
    }

    pub fn last(&mut self) -> Option<&mut Check> {
        self.checks.last_mut()
    }
}

/// Maximum that propagates NaN.
pub(crate) fn nanmax(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Largest of `count` sample residuals.
pub(crate) fn worst(count: usize, mut f: impl FnMut(usize) -> cartan_core::Result<f64>) -> cartan_core::Result<f64> {
    let mut acc: f64 = 0.0;
    for i in 0..count {
        acc = nanmax(acc, f(i)?);
    }
    Ok(acc)
}

/// Smallest of `count` sample values.
pub(crate) fn least(count: usize, mut f: impl FnMut(usize) -> cartan_core::Result<f64>) -> cartan_core::Result<f64> {
    let mut acc = f64::INFINITY;
    for i in 0..count {
        let v = f(i)?;
        acc = if v.is_nan() || acc.is_nan() { f64::NAN } else { acc.min(v) };
    }
    Ok(acc)
}

/// A smooth vertical section `m ↦ basis(unit m)·(c₀ + C₁m + c₂|m|²)`.
pub(crate) fn test_section<'a, R: Rng>(model: &'a dyn GroupoidModel, rng: &mut R) -> impl Fn(&Vector) -> Vector + 'a {
    let k = model.dim() - model.base_dim();
    let n = model.base_dim();
    let c0 = Vector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
    let c1 = Matrix::from_fn(k, n, |_, _| rng.random_range(-1.0..1.0));
    let c2 = Vector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
    move |m: &Vector| {
        let coeffs = &c0 + &c1 * m + &c2 * m.norm_squared();
        vertical_basis(model, &model.unit(m)) * coeffs
    }
}

pub(crate) fn random_vector<R: Rng>(n: usize, rng: &mut R) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}
