//! Model zoo addressable by name.

use std::sync::Arc;

use cartan_core::models::classical::{bracket_by_name, Bracket};
use cartan_core::models::isojet::prolongation_connection;
use cartan_core::models::{
    classical_to_groupoid, make_action_groupoid, make_pair_groupoid, metrics, plane_frames_omega, ClassicalCartan,
    PlaneMotions, SphereRotations, SurfaceIsoJet, Translations,
};
use cartan_core::{CartanConnection, SharedModel};

use crate::config::ModelSpec;
use crate::error::{LabError, LabResult};

/// Samples used to verify a connection when a model is built.
pub const VERIFY_SAMPLES: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Pair(usize),
    Translation(usize),
    PlaneMotions,
    SphereRotations,
    PlaneFrames,
    Surface(&'static str),
}

impl ModelKind {
    pub fn is_surface(self) -> bool {
        matches!(self, ModelKind::Surface(_))
    }

    pub fn is_gauge(self) -> bool {
        self == ModelKind::PlaneFrames
    }
}

pub const MODEL_NAMES: &[&str] = &[
    "pair-R1",
    "pair-R2",
    "pair-R3",
    "translation-R1",
    "translation-R2",
    "translation-R3",
    "se2-action",
    "so3-sphere",
    "se2-so2",
    "isojet-euclidean",
    "isojet-sphere",
    "isojet-hyperbolic",
    "isojet-perturbed",
];

pub fn kind_of(name: &str) -> Option<ModelKind> {
    let dim = |rest: &str| rest.parse::<usize>().ok().filter(|d| (1..=3).contains(d));
    if let Some(rest) = name.strip_prefix("pair-R") {
        return dim(rest).map(ModelKind::Pair);
    }
    if let Some(rest) = name.strip_prefix("translation-R") {
        return dim(rest).map(ModelKind::Translation);
    }
    match name {
        "se2-action" => Some(ModelKind::PlaneMotions),
        "so3-sphere" => Some(ModelKind::SphereRotations),
        "se2-so2" => Some(ModelKind::PlaneFrames),
        "isojet-euclidean" => Some(ModelKind::Surface("euclidean")),
        "isojet-sphere" => Some(ModelKind::Surface("sphere")),
        "isojet-hyperbolic" => Some(ModelKind::Surface("hyperbolic")),
        "isojet-perturbed" => Some(ModelKind::Surface("perturbed")),
        _ => None,
    }
}

fn reject(spec: &ModelSpec, what: &str) -> LabError {
    LabError::Config(format!("model `{}` takes no `{what}` parameter", spec.name))
}

pub fn check_params(spec: &ModelSpec, kind: ModelKind) -> LabResult<()> {
    if spec.eps.is_some() && kind != ModelKind::Surface("perturbed") {
        return Err(reject(spec, "eps"));
    }
    if spec.twist.is_some() && !kind.is_gauge() {
        return Err(reject(spec, "twist"));
    }
    if spec.bracket.is_some() && !kind.is_gauge() {
        return Err(reject(spec, "bracket"));
    }
    if spec.half_width.is_some() && !matches!(kind, ModelKind::Pair(_) | ModelKind::Translation(_)) {
        return Err(reject(spec, "half_width"));
    }
    if let Some(name) = &spec.bracket {
        if bracket_by_name(name).is_none() {
            return Err(LabError::Config(format!("unknown bracket `{name}` (expected se2 or so3)")));
        }
    }
    for (key, v) in [("eps", spec.eps), ("twist", spec.twist)] {
        if v.is_some_and(|x| !x.is_finite()) {
            return Err(LabError::Config(format!("`{key}` must be finite")));
        }
    }
    if spec.half_width.is_some_and(|w| !(w.is_finite() && w > 0.0)) {
        return Err(LabError::Config("`half_width` must be positive".into()));
    }
    Ok(())
}

/// A built model with its verified connection and optional side data.
#[derive(Clone)]
pub struct Instance {
    pub name: String,
    pub kind: ModelKind,
    pub model: SharedModel,
    pub s: CartanConnection,
    pub classical: Option<ClassicalCartan>,
    pub bracket: Option<(String, Bracket)>,
    pub surface: Option<Arc<SurfaceIsoJet>>,
    /// Resolved metric strength and twist.
    pub eps: f64,
    pub twist: f64,
    /// Whether the connection is expected to be flat.
    pub expect_flat: bool,
}

pub const DEFAULT_EPS: f64 = 1.0;
pub const DEFAULT_BRACKET: &str = "se2";

pub fn build(spec: &ModelSpec, seed: u64) -> cartan_core::Result<Instance> {
    let kind = kind_of(&spec.name).ok_or_else(|| cartan_core::Error::Config(format!("unknown model `{}`", spec.name)))?;
    let hw = spec.half_width.unwrap_or(0.5);
    let eps = spec.eps.unwrap_or(DEFAULT_EPS);
    let twist = spec.twist.unwrap_or(0.0);
    let inst = |model: SharedModel, s: CartanConnection| Instance {
        name: spec.name.clone(),
        kind,
        model,
        s,
        classical: None,
        bracket: None,
        surface: None,
        eps,
        twist,
        expect_flat: true,
    };
    Ok(match kind {
        ModelKind::Pair(n) => {
            let (m, s) = make_pair_groupoid(n, hw, seed, VERIFY_SAMPLES)?;
            inst(m, s)
        }
        ModelKind::Translation(n) => {
            let (m, s) = make_action_groupoid(Translations { n, half_width: hw }, seed, VERIFY_SAMPLES)?;
            inst(m, s)
        }
        ModelKind::PlaneMotions => {
            let (m, s) = make_action_groupoid(PlaneMotions, seed, VERIFY_SAMPLES)?;
            inst(m, s)
        }
        ModelKind::SphereRotations => {
            let (m, s) = make_action_groupoid(SphereRotations, seed, VERIFY_SAMPLES)?;
            inst(m, s)
        }
        ModelKind::PlaneFrames => {
            let omega = plane_frames_omega(twist);
            let (m, s) = classical_to_groupoid(&omega, seed, VERIFY_SAMPLES)?;
            let bracket_name = spec.bracket.clone().unwrap_or_else(|| DEFAULT_BRACKET.into());
            let bracket = bracket_by_name(&bracket_name).expect("validated bracket");
            let mut i = inst(m, s);
            i.classical = Some(omega);
            i.bracket = Some((bracket_name, bracket));
            i.expect_flat = twist == 0.0;
            i
        }
        ModelKind::Surface(metric) => {
            let chart = metrics::by_name(metric, eps).expect("known metric");
            let surface = Arc::new(SurfaceIsoJet::new(chart)?);
            let s = prolongation_connection(surface.clone()).verified(seed, VERIFY_SAMPLES)?;
            let mut i = inst(surface.clone(), s);
            i.surface = Some(surface);
            i.expect_flat = !(metric == "perturbed" && eps != 0.0);
            i
        }
    })
}
