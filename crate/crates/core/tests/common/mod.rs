#![allow(dead_code)]

use cartan_core::models::{
    classical_to_groupoid, make_action_groupoid, make_isometry_jet_groupoid, make_pair_groupoid, maurer_cartan_se2,
    metrics, PlaneMotions, SphereRotations, Translations,
};
use cartan_core::jet::sample_composable_jets;
use cartan_core::{CartanConnection, Jet1, SharedModel};
use rand_chacha::ChaCha8Rng;

pub const VERIFY_SAMPLES: usize = 40;

pub struct Entry {
    pub name: &'static str,
    pub model: SharedModel,
    pub s: CartanConnection,
}

fn entry(name: &'static str, pair: (SharedModel, CartanConnection)) -> Entry {
    Entry { name, model: pair.0, s: pair.1 }
}

pub fn build(name: &'static str) -> Entry {
    let seed = 11;
    let n = VERIFY_SAMPLES;
    match name {
        "pair-R2" => {
            let (m, s) = make_pair_groupoid(2, 0.5, seed, n).unwrap();
            entry(name, (m, s))
        }
        "translation-R2" => {
            let (m, s) = make_action_groupoid(Translations { n: 2, half_width: 0.5 }, seed, n).unwrap();
            entry(name, (m, s))
        }
        "se2-action" => {
            let (m, s) = make_action_groupoid(PlaneMotions, seed, n).unwrap();
            entry(name, (m, s))
        }
        "so3-sphere" => {
            let (m, s) = make_action_groupoid(SphereRotations, seed, n).unwrap();
            entry(name, (m, s))
        }
        "se2-so2" => {
            let (m, s) = classical_to_groupoid(&maurer_cartan_se2(), seed, n).unwrap();
            entry(name, (m, s))
        }
        "isojet-euclidean" | "isojet-sphere" | "isojet-hyperbolic" | "isojet-perturbed" => {
            let metric = metrics::by_name(&name["isojet-".len()..], 1.0).unwrap();
            let (m, s) = make_isometry_jet_groupoid(metric, seed, n).unwrap();
            entry(name, (m, s))
        }
        other => panic!("unknown model {other}"),
    }
}

/// The four models on which jet arithmetic is checked.
pub fn arithmetic_zoo() -> Vec<Entry> {
    ["pair-R2", "se2-action", "se2-so2", "isojet-sphere"].into_iter().map(build).collect()
}

pub fn full_zoo() -> Vec<Entry> {
    [
        "pair-R2",
        "translation-R2",
        "se2-action",
        "so3-sphere",
        "se2-so2",
        "isojet-euclidean",
        "isojet-sphere",
        "isojet-hyperbolic",
        "isojet-perturbed",
    ]
    .into_iter()
    .map(build)
    .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// A composable pair of random jets `(μ₁, μ₂)`.
pub fn composable_jets(e: &Entry, spread: f64, rng: &mut ChaCha8Rng) -> (Jet1, Jet1) {
    sample_composable_jets(e.model.as_ref(), &e.s, spread, rng).unwrap()
}
