//! Concrete groupoids with their canonical Cartan connections.

pub mod action;
pub mod classical;
pub mod isojet;
pub mod metrics;
pub mod pair;

pub use action::{make_action_groupoid, ActionGroupoid, GroupAction, PlaneMotions, SphereRotations, Translations};
pub use classical::{
    classical_curvature, classical_to_groupoid, maurer_cartan_se2, nabla_omega, plane_frames_omega, recover_omega,
    ClassicalCartan, GaugeGroupoid, PlaneFrames, PrincipalBundle,
};
pub use isojet::{make_isometry_jet_groupoid, SurfaceIsoJet};
pub use pair::{make_pair_groupoid, PairGroupoid};
