//! Cartan connections on Lie groupoids, in coordinate charts.
//!
//! A Lie groupoid is presented through [`GroupoidModel`], one chart with
//! explicit structure maps. A [`CartanConnection`] assigns to every arrow the
//! one-jet of a local bisection through it; the crate provides the jet
//! arithmetic needed to multiply, invert and decompose such jets, the
//! infinitesimal connection obtained by differentiating `S`, its curvature,
//! the torsion of the horizontal distribution, and reconstruction of a local
//! Lie algebra action from a flat connection.

pub mod calculus;
pub mod connection;
pub mod curvature;
pub mod error;
pub mod groupoid;
pub mod jet;
pub mod models;

pub use calculus::{BoxDomain, ChartMap, Matrix, MetricChart, Vector};
pub use connection::{
    check_multiplicative, infinitesimalize, parallel_transport, AlgebroidConnection, BasePath, CartanConnection,
    MultiplicativityReport, Provenance, Route,
};
pub use curvature::{
    curvature, flatness_experiment, frobenius_torsion, reconstruct_action, CurvatureTensor, FlatnessReport, Grid,
    ReconstructionResult, Torsion,
};
pub use error::{Error, Result};
pub use groupoid::{AlgebroidVec, Arrow, GroupoidModel, Jet1, SharedModel};
pub use jet::{adjoint, jet_assemble, jet_decompose, jet_invert, jet_mul, mul_kernel_left, mul_kernel_right, AdjointArg, KernelHom};
