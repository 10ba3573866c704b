//! Inverse design of periodic cellular solids.
//!
//! A porous reference shape with wallpaper-group symmetry is deformed by a
//! divergence-free, group-equivariant velocity field parameterized by a small
//! neural network. The deformed geometry is meshed once, loaded in plane
//! strain with a neo-Hookean material, and the network weights are optimized
//! against force-curve or effective-Poisson targets with exact adjoint
//! gradients through both the finite element solve and the flow integration.

pub mod cli;
pub mod flow;
pub mod geometry;
pub mod mechanics;
pub mod optimize;
pub mod symmetry;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown wallpaper group '{0}'")]
    UnknownGroup(String),
    #[error("isometry does not normalize the lattice")]
    LatticeMismatch,
    #[error("infeasible volume fraction {target}: reachable range [{min:.4}, {max:.4}] under clearance constraints")]
    InfeasibleFraction { target: f64, min: f64, max: f64 },
    #[error("pore clearance violated: {0}")]
    Clearance(String),
    #[error("meshing failed: {0}")]
    Meshing(String),
    #[error("mesh refinement did not converge near ({x:.6}, {y:.6}) after {inserted} insertions")]
    RefinementStalled { x: f64, y: f64, inserted: usize },
    #[error("flow diverged at point index {index} during step {step}")]
    FlowDiverged { index: usize, step: usize },
    #[error("element {element} inverted: area ratio {ratio:.3e} below threshold")]
    ElementInversion { element: usize, ratio: f64 },
    #[error("non-positive deformation jacobian in element {element}")]
    NonPositiveJacobian { element: usize },
    #[error("Newton did not converge in increment {increment}: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence {
        increment: usize,
        residual: f64,
        iterations: usize,
    },
    #[error("{context}: no boundary nodes found")]
    EmptyNodeSet { context: String },
    #[error("checkpoint incompatible: {0}")]
    CheckpointMismatch(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}
