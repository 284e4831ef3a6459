//! Hybridizable discontinuous Galerkin solver for the 3D time-harmonic
//! Maxwell equations.
//!
//! The discretization hybridizes the upwind-flux DG method through
//! transmission variables: the only globally coupled unknown is the incoming
//! tangential trace on the mesh skeleton, and the global system
//! `(I - exchange∘scattering) g = b` is driven entirely by element-local
//! solves. The crate provides the mesh layer, the nodal reference element,
//! the element-local solver, the skeleton operators, the iterative solvers
//! (fixed-point, CGNR and GMRES in nodal and mass-weighted modal variants),
//! and the two verification benchmarks (free-space plane wave and a driven
//! cubic cavity).

// Kernels index several arrays with coupled subscripts; range loops keep
// them readable where iterator chains would not.
#![allow(clippy::needless_range_loop)]

pub mod benchmark;
pub mod local;
pub mod math;
pub mod mesh;
pub mod refelem;
pub mod skeleton;
pub mod solver;

pub use benchmark::{BenchmarkKind, ReferenceSolution};
pub use local::{FieldState, VolumeSource};
pub use mesh::{BoundaryKind, Mesh, RawMesh};
pub use num_complex::Complex64;
pub use skeleton::{BoundarySources, HybridizedSystem, TransmissionField};
pub use solver::{solve, IterationReport, SolveOutcome, SolverConfig, SolverMethod, Termination};
