//! Optimal potentials for Schrödinger-type elliptic control problems.
//!
//! The library minimizes `∫ g·u dx` over nonnegative potentials `V`, where
//! `u` solves `−Δu + Vu = f` on a rectangle with homogeneous Dirichlet
//! conditions and `V` is constrained both by a box `[0, vmax]` and by a
//! generalized volume budget `∫ Ψ(V) dx ≤ m` for a strictly decreasing
//! profile `Ψ` (e.g. `e^{−αs}`). For small `α` the low-potential region of
//! the optimum approximates an optimal shape with Dirichlet conditions on
//! its free boundary.
//!
//! Pieces:
//!
//! * [`mesh`], [`sparse`], [`assemble`] — structured P1/P0 finite elements
//!   over right-triangle meshes and a deterministic CG solver.
//! * [`schrodinger`] — state/adjoint solves (the discrete resolvent) and
//!   the cost functional, all sharing one quadrature so the adjoint
//!   gradient is exact at the discrete level.
//! * [`optimize`] — projected gradient descent with an Armijo line search
//!   and per-step volume feasibility through a multiplier bisection.
//! * [`diagnostics`] — finite-difference gradient oracle, self-adjointness
//!   and maximum-principle checks, and first-order optimality reports.
//! * [`problems`], [`psi`] — the built-in example problems and constraint
//!   profiles.
//! * [`config`], [`io`], [`cli`] — INI-style run configuration, CSV/VTK/PGM
//!   writers and the command-line driver.
//!
//! The `examples/` directory shows one runnable program per capability;
//! `optpot --help` lists the equivalent batch subcommands.

pub mod assemble;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod io;
pub mod mesh;
pub mod optimize;
pub mod problems;
pub mod psi;
pub mod schrodinger;
pub mod sparse;

pub use assemble::MassLumping;
pub use error::{Error, Result};
pub use field::{ElementField, PotentialField, ScalarField};
pub use mesh::{build_structured_mesh, Mesh, Rectangle};
pub use optimize::{
    run, IterationRecord, OptimizerConfig, RunOutput, TerminationStatus,
};
pub use problems::{builtin_problem, CrossGeometry, DataFunction, ProblemOverrides, ProblemSpec};
pub use psi::PsiFamily;
