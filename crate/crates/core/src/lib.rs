//! Solvers and certified checks for linear nonlocal equations
//! `u - I[u] = f` on the half-line with Neumann-type jump reflections.
//!
//! The operator `I[u](x) = P.V. int u(x + eta(x,z)) - u(x) dmu(z)` is driven
//! by a stable-type Lévy measure and one of four rules for jumps that would
//! exit the domain: censor them, stop them on the boundary, project them
//! onto it, or mirror them across it. The crate provides
//!
//! * measure handling (symmetric/non-symmetric split, truncations, exact
//!   kernel moments) in [`measures`],
//! * the reflection rules and a randomized audit of their structural
//!   properties in [`reflect`],
//! * pointwise evaluation and dense monotone assembly of the operator in
//!   [`nonlocal_op`],
//! * fixed-point, direct and viscous solvers with comparison diagnostics in
//!   [`solver`],
//! * the local Neumann limit (as the stability index approaches 2) in
//!   [`local_limit`],
//! * certified singular-integral inequalities (sign trichotomies, window
//!   bounds, boundary blow-up constants) in [`certify`].

pub mod certify;
pub mod error;
pub mod grid;
pub mod local_limit;
pub mod measures;
pub mod nonlocal_op;
pub mod quad;
pub mod reflect;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Extension, GridFunction};
pub use measures::{DensityShape, LevyMeasure, MeasureSplit, TruncatedMeasure};
pub use nonlocal_op::{AssembledOperator, BoundaryRow, SplitParams};
pub use reflect::ReflectionModel;
