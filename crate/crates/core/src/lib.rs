//! Geometry of left-invariant spray structures on Lie groups.
//!
//! Everything is computed at the identity, in a fixed basis of the Lie
//! algebra: a left-invariant spray is `G = G0 - H`, where `G0` is the
//! canonical bi-invariant spray and `H` is encoded by the spray vector field
//! `eta: g \ {0} -> g`.
//!
//! - [`lie_algebra`]: structure constants, bracket, `ad`, catalog, file format.
//! - [`minkowski`]: Minkowski norms, fundamental and Cartan tensors.
//! - [`spray`]: `eta` (metric-induced or closed form), the connection
//!   operator `N(y, v) = 1/2 D eta(y, v) - 1/2 [y, v]` and its derivative.
//! - [`curvature`]: S-curvature and Riemann curvature, each with an
//!   independent frame-coefficient oracle.
//! - [`geodesic`]: integral curves of `-eta`, reconstruction of group
//!   geodesics `c' = c * rho(y)`, residual checks and completeness probes.
//! - [`surface`]: indicatrix scans and Landsberg diagnostics in dimension 2.

pub mod curvature;
pub mod error;
pub mod expr;
pub(crate) mod fd;
pub mod geodesic;
pub mod lie_algebra;
pub mod minkowski;
pub mod ode;
pub mod sampling;
pub mod spray;
pub mod surface;

pub use error::{Error, Result};
pub use lie_algebra::{AlgebraVector, Builtin, LieAlgebra, MatrixRep};
pub use minkowski::MinkowskiNorm;
pub use spray::SprayField;
