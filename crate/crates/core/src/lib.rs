//! Numerical laboratory for the degenerate wave equation with drift
//!
//! ```text
//!     u_tt = a(x) u_xx + b(x) u_x   on (0,1),   a(0) = 0,
//!     u(t,0) = 0,  u(t,1) = f(t)
//! ```
//!
//! The crate covers the full chain from coefficients to controls:
//!
//! * [`coefficients`]: the pair `(a, b)`, the weights `eta` and `sigma = a/eta`,
//!   degeneracy classification and the explicit observability constants.
//! * [`mesh`]: graded meshes and the weighted inner products.
//! * [`operator`]: the flux-form generator `sigma (eta y_x)_x`, boundary traces
//!   and the Dirichlet lifting.
//! * [`evolution`]: energy-conserving implicit midpoint integration.
//! * [`diagnostics`]: energy, observability ratios, multiplier identities,
//!   boundary probes and K-sweeps.
//! * [`hum`]: Gramian, conjugate gradient and null-control synthesis.
//! * [`cli`]: config-driven experiment runner with CSV/SVG output.
pub mod cli;
pub mod coefficients;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod hum;
pub mod mesh;
pub mod operator;
pub mod output;
pub mod random;
pub mod tridiag;

pub use coefficients::{
    build_weights, classify_degeneracy, observability_time, Classification, CoefficientProfile,
    ControlTimeBound, DegeneracyReport, Regime, WeightPair,
};
pub use error::{Error, Result};
pub use evolution::{Direction, SolveSettings, State, Trajectory};
pub use mesh::{build_mesh, untrapped_grading, GradedMesh, InnerProductSet, WeightedVector};
pub use operator::{DiscreteGenerator, TraceExtractor};
