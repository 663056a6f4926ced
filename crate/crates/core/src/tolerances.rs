//! Numerical tolerances shared by checks and tests.

/// Residual tolerance in the g-norm when all jets are exact.
pub const EXACT_RESIDUAL: f64 = 1e-7;

/// Residual tolerance when metric or potential jets come from finite differences.
pub const FINITE_DIFFERENCE_RESIDUAL: f64 = 1e-3;

/// Quadrature tolerance for integral identities on compact charts.
pub const QUADRATURE: f64 = 1e-6;

/// `|∇f|` below this marks a sample as critical.
pub const CRITICAL_GRADIENT: f64 = 1e-6;

/// `|∇f|` required at the start of a shape-operator trace.
pub const TRACE_START_GRADIENT: f64 = 1e-3;

/// Allowed drift of `|γ'|` and frame orthonormality along a geodesic.
pub const GEODESIC_DRIFT: f64 = 1e-6;

/// Ricatti blow-up threshold on `|φ|`.
pub const RICATTI_BLOWUP: f64 = 1e9;

/// Maximum step times `|φ|` in the Ricatti integrator.
pub const RICATTI_STEP_SCALE: f64 = 1e-3;

/// Successive Simpson refinements must agree to this.
pub const SIMPSON_REFINEMENT: f64 = 1e-8;

/// Refinement tolerance of the shooting distance estimate.
pub const SHOOTING: f64 = 1e-3;

/// Slack for the slope tests on `log(V/rⁿ)`.
pub const VOLUME_SLOPE: f64 = 1e-9;

/// Co-area identity tolerance on exact profiles.
pub const COAREA: f64 = 1e-6;
