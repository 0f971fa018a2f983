//! Default tolerances, one per numerical layer.

/// Breakpoints closer than this are merged into one.
pub const MERGE_EPS: f64 = 1e-12;

/// Exact piecewise-linear paths (addition, transforms, atom sums).
pub const EXACT: f64 = 1e-12;

/// Operator arithmetic (measure sums, equivariance checks).
pub const OPERATOR: f64 = 1e-9;

/// Quadrature- or interpolation-backed paths.
pub const QUADRATURE: f64 = 1e-6;

/// Midpoint-convexity certificate, relative to the value scale.
pub const CONVEXITY: f64 = 1e-9;

/// Slack allowed when validating the slope sequence of a piecewise-linear
/// function, relative to the slope magnitudes involved.
pub const SLOPE_SLACK: f64 = 1e-9;

/// Endpoint tolerance for the `[a,b] x ⊆ D` test of the GL operator.
pub const SUPPORT_EDGE: f64 = 1e-10;
