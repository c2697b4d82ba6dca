//! Thresholds used by the acceptance suite and as experiment defaults.

/// Minimum fitted log-log slope for an O(h) quantity.
pub const MIN_SLOPE: f64 = 0.9;
/// Minimum coefficient of determination of a rate fit.
pub const MIN_R_SQUARED: f64 = 0.98;
/// Values at or below this are treated as zero by the rate fit.
pub const ZERO_LEVEL: f64 = 1e-12;
/// Relative defect allowed in the exact finite-h decomposition.
pub const DECOMPOSITION_REL: f64 = 1e-9;
/// Trace-bound and positivity slack, relative to the trace.
pub const POSITIVITY_REL: f64 = 1e-10;
/// Relative slack in the Hilbert-Schmidt bound.
pub const HS_SLACK_REL: f64 = 1e-9;
/// Largest acceptable Hilbert-Schmidt tail of a window.
pub const HS_TAIL_MAX: f64 = 1e-12;
/// Liouville invariance defect relative to `norm_sq * sup|b|`.
pub const LIOUVILLE_REL: f64 = 1e-12;
/// Central-difference step and defect for the density-matrix equation.
pub const ODE_STEP: f64 = 1e-4;
pub const ODE_DEFECT: f64 = 1e-6;
/// Trace invariance under density-matrix evolution.
pub const TRACE_INVARIANCE: f64 = 1e-12;
/// Near-hyperplane mass at the smallest h for wave packets.
pub const WAVE_PACKET_SLAB_MAX: f64 = 0.01;
/// Relative error of the wave-packet limit at the smallest h.
pub const WAVE_PACKET_LIMIT_REL: f64 = 0.05;
/// Relative error of the resonant-plane-wave limit at the largest n.
pub const PLANE_WAVE_LIMIT_REL: f64 = 0.02;
/// Lower bound on the near-hyperplane mass of a resonant plane wave.
pub const PLANE_WAVE_SLAB_MIN: f64 = 0.9;
/// Trace-density quadrature and hand-formula tolerances.
pub const DENSITY_MASS: f64 = 1e-8;
pub const DENSITY_FORMULA: f64 = 1e-10;
/// A report row is flagged when its tail bound exceeds this fraction of `|value|`.
pub const TAIL_FLAG_REL: f64 = 0.01;
