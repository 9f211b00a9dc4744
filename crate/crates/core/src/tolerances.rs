//! Tolerances and verdict thresholds used across the crate and its test
//! suites.
//!
//! Exact trigonometric-polynomial identities hold up to accumulated f64
//! rounding; thresholds below leave a few orders of headroom over the
//! observed residuals at desk scale (N up to ~700 points per axis).

/// Identities that are exact for band-limited data under the Nyquist margin
/// rule: `op[id]f = f`, multiplication symbols acting pointwise, partition
/// reconstruction, kernel-path vs frequency-path agreement.
pub const EXACT_IDENTITY: f64 = 1e-10;

/// Partition-of-unity sum `Σ_j φ_j(k) = 1` on the covered region.
pub const PARTITION_SUM: f64 = 1e-12;

/// Discrete Leibniz expansion residual and other purely algebraic
/// rearrangements of tabulated data.
pub const ALGEBRAIC: f64 = 1e-12;

/// Double-kernel factorized evaluation vs the direct composition. Two
/// quadrature convolutions accumulate slightly more rounding than one.
pub const DOUBLE_KERNEL: f64 = 1e-9;

/// Multiplicative slack on the Young convolution inequality
/// `|F|_p <= |g|_1 |f|_p` (holds exactly on the cyclic grid).
pub const YOUNG_SLACK: f64 = 1e-9;

/// Ratio experiments skip cells whose denominator falls below this guard.
pub const DENOMINATOR_GUARD: f64 = 1e-14;

/// Two-window "non-growing in j" verdict: the max over the upper half of the
/// j range must not exceed this factor times the max over the lower half.
pub const GROWTH_FACTOR: f64 = 2.0;

/// Commutator decay verdict: the fitted log2 slope must be <= -r plus this
/// tolerance. Truncated lattices and finite test families bias slopes; the
/// bar is clear decay compatible with -r, not sharpness.
pub const SLOPE_TOLERANCE: f64 = 0.35;

/// Operator-norm stability verdict: Q(2*Kmax) / Q(Kmax) must stay below this.
pub const STABILITY_FACTOR: f64 = 1.5;

/// Default θ for the kernel weight g_{j,θ}; any θ in (0,1) works, the
/// measured constants depend on it.
pub const DEFAULT_THETA: f64 = 0.5;

/// Default memory guard for dense kernel tabulations (bytes).
pub const KERNEL_MEMORY_LIMIT: usize = 2 << 30;

/// Quadrature `L^p` norms of trigonometric data are not exact for
/// p outside {1, 2, ∞}; tests using such p carry this tolerance.
pub const INEXACT_QUADRATURE: f64 = 1e-6;
