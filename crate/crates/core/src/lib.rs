//! Pseudodifferential operator calculus on the torus `T^n = (R/2πZ)^n`.
//!
//! The crate is organized around the global quantization with covariable
//! `k ∈ Z^n`: a symbol `a(x, k)` with values in the d×d complex matrices acts
//! on a grid function `f` through its Fourier series,
//!
//! ```text
//! (op[a] f)(x) = Σ_k  e^{i k·x} a(x, k) f̂(k).
//! ```
//!
//! Modules:
//!
//! * [`grid`]: torus grids, truncated frequency lattices, grid functions and
//!   spectral coefficients, with the discrete Fourier transform between them.
//! * [`dyadic`]: dyadic decompositions `(φ_j)` of `Z^n` built by restricting
//!   a smooth radial partition of unity on `R^n`, and their validation.
//! * [`symbol`]: operator-valued symbols, discrete differences `Δ^α_k`,
//!   symbol norms with Hölder seminorms, and a zoo of named constructors.
//! * [`operator`]: operator application, per-block kernels `K_j(x, y)`,
//!   kernel-quadrature convolution, double-kernel factorizations, and block
//!   commutators.
//! * [`besov`]: `L^p` norms on the grid and toroidal Besov norms through
//!   the dyadic blocks, including the derivative-based equivalent norm.
//! * [`estimates`]: the experiment harness measuring kernel bounds, Young
//!   convolution inequalities, block estimates, commutator decay, and
//!   empirical operator norms, with JSON/CSV reporting.

pub mod besov;
pub mod dyadic;
pub mod error;
pub mod estimates;
pub mod grid;
pub mod linalg;
pub mod multiindex;
pub mod operator;
pub mod stats;
pub mod symbol;
pub mod tolerances;

pub use error::{Error, Result};
pub use grid::{FrequencyLattice, GridFunction, SpectralCoeffs, TorusGrid};
pub use linalg::CMat;
