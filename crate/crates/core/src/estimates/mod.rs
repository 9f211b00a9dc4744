//! The estimate harness: numerical reproduction of the kernel bound, the
//! Young convolution inequalities, the block and commutator estimates, and
//! the Besov operator-norm continuity, at truncated desk scale.
//!
//! Each experiment is deterministic given its parameters and seed: random
//! families are ChaCha-seeded per trial, parallel loops reduce over indexed
//! buffers, and reports carry no timing fields, so a rerun reproduces the
//! serialized report byte for byte.

mod experiments;
mod family;
mod report;

pub use experiments::{
    block_estimate_experiment, commutator_decay_experiment, convolution_bound_double,
    convolution_bound_kernel, convolution_bound_single, kernel_bound_experiment,
    linearity_in_symbol_check, nyquist_points, operator_norm_experiment, young_experiment,
    BlockEstimateParams, CommutatorParams, KernelBoundParams, OpNormParams, YoungParams,
};
pub use family::{trial_coeffs, FamilySpec, SpectralEnvelope};
pub use report::{EstimateReport, FitEntry, SeriesPoint, Verdict};

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::grid::{wrap_angle, TorusGrid};
use crate::linalg::CompensatedReal;

/// The kernel majorant `g_{j,θ}(y) = (2^j |y|)^θ / (|y|^n (1 + 2^j |y|))`,
/// positive for `y != 0` and singular at the origin.
#[derive(Debug, Clone, Copy)]
pub struct KernelWeight {
    pub j: usize,
    pub theta: f64,
    dim: usize,
}

impl KernelWeight {
    pub fn new(j: usize, theta: f64, dim: usize) -> Result<Self> {
        if !(0.0 < theta && theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (0,1), got {theta}"
            )));
        }
        Ok(KernelWeight { j, theta, dim })
    }

    /// Evaluate at the representative `y`; `|y|` is the torus distance to 0.
    pub fn eval(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.dim);
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scaled = (self.j as f64).exp2() * r;
        scaled.powf(self.theta) / (r.powi(self.dim as i32) * (1.0 + scaled))
    }
}

/// Quadrature of `g_{j,θ}` over the difference grid, excluding the singular
/// node `y = 0`. The difference grid is where kernel blocks are sampled, so
/// these `L^1` masses are the ones entering the convolution bounds.
pub fn weight_l1(j: usize, theta: f64, grid: &TorusGrid) -> Result<f64> {
    let w = KernelWeight::new(j, theta, grid.dim())?;
    let n_pts = grid.points_per_axis();
    let mut acc = CompensatedReal::new();
    for flat in 0..grid.node_count() {
        if flat == 0 {
            continue; // y = 0
        }
        let y: Vec<f64> = grid
            .axis_indices(flat)
            .iter()
            .map(|&q| wrap_angle(TAU * q as f64 / n_pts as f64))
            .collect();
        acc.add(w.eval(&y));
    }
    Ok(acc.value() * grid.node_weight())
}

/// `weight_l1` across a j range; returns the values and the max/min ratio
/// (uniform boundedness over j is what the estimates lean on).
pub fn weight_l1_sweep(
    j_lo: usize,
    j_hi: usize,
    theta: f64,
    grid: &TorusGrid,
) -> Result<(Vec<(usize, f64)>, f64)> {
    if j_lo > j_hi {
        return Err(Error::InvalidParameter("empty j range".into()));
    }
    let values: Result<Vec<(usize, f64)>> = (j_lo..=j_hi)
        .map(|j| weight_l1(j, theta, grid).map(|v| (j, v)))
        .collect();
    let values = values?;
    let max = values.iter().map(|(_, v)| *v).fold(f64::MIN, f64::max);
    let min = values.iter().map(|(_, v)| *v).fold(f64::MAX, f64::min);
    Ok((values, max / min))
}
