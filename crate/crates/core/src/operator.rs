//! Operator application and kernel representations.
//!
//! The quantization `(op[a] f)(x) = Σ_k e^{i k·x} a(x, k) f̂(k)` is evaluated
//! in two regimes:
//!
//! * x-independent symbols act as Fourier multipliers, coefficient by
//!   coefficient, with no extra transform, so multiplier compositions commute
//!   identically;
//! * x-dependent symbols contract a dense sampled table over the lattice at
//!   every grid node, `O(N^n · |lattice|)` per application, which is exact
//!   for band-limited input up to rounding.
//!
//! Frequency-localized pieces `op[a] op[φ_j]` become convolutions against the
//! kernel blocks `K_j(x, y) = Σ_k e^{i k·y} a(x, k) φ_j(k)`, a finite sum
//! over the block support. Kernels are tabulated with y on the *difference
//! grid* `{2π q / N}`: differences of two standard nodes land exactly there,
//! so the quadrature convolution `N^{-n} Σ_y K(x, y) f(x - y)` evaluates `f`
//! on nodes only. Double kernels are never materialized as three-argument
//! tensors; both factorizations are applied as two successive convolutions.
//!
//! Summation order is fixed (lattice-lexicographic, compensated), and all
//! parallel loops reduce over indexed buffers, so results do not depend on
//! the thread schedule.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dyadic::DyadicDecomposition;
use crate::error::{Error, Result};
use crate::grid::{
    forward_transform, inverse_transform, phase_table, wrap_angle, FrequencyLattice, GridFunction,
    SpectralCoeffs, TorusGrid,
};
use crate::linalg::CompensatedSum;
use crate::symbol::Symbol;
use crate::tolerances;

/// Symbol sampled once on `grid × lattice` into a dense table.
///
/// x-independent symbols store a single row. Experiments reuse one sampled
/// table across many applications.
pub struct SampledSymbol {
    symbol: Symbol,
    grid: Arc<TorusGrid>,
    lattice: Arc<FrequencyLattice>,
    x_rows: usize,
    entries: Vec<Complex64>,
}

impl SampledSymbol {
    pub fn new(
        symbol: &Symbol,
        grid: Arc<TorusGrid>,
        lattice: Arc<FrequencyLattice>,
    ) -> Result<Self> {
        if symbol.dim_x() != grid.dim() {
            return Err(Error::DimensionMismatch {
                context: "symbol vs grid dimension",
                expected: symbol.dim_x(),
                got: grid.dim(),
            });
        }
        grid.check_nyquist(&lattice)?;
        let d = symbol.fiber_dim();
        let beta0 = vec![0u32; symbol.dim_x()];
        let x_rows = if symbol.is_x_independent() {
            1
        } else {
            grid.node_count()
        };
        let l = lattice.len();
        let entries: Vec<Complex64> = (0..x_rows)
            .into_par_iter()
            .flat_map_iter(|node| {
                let x = grid.node(node);
                let mut row = Vec::with_capacity(l * d * d);
                for flat in 0..l {
                    let k = lattice.member(flat);
                    let m = symbol.eval_unscaled(&x, &k, &beta0);
                    row.extend_from_slice(m.entries());
                }
                row
            })
            .collect();
        Ok(SampledSymbol {
            symbol: symbol.clone(),
            grid,
            lattice,
            x_rows,
            entries,
        })
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn lattice(&self) -> &Arc<FrequencyLattice> {
        &self.lattice
    }

    fn dim(&self) -> usize {
        self.symbol.fiber_dim()
    }

    /// `d×d` entry block at (node, lattice flat), without the gain.
    fn block(&self, node: usize, kflat: usize) -> &[Complex64] {
        let d2 = self.dim() * self.dim();
        let row = if self.x_rows == 1 { 0 } else { node };
        let base = (row * self.lattice.len() + kflat) * d2;
        &self.entries[base..base + d2]
    }
}

fn check_coeffs(sampled: &SampledSymbol, coeffs: &SpectralCoeffs) -> Result<()> {
    if coeffs.lattice().as_ref() != sampled.lattice.as_ref() {
        return Err(Error::DimensionMismatch {
            context: "coefficient lattice vs sampled symbol lattice",
            expected: sampled.lattice.len(),
            got: coeffs.lattice().len(),
        });
    }
    if coeffs.dim() != sampled.dim() {
        return Err(Error::DimensionMismatch {
            context: "coefficient fiber vs symbol fiber",
            expected: sampled.dim(),
            got: coeffs.dim(),
        });
    }
    Ok(())
}

fn matvec_acc(block: &[Complex64], v: &[Complex64], out: &mut [CompensatedSum], phase: Complex64) {
    let d = v.len();
    for (i, acc) in out.iter_mut().enumerate() {
        let mut s = Complex64::ZERO;
        for (j, vj) in v.iter().enumerate() {
            s += block[i * d + j] * vj;
        }
        acc.add(phase * s);
    }
}

/// Apply the symbol as a Fourier multiplier in coefficient space.
/// Only valid for x-independent symbols; this is the exact multiplier
/// semantics with no quadrature involved.
pub fn multiplier_apply(
    sampled: &SampledSymbol,
    coeffs: &SpectralCoeffs,
) -> Result<SpectralCoeffs> {
    if !sampled.symbol.is_x_independent() {
        return Err(Error::InvalidParameter(
            "multiplier application requires an x-independent symbol".into(),
        ));
    }
    check_coeffs(sampled, coeffs)?;
    let d = sampled.dim();
    let gain = sampled.symbol.gain();
    let mut out = SpectralCoeffs::zeros(coeffs.lattice().clone(), d);
    let l = coeffs.lattice().len();
    let src = coeffs.values();
    let dst = out.values_mut();
    for flat in 0..l {
        let block = sampled.block(0, flat);
        for i in 0..d {
            let mut s = Complex64::ZERO;
            for j in 0..d {
                s += block[i * d + j] * src[flat * d + j];
            }
            dst[flat * d + i] = if gain == 1.0 {
                s
            } else {
                s * Complex64::new(gain, 0.0)
            };
        }
    }
    Ok(out)
}

/// Dense contraction `x ↦ Σ_k e^{i k·x} a(x, k) F(k)` at every grid node.
pub fn contract_to_grid(sampled: &SampledSymbol, coeffs: &SpectralCoeffs) -> Result<GridFunction> {
    check_coeffs(sampled, coeffs)?;
    let grid = sampled.grid.clone();
    let lattice = sampled.lattice.clone();
    let n = grid.dim();
    let d = sampled.dim();
    let l = lattice.len();
    let gain = sampled.symbol.gain();
    let phases = phase_table(&grid, lattice.kmax(), 1.0);
    let n_pts = grid.points_per_axis();
    let side = lattice.side();

    // Pre-decoded per-axis indices, lattice-lexicographic.
    let k_axes: Vec<usize> = (0..l)
        .flat_map(|flat| {
            let mut v = vec![0usize; n];
            let mut rem = flat;
            for i in (0..n).rev() {
                v[i] = rem % side;
                rem /= side;
            }
            v
        })
        .collect();

    let values: Vec<Complex64> = (0..grid.node_count())
        .into_par_iter()
        .flat_map_iter(|node| {
            let m_axes = grid.axis_indices(node);
            let mut acc: Vec<CompensatedSum> = vec![CompensatedSum::new(); d];
            let mut v = vec![Complex64::ZERO; d];
            for flat in 0..l {
                let coeff = coeffs.coeff(flat);
                if coeff.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                    continue;
                }
                v.copy_from_slice(coeff);
                let mut phase = Complex64::ONE;
                for axis in 0..n {
                    phase *= phases[k_axes[flat * n + axis] * n_pts + m_axes[axis]];
                }
                matvec_acc(sampled.block(node, flat), &v, &mut acc, phase);
            }
            acc.into_iter().map(move |s| {
                let z = s.value();
                if gain == 1.0 {
                    z
                } else {
                    z * Complex64::new(gain, 0.0)
                }
            })
        })
        .collect();
    GridFunction::from_values(grid, d, values)
}

/// `op[a]` in coefficient space: exact multiplier for x-independent symbols,
/// contraction plus forward transform otherwise (exact under the Nyquist
/// margin rule).
pub fn apply_op_spectral(
    sampled: &SampledSymbol,
    coeffs: &SpectralCoeffs,
) -> Result<SpectralCoeffs> {
    if sampled.symbol.is_x_independent() {
        multiplier_apply(sampled, coeffs)
    } else {
        let g = contract_to_grid(sampled, coeffs)?;
        forward_transform(&g, coeffs.lattice().clone())
    }
}

/// `(op[a] f)(x) = Σ_k e^{i k·x} a(x, k) f̂(k)` on the grid nodes.
///
/// With a decomposition supplied, evaluates through the dyadic
/// reconstruction `Σ_j op[a] op[φ_j] f` instead (same operator, block by
/// block).
pub fn apply_op(
    a: &Symbol,
    f: &GridFunction,
    lattice: Arc<FrequencyLattice>,
    decomp: Option<&DyadicDecomposition>,
) -> Result<GridFunction> {
    let sampled = SampledSymbol::new(a, f.grid().clone(), lattice)?;
    apply_op_sampled(&sampled, f, decomp)
}

/// [`apply_op`] against a pre-sampled symbol table.
pub fn apply_op_sampled(
    sampled: &SampledSymbol,
    f: &GridFunction,
    decomp: Option<&DyadicDecomposition>,
) -> Result<GridFunction> {
    let coeffs = forward_transform(f, sampled.lattice.clone())?;
    match decomp {
        None => apply_spectral_to_grid(sampled, &coeffs),
        Some(d) => {
            let mut out = GridFunction::zeros(sampled.grid.clone(), sampled.dim());
            for j in 0..=d.j_max() {
                out = out.add(&apply_block_coeffs(sampled, &coeffs, d, j)?);
            }
            Ok(out)
        }
    }
}

fn apply_spectral_to_grid(
    sampled: &SampledSymbol,
    coeffs: &SpectralCoeffs,
) -> Result<GridFunction> {
    if sampled.symbol.is_x_independent() {
        let out = multiplier_apply(sampled, coeffs)?;
        inverse_transform(&out, sampled.grid.clone())
    } else {
        contract_to_grid(sampled, coeffs)
    }
}

/// `op[a] op[φ_j] f` evaluated in frequency space.
pub fn apply_block(
    a: &Symbol,
    f: &GridFunction,
    decomp: &DyadicDecomposition,
    j: usize,
) -> Result<GridFunction> {
    let sampled = SampledSymbol::new(a, f.grid().clone(), decomp.lattice().clone())?;
    let coeffs = forward_transform(f, decomp.lattice().clone())?;
    apply_block_coeffs(&sampled, &coeffs, decomp, j)
}

/// [`apply_block`] from pre-computed coefficients and symbol table.
pub fn apply_block_coeffs(
    sampled: &SampledSymbol,
    coeffs: &SpectralCoeffs,
    decomp: &DyadicDecomposition,
    j: usize,
) -> Result<GridFunction> {
    let phi = decomp.phi_lattice_table(j)?;
    let localized = coeffs.weighted(&phi);
    apply_spectral_to_grid(sampled, &localized)
}

/// `op[φ_j] f` in coefficient space (scalar multiplier).
pub fn phi_multiplier(
    decomp: &DyadicDecomposition,
    j: usize,
    coeffs: &SpectralCoeffs,
) -> Result<SpectralCoeffs> {
    Ok(coeffs.weighted(&decomp.phi_lattice_table(j)?))
}

/// `op[χ_j] f` in coefficient space.
pub fn chi_multiplier(
    decomp: &DyadicDecomposition,
    j: usize,
    coeffs: &SpectralCoeffs,
) -> Result<SpectralCoeffs> {
    Ok(coeffs.weighted(&decomp.chi_lattice_table(j)?))
}

/// Kernel block `K_j(x, y) = Σ_k e^{i k·y} a(x, k) φ_j(k)` tabulated over
/// `x ∈ grid`, `y ∈ difference grid`.
///
/// The sum runs over the full block support in `Z^n` (a finite set), not the
/// truncated lattice, so the tabulated kernel is the one the estimates are
/// about even when the top blocks stick out of the lattice box.
pub struct KernelBlock {
    pub j: usize,
    grid: Arc<TorusGrid>,
    dim: usize,
    x_rows: usize,
    /// Largest per-axis |k_i| over contributing modes; the convolution
    /// against Kmax-band-limited data is alias-free when
    /// `N >= max_mode + Kmax + 1`.
    pub max_mode_axis: i64,
    pub mode_count: usize,
    values: Vec<Complex64>,
}

impl KernelBlock {
    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// y-node of the difference grid, wrapped to the representative cube.
    pub fn y_coord(&self, y_flat: usize) -> Vec<f64> {
        let idx = self.grid.axis_indices(y_flat);
        idx.iter()
            .map(|&q| wrap_angle(TAU * q as f64 / self.grid.points_per_axis() as f64))
            .collect()
    }

    /// `d×d` kernel value at (x node, y difference-grid index).
    pub fn value(&self, x_node: usize, y_flat: usize) -> &[Complex64] {
        let d2 = self.dim * self.dim;
        let row = if self.x_rows == 1 { 0 } else { x_node };
        let base = (row * self.grid.node_count() + y_flat) * d2;
        &self.values[base..base + d2]
    }

    /// Operator norm of the kernel value at (x, y).
    pub fn value_norm(&self, x_node: usize, y_flat: usize) -> f64 {
        crate::linalg::CMat::from_rows(self.dim, self.value(x_node, y_flat).to_vec()).op_norm()
    }

    pub fn x_rows(&self) -> usize {
        self.x_rows
    }
}

/// Modes of block j: all `k ∈ Z^n` with `φ̃_j(|k|) != 0`, lexicographic.
fn block_modes(decomp: &DyadicDecomposition, j: usize) -> (Vec<(Vec<i64>, f64)>, i64) {
    let n = decomp.lattice().dim();
    let (_, hi) = decomp.block_support(j);
    let reach = hi.ceil() as i64;
    let cube = FrequencyLattice::new(n, reach).expect("small cube");
    let mut modes = Vec::new();
    let mut max_axis = 0i64;
    for flat in 0..cube.len() {
        let k = cube.member(flat);
        let w = decomp.phi_tilde(j, crate::grid::freq_norm(&k));
        if w != 0.0 {
            max_axis = max_axis.max(k.iter().map(|ki| ki.abs()).max().unwrap_or(0));
            modes.push((k, w));
        }
    }
    (modes, max_axis)
}

/// Tabulate `K_j`. Memory guard: `x_rows · N^n · d² · 16` bytes against
/// `limit` (default [`tolerances::KERNEL_MEMORY_LIMIT`]).
pub fn kernel_block(
    a: &Symbol,
    decomp: &DyadicDecomposition,
    j: usize,
    grid: Arc<TorusGrid>,
    limit: Option<usize>,
) -> Result<KernelBlock> {
    if j > decomp.j_max() {
        return Err(Error::BlockOutOfRange {
            j,
            j_max: decomp.j_max(),
        });
    }
    let n = grid.dim();
    let d = a.fiber_dim();
    let y_count = grid.node_count();
    let x_rows = if a.is_x_independent() {
        1
    } else {
        grid.node_count()
    };
    let estimate = x_rows * y_count * d * d * std::mem::size_of::<Complex64>();
    let limit = limit.unwrap_or(tolerances::KERNEL_MEMORY_LIMIT);
    if estimate > limit {
        return Err(Error::MemoryGuard { estimate, limit });
    }

    let (modes, max_mode_axis) = block_modes(decomp, j);
    let n_pts = grid.points_per_axis();
    // Phase rows e^{i k_i y_q}, y_q = wrapped 2π q / N, per axis value of k_i.
    let phase_rows: Vec<Complex64> = {
        let mut t = vec![Complex64::ZERO; (2 * max_mode_axis as usize + 1) * n_pts];
        for (row, ki) in (-max_mode_axis..=max_mode_axis).enumerate() {
            for q in 0..n_pts {
                let y = wrap_angle(TAU * q as f64 / n_pts as f64);
                t[row * n_pts + q] = Complex64::from_polar(1.0, ki as f64 * y);
            }
        }
        t
    };
    let phase = |ki: i64, q: usize| phase_rows[(ki + max_mode_axis) as usize * n_pts + q];

    let beta0 = vec![0u32; n];
    let gain = a.gain();
    let values: Vec<Complex64> = (0..x_rows)
        .into_par_iter()
        .flat_map_iter(|x_node| {
            let x = grid.node(x_node);
            // Sample a(x, k) once per mode for this row.
            let samples: Vec<(Complex64, Vec<i64>)> = modes
                .iter()
                .map(|(k, w)| (Complex64::new(*w, 0.0), k.clone()))
                .collect();
            let mats: Vec<Vec<Complex64>> = modes
                .iter()
                .map(|(k, _)| a.eval_unscaled(&x, k, &beta0).entries().to_vec())
                .collect();
            let mut row = Vec::with_capacity(y_count * d * d);
            for y_flat in 0..y_count {
                let y_axes = grid.axis_indices(y_flat);
                let mut acc = vec![CompensatedSum::new(); d * d];
                for (mode_i, (w, k)) in samples.iter().enumerate() {
                    let mut ph = *w;
                    for (axis, &ki) in k.iter().enumerate() {
                        ph *= phase(ki, y_axes[axis]);
                    }
                    for (e, slot) in mats[mode_i].iter().zip(acc.iter_mut()) {
                        slot.add(ph * e);
                    }
                }
                row.extend(acc.into_iter().map(|s| {
                    let z = s.value();
                    if gain == 1.0 {
                        z
                    } else {
                        z * Complex64::new(gain, 0.0)
                    }
                }));
            }
            row
        })
        .collect();

    Ok(KernelBlock {
        j,
        grid,
        dim: d,
        x_rows,
        max_mode_axis,
        mode_count: modes.len(),
        values,
    })
}

/// Scalar kernel `K̃_j(y) = Σ_ℓ e^{i ℓ·y} φ_j(ℓ)` on the difference grid.
pub fn tilde_kernel(decomp: &DyadicDecomposition, j: usize, grid: &TorusGrid) -> Vec<Complex64> {
    let (modes, _) = block_modes(decomp, j);
    let n_pts = grid.points_per_axis();
    (0..grid.node_count())
        .into_par_iter()
        .map(|y_flat| {
            let y_axes = grid.axis_indices(y_flat);
            let y: Vec<f64> = y_axes
                .iter()
                .map(|&q| wrap_angle(TAU * q as f64 / n_pts as f64))
                .collect();
            let mut acc = CompensatedSum::new();
            for (k, w) in &modes {
                let angle: f64 = k.iter().zip(&y).map(|(&ki, &yi)| ki as f64 * yi).sum();
                acc.add(Complex64::from_polar(*w, angle));
            }
            acc.value()
        })
        .collect()
}

/// Quadrature convolution `F(x_m) = N^{-n} Σ_y K(x_m, y) f(x_m - y)` with
/// periodic index wrap; y runs over the difference grid so `x_m - y` is a
/// node.
pub fn apply_via_kernel(kernel: &KernelBlock, f: &GridFunction) -> Result<GridFunction> {
    if kernel.grid() != f.grid() {
        return Err(Error::DimensionMismatch {
            context: "kernel vs function grid",
            expected: kernel.grid().points_per_axis(),
            got: f.grid().points_per_axis(),
        });
    }
    if kernel.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            context: "kernel vs function fiber",
            expected: kernel.dim(),
            got: f.dim(),
        });
    }
    let grid = f.grid().clone();
    let n = grid.dim();
    let d = f.dim();
    let n_pts = grid.points_per_axis();
    let weight = grid.node_weight();
    let values: Vec<Complex64> = (0..grid.node_count())
        .into_par_iter()
        .flat_map_iter(|x_node| {
            let x_axes = grid.axis_indices(x_node);
            let mut acc = vec![CompensatedSum::new(); d];
            let mut shifted = vec![0usize; n];
            for y_flat in 0..grid.node_count() {
                let y_axes = grid.axis_indices(y_flat);
                for axis in 0..n {
                    shifted[axis] = (x_axes[axis] + n_pts - y_axes[axis]) % n_pts;
                }
                let src = f.node_value(grid.flat_index(&shifted));
                let block = kernel.value(x_node, y_flat);
                for i in 0..d {
                    let mut s = Complex64::ZERO;
                    for j in 0..d {
                        s += block[i * d + j] * src[j];
                    }
                    acc[i].add(s);
                }
            }
            acc.into_iter()
                .map(move |s| s.value() * Complex64::new(weight, 0.0))
        })
        .collect();
    GridFunction::from_values(grid, d, values)
}

/// Scalar-kernel quadrature convolution `N^{-n} Σ_y K̃(y) f(x - y)`.
pub fn convolve_scalar(kernel: &[Complex64], f: &GridFunction) -> GridFunction {
    let grid = f.grid().clone();
    let n = grid.dim();
    let d = f.dim();
    let n_pts = grid.points_per_axis();
    let weight = grid.node_weight();
    assert_eq!(kernel.len(), grid.node_count());
    let values: Vec<Complex64> = (0..grid.node_count())
        .into_par_iter()
        .flat_map_iter(|x_node| {
            let x_axes = grid.axis_indices(x_node);
            let mut acc = vec![CompensatedSum::new(); d];
            let mut shifted = vec![0usize; n];
            for (y_flat, kv) in kernel.iter().enumerate() {
                let y_axes = grid.axis_indices(y_flat);
                for axis in 0..n {
                    shifted[axis] = (x_axes[axis] + n_pts - y_axes[axis]) % n_pts;
                }
                let src = f.node_value(grid.flat_index(&shifted));
                for i in 0..d {
                    acc[i].add(kv * src[i]);
                }
            }
            acc.into_iter()
                .map(move |s| s.value() * Complex64::new(weight, 0.0))
        })
        .collect();
    GridFunction::from_values(grid, d, values).expect("shape preserved")
}

/// Which composition the factored double kernel reproduces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoubleKernelKind {
    /// `K^{(1)}`: reproduces `op[a] op[φ_j] f`.
    SymbolOuter,
    /// `K^{(2)}` with the shifted base point `a(x-y, k)`: reproduces
    /// `op[φ_j] op[a] f`.
    BlockOuter,
}

/// Evaluate the double-kernel representation
/// `Σ_κ ∬ K^{(kind)}_{jκ}(x, y, z) (op[χ_κ] f)(x-y-z) d̄y d̄z`
/// in factored form, one block kernel at a time.
pub fn double_kernel_apply(
    a: &Symbol,
    f: &GridFunction,
    decomp: &DyadicDecomposition,
    j: usize,
    kind: DoubleKernelKind,
    limit: Option<usize>,
) -> Result<GridFunction> {
    if j > decomp.j_max() {
        return Err(Error::BlockOutOfRange {
            j,
            j_max: decomp.j_max(),
        });
    }
    let grid = f.grid().clone();
    let coeffs = forward_transform(f, decomp.lattice().clone())?;
    let tilde = tilde_kernel(decomp, j, &grid);
    let mut out = GridFunction::zeros(grid.clone(), f.dim());
    for kappa in 0..=decomp.j_max() {
        let w_kappa = inverse_transform(&chi_multiplier(decomp, kappa, &coeffs)?, grid.clone())?;
        let k_kappa = kernel_block(a, decomp, kappa, grid.clone(), limit)?;
        let term = match kind {
            DoubleKernelKind::SymbolOuter => {
                // op[a] op[φ_κ] (op[φ_j] op[χ_κ] f): y-convolution first.
                let u = convolve_scalar(&tilde, &w_kappa);
                apply_via_kernel(&k_kappa, &u)?
            }
            DoubleKernelKind::BlockOuter => {
                // op[φ_j] (op[a] op[φ_κ] op[χ_κ] f): z-convolution at the
                // shifted base point happens by convolving afterwards.
                let v = apply_via_kernel(&k_kappa, &w_kappa)?;
                convolve_scalar(&tilde, &v)
            }
        };
        out = out.add(&term);
    }
    Ok(out)
}

/// `(op[φ_j] op[a] - op[a] op[φ_j]) f`.
///
/// For x-independent symbols both orderings are the same multiplier
/// composition, so the commutator vanishes identically and an exact zero is
/// returned without numerical evaluation.
pub fn commutator_block(
    a: &Symbol,
    f: &GridFunction,
    decomp: &DyadicDecomposition,
    j: usize,
) -> Result<GridFunction> {
    let sampled = SampledSymbol::new(a, f.grid().clone(), decomp.lattice().clone())?;
    commutator_block_sampled(&sampled, f, decomp, j)
}

/// [`commutator_block`] against a pre-sampled symbol table.
pub fn commutator_block_sampled(
    sampled: &SampledSymbol,
    f: &GridFunction,
    decomp: &DyadicDecomposition,
    j: usize,
) -> Result<GridFunction> {
    if j > decomp.j_max() {
        return Err(Error::BlockOutOfRange {
            j,
            j_max: decomp.j_max(),
        });
    }
    if sampled.symbol.is_x_independent() {
        return Ok(GridFunction::zeros(f.grid().clone(), f.dim()));
    }
    let coeffs = forward_transform(f, sampled.lattice.clone())?;
    // op[a] op[φ_j] f
    let term1 = apply_block_coeffs(sampled, &coeffs, decomp, j)?;
    // op[φ_j] op[a] f
    let af = apply_op_spectral(sampled, &coeffs)?;
    let term2 = inverse_transform(&phi_multiplier(decomp, j, &af)?, f.grid().clone())?;
    Ok(term2.sub(&term1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::zoo;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn setup(n: usize, kmax: i64, n_pts: usize) -> (Arc<TorusGrid>, Arc<FrequencyLattice>) {
        (
            Arc::new(TorusGrid::new(n, n_pts).unwrap()),
            Arc::new(FrequencyLattice::new(n, kmax).unwrap()),
        )
    }

    fn random_band_limited(
        lattice: Arc<FrequencyLattice>,
        grid: Arc<TorusGrid>,
        d: usize,
        seed: u64,
    ) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..lattice.len() * d)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let coeffs = SpectralCoeffs::from_values(lattice, d, values).unwrap();
        inverse_transform(&coeffs, grid).unwrap()
    }

    #[test]
    fn identity_symbol_is_identity_operator() {
        let (g, l) = setup(1, 8, 17);
        let f = random_band_limited(l.clone(), g.clone(), 2, 1);
        let out = apply_op(&zoo::identity(1, 2), &f, l, None).unwrap();
        assert!(out.sub(&f).linf_norm() < 1e-12);
    }

    #[test]
    fn derivative_multiplier_differentiates() {
        let (g, l) = setup(1, 4, 9);
        let f = GridFunction::from_fn(g.clone(), 1, |x| vec![c(x[0].sin(), 0.0)]);
        let out = apply_op(&zoo::first_derivative(1, 1), &f, l, None).unwrap();
        for m in 0..g.node_count() {
            let x = g.axis_coord(m);
            assert!((out.node_value(m)[0] - c(x.cos(), 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn multiplication_symbol_acts_pointwise() {
        let (g, l) = setup(1, 6, 15);
        let f = random_band_limited(l.clone(), g.clone(), 1, 2);
        let out = apply_op(&zoo::cosine_multiplier(1, 1), &f, l, None).unwrap();
        for m in 0..g.node_count() {
            let x = g.axis_coord(m);
            let want = f.node_value(m)[0] * c(x.cos(), 0.0);
            assert!((out.node_value(m)[0] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn matrix_symbol_application_matches_direct_sum() {
        // Oracle: direct nested-loop evaluation of Eq-style contraction.
        let (g, l) = setup(1, 3, 17);
        let a = zoo::rotation_conjugated(1, 1.0, 1.0);
        let f = random_band_limited(l.clone(), g.clone(), 2, 3);
        let out = apply_op(&a, &f, l.clone(), None).unwrap();
        let coeffs = forward_transform(&f, l.clone()).unwrap();
        for node in 0..g.node_count() {
            let x = g.node(node);
            let mut want = vec![Complex64::ZERO; 2];
            for flat in 0..l.len() {
                let k = l.member(flat);
                let ph = Complex64::from_polar(1.0, k[0] as f64 * x[0]);
                let m = a.eval(&x, &k, &[0]);
                let v = coeffs.coeff(flat);
                for i in 0..2 {
                    for jj in 0..2 {
                        want[i] += ph * m.get(i, jj) * v[jj];
                    }
                }
            }
            for i in 0..2 {
                assert!((out.node_value(node)[i] - want[i]).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn block_reconstruction_sums_to_op() {
        let (g, l) = setup(2, 6, 16);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        let a = zoo::cosine_multiplier(2, 1);
        let f = random_band_limited(l.clone(), g.clone(), 1, 4);
        let direct = apply_op(&a, &f, l.clone(), None).unwrap();
        let reconstructed = apply_op(&a, &f, l, Some(&d)).unwrap();
        assert!(direct.sub(&reconstructed).linf_norm() < 1e-10);
    }

    #[test]
    fn block_of_unsupported_frequency_is_zero() {
        let (g, l) = setup(1, 10, 21);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        // Exact single-frequency coefficients: k0 = 9, φ_1 supported in (1, 4),
        // so the localized coefficients are identically zero.
        let mut coeffs = SpectralCoeffs::zeros(l.clone(), 1);
        let flat = l.flat_index(&[9]).unwrap();
        coeffs.values_mut()[flat] = Complex64::ONE;
        let sampled = SampledSymbol::new(&zoo::identity(1, 1), g.clone(), l.clone()).unwrap();
        let out = apply_block_coeffs(&sampled, &coeffs, &d, 1).unwrap();
        assert_eq!(out.linf_norm(), 0.0);
        // Through grid samples the forward transform leaves rounding-level
        // coefficients at resolved frequencies; the block stays at noise level.
        let f = GridFunction::from_scalar_fn(g, |x| Complex64::from_polar(1.0, 9.0 * x[0]));
        let out2 = apply_block(&zoo::identity(1, 1), &f, &d, 1).unwrap();
        assert!(out2.linf_norm() < 1e-14);
    }

    #[test]
    fn x_independent_block_commutation() {
        let (g, l) = setup(1, 8, 17);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        let a = zoo::bracket_power(1, 1, -1.0);
        let f = random_band_limited(l.clone(), g.clone(), 1, 5);
        let j = 2;
        let lhs = apply_block(&a, &f, &d, j).unwrap();
        // op[φ_j](op[a] f) through the spectral multiplier path
        let sampled = SampledSymbol::new(&a, g.clone(), l.clone()).unwrap();
        let coeffs = forward_transform(&f, l.clone()).unwrap();
        let af = multiplier_apply(&sampled, &coeffs).unwrap();
        let rhs = inverse_transform(&phi_multiplier(&d, j, &af).unwrap(), g).unwrap();
        assert!(lhs.sub(&rhs).linf_norm() < 1e-13);
    }

    #[test]
    fn kernel_block_identity_is_x_independent_and_matches_tilde() {
        let (g, l) = setup(1, 8, 17);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        let k = kernel_block(&zoo::identity(1, 1), &d, 2, g.clone(), None).unwrap();
        assert_eq!(k.x_rows(), 1);
        let tilde = tilde_kernel(&d, 2, &g);
        for y in 0..g.node_count() {
            assert!((k.value(0, y)[0] - tilde[y]).norm() < 1e-13);
        }
    }

    #[test]
    fn kernel_value_at_zero_is_block_mass() {
        // K_j(x, 0) = Σ_k φ_j(k) a(x, k); for the identity symbol and j = 2
        // the mode weights sum to exactly 6 (pairs of transition points sum
        // to 1 by the mollifier symmetry).
        let (g, l) = setup(1, 16, 33);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        let k = kernel_block(&zoo::identity(1, 1), &d, 2, g.clone(), None).unwrap();
        // y index 0 is y = 0 on the difference grid.
        assert!((k.value(0, 0)[0] - c(6.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn kernel_mean_vanishes_for_positive_blocks() {
        let (g, l) = setup(1, 8, 17);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        let a = zoo::cosine_multiplier(1, 1);
        let k = kernel_block(&a, &d, 2, g.clone(), None).unwrap();
        for x_node in 0..g.node_count() {
            let mut acc = CompensatedSum::new();
            for y in 0..g.node_count() {
                acc.add(k.value(x_node, y)[0]);
            }
            assert!(
                (acc.value() * Complex64::new(g.node_weight(), 0.0)).norm() < 1e-14,
                "mean at x {x_node}"
            );
        }
    }

    #[test]
    fn kernel_path_matches_frequency_path() {
        // Nyquist margin: block 2 modes reach |k| <= 7, f is band-limited to
        // 8, so N = 17 >= 7 + 8 + 1 is alias-free.
        let (g, l) = setup(1, 8, 17);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        for (name, a) in [
            ("identity", zoo::identity(1, 1)),
            ("cosine", zoo::cosine_multiplier(1, 1)),
        ] {
            let f = random_band_limited(l.clone(), g.clone(), 1, 7);
            let freq = apply_block(&a, &f, &d, 2).unwrap();
            let kern = kernel_block(&a, &d, 2, g.clone(), None).unwrap();
            let conv = apply_via_kernel(&kern, &f).unwrap();
            let err = freq.sub(&conv).linf_norm();
            assert!(err < 1e-10, "{name}: dual-path error {err}");
        }
    }

    #[test]
    fn kernel_path_matrix_symbol_n2() {
        let (g, l) = setup(2, 4, 15);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        let a = zoo::rotation_conjugated(2, 1.0, 1.0);
        let f = random_band_limited(l.clone(), g.clone(), 2, 8);
        let freq = apply_block(&a, &f, &d, 1).unwrap();
        let kern = kernel_block(&a, &d, 1, g.clone(), None).unwrap();
        let conv = apply_via_kernel(&kern, &f).unwrap();
        assert!(freq.sub(&conv).linf_norm() < 1e-10);
    }

    #[test]
    fn constant_kernel_averages() {
        // K ≡ id picks out the mean: F(x) = N^{-n} Σ_y f(x - y) = f̂(0).
        let (g, l) = setup(1, 5, 11);
        let f = random_band_limited(l.clone(), g.clone(), 1, 9);
        let kernel = KernelBlock {
            j: 0,
            grid: g.clone(),
            dim: 1,
            x_rows: 1,
            max_mode_axis: 0,
            mode_count: 1,
            values: vec![Complex64::ONE; g.node_count()],
        };
        let out = apply_via_kernel(&kernel, &f).unwrap();
        let coeffs = forward_transform(&f, l.clone()).unwrap();
        let dc = coeffs.coeff_at(&[0]).unwrap()[0];
        for m in 0..g.node_count() {
            assert!((out.node_value(m)[0] - dc).norm() < 1e-13);
        }
    }

    #[test]
    fn memory_guard_trips() {
        let (g, l) = setup(2, 8, 17);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        let a = zoo::cosine_multiplier(2, 1);
        assert!(matches!(
            kernel_block(&a, &d, 1, g, Some(1024)),
            Err(Error::MemoryGuard { .. })
        ));
    }

    #[test]
    fn double_kernel_symbol_outer_matches_block() {
        let (g, l) = setup(1, 8, 33);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        let a = zoo::cosine_multiplier(1, 1);
        let f = random_band_limited(l.clone(), g.clone(), 1, 10);
        let j = 2;
        let direct = apply_block(&a, &f, &d, j).unwrap();
        let double =
            double_kernel_apply(&a, &f, &d, j, DoubleKernelKind::SymbolOuter, None).unwrap();
        let err = double.sub(&direct).linf_norm();
        assert!(err < 1e-9, "double-kernel kind 1 error {err}");
    }

    #[test]
    fn double_kernel_block_outer_matches_composition() {
        let (g, l) = setup(1, 8, 33);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        let a = zoo::cosine_multiplier(1, 1);
        let f = random_band_limited(l.clone(), g.clone(), 1, 11);
        let j = 2;
        // op[φ_j] op[a] f via spectral composition
        let sampled = SampledSymbol::new(&a, g.clone(), l.clone()).unwrap();
        let coeffs = forward_transform(&f, l.clone()).unwrap();
        let af = apply_op_spectral(&sampled, &coeffs).unwrap();
        let direct = inverse_transform(&phi_multiplier(&d, j, &af).unwrap(), g.clone()).unwrap();
        let double =
            double_kernel_apply(&a, &f, &d, j, DoubleKernelKind::BlockOuter, None).unwrap();
        let err = double.sub(&direct).linf_norm();
        assert!(err < 1e-9, "double-kernel kind 2 error {err}");
    }

    #[test]
    fn double_kernel_kinds_agree_for_x_independent() {
        let (g, l) = setup(1, 8, 33);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        let a = zoo::bracket_power(1, 1, 0.5);
        let f = random_band_limited(l.clone(), g.clone(), 1, 12);
        let one = double_kernel_apply(&a, &f, &d, 2, DoubleKernelKind::SymbolOuter, None).unwrap();
        let two = double_kernel_apply(&a, &f, &d, 2, DoubleKernelKind::BlockOuter, None).unwrap();
        assert!(one.sub(&two).linf_norm() < 1e-11);
    }

    #[test]
    fn double_kernel_of_zero_is_zero() {
        let (g, l) = setup(1, 4, 17);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        let f = GridFunction::zeros(g, 1);
        let out = double_kernel_apply(
            &zoo::cosine_multiplier(1, 1),
            &f,
            &d,
            1,
            DoubleKernelKind::SymbolOuter,
            None,
        )
        .unwrap();
        assert_eq!(out.linf_norm(), 0.0);
    }

    #[test]
    fn commutator_vanishes_exactly_for_multipliers() {
        let (g, l) = setup(1, 8, 17);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        let a = zoo::bracket_power(1, 1, 1.0);
        let f = random_band_limited(l.clone(), g.clone(), 1, 13);
        let out = commutator_block(&a, &f, &d, 3).unwrap();
        assert_eq!(out.linf_norm(), 0.0);
    }

    #[test]
    fn multiplier_orderings_agree_numerically() {
        // Validates the exact-commutation branch: computing both orderings
        // for an x-independent symbol agrees to rounding.
        let (g, l) = setup(1, 8, 17);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        let a = zoo::bracket_power(1, 1, 1.0);
        let f = random_band_limited(l.clone(), g.clone(), 1, 14);
        let sampled = SampledSymbol::new(&a, g.clone(), l.clone()).unwrap();
        let coeffs = forward_transform(&f, l.clone()).unwrap();
        let j = 2;
        let t1 = {
            let loc = phi_multiplier(&d, j, &coeffs).unwrap();
            inverse_transform(&multiplier_apply(&sampled, &loc).unwrap(), g.clone()).unwrap()
        };
        let t2 = {
            let af = multiplier_apply(&sampled, &coeffs).unwrap();
            inverse_transform(&phi_multiplier(&d, j, &af).unwrap(), g).unwrap()
        };
        assert!(t1.sub(&t2).linf_norm() < 1e-13);
    }

    #[test]
    fn commutator_of_multiplication_symbol_matches_two_term_oracle() {
        let (g, l) = setup(1, 8, 33);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        let a = zoo::cosine_multiplier(1, 1);
        let f = random_band_limited(l.clone(), g.clone(), 1, 15);
        let j = 2;
        let commutator = commutator_block(&a, &f, &d, j).unwrap();
        // Oracle: op[φ_j](b f) - b · op[φ_j] f computed with grid products.
        let coeffs = forward_transform(&f, l.clone()).unwrap();
        let bf = GridFunction::from_values(
            g.clone(),
            1,
            (0..g.node_count())
                .map(|m| f.node_value(m)[0] * c(g.axis_coord(m).cos(), 0.0))
                .collect(),
        )
        .unwrap();
        let term_a = inverse_transform(
            &phi_multiplier(&d, j, &forward_transform(&bf, l.clone()).unwrap()).unwrap(),
            g.clone(),
        )
        .unwrap();
        let blocked =
            inverse_transform(&phi_multiplier(&d, j, &coeffs).unwrap(), g.clone()).unwrap();
        let term_b = GridFunction::from_values(
            g.clone(),
            1,
            (0..g.node_count())
                .map(|m| blocked.node_value(m)[0] * c(g.axis_coord(m).cos(), 0.0))
                .collect(),
        )
        .unwrap();
        let oracle = term_a.sub(&term_b);
        assert!(commutator.sub(&oracle).linf_norm() < 1e-11);
    }

    #[test]
    fn operations_are_linear_in_f() {
        let (g, l) = setup(1, 6, 13);
        let d = DyadicDecomposition::standard(l.clone()).unwrap();
        let a = zoo::cosine_multiplier(1, 1);
        let f1 = random_band_limited(l.clone(), g.clone(), 1, 16);
        let f2 = random_band_limited(l.clone(), g.clone(), 1, 17);
        let combo = f1.scale(c(2.0, -1.0)).add(&f2.scale(c(0.0, 0.5)));
        for j in [0usize, 2] {
            let lhs = apply_block(&a, &combo, &d, j).unwrap();
            let rhs = apply_block(&a, &f1, &d, j)
                .unwrap()
                .scale(c(2.0, -1.0))
                .add(&apply_block(&a, &f2, &d, j).unwrap().scale(c(0.0, 0.5)));
            assert!(lhs.sub(&rhs).linf_norm() < 1e-11);
        }
    }

    #[test]
    fn character_difference_inequality() {
        // |e^{i k·η} - 1| <= 2 |k|^θ |η|^θ for θ in (0,1).
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..500 {
            let n = 1 + (rng.random::<u32>() % 3) as usize;
            let k: Vec<i64> = (0..n).map(|_| rng.random_range(-40i64..=40)).collect();
            let eta: Vec<f64> = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
            for theta in [0.25, 0.5, 0.75] {
                let dot: f64 = k.iter().zip(&eta).map(|(&ki, &e)| ki as f64 * e).sum();
                let lhs = (Complex64::from_polar(1.0, dot) - Complex64::ONE).norm();
                let knorm = crate::grid::freq_norm(&k);
                let enorm = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
                let rhs = 2.0 * knorm.powf(theta) * enorm.powf(theta);
                assert!(lhs <= rhs + 1e-12, "k={k:?} eta={eta:?} θ={theta}");
            }
        }
    }

    #[test]
    fn character_norm_equivalence_constant_is_stable() {
        // |η|^N <= C Σ_{|γ|=N} |(e^{-iη}-1)^γ|: measure C over an η-grid and
        // check stability under refinement.
        fn measure(n: usize, ord: u32, pts: usize) -> f64 {
            let grid = TorusGrid::new(n, pts).unwrap();
            let gammas: Vec<Vec<u32>> = crate::multiindex::multi_indices(n, ord)
                .into_iter()
                .filter(|g| crate::multiindex::order(g) == ord)
                .collect();
            let mut worst = 0.0f64;
            for node in 0..grid.node_count() {
                let eta = grid.node(node);
                let enorm = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
                if enorm < 1e-12 {
                    continue;
                }
                let mut sum = 0.0;
                for gamma in &gammas {
                    let mut prod = 1.0;
                    for (axis, &gi) in gamma.iter().enumerate() {
                        let base = (Complex64::from_polar(1.0, -eta[axis]) - Complex64::ONE).norm();
                        prod *= base.powi(gi as i32);
                    }
                    sum += prod;
                }
                worst = worst.max(enorm.powi(ord as i32) / sum);
            }
            worst
        }
        for n in [1usize, 2] {
            for ord in [n as u32, n as u32 + 1] {
                let coarse = measure(n, ord, if n == 1 { 101 } else { 31 });
                let fine = measure(n, ord, if n == 1 { 201 } else { 61 });
                assert!(coarse.is_finite() && fine.is_finite());
                assert!(
                    fine / coarse < 1.25,
                    "C grew too fast under refinement: {coarse} -> {fine} (n={n}, N={ord})"
                );
            }
        }
    }
}
