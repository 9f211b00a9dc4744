//! Operator-valued symbols `a(x, k)` on `T^n × Z^n`, their discrete
//! differences and norms, and a zoo of named constructors.
//!
//! A symbol of order `m` with difference order `ρ` and x-smoothness `r`
//! carries an evaluator for `∂^β_x a(x, k)` up to `|β| <= ⌊r⌋`; the symbol
//! norm combines the weighted difference estimates
//! `⟨k⟩^{|α|-m} ‖Δ^α_k ∂^β_x a(x,k)‖` for `|α| <= ρ` with, for fractional r,
//! a Hölder seminorm in x of exponent `r - ⌊r⌋` taken in the torus metric.
//!
//! Scalar multiples are factored through a `gain` field and applied outside
//! the evaluator, so norm homogeneity `‖c·a‖ = |c|·‖a‖` and operator
//! linearity `op[c·a] = c·op[a]` hold exactly, not merely to rounding.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{bracket, torus_dist, FrequencyLattice, TorusGrid};
use crate::linalg::CMat;
use crate::multiindex::{multi_binomial, multi_indices, order, sub_indices};

type EvalFn = dyn Fn(&[f64], &[i64], &[u32]) -> CMat + Send + Sync;

/// Operator-valued symbol with class metadata `(m, ρ, r)`.
#[derive(Clone)]
pub struct Symbol {
    n: usize,
    d: usize,
    order: f64,
    rho: u32,
    smoothness: f64,
    x_independent: bool,
    x_bandwidth: Option<i64>,
    gain: f64,
    name: String,
    eval: Arc<EvalFn>,
}

impl std::fmt::Debug for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Symbol")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("d", &self.d)
            .field("order", &self.order)
            .field("rho", &self.rho)
            .field("smoothness", &self.smoothness)
            .field("gain", &self.gain)
            .finish()
    }
}

impl Symbol {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        n: usize,
        d: usize,
        order: f64,
        rho: u32,
        smoothness: f64,
        x_independent: bool,
        x_bandwidth: Option<i64>,
        eval: Arc<EvalFn>,
    ) -> Result<Self> {
        if smoothness < 0.0 {
            return Err(Error::InvalidParameter("smoothness r must be >= 0".into()));
        }
        if rho < n as u32 + 1 {
            return Err(Error::InvalidParameter(format!(
                "difference order rho = {rho} must be >= n + 1 = {}",
                n + 1
            )));
        }
        Ok(Symbol {
            n,
            d,
            order,
            rho,
            smoothness,
            x_independent,
            x_bandwidth,
            gain: 1.0,
            name: name.into(),
            eval,
        })
    }

    pub fn dim_x(&self) -> usize {
        self.n
    }

    pub fn fiber_dim(&self) -> usize {
        self.d
    }

    /// Symbol order m.
    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn rho(&self) -> u32 {
        self.rho
    }

    /// x-smoothness r.
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn is_x_independent(&self) -> bool {
        self.x_independent
    }

    /// Per-axis frequency content of the x-dependence, when band-limited.
    /// `Some(0)` for x-independent symbols.
    pub fn x_bandwidth(&self) -> Option<i64> {
        self.x_bandwidth
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `∂^β_x a(x, k)`, including the scalar gain.
    pub fn eval(&self, x: &[f64], k: &[i64], beta: &[u32]) -> CMat {
        let raw = (self.eval)(x, k, beta);
        if self.gain == 1.0 {
            raw
        } else {
            raw.scale(Complex64::new(self.gain, 0.0))
        }
    }

    /// Evaluator output without the gain; operator application and norms use
    /// this and factor the gain through exactly.
    pub fn eval_unscaled(&self, x: &[f64], k: &[i64], beta: &[u32]) -> CMat {
        (self.eval)(x, k, beta)
    }

    /// Exact scalar multiple: the factor is tracked separately and applied
    /// through linear operations, never baked into evaluator rounding.
    pub fn scaled(&self, c: f64) -> Symbol {
        let mut out = self.clone();
        out.gain *= c;
        out.name = format!("{}*{}", c, self.name);
        out
    }

    /// Override the declared smoothness. The evaluator must support
    /// `|β| <= ⌊r⌋` for the new value.
    pub fn with_smoothness(mut self, r: f64) -> Self {
        self.smoothness = r;
        self
    }

    /// The same symbol with gain reset to 1; ratio experiments factor the
    /// gain out of norms rather than dividing it back (division rounds).
    pub(crate) fn without_gain(&self) -> Symbol {
        let mut out = self.clone();
        out.gain = 1.0;
        out
    }

    pub fn with_rho(mut self, rho: u32) -> Self {
        self.rho = rho;
        self
    }

    /// Pointwise sum. Gains are folded into the combined evaluator; class
    /// metadata takes the weaker of the two declarations.
    pub fn add(&self, other: &Symbol) -> Result<Symbol> {
        if self.n != other.n || self.d != other.d {
            return Err(Error::DimensionMismatch {
                context: "symbol addition",
                expected: self.d,
                got: other.d,
            });
        }
        let (a, b) = (self.clone(), other.clone());
        let ga = Complex64::new(a.gain, 0.0);
        let gb = Complex64::new(b.gain, 0.0);
        let ea = a.eval.clone();
        let eb = b.eval.clone();
        Symbol::new(
            format!("{}+{}", a.name, b.name),
            self.n,
            self.d,
            self.order.max(other.order),
            self.rho.min(other.rho),
            self.smoothness.min(other.smoothness),
            self.x_independent && other.x_independent,
            match (self.x_bandwidth, other.x_bandwidth) {
                (Some(p), Some(q)) => Some(p.max(q)),
                _ => None,
            },
            Arc::new(move |x, k, beta| ea(x, k, beta).scale(ga).add(&eb(x, k, beta).scale(gb))),
        )
    }

    /// Multiply by `⟨k⟩^{m0}`, shifting the declared order to `m + m0`.
    /// x-derivatives commute with the weight.
    pub fn bracket_weighted(&self, m0: f64) -> Symbol {
        if m0 == 0.0 {
            return self.clone();
        }
        let base = self.eval.clone();
        let mut out = self.clone();
        out.order += m0;
        out.name = format!("<k>^{}*{}", m0, self.name);
        out.eval = Arc::new(move |x: &[f64], k: &[i64], beta: &[u32]| {
            base(x, k, beta).scale(Complex64::new(bracket(k).powf(m0), 0.0))
        });
        out
    }
}

/// Dense table `k -> C^{d×d}` over a symmetric frequency cube.
#[derive(Debug, Clone)]
pub struct LatticeTable {
    domain: FrequencyLattice,
    dim: usize,
    values: Vec<CMat>,
}

impl LatticeTable {
    pub fn from_fn<F>(domain: FrequencyLattice, dim: usize, f: F) -> Self
    where
        F: Fn(&[i64]) -> CMat + Sync,
    {
        let values: Vec<CMat> = (0..domain.len())
            .into_par_iter()
            .map(|flat| {
                let m = f(&domain.member(flat));
                debug_assert_eq!(m.dim(), dim);
                m
            })
            .collect();
        LatticeTable {
            domain,
            dim,
            values,
        }
    }

    pub fn domain(&self) -> &FrequencyLattice {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: &[i64]) -> &CMat {
        let flat = self.domain.flat_index(k).unwrap_or_else(|| {
            panic!(
                "frequency {k:?} outside table radius {}",
                self.domain.kmax()
            )
        });
        &self.values[flat]
    }
}

/// Single-axis forward difference `Δ_{k_axis} f(k) = f(k + δ_axis) - f(k)`,
/// shrinking the table radius by one.
pub fn axis_difference(table: &LatticeTable, axis: usize) -> Result<LatticeTable> {
    let radius = table.domain().kmax();
    if radius < 1 {
        return Err(Error::InsufficientMargin { needed: 1, have: 0 });
    }
    let out_domain = FrequencyLattice::new(table.domain().dim(), radius - 1)?;
    let values: Vec<CMat> = (0..out_domain.len())
        .map(|flat| {
            let k = out_domain.member(flat);
            let mut shifted = k.clone();
            shifted[axis] += 1;
            table.get(&shifted).sub(table.get(&k))
        })
        .collect();
    Ok(LatticeTable {
        domain: out_domain,
        dim: table.dim,
        values,
    })
}

/// `Δ^α_k f` as the literal composition of single-axis forward differences
/// (axis 0 first). The output radius shrinks by `|α|`.
pub fn discrete_difference(table: &LatticeTable, alpha: &[u32]) -> Result<LatticeTable> {
    assert_eq!(alpha.len(), table.domain().dim());
    let shrink = order(alpha) as i64;
    if table.domain().kmax() < shrink {
        return Err(Error::InsufficientMargin {
            needed: shrink,
            have: table.domain().kmax(),
        });
    }
    let mut cur = table.clone();
    for (axis, &count) in alpha.iter().enumerate() {
        for _ in 0..count {
            cur = axis_difference(&cur, axis)?;
        }
    }
    Ok(cur)
}

/// Max residual of the discrete Leibniz expansion
/// `Δ^α(fg)(k) = Σ_{β<=α} binom(α,β) (Δ^β f)(k) (Δ^{α-β} g)(k+β)`
/// over the valid output box. Both tables must share domain and fiber.
pub fn discrete_leibniz_check(f: &LatticeTable, g: &LatticeTable, alpha: &[u32]) -> Result<f64> {
    if f.domain() != g.domain() || f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            context: "leibniz check tables",
            expected: f.dim(),
            got: g.dim(),
        });
    }
    let product = LatticeTable::from_fn(f.domain().clone(), f.dim(), |k| f.get(k).matmul(g.get(k)));
    let lhs = discrete_difference(&product, alpha)?;

    let mut diff_f = BTreeMap::new();
    let mut diff_g = BTreeMap::new();
    for beta in sub_indices(alpha) {
        let complement: Vec<u32> = alpha.iter().zip(&beta).map(|(&a, &b)| a - b).collect();
        diff_f.insert(beta.clone(), discrete_difference(f, &beta)?);
        diff_g.insert(complement.clone(), discrete_difference(g, &complement)?);
    }

    let out_domain = lhs.domain().clone();
    let mut worst = 0.0f64;
    for flat in 0..out_domain.len() {
        let k = out_domain.member(flat);
        let mut rhs = CMat::zeros(f.dim());
        for beta in sub_indices(alpha) {
            let complement: Vec<u32> = alpha.iter().zip(&beta).map(|(&a, &b)| a - b).collect();
            let shifted: Vec<i64> = k
                .iter()
                .zip(&beta)
                .map(|(&ki, &bi)| ki + bi as i64)
                .collect();
            let weight = multi_binomial(alpha, &beta);
            let term = diff_f[&beta]
                .get(&k)
                .matmul(diff_g[&complement].get(&shifted))
                .scale(Complex64::new(weight, 0.0));
            rhs = rhs.add(&term);
        }
        worst = worst.max(lhs.get(&k).sub(&rhs).op_norm());
    }
    Ok(worst)
}

/// Where the integer-part supremum of the symbol norm was attained.
#[derive(Debug, Clone)]
pub struct NormArgmax {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub x_node: usize,
    pub k: Vec<i64>,
}

/// Result of evaluating `‖a‖_m^{(ρ,r)}` over the truncated domain.
///
/// Finite sampling makes this a lower bound of the true supremum; tests that
/// are tolerance-sensitive compare like-for-like discretizations.
#[derive(Debug, Clone)]
pub struct SymbolNormReport {
    pub value: f64,
    pub integer_part: f64,
    pub holder_part: f64,
    pub argmax: Option<NormArgmax>,
    /// Max of the weighted difference over everything else, per α.
    pub per_alpha: Vec<(Vec<u32>, f64)>,
}

/// Evaluate the symbol norm over `grid × lattice`, enlarging the lattice by
/// ρ internally so differences are defined everywhere.
pub fn symbol_norm(
    a: &Symbol,
    lattice: &FrequencyLattice,
    grid: &TorusGrid,
) -> Result<SymbolNormReport> {
    symbol_norm_capped(a, lattice, grid, a.smoothness())
}

/// Same as [`symbol_norm`] with the x-regularity capped at `r_cap` (for the
/// `(ρ, 0)`-norm entering kernel estimates use `r_cap = 0`).
pub fn symbol_norm_capped(
    a: &Symbol,
    lattice: &FrequencyLattice,
    grid: &TorusGrid,
    r_cap: f64,
) -> Result<SymbolNormReport> {
    if lattice.dim() != a.dim_x() || grid.dim() != a.dim_x() {
        return Err(Error::DimensionMismatch {
            context: "symbol norm domain",
            expected: a.dim_x(),
            got: lattice.dim(),
        });
    }
    let r = a.smoothness().min(r_cap);
    if r < 0.0 {
        return Err(Error::InvalidParameter("r must be >= 0".into()));
    }
    let n = a.dim_x();
    let rho = a.rho();
    let m = a.order();
    let floor_r = r.floor() as u32;
    let frac = r - r.floor();
    let enlarged = FrequencyLattice::new(n, lattice.kmax() + rho as i64)?;
    let alphas = multi_indices(n, rho);
    let betas = multi_indices(n, floor_r);
    let nodes = grid.node_count();

    // Integer part: max over (α, β, x, k), parallel over x with a
    // deterministic sequential merge.
    struct Best {
        value: f64,
        arg: Option<NormArgmax>,
        per_alpha: Vec<f64>,
    }
    let per_x: Vec<Best> = (0..nodes)
        .into_par_iter()
        .map(|x_node| {
            let x = grid.node(x_node);
            let mut best = Best {
                value: 0.0,
                arg: None,
                per_alpha: vec![0.0; alphas.len()],
            };
            for beta in &betas {
                let row = LatticeTable::from_fn(enlarged.clone(), a.fiber_dim(), |k| {
                    a.eval_unscaled(&x, k, beta)
                });
                for (ai, alpha) in alphas.iter().enumerate() {
                    let diff = discrete_difference(&row, alpha).expect("margin by construction");
                    for flat in 0..lattice.len() {
                        let k = lattice.member(flat);
                        let w = bracket(&k).powf(order(alpha) as f64 - m) * diff.get(&k).op_norm();
                        if w > best.per_alpha[ai] {
                            best.per_alpha[ai] = w;
                        }
                        if w > best.value {
                            best.value = w;
                            best.arg = Some(NormArgmax {
                                alpha: alpha.clone(),
                                beta: beta.clone(),
                                x_node,
                                k,
                            });
                        }
                    }
                }
            }
            best
        })
        .collect();

    let mut integer_part = 0.0f64;
    let mut argmax = None;
    let mut per_alpha_max = vec![0.0f64; alphas.len()];
    for b in &per_x {
        for (acc, v) in per_alpha_max.iter_mut().zip(&b.per_alpha) {
            if v > acc {
                *acc = *v;
            }
        }
        if b.value > integer_part {
            integer_part = b.value;
            argmax = b.arg.clone();
        }
    }

    // Hölder seminorm for fractional r: |β| = ⌊r⌋, sup over x != y of the
    // weighted difference quotient in the torus metric.
    let mut holder_part = 0.0f64;
    if frac > 0.0 {
        let top_betas: Vec<Vec<u32>> = betas
            .iter()
            .filter(|b| order(b) == floor_r)
            .cloned()
            .collect();
        let coords: Vec<Vec<f64>> = (0..nodes).map(|i| grid.node(i)).collect();
        for beta in &top_betas {
            for alpha in &alphas {
                let weight_exp = order(alpha) as f64 - m;
                // Per-k column of Δ^α ∂^β a over all x, then pairwise sup.
                let col_max: Vec<f64> = (0..lattice.len())
                    .into_par_iter()
                    .map(|flat| {
                        let k = lattice.member(flat);
                        let col: Vec<CMat> = coords
                            .iter()
                            .map(|x| {
                                let row = LatticeTable::from_fn(
                                    FrequencyLattice::new(n, order(alpha) as i64).unwrap(),
                                    a.fiber_dim(),
                                    |off| {
                                        let shifted: Vec<i64> =
                                            k.iter().zip(off).map(|(&ki, &oi)| ki + oi).collect();
                                        a.eval_unscaled(x, &shifted, beta)
                                    },
                                );
                                discrete_difference(&row, alpha)
                                    .expect("margin by construction")
                                    .get(&vec![0; n])
                                    .clone()
                            })
                            .collect();
                        let kw = bracket(&k).powf(weight_exp);
                        let mut best = 0.0f64;
                        for i in 0..nodes {
                            for l in (i + 1)..nodes {
                                let dist = torus_dist(&coords[i], &coords[l]);
                                if dist == 0.0 {
                                    continue;
                                }
                                let q = kw * col[i].sub(&col[l]).op_norm() / dist.powf(frac);
                                if q > best {
                                    best = q;
                                }
                            }
                        }
                        best
                    })
                    .collect();
                for v in col_max {
                    if v > holder_part {
                        holder_part = v;
                    }
                }
            }
        }
    }

    let g = a.gain().abs();
    Ok(SymbolNormReport {
        value: g * (integer_part + holder_part),
        integer_part: g * integer_part,
        holder_part: g * holder_part,
        argmax,
        per_alpha: alphas
            .into_iter()
            .zip(per_alpha_max)
            .map(|(al, v)| (al, g * v))
            .collect(),
    })
}

/// Max Hölder difference quotient of `x -> a(x, k0)` at the given exponent
/// over grid pairs (k0 = 0). Diagnostic for multiplication symbols.
pub fn holder_quotient(a: &Symbol, grid: &TorusGrid, exponent: f64) -> f64 {
    let n = a.dim_x();
    let k0 = vec![0i64; n];
    let beta0 = vec![0u32; n];
    let nodes = grid.node_count();
    let coords: Vec<Vec<f64>> = (0..nodes).map(|i| grid.node(i)).collect();
    let vals: Vec<CMat> = coords.iter().map(|x| a.eval(x, &k0, &beta0)).collect();
    let best: Vec<f64> = (0..nodes)
        .into_par_iter()
        .map(|i| {
            let mut b = 0.0f64;
            for l in (i + 1)..nodes {
                let dist = torus_dist(&coords[i], &coords[l]);
                if dist == 0.0 {
                    continue;
                }
                let q = vals[i].sub(&vals[l]).op_norm() / dist.powf(exponent);
                if q > b {
                    b = q;
                }
            }
            b
        })
        .collect();
    best.into_iter().fold(0.0, f64::max)
}

/// Named symbol constructors.
pub mod zoo {
    use super::*;

    fn scalar_eval<F>(d: usize, f: F) -> Arc<EvalFn>
    where
        F: Fn(&[f64], &[i64], &[u32]) -> Complex64 + Send + Sync + 'static,
    {
        Arc::new(move |x, k, beta| CMat::scalar(d, f(x, k, beta)))
    }

    /// `a(x, k) = id`, the identity symbol of order 0.
    pub fn identity(n: usize, d: usize) -> Symbol {
        Symbol::new(
            "identity",
            n,
            d,
            0.0,
            n as u32 + 1,
            2.0,
            true,
            Some(0),
            scalar_eval(d, |_, _, beta| {
                if order(beta) == 0 {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                }
            }),
        )
        .expect("identity symbol parameters are valid")
    }

    /// The zero symbol.
    pub fn zero(n: usize, d: usize) -> Symbol {
        Symbol::new(
            "zero",
            n,
            d,
            0.0,
            n as u32 + 1,
            2.0,
            true,
            Some(0),
            scalar_eval(d, |_, _, _| Complex64::ZERO),
        )
        .expect("zero symbol parameters are valid")
    }

    /// Smooth multiplier `a(k) = ⟨k⟩^m · id` of order m.
    pub fn bracket_power(n: usize, d: usize, m: f64) -> Symbol {
        Symbol::new(
            format!("bracket_power(m={m})"),
            n,
            d,
            m,
            n as u32 + 1,
            2.0,
            true,
            Some(0),
            scalar_eval(d, move |_, k, beta| {
                if order(beta) == 0 {
                    Complex64::new(bracket(k).powf(m), 0.0)
                } else {
                    Complex64::ZERO
                }
            }),
        )
        .expect("bracket power parameters are valid")
    }

    /// Derivative multiplier `a(k) = i k_1 · id`, order 1 (the symbol of
    /// ∂/∂x_1).
    pub fn first_derivative(n: usize, d: usize) -> Symbol {
        Symbol::new(
            "first_derivative",
            n,
            d,
            1.0,
            n as u32 + 1,
            2.0,
            true,
            Some(0),
            scalar_eval(d, |_, k, beta| {
                if order(beta) == 0 {
                    Complex64::new(0.0, k[0] as f64)
                } else {
                    Complex64::ZERO
                }
            }),
        )
        .expect("derivative multiplier parameters are valid")
    }

    /// Multiplication operator `a(x, k) = b(x)`: the quantization acts as
    /// `f -> b·f`. The closure must return `∂^β b(x)`.
    pub fn multiplication<F>(
        name: impl Into<String>,
        n: usize,
        d: usize,
        smoothness: f64,
        x_bandwidth: Option<i64>,
        b: F,
    ) -> Symbol
    where
        F: Fn(&[f64], &[u32]) -> Complex64 + Send + Sync + 'static,
    {
        Symbol::new(
            name,
            n,
            d,
            0.0,
            n as u32 + 1,
            smoothness,
            false,
            x_bandwidth,
            scalar_eval(d, move |x, _, beta| b(x, beta)),
        )
        .expect("multiplication symbol parameters are valid")
    }

    /// `b(x) = cos(x_1)` as a multiplication symbol; derivatives in closed
    /// form (phase shifts by π/2 along axis 1).
    pub fn cosine_multiplier(n: usize, d: usize) -> Symbol {
        multiplication("cosine", n, d, 2.0, Some(1), |x, beta| {
            if beta.iter().skip(1).any(|&b| b > 0) {
                return Complex64::ZERO;
            }
            let q = beta[0] as f64;
            Complex64::new((x[0] + q * std::f64::consts::FRAC_PI_2).cos(), 0.0)
        })
    }

    /// Weierstrass-type rough multiplier
    /// `b_r(x) = Σ_{j<=J} 2^{-j r} cos(2^j x_1) · id`, Hölder exponent
    /// `r ∈ (0, 1)`, x-bandwidth `2^J`.
    pub fn weierstrass(n: usize, d: usize, r: f64, levels: u32) -> Result<Symbol> {
        if !(0.0..1.0).contains(&r) || r == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "weierstrass exponent must lie in (0,1), got {r}"
            )));
        }
        let bandwidth = 1i64 << levels;
        Ok(multiplication(
            format!("weierstrass(r={r},J={levels})"),
            n,
            d,
            r,
            Some(bandwidth),
            move |x, beta| {
                if beta.iter().skip(1).any(|&b| b > 0) {
                    return Complex64::ZERO;
                }
                let q = beta[0];
                let mut acc = 0.0f64;
                for j in 0..=levels {
                    let freq = (1u64 << j) as f64;
                    let amp = 2.0f64.powf(-(j as f64) * r) * freq.powi(q as i32);
                    acc += amp * (freq * x[0] + q as f64 * std::f64::consts::FRAC_PI_2).cos();
                }
                Complex64::new(acc, 0.0)
            },
        ))
    }

    /// Genuinely operator-valued d = 2 symbol
    /// `a(x, k) = R(x_1) · diag(⟨k⟩^m, 1) · R(x_1)^{-1}` with `R` a rotation.
    /// Derivatives in x_1 come from the phase-shift form of R' via the
    /// Leibniz rule.
    pub fn rotation_conjugated(n: usize, m: f64, smoothness: f64) -> Symbol {
        fn rot(theta: f64) -> CMat {
            CMat::from_rows(
                2,
                vec![
                    Complex64::new(theta.cos(), 0.0),
                    Complex64::new(-theta.sin(), 0.0),
                    Complex64::new(theta.sin(), 0.0),
                    Complex64::new(theta.cos(), 0.0),
                ],
            )
        }
        Symbol::new(
            format!("rotation(m={m})"),
            n,
            2,
            m,
            n as u32 + 1,
            smoothness,
            false,
            Some(2),
            Arc::new(move |x: &[f64], k: &[i64], beta: &[u32]| {
                if beta.iter().skip(1).any(|&b| b > 0) {
                    return CMat::zeros(2);
                }
                let q = beta[0];
                let theta = x[0];
                let mut diag = CMat::zeros(2);
                diag.set(0, 0, Complex64::new(bracket(k).powf(m), 0.0));
                diag.set(1, 1, Complex64::ONE);
                // ∂^q [R(θ) D R(-θ)] = Σ_i C(q,i) R(θ+iπ/2) D (-1)^{q-i} R(-θ+(q-i)π/2)
                let mut acc = CMat::zeros(2);
                for i in 0..=q {
                    let left = rot(theta + i as f64 * std::f64::consts::FRAC_PI_2);
                    let right = rot(-theta + (q - i) as f64 * std::f64::consts::FRAC_PI_2);
                    let sign = if (q - i).is_multiple_of(2) { 1.0 } else { -1.0 };
                    let w = crate::multiindex::binomial(q, i) * sign;
                    acc = acc.add(
                        &left
                            .matmul(&diag)
                            .matmul(&right)
                            .scale(Complex64::new(w, 0.0)),
                    );
                }
                acc
            }),
        )
        .expect("rotation symbol parameters are valid")
    }

    /// Look a zoo symbol up by name with numeric parameters; used by the
    /// CLI config layer.
    ///
    /// Recognized names: `identity`, `zero`, `bracket_power` (param `m`),
    /// `first_derivative`, `cosine` (optional `r`), `weierstrass` (params
    /// `r`, `levels`), `rotation` (params `m`, `r`; forces d = 2).
    /// All accept an optional `scale`.
    pub fn from_name(
        name: &str,
        n: usize,
        d: usize,
        params: &BTreeMap<String, f64>,
    ) -> Result<Symbol> {
        let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
        let mut sym = match name {
            "identity" => identity(n, d),
            "zero" => zero(n, d),
            "bracket_power" => bracket_power(n, d, get("m", 1.0)),
            "first_derivative" => first_derivative(n, d),
            "cosine" => cosine_multiplier(n, d).with_smoothness(get("r", 2.0)),
            "weierstrass" => weierstrass(n, d, get("r", 0.5), get("levels", 6.0) as u32)?,
            "rotation" => {
                if d != 2 {
                    return Err(Error::InvalidParameter(format!(
                        "rotation symbol requires d = 2, got {d}"
                    )));
                }
                rotation_conjugated(n, get("m", 0.0), get("r", 1.0))
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown symbol name: {other}"
                )))
            }
        };
        if let Some(&c) = params.get("scale") {
            sym = sym.scaled(c);
        }
        Ok(sym)
    }
}
