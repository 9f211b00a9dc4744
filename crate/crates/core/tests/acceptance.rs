//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities (visible with `--nocapture`).
//!
//! Conventions: every tolerance is pinned here, and random families are
//! seeded so reruns are bit-identical.

use std::sync::Arc;

use num_complex::Complex64;

use torbesov::besov::{aggregate, besov_norm, besov_norm_derivative_form, BesovParams, Exponent};
use torbesov::dyadic::{verify_dyadic, DyadicDecomposition};
use torbesov::estimates::{
    block_estimate_experiment, commutator_decay_experiment, kernel_bound_experiment,
    nyquist_points, operator_norm_experiment, trial_coeffs, young_experiment, BlockEstimateParams,
    CommutatorParams, FamilySpec, KernelBoundParams, OpNormParams, YoungParams,
};
use torbesov::grid::{
    forward_transform, inverse_transform, FrequencyLattice, GridFunction, TorusGrid,
};
use torbesov::operator::{apply_block, apply_op, apply_via_kernel, commutator_block, kernel_block};
use torbesov::symbol::{zoo, Symbol};

const EXACT: f64 = 1e-10;

fn grid_and_lattice(
    n: usize,
    kmax: i64,
    bandwidth: i64,
) -> (Arc<TorusGrid>, Arc<FrequencyLattice>) {
    (
        Arc::new(TorusGrid::new(n, nyquist_points(kmax, bandwidth)).unwrap()),
        Arc::new(FrequencyLattice::new(n, kmax).unwrap()),
    )
}

fn random_band_limited(
    decomp: &DyadicDecomposition,
    grid: Arc<TorusGrid>,
    dim: usize,
    seed: u64,
) -> GridFunction {
    let spec = FamilySpec::flat(dim, seed);
    inverse_transform(&trial_coeffs(&spec, decomp, 0), grid).unwrap()
}

/// Order-0 genuinely operator-valued symbol: conjugating a non-scalar
/// diagonal keeps the matrices non-commuting after the ⟨k⟩^{-1} reweighting
/// (diag(⟨k⟩^0, 1) would collapse to the identity).
fn noncommuting_symbol(n: usize) -> Symbol {
    zoo::rotation_conjugated(n, 1.0, 1.0).bracket_weighted(-1.0)
}

/// The four acceptance symbols at a given dimension pair.
fn acceptance_symbols(n: usize, d: usize) -> Vec<Symbol> {
    let mut out = vec![zoo::identity(n, d), zoo::bracket_power(n, d, 1.0)];
    out.push(zoo::weierstrass(n, d, 0.5, 6).unwrap());
    if d == 2 {
        out.push(noncommuting_symbol(n));
    } else {
        out.push(zoo::cosine_multiplier(n, d));
    }
    out
}

// ───────────────────────── criterion 1: exact identities ─────────────────────────

#[test]
fn acceptance_1_exact_identities() {
    // (n, d, kmax) combinations within the stated envelope.
    for (n, d, kmax) in [(1usize, 1usize, 16i64), (1, 2, 16), (2, 1, 8), (2, 2, 8)] {
        let mult_symbol = if d == 2 {
            noncommuting_symbol(n)
        } else {
            zoo::cosine_multiplier(n, d)
        };
        let bandwidth = mult_symbol.x_bandwidth().unwrap();
        let (grid, lattice) = grid_and_lattice(n, kmax, bandwidth);
        let decomp = DyadicDecomposition::standard(lattice.clone()).unwrap();
        let f = random_band_limited(&decomp, grid.clone(), d, 91 + n as u64 * 10 + d as u64);

        // op[id] f = f
        let id = zoo::identity(n, d);
        let residual = apply_op(&id, &f, lattice.clone(), None)
            .unwrap()
            .sub(&f)
            .linf_norm();
        assert!(
            residual <= EXACT,
            "op[id] residual {residual} at n={n} d={d}"
        );

        // op[b(x)·id] f = b·f for the scalar multiplication symbol
        let cosine = zoo::cosine_multiplier(n, d);
        let applied = apply_op(&cosine, &f, lattice.clone(), None).unwrap();
        let mut mult_residual = 0.0f64;
        for node in 0..grid.node_count() {
            let b = Complex64::new(grid.node(node)[0].cos(), 0.0);
            for comp in 0..d {
                let want = f.node_value(node)[comp] * b;
                mult_residual = mult_residual.max((applied.node_value(node)[comp] - want).norm());
            }
        }
        assert!(
            mult_residual <= EXACT,
            "multiplication residual {mult_residual} at n={n} d={d}"
        );

        // Σ_j op[a] op[φ_j] f = op[a] f for every acceptance symbol that
        // fits the geometry margin.
        for a in [&id, &mult_symbol] {
            let direct = apply_op(a, &f, lattice.clone(), None).unwrap();
            let rebuilt = apply_op(a, &f, lattice.clone(), Some(&decomp)).unwrap();
            let rec = direct.sub(&rebuilt).linf_norm();
            assert!(
                rec <= EXACT,
                "partition reconstruction {rec} for {} at n={n} d={d}",
                a.name()
            );
        }

        // Kernel path vs frequency path on an interior block: alias-free
        // because N >= max_mode + kmax + 1.
        let j = if n == 1 { 2 } else { 1 };
        for a in [&id, &mult_symbol] {
            let freq = apply_block(a, &f, &decomp, j).unwrap();
            let kern = kernel_block(a, &decomp, j, grid.clone(), None).unwrap();
            assert!(
                kern.max_mode_axis + kmax + 1 <= grid.points_per_axis() as i64,
                "margin violated in test setup"
            );
            let conv = apply_via_kernel(&kern, &f).unwrap();
            let dual = freq.sub(&conv).linf_norm();
            assert!(
                dual <= EXACT,
                "kernel vs frequency {dual} for {} at n={n} d={d}",
                a.name()
            );
        }
        println!("[PASS] criterion 1 (n={n}, d={d}, kmax={kmax}): identities within {EXACT:.0e}");
    }
}

// ───────────────────────── criterion 2: dyadic validity ─────────────────────────

#[test]
fn acceptance_2_dyadic_validity() {
    for n in [1usize, 2] {
        let lattice = Arc::new(FrequencyLattice::new(n, 64).unwrap());
        let decomp = DyadicDecomposition::standard(lattice).unwrap();
        let rho_check = n as u32 + 1;
        let report = verify_dyadic(&decomp, rho_check).unwrap();
        assert!(report.support_ok, "support containment failed at n={n}");
        assert!(
            report.partition_max_err <= 1e-12,
            "partition error {} at n={n}",
            report.partition_max_err
        );
        for ar in &report.alpha_reports {
            assert!(
                ar.window.pass,
                "difference bound not j-uniform for α={:?} at n={n}: ratio {}",
                ar.alpha, ar.window.ratio
            );
        }
        assert!(report.pass);
        println!(
            "[PASS] criterion 2 (n={n}): partition err {:.2e}, {} α-bounds uniform",
            report.partition_max_err,
            report.alpha_reports.len()
        );
    }
}

// ───────────────────────── criterion 3: kernel estimate ─────────────────────────

#[test]
fn acceptance_3_kernel_estimate() {
    let kmax = 256i64;
    let lattice = Arc::new(FrequencyLattice::new(1, kmax).unwrap());
    let grid = Arc::new(TorusGrid::new(1, 513).unwrap());
    let decomp = DyadicDecomposition::standard(lattice).unwrap();
    let params = KernelBoundParams {
        j_lo: 2,
        j_hi: 8,
        theta: 0.5,
        growth_factor: 2.0,
    };
    for a in acceptance_symbols(1, 1) {
        let report = kernel_bound_experiment(&a, &decomp, grid.clone(), &params).unwrap();
        let series = report.series_values("C_j");
        assert_eq!(series.len(), 7);
        for (j, c) in &series {
            assert!(c.is_finite() && *c > 0.0, "C_{j} = {c} for {}", a.name());
        }
        let window = report.verdict("non_growing").unwrap();
        assert!(
            window.pass,
            "kernel constants grew for {}: ratio {}",
            a.name(),
            window.measured
        );
        println!(
            "[PASS] criterion 3 ({}): C_j in [{:.3}, {:.3}], window ratio {:.3}",
            a.name(),
            series.iter().map(|(_, c)| *c).fold(f64::MAX, f64::min),
            series.iter().map(|(_, c)| *c).fold(0.0, f64::max),
            window.measured
        );
    }
    // d = 2 operator-valued symbol at the same truncation.
    let matrix_symbol = noncommuting_symbol(1);
    let report = kernel_bound_experiment(&matrix_symbol, &decomp, grid.clone(), &params).unwrap();
    assert!(report.all_pass(), "{:?}", report.verdicts);
    println!(
        "[PASS] criterion 3 (non-commuting d=2): window ratio {:.3}",
        report.verdict("non_growing").unwrap().measured
    );

    // Frozen regression: identity constants at this configuration.
    let identity_report =
        kernel_bound_experiment(&zoo::identity(1, 1), &decomp, grid, &params).unwrap();
    let c2 = identity_report.series_values("C_j")[0].1;
    assert!(
        (c2 - 7.440_734_427_534).abs() < 1e-6,
        "identity C_2 regressed: {c2}"
    );
}

// ───────────────────────── criterion 4: Young bounds ─────────────────────────

#[test]
fn acceptance_4_young_bounds() {
    let report = young_experiment(&YoungParams {
        n: 1,
        kmax: 8,
        trials: 100,
        seed: 2024,
    })
    .unwrap();
    let verdict = report.verdict("zero_violations").unwrap();
    assert!(verdict.pass, "violations: {}", verdict.measured);
    assert!(report.verdict("double_sharp_equality").unwrap().pass);
    println!(
        "[PASS] criterion 4: 100 trials × {{1, 2, ∞}} × {{single, double}}, zero violations ({})",
        verdict.detail
    );
}

// ───────────────────────── criterion 5: block estimate ─────────────────────────

#[test]
fn acceptance_5_block_estimate() {
    let kmax = 256i64;
    let lattice = Arc::new(FrequencyLattice::new(1, kmax).unwrap());
    let decomp = DyadicDecomposition::standard(lattice).unwrap();
    for a in acceptance_symbols(1, 1) {
        let bandwidth = a.x_bandwidth().unwrap_or(0);
        let grid = Arc::new(TorusGrid::new(1, nyquist_points(kmax, bandwidth)).unwrap());
        for p in [Exponent::two(), Exponent::infinity()] {
            let params = BlockEstimateParams {
                j_lo: 2,
                j_hi: 8,
                p,
                trials: 4,
                seed: 55,
                growth_factor: 2.0,
                denominator_guard: 1e-14,
            };
            let report = block_estimate_experiment(&a, &decomp, grid.clone(), &params).unwrap();
            let window = report.verdict("non_growing").unwrap();
            assert!(
                window.pass,
                "block ratios grew for {} at p={p}: {}",
                a.name(),
                window.measured
            );
            assert!(report.verdict("all_finite").unwrap().pass);
            println!(
                "[PASS] criterion 5 ({}, p={p}): window ratio {:.3}",
                a.name(),
                window.measured
            );
        }
    }
    // Operator-valued symbol, d = 2.
    let matrix_symbol = noncommuting_symbol(1);
    let grid = Arc::new(TorusGrid::new(1, nyquist_points(kmax, 2)).unwrap());
    for p in [Exponent::two(), Exponent::infinity()] {
        let params = BlockEstimateParams {
            j_lo: 2,
            j_hi: 8,
            p,
            trials: 3,
            seed: 56,
            growth_factor: 2.0,
            denominator_guard: 1e-14,
        };
        let report =
            block_estimate_experiment(&matrix_symbol, &decomp, grid.clone(), &params).unwrap();
        assert!(
            report.all_pass(),
            "matrix symbol p={p}: {:?}",
            report.verdicts
        );
    }
    println!("[PASS] criterion 5 (non-commuting d=2, p ∈ {{2, ∞}})");
}

// ──────────────────────── criterion 6: commutator decay ────────────────────────

#[test]
fn acceptance_6_commutator_decay() {
    let kmax = 256i64;
    let lattice = Arc::new(FrequencyLattice::new(1, kmax).unwrap());
    let decomp = DyadicDecomposition::standard(lattice.clone()).unwrap();
    let a = zoo::weierstrass(1, 1, 0.5, 6).unwrap();
    let grid = Arc::new(TorusGrid::new(1, nyquist_points(kmax, 64)).unwrap());
    let params = CommutatorParams {
        j_lo: 3,
        j_hi: 7,
        p: Exponent::two(),
        trials: 4,
        seed: 1234,
        slope_tolerance: 0.35,
        denominator_guard: 1e-14,
    };
    let report = commutator_decay_experiment(&a, &decomp, grid.clone(), &params).unwrap();
    let verdict = report.verdict("decay_slope").unwrap();
    assert!(
        verdict.pass,
        "slope {} vs threshold {}",
        verdict.measured, verdict.threshold
    );
    assert!(verdict.measured <= -0.15);
    // Frozen regression for this configuration and seed.
    assert!(
        (verdict.measured - (-0.505_960_495)).abs() < 0.05,
        "slope drifted: {}",
        verdict.measured
    );
    let residual = report.fits[0].rms_residual;
    assert!(residual.is_finite());

    // x-independent symbol: exact-zero commutator, both at the experiment
    // level and for a direct block evaluation.
    let multiplier = zoo::bracket_power(1, 1, 1.0);
    let exact = commutator_decay_experiment(&multiplier, &decomp, grid.clone(), &params).unwrap();
    assert!(exact.verdict("exact_commutation").unwrap().pass);
    let f = random_band_limited(&decomp, grid.clone(), 1, 6);
    let comm = commutator_block(&multiplier, &f, &decomp, 4).unwrap();
    assert_eq!(comm.linf_norm(), 0.0);
    println!(
        "[PASS] criterion 6: slope {:.4} (≤ -0.15), rms residual {:.3e}; x-independent commutator exactly 0",
        verdict.measured, residual
    );
}

// ──────────────────────── criterion 7: Besov machinery ────────────────────────

#[test]
fn acceptance_7_besov_machinery() {
    let lattice = Arc::new(FrequencyLattice::new(1, 32).unwrap());
    let grid = Arc::new(TorusGrid::new(1, 65).unwrap());
    let decomp = DyadicDecomposition::standard(lattice.clone()).unwrap();

    // Constants: 9 (s, p, q) combinations including ∞ cases.
    let v = Complex64::new(-2.0, 1.0);
    let constant = GridFunction::from_fn(grid.clone(), 1, |_| vec![v]);
    let mut combos = 0;
    for s in [0.5, 1.5, -0.5] {
        for (p, q) in [
            (Exponent::one(), Exponent::two()),
            (Exponent::two(), Exponent::one()),
            (Exponent::infinity(), Exponent::infinity()),
        ] {
            let norm = besov_norm(&constant, &decomp, BesovParams::new(s, p, q)).unwrap();
            assert!(
                (norm.value - v.norm()).abs() <= 1e-10,
                "constant norm {} at s={s} p={p} q={q}",
                norm.value
            );
            combos += 1;
        }
    }
    assert_eq!(combos, 9);

    // Single-frequency closed form: k0 = 6 meets blocks 2, 3 with weight 1/2.
    let f6 = GridFunction::from_scalar_fn(grid.clone(), |x| Complex64::from_polar(1.0, 6.0 * x[0]));
    let got = besov_norm(
        &f6,
        &decomp,
        BesovParams::new(1.0, Exponent::two(), Exponent::one()),
    )
    .unwrap();
    assert!(
        (got.value - 6.0).abs() <= 1e-10,
        "single frequency: {}",
        got.value
    );
    // Block consistency: re-aggregating the breakdown reproduces the value.
    assert_eq!(aggregate(&got.blocks, Exponent::one()), got.value);

    // Derivative-form equivalence across 50 random band-limited functions:
    // ratios live in a frozen window (measured [1.0046, 1.0601] at this
    // configuration), well inside [1/C, C] with C = 1.25.
    let params = BesovParams::new(1.5, Exponent::two(), Exponent::one());
    let spec = FamilySpec::flat(1, 777);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for t in 0..50 {
        let coeffs = trial_coeffs(&spec, &decomp, t);
        let f = inverse_transform(&coeffs, grid.clone()).unwrap();
        let plain = besov_norm(&f, &decomp, params).unwrap().value;
        let deriv = besov_norm_derivative_form(&f, &decomp, params).unwrap();
        let ratio = deriv / plain;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let c = 1.25;
    assert!(
        lo >= 1.0 / c && hi <= c,
        "equivalence window [{lo:.4}, {hi:.4}] escaped [1/{c}, {c}]"
    );
    println!(
        "[PASS] criterion 7: 9 constant combos, single-frequency 6.0, equivalence window [{lo:.4}, {hi:.4}] ⊂ [{:.2}, {c}]",
        1.0 / c
    );
}

// ──────────────────── criterion 8: operator-norm continuity ────────────────────

#[test]
fn acceptance_8_operator_norm_continuity() {
    let sweep_s_m = [(0.5f64, 0.0f64), (0.5, -1.0), (0.25, 1.0)];
    let pq = [
        (Exponent::two(), Exponent::one()),
        (Exponent::infinity(), Exponent::infinity()),
    ];
    // Base symbols; each is bracket-weighted to the target order m. The
    // rough multiplier needs r > s, so the s = 0.5 rows use the steeper
    // exponent r = 0.75 (the continuity hypothesis demands s < r).
    let base_symbols: Vec<Box<dyn Fn(f64) -> Symbol>> = vec![
        Box::new(|_s| zoo::identity(1, 1)),
        Box::new(|_s| zoo::bracket_power(1, 1, 0.0)),
        Box::new(|s| {
            let r = if s < 0.5 { 0.5 } else { 0.75 };
            zoo::weierstrass(1, 1, r, 6).unwrap()
        }),
        // Diagonal order 1 keeps the conjugation non-scalar; the weighting
        // below then moves the class order to the target m.
        Box::new(|_s| zoo::rotation_conjugated(1, 1.0, 1.0).bracket_weighted(-1.0)),
    ];

    for make in &base_symbols {
        for &(s, m) in &sweep_s_m {
            let a = make(s).bracket_weighted(m);
            for &(p, q) in &pq {
                let params = OpNormParams {
                    s,
                    p,
                    q,
                    kmax: 128,
                    trials: 5,
                    seed: 31,
                    stability_factor: 1.5,
                    ..Default::default()
                };
                let report = operator_norm_experiment(&a, &params).unwrap();
                let stability = report.verdict("stability").unwrap();
                assert!(
                    stability.pass,
                    "{} at (s={s}, m={m}, p={p}, q={q}): Q ratio {}",
                    a.name(),
                    stability.measured
                );
                let qs = report.series_values("Q");
                assert!(qs.iter().all(|(_, v)| v.is_finite() && *v > 0.0));
                println!(
                    "[PASS] criterion 8 ({}, s={s}, m={m}, p={p}, q={q}): Q = {:.4e}, stability {:.3}",
                    a.name(),
                    qs[0].1,
                    stability.measured
                );
            }
        }
    }

    // Frozen regression: the order -1 smooth multiplier at s = 0.5,
    // (p, q) = (2, 1), base truncation 128 (seeded family).
    let frozen = {
        let a = zoo::bracket_power(1, 1, 0.0).bracket_weighted(-1.0);
        let params = OpNormParams {
            s: 0.5,
            p: Exponent::two(),
            q: Exponent::one(),
            kmax: 128,
            trials: 5,
            seed: 31,
            stability_factor: 1.5,
            ..Default::default()
        };
        operator_norm_experiment(&a, &params).unwrap()
    };
    let q128 = frozen.series_values("Q")[0].1;
    assert!(
        (q128 - 0.938_651_930_108).abs() < 1e-9,
        "frozen Q regressed: {q128}"
    );

    // Q = 1 exactly for the identity symbol, every (s, p, q) tested.
    for &(p, q) in &pq {
        let params = OpNormParams {
            s: 0.5,
            p,
            q,
            kmax: 32,
            trials: 4,
            seed: 32,
            ..Default::default()
        };
        let report = operator_norm_experiment(&zoo::identity(1, 1), &params).unwrap();
        for (_, qv) in report.series_values("Q") {
            assert_eq!(qv, 1.0, "identity Q must be exactly 1");
        }
    }

    // Exact homogeneity: Q(3a) = 3 Q(a).
    let a = zoo::cosine_multiplier(1, 1);
    let params = OpNormParams {
        s: 0.5,
        kmax: 32,
        trials: 4,
        seed: 33,
        ..Default::default()
    };
    let q1 = operator_norm_experiment(&a, &params).unwrap();
    let q3 = operator_norm_experiment(&a.scaled(3.0), &params).unwrap();
    for ((_, v1), (_, v3)) in q1.series_values("Q").iter().zip(&q3.series_values("Q")) {
        assert_eq!(*v3, 3.0 * *v1, "homogeneity must be exact");
    }
    println!("[PASS] criterion 8: Q(id) = 1 exactly; Q(3a) = 3·Q(a) exactly");
}

// ───────────────────────── criterion 9: determinism ─────────────────────────

#[test]
fn acceptance_9_determinism() {
    let lattice = Arc::new(FrequencyLattice::new(1, 32).unwrap());
    let decomp = DyadicDecomposition::standard(lattice.clone()).unwrap();
    let grid = Arc::new(TorusGrid::new(1, nyquist_points(32, 16)).unwrap());
    let weier = zoo::weierstrass(1, 1, 0.5, 4).unwrap();

    let kb = KernelBoundParams {
        j_lo: 2,
        j_hi: 5,
        theta: 0.5,
        growth_factor: 2.0,
    };
    let a1 = kernel_bound_experiment(&weier, &decomp, grid.clone(), &kb).unwrap();
    let a2 = kernel_bound_experiment(&weier, &decomp, grid.clone(), &kb).unwrap();
    assert_eq!(a1.to_json(), a2.to_json());

    let be = BlockEstimateParams {
        j_lo: 2,
        j_hi: 5,
        trials: 3,
        seed: 9,
        ..Default::default()
    };
    let b1 = block_estimate_experiment(&weier, &decomp, grid.clone(), &be).unwrap();
    let b2 = block_estimate_experiment(&weier, &decomp, grid.clone(), &be).unwrap();
    assert_eq!(b1.to_json(), b2.to_json());

    let cp = CommutatorParams {
        j_lo: 2,
        j_hi: 4,
        trials: 3,
        seed: 10,
        ..Default::default()
    };
    let c1 = commutator_decay_experiment(&weier, &decomp, grid.clone(), &cp).unwrap();
    let c2 = commutator_decay_experiment(&weier, &decomp, grid, &cp).unwrap();
    assert_eq!(c1.to_json(), c2.to_json());

    let op = OpNormParams {
        s: 0.25,
        kmax: 16,
        trials: 3,
        seed: 11,
        ..Default::default()
    };
    let d1 = operator_norm_experiment(&weier, &op).unwrap();
    let d2 = operator_norm_experiment(&weier, &op).unwrap();
    assert_eq!(d1.to_json(), d2.to_json());

    let y1 = young_experiment(&YoungParams::default()).unwrap();
    let y2 = young_experiment(&YoungParams::default()).unwrap();
    assert_eq!(y1.to_json(), y2.to_json());

    println!("[PASS] criterion 9: five experiment reruns reproduce reports bit-identically");
}

// ─────────────────────── supporting cross-checks ───────────────────────

#[test]
fn forward_transform_quadrature_is_exact_for_constants() {
    // The d̄x normalization: the DC coefficient of f ≡ 1 is exactly 1.
    let (grid, lattice) = grid_and_lattice(2, 8, 0);
    let ones = GridFunction::from_fn(grid, 2, |_| vec![Complex64::ONE; 2]);
    let coeffs = forward_transform(&ones, lattice).unwrap();
    let dc = coeffs.coeff_at(&[0, 0]).unwrap();
    assert_eq!(dc[0], Complex64::ONE);
    assert_eq!(dc[1], Complex64::ONE);
}
