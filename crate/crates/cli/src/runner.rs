//! Experiment dispatch: build the geometry, run the named experiment, write
//! the JSON report and CSV series, and print a one-screen verdict table.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result as IoResult};
use num_complex::Complex64;

use torbesov::besov::{besov_norm, besov_norm_derivative_form, BesovParams};
use torbesov::dyadic::{verify_dyadic, DyadicDecomposition, SmoothBump};
use torbesov::error::Result as CoreResult;
use torbesov::estimates::{
    block_estimate_experiment, commutator_decay_experiment, kernel_bound_experiment,
    nyquist_points, operator_norm_experiment, trial_coeffs, weight_l1_sweep, young_experiment,
    BlockEstimateParams, CommutatorParams, EstimateReport, FamilySpec, KernelBoundParams,
    OpNormParams, YoungParams,
};
use torbesov::grid::{inverse_transform, FrequencyLattice, GridFunction, TorusGrid};
use torbesov::operator::{
    apply_block, apply_op, apply_via_kernel, kernel_block, multiplier_apply, phi_multiplier,
    SampledSymbol,
};
use torbesov::symbol::{zoo, Symbol};
use torbesov::tolerances;

use crate::config::{ExperimentKind, FunctionConfig, RunConfig};

struct Context0 {
    grid: Arc<TorusGrid>,
    decomp: DyadicDecomposition,
    symbol: Option<Symbol>,
}

fn build_context(config: &RunConfig) -> CoreResult<Context0> {
    let g = &config.geometry;
    let lattice = Arc::new(FrequencyLattice::new(g.n, g.kmax)?);
    let symbol = match &config.symbol {
        Some(sc) => Some(zoo::from_name(&sc.name, g.n, g.d, &sc.params)?),
        None => None,
    };
    let bandwidth = symbol.as_ref().and_then(|s| s.x_bandwidth()).unwrap_or(0);
    let points = g
        .points
        .unwrap_or_else(|| nyquist_points(g.kmax, bandwidth));
    let grid = Arc::new(TorusGrid::new(g.n, points)?);
    grid.check_nyquist(&lattice)?;
    let bump = match &config.bump {
        Some(b) => SmoothBump::new(b.plateau, b.cutoff)?,
        None => SmoothBump::standard(),
    };
    let margin = config
        .estimate
        .rho_check
        .map(|r| r as i64)
        .unwrap_or(g.n as i64 + 1);
    let decomp = DyadicDecomposition::build(lattice.clone(), bump, margin)?;
    Ok(Context0 {
        grid,
        decomp,
        symbol,
    })
}

/// Run the configured experiment. Core errors (invalid hypotheses, Nyquist
/// violations) surface as `Err` and map to exit code 2.
pub fn run_experiment(config: &RunConfig) -> CoreResult<EstimateReport> {
    let e = &config.estimate;
    match config.experiment {
        ExperimentKind::Selftest => selftest_report(),
        ExperimentKind::CheckDyadic => {
            let ctx = build_context(config)?;
            let rho = e.rho_check.unwrap_or(config.geometry.n as u32 + 1);
            check_dyadic_report(&ctx.decomp, rho, e.theta, &ctx.grid)
        }
        ExperimentKind::KernelBound => {
            let ctx = build_context(config)?;
            let params = KernelBoundParams {
                j_lo: e.j_lo,
                j_hi: e.j_hi,
                theta: e.theta,
                growth_factor: e.growth_factor,
            };
            kernel_bound_experiment(
                ctx.symbol.as_ref().expect("validated"),
                &ctx.decomp,
                ctx.grid.clone(),
                &params,
            )
        }
        ExperimentKind::BlockEstimate => {
            let ctx = build_context(config)?;
            let params = BlockEstimateParams {
                j_lo: e.j_lo,
                j_hi: e.j_hi,
                p: e.p,
                trials: e.trials,
                seed: e.seed,
                growth_factor: e.growth_factor,
                denominator_guard: e.denominator_guard,
            };
            block_estimate_experiment(
                ctx.symbol.as_ref().expect("validated"),
                &ctx.decomp,
                ctx.grid.clone(),
                &params,
            )
        }
        ExperimentKind::CommutatorDecay => {
            let ctx = build_context(config)?;
            let params = CommutatorParams {
                j_lo: e.j_lo,
                j_hi: e.j_hi,
                p: e.p,
                trials: e.trials,
                seed: e.seed,
                slope_tolerance: e.slope_tolerance,
                denominator_guard: e.denominator_guard,
            };
            commutator_decay_experiment(
                ctx.symbol.as_ref().expect("validated"),
                &ctx.decomp,
                ctx.grid.clone(),
                &params,
            )
        }
        ExperimentKind::Opnorm => {
            let symbol = zoo::from_name(
                &config.symbol.as_ref().expect("validated").name,
                config.geometry.n,
                config.geometry.d,
                &config.symbol.as_ref().expect("validated").params,
            )?;
            let params = OpNormParams {
                s: e.s,
                p: e.p,
                q: e.q,
                kmax: config.geometry.kmax,
                trials: e.trials,
                seed: e.seed,
                envelope: e.envelope,
                stability_factor: e.stability_factor,
                denominator_guard: e.denominator_guard,
                scan_s: e.scan_s.clone(),
            };
            operator_norm_experiment(&symbol, &params)
        }
        ExperimentKind::BesovNorm => {
            let ctx = build_context(config)?;
            besov_norm_report(config, &ctx)
        }
    }
}

fn check_dyadic_report(
    decomp: &DyadicDecomposition,
    rho_check: u32,
    theta: f64,
    grid: &Arc<TorusGrid>,
) -> CoreResult<EstimateReport> {
    let dr = verify_dyadic(decomp, rho_check)?;
    let mut report = EstimateReport::new(
        "check-dyadic",
        serde_json::json!({
            "kmax": decomp.lattice().kmax(),
            "n": decomp.lattice().dim(),
            "j_max": decomp.j_max(),
            "rho_check": rho_check,
            "bump": decomp.bump(),
        }),
    );
    report.push_verdict(
        "support",
        dr.support_ok,
        if dr.support_ok { 0.0 } else { 1.0 },
        0.0,
        match &dr.support_violation {
            None => "supp φ_j within dyadic annuli".to_string(),
            Some((j, k)) => format!("violated at j = {j}, k = {k:?}"),
        },
    );
    report.push_verdict(
        "partition",
        dr.partition_ok,
        dr.partition_max_err,
        tolerances::PARTITION_SUM,
        format!(
            "covered |k| <= {}; whole-lattice error {:.3e}",
            dr.covered_radius, dr.partition_max_err_lattice
        ),
    );
    for ar in &dr.alpha_reports {
        let tag = format!("{:?}", ar.alpha);
        for (idx, v) in ar.per_j_max.iter().enumerate() {
            report.push_point(&format!("calpha{tag}_per_j"), (idx + 1) as f64, *v);
        }
        report.push_point(&format!("calpha{tag}"), 0.0, ar.c_alpha);
        report.push_point(&format!("calpha{tag}_j0"), 0.0, ar.c_alpha_j0);
        report.push_verdict(
            &format!("uniform_alpha{tag}"),
            ar.window.pass,
            ar.window.ratio,
            ar.window.factor,
            format!("c_α = {:.6e}", ar.c_alpha),
        );
    }
    // Weight L¹ masses ride along: uniform boundedness over the block range.
    let (values, spread) = weight_l1_sweep(0, decomp.j_max(), theta, grid)?;
    for (j, v) in values {
        report.push_point("weight_l1", j as f64, v);
    }
    report.push_verdict(
        "weight_l1_uniform",
        spread.is_finite() && spread < 4.0,
        spread,
        4.0,
        "max/min of g_{j,θ} quadrature masses over j",
    );
    Ok(report)
}

fn besov_norm_report(config: &RunConfig, ctx: &Context0) -> CoreResult<EstimateReport> {
    let e = &config.estimate;
    let params = BesovParams::new(e.s, e.p, e.q);
    let d = config.geometry.d;
    let f: GridFunction = match config.function.as_ref().expect("validated") {
        FunctionConfig::Constant { value } => {
            let v = Complex64::new(*value, 0.0);
            GridFunction::from_fn(ctx.grid.clone(), d, |_| vec![v; d])
        }
        FunctionConfig::SingleFrequency { k } => {
            let k = k.clone();
            GridFunction::from_fn(ctx.grid.clone(), d, move |x| {
                let angle: f64 = k.iter().zip(x).map(|(&ki, &xi)| ki as f64 * xi).sum();
                vec![Complex64::from_polar(1.0, angle); d]
            })
        }
        FunctionConfig::Random { seed, trial } => {
            let spec = FamilySpec::flat(d, *seed);
            let coeffs = trial_coeffs(&spec, &ctx.decomp, *trial);
            inverse_transform(&coeffs, ctx.grid.clone())?
        }
    };
    let norm = besov_norm(&f, &ctx.decomp, params)?;
    let mut report = EstimateReport::new(
        "besov-norm",
        serde_json::json!({
            "s": e.s, "p": e.p, "q": e.q,
            "kmax": config.geometry.kmax,
            "points": ctx.grid.points_per_axis(),
            "function": config.function,
        }),
    );
    report.push_point("besov_norm", 0.0, norm.value);
    for b in &norm.blocks {
        report.push_point("block_weight", b.j as f64, b.weight);
        report.push_point("block_lp", b.j as f64, b.block_lp);
        report.push_point("block_contribution", b.j as f64, b.contribution);
    }
    // Derivative-form companion when s splits as s0 + s1, s1 in (0,1).
    if e.s > 0.0 && e.s.fract() > 0.0 {
        let deriv = besov_norm_derivative_form(&f, &ctx.decomp, params)?;
        report.push_point("derivative_form", 0.0, deriv);
        let ratio = deriv / norm.value;
        report.push_verdict(
            "derivative_form_comparable",
            ratio.is_finite() && ratio > 0.0,
            ratio,
            f64::INFINITY,
            "equivalent-norm ratio (constants unquantified)",
        );
    }
    report.push_verdict(
        "finite",
        norm.value.is_finite(),
        norm.value,
        f64::INFINITY,
        "besov norm finite",
    );
    Ok(report)
}

/// Built-in small-geometry battery of exact identities and bounds.
pub fn selftest_report() -> CoreResult<EstimateReport> {
    let n = 1usize;
    let kmax = 16i64;
    let lattice = Arc::new(FrequencyLattice::new(n, kmax)?);
    let grid = Arc::new(TorusGrid::new(n, nyquist_points(kmax, 1))?);
    let decomp = DyadicDecomposition::standard(lattice.clone())?;
    let mut report = EstimateReport::new(
        "selftest",
        serde_json::json!({ "n": n, "kmax": kmax, "points": grid.points_per_axis() }),
    );

    let spec = FamilySpec::flat(1, 99);
    let coeffs = trial_coeffs(&spec, &decomp, 0);
    let f = inverse_transform(&coeffs, grid.clone())?;

    // op[id] f = f
    let id = zoo::identity(n, 1);
    let residual = apply_op(&id, &f, lattice.clone(), None)?
        .sub(&f)
        .linf_norm();
    report.push_verdict(
        "op_identity",
        residual <= tolerances::EXACT_IDENTITY,
        residual,
        tolerances::EXACT_IDENTITY,
        "op[id]f = f",
    );

    // multiplication symbol acts pointwise
    let cosine = zoo::cosine_multiplier(n, 1);
    let applied = apply_op(&cosine, &f, lattice.clone(), None)?;
    let mut worst = 0.0f64;
    for node in 0..grid.node_count() {
        let want = f.node_value(node)[0] * Complex64::new(grid.axis_coord(node).cos(), 0.0);
        worst = worst.max((applied.node_value(node)[0] - want).norm());
    }
    report.push_verdict(
        "multiplication_pointwise",
        worst <= tolerances::EXACT_IDENTITY,
        worst,
        tolerances::EXACT_IDENTITY,
        "op[b(x)·id]f = b·f",
    );

    // block reconstruction
    let direct = apply_op(&cosine, &f, lattice.clone(), None)?;
    let rebuilt = apply_op(&cosine, &f, lattice.clone(), Some(&decomp))?;
    let rec_residual = direct.sub(&rebuilt).linf_norm();
    report.push_verdict(
        "partition_reconstruction",
        rec_residual <= tolerances::EXACT_IDENTITY,
        rec_residual,
        tolerances::EXACT_IDENTITY,
        "Σ_j op[a]op[φ_j]f = op[a]f",
    );

    // kernel path vs frequency path at j = 2
    let freq = apply_block(&cosine, &f, &decomp, 2)?;
    let kern = kernel_block(&cosine, &decomp, 2, grid.clone(), None)?;
    let conv = apply_via_kernel(&kern, &f)?;
    let dual_residual = freq.sub(&conv).linf_norm();
    report.push_verdict(
        "kernel_vs_frequency",
        dual_residual <= tolerances::EXACT_IDENTITY,
        dual_residual,
        tolerances::EXACT_IDENTITY,
        "kernel convolution representation",
    );

    // φ_j χ_j = φ_j bitwise
    let mut chi_dev = 0.0f64;
    for j in 0..=decomp.j_max() {
        let phi = decomp.phi_lattice_table(j)?;
        let chi = decomp.chi_lattice_table(j)?;
        for (p, c) in phi.iter().zip(&chi) {
            chi_dev = chi_dev.max((p * c - p).abs());
        }
    }
    report.push_verdict(
        "phi_chi_identity",
        chi_dev == 0.0,
        chi_dev,
        0.0,
        "φ_j χ_j = φ_j",
    );

    // x-independent commutation through the multiplier path
    let bracket = zoo::bracket_power(n, 1, 1.0);
    let sampled = SampledSymbol::new(&bracket, grid.clone(), lattice.clone())?;
    let t1 = {
        let loc = phi_multiplier(&decomp, 2, &coeffs)?;
        inverse_transform(&multiplier_apply(&sampled, &loc)?, grid.clone())?
    };
    let t2 = {
        let af = multiplier_apply(&sampled, &coeffs)?;
        inverse_transform(&phi_multiplier(&decomp, 2, &af)?, grid.clone())?
    };
    let comm_residual = t1.sub(&t2).linf_norm();
    report.push_verdict(
        "x_independent_commutation",
        comm_residual <= 1e-13,
        comm_residual,
        1e-13,
        "op[φ_j]op[a] = op[a]op[φ_j] for multipliers",
    );

    // dyadic validity
    let dyadic = verify_dyadic(&decomp, 2)?;
    report.push_verdict(
        "dyadic_valid",
        dyadic.pass,
        dyadic.partition_max_err,
        tolerances::PARTITION_SUM,
        "support, partition and difference bounds",
    );

    // Young bounds, 20 trials
    let young = young_experiment(&YoungParams {
        n: 1,
        kmax: 8,
        trials: 20,
        seed: 7,
    })?;
    let young_ok = young.all_pass();
    report.push_verdict(
        "young_bounds",
        young_ok,
        if young_ok { 0.0 } else { 1.0 },
        0.0,
        "single and double convolution inequalities",
    );

    // opnorm of identity is exactly 1
    let op = operator_norm_experiment(
        &id,
        &OpNormParams {
            s: 0.5,
            kmax: 8,
            trials: 3,
            ..Default::default()
        },
    )?;
    let qs = op.series_values("Q");
    let q_ok = qs.iter().all(|(_, q)| *q == 1.0);
    report.push_verdict(
        "opnorm_identity_exact",
        q_ok,
        qs.first().map(|(_, q)| *q).unwrap_or(f64::NAN),
        1.0,
        "empirical Q(id) = 1",
    );

    Ok(report)
}

/// Write report artifacts and return their paths.
pub fn write_artifacts(
    report: &EstimateReport,
    config: Option<&RunConfig>,
    out_dir: &Path,
    prefix: &str,
) -> IoResult<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output dir {}", out_dir.display()))?;
    let mut written = Vec::new();

    let json_path = out_dir.join(format!("{prefix}.report.json"));
    fs::write(&json_path, report.to_json()).with_context(|| format!("writing {json_path:?}"))?;
    written.push(json_path);

    let csv_path = out_dir.join(format!("{prefix}.series.csv"));
    fs::write(&csv_path, report.to_csv()).with_context(|| format!("writing {csv_path:?}"))?;
    written.push(csv_path);

    // check-dyadic also dumps the tabulated decomposition for plotting.
    if let Some(cfg) = config {
        if cfg.experiment == ExperimentKind::CheckDyadic {
            let ctx = build_context(cfg).map_err(|e| anyhow::anyhow!("{e}"))?;
            let table_path = out_dir.join(format!("{prefix}.decomposition.csv"));
            fs::write(&table_path, ctx.decomp.to_csv())
                .with_context(|| format!("writing {table_path:?}"))?;
            written.push(table_path);
        }
    }
    Ok(written)
}

/// One-screen verdict table.
pub fn print_summary(report: &EstimateReport, verbose: bool) {
    println!("experiment: {}", report.experiment);
    if let Some(seed) = report.seed {
        println!("seed: {seed}");
    }
    for v in &report.verdicts {
        println!(
            "  [{}] {:<28} measured {:>14.6e}  threshold {:>12.6e}  {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.measured,
            v.threshold,
            v.detail
        );
    }
    for fit in &report.fits {
        println!(
            "  fit {:<24} slope {:+.4}  intercept {:+.4}  rms {:.3e} ({} pts)",
            fit.name, fit.slope, fit.intercept, fit.rms_residual, fit.points
        );
    }
    if verbose {
        for p in &report.series {
            println!("    {} [{}] = {:.9e}", p.series, p.index, p.value);
        }
    } else if !report.series.is_empty() {
        println!("  series: {} points (see CSV)", report.series.len());
    }
    println!(
        "  skipped cells: {}; overall: {}",
        report.skipped_cells,
        if report.all_pass() { "PASS" } else { "FAIL" }
    );
}
