use serde::Serialize;
use serde_json::{json, Value};

use super::{ExperimentConfig, MultiplierSpec, Outcome, Table};
use crate::derivation::{band_decompose, band_kernels, decay_report, lemma37_shape, mauceri_constant, DecayReport};
use crate::error::{Error, Result};
use crate::fiber::{
    apply_fiber_multiplier, fiber_transform, heisenberg_panel, lemma41_check, parseval_defect, r_commutation_defect,
    theorem110_experiment, theorem19_experiment, translation_defect, two_path_agreement, vector_field_fine_grid,
    vector_field_grid, vector_field_refinement, lambda_adapted_grid, FiberOptions, HeisenbergGrid, TheoremStats,
};
use crate::hermite::{HermiteContext, OperatorMatrix};
use crate::maximal::{bmo_commutator, pointwise_domination, power_weight, weight_refinement, weighted_ratio, GridOperator};
use crate::rbound::{
    counterexample_theorem16, derivative_halving, derivative_terms, heat_family, identity_residuals, prop42_identity,
    rademacher_estimate, riesz_commutator_growth, riesz_family, riesz_matrix, spectral_family, MultiplierFamily,
};
use crate::weyl::{band_limited_panel, special_hermite_fn, CalibrationRecord, PhaseGrid, Quadrature, WeylEngine};
use crate::C64;

fn num(v: f64) -> String {
    format!("{v}")
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// Median with the mean of the two middle values for even counts.
fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Spread of a statistic across bands: how far the extremes sit from the median.
#[derive(Clone, Debug, Serialize)]
struct Spread {
    median: f64,
    max_over_median: f64,
    median_over_min: f64,
}

fn spread(values: &[f64]) -> Spread {
    let med = median(values);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Spread { median: med, max_over_median: max / med, median_over_min: med / min }
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        0.0
    } else {
        (b - a).abs() / a.abs().max(b.abs())
    }
}

/// Single Weyl multiplier matrix from the config.
fn weyl_matrix(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<OperatorMatrix> {
    match &config.multiplier {
        MultiplierSpec::Identity => Ok(OperatorMatrix::identity(ctx.n(), ctx.trunc())),
        MultiplierSpec::Heat { t } => {
            let t = *t;
            ctx.spectral_function(move |e| (-t * e).exp(), 0.0)
        }
        MultiplierSpec::Cutoff { max_level } => {
            let n = ctx.n();
            let mut m = OperatorMatrix::zeros(n, ctx.trunc());
            for level in 0..=*max_level {
                m = &m + &ctx.projection(level)?;
            }
            Ok(m)
        }
        MultiplierSpec::Projection { level } => ctx.projection(*level),
        MultiplierSpec::Riesz => riesz_matrix(ctx),
        MultiplierSpec::File { path } => OperatorMatrix::load(path),
    }
}

/// λ-family m(λ) = φ(H(λ)) (or the Riesz family) from the config.
fn fiber_family(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<MultiplierFamily> {
    let at = [1.0];
    match &config.multiplier {
        MultiplierSpec::Identity => spectral_family(ctx, &at, "identity", |_| 1.0, None),
        MultiplierSpec::Heat { t } if *t == 1.0 => heat_family(ctx, &at),
        MultiplierSpec::Heat { t } => {
            let t = *t;
            spectral_family(ctx, &at, "heat", move |s| (-t * s).exp(), Some(Box::new(move |s| -t * (-t * s).exp())))
        }
        MultiplierSpec::Cutoff { max_level } => {
            let top = (2 * max_level + ctx.n()) as f64;
            spectral_family(ctx, &at, "cutoff", move |s| if s <= top + 1e-9 { 1.0 } else { 0.0 }, None)
        }
        MultiplierSpec::Projection { level } => {
            let e = (2 * level + ctx.n()) as f64;
            spectral_family(ctx, &at, "projection", move |s| if (s - e).abs() < 1e-9 { 1.0 } else { 0.0 }, None)
        }
        MultiplierSpec::Riesz => riesz_family(ctx, &at),
        MultiplierSpec::File { .. } => {
            Err(Error::Config("a matrix file defines one multiplier, not a λ-family; use a named family".into()))
        }
    }
}

fn fiber_panel(ctx: &HermiteContext, grid: PhaseGrid, lambda: f64, seed: u64, count: usize, band: usize) -> Result<Vec<crate::weyl::PhaseGridFunction>> {
    let engine = WeylEngine::with_lambda(ctx, grid, lambda, Quadrature::Adaptive)?;
    band_limited_panel(&engine, seed, count, band)
}

pub(super) fn dispatch(config: &ExperimentConfig, ctx: &HermiteContext, calibration: &CalibrationRecord) -> Result<Outcome> {
    match config.experiment.as_str() {
        "mauceri-check" => mauceri(config, ctx),
        "kernel-decay" => kernel_decay(config, ctx),
        "weighted-norm" => weighted_norm(config, ctx),
        "sharp-maximal" => sharp_maximal(config, ctx),
        "commutator-bmo" => commutator_bmo(config, ctx),
        "rbound" => rbound(config, ctx),
        "lemma24" => lemma24(config, ctx),
        "prop42" => prop42(config, ctx),
        "counterexample-16" => counterexample(config, ctx),
        "scaling-21" => scaling(config, ctx),
        "vectorfields-23" => vector_fields(config, ctx),
        "lemma41" => lemma41(config, ctx),
        "pipeline" => pipeline(config, ctx),
        "theorem19" | "theorem110" => theorem(config, ctx),
        "calibrate" => Ok(calibration_outcome(calibration)),
        other => Err(Error::Config(format!("unknown experiment '{other}'"))),
    }
}

fn mauceri(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<Outcome> {
    let m = weyl_matrix(config, ctx)?;
    let r = mauceri_constant(ctx, &m, config.params.order, config.params.side)?;
    let mut t = Table::new("mauceri", &["alpha", "beta", "block", "value"]);
    for row in &r.rows {
        let a = format!("{:?}", row.alpha);
        let b = format!("{:?}", row.beta);
        for (k, v) in &row.values {
            t.push(vec![a.clone(), b.clone(), k.to_string(), num(*v)]);
        }
    }
    let summary = vec![
        format!("order l = {}, side {:?}", r.order, r.side),
        format!("constant = {}", r.constant),
        format!("blocks used {:?}, excluded {:?}", r.blocks_used, r.blocks_excluded),
    ];
    Ok(Outcome { result: to_value(&r), tables: vec![t], summary, failure: None })
}

fn kernel_decay(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<Outcome> {
    let prm = &config.params;
    let m = weyl_matrix(config, ctx)?;
    let engine = WeylEngine::new(ctx, config.weyl_grid()?)?;
    let pieces = band_decompose(ctx, &m, prm.bands)?;
    let kernels = band_kernels(&engine, &pieces)?;
    let reports = (1..=prm.bands).map(|j| decay_report(&kernels[j], j, &prm.offsets)).collect::<Result<Vec<DecayReport>>>()?;
    let size: Vec<f64> = reports.iter().map(|r| r.size_ratio).collect();
    let smooth: Vec<f64> = reports.iter().map(|r| r.smoothness_ratio).collect();
    let (size_spread, smooth_spread) = (spread(&size), spread(&smooth));
    let profiles = [(0, 0), (1, 0), (0, 1)]
        .iter()
        .map(|&(g, r)| lemma37_shape(ctx, prm.profile_band, g, r, None))
        .collect::<Result<Vec<_>>>()?;

    let mut bands = Table::new("bands", &["band", "t_next", "size_ratio", "smoothness_ratio", "l2_weighted"]);
    for r in &reports {
        bands.push(vec![r.band.to_string(), num(r.t_next), num(r.size_ratio), num(r.smoothness_ratio), num(r.l2_weighted)]);
    }
    let mut blocks = Table::new("blocks", &["gamma", "rho", "block", "x", "value", "normalized"]);
    for p in &profiles {
        for row in &p.rows {
            blocks.push(vec![
                p.gamma.to_string(),
                p.rho.to_string(),
                row.block.to_string(),
                num(row.x),
                num(row.value),
                num(row.normalized),
            ]);
        }
    }
    let summary = vec![
        format!(
            "size ratio: median {:.4e}, max/median {:.3}, median/min {:.3}",
            size_spread.median, size_spread.max_over_median, size_spread.median_over_min
        ),
        format!(
            "smoothness ratio: median {:.4e}, max/median {:.3}, median/min {:.3}",
            smooth_spread.median, smooth_spread.max_over_median, smooth_spread.median_over_min
        ),
        format!(
            "block decrease at band {}: {}",
            prm.profile_band,
            profiles.iter().map(|p| format!("({},{}) {:.3e}", p.gamma, p.rho, p.decrease)).collect::<Vec<_>>().join(", ")
        ),
    ];
    let result = json!({
        "bands": to_value(&reports),
        "size_spread": to_value(&size_spread),
        "smoothness_spread": to_value(&smooth_spread),
        "block_profiles": to_value(&profiles),
    });
    Ok(Outcome { result, tables: vec![bands, blocks], summary, failure: None })
}

/// The Weyl grid and its companion, each with an engine and the seeded panel.
fn two_resolutions(config: &ExperimentConfig, ctx: &HermiteContext, count: usize) -> Result<Vec<(WeylEngine, Vec<crate::weyl::PhaseGridFunction>)>> {
    [config.weyl_grid()?, config.weyl_companion()?]
        .into_iter()
        .map(|g| {
            let e = WeylEngine::new(ctx, g)?;
            let panel = band_limited_panel(&e, config.panel.seed, count, config.panel.band)?;
            Ok((e, panel))
        })
        .collect()
}

fn weighted_norm(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<Outcome> {
    let m = weyl_matrix(config, ctx)?;
    let a = config.weight.exponent;
    let runs = two_resolutions(config, ctx, config.panel.count)?;
    let mut table = Table::new("ratios", &["m_pts", "p", "index", "ratio"]);
    let mut per_p = Vec::new();
    let mut summary = Vec::new();
    for &p in &config.p {
        let mut stats = Vec::new();
        for (engine, panel) in &runs {
            let w = power_weight(engine.grid(), a);
            let op = |f: &crate::weyl::PhaseGridFunction| engine.apply_multiplier(&m, f);
            let s = weighted_ratio(&op, panel, &w, p)?;
            for (k, r) in s.ratios.iter().enumerate() {
                table.push(vec![engine.grid().m_pts.to_string(), num(p), k.to_string(), num(*r)]);
            }
            stats.push((engine.grid().m_pts, s));
        }
        // A_p is compared on the Weyl grid and its dyadic refinement, which share their cubes
        let base = config.weyl_grid()?;
        let grids = [base, PhaseGrid::new(base.l_z, 2 * base.m_pts)?];
        let refinement = weight_refinement(a, p, &grids)?;
        let change = relative_change(stats[0].1.max, stats[1].1.max);
        summary.push(format!(
            "p = {p}: max ratio {:.5} (m={}) / {:.5} (m={}), relative change {:.3}; A_p {:.4}, weight divergent: {}",
            stats[0].1.max, stats[0].0, stats[1].1.max, stats[1].0, change, stats[0].1.ap, refinement.divergent
        ));
        per_p.push(json!({
            "p": p,
            "stats": stats.iter().map(|(m, s)| json!({"m_pts": m, "stats": to_value(s)})).collect::<Vec<_>>(),
            "relative_change": change,
            "weight_refinement": to_value(&refinement),
        }));
    }
    Ok(Outcome { result: json!({ "weight_exponent": a, "per_p": per_p }), tables: vec![table], summary, failure: None })
}

fn sharp_maximal(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<Outcome> {
    let m = weyl_matrix(config, ctx)?;
    let s = config.params.s;
    let runs = two_resolutions(config, ctx, config.panel.count)?;
    let mut table = Table::new("domination", &["m_pts", "index", "statistic"]);
    let mut maxima = Vec::new();
    for (engine, panel) in &runs {
        let mut worst: f64 = 0.0;
        for (k, f) in panel.iter().enumerate() {
            let d = pointwise_domination(&engine.apply_multiplier(&m, f)?, f, s)?;
            table.push(vec![engine.grid().m_pts.to_string(), k.to_string(), num(d)]);
            worst = worst.max(d);
        }
        maxima.push((engine.grid().m_pts, worst));
    }
    let change = relative_change(maxima[0].1, maxima[1].1);
    let summary = vec![format!(
        "sup M♯(Tf)/M_s f, s = {s}: {:.5} (m={}) / {:.5} (m={}), relative change {:.3}",
        maxima[0].1, maxima[0].0, maxima[1].1, maxima[1].0, change
    )];
    let result = json!({
        "s": s,
        "maxima": maxima.iter().map(|(m, v)| json!({"m_pts": m, "max": v})).collect::<Vec<_>>(),
        "relative_change": change,
    });
    Ok(Outcome { result, tables: vec![table], summary, failure: None })
}

fn commutator_bmo(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<Outcome> {
    let m = weyl_matrix(config, ctx)?;
    let grid = config.weyl_grid()?;
    let engine = WeylEngine::new(ctx, grid)?;
    let panel = band_limited_panel(&engine, config.panel.seed, config.panel.count, config.panel.band)?;
    // b = log|z + ε|, the model BMO function
    let b = power_weight(grid, 1.0).map(|v| C64::new(v.re.ln(), 0.0));
    let op = |f: &crate::weyl::PhaseGridFunction| engine.apply_multiplier(&m, f);
    let mut table = Table::new("commutator", &["p", "index", "ratio"]);
    let mut stats = Vec::new();
    let mut summary = Vec::new();
    for &p in &config.p {
        let s = bmo_commutator(&b, &op, &panel, p)?;
        for (k, r) in s.ratios.iter().enumerate() {
            table.push(vec![num(p), k.to_string(), num(*r)]);
        }
        summary.push(format!("p = {p}: ‖b‖_BMO {:.4}, max ‖[b,T]f‖/(‖b‖‖f‖) {:.5}", s.bmo, s.max));
        stats.push(s);
    }
    Ok(Outcome { result: to_value(&stats), tables: vec![table], summary, failure: None })
}

fn rbound(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<Outcome> {
    let prm = &config.params;
    let engine = WeylEngine::new(ctx, config.weyl_grid()?)?;
    let eng = &engine;
    let projections = (0..prm.members).map(|j| ctx.projection(j)).collect::<Result<Vec<_>>>()?;
    let ops: Vec<Box<GridOperator<'_>>> = projections
        .iter()
        .map(|p| Box::new(move |f: &crate::weyl::PhaseGridFunction| eng.apply_multiplier(p, f)) as Box<GridOperator<'_>>)
        .collect();
    let refs: Vec<&GridOperator<'_>> = ops.iter().map(|b| b.as_ref()).collect();
    let panel = band_limited_panel(&engine, config.panel.seed, config.panel.count * prm.members, config.panel.band)?;
    let tuples: Vec<Vec<_>> = panel.chunks(prm.members).map(|c| c.to_vec()).collect();
    let mut table = Table::new("rbound", &["p", "tuple", "rademacher", "square_function"]);
    let mut reports = Vec::new();
    let mut summary = Vec::new();
    for &p in &config.p {
        let r = rademacher_estimate(&refs, &tuples, p, prm.sign_mode)?;
        for row in &r.rows {
            table.push(vec![num(p), row.tuple.to_string(), num(row.rademacher), num(row.square_function)]);
        }
        summary.push(format!(
            "p = {p}: {} projections, R-bound estimate {:.6}, square-function constant {:.6} ({} sign patterns)",
            prm.members, r.constant, r.square_function_constant, r.patterns
        ));
        reports.push(r);
    }
    let growth = riesz_commutator_growth(&engine, ctx, &prm.riesz_alphas, prm.beta)?;
    let mut riesz = Table::new("riesz_growth", &["alpha", "ratio", "panel_constant"]);
    for ((a, r), c) in growth.rows.iter().zip(&growth.panel_constants) {
        riesz.push(vec![a.to_string(), num(*r), num(*c)]);
    }
    summary.push(format!("Riesz commutator statistic monotone in α: {}", growth.monotone));
    let result = json!({ "projections": to_value(&reports), "riesz_growth": to_value(&growth) });
    Ok(Outcome { result, tables: vec![table, riesz], summary, failure: None })
}

fn lemma24(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<Outcome> {
    let prm = &config.params;
    let family = fiber_family(config, ctx)?;
    let engine = WeylEngine::new(ctx, config.weyl_grid()?)?;
    let f = band_limited_panel(&engine, config.panel.seed, 1, config.panel.band)?.remove(0);
    let terms = derivative_terms(ctx, &family, prm.lambda, prm.h_fd, &f)?.report;
    let halving = derivative_halving(ctx, &family, prm.lambda, prm.halving_h_fd, &f)?;
    let mut t = Table::new("conventions", &["h_fd", "residual_m_first", "residual_grad_first"]);
    for r in [&terms, &halving.coarse, &halving.fine] {
        t.push(vec![num(r.h_fd), num(r.residual_m_first), num(r.residual_grad_first)]);
    }
    let summary = vec![
        format!(
            "h_fd = {}: m-first {:.3e}, gradient-first {:.3e}, winner {:?}",
            terms.h_fd, terms.residual_m_first, terms.residual_grad_first, terms.winner
        ),
        format!("halving {} → {}: ratio {:.3}", halving.coarse.h_fd, halving.fine.h_fd, halving.ratio),
    ];
    let result = json!({ "terms": to_value(&terms), "halving": to_value(&halving), "winner": to_value(&terms.winner) });
    Ok(Outcome { result, tables: vec![t], summary, failure: None })
}

fn prop42(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<Outcome> {
    let m = weyl_matrix(config, ctx)?;
    let ids = identity_residuals(ctx)?;
    let rows = config.params.lambdas.iter().map(|&l| prop42_identity(ctx, &m, l)).collect::<Result<Vec<_>>>()?;
    let mut t = Table::new("expansion", &["lambda", "ladder_commutator", "xi_grad", "expansion", "expansion_factorized"]);
    for r in &rows {
        t.push(vec![num(r.lambda), num(r.ladder_commutator), num(r.xi_grad), num(r.expansion), num(r.expansion_factorized)]);
    }
    let summary = vec![
        format!(
            "H = ½(AA*+A*A): {:.2e}; [A*,A] = −2I: {:.2e}; δ̄H^(−1/2): {:.2e}; δH^(−1/2): {:.2e}; band forms: {:.2e}",
            ids.hermite_sum, ids.ladder_commutator, ids.delta_bar_inv_root, ids.delta_inv_root, ids.heat_band_forms
        ),
        format!("largest expansion residual {:.2e}", rows.iter().map(|r| r.expansion_factorized).fold(0.0, f64::max)),
    ];
    Ok(Outcome { result: json!({ "identities": to_value(&ids), "expansion": to_value(&rows) }), tables: vec![t], summary, failure: None })
}

fn counterexample(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<Outcome> {
    let prm = &config.params;
    let t = counterexample_theorem16(ctx, &prm.alphas, prm.beta)?;
    let mut rows = Table::new("counterexample", &["alpha", "direct", "closed_form", "relative_difference", "hs_norm"]);
    for r in &t.rows {
        rows.push(vec![r.alpha.to_string(), num(r.direct), num(r.closed_form), num(r.relative_difference), num(r.hs_norm)]);
    }
    let mut stats = Table::new("growth", &["statistic", "value"]);
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    stats.push(vec!["slope".into(), opt(t.slope)]);
    stats.push(vec!["growth_ratio".into(), opt(t.growth_ratio)]);
    let summary = vec![
        format!("β = {}, ‖f‖₂ = {}", t.beta, t.f_norm),
        format!("log-log slope {:?}, growth ratio {:?}, monotone {}", t.slope, t.growth_ratio, t.monotone),
    ];
    Ok(Outcome { result: to_value(&t), tables: vec![rows, stats], summary, failure: None })
}

fn scaling(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<Outcome> {
    let m = weyl_matrix(config, ctx)?;
    let base = config.weyl_grid()?;
    let mut t = Table::new("two_path", &["lambda", "index", "residual"]);
    let mut worst: f64 = 0.0;
    for &l in &config.params.lambdas {
        let z = lambda_adapted_grid(base, l);
        let panel = fiber_panel(ctx, z, l, config.panel.seed, config.panel.count, config.panel.band)?;
        for (k, f) in panel.iter().enumerate() {
            let r = two_path_agreement(ctx, l, &m, f)?;
            worst = worst.max(r);
            t.push(vec![num(l), k.to_string(), num(r)]);
        }
    }
    let summary = vec![format!("largest conjugation/direct discrepancy {worst:.3e}")];
    Ok(Outcome { result: json!({ "max_residual": worst, "rows": t.rows }), tables: vec![t], summary, failure: None })
}

fn vector_fields(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<Outcome> {
    let mut t = Table::new("vector_fields", &["lambda", "identity", "coarse_derived", "fine_derived", "coarse_literal", "ratio"]);
    let mut results = Vec::new();
    let mut summary = Vec::new();
    for &l in &config.params.lambdas {
        let phi = |g: PhaseGrid| -> Result<_> {
            let e = WeylEngine::with_lambda(ctx, g, l, Quadrature::Adaptive)?;
            special_hermite_fn(&e, 0, 0)
        };
        let (coarse, fine, ratios) = vector_field_refinement(ctx, l, &phi(vector_field_grid(l))?, &phi(vector_field_fine_grid(l))?)?;
        let mut ratio_iter = ratios.iter();
        for (c, f) in coarse.rows.iter().zip(&fine.rows) {
            let ratio = if c.differentiated { ratio_iter.next().map(|r| num(*r)).unwrap_or_default() } else { String::new() };
            t.push(vec![num(l), c.identity.clone(), num(c.derived), num(f.derived), num(c.literal), ratio]);
        }
        summary.push(format!(
            "λ = {l}: largest residual {:.3e} (h = {}) → {:.3e} (h = {}); refinement ratios {:?}",
            coarse.max_derived(),
            coarse.h,
            fine.max_derived(),
            fine.h,
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
        ));
        results.push(json!({ "lambda": l, "coarse": to_value(&coarse), "fine": to_value(&fine), "ratios": ratios }));
    }
    Ok(Outcome { result: Value::Array(results), tables: vec![t], summary, failure: None })
}

/// Gaussian samples k(η_j), η_j = (j − half)h.
pub(super) fn gaussian_kernel(h: f64, width: f64, center: f64, half: usize) -> Vec<f64> {
    (0..2 * half + 1)
        .map(|j| {
            let eta = (j as f64 - half as f64) * h;
            (-(eta - center).powi(2) / (2.0 * width * width)).exp() / (width * (2.0 * std::f64::consts::PI).sqrt())
        })
        .collect()
}

fn lemma41(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<Outcome> {
    let prm = &config.params;
    let base = config.weyl_grid()?;
    let mut t = Table::new("lemma41", &["lambda", "index", "residual", "lhs_norm", "rhs_norm"]);
    let mut reports = Vec::new();
    let mut kernels = Vec::new();
    for &l in &prm.lambdas {
        // kernel samples on the y-lattice of the λ-adapted box
        let z = lambda_adapted_grid(base, l);
        let kernel = gaussian_kernel(z.h(), prm.kernel_width, prm.kernel_center, prm.kernel_half);
        let panel = fiber_panel(ctx, z, l, config.panel.seed, config.panel.count, config.panel.band)?;
        for (k, f) in panel.iter().enumerate() {
            let r = lemma41_check(ctx, &kernel, l, f)?;
            t.push(vec![num(l), k.to_string(), num(r.residual), num(r.lhs_norm), num(r.rhs_norm)]);
            reports.push(r);
        }
        kernels.push(json!({ "lambda": l, "h": z.h(), "samples": kernel }));
    }
    let worst = reports.iter().map(|r| r.residual).fold(0.0, f64::max);
    let summary = vec![format!("Gaussian kernel width {} centered at {}: largest residual {worst:.3e}", prm.kernel_width, prm.kernel_center)];
    Ok(Outcome { result: json!({ "kernels": kernels, "reports": to_value(&reports) }), tables: vec![t], summary, failure: None })
}

fn pipeline(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<Outcome> {
    let prm = &config.params;
    let family = fiber_family(config, ctx)?;
    let grid = config.heisenberg_grid()?;
    let pnl = &config.panel;
    let panel = heisenberg_panel(ctx, grid, pnl.seed, pnl.count, pnl.band, &pnl.lambdas)?;
    let opts = FiberOptions::default();
    let mut t = Table::new("invariants", &["index", "translation", "parseval", "r_commutation"]);
    let mut rows = Vec::new();
    let mut logs = Vec::new();
    for (k, f) in panel.iter().enumerate() {
        let tr = translation_defect(ctx, &family, f, prm.translate_steps, opts)?;
        let pa = parseval_defect(f)?;
        let rc = r_commutation_defect(ctx, &family, f, prm.angles, opts)?;
        t.push(vec![k.to_string(), num(tr), num(pa), num(rc)]);
        rows.push(json!({ "index": k, "translation": tr, "parseval": pa, "r_commutation": rc }));
        logs.push(apply_fiber_multiplier(ctx, &family, &fiber_transform(f)?, opts)?.1);
    }
    let col_max = |i: usize| t.rows.iter().map(|r| r[i].parse::<f64>().unwrap_or(f64::NAN)).fold(0.0, f64::max);
    let summary = vec![format!(
        "translation {:.2e}, Parseval {:.2e}, R-commutation {:.2e} (largest over {} functions)",
        col_max(1),
        col_max(2),
        col_max(3),
        panel.len()
    )];
    Ok(Outcome { result: json!({ "family": family.tag(), "rows": rows, "fiber_logs": to_value(&logs) }), tables: vec![t], summary, failure: None })
}

fn theorem_stats(
    config: &ExperimentConfig,
    ctx: &HermiteContext,
    family: &MultiplierFamily,
    grid: HeisenbergGrid,
    p: f64,
) -> Result<TheoremStats> {
    let pnl = &config.panel;
    let panel = heisenberg_panel(ctx, grid, pnl.seed, pnl.count, pnl.band, &pnl.lambdas)?;
    let opts = FiberOptions::default();
    if config.experiment == "theorem19" {
        theorem19_experiment(ctx, family, &panel, p, opts)
    } else {
        theorem110_experiment(ctx, family, &panel, p, config.params.angles, opts)
    }
}

fn theorem(config: &ExperimentConfig, ctx: &HermiteContext) -> Result<Outcome> {
    let family = fiber_family(config, ctx)?;
    let grids = [config.heisenberg_grid()?, config.heisenberg_companion()?];
    let mut t = Table::new("ratios", &["m_pts", "p", "index", "numerator", "denominator", "ratio"]);
    let mut per_p = Vec::new();
    let mut summary = Vec::new();
    for &p in &config.p {
        let mut stats = Vec::new();
        for g in grids {
            let s = theorem_stats(config, ctx, &family, g, p)?;
            for r in &s.rows {
                t.push(vec![g.z.m_pts.to_string(), num(p), r.index.to_string(), num(r.numerator), num(r.denominator), num(r.ratio)]);
            }
            stats.push((g.z.m_pts, s));
        }
        let change = relative_change(stats[0].1.max, stats[1].1.max);
        summary.push(format!(
            "{} family, p = {p}: max ratio {:.5} (m={}) / {:.5} (m={}), relative change {:.3}; L² ceiling {:.4}",
            family.tag(),
            stats[0].1.max,
            stats[0].0,
            stats[1].1.max,
            stats[1].0,
            change,
            stats[0].1.l2_bound
        ));
        if stats[0].1.zero_fiber_passed {
            summary.push("zero-frequency fiber passed through unchanged".into());
        }
        per_p.push(json!({
            "p": p,
            "stats": stats.iter().map(|(m, s)| json!({"m_pts": m, "stats": to_value(s)})).collect::<Vec<_>>(),
            "relative_change": change,
        }));
    }
    Ok(Outcome { result: json!({ "family": family.tag(), "per_p": per_p }), tables: vec![t], summary, failure: None })
}

fn calibration_outcome(rec: &CalibrationRecord) -> Outcome {
    let mut t = Table::new("calibration", &["l_z", "m_pts", "plancherel", "inversion", "special_norm"]);
    for s in &rec.samples {
        t.push(vec![num(s.l_z), s.m_pts.to_string(), num(s.plancherel), num(s.inversion), num(s.special_norm)]);
    }
    let summary = vec![
        format!("Plancherel {:.12}, inversion {:.12}, special-function norm {:.12}", rec.plancherel, rec.inversion, rec.special_norm),
        format!("drift across grids {:.2e}, deviation from 2π forms {:.2e}", rec.max_drift, rec.max_deviation),
    ];
    let failure = (!rec.stable).then(|| {
        format!("calibration constants unstable (drift {:.2e}, deviation {:.2e})", rec.max_drift, rec.max_deviation)
    });
    Outcome { result: to_value(rec), tables: vec![t], summary, failure }
}

#[cfg(test)]
pub(super) fn median_for_tests(values: &[f64]) -> f64 {
    median(values)
}
