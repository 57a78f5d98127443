use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::apply::{apply_fiber_multiplier, fiber_multiplier_matrix, FiberLog, FiberOptions};
use super::{fiber_inverse, fiber_transform, FiberSet, HeisenbergGrid, HeisenbergGridFunction};
use crate::error::{Error, Result};
use crate::hermite::{HermiteContext, OperatorMatrix};
use crate::rbound::{spectral_family, MultiplierFamily};
use crate::weyl::{polyradial_project, Quadrature, WeylEngine};
use crate::C64;

/// Random functions Σ_λ g_λ(z) e^{−iλt} with W_λ(g_λ) a complex Gaussian
/// matrix supported on indices < `band`, normalized to ‖f‖₂ = 1. The draws
/// depend only on the seed, so the same panel can be sampled on several grids.
pub fn heisenberg_panel(
    ctx: &HermiteContext,
    grid: HeisenbergGrid,
    seed: u64,
    count: usize,
    band: usize,
    lambdas: &[f64],
) -> Result<Vec<HeisenbergGridFunction>> {
    let n = ctx.trunc();
    if band == 0 || band > n {
        return Err(Error::InvalidArgument(format!("band limit {band} outside 1..={n}")));
    }
    let engines: Vec<WeylEngine> =
        lambdas.iter().map(|&l| WeylEngine::with_lambda(ctx, grid.z, l, Quadrature::Adaptive)).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut f = HeisenbergGridFunction::zeros(grid);
        for (engine, &l) in engines.iter().zip(lambdas) {
            let mut c = OperatorMatrix::zeros(1, n);
            for a in 0..band {
                for b in 0..band {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    c.entries_mut()[(a, b)] = C64::new(re, im);
                }
            }
            let g = engine.inverse(&c)?;
            let tone = HeisenbergGridFunction::from_slices(
                grid,
                (0..grid.t_pts).map(|k| g.scale(C64::from_polar(1.0, -l * grid.t(k)))).collect(),
            )?;
            f = f.add(&tone)?;
        }
        let norm = f.l2_norm();
        if norm == 0.0 {
            return Err(Error::ZeroNorm("panel function vanishes".into()));
        }
        out.push(f.scale(C64::new(1.0 / norm, 0.0)));
    }
    Ok(out)
}

/// T_m f: fiber transform, per-fiber multiplier, inverse transform.
pub fn pipeline(
    ctx: &HermiteContext,
    family: &MultiplierFamily,
    f: &HeisenbergGridFunction,
    options: FiberOptions,
) -> Result<(HeisenbergGridFunction, FiberLog)> {
    let (set, log) = apply_fiber_multiplier(ctx, family, &fiber_transform(f)?, options)?;
    Ok((fiber_inverse(&set)?, log))
}

/// Polyradial projection of every fiber, the zero fiber included.
pub fn polyradial_fibers(set: &FiberSet, angles: usize) -> Result<FiberSet> {
    let fibers = set.fibers().par_iter().map(|f| polyradial_project(f, angles)).collect::<Result<Vec<_>>>()?;
    Ok(set.with_fibers(fibers, polyradial_project(set.zero_fiber(), angles)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub index: usize,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremStats {
    pub family: String,
    pub p: f64,
    pub rows: Vec<RatioRow>,
    pub max: f64,
    /// p = 2 ceiling from the per-fiber operator norms over the applied fibers
    pub l2_bound: f64,
    pub excluded: Vec<f64>,
    pub zero_fiber_passed: bool,
}

fn ratio_row(index: usize, numerator: f64, denominator: f64) -> Result<RatioRow> {
    if denominator == 0.0 {
        return Err(Error::ZeroNorm(format!("panel entry {index} has a vanishing denominator")));
    }
    Ok(RatioRow { index, numerator, denominator, ratio: numerator / denominator })
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("exponent p = {p} must be finite and ≥ 1")));
    }
    Ok(())
}

fn collect_stats(family: &MultiplierFamily, p: f64, rows: Vec<RatioRow>, logs: &[FiberLog], bound: f64) -> TheoremStats {
    let mut excluded: Vec<f64> = logs.iter().flat_map(|l| l.excluded.iter().copied()).collect();
    excluded.sort_by(f64::total_cmp);
    excluded.dedup();
    if !excluded.is_empty() {
        log::warn!("fibers excluded from the multiplier action: {excluded:?}");
    }
    TheoremStats {
        family: family.tag().to_string(),
        p,
        max: rows.iter().map(|r| r.ratio).fold(0.0, f64::max),
        rows,
        l2_bound: bound,
        excluded,
        zero_fiber_passed: logs.iter().any(|l| l.zero_fiber_passed),
    }
}

fn applied(logs: &[FiberLog]) -> Vec<f64> {
    let mut ls: Vec<f64> = logs.iter().flat_map(|l| l.applied.iter().copied()).collect();
    ls.sort_by(f64::total_cmp);
    ls.dedup();
    ls
}

/// ‖T_m f‖_p / ‖L^{1/2} f‖_p, with L^{1/2} acting on each fiber as W_λ ↦ H(λ)^{1/2} W_λ.
pub fn theorem19_experiment(
    ctx: &HermiteContext,
    family: &MultiplierFamily,
    panel: &[HeisenbergGridFunction],
    p: f64,
    options: FiberOptions,
) -> Result<TheoremStats> {
    check_p(p)?;
    let root = spectral_family(ctx, &[1.0], "sublaplacian-root", f64::sqrt, None)?;
    let mut rows = Vec::with_capacity(panel.len());
    let mut logs = Vec::new();
    for (k, f) in panel.iter().enumerate() {
        let (tf, log) = pipeline(ctx, family, f, options)?;
        let (lf, _) = pipeline(ctx, &root, f, options)?;
        rows.push(ratio_row(k, tf.lp_norm(p), lf.lp_norm(p))?);
        logs.push(log);
    }
    let inv_root = ctx.spectral_function(|t| t.powf(-0.5), 0.0)?;
    let mut bound: f64 = 0.0;
    for l in applied(&logs) {
        let m = fiber_multiplier_matrix(ctx, family, l)?;
        bound = bound.max((&m * &inv_root).op_norm() / l.abs().sqrt());
    }
    Ok(collect_stats(family, p, rows, &logs, bound))
}

/// ‖R T_m R f‖_p / ‖f‖_p with R the polyradial projection of each fiber.
pub fn theorem110_experiment(
    ctx: &HermiteContext,
    family: &MultiplierFamily,
    panel: &[HeisenbergGridFunction],
    p: f64,
    angles: usize,
    options: FiberOptions,
) -> Result<TheoremStats> {
    check_p(p)?;
    let mut rows = Vec::with_capacity(panel.len());
    let mut logs = Vec::new();
    for (k, f) in panel.iter().enumerate() {
        let rf = polyradial_fibers(&fiber_transform(f)?, angles)?;
        let (tf, log) = apply_fiber_multiplier(ctx, family, &rf, options)?;
        let out = fiber_inverse(&polyradial_fibers(&tf, angles)?)?;
        rows.push(ratio_row(k, out.lp_norm(p), f.lp_norm(p))?);
        logs.push(log);
    }
    let mut bound: f64 = 0.0;
    for l in applied(&logs) {
        bound = bound.max(fiber_multiplier_matrix(ctx, family, l)?.op_norm());
    }
    Ok(collect_stats(family, p, rows, &logs, bound))
}

/// Relative difference between T(τ_s f) and τ_s(T f) for a t-shift of `steps` points.
pub fn translation_defect(
    ctx: &HermiteContext,
    family: &MultiplierFamily,
    f: &HeisenbergGridFunction,
    steps: usize,
    options: FiberOptions,
) -> Result<f64> {
    let (a, _) = pipeline(ctx, family, &f.translate_t(steps), options)?;
    let (b, _) = pipeline(ctx, family, f, options)?;
    a.relative_l2_error(&b.translate_t(steps))
}

/// |Σ_λ ‖f^λ‖² Δλ/2π − ‖f‖²| / ‖f‖².
pub fn parseval_defect(f: &HeisenbergGridFunction) -> Result<f64> {
    let mass = fiber_transform(f)?.plancherel_mass();
    let n2 = f.l2_norm().powi(2);
    if n2 == 0.0 {
        return Err(Error::ZeroNorm("Parseval check on the zero function".into()));
    }
    Ok((mass - n2).abs() / n2)
}

fn set_distance(a: &FiberSet, b: &FiberSet) -> Result<(f64, f64)> {
    let mut num = 0.0;
    let mut den = 0.0;
    let pairs = a.fibers().iter().zip(b.fibers()).chain(std::iter::once((a.zero_fiber(), b.zero_fiber())));
    for (x, y) in pairs {
        num += x.sub(y)?.l2_norm().powi(2);
        den += y.l2_norm().powi(2);
    }
    Ok((num.sqrt(), den.sqrt()))
}

/// Relative difference between R T f and T R f over all fibers.
pub fn r_commutation_defect(
    ctx: &HermiteContext,
    family: &MultiplierFamily,
    f: &HeisenbergGridFunction,
    angles: usize,
    options: FiberOptions,
) -> Result<f64> {
    let set = fiber_transform(f)?;
    let (tf, _) = apply_fiber_multiplier(ctx, family, &set, options)?;
    let rt = polyradial_fibers(&tf, angles)?;
    let (tr, _) = apply_fiber_multiplier(ctx, family, &polyradial_fibers(&set, angles)?, options)?;
    let (num, den) = set_distance(&rt, &tr)?;
    Ok(if den == 0.0 { num } else { num / den })
}
