use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FiberSet;
use crate::error::{Error, Result};
use crate::hermite::{HermiteContext, OperatorMatrix};
use crate::rbound::MultiplierFamily;
use crate::weyl::{PhaseGrid, PhaseGridFunction, Quadrature, WeylEngine};

/// Base frequency of the whitelist {±4^k λ₀}.
pub const LAMBDA_0: f64 = 1.0;

/// Whether |λ| = 4^k λ₀ for an integer k.
pub fn on_whitelist(lambda: f64) -> bool {
    if lambda == 0.0 || !lambda.is_finite() {
        return false;
    }
    let k = (lambda.abs() / LAMBDA_0).log(4.0);
    (k - k.round()).abs() < 1e-12
}

/// How a single positive-λ fiber is pushed through the multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Dilate by √λ (relabel the samples onto the box √λ·L), apply the λ = 1
    /// machinery with the scaled-basis matrix, dilate back.
    Conjugation,
    /// λ-engine on the original grid.
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberOptions {
    pub route: Route,
    /// Allow frequencies off the whitelist; they go through the direct route.
    pub interpolate: bool,
    /// Off-whitelist fibers with ‖f^λ‖ ≤ negligible · max‖f^μ‖ pass through untouched.
    pub negligible: f64,
}

impl Default for FiberOptions {
    fn default() -> Self {
        Self { route: Route::Conjugation, interpolate: false, negligible: 1e-12 }
    }
}

/// What happened to each fiber in one application.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FiberLog {
    pub applied: Vec<f64>,
    /// fibers that were identically zero
    pub skipped_zero: Vec<f64>,
    /// negligible off-whitelist fibers passed through unchanged
    pub excluded: Vec<f64>,
    /// off-whitelist fibers sent through the direct route
    pub off_whitelist: Vec<f64>,
    pub zero_fiber_passed: bool,
}

fn dilated_grid(grid: PhaseGrid, lambda: f64) -> PhaseGrid {
    PhaseGrid { l_z: grid.l_z * lambda.sqrt(), m_pts: grid.m_pts }
}

fn relabel(f: &PhaseGridFunction, grid: PhaseGrid) -> PhaseGridFunction {
    PhaseGridFunction::from_values(grid, f.values().clone()).expect("relabel keeps the shape")
}

/// T^λ_m f for one fiber, with m given in the λ-scaled basis. Negative λ uses
/// T^{−μ}_m f = conj(T^μ_{m̄} f̄), which follows from π_{−μ}(z) = C π_μ(z) C
/// with C complex conjugation.
pub fn apply_fiber(
    ctx: &HermiteContext,
    lambda: f64,
    m: &OperatorMatrix,
    f: &PhaseGridFunction,
    route: Route,
) -> Result<PhaseGridFunction> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::Domain(format!("fiber multiplier needs a nonzero λ, got {lambda}")));
    }
    if m.is_identity() {
        return Ok(f.clone());
    }
    if lambda < 0.0 {
        return Ok(apply_fiber(ctx, -lambda, &m.conj(), &f.conj(), route)?.conj());
    }
    let grid = f.grid();
    match route {
        Route::Conjugation => {
            // δ_r g(z) = g(rz) on the grid of spacing h is the same sample array on spacing h/r
            let wide = dilated_grid(grid, lambda);
            let engine = WeylEngine::with_lambda(ctx, wide, 1.0, Quadrature::Adaptive)?;
            let out = engine.apply_multiplier(m, &relabel(f, wide))?;
            Ok(relabel(&out, grid))
        }
        Route::Direct => WeylEngine::with_lambda(ctx, grid, lambda, Quadrature::Adaptive)?.apply_multiplier(m, f),
    }
}

/// Relative L² difference of the two routes at one λ.
pub fn two_path_agreement(
    ctx: &HermiteContext,
    lambda: f64,
    m: &OperatorMatrix,
    f: &PhaseGridFunction,
) -> Result<f64> {
    let a = apply_fiber(ctx, lambda, m, f, Route::Conjugation)?;
    let b = apply_fiber(ctx, lambda, m, f, Route::Direct)?;
    a.relative_l2_error(&b)
}

/// m(λ) as a scaled-basis matrix, checked against the context truncation.
pub fn fiber_multiplier_matrix(ctx: &HermiteContext, family: &MultiplierFamily, lambda: f64) -> Result<OperatorMatrix> {
    if family.trunc() != ctx.trunc() {
        return Err(Error::InvalidArgument(format!(
            "family truncation {} does not match context truncation {}",
            family.trunc(),
            ctx.trunc()
        )));
    }
    family.at(lambda)
}

enum Action {
    Apply,
    SkipZero,
    Exclude,
    Direct,
}

/// Per-fiber T^λ_{m(λ)} f^λ; the λ = 0 fiber passes through with a warning.
pub fn apply_fiber_multiplier(
    ctx: &HermiteContext,
    family: &MultiplierFamily,
    fibers: &FiberSet,
    options: FiberOptions,
) -> Result<(FiberSet, FiberLog)> {
    let lambdas = fibers.lambdas();
    let norms: Vec<f64> = fibers.fibers().iter().map(|f| f.l2_norm()).collect();
    let top = norms.iter().copied().fold(0.0, f64::max);
    let mut actions = Vec::with_capacity(lambdas.len());
    for (&l, &nrm) in lambdas.iter().zip(&norms) {
        let action = if nrm == 0.0 {
            Action::SkipZero
        } else if on_whitelist(l) {
            Action::Apply
        } else if options.interpolate {
            Action::Direct
        } else if nrm <= options.negligible * top {
            Action::Exclude
        } else {
            return Err(Error::Resample(format!(
                "fiber λ = {l} is off the whitelist {{±4^k·{LAMBDA_0}}} and interpolation is disabled"
            )));
        };
        actions.push(action);
    }
    let out: Vec<PhaseGridFunction> = fibers
        .fibers()
        .par_iter()
        .zip(lambdas.par_iter())
        .zip(actions.par_iter())
        .map(|((f, &l), action)| match action {
            Action::SkipZero | Action::Exclude => Ok(f.clone()),
            Action::Apply => apply_fiber(ctx, l, &fiber_multiplier_matrix(ctx, family, l)?, f, options.route),
            Action::Direct => apply_fiber(ctx, l, &fiber_multiplier_matrix(ctx, family, l)?, f, Route::Direct),
        })
        .collect::<Result<_>>()?;

    let mut log = FiberLog::default();
    for (&l, action) in lambdas.iter().zip(&actions) {
        match action {
            Action::Apply => log.applied.push(l),
            Action::SkipZero => log.skipped_zero.push(l),
            Action::Exclude => log.excluded.push(l),
            Action::Direct => log.off_whitelist.push(l),
        }
    }
    if fibers.zero_fiber().l2_norm() > 0.0 {
        log::warn!("λ = 0 fiber passed through unchanged (norm {:.3e})", fibers.zero_fiber().l2_norm());
        log.zero_fiber_passed = true;
    }
    if !log.excluded.is_empty() {
        log::warn!("{} negligible off-whitelist fibers excluded: {:?}", log.excluded.len(), log.excluded);
    }
    Ok((fibers.with_fibers(out, fibers.zero_fiber().clone()), log))
}
