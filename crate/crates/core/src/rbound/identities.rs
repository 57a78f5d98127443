use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::family::riesz_matrix;
use super::lambda::grid_dilation;
use super::{rademacher_estimate, SignMode};
use crate::derivation::{delta, delta_bar, heat_band, heat_band_semigroup, max_order, scaled_delta, scaled_delta_bar};
use crate::error::{Error, Result};
use crate::hermite::{HermiteContext, OperatorMatrix};
use crate::maximal::GridOperator;
use crate::spectral;
use crate::weyl::{special_hermite_fn, special_hermite_scalar, PhaseGridFunction, WeylEngine, TWO_PI};
use crate::C64;

/// Matrix of ξ ∂_ξ from (A² − A*² + [A*, A]) / 4.
pub fn xi_grad_factorized(ctx: &HermiteContext) -> Result<OperatorMatrix> {
    ctx.require_planar()?;
    let a = ctx.annihilation(1)?;
    let ad = ctx.creation(1)?;
    let sum = &(&(&a * &a) - &(&ad * &ad)) + &ad.commutator(&a);
    Ok(sum.scale_re(0.25).with_margin(2))
}

/// Matrix of ξ ∂_ξ by quadrature, with ∂_ξ h_l from FFT differentiation of the samples.
pub fn spectral_xi_grad(ctx: &HermiteContext) -> Result<OperatorMatrix> {
    ctx.require_planar()?;
    let s = ctx.samples();
    let (pts, n) = (ctx.points(), ctx.trunc());
    let xs = ctx.xi_grid();
    let mut d = DMatrix::<f64>::zeros(pts, n);
    for l in 0..n {
        let col: Vec<C64> = (0..pts).map(|i| C64::new(s[(i, l)], 0.0)).collect();
        for (i, v) in spectral::derivative(&col, ctx.h_xi()).into_iter().enumerate() {
            d[(i, l)] = v.re * xs[i];
        }
    }
    let x = s.transpose() * d * ctx.h_xi();
    OperatorMatrix::from_entries(1, n, x.map(|v| C64::new(v, 0.0))).map(|m| m.with_margin(1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop42Residuals {
    pub lambda: f64,
    /// [A*(λ), A(λ)] + 2|λ| I on the interior
    pub ladder_commutator: f64,
    /// 4|λ| ξ∂ (quadrature) against A(λ)² − A*(λ)² + [A*(λ), A(λ)]
    pub xi_grad: f64,
    /// 4|λ|[m, ξ∂] (quadrature ξ∂) against the four-term expansion
    pub expansion: f64,
    /// same with the factorized ξ∂
    pub expansion_factorized: f64,
    /// interior max |4|λ|[m, ξ∂]|, for scale
    pub lhs_scale: f64,
}

/// Residuals of the ladder identities behind the ξ·∇ factorization and of the
/// four-term expansion of 4λ[m, ξ∂] in λ-derivations of m.
pub fn prop42_identity(ctx: &HermiteContext, m: &OperatorMatrix, lambda: f64) -> Result<Prop42Residuals> {
    let limit = max_order(ctx);
    if m.margin() + 2 > limit {
        return Err(Error::MarginExhausted { order: m.margin() + 2, limit });
    }
    let ops = ctx.scaled_operators(lambda)?;
    let s = lambda.abs();
    let (a, ad) = (&ops.annihilation[0], &ops.creation[0]);
    let id = OperatorMatrix::identity(ctx.n(), ctx.trunc());
    let comm = ad.commutator(a);
    let ladder_commutator = comm.interior_residual(&id.scale_re(-2.0 * s));

    let x_spec = spectral_xi_grad(ctx)?;
    let x_fact = xi_grad_factorized(ctx)?;
    let rhs_x = &(&(a * a) - &(ad * ad)) + &comm;
    let xi_grad = x_spec.scale_re(4.0 * s).with_margin(2).interior_residual(&rhs_x.with_margin(2));

    let r = s.sqrt();
    let dm = scaled_delta(ctx, m, 1, lambda)?;
    let dbm = scaled_delta_bar(ctx, m, 1, lambda)?;
    let four = &(&(&(&dm * a) + &(a * &dm)) + &(&dbm * ad)) + &(ad * &dbm);
    let four = four.scale_re(r).with_margin(m.margin() + 2);
    let lhs = m.commutator(&x_spec).scale_re(4.0 * s).with_margin(m.margin() + 2);
    let lhs_f = m.commutator(&x_fact).scale_re(4.0 * s).with_margin(m.margin() + 2);
    Ok(Prop42Residuals {
        lambda,
        ladder_commutator,
        xi_grad,
        expansion: lhs.interior_residual(&four),
        expansion_factorized: lhs_f.interior_residual(&four),
        lhs_scale: lhs.interior_max_abs(),
    })
}

/// Interior residuals of the closed-form operator identities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// H − ½(AA* + A*A)
    pub hermite_sum: f64,
    /// [A*, A] + 2I
    pub ladder_commutator: f64,
    /// δ̄H^{−1/2} − ((H−2)^{−1/2} − H^{−1/2})A*
    pub delta_bar_inv_root: f64,
    /// δH^{−1/2} − (H^{−1/2} − (H+2)^{−1/2})A, the form consistent with δm = [m, A]
    pub delta_inv_root: f64,
    /// δH^{−1/2} − ((H+2)^{−1/2} − H^{−1/2})A, the printed form
    pub delta_inv_root_printed: f64,
    /// δH^{−1/2} + ((H+2)^{−1/2} − H^{−1/2})A: the printed form is exactly −δH^{−1/2}
    pub delta_inv_root_printed_negated: f64,
    /// max over j ≤ 8 of the gap between the two closed forms of the heat band S_j
    pub heat_band_forms: f64,
}

pub fn identity_residuals(ctx: &HermiteContext) -> Result<IdentityResiduals> {
    let a = ctx.annihilation(1)?;
    let ad = ctx.creation(1)?;
    let h = ctx.hermite_operator();
    let half = (&(&a * &ad) + &(&ad * &a)).scale_re(0.5);
    let id = OperatorMatrix::identity(ctx.n(), ctx.trunc());
    let inv_root = |shift: f64| ctx.spectral_function(|t| t.powf(-0.5), shift);
    // H − 2 has a non-positive eigenvalue on level 0; the spectral map sends it to 0,
    // which only touches the row killed by A* anyway.
    let (h0, hm2, hp2) = (inv_root(0.0)?, inv_root(-2.0)?, inv_root(2.0)?);
    let dbar = delta_bar(ctx, &h0, 1)?;
    let d = delta(ctx, &h0, 1)?;
    let rhs_bar = (&(&hm2 - &h0) * &ad).with_margin(1);
    let rhs = (&(&h0 - &hp2) * &a).with_margin(1);
    let printed = (&(&hp2 - &h0) * &a).with_margin(1);
    let heat_band_forms = (1..=8)
        .map(|j| (&heat_band(ctx, j) - &heat_band_semigroup(ctx, j)).interior_max_abs_with(0))
        .fold(0.0, f64::max);
    Ok(IdentityResiduals {
        hermite_sum: h.interior_residual(&half.with_margin(1)),
        ladder_commutator: ad.commutator(&a).interior_residual(&id.scale_re(-2.0).with_margin(1)),
        delta_bar_inv_root: dbar.interior_residual(&rhs_bar),
        delta_inv_root: d.interior_residual(&rhs),
        delta_inv_root_printed: d.interior_residual(&printed),
        delta_inv_root_printed_negated: d.interior_residual(&printed.scale_re(-1.0)),
        heat_band_forms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub alpha: usize,
    /// ‖S‖²_HS from the matrix S built with W(Φ̄_{αβ}) = (2π)^{1/2}|h_β⟩⟨h_α|
    pub direct: f64,
    /// (2α+2)‖δ(AH^{−1/2})h_β‖² + 2α‖δ̄(AH^{−1/2})h_β‖², for the unit rank-one W(f)
    pub closed_form: f64,
    /// |direct − 2π·closed_form| / (2π·closed_form)
    pub relative_difference: f64,
    pub hs_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleTable {
    pub beta: usize,
    /// ‖f‖₂ = ‖W(f)‖_HS / (2π)^{1/2} for every row
    pub f_norm: f64,
    pub rows: Vec<CounterexampleRow>,
    /// least-squares slope of log ‖S‖_HS against log α over rows with 8 ≤ α ≤ 64
    pub slope: Option<f64>,
    /// ‖S(64)‖_HS / ‖S(16)‖_HS when both were computed
    pub growth_ratio: Option<f64>,
    /// ‖S‖²_HS strictly increasing along the rows
    pub monotone: bool,
    pub identities: IdentityResiduals,
}

/// ‖δ(AH^{−1/2})h_β‖ and the scalar c with δ̄(AH^{−1/2})h_β = c h_β, from the ladder actions.
fn riesz_derivation_norms(beta: usize) -> (f64, f64) {
    let b = beta as f64;
    let d = if beta >= 2 {
        (2.0 * b * (2.0 * b - 2.0)).sqrt() * ((2.0 * b - 1.0).powf(-0.5) - (2.0 * b + 1.0).powf(-0.5))
    } else {
        0.0
    };
    let c = 2.0 * b / (2.0 * b + 1.0).sqrt() - (2.0 * b + 2.0) / (2.0 * b + 3.0).sqrt();
    (d.abs(), c)
}

fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// ‖S‖_HS for S = δ̄(AH^{−1/2})W(f)A* + δ(AH^{−1/2})W(f)A with f = Φ̄_{αβ}, ‖f‖₂ = 1.
pub fn counterexample_theorem16(ctx: &HermiteContext, alphas: &[usize], beta: usize) -> Result<CounterexampleTable> {
    ctx.require_planar()?;
    let n = ctx.trunc();
    if alphas.is_empty() || alphas.iter().any(|&a| a == 0 || a + 2 >= n) {
        return Err(Error::Truncation(format!("every α must satisfy 1 ≤ α and α + 2 < N = {n}")));
    }
    if beta + 2 >= n {
        return Err(Error::Truncation(format!("β = {beta} must satisfy β < N − 2 = {}", n - 2)));
    }
    let r = riesz_matrix(ctx)?;
    let a = ctx.annihilation(1)?;
    let ad = ctx.creation(1)?;
    let dbar = delta_bar(ctx, &r, 1)?;
    let d = delta(ctx, &r, 1)?;
    let kappa = special_hermite_scalar();
    let (dn, c) = riesz_derivation_norms(beta);
    let mut rows = Vec::with_capacity(alphas.len());
    let mut f_norm: f64 = 0.0;
    for &alpha in alphas {
        let w = OperatorMatrix::elementary(1, n, beta, alpha, C64::new(kappa, 0.0));
        f_norm = f_norm.max(w.hs_norm() / TWO_PI.sqrt());
        let s = &(&(&dbar * &w) * &ad) + &(&(&d * &w) * &a);
        let direct = s.hs_norm().powi(2);
        let al = alpha as f64;
        let closed_form = (2.0 * al + 2.0) * dn * dn + 2.0 * al * c * c;
        let scaled = TWO_PI * closed_form;
        rows.push(CounterexampleRow {
            alpha,
            direct,
            closed_form,
            relative_difference: (direct - scaled).abs() / scaled,
            hs_norm: direct.sqrt(),
        });
    }
    let fit: Vec<(f64, f64)> =
        rows.iter().filter(|r| (8..=64).contains(&r.alpha)).map(|r| (r.alpha as f64, r.hs_norm)).collect();
    let find = |al: usize| rows.iter().find(|r| r.alpha == al).map(|r| r.hs_norm);
    let growth_ratio = match (find(64), find(16)) {
        (Some(x), Some(y)) => Some(x / y),
        _ => None,
    };
    let monotone = rows.windows(2).all(|w| w[1].direct > w[0].direct);
    Ok(CounterexampleTable {
        beta,
        f_norm,
        slope: loglog_slope(&fit),
        growth_ratio,
        monotone,
        rows,
        identities: identity_residuals(ctx)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszGrowth {
    pub beta: usize,
    /// (α, ‖[B, T_R] Φ̄_{αβ}‖₂ / ‖Φ̄_{αβ}‖₂)
    pub rows: Vec<(usize, f64)>,
    /// Rademacher estimate over the panel {Φ̄_{α'β} : α' ≤ α}, per row
    pub panel_constants: Vec<f64>,
    /// per-α ratios strictly increasing
    pub monotone: bool,
}

/// Grid statistic of the commutator [B, T_R] of the dilation generator with the Riesz multiplier.
pub fn riesz_commutator_growth(engine: &WeylEngine, ctx: &HermiteContext, alphas: &[usize], beta: usize) -> Result<RieszGrowth> {
    let r = riesz_matrix(ctx)?;
    let op = |f: &PhaseGridFunction| -> Result<PhaseGridFunction> {
        let tf = engine.apply_multiplier(&r, f)?;
        grid_dilation(&tf).sub(&engine.apply_multiplier(&r, &grid_dilation(f))?)
    };
    let member: &GridOperator<'_> = &op;
    let mut rows = Vec::with_capacity(alphas.len());
    let mut panel: Vec<Vec<PhaseGridFunction>> = Vec::new();
    let mut panel_constants = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let f = special_hermite_fn(engine, alpha, beta)?.conj();
        rows.push((alpha, op(&f)?.l2_norm() / f.l2_norm()));
        panel.push(vec![f]);
        panel_constants.push(rademacher_estimate(&[member], &panel, 2.0, SignMode::Exact)?.constant);
    }
    let monotone = rows.windows(2).all(|w| w[1].1 > w[0].1);
    Ok(RieszGrowth { beta, rows, panel_constants, monotone })
}
