use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::family::MultiplierFamily;
use super::identities::xi_grad_factorized;
use crate::error::{Error, Result};
use crate::hermite::{hermite_functions, HermiteContext, OperatorMatrix};
use crate::spectral;
use crate::weyl::{PhaseGridFunction, Quadrature, WeylEngine};
use crate::C64;

/// Relative step used for the fixed-basis operator derivative.
const ETA: f64 = 1e-4;

/// Which ordering of the ξ·∇ commutator enters the middle term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// T_{[m, ξ·∇]}
    MFirst,
    /// T_{[ξ·∇, m]}
    GradFirst,
}

/// B f = x ∂_x f + y ∂_y f by spectral differentiation along each axis.
pub fn grid_dilation(f: &PhaseGridFunction) -> PhaseGridFunction {
    let grid = f.grid();
    let m = grid.m_pts;
    let h = grid.h();
    let xs = grid.coords();
    let v = f.values();
    let mut out = DMatrix::zeros(m, m);
    for j in 0..m {
        let col: Vec<C64> = (0..m).map(|i| v[(i, j)]).collect();
        let d = spectral::derivative(&col, h);
        for i in 0..m {
            out[(i, j)] += xs[i] * d[i];
        }
    }
    for i in 0..m {
        let row: Vec<C64> = (0..m).map(|j| v[(i, j)]).collect();
        let d = spectral::derivative(&row, h);
        for j in 0..m {
            out[(i, j)] += xs[j] * d[j];
        }
    }
    PhaseGridFunction::from_values(grid, out).expect("shape preserved")
}

/// ‖a − b‖ / ‖a‖ over the inner half box |x|, |y| < L/2 (absolute when a vanishes there).
pub fn window_error(a: &PhaseGridFunction, b: &PhaseGridFunction) -> Result<f64> {
    a.check_same_grid(b)?;
    let grid = a.grid();
    let half = grid.l_z / 2.0;
    let xs = grid.coords();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..grid.m_pts {
        for j in 0..grid.m_pts {
            if xs[i].abs() < half && xs[j].abs() < half {
                num += (a.at(i, j) - b.at(i, j)).norm_sqr();
                den += a.at(i, j).norm_sqr();
            }
        }
    }
    Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
}

/// O(λ)_{kμ} = ⟨h^λ_k, h_μ⟩ with h^λ_k(ξ) = |λ|^{1/4} h_k(|λ|^{1/2} ξ), by quadrature on the context grid.
pub fn overlap_matrix(ctx: &HermiteContext, lambda: f64) -> Result<DMatrix<f64>> {
    ctx.require_planar()?;
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::Domain(format!("λ = {lambda} must be a nonzero real")));
    }
    let s = lambda.abs();
    let xs: Vec<f64> = ctx.xi_grid().iter().map(|x| x * s.sqrt()).collect();
    let scaled = hermite_functions(ctx.trunc(), &xs) * s.powf(0.25);
    Ok(scaled.transpose() * ctx.samples() * ctx.h_xi())
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

/// Scaled-basis matrix at λ of the operator derivative d/dλ m(λ) on L²(R), computed by
/// moving m(λ ± η) to the fixed λ = 1 basis with overlap matrices.
pub fn fixed_basis_derivative(ctx: &HermiteContext, family: &MultiplierFamily, lambda: f64) -> Result<OperatorMatrix> {
    let eta = ETA * lambda.abs();
    let (mp, mm) = (family.at(lambda + eta)?, family.at(lambda - eta)?);
    let n = ctx.n();
    if let (Some(a), Some(b)) = (mp.as_scalar(), mm.as_scalar()) {
        // scalar multiples of I do not depend on the basis
        return Ok(OperatorMatrix::identity(n, ctx.trunc()).scale((a - b) / (2.0 * eta)));
    }
    let fixed = |l: f64, m: &OperatorMatrix| -> Result<DMatrix<C64>> {
        let o = to_complex(&overlap_matrix(ctx, l)?);
        Ok(o.transpose() * m.entries() * o)
    };
    let d = (fixed(lambda + eta, &mp)? - fixed(lambda - eta, &mm)?) / C64::new(2.0 * eta, 0.0);
    let o = to_complex(&overlap_matrix(ctx, lambda)?);
    OperatorMatrix::from_entries(n, ctx.trunc(), &o * d * o.transpose())
}

/// The four pieces of 2λ d/dλ T^λ_{m(λ)} f at one λ, on a common grid.
#[derive(Clone, Debug)]
pub struct DerivativeTerms {
    pub lambda: f64,
    pub h_fd: f64,
    /// central difference 2λ (T^{λ+h} f − T^{λ−h} f) / 2h
    pub lhs: PhaseGridFunction,
    /// [B, T^λ_{m(λ)}] f
    pub commutator_b: PhaseGridFunction,
    /// T^λ_{[m(λ), ξ·∇]} f
    pub xi_grad: PhaseGridFunction,
    /// T^λ_{2λ m'(λ)} f
    pub lambda_deriv: PhaseGridFunction,
    pub report: DerivativeReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub family: String,
    pub lambda: f64,
    pub h_fd: f64,
    /// windowed relative residual with T_{[m, ξ·∇]}
    pub residual_m_first: f64,
    /// windowed relative residual with T_{[ξ·∇, m]}
    pub residual_grad_first: f64,
    pub winner: Convention,
    pub lhs_norm: f64,
    pub term_norms: [f64; 3],
}

fn check_step(lambda: f64, h_fd: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("the λ-derivative identity is implemented for λ > 0, got {lambda}")));
    }
    if !(h_fd > 0.0 && h_fd < lambda / 2.0) {
        return Err(Error::FdStep(format!("step {h_fd} must lie in (0, λ/2) at λ = {lambda}")));
    }
    Ok(())
}

/// Both sides of the λ-derivative decomposition for a band-limited test function `f`.
pub fn derivative_terms(
    ctx: &HermiteContext,
    family: &MultiplierFamily,
    lambda: f64,
    h_fd: f64,
    f: &PhaseGridFunction,
) -> Result<DerivativeTerms> {
    check_step(lambda, h_fd)?;
    let grid = f.grid();
    let engine = |l: f64| WeylEngine::with_lambda(ctx, grid, l, Quadrature::Adaptive);
    let (e0, ep, em) = (engine(lambda)?, engine(lambda + h_fd)?, engine(lambda - h_fd)?);
    let m = family.at(lambda)?;
    let up = ep.apply_multiplier(&family.at(lambda + h_fd)?, f)?;
    let down = em.apply_multiplier(&family.at(lambda - h_fd)?, f)?;
    let lhs = up.sub(&down)?.scale(C64::new(lambda / h_fd, 0.0));

    let tf = e0.apply_multiplier(&m, f)?;
    let commutator_b = grid_dilation(&tf).sub(&e0.apply_multiplier(&m, &grid_dilation(f))?)?;
    let xi = xi_grad_factorized(ctx)?;
    let xi_grad = e0.apply_multiplier(&m.commutator(&xi), f)?;
    let d = fixed_basis_derivative(ctx, family, lambda)?;
    let lambda_deriv = e0.apply_multiplier(&d.scale_re(2.0 * lambda), f)?;

    let base = commutator_b.add(&lambda_deriv)?;
    let residual_m_first = window_error(&lhs, &base.add(&xi_grad)?)?;
    let residual_grad_first = window_error(&lhs, &base.sub(&xi_grad)?)?;
    let winner = if residual_m_first <= residual_grad_first { Convention::MFirst } else { Convention::GradFirst };
    let report = DerivativeReport {
        family: family.tag().to_string(),
        lambda,
        h_fd,
        residual_m_first,
        residual_grad_first,
        winner,
        lhs_norm: lhs.l2_norm(),
        term_norms: [commutator_b.l2_norm(), xi_grad.l2_norm(), lambda_deriv.l2_norm()],
    };
    Ok(DerivativeTerms { lambda, h_fd, lhs, commutator_b, xi_grad, lambda_deriv, report })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeHalving {
    pub coarse: DerivativeReport,
    pub fine: DerivativeReport,
    /// winning residual at h over winning residual at h/2
    pub ratio: f64,
    pub winner: Convention,
}

/// Runs the decomposition at h and h/2 and reports the convergence ratio of the winning convention.
pub fn derivative_halving(
    ctx: &HermiteContext,
    family: &MultiplierFamily,
    lambda: f64,
    h_fd: f64,
    f: &PhaseGridFunction,
) -> Result<DerivativeHalving> {
    let coarse = derivative_terms(ctx, family, lambda, h_fd, f)?.report;
    let fine = derivative_terms(ctx, family, lambda, h_fd / 2.0, f)?.report;
    let pick = |r: &DerivativeReport| match coarse.winner {
        Convention::MFirst => r.residual_m_first,
        Convention::GradFirst => r.residual_grad_first,
    };
    let (rc, rf) = (pick(&coarse), pick(&fine));
    let ratio = if rf == 0.0 { f64::INFINITY } else { rc / rf };
    if rc > 1e-2 && ratio < 2.0 {
        return Err(Error::FdStep(format!(
            "step {h_fd} is outside the second-order regime: residual {rc:.3e}, halving ratio {ratio:.2}"
        )));
    }
    Ok(DerivativeHalving { winner: coarse.winner, coarse, fine, ratio })
}
