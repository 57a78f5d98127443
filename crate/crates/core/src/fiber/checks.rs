use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::apply::{apply_fiber, on_whitelist, Route};
use crate::error::{Error, Result};
use crate::hermite::{hermite_functions, HermiteContext, OperatorMatrix};
use crate::weyl::{twist_modulate, PhaseGridFunction, Quadrature, WeylEngine};
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorFieldRow {
    pub identity: String,
    /// whether the left side involves grid differences
    pub differentiated: bool,
    /// residual against the form that holds with our transform conventions
    pub derived: f64,
    /// residual against the textbook form with the ladder operators on the other side
    pub literal: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorFieldReport {
    pub lambda: f64,
    pub h: f64,
    pub rows: Vec<VectorFieldRow>,
}

impl VectorFieldReport {
    pub fn max_derived(&self) -> f64 {
        self.rows.iter().map(|r| r.derived).fold(0.0, f64::max)
    }
}

/// Centered difference along x (axis 0) or y (axis 1), periodic.
fn centered(f: &PhaseGridFunction, axis: usize) -> PhaseGridFunction {
    let grid = f.grid();
    let m = grid.m_pts;
    let c = C64::new(1.0 / (2.0 * grid.h()), 0.0);
    let v = f.values();
    let values = DMatrix::from_fn(m, m, |i, j| {
        let (a, b) = if axis == 0 {
            (v[((i + 1) % m, j)], v[((i + m - 1) % m, j)])
        } else {
            (v[(i, (j + 1) % m)], v[(i, (j + m - 1) % m)])
        };
        (a - b) * c
    });
    PhaseGridFunction::from_values(grid, values).expect("shape preserved")
}

/// ∂_z f + s·(λ/4) z̄ f when `bar` is false, ∂_z̄ f + s·(λ/4) z f when true.
fn field(f: &PhaseGridFunction, lambda: f64, bar: bool, s: f64) -> PhaseGridFunction {
    let fx = centered(f, 0);
    let fy = centered(f, 1);
    let i = C64::new(0.0, 1.0);
    let q = s * lambda / 4.0;
    let dir = if bar { i } else { -i };
    let d = fx.add(&fy.scale(dir)).expect("same grid").scale(C64::new(0.5, 0.0));
    d.add(&f.map_xy(|x, y, v| v * q * if bar { C64::new(x, y) } else { C64::new(x, -y) })).expect("same grid")
}

/// L_λ f = −Δf + iλ(x∂_y − y∂_x)f + (λ²/4)|z|²f, the expanded form of −2(ZZ̄ + Z̄Z),
/// with the five-point Laplacian and centered first differences.
fn special_hermite_operator(f: &PhaseGridFunction, lambda: f64) -> PhaseGridFunction {
    let grid = f.grid();
    let m = grid.m_pts;
    let h2 = grid.h() * grid.h();
    let xs = grid.coords();
    let (fx, fy) = (centered(f, 0), centered(f, 1));
    let v = f.values();
    let values = DMatrix::from_fn(m, m, |i, j| {
        let lap = (v[((i + 1) % m, j)] + v[((i + m - 1) % m, j)] + v[(i, (j + 1) % m)] + v[(i, (j + m - 1) % m)]
            - v[(i, j)] * 4.0)
            / h2;
        let (x, y) = (xs[i], xs[j]);
        let rot = (fy.at(i, j) * x - fx.at(i, j) * y) * C64::new(0.0, lambda);
        -lap + rot + v[(i, j)] * (lambda * lambda / 4.0 * (x * x + y * y))
    });
    PhaseGridFunction::from_values(grid, values).expect("shape preserved")
}

/// ‖lhs − rhs‖ over the larger side, floored at `floor` so that identities whose
/// exact value vanishes (Z̄ on Φ₀₀) report the absolute grid-difference error.
fn rel(lhs: &OperatorMatrix, rhs: &OperatorMatrix, floor: f64) -> f64 {
    let d = (lhs - rhs).hs_norm();
    let scale = lhs.hs_norm().max(rhs.hs_norm()).max(floor);
    if scale == 0.0 {
        0.0
    } else {
        d / scale
    }
}

/// Residuals of the transform identities for Z(λ), Z̄(λ), their right-invariant
/// counterparts, multiplication by z and z̄, and L_λ = −2(ZZ̄ + Z̄Z), with the
/// vector fields taken by centered grid differences.
pub fn vector_field_checks(ctx: &HermiteContext, lambda: f64, f: &PhaseGridFunction) -> Result<VectorFieldReport> {
    if lambda <= 0.0 {
        return Err(Error::Domain(format!("vector-field identities are checked for λ > 0, got {lambda}")));
    }
    if !on_whitelist(lambda) {
        return Err(Error::Resample(format!("λ = {lambda} is off the whitelist")));
    }
    let engine = WeylEngine::with_lambda(ctx, f.grid(), lambda, Quadrature::Adaptive)?;
    let ops = ctx.scaled_operators(lambda)?;
    let (a, ad, h) = (&ops.annihilation[0], &ops.creation[0], &ops.hermite);
    let w = engine.transform(f)?;
    let i = C64::new(0.0, 1.0);
    let mi2 = C64::new(0.0, -0.5);
    let lw = |g: &PhaseGridFunction| engine.transform(g);

    let z = field(f, lambda, false, -1.0);
    let zb = field(f, lambda, true, 1.0);
    let zr = field(f, lambda, false, 1.0);
    let zbr = field(f, lambda, true, -1.0);
    let zf = f.map_xy(|x, y, v| v * lambda * C64::new(x, y));
    let zbf = f.map_xy(|x, y, v| v * lambda * C64::new(x, -y));
    let lf = special_hermite_operator(f, lambda);

    // natural sizes: first-order fields ~ √λ/2, multiplication rows ~ √λ, L ~ λ
    let wn = w.hs_norm();
    let (k1, kz, kl) = (0.5 * lambda.sqrt() * wn, lambda.sqrt() * wn, lambda * wn);
    let cases: Vec<(&str, bool, f64, OperatorMatrix, OperatorMatrix, OperatorMatrix)> = vec![
        ("Z", true, k1, lw(&z)?, (ad * &w).scale(mi2), (&w * ad).scale(i)),
        ("Zbar", true, k1, lw(&zb)?, (a * &w).scale(mi2), (&w * a).scale(i)),
        ("Z^R", true, k1, lw(&zr)?, (&w * ad).scale(mi2), (ad * &w).scale(i)),
        ("Zbar^R", true, k1, lw(&zbr)?, (&w * a).scale(mi2), (a * &w).scale(i)),
        ("lambda z", false, kz, lw(&zf)?, w.commutator(a).scale(i), w.commutator(ad).scale(2.0 * i)),
        ("lambda zbar", false, kz, lw(&zbf)?, ad.commutator(&w).scale(i), a.commutator(&w).scale(2.0 * i)),
        ("L", true, kl, lw(&lf)?, h * &w, &w * h),
    ];
    let rows = cases
        .into_iter()
        .map(|(name, d, floor, lhs, derived, literal)| VectorFieldRow {
            identity: name.into(),
            differentiated: d,
            derived: rel(&lhs, &derived, floor),
            literal: rel(&lhs, &literal, floor),
        })
        .collect();
    Ok(VectorFieldReport { lambda, h: f.grid().h(), rows })
}

/// Coarse and fine reports with the coarse/fine ratio of every differentiated row.
pub fn vector_field_refinement(
    ctx: &HermiteContext,
    lambda: f64,
    coarse: &PhaseGridFunction,
    fine: &PhaseGridFunction,
) -> Result<(VectorFieldReport, VectorFieldReport, Vec<f64>)> {
    let c = vector_field_checks(ctx, lambda, coarse)?;
    let f = vector_field_checks(ctx, lambda, fine)?;
    let ratios = c
        .rows
        .iter()
        .zip(&f.rows)
        .filter(|(r, _)| r.differentiated)
        .map(|(r, s)| if s.derived == 0.0 { f64::INFINITY } else { r.derived / s.derived })
        .collect();
    Ok((c, f, ratios))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma41Report {
    pub lambda: f64,
    pub residual: f64,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
}

/// Scaled-basis matrix of S φ = Σ_j w_j φ(· − η_j), where w_j = k_j h and
/// η_j = (j − K)h for a kernel of length 2K + 1 on the z-spacing h.
fn convolution_matrix(ctx: &HermiteContext, kernel: &[f64], h: f64, lambda: f64) -> Result<OperatorMatrix> {
    let n = ctx.trunc();
    let half = (kernel.len() / 2) as f64;
    let root = lambda.abs().sqrt();
    let us = ctx.xi_grid();
    let base = ctx.samples();
    let mut s = DMatrix::<f64>::zeros(n, n);
    for (j, &k) in kernel.iter().enumerate() {
        if k == 0.0 {
            continue;
        }
        let eta = (j as f64 - half) * h;
        let shifted: Vec<f64> = us.iter().map(|u| u - root * eta).collect();
        // ∫ h^λ_a(ξ) h^λ_b(ξ − η) dξ = ∫ h_a(u) h_b(u − √|λ|η) du
        s += base.transpose() * hermite_functions(n, &shifted) * (k * h * ctx.h_xi());
    }
    OperatorMatrix::from_entries(1, n, s.map(|v| C64::new(v, 0.0)))
}

/// Both sides of T^λ_S f = e_λ S_2 e_{−λ} f: the fiber multiplier with the
/// Hermite matrix of the convolution, and modulate–convolve–modulate on the grid.
pub fn lemma41_sides(
    ctx: &HermiteContext,
    kernel: &[f64],
    lambda: f64,
    f: &PhaseGridFunction,
) -> Result<(PhaseGridFunction, PhaseGridFunction)> {
    if kernel.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("kernel length {} must be odd (centered at 0)", kernel.len())));
    }
    if !on_whitelist(lambda) {
        return Err(Error::Resample(format!("λ = {lambda} is off the whitelist")));
    }
    let grid = f.grid();
    let h = grid.h();
    let s = convolution_matrix(ctx, kernel, h, lambda)?;
    let lhs = apply_fiber(ctx, lambda, &s, f, Route::Conjugation)?;

    let g = twist_modulate(f, -lambda);
    let m = grid.m_pts;
    let half = (kernel.len() / 2) as isize;
    let values = DMatrix::from_fn(m, m, |i, j| {
        let mut acc = C64::new(0.0, 0.0);
        for (q, &k) in kernel.iter().enumerate() {
            let jj = j as isize + q as isize - half;
            if k != 0.0 && jj >= 0 && jj < m as isize {
                acc += g.at(i, jj as usize) * (k * h);
            }
        }
        acc
    });
    let rhs = twist_modulate(&PhaseGridFunction::from_values(grid, values)?, lambda);
    Ok((lhs, rhs))
}

pub fn lemma41_check(ctx: &HermiteContext, kernel: &[f64], lambda: f64, f: &PhaseGridFunction) -> Result<Lemma41Report> {
    let (lhs, rhs) = lemma41_sides(ctx, kernel, lambda, f)?;
    Ok(Lemma41Report { lambda, residual: lhs.relative_l2_error(&rhs)?, lhs_norm: lhs.l2_norm(), rhs_norm: rhs.l2_norm() })
}
