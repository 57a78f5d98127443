use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{cube_mean, Cube, DyadicCubeSystem};
use crate::error::{Error, Result};
use crate::weyl::{PhaseGrid, PhaseGridFunction};
use crate::C64;

/// Relative growth of a constant under refinement above which it is flagged divergent.
pub const DIVERGENCE_GROWTH: f64 = 0.2;

/// Linear operator on grid functions, e.g. a Weyl multiplier bound to an engine.
pub type GridOperator<'a> = dyn Fn(&PhaseGridFunction) -> Result<PhaseGridFunction> + Sync + 'a;

fn positive_values(w: &PhaseGridFunction) -> Result<DMatrix<f64>> {
    if !w.is_positive_real() {
        return Err(Error::Domain("weight must be real and strictly positive at every grid point".into()));
    }
    Ok(w.values().map(|z| z.re))
}

/// Dyadic Muckenhoupt constant sup_Q ⟨w⟩_Q ⟨w^{−1/(p−1)}⟩_Q^{p−1}.
pub fn ap_constant(w: &PhaseGridFunction, p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("A_p exponent p = {p} must exceed 1")));
    }
    let wv = positive_values(w)?;
    let dual = wv.map(|v| v.powf(-1.0 / (p - 1.0)));
    let sys = DyadicCubeSystem::new(w.grid());
    Ok(sys.sup(|q| cube_mean(&wv, q) * cube_mean(&dual, q).powf(p - 1.0)))
}

/// |z + ε|^a with ε = (h/2, h/2), keeping the singularity off the sample points.
pub fn power_weight(grid: PhaseGrid, a: f64) -> PhaseGridFunction {
    let e = grid.h() / 2.0;
    PhaseGridFunction::from_fn(grid, |x, y| C64::new(((x + e).powi(2) + (y + e).powi(2)).sqrt().powf(a), 0.0))
}

/// A validated weight together with its dyadic A_p constant.
#[derive(Clone, Debug)]
pub struct WeightProfile {
    pub w: PhaseGridFunction,
    pub p: f64,
    pub ap_constant: f64,
    pub tag: String,
}

impl WeightProfile {
    pub fn new(w: PhaseGridFunction, p: f64, tag: impl Into<String>) -> Result<Self> {
        let ap = ap_constant(&w, p)?;
        Ok(Self { w, p, ap_constant: ap, tag: tag.into() })
    }

    pub fn power(grid: PhaseGrid, a: f64, p: f64) -> Result<Self> {
        Self::new(power_weight(grid, a), p, format!("power a={a}"))
    }

    /// Reads a weight stored in the grid-function format; rejects non-positive samples.
    pub fn load(path: impl AsRef<Path>, p: f64, tag: impl Into<String>) -> Result<Self> {
        let w = PhaseGridFunction::load(path)?;
        Self::new(w, p, tag)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightRefinement {
    pub exponent: f64,
    pub p: f64,
    /// (points per axis, constant)
    pub constants: Vec<(usize, f64)>,
    /// last constant over first
    pub growth: f64,
    pub divergent: bool,
}

/// A_p constants of the power weight |z+ε|^a over a sequence of grids of increasing resolution.
///
/// Each grid must cover the same box with a power-of-two multiple of the first grid's points, so
/// that every grid carries the same dyadic cubes. Otherwise the largest cubes differ in size
/// (96 points per axis give roots of 32 cells, 64 points a single root of 64) and the constant
/// of a singular weight moves with the cube system rather than with h.
pub fn weight_refinement(a: f64, p: f64, grids: &[PhaseGrid]) -> Result<WeightRefinement> {
    if grids.len() < 2 {
        return Err(Error::InvalidArgument("refinement needs at least two grids".into()));
    }
    let base = grids[0];
    for g in &grids[1..] {
        let nested = g.m_pts % base.m_pts == 0 && (g.m_pts / base.m_pts).is_power_of_two();
        if g.l_z != base.l_z || !nested {
            return Err(Error::GridMismatch(format!(
                "weight refinement needs nested dyadic grids: {} points on [−{}, {}) is not a power-of-two refinement of {} on [−{}, {})",
                g.m_pts, g.l_z, g.l_z, base.m_pts, base.l_z, base.l_z
            )));
        }
    }
    let constants = grids
        .iter()
        .map(|g| Ok((g.m_pts, ap_constant(&power_weight(*g, a), p)?)))
        .collect::<Result<Vec<_>>>()?;
    let growth = constants[constants.len() - 1].1 / constants[0].1;
    Ok(WeightRefinement { exponent: a, p, constants, growth, divergent: growth > 1.0 + DIVERGENCE_GROWTH })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedRatioStats {
    pub p: f64,
    /// ‖Tf‖_{L^p(w)} / ‖f‖_{L^p(w)} per panel entry
    pub ratios: Vec<f64>,
    pub max: f64,
    pub ap: f64,
    /// A_{p/2} constant when p > 2
    pub ap_half: Option<f64>,
}

/// Weighted L^p ratios of `op` over a panel.
pub fn weighted_ratio(
    op: &GridOperator<'_>,
    panel: &[PhaseGridFunction],
    w: &PhaseGridFunction,
    p: f64,
) -> Result<WeightedRatioStats> {
    if p <= 1.0 {
        return Err(Error::Domain(format!("exponent p = {p} must exceed 1")));
    }
    let ap = ap_constant(w, p)?;
    let ap_half = if p > 2.0 { Some(ap_constant(w, p / 2.0)?) } else { None };
    let mut ratios = Vec::with_capacity(panel.len());
    for (k, f) in panel.iter().enumerate() {
        let den = f.weighted_lp_norm(w, p)?;
        if den == 0.0 {
            return Err(Error::ZeroNorm(format!("panel entry {k} has zero weighted norm")));
        }
        ratios.push(op(f)?.weighted_lp_norm(w, p)? / den);
    }
    let max = ratios.iter().copied().fold(0.0, f64::max);
    Ok(WeightedRatioStats { p, ratios, max, ap, ap_half })
}

fn is_constant(b: &PhaseGridFunction) -> bool {
    let first = b.at(0, 0);
    b.values().iter().all(|v| *v == first)
}

fn mean_oscillation(b: &DMatrix<f64>, q: &Cube) -> f64 {
    let first = b[(q.i0, q.j0)];
    let mut flat = true;
    let mut s = 0.0;
    for i in q.i0..q.i0 + q.side {
        for j in q.j0..q.j0 + q.side {
            flat &= b[(i, j)] == first;
            s += b[(i, j)];
        }
    }
    if flat {
        return 0.0;
    }
    let mean = s / q.cells() as f64;
    let mut o = 0.0;
    for i in q.i0..q.i0 + q.side {
        for j in q.j0..q.j0 + q.side {
            o += (b[(i, j)] - mean).abs();
        }
    }
    o / q.cells() as f64
}

fn real_values(b: &PhaseGridFunction) -> Result<DMatrix<f64>> {
    if b.values().iter().any(|z| z.im != 0.0 || !z.re.is_finite()) {
        return Err(Error::Domain("BMO symbol must be real and finite".into()));
    }
    Ok(b.values().map(|z| z.re))
}

/// Dyadic BMO norm sup_Q ⟨|b − ⟨b⟩_Q|⟩_Q; exactly 0 for constant b.
pub fn bmo_norm(b: &PhaseGridFunction) -> Result<f64> {
    let bv = real_values(b)?;
    let sys = DyadicCubeSystem::new(b.grid());
    Ok(sys.sup(|q| mean_oscillation(&bv, q)).max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BmoStats {
    pub p: f64,
    pub bmo: f64,
    /// ‖[b, T]f‖_p / (‖b‖_* ‖f‖_p) per panel entry
    pub ratios: Vec<f64>,
    pub max: f64,
    /// b is constant, so the commutator vanishes identically
    pub exact_zero: bool,
}

/// Commutator [b, T]f = b·Tf − T(b·f) against the dyadic BMO norm of b.
pub fn bmo_commutator(
    b: &PhaseGridFunction,
    op: &GridOperator<'_>,
    panel: &[PhaseGridFunction],
    p: f64,
) -> Result<BmoStats> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("exponent p = {p} must lie in (1, ∞)")));
    }
    let bmo = bmo_norm(b)?;
    if is_constant(b) {
        return Ok(BmoStats { p, bmo, ratios: vec![0.0; panel.len()], max: 0.0, exact_zero: true });
    }
    let mut ratios = Vec::with_capacity(panel.len());
    for (k, f) in panel.iter().enumerate() {
        f.check_same_grid(b)?;
        let den = f.lp_norm(p);
        if den == 0.0 {
            return Err(Error::ZeroNorm(format!("panel entry {k} is zero")));
        }
        let comm = b.mul(&op(f)?)?.sub(&op(&b.mul(f)?)?)?;
        ratios.push(comm.lp_norm(p) / (bmo * den));
    }
    let max = ratios.iter().copied().fold(0.0, f64::max);
    Ok(BmoStats { p, bmo, ratios, max, exact_zero: false })
}
