//! Weyl transform on C (n = 1 grids), twisted convolution, special Hermite
//! functions, resampling and the calibration record.
//!
//! Conventions: π_λ(z)φ(ξ) = e^{iλ(xξ + xy/2)} φ(ξ+y), W_λ(f) = ∫ f(z) π_λ(z) dz,
//! inverse k(z) = (2π)^{−1}|λ| tr(π_λ(z)* M), twisted convolution with phase
//! e^{(i/2)Im(z w̄)} so that W(f×g) = W(f)W(g).

mod cache;
mod convolution;
mod engine;
mod grid;
mod resample;

pub use cache::{context_hash, WeylMatrixCache};
pub use convolution::{twisted_convolve, BOUNDARY_WARN};
pub use engine::{Quadrature, WeylEngine};
pub use grid::{PhaseGrid, PhaseGridFunction};
pub(crate) use grid::{read_samples, write_samples};
pub use resample::{dilate, polyradial_project, rotate, twist_modulate, MIN_ANGLES};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{HermiteContext, OperatorMatrix};
use crate::C64;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Default z-grid: box [−12, 12)², 64 points per axis (h_z = 0.375 = 3·h_ξ).
pub fn default_grid() -> PhaseGrid {
    PhaseGrid { l_z: 12.0, m_pts: 64 }
}

/// Coarse companion of the default grid for two-resolution studies (h_z = 0.5).
pub fn coarse_grid() -> PhaseGrid {
    PhaseGrid { l_z: 12.0, m_pts: 48 }
}

/// Fine companion for refinement-rate studies (h_z = 0.25).
pub fn fine_grid() -> PhaseGrid {
    PhaseGrid { l_z: 12.0, m_pts: 96 }
}

/// Default basis context: n = 1, N = 64 on [−14, 14) with 224 points (h_ξ = 0.125).
pub fn default_context() -> HermiteContext {
    HermiteContext::new(1, 64, 14.0, 224).expect("default context is valid")
}

/// Φ_{αβ}(z) = (2π)^{−1/2}⟨π(z)h_α, h_β⟩, normalized so that ‖Φ_{αβ}‖₂ = 1 and
/// W(Φ̄_{αβ}) = (2π)^{1/2} |h_β⟩⟨h_α|.
pub fn special_hermite_fn(engine: &WeylEngine, alpha: usize, beta: usize) -> Result<PhaseGridFunction> {
    let n = engine.trunc();
    if alpha >= n || beta >= n {
        return Err(Error::InvalidArgument(format!("indices ({alpha}, {beta}) outside truncation {n}")));
    }
    // inverse_scaled(E_{βα}, 1)(z) = conj(Φ(z)_{βα})
    let e = OperatorMatrix::elementary(1, n, beta, alpha, C64::new(1.0, 0.0));
    let raw = engine.inverse_scaled(&e, 1.0)?;
    Ok(raw.map(|v| v.conj() / TWO_PI.sqrt()))
}

/// Scalar κ with W(Φ̄_{αβ}) = κ |h_β⟩⟨h_α|.
pub fn special_hermite_scalar() -> f64 {
    TWO_PI.sqrt()
}

/// Random band-limited test functions: f = W^{−1}(C) with C a complex Gaussian
/// matrix supported on indices < `band`, normalized to ‖f‖₂ = 1.
pub fn band_limited_panel(engine: &WeylEngine, seed: u64, count: usize, band: usize) -> Result<Vec<PhaseGridFunction>> {
    if band == 0 || band > engine.trunc() {
        return Err(Error::InvalidArgument(format!("band limit {band} outside 1..={}", engine.trunc())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = engine.trunc();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut c = OperatorMatrix::zeros(1, n);
        for a in 0..band {
            for b in 0..band {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                c.entries_mut()[(a, b)] = C64::new(re, im);
            }
        }
        let f = engine.inverse(&c)?;
        let norm = f.l2_norm();
        out.push(f.scale(C64::new(1.0 / norm, 0.0)));
    }
    Ok(out)
}

/// Normalization constants measured on one grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub l_z: f64,
    pub m_pts: usize,
    /// ‖W(g)‖²_HS / ‖g‖²₂ for the Gaussian g = e^{−|z|²/2}.
    pub plancherel: f64,
    /// c with g = c·tr(π(z)* W(g)).
    pub inversion: f64,
    /// c with ‖c·⟨π(z)h_0, h_0⟩‖₂ = 1.
    pub special_norm: f64,
}

/// Frozen calibration of the transform constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub samples: Vec<CalibrationSample>,
    pub plancherel: f64,
    pub inversion: f64,
    pub special_norm: f64,
    /// Largest relative spread of any constant across the sampled grids.
    pub max_drift: f64,
    /// Largest relative deviation from the analytic values 2π, 1/(2π), (2π)^{−1/2}.
    pub max_deviation: f64,
    pub stable: bool,
}

/// Relative tolerance for calibration stability across grids.
pub const CALIBRATION_TOL: f64 = 1e-6;

fn calibration_sample(ctx: &HermiteContext, grid: PhaseGrid) -> Result<CalibrationSample> {
    let engine = WeylEngine::new(ctx, grid)?;
    let g = PhaseGridFunction::from_fn(grid, |x, y| C64::new((-(x * x + y * y) / 2.0).exp(), 0.0));
    let w = engine.transform(&g)?;
    let g2 = g.l2_norm().powi(2);
    let plancherel = w.hs_norm().powi(2) / g2;
    let raw = engine.inverse_scaled(&w, 1.0)?;
    let inversion = g.inner(&raw)?.re / raw.l2_norm().powi(2);
    let e00 = OperatorMatrix::elementary(1, ctx.trunc(), 0, 0, C64::new(1.0, 0.0));
    let phi = engine.inverse_scaled(&e00, 1.0)?;
    let special_norm = 1.0 / phi.l2_norm();
    Ok(CalibrationSample { l_z: grid.l_z, m_pts: grid.m_pts, plancherel, inversion, special_norm })
}

/// Measures the constants on each grid and checks they agree to [`CALIBRATION_TOL`].
pub fn calibrate(ctx: &HermiteContext, grids: &[PhaseGrid]) -> Result<CalibrationRecord> {
    if grids.is_empty() {
        return Err(Error::InvalidArgument("calibration needs at least one grid".into()));
    }
    let samples: Vec<CalibrationSample> = grids.iter().map(|g| calibration_sample(ctx, *g)).collect::<Result<_>>()?;
    let first = &samples[0];
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let mut drift: f64 = 0.0;
    for s in &samples[1..] {
        drift = drift
            .max(rel(s.plancherel, first.plancherel))
            .max(rel(s.inversion, first.inversion))
            .max(rel(s.special_norm, first.special_norm));
    }
    let deviation = rel(first.plancherel, TWO_PI)
        .max(rel(first.inversion, 1.0 / TWO_PI))
        .max(rel(first.special_norm, 1.0 / TWO_PI.sqrt()));
    Ok(CalibrationRecord {
        plancherel: first.plancherel,
        inversion: first.inversion,
        special_norm: first.special_norm,
        max_drift: drift,
        max_deviation: deviation,
        stable: drift <= CALIBRATION_TOL && deviation <= CALIBRATION_TOL,
        samples,
    })
}
