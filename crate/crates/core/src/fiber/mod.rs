//! Functions on the Heisenberg group H^1 = C × R sampled on a product grid,
//! their λ-fibers f^λ(z) = ∫ e^{iλt} f(z, t) dt, and fiberwise Weyl multipliers.
//!
//! The t-box is [−L_t, L_t) with T points; the DFT frequencies λ_m = πm/L_t,
//! m = −T/2 .. T/2−1, are the fiber labels. The λ = 0 fiber is kept apart: no
//! multiplier acts on it.

mod apply;
mod checks;
mod theorems;

pub use apply::{
    apply_fiber, apply_fiber_multiplier, fiber_multiplier_matrix, on_whitelist, two_path_agreement, FiberLog, FiberOptions,
    Route, LAMBDA_0,
};
pub use checks::{
    lemma41_check, lemma41_sides, vector_field_checks, vector_field_refinement, Lemma41Report, VectorFieldReport,
    VectorFieldRow,
};
pub use theorems::{
    heisenberg_panel, parseval_defect, pipeline, polyradial_fibers, r_commutation_defect, theorem110_experiment,
    theorem19_experiment, translation_defect, RatioRow, TheoremStats,
};

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::hermite::{read_f64, read_u32};
use crate::weyl::{read_samples, write_samples, PhaseGrid, PhaseGridFunction, TWO_PI};
use crate::C64;

const MAGIC: &[u8; 4] = b"WBHG";
const VERSION: u32 = 1;

/// Product grid: a z-grid and T points on [−L_t, L_t).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HeisenbergGrid {
    pub z: PhaseGrid,
    pub l_t: f64,
    pub t_pts: usize,
}

impl HeisenbergGrid {
    pub fn new(z: PhaseGrid, l_t: f64, t_pts: usize) -> Result<Self> {
        if !(l_t > 0.0 && l_t.is_finite()) {
            return Err(Error::Grid(format!("t half-width {l_t} must be positive")));
        }
        if t_pts < 2 || !t_pts.is_power_of_two() {
            return Err(Error::Grid(format!("t points {t_pts} must be a power of two ≥ 2")));
        }
        Ok(Self { z, l_t, t_pts })
    }

    pub fn dt(&self) -> f64 {
        2.0 * self.l_t / self.t_pts as f64
    }

    /// Spacing of the frequency lattice, π/L_t.
    pub fn d_lambda(&self) -> f64 {
        std::f64::consts::PI / self.l_t
    }

    pub fn t(&self, k: usize) -> f64 {
        -self.l_t + k as f64 * self.dt()
    }

    /// Frequency labels m = −T/2 .. T/2−1 without 0.
    pub fn modes(&self) -> Vec<i64> {
        let half = (self.t_pts / 2) as i64;
        (-half..half).filter(|m| *m != 0).collect()
    }

    pub fn lambda(&self, mode: i64) -> f64 {
        mode as f64 * self.d_lambda()
    }

    pub fn compatible(&self, other: &Self) -> bool {
        self.z.compatible(&other.z) && self.t_pts == other.t_pts && (self.l_t - other.l_t).abs() <= 1e-12 * self.l_t
    }
}

/// Default H^1 grid: z on [−6, 6)² with 64 points (h_z = 0.1875, fine enough for
/// the λ = 4 fibers), t on [−π, π) with 64 points so the λ-lattice is Z.
pub fn default_heisenberg_grid() -> HeisenbergGrid {
    HeisenbergGrid { z: PhaseGrid { l_z: 6.0, m_pts: 64 }, l_t: std::f64::consts::PI, t_pts: 64 }
}

/// Refined z companion of the default grid (h_z = 0.125).
pub fn fine_heisenberg_grid() -> HeisenbergGrid {
    HeisenbergGrid { z: PhaseGrid { l_z: 6.0, m_pts: 96 }, ..default_heisenberg_grid() }
}

/// 64² grid for the vector-field identities at λ = 1: box [−8, 8)², h_z = 0.25.
/// Second-order differences on the default Weyl grid (h_z = 0.375) leave
/// residuals of 1–2·10⁻²; at λ the same check uses the box 8/√λ.
pub fn vector_field_grid(lambda: f64) -> PhaseGrid {
    PhaseGrid { l_z: 8.0 / lambda.abs().sqrt(), m_pts: 64 }
}

/// `base` dilated by 1/√|λ|: the box on which a single λ-fiber sees the same
/// number of Hermite oscillations as a λ = 1 function on `base`.
pub fn lambda_adapted_grid(base: PhaseGrid, lambda: f64) -> PhaseGrid {
    PhaseGrid { l_z: base.l_z / lambda.abs().sqrt(), m_pts: base.m_pts }
}

/// Refinement companion of [`vector_field_grid`] with twice the points.
pub fn vector_field_fine_grid(lambda: f64) -> PhaseGrid {
    PhaseGrid { m_pts: 128, ..vector_field_grid(lambda) }
}

/// Samples f(x_i, y_j, t_k), one z-matrix per t-point.
#[derive(Clone, Debug, PartialEq)]
pub struct HeisenbergGridFunction {
    grid: HeisenbergGrid,
    slices: Vec<DMatrix<C64>>,
}

impl HeisenbergGridFunction {
    pub fn zeros(grid: HeisenbergGrid) -> Self {
        let m = grid.z.m_pts;
        Self { grid, slices: vec![DMatrix::zeros(m, m); grid.t_pts] }
    }

    pub fn from_slices(grid: HeisenbergGrid, slices: Vec<PhaseGridFunction>) -> Result<Self> {
        if slices.len() != grid.t_pts {
            return Err(Error::Grid(format!("{} t-slices for {} t-points", slices.len(), grid.t_pts)));
        }
        if slices.iter().any(|s| !s.grid().compatible(&grid.z)) {
            return Err(Error::GridMismatch("t-slice on a different z-grid".into()));
        }
        Ok(Self { grid, slices: slices.into_iter().map(PhaseGridFunction::into_values).collect() })
    }

    pub fn from_fn(grid: HeisenbergGrid, f: impl Fn(f64, f64, f64) -> C64) -> Self {
        let xs = grid.z.coords();
        let m = grid.z.m_pts;
        let slices = (0..grid.t_pts)
            .map(|k| {
                let t = grid.t(k);
                DMatrix::from_fn(m, m, |i, j| f(xs[i], xs[j], t))
            })
            .collect();
        Self { grid, slices }
    }

    pub fn grid(&self) -> HeisenbergGrid {
        self.grid
    }

    pub fn slice(&self, k: usize) -> PhaseGridFunction {
        PhaseGridFunction::from_values(self.grid.z, self.slices[k].clone()).expect("slice shape")
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> C64 {
        self.slices[k][(i, j)]
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if !self.grid.compatible(&other.grid) {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let slices = self.slices.iter().zip(&other.slices).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid, slices })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let slices = self.slices.iter().zip(&other.slices).map(|(a, b)| a - b).collect();
        Ok(Self { grid: self.grid, slices })
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { grid: self.grid, slices: self.slices.iter().map(|s| s * c).collect() }
    }

    /// (Σ |f|^p h_z² Δt)^{1/p}.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let w = self.grid.z.cell() * self.grid.dt();
        let s: f64 = self.slices.iter().map(|s| s.iter().map(|v| v.norm().powf(p)).sum::<f64>()).sum();
        (s * w).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.z.cell() * self.grid.dt();
        let s: f64 = self.slices.iter().map(|s| s.iter().map(|v| v.norm_sqr()).sum::<f64>()).sum();
        (s * w).sqrt()
    }

    pub fn relative_l2_error(&self, reference: &Self) -> Result<f64> {
        let d = self.sub(reference)?.l2_norm();
        let r = reference.l2_norm();
        Ok(if r == 0.0 { d } else { d / r })
    }

    /// Cyclic shift by `steps` t-points: g(z, t) = f(z, t − steps·Δt).
    pub fn translate_t(&self, steps: usize) -> Self {
        let t = self.grid.t_pts;
        let s = steps % t;
        let slices = (0..t).map(|k| self.slices[(k + t - s) % t].clone()).collect();
        Self { grid: self.grid, slices }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&self.grid.z.l_z.to_le_bytes())?;
        w.write_all(&(self.grid.z.m_pts as u32).to_le_bytes())?;
        w.write_all(&self.grid.l_t.to_le_bytes())?;
        w.write_all(&(self.grid.t_pts as u32).to_le_bytes())?;
        for s in &self.slices {
            write_samples(&mut w, s)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a Heisenberg-grid file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n = read_u32(&mut r)?;
        if n != 1 {
            return Err(Error::Dimension(format!("grid files with n = {n} are not supported")));
        }
        let l_z = read_f64(&mut r)?;
        let m_pts = read_u32(&mut r)? as usize;
        let l_t = read_f64(&mut r)?;
        let t_pts = read_u32(&mut r)? as usize;
        let z = PhaseGrid::new(l_z, m_pts).map_err(|e| Error::Format(e.to_string()))?;
        let grid = HeisenbergGrid::new(z, l_t, t_pts).map_err(|e| Error::Format(e.to_string()))?;
        let slices = (0..t_pts).map(|_| read_samples(&mut r, m_pts)).collect::<Result<_>>()?;
        Ok(Self { grid, slices })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// The nonzero-frequency fibers plus the λ = 0 fiber held separately.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberSet {
    grid: HeisenbergGrid,
    modes: Vec<i64>,
    fibers: Vec<PhaseGridFunction>,
    zero: PhaseGridFunction,
}

impl FiberSet {
    pub fn new(grid: HeisenbergGrid, fibers: Vec<PhaseGridFunction>, zero: PhaseGridFunction) -> Result<Self> {
        let modes = grid.modes();
        if fibers.len() != modes.len() {
            return Err(Error::Grid(format!("{} fibers for {} nonzero frequencies", fibers.len(), modes.len())));
        }
        if fibers.iter().chain(std::iter::once(&zero)).any(|f| !f.grid().compatible(&grid.z)) {
            return Err(Error::GridMismatch("fiber on a different z-grid".into()));
        }
        Ok(Self { grid, modes, fibers, zero })
    }

    pub fn grid(&self) -> HeisenbergGrid {
        self.grid
    }

    pub fn modes(&self) -> &[i64] {
        &self.modes
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| self.grid.lambda(*m)).collect()
    }

    pub fn fibers(&self) -> &[PhaseGridFunction] {
        &self.fibers
    }

    pub fn zero_fiber(&self) -> &PhaseGridFunction {
        &self.zero
    }

    /// Fiber with frequency label `mode` (0 gives the zero fiber).
    pub fn fiber(&self, mode: i64) -> Option<&PhaseGridFunction> {
        if mode == 0 {
            return Some(&self.zero);
        }
        self.modes.iter().position(|m| *m == mode).map(|i| &self.fibers[i])
    }

    pub(crate) fn with_fibers(&self, fibers: Vec<PhaseGridFunction>, zero: PhaseGridFunction) -> Self {
        Self { grid: self.grid, modes: self.modes.clone(), fibers, zero }
    }

    /// Σ_λ ‖f^λ‖₂² Δλ / 2π, zero fiber included.
    pub fn plancherel_mass(&self) -> f64 {
        let s: f64 = self.fibers.iter().chain(std::iter::once(&self.zero)).map(|f| f.l2_norm().powi(2)).sum();
        s * self.grid.d_lambda() / TWO_PI
    }
}

fn bin(mode: i64, t: usize) -> usize {
    mode.rem_euclid(t as i64) as usize
}

fn sign(mode: i64) -> f64 {
    if mode.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Applies `op` to the t-line of every z-point.
fn along_t(grid: HeisenbergGrid, slices: &[&DMatrix<C64>], op: impl Fn(&mut [C64]) + Sync) -> Vec<DMatrix<C64>> {
    let m = grid.z.m_pts;
    let t = grid.t_pts;
    let rows: Vec<Vec<Vec<C64>>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut buf: Vec<C64> = slices.iter().map(|s| s[(i, j)]).collect();
                    op(&mut buf);
                    buf
                })
                .collect()
        })
        .collect();
    (0..t).map(|k| DMatrix::from_fn(m, m, |i, j| rows[i][j][k])).collect()
}

/// f^λ(z) = Σ_k e^{iλ t_k} f(z, t_k) Δt for every DFT frequency.
pub fn fiber_transform(f: &HeisenbergGridFunction) -> Result<FiberSet> {
    let grid = f.grid;
    let t = grid.t_pts;
    // Σ_k x_k e^{+2πi bk/T}
    let plan = FftPlanner::new().plan_fft_inverse(t);
    let refs: Vec<&DMatrix<C64>> = f.slices.iter().collect();
    let bins = along_t(grid, &refs, |buf| plan.process(buf));
    // e^{iλ_m t_k} = (−1)^m e^{2πi mk/T}
    let fiber = |mode: i64| {
        let c = C64::new(grid.dt() * sign(mode), 0.0);
        PhaseGridFunction::from_values(grid.z, &bins[bin(mode, t)] * c).expect("fiber shape")
    };
    let fibers = grid.modes().into_iter().map(fiber).collect();
    FiberSet::new(grid, fibers, fiber(0))
}

/// f(z, t_k) = (2π)^{−1} Σ_λ e^{−iλ t_k} f^λ(z) Δλ.
pub fn fiber_inverse(set: &FiberSet) -> Result<HeisenbergGridFunction> {
    let grid = set.grid;
    let t = grid.t_pts;
    let m = grid.z.m_pts;
    let mut spec = vec![DMatrix::<C64>::zeros(m, m); t];
    for (mode, f) in set.modes.iter().zip(&set.fibers).chain(std::iter::once((&0, &set.zero))) {
        spec[bin(*mode, t)] = f.values() * C64::new(sign(*mode), 0.0);
    }
    let plan = FftPlanner::new().plan_fft_forward(t);
    let refs: Vec<&DMatrix<C64>> = spec.iter().collect();
    let c = C64::new(grid.d_lambda() / TWO_PI, 0.0);
    let slices = along_t(grid, &refs, |buf| plan.process(buf)).into_iter().map(|s| s * c).collect();
    Ok(HeisenbergGridFunction { grid, slices })
}
