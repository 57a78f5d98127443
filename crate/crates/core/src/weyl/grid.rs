use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hermite::{read_f64, read_u32};
use crate::C64;

const MAGIC: &[u8; 4] = b"WBPG";
const VERSION: u32 = 1;

/// Uniform grid over [−L, L)² ⊂ C with `m_pts` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhaseGrid {
    pub l_z: f64,
    pub m_pts: usize,
}

impl PhaseGrid {
    pub fn new(l_z: f64, m_pts: usize) -> Result<Self> {
        if !(l_z > 0.0 && l_z.is_finite()) {
            return Err(Error::Grid(format!("box half-width {l_z} must be positive")));
        }
        if m_pts < 4 || !m_pts.is_multiple_of(2) {
            return Err(Error::Grid(format!("points per axis {m_pts} must be even and ≥ 4")));
        }
        Ok(Self { l_z, m_pts })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.l_z / self.m_pts as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.l_z + i as f64 * self.h()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.m_pts).map(|i| self.coord(i)).collect()
    }

    /// Cell area h².
    pub fn cell(&self) -> f64 {
        self.h() * self.h()
    }

    /// Index of the grid point at coordinate `x`, if it lies on the lattice.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let t = (x + self.l_z) / self.h();
        let r = t.round();
        if (t - r).abs() > 1e-9 || r < 0.0 || r >= self.m_pts as f64 {
            None
        } else {
            Some(r as usize)
        }
    }

    /// Same spacing and extent.
    pub fn compatible(&self, other: &Self) -> bool {
        self.m_pts == other.m_pts && (self.l_z - other.l_z).abs() <= 1e-12 * self.l_z
    }
}

/// Complex samples f(x_i, y_j) on a [`PhaseGrid`], stored as `values[(i, j)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGridFunction {
    grid: PhaseGrid,
    values: DMatrix<C64>,
}

impl PhaseGridFunction {
    pub fn zeros(grid: PhaseGrid) -> Self {
        Self { grid, values: DMatrix::zeros(grid.m_pts, grid.m_pts) }
    }

    pub fn from_values(grid: PhaseGrid, values: DMatrix<C64>) -> Result<Self> {
        if values.nrows() != grid.m_pts || values.ncols() != grid.m_pts {
            return Err(Error::GridMismatch(format!(
                "values {}x{} do not match grid {}",
                values.nrows(),
                values.ncols(),
                grid.m_pts
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: PhaseGrid, f: impl Fn(f64, f64) -> C64) -> Self {
        let xs = grid.coords();
        let values = DMatrix::from_fn(grid.m_pts, grid.m_pts, |i, j| f(xs[i], xs[j]));
        Self { grid, values }
    }

    pub fn from_fn_indexed(grid: PhaseGrid, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { grid, values: DMatrix::from_fn(grid.m_pts, grid.m_pts, f) }
    }

    pub fn grid(&self) -> PhaseGrid {
        self.grid
    }
    pub fn values(&self) -> &DMatrix<C64> {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.values
    }
    pub fn into_values(self) -> DMatrix<C64> {
        self.values
    }
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[(i, j)]
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if !self.grid.compatible(&other.grid) {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self { grid: self.grid, values: self.values.map(f) }
    }

    /// Pointwise map with coordinates.
    pub fn map_xy(&self, f: impl Fn(f64, f64, C64) -> C64) -> Self {
        let xs = self.grid.coords();
        let values = DMatrix::from_fn(self.grid.m_pts, self.grid.m_pts, |i, j| f(xs[i], xs[j], self.values[(i, j)]));
        Self { grid: self.grid, values }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { grid: self.grid, values: &self.values * c }
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn abs(&self) -> Self {
        self.map(|z| C64::new(z.norm(), 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self { grid: self.grid, values: &self.values + &other.values })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self { grid: self.grid, values: &self.values - &other.values })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self { grid: self.grid, values: self.values.component_mul(&other.values) })
    }

    /// Discrete L^p norm (Σ|f|^p h²)^{1/p}; `p = ∞` gives the max modulus.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.linf_norm();
        }
        let s: f64 = self.values.iter().map(|z| z.norm().powf(p)).sum();
        (s * self.grid.cell()).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Weighted norm (Σ|f|^p w h²)^{1/p}.
    pub fn weighted_lp_norm(&self, w: &Self, p: f64) -> Result<f64> {
        self.check_same_grid(w)?;
        let s: f64 = self.values.iter().zip(w.values.iter()).map(|(z, wv)| z.norm().powf(p) * wv.re).sum();
        Ok((s * self.grid.cell()).powf(1.0 / p))
    }

    /// ⟨f, g⟩ = Σ f ḡ h².
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.check_same_grid(other)?;
        let s: C64 = self.values.iter().zip(other.values.iter()).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.cell())
    }

    /// ‖f − g‖₂ / ‖g‖₂ (absolute error when g = 0).
    pub fn relative_l2_error(&self, reference: &Self) -> Result<f64> {
        let d = self.sub(reference)?.l2_norm();
        let r = reference.l2_norm();
        Ok(if r == 0.0 { d } else { d / r })
    }

    /// Fraction of squared L² mass in the outer eighth of the box along either axis.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let m = self.grid.m_pts;
        let band = (m / 16).max(1);
        let mut outer = 0.0;
        let mut total = 0.0;
        for i in 0..m {
            for j in 0..m {
                let v = self.values[(i, j)].norm_sqr();
                total += v;
                if i < band || j < band || i >= m - band || j >= m - band {
                    outer += v;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    /// Whether every sample is real and strictly positive.
    pub fn is_positive_real(&self) -> bool {
        self.values.iter().all(|z| z.im == 0.0 && z.re > 0.0 && z.re.is_finite())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&self.grid.l_z.to_le_bytes())?;
        w.write_all(&(self.grid.m_pts as u32).to_le_bytes())?;
        write_samples(&mut w, &self.values)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a phase-grid file".into()));
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
        let grid = PhaseGrid::new(l_z, m_pts).map_err(|e| Error::Format(e.to_string()))?;
        let values = read_samples(&mut r, m_pts)?;
        Ok(Self { grid, values })
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

pub(crate) fn write_samples<W: Write>(w: &mut W, v: &DMatrix<C64>) -> Result<()> {
    for i in 0..v.nrows() {
        for j in 0..v.ncols() {
            w.write_all(&v[(i, j)].re.to_le_bytes())?;
            w.write_all(&v[(i, j)].im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub(crate) fn read_samples<R: Read>(r: &mut R, m: usize) -> Result<DMatrix<C64>> {
    let mut v = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let re = read_f64(r)?;
            let im = read_f64(r)?;
            v[(i, j)] = C64::new(re, im);
        }
    }
    Ok(v)
}
