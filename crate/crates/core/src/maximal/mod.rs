//! Dyadic maximal functions on a [`PhaseGrid`], Muckenhoupt constants and the
//! weighted-norm and commutator harnesses for Weyl multipliers.
//!
//! Every supremum ranges over dyadic cubes only. A grid with `G = q·2^d` points
//! per axis is tiled by `q × q` root cubes of side `2^d` cells, each refined
//! dyadically down to single cells.

mod weights;

pub use weights::{
    ap_constant, bmo_commutator, bmo_norm, power_weight, weight_refinement, weighted_ratio, BmoStats, GridOperator,
    WeightProfile, WeightRefinement, WeightedRatioStats, DIVERGENCE_GROWTH,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::weyl::{PhaseGrid, PhaseGridFunction};
use crate::C64;

/// Square block of cells `[i0, i0 + side) × [j0, j0 + side)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cube {
    pub level: usize,
    pub i0: usize,
    pub j0: usize,
    pub side: usize,
}

impl Cube {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        (self.i0..self.i0 + self.side).contains(&i) && (self.j0..self.j0 + self.side).contains(&j)
    }

    /// Geometric center of the cube; cell (i, j) is [x_i, x_i + h) × [y_j, y_j + h).
    pub fn center(&self, grid: &PhaseGrid) -> (f64, f64) {
        let half = self.side as f64 * grid.h() / 2.0;
        (grid.coord(self.i0) + half, grid.coord(self.j0) + half)
    }

    pub fn cells(&self) -> usize {
        self.side * self.side
    }
}

/// Nested dyadic cubes over the grid box, from single cells (level 0) up to the roots.
#[derive(Clone, Debug)]
pub struct DyadicCubeSystem {
    grid: PhaseGrid,
    roots_per_axis: usize,
    depth: usize,
}

impl DyadicCubeSystem {
    pub fn new(grid: PhaseGrid) -> Self {
        let m = grid.m_pts;
        let depth = m.trailing_zeros() as usize;
        Self { grid, roots_per_axis: m >> depth, depth }
    }

    pub fn grid(&self) -> PhaseGrid {
        self.grid
    }

    /// Number of refinement levels above the cells; roots live at this level.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn roots_per_axis(&self) -> usize {
        self.roots_per_axis
    }

    /// Cubes of side `2^level` cells, row-major by (i0, j0).
    pub fn level(&self, level: usize) -> Vec<Cube> {
        assert!(level <= self.depth, "level {level} above the root level {}", self.depth);
        let side = 1 << level;
        let count = self.grid.m_pts / side;
        (0..count)
            .flat_map(|a| (0..count).map(move |b| Cube { level, i0: a * side, j0: b * side, side }))
            .collect()
    }

    pub fn cubes(&self) -> Vec<Cube> {
        (0..=self.depth).flat_map(|k| self.level(k)).collect()
    }

    /// The `4` children of a cube above level 0.
    pub fn children(&self, q: &Cube) -> Vec<Cube> {
        if q.level == 0 {
            return Vec::new();
        }
        let s = q.side / 2;
        let mut out = Vec::with_capacity(4);
        for da in 0..2 {
            for db in 0..2 {
                out.push(Cube { level: q.level - 1, i0: q.i0 + da * s, j0: q.j0 + db * s, side: s });
            }
        }
        out
    }

    /// Evaluates `stat` on every cube and returns, at each cell, the sup over cubes containing it.
    pub fn sup_over_cubes(&self, stat: impl Fn(&Cube) -> f64 + Sync) -> Vec<f64> {
        let m = self.grid.m_pts;
        let mut out = vec![f64::NEG_INFINITY; m * m];
        for k in 0..=self.depth {
            let cubes = self.level(k);
            let vals: Vec<f64> = cubes.par_iter().map(&stat).collect();
            for (q, v) in cubes.iter().zip(vals) {
                for i in q.i0..q.i0 + q.side {
                    for j in q.j0..q.j0 + q.side {
                        let o = &mut out[i * m + j];
                        if v > *o {
                            *o = v;
                        }
                    }
                }
            }
        }
        out
    }

    /// Sup of `stat` over all cubes.
    pub fn sup(&self, stat: impl Fn(&Cube) -> f64 + Sync) -> f64 {
        (0..=self.depth)
            .map(|k| self.level(k).par_iter().map(&stat).reduce(|| f64::NEG_INFINITY, f64::max))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn to_function(grid: PhaseGrid, vals: Vec<f64>) -> PhaseGridFunction {
    let m = grid.m_pts;
    PhaseGridFunction::from_fn_indexed(grid, |i, j| C64::new(vals[i * m + j], 0.0))
}

pub(crate) fn cube_mean(v: &nalgebra::DMatrix<f64>, q: &Cube) -> f64 {
    let mut s = 0.0;
    for i in q.i0..q.i0 + q.side {
        for j in q.j0..q.j0 + q.side {
            s += v[(i, j)];
        }
    }
    s / q.cells() as f64
}

/// Dyadic maximal function M_d f(v) = sup_{v ∈ Q} ⟨|f|⟩_Q.
pub fn dyadic_maximal(f: &PhaseGridFunction) -> PhaseGridFunction {
    let sys = DyadicCubeSystem::new(f.grid());
    let a = f.values().map(|z| z.norm());
    to_function(f.grid(), sys.sup_over_cubes(|q| cube_mean(&a, q)))
}

/// Hardy–Littlewood maximal function, restricted to dyadic cubes (so equal to [`dyadic_maximal`]).
pub fn hl_maximal(f: &PhaseGridFunction) -> PhaseGridFunction {
    dyadic_maximal(f)
}

/// M_s f = (M|f|^s)^{1/s}.
pub fn m_s(f: &PhaseGridFunction, s: f64) -> Result<PhaseGridFunction> {
    if !(s >= 1.0 && s.is_finite()) {
        return Err(Error::Domain(format!("maximal exponent s = {s} must be ≥ 1")));
    }
    if s == 1.0 {
        return Ok(dyadic_maximal(f));
    }
    let sys = DyadicCubeSystem::new(f.grid());
    let a = f.values().map(|z| z.norm().powf(s));
    let vals = sys.sup_over_cubes(|q| cube_mean(&a, q)).into_iter().map(|v| v.powf(1.0 / s)).collect();
    Ok(to_function(f.grid(), vals))
}

/// Mean oscillation of f(z)e^{−(i/2)Im(z ū)} over `q`, u the center of `q`.
pub fn twisted_oscillation(f: &PhaseGridFunction, q: &Cube) -> f64 {
    let grid = f.grid();
    let (a, b) = q.center(&grid);
    let mut g = Vec::with_capacity(q.cells());
    for i in q.i0..q.i0 + q.side {
        let x = grid.coord(i);
        for j in q.j0..q.j0 + q.side {
            let y = grid.coord(j);
            // Im(z ū) = y·a − x·b
            g.push(f.at(i, j) * C64::from_polar(1.0, -0.5 * (y * a - x * b)));
        }
    }
    let n = g.len() as f64;
    let mean = g.iter().sum::<C64>() / n;
    g.iter().map(|v| (v - mean).norm()).sum::<f64>() / n
}

/// Twisted sharp maximal function: sup over dyadic cubes containing v of the twisted mean oscillation.
pub fn twisted_sharp(f: &PhaseGridFunction) -> PhaseGridFunction {
    let sys = DyadicCubeSystem::new(f.grid());
    to_function(f.grid(), sys.sup_over_cubes(|q| twisted_oscillation(f, q)))
}

/// sup_v M̃♯(Tf)(v) / M_s f(v), with 0/0 read as 0.
pub fn pointwise_domination(tf: &PhaseGridFunction, f: &PhaseGridFunction, s: f64) -> Result<f64> {
    tf.check_same_grid(f)?;
    if s <= 1.0 {
        return Err(Error::Domain(format!("domination exponent s = {s} must exceed 1")));
    }
    let sharp = twisted_sharp(tf);
    let ms = m_s(f, s)?;
    let mut worst: f64 = 0.0;
    for (a, b) in sharp.values().iter().zip(ms.values().iter()) {
        let r = match (a.re, b.re) {
            (n, _) if n == 0.0 => 0.0,
            (_, d) if d == 0.0 => f64::INFINITY,
            (n, d) => n / d,
        };
        worst = worst.max(r);
    }
    Ok(worst)
}
