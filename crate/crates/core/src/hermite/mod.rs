//! Truncated Hermite-basis linear algebra.
//!
//! Basis functions are the L²-normalized Hermite functions h_k with
//! A h_k = √(2k) h_{k−1} and A* h_k = √(2k+2) h_{k+1}. Multi-indices are
//! flattened lexicographically with the first coordinate most significant.

mod matrix;

pub use matrix::{interior_indices, Basis, OperatorMatrix};
pub(crate) use matrix::{read_f64, read_u32};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::C64;

/// Tolerance on the discrete L² norm of every sampled basis function.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Basis truncation together with a uniform ξ-grid and the sampled basis.
#[derive(Clone, Debug)]
pub struct HermiteContext {
    n: usize,
    trunc: usize,
    l_xi: f64,
    points: usize,
    h_xi: f64,
    /// points × N, column k holds h_k on the grid.
    samples: DMatrix<f64>,
}

/// Smallest admissible half-width for truncation N.
pub fn required_half_width(trunc: usize) -> f64 {
    ((2 * trunc + 1) as f64).sqrt() + 2.0
}

impl HermiteContext {
    pub fn new(n: usize, trunc: usize, l_xi: f64, points: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be ≥ 1".into()));
        }
        if trunc < 4 {
            return Err(Error::InvalidArgument(format!("truncation {trunc} < 4")));
        }
        if points < 8 {
            return Err(Error::InvalidArgument(format!("points {points} < 8")));
        }
        if !(l_xi > 0.0 && l_xi.is_finite()) {
            return Err(Error::InvalidArgument(format!("half-width {l_xi} must be positive")));
        }
        let need = required_half_width(trunc);
        if l_xi < need {
            return Err(Error::Capacity(format!(
                "half-width {l_xi} < √(2N+1)+2 = {need:.4} for N={trunc}"
            )));
        }
        if (points as f64) < 4.0 * l_xi {
            return Err(Error::Grid(format!(
                "{points} points under-resolve [−{l_xi}, {l_xi}); need ≥ {}",
                (4.0 * l_xi).ceil()
            )));
        }
        let h_xi = 2.0 * l_xi / points as f64;
        let xs: Vec<f64> = (0..points).map(|i| -l_xi + i as f64 * h_xi).collect();
        let samples = hermite_functions(trunc, &xs);
        let ctx = Self { n, trunc, l_xi, points, h_xi, samples };
        let worst = ctx.normalization_error();
        if worst > NORMALIZATION_TOL {
            return Err(Error::Capacity(format!("discrete normalization error {worst:e} exceeds {NORMALIZATION_TOL:e}")));
        }
        Ok(ctx)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn trunc(&self) -> usize {
        self.trunc
    }
    pub fn l_xi(&self) -> f64 {
        self.l_xi
    }
    pub fn points(&self) -> usize {
        self.points
    }
    pub fn h_xi(&self) -> f64 {
        self.h_xi
    }
    /// Size of the tensor basis, N^n.
    pub fn dim(&self) -> usize {
        self.trunc.pow(self.n as u32)
    }
    pub fn xi(&self, i: usize) -> f64 {
        -self.l_xi + i as f64 * self.h_xi
    }
    pub fn xi_grid(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.xi(i)).collect()
    }
    /// points × N sample matrix.
    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    /// max_k |Σ_i h_k(ξ_i)² h_ξ − 1|.
    pub fn normalization_error(&self) -> f64 {
        (0..self.trunc)
            .map(|k| (self.samples.column(k).norm_squared() * self.h_xi - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Pointwise residual of the three-term recurrence, relative to the max amplitude.
    pub fn recurrence_residual(&self) -> f64 {
        let amp = self.samples.amax();
        let mut worst: f64 = 0.0;
        for k in 1..self.trunc - 1 {
            let a = (2.0 / (k + 1) as f64).sqrt();
            let b = (k as f64 / (k + 1) as f64).sqrt();
            for i in 0..self.points {
                let x = self.xi(i);
                let r = self.samples[(i, k + 1)] - (a * x * self.samples[(i, k)] - b * self.samples[(i, k - 1)]);
                worst = worst.max(r.abs());
            }
        }
        worst / amp
    }

    pub fn flat_index(&self, alpha: &[usize]) -> usize {
        flat_index(self.trunc, alpha)
    }
    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        multi_index(self.n, self.trunc, flat)
    }
    /// |α| for a flat index.
    pub fn level(&self, flat: usize) -> usize {
        self.multi_index(flat).iter().sum()
    }

    fn check_coord(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.n {
            return Err(Error::InvalidArgument(format!("coordinate {j} outside 1..={}", self.n)));
        }
        Ok(())
    }

    /// Matrix of A_j (1-based coordinate).
    pub fn annihilation(&self, j: usize) -> Result<OperatorMatrix> {
        self.check_coord(j)?;
        Ok(self.ladder(j - 1, false))
    }

    /// Matrix of A_j*; components leaving the truncation are dropped.
    pub fn creation(&self, j: usize) -> Result<OperatorMatrix> {
        self.check_coord(j)?;
        Ok(self.ladder(j - 1, true))
    }

    fn ladder(&self, coord: usize, raise: bool) -> OperatorMatrix {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for col in 0..d {
            let mut a = self.multi_index(col);
            let k = a[coord];
            if raise {
                if k + 1 < self.trunc {
                    a[coord] = k + 1;
                    m[(self.flat_index(&a), col)] = C64::new((2.0 * k as f64 + 2.0).sqrt(), 0.0);
                }
            } else if k > 0 {
                a[coord] = k - 1;
                m[(self.flat_index(&a), col)] = C64::new((2.0 * k as f64).sqrt(), 0.0);
            }
        }
        OperatorMatrix::raw(self.n, self.trunc, m, 1)
    }

    /// H = diag(2|α| + n).
    pub fn hermite_operator(&self) -> OperatorMatrix {
        let n = self.n;
        OperatorMatrix::diagonal(n, self.trunc, |i| C64::new((2 * self.level(i) + n) as f64, 0.0))
    }

    /// Eigenvalue 2|α|+n of the flat index.
    pub fn eigenvalue(&self, flat: usize) -> f64 {
        (2 * self.level(flat) + self.n) as f64
    }

    /// P_j, projection onto the eigenvalue 2j+n.
    pub fn projection(&self, level: usize) -> Result<OperatorMatrix> {
        if level >= self.trunc {
            return Err(Error::Truncation(format!("level {level} not fully inside truncation N={}", self.trunc)));
        }
        Ok(OperatorMatrix::diagonal(self.n, self.trunc, |i| {
            if self.level(i) == level {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    /// Levels j with 2^{k−1} ≤ 2j+n < 2^k.
    pub fn dyadic_levels(&self, k: usize) -> std::ops::Range<usize> {
        dyadic_levels(self.n, k)
    }

    /// Whether every level of the dyadic block χ_k lies inside the truncation.
    pub fn dyadic_block_inside(&self, k: usize) -> bool {
        (1..63).contains(&k) && self.dyadic_levels(k).end <= self.trunc
    }

    /// Largest k whose dyadic block lies inside the truncation.
    pub fn max_dyadic_index(&self) -> usize {
        let mut k = 1;
        while self.dyadic_block_inside(k + 1) {
            k += 1;
        }
        k
    }

    /// χ_k = Σ_{2^{k−1} ≤ 2j+n < 2^k} P_j.
    pub fn dyadic_projection(&self, k: usize) -> Result<OperatorMatrix> {
        if !self.dyadic_block_inside(k) {
            return Err(Error::Truncation(format!(
                "dyadic block k={k} exceeds the truncated spectrum (N={}, n={})",
                self.trunc, self.n
            )));
        }
        let levels = self.dyadic_levels(k);
        Ok(OperatorMatrix::diagonal(self.n, self.trunc, |i| {
            if levels.contains(&self.level(i)) {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    /// φ(H + shift) by the spectral theorem; non-positive eigenvalues map to 0.
    pub fn spectral_function(&self, phi: impl Fn(f64) -> f64, shift: f64) -> Result<OperatorMatrix> {
        let d = self.dim();
        let mut vals = Vec::with_capacity(d);
        for i in 0..d {
            let e = self.eigenvalue(i) + shift;
            if e <= 0.0 {
                vals.push(0.0);
                continue;
            }
            let v = phi(e);
            if !v.is_finite() {
                return Err(Error::Domain(format!("φ({e}) is not finite")));
            }
            vals.push(v);
        }
        Ok(OperatorMatrix::diagonal(self.n, self.trunc, |i| C64::new(vals[i], 0.0)))
    }

    /// A_j(λ), A_j*(λ), H(λ) in the λ-scaled basis.
    pub fn scaled_operators(&self, lambda: f64) -> Result<ScaledOperators> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::Domain(format!("λ = {lambda} must be a nonzero real")));
        }
        let s = lambda.abs().sqrt();
        let basis = Basis::Scaled(lambda);
        let mut annihilation = Vec::with_capacity(self.n);
        let mut creation = Vec::with_capacity(self.n);
        for j in 1..=self.n {
            annihilation.push(self.annihilation(j)?.scale_re(s).with_basis(basis));
            creation.push(self.creation(j)?.scale_re(s).with_basis(basis));
        }
        let hermite = self.hermite_operator().scale_re(lambda.abs()).with_basis(basis);
        Ok(ScaledOperators { lambda, annihilation, creation, hermite })
    }

    /// Guard for the grid layer, which is implemented for n = 1.
    pub fn require_planar(&self) -> Result<()> {
        if self.n != 1 {
            return Err(Error::Dimension(format!("grid operations are implemented for n = 1, got n = {}", self.n)));
        }
        Ok(())
    }
}

/// Ladder and Hermite operators at a fixed λ, expressed in the λ-scaled basis.
#[derive(Clone, Debug)]
pub struct ScaledOperators {
    pub lambda: f64,
    pub annihilation: Vec<OperatorMatrix>,
    pub creation: Vec<OperatorMatrix>,
    pub hermite: OperatorMatrix,
}

pub fn dyadic_levels(n: usize, k: usize) -> std::ops::Range<usize> {
    let lo = 1usize << (k - 1);
    let hi = 1usize << k;
    // 2j+n ≥ lo  ⇔  j ≥ ceil((lo−n)/2);  2j+n < hi  ⇔  j < ceil((hi−n)/2)
    let ceil_half = |v: isize| -> usize {
        if v <= 0 {
            0
        } else {
            ((v + 1) / 2) as usize
        }
    };
    ceil_half(lo as isize - n as isize)..ceil_half(hi as isize - n as isize)
}

pub fn flat_index(trunc: usize, alpha: &[usize]) -> usize {
    alpha.iter().fold(0, |acc, &a| acc * trunc + a)
}

pub fn multi_index(n: usize, trunc: usize, mut flat: usize) -> Vec<usize> {
    let mut a = vec![0; n];
    for j in (0..n).rev() {
        a[j] = flat % trunc;
        flat /= trunc;
    }
    a
}

/// Hermite functions h_0..h_{N−1} at arbitrary points (rows) via the three-term recurrence.
pub fn hermite_functions(trunc: usize, xs: &[f64]) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(xs.len(), trunc);
    let c0 = std::f64::consts::PI.powf(-0.25);
    for (i, &x) in xs.iter().enumerate() {
        s[(i, 0)] = c0 * (-0.5 * x * x).exp();
        if trunc > 1 {
            s[(i, 1)] = std::f64::consts::SQRT_2 * x * s[(i, 0)];
        }
        for k in 1..trunc.saturating_sub(1) {
            let a = (2.0 / (k + 1) as f64).sqrt();
            let b = (k as f64 / (k + 1) as f64).sqrt();
            s[(i, k + 1)] = a * x * s[(i, k)] - b * s[(i, k - 1)];
        }
    }
    s
}
