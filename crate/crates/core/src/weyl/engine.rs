use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hermite::{hermite_functions, Basis, HermiteContext, OperatorMatrix};
use crate::weyl::grid::{PhaseGrid, PhaseGridFunction};
use crate::C64;

/// How the ξ-quadrature lattice is chosen for a given λ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Quadrature {
    /// Spacing h_ξ/√|λ|; the z-spacing must be an integer multiple of it.
    Lattice,
    /// Largest spacing ≤ h_ξ/√|λ| that divides the z-spacing.
    Adaptive,
}

/// Number of y-rows per reduction chunk; fixed so the summation order never
/// depends on the worker count.
const CHUNK: usize = 4;

/// Forward and inverse Weyl transform W_λ on one grid, in the λ-scaled basis.
///
/// Quadrature nodes ξ'_i = −L' + i·h' cover the support of the scaled basis;
/// samples are stored on an extended lattice so that every translate ξ' + y
/// with y on the z-grid is an exact row offset.
#[derive(Clone, Debug)]
pub struct WeylEngine {
    n: usize,
    trunc: usize,
    grid: PhaseGrid,
    lambda: f64,
    h_q: f64,
    l_q: f64,
    nodes: usize,
    stride: usize,
    ext: usize,
    /// (nodes + m·stride) × N, scaled basis samples on the extended lattice.
    samples: DMatrix<f64>,
    /// nodes × m, e^{iλ x_k ξ'_i}.
    phase: DMatrix<C64>,
}

impl WeylEngine {
    /// λ = 1 engine; the z-spacing must be a multiple of h_ξ.
    pub fn new(ctx: &HermiteContext, grid: PhaseGrid) -> Result<Self> {
        Self::with_lambda(ctx, grid, 1.0, Quadrature::Lattice)
    }

    pub fn with_lambda(ctx: &HermiteContext, grid: PhaseGrid, lambda: f64, mode: Quadrature) -> Result<Self> {
        ctx.require_planar()?;
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::Domain(format!("λ = {lambda} must be a nonzero real")));
        }
        let root = lambda.abs().sqrt();
        let h_z = grid.h();
        let (h_q, nodes) = match mode {
            Quadrature::Lattice => {
                let h_q = ctx.h_xi() / root;
                let r = h_z / h_q;
                if (r - r.round()).abs() > 1e-9 * r.max(1.0) || r.round() < 1.0 {
                    return Err(Error::Alignment(format!(
                        "z-spacing {h_z} is not an integer multiple of the quadrature spacing {h_q}"
                    )));
                }
                (h_q, ctx.points())
            }
            Quadrature::Adaptive => {
                let k = (h_z * root / ctx.h_xi() - 1e-9).ceil().max(1.0);
                let h_q = h_z / k;
                let width = 2.0 * ctx.l_xi() / root;
                let mut nodes = (width / h_q).ceil() as usize;
                nodes += nodes % 2;
                (h_q, nodes)
            }
        };
        let stride = (h_z / h_q).round() as usize;
        let l_q = nodes as f64 * h_q / 2.0;
        let m = grid.m_pts;
        let ext = (m / 2) * stride;
        let total = nodes + m * stride;
        let pts: Vec<f64> = (0..total).map(|r| root * (-l_q + (r as f64 - ext as f64) * h_q)).collect();
        let samples = hermite_functions(ctx.trunc(), &pts) * root.sqrt();
        let xs = grid.coords();
        let phase = DMatrix::from_fn(nodes, m, |i, k| C64::from_polar(1.0, lambda * xs[k] * (-l_q + i as f64 * h_q)));
        Ok(Self { n: ctx.n(), trunc: ctx.trunc(), grid, lambda, h_q, l_q, nodes, stride, ext, samples, phase })
    }

    pub fn grid(&self) -> PhaseGrid {
        self.grid
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn trunc(&self) -> usize {
        self.trunc
    }
    pub fn quadrature_spacing(&self) -> f64 {
        self.h_q
    }
    fn basis(&self) -> Basis {
        if self.lambda == 1.0 {
            Basis::Standard
        } else {
            Basis::Scaled(self.lambda)
        }
    }

    /// Inversion constant (2π)^{−n}|λ|^n.
    pub fn inversion_constant(&self) -> f64 {
        self.lambda.abs() / (2.0 * std::f64::consts::PI)
    }

    fn row_offset(&self, j: usize) -> usize {
        // y_j / h' = (j − m/2)·stride, shifted by ext
        j * self.stride
    }

    fn check_grid(&self, f: &PhaseGridFunction) -> Result<()> {
        if !f.grid().compatible(&self.grid) {
            return Err(Error::GridMismatch(format!("function grid {:?} vs engine grid {:?}", f.grid(), self.grid)));
        }
        Ok(())
    }

    /// Φ(z)_{αβ} = ⟨π_λ(z) h_β, h_α⟩ by trapezoid quadrature; y must lie on the quadrature lattice.
    pub fn point_matrix(&self, x: f64, y: f64) -> Result<OperatorMatrix> {
        let s = y / self.h_q;
        if (s - s.round()).abs() > 1e-9 * s.abs().max(1.0) {
            return Err(Error::Alignment(format!("y = {y} is not on the ξ-lattice (spacing {})", self.h_q)));
        }
        let s = s.round() as i64;
        let root = self.lambda.abs().sqrt();
        let base: Vec<f64> = (0..self.nodes).map(|i| -self.l_q + i as f64 * self.h_q).collect();
        let shifted: Vec<f64> = base.iter().map(|&xi| root * (xi + s as f64 * self.h_q)).collect();
        let scaled: Vec<f64> = base.iter().map(|&xi| root * xi).collect();
        let sa = hermite_functions(self.trunc, &scaled) * root.sqrt();
        let sb = hermite_functions(self.trunc, &shifted) * root.sqrt();
        let mut out = DMatrix::zeros(self.trunc, self.trunc);
        for i in 0..self.nodes {
            let e = C64::from_polar(self.h_q, self.lambda * (x * base[i] + 0.5 * x * y));
            for a in 0..self.trunc {
                let ea = e * sa[(i, a)];
                for b in 0..self.trunc {
                    out[(a, b)] += ea * sb[(i, b)];
                }
            }
        }
        Ok(OperatorMatrix::raw(self.n, self.trunc, out, 0).with_basis(self.basis()))
    }

    /// Riemann sum Σ_z f(z) Φ(z) h_z².
    pub fn transform(&self, f: &PhaseGridFunction) -> Result<OperatorMatrix> {
        self.check_grid(f)?;
        let m = self.grid.m_pts;
        let xs = self.grid.coords();
        let g = DMatrix::from_fn(m, m, |k, j| f.at(k, j) * C64::from_polar(1.0, 0.5 * self.lambda * xs[k] * xs[j]));
        // F[i, j] = Σ_k e^{iλ x_k ξ'_i} g[k, j]
        let big_f = &self.phase * g;
        let n = self.trunc;
        let core = self.samples.rows(self.ext, self.nodes);
        let chunks: Vec<(DMatrix<f64>, DMatrix<f64>)> = (0..m.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut re = DMatrix::<f64>::zeros(n, n);
                let mut im = DMatrix::<f64>::zeros(n, n);
                let mut a_re = DMatrix::<f64>::zeros(self.nodes, n);
                let mut a_im = DMatrix::<f64>::zeros(self.nodes, n);
                for j in c * CHUNK..((c + 1) * CHUNK).min(m) {
                    let col = big_f.column(j);
                    if col.iter().all(|v| *v == C64::new(0.0, 0.0)) {
                        continue;
                    }
                    for i in 0..self.nodes {
                        let fv = col[i];
                        for a in 0..n {
                            let s = core[(i, a)];
                            a_re[(i, a)] = s * fv.re;
                            a_im[(i, a)] = s * fv.im;
                        }
                    }
                    let sy = self.samples.rows(self.row_offset(j), self.nodes);
                    re.gemm_tr(1.0, &a_re, &sy, 1.0);
                    im.gemm_tr(1.0, &a_im, &sy, 1.0);
                }
                (re, im)
            })
            .collect();
        let mut out = DMatrix::<C64>::zeros(n, n);
        for (re, im) in &chunks {
            for a in 0..n {
                for b in 0..n {
                    out[(a, b)] += C64::new(re[(a, b)], im[(a, b)]);
                }
            }
        }
        let w = self.grid.cell() * self.h_q;
        out *= C64::new(w, 0.0);
        Ok(OperatorMatrix::raw(self.n, self.trunc, out, 0).with_basis(self.basis()))
    }

    /// k(z) = (2π)^{−n}|λ|^n tr(Φ(z)* M).
    pub fn inverse(&self, mat: &OperatorMatrix) -> Result<PhaseGridFunction> {
        self.inverse_scaled(mat, self.inversion_constant())
    }

    /// tr(Φ(z)* M) times an explicit constant.
    pub fn inverse_scaled(&self, mat: &OperatorMatrix, constant: f64) -> Result<PhaseGridFunction> {
        if mat.trunc() != self.trunc || mat.n() != self.n {
            return Err(Error::InvalidArgument(format!(
                "matrix truncation {} does not match engine truncation {}",
                mat.trunc(),
                self.trunc
            )));
        }
        let m = self.grid.m_pts;
        let n = self.trunc;
        let mm = mat.entries();
        let m_re_t = DMatrix::from_fn(n, n, |a, b| mm[(b, a)].re);
        let m_im_t = DMatrix::from_fn(n, n, |a, b| mm[(b, a)].im);
        let core = self.samples.rows(self.ext, self.nodes);
        let xs = self.grid.coords();
        let cols: Vec<Vec<C64>> = (0..m)
            .into_par_iter()
            .map(|j| {
                let sy = self.samples.rows(self.row_offset(j), self.nodes);
                let t_re = sy * &m_re_t;
                let t_im = sy * &m_im_t;
                let kvec: Vec<C64> = (0..self.nodes)
                    .map(|i| {
                        let mut re = 0.0;
                        let mut im = 0.0;
                        for a in 0..n {
                            let s = core[(i, a)];
                            re += s * t_re[(i, a)];
                            im += s * t_im[(i, a)];
                        }
                        C64::new(re, im)
                    })
                    .collect();
                (0..m)
                    .map(|k| {
                        let mut acc = C64::new(0.0, 0.0);
                        for (i, kv) in kvec.iter().enumerate() {
                            acc += self.phase[(i, k)].conj() * kv;
                        }
                        acc * C64::from_polar(constant * self.h_q, -0.5 * self.lambda * xs[k] * xs[j])
                    })
                    .collect()
            })
            .collect();
        let values = DMatrix::from_fn(m, m, |k, j| cols[j][k]);
        PhaseGridFunction::from_values(self.grid, values)
    }

    /// T_m f = W^{−1}(m · W(f)); the identity multiplier returns f unchanged.
    pub fn apply_multiplier(&self, mult: &OperatorMatrix, f: &PhaseGridFunction) -> Result<PhaseGridFunction> {
        if mult.is_identity() {
            if !f.grid().compatible(&self.grid) {
                return Err(Error::GridMismatch(format!("{:?} vs engine {:?}", f.grid(), self.grid)));
            }
            return Ok(f.clone());
        }
        self.apply_two_sided(Some(mult), None, f)
    }

    /// W^{−1}(left · W(f) · right).
    pub fn apply_two_sided(
        &self,
        left: Option<&OperatorMatrix>,
        right: Option<&OperatorMatrix>,
        f: &PhaseGridFunction,
    ) -> Result<PhaseGridFunction> {
        let mut w = self.transform(f)?;
        if let Some(l) = left {
            w = l * &w;
        }
        if let Some(r) = right {
            w = &w * r;
        }
        self.inverse(&w)
    }
}
