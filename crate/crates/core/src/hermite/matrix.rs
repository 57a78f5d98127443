use std::io::{Read, Write};
use std::ops::{Add, Mul, Sub};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::C64;

const MAGIC: &[u8; 4] = b"WBOM";
const VERSION: u32 = 1;
/// Multi-index order tag: lexicographic, first coordinate most significant.
const ORDER_LEX: u8 = b'L';

/// Which Hermite basis the matrix entries refer to.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Basis {
    /// h_α at unit scale.
    Standard,
    /// h_α^λ(ξ) = |λ|^{n/4} h_α(√|λ| ξ) for the recorded λ.
    Scaled(f64),
}

/// Complex square matrix in the truncated Hermite basis.
///
/// `margin` counts how many boundary layers of the truncation are untrustworthy:
/// ladder operators carry 1, diagonal operators 0, products add and sums take the max.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    n: usize,
    trunc: usize,
    entries: DMatrix<C64>,
    margin: usize,
    basis: Basis,
}

impl OperatorMatrix {
    pub fn from_entries(n: usize, trunc: usize, entries: DMatrix<C64>) -> Result<Self> {
        let dim = trunc.checked_pow(n as u32).ok_or_else(|| Error::InvalidArgument("dimension overflow".into()))?;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::InvalidArgument(format!(
                "expected {dim}x{dim} entries, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("non-finite matrix entry".into()));
        }
        Ok(Self { n, trunc, entries, margin: 0, basis: Basis::Standard })
    }

    pub(crate) fn raw(n: usize, trunc: usize, entries: DMatrix<C64>, margin: usize) -> Self {
        Self { n, trunc, entries, margin, basis: Basis::Standard }
    }

    pub fn zeros(n: usize, trunc: usize) -> Self {
        let d = trunc.pow(n as u32);
        Self::raw(n, trunc, DMatrix::zeros(d, d), 0)
    }

    pub fn identity(n: usize, trunc: usize) -> Self {
        let d = trunc.pow(n as u32);
        Self::raw(n, trunc, DMatrix::identity(d, d), 0)
    }

    /// Diagonal operator with entry `f(flat index)`.
    pub fn diagonal(n: usize, trunc: usize, f: impl Fn(usize) -> C64) -> Self {
        let d = trunc.pow(n as u32);
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = f(i);
        }
        Self::raw(n, trunc, m, 0)
    }

    /// Rank-one operator |h_row⟩⟨h_col| scaled by `c`.
    pub fn elementary(n: usize, trunc: usize, row: usize, col: usize, c: C64) -> Self {
        let mut m = Self::zeros(n, trunc);
        m.entries[(row, col)] = c;
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn trunc(&self) -> usize {
        self.trunc
    }
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }
    pub fn entries_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.entries
    }
    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }
    pub fn margin(&self) -> usize {
        self.margin
    }
    pub fn with_margin(mut self, margin: usize) -> Self {
        self.margin = margin;
        self
    }
    pub fn basis(&self) -> Basis {
        self.basis
    }
    pub fn with_basis(mut self, basis: Basis) -> Self {
        self.basis = basis;
        self
    }
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n == other.n && self.trunc == other.trunc
    }

    fn assert_shape(&self, other: &Self) {
        assert!(
            self.same_shape(other),
            "operator shapes differ: (n={}, N={}) vs (n={}, N={})",
            self.n,
            self.trunc,
            other.n,
            other.trunc
        );
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { entries: &self.entries * c, ..self.clone() }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        Self { entries: self.entries.adjoint(), ..self.clone() }
    }

    /// Entrywise complex conjugate (the basis is real).
    pub fn conj(&self) -> Self {
        Self { entries: self.entries.map(|z| z.conj()), ..self.clone() }
    }

    /// [self, other] = self·other − other·self.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// The scalar c when the matrix is exactly c·I.
    pub fn as_scalar(&self) -> Option<C64> {
        let c = self.entries[(0, 0)];
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { c } else { C64::new(0.0, 0.0) };
                if self.entries[(i, j)] != want {
                    return None;
                }
            }
        }
        Some(c)
    }

    pub fn is_identity(&self) -> bool {
        self.as_scalar() == Some(C64::new(1.0, 0.0))
    }

    pub fn hs_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.entries.clone().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// Flat indices whose every coordinate is ≤ N−1−margin.
    pub fn interior_indices(&self, margin: usize) -> Vec<usize> {
        interior_indices(self.n, self.trunc, margin)
    }

    /// Max |entry| over interior rows and columns for this matrix's own margin.
    pub fn interior_max_abs(&self) -> f64 {
        self.interior_max_abs_with(self.margin)
    }

    pub fn interior_max_abs_with(&self, margin: usize) -> f64 {
        let idx = self.interior_indices(margin);
        let mut m: f64 = 0.0;
        for &r in &idx {
            for &c in &idx {
                m = m.max(self.entries[(r, c)].norm());
            }
        }
        m
    }

    /// Max |a − b| over interior indices using the larger of the two margins.
    pub fn interior_residual(&self, other: &Self) -> f64 {
        let margin = self.margin.max(other.margin);
        (self - other).interior_max_abs_with(margin)
    }

    /// Hilbert–Schmidt norm restricted to an index set on both sides.
    pub fn hs_norm_on(&self, rows: &[usize], cols: &[usize]) -> f64 {
        let mut s = 0.0;
        for &r in rows {
            for &c in cols {
                s += self.entries[(r, c)].norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&(self.trunc as u32).to_le_bytes())?;
        w.write_all(&[ORDER_LEX])?;
        w.write_all(&(self.margin as u32).to_le_bytes())?;
        let d = self.dim();
        for r in 0..d {
            for c in 0..d {
                let z = self.entries[(r, c)];
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not an operator-matrix file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n = read_u32(&mut r)? as usize;
        let trunc = read_u32(&mut r)? as usize;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        if tag[0] != ORDER_LEX {
            return Err(Error::Format(format!("unknown multi-index order tag {:?}", tag[0] as char)));
        }
        let margin = read_u32(&mut r)? as usize;
        if n == 0 || trunc == 0 || n > 4 || trunc > 4096 {
            return Err(Error::Format(format!("implausible shape n={n}, N={trunc}")));
        }
        let d = trunc.pow(n as u32);
        let mut m = DMatrix::zeros(d, d);
        for row in 0..d {
            for col in 0..d {
                let re = read_f64(&mut r)?;
                let im = read_f64(&mut r)?;
                m[(row, col)] = C64::new(re, im);
            }
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after matrix entries".into()));
        }
        Ok(Self::from_entries(n, trunc, m)?.with_margin(margin))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn interior_indices(n: usize, trunc: usize, margin: usize) -> Vec<usize> {
    if margin >= trunc {
        return Vec::new();
    }
    let lim = trunc - 1 - margin;
    let d = trunc.pow(n as u32);
    (0..d)
        .filter(|&i| super::multi_index(n, trunc, i).iter().all(|&a| a <= lim))
        .collect()
}

impl<'a> Mul<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        self.assert_shape(rhs);
        OperatorMatrix {
            n: self.n,
            trunc: self.trunc,
            entries: &self.entries * &rhs.entries,
            margin: self.margin + rhs.margin,
            basis: self.basis,
        }
    }
}

impl<'a> Add<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        self.assert_shape(rhs);
        OperatorMatrix {
            n: self.n,
            trunc: self.trunc,
            entries: &self.entries + &rhs.entries,
            margin: self.margin.max(rhs.margin),
            basis: self.basis,
        }
    }
}

impl<'a> Sub<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        self.assert_shape(rhs);
        OperatorMatrix {
            n: self.n,
            trunc: self.trunc,
            entries: &self.entries - &rhs.entries,
            margin: self.margin.max(rhs.margin),
            basis: self.basis,
        }
    }
}
