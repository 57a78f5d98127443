use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hermite::{Basis, HermiteContext, OperatorMatrix};
use crate::C64;

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Riesz,
    Heat,
    Spectral { phi: Scalar, dphi: Option<Scalar> },
}

/// λ ↦ m(λ), stored as λ-scaled-basis matrices at sorted nonzero sample points
/// and evaluable at any other nonzero λ.
#[derive(Clone)]
pub struct MultiplierFamily {
    tag: String,
    trunc: usize,
    n: usize,
    eigen: Vec<f64>,
    kind: Kind,
    lambdas: Vec<f64>,
    matrices: Vec<OperatorMatrix>,
}

impl fmt::Debug for MultiplierFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierFamily").field("tag", &self.tag).field("lambdas", &self.lambdas).finish()
    }
}

/// The Riesz multiplier A H^{−1/2} (the same matrix in every λ-scaled basis).
pub fn riesz_matrix(ctx: &HermiteContext) -> Result<OperatorMatrix> {
    let inv_root = ctx.spectral_function(|t| t.powf(-0.5), 0.0)?;
    Ok(&ctx.annihilation(1)? * &inv_root)
}

fn check_grid(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::Domain("λ sample set is empty".into()));
    }
    if lambdas.iter().any(|l| *l == 0.0 || !l.is_finite()) {
        return Err(Error::Domain("λ samples must be finite and nonzero".into()));
    }
    if lambdas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("λ samples must be strictly increasing".into()));
    }
    Ok(())
}

impl MultiplierFamily {
    fn build(ctx: &HermiteContext, lambdas: &[f64], tag: String, kind: Kind) -> Result<Self> {
        check_grid(lambdas)?;
        if matches!(kind, Kind::Riesz) {
            ctx.require_planar()?;
        }
        let eigen = (0..ctx.dim()).map(|i| ctx.eigenvalue(i)).collect();
        let mut fam = Self { tag, trunc: ctx.trunc(), n: ctx.n(), eigen, kind, lambdas: lambdas.to_vec(), matrices: Vec::new() };
        let riesz = if matches!(fam.kind, Kind::Riesz) { Some(riesz_matrix(ctx)?) } else { None };
        fam.matrices = lambdas.iter().map(|&l| fam.eval(l, riesz.as_ref())).collect::<Result<_>>()?;
        Ok(fam)
    }

    fn eval(&self, lambda: f64, riesz: Option<&OperatorMatrix>) -> Result<OperatorMatrix> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::Domain(format!("λ = {lambda} must be a nonzero real")));
        }
        let s = lambda.abs();
        let m = match &self.kind {
            Kind::Riesz => match riesz {
                Some(r) => r.clone(),
                None => self.matrices[0].clone(),
            },
            Kind::Heat => OperatorMatrix::diagonal(self.n, self.trunc, |i| C64::new((-s * self.eigen[i]).exp(), 0.0)),
            Kind::Spectral { phi, .. } => {
                let vals: Vec<f64> = self.eigen.iter().map(|e| phi(s * e)).collect();
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain(format!("spectral function not finite on the spectrum at λ = {lambda}")));
                }
                OperatorMatrix::diagonal(self.n, self.trunc, |i| C64::new(vals[i], 0.0))
            }
        };
        Ok(m.with_basis(Basis::Scaled(lambda)))
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn matrices(&self) -> &[OperatorMatrix] {
        &self.matrices
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    /// m(λ) in the λ-scaled basis.
    pub fn at(&self, lambda: f64) -> Result<OperatorMatrix> {
        self.eval(lambda, None)
    }

    /// d/dλ of the scaled-basis matrix entries, when known in closed form.
    pub fn matrix_derivative(&self, lambda: f64) -> Result<Option<OperatorMatrix>> {
        let s = lambda.abs();
        let sign = lambda.signum();
        let d = match &self.kind {
            Kind::Riesz => Some(OperatorMatrix::zeros(self.n, self.trunc)),
            Kind::Heat => Some(OperatorMatrix::diagonal(self.n, self.trunc, |i| {
                C64::new(-sign * self.eigen[i] * (-s * self.eigen[i]).exp(), 0.0)
            })),
            Kind::Spectral { dphi: Some(dphi), .. } => Some(OperatorMatrix::diagonal(self.n, self.trunc, |i| {
                C64::new(sign * self.eigen[i] * dphi(s * self.eigen[i]), 0.0)
            })),
            Kind::Spectral { dphi: None, .. } => None,
        };
        Ok(d.map(|m| m.with_basis(Basis::Scaled(lambda))))
    }
}

/// m(λ) = A(λ)H(λ)^{−1/2}; as a scaled-basis matrix this is A H^{−1/2} for every λ.
pub fn riesz_family(ctx: &HermiteContext, lambdas: &[f64]) -> Result<MultiplierFamily> {
    MultiplierFamily::build(ctx, lambdas, "riesz".into(), Kind::Riesz)
}

/// m(λ) = e^{−H(λ)}.
pub fn heat_family(ctx: &HermiteContext, lambdas: &[f64]) -> Result<MultiplierFamily> {
    MultiplierFamily::build(ctx, lambdas, "heat".into(), Kind::Heat)
}

/// m(λ) = φ(H(λ)), with φ' supplied when an analytic λ-derivative is wanted.
pub fn spectral_family(
    ctx: &HermiteContext,
    lambdas: &[f64],
    tag: &str,
    phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    dphi: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
) -> Result<MultiplierFamily> {
    let kind = Kind::Spectral { phi: Arc::new(phi), dphi: dphi.map(Arc::from) };
    MultiplierFamily::build(ctx, lambdas, tag.into(), kind)
}
