//! Rademacher-average estimates of R-bounds over finite panels, multiplier
//! families in λ, the λ-derivative decomposition of a Weyl multiplier family,
//! the ladder identities behind it and the Riesz counterexample computation.
//!
//! Every constant produced here is a lower-bound-style statistic: a maximum
//! over the tuples actually tested, not a supremum over all tuples.

mod family;
mod identities;
mod lambda;

pub use family::{heat_family, riesz_family, riesz_matrix, spectral_family, MultiplierFamily};
pub use identities::{
    counterexample_theorem16, identity_residuals, prop42_identity, riesz_commutator_growth, spectral_xi_grad,
    xi_grad_factorized, CounterexampleRow, CounterexampleTable, IdentityResiduals, Prop42Residuals, RieszGrowth,
};
pub use lambda::{
    derivative_halving, derivative_terms, fixed_basis_derivative, grid_dilation, overlap_matrix, window_error,
    Convention, DerivativeHalving, DerivativeReport, DerivativeTerms,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maximal::GridOperator;
use crate::weyl::PhaseGridFunction;

/// Largest member count for exhaustive sign enumeration.
pub const MAX_EXACT_MEMBERS: usize = 12;
/// Fewest random sign patterns accepted in sampled mode.
pub const MIN_DRAWS: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SignMode {
    /// All 2^J sign patterns.
    Exact,
    /// `draws` patterns; pattern i uses ChaCha stream i under `seed`.
    Sampled { seed: u64, draws: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleRow {
    pub tuple: usize,
    /// E‖Σ r_j T_j f_j‖_p / E‖Σ r_j f_j‖_p
    pub rademacher: f64,
    /// ‖(Σ|T_j f_j|²)^{1/2}‖_p / ‖(Σ|f_j|²)^{1/2}‖_p
    pub square_function: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RBoundReport {
    pub p: f64,
    pub members: usize,
    pub mode: SignMode,
    pub patterns: usize,
    /// max over tested tuples; a lower bound for the true R-bound
    pub constant: f64,
    pub square_function_constant: f64,
    pub rows: Vec<TupleRow>,
}

fn signs(mode: SignMode, index: usize, members: usize) -> Vec<f64> {
    match mode {
        SignMode::Exact => (0..members).map(|j| if (index >> j) & 1 == 1 { -1.0 } else { 1.0 }).collect(),
        SignMode::Sampled { seed, .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            (0..members).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
        }
    }
}

fn sign_average(funcs: &[PhaseGridFunction], mode: SignMode, patterns: usize, p: f64) -> Result<f64> {
    let norms: Vec<f64> = (0..patterns)
        .into_par_iter()
        .map(|i| {
            let s = signs(mode, i, funcs.len());
            let mut acc = funcs[0].scale(s[0].into());
            for (f, e) in funcs.iter().zip(&s).skip(1) {
                acc = acc.add(&f.scale((*e).into()))?;
            }
            Ok(acc.lp_norm(p))
        })
        .collect::<Result<_>>()?;
    Ok(norms.iter().sum::<f64>() / patterns as f64)
}

fn square_function(funcs: &[PhaseGridFunction], p: f64) -> f64 {
    let mut acc = funcs[0].values().map(|z| z.norm_sqr());
    for f in &funcs[1..] {
        acc += f.values().map(|z| z.norm_sqr());
    }
    let cell = funcs[0].grid().cell();
    (acc.iter().map(|v| v.sqrt().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
}

/// Rademacher and square-function ratios of a family of operators over a panel of tuples.
pub fn rademacher_estimate(
    members: &[&GridOperator<'_>],
    tuples: &[Vec<PhaseGridFunction>],
    p: f64,
    mode: SignMode,
) -> Result<RBoundReport> {
    let j = members.len();
    if j == 0 {
        return Err(Error::InvalidArgument("R-bound estimate needs at least one member".into()));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("exponent p = {p} must be finite and ≥ 1")));
    }
    let patterns = match mode {
        SignMode::Exact if j > MAX_EXACT_MEMBERS => {
            return Err(Error::Mode(format!("exact enumeration needs J ≤ {MAX_EXACT_MEMBERS}, got {j}")))
        }
        SignMode::Exact => 1usize << j,
        SignMode::Sampled { draws, .. } if draws < MIN_DRAWS => {
            return Err(Error::Mode(format!("sampled mode needs at least {MIN_DRAWS} draws, got {draws}")))
        }
        SignMode::Sampled { draws, .. } => draws,
    };
    let mut rows = Vec::with_capacity(tuples.len());
    for (t, fs) in tuples.iter().enumerate() {
        if fs.len() != j {
            return Err(Error::InvalidArgument(format!("tuple {t} has {} entries for {j} members", fs.len())));
        }
        let tfs = members.iter().zip(fs).map(|(op, f)| op(f)).collect::<Result<Vec<_>>>()?;
        let den = sign_average(fs, mode, patterns, p)?;
        let sq_den = square_function(fs, p);
        if den == 0.0 || sq_den == 0.0 {
            return Err(Error::ZeroNorm(format!("tuple {t} vanishes")));
        }
        rows.push(TupleRow {
            tuple: t,
            rademacher: sign_average(&tfs, mode, patterns, p)? / den,
            square_function: square_function(&tfs, p) / sq_den,
        });
    }
    let constant = rows.iter().map(|r| r.rademacher).fold(0.0, f64::max);
    let square_function_constant = rows.iter().map(|r| r.square_function).fold(0.0, f64::max);
    Ok(RBoundReport { p, members: j, mode, patterns, constant, square_function_constant, rows })
}

#[cfg(test)]
mod tests;
