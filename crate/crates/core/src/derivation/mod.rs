//! Non-commutative derivations δ_j m = [m, A_j], δ̄_j m = [A_j*, m], the dyadic
//! Hilbert–Schmidt conditions built from them, heat bands and kernel reports.

mod bands;
mod decay;

pub use bands::{
    band_decompose, band_kernels, band_time, heat_band, heat_band_semigroup, lemma37_shape, telescoping_remainder,
    Lemma37Row, Lemma37Table,
};
pub use decay::{decay_report, DecayReport, SmoothnessRow, DECAY_EXPONENTS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{HermiteContext, OperatorMatrix};

fn check(ctx: &HermiteContext, m: &OperatorMatrix) -> Result<()> {
    if m.n() != ctx.n() || m.trunc() != ctx.trunc() {
        return Err(Error::InvalidArgument("operator and context shapes differ".into()));
    }
    Ok(())
}

/// δ_j m = [m, A_j].
pub fn delta(ctx: &HermiteContext, m: &OperatorMatrix, j: usize) -> Result<OperatorMatrix> {
    check(ctx, m)?;
    let a = ctx.annihilation(j)?;
    Ok(m.commutator(&a).with_margin(m.margin() + 1))
}

/// δ̄_j m = [A_j*, m].
pub fn delta_bar(ctx: &HermiteContext, m: &OperatorMatrix, j: usize) -> Result<OperatorMatrix> {
    check(ctx, m)?;
    let ad = ctx.creation(j)?;
    Ok(ad.commutator(m).with_margin(m.margin() + 1))
}

/// Largest admissible total derivative order, N/4.
pub fn max_order(ctx: &HermiteContext) -> usize {
    ctx.trunc() / 4
}

/// δ^α δ̄^β m (δ̄ applied first).
pub fn multi_derivation(ctx: &HermiteContext, m: &OperatorMatrix, alpha: &[usize], beta: &[usize]) -> Result<OperatorMatrix> {
    if alpha.len() != ctx.n() || beta.len() != ctx.n() {
        return Err(Error::InvalidArgument("multi-index length must equal n".into()));
    }
    let order: usize = alpha.iter().chain(beta).sum();
    if order > max_order(ctx) {
        return Err(Error::MarginExhausted { order, limit: max_order(ctx) });
    }
    let mut out = m.clone();
    for (j, &b) in beta.iter().enumerate() {
        for _ in 0..b {
            out = delta_bar(ctx, &out, j + 1)?;
        }
    }
    for (j, &a) in alpha.iter().enumerate() {
        for _ in 0..a {
            out = delta(ctx, &out, j + 1)?;
        }
    }
    Ok(out)
}

/// δ_j(λ) m = |λ|^{−1/2}[m, A_j(λ)] for m in the λ-scaled basis.
pub fn scaled_delta(ctx: &HermiteContext, m: &OperatorMatrix, j: usize, lambda: f64) -> Result<OperatorMatrix> {
    check(ctx, m)?;
    let ops = ctx.scaled_operators(lambda)?;
    let a = ops.annihilation.get(j.wrapping_sub(1)).ok_or_else(|| Error::InvalidArgument(format!("coordinate {j}")))?;
    Ok(m.commutator(a).scale_re(lambda.abs().powf(-0.5)).with_margin(m.margin() + 1))
}

/// δ̄_j(λ) m = |λ|^{−1/2}[A_j*(λ), m].
pub fn scaled_delta_bar(ctx: &HermiteContext, m: &OperatorMatrix, j: usize, lambda: f64) -> Result<OperatorMatrix> {
    check(ctx, m)?;
    let ops = ctx.scaled_operators(lambda)?;
    let a = ops.creation.get(j.wrapping_sub(1)).ok_or_else(|| Error::InvalidArgument(format!("coordinate {j}")))?;
    Ok(a.commutator(m).scale_re(lambda.abs().powf(-0.5)).with_margin(m.margin() + 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// ‖(δ^α δ̄^β m) χ_k‖_HS
    Left,
    /// ‖χ_k (δ^α δ̄^β m)‖_HS
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MauceriRow {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    /// (k, 2^{k(|α|+|β|−n)}‖·‖²_HS) over the blocks used for this row.
    pub values: Vec<(usize, f64)>,
    pub sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MauceriReport {
    pub order: usize,
    pub side: Side,
    pub rows: Vec<MauceriRow>,
    pub constant: f64,
    /// Dyadic blocks lying inside the interior of the truncation for some row.
    pub blocks_used: Vec<usize>,
    /// Blocks dropped for at least one row because they reach its boundary layer.
    pub blocks_excluded: Vec<usize>,
}

/// All pairs (α, β) of n-multi-indices with |α|+|β| ≤ l, in lexicographic order.
pub fn derivative_pairs(n: usize, l: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut all = Vec::new();
    let mut idx = vec![0usize; 2 * n];
    loop {
        if idx.iter().sum::<usize>() <= l {
            all.push((idx[..n].to_vec(), idx[n..].to_vec()));
        }
        let mut p = 2 * n;
        loop {
            if p == 0 {
                return all;
            }
            p -= 1;
            if idx[p] < l {
                idx[p] += 1;
                break;
            }
            idx[p] = 0;
        }
    }
}

/// sup over dyadic blocks k of 2^{k(|α|+|β|−n)}‖(δ^α δ̄^β m)χ_k‖²_HS for every |α|+|β| ≤ l.
///
/// Hilbert–Schmidt sums run over interior indices of each derived operator, and a
/// block is used only if all its levels are interior.
pub fn mauceri_constant(ctx: &HermiteContext, m: &OperatorMatrix, l: usize, side: Side) -> Result<MauceriReport> {
    check(ctx, m)?;
    if l > max_order(ctx) {
        return Err(Error::MarginExhausted { order: l, limit: max_order(ctx) });
    }
    let n = ctx.n();
    let kmax = ctx.max_dyadic_index();
    let mut rows = Vec::new();
    let mut used = std::collections::BTreeSet::new();
    let mut excluded = std::collections::BTreeSet::new();
    for (alpha, beta) in derivative_pairs(n, l) {
        let d = multi_derivation(ctx, m, &alpha, &beta)?;
        let order = alpha.iter().chain(&beta).sum::<usize>() as i32;
        let interior = d.interior_indices(d.margin());
        let lim = ctx.trunc() - d.margin();
        let mut values = Vec::new();
        for k in 1..=kmax {
            let levels = ctx.dyadic_levels(k);
            if levels.end > lim {
                excluded.insert(k);
                continue;
            }
            used.insert(k);
            let block: Vec<usize> = interior.iter().copied().filter(|&i| levels.contains(&ctx.level(i))).collect();
            let hs2 = match side {
                Side::Left => d.hs_norm_on(&interior, &block),
                Side::Right => d.hs_norm_on(&block, &interior),
            }
            .powi(2);
            values.push((k, 2f64.powi(k as i32 * (order - n as i32)) * hs2));
        }
        let sup = values.iter().map(|v| v.1).fold(0.0, f64::max);
        rows.push(MauceriRow { alpha, beta, values, sup });
    }
    if used.is_empty() {
        return Err(Error::Truncation(format!("no dyadic block fits inside the interior; excluded {excluded:?}")));
    }
    let constant = rows.iter().map(|r| r.sup).fold(0.0, f64::max);
    let excluded: Vec<usize> = excluded.into_iter().collect();
    Ok(MauceriReport { order: l, side, rows, constant, blocks_used: used.into_iter().collect(), blocks_excluded: excluded })
}
