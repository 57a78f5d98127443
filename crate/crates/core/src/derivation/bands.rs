use serde::{Deserialize, Serialize};

use crate::derivation::{delta, delta_bar};
use crate::error::{Error, Result};
use crate::hermite::{HermiteContext, OperatorMatrix};
use crate::weyl::{PhaseGridFunction, WeylEngine};
use crate::C64;

/// t_j = 2^{−j}.
pub fn band_time(j: usize) -> f64 {
    2f64.powi(-(j as i32))
}

/// S_j = Σ_k (e^{−2k t_j} − e^{−2k t_{j+1}}) P_k.
pub fn heat_band(ctx: &HermiteContext, j: usize) -> OperatorMatrix {
    let (t0, t1) = (band_time(j), band_time(j + 1));
    OperatorMatrix::diagonal(ctx.n(), ctx.trunc(), |i| {
        let k = ctx.level(i) as f64;
        C64::new((-2.0 * k * t0).exp() - (-2.0 * k * t1).exp(), 0.0)
    })
}

/// e^{n t} e^{−tH}.
fn normalized_heat(ctx: &HermiteContext, t: f64) -> OperatorMatrix {
    let n = ctx.n() as f64;
    OperatorMatrix::diagonal(ctx.n(), ctx.trunc(), |i| C64::new((n * t).exp() * (-t * ctx.eigenvalue(i)).exp(), 0.0))
}

/// S_j = e^{n t_j}e^{−t_j H} − e^{n t_{j+1}}e^{−t_{j+1} H}.
pub fn heat_band_semigroup(ctx: &HermiteContext, j: usize) -> OperatorMatrix {
    &normalized_heat(ctx, band_time(j)) - &normalized_heat(ctx, band_time(j + 1))
}

/// [m₀, m₁, …, m_J] with m₀ = m e^{n t_1}e^{−t_1 H} and m_j = m S_j.
pub fn band_decompose(ctx: &HermiteContext, m: &OperatorMatrix, bands: usize) -> Result<Vec<OperatorMatrix>> {
    if bands == 0 {
        return Err(Error::InvalidArgument("need at least one band".into()));
    }
    let mut out = Vec::with_capacity(bands + 1);
    out.push(m * &normalized_heat(ctx, band_time(1)));
    for j in 1..=bands {
        out.push(m * &heat_band(ctx, j));
    }
    Ok(out)
}

/// m e^{n t_{J+1}} e^{−t_{J+1} H}, the value of m₀ − Σ_{j≤J} m_j.
pub fn telescoping_remainder(ctx: &HermiteContext, m: &OperatorMatrix, bands: usize) -> OperatorMatrix {
    m * &normalized_heat(ctx, band_time(bands + 1))
}

/// Kernels k_j = W^{−1}(m_j) of the band pieces.
pub fn band_kernels(engine: &WeylEngine, pieces: &[OperatorMatrix]) -> Result<Vec<PhaseGridFunction>> {
    pieces.iter().map(|p| engine.inverse(p)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma37Row {
    /// dyadic block index
    pub block: usize,
    /// 2^block · t_{j+1}
    pub x: f64,
    /// ‖χ_block δ̄^γ δ^ρ S_j‖²_HS
    pub value: f64,
    /// value / (t_{j+1}² 2^{block(n+2−γ−ρ)})
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma37Table {
    pub band: usize,
    pub gamma: usize,
    pub rho: usize,
    pub rows: Vec<Lemma37Row>,
    /// normalized value at the first nonzero row divided by the value at the last row
    pub decrease: f64,
    /// for q = 1, 2, 3: max over rows of x^q·normalized divided by the same at the first nonzero row
    pub growth_bounds: Vec<(u32, f64)>,
}

/// Block-wise Hilbert–Schmidt profile of δ̄^γ δ^ρ S_j against x = 2^N t_{j+1} (n = 1 coordinate 1).
pub fn lemma37_shape(ctx: &HermiteContext, band: usize, gamma: usize, rho: usize, s_j: Option<&OperatorMatrix>) -> Result<Lemma37Table> {
    let base = match s_j {
        Some(m) => m.clone(),
        None => heat_band(ctx, band),
    };
    let mut d = base;
    for _ in 0..rho {
        d = delta(ctx, &d, 1)?;
    }
    for _ in 0..gamma {
        d = delta_bar(ctx, &d, 1)?;
    }
    let interior = d.interior_indices(d.margin());
    let lim = ctx.trunc() - d.margin();
    let t1 = band_time(band + 1);
    let n = ctx.n() as i32;
    let mut rows = Vec::new();
    for k in 1..=ctx.max_dyadic_index() {
        let levels = ctx.dyadic_levels(k);
        if levels.end > lim {
            continue;
        }
        let block: Vec<usize> = interior.iter().copied().filter(|&i| levels.contains(&ctx.level(i))).collect();
        let value = d.hs_norm_on(&block, &interior).powi(2);
        let x = 2f64.powi(k as i32) * t1;
        let normalized = value / (t1 * t1 * 2f64.powi(k as i32 * (n + 2 - gamma as i32 - rho as i32)));
        rows.push(Lemma37Row { block: k, x, value, normalized });
    }
    if rows.is_empty() {
        return Err(Error::Truncation("no dyadic block inside the interior".into()));
    }
    let first = rows.iter().position(|r| r.normalized > 0.0);
    let (decrease, growth_bounds) = match first {
        None => (0.0, vec![(1, 0.0), (2, 0.0), (3, 0.0)]),
        Some(f) => {
            let last = rows.last().map(|r| r.normalized).unwrap_or(0.0);
            let decrease = if last > 0.0 { rows[f].normalized / last } else { f64::INFINITY };
            let bounds = (1..=3u32)
                .map(|q| {
                    let at = |r: &Lemma37Row| r.x.powi(q as i32) * r.normalized;
                    let ref_v = at(&rows[f]);
                    let mx = rows[f..].iter().map(at).fold(0.0, f64::max);
                    (q, mx / ref_v)
                })
                .collect();
            (decrease, bounds)
        }
    };
    Ok(Lemma37Table { band, gamma, rho, rows, decrease, growth_bounds })
}
