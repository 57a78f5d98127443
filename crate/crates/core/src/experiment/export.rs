use std::path::Path;

use crate::derivation::heat_band;
use crate::error::{Error, Result};
use crate::hermite::{HermiteContext, OperatorMatrix};
use crate::rbound::riesz_matrix;

fn index(name: &str, prefixes: &[&str]) -> Option<Result<usize>> {
    prefixes.iter().find_map(|p| name.strip_prefix(p)).map(|rest| {
        rest.parse::<usize>().map_err(|_| Error::Config(format!("'{name}': expected an integer index after the prefix")))
    })
}

/// Materializes a named operator: `A`, `A*`, `H`, `P_j`, `chi_k` (or `χ_k`),
/// `S_j`, `riesz`. Ladder operators act in coordinate 1.
pub fn named_matrix(ctx: &HermiteContext, name: &str) -> Result<OperatorMatrix> {
    match name {
        "A" => return ctx.annihilation(1),
        "A*" => return ctx.creation(1),
        "H" => return Ok(ctx.hermite_operator()),
        "riesz" => return riesz_matrix(ctx),
        _ => {}
    }
    if let Some(j) = index(name, &["P_"]) {
        return ctx.projection(j?);
    }
    if let Some(k) = index(name, &["chi_", "χ_"]) {
        return ctx.dyadic_projection(k?);
    }
    if let Some(j) = index(name, &["S_"]) {
        return Ok(heat_band(ctx, j?));
    }
    Err(Error::Config(format!("unknown operator '{name}' (A, A*, H, P_j, chi_k, S_j, riesz)")))
}

pub fn export_matrix(ctx: &HermiteContext, name: &str, path: impl AsRef<Path>) -> Result<OperatorMatrix> {
    let m = named_matrix(ctx, name)?;
    m.save(path)?;
    Ok(m)
}
