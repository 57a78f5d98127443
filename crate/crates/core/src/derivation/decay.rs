use serde::{Deserialize, Serialize};

use crate::derivation::band_time;
use crate::error::{Error, Result};
use crate::weyl::PhaseGridFunction;
use crate::C64;

/// Exponents s = 2n, 2n+½, 2n+1, 2n+2 at n = 1.
pub const DECAY_EXPONENTS: [f64; 4] = [2.0, 2.5, 3.0, 4.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessRow {
    pub u: (f64, f64),
    /// sup_{|z|>2|u|} |z|^{5/2}|k(z−u)e^{−(i/2)Im(z ū)} − k(z)| / |u|^{1/2}
    pub sup: f64,
    /// (Σ_{|z|>2|u|} |z|³ |k(z−u)e^{−(i/2)Im(z ū)} − k(z)|² h²)^{1/2}
    pub l2: f64,
    /// min(t_j^{1/4}/|u|^{1/2}, |u|^{1/2}/t_{j+1}^{1/4})
    pub envelope: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub band: usize,
    pub t_next: f64,
    /// annulus radii (inner, outer)
    pub window: (f64, f64),
    /// (s, sup_window |z|^s |k(z)|)
    pub size: Vec<(f64, f64)>,
    /// (Σ_window |z|³|k|² h²)^{1/2}
    pub l2_weighted: f64,
    pub smoothness: Vec<SmoothnessRow>,
    /// sup_window |z|^{5/2}|k| / t_{j+1}^{1/4}
    pub size_ratio: f64,
    /// max over u of the smoothness ratios
    pub smoothness_ratio: f64,
}

/// Decay and twisted-smoothness statistics of a band kernel on the annulus 1 ≤ |z| ≤ L_z/2.
pub fn decay_report(k: &PhaseGridFunction, band: usize, u_panel: &[(f64, f64)]) -> Result<DecayReport> {
    let grid = k.grid();
    let (r_in, r_out) = (1.0, grid.l_z / 2.0);
    let xs = grid.coords();
    let m = grid.m_pts;
    let in_window = |x: f64, y: f64| {
        let r = (x * x + y * y).sqrt();
        (r_in..=r_out).contains(&r)
    };
    let mut count = 0usize;
    let mut size = vec![0.0; DECAY_EXPONENTS.len()];
    let mut l2 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let (x, y) = (xs[i], xs[j]);
            if !in_window(x, y) {
                continue;
            }
            count += 1;
            let r = (x * x + y * y).sqrt();
            let a = k.at(i, j).norm();
            for (s, e) in size.iter_mut().zip(DECAY_EXPONENTS) {
                *s = f64::max(*s, r.powf(e) * a);
            }
            l2 += r.powi(3) * a * a;
        }
    }
    if count == 0 {
        return Err(Error::Window(format!("annulus {r_in} ≤ |z| ≤ {r_out} contains no grid point")));
    }
    let t0 = band_time(band);
    let t1 = band_time(band + 1);
    let h = grid.h();
    let mut smoothness = Vec::with_capacity(u_panel.len());
    for &(ux, uy) in u_panel {
        let ru = (ux * ux + uy * uy).sqrt();
        if 2.0 * ru >= r_out {
            return Err(Error::Window(format!("|u| = {ru} too large for the window (need 2|u| < {r_out})")));
        }
        let (si, sj) = match (grid.index_of(ux), grid.index_of(uy)) {
            (Some(_), Some(_)) => (((ux / h).round()) as isize, ((uy / h).round()) as isize),
            _ => return Err(Error::Alignment(format!("u = ({ux}, {uy}) is not on the grid lattice"))),
        };
        let mut sup: f64 = 0.0;
        let mut l2u = 0.0;
        if ru > 0.0 {
            for i in 0..m {
                for j in 0..m {
                    let (x, y) = (xs[i], xs[j]);
                    let r = (x * x + y * y).sqrt();
                    if !in_window(x, y) || r <= 2.0 * ru {
                        continue;
                    }
                    let (ii, jj) = (i as isize - si, j as isize - sj);
                    let shifted = if ii < 0 || jj < 0 || ii >= m as isize || jj >= m as isize {
                        C64::new(0.0, 0.0)
                    } else {
                        k.at(ii as usize, jj as usize)
                    };
                    let diff = (shifted * C64::from_polar(1.0, -0.5 * (y * ux - x * uy)) - k.at(i, j)).norm();
                    sup = sup.max(r.powf(2.5) * diff / ru.sqrt());
                    l2u += r.powi(3) * diff * diff;
                }
            }
        }
        let envelope = if ru > 0.0 { (t0.powf(0.25) / ru.sqrt()).min(ru.sqrt() / t1.powf(0.25)) } else { 0.0 };
        let ratio = if envelope > 0.0 { sup / envelope } else { 0.0 };
        smoothness.push(SmoothnessRow { u: (ux, uy), sup, l2: (l2u * grid.cell()).sqrt(), envelope, ratio });
    }
    let size_ratio = size[1] / t1.powf(0.25);
    let smoothness_ratio = smoothness.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(DecayReport {
        band,
        t_next: t1,
        window: (r_in, r_out),
        size: DECAY_EXPONENTS.iter().copied().zip(size).collect(),
        l2_weighted: (l2 * grid.cell()).sqrt(),
        smoothness,
        size_ratio,
        smoothness_ratio,
    })
}
