use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::Result;
use crate::weyl::grid::PhaseGridFunction;
use crate::C64;

/// Boundary-mass fraction above which convolution results are flagged.
pub const BOUNDARY_WARN: f64 = 0.01;

/// Twisted convolution (f×g)(z) = Σ_w f(z−w) g(w) e^{(i/2)Im(z w̄)} h².
///
/// With this twist W(f×g) = W(f)W(g). Translates leaving the box contribute 0.
pub fn twisted_convolve(f: &PhaseGridFunction, g: &PhaseGridFunction) -> Result<PhaseGridFunction> {
    f.check_same_grid(g)?;
    let grid = f.grid();
    let m = grid.m_pts;
    let half = m / 2;
    let xs = grid.coords();
    // Im(z w̄) = y·u − x·v for z = x+iy, w = u+iv; e^{(i/2)ab} table
    let tw = DMatrix::from_fn(m, m, |a, b| C64::from_polar(1.0, 0.5 * xs[a] * xs[b]));
    let fv = f.values();
    let gv = g.values();
    let cols: Vec<Vec<C64>> = (0..m)
        .into_par_iter()
        .map(|iy| {
            (0..m)
                .map(|ix| {
                    let mut acc = C64::new(0.0, 0.0);
                    for iu in 0..m {
                        // z − w has x-index ix − iu + m/2
                        let dx = ix as isize - iu as isize + half as isize;
                        if dx < 0 || dx >= m as isize {
                            continue;
                        }
                        let pu = tw[(iy, iu)];
                        for iv in 0..m {
                            let dy = iy as isize - iv as isize + half as isize;
                            if dy < 0 || dy >= m as isize {
                                continue;
                            }
                            let gw = gv[(iu, iv)];
                            if gw.re == 0.0 && gw.im == 0.0 {
                                continue;
                            }
                            acc += fv[(dx as usize, dy as usize)] * gw * pu * tw[(ix, iv)].conj();
                        }
                    }
                    acc * grid.cell()
                })
                .collect()
        })
        .collect();
    let values = DMatrix::from_fn(m, m, |ix, iy| cols[iy][ix]);
    let out = PhaseGridFunction::from_values(grid, values)?;
    let mass = out.boundary_mass_fraction();
    if mass > BOUNDARY_WARN {
        log::warn!("twisted convolution: {:.2}% of the mass lies in the boundary band", 100.0 * mass);
    }
    Ok(out)
}
