use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::{self, Shifter};
use crate::weyl::grid::PhaseGridFunction;
use crate::C64;

/// Minimum number of angles for the polyradial average.
pub const MIN_ANGLES: usize = 64;

/// (δ_r f)(z) = f(rz). Exact when r·z stays on the lattice for every grid point
/// (r a positive integer); otherwise requires `interpolate`, which evaluates the
/// trigonometric interpolant and sets points with r·z outside the box to 0.
pub fn dilate(f: &PhaseGridFunction, r: f64, interpolate: bool) -> Result<PhaseGridFunction> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("dilation factor {r} must be positive")));
    }
    let grid = f.grid();
    let m = grid.m_pts;
    let half = (m / 2) as f64;
    let on_lattice = (r - r.round()).abs() < 1e-12;
    if on_lattice {
        let ri = r.round() as isize;
        let values = DMatrix::from_fn(m, m, |i, j| {
            let si = (i as isize - half as isize) * ri + half as isize;
            let sj = (j as isize - half as isize) * ri + half as isize;
            if si < 0 || sj < 0 || si >= m as isize || sj >= m as isize {
                C64::new(0.0, 0.0)
            } else {
                f.at(si as usize, sj as usize)
            }
        });
        return PhaseGridFunction::from_values(grid, values);
    }
    if !interpolate {
        return Err(Error::Resample(format!("dilation by {r} leaves the grid lattice and interpolation is disabled")));
    }
    let xs = grid.coords();
    let targets: Vec<f64> = xs.iter().map(|x| r * x).collect();
    let inside = |t: f64| t >= -grid.l_z && t < grid.l_z;
    // along x for every column, then along y for every row
    let mut stage = DMatrix::zeros(m, m);
    for j in 0..m {
        let col: Vec<C64> = f.values().column(j).iter().copied().collect();
        let v = spectral::interpolate(&col, -grid.l_z, grid.h(), &targets);
        for i in 0..m {
            stage[(i, j)] = if inside(targets[i]) { v[i] } else { C64::new(0.0, 0.0) };
        }
    }
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        let row: Vec<C64> = stage.row(i).iter().copied().collect();
        let v = spectral::interpolate(&row, -grid.l_z, grid.h(), &targets);
        for j in 0..m {
            out[(i, j)] = if inside(targets[j]) { v[j] } else { C64::new(0.0, 0.0) };
        }
    }
    PhaseGridFunction::from_values(grid, out)
}

/// (e_λ f)(x, y) = e^{(i/2)λxy} f(x, y).
pub fn twist_modulate(f: &PhaseGridFunction, lambda: f64) -> PhaseGridFunction {
    f.map_xy(|x, y, v| v * C64::from_polar(1.0, 0.5 * lambda * x * y))
}

/// g(x, y) = f(−y, x), i.e. g(z) = f(iz), on the periodic lattice.
fn quarter_turn(f: &DMatrix<C64>) -> DMatrix<C64> {
    let m = f.nrows();
    DMatrix::from_fn(m, m, |i, j| f[((m - j) % m, i)])
}

/// Row-wise periodic shear g(x, y) = f(x + a·y, y).
fn shear_x(f: &mut DMatrix<C64>, a: f64, xs: &[f64], sh: &mut Shifter) {
    let mut buf = vec![C64::new(0.0, 0.0); f.nrows()];
    for j in 0..f.ncols() {
        buf.copy_from_slice(f.column(j).as_slice());
        sh.shift_in_place(&mut buf, a * xs[j]);
        f.column_mut(j).as_mut_slice().copy_from_slice(&buf);
    }
}

/// Column-wise periodic shear g(x, y) = f(x, y + b·x).
fn shear_y(f: &mut DMatrix<C64>, b: f64, xs: &[f64], sh: &mut Shifter) {
    let mut buf = vec![C64::new(0.0, 0.0); f.ncols()];
    for i in 0..f.nrows() {
        for (j, v) in buf.iter_mut().enumerate() {
            *v = f[(i, j)];
        }
        sh.shift_in_place(&mut buf, b * xs[i]);
        for (j, v) in buf.iter().enumerate() {
            f[(i, j)] = *v;
        }
    }
}

/// g(z) = f(e^{iθ} z): quarter turns followed by a three-shear rotation by |φ| ≤ π/4.
pub fn rotate(f: &PhaseGridFunction, theta: f64) -> PhaseGridFunction {
    let grid = f.grid();
    let xs = grid.coords();
    let h = grid.h();
    let quarters = (theta / std::f64::consts::FRAC_PI_2).round();
    let phi = theta - quarters * std::f64::consts::FRAC_PI_2;
    let mut v = f.values().clone();
    for _ in 0..(quarters as i64).rem_euclid(4) {
        v = quarter_turn(&v);
    }
    if phi.abs() > 1e-15 {
        let t = (phi / 2.0).tan();
        let mut sh = Shifter::new(grid.m_pts, h);
        shear_x(&mut v, -t, &xs, &mut sh);
        shear_y(&mut v, phi.sin(), &xs, &mut sh);
        shear_x(&mut v, -t, &xs, &mut sh);
    }
    PhaseGridFunction::from_values(grid, v).expect("rotation preserves the grid shape")
}

/// Rf(z) = average over θ of f(e^{iθ}z) with `angles` equispaced angles.
pub fn polyradial_project(f: &PhaseGridFunction, angles: usize) -> Result<PhaseGridFunction> {
    if angles < MIN_ANGLES {
        return Err(Error::InvalidArgument(format!("angular quadrature needs ≥ {MIN_ANGLES} angles, got {angles}")));
    }
    let grid = f.grid();
    let mut acc = DMatrix::<C64>::zeros(grid.m_pts, grid.m_pts);
    for k in 0..angles {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / angles as f64;
        acc += rotate(f, theta).values();
    }
    acc /= C64::new(angles as f64, 0.0);
    PhaseGridFunction::from_values(grid, acc)
}
