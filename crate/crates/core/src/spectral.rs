//! FFT helpers for periodic sample vectors on uniform grids.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::C64;

/// Angular frequency of DFT bin `k` for `m` samples with spacing `h`; the
/// Nyquist bin (even m) returns `None`.
fn bin_frequency(k: usize, m: usize, h: f64) -> Option<f64> {
    let signed = if k < m.div_ceil(2) { k as isize } else { k as isize - m as isize };
    if m.is_multiple_of(2) && k == m / 2 {
        return None;
    }
    Some(2.0 * std::f64::consts::PI * signed as f64 / (m as f64 * h))
}

/// Periodic shift: returns g with g(x_i) = u(x_i + d) for the trigonometric interpolant of u.
pub fn shift(u: &[C64], h: f64, d: f64) -> Vec<C64> {
    let mut buf = u.to_vec();
    Shifter::new(u.len(), h).shift_in_place(&mut buf, d);
    buf
}

/// FFT plans for repeated periodic shifts of length-`m` vectors.
pub struct Shifter {
    h: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
}

impl Shifter {
    pub fn new(m: usize, h: f64) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let scratch = vec![C64::new(0.0, 0.0); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
        Shifter { h, fwd, inv, scratch }
    }

    /// In-place version of [`shift`].
    pub fn shift_in_place(&mut self, buf: &mut [C64], d: f64) {
        let (m, h) = (buf.len(), self.h);
        self.fwd.process_with_scratch(buf, &mut self.scratch);
        // phases e^{i w_k d} = r^k for the signed bin k, generated by recurrence
        let r = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * d / (m as f64 * h));
        let mut pow = C64::new(1.0, 0.0);
        for k in 0..m.div_ceil(2) {
            buf[k] *= pow;
            if k > 0 {
                buf[m - k] *= pow.conj();
            }
            pow *= r;
        }
        if m % 2 == 0 {
            // symmetric treatment of the Nyquist mode
            buf[m / 2] *= (std::f64::consts::PI * d / h).cos();
        }
        self.inv.process_with_scratch(buf, &mut self.scratch);
        let s = 1.0 / m as f64;
        buf.iter_mut().for_each(|v| *v *= s);
    }
}

/// Spectral derivative of periodic samples with spacing `h`.
pub fn derivative(u: &[C64], h: f64) -> Vec<C64> {
    let m = u.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut buf = u.to_vec();
    fwd.process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        match bin_frequency(k, m, h) {
            Some(w) => *v *= C64::new(0.0, w),
            None => *v = C64::new(0.0, 0.0),
        }
    }
    inv.process(&mut buf);
    let s = 1.0 / m as f64;
    buf.iter().map(|v| v * s).collect()
}

/// Evaluates the trigonometric interpolant of `u` (samples at origin + i·h) at arbitrary points.
pub fn interpolate(u: &[C64], origin: f64, h: f64, at: &[f64]) -> Vec<C64> {
    let m = u.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let mut coef = u.to_vec();
    fwd.process(&mut coef);
    let s = 1.0 / m as f64;
    at.iter()
        .map(|&x| {
            let t = x - origin;
            let mut acc = C64::new(0.0, 0.0);
            for (k, c) in coef.iter().enumerate() {
                match bin_frequency(k, m, h) {
                    Some(w) => acc += c * C64::from_polar(1.0, w * t),
                    None => acc += c * (std::f64::consts::PI * t / h).cos(),
                }
            }
            acc * s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(m: usize, h: f64, x0: f64) -> Vec<C64> {
        (0..m)
            .map(|i| {
                let x = -(m as f64) * h / 2.0 + i as f64 * h - x0;
                C64::new((-x * x).exp(), 0.0)
            })
            .collect()
    }

    #[test]
    fn shift_moves_gaussian() {
        let h = 0.25;
        let u = gaussian(64, h, 0.0);
        let v = shift(&u, h, 0.3);
        let want = gaussian(64, h, -0.3);
        for (a, b) in v.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_gaussian() {
        let h = 0.25;
        let m = 64;
        let u = gaussian(m, h, 0.0);
        let du = derivative(&u, h);
        for i in 0..m {
            let x = -8.0 + i as f64 * h;
            assert!((du[i].re - (-2.0 * x * (-x * x).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_reproduces_nodes_and_midpoints() {
        let h = 0.25;
        let u = gaussian(64, h, 0.0);
        let at = [-8.0, 0.0, 0.125, 1.3];
        let v = interpolate(&u, -8.0, h, &at);
        for (x, val) in at.iter().zip(&v) {
            assert!((val.re - (-x * x).exp()).abs() < 1e-12, "{x}");
        }
    }
}
