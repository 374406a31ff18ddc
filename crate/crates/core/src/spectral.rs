//! FFT helpers on uniform periodic grids.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let plan = if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        };
        plan.process(buf);
    });
}

/// Signed wavenumber of FFT bin `j` on an `m`-point grid.
pub fn wavenumber(j: usize, m: usize) -> i64 {
    if j <= m / 2 {
        j as i64
    } else {
        j as i64 - m as i64
    }
}

/// Coefficients c_k with f(θ_j) = Σ c_k e^{ikθ_j}.
pub fn fourier_coefficients(values: &[Complex64]) -> Vec<Complex64> {
    let m = values.len() as f64;
    let mut buf = values.to_vec();
    fft_in_place(&mut buf, false);
    for c in &mut buf {
        *c /= m;
    }
    buf
}

pub fn inverse_fourier(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    fft_in_place(&mut buf, true);
    buf
}

/// θ-derivative of a periodic complex sample sequence. The Nyquist mode is dropped.
pub fn derivative(values: &[Complex64]) -> Vec<Complex64> {
    let m = values.len();
    let mut c = fourier_coefficients(values);
    for (j, cj) in c.iter_mut().enumerate() {
        let k = wavenumber(j, m);
        if m % 2 == 0 && j == m / 2 {
            *cj = Complex64::new(0.0, 0.0);
        } else {
            *cj *= Complex64::new(0.0, k as f64);
        }
    }
    inverse_fourier(&c)
}

/// Real trigonometric projection of nodal values.
#[derive(Clone, Debug)]
pub struct RealModes {
    /// a_n for cos nθ, n = 0..=m/2.
    pub cos: Vec<f64>,
    /// b_n for sin nθ, n = 0..=m/2 (b_0 = 0).
    pub sin: Vec<f64>,
}

pub fn real_modes(values: &[f64]) -> RealModes {
    let m = values.len();
    let buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let c = fourier_coefficients(&buf);
    let half = m / 2;
    let mut cos = vec![0.0; half + 1];
    let mut sin = vec![0.0; half + 1];
    cos[0] = c[0].re;
    for n in 1..=half {
        let f = if m % 2 == 0 && n == half { 1.0 } else { 2.0 };
        cos[n] = f * c[n].re;
        sin[n] = -f * c[n].im;
    }
    if m % 2 == 0 {
        sin[half] = 0.0;
    }
    RealModes { cos, sin }
}

/// Trigonometric interpolant of complex nodal samples on a uniform grid.
#[derive(Clone, Debug)]
pub struct TrigInterpolant {
    modes: Vec<(f64, Complex64)>,
}

impl TrigInterpolant {
    pub fn new(values: &[Complex64]) -> Self {
        let m = values.len();
        let c = fourier_coefficients(values);
        let mut modes = Vec::with_capacity(m);
        for (j, &cj) in c.iter().enumerate() {
            if m % 2 == 0 && j == m / 2 {
                // split the Nyquist mode symmetrically so the interpolant is real-consistent
                let k = (m / 2) as f64;
                modes.push((k, cj * 0.5));
                modes.push((-k, cj * 0.5));
            } else {
                modes.push((wavenumber(j, m) as f64, cj));
            }
        }
        Self { modes }
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        self.modes
            .iter()
            .map(|&(k, c)| c * Complex64::from_polar(1.0, k * theta))
            .sum()
    }

    /// Value and first two θ-derivatives.
    pub fn eval_with_derivatives(&self, theta: f64) -> (Complex64, Complex64, Complex64) {
        let mut f = Complex64::new(0.0, 0.0);
        let mut d1 = f;
        let mut d2 = f;
        for &(k, c) in &self.modes {
            let e = c * Complex64::from_polar(1.0, k * theta);
            f += e;
            d1 += e * Complex64::new(0.0, k);
            d2 -= e * (k * k);
        }
        (f, d1, d2)
    }
}

pub fn grid(m: usize) -> Vec<f64> {
    (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_of_pure_trig() {
        let m = 64;
        let v: Vec<f64> = grid(m)
            .iter()
            .map(|&t| 0.5 + 2.0 * (3.0 * t).sin() - 0.25 * (5.0 * t).cos())
            .collect();
        let r = real_modes(&v);
        assert!((r.cos[0] - 0.5).abs() < 1e-14);
        assert!((r.sin[3] - 2.0).abs() < 1e-14);
        assert!((r.cos[5] + 0.25).abs() < 1e-14);
        assert!(r.sin[4].abs() < 1e-14);
    }

    #[test]
    fn derivative_of_exponential() {
        let m = 32;
        let v: Vec<Complex64> = grid(m)
            .iter()
            .map(|&t| Complex64::from_polar(1.0, 3.0 * t))
            .collect();
        let d = derivative(&v);
        for (k, &t) in grid(m).iter().enumerate() {
            let e = Complex64::new(0.0, 3.0) * Complex64::from_polar(1.0, 3.0 * t);
            assert!((d[k] - e).norm() < 1e-12);
        }
    }

    #[test]
    fn interpolant_reproduces_nodes_and_midpoints() {
        let m = 16;
        let f = |t: f64| Complex64::new(t.cos() + 0.1 * (2.0 * t).cos(), t.sin());
        let v: Vec<Complex64> = grid(m).iter().map(|&t| f(t)).collect();
        let it = TrigInterpolant::new(&v);
        for &t in &[0.0, 0.1, 1.7, 3.3] {
            assert!((it.eval(t) - f(t)).norm() < 1e-13);
        }
    }
}
