//! Steady-state residual of a single patch, its sine projection and linearization.
//!
//! On the boundary z = Φ(e^{iθ}) the rotating-patch condition reads
//!
//!   𝓕(θ) = Im( (2Ω z̄ + I(z)) w Φ'(w) ) / ε,   I(z) = −2i ū(z),
//!
//! with λ = 1/(πε²) and Ω = (1−Q²)/(4πε²). Division by ε turns the physical
//! residual into the scaled one whose linearization at the ellipse is
//!
//!   sin nθ :  −c_n (B_{n−1} − Q B_{n+1}),   c_n = ((1−Q²) n/2 − 1 − Qⁿ)/π,
//!
//! acting on (B₀, B₁, B₂, …): B₀ is the shift, B₁ the aspect correction. The
//! shift is a rigid translation, so its sin θ entry is (1−Q²)(1+Q)/(2π) instead.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{eval_outer_map, FourierBoundary, SampledCurve};
use crate::kernels::{velocity_on_curve, PatchSource, VelocityOptions};
use crate::solver::{fd_jacobian, Problem};
use crate::spectral::real_modes;

/// Default Sobolev exponent of the coefficient spaces.
pub const DEFAULT_S: f64 = 2.0;

/// Coefficients of sin nθ for n = first, first+1, ….
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineSpectrum {
    pub first: usize,
    pub coeffs: Vec<f64>,
}

impl SineSpectrum {
    pub fn new(first: usize, coeffs: Vec<f64>) -> Self {
        Self { first, coeffs }
    }

    pub fn mode(&self, n: usize) -> f64 {
        n.checked_sub(self.first)
            .and_then(|i| self.coeffs.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    /// sqrt(Σ n^{2(s−1)} b_n²).
    pub fn norm(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, b)| ((self.first + i) as f64).powf(2.0 * (s - 1.0)) * b * b)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, b| a.max(b.abs()))
    }

    pub fn weights(&self, s: f64) -> Vec<f64> {
        (0..self.coeffs.len())
            .map(|i| ((self.first + i) as f64).powf(2.0 * (s - 1.0)))
            .collect()
    }
}

/// Sine projection of nodal values, with symmetry and aliasing diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct Projection {
    pub spectrum: SineSpectrum,
    /// Largest cosine component (zero for reflection-symmetric input).
    pub cos_leak: f64,
    /// Largest component in the upper quarter of the resolved band.
    pub alias: f64,
}

pub fn project_sines(values: &[f64], first: usize, last: usize) -> Projection {
    let modes = real_modes(values);
    let half = modes.sin.len() - 1;
    let coeffs = (first..=last)
        .map(|n| if n <= half { modes.sin[n] } else { 0.0 })
        .collect();
    let cos_leak = modes.cos.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let alias = (half / 2..=half)
        .map(|n| modes.sin[n].abs().max(modes.cos[n].abs()))
        .fold(0.0, f64::max);
    Projection { spectrum: SineSpectrum::new(first, coeffs), cos_leak, alias }
}

/// Im((2Ω z̄ − 2i ū) (−i dz/dθ)) = −2 |dz/dθ| (u − u_rot)·n at one node.
pub fn rotating_residual(z: Complex64, u: Complex64, dz: Complex64, omega: f64) -> f64 {
    let i = Complex64::new(0.0, 1.0);
    ((z.conj() * (2.0 * omega) - i * u.conj() * 2.0) * (-i * dz)).im
}

#[derive(Clone, Copy, Debug)]
pub struct ResidualOptions {
    pub image: bool,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self { image: true }
    }
}

/// Angular velocity Ω = (1−Q²)/(4πε²).
pub fn single_omega(q: f64, eps: f64) -> f64 {
    (1.0 - q * q) / (4.0 * PI * eps * eps)
}

/// Scaled residual at the nodes of `curve` for a patch of label (Q, ε).
pub fn nodal_residual_on(curve: &SampledCurve, q: f64, eps: f64, opts: ResidualOptions) -> Result<Vec<f64>> {
    let lambda = 1.0 / (PI * eps * eps);
    let omega = single_omega(q, eps);
    let src = PatchSource::new(curve.clone(), lambda)?;
    let u = velocity_on_curve(&src, curve, true, VelocityOptions { image: opts.image });
    Ok(curve
        .points()
        .iter()
        .zip(&u)
        .zip(curve.dpoints())
        .map(|((&z, &u), &dz)| rotating_residual(z, u, dz, omega) / eps)
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct SingleResidual {
    /// sin nθ components, n = 1..=N+1.
    pub spectrum: SineSpectrum,
    pub cos_leak: f64,
    pub alias: f64,
    /// max over nodes of |𝓕|.
    pub nodal_max: f64,
}

pub fn residual_single(b: &FourierBoundary, m: usize) -> Result<SingleResidual> {
    residual_single_with(b, m, ResidualOptions::default())
}

pub fn residual_single_with(b: &FourierBoundary, m: usize, opts: ResidualOptions) -> Result<SingleResidual> {
    let curve = eval_outer_map(b, m)?;
    let f = nodal_residual_on(&curve, b.q(), b.eps(), opts)?;
    let p = project_sines(&f, 1, b.order() + 1);
    Ok(SingleResidual {
        spectrum: p.spectrum,
        cos_leak: p.cos_leak,
        alias: p.alias,
        nodal_max: f.iter().fold(0.0, |a, v| a.max(v.abs())),
    })
}

/// Linear map between labelled coefficient vectors.
#[derive(Clone, Debug, Serialize)]
pub struct LinearizedOperator {
    /// Mode n of each row (coefficient of sin nθ).
    pub row_modes: Vec<usize>,
    /// Mode index of each column (B_n for the central patch, A_n for satellites).
    pub col_modes: Vec<usize>,
    matrix: DMatrix<f64>,
}

impl LinearizedOperator {
    pub fn from_matrix(row_modes: Vec<usize>, col_modes: Vec<usize>, matrix: DMatrix<f64>) -> Self {
        assert_eq!(matrix.nrows(), row_modes.len());
        assert_eq!(matrix.ncols(), col_modes.len());
        Self { row_modes, col_modes, matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(x);
        (&self.matrix * v).iter().copied().collect()
    }

    pub fn entry(&self, row_mode: usize, col_mode: usize) -> f64 {
        match (
            self.row_modes.iter().position(|&n| n == row_mode),
            self.col_modes.iter().position(|&n| n == col_mode),
        ) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => 0.0,
        }
    }

    /// Distinct values of (column mode − row mode) over nonzero entries.
    pub fn band_offsets(&self) -> BTreeSet<i64> {
        let mut s = BTreeSet::new();
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                if self.matrix[(i, j)] != 0.0 {
                    s.insert(self.col_modes[j] as i64 - self.row_modes[i] as i64);
                }
            }
        }
        s
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.matrix.nrows())
            .map(|i| self.matrix.row(i).iter().copied().collect())
            .collect()
    }
}

/// c_n = ((1−Q²) n/2 − 1 − Qⁿ)/π.
pub fn multiplier(q: f64, n: usize) -> f64 {
    ((1.0 - q * q) * n as f64 / 2.0 - 1.0 - q.powi(n as i32)) / PI
}

/// Linearization at the ellipse: (B₀, …, B_N) → sin 1..N+1.
///
/// The shift B₀ is a rigid translation, so the self-induced part drops out and
/// only the rotation term 2Ωδ(1+Q) sin θ remains: its entry is (1−Q²)(1+Q)/(2π)
/// rather than −c₁.
pub fn linearization_analytic(q: f64, order: usize) -> Result<LinearizedOperator> {
    check_q(q)?;
    let rows: Vec<usize> = (1..=order + 1).collect();
    let cols: Vec<usize> = (0..=order).collect();
    let mut a = DMatrix::zeros(rows.len(), cols.len());
    for (i, &n) in rows.iter().enumerate() {
        let c = multiplier(q, n);
        a[(i, n - 1)] = if n == 1 { shift_entry(q) } else { -c };
        if n < order {
            a[(i, n + 1)] = q * c;
        }
    }
    Ok(LinearizedOperator::from_matrix(rows, cols, a))
}

pub fn shift_entry(q: f64) -> f64 {
    (1.0 - q * q) * (1.0 + q) / (2.0 * PI)
}

/// The operator with the band placement swapped: sin n ↦ c_n (B_{n+1} − Q B_{n−1}),
/// B₀ = B₁ = 0, acting on (B₂, …, B_N) → sin 1..N. It does not match the functional;
/// kept for comparison.
pub fn linearization_swapped_band(q: f64, order: usize) -> Result<LinearizedOperator> {
    check_q(q)?;
    let rows: Vec<usize> = (1..=order).collect();
    let cols: Vec<usize> = (2..=order).collect();
    let mut a = DMatrix::zeros(rows.len(), cols.len());
    for (i, &n) in rows.iter().enumerate() {
        let c = multiplier(q, n);
        if n < order {
            a[(i, n + 1 - 2)] = c;
        }
        if n >= 3 {
            a[(i, n - 1 - 2)] = -q * c;
        }
    }
    Ok(LinearizedOperator::from_matrix(rows, cols, a))
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Q must lie in (0, 1/2), got {q}")))
    }
}

/// (1−Q²) n/2 − 1 − Qⁿ.
pub fn margin_term(q: f64, n: usize) -> f64 {
    (1.0 - q * q) * n as f64 / 2.0 - 1.0 - q.powi(n as i32)
}

/// min over 3 ≤ n ≤ N of the margin term, with the minimizing n.
pub fn invertibility_margin(q: f64, order: usize) -> Result<(f64, usize)> {
    check_q(q)?;
    if order < 3 {
        return Err(Error::InvalidParameter("order must be >= 3".into()));
    }
    Ok((3..=order)
        .map(|n| (margin_term(q, n), n))
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a }))
}

/// Single-patch equilibrium problem in the unknowns (B₀, B₁, B₂, …, B_N).
#[derive(Clone, Debug)]
pub struct SinglePatchProblem {
    pub q: f64,
    pub eps: f64,
    pub order: usize,
    pub m: usize,
    pub image: bool,
    pub s: f64,
}

impl SinglePatchProblem {
    pub fn new(q: f64, eps: f64, order: usize, m: usize) -> Result<Self> {
        check_q(q)?;
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be >= 0, got {eps}")));
        }
        if order < 2 {
            return Err(Error::InvalidParameter("order must be >= 2".into()));
        }
        if !m.is_power_of_two() || m < 4 * order {
            return Err(Error::InvalidParameter(format!(
                "grid size {m} must be a power of two >= 4 N = {}",
                4 * order
            )));
        }
        Ok(Self { q, eps, order, m, image: true, s: DEFAULT_S })
    }

    pub fn boundary(&self, x: &[f64]) -> Result<FourierBoundary> {
        FourierBoundary::with_modes(self.q, self.eps, x[0], x[1], x[2..].to_vec())
    }

    pub fn unknowns_of(b: &FourierBoundary) -> Vec<f64> {
        let mut x = vec![b.shift(), b.aspect()];
        x.extend_from_slice(b.coeffs());
        x
    }

    /// ε ‖x‖ with weights max(n, 1)^{2s}.
    pub fn perturbation_norm(&self, x: &[f64]) -> f64 {
        self.eps
            * x.iter()
                .enumerate()
                .map(|(n, v)| (n.max(1) as f64).powf(2.0 * self.s) * v * v)
                .sum::<f64>()
                .sqrt()
    }
}

impl Problem for SinglePatchProblem {
    fn dim(&self) -> usize {
        self.order + 1
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.eps == 0.0 {
            return Ok(linearization_analytic(self.q, self.order)?.apply(x));
        }
        let b = self.boundary(x)?;
        let curve = eval_outer_map(&b, self.m)?;
        let f = nodal_residual_on(&curve, self.q, self.eps, ResidualOptions { image: self.image })?;
        Ok(project_sines(&f, 1, self.order + 1).spectrum.coeffs)
    }

    fn row_weights(&self) -> Vec<f64> {
        (1..=self.order + 1)
            .map(|n| (n as f64).powf(2.0 * (self.s - 1.0)))
            .collect()
    }
}

/// Central-difference Jacobian of the residual at `b` over (B₀, B₁, B₂, …, B_N).
pub fn jacobian_numeric(b: &FourierBoundary, h: f64, m: usize) -> Result<DMatrix<f64>> {
    let p = SinglePatchProblem::new(b.q(), b.eps(), b.order().max(2), m)?;
    let mut x = SinglePatchProblem::unknowns_of(b);
    x.resize(p.dim(), 0.0);
    fd_jacobian(&p, &x, h)
}

/// Ellipse with semi-axes (1+Q, 1−Q), λ = 1, no image, rotating at
/// Ω = λab/(a+b)²: largest pointwise |(u − u_rot)·n|.
pub fn kirchhoff_check(q: f64, m: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("Q must lie in [0, 1), got {q}")));
    }
    let i = Complex64::new(0.0, 1.0);
    let th = crate::spectral::grid(m);
    let z: Vec<Complex64> = th.iter().map(|&t| Complex64::from_polar(1.0, t) + Complex64::from_polar(q, -t)).collect();
    let dz: Vec<Complex64> = th
        .iter()
        .map(|&t| i * (Complex64::from_polar(1.0, t) - Complex64::from_polar(q, -t)))
        .collect();
    let curve = SampledCurve::from_parts(Complex64::new(0.0, 0.0), z, dz)?;
    let (a, b) = (1.0 + q, 1.0 - q);
    let omega = a * b / ((a + b) * (a + b));
    let src = PatchSource::new(curve, 1.0)?;
    let u = velocity_on_curve(&src, &src.curve, true, VelocityOptions { image: false });
    Ok(src
        .curve
        .points()
        .iter()
        .zip(&u)
        .zip(src.curve.dpoints())
        .map(|((&z, &u), &dz)| (0.5 * rotating_residual(z, u, dz, omega) / dz.norm()).abs())
        .fold(0.0, f64::max))
}

/// Finite-difference Jacobian at the ellipse against the analytic operator.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumComparison {
    pub q: f64,
    pub order: usize,
    pub eps: f64,
    pub max_abs_diff: f64,
    /// Largest |J| outside the two analytic bands.
    pub off_band_max: f64,
    pub numeric: Vec<Vec<f64>>,
    pub analytic: Vec<Vec<f64>>,
}

pub fn spectrum_comparison(q: f64, order: usize, eps: f64, m: usize) -> Result<SpectrumComparison> {
    let b = FourierBoundary::new(q, eps, vec![0.0; order.saturating_sub(1)])?;
    let j = jacobian_numeric(&b, 1e-6, m)?;
    let l = linearization_analytic(q, order)?;
    let mut off_band_max: f64 = 0.0;
    for r in 0..j.nrows() {
        for c in 0..j.ncols() {
            // row r is sin(r+1); bands sit on columns B_r and B_{r+2}
            if c != r && c != r + 2 {
                off_band_max = off_band_max.max(j[(r, c)].abs());
            }
        }
    }
    let rows = |a: &DMatrix<f64>| (0..a.nrows()).map(|r| a.row(r).iter().copied().collect()).collect();
    Ok(SpectrumComparison {
        q,
        order,
        eps,
        max_abs_diff: (&j - l.matrix()).abs().max(),
        off_band_max,
        numeric: rows(&j),
        analytic: rows(l.matrix()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multipliers_match_special_cases() {
        let q = 0.3;
        assert!((multiplier(q, 1) + 1.69 / (2.0 * PI)).abs() < 1e-15);
        assert!((multiplier(q, 1) + 0.268972).abs() < 1e-6);
        assert!((multiplier(q, 2) + 2.0 * q * q / PI).abs() < 1e-15);
        assert!((multiplier(q, 3) - 0.338 / PI).abs() < 1e-15);
        assert!((multiplier(q, 3) - 0.107589).abs() < 1e-6);
    }

    #[test]
    fn disk_limit_is_diagonal() {
        let l = linearization_analytic(1e-12, 8).unwrap();
        for n in 3..=9 {
            let expect = -((n as f64) / 2.0 - 1.0) / PI;
            assert!((l.entry(n, n - 1) - expect).abs() < 1e-10);
            if n < 8 {
                assert!(l.entry(n, n + 1).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn band_structure() {
        let l = linearization_analytic(0.3, 16).unwrap();
        let offsets: Vec<i64> = l.band_offsets().into_iter().collect();
        assert_eq!(offsets, vec![-1, 1]);
        assert_eq!(l.apply(&[0.0; 17]), vec![0.0; 17]);
    }

    #[test]
    fn margin_values() {
        let (v, n) = invertibility_margin(0.3, 64).unwrap();
        assert_eq!(n, 3);
        assert!((v - 0.338).abs() < 1e-14);
        assert_eq!(margin_term(0.5, 3), 0.0);
        let (v, n) = invertibility_margin(1e-9, 64).unwrap();
        assert_eq!(n, 3);
        assert!((v - 0.5).abs() < 1e-8);
    }

    #[test]
    fn projection_diagnostics() {
        let m = 64;
        let v: Vec<f64> = crate::spectral::grid(m)
            .iter()
            .map(|&t| (2.0 * t).sin() + 1e-3 * (3.0 * t).cos())
            .collect();
        let p = project_sines(&v, 1, 4);
        assert!((p.spectrum.mode(2) - 1.0).abs() < 1e-14);
        assert!((p.cos_leak - 1e-3).abs() < 1e-14);
        assert!(p.alias < 1e-14);
        assert!((p.spectrum.norm(2.0) - 2.0).abs() < 1e-13);
    }
}
