//! Patch boundaries as truncated conformal maps.
//!
//! Central patch (exterior map of the unit disk):
//!
//!   Φ(w) = A ε ( w + (Q + ε B₁)/w + ε (B₀ + Σ_{n≥2} B_n w^{-n}) )
//!
//! B₀ (shift) and B₁ (aspect correction) are zero for the plain ellipse map; the
//! solver frees them. Satellites use interior maps in normal form:
//!
//!   Γ(w) = c + f a₁ r ( w + Σ_{n≥3} A_n w^n ),   |f| = 1.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Exterior conformal map of the central patch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierBoundary {
    q: f64,
    eps: f64,
    shift: f64,
    aspect: f64,
    coeffs: Vec<f64>,
    scale: f64,
}

impl FourierBoundary {
    /// Boundary with B₂..B_N given and A normalized to the target area.
    pub fn new(q: f64, eps: f64, coeffs: Vec<f64>) -> Result<Self> {
        Self::with_modes(q, eps, 0.0, 0.0, coeffs)
    }

    /// Boundary with the shift B₀ and aspect correction B₁ set as well.
    pub fn with_modes(q: f64, eps: f64, shift: f64, aspect: f64, coeffs: Vec<f64>) -> Result<Self> {
        let b = Self::unnormalized(q, eps, shift, aspect, coeffs)?;
        renormalize_scale(&b)
    }

    /// Boundary with a forced scale A (no area normalization).
    pub fn with_scale(q: f64, eps: f64, coeffs: Vec<f64>, scale: f64) -> Result<Self> {
        let mut b = Self::unnormalized(q, eps, 0.0, 0.0, coeffs)?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale A must be positive, got {scale}")));
        }
        b.scale = scale;
        Ok(b)
    }

    fn unnormalized(q: f64, eps: f64, shift: f64, aspect: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !(0.0..0.5).contains(&q) {
            return Err(Error::InvalidParameter(format!("Q must lie in [0, 1/2), got {q}")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        if !shift.is_finite() || !aspect.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        Ok(Self { q, eps, shift, aspect, coeffs, scale: 1.0 })
    }

    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn shift(&self) -> f64 {
        self.shift
    }
    pub fn aspect(&self) -> f64 {
        self.aspect
    }
    /// B₂, …, B_N.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
    /// The derived scale A.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Truncation order N (highest power of 1/w).
    pub fn order(&self) -> usize {
        self.coeffs.len() + 1
    }

    /// Aspect actually used by the map: Q + ε B₁.
    pub fn effective_q(&self) -> f64 {
        self.q + self.eps * self.aspect
    }

    /// π ε² (1 − Q²).
    pub fn target_area(&self) -> f64 {
        PI * self.eps * self.eps * (1.0 - self.q * self.q)
    }

    /// Φ(w).
    pub fn map(&self, w: Complex64) -> Complex64 {
        let inv = w.inv();
        let mut tail = Complex64::new(0.0, 0.0);
        // Horner in 1/w for Σ_{n≥2} B_n w^{-n}
        for &b in self.coeffs.iter().rev() {
            tail = (tail + b) * inv;
        }
        tail *= inv;
        let body = w + inv * self.effective_q() + (tail + self.shift) * self.eps;
        body * (self.scale * self.eps)
    }

    /// dΦ(e^{iθ})/dθ = i w Φ'(w).
    pub fn map_dtheta(&self, w: Complex64) -> Complex64 {
        let inv = w.inv();
        let mut tail = Complex64::new(0.0, 0.0);
        let mut p = inv * inv;
        for (j, &b) in self.coeffs.iter().enumerate() {
            tail -= p * (b * (j + 2) as f64);
            p *= inv;
        }
        let wdphi = w - inv * self.effective_q() + tail * self.eps;
        I * wdphi * (self.scale * self.eps)
    }

    /// d²Φ(e^{iθ})/dθ².
    pub fn map_dtheta2(&self, w: Complex64) -> Complex64 {
        let inv = w.inv();
        let mut tail = Complex64::new(0.0, 0.0);
        let mut p = inv * inv;
        for (j, &b) in self.coeffs.iter().enumerate() {
            let n = (j + 2) as f64;
            tail += p * (b * n * n);
            p *= inv;
        }
        // (i d/dθ)² applied termwise: w^k → -k² w^k
        let s = -(w + inv * self.effective_q() + tail * self.eps);
        s * (self.scale * self.eps)
    }

    /// ε² Σ_{n≥2} n B_n².
    pub fn weighted_coeff_sum(&self) -> f64 {
        self.eps
            * self.eps
            * self
                .coeffs
                .iter()
                .enumerate()
                .map(|(j, b)| (j + 2) as f64 * b * b)
                .sum::<f64>()
    }

    /// Closed-form scale (1−Q²)/((1−Q_eff²) − ε² Σ n B_n²). By the area theorem this equals A².
    pub fn closed_form_scale_sum(&self) -> f64 {
        let qe = self.effective_q();
        (1.0 - self.q * self.q) / ((1.0 - qe * qe) - self.weighted_coeff_sum())
    }

    /// Closed-form scale with the (1/2π)‖φ‖²_{Ḣ^{1/2}} convention (half of Σ n B_n²).
    /// Agrees with A to fourth order in the coefficients.
    pub fn closed_form_scale_half(&self) -> f64 {
        let qe = self.effective_q();
        (1.0 - self.q * self.q) / ((1.0 - qe * qe) - 0.5 * self.weighted_coeff_sum())
    }
}

/// Returns `b` with A chosen so the enclosed area equals π ε² (1 − Q²).
pub fn renormalize_scale(b: &FourierBoundary) -> Result<FourierBoundary> {
    let mut unit = b.clone();
    unit.scale = 1.0;
    let m = quadrature_size(unit.order());
    let mut twice = 0.0;
    for k in 0..m {
        let w = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64);
        let z = unit.map(w);
        let dz = unit.map_dtheta(w);
        twice += (z.conj() * dz).im;
    }
    let area = 0.5 * twice * 2.0 * PI / m as f64;
    if !(area > 0.0) {
        return Err(Error::NonpositiveArea(area));
    }
    unit.scale = (b.target_area() / area).sqrt();
    Ok(unit)
}

// The area integrand of a degree-N map is a trigonometric polynomial of degree 2N+2,
// so this grid integrates it exactly.
fn quadrature_size(order: usize) -> usize {
    (4 * (order + 2)).next_power_of_two().max(64)
}

/// Satellite domain in normal form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearDiskDomain {
    center: Complex64,
    frame: Complex64,
    r: f64,
    coeffs: Vec<f64>,
    a1: f64,
}

impl NearDiskDomain {
    pub fn new(center: Complex64, r: f64, coeffs: Vec<f64>) -> Result<Self> {
        Self::with_frame(center, Complex64::new(1.0, 0.0), r, coeffs)
    }

    /// Domain whose local parametrization is rotated by the unit complex `frame`.
    pub fn with_frame(center: Complex64, frame: Complex64, r: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
        }
        if (frame.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("frame must be a unit complex number".into()));
        }
        if !(center.norm() + 2.5 * r < 1.0) {
            return Err(Error::OutsideDisk(format!(
                "|center| + 2.5 r = {} must be < 1",
                center.norm() + 2.5 * r
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        let mut d = Self { center, frame, r, coeffs, a1: 1.0 };
        let m = quadrature_size(d.order());
        let mut twice = 0.0;
        for k in 0..m {
            let w = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64);
            twice += (d.local(w).conj() * d.local_dtheta(w)).im;
        }
        let area = 0.5 * twice * 2.0 * PI / m as f64;
        if !(area > 0.0) {
            return Err(Error::NonpositiveArea(area));
        }
        d.a1 = (PI * r * r / area).sqrt();
        Ok(d)
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }
    pub fn frame(&self) -> Complex64 {
        self.frame
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    /// A₃, …, A_N.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn order(&self) -> usize {
        (self.coeffs.len() + 2).max(1)
    }

    /// Γ(w) − c.
    pub fn local(&self, w: Complex64) -> Complex64 {
        let mut tail = Complex64::new(0.0, 0.0);
        for &a in self.coeffs.iter().rev() {
            tail = (tail + a) * w;
        }
        let body = w + tail * w * w;
        body * self.frame * (self.a1 * self.r)
    }

    pub fn map(&self, w: Complex64) -> Complex64 {
        self.center + self.local(w)
    }

    /// dΓ(e^{iθ})/dθ.
    pub fn local_dtheta(&self, w: Complex64) -> Complex64 {
        let mut s = w;
        let mut p = w * w * w;
        for (j, &a) in self.coeffs.iter().enumerate() {
            s += p * (a * (j + 3) as f64);
            p *= w;
        }
        I * s * self.frame * (self.a1 * self.r)
    }

    pub fn local_dtheta2(&self, w: Complex64) -> Complex64 {
        let mut s = w;
        let mut p = w * w * w;
        for (j, &a) in self.coeffs.iter().enumerate() {
            let n = (j + 3) as f64;
            s += p * (a * n * n);
            p *= w;
        }
        -s * self.frame * (self.a1 * self.r)
    }

    /// Largest |Γ| over the boundary, refined by Newton from the best node of an m-grid.
    pub fn max_modulus(&self, m: usize) -> f64 {
        let mut best = (0.0, f64::NEG_INFINITY);
        for k in 0..m {
            let t = 2.0 * PI * k as f64 / m as f64;
            let v = self.map(Complex64::from_polar(1.0, t)).norm();
            if v > best.1 {
                best = (t, v);
            }
        }
        let mut t = best.0;
        for _ in 0..30 {
            let w = Complex64::from_polar(1.0, t);
            let z = self.map(w);
            let d1 = self.local_dtheta(w);
            let d2 = self.local_dtheta2(w);
            let g = (z.conj() * d1).re;
            let gp = d1.norm_sqr() + (z.conj() * d2).re;
            if gp >= 0.0 {
                break;
            }
            let step = g / gp;
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let refined = self.map(Complex64::from_polar(1.0, t)).norm();
        refined.max(best.1)
    }
}

/// θ-grid samples of a closed boundary.
///
/// Positions are kept relative to an origin so that self-interaction of small
/// domains far from the origin does not lose digits.
#[derive(Clone, Debug)]
pub struct SampledCurve {
    origin: Complex64,
    local: Vec<Complex64>,
    points: Vec<Complex64>,
    dpoints: Vec<Complex64>,
    normals: Vec<Complex64>,
}

impl SampledCurve {
    /// Checked constructor: closed, counterclockwise, nondegenerate, simple.
    pub fn from_parts(origin: Complex64, local: Vec<Complex64>, dpoints: Vec<Complex64>) -> Result<Self> {
        let c = Self::from_parts_unchecked(origin, local, dpoints)?;
        c.validate()?;
        Ok(c)
    }

    /// Curve from node positions only; derivatives are spectral.
    pub fn from_nodes(origin: Complex64, local: Vec<Complex64>) -> Result<Self> {
        let d = spectral::derivative(&local);
        Self::from_parts(origin, local, d)
    }

    pub(crate) fn from_nodes_unchecked(origin: Complex64, local: Vec<Complex64>) -> Result<Self> {
        let d = spectral::derivative(&local);
        Self::from_parts_unchecked(origin, local, d)
    }

    pub(crate) fn from_parts_unchecked(
        origin: Complex64,
        local: Vec<Complex64>,
        dpoints: Vec<Complex64>,
    ) -> Result<Self> {
        let m = local.len();
        if m < 8 || dpoints.len() != m {
            return Err(Error::InvalidParameter(format!("curve needs >= 8 nodes, got {m}")));
        }
        if local.iter().chain(dpoints.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::DegenerateCurve("non-finite sample".into()));
        }
        let points = local.iter().map(|&z| origin + z).collect();
        let normals = dpoints.iter().map(|&d| -I * d / d.norm()).collect();
        Ok(Self { origin, local, points, dpoints, normals })
    }

    fn validate(&self) -> Result<()> {
        let m = self.m();
        let size = self.local.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let speed_floor = 1e-8 * size;
        if let Some(k) = self.dpoints.iter().position(|d| d.norm() < speed_floor) {
            return Err(Error::DegenerateCurve(format!("|dz/dθ| below 1e-8 scale at node {k}")));
        }
        if !(enclosed_area(self) > 0.0) {
            return Err(Error::DegenerateCurve("curve is not counterclockwise".into()));
        }
        let p = &self.local;
        for i in 0..m {
            let (a, b) = (p[i], p[(i + 1) % m]);
            for j in (i + 2)..m {
                if i == 0 && j == m - 1 {
                    continue;
                }
                let (c, d) = (p[j], p[(j + 1) % m]);
                if segments_cross(a, b, c, d) {
                    return Err(Error::DegenerateCurve(format!(
                        "self-intersection between segments {i} and {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.local.len()
    }
    pub fn origin(&self) -> Complex64 {
        self.origin
    }
    pub fn thetas(&self) -> Vec<f64> {
        spectral::grid(self.m())
    }
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }
    /// Positions relative to `origin`.
    pub fn local(&self) -> &[Complex64] {
        &self.local
    }
    /// dz/dθ at the nodes.
    pub fn dpoints(&self) -> &[Complex64] {
        &self.dpoints
    }
    pub fn normals(&self) -> &[Complex64] {
        &self.normals
    }

    pub fn perimeter(&self) -> f64 {
        self.dpoints.iter().map(|d| d.norm()).sum::<f64>() * 2.0 * PI / self.m() as f64
    }

    /// Largest node-to-node distance.
    pub fn diameter(&self) -> f64 {
        let p = &self.local;
        let mut d: f64 = 0.0;
        for i in 0..p.len() {
            for j in (i + 1)..p.len() {
                d = d.max((p[i] - p[j]).norm());
            }
        }
        d
    }

    /// Largest gap between consecutive nodes.
    pub fn max_spacing(&self) -> f64 {
        let m = self.m();
        (0..m)
            .map(|k| (self.local[(k + 1) % m] - self.local[k]).norm())
            .fold(0.0, f64::max)
    }

    /// Rigidly rotated copy about the global origin.
    pub fn rotated(&self, angle: f64) -> SampledCurve {
        let r = Complex64::from_polar(1.0, angle);
        let origin = self.origin * r;
        let local = self.local.iter().map(|&z| z * r).collect();
        let dpoints = self.dpoints.iter().map(|&z| z * r).collect();
        Self::from_parts_unchecked(origin, local, dpoints).expect("rotation preserves validity")
    }
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    (a.conj() * b).im
}

fn segments_cross(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d2 != 0.0 && d3 != 0.0 && d4 != 0.0
}

/// ½ ∮ (x y′ − x′ y) dθ by the trapezoid rule.
pub fn enclosed_area(c: &SampledCurve) -> f64 {
    let s: f64 = c
        .local
        .iter()
        .zip(&c.dpoints)
        .map(|(z, d)| (z.conj() * d).im)
        .sum();
    0.5 * s * 2.0 * PI / c.m() as f64
}

fn check_grid(m: usize, order: usize) -> Result<()> {
    if !m.is_power_of_two() || m < 8 {
        return Err(Error::InvalidParameter(format!("grid size must be a power of two >= 8, got {m}")));
    }
    if m < 4 * order {
        return Err(Error::InvalidParameter(format!(
            "grid size {m} below 4 x truncation order {order}"
        )));
    }
    Ok(())
}

/// Samples Φ on an m-point θ-grid with exact derivatives.
pub fn eval_outer_map(b: &FourierBoundary, m: usize) -> Result<SampledCurve> {
    let c = sample_outer_map(b, m)?;
    c.validate()?;
    Ok(c)
}

pub(crate) fn sample_outer_map(b: &FourierBoundary, m: usize) -> Result<SampledCurve> {
    check_grid(m, b.order())?;
    let mut local = Vec::with_capacity(m);
    let mut d = Vec::with_capacity(m);
    for k in 0..m {
        let w = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64);
        local.push(b.map(w));
        d.push(b.map_dtheta(w));
    }
    let floor = 1e-8 * b.scale() * b.eps();
    if d.iter().any(|z| z.norm() < floor) {
        return Err(Error::DegenerateCurve("|dΦ/dθ| below 1e-8 A ε".into()));
    }
    SampledCurve::from_parts_unchecked(Complex64::new(0.0, 0.0), local, d)
}

/// Samples Γ on an m-point θ-grid; positions stored relative to the center.
pub fn eval_near_disk_map(d: &NearDiskDomain, m: usize) -> Result<SampledCurve> {
    let c = sample_near_disk_map(d, m)?;
    c.validate()?;
    Ok(c)
}

pub(crate) fn sample_near_disk_map(d: &NearDiskDomain, m: usize) -> Result<SampledCurve> {
    check_grid(m, d.order())?;
    let mut local = Vec::with_capacity(m);
    let mut dp = Vec::with_capacity(m);
    for k in 0..m {
        let w = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64);
        local.push(d.local(w));
        dp.push(d.local_dtheta(w));
    }
    let floor = 1e-8 * d.a1() * d.r();
    if dp.iter().any(|z| z.norm() < floor) {
        return Err(Error::DegenerateCurve("|dΓ/dθ| below 1e-8 a₁ r".into()));
    }
    SampledCurve::from_parts_unchecked(d.center(), local, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn forced_circle() {
        let b = FourierBoundary::with_scale(0.0, 0.1, vec![], 1.0).unwrap();
        let curve = eval_outer_map(&b, 64).unwrap();
        for p in curve.points() {
            assert!((p.norm() - 0.1).abs() < 1e-15);
        }
        assert!((enclosed_area(&curve) - PI * 0.01).abs() < 1e-15);
    }

    #[test]
    fn plain_ellipse_has_unit_scale() {
        let b = FourierBoundary::new(0.3, 0.1, vec![0.0; 4]).unwrap();
        assert!((b.scale() - 1.0).abs() < 1e-15);
        let curve = eval_outer_map(&b, 64).unwrap();
        assert!((curve.points()[0] - c(0.13, 0.0)).norm() < 1e-15);
        assert!((curve.points()[16] - c(0.0, 0.07)).norm() < 1e-15);
    }

    #[test]
    fn normalized_area() {
        let b = FourierBoundary::new(0.3, 0.1, vec![0.01]).unwrap();
        let curve = eval_outer_map(&b, 64).unwrap();
        let a = enclosed_area(&curve);
        assert!((a / (PI * 0.01 * 0.91) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scale_matches_closed_forms() {
        let b = FourierBoundary::new(0.3, 0.1, vec![0.05]).unwrap();
        assert!(b.scale() > 1.0);
        assert!((b.scale() * b.scale() - b.closed_form_scale_sum()).abs() < 1e-14);
        let x: f64 = 0.1 * 0.1 * 2.0 * 0.05 * 0.05;
        // half-convention form is the first-order expansion of the square root
        assert!((b.scale() - b.closed_form_scale_half()).abs() < 2.0 * x * x);
    }

    #[test]
    fn huge_perturbation_rejected() {
        match FourierBoundary::new(0.3, 0.1, vec![10.0]) {
            Err(Error::NonpositiveArea(_)) => {}
            other => panic!("expected nonpositive area, got {other:?}"),
        }
    }

    #[test]
    fn derivative_matches_spectral() {
        let b = FourierBoundary::with_modes(0.2, 0.3, 0.1, -0.2, vec![0.3, -0.1, 0.05]).unwrap();
        let curve = eval_outer_map(&b, 64).unwrap();
        let d = spectral::derivative(curve.local());
        for (a, b) in d.iter().zip(curve.dpoints()) {
            assert!((a - b).norm() < 1e-14);
        }
        let w = Complex64::from_polar(1.0, 0.7);
        let h = 1e-4;
        let fd = (b.map_dtheta(w * Complex64::from_polar(1.0, h))
            - b.map_dtheta(w * Complex64::from_polar(1.0, -h)))
            / (2.0 * h);
        assert!((fd - b.map_dtheta2(w)).norm() < 1e-8);
    }

    #[test]
    fn self_intersection_rejected() {
        // strong w^{-2} term folds the curve
        let b = FourierBoundary::with_scale(0.0, 1.0, vec![0.0, 0.0, 0.0, 0.6], 1.0).unwrap();
        assert!(eval_outer_map(&b, 64).is_err());
    }

    #[test]
    fn near_disk_circle_and_area() {
        let d = NearDiskDomain::new(c(0.5, 0.1), 0.05, vec![]).unwrap();
        assert!((d.a1() - 1.0).abs() < 1e-15);
        let curve = eval_near_disk_map(&d, 64).unwrap();
        for p in curve.points() {
            assert!(((p - d.center()).norm() - 0.05).abs() < 1e-15);
        }
        let d = NearDiskDomain::new(c(0.5, 0.0), 0.05, vec![0.1]).unwrap();
        let curve = eval_near_disk_map(&d, 64).unwrap();
        assert!((enclosed_area(&curve) / (PI * 0.0025) - 1.0).abs() < 1e-12);
        // interior area theorem: π r² a₁² (1 + Σ n A_n²)
        assert!((d.a1() - 1.0 / (1.0 + 3.0 * 0.01f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn near_disk_containment() {
        assert!(matches!(
            NearDiskDomain::new(c(0.9, 0.0), 0.05, vec![]),
            Err(Error::OutsideDisk(_))
        ));
    }

    #[test]
    fn max_modulus_of_offset_circle() {
        let d = NearDiskDomain::new(c(0.0, 0.8), 0.05, vec![]).unwrap();
        assert!((d.max_modulus(17) - 0.85).abs() < 1e-14);
    }
}
