//! Dirichlet Green's function of the unit disk and contour-integral velocities.
//!
//! For a patch K of vorticity λ,
//!
//!   conj u(z) = (λ/4π) ∮_{∂K} (ξ̄ − z̄)/(ξ − z) dξ + (λ/4π) conj ∮_{∂K} |ξ|²/(1 − z̄ ξ) dξ,
//!
//! the second integral being the image contribution (it is the contour form of
//! −(iλ/2π) ∫_K ξ̄/(1 − z ξ̄) dμ).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::SampledCurve;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn check_open(x: Complex64) -> Result<()> {
    if x.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::OutsideDisk(format!("|x| = {} >= 1", x.norm())))
    }
}

/// G(x, y) = −(1/2π) log|x − y| + (1/2π) log| |y|(x − y/|y|²) |.
///
/// Uses |1 − x ȳ|² − |x − y|² = (1 − |x|²)(1 − |y|²), which is exact at y = 0
/// and keeps relative accuracy near the boundary.
pub fn green_disk(x: Complex64, y: Complex64) -> Result<f64> {
    check_open(x)?;
    check_open(y)?;
    let d2 = (x - y).norm_sqr();
    if d2 == 0.0 {
        return Err(Error::Coincident);
    }
    let num = (1.0 - x.norm_sqr()) * (1.0 - y.norm_sqr());
    Ok((num / d2).ln_1p() / (4.0 * PI))
}

/// Regular part h(x, y) = (1/2π) log|1 − x ȳ|.
pub fn robin_regular_part(x: Complex64, y: Complex64) -> Result<f64> {
    let s = Complex64::new(1.0, 0.0) - x * y.conj();
    if s.norm() == 0.0 {
        return Err(Error::ImageSingularity);
    }
    Ok(s.norm().ln() / (2.0 * PI))
}

/// ∇ₓ h(x, y) as a complex number (∂₁h + i ∂₂h).
pub fn robin_regular_gradient(x: Complex64, y: Complex64) -> Result<Complex64> {
    let s = Complex64::new(1.0, 0.0) - x.conj() * y;
    if s.norm() == 0.0 {
        return Err(Error::ImageSingularity);
    }
    Ok(-y / s / (2.0 * PI))
}

/// Robin function R(x) = h(x, x) = (1/2π) log(1 − |x|²).
pub fn robin_function(x: Complex64) -> Result<f64> {
    check_open(x)?;
    Ok((-x.norm_sqr()).ln_1p() / (2.0 * PI))
}

/// ∇R(x) = 2 ∇₁h(x, x) = −x / (π (1 − |x|²)).
pub fn robin_gradient(x: Complex64) -> Result<Complex64> {
    check_open(x)?;
    Ok(-x / (PI * (1.0 - x.norm_sqr())))
}

/// Velocity of a point vortex of circulation `gamma` at `x0`, including its image.
pub fn point_vortex_velocity(gamma: f64, x0: Complex64, z: Complex64) -> Complex64 {
    // u = (∂₂Ψ, −∂₁Ψ) = −i ∇Ψ with Ψ = γ G(·, x0)
    let d = z - x0;
    let free = I * d / d.norm_sqr() / (2.0 * PI);
    let img = match robin_regular_gradient(z, x0) {
        Ok(g) => -I * g,
        Err(_) => Complex64::new(0.0, 0.0),
    };
    (free + img) * gamma
}

/// A uniform-vorticity patch.
#[derive(Clone, Debug)]
pub struct PatchSource {
    pub curve: SampledCurve,
    pub strength: f64,
}

impl PatchSource {
    pub fn new(curve: SampledCurve, strength: f64) -> Result<Self> {
        if !strength.is_finite() {
            return Err(Error::InvalidParameter("strength must be finite".into()));
        }
        Ok(Self { curve, strength })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VelocityOptions {
    /// Include the image (boundary) term.
    pub image: bool,
}

impl Default for VelocityOptions {
    fn default() -> Self {
        Self { image: true }
    }
}

/// Velocity induced by `src` at `z` (image term included).
pub fn patch_velocity(src: &PatchSource, z: Complex64, on_curve: Option<usize>) -> Result<Complex64> {
    patch_velocity_with(src, z, on_curve, VelocityOptions::default())
}

pub fn patch_velocity_with(
    src: &PatchSource,
    z: Complex64,
    on_curve: Option<usize>,
    opts: VelocityOptions,
) -> Result<Complex64> {
    if z.norm() > 1.0 + 1e-13 {
        return Err(Error::OutsideDisk(format!("target |z| = {}", z.norm())));
    }
    if let Some(k) = on_curve {
        if k >= src.curve.m() {
            return Err(Error::InvalidParameter(format!("node index {k} out of range")));
        }
    }
    Ok(conj_velocity(src, z, on_curve, opts).conj())
}

fn conj_velocity(src: &PatchSource, z: Complex64, on_curve: Option<usize>, opts: VelocityOptions) -> Complex64 {
    let c = &src.curve;
    let local = c.local();
    let pts = c.points();
    let dp = c.dpoints();
    let zl = match on_curve {
        Some(k) => local[k],
        None => z - c.origin(),
    };
    let mut s1 = Complex64::new(0.0, 0.0);
    for j in 0..local.len() {
        if Some(j) == on_curve {
            s1 += dp[j].conj();
        } else {
            let d = local[j] - zl;
            s1 += d.conj() / d * dp[j];
        }
    }
    let mut s2 = Complex64::new(0.0, 0.0);
    if opts.image {
        let zc = z.conj();
        for j in 0..local.len() {
            s2 += pts[j].norm_sqr() / (1.0 - zc * pts[j]) * dp[j];
        }
    }
    (s1 + s2.conj()) * (src.strength / (2.0 * local.len() as f64))
}

/// Velocities at every node of `target`; `same` marks self-interaction.
pub fn velocity_on_curve(
    src: &PatchSource,
    target: &SampledCurve,
    same: bool,
    opts: VelocityOptions,
) -> Vec<Complex64> {
    let pts = target.points();
    (0..pts.len())
        .into_par_iter()
        .map(|k| {
            let idx = if same { Some(k) } else { None };
            conj_velocity(src, pts[k], idx, opts).conj()
        })
        .collect()
}

/// Velocities at arbitrary interior targets.
pub fn velocity_at(src: &PatchSource, targets: &[Complex64], opts: VelocityOptions) -> Result<Vec<Complex64>> {
    targets
        .iter()
        .map(|&z| patch_velocity_with(src, z, None, opts))
        .collect()
}

/// max over m_bnd points of |x| = 1 of |u · N|.
pub fn tangency_check(src: &PatchSource, m_bnd: usize) -> Result<f64> {
    tangency_check_with(src, m_bnd, VelocityOptions::default())
}

pub fn tangency_check_with(src: &PatchSource, m_bnd: usize, opts: VelocityOptions) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..m_bnd {
        let n = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m_bnd as f64);
        let u = patch_velocity_with(src, n, None, opts)?;
        worst = worst.max((u.conj() * n).re.abs());
    }
    Ok(worst)
}

/// ∮_{|x| = rho} u · t ds by the trapezoid rule.
pub fn circulation(src: &PatchSource, rho: f64, m_bnd: usize) -> Result<f64> {
    let mut s = 0.0;
    for k in 0..m_bnd {
        let z = Complex64::from_polar(rho, 2.0 * PI * k as f64 / m_bnd as f64);
        let u = patch_velocity(src, z, None)?;
        s += (u.conj() * (I * z)).re;
    }
    Ok(s * 2.0 * PI / m_bnd as f64)
}
