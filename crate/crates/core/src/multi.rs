//! The 2+1 configuration: a central patch D₀ of vorticity 1/(π r₀²) and two
//! satellites D₁, D₂ of total vorticity μ near the boundary, all rotating at
//!
//!   Ω = (1−Q²)/(4π r₀²) + μ/(4π).
//!
//! Satellite centers sit on the horizontal axis at ±(1 − c_d r₀² (1 + r₀² y_j)).
//! Each satellite uses a local frame rotated by arg(x_j), so the point
//! reflection x → −x maps satellite 1 onto satellite 2 with the same (y, A).
//!
//! Residuals: the central patch uses the scaled single-patch form; on a
//! satellite boundary the residual is −(u − u_rot)·n. Its sin θ coefficient is
//! the position residual; sin nθ (n ≥ 2) coefficients are multiplied by r_j/μ,
//! which makes the shape block at a disk equal to −(n−1)/(2π).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{
    project_sines, rotating_residual, LinearizedOperator, SineSpectrum, DEFAULT_S,
};
use crate::geometry::{sample_near_disk_map, sample_outer_map, FourierBoundary, NearDiskDomain, SampledCurve};
use crate::kernels::{velocity_on_curve, PatchSource, VelocityOptions};
use crate::solver::Problem;

/// Choice of the leading coefficient c_d in the satellite center ansatz.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceCoefficient {
    /// μ/(1−Q²): balance of the Robin self-velocity μ/(4π d) against (1−Q²)/(4π r₀²).
    KirchhoffRouth,
    /// 2μ/(1−Q²), the default.
    #[default]
    Doubled,
    /// 2πμ/(1−Q²).
    TwoPi,
    Value(f64),
}

impl DistanceCoefficient {
    pub fn value(&self, q: f64, mu: f64) -> f64 {
        let base = mu / (1.0 - q * q);
        match *self {
            Self::KirchhoffRouth => base,
            Self::Doubled => 2.0 * base,
            Self::TwoPi => 2.0 * PI * base,
            Self::Value(v) => v,
        }
    }
}

pub fn multi_omega(q: f64, mu: f64, r0: f64) -> f64 {
    (1.0 - q * q) / (4.0 * PI * r0 * r0) + mu / (4.0 * PI)
}

/// Signed center of satellite j (sign +1 for j = 1, −1 for j = 2).
pub fn satellite_center(c_d: f64, r0: f64, y: f64, sign: f64) -> f64 {
    sign * (1.0 - c_d * r0 * r0 * (1.0 + r0 * r0 * y))
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiConfig {
    pub q: f64,
    pub mu: f64,
    /// (r₀, r₁, r₂).
    pub radii: [f64; 3],
    /// (y₁, y₂).
    pub y: [f64; 2],
    pub beta0: FourierBoundary,
    pub beta1: NearDiskDomain,
    pub beta2: NearDiskDomain,
    pub omega: f64,
    pub c_d: f64,
}

impl MultiConfig {
    /// `central` holds (B₀, B₁, B₂, …); `sat` the shape coefficients (A₃, …) of each satellite.
    pub fn new(
        q: f64,
        mu: f64,
        radii: [f64; 3],
        y: [f64; 2],
        central: &[f64],
        sat: [Vec<f64>; 2],
        c_d: f64,
    ) -> Result<Self> {
        if !(q > 0.0 && q < 0.5) {
            return Err(Error::InvalidParameter(format!("Q must lie in (0, 1/2), got {q}")));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be >= 0, got {mu}")));
        }
        let [r0, r1, r2] = radii;
        if !(r0 > 0.0 && r1 > 0.0 && r2 > 0.0) {
            return Err(Error::InvalidParameter("radii must be positive".into()));
        }
        if !(r1.max(r2) < 0.5 * r0 * r0) {
            return Err(Error::InvalidParameter(format!(
                "satellite radii must be below r0^2/2 = {}",
                0.5 * r0 * r0
            )));
        }
        if central.len() < 2 {
            return Err(Error::InvalidParameter("central unknowns need at least B0 and B1".into()));
        }
        if !(c_d > 0.0 && c_d.is_finite()) {
            return Err(Error::InvalidParameter(format!("distance coefficient must be positive, got {c_d}")));
        }
        let beta0 = FourierBoundary::with_modes(q, r0, central[0], central[1], central[2..].to_vec())?;
        let [s1, s2] = sat;
        let x1 = satellite_center(c_d, r0, y[0], 1.0);
        let x2 = satellite_center(c_d, r0, y[1], -1.0);
        let one = Complex64::new(1.0, 0.0);
        let beta1 = NearDiskDomain::with_frame(Complex64::new(x1, 0.0), one, r1, s1)?;
        let beta2 = NearDiskDomain::with_frame(Complex64::new(x2, 0.0), -one, r2, s2)?;
        let cfg = Self { q, mu, radii, y, beta0, beta1, beta2, omega: multi_omega(q, mu, r0), c_d };
        cfg.check_geometry(128)?;
        Ok(cfg)
    }

    fn check_geometry(&self, m: usize) -> Result<()> {
        let m = m.max(4 * self.beta0.order()).next_power_of_two();
        let c0 = sample_outer_map(&self.beta0, m)?;
        let r_central = c0.points().iter().map(|z| z.norm()).fold(0.0, f64::max);
        if r_central >= 1.0 {
            return Err(Error::Overlap("central patch leaves the disk".into()));
        }
        for (j, d) in [&self.beta1, &self.beta2].into_iter().enumerate() {
            let c = sample_near_disk_map(d, m.max(4 * d.order()).next_power_of_two())?;
            let reach = c.local().iter().map(|z| z.norm()).fold(0.0, f64::max);
            if d.center().norm() + reach >= 1.0 {
                return Err(Error::Collision(format!("satellite {} touches the boundary", j + 1)));
            }
            if d.center().norm() - reach <= r_central {
                return Err(Error::Overlap(format!("satellite {} meets the central patch", j + 1)));
            }
        }
        Ok(())
    }

    pub fn satellites(&self) -> [&NearDiskDomain; 2] {
        [&self.beta1, &self.beta2]
    }

    fn curves(&self, m: usize) -> Result<[SampledCurve; 3]> {
        Ok([
            sample_outer_map(&self.beta0, m)?,
            sample_near_disk_map(&self.beta1, m)?,
            sample_near_disk_map(&self.beta2, m)?,
        ])
    }

    fn strengths(&self) -> [f64; 3] {
        let [r0, r1, r2] = self.radii;
        [1.0 / (PI * r0 * r0), self.mu / (PI * r1 * r1), self.mu / (PI * r2 * r2)]
    }

    /// Sampled boundaries and strengths of the three patches.
    pub fn sources(&self, m: usize) -> Result<Vec<PatchSource>> {
        let s = self.strengths();
        self.curves(m)?
            .into_iter()
            .zip(s)
            .map(|(c, l)| PatchSource::new(c, l))
            .collect()
    }

    pub fn shapes_are_zero(&self) -> bool {
        let b = &self.beta0;
        b.shift() == 0.0
            && b.aspect() == 0.0
            && b.coeffs().iter().all(|&v| v == 0.0)
            && self.beta1.coeffs().iter().all(|&v| v == 0.0)
            && self.beta2.coeffs().iter().all(|&v| v == 0.0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SatelliteResidual {
    /// sin θ coefficient of −(u − u_rot)·n.
    pub position: f64,
    /// sin nθ coefficients (n ≥ 2) times r_j/μ.
    pub shape: SineSpectrum,
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiResidual {
    /// Scaled central residual, sin 1..N+1.
    pub central: SineSpectrum,
    pub satellites: [SatelliteResidual; 2],
    /// Largest cosine component over the three boundaries.
    pub cos_leak: f64,
    /// Largest nodal residual per boundary (central scaled, satellites in velocity units).
    pub nodal_max: [f64; 3],
}

impl MultiResidual {
    /// Weighted norm over all components, s = 2 weights n².
    pub fn norm(&self) -> f64 {
        let mut s = self.central.norm(DEFAULT_S).powi(2);
        for sat in &self.satellites {
            s += sat.position * sat.position + sat.shape.norm(DEFAULT_S).powi(2);
        }
        s.sqrt()
    }
}

fn nodal_values(c: &MultiConfig, m: usize) -> Result<[Vec<f64>; 3]> {
    let sources = c.sources(m)?;
    let opts = VelocityOptions::default();
    let mut out: [Vec<f64>; 3] = Default::default();
    for (t, target) in sources.iter().enumerate() {
        let curve = &target.curve;
        let mut u = vec![Complex64::new(0.0, 0.0); curve.m()];
        for (s, src) in sources.iter().enumerate() {
            if src.strength == 0.0 {
                continue;
            }
            for (acc, v) in u.iter_mut().zip(velocity_on_curve(src, curve, s == t, opts)) {
                *acc += v;
            }
        }
        out[t] = curve
            .points()
            .iter()
            .zip(&u)
            .zip(curve.dpoints())
            .map(|((&z, &u), &dz)| {
                let f = rotating_residual(z, u, dz, c.omega);
                if t == 0 {
                    f / c.radii[0]
                } else {
                    0.5 * f / dz.norm()
                }
            })
            .collect();
    }
    Ok(out)
}

/// Residual of the full system at `c`. Central rows sin 1..N+1; satellite shape rows
/// sin 2..N_j − 1 where N_j is the satellite order.
pub fn residual_multi(c: &MultiConfig, m: usize) -> Result<MultiResidual> {
    let nodal = nodal_values(c, m)?;
    let p0 = project_sines(&nodal[0], 1, c.beta0.order() + 1);
    let mut leak = p0.cos_leak;
    let mut sats = Vec::with_capacity(2);
    for (j, d) in c.satellites().into_iter().enumerate() {
        let last = d.order().saturating_sub(1).max(2);
        let p = project_sines(&nodal[j + 1], 1, last);
        leak = leak.max(p.cos_leak);
        let norm = shape_scale(c.mu, c.radii[j + 1]);
        let shape = SineSpectrum::new(2, p.spectrum.coeffs[1..].iter().map(|v| v * norm).collect());
        sats.push(SatelliteResidual { position: p.spectrum.coeffs[0], shape });
    }
    let nodal_max = nodal.map(|v| v.iter().fold(0.0, |a: f64, b| a.max(b.abs())));
    let s2 = sats.pop().expect("two satellites");
    let s1 = sats.pop().expect("two satellites");
    Ok(MultiResidual { central: p0.spectrum, satellites: [s1, s2], cos_leak: leak, nodal_max })
}

fn shape_scale(mu: f64, r: f64) -> f64 {
    if mu > 0.0 {
        r / mu
    } else {
        r
    }
}

/// The full system in the unknowns
/// (B₀, B₁, B₂..B_N | y₁, A¹₃..A¹_N | y₂, A²₃..A²_N).
#[derive(Clone, Debug)]
pub struct MultiProblem {
    pub q: f64,
    pub mu: f64,
    pub radii: [f64; 3],
    pub order: usize,
    pub m: usize,
    pub c_d: f64,
}

impl MultiProblem {
    pub fn new(q: f64, mu: f64, radii: [f64; 3], order: usize, m: usize, c_d: f64) -> Result<Self> {
        if order < 3 {
            return Err(Error::InvalidParameter("order must be >= 3".into()));
        }
        if !m.is_power_of_two() || m < 4 * order {
            return Err(Error::InvalidParameter(format!("grid size {m} must be a power of two >= 4 N")));
        }
        Ok(Self { q, mu, radii, order, m, c_d })
    }

    fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
        let n0 = self.order + 1;
        let ns = self.order - 1;
        (&x[..n0], &x[n0..n0 + ns], &x[n0 + ns..])
    }

    pub fn config(&self, x: &[f64]) -> Result<MultiConfig> {
        if x.len() != self.dim() {
            return Err(Error::InvalidParameter(format!("expected {} unknowns", self.dim())));
        }
        let (c, s1, s2) = self.split(x);
        MultiConfig::new(
            self.q,
            self.mu,
            self.radii,
            [s1[0], s2[0]],
            c,
            [s1[1..].to_vec(), s2[1..].to_vec()],
            self.c_d,
        )
    }

    pub fn unknowns_of(c: &MultiConfig) -> Vec<f64> {
        let mut x = vec![c.beta0.shift(), c.beta0.aspect()];
        x.extend_from_slice(c.beta0.coeffs());
        for (j, d) in c.satellites().into_iter().enumerate() {
            x.push(c.y[j]);
            x.extend_from_slice(d.coeffs());
        }
        x
    }

    /// Shape-free starting point, with y_j placing the satellites at the
    /// Kirchhoff–Routh balance distance μ r₀²/(1−Q²).
    pub fn trivial_guess(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        let r0 = self.radii[0];
        let y = (DistanceCoefficient::KirchhoffRouth.value(self.q, self.mu) / self.c_d - 1.0) / (r0 * r0);
        x[self.order + 1] = y;
        x[2 * self.order] = y;
        x
    }
}

impl Problem for MultiProblem {
    fn dim(&self) -> usize {
        self.order + 1 + 2 * (self.order - 1)
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = residual_multi(&self.config(x)?, self.m)?;
        let mut v = r.central.coeffs;
        for s in r.satellites {
            v.push(s.position);
            v.extend(s.shape.coeffs);
        }
        Ok(v)
    }

    fn row_weights(&self) -> Vec<f64> {
        let p = 2.0 * (DEFAULT_S - 1.0);
        let mut w: Vec<f64> = (1..=self.order + 1).map(|n| (n as f64).powf(p)).collect();
        for _ in 0..2 {
            w.extend((1..self.order).map(|n| (n as f64).powf(p)));
        }
        w
    }
}

/// d_j = 1 − max over ∂D_j of |x|.
pub fn boundary_distance(c: &MultiConfig) -> [f64; 2] {
    [1.0 - c.beta1.max_modulus(256), 1.0 - c.beta2.max_modulus(256)]
}

/// Diagonal operator A_{n+1} ↦ −(n−1)/(2π) sin nθ, n = 2..N−1.
pub fn near_disk_linearization(d: &NearDiskDomain) -> Result<LinearizedOperator> {
    if d.coeffs().iter().any(|&v| v != 0.0) {
        return Err(Error::InvalidParameter("near-disk linearization is taken at zero shape".into()));
    }
    let n_max = d.order();
    let rows: Vec<usize> = (2..n_max).collect();
    let cols: Vec<usize> = (3..=n_max).collect();
    let mut a = DMatrix::zeros(rows.len(), cols.len());
    for (i, &n) in rows.iter().enumerate() {
        a[(i, i)] = -((n - 1) as f64) / (2.0 * PI);
    }
    Ok(LinearizedOperator::from_matrix(rows, cols, a))
}

/// Self-induced residual −r (u·n) of a unit-circulation patch on D (free space, no
/// rotation), projected on sin 2..N−1.
pub fn near_disk_self_term(d: &NearDiskDomain, m: usize) -> Result<SineSpectrum> {
    let curve = sample_near_disk_map(d, m)?;
    let lambda = 1.0 / (PI * d.r() * d.r());
    let src = PatchSource::new(curve, lambda)?;
    let u = velocity_on_curve(&src, &src.curve, true, VelocityOptions { image: false });
    let vals: Vec<f64> = u
        .iter()
        .zip(src.curve.normals())
        .map(|(u, n)| -d.r() * (u.conj() * n).re)
        .collect();
    let last = d.order().saturating_sub(1).max(2);
    Ok(project_sines(&vals, 2, last).spectrum)
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitReport {
    pub satellite: usize,
    /// lim_{r₀→0} ∂(position residual)/∂y_j.
    pub coefficient: f64,
    pub r0_sequence: Vec<f64>,
    pub raw: Vec<f64>,
    /// Diagonal of the Richardson table.
    pub extrapolated: Vec<f64>,
    pub converged: bool,
    /// Reference constants and their values.
    pub candidates: Vec<(String, f64)>,
    /// Name of the candidate within 10⁻³ of the coefficient, or "none".
    pub matches: String,
    /// Gap to the closest candidate.
    pub relative_gap: f64,
    /// μ/(4π c_d), the value predicted by the point-vortex expansion.
    pub point_vortex_prediction: f64,
}

const LIMIT_LEVELS: usize = 4;
const LIMIT_DY: f64 = 0.25;
const LIMIT_SETTLE: f64 = 1e-6;
/// Largest relative gap at which a reference constant counts as matched.
const MATCH_GAP: f64 = 1e-3;

/// Extracts the y_j-coefficient of the limiting position residual by Richardson
/// extrapolation in r₀ (halving from the configuration's r₀; satellite radii keep
/// their ratio to r₀²).
pub fn limit_position_operator(c: &MultiConfig, j: usize) -> Result<LimitReport> {
    if !(j == 1 || j == 2) {
        return Err(Error::InvalidParameter(format!("satellite index must be 1 or 2, got {j}")));
    }
    if !c.shapes_are_zero() {
        return Err(Error::InvalidParameter("limit operator requires zero shapes".into()));
    }
    let [r0, r1, r2] = c.radii;
    let ratio = [r1 / (r0 * r0), r2 / (r0 * r0)];
    let m = 128;
    let mut seq = Vec::new();
    let mut raw = Vec::new();
    for k in 0..LIMIT_LEVELS {
        let r = r0 / 2f64.powi(k as i32);
        let radii = [r, ratio[0] * r * r, ratio[1] * r * r];
        let b1 = |dy: f64| -> Result<f64> {
            let mut y = c.y;
            y[j - 1] += dy;
            let cfg = MultiConfig::new(c.q, c.mu, radii, y, &[0.0, 0.0], [vec![], vec![]], c.c_d)?;
            Ok(residual_multi(&cfg, m)?.satellites[j - 1].position)
        };
        let kappa = (b1(LIMIT_DY)? - b1(-LIMIT_DY)?) / (2.0 * LIMIT_DY);
        seq.push(r);
        raw.push(kappa);
    }
    // error expansion in even powers of r₀, step ratio 2
    let mut table = vec![raw.clone()];
    for i in 1..LIMIT_LEVELS {
        let prev = &table[i - 1];
        let f = 4f64.powi(i as i32);
        let next: Vec<f64> = (1..prev.len()).map(|k| (f * prev[k] - prev[k - 1]) / (f - 1.0)).collect();
        table.push(next);
    }
    let extrapolated: Vec<f64> = table.iter().map(|t| *t.last().unwrap()).collect();
    let best = *extrapolated.last().unwrap();
    let prev = extrapolated[extrapolated.len() - 2];
    let converged = best.is_finite() && (best - prev).abs() <= LIMIT_SETTLE * best.abs().max(1e-12);
    if !converged {
        return Err(Error::Extrapolation(format!("Richardson diagonal {extrapolated:?} did not settle")));
    }
    let q2 = 1.0 - c.q * c.q;
    let candidates = vec![
        ("(1-Q^2)/(4 pi^2 mu)".to_string(), q2 / (4.0 * PI * PI * c.mu)),
        ("(1-Q^2)/(4 pi)".to_string(), q2 / (4.0 * PI)),
        ("(1-Q^2)/(4 pi^2)".to_string(), q2 / (4.0 * PI * PI)),
    ];
    let (matches, relative_gap) = candidates
        .iter()
        .map(|(n, v)| (n.clone(), (best - v).abs() / v.abs()))
        .fold((String::new(), f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let matches = if relative_gap <= MATCH_GAP { matches } else { "none".to_string() };
    Ok(LimitReport {
        satellite: j,
        coefficient: best,
        r0_sequence: seq,
        raw,
        extrapolated,
        converged,
        candidates,
        matches,
        relative_gap,
        point_vortex_prediction: c.mu / (4.0 * PI * c.c_d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn omega_formula() {
        let cfg = MultiConfig::new(0.3, 1.0, [0.05, 6.25e-4, 6.25e-4], [0.0, 0.0], &[0.0, 0.0], [vec![], vec![]], 1.0)
            .unwrap();
        assert_eq!(cfg.omega, 0.91 / (4.0 * PI * 0.0025) + 1.0 / (4.0 * PI));
        assert!((cfg.beta1.center().re - (1.0 - 0.0025)).abs() < 1e-15);
        assert!((cfg.beta2.center().re + (1.0 - 0.0025)).abs() < 1e-15);
    }

    #[test]
    fn distance_of_offset_circle() {
        let d = NearDiskDomain::new(c(1.0 - 0.01 - 0.002, 0.0), 0.002, vec![]).unwrap();
        assert!((1.0 - d.max_modulus(64) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn near_disk_operator_entries() {
        let d = NearDiskDomain::new(c(0.0, 0.0), 0.1, vec![0.0; 8]).unwrap();
        let l = near_disk_linearization(&d).unwrap();
        assert!((l.entry(2, 3) + 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((l.entry(2, 3) + 0.159155).abs() < 1e-6);
        assert!((l.entry(5, 6) + 2.0 / PI).abs() < 1e-15);
        assert_eq!(l.apply(&[0.0; 8]), vec![0.0; 8]);
    }

    #[test]
    fn rejects_large_satellites() {
        assert!(MultiConfig::new(0.3, 1.0, [0.05, 0.002, 6e-4], [0.0, 0.0], &[0.0, 0.0], [vec![], vec![]], 1.0).is_err());
    }
}
