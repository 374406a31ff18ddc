//! Contour dynamics in the disk: nodes advect with the full velocity (all patches
//! plus images) under classical RK4, then are redistributed to equal arclength.
//! Used to check that solved equilibria rotate rigidly.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{enclosed_area, SampledCurve};
use crate::kernels::{velocity_on_curve, PatchSource, VelocityOptions};
use crate::spectral::{fourier_coefficients, wavenumber, TrigInterpolant};

/// Collision threshold in units of node spacing.
const COLLISION_SPACINGS: f64 = 3.0;

#[derive(Clone, Debug)]
pub struct PatchState {
    pub patches: Vec<PatchSource>,
    pub time: f64,
}

impl PatchState {
    pub fn new(patches: Vec<PatchSource>) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::InvalidParameter("state needs at least one patch".into()));
        }
        let s = Self { patches, time: 0.0 };
        s.separation()?;
        Ok(s)
    }

    pub fn areas(&self) -> Vec<f64> {
        self.patches.iter().map(|p| enclosed_area(&p.curve)).collect()
    }

    pub fn perimeters(&self) -> Vec<f64> {
        self.patches.iter().map(|p| p.curve.perimeter()).collect()
    }

    /// (distance to the unit circle, smallest inter-curve node distance); fails on collision.
    pub fn separation(&self) -> Result<(f64, f64)> {
        let mut wall = f64::INFINITY;
        for (i, p) in self.patches.iter().enumerate() {
            let c = &p.curve;
            let d = 1.0 - c.points().iter().map(|z| z.norm()).fold(0.0, f64::max);
            if d < COLLISION_SPACINGS * c.max_spacing() {
                return Err(Error::Collision(format!("patch {i} is {d:.3e} from the boundary")));
            }
            wall = wall.min(d);
        }
        let mut gap = f64::INFINITY;
        for i in 0..self.patches.len() {
            for j in (i + 1)..self.patches.len() {
                let (a, b) = (&self.patches[i].curve, &self.patches[j].curve);
                let d = a
                    .points()
                    .par_iter()
                    .map(|&z| b.points().iter().map(|&w| (z - w).norm()).fold(f64::INFINITY, f64::min))
                    .reduce(|| f64::INFINITY, f64::min);
                if d < COLLISION_SPACINGS * a.max_spacing().max(b.max_spacing()) {
                    return Err(Error::Collision(format!("patches {i} and {j} are {d:.3e} apart")));
                }
                gap = gap.min(d);
            }
        }
        Ok((wall, gap))
    }
}

/// Full velocity at every node of every curve.
pub fn boundary_velocity(state: &PatchState) -> Result<Vec<Vec<Complex64>>> {
    boundary_velocity_with(state, VelocityOptions::default())
}

pub fn boundary_velocity_with(state: &PatchState, opts: VelocityOptions) -> Result<Vec<Vec<Complex64>>> {
    state.separation()?;
    Ok(velocities(&state.patches, opts))
}

fn velocities(patches: &[PatchSource], opts: VelocityOptions) -> Vec<Vec<Complex64>> {
    patches
        .iter()
        .enumerate()
        .map(|(t, target)| {
            let mut u = vec![Complex64::new(0.0, 0.0); target.curve.m()];
            for (s, src) in patches.iter().enumerate() {
                if src.strength == 0.0 {
                    continue;
                }
                for (acc, v) in u.iter_mut().zip(velocity_on_curve(src, &target.curve, s == t, opts)) {
                    *acc += v;
                }
            }
            u
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Expected rotation rate, used for the step-size check; defaults to max λ/4.
    pub omega: Option<f64>,
    pub redistribute: bool,
    pub image: bool,
}

impl EvolveOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, omega: None, redistribute: true, image: true }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub time: f64,
    /// Largest relative area change over the patches.
    pub area_drift: f64,
    pub perimeters: Vec<f64>,
    pub min_boundary_distance: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EvolutionLog {
    pub dt: f64,
    pub steps: Vec<StepRecord>,
    pub cfl_warning: bool,
}

impl EvolutionLog {
    pub fn max_area_drift(&self) -> f64 {
        self.steps.iter().map(|s| s.area_drift).fold(0.0, f64::max)
    }
}

/// Classical RK4 from `state.time` to `state.time + t_end`; the step is shrunk so
/// that it divides the horizon.
pub fn evolve(state: &PatchState, opts: &EvolveOptions) -> Result<(PatchState, EvolutionLog)> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) || !(opts.t_end >= 0.0 && opts.t_end.is_finite()) {
        return Err(Error::InvalidParameter("dt must be positive and T non-negative".into()));
    }
    let n = (opts.t_end / opts.dt).ceil().max(if opts.t_end > 0.0 { 1.0 } else { 0.0 }) as usize;
    let dt = if n > 0 { opts.t_end / n as f64 } else { opts.dt };
    let rate = opts
        .omega
        .unwrap_or_else(|| state.patches.iter().map(|p| p.strength.abs()).fold(0.0, f64::max) / 4.0);
    let mut log = EvolutionLog { dt, ..Default::default() };
    if dt * rate > 0.05 {
        warn!("time step {dt:.3e} exceeds 0.05/Omega = {:.3e}", 0.05 / rate);
        log.cfl_warning = true;
    }
    let vel = VelocityOptions { image: opts.image };
    let area0 = state.areas();
    let mut cur = state.clone();
    cur.separation()?;
    for _ in 0..n {
        cur = rk4_step(&cur, dt, vel)?;
        if opts.redistribute {
            for p in &mut cur.patches {
                p.curve = redistribute(&p.curve)?;
            }
        }
        let (wall, _) = cur.separation()?;
        let area_drift = cur
            .areas()
            .iter()
            .zip(&area0)
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        log.steps.push(StepRecord { time: cur.time, area_drift, perimeters: cur.perimeters(), min_boundary_distance: wall });
    }
    Ok((cur, log))
}

fn shifted(base: &PatchState, k: &[Vec<Complex64>], h: f64) -> Result<Vec<PatchSource>> {
    base.patches
        .iter()
        .zip(k)
        .map(|(p, k)| {
            let local = p.curve.local().iter().zip(k).map(|(&z, &v)| z + v * h).collect();
            let curve = SampledCurve::from_nodes_unchecked(p.curve.origin(), local)?;
            PatchSource::new(curve, p.strength)
        })
        .collect()
}

fn rk4_step(s: &PatchState, dt: f64, opts: VelocityOptions) -> Result<PatchState> {
    let k1 = velocities(&s.patches, opts);
    let k2 = velocities(&shifted(s, &k1, 0.5 * dt)?, opts);
    let k3 = velocities(&shifted(s, &k2, 0.5 * dt)?, opts);
    let k4 = velocities(&shifted(s, &k3, dt)?, opts);
    let k: Vec<Vec<Complex64>> = (0..s.patches.len())
        .map(|i| {
            (0..k1[i].len())
                .map(|j| (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]) / 6.0)
                .collect()
        })
        .collect();
    Ok(PatchState { patches: shifted(s, &k, dt)?, time: s.time + dt })
}

/// Resamples the curve at equal arclength, keeping node 0 fixed.
pub fn redistribute(c: &SampledCurve) -> Result<SampledCurve> {
    let m = c.m();
    let speed: Vec<Complex64> = c.dpoints().iter().map(|d| Complex64::new(d.norm(), 0.0)).collect();
    let sc = fourier_coefficients(&speed);
    let mean = sc[0].re;
    let modes: Vec<(f64, Complex64)> = (1..m)
        .filter(|&j| !(m % 2 == 0 && j == m / 2))
        .map(|j| (wavenumber(j, m) as f64, sc[j]))
        .collect();
    // s(θ) = mean·θ + Σ ĉ_k (e^{ikθ} − 1)/(ik), and s′ = speed
    let arc = |t: f64| -> (f64, f64) {
        let mut s = mean * t;
        let mut ds = mean;
        for &(k, ck) in &modes {
            let e = Complex64::from_polar(1.0, k * t);
            s += (ck * (e - 1.0) / Complex64::new(0.0, k)).re;
            ds += (ck * e).re;
        }
        (s, ds)
    };
    let total = 2.0 * PI * mean;
    let h = 2.0 * PI / m as f64;
    let thetas: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|j| {
            let target = total * j as f64 / m as f64;
            let mut t = h * j as f64;
            for _ in 0..30 {
                let (s, ds) = arc(t);
                let step = ((s - target) / ds).clamp(-h, h);
                t -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            t
        })
        .collect();
    let z = TrigInterpolant::new(c.local());
    let local: Vec<Complex64> = thetas.par_iter().map(|&t| z.eval(t)).collect();
    SampledCurve::from_nodes_unchecked(c.origin(), local)
}

/// Largest distance from the nodes `pts` to the continuous curve through `c`'s nodes.
fn directed_distance(pts: &[Complex64], c: &SampledCurve) -> f64 {
    let m = c.m();
    let h = 2.0 * PI / m as f64;
    let z = TrigInterpolant::new(c.local());
    let origin = c.origin();
    pts.par_iter()
        .map(|&p| {
            let p = p - origin;
            let (k, d0) = c
                .local()
                .iter()
                .enumerate()
                .map(|(k, &w)| (k, (w - p).norm()))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            let mut t = h * k as f64;
            let mut best = d0;
            for _ in 0..10 {
                let (f, f1, f2) = z.eval_with_derivatives(t);
                let r = f - p;
                let g = (r.conj() * f1).re;
                let dg = f1.norm_sqr() + (r.conj() * f2).re;
                if dg <= 0.0 {
                    break;
                }
                let step = (g / dg).clamp(-h, h);
                t -= step;
                best = best.min((z.eval(t) - p).norm());
                if step.abs() < 1e-14 {
                    break;
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Symmetric Hausdorff distance between two closed curves.
pub fn hausdorff_distance(a: &SampledCurve, b: &SampledCurve) -> f64 {
    directed_distance(a.points(), b).max(directed_distance(b.points(), a))
}

/// Hausdorff distance between `evolved` and `initial` rotated by Ωt, over the initial diameter.
pub fn rigid_rotation_error(initial: &SampledCurve, evolved: &SampledCurve, omega: f64, t: f64) -> Result<f64> {
    if initial.m() != evolved.m() {
        return Err(Error::InvalidParameter(format!(
            "node counts differ: {} vs {}",
            initial.m(),
            evolved.m()
        )));
    }
    let target = initial.rotated(omega * t);
    Ok(hausdorff_distance(&target, evolved) / initial.diameter())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(c: Complex64, r: f64, m: usize) -> SampledCurve {
        let local = crate::spectral::grid(m).iter().map(|&t| Complex64::from_polar(r, t)).collect();
        SampledCurve::from_nodes(c, local).unwrap()
    }

    #[test]
    fn redistribution_equalizes_arclength() {
        let m = 256;
        let local: Vec<Complex64> = crate::spectral::grid(m)
            .iter()
            .map(|&t| Complex64::new(0.13 * t.cos(), 0.07 * t.sin()) + Complex64::new(0.005 * (3.0 * t).cos(), 0.0))
            .collect();
        let c = SampledCurve::from_nodes(Complex64::new(0.0, 0.0), local).unwrap();
        let r = redistribute(&c).unwrap();
        let speeds: Vec<f64> = r.dpoints().iter().map(|d| d.norm()).collect();
        let mean = speeds.iter().sum::<f64>() / m as f64;
        let dev = speeds.iter().map(|s| (s - mean).abs() / mean).fold(0.0, f64::max);
        assert!(dev < 1e-9);
        assert!(hausdorff_distance(&c, &r) < 1e-12);
        assert!((enclosed_area(&c) - enclosed_area(&r)).abs() < 1e-13);
    }

    #[test]
    fn rotation_error_zero_at_start() {
        let c = circle(Complex64::new(0.1, 0.0), 0.05, 64);
        assert!(rigid_rotation_error(&c, &c, 3.0, 0.0).unwrap() < 1e-14);
    }

    #[test]
    fn collision_detected() {
        let a = PatchSource::new(circle(Complex64::new(0.0, 0.0), 0.1, 64), 1.0).unwrap();
        let b = PatchSource::new(circle(Complex64::new(0.2005, 0.0), 0.1, 64), 1.0).unwrap();
        assert!(matches!(PatchState::new(vec![a, b]), Err(Error::Collision(_))));
        let w = PatchSource::new(circle(Complex64::new(0.899, 0.0), 0.1, 64), 1.0).unwrap();
        assert!(matches!(PatchState::new(vec![w]), Err(Error::Collision(_))));
    }
}
