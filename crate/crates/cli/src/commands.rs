use std::path::Path;

use rotpatch::io::{read_boundary_csv, write_boundary_csv, write_json};
use rotpatch::multi::{multi_omega, MultiConfig};
use rotpatch::{
    boundary_distance, continuation, enclosed_area, eval_near_disk_map, eval_outer_map, evolve as run_evolve,
    invertibility_margin, limit_position_operator, newton_solve, residual_multi, residual_single_with,
    rigid_rotation_error, single_omega, spectrum_comparison, DistanceCoefficient, Error, EvolveOptions,
    MultiProblem, NewtonOptions, PatchSource, PatchState, ResidualOptions, SinglePatchProblem, SolveReport,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{usage, EvolveArgs, Failure, Outcome, SolveMultiArgs, SolveSingleArgs, SpectrumArgs};

fn prepare(out: &Option<std::path::PathBuf>) -> Result<(), Failure> {
    if let Some(d) = out {
        std::fs::create_dir_all(d)?;
    }
    Ok(())
}

fn save(out: &Option<std::path::PathBuf>, name: &str, v: &Value) -> Result<(), Failure> {
    if let Some(d) = out {
        write_json(&d.join(name), v)?;
    }
    Ok(())
}

fn invalid(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn report_json(r: &SolveReport) -> Value {
    json!({
        "converged": r.converged,
        "iterations": r.iterations,
        "residual_history": r.residual_history,
        "final_residual": r.final_residual,
        "step_norms": r.step_norms,
        "condition_estimate": r.condition_estimate,
    })
}

pub fn solve_single(a: &SolveSingleArgs) -> Result<Outcome, Failure> {
    let schedule: Vec<f64> = if a.schedule.is_empty() {
        match a.eps {
            Some(e) => vec![e],
            None => return usage("either --eps or --schedule is required"),
        }
    } else {
        a.schedule.clone()
    };
    if !(a.tol > 0.0) {
        return usage("--tol must be positive");
    }
    let make = |eps: f64| {
        SinglePatchProblem::new(a.q, eps, a.n, a.m).map(|mut p| {
            p.image = !a.no_image;
            p
        })
    };
    for &e in &schedule {
        make(e).map_err(invalid)?;
    }
    prepare(&a.out)?;
    let opts = NewtonOptions { tol: a.tol, max_iter: a.max_iter, ..Default::default() };
    let x0 = vec![0.0; a.n + 1];
    let run = continuation(
        &schedule,
        x0,
        make,
        |e, x| make(e).map(|p| p.perturbation_norm(x)).unwrap_or(f64::NAN),
        &opts,
    )?;
    let last = run.steps.last().expect("schedule is non-empty");
    let eps = last.param;
    let p = make(eps)?;
    let b = p.boundary(&last.solution)?;
    let curve = eval_outer_map(&b, a.m)?;
    let res = residual_single_with(&b, a.m, ResidualOptions { image: !a.no_image })?;
    let mut report = json!({
        "schema": 1,
        "command": "solve-single",
        "params": { "Q": a.q, "eps": eps, "N": a.n, "m": a.m, "tol": a.tol, "image": !a.no_image },
        "solve": report_json(&last.report),
        "omega": single_omega(a.q, eps),
        "scale": b.scale(),
        "coefficients": { "shift": b.shift(), "aspect": b.aspect(), "b": b.coeffs(), "first_index": 2 },
        "perturbation_norm": last.measure,
        "area": enclosed_area(&curve),
        "target_area": b.target_area(),
        "residual": {
            "sine_max_abs": res.spectrum.max_abs(),
            "nodal_max": res.nodal_max,
            "cos_leak": res.cos_leak,
            "alias": res.alias,
        },
    });
    if schedule.len() > 1 {
        let steps: Vec<Value> = run
            .steps
            .iter()
            .map(|s| {
                json!({
                    "eps": s.param,
                    "iterations": s.report.iterations,
                    "final_residual": s.report.final_residual,
                    "perturbation_norm": s.measure,
                    "condition_estimate": s.report.condition_estimate,
                })
            })
            .collect();
        report["continuation"] = json!({ "steps": steps, "slope": run.slope });
    }
    if let Some(d) = &a.out {
        write_boundary_csv(&d.join("boundary.csv"), &curve)?;
    }
    save(&a.out, "report.json", &report)?;
    Ok(Outcome { report, ok: true })
}

fn default_n() -> usize {
    8
}
fn default_m() -> usize {
    128
}
fn default_tol() -> f64 {
    5e-10
}
fn default_iter() -> usize {
    20
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiInput {
    #[serde(rename = "Q")]
    pub q: f64,
    pub mu: f64,
    pub r0: f64,
    /// Defaults to r₀²/4.
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    #[serde(rename = "N", default = "default_n")]
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub distance: DistanceCoefficient,
    /// Also extract the limiting position coefficient at zero shape.
    #[serde(default)]
    pub limit: bool,
}

pub fn solve_multi(a: &SolveMultiArgs) -> Result<Outcome, Failure> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", a.config.display())))?;
    let input: MultiInput =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("invalid config: {e}")))?;
    if !(input.mu > 0.0) {
        return usage(format!("mu must be positive, got {}", input.mu));
    }
    if !(input.tol > 0.0) {
        return usage("tol must be positive");
    }
    let r0 = input.r0;
    let radii = [r0, input.r1.unwrap_or(0.25 * r0 * r0), input.r2.unwrap_or(0.25 * r0 * r0)];
    let c_d = input.distance.value(input.q, input.mu);
    let p = MultiProblem::new(input.q, input.mu, radii, input.n, input.m, c_d).map_err(invalid)?;
    let x0 = p.trivial_guess();
    p.config(&x0).map_err(invalid)?;
    prepare(&a.out)?;

    let opts = NewtonOptions { tol: input.tol, max_iter: input.max_iter, ..Default::default() };
    let (x, rep) = newton_solve(&p, &x0, &opts)?;
    let c = p.config(&x)?;
    let res = residual_multi(&c, input.m)?;
    let d = boundary_distance(&c);
    let sats: Vec<Value> = c
        .satellites()
        .iter()
        .map(|s| json!({ "center": [s.center().re, s.center().im], "r": s.r(), "a1": s.a1(), "coeffs": s.coeffs(), "first_index": 3 }))
        .collect();
    let mut report = json!({
        "schema": 1,
        "command": "solve-multi",
        "params": input,
        "solve": report_json(&rep),
        "omega": c.omega,
        "omega_formula": multi_omega(input.q, input.mu, r0),
        "distance_coefficient": c_d,
        "y": c.y,
        "boundary_distance": d,
        "distance_over_r0_squared": [d[0] / (r0 * r0), d[1] / (r0 * r0)],
        "central": {
            "shift": c.beta0.shift(),
            "aspect": c.beta0.aspect(),
            "b": c.beta0.coeffs(),
            "first_index": 2,
            "scale": c.beta0.scale(),
        },
        "satellites": sats,
        "residual": {
            "weighted_norm": res.norm(),
            "central_max_abs": res.central.max_abs(),
            "positions": [res.satellites[0].position, res.satellites[1].position],
            "shape_max_abs": [res.satellites[0].shape.max_abs(), res.satellites[1].shape.max_abs()],
            "cos_leak": res.cos_leak,
            "nodal_max": res.nodal_max,
        },
    });
    if input.limit {
        let zero = MultiConfig::new(input.q, input.mu, radii, [0.0, 0.0], &[0.0, 0.0], [vec![], vec![]], c_d)?;
        let l1 = limit_position_operator(&zero, 1)?;
        let l2 = limit_position_operator(&zero, 2)?;
        let rel = (l1.coefficient - l2.coefficient).abs() / l1.coefficient.abs();
        report["limit"] = json!({ "satellite_1": l1, "satellite_2": l2, "relative_difference": rel });
    }
    if let Some(dir) = &a.out {
        write_boundary_csv(&dir.join("boundary0.csv"), &eval_outer_map(&c.beta0, input.m)?)?;
        write_boundary_csv(&dir.join("boundary1.csv"), &eval_near_disk_map(&c.beta1, input.m)?)?;
        write_boundary_csv(&dir.join("boundary2.csv"), &eval_near_disk_map(&c.beta2, input.m)?)?;
    }
    save(&a.out, "report.json", &report)?;
    Ok(Outcome { report, ok: true })
}

pub fn spectrum(a: &SpectrumArgs) -> Result<Outcome, Failure> {
    if a.n < 3 {
        return usage("--N must be at least 3");
    }
    let (margin, argmin) = invertibility_margin(a.q, a.n).map_err(invalid)?;
    let s = spectrum_comparison(a.q, a.n, a.eps, a.m).map_err(|e| match e {
        Error::InvalidParameter(_) => invalid(e),
        e => Failure::Numerical(e),
    })?;
    let passed = s.max_abs_diff < a.tol && s.off_band_max < a.tol;
    let multipliers: Vec<f64> = (1..=a.n + 1).map(|n| rotpatch::functional::multiplier(a.q, n)).collect();
    let mut report = json!({
        "schema": 1,
        "command": "spectrum",
        "params": { "Q": a.q, "N": a.n, "eps": a.eps, "m": a.m, "tol": a.tol },
        "max_abs_diff": s.max_abs_diff,
        "off_band_max": s.off_band_max,
        "passed": passed,
        "multipliers": multipliers,
        "shift_entry": rotpatch::functional::shift_entry(a.q),
        "invertibility_margin": { "value": margin, "n": argmin },
    });
    if a.full {
        report["numeric"] = json!(s.numeric);
        report["analytic"] = json!(s.analytic);
    }
    if let Some(d) = &a.out {
        if let Some(parent) = d.parent() {
            std::fs::create_dir_all(parent)?;
        }
        write_json(d, &report)?;
    }
    Ok(Outcome { report, ok: passed })
}

fn frame_name(k: usize, i: usize) -> String {
    format!("frame_{k:04}_patch{i}.csv")
}

pub fn evolve(a: &EvolveArgs) -> Result<Outcome, Failure> {
    if a.input.len() != a.strength.len() {
        return usage(format!("{} boundaries but {} strengths", a.input.len(), a.strength.len()));
    }
    if !(a.dt > 0.0) || !(a.t >= 0.0) || a.frames == 0 {
        return usage("need dt > 0, T >= 0 and at least one frame");
    }
    let mut patches = Vec::new();
    for (p, &s) in a.input.iter().zip(&a.strength) {
        let c = read_boundary_csv(Path::new(p)).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
        patches.push(PatchSource::new(c, s).map_err(invalid)?);
    }
    let initial = PatchState::new(patches).map_err(invalid)?;
    prepare(&a.out)?;
    let write_frame = |k: usize, s: &PatchState| -> Result<Vec<String>, Failure> {
        let mut names = Vec::new();
        if let Some(d) = &a.out {
            for (i, p) in s.patches.iter().enumerate() {
                let name = frame_name(k, i);
                write_boundary_csv(&d.join(&name), &p.curve)?;
                names.push(name);
            }
        }
        Ok(names)
    };
    let mut frames = write_frame(0, &initial)?;
    let chunk = a.t / a.frames as f64;
    let mut opts = EvolveOptions::new(a.dt.min(chunk.max(f64::MIN_POSITIVE)), chunk);
    opts.omega = a.omega;
    opts.redistribute = !a.no_redistribute;
    opts.image = !a.no_image;
    let mut state = initial.clone();
    let mut steps = 0;
    let mut drift: f64 = 0.0;
    let mut cfl = false;
    let mut dt_used = a.dt;
    let mut wall = f64::INFINITY;
    for k in 1..=a.frames {
        let (next, log) = run_evolve(&state, &opts)?;
        steps += log.steps.len();
        cfl |= log.cfl_warning;
        dt_used = log.dt;
        for r in &log.steps {
            drift = drift.max(r.area_drift);
            wall = wall.min(r.min_boundary_distance);
        }
        state = next;
        frames.extend(write_frame(k, &state)?);
    }
    // area drift is measured per chunk; report it against the initial state as well
    let a0 = initial.areas();
    let a1 = state.areas();
    let total_drift = a0.iter().zip(&a1).map(|(x, y)| ((y - x) / x).abs()).fold(0.0, f64::max);
    let rre: Option<Vec<f64>> = match a.omega {
        Some(om) => Some(
            initial
                .patches
                .iter()
                .zip(&state.patches)
                .map(|(p, q)| rigid_rotation_error(&p.curve, &q.curve, om, state.time))
                .collect::<Result<_, _>>()?,
        ),
        None => None,
    };
    let report = json!({
        "schema": 1,
        "command": "evolve",
        "params": {
            "inputs": a.input.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "strength": a.strength, "omega": a.omega, "T": a.t, "dt": a.dt, "frames": a.frames,
            "redistribute": !a.no_redistribute, "image": !a.no_image,
        },
        "steps": steps,
        "dt_used": dt_used,
        "final_time": state.time,
        "cfl_warning": cfl,
        "area_initial": a0,
        "area_final": a1,
        "max_area_drift": drift.max(total_drift),
        "min_boundary_distance": wall,
        "rigid_rotation_error": rre,
        "frames": frames,
    });
    save(&a.out, "summary.json", &report)?;
    Ok(Outcome { report, ok: true })
}
