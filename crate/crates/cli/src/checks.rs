//! Invariant suite behind `rotpatch check`. Random samples come from a seeded
//! ChaCha stream, so reports are reproducible.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotpatch::multi::MultiConfig;
use rotpatch::{
    circulation, enclosed_area, eval_near_disk_map, green_disk, invertibility_margin, kirchhoff_check,
    limit_position_operator, margin_term, near_disk_self_term, spectrum_comparison, tangency_check,
    DistanceCoefficient, NearDiskDomain, PatchSource, Result,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{usage, CheckArgs, Failure, Outcome};

#[derive(Debug, Serialize)]
struct CheckResult {
    name: &'static str,
    passed: bool,
    value: f64,
    tolerance: f64,
    detail: Value,
}

impl CheckResult {
    fn below(name: &'static str, value: f64, tolerance: f64, detail: Value) -> Self {
        Self { name, passed: value < tolerance, value, tolerance, detail }
    }
}

type CheckFn = fn(&mut ChaCha8Rng) -> Result<CheckResult>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("green_symmetry", green_symmetry),
    ("green_boundary", green_boundary),
    ("tangency", tangency),
    ("circulation", total_circulation),
    ("kirchhoff", kirchhoff),
    ("margin", margin),
    ("spectrum", spectrum),
    ("near_disk", near_disk),
    ("limit", limit),
];

fn random_point(rng: &mut ChaCha8Rng, max_r: f64) -> Complex64 {
    let r = max_r * rng.gen::<f64>().sqrt();
    Complex64::from_polar(r, 2.0 * PI * rng.gen::<f64>())
}

fn green_symmetry(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = random_point(rng, 0.99);
        let y = random_point(rng, 0.99);
        worst = worst.max((green_disk(x, y)? - green_disk(y, x)?).abs());
    }
    Ok(CheckResult::below("green_symmetry", worst, 1e-12, json!({ "pairs": 1000 })))
}

/// At |x| = 1 − δ the Green's function must match the Poisson-kernel slope
/// δ (1 − |y|²)/(2π |x − y|²).
fn green_boundary(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let delta = 1e-8;
    let mut worst: f64 = 0.0;
    let mut largest: f64 = 0.0;
    for _ in 0..1000 {
        let x = Complex64::from_polar(1.0 - delta, 2.0 * PI * rng.gen::<f64>());
        let y = random_point(rng, 0.9);
        let g = green_disk(x, y)?;
        let slope = (1.0 - y.norm_sqr()) / (2.0 * PI * (x - y).norm_sqr());
        worst = worst.max((g - delta * slope).abs());
        largest = largest.max(g.abs());
    }
    Ok(CheckResult::below("green_boundary", worst, 1e-12, json!({ "delta": delta, "max_abs_value": largest })))
}

fn disk_patch(center: Complex64, r: f64, coeffs: Vec<f64>, m: usize) -> Result<PatchSource> {
    PatchSource::new(eval_near_disk_map(&NearDiskDomain::new(center, r, coeffs)?, m)?, 1.0)
}

fn tangency(_: &mut ChaCha8Rng) -> Result<CheckResult> {
    let cases = [
        (Complex64::new(0.3, 0.1), 0.2, vec![]),
        (Complex64::new(-0.2, -0.4), 0.15, vec![0.05, -0.02]),
        (Complex64::new(0.0, 0.6), 0.1, vec![]),
    ];
    let mut worst: f64 = 0.0;
    for (c, r, a) in cases {
        worst = worst.max(tangency_check(&disk_patch(c, r, a, 256)?, 256)?);
    }
    Ok(CheckResult::below("tangency", worst, 1e-8, json!({ "m": 256, "patches": 3 })))
}

fn total_circulation(_: &mut ChaCha8Rng) -> Result<CheckResult> {
    let src = disk_patch(Complex64::new(0.25, -0.1), 0.2, vec![0.04], 256)?;
    let expected = src.strength * enclosed_area(&src.curve);
    let got = circulation(&src, 0.95, 1024)?;
    let rel = (got - expected).abs() / expected;
    Ok(CheckResult::below("circulation", rel, 1e-8, json!({ "expected": expected, "measured": got })))
}

fn kirchhoff(_: &mut ChaCha8Rng) -> Result<CheckResult> {
    let a = kirchhoff_check(0.1, 256)?;
    let b = kirchhoff_check(0.3, 256)?;
    Ok(CheckResult::below("kirchhoff", a.max(b), 1e-10, json!({ "Q=0.1": a, "Q=0.3": b })))
}

fn margin(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut smallest = f64::INFINITY;
    for _ in 0..100 {
        let q = 0.5 * rng.gen::<f64>();
        if q == 0.0 {
            continue;
        }
        smallest = smallest.min(invertibility_margin(q, 64)?.0);
    }
    let at_half = margin_term(0.5, 3);
    let passed = smallest > 0.0 && at_half.abs() < 1e-14;
    Ok(CheckResult {
        name: "margin",
        passed,
        value: smallest,
        tolerance: 0.0,
        detail: json!({ "samples": 100, "value_at_half_n3": at_half }),
    })
}

fn spectrum(_: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    let mut detail = serde_json::Map::new();
    for q in [0.1, 0.3, 0.45] {
        let s = spectrum_comparison(q, 16, 1e-3, 256)?;
        worst = worst.max(s.max_abs_diff).max(s.off_band_max);
        detail.insert(format!("Q={q}"), json!({ "max_abs_diff": s.max_abs_diff, "off_band_max": s.off_band_max }));
    }
    Ok(CheckResult::below("spectrum", worst, 1e-5, Value::Object(detail)))
}

fn near_disk(_: &mut ChaCha8Rng) -> Result<CheckResult> {
    let h = 1e-6;
    let center = Complex64::new(0.2, 0.1);
    let mut worst: f64 = 0.0;
    for n in 2..=10usize {
        let term = |s: f64| -> Result<f64> {
            let mut a = vec![0.0; 9];
            a[n - 2] = s;
            Ok(near_disk_self_term(&NearDiskDomain::new(center, 0.05, a)?, 256)?.mode(n))
        };
        let fd = (term(h)? - term(-h)?) / (2.0 * h);
        worst = worst.max((fd + (n - 1) as f64 / (2.0 * PI)).abs());
    }
    Ok(CheckResult::below("near_disk", worst, 1e-6, json!({ "modes": "2..=10" })))
}

fn limit(_: &mut ChaCha8Rng) -> Result<CheckResult> {
    let (q, mu, r0) = (0.3, 1.0, 0.08);
    let c_d = DistanceCoefficient::KirchhoffRouth.value(q, mu);
    let radii = [r0, 0.25 * r0 * r0, 0.25 * r0 * r0];
    let c = MultiConfig::new(q, mu, radii, [0.0, 0.0], &[0.0, 0.0], [vec![], vec![]], c_d)?;
    let l1 = limit_position_operator(&c, 1)?;
    let l2 = limit_position_operator(&c, 2)?;
    let rel = (l1.coefficient - l2.coefficient).abs() / l1.coefficient.abs();
    Ok(CheckResult::below(
        "limit",
        rel,
        1e-6,
        json!({ "coefficient": l1.coefficient, "matches": l1.matches, "relative_gap": l1.relative_gap }),
    ))
}

pub fn run(a: &CheckArgs) -> std::result::Result<Outcome, Failure> {
    if a.list {
        let names: Vec<&str> = CHECKS.iter().map(|c| c.0).collect();
        return Ok(Outcome { report: json!({ "schema": 1, "checks": names }), ok: true });
    }
    for name in &a.only {
        if !CHECKS.iter().any(|c| c.0 == name) {
            return usage(format!("unknown check {name:?}"));
        }
    }
    let mut results = Vec::new();
    for (idx, &(name, f)) in CHECKS.iter().enumerate() {
        if !a.only.is_empty() && !a.only.iter().any(|n| n == name) {
            continue;
        }
        // each check gets its own stream so selections do not shift the samples
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        rng.set_stream(idx as u64);
        let r = match f(&mut rng) {
            Ok(r) => r,
            Err(e) => CheckResult {
                name,
                passed: false,
                value: f64::NAN,
                tolerance: f64::NAN,
                detail: json!({ "error": e.to_string() }),
            },
        };
        log::info!("{name}: {} ({:.3e})", if r.passed { "pass" } else { "FAIL" }, r.value);
        results.push(r);
    }
    let ok = results.iter().all(|r| r.passed);
    let report = json!({ "schema": 1, "command": "check", "seed": a.seed, "passed": ok, "checks": results });
    if let Some(p) = &a.out {
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        rotpatch::io::write_json(p, &report).map_err(Failure::Numerical)?;
    }
    Ok(Outcome { report, ok })
}
