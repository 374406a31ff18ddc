//! Boundary CSV (`theta,x,y,nx,ny`) and coefficient JSON.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SampledCurve;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    theta: f64,
    x: f64,
    y: f64,
    nx: f64,
    ny: f64,
}

pub fn write_boundary_csv(path: &Path, c: &SampledCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["theta", "x", "y", "nx", "ny"])?;
    for ((t, z), n) in c.thetas().iter().zip(c.points()).zip(c.normals()) {
        w.write_record([t, &z.re, &z.im, &n.re, &n.im].map(|v| format!("{v:.17e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads nodes from a boundary CSV. Rows must be ordered by θ on a uniform grid;
/// derivatives are recomputed spectrally, with the node centroid as origin.
pub fn read_boundary_csv(path: &Path) -> Result<SampledCurve> {
    let mut r = csv::Reader::from_path(path)?;
    let pts: Vec<Complex64> = r
        .deserialize::<Row>()
        .map(|row| row.map(|row| Complex64::new(row.x, row.y)))
        .collect::<std::result::Result<_, _>>()?;
    if pts.is_empty() {
        return Err(Error::InvalidParameter(format!("{} has no rows", path.display())));
    }
    let origin = pts.iter().sum::<Complex64>() / pts.len() as f64;
    SampledCurve::from_nodes(origin, pts.iter().map(|&z| z - origin).collect())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value)?;
    std::fs::write(path, s + "\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&s)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        let local: Vec<Complex64> = crate::spectral::grid(32)
            .iter()
            .map(|&t| Complex64::new(0.13 * t.cos(), 0.07 * t.sin()))
            .collect();
        let c = SampledCurve::from_nodes(Complex64::new(0.2, -0.1), local).unwrap();
        write_boundary_csv(&p, &c).unwrap();
        let back = read_boundary_csv(&p).unwrap();
        for (a, b) in c.points().iter().zip(back.points()) {
            assert!((a - b).norm() < 1e-15);
        }
    }
}
