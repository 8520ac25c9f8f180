use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::height::{lipschitz2_project, Profile, SampleGrid};

/// Initial profile of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// `rho . x`, with `rho` in the Newton polygon.
    Affine { rho: [f64; 2] },
    /// `slope |x|_inf`, projected when `|slope| > 2`.
    Cone { slope: f64 },
    /// `amplitude exp(-|x|^2 / sigma^2)`, projected.
    Bump { amplitude: f64, sigma: f64 },
    /// `-2 |x|_inf`.
    Pyramid,
    /// `min(2 x1, 1 - 2 x1)`.
    Tent,
    /// Samples `x,y,value` on a uniform grid, projected; relative paths are
    /// resolved against the config file.
    Csv { path: PathBuf },
}

impl ProfileSpec {
    /// Builds the profile. Projected profiles are sampled at `spacing` over
    /// `|x|_inf <= half_extent`.
    pub fn build(&self, half_extent: f64, spacing: f64, base: &Path) -> Result<Profile> {
        match *self {
            ProfileSpec::Affine { rho } => {
                let p = Profile::affine(rho);
                if p.is_certified() {
                    Ok(p)
                } else {
                    Err(Error::SlopeOutsideU(rho[0], rho[1]))
                }
            }
            ProfileSpec::Cone { slope } => {
                if !slope.is_finite() {
                    return Err(Error::InvalidParameter(format!("cone slope {slope}")));
                }
                let f = move |x: f64, y: f64| slope * x.abs().max(y.abs());
                if slope.abs() <= 2.0 {
                    Ok(Profile::certified(format!("cone({slope})"), f))
                } else {
                    lipschitz2_project(format!("cone({slope})"), f, &SampleGrid::centered(half_extent, spacing))
                }
            }
            ProfileSpec::Bump { amplitude, sigma } => {
                if !(sigma > 0.0 && amplitude.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "bump needs sigma > 0 and finite amplitude, got {amplitude}, {sigma}"
                    )));
                }
                let s2 = sigma * sigma;
                lipschitz2_project(
                    format!("bump({amplitude}, {sigma})"),
                    move |x, y| amplitude * (-(x * x + y * y) / s2).exp(),
                    &SampleGrid::centered(half_extent, spacing),
                )
            }
            ProfileSpec::Pyramid => Ok(Profile::certified("pyramid", |x: f64, y: f64| -2.0 * x.abs().max(y.abs()))),
            ProfileSpec::Tent => Ok(Profile::certified("tent", |x: f64, _| (2.0 * x).min(1.0 - 2.0 * x))),
            ProfileSpec::Csv { ref path } => {
                let full = if path.is_absolute() { path.clone() } else { base.join(path) };
                let text = fs::read_to_string(&full).map_err(|e| Error::io(&full, e))?;
                let (grid, values) = parse_samples(&text, &full)?;
                let reach = [
                    -grid.origin[0],
                    -grid.origin[1],
                    grid.origin[0] + grid.spacing * (grid.nx - 1) as f64,
                    grid.origin[1] + grid.spacing * (grid.ny - 1) as f64,
                ];
                if reach.iter().any(|&r| r < half_extent - 1e-9) {
                    return Err(Error::InvalidParameter(format!(
                        "{}: samples must cover |x|_inf <= {half_extent}",
                        full.display()
                    )));
                }
                let label = format!("csv({})", path.display());
                lipschitz2_project(
                    label,
                    move |x, y| {
                        let p = ((x - grid.origin[0]) / grid.spacing).round() as usize;
                        let q = ((y - grid.origin[1]) / grid.spacing).round() as usize;
                        values[q * grid.nx + p]
                    },
                    &grid,
                )
            }
        }
    }
}

/// Reads `x,y,value` rows covering a full uniform grid (any order).
fn parse_samples(text: &str, path: &Path) -> Result<(SampleGrid, Vec<f64>)> {
    let err = |message: String| Error::Parse {
        context: path.display().to_string(),
        message,
    };
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (k == 0 && line.starts_with(|c: char| c.is_alphabetic())) {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(format!("line {}: {e}", k + 1)))?;
        if cols.len() != 3 {
            return Err(err(format!("line {}: expected x,y,value", k + 1)));
        }
        rows.push([cols[0], cols[1], cols[2]]);
    }
    if rows.is_empty() {
        return Err(Error::EmptySampleGrid);
    }
    let axis = |k: usize| {
        let mut v: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let (xs, ys) = (axis(0), axis(1));
    let spacing = if xs.len() > 1 { xs[1] - xs[0] } else { ys.get(1).map_or(1.0, |y| y - ys[0]) };
    let uniform = |v: &[f64]| v.windows(2).all(|w| ((w[1] - w[0]) - spacing).abs() <= 1e-9 * spacing.max(1.0));
    if !uniform(&xs) || !uniform(&ys) || rows.len() != xs.len() * ys.len() {
        return Err(err("samples must fill a uniform grid with equal spacing in x and y".into()));
    }
    let grid = SampleGrid {
        origin: [xs[0], ys[0]],
        spacing,
        nx: xs.len(),
        ny: ys.len(),
    };
    let mut values = vec![0.0; grid.len()];
    for r in &rows {
        let p = ((r[0] - grid.origin[0]) / spacing).round() as usize;
        let q = ((r[1] - grid.origin[1]) / spacing).round() as usize;
        values[q * grid.nx + p] = r[2];
    }
    Ok((grid, values))
}
