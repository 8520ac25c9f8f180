use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type EvalFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A macroscopic initial condition `g: R^2 -> R`.
///
/// Only certified profiles satisfy `|g(x) - g(y)| <= 2 |x - y|_inf` by
/// construction and may be fed to the discretisation.
#[derive(Clone)]
pub struct Profile {
    eval: Arc<EvalFn>,
    lipschitz_certified: bool,
    label: String,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Profile")
            .field("label", &self.label)
            .field("lipschitz_certified", &self.lipschitz_certified)
            .finish()
    }
}

impl Profile {
    /// Wraps a function the caller knows to be 2-spatially-Lipschitz.
    pub fn certified(label: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Profile {
            eval: Arc::new(f),
            lipschitz_certified: true,
            label: label.into(),
        }
    }

    pub fn uncertified(label: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Profile {
            eval: Arc::new(f),
            lipschitz_certified: false,
            label: label.into(),
        }
    }

    /// `g_rho(x) = rho . x`; certified iff `rho` lies in the Newton polygon.
    pub fn affine(rho: [f64; 2]) -> Self {
        let f = move |x: f64, y: f64| rho[0] * x + rho[1] * y;
        let label = format!("affine({}, {})", rho[0], rho[1]);
        if rho[0].abs() + rho[1].abs() <= 2.0 {
            Profile::certified(label, f)
        } else {
            Profile::uncertified(label, f)
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.eval)(x, y)
    }

    pub fn is_certified(&self) -> bool {
        self.lipschitz_certified
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `g + c`, keeping certification.
    pub fn shifted(&self, c: f64) -> Profile {
        let inner = self.eval.clone();
        Profile {
            eval: Arc::new(move |x, y| inner(x, y) + c),
            lipschitz_certified: self.lipschitz_certified,
            label: format!("{} + {c}", self.label),
        }
    }

    pub(crate) fn require_certified(&self) -> Result<()> {
        if self.lipschitz_certified {
            Ok(())
        } else {
            Err(Error::UncertifiedProfile)
        }
    }
}

/// Uniform rectangular grid of sample points `origin + spacing * (p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SampleGrid {
    pub origin: [f64; 2],
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
}

impl SampleGrid {
    /// Nodes `spacing * (p, q)` with `|x|_inf <= half_extent` (rounded outward).
    pub fn centered(half_extent: f64, spacing: f64) -> Self {
        let m = (half_extent / spacing).ceil() as usize;
        let o = -(m as f64) * spacing;
        SampleGrid {
            origin: [o, o],
            spacing,
            nx: 2 * m + 1,
            ny: 2 * m + 1,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.nx == 0 || self.ny == 0 || !(self.spacing > 0.0)
    }

    #[inline]
    pub fn node(&self, p: usize, q: usize) -> [f64; 2] {
        [
            self.origin[0] + self.spacing * p as f64,
            self.origin[1] + self.spacing * q as f64,
        ]
    }
}

struct ProjectedGrid {
    grid: SampleGrid,
    values: Vec<f64>,
}

impl ProjectedGrid {
    #[inline]
    fn at(&self, p: usize, q: usize) -> f64 {
        self.values[q * self.grid.nx + p]
    }

    /// Midpoint of the smallest and largest 2-Lipschitz extensions of the
    /// node values. Both are exact at nodes and globally 2-Lipschitz; their
    /// extremisers lie within l_inf distance 2 (in grid units) of `x`, since
    /// any farther node can be stepped diagonally towards `x` without
    /// increasing `P(y) + 2|x - y|`.
    fn eval(&self, x: f64, y: f64) -> f64 {
        let g = &self.grid;
        let fx = (x - g.origin[0]) / g.spacing;
        let fy = (y - g.origin[1]) / g.spacing;
        let range = |v: f64, n: usize| {
            let c = v.floor().clamp(0.0, (n - 1) as f64) as usize;
            c.saturating_sub(1)..(c + 3).min(n)
        };
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for q in range(fy, g.ny) {
            for p in range(fx, g.nx) {
                let [zx, zy] = g.node(p, q);
                let d = 2.0 * (x - zx).abs().max((y - zy).abs());
                let v = self.at(p, q);
                lo = lo.min(v + d);
                hi = hi.max(v - d);
            }
        }
        0.5 * (lo + hi)
    }
}

/// Projects a raw function onto the 2-spatially-Lipschitz class on `grid`:
/// `P(x) = min_y raw(y) + 2|x - y|_inf` over the grid nodes `y`.
///
/// On the grid the l_inf distance is the 8-neighbour path metric, so the
/// inf-convolution is a min-plus distance transform; raster passes are
/// repeated until nothing changes.
pub fn lipschitz2_project(
    label: impl Into<String>,
    raw: impl Fn(f64, f64) -> f64,
    grid: &SampleGrid,
) -> Result<Profile> {
    if grid.is_empty() {
        return Err(Error::EmptySampleGrid);
    }
    let (nx, ny) = (grid.nx, grid.ny);
    let mut values = Vec::with_capacity(grid.len());
    for q in 0..ny {
        for p in 0..nx {
            let [x, y] = grid.node(p, q);
            values.push(raw(x, y));
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("raw profile is not finite on the sample grid".into()));
    }
    let step = 2.0 * grid.spacing;
    loop {
        let mut changed = false;
        // forward pass: neighbours already visited in raster order
        for q in 0..ny {
            for p in 0..nx {
                let k = q * nx + p;
                let mut best = values[k];
                if p > 0 {
                    best = best.min(values[k - 1] + step);
                }
                if q > 0 {
                    let r = k - nx;
                    best = best.min(values[r] + step);
                    if p > 0 {
                        best = best.min(values[r - 1] + step);
                    }
                    if p + 1 < nx {
                        best = best.min(values[r + 1] + step);
                    }
                }
                if best < values[k] {
                    values[k] = best;
                    changed = true;
                }
            }
        }
        for q in (0..ny).rev() {
            for p in (0..nx).rev() {
                let k = q * nx + p;
                let mut best = values[k];
                if p + 1 < nx {
                    best = best.min(values[k + 1] + step);
                }
                if q + 1 < ny {
                    let r = k + nx;
                    best = best.min(values[r] + step);
                    if p + 1 < nx {
                        best = best.min(values[r + 1] + step);
                    }
                    if p > 0 {
                        best = best.min(values[r - 1] + step);
                    }
                }
                if best < values[k] {
                    values[k] = best;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let projected = ProjectedGrid { grid: *grid, values };
    Ok(Profile::certified(label, move |x, y| projected.eval(x, y)))
}
