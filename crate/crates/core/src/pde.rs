//! Monotone Lax-Friedrichs solver for `u_t + H(u_x) = 0` on a uniform grid.
//!
//! The grid is finite and no boundary condition is imposed: every step
//! invalidates the outermost layer of nodes, and only the remaining valid
//! region is ever read or reported. Values there equal those of the same
//! scheme on the infinite grid.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::hamiltonian_unchecked;
use crate::error::{Error, Result};
use crate::height::{Profile, SampleGrid};
use crate::lattice::{Face, Rect};
use crate::scaling::ContinuousField;

/// Radial l1 projection onto `(1 - eps) U`.
#[inline]
pub fn clamp_to_u(p: [f64; 2], eps: f64) -> [f64; 2] {
    let bound = 2.0 * (1.0 - eps);
    let norm = p[0].abs() + p[1].abs();
    if norm <= bound {
        p
    } else {
        let s = bound / norm;
        [p[0] * s, p[1] * s]
    }
}

/// Lax-Friedrichs flux: `H` at the clamped centred gradient minus the
/// dissipation `(alpha_x/2)(p1p - p1m) + (alpha_y/2)(p2p - p2m)`.
#[allow(clippy::too_many_arguments)]
#[inline]
pub fn numerical_hamiltonian(p1m: f64, p1p: f64, p2m: f64, p2p: f64, alpha_x: f64, alpha_y: f64, a: f64, eps: f64) -> f64 {
    let [c1, c2] = clamp_to_u([0.5 * (p1m + p1p), 0.5 * (p2m + p2p)], eps);
    hamiltonian_unchecked(c1, c2, a) - 0.5 * alpha_x * (p1p - p1m) - 0.5 * alpha_y * (p2p - p2m)
}

const SAFETY: f64 = 1.1;
const SAMPLES: usize = 201;
const FD_STEP: f64 = 1e-6;

fn measure_dissipation(a: f64, eps: f64) -> (f64, f64) {
    let bound = 2.0 * (1.0 - eps);
    let h = FD_STEP;
    let (mut mx, mut my) = (0.0f64, 0.0f64);
    for q in 0..SAMPLES {
        for p in 0..SAMPLES {
            let r1 = -bound + 2.0 * bound * p as f64 / (SAMPLES - 1) as f64;
            let r2 = -bound + 2.0 * bound * q as f64 / (SAMPLES - 1) as f64;
            if r1.abs() + r2.abs() > bound {
                continue;
            }
            let d1 = (hamiltonian_unchecked(r1 + h, r2, a) - hamiltonian_unchecked(r1 - h, r2, a)) / (2.0 * h);
            let d2 = (hamiltonian_unchecked(r1, r2 + h, a) - hamiltonian_unchecked(r1, r2 - h, a)) / (2.0 * h);
            mx = mx.max(d1.abs());
            my = my.max(d2.abs());
        }
    }
    (SAFETY * mx, SAFETY * my)
}

/// `(alpha_x, alpha_y)`: 1.1 times the largest finite-difference partial
/// derivatives of `H` over a 201 x 201 grid on `(1 - eps) U`. Cached per `(a, eps)`.
pub fn dissipation(a: f64, eps: f64) -> (f64, f64) {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), (f64, f64)>>> = OnceLock::new();
    let key = (a.to_bits(), eps.to_bits());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&v) = cache.lock().expect("cache lock").get(&key) {
        return v;
    }
    let v = measure_dissipation(a, eps);
    cache.lock().expect("cache lock").insert(key, v);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeParams {
    pub a: f64,
    pub dx: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_cfl() -> f64 {
    0.9
}

fn default_eps() -> f64 {
    0.01
}

impl PdeParams {
    pub fn new(a: f64, dx: f64) -> Self {
        PdeParams {
            a,
            dx,
            cfl: default_cfl(),
            eps: default_eps(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight a must be positive, got {}", self.a)));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::InvalidParameter(format!("dx must be positive, got {}", self.dx)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            let (ax, ay) = dissipation(self.a, self.eps);
            let bound = self.dx / (2.0 * (ax + ay));
            return Err(Error::Cfl {
                dt: self.cfl * bound,
                bound,
            });
        }
        Ok(())
    }

    /// Largest step `cfl dx / (2 (alpha_x + alpha_y))`.
    pub fn max_dt(&self) -> f64 {
        let (ax, ay) = dissipation(self.a, self.eps);
        self.cfl * self.dx / (2.0 * (ax + ay))
    }
}

/// Real values on the nodes `origin + dx (p, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeGrid {
    grid: SampleGrid,
    values: Vec<f64>,
    time: f64,
    margin: usize,
}

impl PdeGrid {
    pub fn from_profile(g: &Profile, grid: SampleGrid) -> Result<Self> {
        g.require_certified()?;
        if grid.is_empty() {
            return Err(Error::EmptySampleGrid);
        }
        let mut values = Vec::with_capacity(grid.len());
        for q in 0..grid.ny {
            for p in 0..grid.nx {
                let [x, y] = grid.node(p, q);
                values.push(g.eval(x, y));
            }
        }
        Ok(PdeGrid {
            grid,
            values,
            time: 0.0,
            margin: 0,
        })
    }

    pub fn grid(&self) -> &SampleGrid {
        &self.grid
    }

    pub fn dx(&self) -> f64 {
        self.grid.spacing
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Node-index rectangle of valid values, as faces `(p, q)`.
    pub fn valid_nodes(&self) -> Option<Rect> {
        Rect::new(Face::ORIGIN, self.grid.nx, self.grid.ny).shrink(self.margin)
    }

    pub fn is_valid_node(&self, p: usize, q: usize) -> bool {
        self.valid_nodes().is_some_and(|r| r.contains(Face::new(p as i64, q as i64)))
    }

    /// Value at node `(p, q)` if valid.
    pub fn at(&self, p: usize, q: usize) -> Option<f64> {
        self.is_valid_node(p, q).then(|| self.values[q * self.grid.nx + p])
    }

    /// Bilinear interpolation inside the valid region.
    pub fn sample(&self, x: f64, y: f64) -> Result<f64> {
        let g = &self.grid;
        let fx = (x - g.origin[0]) / g.spacing;
        let fy = (y - g.origin[1]) / g.spacing;
        let (lo, hi) = (self.margin as f64, [(g.nx - 1 - self.margin) as f64, (g.ny - 1 - self.margin) as f64]);
        let tol = 1e-9;
        if !(fx >= lo - tol && fy >= lo - tol && fx <= hi[0] + tol && fy <= hi[1] + tol) || self.valid_nodes().is_none() {
            let p = fx.floor() as i64;
            let q = fy.floor() as i64;
            return Err(Error::OutsideValidRegion {
                x,
                y,
                required: Rect::spanning(Face::new(p, q), Face::new(p + 1, q + 1)).grow(self.margin),
            });
        }
        let fx = fx.clamp(lo, hi[0]);
        let fy = fy.clamp(lo, hi[1]);
        let p0 = (fx.floor() as usize).min((hi[0] as usize).saturating_sub(1)).max(self.margin);
        let q0 = (fy.floor() as usize).min((hi[1] as usize).saturating_sub(1)).max(self.margin);
        let (p1, q1) = ((p0 + 1).min(hi[0] as usize), (q0 + 1).min(hi[1] as usize));
        let (tx, ty) = (fx - p0 as f64, fy - q0 as f64);
        let v = |p: usize, q: usize| self.values[q * g.nx + p];
        Ok((1.0 - ty) * ((1.0 - tx) * v(p0, q0) + tx * v(p1, q0)) + ty * ((1.0 - tx) * v(p0, q1) + tx * v(p1, q1)))
    }

    /// Largest `|p1| + |p2|` over forward differences inside the valid region.
    pub fn max_gradient_l1(&self) -> f64 {
        let Some(r) = self.valid_nodes() else { return 0.0 };
        let nx = self.grid.nx;
        let mut worst = 0.0f64;
        for q in r.origin.j as usize..r.origin.j as usize + r.height - 1 {
            for p in r.origin.i as usize..r.origin.i as usize + r.width - 1 {
                let k = q * nx + p;
                let d1 = (self.values[k + 1] - self.values[k]) / self.grid.spacing;
                let d2 = (self.values[k + nx] - self.values[k]) / self.grid.spacing;
                worst = worst.max(d1.abs() + d2.abs());
            }
        }
        worst
    }

    /// Largest difference over axis and diagonal neighbours, divided by `dx`:
    /// the discrete l_inf Lipschitz constant.
    pub fn max_lipschitz_ratio(&self) -> f64 {
        let Some(r) = self.valid_nodes() else { return 0.0 };
        let nx = self.grid.nx;
        let mut worst = 0.0f64;
        for q in r.origin.j as usize..r.origin.j as usize + r.height - 1 {
            for p in r.origin.i as usize..r.origin.i as usize + r.width - 1 {
                let k = q * nx + p;
                let v = self.values[k];
                for other in [k + 1, k + nx, k + nx + 1] {
                    worst = worst.max((self.values[other] - v).abs());
                }
                worst = worst.max((self.values[k + 1] - self.values[k + nx]).abs());
            }
        }
        worst / self.grid.spacing
    }

    /// Forward-Euler step of size `dt`; the margin grows by one layer.
    fn step(&mut self, dt: f64, params: &PdeParams, alpha: (f64, f64)) -> Result<()> {
        let nx = self.grid.nx;
        let m = self.margin;
        let Some(_) = Rect::new(Face::ORIGIN, nx, self.grid.ny).shrink(m + 1) else {
            return Err(Error::MarginExhausted {
                rect: Rect::new(Face::ORIGIN, nx, self.grid.ny),
                margin: m,
                needed: 1,
            });
        };
        let inv = 1.0 / self.grid.spacing;
        let (ax, ay) = alpha;
        let (a, eps) = (params.a, params.eps);
        let prev = &self.values;
        let mut next = prev.clone();
        let rows = m + 1..self.grid.ny - m - 1;
        next.par_chunks_mut(nx)
            .enumerate()
            .filter(|(q, _)| rows.contains(q))
            .for_each(|(q, row)| {
                for p in m + 1..nx - m - 1 {
                    let k = q * nx + p;
                    let u = prev[k];
                    let p1m = (u - prev[k - 1]) * inv;
                    let p1p = (prev[k + 1] - u) * inv;
                    let p2m = (u - prev[k - nx]) * inv;
                    let p2p = (prev[k + nx] - u) * inv;
                    row[p] = u - dt * numerical_hamiltonian(p1m, p1p, p2m, p2p, ax, ay, a, eps);
                }
            });
        self.values = next;
        self.margin = m + 1;
        Ok(())
    }

    /// Advances to time `target` in `ceil((target - time) / max_dt)` equal steps.
    pub fn advance_to(&mut self, target: f64, params: &PdeParams) -> Result<()> {
        params.validate()?;
        if (params.dx - self.grid.spacing).abs() > 1e-15 * params.dx {
            return Err(Error::InvalidParameter(format!(
                "solver dx {} does not match grid spacing {}",
                params.dx, self.grid.spacing
            )));
        }
        let span = target - self.time;
        if span < 0.0 || !span.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cannot advance from t={} to t={target}",
                self.time
            )));
        }
        if span == 0.0 {
            return Ok(());
        }
        let max_dt = params.max_dt();
        let steps = (span / max_dt).ceil() as usize;
        if self.valid_nodes().and_then(|r| r.shrink(steps)).is_none() {
            return Err(Error::MarginExhausted {
                rect: Rect::new(Face::ORIGIN, self.grid.nx, self.grid.ny),
                margin: self.margin,
                needed: steps,
            });
        }
        let dt = span / steps as f64;
        let alpha = dissipation(params.a, params.eps);
        for _ in 0..steps {
            self.step(dt, params, alpha)?;
        }
        self.time = target;
        Ok(())
    }

    /// Rows `x,y,u` over the valid region.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "x,y,u")?;
        if let Some(r) = self.valid_nodes() {
            for f in r.faces() {
                let [x, y] = self.grid.node(f.i as usize, f.j as usize);
                writeln!(out, "{x},{y},{}", self.values[f.j as usize * self.grid.nx + f.i as usize])?;
            }
        }
        Ok(())
    }
}

impl ContinuousField for PdeGrid {
    fn eval(&self, x: f64, y: f64) -> Result<f64> {
        self.sample(x, y)
    }
}

/// Number of steps `advance_to` uses to cover `span`.
pub fn steps_for(span: f64, params: &PdeParams) -> usize {
    (span / params.max_dt()).ceil() as usize
}

/// Solves from `g` on `grid`, returning a snapshot at each of `times`
/// (sorted ascending, each at least the previous).
pub fn solve(g: &Profile, params: &PdeParams, grid: SampleGrid, times: &[f64]) -> Result<Vec<PdeGrid>> {
    let start = PdeGrid::from_profile(g, grid)?;
    solve_from(start, params, times)
}

/// Continues an existing grid; restarting at an output time reproduces a
/// single run bit for bit.
pub fn solve_from(mut state: PdeGrid, params: &PdeParams, times: &[f64]) -> Result<Vec<PdeGrid>> {
    params.validate()?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        state.advance_to(t, params)?;
        out.push(state.clone());
    }
    Ok(out)
}

/// Total steps `solve` takes to visit `times` from 0; each interval is
/// rounded up separately.
pub fn schedule_steps(times: &[f64], params: &PdeParams) -> usize {
    let mut prev = 0.0;
    let mut total = 0;
    for &t in times {
        total += steps_for(t - prev, params);
        prev = t;
    }
    total
}

/// Grid whose valid region still covers `|x|_inf <= reach` after solving
/// through `times`.
pub fn grid_for(reach: f64, times: &[f64], params: &PdeParams) -> SampleGrid {
    let steps = schedule_steps(times, params);
    SampleGrid::centered(reach + (steps + 1) as f64 * params.dx, params.dx)
}
