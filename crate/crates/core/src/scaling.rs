//! The rescaled field `S_n(s, t)(x) = (1/n) psi(n x)`.
//!
//! `psi` keeps the heights on the sublattice `2Z^2` and fills each `2 x 2`
//! cell with a piecewise-linear, 2-Lipschitz interpolation that is linear on
//! the cell edges, so neighbouring cells glue continuously.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::height::{phi_from_profile, HeightField, Profile, SampleGrid};
use crate::lattice::{Face, Rect};
use crate::shuffle::{evolve, evolve_with, OmegaSource};

/// A real function on the plane that may be undefined away from some region.
pub trait ContinuousField {
    fn eval(&self, x: f64, y: f64) -> Result<f64>;

    fn lipschitz_bound(&self) -> f64 {
        2.0
    }
}

impl ContinuousField for Profile {
    fn eval(&self, x: f64, y: f64) -> Result<f64> {
        Ok(Profile::eval(self, x, y))
    }
}

/// Rotation by a quarter turn about `(1, 1)` inverted: `(x, y) -> (y, 2 - x)`.
#[inline]
fn rotate_back(p: [f64; 2]) -> [f64; 2] {
    [p[1], 2.0 - p[0]]
}

fn normalised_case(g1: i64, g2: i64, g3: i64, x: f64, y: f64) -> Option<f64> {
    let v = match (g1, g2, g3) {
        (0, 0, 0) => 0.0,
        (0, 4, 0) => 2.0 * x.min(y),
        (0, 0, 4) => 2.0 * (2.0 - x).min(y),
        (0, 4, 4) => 2.0 * y,
        (4, 0, 4) => {
            let (lo, hi) = (x.min(2.0 - x), x.max(2.0 - x));
            if y <= lo {
                2.0 * x
            } else if y >= hi {
                4.0 - 2.0 * x
            } else if y <= x {
                4.0 - 2.0 * y
            } else {
                2.0 * y
            }
        }
        (4, 4, 4) => 2.0 * x.max(y),
        _ => return None,
    };
    Some(v)
}

/// Interpolates inside the cell with corners `(0,0), (2,0), (2,2), (0,2)`
/// holding `corners` (in that order), at `p` in `[0, 2]^2`.
///
/// The cell is rotated so a minimal corner sits at the origin, reflected in
/// the diagonal so that `f(2,0) <= f(0,2)`, and shifted to `f(0,0) = 0`,
/// leaving six shapes.
pub fn interpolate_cell(corners: [i64; 4], p: [f64; 2]) -> Result<f64> {
    let k = (0..4).min_by_key(|&i| corners[i]).expect("four corners");
    // G(q) = F(R^k q) with R mapping corner i to corner i + 1
    let mut g = [0i64; 4];
    for (j, gj) in g.iter_mut().enumerate() {
        *gj = corners[(j + k) % 4];
    }
    let mut q = p;
    for _ in 0..k {
        q = rotate_back(q);
    }
    if g[1] > g[3] {
        g.swap(1, 3);
        q = [q[1], q[0]];
    }
    let base = g[0];
    normalised_case(g[1] - base, g[2] - base, g[3] - base, q[0], q[1])
        .map(|v| base as f64 + v)
        .ok_or(Error::CellPattern(corners))
}

/// `(1/n) psi` for one snapshot of the height process.
#[derive(Debug, Clone)]
pub struct RescaledField {
    n: u32,
    field: HeightField,
    lost: usize,
}

fn div_floor2(v: i64) -> i64 {
    v.div_euclid(2)
}

impl RescaledField {
    /// Keeps the valid part of `field`; `field.margin()` layers are recorded
    /// so that evaluation errors can name the initial window they would need.
    pub fn new(n: u32, field: &HeightField) -> Result<Self> {
        let valid = field.valid_rect().ok_or(Error::MarginExhausted {
            rect: field.rect(),
            margin: field.margin(),
            needed: 0,
        })?;
        Ok(RescaledField {
            n,
            field: field.restrict(valid)?,
            lost: field.margin(),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn heights(&self) -> &HeightField {
        &self.field
    }

    /// Range of cell indices `c` (cells span `[2c, 2c + 2]`) inside `[lo, hi]`.
    fn cell_range(lo: i64, hi: i64) -> (i64, i64) {
        (-div_floor2(-lo), div_floor2(hi) - 1)
    }

    /// `psi` at lattice coordinates `(px, py)`.
    pub fn psi(&self, px: f64, py: f64) -> Result<f64> {
        let r = self.field.rect();
        let max = r.max_face();
        let (ax0, ax1) = Self::cell_range(r.origin.i, max.i);
        let (ay0, ay1) = Self::cell_range(r.origin.j, max.j);
        let locate = |v: f64, c0: i64, c1: i64| -> Option<i64> {
            let c = (v / 2.0).floor() as i64;
            if c0 > c1 || v < (2 * c0) as f64 || v > (2 * c1 + 2) as f64 {
                None
            } else {
                Some(c.clamp(c0, c1))
            }
        };
        let (Some(cx), Some(cy)) = (locate(px, ax0, ax1), locate(py, ay0, ay1)) else {
            let lo = Face::new(2 * div_floor2(px.floor() as i64), 2 * div_floor2(py.floor() as i64));
            let needed = Rect::spanning(lo, Face::new(lo.i + 2, lo.j + 2));
            return Err(Error::OutsideValidRegion {
                x: px / self.n as f64,
                y: py / self.n as f64,
                required: needed.grow(self.lost),
            });
        };
        let (i0, j0) = (2 * cx, 2 * cy);
        let at = |i: i64, j: i64| self.field.get(Face::new(i, j)).expect("cell inside valid region") as i64;
        let corners = [at(i0, j0), at(i0 + 2, j0), at(i0 + 2, j0 + 2), at(i0, j0 + 2)];
        interpolate_cell(corners, [px - i0 as f64, py - j0 as f64])
    }

    /// Largest `|psi(x) - h(x)|` over the faces covered by complete cells.
    pub fn interpolation_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (f, h) in self.field.iter_valid() {
            if let Ok(v) = self.psi(f.i as f64, f.j as f64) {
                worst = worst.max((v - h as f64).abs());
            }
        }
        worst
    }
}

impl ContinuousField for RescaledField {
    fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let n = self.n as f64;
        Ok(self.psi(n * x, n * y)? / n)
    }
}

/// Smallest initial window whose evolution over `steps` shuffles still
/// covers every cell needed to evaluate `S_n` at `points`.
pub fn required_window(points: &[[f64; 2]], n: u32, steps: u64) -> Result<Rect> {
    if points.is_empty() {
        return Err(Error::EmptySampleGrid);
    }
    let n = n as f64;
    let (mut lo, mut hi) = ([i64::MAX; 2], [i64::MIN; 2]);
    for p in points {
        for k in 0..2 {
            let v = n * p[k];
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite point {p:?}")));
            }
            lo[k] = lo[k].min(2 * div_floor2(v.floor() as i64));
            hi[k] = hi[k].max(2 * div_floor2(v.floor() as i64) + 2);
        }
    }
    Ok(Rect::spanning(Face::new(lo[0], lo[1]), Face::new(hi[0], hi[1])).grow(2 * steps as usize))
}

/// Snapshots `psi_{0, k/n}` of one run, interpolated linearly in between.
#[derive(Debug, Clone)]
pub struct Trajectory {
    n: u32,
    snapshots: BTreeMap<u64, RescaledField>,
}

impl Trajectory {
    /// Runs the process from `phi_g^n` on `window`, keeping the shuffles listed
    /// in `keep` (0 keeps the rescaled initial field).
    pub fn simulate(g: &Profile, omega: &OmegaSource, n: u32, window: Rect, keep: &[u64]) -> Result<Self> {
        let phi = phi_from_profile(g, n, window)?;
        Self::from_initial(&phi, omega, n, keep)
    }

    pub fn from_initial(phi: &HeightField, omega: &OmegaSource, n: u32, keep: &[u64]) -> Result<Self> {
        let last = keep.iter().copied().max().unwrap_or(0);
        let mut snapshots = BTreeMap::new();
        if keep.contains(&0) {
            snapshots.insert(0, RescaledField::new(n, phi)?);
        }
        evolve_with(phi, omega, last, |t, field| {
            if keep.contains(&t) {
                snapshots.insert(t, RescaledField::new(n, field)?);
            }
            Ok(())
        })?;
        Ok(Trajectory { n, snapshots })
    }

    pub fn snapshot(&self, step: u64) -> Option<&RescaledField> {
        self.snapshots.get(&step)
    }

    pub fn steps(&self) -> impl Iterator<Item = u64> + '_ {
        self.snapshots.keys().copied()
    }

    /// Value at time `t`, linear between the neighbouring kept shuffles.
    pub fn eval_at(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        let nt = t * self.n as f64;
        let k0 = nt.floor() as u64;
        let theta = nt - k0 as f64;
        let get = |k: u64| {
            self.snapshots
                .get(&k)
                .ok_or_else(|| Error::InvalidParameter(format!("shuffle {k} was not kept in the trajectory")))
        };
        let v0 = get(k0)?.eval(x, y)?;
        if theta == 0.0 {
            return Ok(v0);
        }
        let v1 = get(k0 + 1)?.eval(x, y)?;
        Ok((1.0 - theta) * v0 + theta * v1)
    }
}

/// `S_n(s, t; g, omega)` at `points`.
///
/// For `s >= t` this is `g`. Otherwise each pair of grid times
/// `(s', t')` around `(s, t)` is simulated from `phi_g^n` with marks shifted
/// by `n s'`, and the four values are combined bilinearly.
pub fn eval_s_n(s: f64, t: f64, g: &Profile, omega: &OmegaSource, n: u32, points: &[[f64; 2]]) -> Result<Vec<f64>> {
    if !(s >= 0.0 && t >= 0.0 && s.is_finite() && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("times must be nonnegative, got s={s}, t={t}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    g.require_certified()?;
    if s >= t {
        return Ok(points.iter().map(|p| g.eval(p[0], p[1])).collect());
    }
    let nf = n as f64;
    let split = |v: f64| {
        let k = (v * nf).floor();
        let theta = v * nf - k;
        (k as u64, theta)
    };
    let (s0, ts) = split(s);
    let (t0, tt) = split(t);
    let mut out = vec![0.0; points.len()];
    for (ds, ws) in [(0, 1.0 - ts), (1, ts)] {
        for (dt, wt) in [(0, 1.0 - tt), (1, tt)] {
            let w = ws * wt;
            if w == 0.0 {
                continue;
            }
            let values = grid_time_values(s0 + ds, t0 + dt, g, omega, n, points)?;
            for (o, v) in out.iter_mut().zip(values) {
                *o += w * v;
            }
        }
    }
    Ok(out)
}

fn grid_time_values(s: u64, t: u64, g: &Profile, omega: &OmegaSource, n: u32, points: &[[f64; 2]]) -> Result<Vec<f64>> {
    if s >= t {
        return Ok(points.iter().map(|p| g.eval(p[0], p[1])).collect());
    }
    let steps = t - s;
    let window = required_window(points, n, steps)?;
    let phi = phi_from_profile(g, n, window)?;
    let (field, _) = evolve(&phi, &omega.shift_time(s), steps)?;
    let scaled = RescaledField::new(n, &field)?;
    points.iter().map(|p| scaled.eval(p[0], p[1])).collect()
}

/// Values of `field` at the nodes of `grid`, row-major.
pub fn sample(field: &impl ContinuousField, grid: &SampleGrid) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::EmptySampleGrid);
    }
    let mut out = Vec::with_capacity(grid.len());
    for q in 0..grid.ny {
        for p in 0..grid.nx {
            let [x, y] = grid.node(p, q);
            out.push(field.eval(x, y)?);
        }
    }
    Ok(out)
}

/// CSV with a header such as `x,y,value`, one row per node.
pub fn write_grid_csv(grid: &SampleGrid, values: &[f64], header: &str, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{header}")?;
    for q in 0..grid.ny {
        for p in 0..grid.nx {
            let [x, y] = grid.node(p, q);
            writeln!(out, "{x},{y},{}", values[q * grid.nx + p])?;
        }
    }
    Ok(())
}

/// Binary 8-bit PGM scaled to `[min, max]`, top row first, with the extrema
/// recorded as `# min` and `# max` comments.
pub fn write_pgm(grid: &SampleGrid, values: &[f64], mut out: impl Write) -> std::io::Result<()> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    writeln!(out, "P5")?;
    writeln!(out, "# min {min}")?;
    writeln!(out, "# max {max}")?;
    writeln!(out, "{} {}", grid.nx, grid.ny)?;
    writeln!(out, "255")?;
    let span = max - min;
    let mut row = Vec::with_capacity(grid.nx);
    for q in (0..grid.ny).rev() {
        row.clear();
        for p in 0..grid.nx {
            let v = values[q * grid.nx + p];
            let level = if span > 0.0 { ((v - min) / span * 255.0).round() } else { 0.0 };
            row.push(level as u8);
        }
        out.write_all(&row)?;
    }
    Ok(())
}
