use std::io::Write;

use crate::error::{Error, Result};
use crate::height::HeightField;
use crate::lattice::{descent, Dir, Face, Rect};

/// The pointwise-minimal admissible height function vanishing at a root face,
/// tabulated on `|x|_1 <= radius`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PyramidTable {
    radius: usize,
    field: HeightField,
}

impl PyramidTable {
    pub fn radius(&self) -> usize {
        self.radius
    }

    /// `v(x)` for `|x|_1 <= radius`.
    pub fn value(&self, x: Face) -> Option<i32> {
        if x.l1() as usize > self.radius {
            return None;
        }
        self.field.get(x)
    }

    /// The table on the enclosing square `|x|_inf <= radius`.
    pub fn field(&self) -> &HeightField {
        &self.field
    }

    pub fn entries(&self) -> impl Iterator<Item = (Face, i32)> + '_ {
        self.field
            .iter_valid()
            .filter(move |(f, _)| f.l1() as usize <= self.radius)
    }

    /// Same `i,j,h` format as height fields, restricted to the l1 ball.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,j,h")?;
        for (f, h) in self.entries() {
            writeln!(w, "{},{},{}", f.i, f.j, h)?;
        }
        Ok(())
    }
}

/// `v(x) = min { phi(x) : phi admissible, phi(0) = 0 }` for `|x|_1 <= radius`.
pub fn pyramid_oracle(radius: usize) -> Result<PyramidTable> {
    if radius == 0 {
        return Err(Error::InvalidParameter("pyramid radius must be >= 1".into()));
    }
    let field = rooted_pyramid(Face::ORIGIN, radius)?;
    Ok(PyramidTable { radius, field })
}

/// Minimal admissible-shape height function with value 0 at `root`, on the
/// square `|x - root|_inf <= half`.
///
/// An admissible field obeys `h(y) >= h(x) - descent(x -> y)` on every
/// directed step, so the minimum is `-d(root, x)` with `d` the shortest-path
/// distance under step costs `descent`. It is computed by relaxing
/// `d(x) <- min_y d(y) + descent(y -> x)` to its fixed point on a padded
/// window: every step costs at least 1 and `d(x) <= 2|x - root|_inf + 1`,
/// so no shortest path leaves `|x - root|_inf <= 2 half + 1`.
pub fn rooted_pyramid(root: Face, half: usize) -> Result<HeightField> {
    let padded = Rect::centered(root, 2 * half + 2);
    let inf = i64::MAX / 4;
    let mut dist = vec![inf; padded.len()];
    dist[padded.index_unchecked(root)] = 0;
    let faces: Vec<Face> = padded.faces().collect();
    let max_sweeps = (2 * half + 2) * (2 * half + 2);
    let mut sweeps = 0;
    loop {
        let mut changed = false;
        let forward = sweeps % 2 == 0;
        for k in 0..faces.len() {
            let x = if forward { faces[k] } else { faces[faces.len() - 1 - k] };
            let kx = padded.index_unchecked(x);
            let mut best = dist[kx];
            for dir in Dir::ALL {
                let y = x.step(dir);
                if let Some(ky) = padded.index(y) {
                    let dy = dist[ky];
                    if dy < inf {
                        best = best.min(dy + descent(y, dir.opposite()) as i64);
                    }
                }
            }
            if best < dist[kx] {
                dist[kx] = best;
                changed = true;
            }
        }
        sweeps += 1;
        if !changed {
            break;
        }
        if sweeps >= max_sweeps {
            return Err(Error::NoConvergence(max_sweeps));
        }
    }
    let out = Rect::centered(root, half);
    Ok(HeightField::from_fn(out, |f| -(dist[padded.index_unchecked(f)] as i32)))
}
