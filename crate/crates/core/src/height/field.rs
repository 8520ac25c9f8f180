use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::lattice::{is_allowed_difference, parity_residue, Dir, Face, Rect};

/// Integer heights on a rectangular window of faces.
///
/// `margin` counts the boundary layers that evolution has invalidated; only
/// the rectangle shrunk by `margin` carries infinite-lattice values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeightField {
    rect: Rect,
    values: Vec<i32>,
    margin: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Step { from: Face, to: Face, diff: i32 },
    Residue { face: Face, value: i32, expected: u8 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Step { from, to, diff } => write!(
                f,
                "step ({}, {}) -> ({}, {}) changes height by {diff}",
                from.i, from.j, to.i, to.j
            ),
            Violation::Residue {
                face,
                value,
                expected,
            } => write!(
                f,
                "face ({}, {}) has height {value}, expected residue {expected} mod 4",
                face.i, face.j
            ),
        }
    }
}

impl HeightField {
    pub fn from_fn(rect: Rect, mut f: impl FnMut(Face) -> i32) -> Self {
        let values = rect.faces().map(&mut f).collect();
        HeightField {
            rect,
            values,
            margin: 0,
        }
    }

    pub fn from_values(rect: Rect, values: Vec<i32>) -> Result<Self> {
        if values.len() != rect.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values for {:?}, got {}",
                rect.len(),
                rect,
                values.len()
            )));
        }
        Ok(HeightField {
            rect,
            values,
            margin: 0,
        })
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub(crate) fn set_margin(&mut self, margin: usize) {
        self.margin = margin;
    }

    /// The region whose values are exact, `None` once the margin swallows the window.
    pub fn valid_rect(&self) -> Option<Rect> {
        self.rect.shrink(self.margin)
    }

    pub fn is_valid(&self, f: Face) -> bool {
        self.valid_rect().is_some_and(|r| r.contains(f))
    }

    /// Value at `f` if it lies in the valid region.
    pub fn get(&self, f: Face) -> Option<i32> {
        if self.is_valid(f) {
            Some(self.values[self.rect.index_unchecked(f)])
        } else {
            None
        }
    }

    /// Value anywhere in the stored window, valid or not.
    pub fn get_raw(&self, f: Face) -> Option<i32> {
        self.rect.index(f).map(|k| self.values[k])
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [i32] {
        &mut self.values
    }

    /// `(face, height)` over the valid region in row-major order.
    pub fn iter_valid(&self) -> impl Iterator<Item = (Face, i32)> + '_ {
        self.valid_rect()
            .into_iter()
            .flat_map(|r| r.faces().collect::<Vec<_>>())
            .map(move |f| (f, self.values[self.rect.index_unchecked(f)]))
    }

    pub fn add_constant(&self, k: i32) -> HeightField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v += k);
        out
    }

    /// `tau_y`: the field `x -> self(x - y)`.
    pub fn translate(&self, y: Face) -> HeightField {
        HeightField {
            rect: self.rect.translate(y),
            values: self.values.clone(),
            margin: self.margin,
        }
    }

    /// Copy of the valid values restricted to `window`.
    pub fn restrict(&self, window: Rect) -> Result<HeightField> {
        let valid = self.valid_rect().unwrap_or(Rect::new(self.rect.origin, 0, 0));
        if !valid.contains_rect(&window) {
            return Err(Error::WindowMismatch {
                left: valid,
                right: window,
            });
        }
        Ok(HeightField::from_fn(window, |f| {
            self.values[self.rect.index_unchecked(f)]
        }))
    }

    /// All crossing-rule and residue violations in the valid region.
    pub fn check_admissible(&self) -> Vec<Violation> {
        let Some(valid) = self.valid_rect() else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for f in valid.faces() {
            let h = self.values[self.rect.index_unchecked(f)];
            let expected = parity_residue(f);
            if h.rem_euclid(4) as u8 != expected {
                out.push(Violation::Residue {
                    face: f,
                    value: h,
                    expected,
                });
            }
            for dir in [Dir::North, Dir::East] {
                let g = f.step(dir);
                if !valid.contains(g) {
                    continue;
                }
                let diff = self.values[self.rect.index_unchecked(g)] - h;
                if !is_allowed_difference(f, dir, diff) {
                    out.push(Violation::Step {
                        from: f,
                        to: g,
                        diff,
                    });
                }
            }
        }
        out
    }

    pub fn is_admissible(&self) -> bool {
        self.check_admissible().is_empty()
    }

    pub(crate) fn require_admissible(&self) -> Result<()> {
        let v = self.check_admissible();
        match v.first() {
            None => Ok(()),
            Some(first) => Err(Error::Inadmissible {
                count: v.len(),
                first: first.to_string(),
            }),
        }
    }

    fn combine(&self, other: &HeightField, pick: fn(i32, i32) -> i32) -> Result<HeightField> {
        if self.rect != other.rect {
            return Err(Error::WindowMismatch {
                left: self.rect,
                right: other.rect,
            });
        }
        self.require_admissible()?;
        other.require_admissible()?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| pick(a, b))
            .collect();
        Ok(HeightField {
            rect: self.rect,
            values,
            margin: self.margin.max(other.margin),
        })
    }

    /// Pointwise minimum of two admissible fields on the same window.
    pub fn meet(&self, other: &HeightField) -> Result<HeightField> {
        self.combine(other, i32::min)
    }

    /// Pointwise maximum of two admissible fields on the same window.
    pub fn join(&self, other: &HeightField) -> Result<HeightField> {
        self.combine(other, i32::max)
    }

    /// `i,j,h` rows over the valid region.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,j,h")?;
        for (f, h) in self.iter_valid() {
            writeln!(w, "{},{},{}", f.i, f.j, h)?;
        }
        Ok(())
    }

    /// Reads a CSV written by [`HeightField::write_csv`]; the rows must tile a rectangle.
    pub fn read_csv<R: BufRead>(r: R) -> Result<HeightField> {
        let parse_err = |line: usize, message: String| Error::Parse {
            context: format!("height CSV line {line}"),
            message,
        };
        let mut rows = Vec::new();
        for (k, line) in r.lines().enumerate() {
            let line = line.map_err(|e| parse_err(k + 1, e.to_string()))?;
            let line = line.trim();
            if k == 0 {
                if line != "i,j,h" {
                    return Err(parse_err(1, format!("unexpected header {line:?}")));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(parse_err(k + 1, "expected 3 columns".into()));
            }
            let num = |s: &str| s.trim().parse::<i64>().map_err(|e| parse_err(k + 1, e.to_string()));
            rows.push((Face::new(num(parts[0])?, num(parts[1])?), num(parts[2])? as i32));
        }
        if rows.is_empty() {
            return Err(parse_err(1, "no rows".into()));
        }
        let lo = rows.iter().fold(rows[0].0, |a, (f, _)| Face::new(a.i.min(f.i), a.j.min(f.j)));
        let hi = rows.iter().fold(rows[0].0, |a, (f, _)| Face::new(a.i.max(f.i), a.j.max(f.j)));
        let rect = Rect::spanning(lo, hi);
        if rect.len() != rows.len() {
            return Err(parse_err(0, format!("{} rows do not tile {:?}", rows.len(), rect)));
        }
        let mut values = vec![0; rect.len()];
        let mut seen = vec![false; rect.len()];
        for (f, h) in rows {
            let k = rect.index_unchecked(f);
            if seen[k] {
                return Err(parse_err(0, format!("duplicate face ({}, {})", f.i, f.j)));
            }
            seen[k] = true;
            values[k] = h;
        }
        HeightField::from_values(rect, values)
    }
}
