//! Faces of the square lattice and the domino crossing rule.
//!
//! Face `(i, j)` is the unit square `[i, i+1] x [j, j+1]`. The primal vertex
//! `(x, y)` is black iff `x + y` is odd, so face `(0, 0)` has a black top-left
//! vertex. Crossing an edge with the white vertex on the left changes the
//! height by `+3` or `-1`; with the black vertex on the left by `+1` or `-3`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face {
    pub i: i64,
    pub j: i64,
}

impl Face {
    pub const ORIGIN: Face = Face { i: 0, j: 0 };

    pub const fn new(i: i64, j: i64) -> Self {
        Face { i, j }
    }

    /// 0 for even faces, 1 for odd faces.
    pub fn parity(self) -> u8 {
        (self.i + self.j).rem_euclid(2) as u8
    }

    pub fn is_even(self) -> bool {
        self.parity() == 0
    }

    pub fn step(self, dir: Dir) -> Face {
        let (di, dj) = dir.delta();
        Face::new(self.i + di, self.j + dj)
    }

    pub fn l1(self) -> i64 {
        self.i.abs() + self.j.abs()
    }

    pub fn linf(self) -> i64 {
        self.i.abs().max(self.j.abs())
    }
}

impl std::ops::Add for Face {
    type Output = Face;
    fn add(self, o: Face) -> Face {
        Face::new(self.i + o.i, self.j + o.j)
    }
}

impl std::ops::Sub for Face {
    type Output = Face;
    fn sub(self, o: Face) -> Face {
        Face::new(self.i - o.i, self.j - o.j)
    }
}

impl std::ops::Neg for Face {
    type Output = Face;
    fn neg(self) -> Face {
        Face::new(-self.i, -self.j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    North,
    East,
    South,
    West,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::North, Dir::East, Dir::South, Dir::West];

    pub fn delta(self) -> (i64, i64) {
        match self {
            Dir::North => (0, 1),
            Dir::East => (1, 0),
            Dir::South => (0, -1),
            Dir::West => (-1, 0),
        }
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::North => Dir::South,
            Dir::East => Dir::West,
            Dir::South => Dir::North,
            Dir::West => Dir::East,
        }
    }
}

pub fn vertex_is_black(x: i64, y: i64) -> bool {
    (x + y).rem_euclid(2) == 1
}

/// The primal vertex on the left-hand side when leaving `face` towards `dir`.
fn left_vertex(face: Face, dir: Dir) -> (i64, i64) {
    let Face { i, j } = face;
    match dir {
        Dir::North => (i, j + 1),
        Dir::East => (i + 1, j + 1),
        Dir::South => (i + 1, j),
        Dir::West => (i, j),
    }
}

/// Largest decrease allowed when stepping from `face` towards `dir`: 1 when
/// the white vertex is on the left, 3 when the black one is. The two allowed
/// differences are `-descent` and `4 - descent`.
pub fn descent(face: Face, dir: Dir) -> i32 {
    let (x, y) = left_vertex(face, dir);
    if vertex_is_black(x, y) {
        3
    } else {
        1
    }
}

/// Height differences `h(face.step(dir)) - h(face)` permitted by the crossing rule.
pub fn allowed_differences(face: Face, dir: Dir) -> [i32; 2] {
    let c = descent(face, dir);
    [-c, 4 - c]
}

pub fn is_allowed_difference(face: Face, dir: Dir, diff: i32) -> bool {
    let c = descent(face, dir);
    diff == -c || diff == 4 - c
}

/// Residue mod 4 forced on every admissible height function at `face`.
///
/// Summed along the path `(0,0) -> (i,0) -> (i,j)`, every admissible step
/// contributes `-descent (mod 4)`. The descents depend only on the parity of
/// the face, so the residue is periodic under `(2,0)` and `(0,2)` and the walk
/// is reduced to the unit cell.
pub fn parity_residue(face: Face) -> u8 {
    let target = Face::new(face.i.rem_euclid(2), face.j.rem_euclid(2));
    path_residue(target)
}

pub(crate) fn path_residue(target: Face) -> u8 {
    let mut at = Face::ORIGIN;
    let mut acc: i64 = 0;
    while at.i != target.i {
        let dir = if target.i > at.i { Dir::East } else { Dir::West };
        acc -= descent(at, dir) as i64;
        at = at.step(dir);
    }
    while at.j != target.j {
        let dir = if target.j > at.j { Dir::North } else { Dir::South };
        acc -= descent(at, dir) as i64;
        at = at.step(dir);
    }
    acc.rem_euclid(4) as u8
}

/// Axis-aligned window of faces `[origin.i, origin.i + width) x [origin.j, origin.j + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub origin: Face,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(origin: Face, width: usize, height: usize) -> Self {
        Rect {
            origin,
            width,
            height,
        }
    }

    /// The square `|x - center|_inf <= half`.
    pub fn centered(center: Face, half: usize) -> Self {
        let h = half as i64;
        Rect::new(Face::new(center.i - h, center.j - h), 2 * half + 1, 2 * half + 1)
    }

    /// Smallest rectangle containing both corner faces (inclusive).
    pub fn spanning(lo: Face, hi: Face) -> Self {
        let (i0, i1) = (lo.i.min(hi.i), lo.i.max(hi.i));
        let (j0, j1) = (lo.j.min(hi.j), lo.j.max(hi.j));
        Rect::new(
            Face::new(i0, j0),
            (i1 - i0 + 1) as usize,
            (j1 - j0 + 1) as usize,
        )
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn max_face(&self) -> Face {
        Face::new(
            self.origin.i + self.width as i64 - 1,
            self.origin.j + self.height as i64 - 1,
        )
    }

    pub fn contains(&self, f: Face) -> bool {
        let di = f.i - self.origin.i;
        let dj = f.j - self.origin.j;
        di >= 0 && dj >= 0 && (di as usize) < self.width && (dj as usize) < self.height
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.is_empty() || (self.contains(other.origin) && self.contains(other.max_face()))
    }

    /// The rectangle with `layers` rows/columns removed on every side.
    pub fn shrink(&self, layers: usize) -> Option<Rect> {
        if self.width <= 2 * layers || self.height <= 2 * layers {
            return None;
        }
        let l = layers as i64;
        Some(Rect::new(
            Face::new(self.origin.i + l, self.origin.j + l),
            self.width - 2 * layers,
            self.height - 2 * layers,
        ))
    }

    pub fn grow(&self, layers: usize) -> Rect {
        let l = layers as i64;
        Rect::new(
            Face::new(self.origin.i - l, self.origin.j - l),
            self.width + 2 * layers,
            self.height + 2 * layers,
        )
    }

    pub fn translate(&self, by: Face) -> Rect {
        Rect::new(self.origin + by, self.width, self.height)
    }

    /// Row-major index (rows are `j`).
    #[inline]
    pub fn index(&self, f: Face) -> Option<usize> {
        if self.contains(f) {
            Some(self.index_unchecked(f))
        } else {
            None
        }
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, f: Face) -> usize {
        ((f.j - self.origin.j) as usize) * self.width + (f.i - self.origin.i) as usize
    }

    /// Faces in row-major order (`j` outer, `i` inner).
    pub fn faces(&self) -> impl Iterator<Item = Face> + '_ {
        let o = self.origin;
        let w = self.width as i64;
        (0..self.height as i64).flat_map(move |dj| (0..w).map(move |di| Face::new(o.i + di, o.j + dj)))
    }
}
