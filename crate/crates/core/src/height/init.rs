//! Discretisation of a profile `g` into the admissible field `phi_g^n`.
//!
//! `phi_g^n` is the pointwise maximum of all pyramids `p_y + k` (pyramid
//! rooted at face `y`, lifted by an integer `k` in the residue class of `y`)
//! with `k <= n g(y / n)`. The maximum at `x` is attained by a root `y` with
//! `|y - x|_1 <= 1`, which gives the five-term local formula used here.

use crate::error::Result;
use crate::height::{rooted_pyramid, HeightField, Profile};
use crate::lattice::{descent, parity_residue, Dir, Face, Rect};

/// Largest integer `k <= value` with `k = residue (mod 4)`.
pub fn residue_floor(value: f64, residue: u8) -> i64 {
    let f = value.floor() as i64;
    f - (f - residue as i64).rem_euclid(4)
}

/// Height of the highest admissible pyramid rooted at `y` not exceeding `n g(y/n)`.
#[inline]
pub fn lift(g: &Profile, n: u32, y: Face) -> i64 {
    let nf = n as f64;
    let v = nf * g.eval(y.i as f64 / nf, y.j as f64 / nf);
    residue_floor(v, parity_residue(y))
}

/// `phi_g^n` on `window`.
pub fn phi_from_profile(g: &Profile, n: u32, window: Rect) -> Result<HeightField> {
    g.require_certified()?;
    let padded = window.grow(1);
    let lifts: Vec<i64> = padded.faces().map(|y| lift(g, n, y)).collect();
    Ok(HeightField::from_fn(window, |x| {
        let mut best = lifts[padded.index_unchecked(x)];
        for dir in Dir::ALL {
            let y = x.step(dir);
            let k = lifts[padded.index_unchecked(y)];
            best = best.max(k - descent(y, dir.opposite()) as i64);
        }
        best as i32
    }))
}

/// `phi_g^n` on `window` by direct maximisation over every root `y` within
/// `2 * r` of the window (with `r` its l1 radius), using full shortest-path
/// pyramids. Quadratic cost; meant for small windows.
pub fn phi_bruteforce_oracle(g: &Profile, n: u32, window: Rect) -> Result<HeightField> {
    g.require_certified()?;
    let l1_radius = [window.origin, window.max_face()]
        .into_iter()
        .chain([
            Face::new(window.origin.i, window.max_face().j),
            Face::new(window.max_face().i, window.origin.j),
        ])
        .map(Face::l1)
        .max()
        .unwrap_or(0) as usize;
    let pad = 2 * l1_radius.max(1);
    let roots = window.grow(pad);
    let reach = roots.width.max(roots.height);
    // pyramids are invariant under even translations: one table per root parity
    let even = rooted_pyramid(Face::ORIGIN, reach)?;
    let odd_root = Face::new(1, 0);
    let odd = rooted_pyramid(odd_root, reach)?;
    let lifts: Vec<(Face, i64)> = roots.faces().map(|y| (y, lift(g, n, y))).collect();
    Ok(HeightField::from_fn(window, |x| {
        lifts
            .iter()
            .map(|&(y, k)| {
                let p = if y.is_even() {
                    even.get(x - y).expect("pyramid table covers the search window")
                } else {
                    odd.get(x - y + odd_root).expect("pyramid table covers the search window")
                };
                k + p as i64
            })
            .max()
            .expect("nonempty root set") as i32
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residue_floor_examples() {
        assert_eq!(residue_floor(0.0, 0), 0);
        assert_eq!(residue_floor(0.0, 3), -1);
        assert_eq!(residue_floor(0.0, 1), -3);
        assert_eq!(residue_floor(3.9, 2), 2);
        assert_eq!(residue_floor(-0.5, 0), -4);
        assert_eq!(residue_floor(7.0, 3), 7);
    }

    #[test]
    fn flat_profile_vanishes_at_origin() {
        let g = Profile::affine([0.0, 0.0]);
        let f = phi_from_profile(&g, 8, Rect::centered(Face::ORIGIN, 4)).unwrap();
        assert_eq!(f.get(Face::ORIGIN), Some(0));
        assert!(f.check_admissible().is_empty());
        for (_, h) in f.iter_valid() {
            assert!(h > -4 && h <= 1);
        }
    }

    #[test]
    fn uncertified_profile_is_rejected() {
        let g = Profile::uncertified("steep", |x, _| 3.0 * x);
        assert!(phi_from_profile(&g, 4, Rect::centered(Face::ORIGIN, 2)).is_err());
        assert!(phi_bruteforce_oracle(&g, 4, Rect::centered(Face::ORIGIN, 2)).is_err());
    }

    #[test]
    fn capped_cone_matches_oracle() {
        let g = Profile::certified("cone", |x: f64, y: f64| (2.0 * x.abs().max(y.abs())).min(3.0));
        let w = Rect::centered(Face::ORIGIN, 2);
        let a = phi_from_profile(&g, 16, w).unwrap();
        let b = phi_bruteforce_oracle(&g, 16, w).unwrap();
        assert_eq!(a, b);
    }
}
