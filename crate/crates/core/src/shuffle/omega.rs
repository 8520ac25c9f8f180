use serde::{Deserialize, Serialize};

use crate::lattice::Face;

/// Seeded Bernoulli field `omega(x, t)` deciding the random spider moves.
///
/// Marks are a counter-based keyed hash of `(seed, i, j, t)`: four rounds of
/// the SplitMix64 finaliser, the top 53 bits read as a uniform number in
/// `[0, 1)` and compared with `1 / (1 + a)`. The output depends on nothing
/// but the key, so coupled fields and restarted runs see identical marks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaSource {
    seed: u64,
    a: f64,
    threshold: u64,
    time_shift: u64,
    space_shift: Face,
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The raw 64-bit hash behind a mark.
#[inline]
pub fn mark_bits(seed: u64, i: i64, j: i64, t: u64) -> u64 {
    let mut z = splitmix64(seed);
    z = splitmix64(z ^ i as u64);
    z = splitmix64(z ^ j as u64);
    splitmix64(z ^ t)
}

const UNIT: f64 = (1u64 << 53) as f64;

impl OmegaSource {
    /// `a` is the vertical edge weight squared; marks are 1 with probability `1/(1+a)`.
    pub fn new(seed: u64, a: f64) -> Self {
        assert!(a > 0.0 && a.is_finite(), "weight a must be positive, got {a}");
        let p = 1.0 / (1.0 + a);
        OmegaSource {
            seed,
            a,
            threshold: (p * UNIT) as u64,
            time_shift: 0,
            space_shift: Face::ORIGIN,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `gamma_s omega (x, t) = omega(x, t + s)`.
    pub fn shift_time(&self, s: u64) -> Self {
        OmegaSource {
            time_shift: self.time_shift + s,
            ..*self
        }
    }

    /// `tau_y omega (x, t) = omega(x - y, t)`.
    pub fn translate(&self, y: Face) -> Self {
        OmegaSource {
            space_shift: self.space_shift + y,
            ..*self
        }
    }

    #[inline]
    pub fn mark(&self, x: Face, t: u64) -> bool {
        let y = x - self.space_shift;
        (mark_bits(self.seed, y.i, y.j, t + self.time_shift) >> 11) < self.threshold
    }
}
