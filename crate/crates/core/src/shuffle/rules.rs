//! The local height update performed by one spider move.
//!
//! With neighbour heights written relative to the centre `h`, north and south
//! sit at `h+1` or `h-3`, west and east at `h-1` or `h+3`. Seven of the
//! sixteen combinations occur in admissible fields:
//!
//! | N  | W  | E  | S  | new centre                          |
//! |----|----|----|----|-------------------------------------|
//! | +1 | -1 | -1 | -3 | h-4                                 |
//! | -3 | -1 | -1 | +1 | h-4                                 |
//! | +1 | -1 | -1 | +1 | h (prob a/(1+a)), h-4 (prob 1/(1+a)) |
//! | +1 | -1 | +3 | +1 | h                                   |
//! | +1 | +3 | -1 | +1 | h                                   |
//! | -3 | -1 | -1 | -3 | h-4                                 |
//! | +1 | +3 | +3 | +1 | h                                   |

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Stay,
    Drop,
    /// Drops iff the Bernoulli mark is 1.
    Random,
}

const INVALID: u8 = 3;

// indexed by n_low | w_high << 1 | e_high << 2 | s_low << 3
const TABLE: [u8; 16] = {
    let mut t = [INVALID; 16];
    t[0b0000] = 2; // all minimal: random
    t[0b1000] = 1; // S at h-3
    t[0b0001] = 1; // N at h-3
    t[0b0100] = 0; // E at h+3
    t[0b0010] = 0; // W at h+3
    t[0b1001] = 1; // N and S at h-3
    t[0b0110] = 0; // W and E at h+3
    t
};

/// Pattern code, or `None` when some neighbour difference is not allowed at all.
#[inline]
pub(crate) fn pattern_code(n: i32, w: i32, e: i32, s: i32) -> Option<u8> {
    let bit = |v: i32, lo: i32, hi: i32| -> Option<u8> {
        if v == lo {
            Some(0)
        } else if v == hi {
            Some(1)
        } else {
            None
        }
    };
    let nb = bit(n, 1, -3)?;
    let wb = bit(w, -1, 3)?;
    let eb = bit(e, -1, 3)?;
    let sb = bit(s, 1, -3)?;
    Some(nb | wb << 1 | eb << 2 | sb << 3)
}

#[inline]
pub(crate) fn outcome_of_code(code: u8) -> Option<Outcome> {
    match TABLE[code as usize] {
        0 => Some(Outcome::Stay),
        1 => Some(Outcome::Drop),
        2 => Some(Outcome::Random),
        _ => None,
    }
}

/// Classifies a neighbourhood given relative heights `(N, W, E, S)`.
pub fn classify(n: i32, w: i32, e: i32, s: i32) -> Option<Outcome> {
    pattern_code(n, w, e, s).and_then(outcome_of_code)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("neighbourhood (N={n}, W={w}, E={e}, S={s}) is not an admissible pattern")]
pub struct PatternError {
    pub n: i32,
    pub w: i32,
    pub e: i32,
    pub s: i32,
}

/// New centre height relative to the old one: `0` or `-4`.
pub fn update_face(n: i32, w: i32, e: i32, s: i32, mark: bool) -> Result<i32, PatternError> {
    match classify(n, w, e, s) {
        Some(Outcome::Stay) => Ok(0),
        Some(Outcome::Drop) => Ok(-4),
        Some(Outcome::Random) => Ok(if mark { -4 } else { 0 }),
        None => Err(PatternError { n, w, e, s }),
    }
}
