use std::path::PathBuf;

use crate::lattice::{Face, Rect};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("window mismatch: {left:?} vs {right:?}")]
    WindowMismatch { left: Rect, right: Rect },

    #[error("height field is not admissible ({count} violations, first: {first})")]
    Inadmissible { count: usize, first: String },

    #[error("inadmissible local pattern at face ({}, {}): N={n} W={w} E={e} S={s} relative to center", face.i, face.j)]
    Pattern {
        face: Face,
        n: i32,
        w: i32,
        e: i32,
        s: i32,
    },

    #[error("margin exhausted: need {needed} more layers but window {rect:?} has margin {margin}")]
    MarginExhausted {
        rect: Rect,
        margin: usize,
        needed: usize,
    },

    #[error("point ({x}, {y}) lies outside the valid region; an initial window of at least {required:?} is needed")]
    OutsideValidRegion { x: f64, y: f64, required: Rect },

    #[error("profile is not certified 2-spatially-Lipschitz")]
    UncertifiedProfile,

    #[error("empty sample grid")]
    EmptySampleGrid,

    #[error("slope ({0}, {1}) is outside the Newton polygon")]
    SlopeOutsideU(f64, f64),

    #[error("slope ({0}, {1}) must lie in the interior of the Newton polygon")]
    SlopeNotInterior(f64, f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("corner pattern {0:?} is not an admissible even-sublattice cell")]
    CellPattern([i64; 4]),

    #[error("fixed-point iteration did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("CFL violation: dt = {dt} exceeds the stable bound {bound}")]
    Cfl { dt: f64, bound: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {message}")]
    Parse { context: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
