use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::height::HeightField;
use crate::lattice::{Face, Rect};
use crate::shuffle::omega::OmegaSource;
use crate::shuffle::rules::{outcome_of_code, pattern_code, Outcome};

/// Drop counts for one shuffle, over the faces valid after the shuffle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub even_faces: u64,
    pub even_drops: u64,
    pub odd_faces: u64,
    pub odd_drops: u64,
}

impl StepStats {
    pub fn drops(&self) -> u64 {
        self.even_drops + self.odd_drops
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvolveReport {
    pub steps: u64,
    /// Faces that dropped by 4 in each shuffle.
    pub decrease_counts: Vec<u64>,
    pub step_stats: Vec<StepStats>,
    pub final_margin: usize,
}

impl EvolveReport {
    /// Mean fraction of even faces dropping per shuffle.
    pub fn even_drop_rate(&self) -> f64 {
        let (d, f) = self
            .step_stats
            .iter()
            .fold((0u64, 0u64), |(d, f), s| (d + s.even_drops, f + s.even_faces));
        if f == 0 {
            0.0
        } else {
            d as f64 / f as f64
        }
    }
}

/// Updates the faces of one parity inside `region`.
///
/// `offset` is added to every neighbour before comparing with the centre:
/// 0 for even faces; 2 for odd faces, whose even neighbours already carry
/// the post-shuffle normalisation (heights lowered by 2) while the local rule
/// is stated for the heights present when the odd spider moves happen.
#[allow(clippy::too_many_arguments)]
fn update_sublattice(
    values: &mut [i32],
    rect: Rect,
    region: Rect,
    count_in: Rect,
    parity: i64,
    offset: i32,
    omega: &OmegaSource,
    t: u64,
) -> Result<(u64, u64)> {
    let w = rect.width;
    let (mut faces, mut drops) = (0u64, 0u64);
    for j in region.origin.j..region.origin.j + region.height as i64 {
        let i0 = region.origin.i;
        let first = i0 + (parity - (i0 + j)).rem_euclid(2);
        let row = ((j - rect.origin.j) as usize) * w;
        let count_row = j >= count_in.origin.j && j < count_in.origin.j + count_in.height as i64;
        let (ci0, ci1) = (count_in.origin.i, count_in.origin.i + count_in.width as i64);
        let mut i = first;
        while i < i0 + region.width as i64 {
            let k = row + (i - rect.origin.i) as usize;
            let h = values[k];
            let n = values[k + w] + offset - h;
            let s = values[k - w] + offset - h;
            let e = values[k + 1] + offset - h;
            let wv = values[k - 1] + offset - h;
            let outcome = pattern_code(n, wv, e, s).and_then(outcome_of_code);
            let dropped = match outcome {
                Some(Outcome::Stay) => false,
                Some(Outcome::Drop) => true,
                Some(Outcome::Random) => omega.mark(Face::new(i, j), t),
                None => {
                    return Err(Error::Pattern {
                        face: Face::new(i, j),
                        n,
                        w: wv,
                        e,
                        s,
                    })
                }
            };
            if dropped {
                values[k] = h - 4;
            }
            if count_row && i >= ci0 && i < ci1 {
                faces += 1;
                drops += dropped as u64;
            }
            i += 2;
        }
    }
    Ok((faces, drops))
}

/// One shuffle in place. On error the field is left partially updated.
pub(crate) fn shuffle_in_place(field: &mut HeightField, omega: &OmegaSource, t: u64) -> Result<StepStats> {
    let rect = field.rect();
    let margin = field.margin();
    let exhausted = || Error::MarginExhausted {
        rect,
        margin,
        needed: 2,
    };
    let valid = field.valid_rect().ok_or_else(exhausted)?;
    let even_region = valid.shrink(1).ok_or_else(exhausted)?;
    let odd_region = valid.shrink(2).ok_or_else(exhausted)?;
    let values = field.values_mut();
    let (even_faces, even_drops) = update_sublattice(values, rect, even_region, odd_region, 0, 0, omega, t)?;
    let (odd_faces, odd_drops) = update_sublattice(values, rect, odd_region, odd_region, 1, 2, omega, t)?;
    field.set_margin(margin + 2);
    Ok(StepStats {
        even_faces,
        even_drops,
        odd_faces,
        odd_drops,
    })
}

/// Applies shuffle number `t` (marks `omega(., t)`) to an admissible field.
///
/// Even faces are updated from their odd neighbours, then odd faces from the
/// updated even ones. The margin grows by 2.
pub fn shuffle_once(field: &HeightField, omega: &OmegaSource, t: u64) -> Result<HeightField> {
    let mut out = field.clone();
    shuffle_in_place(&mut out, omega, t)?;
    if cfg!(debug_assertions) {
        out.require_admissible()?;
    }
    Ok(out)
}

fn require_margin(field: &HeightField, steps: u64) -> Result<()> {
    let needed = 2 * steps as usize;
    if field.valid_rect().and_then(|r| r.shrink(needed)).is_none() {
        return Err(Error::MarginExhausted {
            rect: field.rect(),
            margin: field.margin(),
            needed,
        });
    }
    Ok(())
}

/// `h(., steps; phi, omega)`, calling `observe(t, field)` after each shuffle
/// (with `t` the number of completed shuffles).
pub fn evolve_with<F>(phi: &HeightField, omega: &OmegaSource, steps: u64, mut observe: F) -> Result<(HeightField, EvolveReport)>
where
    F: FnMut(u64, &HeightField) -> Result<()>,
{
    require_margin(phi, steps)?;
    phi.require_admissible()?;
    let mut field = phi.clone();
    let mut report = EvolveReport {
        steps,
        ..Default::default()
    };
    for t in 0..steps {
        let stats = shuffle_in_place(&mut field, omega, t)?;
        report.decrease_counts.push(stats.drops());
        report.step_stats.push(stats);
        observe(t + 1, &field)?;
    }
    report.final_margin = field.margin();
    Ok((field, report))
}

pub fn evolve(phi: &HeightField, omega: &OmegaSource, steps: u64) -> Result<(HeightField, EvolveReport)> {
    evolve_with(phi, omega, steps, |_, _| Ok(()))
}

/// Evolves several fields on one window with the same marks.
pub fn evolve_coupled(fields: &[HeightField], omega: &OmegaSource, steps: u64) -> Result<Vec<HeightField>> {
    if let Some(first) = fields.first() {
        for f in &fields[1..] {
            if f.rect() != first.rect() {
                return Err(Error::WindowMismatch {
                    left: first.rect(),
                    right: f.rect(),
                });
            }
        }
    }
    fields
        .iter()
        .map(|f| evolve(f, omega, steps).map(|(out, _)| out))
        .collect()
}

/// Streams `t,i,j,h` rows of the valid region.
pub struct TrajectoryCsv<W: Write> {
    out: W,
}

impl<W: Write> TrajectoryCsv<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "t,i,j,h")?;
        Ok(TrajectoryCsv { out })
    }

    pub fn record(&mut self, t: u64, field: &HeightField) -> std::io::Result<()> {
        for (f, h) in field.iter_valid() {
            writeln!(self.out, "{t},{},{},{h}", f.i, f.j)?;
        }
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
