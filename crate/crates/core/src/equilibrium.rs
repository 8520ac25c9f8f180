//! Closed-form equilibrium quantities at slope `rho` for vertical edge weight `a`.
//!
//! The Gibbs measure of slope `rho` is parametrised by four angles of a
//! cyclic quadrilateral, `alpha + beta + gamma + delta = pi`. The speed
//! `H(rho)` is four times the probability that the centre of a face drops.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slope {
    pub rho1: f64,
    pub rho2: f64,
}

impl Slope {
    pub fn new(rho1: f64, rho2: f64) -> Self {
        Slope { rho1, rho2 }
    }

    pub fn l1(&self) -> f64 {
        self.rho1.abs() + self.rho2.abs()
    }

    fn require_in_u(&self) -> Result<()> {
        if self.rho1.is_finite() && self.rho2.is_finite() && self.l1() <= 2.0 {
            Ok(())
        } else {
            Err(Error::SlopeOutsideU(self.rho1, self.rho2))
        }
    }

    fn require_interior(&self) -> Result<()> {
        if self.rho1.is_finite() && self.rho2.is_finite() && self.l1() < 2.0 {
            Ok(())
        } else {
            Err(Error::SlopeNotInterior(self.rho1, self.rho2))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl GibbsAngles {
    pub fn sum(&self) -> f64 {
        self.alpha + self.beta + self.gamma + self.delta
    }

    /// `sin(beta) sin(delta) - a sin(alpha) sin(gamma)`, zero at equilibrium.
    pub fn weight_residual(&self, a: f64) -> f64 {
        self.beta.sin() * self.delta.sin() - a * self.alpha.sin() * self.gamma.sin()
    }

    /// The slope these angles describe: `(2(beta - delta)/pi, 2(gamma - alpha)/pi)`.
    pub fn slope(&self) -> Slope {
        Slope::new(2.0 * (self.beta - self.delta) / PI, 2.0 * (self.gamma - self.alpha) / PI)
    }
}

/// Single-site and pair probabilities at a face of the Gibbs measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalProbs {
    pub p_n: f64,
    pub p_e: f64,
    pub p_s: f64,
    pub p_w: f64,
    pub p_ns: f64,
    pub p_ew: f64,
}

fn require_weight(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("weight a must be positive, got {a}")))
    }
}

fn m_coefficient(rho: Slope, a: f64) -> f64 {
    let c1 = (PI * rho.rho1 / 2.0).cos();
    let c2 = (PI * rho.rho2 / 2.0).cos();
    ((c1 - a * c2) / (1.0 + a)).clamp(-1.0, 1.0)
}

pub fn solve_angles(rho: Slope, a: f64) -> Result<GibbsAngles> {
    rho.require_interior()?;
    require_weight(a)?;
    let m = m_coefficient(rho, a);
    let half_p = 0.5 * m.acos();
    let half_m = 0.5 * (-m).acos();
    Ok(GibbsAngles {
        alpha: -PI * rho.rho2 / 4.0 + half_m,
        beta: PI * rho.rho1 / 4.0 + half_p,
        gamma: PI * rho.rho2 / 4.0 + half_m,
        delta: -PI * rho.rho1 / 4.0 + half_p,
    })
}

/// Angles found by bisection on `s = beta + delta` instead of the closed form.
///
/// With `beta - delta` and `gamma - alpha` fixed by the slope,
/// `sin(beta) sin(delta) = (cos(pi rho1/2) - cos s)/2` increases and
/// `sin(alpha) sin(gamma) = (cos(pi rho2/2) + cos s)/2` decreases in `s`,
/// so the root of the weight equation is unique.
pub fn solve_angles_bisection(rho: Slope, a: f64) -> Result<GibbsAngles> {
    rho.require_interior()?;
    require_weight(a)?;
    let d1 = PI * rho.rho1 / 2.0;
    let d2 = PI * rho.rho2 / 2.0;
    let angles = |s: f64| {
        let t = PI - s;
        GibbsAngles {
            alpha: (t - d2) / 2.0,
            beta: (s + d1) / 2.0,
            gamma: (t + d2) / 2.0,
            delta: (s - d1) / 2.0,
        }
    };
    let (mut lo, mut hi) = (d1.abs(), PI - d2.abs());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if angles(mid).weight_residual(a) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * PI {
            break;
        }
    }
    Ok(angles(0.5 * (lo + hi)))
}

pub fn local_probs(angles: &GibbsAngles) -> LocalProbs {
    let GibbsAngles {
        alpha,
        beta,
        gamma,
        delta,
    } = *angles;
    let sin_ag = alpha.sin() * gamma.sin();
    let sin_bd = beta.sin() * delta.sin();
    let pi2 = PI * PI;
    LocalProbs {
        p_n: alpha / PI,
        p_e: beta / PI,
        p_s: gamma / PI,
        p_w: delta / PI,
        p_ns: (alpha * gamma + sin_ag / sin_bd * beta * delta) / pi2,
        p_ew: (beta * delta + sin_bd / sin_ag * alpha * gamma) / pi2,
    }
}

/// `H(rho) = (4/pi) acos((a/(1+a)) cos(pi rho2/2) - (1/(1+a)) cos(pi rho1/2))`, defined on all of `U`.
pub fn hamiltonian(rho: Slope, a: f64) -> Result<f64> {
    rho.require_in_u()?;
    require_weight(a)?;
    Ok(hamiltonian_unchecked(rho.rho1, rho.rho2, a))
}

/// `H` without domain checks; the caller keeps `(p1, p2)` inside `U`.
#[inline]
pub fn hamiltonian_unchecked(p1: f64, p2: f64, a: f64) -> f64 {
    let c1 = (PI * p1 / 2.0).cos();
    let c2 = (PI * p2 / 2.0).cos();
    let arg = ((a * c2 - c1) / (1.0 + a)).clamp(-1.0, 1.0);
    4.0 / PI * arg.acos()
}

pub fn hessian_det(rho: Slope, a: f64) -> Result<f64> {
    rho.require_interior()?;
    require_weight(a)?;
    let c1 = (PI * rho.rho1 / 2.0).cos();
    let c2 = (PI * rho.rho2 / 2.0).cos();
    let num = a * PI * (c1 + c2);
    let den = (a + 1.0).powi(2) - (c1 - a * c2).powi(2);
    Ok(-(num / den).powi(2))
}

/// Edge weights of a face after a spider move: `(c, d, a, b) / (ac + bd)`.
pub fn spider_weights(a: f64, b: f64, c: f64, d: f64) -> Result<[f64; 4]> {
    for (name, w) in [("a", a), ("b", b), ("c", c), ("d", d)] {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!("spider weight {name} must be positive, got {w}")));
        }
    }
    let delta = a * c + b * d;
    Ok([c / delta, d / delta, a / delta, b / delta])
}

/// One row of the equilibrium table; `None` fields are undefined on the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    pub rho: Slope,
    pub a: f64,
    pub angles: Option<GibbsAngles>,
    pub h: f64,
    pub hessian_det: Option<f64>,
}

/// Tabulates every `(rho1, rho2)` of the uniform `(2 steps + 1)^2` grid on
/// `[-2, 2]^2` that lies in `U`.
pub fn equilibrium_table(steps: usize, weights: &[f64]) -> Result<Vec<TableRow>> {
    if steps == 0 {
        return Err(Error::InvalidParameter("table needs at least one step".into()));
    }
    let mut rows = Vec::new();
    for &a in weights {
        require_weight(a)?;
        for q in 0..=2 * steps {
            for p in 0..=2 * steps {
                let rho = Slope::new(
                    2.0 * (p as f64 - steps as f64) / steps as f64,
                    2.0 * (q as f64 - steps as f64) / steps as f64,
                );
                if rho.l1() > 2.0 + 1e-12 {
                    continue;
                }
                rows.push(TableRow {
                    rho,
                    a,
                    angles: solve_angles(rho, a).ok(),
                    h: hamiltonian(rho, a)?,
                    hessian_det: hessian_det(rho, a).ok(),
                });
            }
        }
    }
    Ok(rows)
}

/// CSV `rho1,rho2,a,alpha,beta,gamma,delta,H,hessdet`; undefined cells are empty.
pub fn write_table_csv(rows: &[TableRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "rho1,rho2,a,alpha,beta,gamma,delta,H,hessdet")?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
    for r in rows {
        let ang = r.angles;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.12e},{}",
            r.rho.rho1,
            r.rho.rho2,
            r.a,
            opt(ang.map(|g| g.alpha)),
            opt(ang.map(|g| g.beta)),
            opt(ang.map(|g| g.gamma)),
            opt(ang.map(|g| g.delta)),
            r.h,
            opt(r.hessian_det),
        )?;
    }
    Ok(())
}
