//! Experiment configuration, runs and reproducible outputs.

mod profiles;
mod report;
mod run;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use profiles::ProfileSpec;
pub use report::{emit_outputs, FieldOutput, Report, Timings, SCHEMA_VERSION};
pub use run::{clear_pde_cache, run, run_compare, run_in_pool, thread_count, THREADS_ENV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Pde,
    Compare,
    EquilibriumTable,
    OraclePyramid,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Pde => "pde",
            Mode::Compare => "compare",
            Mode::EquilibriumTable => "equilibrium-table",
            Mode::OraclePyramid => "oracle-pyramid",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidParameter(format!("unknown mode {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSettings {
    #[serde(default = "defaults::dx")]
    pub dx: f64,
    #[serde(default = "defaults::cfl")]
    pub cfl: f64,
    #[serde(default = "defaults::eps")]
    pub eps: f64,
}

impl Default for PdeSettings {
    fn default() -> Self {
        PdeSettings {
            dx: defaults::dx(),
            cfl: defaults::cfl(),
            eps: defaults::eps(),
        }
    }
}

mod defaults {
    pub fn a() -> f64 {
        1.0
    }
    pub fn n() -> u32 {
        128
    }
    pub fn t() -> f64 {
        0.5
    }
    pub fn seeds() -> Vec<u64> {
        (0..8).collect()
    }
    pub fn radius() -> f64 {
        2.0
    }
    pub fn grid_spacing() -> f64 {
        1.0 / 16.0
    }
    pub fn dx() -> f64 {
        1.0 / 128.0
    }
    pub fn cfl() -> f64 {
        0.9
    }
    pub fn eps() -> f64 {
        0.01
    }
    pub fn table_steps() -> usize {
        20
    }
    pub fn pyramid_radius() -> usize {
        16
    }
}

/// A JSON experiment description. Every omitted field takes its default,
/// and the resolved config is echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default = "defaults::a")]
    pub a: f64,
    #[serde(default = "defaults::n")]
    pub n: u32,
    /// Final time.
    #[serde(rename = "T", default = "defaults::t")]
    pub t_max: f64,
    /// Reporting times; defaults to `[T]`.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default = "defaults::seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_profile")]
    pub profile: ProfileSpec,
    /// Reporting region `|x|_1 <= R`.
    #[serde(rename = "R", default = "defaults::radius")]
    pub radius: f64,
    /// Spacing of the comparison grid.
    #[serde(default = "defaults::grid_spacing")]
    pub grid_spacing: f64,
    /// Half-width in faces of the initial lattice window; sized automatically when omitted.
    #[serde(default)]
    pub window: Option<usize>,
    #[serde(default)]
    pub pde: PdeSettings,
    /// Spacing of the Lipschitz projection grid; defaults to the finest of `1/n`, `dx`, `grid_spacing`.
    #[serde(default)]
    pub projection_spacing: Option<f64>,
    /// Upper bound on the headline metric; exceeding it is an acceptance failure.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub pgm: bool,
    /// Also write `i,j,h` heights of each seed's final field.
    #[serde(default)]
    pub write_heights: bool,
    /// Also write per-shuffle `t,i,j,h` trajectories (large).
    #[serde(default)]
    pub trajectory: bool,
    #[serde(default = "defaults::table_steps")]
    pub table_steps: usize,
    /// Weights for the equilibrium table; defaults to `[a]`.
    #[serde(default)]
    pub table_weights: Option<Vec<f64>>,
    #[serde(default = "defaults::pyramid_radius")]
    pub pyramid_radius: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_profile() -> ProfileSpec {
    ProfileSpec::Affine { rho: [0.0, 0.0] }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            context: "experiment config".into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                context: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    /// Fills in mode-independent defaults, sorts the times and checks ranges.
    pub fn resolve(mut self, mode: Option<Mode>) -> Result<Self> {
        match (self.mode, mode) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::InvalidParameter(format!(
                    "config mode {} conflicts with requested mode {}",
                    a.name(),
                    b.name()
                )))
            }
            (None, None) => return Err(Error::InvalidParameter("no mode given".into())),
            (None, Some(b)) => self.mode = Some(b),
            _ => {}
        }
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.a > 0.0 && self.a.is_finite()) {
            return bad(format!("a must be positive, got {}", self.a));
        }
        if self.n < 4 {
            return bad(format!("n must be at least 4, got {}", self.n));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return bad(format!("T must be nonnegative, got {}", self.t_max));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("R must be positive, got {}", self.radius));
        }
        if !(self.grid_spacing > 0.0 && self.grid_spacing.is_finite()) {
            return bad(format!("grid_spacing must be positive, got {}", self.grid_spacing));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        let mut times = self.times.take().unwrap_or_else(|| vec![self.t_max]);
        if times.iter().any(|t| !(*t >= 0.0 && *t <= self.t_max)) {
            return bad(format!("times must lie in [0, T = {}], got {times:?}", self.t_max));
        }
        times.sort_by(f64::total_cmp);
        times.dedup();
        self.times = Some(times);
        if self.table_weights.is_none() {
            self.table_weights = Some(vec![self.a]);
        }
        if self.projection_spacing.is_none() {
            let finest = (1.0 / self.n as f64).min(self.pde.dx).min(self.grid_spacing);
            self.projection_spacing = Some(finest);
        }
        Ok(self)
    }

    pub fn mode(&self) -> Mode {
        self.mode.expect("resolved config has a mode")
    }

    pub fn times(&self) -> &[f64] {
        self.times.as_deref().unwrap_or(&[])
    }

    /// Shuffles needed to reach `T`.
    pub fn total_steps(&self) -> u64 {
        (self.t_max * self.n as f64).ceil() as u64
    }
}
