use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::height::SampleGrid;
use crate::lattice::Rect;
use crate::scaling::{write_grid_csv, write_pgm};

use super::ExperimentConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Wall-clock timings. Kept out of `report.json` so the report is a pure
/// function of the config; written to `timings.json` instead.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub initial_seconds: f64,
    pub simulation_seconds: f64,
    pub pde_seconds: f64,
    pub total_seconds: f64,
}

/// The single number a run is judged by, with its optional bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Headline {
    pub metric: String,
    pub value: f64,
    pub threshold: Option<f64>,
    pub pass: bool,
}

impl Headline {
    pub fn new(metric: &str, value: f64, threshold: Option<f64>) -> Self {
        Headline {
            metric: metric.into(),
            value,
            threshold,
            pass: threshold.is_none_or(|t| value <= t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeSummary {
    pub dx: f64,
    pub cfl: f64,
    pub eps: f64,
    pub max_dt: f64,
    /// Steps to reach the final time.
    pub steps: usize,
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub grid: SampleGrid,
    pub times: Vec<f64>,
    /// Largest neighbour difference over `dx` at each time; at most 2 for a 2-Lipschitz solution.
    pub lipschitz: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedErrors {
    pub seed: u64,
    /// `sup |S_n - u|` over the region, per time.
    pub sup: Vec<f64>,
    /// `sum |S_n - u| h^2` over the region, per time.
    pub l1: Vec<f64>,
    pub sup_overall: f64,
    /// Largest `|psi - values|` at even faces over the kept snapshots.
    pub interpolation_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummary {
    pub grid: SampleGrid,
    pub radius: f64,
    pub points_in_region: usize,
    pub times: Vec<f64>,
    /// `n t` for each time.
    pub steps: Vec<f64>,
    pub lattice_window: Rect,
    /// `max |phi / n - g|` at faces in the region.
    pub initialization_error: f64,
    pub per_seed: Vec<SeedErrors>,
    pub mean_sup: Vec<f64>,
    pub mean_l1: Vec<f64>,
    pub mean_sup_overall: f64,
    pub pde: PdeSummary,
    /// `H(rho)` for affine data.
    pub affine_speed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSimulation {
    pub seed: u64,
    pub steps: u64,
    pub even_drop_rate: f64,
    pub drop_rate: f64,
    pub decrease_counts: Vec<u64>,
    pub final_margin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub lattice_window: Rect,
    pub steps: u64,
    pub final_time: f64,
    pub per_seed: Vec<SeedSimulation>,
    pub mean_even_drop_rate: f64,
    pub mean_drop_rate: f64,
    /// `4 x mean even drop rate`, the empirical speed.
    pub speed_estimate: f64,
    pub affine_speed: Option<f64>,
    pub drift_error: Option<f64>,
    pub initialization_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableSummary {
    pub rows: usize,
    pub weights: Vec<f64>,
    pub max_weight_residual: f64,
    pub max_angle_sum_error: f64,
    pub max_hessian_det: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PyramidSummary {
    pub radius: usize,
    pub entries: usize,
    pub admissible: bool,
    pub bound_violations: usize,
    pub even_mismatches: usize,
    pub asymmetric: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub headline: Option<Headline>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pde: Option<PdeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<TableSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pyramid: Option<PyramidSummary>,
    #[serde(skip)]
    pub timings: Timings,
}

impl Report {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            config: cfg.clone(),
            headline: None,
            compare: None,
            simulate: None,
            pde: None,
            table: None,
            pyramid: None,
            timings: Timings::default(),
        }
    }

    /// False only when a threshold was set and exceeded.
    pub fn passed(&self) -> bool {
        self.headline.as_ref().is_none_or(|h| h.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

/// A field to write next to the report.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldOutput {
    /// Values on a sample grid, written as `<name>.csv` and optionally `<name>.pgm`.
    Grid {
        name: String,
        header: &'static str,
        grid: SampleGrid,
        values: Vec<f64>,
        pgm: bool,
    },
    /// Pre-rendered bytes written to `file`.
    Raw { file: String, bytes: Vec<u8> },
}

impl FieldOutput {
    pub fn grid(name: String, header: &'static str, grid: SampleGrid, values: Vec<f64>, pgm: bool) -> Self {
        FieldOutput::Grid {
            name,
            header,
            grid,
            values,
            pgm,
        }
    }

    pub fn raw(file: String, bytes: Vec<u8>) -> Self {
        FieldOutput::Raw { file, bytes }
    }
}

fn write_file(path: PathBuf, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes `report.json`, `timings.json` and every field into `dir`,
/// returning the paths written.
pub fn emit_outputs(report: &Report, fields: &[FieldOutput], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    write_file(dir.join("report.json"), report.to_json().as_bytes(), &mut written)?;
    let timings = serde_json::to_string_pretty(&report.timings).expect("timings serialise") + "\n";
    write_file(dir.join("timings.json"), timings.as_bytes(), &mut written)?;
    for field in fields {
        match field {
            FieldOutput::Grid {
                name,
                header,
                grid,
                values,
                pgm,
            } => {
                let mut csv = Vec::new();
                write_grid_csv(grid, values, header, &mut csv).map_err(|e| Error::io(dir.join(name), e))?;
                write_file(dir.join(format!("{name}.csv")), &csv, &mut written)?;
                if *pgm {
                    let mut img = Vec::new();
                    write_pgm(grid, values, &mut img).map_err(|e| Error::io(dir.join(name), e))?;
                    write_file(dir.join(format!("{name}.pgm")), &img, &mut written)?;
                }
            }
            FieldOutput::Raw { file, bytes } => write_file(dir.join(file), bytes, &mut written)?,
        }
    }
    Ok(written)
}
