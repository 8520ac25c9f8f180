use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};
use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::equilibrium::{equilibrium_table, hamiltonian, write_table_csv, Slope};
use crate::error::{Error, Result};
use crate::height::{phi_from_profile, pyramid_oracle, HeightField, Profile, SampleGrid};
use crate::lattice::{Face, Rect};
use crate::pde::{dissipation, grid_for, schedule_steps, solve, PdeGrid, PdeParams};
use crate::scaling::{required_window, ContinuousField, Trajectory};
use crate::shuffle::{evolve_with, OmegaSource, TrajectoryCsv};

use super::report::{
    CompareSummary, FieldOutput, Headline, PdeSummary, PyramidSummary, Report, SeedErrors, SeedSimulation,
    SimulateSummary, TableSummary, Timings,
};
use super::{ExperimentConfig, Mode, ProfileSpec};

pub const THREADS_ENV: &str = "DOMINO_HYDRO_THREADS";

/// Worker threads: `DOMINO_HYDRO_THREADS` if set to a positive integer, else all cores.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `f` on a pool capped by [`thread_count`].
pub fn run_in_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs a resolved config; `base` resolves relative profile paths.
pub fn run(cfg: &ExperimentConfig, base: &Path) -> Result<(Report, Vec<FieldOutput>)> {
    let start = Instant::now();
    let (mut report, fields) = run_in_pool(|| match cfg.mode() {
        Mode::Simulate => run_simulate(cfg, base),
        Mode::Pde => run_pde(cfg, base),
        Mode::Compare => run_compare_inner(cfg, base),
        Mode::EquilibriumTable => run_table(cfg),
        Mode::OraclePyramid => run_pyramid(cfg),
    })??;
    report.timings.total_seconds = start.elapsed().as_secs_f64();
    Ok((report, fields))
}

/// Builds `phi_g^n`, evolves every seed, solves the PDE from the same
/// profile and reports `sup |S_n - u|` and the L1 error over `|x|_1 <= R`.
pub fn run_compare(cfg: &ExperimentConfig, base: &Path) -> Result<Report> {
    run(cfg, base).map(|(r, _)| r)
}

fn comparison_grid(cfg: &ExperimentConfig) -> SampleGrid {
    SampleGrid::centered(cfg.radius, cfg.grid_spacing)
}

fn in_region(p: [f64; 2], radius: f64) -> bool {
    p[0].abs() + p[1].abs() <= radius * (1.0 + 1e-12)
}

fn grid_points(grid: &SampleGrid) -> Vec<[f64; 2]> {
    (0..grid.ny).flat_map(|q| (0..grid.nx).map(move |p| grid.node(p, q))).collect()
}

fn pde_params(cfg: &ExperimentConfig) -> PdeParams {
    PdeParams {
        a: cfg.a,
        dx: cfg.pde.dx,
        cfl: cfg.pde.cfl,
        eps: cfg.pde.eps,
    }
}

/// Half-extent the profile must cover for both the lattice window and the PDE grid.
fn profile_extent(cfg: &ExperimentConfig, window: Option<Rect>) -> f64 {
    let params = pde_params(cfg);
    let mut reach = cfg.radius + 1.0;
    if let Some(w) = window {
        let m = w.origin.i.unsigned_abs().max(w.origin.j.unsigned_abs()).max(w.max_face().i.unsigned_abs()).max(w.max_face().j.unsigned_abs());
        reach = reach.max((m + 2) as f64 / cfg.n as f64);
    }
    if matches!(cfg.mode(), Mode::Pde | Mode::Compare) && params.validate().is_ok() {
        let g = grid_for(cfg.radius, cfg.times(), &params);
        reach = reach.max(-g.origin[0] + params.dx);
    }
    reach
}

fn build_profile(cfg: &ExperimentConfig, base: &Path, window: Option<Rect>) -> Result<Profile> {
    let spacing = cfg.projection_spacing.expect("resolved config");
    let extent = profile_extent(cfg, window);
    cfg.profile.build(extent, spacing, base)
}

/// The lattice window: automatic, or the configured half-width if it suffices.
fn lattice_window(cfg: &ExperimentConfig, points: &[[f64; 2]]) -> Result<Rect> {
    let needed = required_window(points, cfg.n, cfg.total_steps())?;
    match cfg.window {
        None => Ok(needed),
        Some(half) => {
            let w = Rect::centered(Face::ORIGIN, half);
            if w.contains_rect(&needed) {
                Ok(w)
            } else {
                let m = needed.origin.i.unsigned_abs().max(needed.origin.j.unsigned_abs()).max(needed.max_face().i.unsigned_abs()).max(needed.max_face().j.unsigned_abs());
                Err(Error::InvalidParameter(format!(
                    "window half-width {half} is too small: the run needs {needed:?}, i.e. a half-width of at least {m}"
                )))
            }
        }
    }
}

/// Shuffles to keep so that every reporting time can be interpolated.
fn kept_steps(cfg: &ExperimentConfig) -> Vec<u64> {
    let n = cfg.n as f64;
    let mut keep: Vec<u64> = cfg
        .times()
        .iter()
        .flat_map(|&t| [(t * n).floor() as u64, (t * n).ceil() as u64])
        .collect();
    keep.sort_unstable();
    keep.dedup();
    keep
}

fn initialization_error(phi: &HeightField, g: &Profile, n: u32, radius: f64) -> f64 {
    let nf = n as f64;
    phi.iter_valid()
        .filter(|(f, _)| in_region([f.i as f64 / nf, f.j as f64 / nf], radius))
        .map(|(f, h)| (h as f64 / nf - g.eval(f.i as f64 / nf, f.j as f64 / nf)).abs())
        .fold(0.0, f64::max)
}

type PdeCache = Mutex<HashMap<String, Arc<Vec<PdeGrid>>>>;

fn pde_cache() -> &'static PdeCache {
    static CACHE: OnceLock<PdeCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Drops PDE solutions memoised by earlier runs in this process.
pub fn clear_pde_cache() {
    pde_cache().lock().expect("pde cache").clear();
}

/// PDE solutions are deterministic in their inputs and expensive; identical
/// requests within one process share a result.
fn cached_pde(cfg: &ExperimentConfig, profile: &Profile) -> Result<(Arc<Vec<PdeGrid>>, PdeSummary)> {
    let params = pde_params(cfg);
    params.validate()?;
    let grid = grid_for(cfg.radius, cfg.times(), &params);
    let times = cfg.times().to_vec();
    let key = serde_json::to_string(&(&cfg.profile, cfg.projection_spacing, params, grid, &times))
        .expect("serialisable key");
    let (alpha_x, alpha_y) = dissipation(params.a, params.eps);
    let cache = pde_cache();
    let hit = cache.lock().expect("pde cache").get(&key).cloned();
    let out = match hit {
        Some(out) => out,
        None => {
            let out = Arc::new(solve(profile, &params, grid, &times)?);
            cache.lock().expect("pde cache").insert(key, out.clone());
            out
        }
    };
    let summary = PdeSummary {
        dx: params.dx,
        cfl: params.cfl,
        eps: params.eps,
        max_dt: params.max_dt(),
        steps: schedule_steps(&times, &params),
        alpha_x,
        alpha_y,
        grid,
        times,
        lipschitz: out.iter().map(PdeGrid::max_lipschitz_ratio).collect(),
    };
    Ok((out, summary))
}

fn affine_speed(cfg: &ExperimentConfig) -> Option<f64> {
    match cfg.profile {
        ProfileSpec::Affine { rho } => hamiltonian(Slope::new(rho[0], rho[1]), cfg.a).ok(),
        _ => None,
    }
}

fn run_compare_inner(cfg: &ExperimentConfig, base: &Path) -> Result<(Report, Vec<FieldOutput>)> {
    let grid = comparison_grid(cfg);
    let points = grid_points(&grid);
    let mask: Vec<bool> = points.iter().map(|&p| in_region(p, cfg.radius)).collect();
    let window = lattice_window(cfg, &points)?;
    let t0 = Instant::now();
    let profile = build_profile(cfg, base, Some(window))?;
    let phi = phi_from_profile(&profile, cfg.n, window)?;
    let init_secs = t0.elapsed().as_secs_f64();
    let init_err = initialization_error(&phi, &profile, cfg.n, cfg.radius);
    let keep = kept_steps(cfg);
    let times = cfg.times().to_vec();

    let t1 = Instant::now();
    let per_seed: Vec<(u64, Vec<Vec<f64>>, f64)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| -> Result<_> {
            let omega = OmegaSource::new(seed, cfg.a);
            let traj = Trajectory::from_initial(&phi, &omega, cfg.n, &keep)?;
            let deviation = traj
                .steps()
                .map(|k| traj.snapshot(k).expect("kept").interpolation_deviation())
                .fold(0.0, f64::max);
            let values = times
                .iter()
                .map(|&t| points.iter().map(|p| traj.eval_at(t, p[0], p[1])).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            Ok((seed, values, deviation))
        })
        .collect::<Result<_>>()?;
    let sim_secs = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let (pde, pde_summary) = cached_pde(cfg, &profile)?;
    let u: Vec<Vec<f64>> = pde
        .iter()
        .map(|snap| points.iter().map(|p| snap.sample(p[0], p[1])).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let pde_secs = t2.elapsed().as_secs_f64();

    let cell = cfg.grid_spacing * cfg.grid_spacing;
    let seeds: Vec<SeedErrors> = per_seed
        .iter()
        .map(|(seed, values, deviation)| {
            let mut sup = Vec::with_capacity(times.len());
            let mut l1 = Vec::with_capacity(times.len());
            for (k, v) in values.iter().enumerate() {
                let (mut s, mut a) = (0.0f64, 0.0f64);
                for ((x, y), &inside) in v.iter().zip(&u[k]).zip(&mask) {
                    if inside {
                        let e = (x - y).abs();
                        s = s.max(e);
                        a += e * cell;
                    }
                }
                sup.push(s);
                l1.push(a);
            }
            SeedErrors {
                seed: *seed,
                sup_overall: sup.iter().copied().fold(0.0, f64::max),
                sup,
                l1,
                interpolation_deviation: *deviation,
            }
        })
        .collect();
    let ns = seeds.len() as f64;
    let mean_sup: Vec<f64> = (0..times.len()).map(|k| seeds.iter().map(|s| s.sup[k]).sum::<f64>() / ns).collect();
    let mean_l1: Vec<f64> = (0..times.len()).map(|k| seeds.iter().map(|s| s.l1[k]).sum::<f64>() / ns).collect();
    let mean_sup_overall = seeds.iter().map(|s| s.sup_overall).sum::<f64>() / ns;

    let mut fields = Vec::new();
    for k in 0..times.len() {
        let mean: Vec<f64> = (0..points.len())
            .map(|p| per_seed.iter().map(|(_, v, _)| v[k][p]).sum::<f64>() / ns)
            .collect();
        fields.push(FieldOutput::grid(format!("sn_mean_t{k}"), "x,y,value", grid, mean, cfg.pgm));
        fields.push(FieldOutput::grid(format!("pde_t{k}"), "x,y,u", grid, u[k].clone(), cfg.pgm));
    }

    let headline = Headline::new("mean_sup_error", mean_sup_overall, cfg.threshold);
    let mut report = Report::new(cfg);
    report.compare = Some(CompareSummary {
        grid,
        radius: cfg.radius,
        points_in_region: mask.iter().filter(|&&m| m).count(),
        times: times.clone(),
        steps: times.iter().map(|t| t * cfg.n as f64).collect(),
        lattice_window: window,
        initialization_error: init_err,
        per_seed: seeds,
        mean_sup,
        mean_l1,
        mean_sup_overall,
        pde: pde_summary,
        affine_speed: affine_speed(cfg),
    });
    report.headline = Some(headline);
    report.timings = Timings {
        initial_seconds: init_secs,
        simulation_seconds: sim_secs,
        pde_seconds: pde_secs,
        total_seconds: 0.0,
    };
    Ok((report, fields))
}

fn run_simulate(cfg: &ExperimentConfig, base: &Path) -> Result<(Report, Vec<FieldOutput>)> {
    let grid = comparison_grid(cfg);
    let points = grid_points(&grid);
    let window = lattice_window(cfg, &points)?;
    let t0 = Instant::now();
    let profile = build_profile(cfg, base, Some(window))?;
    let phi = phi_from_profile(&profile, cfg.n, window)?;
    let init_secs = t0.elapsed().as_secs_f64();
    let steps = cfg.total_steps();
    let final_time = steps as f64 / cfg.n as f64;

    let t1 = Instant::now();
    let runs: Vec<(SeedSimulation, Vec<FieldOutput>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| -> Result<_> {
            let omega = OmegaSource::new(seed, cfg.a);
            let mut traj = if cfg.trajectory { Some(TrajectoryCsv::new(Vec::new()).map_err(|e| Error::io("<trajectory>", e))?) } else { None };
            if let Some(tr) = traj.as_mut() {
                tr.record(0, &phi).map_err(|e| Error::io("<trajectory>", e))?;
            }
            let (last, stats) = evolve_with(&phi, &omega, steps, |t, f| {
                if let Some(tr) = traj.as_mut() {
                    tr.record(t, f).map_err(|e| Error::io("<trajectory>", e))?;
                }
                Ok(())
            })?;
            let scaled = crate::scaling::RescaledField::new(cfg.n, &last)?;
            let values = points.iter().map(|p| scaled.eval(p[0], p[1])).collect::<Result<Vec<_>>>()?;
            let mut outs = vec![FieldOutput::grid(format!("sn_seed{seed}"), "x,y,value", grid, values, cfg.pgm)];
            if cfg.write_heights {
                let mut buf = Vec::new();
                last.write_csv(&mut buf).map_err(|e| Error::io("<heights>", e))?;
                outs.push(FieldOutput::raw(format!("heights_seed{seed}.csv"), buf));
            }
            if let Some(tr) = traj {
                outs.push(FieldOutput::raw(format!("trajectory_seed{seed}.csv"), tr.into_inner()));
            }
            let (mut ed, mut ef, mut ad, mut af) = (0u64, 0u64, 0u64, 0u64);
            for s in &stats.step_stats {
                ed += s.even_drops;
                ef += s.even_faces;
                ad += s.drops();
                af += s.even_faces + s.odd_faces;
            }
            let ratio = |d: u64, f: u64| if f == 0 { 0.0 } else { d as f64 / f as f64 };
            Ok((
                SeedSimulation {
                    seed,
                    steps,
                    even_drop_rate: ratio(ed, ef),
                    drop_rate: ratio(ad, af),
                    decrease_counts: stats.decrease_counts,
                    final_margin: stats.final_margin,
                },
                outs,
            ))
        })
        .collect::<Result<_>>()?;
    let sim_secs = t1.elapsed().as_secs_f64();

    let ns = runs.len() as f64;
    let mean_even = runs.iter().map(|(s, _)| s.even_drop_rate).sum::<f64>() / ns;
    let mean_all = runs.iter().map(|(s, _)| s.drop_rate).sum::<f64>() / ns;
    let speed = affine_speed(cfg);
    let mut report = Report::new(cfg);
    let drift_error = speed.map(|h| (4.0 * mean_even - h).abs());
    report.headline = drift_error.map(|e| Headline::new("drift_error", e, cfg.threshold));
    let mut fields = Vec::new();
    let mut seeds = Vec::new();
    for (s, outs) in runs {
        seeds.push(s);
        fields.extend(outs);
    }
    report.simulate = Some(SimulateSummary {
        lattice_window: window,
        steps,
        final_time,
        per_seed: seeds,
        mean_even_drop_rate: mean_even,
        mean_drop_rate: mean_all,
        speed_estimate: 4.0 * mean_even,
        affine_speed: speed,
        drift_error,
        initialization_error: initialization_error(&phi, &profile, cfg.n, cfg.radius),
    });
    report.timings = Timings {
        initial_seconds: init_secs,
        simulation_seconds: sim_secs,
        ..Timings::default()
    };
    Ok((report, fields))
}

fn run_pde(cfg: &ExperimentConfig, base: &Path) -> Result<(Report, Vec<FieldOutput>)> {
    let grid = comparison_grid(cfg);
    let points = grid_points(&grid);
    let t0 = Instant::now();
    let profile = build_profile(cfg, base, None)?;
    let (pde, summary) = cached_pde(cfg, &profile)?;
    let mut fields = Vec::new();
    for (k, snap) in pde.iter().enumerate() {
        let u = points.iter().map(|p| snap.sample(p[0], p[1])).collect::<Result<Vec<_>>>()?;
        fields.push(FieldOutput::grid(format!("pde_t{k}"), "x,y,u", grid, u, cfg.pgm));
    }
    let mut report = Report::new(cfg);
    let worst = summary.lipschitz.iter().copied().fold(0.0, f64::max);
    report.pde = Some(summary);
    report.headline = Some(Headline::new("max_lipschitz_ratio", worst, cfg.threshold));
    report.timings.pde_seconds = t0.elapsed().as_secs_f64();
    Ok((report, fields))
}

fn run_table(cfg: &ExperimentConfig) -> Result<(Report, Vec<FieldOutput>)> {
    let weights = cfg.table_weights.clone().unwrap_or_else(|| vec![cfg.a]);
    let rows = equilibrium_table(cfg.table_steps, &weights)?;
    let mut buf = Vec::new();
    write_table_csv(&rows, &mut buf).map_err(|e| Error::io("<table>", e))?;
    let mut worst_residual = 0.0f64;
    let mut worst_sum = 0.0f64;
    let mut max_hessdet = f64::NEG_INFINITY;
    for r in &rows {
        if let Some(g) = r.angles {
            worst_residual = worst_residual.max(g.weight_residual(r.a).abs());
            worst_sum = worst_sum.max((g.sum() - std::f64::consts::PI).abs());
        }
        if let Some(d) = r.hessian_det {
            max_hessdet = max_hessdet.max(d);
        }
    }
    let mut report = Report::new(cfg);
    report.table = Some(TableSummary {
        rows: rows.len(),
        weights,
        max_weight_residual: worst_residual,
        max_angle_sum_error: worst_sum,
        max_hessian_det: max_hessdet,
    });
    report.headline = Some(Headline::new("max_weight_residual", worst_residual, cfg.threshold));
    Ok((report, vec![FieldOutput::raw("equilibrium.csv".into(), buf)]))
}

fn run_pyramid(cfg: &ExperimentConfig) -> Result<(Report, Vec<FieldOutput>)> {
    let table = pyramid_oracle(cfg.pyramid_radius)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf).map_err(|e| Error::io("<pyramid>", e))?;
    let entries: Vec<(Face, i32)> = table.entries().collect();
    let mut bound_violations = 0usize;
    let mut even_mismatches = 0usize;
    let mut asymmetric = 0usize;
    for &(x, v) in &entries {
        let cone = -2 * x.linf() as i32;
        if v > cone + 1 {
            bound_violations += 1;
        }
        if x.is_even() != (v == cone) {
            even_mismatches += 1;
        }
        if table.value(-x) != Some(v) {
            asymmetric += 1;
        }
    }
    let admissible = table.field().is_admissible();
    let mut report = Report::new(cfg);
    let failures = bound_violations + even_mismatches + asymmetric + usize::from(!admissible);
    report.pyramid = Some(PyramidSummary {
        radius: cfg.pyramid_radius,
        entries: entries.len(),
        admissible,
        bound_violations,
        even_mismatches,
        asymmetric,
    });
    report.headline = Some(Headline::new("invariant_failures", failures as f64, cfg.threshold.or(Some(0.0))));
    Ok((report, vec![FieldOutput::raw("pyramid.csv".into(), buf)]))
}
