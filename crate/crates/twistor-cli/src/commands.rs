//! Subcommands other than `verify`.

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{self, Output, Summary};
use serde::Serialize;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use twistor_core::atlas::{
    classify, p_closed_form, p_conjugation, sample_d_point, scan, scan_points, scan_row, special_set_detect, RectPoint,
    CLASSIFY_TOL,
};
use twistor_core::cp3::WeightPair;
use twistor_core::curve::grid::{
    flatness_from_residual, flatness_residual, gauss_curvature, residual_convergence_order, second_ff_magnitudes,
    toda_pde_residual,
};
use twistor_core::curve::{aligned_initial_frame, reconstruct_u1_curve, AngleField, CurveError};
use twistor_core::exec::Execution;
use twistor_core::io;
use twistor_core::sampling::rng_for;
use twistor_core::toda::{integrate, measured, Integrator, TodaError, TodaParams, TodaState, Trajectory};

/// Tolerance on `|H2 - 64 C^2|` along `l4` flow lines, relative to `max(1, H2)`.
const DIAGONAL_TOL: f64 = 1e-8;
/// Frame unitarity bound after drift control.
const FRAME_UNITARITY_TOL: f64 = 1e-8;
/// Round-trip tolerance for reconstructed `p` values.
const ROUND_TRIP_TOL: f64 = 1e-6;

fn toda_err(e: TodaError) -> CliError {
    CliError::Invalid(e.to_string())
}

/// Initial state from `--state`, `--point` or a seeded draw in D, with matching parameters.
fn initial_condition(cfg: &RunConfig, w: WeightPair) -> Result<(TodaState, TodaParams), CliError> {
    let s = if let Some(s) = cfg.toda_state()? {
        s
    } else if let Some(x) = cfg.cp3_point()? {
        p_conjugation(&x, w).map_err(|e| CliError::Invalid(format!("point: {e}")))?.state
    } else {
        sample_d_point(&mut rng_for(cfg.seed, 0), w, 0.05).1.state
    };
    let p = match cfg.c2 {
        Some(c2) => TodaParams::new(c2, cfg.mu.unwrap_or(0.0)).map_err(toda_err)?,
        None => {
            let p =
                TodaParams::from_d(&s, w).map_err(|e| CliError::Invalid(format!("initial state outside D: {e}")))?;
            if let Some(mu) = cfg.mu {
                if (mu - p.mu()).abs() > 1e-9 {
                    log::warn!("--mu {mu} ignored: the initial state fixes mu = {}", p.mu());
                }
            }
            p
        }
    };
    Ok((s, p))
}

fn run_trajectory(cfg: &RunConfig, s: &TodaState, p: &TodaParams, method: Integrator) -> Result<Trajectory, CliError> {
    integrate(s, p, method, cfg.dt, cfg.t_end, cfg.stride).map_err(toda_err)
}

pub fn integrate_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let w = cfg.weights()?;
    let (s, p) = initial_condition(cfg, w)?;
    let traj = run_trajectory(cfg, &s, &p, cfg.method)?;
    let [d1, d2, d3] = traj.max_relative_drift();
    let mut summary = Summary::default();
    summary
        .add("rows", traj.states.len())
        .add("dt_used", traj.dt)
        .add("max_rel_drift_H1", d1)
        .add("max_rel_drift_H2", d2)
        .add("max_rel_drift_C2", d3);
    Ok(Output { summary, data: output::rows(cfg.format, &traj.rows())?, failure: None })
}

pub fn scan_cmd(cfg: &RunConfig, exec: Execution) -> Result<Output, CliError> {
    let w = cfg.weights()?;
    let rep = match cfg.cp3_point()? {
        Some(x) => scan_points(&[x], w, exec),
        None => scan(cfg.seed, cfg.samples, w, exec),
    };
    let mut summary = Summary::default();
    summary
        .add("rows", rep.rows.len())
        .add("skipped_singular", rep.skipped_singular)
        .add("outside_rectangle", rep.outside)
        .add("containment_rate", rep.containment_rate())
        .add("max_two_path_deviation", rep.max_two_path_deviation);
    Ok(Output { summary, data: output::rows(cfg.format, &rep.rows)?, failure: None })
}

#[derive(Serialize)]
struct ClassifyRow {
    #[serde(rename = "H2")]
    h2: f64,
    #[serde(rename = "C2x64")]
    c2x64: f64,
    edge_class: &'static str,
    on_t: Option<bool>,
    on_quadric: Option<bool>,
    on_branch_locus: Option<bool>,
    clifford_orbit: Option<bool>,
}

pub fn classify_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let w = cfg.weights()?;
    let row = match (cfg.cp3_point()?, cfg.rect) {
        (Some(x), _) => {
            let r = scan_row(&x, w).map_err(|e| CliError::Invalid(e.to_string()))?;
            let sp = special_set_detect(&x, w, CLASSIFY_TOL);
            ClassifyRow {
                h2: r.h2,
                c2x64: r.c2x64,
                edge_class: r.edge_class.as_str(),
                on_t: Some(sp.on_t),
                on_quadric: Some(sp.on_quadric),
                on_branch_locus: Some(sp.on_branch_locus),
                clifford_orbit: Some(sp.clifford_orbit),
            }
        }
        (None, Some([h2, x])) => {
            let r = RectPoint { h2, sixty_four_c2: x };
            let class = classify(&r, w, CLASSIFY_TOL).map_err(|e| CliError::Invalid(e.to_string()))?;
            ClassifyRow {
                h2,
                c2x64: x,
                edge_class: class.as_str(),
                on_t: None,
                on_quadric: None,
                on_branch_locus: None,
                clifford_orbit: None,
            }
        }
        (None, None) => return Err(CliError::Invalid("classify needs --point or --rect".into())),
    };
    let mut summary = Summary::default();
    summary.add("edge_class", row.edge_class);
    Ok(Output { summary, data: output::rows(cfg.format, &[row])?, failure: None })
}

#[derive(Serialize)]
struct PdeRow {
    field: String,
    nx: usize,
    ny: usize,
    toda_residual_max: f64,
    flatness_max: f64,
    flatness_gap_max: f64,
    gauss_max_abs: f64,
    ii2_min: f64,
    convergence_order: Option<f64>,
}

fn pde_row(name: &str, a: &AngleField, order: Option<f64>, exec: Execution) -> PdeRow {
    let r = toda_pde_residual(a, exec);
    let f = flatness_residual(a, exec);
    let gap = (0..a.len()).map(|i| (f[i] - flatness_from_residual(r.minus[i], r.plus[i])).abs()).fold(0.0, f64::max);
    PdeRow {
        field: name.to_string(),
        nx: a.nx(),
        ny: a.ny(),
        toda_residual_max: r.max_norm,
        flatness_max: f.iter().cloned().fold(0.0, f64::max),
        flatness_gap_max: gap,
        gauss_max_abs: gauss_curvature(a, exec).iter().map(|k| k.abs()).fold(0.0, f64::max),
        ii2_min: second_ff_magnitudes(a, exec).ii2.iter().cloned().fold(f64::INFINITY, f64::min),
        convergence_order: order,
    }
}

fn curve_err(e: CurveError) -> CliError {
    CliError::Invalid(e.to_string())
}

/// Smooth perturbation of the flat solution used for refinement studies.
fn bump(x: f64, y: f64) -> (f64, f64) {
    let s = (2.0 * PI * x).sin() * (2.0 * PI * y).cos();
    ((0.1 * s).exp() * FRAC_1_SQRT_2, (0.1 * s).exp() * FRAC_1_SQRT_2 * (1.0 + 0.05 * (2.0 * PI * x).cos()))
}

pub fn pde_check_cmd(cfg: &RunConfig, exec: Execution) -> Result<Output, CliError> {
    let n = cfg.grid_n;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    if let Some(path) = &cfg.grid {
        let file = std::fs::File::open(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        let a = io::read_grid_json(std::io::BufReader::new(file)).map_err(|e| CliError::Invalid(e.to_string()))?;
        rows.push(pde_row(&path.display().to_string(), &a, None, exec));
    } else {
        let flat = AngleField::constant_squares(n, 1.0, 0.5, 0.5).map_err(curve_err)?;
        let flat_row = pde_row("clifford", &flat, None, exec);
        if flat_row.toda_residual_max != 0.0 || flat_row.gauss_max_abs != 0.0 {
            failures.push("clifford_field_exact");
        }
        rows.push(flat_row);
        let c = AngleField::constant(n, 1.0, 0.8, 0.8).map_err(curve_err)?;
        rows.push(pde_row("constant-0.8", &c, None, exec));
        let order = residual_convergence_order(n, 1.0, 1.0, bump, exec).map_err(curve_err)?;
        if (order - 2.0).abs() > 0.1 {
            failures.push("residual_convergence_order");
        }
        let b = AngleField::from_fn(n, n, 1.0, 1.0, bump).map_err(curve_err)?;
        rows.push(pde_row("bump", &b, Some(order), exec));
    }
    let mut summary = Summary::default();
    summary.add("fields", rows.len()).add("failed", &failures);
    let failure = (!failures.is_empty()).then(|| failures.join(", "));
    Ok(Output { summary, data: output::rows(cfg.format, &rows)?, failure })
}

pub fn reconstruct_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let w = cfg.weights()?;
    if cfg.c2.is_some() {
        return Err(CliError::Invalid("reconstruct reads C^2 from the initial state; drop --c2".into()));
    }
    if cfg.method != Integrator::Rk4 {
        log::warn!("reconstruct integrates with rk4; --method ignored");
    }
    let (s, p) = initial_condition(cfg, w)?;
    let traj = run_trajectory(cfg, &s, &p, Integrator::Rk4)?;
    let phi0 = aligned_initial_frame(&s, &p).map_err(curve_err)?;
    let path = reconstruct_u1_curve(&traj, &phi0).map_err(curve_err)?;
    let mut dev = 0.0f64;
    for (x, st) in path.points.iter().zip(&traj.states) {
        let d = p_closed_form(x, w).map_err(|e| CliError::Property(format!("round trip: {e}")))?;
        dev = dev.max(d.state.max_rel_diff(st));
    }
    let mut summary = Summary::default();
    summary
        .add("frames", path.frames.len())
        .add("max_unitarity_defect", path.max_unitarity_defect)
        .add("max_step_drift", path.max_step_drift)
        .add("round_trip_max_rel_dev", dev);
    let mut failed = Vec::new();
    if path.max_unitarity_defect > FRAME_UNITARITY_TOL {
        failed.push("frame_unitarity");
    }
    if dev > ROUND_TRIP_TOL {
        failed.push("round_trip");
    }
    let data = output::table(cfg.format, &io::frame_header(), &io::frame_rows(&path))?;
    Ok(Output { summary, data, failure: (!failed.is_empty()).then(|| failed.join(", ")) })
}

#[derive(Serialize, Clone)]
struct FlowRow {
    line: usize,
    t: f64,
    v: f64,
    r: f64,
    #[serde(rename = "H2")]
    h2: f64,
    #[serde(rename = "C2x64")]
    c2x64: f64,
    disk_slack: f64,
}

/// `8 v (k^2 + m^2 - 2v - r^2/2) - (k^2 - m^2)^2`, nonnegative on the closed disk.
fn disk_slack(v: f64, r: f64, w: WeightPair) -> f64 {
    8.0 * v * (w.sum_sq() - 2.0 * v - 0.5 * r * r) - w.diff_sq().powi(2)
}

fn flow_seeds(cfg: &RunConfig, w: WeightPair) -> Vec<(f64, f64)> {
    use rand::Rng;
    let (s, d) = (w.sum_sq(), w.diff_sq());
    let v_edge = (s - (s * s - d * d).sqrt()) / 4.0;
    let mut seeds = vec![(s / 4.0, 0.0), (v_edge * 1.01, 0.0)];
    let mut i = 0u64;
    while seeds.len() < cfg.samples.max(2) {
        let mut rng = rng_for(cfg.seed, i);
        i += 1;
        let v = rng.gen_range(0.0..s / 2.0);
        let r = rng.gen_range(-(2.0 * s).sqrt()..(2.0 * s).sqrt());
        if disk_slack(v, r, w) > 1e-3 {
            seeds.push((v, r));
        }
    }
    seeds.truncate(cfg.samples.max(2));
    seeds
}

pub fn flowlines_cmd(cfg: &RunConfig, exec: Execution) -> Result<Output, CliError> {
    let w = cfg.weights()?;
    let seeds = flow_seeds(cfg, w);
    let lines = exec.map_slice(&seeds, |&(v, r)| -> Result<Vec<FlowRow>, CliError> {
        let s = TodaState::new(v, v, r, r).map_err(toda_err)?;
        let p = TodaParams::from_d(&s, w).map_err(toda_err)?;
        let traj = run_trajectory(cfg, &s, &p, cfg.method)?;
        Ok(traj
            .ts
            .iter()
            .zip(&traj.states)
            .map(|(&t, x)| {
                let c = measured(x, &p).0;
                FlowRow {
                    line: 0,
                    t,
                    v: x.v_minus,
                    r: x.r_minus,
                    h2: c.h2,
                    c2x64: 64.0 * c.c2,
                    disk_slack: disk_slack(x.v_minus, x.r_minus, w),
                }
            })
            .collect())
    });
    let mut rows = Vec::new();
    for (i, l) in lines.into_iter().enumerate() {
        rows.extend(l?.into_iter().map(|r| FlowRow { line: i, ..r }));
    }
    let off = rows.iter().map(|r| (r.h2 - r.c2x64).abs() / r.h2.abs().max(1.0)).fold(0.0, f64::max);
    let min_slack = rows.iter().map(|r| r.disk_slack).fold(f64::INFINITY, f64::min);
    let mut summary = Summary::default();
    summary
        .add("lines", seeds.len())
        .add("rows", rows.len())
        .add("max_off_diagonal", off)
        .add("min_disk_slack", min_slack);
    let failure = (off > DIAGONAL_TOL).then(|| "flow left the diagonal H2 = 64C^2".to_string());
    Ok(Output { summary, data: output::rows(cfg.format, &rows)?, failure })
}
