//! `verify`: seeded property checks across all modules.

use crate::config::{Fault, RunConfig};
use crate::error::CliError;
use crate::output::{self, Output, Summary};
use serde::Serialize;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use twistor_core::atlas::{p_closed_form, sample_d_point, scan};
use twistor_core::cp3::{c_f, invariants, WeightPair};
use twistor_core::curve::grid::{gauss_curvature, residual_convergence_order, toda_pde_residual};
use twistor_core::curve::{aligned_initial_frame, reconstruct_u1_curve, AngleField};
use twistor_core::exec::Execution;
use twistor_core::quat::{c4, eigenvalues, Spectrum};
use twistor_core::sampling::{self, rng_for, sample_seed, SampleRng};
use twistor_core::toda::{
    build_lax, conserved_with, h1_with, h2_with, integrate, lax_spectrum_formula, measured, H2Form, Integrator,
    TodaParams, TodaState,
};

#[derive(Serialize)]
struct PropertyRow {
    module: &'static str,
    property: &'static str,
    passed: bool,
    value: f64,
    tolerance: f64,
    samples: usize,
}

struct Ctx {
    seed: u64,
    samples: usize,
    trajectories: usize,
    t_end: f64,
    w: WeightPair,
    exec: Execution,
    fault: Option<Fault>,
}

impl Ctx {
    fn rng(&self, property: u64, i: usize) -> SampleRng {
        rng_for(sample_seed(self.seed, 1 << 32 | property), i as u64)
    }

    /// Maximum of `f(rng_i)` over `n` seeded samples.
    fn max_over(&self, property: u64, n: usize, f: impl Fn(&mut SampleRng) -> f64 + Sync + Send) -> f64 {
        self.exec.map_range(n, |i| f(&mut self.rng(property, i))).into_iter().fold(0.0, |a, b| {
            if b.is_nan() || a.is_nan() {
                f64::NAN
            } else {
                a.max(b)
            }
        })
    }

    fn trajectory_starts(&self, property: u64) -> Vec<TodaState> {
        (0..self.trajectories).map(|i| sample_d_point(&mut self.rng(property, i), self.w, 0.05).1.state).collect()
    }
}

type Check = fn(&Ctx) -> (f64, usize);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn norm_multiplicative(c: &Ctx) -> (f64, usize) {
    let v = c.max_over(0, c.samples, |r| {
        let (p, q) = (sampling::quaternion(r), sampling::quaternion(r));
        rel((p * q).norm(), p.norm() * q.norm())
    });
    (v, c.samples)
}

fn embedding_homomorphism(c: &Ctx) -> (f64, usize) {
    let v = c.max_over(1, c.samples, |r| {
        let (a, b) = (sampling::quat_mat(r), sampling::quat_mat(r));
        let lhs = (a * b).embed_c4();
        let rhs = c4::mul(&a.embed_c4(), &b.embed_c4());
        c4::max_abs_diff(&lhs, &rhs) / (1.0 + a.norm() * b.norm())
    });
    (v, c.samples)
}

fn spectrum_conjugation_invariant(c: &Ctx) -> (f64, usize) {
    let v = c.max_over(2, c.samples, |r| {
        let x = sampling::sp2_algebra(r);
        let g = sampling::sp2_group(r);
        eigenvalues(&x.conjugate_by(&g)).max_diff(&eigenvalues(&x)) / (1.0 + x.norm())
    });
    (v, c.samples)
}

fn nu_bound(c: &Ctx) -> (f64, usize) {
    let v = c.max_over(3, c.samples, |r| (invariants(&sampling::cp3_point(r)).nu.abs() - 0.75).max(0.0));
    (v, c.samples)
}

fn torus_invariance(c: &Ctx) -> (f64, usize) {
    let v = c.max_over(4, c.samples, |r| {
        use rand::Rng;
        let x = sampling::cp3_point(r);
        let y =
            x.torus_act(r.gen_range(0.0..2.0 * PI), r.gen_range(0.0..2.0 * PI)).with_phase(r.gen_range(0.0..2.0 * PI));
        let (a, b) = (invariants(&x), invariants(&y));
        [a.f1 - b.f1, a.f2 - b.f2, a.f4 - b.f4, a.f5 - b.f5, a.nu - b.nu].iter().map(|d| d.abs()).fold(0.0, f64::max)
    });
    (v, c.samples)
}

fn c_f_spectrum(c: &Ctx) -> (f64, usize) {
    let want = Spectrum::new(c.w.kf().abs(), c.w.mf().abs());
    let v = c.max_over(5, c.samples, |r| match c_f(&sampling::cp3_point(r), c.w) {
        Ok(x) => eigenvalues(&x).max_diff(&want),
        Err(_) => 0.0,
    });
    (v, c.samples)
}

fn conservation(c: &Ctx) -> (f64, usize) {
    let form = match c.fault {
        Some(Fault::WrongH2) => H2Form::QCoordinate,
        None => H2Form::Canonical,
    };
    let starts = c.trajectory_starts(6);
    let drifts = c.exec.map_slice(&starts, |s| {
        let Ok(p) = TodaParams::from_d(s, c.w) else { return f64::NAN };
        let Ok(traj) = integrate(s, &p, Integrator::Rk4, 1e-3, c.t_end, 100) else { return f64::NAN };
        let first = conserved_with(form, s, &p);
        traj.states
            .iter()
            .map(|x| {
                let h = p.h(x);
                rel(h1_with(x, h), first.h1).max(rel(h2_with(form, x, h), first.h2))
            })
            .fold(0.0, f64::max)
    });
    (drifts.into_iter().fold(0.0, f64::max), starts.len())
}

fn lax_isospectral(c: &Ctx) -> (f64, usize) {
    let starts = c.trajectory_starts(7);
    let v = c.exec.map_slice(&starts, |s| {
        let Ok(p) = TodaParams::from_d(s, c.w) else { return f64::NAN };
        let Ok(traj) = integrate(s, &p, Integrator::Rk4, 1e-3, c.t_end, 100) else { return f64::NAN };
        let s0 = build_lax(s, &p).l.eigenvalues();
        traj.states.iter().map(|x| build_lax(x, &p).l.eigenvalues().max_diff(&s0)).fold(0.0, f64::max)
    });
    (v.into_iter().fold(0.0, f64::max), starts.len())
}

fn eigenvalue_formula(c: &Ctx) -> (f64, usize) {
    let v = c.max_over(8, c.samples, |r| {
        let d = sample_d_point(r, c.w, 0.0).1;
        let Ok(p) = TodaParams::from_d(&d.state, c.w) else { return f64::NAN };
        let (cons, mu) = measured(&d.state, &p);
        build_lax(&d.state, &p).l.eigenvalues().max_diff(&lax_spectrum_formula(&cons, mu))
    });
    (v, c.samples)
}

fn two_path_agreement(c: &Ctx) -> (f64, usize) {
    let rep = scan(sample_seed(c.seed, 9), c.samples, c.w, c.exec);
    (rep.max_two_path_deviation, c.samples)
}

fn rectangle_containment(c: &Ctx) -> (f64, usize) {
    let rep = scan(sample_seed(c.seed, 10), c.samples, c.w, c.exec);
    (1.0 - rep.containment_rate(), c.samples)
}

fn clifford_field_exact(c: &Ctx) -> (f64, usize) {
    match AngleField::constant_squares(64, 1.0, 0.5, 0.5) {
        Ok(a) => {
            let k = gauss_curvature(&a, c.exec).iter().map(|k| k.abs()).fold(0.0, f64::max);
            (toda_pde_residual(&a, c.exec).max_norm.max(k), a.len())
        }
        Err(_) => (f64::NAN, 0),
    }
}

fn residual_order(c: &Ctx) -> (f64, usize) {
    let f = |x: f64, y: f64| {
        let s = (0.1 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos()).exp() * FRAC_1_SQRT_2;
        (s, s)
    };
    match residual_convergence_order(16, 1.0, 1.0, f, c.exec) {
        Ok(o) => ((o - 2.0).abs(), 3),
        Err(_) => (f64::NAN, 0),
    }
}

fn reconstruction_round_trip(c: &Ctx) -> (f64, usize) {
    let starts = c.trajectory_starts(11);
    let v = c.exec.map_slice(&starts, |s| {
        let run = || -> Option<f64> {
            let p = TodaParams::from_d(s, c.w).ok()?;
            let traj = integrate(s, &p, Integrator::Rk4, 1e-3, c.t_end, 100).ok()?;
            let path = reconstruct_u1_curve(&traj, &aligned_initial_frame(s, &p).ok()?).ok()?;
            let mut dev = 0.0f64;
            for (x, st) in path.points.iter().zip(&traj.states) {
                dev = dev.max(p_closed_form(x, c.w).ok()?.state.max_rel_diff(st));
            }
            Some(dev)
        };
        run().unwrap_or(f64::NAN)
    });
    (v.into_iter().fold(0.0, f64::max), starts.len())
}

/// `(module, property, tolerance, check)`, in output order.
const PROPERTIES: &[(&str, &str, f64, Check)] = &[
    ("quat-algebra", "norm_multiplicative", 1e-12, norm_multiplicative),
    ("quat-algebra", "embedding_homomorphism", 1e-12, embedding_homomorphism),
    ("quat-algebra", "spectrum_conjugation_invariant", 1e-9, spectrum_conjugation_invariant),
    ("cp3-geometry", "nu_bound", 1e-12, nu_bound),
    ("cp3-geometry", "torus_invariance", 1e-12, torus_invariance),
    ("cp3-geometry", "c_f_spectrum", 1e-9, c_f_spectrum),
    ("toda-dynamics", "conservation_rk4", 1e-8, conservation),
    ("toda-dynamics", "lax_isospectral", 1e-8, lax_isospectral),
    ("toda-dynamics", "eigenvalue_formula", 1e-9, eigenvalue_formula),
    ("fibration-atlas", "two_path_agreement", 1e-9, two_path_agreement),
    ("fibration-atlas", "rectangle_containment", 0.0, rectangle_containment),
    ("curve-lab", "clifford_field_exact", 0.0, clifford_field_exact),
    ("curve-lab", "residual_convergence_order", 0.1, residual_order),
    ("curve-lab", "reconstruction_round_trip", 1e-6, reconstruction_round_trip),
];

pub fn verify_cmd(cfg: &RunConfig, exec: Execution) -> Result<Output, CliError> {
    let ctx = Ctx {
        seed: cfg.seed,
        samples: cfg.samples,
        trajectories: if cfg.quick { 2 } else { 5 },
        t_end: if cfg.quick { 5.0 } else { 20.0 },
        w: cfg.weights()?,
        exec,
        fault: cfg.inject_fault,
    };
    let rows: Vec<PropertyRow> = PROPERTIES
        .iter()
        .map(|&(module, property, tolerance, check)| {
            let (value, samples) = check(&ctx);
            let passed = value <= tolerance;
            log::info!("{} {module}/{property}: {value:e} (tol {tolerance:e})", if passed { "PASS" } else { "FAIL" });
            PropertyRow { module, property, passed, value, tolerance, samples }
        })
        .collect();
    let failed: Vec<&str> = rows.iter().filter(|r| !r.passed).map(|r| r.property).collect();
    let mut summary = Summary::default();
    summary.add("properties", rows.len()).add("failed", &failed);
    let failure = (!failed.is_empty()).then(|| failed.join(", "));
    Ok(Output { summary, data: output::rows(cfg.format, &rows)?, failure })
}
