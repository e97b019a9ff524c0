//! Frame reconstruction: integrate `dPhi/dt = Phi M(t)` along a Toda
//! trajectory and project the frame to CP^3.

use super::CurveError;
use crate::cp3::{project_to_cp3, CP3Point};
use crate::quat::{c4, reunitarize, CMat4, QuatMat2, Sp2Group};
use crate::toda::{build_lax, rk4_with_stages, TodaParams, TodaState, Trajectory};
use num_complex::Complex64;

/// Largest pre-projection unitarity defect tolerated in one step.
pub const MAX_STEP_DRIFT: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct FramePath {
    pub ts: Vec<f64>,
    pub frames: Vec<Sp2Group>,
    pub states: Vec<TodaState>,
    pub points: Vec<CP3Point>,
    /// Largest unitarity defect of a raw RK4 step before reprojection.
    pub max_step_drift: f64,
    /// Largest unitarity defect of a stored frame.
    pub max_unitarity_defect: f64,
    /// Largest relative mismatch between re-integrated and supplied states.
    pub max_state_mismatch: f64,
}

/// Unit eigenvector of `a` for the eigenvalue `i lambda` by shifted inverse iteration.
fn eigenvector(a: &CMat4, lambda: f64) -> Option<[Complex64; 4]> {
    let shift = Complex64::new(0.0, lambda + 1e-9 * (1.0 + lambda.abs()));
    let mut m = *a;
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= shift;
    }
    let mut v =
        [Complex64::new(0.5, 0.1), Complex64::new(0.5, -0.2), Complex64::new(0.5, 0.3), Complex64::new(0.5, 0.0)];
    for _ in 0..4 {
        let x = c4::solve(&m, &v)?;
        let n = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        v = x.map(|z| z / n);
    }
    Some(v)
}

/// `J (z0, z1, z2, z3) = (-conj z1, conj z0, -conj z3, conj z2)`.
fn quaternionic_partner(v: &[Complex64; 4]) -> [Complex64; 4] {
    [-v[1].conj(), v[0].conj(), -v[3].conj(), v[2].conj()]
}

/// `Phi0` with `Phi0 L(0) Phi0^{-1} = diag(ik, im)`.
pub fn aligned_initial_frame(s: &TodaState, p: &TodaParams) -> Result<Sp2Group, CurveError> {
    let w = p.weights().ok_or_else(|| CurveError::Alignment("weights are required to align the frame".into()))?;
    let l = build_lax(s, p).l;
    let spec = l.eigenvalues();
    let (ka, ma) = (w.kf().abs(), w.mf().abs());
    let want = crate::quat::Spectrum::new(ka, ma);
    if spec.max_diff(&want) > 1e-8 * (1.0 + want.a) {
        return Err(CurveError::Alignment(format!(
            "spectrum ({:.6}, {:.6}) differs from the weights ({ka}, {ma})",
            spec.a, spec.b
        )));
    }
    let a = l.matrix().embed_c4();
    let vk = eigenvector(&a, w.kf()).ok_or_else(|| CurveError::Alignment("eigenvector".into()))?;
    let vm = eigenvector(&a, w.mf()).ok_or_else(|| CurveError::Alignment("eigenvector".into()))?;
    let cols = [vk, quaternionic_partner(&vk), vm, quaternionic_partner(&vm)];
    let mut inv = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (c, col) in cols.iter().enumerate() {
        for r in 0..4 {
            inv[r][c] = col[r];
        }
    }
    let phi0_inv = QuatMat2::from_c4(&inv);
    Ok(reunitarize(&phi0_inv.dagger())?)
}

/// Integrates the frame along `traj` (re-integrating the state jointly with the same
/// RK4 stages) and projects every recorded frame to CP^3.
pub fn reconstruct_u1_curve(traj: &Trajectory, phi0: &Sp2Group) -> Result<FramePath, CurveError> {
    let p = traj.params;
    let dt = traj.dt;
    let n_steps = (traj.ts.last().copied().unwrap_or(0.0) / dt).round() as usize;
    let m_of = |s: &TodaState| *build_lax(s, &p).m.matrix();
    let mut s = traj.states[0];
    let mut phi = *phi0;
    let mut out = FramePath {
        ts: vec![traj.ts[0]],
        frames: vec![phi],
        states: vec![s],
        points: vec![project_to_cp3(&phi)?],
        max_step_drift: 0.0,
        max_unitarity_defect: phi.unitarity_defect(),
        max_state_mismatch: 0.0,
    };
    let mut next_sample = 1;
    for i in 1..=n_steps {
        let (next, stages) = rk4_with_stages(&s, &p, dt)?;
        let g = *phi.matrix();
        let k1 = g * m_of(&stages[0]);
        let k2 = (g + k1.scale(0.5 * dt)) * m_of(&stages[1]);
        let k3 = (g + k2.scale(0.5 * dt)) * m_of(&stages[2]);
        let k4 = (g + k3.scale(dt)) * m_of(&stages[3]);
        let raw = g + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0);
        let drift = raw.unitarity_defect();
        if !(drift <= MAX_STEP_DRIFT) {
            return Err(CurveError::StepTooLarge(drift));
        }
        out.max_step_drift = out.max_step_drift.max(drift);
        phi = reunitarize(&raw)?;
        s = next;
        if next_sample < traj.ts.len() && (traj.ts[next_sample] - i as f64 * dt).abs() <= 1e-9 * dt.max(1.0) {
            out.max_state_mismatch = out.max_state_mismatch.max(s.max_rel_diff(&traj.states[next_sample]));
            out.ts.push(traj.ts[next_sample]);
            out.frames.push(phi);
            out.states.push(s);
            out.points.push(project_to_cp3(&phi)?);
            out.max_unitarity_defect = out.max_unitarity_defect.max(phi.unitarity_defect());
            next_sample += 1;
        }
    }
    Ok(out)
}
