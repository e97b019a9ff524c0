//! The affine Toda lattice for sp(2) under a circle symmetry.
//!
//! State `(v-, v+, r-, r+)` with `q = log(v)/2`, `q' = r` and
//! `r' = 2(h - 2v)`, `h = C^2 / sqrt(v- v+)`.

use crate::cp3::WeightPair;
use crate::quat::{QuatMat2, Quaternion, Sp2Algebra, Spectrum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use thiserror::Error;

/// Weight of `C^2 mu` in the Lax eigenvalue formula.
pub const EIG_C2_WEIGHT: f64 = 64.0;
/// Prefactor of the Lax eigenvalue formula.
pub const EIG_PREFACTOR: f64 = 0.5 / SQRT_2;
/// Slack allowed on `|mu| <= 1` when testing membership in D.
pub const MU_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TodaError {
    #[error("state not positive: v- = {0}, v+ = {1}")]
    NonPositive(f64, f64),
    #[error("left positive cone; reduce dt")]
    LeftPositiveCone,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("state outside D: {0}")]
    OutsideD(String),
    #[error("invalid step configuration: {0}")]
    InvalidStep(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TodaState {
    pub v_minus: f64,
    pub v_plus: f64,
    pub r_minus: f64,
    pub r_plus: f64,
}

impl TodaState {
    pub fn new(v_minus: f64, v_plus: f64, r_minus: f64, r_plus: f64) -> Result<Self, TodaError> {
        let s = Self { v_minus, v_plus, r_minus, r_plus };
        if !s.is_positive() || !r_minus.is_finite() || !r_plus.is_finite() {
            return Err(TodaError::NonPositive(v_minus, v_plus));
        }
        Ok(s)
    }

    /// Equilibrium `v- = v+ = (k^2 + m^2)/4`, `r = 0`.
    pub fn clifford(w: WeightPair) -> Self {
        let v = w.sum_sq() / 4.0;
        Self { v_minus: v, v_plus: v, r_minus: 0.0, r_plus: 0.0 }
    }

    pub fn from_log(q_minus: f64, q_plus: f64, r_minus: f64, r_plus: f64) -> Self {
        Self { v_minus: (2.0 * q_minus).exp(), v_plus: (2.0 * q_plus).exp(), r_minus, r_plus }
    }

    pub fn q_minus(&self) -> f64 {
        0.5 * self.v_minus.ln()
    }

    pub fn q_plus(&self) -> f64 {
        0.5 * self.v_plus.ln()
    }

    pub fn is_positive(&self) -> bool {
        self.v_minus > 0.0 && self.v_plus > 0.0 && self.v_minus.is_finite() && self.v_plus.is_finite()
    }

    /// Exchange of the minus and plus components.
    pub fn swapped(&self) -> Self {
        Self { v_minus: self.v_plus, v_plus: self.v_minus, r_minus: self.r_plus, r_plus: self.r_minus }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.v_minus, self.v_plus, self.r_minus, self.r_plus]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self { v_minus: a[0], v_plus: a[1], r_minus: a[2], r_plus: a[3] }
    }

    /// Largest componentwise difference, relative to `max(1, |.|)`.
    pub fn max_rel_diff(&self, o: &Self) -> f64 {
        self.to_array()
            .iter()
            .zip(o.to_array().iter())
            .map(|(a, b)| (a - b).abs() / 1f64.max(a.abs()).max(b.abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TodaParams {
    c2: f64,
    mu: f64,
    weights: Option<WeightPair>,
}

impl TodaParams {
    pub fn new(c2: f64, mu: f64) -> Result<Self, TodaError> {
        if !(c2 > 0.0) || !c2.is_finite() {
            return Err(TodaError::InvalidParams(format!("C^2 must be positive, got {c2}")));
        }
        if !(-1.0..=1.0).contains(&mu) {
            return Err(TodaError::InvalidParams(format!("mu must lie in [-1, 1], got {mu}")));
        }
        Ok(Self { c2, mu, weights: None })
    }

    pub fn with_weights(mut self, w: WeightPair) -> Self {
        self.weights = Some(w);
        self
    }

    /// Parameters of the D-point `s`: `C^2` and `mu` are read off from the state.
    pub fn from_d(s: &TodaState, w: WeightPair) -> Result<Self, TodaError> {
        let d = d_coordinates(s, w);
        if !d.in_d {
            return Err(TodaError::OutsideD(format!("h = {:.6e}, mu = {:.6e}", d.h, d.mu)));
        }
        Ok(Self { c2: d.c2, mu: d.mu.clamp(-1.0, 1.0), weights: Some(w) })
    }

    /// Clifford equilibrium parameters: `C^2 = (k^2 + m^2)^2 / 8`.
    pub fn clifford(w: WeightPair) -> Self {
        Self::from_d(&TodaState::clifford(w), w).expect("Clifford state lies in D")
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn weights(&self) -> Option<WeightPair> {
        self.weights
    }

    /// `h = C^2 / sqrt(v- v+)`.
    pub fn h(&self, s: &TodaState) -> f64 {
        self.c2 / (s.v_minus * s.v_plus).sqrt()
    }

    /// Principal `lambda = exp(i arccos(mu) / 4)`.
    pub fn lambda(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.mu.clamp(-1.0, 1.0).acos() / 4.0)
    }
}

/// `H = 2(h + v- + v+) + (r-^2 + r+^2)/2`.
pub fn hamiltonian(s: &TodaState, p: &TodaParams) -> f64 {
    2.0 * (p.h(s) + s.v_minus + s.v_plus) + 0.5 * (s.r_minus * s.r_minus + s.r_plus * s.r_plus)
}

/// Tangent vector in log coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tangent {
    pub dq_minus: f64,
    pub dq_plus: f64,
    pub dr_minus: f64,
    pub dr_plus: f64,
}

impl Tangent {
    /// `(dv-, dv+) = (2 r- v-, 2 r+ v+)`.
    pub fn dv(&self, s: &TodaState) -> (f64, f64) {
        (2.0 * self.dq_minus * s.v_minus, 2.0 * self.dq_plus * s.v_plus)
    }

    pub fn norm(&self) -> f64 {
        (self.dq_minus.powi(2) + self.dq_plus.powi(2) + self.dr_minus.powi(2) + self.dr_plus.powi(2)).sqrt()
    }
}

pub fn vector_field(s: &TodaState, p: &TodaParams) -> Tangent {
    let h = p.h(s);
    Tangent {
        dq_minus: s.r_minus,
        dq_plus: s.r_plus,
        dr_minus: 2.0 * (h - 2.0 * s.v_minus),
        dr_plus: 2.0 * (h - 2.0 * s.v_plus),
    }
}

fn vf_vr(y: &[f64; 4], c2: f64) -> Option<[f64; 4]> {
    let (vm, vp) = (y[0], y[1]);
    if !(vm > 0.0 && vp > 0.0) || !y.iter().all(|x| x.is_finite()) {
        return None;
    }
    let h = c2 / (vm * vp).sqrt();
    Some([2.0 * y[2] * vm, 2.0 * y[3] * vp, 2.0 * (h - 2.0 * vm), 2.0 * (h - 2.0 * vp)])
}

fn axpy(y: &[f64; 4], a: f64, k: &[f64; 4]) -> [f64; 4] {
    [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2], y[3] + a * k[3]]
}

fn check_dt(dt: f64) -> Result<(), TodaError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(TodaError::InvalidStep(format!("dt must be positive, got {dt}")))
    }
}

/// Classical RK4 in `(v, r)` coordinates; every stage must stay in the positive cone.
pub fn step_rk4(s: &TodaState, p: &TodaParams, dt: f64) -> Result<TodaState, TodaError> {
    rk4_with_stages(s, p, dt).map(|(next, _)| next)
}

/// RK4 step together with the four stage states at which the field was evaluated.
pub fn rk4_with_stages(s: &TodaState, p: &TodaParams, dt: f64) -> Result<(TodaState, [TodaState; 4]), TodaError> {
    check_dt(dt)?;
    let c2 = p.c2;
    let y1 = s.to_array();
    let k1 = vf_vr(&y1, c2).ok_or(TodaError::LeftPositiveCone)?;
    let y2 = axpy(&y1, 0.5 * dt, &k1);
    let k2 = vf_vr(&y2, c2).ok_or(TodaError::LeftPositiveCone)?;
    let y3 = axpy(&y1, 0.5 * dt, &k2);
    let k3 = vf_vr(&y3, c2).ok_or(TodaError::LeftPositiveCone)?;
    let y4 = axpy(&y1, dt, &k3);
    let k4 = vf_vr(&y4, c2).ok_or(TodaError::LeftPositiveCone)?;
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = y1[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    let next = TodaState::from_array(out);
    if next.is_positive() && out[2].is_finite() && out[3].is_finite() {
        let stages = [y1, y2, y3, y4].map(TodaState::from_array);
        Ok((next, stages))
    } else {
        Err(TodaError::LeftPositiveCone)
    }
}

fn leapfrog_q(q: &mut [f64; 2], r: &mut [f64; 2], c2: f64, dt: f64) {
    let force = |q: &[f64; 2]| {
        let (vm, vp) = ((2.0 * q[0]).exp(), (2.0 * q[1]).exp());
        let h = c2 * (-(q[0] + q[1])).exp();
        [2.0 * (h - 2.0 * vm), 2.0 * (h - 2.0 * vp)]
    };
    let f = force(q);
    r[0] += 0.5 * dt * f[0];
    r[1] += 0.5 * dt * f[1];
    q[0] += dt * r[0];
    q[1] += dt * r[1];
    let f = force(q);
    r[0] += 0.5 * dt * f[0];
    r[1] += 0.5 * dt * f[1];
}

fn symplectic_step(s: &TodaState, p: &TodaParams, weights: &[f64], dt: f64) -> Result<TodaState, TodaError> {
    check_dt(dt)?;
    if !s.is_positive() {
        return Err(TodaError::NonPositive(s.v_minus, s.v_plus));
    }
    let mut q = [s.q_minus(), s.q_plus()];
    let mut r = [s.r_minus, s.r_plus];
    for &w in weights {
        leapfrog_q(&mut q, &mut r, p.c2, w * dt);
    }
    let next = TodaState::from_log(q[0], q[1], r[0], r[1]);
    if next.is_positive() && r.iter().all(|x| x.is_finite()) {
        Ok(next)
    } else {
        Err(TodaError::LeftPositiveCone)
    }
}

/// Kick-drift-kick leapfrog in log coordinates.
pub fn step_leapfrog(s: &TodaState, p: &TodaParams, dt: f64) -> Result<TodaState, TodaError> {
    symplectic_step(s, p, &[1.0], dt)
}

/// Fourth-order symplectic triple-jump composition of [`step_leapfrog`].
pub fn step_yoshida4(s: &TodaState, p: &TodaParams, dt: f64) -> Result<TodaState, TodaError> {
    let cbrt2 = 2f64.cbrt();
    let w1 = 1.0 / (2.0 - cbrt2);
    let w0 = -cbrt2 * w1;
    symplectic_step(s, p, &[w1, w0, w1], dt)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    Rk4,
    Leapfrog,
    Yoshida4,
}

impl Integrator {
    pub fn step(self, s: &TodaState, p: &TodaParams, dt: f64) -> Result<TodaState, TodaError> {
        match self {
            Integrator::Rk4 => step_rk4(s, p, dt),
            Integrator::Leapfrog => step_leapfrog(s, p, dt),
            Integrator::Yoshida4 => step_yoshida4(s, p, dt),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Conserved {
    pub h1: f64,
    pub h2: f64,
    pub c2: f64,
}

/// Candidate expressions for the second integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum H2Form {
    /// `(r-^2 - r+^2 + 4v- - 4v+)^2 + 8h((r+ - r-)^2 + 4(v+ + v-))`.
    Canonical,
    /// `(r-^2 - r+^2 + 4v- - 4v+)^2 + 2h((r- - r+)^2 + 4(sqrt v- + sqrt v+)^2)`; not conserved.
    QCoordinate,
}

pub fn h2_with(form: H2Form, s: &TodaState, h: f64) -> f64 {
    let TodaState { v_minus: vm, v_plus: vp, r_minus: rm, r_plus: rp } = *s;
    let lead = (rm * rm - rp * rp + 4.0 * vm - 4.0 * vp).powi(2);
    match form {
        H2Form::Canonical => lead + 8.0 * h * ((rp - rm).powi(2) + 4.0 * (vp + vm)),
        H2Form::QCoordinate => lead + 2.0 * h * ((rm - rp).powi(2) + 4.0 * (vm.sqrt() + vp.sqrt()).powi(2)),
    }
}

pub fn h1_with(s: &TodaState, h: f64) -> f64 {
    4.0 * (h + s.v_minus + s.v_plus) + s.r_minus * s.r_minus + s.r_plus * s.r_plus
}

pub fn conserved(s: &TodaState, p: &TodaParams) -> Conserved {
    conserved_with(H2Form::Canonical, s, p)
}

pub fn conserved_with(form: H2Form, s: &TodaState, p: &TodaParams) -> Conserved {
    let h = p.h(s);
    Conserved { h1: h1_with(s, h), h2: h2_with(form, s, h), c2: h * (s.v_minus * s.v_plus).sqrt() }
}

/// `mu = (16(k^2 - m^2)^2 - H2) / (64 C^2)`.
pub fn mu_from(h2: f64, c2: f64, w: WeightPair) -> f64 {
    (16.0 * w.diff_sq().powi(2) - h2) / (EIG_C2_WEIGHT * c2)
}

/// Quantities of a state read against the level set `H1 = 4(k^2 + m^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DCoordinates {
    pub h: f64,
    pub c2: f64,
    pub h2: f64,
    pub mu: f64,
    pub in_d: bool,
}

pub fn d_coordinates(s: &TodaState, w: WeightPair) -> DCoordinates {
    let TodaState { v_minus: vm, v_plus: vp, r_minus: rm, r_plus: rp } = *s;
    let h = (4.0 * w.sum_sq() - 4.0 * vm - 4.0 * vp - rm * rm - rp * rp) / 4.0;
    let c2 = h * (vm * vp).max(0.0).sqrt();
    let h2 = h2_with(H2Form::Canonical, s, h);
    let mu = mu_from(h2, c2, w);
    let in_d = s.is_positive() && h > 0.0 && mu.abs() <= 1.0 + MU_SLACK;
    DCoordinates { h, c2, h2, mu, in_d }
}

/// The pair `L = Omega(K^xi)`, `M = Omega(J K^xi)` with `dL/dt = [L, M]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaxPair {
    pub l: Sp2Algebra,
    pub m: Sp2Algebra,
}

pub fn build_lax(s: &TodaState, p: &TodaParams) -> LaxPair {
    let lam = p.lambda();
    let lb = lam.conj();
    let i = Complex64::i();
    let zero = Complex64::new(0.0, 0.0);
    let sm = s.v_minus.sqrt();
    let sp = s.v_plus.sqrt();
    let sh = (p.h(s) / 2.0).sqrt();
    let q = Quaternion::from_pair;
    let l = QuatMat2::new(
        q(i * (-0.5 * s.r_minus), lb * sm),
        q(-lb * sh, zero),
        q(lam * sh, zero),
        q(i * (0.5 * s.r_plus), lam * sp),
    );
    let m = QuatMat2::new(q(zero, -i * lb * sm), q(i * lb * sh, zero), q(i * lam * sh, zero), q(zero, i * lam * sp));
    LaxPair { l: Sp2Algebra::skew_part(&l), m: Sp2Algebra::skew_part(&m) }
}

/// `+-(i / (2 sqrt 2)) sqrt(H1 +- sqrt(H2 + 64 C^2 mu))`.
pub fn lax_spectrum_formula(c: &Conserved, mu: f64) -> Spectrum {
    let x = (c.h2 + EIG_C2_WEIGHT * c.c2 * mu).max(0.0).sqrt();
    let a = EIG_PREFACTOR * (c.h1 + x).max(0.0).sqrt();
    let b = EIG_PREFACTOR * (c.h1 - x).max(0.0).sqrt();
    Spectrum::new(a, b)
}

/// One output row of an integrated trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub v_minus: f64,
    pub v_plus: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    #[serde(rename = "H1")]
    pub h1: f64,
    #[serde(rename = "H2")]
    pub h2: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub mu: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub ts: Vec<f64>,
    pub states: Vec<TodaState>,
    pub params: TodaParams,
    /// Step actually used (the requested step adjusted to divide `t_end`).
    pub dt: f64,
    pub stride: usize,
}

/// Integrates from `s0` to `t_end`, recording every `stride` steps and the final state.
pub fn integrate(
    s0: &TodaState,
    p: &TodaParams,
    method: Integrator,
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<Trajectory, TodaError> {
    check_dt(dt)?;
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(TodaError::InvalidStep(format!("t_end must be positive, got {t_end}")));
    }
    if !s0.is_positive() {
        return Err(TodaError::NonPositive(s0.v_minus, s0.v_plus));
    }
    let stride = stride.max(1);
    let n = ((t_end / dt).round() as usize).max(1);
    let h = t_end / n as f64;
    let mut ts = vec![0.0];
    let mut states = vec![*s0];
    let mut s = *s0;
    for i in 1..=n {
        s = method.step(&s, p, h)?;
        if i % stride == 0 || i == n {
            ts.push(i as f64 * h);
            states.push(s);
        }
    }
    Ok(Trajectory { ts, states, params: *p, dt: h, stride })
}

/// Conserved quantities as recorded along a trajectory: with weights known,
/// `C^2` is measured through the level-set value of `h` rather than taken from the parameters.
pub fn measured(s: &TodaState, p: &TodaParams) -> (Conserved, f64) {
    let mut c = conserved(s, p);
    match p.weights() {
        Some(w) => {
            c.c2 = d_coordinates(s, w).c2;
            (c, mu_from(c.h2, c.c2, w))
        }
        None => (c, p.mu()),
    }
}

impl Trajectory {
    pub fn rows(&self) -> Vec<TrajectoryRow> {
        self.ts
            .iter()
            .zip(&self.states)
            .map(|(&t, s)| {
                let (c, mu) = measured(s, &self.params);
                TrajectoryRow {
                    t,
                    v_minus: s.v_minus,
                    v_plus: s.v_plus,
                    r_minus: s.r_minus,
                    r_plus: s.r_plus,
                    h1: c.h1,
                    h2: c.h2,
                    c2: c.c2,
                    mu,
                }
            })
            .collect()
    }

    /// Largest relative deviation of `(H1, H2, C2)` from their initial values.
    pub fn max_relative_drift(&self) -> [f64; 3] {
        let rows = self.rows();
        let first = rows[0];
        let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { (a - b).abs() / b.abs() };
        rows.iter().fold([0.0; 3], |acc, r| {
            [acc[0].max(rel(r.h1, first.h1)), acc[1].max(rel(r.h2, first.h2)), acc[2].max(rel(r.c2, first.c2))]
        })
    }

    pub fn last(&self) -> &TodaState {
        self.states.last().expect("trajectory has at least one state")
    }
}
