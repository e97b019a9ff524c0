//! The map `p` from the torus quotient of CP^3 to `D`, computed along two
//! independent paths, and the classification of `u = (H2, 64 C^2)` against the
//! rectangle `R`.

use crate::cp3::{c_f, invariants, quadric_value, singular_classify, CP3Point, Cp3Error, WeightPair};
use crate::exec::Execution;
use crate::sampling;
use crate::toda::{h2_with, mu_from, Conserved, H2Form, TodaParams, TodaState, MU_SLACK};
use rand::Rng;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

/// `v- = QUADRIC_SCALE |k Z0 Z1 + m Z2 Z3|^2`.
pub const QUADRIC_SCALE: f64 = 4.0;
/// Default absolute tolerance for edge classification.
pub const CLASSIFY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtlasError {
    #[error("point lies on the singular lines {0:?}")]
    Singular(Vec<usize>),
    #[error("conjugation undefined (h = 0 locus)")]
    ConjugationUndefined,
    #[error("h = 0 locus")]
    HZeroLocus,
    #[error("not in rectangle: (H2, 64C^2) = ({0}, {1})")]
    NotInRectangle(f64, f64),
    #[error(transparent)]
    Cp3(#[from] Cp3Error),
}

/// A value of `p` with derived `h`, `mu` and membership in `D`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DPoint {
    pub state: TodaState,
    pub h: f64,
    pub mu: f64,
    pub c2: f64,
    pub in_d: bool,
}

impl DPoint {
    fn assemble(state: TodaState, h: f64, mu: f64) -> Self {
        let c2 = h * (state.v_minus * state.v_plus).max(0.0).sqrt();
        let in_d = state.is_positive() && h > 0.0 && mu.abs() <= 1.0 + MU_SLACK;
        Self { state, h, mu, c2, in_d }
    }

    /// D-point of a state on the level set `H1 = 4(k^2 + m^2)`.
    pub fn from_state(state: TodaState, w: WeightPair) -> Self {
        let d = crate::toda::d_coordinates(&state, w);
        Self::assemble(state, d.h, d.mu)
    }

    pub fn alpha_minus(&self) -> f64 {
        (self.state.v_minus / self.h).sqrt()
    }

    pub fn alpha_plus(&self) -> f64 {
        (self.state.v_plus / self.h).sqrt()
    }

    pub fn h2(&self) -> f64 {
        h2_with(H2Form::Canonical, &self.state, self.h)
    }

    pub fn params(&self, w: WeightPair) -> Result<TodaParams, crate::toda::TodaError> {
        Ok(TodaParams::new(self.c2, self.mu.clamp(-1.0, 1.0))?.with_weights(w))
    }

    /// Largest deviation in `(v-, v+, r-, r+, h, mu)`, relative to `max(1, |.|)`.
    pub fn max_rel_diff(&self, o: &Self) -> f64 {
        let rel = |a: f64, b: f64| (a - b).abs() / 1f64.max(a.abs()).max(b.abs());
        self.state.max_rel_diff(&o.state).max(rel(self.h, o.h)).max(rel(self.mu, o.mu))
    }
}

fn require_free(x: &CP3Point) -> Result<(), AtlasError> {
    let s = singular_classify(x);
    if s.is_free() {
        Ok(())
    } else {
        Err(AtlasError::Singular(s.lines()))
    }
}

/// `p` by conjugating `c_F(x)` into the slice where the lower-left entry is real.
pub fn p_conjugation(x: &CP3Point, w: WeightPair) -> Result<DPoint, AtlasError> {
    require_free(x)?;
    let sigma = c_f(x, w)?;
    let e = sigma.matrix().e;
    let (q1, q2, q3) = (e[0][0], e[1][0], e[1][1]);
    let q2inv = q2.inverse().filter(|_| q2.norm() > 1e-12).ok_or(AtlasError::ConjugationUndefined)?;
    let big_q3 = q2inv * q3 * q2;
    let state = TodaState {
        v_minus: q1.j_part().norm_sqr(),
        v_plus: big_q3.j_part().norm_sqr(),
        r_minus: -2.0 * q1.b,
        r_plus: 2.0 * big_q3.b,
    };
    let h = 2.0 * q2.norm_sqr();
    let kappa = big_q3.j_part() * q1.j_part().conj();
    let mu = if kappa.norm() > 0.0 {
        kappa.re / kappa.norm()
    } else {
        let c2 = h * (state.v_minus * state.v_plus).sqrt();
        mu_from(h2_with(H2Form::Canonical, &state, h), c2, w)
    };
    Ok(DPoint::assemble(state, h, mu))
}

/// `p` from polynomial expressions in the invariants `f1, f2, f4, f5`.
pub fn p_closed_form(x: &CP3Point, w: WeightPair) -> Result<DPoint, AtlasError> {
    require_free(x)?;
    let t = invariants(x);
    let (f1, f2, f4, f5) = (t.f1, t.f2, t.f4, t.f5);
    // The expressions are written for the weight order (m, k).
    let (k, m) = (w.mf(), w.kf());
    let (k2, m2, km) = (k * k, m * m, k * m);
    let den = (f1 - 1.0) * f1 * k2 + 2.0 * f2 * f4 * km + (f1 - 1.0) * f1 * m2 + 8.0 * km * f5;
    if den.abs() <= 1e-12 {
        return Err(AtlasError::HZeroLocus);
    }
    let h = -2.0 * den;
    let r_minus = -2.0 * (f4 * k + f2 * m);
    let e_minus = 4.0 * ((f1 - 1.0).powi(2) * k2 + 2.0 * f2 * f4 * km + f1 * f1 * m2 + 8.0 * km * f5);
    let r_plus = r_minus - 2.0 * (k - m) * (k + m) * (f1 * f4 * k + (f1 - 1.0) * f2 * m) / den;
    let e_plus = 4.0 * (f1 * f1 * k2 + 2.0 * f2 * f4 * km + (f1 - 1.0).powi(2) * m2 + 8.0 * km * f5);
    let state = TodaState {
        v_minus: (e_minus - r_minus * r_minus) / 4.0,
        v_plus: (e_plus - r_plus * r_plus) / 4.0,
        r_minus,
        r_plus,
    };
    let c2 = h * (state.v_minus * state.v_plus).max(0.0).sqrt();
    let mu = mu_from(h2_with(H2Form::Canonical, &state, h), c2, w);
    Ok(DPoint::assemble(state, h, mu))
}

/// Image point `(H2, 64 C^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RectPoint {
    #[serde(rename = "H2")]
    pub h2: f64,
    #[serde(rename = "C2x64")]
    pub sixty_four_c2: f64,
}

impl RectPoint {
    pub fn from_conserved(c: &Conserved) -> Self {
        Self { h2: c.h2, sixty_four_c2: 64.0 * c.c2 }
    }
}

pub fn u_map(d: &DPoint) -> RectPoint {
    RectPoint { h2: d.h2(), sixty_four_c2: 64.0 * d.c2 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum EdgeClass {
    Interior,
    L1,
    L2,
    L3,
    L4,
    #[serde(rename = "Corner_L3L4")]
    CornerL3L4,
    #[serde(rename = "Corner_L1L4")]
    CornerL1L4,
    #[serde(rename = "Corner_L2L3")]
    CornerL2L3,
    MissingVertex,
}

impl EdgeClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeClass::Interior => "Interior",
            EdgeClass::L1 => "L1",
            EdgeClass::L2 => "L2",
            EdgeClass::L3 => "L3",
            EdgeClass::L4 => "L4",
            EdgeClass::CornerL3L4 => "Corner_L3L4",
            EdgeClass::CornerL1L4 => "Corner_L1L4",
            EdgeClass::CornerL2L3 => "Corner_L2L3",
            EdgeClass::MissingVertex => "MissingVertex",
        }
    }

    /// Edges `l1..l4` incident to this class.
    pub fn edges(&self) -> &'static [usize] {
        match self {
            EdgeClass::Interior => &[],
            EdgeClass::L1 => &[1],
            EdgeClass::L2 => &[2],
            EdgeClass::L3 => &[3],
            EdgeClass::L4 => &[4],
            EdgeClass::CornerL3L4 => &[3, 4],
            EdgeClass::CornerL1L4 => &[1, 4],
            EdgeClass::CornerL2L3 => &[2, 3],
            EdgeClass::MissingVertex => &[1, 2],
        }
    }
}

impl fmt::Display for EdgeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The rectangle bounded by
/// `l1: H2 + X = A`, `l2: H2 - X = A`, `l3: H2 + X = B`, `l4: H2 = X`
/// with `X = 64 C^2`, `A = 16(k^2 - m^2)^2`, `B = 16(k^2 + m^2)^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rectangle {
    pub a: f64,
    pub b: f64,
}

impl Rectangle {
    pub fn new(w: WeightPair) -> Self {
        Self { a: 16.0 * w.diff_sq().powi(2), b: 16.0 * w.sum_sq().powi(2) }
    }

    /// Signed slacks of the four defining inequalities (nonnegative inside).
    pub fn slacks(&self, r: &RectPoint) -> [f64; 4] {
        let (h2, x) = (r.h2, r.sixty_four_c2);
        [h2 + x - self.a, self.a - (h2 - x), self.b - (h2 + x), h2 - x]
    }

    pub fn contains(&self, r: &RectPoint, tol: f64) -> bool {
        self.slacks(r).iter().all(|&s| s >= -tol)
    }

    pub fn missing_vertex(&self) -> RectPoint {
        RectPoint { h2: self.a, sixty_four_c2: 0.0 }
    }

    pub fn clifford_corner(&self) -> RectPoint {
        RectPoint { h2: self.b / 2.0, sixty_four_c2: self.b / 2.0 }
    }

    pub fn l1_l4_corner(&self) -> RectPoint {
        RectPoint { h2: self.a / 2.0, sixty_four_c2: self.a / 2.0 }
    }

    pub fn l2_l3_corner(&self) -> RectPoint {
        RectPoint { h2: (self.a + self.b) / 2.0, sixty_four_c2: (self.b - self.a) / 2.0 }
    }

    /// Centre of the rectangle.
    pub fn centre(&self) -> RectPoint {
        RectPoint { h2: (2.0 * self.a + self.b) / 4.0, sixty_four_c2: self.b / 4.0 }
    }

    pub fn distance_to_missing_vertex(&self, r: &RectPoint) -> f64 {
        (r.h2 - self.a).hypot(r.sixty_four_c2)
    }

    pub fn classify(&self, r: &RectPoint, tol: f64) -> Result<EdgeClass, AtlasError> {
        if !self.contains(r, tol) {
            return Err(AtlasError::NotInRectangle(r.h2, r.sixty_four_c2));
        }
        let on = self.slacks(r).map(|s| s.abs() <= tol);
        Ok(match on {
            [true, true, _, _] => EdgeClass::MissingVertex,
            [_, _, true, true] => EdgeClass::CornerL3L4,
            [true, _, _, true] => EdgeClass::CornerL1L4,
            [_, true, true, _] => EdgeClass::CornerL2L3,
            [true, _, _, _] => EdgeClass::L1,
            [_, true, _, _] => EdgeClass::L2,
            [_, _, true, _] => EdgeClass::L3,
            [_, _, _, true] => EdgeClass::L4,
            _ => EdgeClass::Interior,
        })
    }
}

pub fn classify(r: &RectPoint, w: WeightPair, tol: f64) -> Result<EdgeClass, AtlasError> {
    Rectangle::new(w).classify(r, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SpecialSets {
    pub on_t: bool,
    pub on_quadric: bool,
    pub on_branch_locus: bool,
    pub clifford_orbit: bool,
}

pub fn special_set_detect(x: &CP3Point, w: WeightPair, tol: f64) -> SpecialSets {
    let t = invariants(x);
    let near = |v: f64| v.abs() <= tol;
    SpecialSets {
        on_t: near(t.f1 - 0.5) && near(t.f4 * w.mf() - t.f2 * w.kf()),
        on_quadric: QUADRIC_SCALE * quadric_value(x, w).norm_sqr() <= tol,
        on_branch_locus: near(t.nu),
        clifford_orbit: near(t.nu.abs() - 0.75) && near(t.f1 - 0.5) && near(t.f2) && near(t.f4),
    }
}

/// Least-squares `c` in `v- = c |k Z0 Z1 + m Z2 Z3|^2` over the given points and the worst
/// relative residual.
pub fn calibrate_quadric_scale(points: &[CP3Point], w: WeightPair) -> Result<(f64, f64), AtlasError> {
    let mut pairs = Vec::with_capacity(points.len());
    for x in points {
        let d = p_conjugation(x, w)?;
        pairs.push((quadric_value(x, w).norm_sqr(), d.state.v_minus));
    }
    let num: f64 = pairs.iter().map(|(q, v)| q * v).sum();
    let den: f64 = pairs.iter().map(|(q, _)| q * q).sum();
    let c = num / den;
    let worst = pairs.iter().map(|(q, v)| (c * q - v).abs() / v.abs().max(1e-300)).fold(0.0, f64::max);
    Ok((c, worst))
}

/// A uniformly drawn point of CP^3 off the singular set together with its D-point,
/// redrawing until `h`, `v-`, `v+` exceed `margin` and `|mu| <= 1 - margin`.
pub fn sample_d_point<R: Rng + ?Sized>(rng: &mut R, w: WeightPair, margin: f64) -> (CP3Point, DPoint) {
    loop {
        let x = sampling::cp3_point(rng);
        if let Ok(d) = p_closed_form(&x, w) {
            let s = &d.state;
            if d.in_d && d.h > margin && s.v_minus > margin && s.v_plus > margin && d.mu.abs() <= 1.0 - margin {
                return (x, d);
            }
        }
    }
}

/// One row of a scan over random points of CP^3.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    #[serde(rename = "Z0re")]
    pub z0re: f64,
    #[serde(rename = "Z0im")]
    pub z0im: f64,
    #[serde(rename = "Z1re")]
    pub z1re: f64,
    #[serde(rename = "Z1im")]
    pub z1im: f64,
    #[serde(rename = "Z2re")]
    pub z2re: f64,
    #[serde(rename = "Z2im")]
    pub z2im: f64,
    #[serde(rename = "Z3re")]
    pub z3re: f64,
    #[serde(rename = "Z3im")]
    pub z3im: f64,
    pub f1: f64,
    pub f2: f64,
    pub f4: f64,
    pub f5: f64,
    pub nu: f64,
    pub v_minus: f64,
    pub v_plus: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub h: f64,
    pub mu: f64,
    #[serde(rename = "H2")]
    pub h2: f64,
    #[serde(rename = "C2x64")]
    pub c2x64: f64,
    pub edge_class: EdgeClass,
}

impl ScanRow {
    fn sort_key(&self) -> [f64; 10] {
        [self.h2, self.c2x64, self.z0re, self.z0im, self.z1re, self.z1im, self.z2re, self.z2im, self.z3re, self.z3im]
    }
}

/// Scan row for `x`, or the reason it has none.
pub fn scan_row(x: &CP3Point, w: WeightPair) -> Result<ScanRow, AtlasError> {
    let d = p_conjugation(x, w)?;
    let r = u_map(&d);
    let edge_class = classify(&r, w, CLASSIFY_TOL)?;
    let t = invariants(x);
    let z = x.to_reals();
    Ok(ScanRow {
        z0re: z[0],
        z0im: z[1],
        z1re: z[2],
        z1im: z[3],
        z2re: z[4],
        z2im: z[5],
        z3re: z[6],
        z3im: z[7],
        f1: t.f1,
        f2: t.f2,
        f4: t.f4,
        f5: t.f5,
        nu: t.nu,
        v_minus: d.state.v_minus,
        v_plus: d.state.v_plus,
        r_minus: d.state.r_minus,
        r_plus: d.state.r_plus,
        h: d.h,
        mu: d.mu,
        h2: r.h2,
        c2x64: r.sixty_four_c2,
        edge_class,
    })
}

/// Outcome of one scanned point.
#[derive(Clone, Debug, PartialEq)]
pub enum ScanOutcome {
    Row { row: ScanRow, two_path_deviation: f64 },
    Singular,
    Outside,
}

pub fn scan_point(x: &CP3Point, w: WeightPair) -> ScanOutcome {
    match scan_row(x, w) {
        Ok(row) => {
            let dev = match (p_conjugation(x, w), p_closed_form(x, w)) {
                (Ok(a), Ok(b)) => a.max_rel_diff(&b),
                _ => f64::INFINITY,
            };
            ScanOutcome::Row { row, two_path_deviation: dev }
        }
        Err(AtlasError::NotInRectangle(..)) => ScanOutcome::Outside,
        Err(e) => {
            log::debug!("scan point skipped: {e}");
            ScanOutcome::Singular
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanReport {
    /// Rows sorted by `(H2, C2x64, Z)`.
    pub rows: Vec<ScanRow>,
    pub skipped_singular: usize,
    pub outside: usize,
    pub max_two_path_deviation: f64,
}

impl ScanReport {
    /// Fraction of non-singular points whose image lies in the inflated rectangle.
    pub fn containment_rate(&self) -> f64 {
        let n = self.rows.len() + self.outside;
        if n == 0 {
            1.0
        } else {
            self.rows.len() as f64 / n as f64
        }
    }

    fn from_outcomes(outcomes: Vec<ScanOutcome>) -> Self {
        let mut rep = ScanReport { rows: vec![], skipped_singular: 0, outside: 0, max_two_path_deviation: 0.0 };
        for o in outcomes {
            match o {
                ScanOutcome::Row { row, two_path_deviation } => {
                    rep.max_two_path_deviation = rep.max_two_path_deviation.max(two_path_deviation);
                    rep.rows.push(row);
                }
                ScanOutcome::Singular => rep.skipped_singular += 1,
                ScanOutcome::Outside => rep.outside += 1,
            }
        }
        rep.rows.sort_by(|a, b| {
            a.sort_key()
                .iter()
                .zip(b.sort_key().iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        rep
    }
}

/// Scans `samples` uniform points, point `i` drawn from the stream `(seed, i)`. The
/// report depends only on `seed`, `samples` and `w`, never on `exec`.
pub fn scan(seed: u64, samples: usize, w: WeightPair, exec: Execution) -> ScanReport {
    ScanReport::from_outcomes(exec.map_range(samples, |i| {
        let mut rng = sampling::rng_for(seed, i as u64);
        scan_point(&sampling::cp3_point(&mut rng), w)
    }))
}

pub fn scan_points(points: &[CP3Point], w: WeightPair, exec: Execution) -> ScanReport {
    ScanReport::from_outcomes(exec.map_slice(points, |x| scan_point(x, w)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w12() -> WeightPair {
        WeightPair::new(1, 2).unwrap()
    }

    #[test]
    fn clifford_point_both_paths() {
        let x = CP3Point::clifford_plus();
        for d in [p_conjugation(&x, w12()).unwrap(), p_closed_form(&x, w12()).unwrap()] {
            assert!((d.state.v_minus - 1.25).abs() < 1e-12);
            assert!((d.state.v_plus - 1.25).abs() < 1e-12);
            assert!(d.state.r_minus.abs() < 1e-12 && d.state.r_plus.abs() < 1e-12);
            assert!((d.h - 2.5).abs() < 1e-12);
            assert!((d.alpha_minus() - 0.5f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn basepoint_is_singular() {
        let x = CP3Point::from_reals([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(p_closed_form(&x, w12()), Err(AtlasError::Singular(_))));
    }

    #[test]
    fn rectangle_vertices() {
        let r = Rectangle::new(w12());
        assert_eq!(r.classify(&r.missing_vertex(), 1e-8), Ok(EdgeClass::MissingVertex));
        assert_eq!(r.classify(&r.clifford_corner(), 1e-8), Ok(EdgeClass::CornerL3L4));
        assert_eq!(r.classify(&r.l1_l4_corner(), 1e-8), Ok(EdgeClass::CornerL1L4));
        assert_eq!(r.classify(&r.l2_l3_corner(), 1e-8), Ok(EdgeClass::CornerL2L3));
        assert_eq!(r.classify(&r.centre(), 1e-8), Ok(EdgeClass::Interior));
        let out = RectPoint { h2: 10.0, sixty_four_c2: 50.0 };
        assert!(r.classify(&out, 1e-8).is_err());
    }

    #[test]
    fn centre_has_equal_slacks_in_pairs() {
        let r = Rectangle::new(w12());
        let s = r.slacks(&r.centre());
        assert!((s[0] - s[2]).abs() < 1e-12 && (s[1] - s[3]).abs() < 1e-12);
    }

    #[test]
    fn clifford_special_sets() {
        let x = CP3Point::clifford_minus();
        let s = special_set_detect(&x, w12(), 1e-10);
        assert!(s.clifford_orbit && !s.on_branch_locus);
        let real = CP3Point::from_reals([0.3, 0.0, -0.5, 0.0, 0.7, 0.0, 0.1, 0.0]).unwrap();
        assert!(special_set_detect(&real, w12(), 1e-10).on_branch_locus);
    }
}
