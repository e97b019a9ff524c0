//! Homogeneous-coordinate geometry of CP^3 under the torus action.

use crate::quat::{reunitarize, QuatError, QuatMat2, Quaternion, Sp2Algebra, Sp2Group};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Weight of `nu^2` in `c nu^2 + f5^2 = (f1^2 - f2^2)(f3^2 - f4^2)/16`.
pub const NU_SQUARE_WEIGHT: f64 = 1.0 / 144.0;
/// Tolerance for membership in the singular lines.
pub const LINE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Cp3Error {
    #[error("zero or non-finite homogeneous vector")]
    Degenerate,
    #[error("degenerate weights (k, m) = ({0}, {1}): need k, m nonzero and k != +-m")]
    DegenerateWeights(i32, i32),
    #[error("section undefined on L1 u L6")]
    SectionUndefined,
    #[error("section not unitary before projection (defect {0:.3e})")]
    SectionNotUnitary(f64),
    #[error(transparent)]
    Quat(#[from] QuatError),
}

/// Unit representative of a point of CP^3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CP3Point {
    z: [Complex64; 4],
}

impl CP3Point {
    pub fn new(z: [Complex64; 4]) -> Result<Self, Cp3Error> {
        let n = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 1e-300) || !n.is_finite() {
            return Err(Cp3Error::Degenerate);
        }
        Ok(Self { z: z.map(|c| c / n) })
    }

    /// From `[Z0re, Z0im, Z1re, ..., Z3im]`.
    pub fn from_reals(v: [f64; 8]) -> Result<Self, Cp3Error> {
        Self::new([
            Complex64::new(v[0], v[1]),
            Complex64::new(v[2], v[3]),
            Complex64::new(v[4], v[5]),
            Complex64::new(v[6], v[7]),
        ])
    }

    /// `[1, 1, 1, -i]/2`, where `nu = +3/4`.
    pub fn clifford_plus() -> Self {
        let o = Complex64::new(1.0, 0.0);
        Self::new([o, o, o, Complex64::new(0.0, -1.0)]).expect("nonzero")
    }

    /// `[1, 1, 1, i]/2`, where `nu = -3/4`.
    pub fn clifford_minus() -> Self {
        let o = Complex64::new(1.0, 0.0);
        Self::new([o, o, o, Complex64::new(0.0, 1.0)]).expect("nonzero")
    }

    pub fn coords(&self) -> &[Complex64; 4] {
        &self.z
    }

    pub fn to_reals(&self) -> [f64; 8] {
        let z = &self.z;
        [z[0].re, z[0].im, z[1].re, z[1].im, z[2].re, z[2].im, z[3].re, z[3].im]
    }

    /// Coordinate-wise complex conjugation.
    pub fn conj(&self) -> Self {
        Self { z: self.z.map(|c| c.conj()) }
    }

    pub fn with_phase(&self, theta: f64) -> Self {
        let p = Complex64::from_polar(1.0, theta);
        Self { z: self.z.map(|c| c * p) }
    }

    /// Torus element acting as `(e^{ia} Z0, e^{-ia} Z1, e^{ib} Z2, e^{-ib} Z3)`.
    pub fn torus_act(&self, a: f64, b: f64) -> Self {
        let ea = Complex64::from_polar(1.0, a);
        let eb = Complex64::from_polar(1.0, b);
        let z = &self.z;
        Self { z: [z[0] * ea, z[1] * ea.conj(), z[2] * eb, z[3] * eb.conj()] }
    }

    /// The circle `rho(e^{i theta})` generated by `diag(ik, im)`.
    pub fn rho(&self, w: WeightPair, theta: f64) -> Self {
        self.torus_act(w.kf() * theta, w.mf() * theta)
    }

    /// `min over phases |x - e^{it} y|` of the unit representatives.
    pub fn distance(&self, o: &Self) -> f64 {
        let ip: Complex64 = o.z.iter().zip(self.z.iter()).map(|(a, b)| a.conj() * b).sum();
        let phase = if ip.norm() > 0.0 { ip / ip.norm() } else { Complex64::new(1.0, 0.0) };
        self.z.iter().zip(o.z.iter()).map(|(a, b)| (a - b * phase).norm_sqr()).sum::<f64>().sqrt()
    }
}

/// The weights of `xi = diag(ik, im)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightPair {
    k: i32,
    m: i32,
}

impl WeightPair {
    pub fn new(k: i32, m: i32) -> Result<Self, Cp3Error> {
        if k == 0 || m == 0 || k == m || k == -m {
            return Err(Cp3Error::DegenerateWeights(k, m));
        }
        let w = Self { k, m };
        if !w.is_coprime() {
            log::warn!("weights ({k}, {m}) are not coprime");
        }
        Ok(w)
    }

    pub fn k(&self) -> i32 {
        self.k
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    pub fn kf(&self) -> f64 {
        f64::from(self.k)
    }

    pub fn mf(&self) -> f64 {
        f64::from(self.m)
    }

    pub fn is_coprime(&self) -> bool {
        let (mut a, mut b) = (self.k.unsigned_abs(), self.m.unsigned_abs());
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a == 1
    }

    /// `k^2 + m^2`.
    pub fn sum_sq(&self) -> f64 {
        self.kf() * self.kf() + self.mf() * self.mf()
    }

    /// `k^2 - m^2`.
    pub fn diff_sq(&self) -> f64 {
        self.kf() * self.kf() - self.mf() * self.mf()
    }

    pub fn xi(&self) -> Sp2Algebra {
        Sp2Algebra::diag_imaginary(self.kf(), self.mf())
    }
}

/// Torus-invariant functions of a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InvariantTuple {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub f5: f64,
    pub nu: f64,
}

impl InvariantTuple {
    /// `(f1^2 - f2^2)(f3^2 - f4^2)/16`.
    pub fn quartic_bound(&self) -> f64 {
        (self.f1 * self.f1 - self.f2 * self.f2) * (self.f3 * self.f3 - self.f4 * self.f4) / 16.0
    }

    /// Residual of the multi-moment identity with weight `c`.
    pub fn multimoment_residual(&self, c: f64) -> f64 {
        c * self.nu * self.nu + self.f5 * self.f5 - self.quartic_bound()
    }
}

pub fn invariants(x: &CP3Point) -> InvariantTuple {
    let z = x.coords();
    let n = z.map(|c| c.norm_sqr());
    let f1 = n[0] + n[1];
    let quartic = z[0] * z[1] * z[2].conj() * z[3].conj();
    InvariantTuple { f1, f2: n[0] - n[1], f3: 1.0 - f1, f4: n[2] - n[3], f5: quartic.re, nu: 12.0 * quartic.im }
}

/// Least-squares weight `c` for `c nu^2 = quartic_bound - f5^2` and the worst residual.
pub fn calibrate_nu_weight(points: &[CP3Point]) -> (f64, f64) {
    let inv: Vec<InvariantTuple> = points.iter().map(invariants).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for t in &inv {
        let n2 = t.nu * t.nu;
        num += n2 * (t.quartic_bound() - t.f5 * t.f5);
        den += n2 * n2;
    }
    let c = num / den;
    let worst = inv.iter().map(|t| t.multimoment_residual(c).abs()).fold(0.0, f64::max);
    (c, worst)
}

/// `k Z0 Z1 + m Z2 Z3`.
pub fn quadric_value(x: &CP3Point, w: WeightPair) -> Complex64 {
    let z = x.coords();
    z[0] * z[1] * w.kf() + z[2] * z[3] * w.mf()
}

/// Membership in the lines `L1..L6` where the torus action is not free.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SingularLines {
    pub on: [bool; 6],
}

impl SingularLines {
    /// Coordinate pairs vanishing on `L1..L6`.
    pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 3), (1, 2), (2, 3)];

    pub fn is_free(&self) -> bool {
        !self.on.iter().any(|&b| b)
    }

    pub fn lines(&self) -> Vec<usize> {
        (0..6).filter(|&i| self.on[i]).map(|i| i + 1).collect()
    }
}

pub fn singular_classify(x: &CP3Point) -> SingularLines {
    let n = x.coords().map(|c| c.norm_sqr());
    let mut on = [false; 6];
    for (flag, (a, b)) in on.iter_mut().zip(SingularLines::PAIRS) {
        *flag = (n[a] + n[b]).sqrt() <= LINE_TOL;
    }
    SingularLines { on }
}

/// Distance-like measure to the singular set: `min over lines of sqrt(|Za|^2 + |Zb|^2)`.
pub fn singular_distance(x: &CP3Point) -> f64 {
    let n = x.coords().map(|c| c.norm_sqr());
    SingularLines::PAIRS.iter().map(|&(a, b)| (n[a] + n[b]).sqrt()).fold(f64::INFINITY, f64::min)
}

/// Sp(2) section over `CP^3 \ (L1 u L6)` whose first column is `x`.
pub fn section_sp2(x: &CP3Point) -> Result<Sp2Group, Cp3Error> {
    let t = invariants(x);
    if t.f1 <= 1e-12 || t.f3 <= 1e-12 {
        return Err(Cp3Error::SectionUndefined);
    }
    let z = x.coords();
    let s = (1.0 / t.f1 + 1.0 / t.f3).sqrt();
    let h1 = Quaternion::from_pair(z[0], z[1]);
    let h2 = Quaternion::from_pair(z[2], z[3]);
    let k1 = h1.scale(1.0 / (t.f1 * s));
    let k2 = h2.scale(-1.0 / (t.f3 * s));
    let raw = QuatMat2::new(h1, k1, h2, k2);
    let defect = raw.unitarity_defect();
    if defect > 0.1 {
        return Err(Cp3Error::SectionNotUnitary(defect));
    }
    Ok(reunitarize(&raw)?)
}

/// `c_F(x) = g^{-1} xi g` for the section `g` at `x`.
pub fn c_f(x: &CP3Point, w: WeightPair) -> Result<Sp2Algebra, Cp3Error> {
    let g = section_sp2(x)?;
    Ok(w.xi().conjugate_by(&g))
}

/// The projection `Sp(2) -> CP^3`.
pub fn project_to_cp3(g: &Sp2Group) -> Result<CP3Point, Cp3Error> {
    CP3Point::new(g.basepoint_image())
}
