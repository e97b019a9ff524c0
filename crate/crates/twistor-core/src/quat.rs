//! Quaternions, 2x2 quaternionic matrices, Sp(2) and its Lie algebra.
//!
//! A quaternion `a + bi + cj + dk` is also viewed as a complex pair
//! `q = z + j w` with `z = a + bi`, `w = c - di`, so that `j z = conj(z) j`.
//! Quaternionic matrices act on column vectors from the left and `H^2` is
//! identified with `C^4` through `(z0 + j z1, z2 + j z3) <-> (z0, z1, z2, z3)`
//! with complex scalars acting on the right.

use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use thiserror::Error;

/// Complex 4x4 matrix, row-major.
pub type CMat4 = [[Complex64; 4]; 4];

const CZERO: Complex64 = Complex64::new(0.0, 0.0);
const CONE: Complex64 = Complex64::new(1.0, 0.0);

/// Tolerance for the skew-adjointness check of [`Sp2Algebra::new`], relative to `1 + |X|`.
pub const SKEW_TOL: f64 = 1e-12;
/// Tolerance for the unitarity check of [`Sp2Group::new`].
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuatError {
    #[error("matrix is not skew-adjoint (defect {0:.3e})")]
    NotSkew(f64),
    #[error("matrix is not unitary (defect {0:.3e})")]
    NotUnitary(f64),
    #[error("singular frame")]
    SingularFrame,
    #[error("polar iteration did not converge (defect {0:.3e})")]
    PolarNotConverged(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Quaternion {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Quaternion {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    /// Builds `z + j w`.
    pub fn from_pair(z: Complex64, w: Complex64) -> Self {
        Self::new(z.re, z.im, w.re, -w.im)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self::new(z.re, z.im, 0.0, 0.0)
    }

    pub fn from_real(x: f64) -> Self {
        Self::new(x, 0.0, 0.0, 0.0)
    }

    /// Returns `(z, w)` with `self = z + j w`.
    pub fn pair(self) -> (Complex64, Complex64) {
        (self.complex_part(), self.j_part())
    }

    pub fn complex_part(self) -> Complex64 {
        Complex64::new(self.a, self.b)
    }

    pub fn j_part(self) -> Complex64 {
        Complex64::new(self.c, -self.d)
    }

    pub fn conj(self) -> Self {
        Self::new(self.a, -self.b, -self.c, -self.d)
    }

    pub fn norm_sqr(self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn inverse(self) -> Option<Self> {
        let n = self.norm_sqr();
        if n == 0.0 || !n.is_finite() {
            return None;
        }
        Some(self.conj().scale(1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// The 2x2 complex block of left multiplication on `C + jC`.
    pub fn embed(self) -> [[Complex64; 2]; 2] {
        let (z, w) = self.pair();
        [[z, -w.conj()], [w, z.conj()]]
    }
}

impl Mul for Quaternion {
    type Output = Self;
    fn mul(self, q: Self) -> Self {
        let p = self;
        Self::new(
            p.a * q.a - p.b * q.b - p.c * q.c - p.d * q.d,
            p.a * q.b + p.b * q.a + p.c * q.d - p.d * q.c,
            p.a * q.c - p.b * q.d + p.c * q.a + p.d * q.b,
            p.a * q.d + p.b * q.c - p.c * q.b + p.d * q.a,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

impl Add for Quaternion {
    type Output = Self;
    fn add(self, q: Self) -> Self {
        Self::new(self.a + q.a, self.b + q.b, self.c + q.c, self.d + q.d)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, q: Self) {
        *self = *self + q;
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, q: Self) -> Self {
        Self::new(self.a - q.a, self.b - q.b, self.c - q.c, self.d - q.d)
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.a, -self.b, -self.c, -self.d)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i + {}j + {}k", self.a, self.b, self.c, self.d)
    }
}

/// Hamilton product.
pub fn quat_mul(p: Quaternion, q: Quaternion) -> Quaternion {
    p * q
}

/// 2x2 matrix with quaternion entries, `e[row][col]`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct QuatMat2 {
    pub e: [[Quaternion; 2]; 2],
}

impl QuatMat2 {
    pub const fn new(q11: Quaternion, q12: Quaternion, q21: Quaternion, q22: Quaternion) -> Self {
        Self { e: [[q11, q12], [q21, q22]] }
    }

    pub const fn zero() -> Self {
        Self::new(Quaternion::ZERO, Quaternion::ZERO, Quaternion::ZERO, Quaternion::ZERO)
    }

    pub const fn identity() -> Self {
        Self::diag(Quaternion::ONE, Quaternion::ONE)
    }

    pub const fn diag(p: Quaternion, q: Quaternion) -> Self {
        Self::new(p, Quaternion::ZERO, Quaternion::ZERO, q)
    }

    pub fn dagger(&self) -> Self {
        let e = &self.e;
        Self::new(e[0][0].conj(), e[1][0].conj(), e[0][1].conj(), e[1][1].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|q| q.scale(s))
    }

    pub fn map(&self, f: impl Fn(Quaternion) -> Quaternion) -> Self {
        let e = &self.e;
        Self::new(f(e[0][0]), f(e[0][1]), f(e[1][0]), f(e[1][1]))
    }

    pub fn zip(&self, o: &Self, f: impl Fn(Quaternion, Quaternion) -> Quaternion) -> Self {
        let (a, b) = (&self.e, &o.e);
        Self::new(f(a[0][0], b[0][0]), f(a[0][1], b[0][1]), f(a[1][0], b[1][0]), f(a[1][1], b[1][1]))
    }

    /// Frobenius norm over quaternion entries.
    pub fn norm(&self) -> f64 {
        self.e.iter().flatten().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Quaternion {
        self.e[0][0] + self.e[1][1]
    }

    pub fn commutator(&self, o: &Self) -> Self {
        *self * *o - *o * *self
    }

    /// `|g^dagger g - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.dagger() * *self - Self::identity()).norm()
    }

    /// `|X^dagger + X|`.
    pub fn skew_defect(&self) -> f64 {
        (self.dagger() + *self).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.e.iter().flatten().all(|q| q.is_finite())
    }

    /// Matrix-vector product on `H^2`.
    pub fn apply(&self, v: [Quaternion; 2]) -> [Quaternion; 2] {
        let e = &self.e;
        [e[0][0] * v[0] + e[0][1] * v[1], e[1][0] * v[0] + e[1][1] * v[1]]
    }

    pub fn column(&self, c: usize) -> [Quaternion; 2] {
        [self.e[0][c], self.e[1][c]]
    }

    pub fn embed_c4(&self) -> CMat4 {
        embed_c4(self)
    }

    /// Inverse of [`embed_c4`]; only the first column of each 2x2 block is read.
    pub fn from_c4(m: &CMat4) -> Self {
        let q = |r: usize, c: usize| Quaternion::from_pair(m[2 * r][2 * c], m[2 * r + 1][2 * c]);
        Self::new(q(0, 0), q(0, 1), q(1, 0), q(1, 1))
    }

    pub fn inverse(&self) -> Option<Self> {
        c4::inverse(&self.embed_c4()).map(|m| Self::from_c4(&m))
    }
}

impl Mul for QuatMat2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (&self.e, &o.e);
        let entry = |r: usize, c: usize| a[r][0] * b[0][c] + a[r][1] * b[1][c];
        Self::new(entry(0, 0), entry(0, 1), entry(1, 0), entry(1, 1))
    }
}

impl Add for QuatMat2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.zip(&o, |p, q| p + q)
    }
}

impl Sub for QuatMat2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.zip(&o, |p, q| p - q)
    }
}

impl Neg for QuatMat2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|q| -q)
    }
}

/// The ring homomorphism from quaternionic 2x2 matrices to complex 4x4 matrices.
pub fn embed_c4(m: &QuatMat2) -> CMat4 {
    let mut out = [[CZERO; 4]; 4];
    for r in 0..2 {
        for c in 0..2 {
            let b = m.e[r][c].embed();
            for i in 0..2 {
                for j in 0..2 {
                    out[2 * r + i][2 * c + j] = b[i][j];
                }
            }
        }
    }
    out
}

/// Small dense helpers for complex 4x4 matrices.
pub mod c4 {
    use super::{CMat4, CONE, CZERO};
    use num_complex::Complex64;

    pub fn identity() -> CMat4 {
        let mut m = [[CZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = CONE;
        }
        m
    }

    pub fn mul(a: &CMat4, b: &CMat4) -> CMat4 {
        let mut m = [[CZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        m
    }

    pub fn adjoint(a: &CMat4) -> CMat4 {
        let mut m = [[CZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = a[j][i].conj();
            }
        }
        m
    }

    pub fn mul_vec(a: &CMat4, v: &[Complex64; 4]) -> [Complex64; 4] {
        let mut out = [CZERO; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|k| a[i][k] * v[k]).sum();
        }
        out
    }

    pub fn max_abs_diff(a: &CMat4, b: &CMat4) -> f64 {
        a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    /// LU factorization with partial pivoting; returns `None` on an exactly singular pivot.
    fn lu(a: &CMat4) -> Option<(CMat4, [usize; 4], f64)> {
        let mut m = *a;
        let mut perm = [0, 1, 2, 3];
        let mut sign = 1.0;
        let scale = a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 || !scale.is_finite() {
            return None;
        }
        for col in 0..4 {
            let piv = (col..4).max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm())).unwrap_or(col);
            if m[piv][col].norm() <= scale * 1e-15 {
                return None;
            }
            if piv != col {
                m.swap(piv, col);
                perm.swap(piv, col);
                sign = -sign;
            }
            for r in col + 1..4 {
                let f = m[r][col] / m[col][col];
                m[r][col] = f;
                for c in col + 1..4 {
                    let t = m[col][c];
                    m[r][c] -= f * t;
                }
            }
        }
        Some((m, perm, sign))
    }

    pub fn det(a: &CMat4) -> Complex64 {
        match lu(a) {
            None => CZERO,
            Some((m, _, sign)) => (0..4).map(|i| m[i][i]).product::<Complex64>() * sign,
        }
    }

    pub fn solve(a: &CMat4, b: &[Complex64; 4]) -> Option<[Complex64; 4]> {
        let (m, perm, _) = lu(a)?;
        Some(lu_solve(&m, &perm, b))
    }

    fn lu_solve(m: &CMat4, perm: &[usize; 4], b: &[Complex64; 4]) -> [Complex64; 4] {
        let mut y = [CZERO; 4];
        for i in 0..4 {
            let s: Complex64 = (0..i).map(|k| m[i][k] * y[k]).sum();
            y[i] = b[perm[i]] - s;
        }
        let mut x = [CZERO; 4];
        for i in (0..4).rev() {
            let s: Complex64 = (i + 1..4).map(|k| m[i][k] * x[k]).sum();
            x[i] = (y[i] - s) / m[i][i];
        }
        x
    }

    pub fn inverse(a: &CMat4) -> Option<CMat4> {
        let (m, perm, _) = lu(a)?;
        let mut inv = [[CZERO; 4]; 4];
        for c in 0..4 {
            let mut e = [CZERO; 4];
            e[c] = CONE;
            let x = lu_solve(&m, &perm, &e);
            for r in 0..4 {
                inv[r][c] = x[r];
            }
        }
        Some(inv)
    }
}

/// Purely imaginary spectrum `{+ia, -ia, +ib, -ib}` with `a >= b >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum {
    pub a: f64,
    pub b: f64,
}

impl Spectrum {
    pub fn new(x: f64, y: f64) -> Self {
        let (x, y) = (x.abs(), y.abs());
        if x >= y {
            Self { a: x, b: y }
        } else {
            Self { a: y, b: x }
        }
    }

    pub fn values(&self) -> [Complex64; 4] {
        [
            Complex64::new(0.0, self.a),
            Complex64::new(0.0, -self.a),
            Complex64::new(0.0, self.b),
            Complex64::new(0.0, -self.b),
        ]
    }

    pub fn max_diff(&self, o: &Self) -> f64 {
        (self.a - o.a).abs().max((self.b - o.b).abs())
    }
}

/// Element of sp(2): `X^dagger = -X`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sp2Algebra(QuatMat2);

impl Sp2Algebra {
    pub fn new(x: QuatMat2) -> Result<Self, QuatError> {
        let defect = x.skew_defect();
        if !(defect <= SKEW_TOL * (1.0 + x.norm())) {
            return Err(QuatError::NotSkew(defect));
        }
        Ok(Self(x))
    }

    /// Skew-adjoint part `(X - X^dagger)/2`.
    pub fn skew_part(x: &QuatMat2) -> Self {
        Self((*x - x.dagger()).scale(0.5))
    }

    /// `diag(ik, im)`.
    pub fn diag_imaginary(k: f64, m: f64) -> Self {
        Self(QuatMat2::diag(Quaternion::new(0.0, k, 0.0, 0.0), Quaternion::new(0.0, m, 0.0, 0.0)))
    }

    pub fn matrix(&self) -> &QuatMat2 {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn commutator(&self, o: &Self) -> Self {
        Self::skew_part(&self.0.commutator(&o.0))
    }

    pub fn add(&self, o: &Self) -> Self {
        Self(self.0 + o.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    /// `g^-1 X g`.
    pub fn conjugate_by(&self, g: &Sp2Group) -> Self {
        Self::skew_part(&(g.inverse().0 * self.0 * g.0))
    }

    pub fn eigenvalues(&self) -> Spectrum {
        eigenvalues(self)
    }
}

/// Eigenvalues of `embed_c4(X)` from the biquadratic characteristic polynomial
/// `t^2 - s t + p` in `t = -lambda^2`, with `s = -tr(A^2)/2` and `p = det A`.
pub fn eigenvalues(x: &Sp2Algebra) -> Spectrum {
    let x = x.matrix();
    let x2 = *x * *x;
    let s = -x2.trace().a;
    let p = c4::det(&x.embed_c4()).re.max(0.0);
    let disc = (s * s - 4.0 * p).max(0.0);
    let a2 = 0.5 * (s + disc.sqrt());
    let b2 = if a2 > 0.0 { (p / a2).min(a2) } else { 0.0 };
    Spectrum::new(a2.max(0.0).sqrt(), b2.sqrt())
}

/// Element of Sp(2): `g^dagger g = I`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sp2Group(QuatMat2);

impl Sp2Group {
    pub fn new(g: QuatMat2) -> Result<Self, QuatError> {
        let defect = g.unitarity_defect();
        if !(defect <= UNITARY_TOL) {
            return Err(QuatError::NotUnitary(defect));
        }
        Ok(Self(g))
    }

    pub fn identity() -> Self {
        Self(QuatMat2::identity())
    }

    /// `diag(p, q)` for unit quaternions.
    pub fn diag(p: Quaternion, q: Quaternion) -> Result<Self, QuatError> {
        Self::new(QuatMat2::diag(p, q))
    }

    pub fn matrix(&self) -> &QuatMat2 {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.dagger())
    }

    pub fn compose(&self, o: &Self) -> Self {
        Self(self.0 * o.0)
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.0.unitarity_defect()
    }

    /// Image of the basepoint `[1, 0, 0, 0]` as a `C^4` vector.
    pub fn basepoint_image(&self) -> [Complex64; 4] {
        let (z0, z1) = self.0.e[0][0].pair();
        let (z2, z3) = self.0.e[1][0].pair();
        [z0, z1, z2, z3]
    }
}

/// Polar projection onto Sp(2) by the Newton iteration `g <- (g + g^{-dagger})/2`.
pub fn reunitarize(g: &QuatMat2) -> Result<Sp2Group, QuatError> {
    const TARGET: f64 = 1e-14;
    const MAX_ITER: usize = 100;
    let mut g = *g;
    if !g.is_finite() {
        return Err(QuatError::SingularFrame);
    }
    let mut defect = g.unitarity_defect();
    for _ in 0..MAX_ITER {
        if defect <= TARGET {
            break;
        }
        let inv = g.dagger().inverse().ok_or(QuatError::SingularFrame)?;
        g = (g + inv).scale(0.5);
        defect = g.unitarity_defect();
    }
    if defect > 1e-12 {
        return Err(QuatError::PolarNotConverged(defect));
    }
    Ok(Sp2Group(g))
}
