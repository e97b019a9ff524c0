//! Circle-invariant superminimal families and the Weierstrass form `Theta(f, g)`.

use super::CurveError;
use crate::cp3::{quadric_value, CP3Point, WeightPair};
use num_complex::Complex64;

type C = Complex64;

/// Polynomial with coefficients in ascending powers.
fn horner(p: &[C], z: C) -> (C, C) {
    let mut v = C::new(0.0, 0.0);
    let mut d = C::new(0.0, 0.0);
    for &c in p.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

fn poly_mul(a: &[C], b: &[C]) -> Vec<C> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![C::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_deriv(a: &[C]) -> Vec<C> {
    a.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect()
}

fn poly_sub(a: &[C], b: &[C]) -> Vec<C> {
    let n = a.len().max(b.len());
    (0..n).map(|i| a.get(i).copied().unwrap_or_default() - b.get(i).copied().unwrap_or_default()).collect()
}

/// Rational function `num / den`, coefficients in ascending powers.
#[derive(Clone, Debug, PartialEq)]
pub struct Rational {
    pub num: Vec<C>,
    pub den: Vec<C>,
}

impl Rational {
    pub fn new(num: Vec<C>, den: Vec<C>) -> Result<Self, CurveError> {
        if den.iter().all(|c| c.norm() == 0.0) {
            return Err(CurveError::InvalidCurve("zero denominator".into()));
        }
        Ok(Self { num, den })
    }

    pub fn polynomial(num: Vec<C>) -> Self {
        Self { num, den: vec![C::new(1.0, 0.0)] }
    }

    /// Numerator of the derivative, `num' den - num den'`.
    fn derivative_numerator(&self) -> Vec<C> {
        poly_sub(&poly_mul(&poly_deriv(&self.num), &self.den), &poly_mul(&self.num, &poly_deriv(&self.den)))
    }

    pub fn eval(&self, z: C) -> Option<C> {
        let d = horner(&self.den, z).0;
        (d.norm() > 0.0).then(|| horner(&self.num, z).0 / d)
    }
}

/// Coefficient choice for the `phi_C` family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhiCoefficients {
    /// `Z3` coefficient `2kC/(k - m)`.
    AsDisplayed,
    /// `Z3` coefficient `kC/(k - m)`, which puts the curve on the quadric.
    QuadricRescaled,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SuperminimalCurve {
    /// `[1, Cm/(m-k) z^{2k}, z^{k-m}, c3 z^{k+m}]`.
    Phi { c: C, w: WeightPair, coefficients: PhiCoefficients },
    /// `[1, m/(m-k) z^{2k}, C z^{k-m}, k/(C(k-m)) z^{k+m}]`.
    Psi { c: C, w: WeightPair },
    /// `[1, f - g f'/(2g'), g, f'/(2g')]`.
    Theta { f: Rational, g: Rational },
}

impl SuperminimalCurve {
    pub fn phi(c: C, w: WeightPair) -> Self {
        Self::Phi { c, w, coefficients: PhiCoefficients::AsDisplayed }
    }

    pub fn phi_rescaled(c: C, w: WeightPair) -> Self {
        Self::Phi { c, w, coefficients: PhiCoefficients::QuadricRescaled }
    }

    pub fn psi(c: C, w: WeightPair) -> Result<Self, CurveError> {
        if c.norm() == 0.0 {
            return Err(CurveError::InvalidCurve("psi_C requires C != 0".into()));
        }
        Ok(Self::Psi { c, w })
    }

    pub fn theta(f: Rational, g: Rational) -> Result<Self, CurveError> {
        if g.derivative_numerator().iter().all(|c| c.norm() == 0.0) {
            return Err(CurveError::InvalidCurve("g must be non-constant".into()));
        }
        Ok(Self::Theta { f, g })
    }

    pub fn weights(&self) -> Option<WeightPair> {
        match self {
            Self::Phi { w, .. } | Self::Psi { w, .. } => Some(*w),
            Self::Theta { .. } => None,
        }
    }

    /// Homogeneous (unnormalized) coordinates at `z`.
    pub fn homogeneous(&self, z: C) -> Result<[C; 4], CurveError> {
        match self {
            Self::Phi { c, w, coefficients } => {
                let (k, m) = (w.kf(), w.mf());
                let c3 = match coefficients {
                    PhiCoefficients::AsDisplayed => 2.0 * k * c / (k - m),
                    PhiCoefficients::QuadricRescaled => k * c / (k - m),
                };
                monomials(*w, [C::new(1.0, 0.0), c * m / (m - k), C::new(1.0, 0.0), c3], z)
            }
            Self::Psi { c, w } => {
                let (k, m) = (w.kf(), w.mf());
                monomials(*w, [C::new(1.0, 0.0), C::new(m / (m - k), 0.0), *c, k / (c * (k - m))], z)
            }
            Self::Theta { f, g } => theta_coords(f, g, z),
        }
    }

    pub fn eval(&self, z: C) -> Result<CP3Point, CurveError> {
        let h = self.homogeneous(z)?;
        if h.iter().all(|c| c.norm() == 0.0) {
            return Err(CurveError::Indeterminate);
        }
        CP3Point::new(h).map_err(|_| CurveError::Indeterminate)
    }

    /// `|k Z0 Z1 + m Z2 Z3|` at the normalized image of `z`.
    pub fn quadric_residual(&self, z: C, w: WeightPair) -> Result<f64, CurveError> {
        Ok(quadric_value(&self.eval(z)?, w).norm())
    }
}

pub fn superminimal_eval(c: &SuperminimalCurve, z: C) -> Result<CP3Point, CurveError> {
    c.eval(z)
}

/// `coef[i] z^{e_i}` with exponents `(0, 2k, k - m, k + m)`, multiplied through by
/// `z^{-min e}` so that `z = 0` and negative exponents are handled projectively.
fn monomials(w: WeightPair, coef: [C; 4], z: C) -> Result<[C; 4], CurveError> {
    let (k, m) = (w.k(), w.m());
    let e = [0, 2 * k, k - m, k + m];
    let lo = *e.iter().min().expect("nonempty");
    let mut out = [C::new(0.0, 0.0); 4];
    for i in 0..4 {
        out[i] = coef[i] * z.powi(e[i] - lo);
    }
    if out.iter().any(|c| !c.is_finite()) {
        return Err(CurveError::Indeterminate);
    }
    Ok(out)
}

/// `Theta(f, g)` with `f = P/Q`, `g = R/S`, cleared by `Q^2 S g'_num`:
/// `[Q^2 S G, S(P Q G - R S F/2), R Q^2 G, S^3 F/2]` where
/// `F = P'Q - P Q'` and `G = R'S - R S'`.
fn theta_coords(f: &Rational, g: &Rational, z: C) -> Result<[C; 4], CurveError> {
    let (p, dp) = horner(&f.num, z);
    let (q, dq) = horner(&f.den, z);
    let (r, dr) = horner(&g.num, z);
    let (s, ds) = horner(&g.den, z);
    let big_f = dp * q - p * dq;
    let big_g = dr * s - r * ds;
    let scale = (dr * s).norm() + (r * ds).norm();
    if big_g.norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(CurveError::BranchPoint);
    }
    let half = 0.5;
    Ok([q * q * s * big_g, s * (p * q * big_g - r * s * big_f * half), r * q * q * big_g, s * s * s * big_f * half])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn same_point(a: &CP3Point, b: &CP3Point) -> bool {
        a.distance(b) < 1e-12
    }

    #[test]
    fn theta_of_square() {
        let f = Rational::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let g = Rational::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let curve = SuperminimalCurve::theta(f, g).unwrap();
        let z = c(0.3, -0.7);
        let expect = CP3Point::new([c(1.0, 0.0), c(0.0, 0.0), z, z]).unwrap();
        assert!(same_point(&curve.eval(z).unwrap(), &expect));
    }

    #[test]
    fn theta_branch_point() {
        let f = Rational::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let g = Rational::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let curve = SuperminimalCurve::theta(f, g).unwrap();
        assert_eq!(curve.eval(c(0.0, 0.0)), Err(CurveError::BranchPoint));
    }

    #[test]
    fn theta_rejects_constant_g() {
        let f = Rational::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let g = Rational::polynomial(vec![c(2.0, 0.0)]);
        assert!(SuperminimalCurve::theta(f, g).is_err());
    }

    #[test]
    fn theta_pole_of_f_is_finite() {
        let f = Rational::new(vec![c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let g = Rational::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let curve = SuperminimalCurve::theta(f, g).unwrap();
        assert!(curve.eval(c(0.0, 0.0)).is_ok());
    }

    #[test]
    fn phi_at_origin_is_projective_limit() {
        let w = WeightPair::new(1, 2).unwrap();
        let x = SuperminimalCurve::phi(c(0.5, 0.0), w).eval(c(0.0, 0.0)).unwrap();
        let limit = CP3Point::from_reals([0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(same_point(&x, &limit));
        let near = SuperminimalCurve::phi(c(0.5, 0.0), w).eval(c(1e-9, 0.0)).unwrap();
        assert!(near.distance(&limit) < 1e-8);
    }

    #[test]
    fn psi_rejects_zero() {
        let w = WeightPair::new(1, 2).unwrap();
        assert!(SuperminimalCurve::psi(c(0.0, 0.0), w).is_err());
    }

    #[test]
    fn quadric_residuals() {
        let w = WeightPair::new(1, 3).unwrap();
        let z = c(0.4, 0.9);
        let psi = SuperminimalCurve::psi(c(1.3, -0.2), w).unwrap();
        assert!(psi.quadric_residual(z, w).unwrap() < 1e-15);
        let phi_r = SuperminimalCurve::phi_rescaled(c(1.3, -0.2), w);
        assert!(phi_r.quadric_residual(z, w).unwrap() < 1e-15);
        let phi = SuperminimalCurve::phi(c(1.3, -0.2), w);
        assert!(phi.quadric_residual(z, w).unwrap() > 1e-3);
    }
}
