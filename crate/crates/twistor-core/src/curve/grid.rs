//! Angle functions on a periodic grid: Toda residuals, curvature, second
//! fundamental form, the Bonnet one-form and its flatness defect.

use super::CurveError;
use crate::exec::Execution;
use crate::quat::{QuatMat2, Quaternion, Sp2Algebra};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

/// Grid file layout: header plus row-major arrays indexed by `ix * ny + iy`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFile {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "Lx")]
    pub lx: f64,
    #[serde(rename = "Ly")]
    pub ly: f64,
    pub alpha_minus: Vec<f64>,
    pub alpha_plus: Vec<f64>,
}

/// Positive angle functions `alpha-`, `alpha+` sampled on the flat torus
/// `[0, Lx) x [0, Ly)`, stored together with their squares.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleField {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    am: Vec<f64>,
    ap: Vec<f64>,
    sm: Vec<f64>,
    sp: Vec<f64>,
}

impl AngleField {
    pub fn new(
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        alpha_minus: Vec<f64>,
        alpha_plus: Vec<f64>,
    ) -> Result<Self, CurveError> {
        if nx < 3 || ny < 3 || alpha_minus.len() != nx * ny || alpha_plus.len() != nx * ny {
            return Err(CurveError::GridShape(format!("need nx, ny >= 3 and arrays of length nx*ny = {}", nx * ny)));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(CurveError::GridShape("periods must be positive".into()));
        }
        if let Some(bad) = alpha_minus.iter().chain(&alpha_plus).find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(CurveError::NonPositiveField(*bad));
        }
        let sm = alpha_minus.iter().map(|a| a * a).collect();
        let sp = alpha_plus.iter().map(|a| a * a).collect();
        Ok(Self { nx, ny, lx, ly, am: alpha_minus, ap: alpha_plus, sm, sp })
    }

    /// Field given by `alpha-^2`, `alpha+^2`; the squares are kept exactly as supplied.
    pub fn from_squares(
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        sq_minus: Vec<f64>,
        sq_plus: Vec<f64>,
    ) -> Result<Self, CurveError> {
        let am = sq_minus.iter().map(|s| s.sqrt()).collect();
        let ap = sq_plus.iter().map(|s| s.sqrt()).collect();
        let mut a = Self::new(nx, ny, lx, ly, am, ap)?;
        a.sm = sq_minus;
        a.sp = sq_plus;
        Ok(a)
    }

    pub fn from_fn(
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        f: impl Fn(f64, f64) -> (f64, f64),
    ) -> Result<Self, CurveError> {
        let (hx, hy) = (lx / nx as f64, ly / ny as f64);
        let mut am = Vec::with_capacity(nx * ny);
        let mut ap = Vec::with_capacity(nx * ny);
        for ix in 0..nx {
            for iy in 0..ny {
                let (a, b) = f(ix as f64 * hx, iy as f64 * hy);
                am.push(a);
                ap.push(b);
            }
        }
        Self::new(nx, ny, lx, ly, am, ap)
    }

    pub fn constant(n: usize, l: f64, alpha_minus: f64, alpha_plus: f64) -> Result<Self, CurveError> {
        Self::from_fn(n, n, l, l, |_, _| (alpha_minus, alpha_plus))
    }

    /// Constant field with `alpha-^2 = sq_minus`, `alpha+^2 = sq_plus`.
    pub fn constant_squares(n: usize, l: f64, sq_minus: f64, sq_plus: f64) -> Result<Self, CurveError> {
        Self::from_squares(n, n, l, l, vec![sq_minus; n * n], vec![sq_plus; n * n])
    }

    pub fn from_file(g: GridFile) -> Result<Self, CurveError> {
        Self::new(g.nx, g.ny, g.lx, g.ly, g.alpha_minus, g.alpha_plus)
    }

    pub fn to_file(&self) -> GridFile {
        GridFile {
            nx: self.nx,
            ny: self.ny,
            lx: self.lx,
            ly: self.ly,
            alpha_minus: self.am.clone(),
            alpha_plus: self.ap.clone(),
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.am.is_empty()
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.lx / self.nx as f64, self.ly / self.ny as f64)
    }

    pub fn alpha_minus(&self) -> &[f64] {
        &self.am
    }

    pub fn alpha_plus(&self) -> &[f64] {
        &self.ap
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny + iy
    }

    /// Periodic index of `(ix + dx, iy + dy)`.
    pub fn shifted(&self, i: usize, dx: isize, dy: isize) -> usize {
        let (ix, iy) = (i / self.ny, i % self.ny);
        let wx = (ix as isize + dx).rem_euclid(self.nx as isize) as usize;
        let wy = (iy as isize + dy).rem_euclid(self.ny as isize) as usize;
        self.index(wx, wy)
    }

    /// Five-point periodic Laplacian of `f` at flat index `i`.
    pub fn laplacian(&self, f: &[f64], i: usize) -> f64 {
        let (hx, hy) = self.spacing();
        let fxx = (f[self.shifted(i, 1, 0)] - 2.0 * f[i] + f[self.shifted(i, -1, 0)]) / (hx * hx);
        let fyy = (f[self.shifted(i, 0, 1)] - 2.0 * f[i] + f[self.shifted(i, 0, -1)]) / (hy * hy);
        fxx + fyy
    }

    /// Centred first differences `(f_x, f_y)` at flat index `i`.
    pub fn gradient(&self, f: &[f64], i: usize) -> (f64, f64) {
        let (hx, hy) = self.spacing();
        (
            (f[self.shifted(i, 1, 0)] - f[self.shifted(i, -1, 0)]) / (2.0 * hx),
            (f[self.shifted(i, 0, 1)] - f[self.shifted(i, 0, -1)]) / (2.0 * hy),
        )
    }

    pub fn alpha_minus_sq(&self) -> &[f64] {
        &self.sm
    }

    pub fn alpha_plus_sq(&self) -> &[f64] {
        &self.sp
    }

    /// `gamma^2 = (alpha- alpha+)^{-1/2}`.
    pub fn gamma_sq(&self, i: usize) -> f64 {
        1.0 / (self.sm[i] * self.sp[i]).sqrt().sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TodaResidual {
    pub minus: Vec<f64>,
    pub plus: Vec<f64>,
    pub max_norm: f64,
}

/// `R- = Lap log(a-^2) + 4(3a-^2 + a+^2 - 2) gamma^2` and the symmetric `R+`.
pub fn toda_pde_residual(a: &AngleField, exec: Execution) -> TodaResidual {
    let lm: Vec<f64> = a.sm.iter().map(|x| x.ln()).collect();
    let lp: Vec<f64> = a.sp.iter().map(|x| x.ln()).collect();
    let pairs = exec.map_range(a.len(), |i| {
        let (m2, p2) = (a.sm[i], a.sp[i]);
        let g2 = a.gamma_sq(i);
        (a.laplacian(&lm, i) + 4.0 * (3.0 * m2 + p2 - 2.0) * g2, a.laplacian(&lp, i) + 4.0 * (3.0 * p2 + m2 - 2.0) * g2)
    });
    let (minus, plus): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let max_norm = minus.iter().chain(&plus).map(|x| x.abs()).fold(0.0, f64::max);
    TodaResidual { minus, plus, max_norm }
}

/// `K = 2 (a- a+)^{-1/2} (1 - a-^2 - a+^2)`.
pub fn gauss_curvature(a: &AngleField, exec: Execution) -> Vec<f64> {
    exec.map_range(a.len(), |i| 2.0 / (a.am[i] * a.ap[i]).sqrt() * (1.0 - a.sm[i] - a.sp[i]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SecondFf {
    pub ii1: Vec<f64>,
    pub ii2: Vec<f64>,
    pub dbar_coeff: Vec<f64>,
}

/// `|II1| = |grad a-|_g / (1 + a-^2)`, `|II2| = a+ / sqrt(1 + a-^2)` and
/// `2 a- |3a-^2 - 2| / (a-^2 + 1)`, with `g = gamma^2 |dz|^2`.
pub fn second_ff_magnitudes(a: &AngleField, exec: Execution) -> SecondFf {
    let triples = exec.map_range(a.len(), |i| {
        let m = a.am[i];
        let (gx, gy) = a.gradient(&a.am, i);
        let grad_g = gx.hypot(gy) / a.gamma_sq(i).sqrt();
        (grad_g / (1.0 + m * m), a.ap[i] / (1.0 + m * m).sqrt(), 2.0 * m * (3.0 * m * m - 2.0).abs() / (m * m + 1.0))
    });
    let mut out = SecondFf { ii1: vec![], ii2: vec![], dbar_coeff: vec![] };
    for (x, y, z) in triples {
        out.ii1.push(x);
        out.ii2.push(y);
        out.dbar_coeff.push(z);
    }
    out
}

/// Coefficients `(eta(d/dx), eta(d/dy))` of the Bonnet one-form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaForm {
    pub dx: Sp2Algebra,
    pub dy: Sp2Algebra,
}

fn eta_value(am: f64, ap: f64, dc_lm: f64, dc_lp: f64, omega: Complex64) -> Sp2Algebra {
    let i = Complex64::i();
    let d1 = i * ((-3.0 * dc_lm + dc_lp) / 8.0);
    let d2 = i * ((-dc_lm + 3.0 * dc_lp) / 8.0);
    let zero = Complex64::new(0.0, 0.0);
    let q = Quaternion::from_pair;
    Sp2Algebra::skew_part(&QuatMat2::new(
        q(d1, omega.conj() * am),
        q(-omega.conj() / SQRT_2, zero),
        q(omega / SQRT_2, zero),
        q(d2, omega * ap),
    ))
}

/// Bonnet form at flat index `i` with `omega0 = scale * gamma (dx + i dy)` and
/// `d^C f = f_y dx - f_x dy`.
pub fn bonnet_eta_scaled(a: &AngleField, i: usize, scale: f64) -> EtaForm {
    let idx = [i, a.shifted(i, 1, 0), a.shifted(i, -1, 0), a.shifted(i, 0, 1), a.shifted(i, 0, -1)];
    let (hx, hy) = a.spacing();
    let lm = idx.map(|j| a.am[j].ln());
    let lp = idx.map(|j| a.ap[j].ln());
    let dx = |f: &[f64]| (f[1] - f[2]) / (2.0 * hx);
    let dy = |f: &[f64]| (f[3] - f[4]) / (2.0 * hy);
    let gamma = a.gamma_sq(i).sqrt() * scale;
    let (am, ap) = (a.am[i], a.ap[i]);
    EtaForm {
        dx: eta_value(am, ap, dy(&lm), dy(&lp), Complex64::new(gamma, 0.0)),
        dy: eta_value(am, ap, -dx(&lm), -dx(&lp), Complex64::new(0.0, gamma)),
    }
}

pub fn bonnet_eta(a: &AngleField, i: usize) -> EtaForm {
    bonnet_eta_scaled(a, i, 1.0)
}

/// Pointwise norm of `d eta + eta ^ eta` evaluated on `(d/dx, d/dy)` with centred differences.
pub fn flatness_residual(a: &AngleField, exec: Execution) -> Vec<f64> {
    let etas = exec.map_range(a.len(), |i| bonnet_eta(a, i));
    let (hx, hy) = a.spacing();
    exec.map_range(a.len(), |i| {
        let e = &etas[i];
        let dx_eta_y =
            (*etas[a.shifted(i, 1, 0)].dy.matrix() - *etas[a.shifted(i, -1, 0)].dy.matrix()).scale(1.0 / (2.0 * hx));
        let dy_eta_x =
            (*etas[a.shifted(i, 0, 1)].dx.matrix() - *etas[a.shifted(i, 0, -1)].dx.matrix()).scale(1.0 / (2.0 * hy));
        (dx_eta_y - dy_eta_x + e.dx.matrix().commutator(e.dy.matrix())).norm()
    })
}

/// Flatness norm predicted by the Toda residuals: `sqrt((3R- - R+)^2 + (R- - 3R+)^2) / 16`.
pub fn flatness_from_residual(r_minus: f64, r_plus: f64) -> f64 {
    (3.0 * r_minus - r_plus).hypot(r_minus - 3.0 * r_plus) / 16.0
}

/// Observed order of convergence of the discrete Toda residual of an analytic field,
/// from grids `n`, `2n`, `4n` compared at the coarse nodes.
pub fn residual_convergence_order(
    n: usize,
    lx: f64,
    ly: f64,
    f: impl Fn(f64, f64) -> (f64, f64) + Copy,
    exec: Execution,
) -> Result<f64, CurveError> {
    let res: Vec<TodaResidual> = [1, 2, 4]
        .iter()
        .map(|&r| AngleField::from_fn(n * r, n * r, lx, ly, f).map(|a| toda_pde_residual(&a, exec)))
        .collect::<Result<_, _>>()?;
    let at = |level: usize, ix: usize, iy: usize| {
        let r = 1 << level;
        let j = (ix * r) * (n * r) + iy * r;
        (res[level].minus[j], res[level].plus[j])
    };
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for ix in 0..n {
        for iy in 0..n {
            let (a0, b0) = at(0, ix, iy);
            let (a1, b1) = at(1, ix, iy);
            let (a2, b2) = at(2, ix, iy);
            e1 = e1.max((a0 - a1).abs()).max((b0 - b1).abs());
            e2 = e2.max((a1 - a2).abs()).max((b1 - b2).abs());
        }
    }
    Ok((e1 / e2).log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SEQ: Execution = Execution::Sequential;

    #[test]
    fn clifford_field_is_exact_solution() {
        let a = AngleField::constant(8, 1.0, 0.5f64.sqrt(), 0.5f64.sqrt()).unwrap();
        assert!(toda_pde_residual(&a, SEQ).max_norm < 1e-13);
        assert!(gauss_curvature(&a, SEQ).iter().all(|k| k.abs() < 1e-15));
        let exact = AngleField::constant_squares(8, 1.0, 0.5, 0.5).unwrap();
        assert_eq!(toda_pde_residual(&exact, SEQ).max_norm, 0.0);
        assert!(gauss_curvature(&exact, SEQ).iter().all(|k| *k == 0.0));
    }

    #[test]
    fn constant_point_eight() {
        let a = AngleField::constant(5, 1.0, 0.8, 0.8).unwrap();
        let r = toda_pde_residual(&a, SEQ);
        assert!(r.minus.iter().all(|x| (x - 2.8).abs() < 1e-12));
    }

    #[test]
    fn curvature_half() {
        let a = AngleField::constant(4, 1.0, 0.5, 0.5).unwrap();
        assert!(gauss_curvature(&a, SEQ).iter().all(|k| (k - 2.0).abs() < 1e-14));
    }

    #[test]
    fn second_ff_at_clifford() {
        let a = AngleField::constant(4, 1.0, 0.5f64.sqrt(), 0.5f64.sqrt()).unwrap();
        let s = second_ff_magnitudes(&a, SEQ);
        assert!(s.ii1.iter().all(|x| *x == 0.0));
        assert!(s.ii2.iter().all(|x| (x - 1.0 / 3f64.sqrt()).abs() < 1e-15));
        assert!(s.dbar_coeff.iter().all(|x| (x - SQRT_2 / 3.0).abs() < 1e-15));
        let b = AngleField::constant(4, 1.0, (2.0f64 / 3.0).sqrt(), 0.3).unwrap();
        assert!(second_ff_magnitudes(&b, SEQ).dbar_coeff.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(matches!(AngleField::constant(4, 1.0, 0.0, 0.5), Err(CurveError::NonPositiveField(_))));
        assert!(AngleField::new(2, 4, 1.0, 1.0, vec![1.0; 8], vec![1.0; 8]).is_err());
        assert!(AngleField::new(4, 4, 1.0, 1.0, vec![1.0; 15], vec![1.0; 16]).is_err());
    }

    #[test]
    fn periodic_wrap() {
        let a = AngleField::constant(4, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(a.shifted(a.index(0, 0), -1, -1), a.index(3, 3));
        assert_eq!(a.shifted(a.index(3, 2), 1, 2), a.index(0, 0));
    }

    #[test]
    fn eta_diagonal_imaginary_parts_vanish_for_constants() {
        let a = AngleField::constant(6, 1.0, 0.6, 0.9).unwrap();
        let e = bonnet_eta(&a, 7);
        for m in [e.dx.matrix(), e.dy.matrix()] {
            assert_eq!(m.e[0][0].complex_part().norm(), 0.0);
            assert_eq!(m.e[1][1].complex_part().norm(), 0.0);
        }
    }

    #[test]
    fn grid_file_roundtrip() {
        let a = AngleField::from_fn(4, 5, 2.0, 3.0, |x, y| (1.0 + x, 2.0 + y)).unwrap();
        let b = AngleField::from_file(a.to_file()).unwrap();
        assert_eq!(a, b);
    }
}
