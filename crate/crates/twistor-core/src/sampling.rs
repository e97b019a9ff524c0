//! Seeded random generators for points, group elements and constructed special sets.

use crate::cp3::{CP3Point, WeightPair};
use crate::quat::{reunitarize, QuatMat2, Quaternion, Sp2Algebra, Sp2Group};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

pub type SampleRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Per-sample seed: independent of evaluation order or thread count.
pub fn sample_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

pub fn rng_for(seed: u64, index: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(sample_seed(seed, index))
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng))
}

pub fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.gen::<f64>() * TAU)
}

pub fn quaternion<R: Rng + ?Sized>(rng: &mut R) -> Quaternion {
    Quaternion::new(gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng))
}

pub fn quat_mat<R: Rng + ?Sized>(rng: &mut R) -> QuatMat2 {
    QuatMat2::new(quaternion(rng), quaternion(rng), quaternion(rng), quaternion(rng))
}

pub fn sp2_algebra<R: Rng + ?Sized>(rng: &mut R) -> Sp2Algebra {
    Sp2Algebra::skew_part(&quat_mat(rng))
}

/// Polar factor of a Gaussian matrix; redraws in the (measure-zero) singular case.
pub fn sp2_group<R: Rng + ?Sized>(rng: &mut R) -> Sp2Group {
    loop {
        if let Ok(g) = reunitarize(&quat_mat(rng)) {
            return g;
        }
    }
}

/// Uniform point on the unit sphere of `C^4`.
pub fn cp3_point<R: Rng + ?Sized>(rng: &mut R) -> CP3Point {
    loop {
        let z = [(); 4].map(|_| complex_gaussian(rng));
        if let Ok(p) = CP3Point::new(z) {
            return p;
        }
    }
}

/// Point on the quadric `k Z0 Z1 + m Z2 Z3 = 0` (solving for `Z3`).
pub fn quadric_point<R: Rng + ?Sized>(rng: &mut R, w: WeightPair) -> CP3Point {
    loop {
        let z0 = complex_gaussian(rng);
        let z1 = complex_gaussian(rng);
        let z2 = complex_gaussian(rng);
        if z2.norm() < 1e-3 {
            continue;
        }
        let z3 = -(z0 * z1 * w.kf()) / (z2 * w.mf());
        if let Ok(p) = CP3Point::new([z0, z1, z2, z3]) {
            return p;
        }
    }
}

/// Point with `f1 = 1/2` and `m f4 = k f2`, random phases.
pub fn t_set_point<R: Rng + ?Sized>(rng: &mut R, w: WeightPair) -> CP3Point {
    let ratio = w.kf() / w.mf();
    let f2_max = 0.5_f64.min(0.5 / ratio.abs());
    let f2 = (2.0 * rng.gen::<f64>() - 1.0) * f2_max * 0.98;
    let f4 = f2 * ratio;
    let mags = [(0.5 + f2) / 2.0, (0.5 - f2) / 2.0, (0.5 + f4) / 2.0, (0.5 - f4) / 2.0];
    let z = mags.map(|n| unit_phase(rng) * n.max(0.0).sqrt());
    CP3Point::new(z).expect("unit vector")
}
