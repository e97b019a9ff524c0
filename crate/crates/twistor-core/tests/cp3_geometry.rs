use num_complex::Complex64;
use proptest::prelude::*;
use twistor_core::cp3::{
    c_f, calibrate_nu_weight, invariants, project_to_cp3, quadric_value, section_sp2, singular_classify, CP3Point,
    Cp3Error, InvariantTuple, WeightPair, NU_SQUARE_WEIGHT,
};
use twistor_core::quat::Spectrum;
use twistor_core::sampling::{self, rng_for};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn w12() -> WeightPair {
    WeightPair::new(1, 2).unwrap()
}

fn tuples_close(a: &InvariantTuple, b: &InvariantTuple, tol: f64) -> bool {
    [a.f1 - b.f1, a.f2 - b.f2, a.f3 - b.f3, a.f4 - b.f4, a.f5 - b.f5, a.nu - b.nu].iter().all(|d| d.abs() <= tol)
}

#[test]
fn clifford_invariants() {
    let t = invariants(&CP3Point::clifford_plus());
    assert!((t.f1 - 0.5).abs() < 1e-15 && t.f2.abs() < 1e-15 && t.f4.abs() < 1e-15 && t.f5.abs() < 1e-15);
    assert!((t.nu - 0.75).abs() < 1e-12);
    let minus = CP3Point::new([c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
    assert!((invariants(&minus).nu + 0.75).abs() < 1e-12);
    assert_eq!(CP3Point::clifford_minus(), minus);
}

#[test]
fn fixed_point_invariants() {
    let x = CP3Point::new([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    let t = invariants(&x);
    assert_eq!((t.f1, t.f2, t.f4, t.f5, t.nu), (1.0, 1.0, 0.0, 0.0, 0.0));
}

#[test]
fn quadric_examples() {
    let w = w12();
    let base = CP3Point::new([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    assert_eq!(quadric_value(&base, w), c(0.0, 0.0));
    let q = quadric_value(&CP3Point::clifford_plus(), w);
    assert!((q - c(0.25, -0.5)).norm() < 1e-15);
}

#[test]
fn singular_line_examples() {
    let on = |z: [f64; 8]| singular_classify(&CP3Point::from_reals(z).unwrap()).lines();
    assert!(on([0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]).contains(&1));
    assert_eq!(on([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]), vec![5]);
    let mut rng = rng_for(3, 0);
    for _ in 0..1000 {
        assert!(singular_classify(&sampling::cp3_point(&mut rng)).is_free());
    }
}

#[test]
fn section_examples() {
    let g = section_sp2(&CP3Point::clifford_plus()).unwrap();
    assert!(g.unitarity_defect() < 1e-10);
    let l6 = CP3Point::from_reals([1.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    assert_eq!(section_sp2(&l6), Err(Cp3Error::SectionUndefined));
}

/// `c nu^2 + f5^2 = |Z0 Z1 Z2 Z3|^2` with `nu = 12 Im`, `f5 = Re` of one complex number,
/// hence `c = 1/144`.
#[test]
fn multimoment_weight_is_calibrated() {
    let draw =
        |seed: u64| -> Vec<CP3Point> { (0..10_000).map(|i| sampling::cp3_point(&mut rng_for(seed, i))).collect() };
    let (c1, worst1) = calibrate_nu_weight(&draw(11));
    let (c2, worst2) = calibrate_nu_weight(&draw(12));
    assert!(worst1 <= 1e-10 && worst2 <= 1e-10);
    assert!((c1 - c2).abs() <= 1e-12);
    assert!((c1 - 1.0 / 144.0).abs() <= 1e-12);
    assert_eq!(NU_SQUARE_WEIGHT, 1.0 / 144.0);
}

#[test]
fn nu_is_bounded_by_three_quarters() {
    let mut rng = rng_for(5, 0);
    let mut max = 0.0f64;
    for _ in 0..100_000 {
        max = max.max(invariants(&sampling::cp3_point(&mut rng)).nu.abs());
    }
    assert!(max <= 0.75 + 1e-12);
    assert!(max > 0.6);
    let near = CP3Point::new([c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, -1.0 + 1e-4)]).unwrap();
    assert!((invariants(&near).nu - 0.75).abs() < 1e-6);
}

fn seeded() -> impl Strategy<Value = rand_chacha::ChaCha8Rng> {
    any::<u64>().prop_map(|s| rng_for(s, 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn invariants_are_phase_and_torus_invariant(mut rng in seeded(), th in 0.0..6.3f64, a in 0.0..6.3f64, b in 0.0..6.3f64) {
        let x = sampling::cp3_point(&mut rng);
        let t = invariants(&x);
        prop_assert!(tuples_close(&t, &invariants(&x.with_phase(th)), 1e-12));
        prop_assert!(tuples_close(&t, &invariants(&x.torus_act(a, b)), 1e-12));
        prop_assert!(tuples_close(&t, &invariants(&x.rho(w12(), th)), 1e-12));
    }

    #[test]
    fn tuple_bounds(mut rng in seeded()) {
        let t = invariants(&sampling::cp3_point(&mut rng));
        prop_assert!((t.f1 + t.f3 - 1.0).abs() < 1e-15);
        prop_assert!(t.f2.abs() <= t.f1 + 1e-15 && t.f4.abs() <= t.f3 + 1e-15);
        prop_assert!(t.f5 * t.f5 <= t.quartic_bound() + 1e-15);
        prop_assert!((x_norm(&mut rng) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn conjugation_flips_nu_only(mut rng in seeded()) {
        let x = sampling::cp3_point(&mut rng);
        let (t, s) = (invariants(&x), invariants(&x.conj()));
        prop_assert!((t.nu + s.nu).abs() < 1e-15);
        let (t0, s0) = (InvariantTuple { nu: 0.0, ..t }, InvariantTuple { nu: 0.0, ..s });
        prop_assert!(tuples_close(&t0, &s0, 1e-15));
    }

    #[test]
    fn section_covers_the_point(mut rng in seeded()) {
        let x = sampling::cp3_point(&mut rng);
        let g = section_sp2(&x).unwrap();
        prop_assert!(g.unitarity_defect() < 1e-10);
        prop_assert!(project_to_cp3(&g).unwrap().distance(&x) < 1e-12);
    }

    #[test]
    fn c_f_is_isospectral_to_xi(mut rng in seeded(), k in 1i32..4, m in 4i32..7) {
        let w = WeightPair::new(k, m).unwrap();
        let x = sampling::cp3_point(&mut rng);
        let s = c_f(&x, w).unwrap();
        prop_assert!(s.matrix().skew_defect() < 1e-12);
        prop_assert!(s.eigenvalues().max_diff(&Spectrum::new(k as f64, m as f64)) < 1e-10);
    }
}

fn x_norm(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    sampling::cp3_point(rng).coords().iter().map(|z| z.norm_sqr()).sum::<f64>()
}
