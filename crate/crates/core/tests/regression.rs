//! Pinned values for the Gaussian witness, the golden-ratio analogue over Z[i].

use badflow::bad_approx::{bad_constant_witness, in_bad_eps, ComplexVector};
use badflow::dani_flow::*;
use badflow::dimension_lab::{survey, SliceWeights, Window, DEFAULT_HEIGHT_CONSTANT};
use badflow::number_field::{AlgebraicInt, FieldSpec, NumberField, WeightVector};
use badflow::real::complex_to_f64;

fn gauss() -> NumberField {
    NumberField::new(FieldSpec::quadratic(1)).unwrap()
}

#[test]
fn witness_bad_constant_is_pinned() {
    let k = gauss();
    let r = WeightVector::balanced(2);
    let z = ComplexVector::conjugate_pair(complex_to_f64(gaussian_witness())).unwrap();
    for qmax in [15.0, 40.0] {
        let b = bad_constant_witness(&k, &r, &z, qmax);
        assert!((b.value - WITNESS_BAD_CONSTANT).abs() < 1e-9, "{}", b.value);
        assert_eq!(b.q, AlgebraicInt::new(vec![-1, -2]));
    }
    let zh = ComplexVector::conjugate_pair(gaussian_witness()).unwrap();
    assert!(in_bad_eps(&k, &r, 0.45, &zh, 1e4).unwrap().verdict);
    assert!(!in_bad_eps(&k, &r, 0.46, &zh, 1e4).unwrap().verdict);
}

#[test]
fn witness_orbit_is_bounded_and_systole_matches_quality() {
    let k = gauss();
    let r = WeightVector::balanced(2);
    let z = ComplexVector::conjugate_pair(gaussian_witness()).unwrap();
    let p = systole_profile(&k, &r, &z, 20.0, 201, true).unwrap();
    assert!((p.min_systole - WITNESS_MIN_SYSTOLE).abs() < 1e-7);
    // Along the orbit each vector has squared length at least 2|q||qz+p|, with
    // equality at one time, so the grid minimum sits just above the bound.
    let gap = p.min_systole.powi(2) - 2.0 * WITNESS_BAD_CONSTANT;
    assert!((0.0..1e-4).contains(&gap), "{gap}");
    let v = classify_orbit(&p, WITNESS_MIN_SYSTOLE / 2.0, DEFAULT_SLOPE_TOL);
    assert_eq!(v.verdict, Verdict::Bounded);
}

#[test]
fn survey_counts_are_pinned() {
    let k = gauss();
    let expect: [(f64, [usize; 6]); 3] = [
        (0.05, [48, 216, 880, 3484, 14096, 55908]),
        (0.15, [40, 156, 640, 2404, 9660, 37100]),
        (0.3, [12, 36, 128, 500, 1560, 5424]),
    ];
    for (eps, counts) in expect {
        let s = survey(&k, eps, Window::unit(), 3..=8, DEFAULT_HEIGHT_CONSTANT, SliceWeights::Balanced).unwrap();
        let got: Vec<usize> = s.levels.iter().map(|l| l.survivors).collect();
        assert_eq!(got, counts, "eps {eps}");
    }
}
