use badflow::bad_approx::{bad_constant_up_to_height, delta_box, quality, ComplexVector};
use badflow::number_field::{AlgebraicInt, FieldSpec, NumberField, WeightVector};
use badflow::real::{Hp, Real};
use num_complex::Complex;
use proptest::prelude::*;

fn field(d: u64) -> NumberField {
    NumberField::new(FieldSpec::quadratic(d)).unwrap()
}

fn nonzero() -> impl Strategy<Value = (i64, i64)> {
    (-9i64..=9, -9i64..=9).prop_filter("nonzero", |&(a, b)| a != 0 || b != 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn quality_is_unit_invariant(
        d in prop::sample::select(vec![1u64, 2, 3, 7]),
        (zr, zi) in (-2.0f64..2.0, -2.0f64..2.0),
        p in (-9i64..=9, -9i64..=9),
        q in nonzero(),
    ) {
        let k = field(d);
        let r = WeightVector::balanced(2);
        let z = ComplexVector::conjugate_pair(Complex::new(zr, zi)).unwrap();
        let (p, q) = (AlgebraicInt::new(vec![p.0, p.1]), AlgebraicInt::new(vec![q.0, q.1]));
        let base = quality(&k, &r, &z, &p, &q).unwrap();
        let unit = k.from_int(-1);
        let v = quality(&k, &r, &z, &k.mul(&unit, &p), &k.mul(&unit, &q)).unwrap();
        prop_assert!((v - base).abs() <= 1e-12 * base.max(1.0));
        if d == 1 {
            let i = AlgebraicInt::new(vec![0, 1]);
            let v = quality(&k, &r, &z, &k.mul(&i, &p), &k.mul(&i, &q)).unwrap();
            prop_assert!((v - base).abs() <= 1e-12 * base.max(1.0));
        }
    }

    #[test]
    fn box_centre_is_inside_and_far_points_are_not(
        d in prop::sample::select(vec![1u64, 3, 11]),
        eps in 0.01f64..1.0,
        p in (-9i64..=9, -9i64..=9),
        q in nonzero(),
    ) {
        let k = field(d);
        let r = WeightVector::balanced(2);
        let (p, q) = (AlgebraicInt::new(vec![p.0, p.1]), AlgebraicInt::new(vec![q.0, q.1]));
        let bx = delta_box::<Hp>(&k, &r, Hp::from_f64(eps), &p, &q).unwrap();
        prop_assert!(bx.contains(&bx.center));
        let far: Vec<Complex<Hp>> = bx.center.iter().zip(&bx.radii)
            .map(|(c, rad)| *c + Complex::new(*rad * Hp::from_f64(1.01), Hp::from_f64(0.0)))
            .collect();
        prop_assert!(!bx.contains(&far));
        let v = quality(&k, &r, &ComplexVector::new(far).unwrap(), &-&p, &q).unwrap();
        prop_assert!(v > Hp::from_f64(eps));
    }

    #[test]
    fn bad_constant_does_not_grow_with_height(
        (zr, zi) in (0.0f64..1.0, 0.0f64..1.0),
        lo in 2.0f64..8.0,
        extra in 1.0f64..8.0,
    ) {
        let k = field(1);
        let r = WeightVector::balanced(2);
        let z = ComplexVector::conjugate_pair(Complex::new(zr, zi)).unwrap();
        let a = bad_constant_up_to_height(&k, &r, &z, lo);
        let b = bad_constant_up_to_height(&k, &r, &z, lo + extra);
        prop_assert!(b <= a + 1e-15);
    }
}
