use badflow::bad_approx::{in_bad_eps, ComplexVector};
use badflow::game_engine::*;
use badflow::number_field::{FieldSpec, NumberField, WeightVector};
use badflow::real::{Hp, Real};
use num_complex::Complex;

fn gauss() -> NumberField {
    NumberField::new(FieldSpec::quadratic(1)).unwrap()
}

fn config(rounds: usize) -> GameConfig {
    GameConfig {
        beta: 0.3,
        kind: GameKind::Hp { gamma: 1.0 },
        rounds,
        initial: Ball::from_f64(&[Complex::new(0.4, -0.4), Complex::new(0.4, 0.4)], 0.9).unwrap(),
    }
}

fn hp(re: f64, im: f64) -> Complex<Hp> {
    Complex::new(Hp::from_f64(re), Hp::from_f64(im))
}

#[test]
fn greedy_toward_a_ratio_point_gets_blocked_and_misses_it() {
    let k = gauss();
    let r = WeightVector::balanced(2);
    // 1/(1+i) = (1-i)/2
    let target = vec![hp(0.5, -0.5), hp(0.5, 0.5)];
    let mut a = BadStrategy::new(k.clone(), r.clone(), 0.3, 1.0).unwrap();
    let t = run_game(&config(40), &mut a, &mut Adversary::greedy(target.clone(), 2)).unwrap();
    assert!(t.audit.ok(), "{:?}", t.audit.failures);
    assert!(t.a_moves.iter().any(|m| !m.is_empty()));
    let c = t.constants.clone().unwrap();
    let hmax = c.h(t.max_class.unwrap() as i64 + 1).to_f64();
    let limit = ComplexVector::new(t.limit_point.clone()).unwrap();
    assert!(in_bad_eps(&k, &r, c.eps().to_f64(), &limit, hmax).unwrap().verdict);
    let last = t.balls.last().unwrap();
    assert!(!last.contains_point(&target));
}

#[test]
fn transcripts_survive_json_and_replay() {
    let k = gauss();
    let r = WeightVector::balanced(2);
    let mut a = BadStrategy::new(k, r, 0.3, 1.0).unwrap();
    let t = run_game(&config(25), &mut a, &mut Adversary::random(9)).unwrap();
    assert_eq!(t.balls.len(), 26);
    assert_eq!(t.a_moves.len(), 25);
    let back: Transcript = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
    assert!(replay(&back).unwrap().ok());
    assert_eq!(back.limit_point, t.balls.last().unwrap().center);
}

#[test]
fn tampered_transcript_fails_replay() {
    let k = gauss();
    let r = WeightVector::balanced(2);
    let mut a = BadStrategy::new(k, r, 0.3, 1.0).unwrap();
    let mut t = run_game(&config(10), &mut a, &mut Adversary::random(4)).unwrap();
    t.balls[5].radius *= Hp::from_f64(2.0);
    let verdict = replay(&t);
    assert!(verdict.map_or(true, |a| !a.ok()));
}

#[test]
fn radii_shrink_by_at_least_beta() {
    let mut a = TrivialA;
    let t = run_game(&config(30), &mut a, &mut Adversary::random(1)).unwrap();
    let radii = t.radii();
    assert!(radii.windows(2).all(|w| w[1] >= 0.3 * w[0] * (1.0 - 1e-12) && w[1] <= w[0]));
    assert!(t.audit.ok());
}
