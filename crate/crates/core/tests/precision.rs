use proptest::prelude::*;
use xi_jensen::precision::{integrate_decaying, refine_until, DecayingIntegrand, QuadratureSpec, RAD_PREC};
use xi_jensen::rug::{Float, Rational};
use xi_jensen::{Error, PrecCtx, Real};

fn encloses(x: &Real, q: &Rational) -> bool {
    x.lower() <= *q && x.upper() >= *q
}

fn rat(num: i64, den: i64) -> Rational {
    Rational::from((num, den))
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-10_000i64..10_000, 1i64..2_000).prop_map(|(a, b)| rat(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn arithmetic_encloses_exact_result(x in small_rational(), y in small_rational(), prec in 20u32..120) {
        let (bx, by) = (Real::from_rational(&x, prec), Real::from_rational(&y, prec));
        prop_assert!(encloses(&bx, &x));
        prop_assert!(encloses(&(&bx + &by), &Rational::from(&x + &y)));
        prop_assert!(encloses(&(&bx - &by), &Rational::from(&x - &y)));
        prop_assert!(encloses(&(&bx * &by), &Rational::from(&x * &y)));
        prop_assert!(encloses(&bx.sqr(), &Rational::from(x.square_ref())));
        prop_assert!(encloses(&bx.pow_u(5), &(0..5).fold(Rational::from(1), |p, _| p * &x)));
        if y.cmp0().is_ne() {
            prop_assert!(encloses(&bx.div(&by), &Rational::from(&x / &y)));
        }
    }

    #[test]
    fn chained_operations_stay_sound(xs in prop::collection::vec(small_rational(), 2..12)) {
        let prec = 40;
        let mut exact = Rational::new();
        let mut ball = Real::zero(prec);
        for (i, x) in xs.iter().enumerate() {
            let b = Real::from_rational(x, prec);
            if i % 2 == 0 {
                exact += x;
                ball = &ball + &b;
            } else {
                exact *= x;
                ball = &ball * &b;
            }
        }
        prop_assert!(encloses(&ball, &exact));
    }

    #[test]
    fn elementary_functions_contain_high_precision_value(a in 1i64..5000, b in 1i64..500) {
        let q = rat(a, b);
        let lo = Real::from_rational(&q, 64);
        let hi = Real::from_rational(&q, 1024);
        for (l, h) in [(lo.exp(), hi.exp()), (lo.ln(), hi.ln()), (lo.sqrt(), hi.sqrt()), (lo.atan(), hi.atan())] {
            prop_assert!(l.contains(&h) || l.overlaps(&h), "{} vs {}", l, h);
            prop_assert!(l.contains_float(h.mid()));
        }
    }
}

#[test]
fn sign_decisions() {
    let x = Real::from_f64(0.5, 64);
    assert_eq!(x.sign(), Some(std::cmp::Ordering::Greater));
    let z = Real::from_bounds(&Float::with_val(64, -1), &Float::with_val(64, 1), 64);
    assert!(z.sign().is_none());
    assert!(z.contains_zero());
    assert!(!Real::indeterminate(64).is_finite());
}

#[test]
fn decimal_round_trip_keeps_enclosure() {
    let x = Real::pi(200).add_error(&(Float::with_val(RAD_PREC, 1) >> 180u32));
    let (m, r) = x.to_decimal_strings();
    let y = Real::from_decimal_strs(&m, &r, 200).unwrap();
    assert!(y.contains(&x));
}

#[test]
fn schedule_grows_to_ceiling() {
    let ctx = PrecCtx::new(64, 1000).unwrap();
    let bits: Vec<u32> = ctx.schedule().map(|c| c.bits()).collect();
    assert_eq!(bits, vec![64, 128, 256, 512, 1000]);
    assert!(PrecCtx::new(32, 1000).is_err());
    assert!(PrecCtx::new(256, 128).is_err());
}

#[test]
fn refine_until_escalates_then_gives_up() {
    let ctx = PrecCtx::new(64, 512).unwrap();
    let got = refine_until(|c| Ok(c.bits()), |b: &u32| *b >= 200, &ctx).unwrap();
    assert_eq!(got, 256);
    let err = refine_until(|c| Ok(c.bits()), |_: &u32| false, &ctx).unwrap_err();
    assert!(err.is_precision_limited());
    let hard = refine_until(|_| Err::<u32, _>(Error::Domain("x".into())), |_| true, &ctx).unwrap_err();
    assert!(!hard.is_precision_limited());
}

/// `t^{-3/4} e^{-πt}` on `[1, ∞)`.
struct PowerExp;

impl DecayingIntegrand for PowerExp {
    fn eval(&self, x: &Real, prec: u32) -> Real {
        let p = Real::pi(prec);
        &x.pow(&Real::from_f64(-0.75, prec)) * &(-&(&p * x)).exp()
    }

    fn rect_bound(&self, x0: &Float, _x1: &Float, y: &Float) -> Option<Float> {
        // |t^{-3/4}| ≤ |Re t|^{-3/4} and |e^{-πt}| = e^{-π Re t} on Re t ≥ x0 > 0
        if *x0 <= 0 || y.is_infinite() {
            return None;
        }
        let x = x0.to_f64();
        Some(Float::with_val(RAD_PREC, 1.01 * x.powf(-0.75) * (-std::f64::consts::PI * x).exp()))
    }

    fn tail_bound(&self, x: &Float) -> Option<Float> {
        let x = x.to_f64();
        (x >= 1.0).then(|| Float::with_val(RAD_PREC, 1.01 * (-std::f64::consts::PI * x).exp() / std::f64::consts::PI))
    }
}

#[test]
fn quadrature_matches_reference_integral() {
    let spec = QuadratureSpec::new(1e-35, 1.0, 6.0).unwrap();
    let v = integrate_decaying(&PowerExp, &spec, &PrecCtx::new(160, 640).unwrap()).unwrap();
    let r = Real::from_decimal_strs("0.011516624383000256101817256447571273043139998396073", "1e-45", 160).unwrap();
    assert!(v.overlaps(&r), "{v}");
    assert!(v.rel_width() < 1e-33);
}
