use proptest::prelude::*;
use xi_jensen::rug::Float;
use xi_jensen::xi_taylor::{
    eval_f, eval_f_truncated, gamma, gamma_asym, gamma0_direct, theta_tail_bound, CoefficientSource, GammaTable,
    Provenance, XiCoefficients, CACHE_VERSION,
};
use xi_jensen::{PrecCtx, Real};

fn ctx(bits: u32) -> PrecCtx {
    PrecCtx::new(bits, 4 * bits).unwrap()
}

fn reference(s: &str, prec: u32) -> Real {
    let x = Real::from_decimal_strs(s, "0", prec).unwrap();
    let r = x.mid().clone().abs() * 1e-38f64;
    x.add_error(&r)
}

#[test]
fn f18_reference() {
    let f = eval_f(18.0, &ctx(160)).unwrap();
    assert!(f.overlaps(&reference("0.00094402748217223928700832363453357755925773034915961", 160)), "{f}");
    assert!(f.rel_width() < 1e-40);
}

#[test]
fn gamma_reference_values() {
    let c = ctx(192);
    for (m, s) in [
        (3, "0.000004994132888313162432028552355067724221758"),
        (10, "2.040422561287677448093202259496361919181e-18"),
    ] {
        let g = gamma(m, &c).unwrap();
        assert!(g.overlaps(&reference(s, 192)), "gamma({m}) = {g}");
        assert!(g.is_positive());
    }
    assert!(gamma(0, &c).is_err());
}

#[test]
fn truncated_theta_within_tail_bound() {
    let c = ctx(160);
    for z in [0.0, 6.0, 40.0] {
        let full = eval_f(z, &c).unwrap();
        let one = eval_f_truncated(z, 1, &c).unwrap();
        let bound = theta_tail_bound(z, 1, &c).unwrap();
        let diff = (&full - &one).abs();
        assert!(diff.lower() <= bound, "z = {z}: {diff} vs {bound}");
        // the second term is about e^{-3π} of the first near t = 1
        assert!(bound < (one.mid().clone() * 1e-3f64));
    }
}

#[test]
fn gamma0_is_xi_half() {
    let g = gamma0_direct(&ctx(256)).unwrap();
    assert!(g.overlaps(&reference("0.49712077818831410991277373968539771980729360955771", 256)));
    assert!(g.rel_width() <= 1e-30);
}

#[test]
fn small_table_is_positive_log_concave_and_round_trips() {
    let mut t = GammaTable::new();
    assert_eq!(t.fill(0..=30, &ctx(192)).unwrap(), 31);
    let a = t.audit();
    assert!(a.passed(), "{a:?}");
    assert!(a.not_decreasing.is_empty());
    assert_eq!(t.get(0).unwrap().provenance, Provenance::Direct);
    assert_eq!(t.get(7).unwrap().provenance, Provenance::Integral);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    t.save(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with(CACHE_VERSION));
    let back = GammaTable::load(&path).unwrap();
    assert_eq!(back.len(), t.len());
    for (m, e) in t.iter() {
        let b = back.get(m).unwrap();
        assert!(b.value.contains(&e.value), "M = {m}");
        assert_eq!(b.bits_used, e.bits_used);
        assert_eq!(b.provenance, e.provenance);
    }
    // a second fill finds nothing to do
    let mut again = back;
    assert_eq!(again.fill(0..=30, &ctx(192)).unwrap(), 0);
}

#[test]
fn cache_rejects_bad_input() {
    assert!(GammaTable::read_from("M,midpoint\n1,2\n".as_bytes()).is_err());
    let neg = format!("{CACHE_VERSION}\nM,midpoint,radius,bits_used,provenance\n3,-1.0,0,128,Direct\n");
    assert!(GammaTable::read_from(neg.as_bytes()).is_err());
    let mut t = GammaTable::new();
    assert!(t.insert(1, Real::from_f64(-0.5, 64), 64, Provenance::Direct).is_err());
    assert!(t.value(4).is_err());
}

#[test]
fn on_demand_source_matches_direct_computation() {
    let src = XiCoefficients::new(ctx(160));
    let a = src.coefficient(4, 160).unwrap();
    let b = gamma(4, &ctx(160)).unwrap();
    assert!(a.overlaps(&b));
    assert_eq!(src.snapshot().len(), 1);
    // a sharper request recomputes
    let c = src.coefficient(4, 320).unwrap();
    assert!(c.rel_width() < a.rel_width());
    assert!(src.snapshot().get(4).unwrap().bits_used >= 320);
}

#[test]
fn asymptotic_ratio_tends_to_one() {
    let c = ctx(192);
    let mut t = GammaTable::new();
    t.fill([10, 40, 160], &c).unwrap();
    let dev = |m: u64| (t.value(m).unwrap().div(&gamma_asym(m, &c).unwrap()).to_f64() - 1.0).abs();
    let (d10, d40, d160) = (dev(10), dev(40), dev(160));
    assert!(d40 < d10 && d160 < d40, "{d10} {d40} {d160}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cache_round_trip_contains_every_value(
        vals in prop::collection::btree_map(0u64..500, (1e-300f64..1e3, 0u32..200, 64u32..400), 1..40)
    ) {
        let mut t = GammaTable::new();
        for (&m, &(x, shift, bits)) in &vals {
            let v = Real::from_f64(x, bits).add_error(&(Float::with_val(64, x) >> (shift + 10)));
            t.insert(m, v, bits, Provenance::Integral).unwrap();
        }
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let back = GammaTable::read_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), t.len());
        for (m, e) in t.iter() {
            prop_assert!(back.value(m).unwrap().contains(&e.value));
        }
    }
}
