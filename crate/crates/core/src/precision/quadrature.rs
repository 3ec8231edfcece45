//! Rigorous quadrature on `[a, ∞)` for integrands that decay fast enough to
//! supply an explicit tail bound.
//!
//! The finite part is split into panels. Each panel is integrated either by
//! Gauss–Legendre with the classical Bernstein-ellipse error bound, or, when
//! that is worse, by the crude enclosure `(b - a) * f([a, b])`. Panels are
//! bisected until the accumulated radius meets the target, and the cutoff is
//! pushed out until the integrand's tail bound is negligible.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use rayon::prelude::*;
use rug::Float;

use super::{PrecCtx, Real, RAD_PREC};
use crate::error::{Error, Result};

/// An integrand on `[lower, ∞)` with the bounds the quadrature needs.
pub trait DecayingIntegrand: Sync {
    /// Enclosure of `f(x)` for every `x` in the ball, at working precision `prec`.
    fn eval(&self, x: &Real, prec: u32) -> Real;

    /// Upper bound for `|f|` on the complex rectangle `[x0, x1] × [-y, y]`,
    /// or `None` if `f` is not known to be analytic there.
    fn rect_bound(&self, x0: &Float, x1: &Float, y: &Float) -> Option<Float>;

    /// Upper bound for `∫_x^∞ |f|`, or `None` if none is available at `x`.
    fn tail_bound(&self, x: &Float) -> Option<Float>;

    /// Points in `(lower, upper)` where a panel boundary is useful, e.g. near a peak.
    fn breakpoints(&self, _lower: f64, _upper: f64) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Clone, Debug)]
pub struct QuadratureSpec {
    /// Accepted relative radius of the result.
    pub target_rel_error: Float,
    pub lower_limit: f64,
    /// First cutoff `T`. While the tail bound at `T` is too large compared
    /// with the target, `T` moves to `lower + 2 (T - lower)`.
    pub initial_cutoff: f64,
}

impl QuadratureSpec {
    pub fn new(target_rel_error: f64, lower_limit: f64, initial_cutoff: f64) -> Result<Self> {
        if !(target_rel_error > 0.0 && target_rel_error < 1.0) {
            return Err(Error::Domain(format!(
                "target relative error {target_rel_error} is not in (0, 1)"
            )));
        }
        Self::checked(Float::with_val(RAD_PREC, target_rel_error), lower_limit, initial_cutoff)
    }

    /// Spec with target `2^-bits`.
    pub fn with_target_bits(bits: u32, lower_limit: f64, initial_cutoff: f64) -> Result<Self> {
        Self::checked(Float::with_val(RAD_PREC, 1) >> bits, lower_limit, initial_cutoff)
    }

    fn checked(target: Float, lower_limit: f64, initial_cutoff: f64) -> Result<Self> {
        if !(initial_cutoff > lower_limit) || !lower_limit.is_finite() || !initial_cutoff.is_finite() {
            return Err(Error::Domain(format!(
                "cutoff {initial_cutoff} must lie above the lower limit {lower_limit}"
            )));
        }
        Ok(QuadratureSpec {
            target_rel_error: target,
            lower_limit,
            initial_cutoff,
        })
    }
}

/// Working bits added on top of the context precision.
const GUARD_BITS: u32 = 24;
const MAX_PANELS: usize = 50_000;
const MAX_ROUNDS: usize = 400;
const RHOS: [f64; 13] = [1.1, 1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 64.0];

/// Encloses `∫_{lower}^∞ f` to the requested relative accuracy, escalating the
/// working precision through `ctx` when rounding prevents that.
pub fn integrate_decaying<F: DecayingIntegrand + ?Sized>(
    f: &F,
    spec: &QuadratureSpec,
    ctx: &PrecCtx,
) -> Result<Real> {
    let mut last = None;
    for c in ctx.schedule() {
        match integrate_at(f, spec, c.bits() + GUARD_BITS) {
            Ok(v) => return Ok(v.with_prec(c.bits())),
            Err(e) if e.is_precision_limited() => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::exhausted(ctx.max_bits(), "quadrature")))
}

/// Gauss–Legendre nodes in `(0, 1)` with their weights; the rule uses `±x`.
struct GaussRule {
    nodes: Vec<Real>,
    weights: Vec<Real>,
}

impl GaussRule {
    fn len(&self) -> u32 {
        2 * self.nodes.len() as u32
    }
}

static RULES: LazyLock<Mutex<HashMap<(u32, u32), Arc<GaussRule>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

fn nodes_for(prec: u32) -> u32 {
    let n = (prec + 16).div_ceil(6).max(16);
    n + n % 2
}

fn gauss_rule(n: u32, prec: u32) -> Result<Arc<GaussRule>> {
    if let Some(r) = RULES.lock().unwrap().get(&(n, prec)) {
        return Ok(r.clone());
    }
    let rule = Arc::new(build_gauss_rule(n, prec)?);
    RULES.lock().unwrap().insert((n, prec), rule.clone());
    Ok(rule)
}

/// `(P_n(x), P_{n-1}(x))` by the three-term recurrence.
fn legendre(n: u32, x: &Real) -> (Real, Real) {
    let prec = x.prec();
    let mut p0 = Real::one(prec);
    let mut p1 = x.clone();
    for k in 1..n as i64 {
        let a = (x * &p1).mul_i64(2 * k + 1);
        let b = p0.mul_i64(k);
        let p2 = (&a - &b).div_i64(k + 1);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

fn legendre_f(n: u32, x: &Float) -> (Float, Float) {
    let prec = x.prec();
    let mut p0 = Float::with_val(prec, 1);
    let mut p1 = x.clone();
    for k in 1..n {
        let mut p2 = Float::with_val(prec, x * &p1) * (2 * k + 1);
        p2 -= Float::with_val(prec, &p0 * k);
        p2 /= k + 1;
        p0 = std::mem::replace(&mut p1, p2);
    }
    (p1, p0)
}

fn build_gauss_rule(n: u32, prec: u32) -> Result<GaussRule> {
    // ball radii in the three-term recurrence grow like (1 + √2)^n
    let wp = prec + 40 + 2 * n;
    let eps = Float::with_val(wp, 1) >> (prec + 8);
    let mut nodes = Vec::with_capacity(n as usize / 2);
    let mut weights = Vec::with_capacity(n as usize / 2);
    let nf = n as f64;
    for i in 1..=n / 2 {
        let guess = (std::f64::consts::PI * (i as f64 - 0.25) / (nf + 0.5)).cos();
        let mut x = Float::with_val(wp, guess);
        for _ in 0..64 {
            let (p, q) = legendre_f(n, &x);
            // P_n' = n (x P_n - P_{n-1}) / (x^2 - 1)
            let x2m1 = Float::with_val(wp, x.square_ref()) - 1u32;
            let dp = Float::with_val(wp, &x * &p) - &q;
            let dp = dp * n / x2m1;
            let step = p / dp;
            x -= &step;
            if step.is_zero() || step.get_exp().is_some_and(|e| e < -(wp as i32) + 4) {
                break;
            }
        }
        let lo = Float::with_val(wp, &x - &eps);
        let hi = Float::with_val(wp, &x + &eps);
        let plo = legendre(n, &Real::from_float(lo.clone())).0;
        let phi = legendre(n, &Real::from_float(hi.clone())).0;
        let bracketed = matches!(
            (plo.sign(), phi.sign()),
            (Some(a), Some(b)) if a != b
        );
        if !bracketed {
            return Err(Error::exhausted(prec, format!("Gauss-Legendre node {i} of {n}")));
        }
        let node = Real::from_bounds(&lo, &hi, wp);
        // P_{n-1} on the node ball: value at the centre plus Markov's bound
        // |P_k'| <= k(k+1)/2 on [-1, 1] times the radius
        let (_, q) = legendre(n, &Real::from_float(node.mid().clone()));
        let slope = Float::with_val(RAD_PREC, (n as u64 - 1) * n as u64 / 2);
        let q = q.add_error(&Float::with_val_round(RAD_PREC, &slope * node.rad(), rug::float::Round::Up).0);
        let omx2 = &Real::one(wp) - &node.sqr();
        // w = 2 (1 - x^2) / (n P_{n-1})^2, using P_n(x) = 0
        let w = omx2.mul_2si(1).div(&q.mul_i64(n as i64).sqr());
        nodes.push(node.with_prec(prec));
        weights.push(w.with_prec(prec));
    }
    for pair in nodes.windows(2) {
        if pair[0].overlaps(&pair[1]) {
            return Err(Error::exhausted(prec, "Gauss-Legendre nodes not separated"));
        }
    }
    if nodes.last().is_some_and(|x| !x.is_positive()) {
        return Err(Error::exhausted(prec, "Gauss-Legendre nodes not separated"));
    }
    Ok(GaussRule { nodes, weights })
}

#[derive(Clone)]
struct Panel {
    a: f64,
    b: f64,
    est: Option<Real>,
}

fn real64(x: f64) -> Real {
    Real::from_f64(x, RAD_PREC)
}

/// Best Bernstein-ellipse bound for the Gauss–Legendre error on `[a, b]`.
fn ellipse_error<F: DecayingIntegrand + ?Sized>(f: &F, a: f64, b: f64, n: u32) -> Option<Float> {
    let hw = (&real64(b) - &real64(a)).mul_2si(-1);
    let c = (&real64(b) + &real64(a)).mul_2si(-1);
    let mut best: Option<Float> = None;
    for &rho in &RHOS {
        let r = real64(rho);
        let ri = r.recip();
        let maj = (&hw * &(&r + &ri)).mul_2si(-1);
        let min = (&hw * &(&r - &ri)).mul_2si(-1);
        let x0 = (&c - &maj).lower();
        let x1 = (&c + &maj).upper();
        let y = min.upper();
        let Some(m) = f.rect_bound(&x0, &x1, &y) else {
            continue;
        };
        if !m.is_finite() {
            continue;
        }
        // hw * (64/15) * M * rho^(-2n) / (rho^2 - 1)
        let e = (&hw * &Real::from_float(m)).mul_i64(64).div_i64(15);
        let e = e.div(&(&r.pow_u(2 * n) * &(&r.sqr() - &Real::one(RAD_PREC))));
        let e = e.upper();
        if best.as_ref().map_or(true, |b| e < *b) {
            best = Some(e);
        }
    }
    best
}

fn gauss_panel<F: DecayingIntegrand + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    rule: &GaussRule,
    prec: u32,
) -> Result<Real> {
    let ra = Real::from_f64(a, prec);
    let rb = Real::from_f64(b, prec);
    let hw = (&rb - &ra).mul_2si(-1);
    let c = (&rb + &ra).mul_2si(-1);
    let mut acc = Real::zero(prec);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let dx = &hw * x;
        let s = &f.eval(&(&c + &dx), prec) + &f.eval(&(&c - &dx), prec);
        if !s.is_finite() {
            return Err(Error::Domain(format!(
                "integrand has no finite enclosure near {}",
                c.to_f64()
            )));
        }
        acc = &acc + &(w * &s);
    }
    Ok(&acc * &hw)
}

fn eval_panel<F: DecayingIntegrand + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    rule: &GaussRule,
    prec: u32,
    budget: Option<&Float>,
) -> Result<Real> {
    let ball = Real::from_bounds(&Float::with_val(prec, a), &Float::with_val(prec, b), prec);
    let width = &Real::from_f64(b, prec) - &Real::from_f64(a, prec);
    let crude = &f.eval(&ball, prec) * &width;
    if crude.is_finite() && budget.is_some_and(|t| crude.rad() <= t) {
        return Ok(crude);
    }
    let Some(err) = ellipse_error(f, a, b, rule.len()) else {
        return Ok(crude);
    };
    let hopeless = budget.is_some_and(|t| &err > t);
    if crude.is_finite() && (&err >= crude.rad() || hopeless) {
        return Ok(crude);
    }
    let gl = gauss_panel(f, a, b, rule, prec)?.add_error(&err);
    if crude.is_finite() && crude.rad() < gl.rad() {
        Ok(crude)
    } else {
        Ok(gl)
    }
}

fn split_uniform(a: f64, b: f64, cuts: &[f64], pieces: usize) -> Vec<Panel> {
    let mut pts: Vec<f64> = (0..=pieces)
        .map(|i| a + (b - a) * i as f64 / pieces as f64)
        .collect();
    pts.extend(cuts.iter().copied().filter(|&x| x > a && x < b));
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    pts.windows(2)
        .map(|w| Panel {
            a: w[0],
            b: w[1],
            est: None,
        })
        .collect()
}

fn integrate_at<F: DecayingIntegrand + ?Sized>(f: &F, spec: &QuadratureSpec, prec: u32) -> Result<Real> {
    let n = nodes_for(prec);
    let rule = gauss_rule(n, prec)?;
    let lower = spec.lower_limit;
    let mut upper = spec.initial_cutoff;
    let mut panels = split_uniform(lower, upper, &f.breakpoints(lower, upper), 16);
    let mut budget: Option<Float> = None;

    for _ in 0..MAX_ROUNDS {
        let b = budget.clone();
        panels
            .par_iter_mut()
            .filter(|p| p.est.is_none())
            .map(|p| {
                p.est = Some(eval_panel(f, p.a, p.b, &rule, prec, b.as_ref())?);
                Ok(())
            })
            .collect::<Result<()>>()?;

        let total: Real = panels.iter().map(|p| p.est.clone().unwrap()).sum();
        let tail = f
            .tail_bound(&Float::with_val(RAD_PREC, upper))
            .unwrap_or_else(|| Float::with_val(RAD_PREC, rug::float::Special::Infinity));

        if total.is_exact_zero() && tail.is_zero() {
            return Ok(Real::zero(prec));
        }
        let tol = Float::with_val_round(RAD_PREC, total.mig() * &spec.target_rel_error, rug::float::Round::Down).0;

        if !tol.is_zero() && Float::with_val(RAD_PREC, &tail * 4u32) > tol {
            let next = lower + 2.0 * (upper - lower);
            if !next.is_finite() {
                return Err(Error::Domain("tail bound never becomes small".into()));
            }
            panels.extend(split_uniform(upper, next, &f.breakpoints(upper, next), 16));
            upper = next;
            continue;
        }

        let rad_sum = panels
            .iter()
            .fold(Float::new(RAD_PREC), |s, p| {
                Float::with_val_round(RAD_PREC, &s + p.est.as_ref().unwrap().rad(), rug::float::Round::Up).0
            });
        let three_q = Float::with_val(RAD_PREC, &tol * 3u32) >> 2u32;
        if !tol.is_zero() && rad_sum <= three_q {
            let out = total.add_error(&tail);
            if out.rel_radius() <= spec.target_rel_error {
                return Ok(out);
            }
            return Err(Error::exhausted(prec, "quadrature rounding error above target"));
        }

        // Split the widest-radius panels until what is left fits in half the budget.
        let mut order: Vec<usize> = (0..panels.len()).collect();
        order.sort_by(|&i, &j| {
            let ri = panels[i].est.as_ref().unwrap().rad();
            let rj = panels[j].est.as_ref().unwrap().rad();
            ri.partial_cmp(rj).unwrap_or(std::cmp::Ordering::Equal)
        });
        let half = Float::with_val(RAD_PREC, &tol >> 1u32);
        let mut kept = Float::new(RAD_PREC);
        let mut split = vec![false; panels.len()];
        for &i in &order {
            let r = panels[i].est.as_ref().unwrap().rad();
            let next = Float::with_val_round(RAD_PREC, &kept + r, rug::float::Round::Up).0;
            if !tol.is_zero() && next <= half {
                kept = next;
            } else {
                split[i] = true;
            }
        }
        if tol.is_zero() {
            // No usable scale yet: refine the worse half.
            for (k, &i) in order.iter().enumerate() {
                split[i] = 2 * k >= order.len();
            }
        }
        let per_panel = Float::with_val(RAD_PREC, &half / (panels.len() as u32 * 2));
        budget = if tol.is_zero() { None } else { Some(per_panel) };

        let mut next = Vec::with_capacity(panels.len() * 2);
        for (p, s) in panels.into_iter().zip(split) {
            if !s {
                next.push(p);
                continue;
            }
            let m = 0.5 * (p.a + p.b);
            if !(m > p.a && m < p.b) || (p.b - p.a) < 1e-30 * (1.0 + p.a.abs()) {
                return Err(Error::exhausted(prec, "quadrature panel became too narrow"));
            }
            next.push(Panel { a: p.a, b: m, est: None });
            next.push(Panel { a: m, b: p.b, est: None });
        }
        panels = next;
        if panels.len() > MAX_PANELS {
            return Err(Error::exhausted(prec, "quadrature needs too many panels"));
        }
    }
    Err(Error::exhausted(prec, "quadrature did not converge"))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct ExpDecay;

    impl DecayingIntegrand for ExpDecay {
        fn eval(&self, x: &Real, _prec: u32) -> Real {
            (-x).exp()
        }
        fn rect_bound(&self, x0: &Float, _x1: &Float, _y: &Float) -> Option<Float> {
            Some((-Real::from_float(x0.clone())).exp().upper())
        }
        fn tail_bound(&self, x: &Float) -> Option<Float> {
            Some((-Real::from_float(x.clone())).exp().upper())
        }
    }

    struct Zero;

    impl DecayingIntegrand for Zero {
        fn eval(&self, x: &Real, prec: u32) -> Real {
            let _ = x;
            Real::zero(prec)
        }
        fn rect_bound(&self, _: &Float, _: &Float, _: &Float) -> Option<Float> {
            Some(Float::new(RAD_PREC))
        }
        fn tail_bound(&self, _: &Float) -> Option<Float> {
            Some(Float::new(RAD_PREC))
        }
    }

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let rule = build_gauss_rule(16, 128).unwrap();
        // sum of weights over [-1, 1] is 2, and x^30 integrates to 2/31
        let mut s = Real::zero(128);
        let mut s30 = Real::zero(128);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            s = &s + &w.mul_i64(2);
            s30 = &s30 + &(w * &x.pow_u(30)).mul_i64(2);
        }
        assert!(s.contains_f64(2.0), "{s}");
        let exact = Real::from_i64(2, 128).div_i64(31);
        assert!(s30.overlaps(&exact));
        assert!(s30.rel_width() < 1e-30);
    }

    #[test]
    fn exponential_from_one() {
        let spec = QuadratureSpec::new(1e-30, 1.0, 4.0).unwrap();
        let ctx = PrecCtx::new(128, 512).unwrap();
        let v = integrate_decaying(&ExpDecay, &spec, &ctx).unwrap();
        let e1 = Real::from_i64(-1, 160).exp();
        assert!(v.overlaps(&e1), "{v}");
        assert!(v.rel_width() <= 1e-30);
    }

    #[test]
    fn zero_integrand_gives_exact_zero() {
        let spec = QuadratureSpec::new(1e-20, 1.0, 2.0).unwrap();
        let v = integrate_decaying(&Zero, &spec, &PrecCtx::default()).unwrap();
        assert!(v.is_exact_zero());
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(1.5, 0.0, 1.0).is_err());
        assert!(QuadratureSpec::new(1e-10, 1.0, 1.0).is_err());
    }
}
