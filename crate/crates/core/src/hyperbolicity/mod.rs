//! Certified real-root counting, Turán's sufficient criterion for the
//! Jensen polynomials, threshold search and the degree bound
//! `⌊T² + 1/2 + 1/(16T²)⌋`.

mod sturm;

pub use sturm::{sturm_count_balls, sturm_count_exact, SturmCount};

use std::collections::HashMap;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jensen::{a_coeffs_at, cancellation_bits, hermite_expand_coeffs, jensen_poly, Poly};
use crate::precision::{refine_until, PrecCtx, Real};
use crate::xi_taylor::CoefficientSource;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HyperbolicityStatus {
    Hyperbolic,
    NotHyperbolic,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperbolicityVerdict {
    pub status: HyperbolicityStatus,
    /// Real roots counted with multiplicity when hyperbolic, distinct otherwise.
    pub real_root_count: usize,
    pub degree: usize,
    pub bits_used: u32,
}

impl HyperbolicityVerdict {
    fn from_count(c: SturmCount, degree: usize, bits_used: u32) -> Self {
        let hyperbolic = c.distinct_real + c.gcd_degree == degree;
        HyperbolicityVerdict {
            status: if hyperbolic {
                HyperbolicityStatus::Hyperbolic
            } else {
                HyperbolicityStatus::NotHyperbolic
            },
            real_root_count: if hyperbolic { degree } else { c.distinct_real },
            degree,
            bits_used,
        }
    }

    fn indeterminate(degree: usize, bits_used: u32) -> Self {
        HyperbolicityVerdict {
            status: HyperbolicityStatus::Indeterminate,
            real_root_count: 0,
            degree,
            bits_used,
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.status == HyperbolicityStatus::Hyperbolic
    }
}

fn exact_coeffs(p: &Poly) -> Option<Vec<Rational>> {
    p.to_monomial()
        .coeffs
        .iter()
        .map(|c| if c.is_exact() { c.mid().to_rational() } else { None })
        .collect()
}

fn sturm_poly(p: &Poly, ctx: &PrecCtx) -> Result<(SturmCount, u32)> {
    if let Some(q) = exact_coeffs(p) {
        return Ok((sturm_count_exact(&q)?, p.prec()));
    }
    let coeffs = p.to_monomial().coeffs;
    refine_until(
        |c| Ok((sturm_count_balls(&coeffs, c.bits())?, c.bits())),
        |_| true,
        ctx,
    )
}

/// Number of distinct real roots of `p`.
///
/// Polynomials with exact coefficients are handled in exact rational
/// arithmetic; otherwise the Sturm chain runs on balls and the working
/// precision is raised until every leading coefficient has a certified sign.
pub fn count_real_roots(p: &Poly, ctx: &PrecCtx) -> Result<usize> {
    if !p.to_monomial().has_certified_degree() {
        return Err(Error::Domain("leading coefficient not certified nonzero".into()));
    }
    Ok(sturm_poly(p, ctx)?.0.distinct_real)
}

/// Hyperbolicity of a single polynomial; `Indeterminate` if the chain never certifies.
pub fn certify_poly(p: &Poly, ctx: &PrecCtx) -> Result<HyperbolicityVerdict> {
    let degree = p.degree();
    if !p.to_monomial().has_certified_degree() {
        return Ok(HyperbolicityVerdict::indeterminate(degree, p.prec()));
    }
    match sturm_poly(p, ctx) {
        Ok((c, bits)) => Ok(HyperbolicityVerdict::from_count(c, degree, bits)),
        Err(e) if e.is_precision_limited() => Ok(HyperbolicityVerdict::indeterminate(degree, ctx.max_bits())),
        Err(e) => Err(e),
    }
}

fn jensen_sturm_at<S: CoefficientSource + ?Sized>(d: usize, n: u64, src: &S, wp: u32) -> Result<SturmCount> {
    let normalized = match a_coeffs_at(d, n, src, wp) {
        Ok(nc) if !nc.delta.as_ref().is_some_and(Real::is_exact_zero) => Some(nc.to_poly()),
        Ok(_) | Err(Error::RadicandUncertified { .. }) => None,
        Err(e) => return Err(e),
    };
    match normalized {
        Some(p) => sturm_count_balls(&p.coeffs, wp),
        None => sturm_count_balls(&jensen_poly(d, n, src, wp)?.coeffs, wp),
    }
}

/// Hyperbolicity of `J^{d,n}`, decided on the normalized `J̃^{d,n}` when
/// `Δ(n+d)` is real and nonzero and on `J^{d,n}` itself otherwise.
pub fn certify_hyperbolic<S: CoefficientSource + ?Sized>(
    d: usize,
    n: u64,
    src: &S,
    ctx: &PrecCtx,
) -> Result<HyperbolicityVerdict> {
    if d == 0 {
        return Err(Error::Domain("degree must be at least 1".into()));
    }
    let extra = cancellation_bits(d, n + d as u64);
    let res = refine_until(
        |c| {
            let wp = c.bits() + extra;
            Ok((jensen_sturm_at(d, n, src, wp)?, wp))
        },
        |_| true,
        ctx,
    );
    match res {
        Ok((c, bits)) => Ok(HyperbolicityVerdict::from_count(c, d, bits)),
        Err(e) if e.is_precision_limited() => Ok(HyperbolicityVerdict::indeterminate(d, ctx.max_bits() + extra)),
        Err(e) => Err(e),
    }
}

/// Hyperbolicity of `J^{d,n}` without normalization.
pub fn certify_hyperbolic_raw<S: CoefficientSource + ?Sized>(
    d: usize,
    n: u64,
    src: &S,
    ctx: &PrecCtx,
) -> Result<HyperbolicityVerdict> {
    let p = jensen_poly(d, n, src, ctx.bits())?;
    let res = refine_until(
        |c| Ok((sturm_count_balls(&p.coeffs, c.bits())?, c.bits())),
        |_| true,
        ctx,
    );
    match res {
        Ok((c, bits)) => Ok(HyperbolicityVerdict::from_count(c, d, bits)),
        Err(e) if e.is_precision_limited() => Ok(HyperbolicityVerdict::indeterminate(d, ctx.max_bits())),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TuranStatus {
    Holds,
    Fails,
    Undecided,
}

/// The sum `Σ_{j=3}^d 2^{−j} (d−j)!/(d−1)! c_{d,n,j}²` and its comparison with 1.
#[derive(Clone, Debug)]
pub struct TuranMargin {
    pub d: usize,
    pub n: u64,
    pub lhs: Real,
    pub holds: TuranStatus,
}

fn turan_status(lhs: &Real) -> TuranStatus {
    if !lhs.is_finite() {
        TuranStatus::Undecided
    } else if lhs.upper() < 1 {
        TuranStatus::Holds
    } else if lhs.lower() >= 1 {
        TuranStatus::Fails
    } else {
        TuranStatus::Undecided
    }
}

/// The criterion sum from Hermite-basis coefficients `c[0..=d]`.
pub fn turan_lhs(c: &[Real]) -> Real {
    let d = c.len() - 1;
    let prec = c.iter().map(Real::prec).max().unwrap_or(64);
    let den = Integer::from(Integer::factorial(d as u32 - 1));
    let mut acc = Real::zero(prec);
    for (j, cj) in c.iter().enumerate().skip(3) {
        let w = Real::from_rational(
            &Rational::from((Integer::from(Integer::factorial((d - j) as u32)), den.clone())),
            prec,
        );
        acc = &acc + &(&cj.sqr() * &w).mul_2si(-(j as i32));
    }
    acc
}

fn turan_at<S: CoefficientSource + ?Sized>(d: usize, n: u64, src: &S, wp: u32) -> Result<Real> {
    let nc = a_coeffs_at(d, n, src, wp)?;
    Ok(turan_lhs(&hermite_expand_coeffs(&nc.a)))
}

/// Evaluates Turán's criterion for `J^{d,n}`, raising precision while undecided.
pub fn turan_holds<S: CoefficientSource + ?Sized>(d: usize, n: u64, src: &S, ctx: &PrecCtx) -> Result<TuranMargin> {
    if d < 3 {
        return Err(Error::Domain("Turan criterion needs d >= 3".into()));
    }
    let extra = cancellation_bits(d, n + d as u64);
    let mut lhs = Real::indeterminate(ctx.bits());
    for c in ctx.schedule() {
        match turan_at(d, n, src, c.bits() + extra) {
            Ok(v) => lhs = v,
            Err(e) if e.is_precision_limited() => continue,
            Err(e) => return Err(e),
        }
        if turan_status(&lhs) != TuranStatus::Undecided {
            break;
        }
    }
    let holds = turan_status(&lhs);
    Ok(TuranMargin { d, n, lhs, holds })
}

/// Window of consecutive successes required by [`turan_threshold`].
pub const STABILITY_PROBE: u64 = 10;

/// Smallest `n ≤ n_max` such that the criterion holds at every
/// `n' ∈ [n, min(n + 10, n_max)]`.
pub fn turan_threshold<S: CoefficientSource + ?Sized>(
    d: usize,
    n_max: u64,
    src: &S,
    ctx: &PrecCtx,
) -> Result<Option<u64>> {
    let mut memo: HashMap<u64, bool> = HashMap::new();
    let mut holds = |n: u64| -> Result<bool> {
        if let Some(&h) = memo.get(&n) {
            return Ok(h);
        }
        let h = turan_holds(d, n, src, ctx)?.holds == TuranStatus::Holds;
        memo.insert(n, h);
        Ok(h)
    };
    let mut n = 0;
    'outer: while n <= n_max {
        let end = (n + STABILITY_PROBE).min(n_max);
        for k in n..=end {
            if !holds(k)? {
                n = k + 1;
                continue 'outer;
            }
        }
        return Ok(Some(n));
    }
    Ok(None)
}

/// `⌊T² + 1/2 + 1/(16T²)⌋` and `⌊T⌋²`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeBound {
    pub closed_form_floor: Integer,
    pub floor_t_squared: Integer,
}

/// Degree bounds for a height `T > 1/2`, in exact rational arithmetic.
pub fn degree_bound_from_t(t: &Rational) -> Result<DegreeBound> {
    if *t <= Rational::from((1, 2)) {
        return Err(Error::Domain("T must exceed 1/2".into()));
    }
    let t2 = Rational::from(t.square_ref());
    let x = (&t2 + Rational::from((1, 2))) + Rational::from((1, 16)) / &t2;
    let floor_t = Integer::from(t.floor_ref());
    Ok(DegreeBound {
        closed_form_floor: Integer::from(x.floor_ref()),
        floor_t_squared: floor_t.square(),
    })
}

/// Parses `"3.06e10"`, `"-1.5"` or `"7/3"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Domain(format!("cannot parse '{s}' as a number"));
    if s.contains('/') {
        return Rational::parse(s).map(Rational::from).map_err(|_| bad());
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    let digits = format!("{int}{frac}");
    let num = Integer::parse(&digits).map(Integer::from).map_err(|_| bad())?;
    let shift = exp - frac.len() as i32;
    let pow10 = |k: i32| Integer::from(Integer::u_pow_u(10, k.unsigned_abs()));
    Ok(if shift >= 0 {
        Rational::from(num * pow10(shift))
    } else {
        Rational::from((num, pow10(shift)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jensen::{hermite_half, Basis};

    #[test]
    fn small_counts() {
        let ctx = PrecCtx::default();
        let p = |v: &[i64]| Poly::from_integers(&v.iter().map(|&x| Integer::from(x)).collect::<Vec<_>>(), Basis::Monomial, 64);
        assert_eq!(count_real_roots(&p(&[-2, 0, 1]), &ctx).unwrap(), 2);
        assert_eq!(count_real_roots(&p(&[1, 0, 1]), &ctx).unwrap(), 0);
        let h6 = Poly::from_integers(&hermite_half(6), Basis::Monomial, 64);
        assert_eq!(count_real_roots(&h6, &ctx).unwrap(), 6);
    }

    #[test]
    fn degree_bounds() {
        let b = degree_bound_from_t(&Rational::from(1)).unwrap();
        assert_eq!((b.closed_form_floor, b.floor_t_squared), (Integer::from(1), Integer::from(1)));
        let b = degree_bound_from_t(&Rational::from(10)).unwrap();
        assert_eq!((b.closed_form_floor, b.floor_t_squared), (Integer::from(100), Integer::from(100)));
        assert!(degree_bound_from_t(&Rational::from((1, 2))).is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3.06e10").unwrap(), Rational::from(30_600_000_000u64));
        assert_eq!(parse_rational("1.25").unwrap(), Rational::from((5, 4)));
        assert_eq!(parse_rational("7/3").unwrap(), Rational::from((7, 3)));
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn turan_lhs_degree_three() {
        let c: Vec<Real> = [1, 0, 0, 4].iter().map(|&x| Real::from_i64(x, 64)).collect();
        assert!(turan_lhs(&c).contains_f64(1.0));
    }
}
