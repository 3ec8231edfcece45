//! Sturm sequences over balls, with an exact rational path for exact input.
//!
//! Signs are read at ±∞ from leading coefficients, so every real root lies
//! inside the counting interval without needing a root bound.

use std::cmp::Ordering;

use rug::Rational;

use crate::error::{Error, Result};
use crate::precision::Real;

/// Distinct real roots and degree of `gcd(p, p')`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SturmCount {
    pub distinct_real: usize,
    pub gcd_degree: usize,
}

fn variations(signs: &[Ordering]) -> usize {
    signs
        .iter()
        .filter(|s| **s != Ordering::Equal)
        .collect::<Vec<_>>()
        .windows(2)
        .filter(|w| w[0] != w[1])
        .count()
}

fn count_from_chain(leading: &[(usize, Ordering)]) -> usize {
    let at_pos: Vec<Ordering> = leading.iter().map(|&(_, s)| s).collect();
    let at_neg: Vec<Ordering> = leading
        .iter()
        .map(|&(deg, s)| if deg % 2 == 1 { s.reverse() } else { s })
        .collect();
    variations(&at_neg) - variations(&at_pos)
}

/// Sturm count for a polynomial given by ball coefficients (lowest degree first).
pub fn sturm_count_balls(coeffs: &[Real], wp: u32) -> Result<SturmCount> {
    let mut p: Vec<Real> = coeffs.iter().map(|c| c.with_prec(wp)).collect();
    strip_exact_zeros(&mut p);
    let lead = p.last().ok_or_else(|| Error::Domain("zero polynomial".into()))?;
    if lead.sign().is_none() {
        return Err(Error::DegenerateChain("leading coefficient not certified nonzero".into()));
    }
    if p.len() == 1 {
        return Ok(SturmCount {
            distinct_real: 0,
            gcd_degree: 0,
        });
    }
    let dp: Vec<Real> = p.iter().enumerate().skip(1).map(|(i, c)| c.mul_i64(i as i64)).collect();
    let mut chain_leads = vec![(p.len() - 1, lead.sign().unwrap())];
    let mut a = normalize(p)?;
    let mut b = normalize(dp)?;
    loop {
        let s = b.last().unwrap().sign().unwrap();
        chain_leads.push((b.len() - 1, s));
        if b.len() == 1 {
            return Ok(SturmCount {
                distinct_real: count_from_chain(&chain_leads),
                gcd_degree: 0,
            });
        }
        let mut r = remainder(&a, &b)?;
        strip_exact_zeros(&mut r);
        if r.is_empty() {
            return Ok(SturmCount {
                distinct_real: count_from_chain(&chain_leads),
                gcd_degree: b.len() - 1,
            });
        }
        if r.last().unwrap().sign().is_none() {
            return Err(Error::DegenerateChain(format!(
                "remainder of degree {} has uncertified leading coefficient",
                r.len() - 1
            )));
        }
        let neg: Vec<Real> = r.iter().map(|c| -c).collect();
        a = b;
        b = normalize(neg)?;
    }
}

fn strip_exact_zeros(p: &mut Vec<Real>) {
    while p.last().is_some_and(Real::is_exact_zero) {
        p.pop();
    }
}

/// Divides by the largest coefficient magnitude; signs are unchanged.
fn normalize(p: Vec<Real>) -> Result<Vec<Real>> {
    let big = p
        .iter()
        .max_by(|x, y| x.mid().cmp_abs(y.mid()).unwrap_or(Ordering::Equal))
        .unwrap()
        .abs();
    if !big.is_positive() {
        return Err(Error::DegenerateChain("cannot normalize remainder".into()));
    }
    Ok(p.iter().map(|c| c.div(&big)).collect())
}

/// Remainder of `a` by `b`, assuming the leading coefficient of `b` is certified.
fn remainder(a: &[Real], b: &[Real]) -> Result<Vec<Real>> {
    let db = b.len() - 1;
    let mut r = a.to_vec();
    let lb = b.last().unwrap();
    for i in (db..r.len()).rev() {
        if r[i].is_exact_zero() {
            continue;
        }
        let f = r[i].div(lb);
        if !f.is_finite() {
            return Err(Error::DegenerateChain("division by uncertified coefficient".into()));
        }
        for k in 0..db {
            let t = &f * &b[k];
            r[i - db + k] = &r[i - db + k] - &t;
        }
        r[i] = Real::zero(r[i].prec());
    }
    r.truncate(db);
    Ok(r)
}

fn sign_q(x: &Rational) -> Ordering {
    x.cmp0()
}

/// Exact Sturm count for rational coefficients.
pub fn sturm_count_exact(coeffs: &[Rational]) -> Result<SturmCount> {
    let mut p: Vec<Rational> = coeffs.to_vec();
    while p.last().is_some_and(|c| c.cmp0() == Ordering::Equal) {
        p.pop();
    }
    if p.is_empty() {
        return Err(Error::Domain("zero polynomial".into()));
    }
    if p.len() == 1 {
        return Ok(SturmCount {
            distinct_real: 0,
            gcd_degree: 0,
        });
    }
    let mut a = monic_abs(p);
    let mut b = monic_abs(
        a.iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| Rational::from(c * i as u32))
            .collect(),
    );
    let mut chain_leads = vec![(a.len() - 1, sign_q(a.last().unwrap())), (b.len() - 1, sign_q(b.last().unwrap()))];
    loop {
        if b.len() == 1 {
            return Ok(SturmCount {
                distinct_real: count_from_chain(&chain_leads),
                gcd_degree: 0,
            });
        }
        let db = b.len() - 1;
        let mut r = a.clone();
        let lb = b.last().unwrap().clone();
        for i in (db..r.len()).rev() {
            let f = Rational::from(&r[i] / &lb);
            for k in 0..db {
                r[i - db + k] -= Rational::from(&f * &b[k]);
            }
            r[i] = Rational::new();
        }
        r.truncate(db);
        while r.last().is_some_and(|c| c.cmp0() == Ordering::Equal) {
            r.pop();
        }
        if r.is_empty() {
            return Ok(SturmCount {
                distinct_real: count_from_chain(&chain_leads),
                gcd_degree: db,
            });
        }
        let neg: Vec<Rational> = r.into_iter().map(|c| -c).collect();
        let next = monic_abs(neg);
        chain_leads.push((next.len() - 1, sign_q(next.last().unwrap())));
        a = b;
        b = next;
    }
}

/// Scales by `1/|lead|`, which keeps signs and keeps rationals small.
fn monic_abs(p: Vec<Rational>) -> Vec<Rational> {
    let l = Rational::from(p.last().unwrap().abs_ref());
    p.into_iter().map(|c| c / &l).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from(x)).collect()
    }

    fn balls(v: &[f64]) -> Vec<Real> {
        v.iter().map(|&x| Real::from_f64(x, 128)).collect()
    }

    #[test]
    fn exact_counts() {
        assert_eq!(sturm_count_exact(&q(&[-2, 0, 1])).unwrap().distinct_real, 2);
        assert_eq!(sturm_count_exact(&q(&[1, 0, 1])).unwrap().distinct_real, 0);
        // (x-1)^2 (x+2): one double root
        let c = sturm_count_exact(&q(&[2, -3, 0, 1])).unwrap();
        assert_eq!(c, SturmCount { distinct_real: 2, gcd_degree: 1 });
    }

    #[test]
    fn ball_counts() {
        assert_eq!(sturm_count_balls(&balls(&[-2.0, 0.0, 1.0]), 128).unwrap().distinct_real, 2);
        assert_eq!(sturm_count_balls(&balls(&[1.0, 0.0, 1.0]), 128).unwrap().distinct_real, 0);
        // (x - 0.1)(x - 0.2)(x - 0.3)
        let c = balls(&[-0.006, 0.11, -0.6, 1.0]);
        assert_eq!(sturm_count_balls(&c, 128).unwrap().distinct_real, 3);
    }
}
