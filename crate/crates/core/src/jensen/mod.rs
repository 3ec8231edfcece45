//! Jensen polynomials `J^{d,n}(X) = Σ_j C(d,j) γ(n+j) X^j`, their
//! normalization `J̃^{d,n}` and its expansion in the basis `H_k(X/2)`.
//!
//! With `M = n + d`, `Δ = Δ(M)` and `r = γ(M−1)/γ(M)`,
//!
//! `J̃^{d,n}(X) = γ(M)^{d−1} / (γ(M−1)^d Δ^d) · J^{d,n}(r(ΔX − 1)) = Σ_k A_{d,k} X^{d−k}`.

mod poly;

pub use poly::{hermite, hermite_half, Basis, Poly};

use rug::Integer;

use crate::error::{Error, Result};
use crate::precision::{refine_until, PrecCtx, Real};
use crate::xi_taylor::CoefficientSource;

/// γ(lo..=hi) at working precision `wp`.
pub(crate) fn fetch<S: CoefficientSource + ?Sized>(src: &S, lo: u64, hi: u64, wp: u32) -> Result<Vec<Real>> {
    (lo..=hi).map(|m| Ok(src.coefficient(m, wp)?.with_prec(wp))).collect()
}

/// Extra working bits for a k-th difference at index M: about
/// `k log2(1/Δ(M))` plus a fixed margin, with `Δ(M) ≈ 1/√(2M)`.
pub(crate) fn cancellation_bits(k: usize, m: u64) -> u32 {
    let lg = 0.5 * ((2 * m.max(2)) as f64).log2();
    (k as f64 * lg).ceil() as u32 + 32
}

fn binom(n: usize, k: usize) -> Integer {
    Integer::from(Integer::binomial_u(n as u32, k as u32))
}

/// `J^{d,n}` in the monomial basis.
pub fn jensen_poly<S: CoefficientSource + ?Sized>(d: usize, n: u64, src: &S, bits: u32) -> Result<Poly> {
    let g = fetch(src, n, n + d as u64, bits)?;
    let coeffs = g
        .iter()
        .enumerate()
        .map(|(j, gj)| gj * &Real::from_integer(&binom(d, j), bits))
        .collect();
    Ok(Poly::monomial(coeffs))
}

/// `Δ(M)² = (1 − γ(M−2)γ(M)/γ(M−1)²) / 2` from three consecutive values.
fn delta_sq(g2: &Real, g1: &Real, g0: &Real) -> Real {
    (&Real::one(g0.prec()) - &(g2 * g0).div(&g1.sqr())).mul_2si(-1)
}

fn delta_from(m: u64, g2: &Real, g1: &Real, g0: &Real) -> Result<Real> {
    let rad = delta_sq(g2, g1, g0);
    if rad.is_exact_zero() {
        return Ok(rad);
    }
    if !rad.is_nonnegative() {
        return Err(Error::RadicandUncertified { m });
    }
    Ok(rad.sqrt())
}

/// `Δ(M) = √((1 − γ(M−2)γ(M)/γ(M−1)²)/2)` for M ≥ 2.
pub fn delta_unif<S: CoefficientSource + ?Sized>(m: u64, src: &S, bits: u32) -> Result<Real> {
    if m < 2 {
        return Err(Error::Domain("Delta(M) needs M >= 2".into()));
    }
    let g = fetch(src, m - 2, m, bits)?;
    delta_from(m, &g[0], &g[1], &g[2])
}

/// `S(j; M) = γ(M−j) γ(M)^{j−1} / γ(M−1)^j` for `0 ≤ j ≤ M`; exactly 1 for j ≤ 1.
pub fn s_ratio<S: CoefficientSource + ?Sized>(j: u64, m: u64, src: &S, bits: u32) -> Result<Real> {
    if j > m || m == 0 {
        return Err(Error::Domain(format!("S(j; M) needs 0 <= j <= M, got j={j}, M={m}")));
    }
    if j <= 1 {
        return Ok(Real::one(bits));
    }
    let g = fetch(src, m - j, m, bits)?;
    Ok(s_from(&g, j as usize))
}

/// `S(j; M)` from `g = [γ(M−J), ..., γ(M)]` for any `j ≤ J`.
fn s_from(g: &[Real], j: usize) -> Real {
    let top = g.len() - 1;
    if j <= 1 {
        return Real::one(g[top].prec());
    }
    let rho = g[top].div(&g[top - 1]);
    g[top - j].div(&g[top]) * rho.pow_u(j as u32)
}

/// `σ_k(S(·; M)) = Σ_j (−1)^{k−j} C(k,j) S(j; M)`.
fn s_difference(s: &[Real], k: usize) -> Real {
    let prec = s[0].prec();
    let mut acc = Real::zero(prec);
    for (j, sj) in s.iter().enumerate().take(k + 1) {
        let t = sj * &Real::from_integer(&binom(k, j), prec);
        acc = if (k - j) % 2 == 0 { &acc + &t } else { &acc - &t };
    }
    acc
}

/// The coefficients `A_{d,k}(n)` of `J̃^{d,n}(X) = Σ_k A_{d,k} X^{d−k}`.
#[derive(Clone, Debug)]
pub struct NormalizedCoeffs {
    pub d: usize,
    pub n: u64,
    /// `a[k] = A_{d,k}`, `k = 0..=d`.
    pub a: Vec<Real>,
    /// `Δ(n+d)`; `None` only for `d = 1, n = 0`, where `J̃ = X` needs no Δ.
    pub delta: Option<Real>,
}

impl NormalizedCoeffs {
    /// `J̃^{d,n}` in the monomial basis.
    pub fn to_poly(&self) -> Poly {
        Poly::monomial(self.a.iter().rev().cloned().collect())
    }

    pub fn prec(&self) -> u32 {
        self.a.iter().map(Real::prec).max().unwrap_or(64)
    }
}

pub(crate) fn a_coeffs_at<S: CoefficientSource + ?Sized>(d: usize, n: u64, src: &S, wp: u32) -> Result<NormalizedCoeffs> {
    let m = n + d as u64;
    if m < 2 {
        // d = 1, n = 0
        return Ok(NormalizedCoeffs {
            d,
            n,
            a: vec![Real::one(wp), Real::zero(wp)],
            delta: None,
        });
    }
    let g = fetch(src, n.min(m - 2), m, wp)?;
    let top = g.len() - 1;
    let delta = delta_from(m, &g[top - 2], &g[top - 1], &g[top])?;
    let s: Vec<Real> = (0..=d).map(|j| s_from(&g, j)).collect();
    let inv = delta.recip();
    let mut a = Vec::with_capacity(d + 1);
    a.push(Real::one(wp));
    a.push(Real::zero(wp));
    let mut inv_pow = inv.clone();
    for k in 2..=d {
        inv_pow = &inv_pow * &inv;
        let v = &s_difference(&s, k) * &inv_pow;
        a.push(&v * &Real::from_integer(&binom(d, k), wp));
    }
    a.truncate(d + 1);
    Ok(NormalizedCoeffs {
        d,
        n,
        a,
        delta: Some(delta),
    })
}

fn guard_ok(nc: &NormalizedCoeffs) -> bool {
    let limit = rug::Float::with_val(64, 1) >> 32u32;
    nc.a.iter().all(Real::is_finite) && nc.a.iter().take(3).all(|x| x.rad() < &limit)
}

/// `A_{d,k}(n) = C(d,k) Δ^{−k} Σ_j (−1)^{k−j} C(k,j) S(j; n+d)` for k = 0..=d.
///
/// `A_{d,0} = 1` and `A_{d,1} = 0` are exact because `S(0) = S(1) = 1`.
/// Precision is raised until `A_{d,2}` is narrower than `2^-32`.
pub fn a_coeffs<S: CoefficientSource + ?Sized>(
    d: usize,
    n: u64,
    src: &S,
    ctx: &PrecCtx,
) -> Result<NormalizedCoeffs> {
    if d == 0 {
        return Err(Error::Domain("A_{d,k} needs d >= 1".into()));
    }
    let m = n + d as u64;
    refine_until(
        |c| a_coeffs_at(d, n, src, c.bits() + cancellation_bits(d, m)),
        guard_ok,
        ctx,
    )
}

fn normalized_poly_at<S: CoefficientSource + ?Sized>(d: usize, n: u64, src: &S, wp: u32) -> Result<Poly> {
    let m = n + d as u64;
    if m < 2 {
        return Ok(Poly::monomial(vec![Real::zero(wp), Real::one(wp)]));
    }
    let g = fetch(src, n.min(m - 2), m, wp)?;
    let top = g.len() - 1;
    let (gm, gm1) = (&g[top], &g[top - 1]);
    let delta = delta_from(m, &g[top - 2], gm1, gm)?;
    let r = gm1.div(gm);
    let j = jensen_poly(d, n, src, wp)?;
    // J(rΔX − r): shift by −r, then scale the argument by rΔ
    let shifted = j.taylor_shift(&-&r).scale_arg(&(&r * &delta));
    let pre = gm.pow_u(d as u32 - 1).div(&(gm1 * &delta).pow_u(d as u32));
    Ok(shifted.scale(&pre))
}

/// `J̃^{d,n}` computed directly from `J^{d,n}` by the affine substitution.
pub fn normalized_poly<S: CoefficientSource + ?Sized>(d: usize, n: u64, src: &S, ctx: &PrecCtx) -> Result<Poly> {
    if d == 0 {
        return Err(Error::Domain("normalized Jensen polynomial needs d >= 1".into()));
    }
    let m = n + d as u64;
    let limit = rug::Float::with_val(64, 1) >> 32u32;
    refine_until(
        |c| normalized_poly_at(d, n, src, c.bits() + cancellation_bits(d, m)),
        |p: &Poly| p.coeffs.iter().all(Real::is_finite) && p.coeffs[d - 1].rad() < &limit,
        ctx,
    )
}

/// `c_j` with `Σ_k a_k X^{d−k} = Σ_j c_j H_{d−j}(X/2)`:
/// `c_j = Σ_i (d−j+2i)! / (i! (d−j)!) · a_{j−2i}`.
pub fn hermite_expand_coeffs(a: &[Real]) -> Vec<Real> {
    let d = a.len() - 1;
    let prec = a.iter().map(Real::prec).max().unwrap_or(64);
    (0..=d)
        .map(|j| {
            let mut acc = Real::zero(prec);
            for i in 0..=j / 2 {
                let num = Integer::from(Integer::factorial((d - j + 2 * i) as u32));
                let den = Integer::from(Integer::factorial(i as u32)) * Integer::from(Integer::factorial((d - j) as u32));
                let w = Real::from_integer(&(num / den), prec);
                acc = &acc + &(&a[j - 2 * i] * &w);
            }
            acc
        })
        .collect()
}

/// `c_{d,n,j}`, j = 0..=d, with `J̃^{d,n}(X) = Σ_j c_{d,n,j} H_{d−j}(X/2)`.
pub fn hermite_expand(nc: &NormalizedCoeffs) -> Vec<Real> {
    hermite_expand_coeffs(&nc.a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xi_taylor::{GammaTable, Provenance};

    /// Table with γ(M−j)/γ(M) following a log-concave test sequence.
    fn table(vals: impl Iterator<Item = f64>) -> GammaTable {
        let mut t = GammaTable::new();
        for (m, v) in vals.enumerate() {
            t.insert(m as u64, Real::from_f64(v, 256), 256, Provenance::Direct).unwrap();
        }
        t
    }

    fn gaussian_table(len: u64) -> GammaTable {
        table((0..len).map(|m| (-(m as f64) * (m as f64) / 400.0 - m as f64).exp()))
    }

    #[test]
    fn jensen_small_cases() {
        let t = gaussian_table(10);
        let p = jensen_poly(0, 4, &t, 128).unwrap();
        assert_eq!(p.coeffs.len(), 1);
        assert!(p.coeffs[0].overlaps(t.value(4).unwrap()));
        let p = jensen_poly(3, 2, &t, 128).unwrap();
        assert!(p.coeffs[2].overlaps(&t.value(4).unwrap().mul_i64(3)));
        assert!(matches!(jensen_poly(3, 8, &t, 128), Err(Error::MissingCoefficient(10))));
    }

    #[test]
    fn delta_vanishes_for_geometric_sequence() {
        let t = table((0..5).map(|m| 0.5f64.powi(m)));
        let d = delta_unif(3, &t, 128).unwrap();
        assert!(d.is_exact_zero());
    }

    #[test]
    fn s_ratio_second_difference() {
        let t = gaussian_table(12);
        let s2 = s_ratio(2, 10, &t, 128).unwrap();
        let delta = delta_unif(10, &t, 128).unwrap();
        let want = &Real::one(128) - &delta.sqr().mul_2si(1);
        assert!(s2.overlaps(&want));
        assert!(s_ratio(0, 10, &t, 128).unwrap().is_exact());
        assert!(s_ratio(11, 10, &t, 128).is_err());
    }

    #[test]
    fn lemma_identities_on_synthetic_table() {
        let t = gaussian_table(40);
        let ctx = PrecCtx::new(128, 256).unwrap();
        for d in 1..=8 {
            let nc = a_coeffs(d, 5, &t, &ctx).unwrap();
            assert!(nc.a[0].is_exact());
            assert!(nc.a[1].is_exact_zero());
            if d >= 2 {
                assert!(nc.a[2].contains_f64(-((d * (d - 1)) as f64)), "d={d}: {}", nc.a[2]);
            }
            let p = normalized_poly(d, 5, &t, &ctx).unwrap();
            assert!(p.overlaps(&nc.to_poly()), "d={d}");
        }
    }

    #[test]
    fn degree_two_is_h2() {
        let t = gaussian_table(20);
        let ctx = PrecCtx::new(128, 256).unwrap();
        let p = normalized_poly(2, 7, &t, &ctx).unwrap();
        assert!(p.coeffs[2].contains_f64(1.0));
        assert!(p.coeffs[1].contains_f64(0.0));
        assert!(p.coeffs[0].contains_f64(-2.0));
    }

    #[test]
    fn expansion_of_pure_power() {
        let mut a = vec![Real::zero(64); 5];
        a[0] = Real::one(64);
        let c: Vec<f64> = hermite_expand_coeffs(&a).iter().map(Real::to_f64).collect();
        assert_eq!(c, vec![1.0, 0.0, 12.0, 0.0, 12.0]);
    }

    #[test]
    fn expansion_of_degree_two_is_trivial() {
        let a = vec![Real::one(64), Real::zero(64), Real::from_i64(-2, 64)];
        let c: Vec<f64> = hermite_expand_coeffs(&a).iter().map(Real::to_f64).collect();
        assert_eq!(c, vec![1.0, 0.0, 0.0]);
    }
}
