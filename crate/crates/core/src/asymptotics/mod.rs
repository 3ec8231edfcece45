//! Expansion of `log γ(M−j)/γ(M)` in powers of `j`, the coefficients
//! `Q_m(M)` of `S(j; M)`, and predicted-versus-observed reports for the
//! coefficients `A_{d,k}` and `c_{d,n,j}`.
//!
//! Conventions: `log(γ(M−j)/γ(M)) = Σ_m a_m j^m` with `a_m = −G_m Δ^{2m−2}`,
//! `G̃_1 = Σ_{m≥2} G_m Δ^{2m−4}`, and
//! `S(j; M) = exp(Σ_{m≥2} G_m Δ^{2m−2} (j − j^m)) = Σ_m Q_m j^m`.

mod combinatorics;

pub use combinatorics::{partitions, pi_value, sigma_diff, sigma_diff_real, ymk, Partition};

use rug::{Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jensen::{a_coeffs, delta_unif, fetch, hermite_expand};
use crate::precision::{PrecCtx, Real};
use crate::xi_taylor::CoefficientSource;

/// Largest number of fitted coefficients.
pub const MAX_FIT_ORDER: usize = 12;

/// Largest relative residual accepted by [`fit_gm`].
pub const FIT_TOLERANCE: f64 = 1e-8;

/// Fitted `G_1..G_{m_max}` at a fixed `M`.
#[derive(Clone, Debug)]
pub struct GmEstimate {
    pub m: u64,
    pub m_max: usize,
    /// `g[i] = G_{i+1}`.
    pub g: Vec<Real>,
    pub delta: Real,
    pub g1_tilde: Real,
    /// `max_j |fit − data| / max_j |data|`.
    pub fit_residual: Real,
}

impl GmEstimate {
    /// Assembles an estimate from given `G_1..G_{m_max}` and `Δ`.
    pub fn from_parts(m: u64, g: Vec<Real>, delta: Real) -> Self {
        let prec = delta.prec();
        let d2 = delta.sqr();
        let mut g1_tilde = Real::zero(prec);
        let mut pow = Real::one(prec);
        for gm in g.iter().skip(1) {
            g1_tilde = &g1_tilde + &(gm * &pow);
            pow = &pow * &d2;
        }
        GmEstimate {
            m,
            m_max: g.len(),
            g,
            delta,
            g1_tilde,
            fit_residual: Real::zero(prec),
        }
    }

    /// `G_i`, or `TruncationUnsound` if `i` was not fitted.
    pub fn gm(&self, i: usize) -> Result<&Real> {
        if i == 0 || i > self.m_max {
            return Err(Error::TruncationUnsound {
                needed: i,
                have: self.m_max,
            });
        }
        Ok(&self.g[i - 1])
    }

    /// `a_i = −G_i Δ^{2i−2}`.
    pub fn am(&self, i: usize) -> Result<Real> {
        Ok(-&(self.gm(i)? * &self.delta.pow_u(2 * i as u32 - 2)))
    }

    fn prec(&self) -> u32 {
        self.delta.prec()
    }
}

/// `W = (VᵀV)⁻¹Vᵀ` for the Vandermonde matrix `V[j][m] = (j+1)^(m+1)`, exactly.
fn least_squares_operator(rows: usize, cols: usize) -> Vec<Vec<Rational>> {
    let v: Vec<Vec<Integer>> = (1..=rows as u32)
        .map(|j| (1..=cols as u32).map(|m| Integer::from(Integer::u_pow_u(j, m))).collect())
        .collect();
    let mut n: Vec<Vec<Rational>> = (0..cols)
        .map(|a| {
            (0..cols)
                .map(|b| Rational::from(v.iter().map(|row| Integer::from(&row[a] * &row[b])).sum::<Integer>()))
                .collect()
        })
        .collect();
    let mut inv: Vec<Vec<Rational>> = (0..cols)
        .map(|a| (0..cols).map(|b| Rational::from(u32::from(a == b))).collect())
        .collect();
    // Gauss-Jordan; the normal matrix is positive definite so pivots never vanish
    for c in 0..cols {
        let p = n[c][c].clone();
        for k in 0..cols {
            n[c][k] /= &p;
            inv[c][k] /= &p;
        }
        for r in 0..cols {
            if r != c && n[r][c].cmp0().is_ne() {
                let f = n[r][c].clone();
                for k in 0..cols {
                    let t = Rational::from(&f * &n[c][k]);
                    n[r][k] -= t;
                    let t = Rational::from(&f * &inv[c][k]);
                    inv[r][k] -= t;
                }
            }
        }
    }
    (0..cols)
        .map(|a| {
            (0..rows)
                .map(|j| inv[a].iter().zip(v[j].iter()).map(|(x, y)| Rational::from(x * y)).sum())
                .collect()
        })
        .collect()
}

/// Fits `a_1..a_{m_max}` to `log(γ(M−j)/γ(M))`, `j = 1..2 m_max`, by least
/// squares with an exact normal matrix, and converts to `G_m`.
pub fn fit_gm<S: CoefficientSource + ?Sized>(m: u64, m_max: usize, src: &S, ctx: &PrecCtx) -> Result<GmEstimate> {
    if m_max == 0 || m_max > MAX_FIT_ORDER {
        return Err(Error::Domain(format!("m_max must lie in 1..={MAX_FIT_ORDER}, got {m_max}")));
    }
    let rows = 2 * m_max;
    if m <= rows as u64 {
        return Err(Error::Domain(format!("fit at M={m} needs M > {rows}")));
    }
    let wp = ctx.for_index(m).bits() + 64;
    let g = fetch(src, m - rows as u64, m, wp)?;
    let top = &g[rows];
    let y: Vec<Real> = (1..=rows).map(|j| g[rows - j].div(top).ln()).collect();
    let w = least_squares_operator(rows, m_max);
    let a: Vec<Real> = w
        .iter()
        .map(|row| {
            row.iter()
                .zip(&y)
                .fold(Real::zero(wp), |acc, (c, yj)| &acc + &(yj * &Real::from_rational(c, wp)))
        })
        .collect();

    let mut worst = Real::zero(wp);
    let mut scale = Real::zero(wp);
    for (j, yj) in y.iter().enumerate() {
        let x = Real::from_u64(j as u64 + 1, wp);
        let mut fit = Real::zero(wp);
        for am in a.iter().rev() {
            fit = &(&fit + am) * &x;
        }
        let r = (&fit - yj).abs();
        if r.mid() > worst.mid() {
            worst = r;
        }
        if yj.mag() > scale.mag() {
            scale = yj.abs();
        }
    }
    let residual = worst.div(&scale);
    if !residual.is_finite() || residual.to_f64() > FIT_TOLERANCE {
        return Err(Error::IllConditioned {
            m,
            residual: residual.to_f64(),
        });
    }

    let delta = delta_unif(m, src, wp)?;
    let d2 = delta.sqr();
    let mut pow = Real::one(wp);
    let mut gs = Vec::with_capacity(m_max);
    for am in &a {
        gs.push(-&am.div(&pow));
        pow = &pow * &d2;
    }
    let mut est = GmEstimate::from_parts(m, gs, delta);
    est.fit_residual = residual;
    Ok(est)
}

/// Observed value, prediction and their ratio.
#[derive(Clone, Debug, Serialize)]
pub struct AsymReport {
    pub quantity: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(serialize_with = "ser_real")]
    pub observed: Real,
    #[serde(serialize_with = "ser_real")]
    pub predicted: Real,
    /// `observed / predicted`; indeterminate unless `predicted` is certified nonzero.
    #[serde(serialize_with = "ser_real")]
    pub ratio: Real,
    /// Power of `Δ` in the error term.
    pub expected_error_power: u32,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn ser_real<S: serde::Serializer>(x: &Real, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_sci_string(25))
}

impl AsymReport {
    pub fn new(quantity: &str, observed: Real, predicted: Real, expected_error_power: u32) -> Self {
        let ratio = if predicted.sign().is_some_and(|s| s.is_ne()) {
            observed.div(&predicted)
        } else {
            Real::indeterminate(observed.prec())
        };
        AsymReport {
            quantity: quantity.to_string(),
            m: None,
            d: None,
            k: None,
            n: None,
            observed,
            predicted,
            ratio,
            expected_error_power,
            notes: Vec::new(),
        }
    }

    /// `|ratio − 1|` at the midpoint.
    pub fn deviation(&self) -> f64 {
        (self.ratio.to_f64() - 1.0).abs()
    }
}

/// `G_2 − 1 − (1 − 3G_3)Δ²` against the scale `Δ⁴`.
pub fn check_g2_relation(est: &GmEstimate) -> Result<AsymReport> {
    let g2 = est.gm(2)?;
    let g3 = est.gm(3)?;
    let prec = est.prec();
    let one = Real::one(prec);
    let d2 = est.delta.sqr();
    let obs = &(g2 - &one) - &(&(&one - &g3.mul_i64(3)) * &d2);
    let mut r = AsymReport::new("G2_relation", obs, d2.sqr(), 4);
    r.m = Some(est.m);
    Ok(r)
}

/// `Q_m(M)` by summing over the partitions of `m`.
pub fn qm_partition(m: usize, est: &GmEstimate) -> Result<Real> {
    let prec = est.prec();
    if m == 0 {
        return Ok(Real::one(prec));
    }
    if est.m_max < m {
        return Err(Error::TruncationUnsound {
            needed: m,
            have: est.m_max,
        });
    }
    let mut base = Vec::with_capacity(m);
    base.push(est.g1_tilde.clone());
    for i in 2..=m {
        base.push(est.gm(i)?.clone());
    }
    let mut acc = Real::zero(prec);
    for p in partitions(m as u32) {
        let l = p.len();
        let l1 = p.lambda[0];
        let mut term = est.delta.pow_u(2 * m as u32 - 2 * l + 2 * l1);
        let mut den = Integer::from(1);
        for (i, &mult) in p.lambda.iter().enumerate() {
            if mult > 0 {
                term = &term * &base[i].pow_u(mult);
                den *= Integer::from(Integer::factorial(mult));
            }
        }
        term = term.div(&Real::from_integer(&den, prec));
        acc = if (l - l1) % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    Ok(acc)
}

/// Leading term plus first correction of `Q_m(M)`, split by the parity of `m`.
pub fn qm_leading(m: usize, est: &GmEstimate) -> Result<Real> {
    if m < 2 {
        return Err(Error::Domain("qm_leading needs m >= 2".into()));
    }
    if est.m_max < m {
        return Err(Error::TruncationUnsound {
            needed: m,
            have: est.m_max,
        });
    }
    let prec = est.prec();
    let h = m / 2;
    let g2 = est.gm(2)?;
    let gt = &est.g1_tilde;
    let delta = &est.delta;
    // G_2^e for possibly negative e; terms that would need it carry a zero factor
    let g2p = |e: i64| -> Real {
        if e >= 0 {
            g2.pow_u(e as u32)
        } else {
            g2.pow_u((-e) as u32).recip()
        }
    };
    let body = if m % 2 == 0 {
        let hm = h as i64;
        let mut corr = &g2p(hm - 1) * &gt.sqr();
        if m > 2 {
            let g3 = est.gm(3)?;
            let g4 = est.gm(4)?;
            let mm2 = Real::from_i64(m as i64 - 2, prec);
            corr = &corr + &(&(&mm2 * g4) * &g2p(hm - 2));
            corr = &corr + &(&(&(&mm2 * g3) * &g2p(hm - 2)) * gt);
            if m > 4 {
                let c = Real::from_i64((m as i64 - 2) * (m as i64 - 4), prec).div_i64(4);
                corr = &corr + &(&(&c * &g3.sqr()) * &g2p(hm - 3));
            }
        }
        let corr = &corr.mul_i64(m as i64).div_i64(4) * &delta.sqr();
        &g2p(hm) - &corr
    } else {
        let g3 = est.gm(3)?;
        let main = &(&g2p(h as i64) * gt) + &(&g3.mul_i64(h as i64) * &g2p(h as i64 - 1));
        &main * delta
    };
    let fact = Real::from_integer(&Integer::from(Integer::factorial(h as u32)), prec);
    let pre = delta.pow_u(m as u32).div(&fact);
    let v = &pre * &body;
    Ok(if h % 2 == 1 { -&v } else { v })
}

/// `A_{d,k}(n)` from the truncated sum `C(d,k) Δ^{−k} Σ_m y_{m,k} Q_m`.
#[derive(Clone, Debug)]
pub struct A2Estimate {
    pub value: Real,
    /// Largest `m` included.
    pub m_last: usize,
    /// True when fewer than the five terms `m = k..=k+4` were available.
    pub truncated_early: bool,
}

/// `A_{d,k}(n)` through the `Q_m` expansion, summing `m` from `k` to `k + 4`
/// (or to `m_max` when fewer coefficients were fitted).
pub fn adk_via_a2(d: usize, k: usize, n: u64, est: &GmEstimate) -> Result<A2Estimate> {
    if k > d {
        return Err(Error::Domain(format!("k = {k} exceeds d = {d}")));
    }
    if est.m != n + d as u64 {
        return Err(Error::Domain(format!("estimate is for M = {}, need M = {}", est.m, n + d as u64)));
    }
    let prec = est.prec();
    if k == 0 {
        return Ok(A2Estimate {
            value: Real::one(prec),
            m_last: 0,
            truncated_early: false,
        });
    }
    if est.m_max < k {
        return Err(Error::TruncationUnsound {
            needed: k,
            have: est.m_max,
        });
    }
    let m_last = (k + 4).min(est.m_max);
    let mut acc = Real::zero(prec);
    for m in k..=m_last {
        let y = Real::from_integer(&ymk(m as u32, k as u32), prec);
        acc = &acc + &(&y * &qm_partition(m, est)?);
    }
    let binom = Real::from_integer(&Integer::from(Integer::binomial_u(d as u32, k as u32)), prec);
    let value = &(&binom * &acc) * &est.delta.pow_u(k as u32).recip();
    Ok(A2Estimate {
        value,
        m_last,
        truncated_early: m_last < k + 4,
    })
}

/// `Z(t) = t(t−1)(−(2/3)(3t+2) + 2tG_3 − ((t−2)/2)G_3² − G_4)`.
pub fn z_poly(t: i64, g3: &Real, g4: &Real) -> Real {
    let prec = g3.prec().max(g4.prec());
    let mut inner = Real::from_i64(-2 * (3 * t + 2), prec).div_i64(3);
    inner = &inner + &g3.mul_i64(2 * t);
    inner = &inner - &g3.sqr().mul_i64(t - 2).div_i64(2);
    inner = &inner - g4;
    inner.mul_i64(t * (t - 1))
}

/// Leading-order prediction for `(−1)^{⌊k/2⌋}(d−k)!⌊k/2⌋!/d! · A_{d,k}(n)` next to
/// the value computed from the coefficient table.
pub fn predict_adk<S: CoefficientSource + ?Sized>(
    d: usize,
    k: usize,
    n: u64,
    est: &GmEstimate,
    src: &S,
    ctx: &PrecCtx,
) -> Result<AsymReport> {
    if k < 3 || k > d {
        return Err(Error::Domain(format!("predict_adk needs 3 <= k <= d, got k={k}, d={d}")));
    }
    let m = n + d as u64;
    if est.m != m {
        return Err(Error::Domain(format!("estimate is for M = {}, need M = {m}", est.m)));
    }
    let nc = a_coeffs(d, n, src, ctx)?;
    let prec = nc.prec();
    let h = k / 2;
    let fact = |x: usize| Integer::from(Integer::factorial(x as u32));
    let w = Rational::from((fact(d - k) * fact(h), fact(d)));
    let mut obs = &nc.a[k] * &Real::from_rational(&w, prec);
    if h % 2 == 1 {
        obs = -&obs;
    }
    let g3 = est.gm(3)?;
    let (pred, power) = if k % 2 == 0 {
        let g4 = est.gm(4)?;
        let z = z_poly(h as i64, g3, g4);
        (&Real::one(prec) + &(&z * &est.delta.sqr()), 4)
    } else {
        let t = &g3.with_prec(prec) - &Real::from_i64(2, prec);
        (&t.mul_i64(h as i64) * &est.delta, 3)
    };
    let mut r = AsymReport::new(if k % 2 == 0 { "Adk_even" } else { "Adk_odd" }, obs, pred, power);
    r.m = Some(m);
    r.d = Some(d);
    r.k = Some(k);
    r.n = Some(n);
    if m <= 10 * (k as u64).pow(3) {
        r.notes.push(format!("n+d = {m} is not above 10k^3 = {}", 10 * (k as u64).pow(3)));
    }
    if d < 4 {
        r.notes.push("d < 4".into());
    }
    Ok(r)
}

/// The constant `C = 1 + 10^{-5}` used in the envelopes for `c_{d,n,j}`.
pub fn envelope_c(prec: u32) -> Real {
    &Real::one(prec) + &Real::from_rational(&Rational::from((1, 100_000)), prec)
}

/// Envelope for `|c_{d,n,j}|`, `j ≥ 3`: with `ℓ = ⌊j/2⌋`,
/// `d!/((d−j)! ℓ!) ℓ^6 (16C²+1)^ℓ Δ⁴` for even `j` and
/// `d!/((d−j)! ℓ!) ℓ^4 (16C²+1)^ℓ Δ³` for odd `j`.
pub fn c_envelope(d: usize, j: usize, delta: &Real) -> Real {
    let prec = delta.prec();
    let l = j / 2;
    let fact = |x: usize| Integer::from(Integer::factorial(x as u32));
    let comb = Real::from_rational(&Rational::from((fact(d), fact(d - j) * fact(l))), prec);
    let c = envelope_c(prec);
    let base = &c.sqr().mul_i64(16) + &Real::one(prec);
    let (lp, dp) = if j % 2 == 0 { (6, 4) } else { (4, 3) };
    let lpow = Real::from_u64((l as u64).pow(lp), prec);
    &(&(&comb * &lpow) * &base.pow_u(l as u32)) * &delta.pow_u(dp)
}

/// Per-`j` comparison of `|c_{d,n,j}|` with its envelope.
#[derive(Clone, Debug)]
pub struct EnvelopeReport {
    pub per_j: Vec<AsymReport>,
    /// Index into `per_j` of the largest ratio.
    pub worst: usize,
}

impl EnvelopeReport {
    pub fn worst(&self) -> &AsymReport {
        &self.per_j[self.worst]
    }
}

/// `|c_{d,n,j}|` against [`c_envelope`] for `j = 3..=d`.
pub fn turan_cdnj_bound_report<S: CoefficientSource + ?Sized>(
    d: usize,
    n: u64,
    src: &S,
    ctx: &PrecCtx,
) -> Result<EnvelopeReport> {
    if d < 3 {
        return Err(Error::Domain("envelope report needs d >= 3".into()));
    }
    let nc = a_coeffs(d, n, src, ctx)?;
    let c = hermite_expand(&nc);
    let delta = nc
        .delta
        .clone()
        .ok_or_else(|| Error::Domain("Delta is undefined for this (d, n)".into()))?;
    let mut per_j = Vec::with_capacity(d - 2);
    for (j, cj) in c.iter().enumerate().skip(3) {
        let mut r = AsymReport::new("c_envelope", cj.abs(), c_envelope(d, j, &delta), if j % 2 == 0 { 4 } else { 3 });
        r.d = Some(d);
        r.n = Some(n);
        r.k = Some(j);
        per_j.push(r);
    }
    let worst = per_j
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.ratio.to_f64().total_cmp(&b.1.ratio.to_f64()))
        .map(|(i, _)| i)
        .unwrap();
    Ok(EnvelopeReport { per_j, worst })
}
