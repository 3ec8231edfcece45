use rug::Integer;

use crate::precision::Real;

/// Coordinates a polynomial is stored in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// `coeffs[k]` multiplies `X^k`.
    Monomial,
    /// `coeffs[k]` multiplies `H_k(X/2)`.
    HermiteHalf,
}

/// Dense polynomial with ball coefficients, lowest degree first.
#[derive(Clone, Debug)]
pub struct Poly {
    pub coeffs: Vec<Real>,
    pub basis: Basis,
}

/// Exact coefficients of the physicists' Hermite polynomial `H_d(x)`,
/// lowest degree first, from `H_{d+1} = 2x H_d − 2d H_{d−1}`.
pub fn hermite(d: usize) -> Vec<Integer> {
    let mut prev: Vec<Integer> = vec![Integer::from(1)];
    if d == 0 {
        return prev;
    }
    let mut cur: Vec<Integer> = vec![Integer::new(), Integer::from(2)];
    for k in 1..d {
        let mut next = vec![Integer::new(); k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += Integer::from(c * 2u32);
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= Integer::from(c * (2 * k as u32));
        }
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// Exact coefficients of `H_d(X/2)`: the `X^{d−2i}` coefficient is
/// `(−1)^i d! / (i! (d−2i)!)`.
pub fn hermite_half(d: usize) -> Vec<Integer> {
    let mut out = vec![Integer::new(); d + 1];
    for i in 0..=d / 2 {
        let mut c = half_coeff(d, i);
        if i % 2 == 1 {
            c = -c;
        }
        out[d - 2 * i] = c;
    }
    out
}

/// `d! / (i! (d−2i)!)`, which also gives `X^d = Σ_i d!/(i!(d−2i)!) H_{d−2i}(X/2)`.
pub(crate) fn half_coeff(d: usize, i: usize) -> Integer {
    let d = d as u32;
    let i = i as u32;
    Integer::from(Integer::factorial(d)) / Integer::from(Integer::factorial(i)) / Integer::from(Integer::factorial(d - 2 * i))
}

impl Poly {
    pub fn new(coeffs: Vec<Real>, basis: Basis) -> Self {
        Poly { coeffs, basis }
    }

    pub fn monomial(coeffs: Vec<Real>) -> Self {
        Poly::new(coeffs, Basis::Monomial)
    }

    pub fn from_integers(coeffs: &[Integer], basis: Basis, prec: u32) -> Self {
        Poly::new(coeffs.iter().map(|c| Real::from_integer(c, prec)).collect(), basis)
    }

    /// Formal degree, i.e. `coeffs.len() − 1`.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn prec(&self) -> u32 {
        self.coeffs.iter().map(Real::prec).max().unwrap_or(64)
    }

    /// True if the top coefficient is certified nonzero.
    pub fn has_certified_degree(&self) -> bool {
        self.coeffs.last().is_some_and(|c| c.sign().is_some())
    }

    /// Horner evaluation of a monomial-basis polynomial.
    pub fn eval(&self, x: &Real) -> Real {
        let p = self.to_monomial();
        let mut acc = Real::zero(p.prec().max(x.prec()));
        for c in p.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn to_monomial(&self) -> Poly {
        match self.basis {
            Basis::Monomial => self.clone(),
            Basis::HermiteHalf => {
                let prec = self.prec();
                let mut out = vec![Real::zero(prec); self.coeffs.len()];
                for (k, c) in self.coeffs.iter().enumerate() {
                    for (j, h) in hermite_half(k).iter().enumerate() {
                        if *h != 0 {
                            out[j] = &out[j] + &(c * &Real::from_integer(h, prec));
                        }
                    }
                }
                Poly::monomial(out)
            }
        }
    }

    pub fn to_hermite_half(&self) -> Poly {
        match self.basis {
            Basis::HermiteHalf => self.clone(),
            Basis::Monomial => {
                let prec = self.prec();
                let mut out = vec![Real::zero(prec); self.coeffs.len()];
                for (k, c) in self.coeffs.iter().enumerate() {
                    for i in 0..=k / 2 {
                        let w = Real::from_integer(&half_coeff(k, i), prec);
                        out[k - 2 * i] = &out[k - 2 * i] + &(c * &w);
                    }
                }
                Poly::new(out, Basis::HermiteHalf)
            }
        }
    }

    /// Coefficientwise overlap in the monomial basis (missing entries count as 0).
    pub fn overlaps(&self, other: &Poly) -> bool {
        let a = self.to_monomial();
        let b = other.to_monomial();
        let n = a.coeffs.len().max(b.coeffs.len());
        let zero = Real::zero(64);
        (0..n).all(|i| {
            a.coeffs.get(i).unwrap_or(&zero).overlaps(b.coeffs.get(i).unwrap_or(&zero))
        })
    }

    /// Coefficientwise difference in the monomial basis.
    pub fn sub(&self, other: &Poly) -> Poly {
        let a = self.to_monomial();
        let b = other.to_monomial();
        let n = a.coeffs.len().max(b.coeffs.len());
        let zero = Real::zero(a.prec().max(b.prec()));
        Poly::monomial(
            (0..n)
                .map(|i| a.coeffs.get(i).unwrap_or(&zero) - b.coeffs.get(i).unwrap_or(&zero))
                .collect(),
        )
    }

    /// `p(X + s)` for a monomial-basis `p`.
    pub fn taylor_shift(&self, s: &Real) -> Poly {
        let mut a = self.to_monomial().coeffs;
        let d = a.len();
        for i in 0..d {
            for j in (i..d - 1).rev() {
                let t = s * &a[j + 1];
                a[j] = &a[j] + &t;
            }
        }
        Poly::monomial(a)
    }

    /// `p(s X)` for a monomial-basis `p`.
    pub fn scale_arg(&self, s: &Real) -> Poly {
        let mut pow = Real::one(s.prec());
        let mut out = Vec::with_capacity(self.coeffs.len());
        for c in &self.to_monomial().coeffs {
            out.push(c * &pow);
            pow = &pow * s;
        }
        Poly::monomial(out)
    }

    pub fn scale(&self, s: &Real) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect(), self.basis)
    }
}
