//! Finite differences, the numbers `y_{m,k} = σ_k(x^m)`, the polynomials
//! `P_i(k)` and integer partitions as multiplicity vectors.

use rug::{Integer, Rational};

use crate::precision::Real;

fn binom(n: u32, k: u32) -> Integer {
    Integer::from(Integer::binomial_u(n, k))
}

/// `σ_k(f) = Σ_{j=0}^k (−1)^{k−j} C(k,j) f(j)` on exact values `f[0..=k]`.
pub fn sigma_diff(k: usize, f: &[Rational]) -> Rational {
    assert!(f.len() > k, "sigma_diff needs f(0..={k})");
    let mut acc = Rational::new();
    for (j, fj) in f.iter().enumerate().take(k + 1) {
        let t = Rational::from(fj * binom(k as u32, j as u32));
        if (k - j) % 2 == 0 {
            acc += t;
        } else {
            acc -= t;
        }
    }
    acc
}

/// Ball version of [`sigma_diff`].
pub fn sigma_diff_real(k: usize, f: &[Real]) -> Real {
    assert!(f.len() > k, "sigma_diff needs f(0..={k})");
    let prec = f.iter().map(Real::prec).max().unwrap_or(64);
    let mut acc = Real::zero(prec);
    for (j, fj) in f.iter().enumerate().take(k + 1) {
        let t = fj * &Real::from_integer(&binom(k as u32, j as u32), prec);
        acc = if (k - j) % 2 == 0 { &acc + &t } else { &acc - &t };
    }
    acc
}

/// `y_{m,k} = σ_k(x^m)`, exact.
pub fn ymk(m: u32, k: u32) -> Integer {
    if m < k {
        return Integer::new();
    }
    let mut acc = Integer::new();
    for j in 0..=k {
        let t = binom(k, j) * Integer::from(Integer::u_pow_u(j, m));
        if (k - j) % 2 == 0 {
            acc += t;
        } else {
            acc -= t;
        }
    }
    acc
}

/// `P_i(k) = y_{k+i,k} / (k! C(k+i, i+1))`.
pub fn pi_value(i: u32, k: u32) -> Rational {
    assert!(i >= 1 && k >= 1, "P_i(k) needs i, k >= 1");
    let den = Integer::from(Integer::factorial(k)) * binom(k + i, i + 1);
    Rational::from((ymk(k + i, k), den))
}

/// A partition of `m` stored as multiplicities: `lambda[i−1]` parts equal to `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub lambda: Vec<u32>,
}

impl Partition {
    /// Number of parts.
    pub fn len(&self) -> u32 {
        self.lambda.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The integer being partitioned.
    pub fn weight(&self) -> u32 {
        self.lambda.iter().enumerate().map(|(i, &l)| (i as u32 + 1) * l).sum()
    }
}

/// All partitions of `m`, in lexicographic order of multiplicity vectors.
pub fn partitions(m: u32) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut lambda = vec![0u32; m as usize];
    fill(m, 1, &mut lambda, &mut out);
    out
}

// Chooses the multiplicity of parts equal to `i`, for parts i..=m of what remains.
fn fill(rest: u32, i: u32, lambda: &mut Vec<u32>, out: &mut Vec<Partition>) {
    if rest == 0 {
        out.push(Partition { lambda: lambda.clone() });
        return;
    }
    if i as usize > lambda.len() {
        return;
    }
    for mult in 0..=rest / i {
        lambda[i as usize - 1] = mult;
        fill(rest - mult * i, i + 1, lambda, out);
    }
    lambda[i as usize - 1] = 0;
}
