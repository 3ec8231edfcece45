//! Midpoint-radius enclosures over MPFR floats.
//!
//! A [`Real`] stands for the closed interval `[mid - rad, mid + rad]`. Every
//! operation returns a ball that contains the exact result of applying the
//! operation to every point of its inputs. Midpoints are rounded to nearest at
//! the working precision and the rounding error is folded into the radius;
//! radii are kept at [`RAD_PREC`] bits and always rounded up.
//!
//! A ball with an infinite radius is *indeterminate*: it is what division by a
//! ball containing zero or a logarithm of a nonpositive ball produce. It
//! propagates through all arithmetic and never certifies a sign.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::float::{Constant, Round, Special};
use rug::ops::PowAssignRound;
use rug::{Float, Integer, Rational};

/// Precision of radii, in bits.
pub const RAD_PREC: u32 = 64;

fn rad_zero() -> Float {
    Float::new(RAD_PREC)
}

fn rad_inf() -> Float {
    Float::with_val(RAD_PREC, Special::Infinity)
}

/// `|x|` rounded up to a radius.
fn abs_up(x: &Float) -> Float {
    Float::with_val_round(RAD_PREC, &*x.as_abs(), Round::Up).0
}

fn add_up(a: &Float, b: &Float) -> Float {
    Float::with_val_round(RAD_PREC, a + b, Round::Up).0
}

fn mul_up(a: &Float, b: &Float) -> Float {
    Float::with_val_round(RAD_PREC, a * b, Round::Up).0
}

/// Upper bound for the error of a midpoint produced by round-to-nearest.
fn rounding_error(mid: &Float, ord: Ordering) -> Float {
    if ord == Ordering::Equal {
        return rad_zero();
    }
    match mid.get_exp() {
        // one ulp, twice the nearest-rounding error
        Some(e) => Float::with_val(RAD_PREC, 1) << (e - mid.prec() as i32),
        None => rad_inf(),
    }
}

#[derive(Clone)]
pub struct Real {
    mid: Float,
    rad: Float,
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{} +/- {}]",
            self.mid.to_string_radix(10, Some(20)),
            self.rad.to_string_radix(10, Some(3))
        )
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        write!(
            f,
            "[{} +/- {}]",
            self.mid.to_string_radix(10, Some(digits)),
            self.rad.to_string_radix_round(10, Some(3), Round::Up)
        )
    }
}

impl Real {
    pub fn zero(prec: u32) -> Self {
        Real {
            mid: Float::new(prec),
            rad: rad_zero(),
        }
    }

    pub fn one(prec: u32) -> Self {
        Real::from_i64(1, prec)
    }

    pub fn indeterminate(prec: u32) -> Self {
        Real {
            mid: Float::new(prec),
            rad: rad_inf(),
        }
    }

    /// Exact ball around a float, keeping its precision.
    pub fn from_float(mid: Float) -> Self {
        Real {
            mid,
            rad: rad_zero(),
        }
    }

    /// Ball `mid +/- rad`; the radius is rounded up to [`RAD_PREC`].
    pub fn with_radius(mid: Float, rad: &Float) -> Self {
        let rad = if rad.is_nan() { rad_inf() } else { abs_up(rad) };
        Real { mid, rad }
    }

    pub fn from_i64(x: i64, prec: u32) -> Self {
        let (mid, ord) = Float::with_val_round(prec, x, Round::Nearest);
        let rad = rounding_error(&mid, ord);
        Real { mid, rad }
    }

    pub fn from_u64(x: u64, prec: u32) -> Self {
        let (mid, ord) = Float::with_val_round(prec, x, Round::Nearest);
        let rad = rounding_error(&mid, ord);
        Real { mid, rad }
    }

    /// Ball around the exact binary value of `x`.
    pub fn from_f64(x: f64, prec: u32) -> Self {
        let (mid, ord) = Float::with_val_round(prec, x, Round::Nearest);
        let rad = rounding_error(&mid, ord);
        Real { mid, rad }
    }

    pub fn from_integer(x: &Integer, prec: u32) -> Self {
        let (mid, ord) = Float::with_val_round(prec, x, Round::Nearest);
        let rad = rounding_error(&mid, ord);
        Real { mid, rad }
    }

    pub fn from_rational(x: &Rational, prec: u32) -> Self {
        let (mid, ord) = Float::with_val_round(prec, x, Round::Nearest);
        let rad = rounding_error(&mid, ord);
        Real { mid, rad }
    }

    /// Smallest representable ball containing `[lo, hi]`.
    pub fn from_bounds(lo: &Float, hi: &Float, prec: u32) -> Self {
        if lo.is_nan() || hi.is_nan() || lo.is_infinite() || hi.is_infinite() {
            return Real::indeterminate(prec);
        }
        debug_assert!(lo <= hi);
        let mut mid = Float::with_val(prec, lo + hi);
        mid >>= 1u32;
        let up = Float::with_val_round(RAD_PREC, hi - &mid, Round::Up).0;
        let down = Float::with_val_round(RAD_PREC, &mid - lo, Round::Up).0;
        let rad = if up > down { up } else { down };
        Real { mid, rad }
    }

    /// Parses a decimal midpoint and radius as written by [`Real::to_decimal_strings`].
    pub fn from_decimal_strs(mid: &str, rad: &str, prec: u32) -> Option<Self> {
        let m = Float::parse(mid.trim()).ok()?;
        let r = Float::parse(rad.trim()).ok()?;
        let (mid, ord) = Float::with_val_round(prec, m, Round::Nearest);
        let (r, _) = Float::with_val_round(RAD_PREC, r, Round::Up);
        if r.is_sign_negative() && !r.is_zero() {
            return None;
        }
        let rad = add_up(&r, &rounding_error(&mid, ord));
        Some(Real { mid, rad })
    }

    /// Decimal midpoint and radius with enough digits to read back the same
    /// binary values at the stored precision.
    pub fn to_decimal_strings(&self) -> (String, String) {
        (
            self.mid.to_string_radix(10, None),
            self.rad.to_string_radix_round(10, None, Round::Up),
        )
    }

    /// Midpoint in scientific notation with `digits` significant digits.
    pub fn to_sci_string(&self, digits: usize) -> String {
        if !self.is_finite() {
            return "nan".into();
        }
        self.mid.to_string_radix(10, Some(digits))
    }

    pub fn pi(prec: u32) -> Self {
        let lo = Float::with_val_round(prec, Constant::Pi, Round::Down).0;
        let hi = Float::with_val_round(prec, Constant::Pi, Round::Up).0;
        Real::from_bounds(&lo, &hi, prec)
    }

    pub fn ln2(prec: u32) -> Self {
        let lo = Float::with_val_round(prec, Constant::Log2, Round::Down).0;
        let hi = Float::with_val_round(prec, Constant::Log2, Round::Up).0;
        Real::from_bounds(&lo, &hi, prec)
    }

    /// Applies a correctly rounded MPFR function at an exactly representable
    /// point, bracketing the result with downward and upward rounding.
    pub fn special_at(x: f64, prec: u32, f: impl Fn(&mut Float, Round) -> Ordering) -> Self {
        let mut lo = Float::with_val(prec.max(53), x);
        let mut hi = lo.clone();
        f(&mut lo, Round::Down);
        f(&mut hi, Round::Up);
        Real::from_bounds(&lo, &hi, prec)
    }

    pub fn mid(&self) -> &Float {
        &self.mid
    }

    pub fn rad(&self) -> &Float {
        &self.rad
    }

    pub fn prec(&self) -> u32 {
        self.mid.prec()
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64()
    }

    pub fn is_finite(&self) -> bool {
        self.rad.is_finite() && self.mid.is_finite()
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.rad.is_zero() && self.mid.is_zero()
    }

    /// Lower endpoint, rounded down at the midpoint precision.
    pub fn lower(&self) -> Float {
        if !self.is_finite() {
            return Float::with_val(self.prec(), Special::NegInfinity);
        }
        Float::with_val_round(self.prec(), &self.mid - &self.rad, Round::Down).0
    }

    /// Upper endpoint, rounded up at the midpoint precision.
    pub fn upper(&self) -> Float {
        if !self.is_finite() {
            return Float::with_val(self.prec(), Special::Infinity);
        }
        Float::with_val_round(self.prec(), &self.mid + &self.rad, Round::Up).0
    }

    /// Upper bound for `|x|` over the ball.
    pub fn mag(&self) -> Float {
        if !self.is_finite() {
            return rad_inf();
        }
        add_up(&abs_up(&self.mid), &self.rad)
    }

    /// Lower bound for `|x|` over the ball (zero when the ball contains zero).
    pub fn mig(&self) -> Float {
        if !self.is_finite() {
            return rad_zero();
        }
        let d = Float::with_val_round(RAD_PREC, &*self.mid.as_abs() - &self.rad, Round::Down).0;
        if d.is_sign_negative() {
            rad_zero()
        } else {
            d
        }
    }

    pub fn is_positive(&self) -> bool {
        self.is_finite() && self.lower() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.is_finite() && self.upper() < 0
    }

    pub fn is_nonnegative(&self) -> bool {
        self.is_finite() && self.lower() >= 0
    }

    pub fn contains_zero(&self) -> bool {
        !self.is_positive() && !self.is_negative()
    }

    /// Certified sign, if zero lies outside the ball.
    pub fn sign(&self) -> Option<Ordering> {
        if self.is_positive() {
            Some(Ordering::Greater)
        } else if self.is_negative() {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    /// True if `other` lies entirely inside `self`.
    pub fn contains(&self, other: &Real) -> bool {
        if !self.is_finite() {
            return true;
        }
        if !other.is_finite() {
            return false;
        }
        self.lower() <= other.lower() && other.upper() <= self.upper()
    }

    pub fn contains_float(&self, x: &Float) -> bool {
        self.is_finite() && &self.lower() <= x && x <= &self.upper()
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.contains_float(&Float::with_val(53, x))
    }

    pub fn overlaps(&self, other: &Real) -> bool {
        if !self.is_finite() || !other.is_finite() {
            return true;
        }
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }

    /// `rad / |mid|` rounded up; infinite when the midpoint is zero and the radius is not.
    pub fn rel_radius(&self) -> Float {
        if self.rad.is_zero() {
            return rad_zero();
        }
        if self.mid.is_zero() || !self.is_finite() {
            return rad_inf();
        }
        let m = Float::with_val_round(RAD_PREC, &*self.mid.as_abs(), Round::Down).0;
        Float::with_val_round(RAD_PREC, &self.rad / &m, Round::Up).0
    }

    /// Relative radius as an `f64`; saturates at infinity.
    pub fn rel_width(&self) -> f64 {
        self.rel_radius().to_f64_round(Round::Up)
    }

    /// Same ball at a different midpoint precision.
    pub fn with_prec(&self, prec: u32) -> Self {
        if !self.is_finite() {
            return Real::indeterminate(prec);
        }
        let (mid, ord) = Float::with_val_round(prec, &self.mid, Round::Nearest);
        let rad = add_up(&self.rad, &rounding_error(&mid, ord));
        Real { mid, rad }
    }

    /// Widens the radius by a nonnegative error bound.
    pub fn add_error(&self, err: &Float) -> Self {
        Real {
            mid: self.mid.clone(),
            rad: add_up(&self.rad, &abs_up(err)),
        }
    }

    /// Ball containing both inputs.
    pub fn union(&self, other: &Real) -> Self {
        let prec = self.prec().max(other.prec());
        let lo = self.lower().min(&other.lower());
        let hi = self.upper().max(&other.upper());
        Real::from_bounds(&lo, &hi, prec)
    }

    pub fn abs(&self) -> Self {
        if self.mid.is_sign_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn sqr(&self) -> Self {
        if !self.is_finite() {
            return Real::indeterminate(self.prec());
        }
        if self.contains_zero() {
            let m = self.mag();
            let hi = Float::with_val_round(self.prec(), &m * &m, Round::Up).0;
            return Real::from_bounds(&Float::new(self.prec()), &hi, self.prec());
        }
        self * self
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        self * &Real::from_i64(k, self.prec().max(64))
    }

    pub fn div_i64(&self, k: i64) -> Self {
        self.div(&Real::from_i64(k, self.prec().max(64)))
    }

    /// Exact multiplication by `2^k`.
    pub fn mul_2si(&self, k: i32) -> Self {
        Real {
            mid: self.mid.clone() << k,
            rad: self.rad.clone() << k,
        }
    }

    pub fn recip(&self) -> Self {
        Real::one(self.prec()).div(self)
    }

    /// Ball division; indeterminate when the divisor contains zero.
    pub fn div(&self, other: &Real) -> Self {
        let prec = self.prec().max(other.prec());
        if !self.is_finite() || !other.is_finite() {
            return Real::indeterminate(prec);
        }
        let den = other.mig();
        if den.is_zero() {
            return Real::indeterminate(prec);
        }
        let (mid, ord) = Float::with_val_round(prec, &self.mid / &other.mid, Round::Nearest);
        let rnd = rounding_error(&mid, ord);
        if self.rad.is_zero() && other.rad.is_zero() {
            return Real { mid, rad: rnd };
        }
        // |x/y - xm/ym| <= (rx + |xm/ym| ry) / (|ym| - ry)
        let q = add_up(&abs_up(&mid), &rnd);
        let num = add_up(&self.rad, &mul_up(&q, &other.rad));
        let prop = Float::with_val_round(RAD_PREC, &num / &den, Round::Up).0;
        Real {
            mid,
            rad: add_up(&prop, &rnd),
        }
    }

    fn monotone(&self, increasing: bool, f: impl Fn(&mut Float, Round) -> Ordering) -> Self {
        let prec = self.prec();
        if !self.is_finite() {
            return Real::indeterminate(prec);
        }
        let mut lo = self.lower();
        let mut hi = self.upper();
        if increasing {
            f(&mut lo, Round::Down);
            f(&mut hi, Round::Up);
            Real::from_bounds(&lo, &hi, prec)
        } else {
            f(&mut lo, Round::Up);
            f(&mut hi, Round::Down);
            Real::from_bounds(&hi, &lo, prec)
        }
    }

    /// Functions with Lipschitz constant at most one on the whole line.
    fn lipschitz_one(&self, f: impl Fn(&mut Float, Round) -> Ordering) -> Self {
        let prec = self.prec();
        if !self.is_finite() {
            return Real::indeterminate(prec);
        }
        let mut lo = self.mid.clone();
        let mut hi = self.mid.clone();
        f(&mut lo, Round::Down);
        f(&mut hi, Round::Up);
        lo = Float::with_val_round(prec, &lo - &self.rad, Round::Down).0;
        hi = Float::with_val_round(prec, &hi + &self.rad, Round::Up).0;
        Real::from_bounds(&lo, &hi, prec)
    }

    pub fn exp(&self) -> Self {
        self.monotone(true, |x, r| x.exp_round(r))
    }

    /// Natural logarithm; indeterminate unless the ball is positive.
    pub fn ln(&self) -> Self {
        if !self.is_positive() {
            return Real::indeterminate(self.prec());
        }
        self.monotone(true, |x, r| x.ln_round(r))
    }

    /// Square root; indeterminate if the ball reaches below zero.
    pub fn sqrt(&self) -> Self {
        if !self.is_nonnegative() {
            return Real::indeterminate(self.prec());
        }
        self.monotone(true, |x, r| x.sqrt_round(r))
    }

    pub fn sin(&self) -> Self {
        self.lipschitz_one(|x, r| x.sin_round(r))
    }

    pub fn cos(&self) -> Self {
        self.lipschitz_one(|x, r| x.cos_round(r))
    }

    pub fn atan(&self) -> Self {
        self.monotone(true, |x, r| x.atan_round(r))
    }

    /// `x^n` for a nonnegative integer exponent.
    pub fn pow_u(&self, n: u32) -> Self {
        let prec = self.prec();
        if n == 0 {
            return Real::one(prec);
        }
        if !self.is_finite() {
            return Real::indeterminate(prec);
        }
        let pow = |x: &mut Float, r: Round| x.pow_assign_round(n, r);
        if n % 2 == 1 || self.is_nonnegative() {
            return self.monotone(true, pow);
        }
        if self.upper() <= 0 {
            return self.monotone(false, pow);
        }
        let mut hi = self.mag();
        hi.set_prec_round(prec, Round::Up);
        hi.pow_assign_round(n, Round::Up);
        Real::from_bounds(&Float::new(prec), &hi, prec)
    }

    /// `x^y` for a positive base.
    pub fn pow(&self, y: &Real) -> Self {
        (y * &self.ln()).exp()
    }
}

impl Add for &Real {
    type Output = Real;

    fn add(self, other: &Real) -> Real {
        let prec = self.prec().max(other.prec());
        if !self.is_finite() || !other.is_finite() {
            return Real::indeterminate(prec);
        }
        let (mid, ord) = Float::with_val_round(prec, &self.mid + &other.mid, Round::Nearest);
        let rad = add_up(&add_up(&self.rad, &other.rad), &rounding_error(&mid, ord));
        Real { mid, rad }
    }
}

impl Sub for &Real {
    type Output = Real;

    fn sub(self, other: &Real) -> Real {
        let prec = self.prec().max(other.prec());
        if !self.is_finite() || !other.is_finite() {
            return Real::indeterminate(prec);
        }
        let (mid, ord) = Float::with_val_round(prec, &self.mid - &other.mid, Round::Nearest);
        let rad = add_up(&add_up(&self.rad, &other.rad), &rounding_error(&mid, ord));
        Real { mid, rad }
    }
}

impl Mul for &Real {
    type Output = Real;

    fn mul(self, other: &Real) -> Real {
        let prec = self.prec().max(other.prec());
        if !self.is_finite() || !other.is_finite() {
            return Real::indeterminate(prec);
        }
        let (mid, ord) = Float::with_val_round(prec, &self.mid * &other.mid, Round::Nearest);
        let mut rad = rounding_error(&mid, ord);
        if !self.rad.is_zero() || !other.rad.is_zero() {
            let a = mul_up(&abs_up(&self.mid), &other.rad);
            let b = mul_up(&abs_up(&other.mid), &self.rad);
            let c = mul_up(&self.rad, &other.rad);
            rad = add_up(&add_up(&add_up(&a, &b), &c), &rad);
        }
        Real { mid, rad }
    }
}

impl Neg for &Real {
    type Output = Real;

    fn neg(self) -> Real {
        Real {
            mid: -self.mid.clone(),
            rad: self.rad.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Real {
            type Output = Real;
            fn $method(self, other: Real) -> Real {
                (&self).$method(&other)
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $method(self, other: &Real) -> Real {
                (&self).$method(other)
            }
        }
        impl $tr<Real> for &Real {
            type Output = Real;
            fn $method(self, other: Real) -> Real {
                self.$method(&other)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Real {
    type Output = Real;

    fn neg(self) -> Real {
        -&self
    }
}

impl std::iter::Sum for Real {
    fn sum<I: Iterator<Item = Real>>(iter: I) -> Real {
        let mut acc: Option<Real> = None;
        for x in iter {
            acc = Some(match acc {
                None => x,
                Some(a) => &a + &x,
            });
        }
        acc.unwrap_or_else(|| Real::zero(64))
    }
}
