//! Working-precision contexts, precision escalation and rigorous quadrature.

mod ball;
pub mod quadrature;

pub use ball::{Real, RAD_PREC};
pub use quadrature::{integrate_decaying, DecayingIntegrand, QuadratureSpec};

use crate::error::{Error, Result};

/// Working precision plus the ceiling and growth factor used when a
/// computation has to be repeated at higher precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecCtx {
    bits: u32,
    max_bits: u32,
    factor_num: u32,
    factor_den: u32,
}

impl PrecCtx {
    pub const MIN_BITS: u32 = 64;

    /// Context with the default escalation factor 2.
    pub fn new(bits: u32, max_bits: u32) -> Result<Self> {
        Self::with_factor(bits, max_bits, 2, 1)
    }

    /// Context that escalates by `num/den` (which must exceed 1).
    pub fn with_factor(bits: u32, max_bits: u32, num: u32, den: u32) -> Result<Self> {
        if bits < Self::MIN_BITS {
            return Err(Error::InvalidContext(format!(
                "bits = {bits} is below the minimum {}",
                Self::MIN_BITS
            )));
        }
        if bits > max_bits {
            return Err(Error::InvalidContext(format!(
                "bits = {bits} exceeds max_bits = {max_bits}"
            )));
        }
        if den == 0 || num <= den {
            return Err(Error::InvalidContext(format!(
                "escalation factor {num}/{den} must be greater than 1"
            )));
        }
        Ok(PrecCtx {
            bits,
            max_bits,
            factor_num: num,
            factor_den: den,
        })
    }

    /// Context fixed at `bits` with no room to escalate.
    pub fn fixed(bits: u32) -> Result<Self> {
        Self::new(bits, bits)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn max_bits(&self) -> u32 {
        self.max_bits
    }

    pub fn escalation_factor(&self) -> (u32, u32) {
        (self.factor_num, self.factor_den)
    }

    /// Same context at a different working precision, clamped into
    /// `[MIN_BITS, max_bits]`.
    pub fn at_bits(&self, bits: u32) -> Self {
        PrecCtx {
            bits: bits.clamp(Self::MIN_BITS, self.max_bits),
            ..*self
        }
    }

    /// Context with `extra` more working bits, raising the ceiling if needed.
    pub fn with_extra_bits(&self, extra: u32) -> Self {
        let bits = self.bits.saturating_add(extra);
        PrecCtx {
            bits,
            max_bits: self.max_bits.max(bits),
            ..*self
        }
    }

    /// Next precision in the schedule, or `None` once `max_bits` has been used.
    pub fn escalate(&self) -> Option<Self> {
        if self.bits >= self.max_bits {
            return None;
        }
        let next = (self.bits as u64 * self.factor_num as u64).div_ceil(self.factor_den as u64);
        let next = next.max(self.bits as u64 + 1).min(self.max_bits as u64) as u32;
        Some(PrecCtx { bits: next, ..*self })
    }

    /// The precisions `bits, bits*factor, ...` up to and including `max_bits`.
    pub fn schedule(&self) -> impl Iterator<Item = PrecCtx> {
        std::iter::successors(Some(*self), |c| c.escalate())
    }

    /// Starting precision for a quantity indexed by `m`: a fixed base plus a
    /// few bits per binary digit of `m`, never below the context's own bits.
    pub fn for_index(&self, m: u64) -> Self {
        let lg = 64 - m.max(2).leading_zeros();
        self.at_bits(self.bits.max(96 + 4 * lg).max(128))
    }
}

impl Default for PrecCtx {
    fn default() -> Self {
        PrecCtx {
            bits: 128,
            max_bits: 4096,
            factor_num: 2,
            factor_den: 1,
        }
    }
}

/// Runs `compute` at increasing precision until `accept` holds.
///
/// Errors that more precision may cure (see [`Error::is_precision_limited`])
/// move on to the next precision; any other error is returned immediately.
pub fn refine_until<T, C, A>(mut compute: C, accept: A, ctx: &PrecCtx) -> Result<T>
where
    C: FnMut(&PrecCtx) -> Result<T>,
    A: Fn(&T) -> bool,
{
    let mut last: Option<Error> = None;
    for c in ctx.schedule() {
        match compute(&c) {
            Ok(v) if accept(&v) => return Ok(v),
            Ok(_) => {}
            Err(e) if e.is_precision_limited() => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(match last {
        Some(Error::PrecisionExhausted { what, .. }) => Error::exhausted(ctx.max_bits, what),
        Some(e) => e,
        None => Error::exhausted(ctx.max_bits, "acceptance predicate never satisfied"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Float;

    #[test]
    fn context_invariants() {
        assert!(PrecCtx::new(32, 128).is_err());
        assert!(PrecCtx::new(256, 128).is_err());
        assert!(PrecCtx::with_factor(64, 128, 1, 1).is_err());
        let c = PrecCtx::with_factor(64, 200, 3, 2).unwrap();
        let bits: Vec<u32> = c.schedule().map(|c| c.bits()).collect();
        assert_eq!(bits, vec![64, 96, 144, 200]);
    }

    #[test]
    fn refine_reaches_narrow_radius() {
        let ctx = PrecCtx::new(64, 1024).unwrap();
        let x = refine_until(
            |c| {
                let r = Float::with_val(64, 1) >> c.bits() as i32;
                Ok(Real::with_radius(Float::with_val(c.bits(), 1), &r))
            },
            |x: &Real| x.rad().to_f64() < 1e-30,
            &ctx,
        )
        .unwrap();
        assert!(x.prec() >= 100);
    }

    #[test]
    fn refine_reports_exhaustion() {
        let ctx = PrecCtx::new(64, 512).unwrap();
        let r = refine_until(
            |c| Ok(Real::with_radius(Float::with_val(c.bits(), 1), &Float::with_val(64, 1))),
            |x: &Real| x.rad().to_f64() < 0.5,
            &ctx,
        );
        assert!(matches!(r, Err(Error::PrecisionExhausted { bits: 512, .. })));
    }
}
