//! Certified Taylor coefficients of the Riemann xi-function, Jensen
//! polynomials built from them, and rigorous hyperbolicity checks.

pub mod asymptotics;
pub mod error;
pub mod precision;
pub mod hyperbolicity;
pub mod jensen;
pub mod xi_taylor;

pub use error::{Error, Result};
pub use rug;
pub use precision::{PrecCtx, Real};
