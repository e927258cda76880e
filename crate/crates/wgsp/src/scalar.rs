use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Scalar type for money, click rates, and quality scores: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + Sum + fmt::Debug + fmt::Display + 'static {}

impl<T> Real for T where T: Float + FromPrimitive + Sum + fmt::Debug + fmt::Display + 'static {}

/// Lift an `f64` constant into the working scalar type.
pub(crate) fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant must be representable in the scalar type")
}

/// Relative near-equality used wherever two scores or surpluses are compared
/// for a tie. Scores that differ by less than a 1e-9 relative gap are treated
/// as equal so that tie-break policies, not rounding noise, decide the order.
pub(crate) fn scores_tied<T: Real>(a: T, b: T) -> bool {
    let scale = a.abs().max(b.abs()).max(T::one());
    (a - b).abs() <= real::<T>(1e-9) * scale
}
