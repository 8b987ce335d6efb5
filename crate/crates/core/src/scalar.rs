use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type the model and both solvers are written against.
///
/// Implemented for `f32` and `f64`. Tolerance defaults throughout the crate
/// assume `f64`; callers using `f32` should loosen them.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal or parameter.
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("value representable in scalar type")
    }

    /// Converts a count or index.
    fn of_usize(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
