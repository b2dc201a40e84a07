//! Scalar abstraction shared by the similarity and metric code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type usable for TF-IDF weights and evaluation metrics.
///
/// Implemented for `f32` and `f64`. Rates that have an empty denominator are
/// represented by `T::nan()`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as float")
    }

    /// Lossy conversion from `f64` (used for configuration values).
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable as float")
    }

    /// `num / den`, or NaN when `den == 0`.
    fn ratio(num: usize, den: usize) -> Self {
        if den == 0 {
            Self::nan()
        } else {
            Self::from_count(num) / Self::from_count(den)
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Serde helpers that write NaN as `null` and read `null` back as NaN.
///
/// JSON has no NaN literal; undefined rates must still round-trip.
pub mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Scalar;

    pub fn serialize<T: Scalar, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
        if value.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(value.to_f64().unwrap_or(f64::NAN))
        }
    }

    pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        let v: Option<f64> = Option::deserialize(d)?;
        Ok(v.map(T::lit).unwrap_or_else(T::nan))
    }
}
