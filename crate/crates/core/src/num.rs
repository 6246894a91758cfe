//! Scalar abstraction for the numeric parts of the crate (clustering and
//! evaluation metrics), so they run over `f32` or `f64`.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

pub trait Real: Float + FromPrimitive + Sum + Debug + Send + Sync + 'static {
    fn from_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits in a float")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `num / den` for counts, defined as zero when `den` is zero.
pub fn ratio<T: Real>(num: usize, den: usize) -> T {
    if den == 0 {
        T::zero()
    } else {
        <T as Real>::from_usize(num) / <T as Real>::from_usize(den)
    }
}
