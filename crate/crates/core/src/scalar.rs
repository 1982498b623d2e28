//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

#[inline]
pub fn from_usize<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

#[inline]
pub fn from_u64<T: Scalar>(n: u64) -> T {
    T::from_u64(n).expect("count representable in scalar type")
}

/// Deterministic pairwise summation. The reduction tree depends only on the
/// slice length, so results are reproducible regardless of thread count.
pub fn pairwise_sum<T: Scalar>(values: &[T]) -> T {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        let mut acc = T::zero();
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise reduction of per-element vectors of fixed width `width`.
///
/// `f(x, out)` writes the `width` contributions of one element into `out`.
/// Large inputs are split across rayon workers along the same fixed tree.
pub fn pairwise_vec_sum<T, X, F>(items: &[X], width: usize, f: &F) -> Vec<T>
where
    T: Scalar,
    X: Sync,
    F: Fn(&X, &mut [T]) + Sync,
{
    const BLOCK: usize = 64;
    const PAR_THRESHOLD: usize = 1 << 14;
    if items.len() <= BLOCK {
        let mut acc = vec![T::zero(); width];
        let mut buf = vec![T::zero(); width];
        for x in items {
            f(x, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += *b;
            }
        }
        return acc;
    }
    let mid = items.len() / 2;
    let (lo, hi) = items.split_at(mid);
    let (mut a, b) = if items.len() >= PAR_THRESHOLD {
        rayon::join(
            || pairwise_vec_sum(lo, width, f),
            || pairwise_vec_sum(hi, width, f),
        )
    } else {
        (
            pairwise_vec_sum(lo, width, f),
            pairwise_vec_sum(hi, width, f),
        )
    };
    for (x, y) in a.iter_mut().zip(&b) {
        *x += *y;
    }
    a
}
