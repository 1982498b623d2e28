//! Hermite polynomials by three-term recurrence.

use crate::scalar::{from_usize, lit, Scalar};

/// Physicists' Hermite polynomial Hⱼ(y): H₀=1, H₁=2y, Hⱼ₊₁ = 2y·Hⱼ − 2j·Hⱼ₋₁.
pub fn physicists<T: Scalar>(j: usize, y: T) -> T {
    let two = lit::<T>(2.0);
    let mut prev = T::one();
    if j == 0 {
        return prev;
    }
    let mut cur = two * y;
    for k in 1..j {
        let next = two * y * cur - two * from_usize::<T>(k) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[j] = 2^{-j/2}·Hⱼ(x/√2)` for j = 0..out.len().
///
/// The scaled sequence obeys hⱼ₊₁ = x·hⱼ − j·hⱼ₋₁ (the same recurrence as
/// above after absorbing the 2^{-j/2} factors), so no power of two is ever
/// formed explicitly.
pub fn scaled_sequence<T: Scalar>(x: T, out: &mut [T]) {
    if out.is_empty() {
        return;
    }
    out[0] = T::one();
    if out.len() == 1 {
        return;
    }
    out[1] = x;
    for j in 1..out.len() - 1 {
        out[j + 1] = x * out[j] - from_usize::<T>(j) * out[j - 1];
    }
}
