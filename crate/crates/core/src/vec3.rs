//! Small helpers on `[T; 3]` vectors.

use num_traits::Float;

#[inline]
pub fn sub<T: Float>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add<T: Float>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale<T: Float>(a: &[T; 3], s: T) -> [T; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot<T: Float>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm<T: Float>(a: &[T; 3]) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist<T: Float>(a: &[T; 3], b: &[T; 3]) -> T {
    norm(&sub(a, b))
}

#[inline]
pub fn neg<T: Float>(a: &[T; 3]) -> [T; 3] {
    [-a[0], -a[1], -a[2]]
}

/// Returns `a / |a|`, or `None` for the zero vector.
pub fn normalize<T: Float>(a: &[T; 3]) -> Option<[T; 3]> {
    let n = norm(a);
    if n > T::zero() && n.is_finite() {
        Some(scale(a, T::one() / n))
    } else {
        None
    }
}
