//! Thomas algorithm for tridiagonal systems.

use crate::scalar::Real;

/// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]` in place.
///
/// `lower[0]` and `upper[n-1]` are ignored. Returns `None` on a zero or
/// non-finite pivot.
pub fn solve_in_place<T: Real>(lower: &[T], diag: &[T], upper: &[T], rhs: &mut [T]) -> Option<()> {
    let n = rhs.len();
    debug_assert!(lower.len() == n && diag.len() == n && upper.len() == n);
    if n == 0 {
        return Some(());
    }
    let mut c = vec![T::zero(); n];
    let mut pivot = diag[0];
    if pivot == T::zero() || !pivot.is_finite() {
        return None;
    }
    c[0] = upper[0] / pivot;
    rhs[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot == T::zero() || !pivot.is_finite() {
            return None;
        }
        c[i] = upper[i] / pivot;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - c[i] * rhs[i + 1];
    }
    Some(())
}
