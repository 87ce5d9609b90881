//! The plug-in FDP approximation shared by every estimator.

use rayon::prelude::*;

use crate::normal::{phi, z_half};
use crate::scalar::{count, Real};

const CHUNK: usize = 4096;

/// Sums `f(l)` for `l < n` in fixed-size chunks merged in order, so the
/// result does not depend on the number of worker threads.
pub(crate) fn ordered_sum<T: Real>(n: usize, f: impl Fn(usize) -> T + Sync) -> T {
    let partials: Vec<T> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(n);
            (c * CHUNK..end).map(&f).sum()
        })
        .collect();
    partials.into_iter().sum()
}

/// `Φ(a(z + μ)) + Φ(a(z - μ))`.
#[inline]
pub fn tail_pair<T: Real>(a: T, z: T, mu: T) -> T {
    phi(a * (z + mu)) + phi(a * (z - mu))
}

/// `Σ_l Φ(a_l(z_{t/2} + μ_l)) + Φ(a_l(z_{t/2} - μ_l))` over the cells with
/// `include(l)`.
pub fn expected_false_rejections<T: Real>(
    n: usize,
    t: T,
    coef: impl Fn(usize) -> (T, T) + Sync,
    include: impl Fn(usize) -> bool + Sync,
) -> T {
    let z = z_half(t);
    ordered_sum(n, |l| {
        if include(l) {
            let (a, mu) = coef(l);
            tail_pair(a, z, mu)
        } else {
            T::zero()
        }
    })
}

/// Divides by `R` with the 0/0 = 0 convention and caps at `n/R`.
pub fn ratio_to_rejections<T: Real>(sum: T, n: usize, r: usize) -> T {
    if r == 0 {
        return T::zero();
    }
    let r: T = count(r);
    (sum / r).max(T::zero()).min(count::<T>(n) / r)
}

/// Reporting form of an FDP estimate: clamped to `[0, 1]`.
pub fn clamp_unit<T: Real>(fdp: T) -> T {
    fdp.max(T::zero()).min(T::one())
}
