//! Trimmed L1 regression of the statistics on the factor loadings.
//!
//! Only the `m_keep` entries of `vec(X)` with the smallest magnitude take
//! part. The L1 objective is smoothed as `√(r² + ε²)` and minimized by
//! iteratively reweighted least squares started from the least-squares fit.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::solve::{cholesky_solve, pinv_solve};
use crate::linalg::{dot, DenseMatrix};
use crate::scalar::{count, lit, Real};

const SMOOTHING: f64 = 1e-6;
const STEP_TOL: f64 = 1e-8;
const MAX_ITER: usize = 200;
const MAX_HALVINGS: usize = 40;
const RANK_TOL: f64 = 1e-10;
const CHUNK: usize = 2048;
/// Largest kept design (entries) copied out of the loading rows.
const MATERIALIZE_LIMIT: usize = 1 << 25;

/// Row access to a `(pq) × h` loading matrix that is never stored densely.
pub trait LoadingRows<T>: Sync {
    fn n_rows(&self) -> usize;
    fn n_factors(&self) -> usize;
    /// Writes row `l` into `out`, which has length `n_factors()`.
    fn row_into(&self, l: usize, out: &mut [T]);
}

/// Dense loadings, mostly useful in tests.
impl<T: Real> LoadingRows<T> for DenseMatrix<T> {
    fn n_rows(&self) -> usize {
        self.rows()
    }

    fn n_factors(&self) -> usize {
        self.cols()
    }

    fn row_into(&self, l: usize, out: &mut [T]) {
        out.copy_from_slice(self.row(l));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimSpec {
    pub trim_fraction: f64,
}

impl Default for TrimSpec {
    fn default() -> Self {
        Self { trim_fraction: 0.9 }
    }
}

impl TrimSpec {
    pub fn new(trim_fraction: f64) -> Result<Self> {
        if !(trim_fraction > 0.0 && trim_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "trim fraction must lie in (0, 1], got {trim_fraction}"
            )));
        }
        Ok(Self { trim_fraction })
    }

    /// `⌊fraction · n⌋`.
    pub fn kept_count(&self, n: usize) -> usize {
        // guard against 0.9 * 10 = 8.999... style truncation
        ((self.trim_fraction * n as f64) + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone)]
pub struct TrimmedFit<T> {
    pub w: Vec<T>,
    /// Kept indices in increasing `|Z|` order.
    pub kept: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// Least squares on all entries was used because the kept design was
    /// rank deficient.
    pub fallback_least_squares: bool,
    /// Smoothed objective `(1/m_keep) Σ √(r² + ε²)` at the start and after
    /// every iteration.
    pub objective_trace: Vec<T>,
}

/// Indices of the `m_keep` smallest `|z|`, ties broken by index.
pub fn trimmed_indices<T: Real>(z: &[T], m_keep: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..z.len()).collect();
    let key = |&l: &usize| (z[l].abs(), l);
    let cmp = |a: &usize, b: &usize| {
        let (ka, kb) = (key(a), key(b));
        ka.0.partial_cmp(&kb.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ka.1.cmp(&kb.1))
    };
    let m_keep = m_keep.min(idx.len());
    if m_keep < idx.len() && m_keep > 0 {
        idx.select_nth_unstable_by(m_keep - 1, cmp);
    }
    idx.truncate(m_keep);
    idx.sort_unstable_by(cmp);
    idx
}

struct Pass<T> {
    gram: DenseMatrix<T>,
    rhs: Vec<T>,
    hess: DenseMatrix<T>,
    grad: Vec<T>,
    objective: T,
}

impl<T: Real> Pass<T> {
    fn zeros(h: usize) -> Self {
        Self {
            gram: DenseMatrix::zeros(h, h),
            rhs: vec![T::zero(); h],
            hess: DenseMatrix::zeros(h, h),
            grad: vec![T::zero(); h],
            objective: T::zero(),
        }
    }

    fn absorb(&mut self, other: &Self) {
        let pairs = [(&mut self.gram, &other.gram), (&mut self.hess, &other.hess)];
        for (a, b) in pairs {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += *y;
            }
        }
        for (x, y) in self.rhs.iter_mut().zip(&other.rhs) {
            *x += *y;
        }
        for (x, y) in self.grad.iter_mut().zip(&other.grad) {
            *x += *y;
        }
        self.objective += other.objective;
    }
}

fn add_outer<T: Real>(m: &mut DenseMatrix<T>, w: T, b: &[T]) {
    for a in 0..b.len() {
        let wa = w * b[a];
        let row = m.row_mut(a);
        for c in a..b.len() {
            row[c] += wa * b[c];
        }
    }
}

/// The kept rows of `B` with their targets, copied into one contiguous
/// block when that fits in [`MATERIALIZE_LIMIT`] entries.
struct KeptDesign<'a, T, L: ?Sized> {
    rows: &'a L,
    z: &'a [T],
    idx: &'a [usize],
    h: usize,
    dense: Option<Vec<T>>,
}

impl<'a, T: Real, L: LoadingRows<T> + ?Sized> KeptDesign<'a, T, L> {
    fn new(rows: &'a L, z: &'a [T], idx: &'a [usize]) -> Self {
        let h = rows.n_factors();
        let dense = (idx.len() * h <= MATERIALIZE_LIMIT).then(|| {
            let mut d = vec![T::zero(); idx.len() * h];
            if h > 0 {
                d.par_chunks_mut(h)
                    .zip(idx.par_iter())
                    .for_each(|(out, &l)| rows.row_into(l, out));
            }
            d
        });
        Self { rows, z, idx, h, dense }
    }

    /// Calls `f(b, z)` for kept positions `range`, `b` being the loading row.
    #[inline]
    fn each(&self, range: std::ops::Range<usize>, buf: &mut [T], mut f: impl FnMut(&[T], T)) {
        match &self.dense {
            Some(d) => {
                for pos in range {
                    f(&d[pos * self.h..(pos + 1) * self.h], self.z[self.idx[pos]]);
                }
            }
            None => {
                for pos in range {
                    let l = self.idx[pos];
                    self.rows.row_into(l, buf);
                    f(buf, self.z[l]);
                }
            }
        }
    }

    fn chunks(&self) -> impl IndexedParallelIterator<Item = std::ops::Range<usize>> {
        let n = self.idx.len();
        (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(move |c| c * CHUNK..((c + 1) * CHUNK).min(n))
    }

    /// Smoothed objective `(1/m) Σ √(r² + ε²)` only.
    /// Kept-row residuals `z_l − b_lᵀβ` in kept order.
    fn residuals(&self, beta: &[T]) -> Vec<T> {
        let parts: Vec<Vec<T>> = self
            .chunks()
            .map(|range| {
                let mut buf = vec![T::zero(); self.h];
                let mut out = Vec::with_capacity(range.len());
                self.each(range, &mut buf, |b, z| out.push(z - dot(b, beta)));
                out
            })
            .collect();
        parts.concat()
    }

    fn objective(&self, beta: &[T]) -> T {
        let eps2: T = lit(SMOOTHING * SMOOTHING);
        let partials: Vec<T> = self
            .chunks()
            .map(|range| {
                let mut buf = vec![T::zero(); self.h];
                let mut acc = T::zero();
                self.each(range, &mut buf, |b, z| {
                    let r = z - dot(b, beta);
                    acc += (r * r + eps2).sqrt();
                });
                acc
            })
            .collect();
        partials.into_iter().sum::<T>() / count(self.idx.len().max(1))
    }

    /// One full pass at `beta`.
    ///
    /// `gram`/`rhs` are the IRLS normal equations `Σ w bbᵀ`, `Σ w z b` with
    /// `w = 1/√(r²+ε²)` (or `w = 1`). When reweighting, `hess`/`grad` are
    /// the Hessian `Σ ε²/s³ bbᵀ` and negative gradient `Σ r/s b` of the
    /// smoothed objective.
    fn pass(&self, beta: &[T], reweight: bool) -> Pass<T> {
        let h = self.h;
        let eps2: T = lit(SMOOTHING * SMOOTHING);
        let partials: Vec<Pass<T>> = self
            .chunks()
            .map(|range| {
                let mut acc = Pass::zeros(h);
                let mut buf = vec![T::zero(); h];
                self.each(range, &mut buf, |b, z| {
                    let r = z - dot(b, beta);
                    let s = (r * r + eps2).sqrt();
                    acc.objective += s;
                    let w = if reweight { T::one() / s } else { T::one() };
                    add_outer(&mut acc.gram, w, b);
                    let wz = w * z;
                    for (g, &bk) in acc.rhs.iter_mut().zip(b) {
                        *g += wz * bk;
                    }
                    if reweight {
                        add_outer(&mut acc.hess, eps2 / (s * s * s), b);
                        let rs = r / s;
                        for (g, &bk) in acc.grad.iter_mut().zip(b) {
                            *g += bk * rs;
                        }
                    }
                });
                acc
            })
            .collect();
        let mut total = Pass::zeros(h);
        for p in &partials {
            total.absorb(p);
        }
        total.gram.mirror_upper();
        total.hess.mirror_upper();
        total.objective /= count(self.idx.len().max(1));
        total
    }
}

fn inf_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

fn solve_normal<T: Real>(gram: &DenseMatrix<T>, rhs: &[T]) -> Vec<T> {
    cholesky_solve(gram, rhs, lit(1e-14)).unwrap_or_else(|| pinv_solve(gram, rhs))
}

/// The L1 optimum sits where `h` kept residuals vanish. Solves for that
/// vertex from the `h` smallest residuals at `beta` and returns it when
/// the unsmoothed objective does not get worse.
fn snap_to_vertex<T: Real, L: LoadingRows<T> + ?Sized>(
    design: &KeptDesign<'_, T, L>,
    rows: &L,
    kept: &[usize],
    z: &[T],
    beta: &[T],
) -> Option<Vec<T>> {
    let h = beta.len();
    let resid = design.residuals(beta);
    let order = trimmed_indices(&resid, h);
    let mut a = DenseMatrix::zeros(h, h);
    let mut rhs = Vec::with_capacity(h);
    for (k, &pos) in order.iter().enumerate() {
        rows.row_into(kept[pos], a.row_mut(k));
        rhs.push(z[kept[pos]]);
    }
    let v = gauss_solve(a, rhs)?;
    let l1 = |r: Vec<T>| r.into_iter().fold(T::zero(), |acc, x| acc + x.abs());
    (l1(design.residuals(&v)) <= l1(resid)).then_some(v)
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn gauss_solve<T: Real>(mut a: DenseMatrix<T>, mut b: Vec<T>) -> Option<Vec<T>> {
    use std::cmp::Ordering;
    let n = b.len();
    let scale = a.data().iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[(i, c)].abs().partial_cmp(&a[(j, c)].abs()).unwrap_or(Ordering::Equal))?;
        if !(a[(piv, c)].abs() > lit::<T>(1e-12) * scale) {
            return None;
        }
        if piv != c {
            for k in 0..n {
                let t = a[(c, k)];
                a[(c, k)] = a[(piv, k)];
                a[(piv, k)] = t;
            }
            b.swap(c, piv);
        }
        for i in (c + 1)..n {
            let f = a[(i, c)] / a[(c, c)];
            if f != T::zero() {
                for k in c..n {
                    let d = f * a[(c, k)];
                    a[(i, k)] -= d;
                }
                let d = f * b[c];
                b[i] -= d;
            }
        }
    }
    for c in (0..n).rev() {
        let mut s = b[c];
        for k in (c + 1)..n {
            s -= a[(c, k)] * b[k];
        }
        b[c] = s / a[(c, c)];
    }
    b.iter().all(|x| x.is_finite()).then_some(b)
}

/// Least squares on every row; minimum-norm when the design is singular.
pub fn least_squares_fit<T: Real, L: LoadingRows<T> + ?Sized>(rows: &L, z: &[T]) -> Vec<T> {
    let h = rows.n_factors();
    if h == 0 {
        return Vec::new();
    }
    let all: Vec<usize> = (0..z.len()).collect();
    let pass = KeptDesign::new(rows, z, &all).pass(&vec![T::zero(); h], false);
    pinv_solve(&pass.gram, &pass.rhs)
}

/// Trimmed L1 fit of `z ≈ B w` where row `l` of `B` comes from `rows`.
///
/// The returned objective is within about `1e-7` (relative) of the exact
/// L1 optimum on the kept rows; the minimizer itself can move by
/// `O(ε / slope)` when the optimal vertex is nearly flat.
pub fn trimmed_l1_fit<T: Real, L: LoadingRows<T> + ?Sized>(
    z: &[T],
    rows: &L,
    spec: TrimSpec,
) -> Result<TrimmedFit<T>> {
    if rows.n_rows() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: (rows.n_rows(), 1),
            got: (z.len(), 1),
        });
    }
    TrimSpec::new(spec.trim_fraction)?;
    let h = rows.n_factors();
    let kept = trimmed_indices(z, spec.kept_count(z.len()));
    if h == 0 {
        return Ok(TrimmedFit {
            w: Vec::new(),
            kept,
            iterations: 0,
            converged: true,
            fallback_least_squares: false,
            objective_trace: Vec::new(),
        });
    }

    let design = KeptDesign::new(rows, z, &kept);
    let ls = design.pass(&vec![T::zero(); h], false);
    let start = if kept.len() > h {
        cholesky_solve(&ls.gram, &ls.rhs, lit(RANK_TOL))
    } else {
        None
    };
    let Some(mut beta) = start else {
        return Ok(TrimmedFit {
            w: least_squares_fit(rows, z),
            kept,
            iterations: 0,
            converged: true,
            fallback_least_squares: true,
            objective_trace: Vec::new(),
        });
    };

    let mut cur = design.pass(&beta, true);
    let mut trace = vec![cur.objective];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        // damped Newton on the smoothed objective first, the IRLS
        // majorization step (always a descent direction) as fallback
        let irls: Vec<T> = solve_normal(&cur.gram, &cur.rhs)
            .iter()
            .zip(&beta)
            .map(|(&a, &b)| a - b)
            .collect();
        let newton = cholesky_solve(&cur.hess, &cur.grad, lit(1e-14));
        let mut accepted = None;
        for step in newton.iter().chain(std::iter::once(&irls)) {
            let norm = inf_norm(step);
            if norm < lit(STEP_TOL) {
                accepted = Some((beta.clone(), false, norm));
                break;
            }
            let mut alpha = T::one();
            for _ in 0..MAX_HALVINGS {
                let cand: Vec<T> = beta.iter().zip(step).map(|(&b, &s)| b + alpha * s).collect();
                if design.objective(&cand) <= cur.objective {
                    accepted = Some((cand, true, alpha * norm));
                    break;
                }
                alpha = alpha * lit(0.5);
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((cand, moved_beta, moved)) = accepted else {
            // neither direction descends: beta is stationary
            converged = true;
            break;
        };
        beta = cand;
        if moved_beta {
            cur = design.pass(&beta, true);
            trace.push(cur.objective);
        }
        if moved < lit(STEP_TOL) {
            converged = true;
            break;
        }
    }
    if let Some(v) = snap_to_vertex(&design, rows, &kept, z, &beta) {
        beta = v;
    }
    Ok(TrimmedFit {
        w: beta,
        kept,
        iterations,
        converged,
        fallback_least_squares: false,
        objective_trace: trace,
    })
}
