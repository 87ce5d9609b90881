//! Two-sample test statistics on matrix-valued data.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::normal::two_sided_p;
use crate::scalar::{count, lit, Real};

/// Below this pooled standard deviation a cell is treated as constant.
const MIN_SIGMA: f64 = 1e-300;

/// Treatment stack `Y_1..Y_n` and control stack `Z_1..Z_m`, all `p × q`.
#[derive(Debug, Clone)]
pub struct TwoSampleDataset<T> {
    treatment: Vec<DenseMatrix<T>>,
    control: Vec<DenseMatrix<T>>,
}

impl<T: Real> TwoSampleDataset<T> {
    pub fn new(treatment: Vec<DenseMatrix<T>>, control: Vec<DenseMatrix<T>>) -> Result<Self> {
        let (n, m) = (treatment.len(), control.len());
        if n < 2 || m < 2 || n + m < 5 {
            return Err(Error::InvalidDataset(format!(
                "need n >= 2, m >= 2 and n + m >= 5 (got n={n}, m={m})"
            )));
        }
        let shape = treatment[0].shape();
        for (k, obs) in treatment.iter().chain(&control).enumerate() {
            if obs.shape() != shape {
                return Err(Error::InvalidDataset(format!(
                    "observation {k} has shape {:?}, expected {shape:?}",
                    obs.shape()
                )));
            }
        }
        Ok(Self { treatment, control })
    }

    /// Skips the group-size rule so the two-by-two hand examples can be
    /// checked; shapes must still agree.
    #[cfg(test)]
    pub(crate) fn new_unchecked(
        treatment: Vec<DenseMatrix<T>>,
        control: Vec<DenseMatrix<T>>,
    ) -> Self {
        Self { treatment, control }
    }

    pub fn treatment(&self) -> &[DenseMatrix<T>] {
        &self.treatment
    }

    pub fn control(&self) -> &[DenseMatrix<T>] {
        &self.control
    }

    pub fn n(&self) -> usize {
        self.treatment.len()
    }

    pub fn m(&self) -> usize {
        self.control.len()
    }

    /// `(p, q)`
    pub fn dims(&self) -> (usize, usize) {
        self.treatment[0].shape()
    }

    /// Pooled degrees of freedom `n + m - 2`.
    pub fn dof(&self) -> usize {
        self.n() + self.m() - 2
    }

    /// Default cap on the number of factors, `⌊0.2(n+m)⌋`.
    pub fn default_max_factors(&self) -> usize {
        (self.n() + self.m()) / 5
    }

    pub fn treatment_mean(&self) -> DenseMatrix<T> {
        mean_of(&self.treatment)
    }

    pub fn control_mean(&self) -> DenseMatrix<T> {
        mean_of(&self.control)
    }

    /// Visits every centered observation `Y_l - Ȳ` then `Z_k - Z̄`.
    pub fn for_each_centered(&self, mut f: impl FnMut(&DenseMatrix<T>)) {
        for (group, mean) in [
            (&self.treatment, self.treatment_mean()),
            (&self.control, self.control_mean()),
        ] {
            for obs in group.iter() {
                f(&obs.sub(&mean).expect("validated shapes"));
            }
        }
    }
}

fn mean_of<T: Real>(stack: &[DenseMatrix<T>]) -> DenseMatrix<T> {
    let (p, q) = stack[0].shape();
    let mut acc = DenseMatrix::zeros(p, q);
    for obs in stack {
        for (a, &x) in acc.data_mut().iter_mut().zip(obs.data()) {
            *a += x;
        }
    }
    acc.scale(T::one() / count(stack.len()))
}

/// Standardized statistic matrix with its ingredients.
#[derive(Debug, Clone)]
pub struct TestMatrix<T> {
    /// `√(nm/(n+m)) (Ȳ - Z̄) ∘ Σ̂` with `Σ̂_ij = 1/σ̂_ij`.
    pub x: DenseMatrix<T>,
    /// Pooled standard deviations σ̂_ij.
    pub sigma_hat: DenseMatrix<T>,
    /// `√(nm/(n+m))`
    pub scale: T,
}

impl<T: Real> TestMatrix<T> {
    pub fn dims(&self) -> (usize, usize) {
        self.x.shape()
    }
}

/// Pooled per-cell standard deviation over both groups with `n + m - 2`
/// degrees of freedom.
pub fn pooled_sigma<T: Real>(ds: &TwoSampleDataset<T>) -> Result<DenseMatrix<T>> {
    let (p, q) = ds.dims();
    let mut ss = DenseMatrix::<T>::zeros(p, q);
    ds.for_each_centered(|r| {
        for (a, &x) in ss.data_mut().iter_mut().zip(r.data()) {
            *a += x * x;
        }
    });
    let dof: T = count(ds.dof());
    let sigma = ss.map(|s| (s / dof).sqrt());
    let floor: T = lit(MIN_SIGMA);
    if let Some(pos) = sigma.data().iter().position(|&s| !(s > floor)) {
        return Err(Error::DegenerateVariance {
            row: pos / q,
            col: pos % q,
        });
    }
    Ok(sigma)
}

pub fn test_matrix<T: Real>(ds: &TwoSampleDataset<T>) -> Result<TestMatrix<T>> {
    let sigma_hat = pooled_sigma(ds)?;
    let (n, m): (T, T) = (count(ds.n()), count(ds.m()));
    let scale = (n * m / (n + m)).sqrt();
    let diff = ds.treatment_mean().sub(&ds.control_mean())?;
    let x = DenseMatrix::from_fn(diff.rows(), diff.cols(), |i, j| {
        scale * diff[(i, j)] / sigma_hat[(i, j)]
    });
    Ok(TestMatrix {
        x,
        sigma_hat,
        scale,
    })
}

/// `P_ij = 2Φ(-|X_ij|)`
pub fn p_values<T: Real>(tm: &TestMatrix<T>) -> DenseMatrix<T> {
    tm.x.map(two_sided_p)
}

/// `R(t) = #{P_ij <= t}`
pub fn rejection_count<T: Real>(p: &DenseMatrix<T>, t: T) -> usize {
    p.data().iter().filter(|&&pv| pv <= t).count()
}

/// Cells where the two group means agree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthMask {
    rows: usize,
    cols: usize,
    null: Vec<bool>,
}

impl TruthMask {
    /// `null` is row-major; `true` marks a true null.
    pub fn new(rows: usize, cols: usize, null: Vec<bool>) -> Result<Self> {
        if null.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "mask length {} does not match {rows}x{cols}",
                null.len()
            )));
        }
        Ok(Self { rows, cols, null })
    }

    pub fn all_null(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            null: vec![true; rows * cols],
        }
    }

    /// Marks cells where `mean_a` and `mean_b` differ as non-null.
    pub fn from_means<T: Real>(mean_a: &DenseMatrix<T>, mean_b: &DenseMatrix<T>) -> Self {
        let (rows, cols) = mean_a.shape();
        let null = mean_a
            .data()
            .iter()
            .zip(mean_b.data())
            .map(|(a, b)| a == b)
            .collect();
        Self { rows, cols, null }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_null(&self, i: usize, j: usize) -> bool {
        self.null[i * self.cols + j]
    }

    /// Row-major flags.
    pub fn as_slice(&self) -> &[bool] {
        &self.null
    }

    pub fn null_count(&self) -> usize {
        self.null.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizedFdp<T> {
    pub v: usize,
    pub r: usize,
    pub fdp: T,
}

/// Realized `V(t)`, `R(t)` and `FDP(t) = V/R` with `0/0 = 0`.
pub fn true_fdp<T: Real>(p: &DenseMatrix<T>, mask: &TruthMask, t: T) -> Result<RealizedFdp<T>> {
    if p.shape() != mask.dims() {
        return Err(Error::DimensionMismatch {
            expected: mask.dims(),
            got: p.shape(),
        });
    }
    let mut v = 0;
    let mut r = 0;
    for (&pv, &null) in p.data().iter().zip(mask.as_slice()) {
        if pv <= t {
            r += 1;
            if null {
                v += 1;
            }
        }
    }
    let fdp = if r == 0 {
        T::zero()
    } else {
        count::<T>(v) / count(r)
    };
    Ok(RealizedFdp { v, r, fdp })
}
