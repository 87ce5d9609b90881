//! Data-generating models and their named presets.

use std::fmt;

use matfdp_core::linalg::{corr_from_cov, sym_eigen, DenseMatrix, MatrixNormal, SpdMatrix};
use matfdp_core::teststats::TruthMask;
use matfdp_core::{Dataset, Matrix};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT, Uniform};

use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadingDist {
    StdNormal,
    Uniform(f64, f64),
}

impl LoadingDist {
    fn sample<R: Rng + ?Sized>(&self, rows: usize, cols: usize, rng: &mut R) -> Matrix {
        match *self {
            LoadingDist::StdNormal => DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal)),
            LoadingDist::Uniform(a, b) => {
                let u = Uniform::new(a, b).expect("validated bounds");
                DenseMatrix::from_fn(rows, cols, |_, _| u.sample(rng))
            }
        }
    }
}

impl fmt::Display for LoadingDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadingDist::StdNormal => write!(f, "N(0,1)"),
            LoadingDist::Uniform(a, b) => write!(f, "U({a},{b})"),
        }
    }
}

/// Entry law of `W` in Model 3. Both have mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WDist {
    /// `Exp(1) - 1`
    CenteredExp,
    /// `√(2/3) · t₆`
    ScaledT6,
}

impl WDist {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            WDist::CenteredExp => {
                let e: f64 = rng.sample(Exp1);
                e - 1.0
            }
            WDist::ScaledT6 => {
                let t = StudentT::new(6.0).expect("valid degrees of freedom");
                (2.0f64 / 3.0).sqrt() * t.sample(rng)
            }
        }
    }
}

impl fmt::Display for WDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WDist::CenteredExp => "exp",
            WDist::ScaledT6 => "t6",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    /// Matrix normal, `Σ = corr(BBᵀ + 0.5 I)`.
    FactorDiagonal,
    /// Matrix normal, `Σ = corr(BBᵀ + Σ_u)` with `(Σ_u)_ij = ρ^|i-j|`.
    PowerDecay { rho1: f64, rho2: f64 },
    /// `X = μ + C̃ W D̃ᵀ` with full-spectrum loadings and non-normal `W`.
    NonNormal { w_dist: WDist },
}

impl Model {
    pub fn number(&self) -> u8 {
        match self {
            Model::FactorDiagonal => 1,
            Model::PowerDecay { .. } => 2,
            Model::NonNormal { .. } => 3,
        }
    }
}

/// Mean shift on the top-left `rows × cols` block of the treatment group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Signal {
    pub rows: usize,
    pub cols: usize,
    pub amplitude: f64,
}

impl Default for Signal {
    fn default() -> Self {
        Self {
            rows: 8,
            cols: 25,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub model: Model,
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub m: usize,
    pub l1: usize,
    pub l2: usize,
    pub loading_dist: LoadingDist,
    pub signal: Signal,
}

/// Named settings per model.
pub fn preset_names(model: u8) -> &'static [&'static str] {
    match model {
        1 | 2 => &["a", "b"],
        3 => &[
            "f22-exp", "f22-t6", "f24-exp", "f24-t6", "f33-exp", "f33-t6", "f44-exp", "f44-t6",
        ],
        _ => &[],
    }
}

impl ModelSpec {
    /// Model 1: `a` is f(2,4) with `B ~ U(-1,1)`, `b` is f(3,3) with
    /// `B ~ N(0,1)`. Model 2: `a` is `(ρ₁,ρ₂) = (0.5,0.3)`, `b` is
    /// `(0.5,0.8)`, both f(3,3) with `B ~ U(0,1)`. Model 3: `f{l1}{l2}-exp`
    /// or `f{l1}{l2}-t6` with `B ~ U(0,1)`. The signal is the default
    /// 8 × 25 block clipped to `p × q`.
    pub fn preset(
        model: u8,
        setting: &str,
        p: usize,
        q: usize,
        n: usize,
        m: usize,
    ) -> Result<Self, SimError> {
        let unknown = || {
            SimError::InvalidSpec(format!(
                "unknown setting {setting:?} for model {model}; expected one of {:?}",
                preset_names(model)
            ))
        };
        let (model_kind, l1, l2, loading_dist) = match (model, setting) {
            (1, "a") => (Model::FactorDiagonal, 2, 4, LoadingDist::Uniform(-1.0, 1.0)),
            (1, "b") => (Model::FactorDiagonal, 3, 3, LoadingDist::StdNormal),
            (2, "a") => (
                Model::PowerDecay { rho1: 0.5, rho2: 0.3 },
                3,
                3,
                LoadingDist::Uniform(0.0, 1.0),
            ),
            (2, "b") => (
                Model::PowerDecay { rho1: 0.5, rho2: 0.8 },
                3,
                3,
                LoadingDist::Uniform(0.0, 1.0),
            ),
            (3, s) => {
                let (factors, dist) = s.split_once('-').ok_or_else(unknown)?;
                let w_dist = match dist {
                    "exp" => WDist::CenteredExp,
                    "t6" => WDist::ScaledT6,
                    _ => return Err(unknown()),
                };
                let (l1, l2) = match factors {
                    "f22" => (2, 2),
                    "f24" => (2, 4),
                    "f33" => (3, 3),
                    "f44" => (4, 4),
                    _ => return Err(unknown()),
                };
                (Model::NonNormal { w_dist }, l1, l2, LoadingDist::Uniform(0.0, 1.0))
            }
            (1..=3, _) => return Err(unknown()),
            _ => return Err(SimError::InvalidSpec(format!("model must be 1, 2 or 3, got {model}"))),
        };
        let spec = Self {
            model: model_kind,
            p,
            q,
            n,
            m,
            l1,
            l2,
            loading_dist,
            signal: Signal {
                rows: Signal::default().rows.min(p),
                cols: Signal::default().cols.min(q),
                ..Signal::default()
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidSpec(msg));
        if self.p == 0 || self.q == 0 {
            return bad("p and q must be positive".into());
        }
        if self.n < 2 || self.m < 2 || self.n + self.m < 5 {
            return bad(format!("need n, m >= 2 and n + m >= 5 (got {}, {})", self.n, self.m));
        }
        if self.signal.rows > self.p || self.signal.cols > self.q {
            return bad(format!(
                "signal block {}x{} does not fit in {}x{}",
                self.signal.rows, self.signal.cols, self.p, self.q
            ));
        }
        if !self.signal.amplitude.is_finite() {
            return bad("signal amplitude must be finite".into());
        }
        if let Model::PowerDecay { rho1, rho2 } = self.model {
            if !(rho1.abs() < 1.0 && rho2.abs() < 1.0) {
                return bad(format!("rho must lie in (-1, 1), got ({rho1}, {rho2})"));
            }
        }
        if let LoadingDist::Uniform(a, b) = self.loading_dist {
            if !(a < b && a.is_finite() && b.is_finite()) {
                return bad(format!("invalid uniform bounds ({a}, {b})"));
            }
        }
        Ok(())
    }

    /// Population mean difference `μ` (treatment minus control).
    pub fn mean_shift(&self) -> Matrix {
        let s = self.signal;
        DenseMatrix::from_fn(self.p, self.q, |i, j| {
            if i < s.rows && j < s.cols {
                s.amplitude
            } else {
                0.0
            }
        })
    }

    pub fn truth_mask(&self) -> TruthMask {
        let s = self.signal;
        let nulls = (0..self.p * self.q)
            .map(|c| !(c / self.q < s.rows && c % self.q < s.cols) || s.amplitude == 0.0)
            .collect();
        TruthMask::new(self.p, self.q, nulls).expect("shape matches")
    }
}

/// `ρ^|i-j|`
pub fn power_decay(n: usize, rho: f64) -> Matrix {
    DenseMatrix::from_fn(n, n, |i, j| rho.powi(i.abs_diff(j) as i32))
}

fn factor_correlation<R: Rng + ?Sized>(
    dim: usize,
    l: usize,
    dist: LoadingDist,
    noise: Matrix,
    rng: &mut R,
) -> Result<SpdMatrix<f64>, SimError> {
    let b = dist.sample(dim, l, rng);
    let cov = b.matmul(&b.transpose())?.add(&noise)?;
    Ok(corr_from_cov(&SpdMatrix::new(cov)?)?)
}

/// Population correlations `(Σ₁, Σ₂)`. `B₁` is drawn before `B₂`.
pub fn gen_correlations<R: Rng + ?Sized>(
    spec: &ModelSpec,
    rng: &mut R,
) -> Result<(SpdMatrix<f64>, SpdMatrix<f64>), SimError> {
    spec.validate()?;
    let (u1, u2) = match spec.model {
        Model::PowerDecay { rho1, rho2 } => (power_decay(spec.p, rho1), power_decay(spec.q, rho2)),
        _ => (
            Matrix::identity(spec.p).scale(0.5),
            Matrix::identity(spec.q).scale(0.5),
        ),
    };
    let s1 = factor_correlation(spec.p, spec.l1, spec.loading_dist, u1, rng)?;
    let s2 = factor_correlation(spec.q, spec.l2, spec.loading_dist, u2, rng)?;
    Ok((s1, s2))
}

/// Fixed design of one experiment: population correlations and the
/// per-round sampler.
#[derive(Debug, Clone)]
pub struct Design {
    pub spec: ModelSpec,
    pub sigma1: SpdMatrix<f64>,
    pub sigma2: SpdMatrix<f64>,
    sampler: Sampler,
    mean: Matrix,
}

#[derive(Debug, Clone)]
enum Sampler {
    Normal(MatrixNormal<f64>),
    /// `C̃ W D̃ᵀ`; `d_t` holds `D̃ᵀ`.
    Factor { c: Matrix, d_t: Matrix, w_dist: WDist },
}

/// `(√λ₁ν₁, …, √λ_kν_k)` over the full spectrum.
fn full_loadings(s: &SpdMatrix<f64>) -> Result<Matrix, SimError> {
    let e = sym_eigen(s)?;
    Ok(DenseMatrix::from_fn(s.dim(), s.dim(), |i, k| {
        e.vectors[(i, k)] * e.values[k].max(0.0).sqrt()
    }))
}

impl Design {
    pub fn new(spec: ModelSpec, sigma1: SpdMatrix<f64>, sigma2: SpdMatrix<f64>) -> Result<Self, SimError> {
        spec.validate()?;
        if sigma1.dim() != spec.p || sigma2.dim() != spec.q {
            return Err(SimError::InvalidSpec("correlation dimensions do not match spec".into()));
        }
        let zero = Matrix::zeros(spec.p, spec.q);
        let sampler = match spec.model {
            Model::NonNormal { w_dist } => Sampler::Factor {
                c: full_loadings(&sigma1)?,
                d_t: full_loadings(&sigma2)?.transpose(),
                w_dist,
            },
            _ => Sampler::Normal(MatrixNormal::new(zero, &sigma1, &sigma2)?),
        };
        Ok(Self {
            mean: spec.mean_shift(),
            spec,
            sigma1,
            sigma2,
            sampler,
        })
    }

    pub fn generate<R: Rng + ?Sized>(spec: ModelSpec, rng: &mut R) -> Result<Self, SimError> {
        let (s1, s2) = gen_correlations(&spec, rng)?;
        Self::new(spec, s1, s2)
    }

    fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Matrix {
        match &self.sampler {
            Sampler::Normal(mn) => mn.sample(rng),
            Sampler::Factor { c, d_t, w_dist } => {
                let w = DenseMatrix::from_fn(c.cols(), d_t.rows(), |_, _| w_dist.sample(rng));
                c.matmul(&w)
                    .and_then(|cw| cw.matmul(d_t))
                    .expect("shapes fixed at construction")
            }
        }
    }

    /// One round: `n` treatment draws (mean shifted) then `m` control draws.
    pub fn gen_round<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Dataset, TruthMask), SimError> {
        let mut treatment = Vec::with_capacity(self.spec.n);
        for _ in 0..self.spec.n {
            treatment.push(self.noise(rng).add(&self.mean)?);
        }
        let control = (0..self.spec.m).map(|_| self.noise(rng)).collect();
        Ok((Dataset::new(treatment, control)?, self.spec.truth_mask()))
    }
}
