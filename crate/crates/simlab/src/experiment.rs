use std::fmt;
use std::str::FromStr;

use matfdp_core::covfactor::{build_noodle_loadings, build_sandwich_loadings, estimate_correlations};
use matfdp_core::noodle::{fdp_noodle, fit_noodle, FactorEstimator};
use matfdp_core::pfa::{fdp_pfa, fit_pfa};
use matfdp_core::rng::stream_rng;
use matfdp_core::sandwich::{fdp_sandwich, fit_sandwich};
use matfdp_core::teststats::{p_values, rejection_count, test_matrix, true_fdp};
use matfdp_core::trimreg::TrimSpec;
use rayon::prelude::*;

use crate::model::{Design, ModelSpec};
use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Noodle,
    Sandwich,
    Pfa,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Noodle, Method::Sandwich, Method::Pfa];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Noodle => "noodle",
            Method::Sandwich => "sandwich",
            Method::Pfa => "pfa",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "noodle" => Ok(Method::Noodle),
            "sandwich" => Ok(Method::Sandwich),
            "pfa" => Ok(Method::Pfa),
            other => Err(SimError::InvalidSpec(format!(
                "unknown method {other:?}; expected noodle, sandwich or pfa"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Evaluated in this order; duplicates are dropped.
    pub methods: Vec<Method>,
    pub t: f64,
    pub rounds: usize,
    pub seed: u64,
    /// Factor estimator for noodle and sandwich. PFA always uses least
    /// squares.
    pub estimator: FactorEstimator,
}

impl ExperimentConfig {
    /// Trimmed L1 (fraction 0.9) by default.
    pub fn new(methods: &[Method], t: f64, rounds: usize, seed: u64) -> Self {
        let mut ms = Vec::new();
        for &m in methods {
            if !ms.contains(&m) {
                ms.push(m);
            }
        }
        Self {
            methods: ms,
            t,
            rounds,
            seed,
            estimator: FactorEstimator::TrimmedL1(TrimSpec::default()),
        }
    }

    pub fn with_estimator(mut self, estimator: FactorEstimator) -> Self {
        self.estimator = estimator;
        self
    }

    fn validate(&self) -> Result<(), SimError> {
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(SimError::InvalidSpec(format!("t must lie in (0, 1), got {}", self.t)));
        }
        if self.methods.is_empty() {
            return Err(SimError::InvalidSpec("no methods selected".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub method: Method,
    /// Raw plug-in value, not clamped.
    pub fdp_hat: f64,
    pub fdp_true: f64,
    pub r: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundFailure {
    pub round: usize,
    /// `None` when the round failed before any method ran.
    pub method: Option<Method>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub completed: usize,
    /// `100 · mean(FDP̂ - FDP)`; `None` with no completed rounds.
    pub bias_pct: Option<f64>,
    /// `100 · sd(FDP̂ - FDP)` with the `n - 1` denominator; `None` below
    /// two completed rounds.
    pub sd_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub spec: ModelSpec,
    pub config: ExperimentConfig,
    /// Round-major, methods in config order.
    pub records: Vec<RoundRecord>,
    pub failures: Vec<RoundFailure>,
    pub summary: Vec<MethodSummary>,
}

impl ExperimentResult {
    pub fn summary_for(&self, method: Method) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == method)
    }
}

/// Runs one round with the data stream `round + 1`.
pub fn run_round(
    design: &Design,
    cfg: &ExperimentConfig,
    round: usize,
) -> (Vec<RoundRecord>, Vec<RoundFailure>) {
    let fail = |method, e: SimError| RoundFailure {
        round,
        method,
        message: e.to_string(),
    };
    let mut rng = stream_rng(cfg.seed, round as u64 + 1);
    let prepared = design.gen_round(&mut rng).and_then(|(ds, mask)| {
        let tm = test_matrix(&ds)?;
        let pv = p_values(&tm);
        let truth = true_fdp(&pv, &mask, cfg.t)?;
        Ok((ds, tm, rejection_count(&pv, cfg.t), truth.fdp))
    });
    let (ds, tm, r, fdp_true) = match prepared {
        Ok(v) => v,
        Err(e) => return (Vec::new(), vec![fail(None, e)]),
    };

    let needs_corr = cfg.methods.iter().any(|m| *m != Method::Pfa);
    let ce = if needs_corr {
        Some(estimate_correlations(&ds, &tm.sigma_hat).map_err(SimError::from))
    } else {
        None
    };

    let mut records = Vec::with_capacity(cfg.methods.len());
    let mut failures = Vec::new();
    for &method in &cfg.methods {
        let est: Result<f64, SimError> = match method {
            Method::Pfa => fit_pfa(&ds, &tm, None)
                .map(|fit| fdp_pfa(&fit, r, cfg.t))
                .map_err(SimError::from),
            Method::Noodle | Method::Sandwich => {
                match ce.as_ref().expect("estimated above") {
                    Err(e) => Err(e.clone()),
                    Ok(ce) if method == Method::Noodle => build_noodle_loadings(ce, None)
                        .and_then(|nl| fit_noodle(&tm.x, &nl, cfg.estimator))
                        .map(|fit| fdp_noodle(&fit, r, cfg.t))
                        .map_err(SimError::from),
                    Ok(ce) => build_sandwich_loadings(ce, None, None)
                        .and_then(|sl| fit_sandwich(&tm.x, &sl, cfg.estimator))
                        .map(|fit| fdp_sandwich(&fit, r, cfg.t))
                        .map_err(SimError::from),
                }
            }
        };
        match est {
            Ok(fdp_hat) if fdp_hat.is_finite() => records.push(RoundRecord {
                round,
                method,
                fdp_hat,
                fdp_true,
                r,
            }),
            Ok(v) => failures.push(fail(
                Some(method),
                SimError::InvalidSpec(format!("non-finite estimate {v}")),
            )),
            Err(e) => failures.push(fail(Some(method), e)),
        }
    }
    (records, failures)
}

fn summarize(method: Method, records: &[RoundRecord]) -> MethodSummary {
    let diffs: Vec<f64> = records
        .iter()
        .filter(|r| r.method == method)
        .map(|r| r.fdp_hat - r.fdp_true)
        .collect();
    let n = diffs.len();
    let mean = (n > 0).then(|| diffs.iter().sum::<f64>() / n as f64);
    let sd = mean.filter(|_| n > 1).map(|mu| {
        let ss: f64 = diffs.iter().map(|d| (d - mu) * (d - mu)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    MethodSummary {
        method,
        completed: n,
        bias_pct: mean.map(|v| 100.0 * v),
        sd_pct: sd.map(|v| 100.0 * v),
    }
}

/// Runs `cfg.rounds` rounds on a fixed design. Rounds run in parallel and
/// are merged in round order.
pub fn run_experiment_with(spec: &ModelSpec, cfg: &ExperimentConfig) -> Result<ExperimentResult, SimError> {
    cfg.validate()?;
    let design = Design::generate(spec.clone(), &mut stream_rng(cfg.seed, 0))?;
    let per_round: Vec<_> = (0..cfg.rounds)
        .into_par_iter()
        .map(|round| run_round(&design, cfg, round))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (rec, fail) in per_round {
        records.extend(rec);
        failures.extend(fail);
    }
    let summary = cfg.methods.iter().map(|&m| summarize(m, &records)).collect();
    Ok(ExperimentResult {
        spec: spec.clone(),
        config: cfg.clone(),
        records,
        failures,
        summary,
    })
}

/// [`run_experiment_with`] using the default (trimmed L1) estimator.
pub fn run_experiment(
    spec: &ModelSpec,
    methods: &[Method],
    t: f64,
    rounds: usize,
    seed: u64,
) -> Result<ExperimentResult, SimError> {
    run_experiment_with(spec, &ExperimentConfig::new(methods, t, rounds, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(method: Method, d: f64) -> RoundRecord {
        RoundRecord {
            round: 0,
            method,
            fdp_hat: 0.5 + d,
            fdp_true: 0.5,
            r: 3,
        }
    }

    #[test]
    fn summary_percent_and_sample_sd() {
        let rs = [rec(Method::Pfa, 0.01), rec(Method::Pfa, 0.03), rec(Method::Noodle, 1.0)];
        let s = summarize(Method::Pfa, &rs);
        assert_eq!(s.completed, 2);
        assert!((s.bias_pct.unwrap() - 2.0).abs() < 1e-10);
        assert!((s.sd_pct.unwrap() - 2f64.sqrt()).abs() < 1e-10);
        let empty = summarize(Method::Sandwich, &rs);
        assert_eq!((empty.bias_pct, empty.sd_pct), (None, None));
        assert_eq!(summarize(Method::Noodle, &rs).sd_pct, None);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("bh".parse::<Method>().is_err());
    }

    #[test]
    fn config_dedups_and_validates() {
        let c = ExperimentConfig::new(&[Method::Pfa, Method::Pfa, Method::Noodle], 0.01, 1, 0);
        assert_eq!(c.methods, vec![Method::Pfa, Method::Noodle]);
        assert!(ExperimentConfig::new(&[Method::Pfa], 0.0, 1, 0).validate().is_err());
        assert!(ExperimentConfig::new(&[], 0.1, 1, 0).validate().is_err());
    }
}
