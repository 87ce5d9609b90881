use matfdp_core::covfactor::{build_noodle_loadings, build_sandwich_loadings, estimate_correlations};
use matfdp_core::fdp::clamp_unit;
use matfdp_core::linalg::kron_eigenpairs;
use matfdp_core::noodle::{fdp_noodle, fit_noodle};
use matfdp_core::sandwich::{fdp_sandwich, fit_sandwich};
use matfdp_core::teststats::{p_values, test_matrix};
use matfdp_core::Error;

use crate::args::{AnalyzeArgs, AnalyzeMethod};
use crate::dataset;
use crate::error::CliError;
use crate::output::{ensure_dir, float, write_csv};

pub const MAX_SWEEP_ROWS: usize = 100;

/// `t_i = P_(i·step)` for `i = 1..⌊pq/step⌋`, at most [`MAX_SWEEP_ROWS`],
/// keeping only strictly increasing values in `(0, 1)`.
pub fn sweep_thresholds(sorted_p: &[f64], step: usize) -> Vec<f64> {
    let count = (sorted_p.len() / step).min(MAX_SWEEP_ROWS);
    let mut out: Vec<f64> = Vec::with_capacity(count);
    for i in 1..=count {
        let t = sorted_p[i * step - 1];
        if t > 0.0 && t < 1.0 && out.last().is_none_or(|&prev| t > prev) {
            out.push(t);
        }
    }
    out
}

fn data_error(e: Error) -> CliError {
    match e {
        Error::DegenerateVariance { .. } => CliError::Data(e.to_string()),
        Error::InvalidFactorCount { .. } => CliError::Usage(e.to_string()),
        e => e.into(),
    }
}

pub fn analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    if let Some(t) = a.threshold {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::Usage(format!("--threshold must lie in (0, 1), got {t}")));
        }
    }
    if a.sweep == Some(0) {
        return Err(CliError::Usage("--sweep step must be positive".into()));
    }
    match a.method {
        AnalyzeMethod::Noodle if a.k1.is_some() || a.k2.is_some() => {
            return Err(CliError::Usage("--k1/--k2 apply to the sandwich method; use --h".into()))
        }
        AnalyzeMethod::Sandwich if a.h.is_some() => {
            return Err(CliError::Usage("--h applies to the noodle method; use --k1/--k2".into()))
        }
        _ => {}
    }
    let estimator = a.estimator.resolve()?;

    let ds = dataset::load(&a.data)?;
    let (p, q) = ds.dims();
    let tm = test_matrix(&ds).map_err(data_error)?;
    let pv = p_values(&tm);
    let ce = estimate_correlations(&ds, &tm.sigma_hat).map_err(data_error)?;

    let fdp: Box<dyn Fn(usize, f64) -> f64> = match a.method {
        AnalyzeMethod::Noodle => {
            let nl = build_noodle_loadings(&ce, a.h).map_err(data_error)?;
            let fit = fit_noodle(&tm.x, &nl, estimator)?;
            eprintln!("noodle: h = {}", nl.h);
            Box::new(move |r, t| fdp_noodle(&fit, r, t))
        }
        AnalyzeMethod::Sandwich => {
            let sl = build_sandwich_loadings(&ce, a.k1, a.k2).map_err(data_error)?;
            let fit = fit_sandwich(&tm.x, &sl, estimator)?;
            eprintln!("sandwich: k1 = {}, k2 = {}", sl.k1, sl.k2);
            Box::new(move |r, t| fdp_sandwich(&fit, r, t))
        }
    };

    let mut sorted = pv.data().to_vec();
    sorted.sort_by(f64::total_cmp);
    let rejections = |t: f64| sorted.partition_point(|&v| v <= t);
    let report_row = |t: f64| {
        let r = rejections(t);
        let f = clamp_unit(fdp(r, t));
        [float(t), r.to_string(), float(f), float(f * r as f64)]
    };
    let header = ["t", "R", "fdp_hat", "est_false_discoveries"];

    ensure_dir(&a.out)?;
    let summary = match a.threshold {
        Some(t) => {
            let mask = (0..p).map(|i| {
                (0..q)
                    .map(|j| if pv[(i, j)] <= t { "1" } else { "0" })
                    .collect::<Vec<_>>()
            });
            write_csv(&a.out.join("mask.csv"), None, mask)?;
            let row = report_row(t);
            let line = format!("t = {}: R = {}, FDP = {}", row[0], row[1], row[2]);
            write_csv(&a.out.join("report.csv"), Some(&header), [row])?;
            line
        }
        None => {
            let thresholds = sweep_thresholds(&sorted, a.sweep.unwrap_or(25));
            let n_rows = thresholds.len();
            write_csv(
                &a.out.join("report.csv"),
                Some(&header),
                thresholds.into_iter().map(report_row),
            )?;
            format!("{n_rows} thresholds written")
        }
    };

    let products = kron_eigenpairs(&ce.eig1, &ce.eig2).values();
    let series = [("lambda", &ce.eig1.values), ("xi", &ce.eig2.values), ("product", &products)];
    let scree = series.into_iter().flat_map(|(name, vals)| {
        vals.iter()
            .enumerate()
            .map(move |(k, &v)| [name.to_string(), (k + 1).to_string(), float(v)])
    });
    write_csv(&a.out.join("scree.csv"), Some(&["series", "rank", "value"]), scree)?;
    println!("{summary}");
    Ok(())
}
