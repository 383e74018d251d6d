//! Monte-Carlo experiment harness: consistency curves, coverage tables,
//! filter-decay reports, stationarity/invertibility region scans and the
//! two-initialization equivalence check, all at desk scale.
//!
//! Every replication derives its stream from `(base_seed, kind, size,
//! rep)`, so reruns reproduce each CSV byte for byte and the execution
//! schedule cannot leak into the results. Fits that error out are
//! excluded from aggregates but counted; more than 5% of them
//! invalidates the experiment.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::csvio::{fmt_f64, fnv1a64, Table, SCHEMA_LINE};
use crate::error::{Error, Result};
use crate::exec;
use crate::filter::{filter_error_decay, FilterConfig, InitialVol};
use crate::innovations::{InnovationSpec, RngStream};
use crate::models::{CompactRegion, Family, ModelSpec, ThetaVector};
use crate::qmle::{fit, EstimateReport, FitOptions};
use crate::sre::{
    egarch_invertibility_check, lyapunov_agarch, simulate_stationary, MatrixNorm, SimOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Consistency,
    Coverage,
    Decay,
    RegionScan,
    Equivalence,
}

/// Grid for region scans: two named coordinates swept over value lists,
/// with the Monte-Carlo effort per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_coord: String,
    pub x_values: Vec<f64>,
    pub y_coord: String,
    pub y_values: Vec<f64>,
    #[serde(default = "default_grid_products")]
    pub n_products: usize,
    #[serde(default = "default_grid_reps")]
    pub n_replications: usize,
}

fn default_grid_products() -> usize {
    5000
}

fn default_grid_reps() -> usize {
    20
}

fn default_sizes() -> Vec<usize> {
    vec![500, 2000, 8000]
}

fn default_replications() -> usize {
    100
}

fn default_burn_in() -> usize {
    1000
}

fn default_fit_starts() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub model: ModelSpec,
    pub theta_true: Vec<f64>,
    pub innovation: InnovationSpec,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_fit_starts")]
    pub fit_starts: usize,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Constraint("replications must be >= 1".into()));
        }
        if self.sizes.is_empty() {
            return Err(Error::Constraint("need at least one sample size".into()));
        }
        if !self.sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Constraint(
                "sample sizes must be strictly increasing".into(),
            ));
        }
        self.innovation.validate()?;
        if self.kind == ExperimentKind::RegionScan && self.grid.is_none() {
            return Err(Error::Constraint("region scan needs a grid".into()));
        }
        Ok(())
    }

    /// FNV-1a hash of the canonical JSON encoding, used in provenance.
    pub fn config_hash(&self) -> u64 {
        fnv1a64(
            serde_json::to_string(self)
                .expect("plan serializes")
                .as_bytes(),
        )
    }
}

/// One named pass/fail verdict with the numbers behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub plan: ExperimentPlan,
    pub rows: Table,
    pub aggregate: Table,
    /// Extra plot-ready tables, written as `<name>.csv`.
    pub extra: Vec<(String, Table)>,
    pub checks: Vec<Check>,
    pub failed_fits: usize,
    pub total_fits: usize,
}

impl ExperimentResult {
    /// Provenance comment lines prepended to every CSV.
    pub fn comments(&self) -> Vec<String> {
        vec![
            SCHEMA_LINE.to_string(),
            format!(
                "# volqml v{} seed={} config=fnv64:{:016x}",
                env!("CARGO_PKG_VERSION"),
                self.plan.base_seed,
                self.plan.config_hash()
            ),
        ]
    }

    /// Writes rows.csv, aggregate.csv, plan.json and any extra tables.
    pub fn write_outputs(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let comments = self.comments();
        self.rows.write(&out_dir.join("rows.csv"), &comments)?;
        self.aggregate
            .write(&out_dir.join("aggregate.csv"), &comments)?;
        for (name, table) in &self.extra {
            table.write(&out_dir.join(format!("{name}.csv")), &comments)?;
        }
        let plan_json = serde_json::to_string_pretty(&self.plan)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        std::fs::write(out_dir.join("plan.json"), plan_json + "\n")?;
        Ok(())
    }
}

/// Runs the experiment selected by the plan's kind.
pub fn run(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    match plan.kind {
        ExperimentKind::Consistency => run_consistency(plan),
        ExperimentKind::Coverage => run_coverage(plan),
        ExperimentKind::Decay => run_decay(plan),
        ExperimentKind::RegionScan => run_region_scan(plan),
        ExperimentKind::Equivalence => run_equivalence(plan),
    }
}

fn theta_true(plan: &ExperimentPlan) -> Result<ThetaVector> {
    ThetaVector::new(plan.model, plan.theta_true.clone())
}

/// Refuses to run fit-based experiments on parameters that fail the
/// stationarity (AGARCH family) or invertibility (EGARCH) diagnostics.
fn gate_diagnostics(plan: &ExperimentPlan, theta: &ThetaVector) -> Result<()> {
    let stream = RngStream::new(plan.base_seed, 0).child(0xd1a6);
    match plan.model.family {
        Family::Garch | Family::Agarch => {
            let margin = crate::models::weak_stationarity_margin(theta, &plan.innovation)?;
            if margin > 0.0 {
                return Ok(());
            }
            let est = lyapunov_agarch(
                theta,
                &plan.innovation,
                stream,
                5000,
                20,
                MatrixNorm::Frobenius,
            )?;
            if est.is_stationary() {
                Ok(())
            } else {
                Err(Error::Constraint(format!(
                    "theta_true fails the stationarity diagnostics \
                     (weak margin {margin:.4}, lyapunov {:.4} +- {:.4})",
                    est.rho_hat, est.std_error
                )))
            }
        }
        Family::Egarch => {
            let d = egarch_invertibility_check(theta, &plan.innovation, stream, 20_000)?;
            if d.is_contractive() {
                Ok(())
            } else {
                Err(Error::Constraint(format!(
                    "theta_true fails the invertibility diagnostics \
                     (criterion {:.4} +- {:.4})",
                    d.log_lambda_mean, d.std_error
                )))
            }
        }
    }
}

fn fit_options(plan: &ExperimentPlan, covariance: bool) -> FitOptions {
    FitOptions {
        starts: plan.fit_starts,
        compute_covariance: covariance,
        ..FitOptions::default()
    }
}

fn sanitize(msg: &str) -> String {
    msg.replace([',', '\n'], ";")
}

fn job_stream(plan: &ExperimentPlan, tag: u64, size_idx: usize, rep: usize) -> RngStream {
    RngStream::new(plan.base_seed, 0)
        .child(tag)
        .child(size_idx as u64)
        .child(rep as u64)
}

fn check_failure_budget(failed: usize, total: usize, log: &[String]) -> Result<()> {
    if failed * 20 > total {
        return Err(Error::Experiment(format!(
            "{failed}/{total} fits failed (> 5%): {}",
            log.join("; ")
        )));
    }
    Ok(())
}

struct FitJob {
    n: usize,
    rep: usize,
    report: std::result::Result<EstimateReport, String>,
}

fn run_fits(plan: &ExperimentPlan, tag: u64, covariance: bool) -> Result<Vec<FitJob>> {
    let theta0 = theta_true(plan)?;
    gate_diagnostics(plan, &theta0)?;
    let region = CompactRegion::default_for(plan.model);
    let opts = fit_options(plan, covariance);
    let reps = plan.replications;
    let jobs = plan.sizes.len() * reps;
    Ok(exec::map_indexed(jobs, |j| {
        let size_idx = j / reps;
        let rep = j % reps;
        let n = plan.sizes[size_idx];
        let stream = job_stream(plan, tag, size_idx, rep);
        let sim = SimOptions {
            burn_in: plan.burn_in,
            initial: None,
        };
        let report = simulate_stationary(&theta0, &plan.innovation, stream, n, &sim)
            .map_err(|e| e.to_string())
            .and_then(|path| fit(path.data(), &region, &opts).map_err(|e| e.to_string()));
        FitJob { n, rep, report }
    }))
}

fn push_nan(row: &mut Vec<String>, count: usize) {
    for _ in 0..count {
        row.push("nan".to_string());
    }
}

fn run_consistency(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    let jobs = run_fits(plan, 1, false)?;
    let names = plan.model.coeff_names();
    let d = names.len();

    let mut cols = vec!["n".to_string(), "rep".to_string(), "converged".to_string(),
        "loglik".to_string()];
    cols.extend(names.iter().map(|c| format!("theta_hat.{c}")));
    cols.push("error".to_string());
    let mut rows = Table {
        columns: cols,
        rows: Vec::new(),
    };

    let mut failures = Vec::new();
    for job in &jobs {
        let mut row = vec![job.n.to_string(), job.rep.to_string()];
        match &job.report {
            Ok(rep) => {
                row.push(rep.converged.to_string());
                row.push(fmt_f64(rep.loglik));
                for &c in rep.theta_hat.coeffs() {
                    row.push(fmt_f64(c));
                }
                row.push(String::new());
            }
            Err(msg) => {
                row.push("false".to_string());
                push_nan(&mut row, 1 + d);
                row.push(sanitize(msg));
                failures.push(format!("n={} rep={}: {msg}", job.n, job.rep));
            }
        }
        rows.push(row);
    }
    check_failure_budget(failures.len(), jobs.len(), &failures)?;

    // Per-size, per-coordinate bias and RMSE over successful fits.
    let mut aggregate = Table::new(&["n", "coord", "bias", "rmse", "fits"]);
    let mut rmse_by_coord: Vec<Vec<f64>> = vec![Vec::new(); d];
    for (size_idx, &n) in plan.sizes.iter().enumerate() {
        let errs: Vec<&EstimateReport> = jobs
            .iter()
            .filter(|j| j.n == n)
            .filter_map(|j| j.report.as_ref().ok())
            .collect();
        let m = errs.len().max(1) as f64;
        for k in 0..d {
            let dev: Vec<f64> = errs
                .iter()
                .map(|r| r.theta_hat.coeffs()[k] - plan.theta_true[k])
                .collect();
            let bias = dev.iter().sum::<f64>() / m;
            let rmse = (dev.iter().map(|e| e * e).sum::<f64>() / m).sqrt();
            rmse_by_coord[k].push(rmse);
            aggregate.push(vec![
                n.to_string(),
                names[k].clone(),
                fmt_f64(bias),
                fmt_f64(rmse),
                errs.len().to_string(),
            ]);
        }
        let _ = size_idx;
    }

    // RMSE must fall along the size grid, with 5% slack per step.
    let mut checks = Vec::new();
    for k in 0..d {
        let r = &rmse_by_coord[k];
        let decreasing = r.windows(2).all(|w| w[1] < w[0] * 1.05);
        checks.push(Check {
            name: format!("rmse_decreasing.{}", names[k]),
            passed: decreasing,
            detail: format!("{:?}", r),
        });
        if r.len() >= 2 {
            let ratio = r[r.len() - 1] / r[0];
            checks.push(Check {
                name: format!("rmse_ratio.{}", names[k]),
                passed: ratio < 0.5,
                detail: format!("rmse({})/rmse({}) = {ratio:.4}", plan.sizes[r.len() - 1], plan.sizes[0]),
            });
        }
    }

    Ok(ExperimentResult {
        plan: plan.clone(),
        rows,
        aggregate,
        extra: Vec::new(),
        checks,
        failed_fits: failures.len(),
        total_fits: jobs.len(),
    })
}

fn inv_sqrt_psd(v: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let eig = v.clone().symmetric_eigen();
    let mut diag = DMatrix::zeros(v.nrows(), v.nrows());
    for i in 0..v.nrows() {
        let ev = eig.eigenvalues[i];
        if ev <= 0.0 {
            return None;
        }
        diag[(i, i)] = 1.0 / ev.sqrt();
    }
    Some(&eig.eigenvectors * diag * eig.eigenvectors.transpose())
}

fn run_coverage(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    let jobs = run_fits(plan, 2, true)?;
    let names = plan.model.coeff_names();
    let d = names.len();
    let theta0 = DVector::from_column_slice(&plan.theta_true);

    let mut cols = vec!["n".to_string(), "rep".to_string(), "converged".to_string(),
        "loglik".to_string()];
    cols.extend(names.iter().map(|c| format!("theta_hat.{c}")));
    cols.extend(names.iter().map(|c| format!("se.{c}")));
    cols.extend(names.iter().map(|c| format!("covered.{c}")));
    cols.extend(names.iter().map(|c| format!("std.{c}")));
    cols.push("error".to_string());
    let mut rows = Table {
        columns: cols,
        rows: Vec::new(),
    };

    struct CoverRow {
        n: usize,
        covered: Vec<bool>,
        standardized: Vec<f64>,
    }
    let mut cover_rows: Vec<CoverRow> = Vec::new();
    let mut failures = Vec::new();
    for job in &jobs {
        let mut row = vec![job.n.to_string(), job.rep.to_string()];
        let outcome = match &job.report {
            Ok(rep) => match &rep.covariance {
                Some(cov) => Ok((rep, cov)),
                None => Err(rep
                    .covariance_error
                    .clone()
                    .unwrap_or_else(|| "covariance unavailable".into())),
            },
            Err(msg) => Err(msg.clone()),
        };
        match outcome {
            Ok((rep, cov)) => {
                row.push(rep.converged.to_string());
                row.push(fmt_f64(rep.loglik));
                for &c in rep.theta_hat.coeffs() {
                    row.push(fmt_f64(c));
                }
                for &s in &cov.std_errors {
                    row.push(fmt_f64(s));
                }
                let mut covered = Vec::with_capacity(d);
                for k in 0..d {
                    let hit = (rep.theta_hat.coeffs()[k] - plan.theta_true[k]).abs()
                        <= 1.96 * cov.std_errors[k];
                    covered.push(hit);
                    row.push(hit.to_string());
                }
                // sqrt(n) V0^{-1/2} (theta_hat - theta0)
                let dev = DVector::from_column_slice(rep.theta_hat.coeffs()) - &theta0;
                let std = match inv_sqrt_psd(&cov.v0_hat) {
                    Some(w) => (w * dev) * (rep.n as f64).sqrt(),
                    None => DVector::from_element(d, f64::NAN),
                };
                for k in 0..d {
                    row.push(fmt_f64(std[k]));
                }
                row.push(String::new());
                cover_rows.push(CoverRow {
                    n: job.n,
                    covered,
                    standardized: std.iter().copied().collect(),
                });
            }
            Err(msg) => {
                row.push("false".to_string());
                push_nan(&mut row, 1 + 4 * d);
                row.push(sanitize(&msg));
                failures.push(format!("n={} rep={}: {msg}", job.n, job.rep));
            }
        }
        rows.push(row);
    }
    check_failure_budget(failures.len(), jobs.len(), &failures)?;

    let mut aggregate = Table::new(&["n", "coord", "coverage", "std_mean", "std_var", "fits"]);
    let mut checks = Vec::new();
    for &n in &plan.sizes {
        let sel: Vec<&CoverRow> = cover_rows.iter().filter(|r| r.n == n).collect();
        let m = sel.len().max(1) as f64;
        for k in 0..d {
            let coverage = sel.iter().filter(|r| r.covered[k]).count() as f64 / m;
            let vals: Vec<f64> = sel.iter().map(|r| r.standardized[k]).collect();
            let mean = vals.iter().sum::<f64>() / m;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
            aggregate.push(vec![
                n.to_string(),
                names[k].clone(),
                fmt_f64(coverage),
                fmt_f64(mean),
                fmt_f64(var),
                sel.len().to_string(),
            ]);
            // Bands are calibrated for n around 4000 with ~200 reps;
            // smaller n may sit outside and that is reported, not hidden.
            checks.push(Check {
                name: format!("coverage.{}@{n}", names[k]),
                passed: (0.88..=0.99).contains(&coverage),
                detail: format!("{coverage:.4}"),
            });
            checks.push(Check {
                name: format!("std_mean.{}@{n}", names[k]),
                passed: mean.abs() < 0.15,
                detail: format!("{mean:.4}"),
            });
            checks.push(Check {
                name: format!("std_var.{}@{n}", names[k]),
                passed: (0.8..=1.25).contains(&var),
                detail: format!("{var:.4}"),
            });
        }
    }

    Ok(ExperimentResult {
        plan: plan.clone(),
        rows,
        aggregate,
        extra: Vec::new(),
        checks,
        failed_fits: failures.len(),
        total_fits: jobs.len(),
    })
}

fn run_decay(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    let theta0 = theta_true(plan)?;
    gate_diagnostics(plan, &theta0)?;
    let reps = plan.replications;
    let jobs = plan.sizes.len() * reps;

    struct DecayJob {
        n: usize,
        rep: usize,
        outcome: std::result::Result<(crate::filter::DecayReport, Vec<f64>), String>,
    }
    let results: Vec<DecayJob> = exec::map_indexed(jobs, |j| {
        let size_idx = j / reps;
        let rep = j % reps;
        let n = plan.sizes[size_idx];
        let stream = job_stream(plan, 3, size_idx, rep);
        let sim = SimOptions {
            burn_in: plan.burn_in,
            initial: None,
        };
        let outcome = simulate_stationary(&theta0, &plan.innovation, stream, n, &sim)
            .map_err(|e| e.to_string())
            .and_then(|path| {
                // A large deliberate mismatch keeps the decay signal far
                // above float noise over the whole fitted window.
                let var = {
                    let d = path.data();
                    let m = d.iter().sum::<f64>() / d.len() as f64;
                    d.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / d.len() as f64
                };
                let init = if plan.model.log_domain() {
                    vec![(var.max(1e-6) * 1e4).ln()]
                } else {
                    vec![(1.0 + var) * 1e4]
                };
                let cfg = FilterConfig {
                    initial: InitialVol::Fixed(init),
                    ..FilterConfig::default()
                };
                filter_error_decay(&theta0, &path, &cfg)
                    .map(|r| {
                        let gaps = r.gaps.clone();
                        (r, gaps)
                    })
                    .map_err(|e| e.to_string())
            });
        DecayJob { n, rep, outcome }
    });

    let mut rows = Table::new(&[
        "n",
        "rep",
        "fitted_log_rate",
        "first_gap",
        "gap_at_200",
        "last_gap",
        "n_used",
        "error",
    ]);
    let mut failures = Vec::new();
    let mut rates_by_n: Vec<(usize, f64)> = Vec::new();
    let mut gap200: Vec<f64> = Vec::new();
    let mut gap_table: Option<Table> = None;
    for job in &results {
        match &job.outcome {
            Ok((report, gaps)) => {
                let rate = report.fitted_log_rate.unwrap_or(f64::NEG_INFINITY);
                rows.push(vec![
                    job.n.to_string(),
                    job.rep.to_string(),
                    fmt_f64(rate),
                    fmt_f64(gaps.first().copied().unwrap_or(0.0)),
                    fmt_f64(gaps.get(199).copied().unwrap_or(f64::NAN)),
                    fmt_f64(gaps.last().copied().unwrap_or(0.0)),
                    report.n_used.to_string(),
                    String::new(),
                ]);
                rates_by_n.push((job.n, rate));
                if let Some(g) = gaps.get(199) {
                    gap200.push(*g);
                }
                if gap_table.is_none() && job.n == *plan.sizes.last().expect("nonempty") {
                    let mut t = Table::new(&["t", "gap"]);
                    for (i, g) in gaps.iter().enumerate() {
                        t.push(vec![(i + 1).to_string(), fmt_f64(*g)]);
                    }
                    gap_table = Some(t);
                }
            }
            Err(msg) => {
                let mut row = vec![job.n.to_string(), job.rep.to_string()];
                push_nan(&mut row, 4);
                row.push("0".to_string());
                row.push(sanitize(msg));
                rows.push(row);
                failures.push(format!("n={} rep={}: {msg}", job.n, job.rep));
            }
        }
    }
    check_failure_budget(failures.len(), jobs, &failures)?;

    let mut aggregate = Table::new(&["n", "mean_fitted_log_rate", "reps"]);
    for &n in &plan.sizes {
        let rates: Vec<f64> = rates_by_n
            .iter()
            .filter(|(m, _)| *m == n)
            .map(|(_, r)| *r)
            .collect();
        let mean = rates.iter().sum::<f64>() / rates.len().max(1) as f64;
        aggregate.push(vec![n.to_string(), fmt_f64(mean), rates.len().to_string()]);
    }

    let mut checks = Vec::new();
    match plan.model.family {
        Family::Garch | Family::Agarch if plan.model.p == 1 && plan.model.q == 1 => {
            // Exact geometric identity: the rate is log beta1.
            let beta1 = plan.theta_true[2];
            let worst = rates_by_n
                .iter()
                .map(|(_, r)| (r - beta1.ln()).abs())
                .fold(0.0_f64, f64::max);
            checks.push(Check {
                name: "exact_rate_identity".into(),
                passed: worst < 1e-9,
                detail: format!("max |rate - log beta1| = {worst:.3e}"),
            });
        }
        Family::Garch | Family::Agarch => {
            let theta = theta_true(plan)?;
            let rho = crate::sre::spectral_radius_c(theta.betas())?.rho;
            let worst = rates_by_n
                .iter()
                .map(|(_, r)| *r)
                .fold(f64::NEG_INFINITY, f64::max);
            checks.push(Check {
                name: "rate_bounded_by_spectral_radius".into(),
                passed: worst <= rho.ln() + 0.05,
                detail: format!("max rate {worst:.4} vs log rho {:.4}", rho.ln()),
            });
        }
        Family::Egarch => {
            let worst = gap200.iter().copied().fold(0.0_f64, f64::max);
            checks.push(Check {
                name: "gap_at_200_small".into(),
                passed: worst < 1e-10,
                detail: format!("max gap at t=200: {worst:.3e}"),
            });
        }
    }

    let extra = match gap_table {
        Some(t) => vec![("gaps".to_string(), t)],
        None => Vec::new(),
    };
    Ok(ExperimentResult {
        plan: plan.clone(),
        rows,
        aggregate,
        extra,
        checks,
        failed_fits: failures.len(),
        total_fits: jobs,
    })
}

fn coord_index(model: &ModelSpec, name: &str) -> Result<usize> {
    model
        .coeff_names()
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| Error::Constraint(format!("unknown coordinate {name:?}")))
}

fn run_region_scan(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    let grid = plan.grid.as_ref().expect("validated");
    let xi = coord_index(&plan.model, &grid.x_coord)?;
    let yi = coord_index(&plan.model, &grid.y_coord)?;
    let points: Vec<(f64, f64)> = grid
        .x_values
        .iter()
        .flat_map(|&x| grid.y_values.iter().map(move |&y| (x, y)))
        .collect();

    let agarch_family = plan.model.family != Family::Egarch;
    let mut rows = if agarch_family {
        Table::new(&[
            &grid.x_coord,
            &grid.y_coord,
            "rho_hat",
            "std_error",
            "weak_margin",
            "verdict",
        ])
    } else {
        Table::new(&[
            &grid.x_coord,
            &grid.y_coord,
            "criterion",
            "std_error",
            "verdict",
        ])
    };

    struct ScanRow {
        x: f64,
        y: f64,
        estimate: f64,
        se: f64,
        margin: Option<f64>,
        verdict: &'static str,
    }
    let outcomes: Vec<Result<ScanRow>> = exec::map_indexed(points.len(), |i| {
        let (x, y) = points[i];
        let mut coeffs = plan.theta_true.clone();
        coeffs[xi] = x;
        coeffs[yi] = y;
        let theta = ThetaVector::new_relaxed(plan.model, coeffs)?;
        let stream = RngStream::new(plan.base_seed, 0).child(4).child(i as u64);
        if agarch_family {
            let est = lyapunov_agarch(
                &theta,
                &plan.innovation,
                stream,
                grid.n_products,
                grid.n_replications,
                MatrixNorm::Frobenius,
            )?;
            let margin = crate::models::weak_stationarity_margin(&theta, &plan.innovation)?;
            let verdict = if est.is_stationary() {
                "stationary"
            } else if est.rho_hat - 3.0 * est.std_error > 0.0 {
                "nonstationary"
            } else {
                "uncertain"
            };
            Ok(ScanRow {
                x,
                y,
                estimate: est.rho_hat,
                se: est.std_error,
                margin: Some(margin),
                verdict,
            })
        } else {
            let d = egarch_invertibility_check(
                &theta,
                &plan.innovation,
                stream,
                grid.n_products * grid.n_replications,
            )?;
            let verdict = if d.is_contractive() {
                "invertible"
            } else if d.log_lambda_mean - 3.0 * d.std_error > 0.0 {
                "noninvertible"
            } else {
                "uncertain"
            };
            Ok(ScanRow {
                x,
                y,
                estimate: d.log_lambda_mean,
                se: d.std_error,
                margin: None,
                verdict,
            })
        }
    });

    let mut scan_rows = Vec::with_capacity(points.len());
    for o in outcomes {
        scan_rows.push(o?);
    }
    for r in &scan_rows {
        let mut row = vec![fmt_f64(r.x), fmt_f64(r.y), fmt_f64(r.estimate), fmt_f64(r.se)];
        if let Some(m) = r.margin {
            row.push(fmt_f64(m));
        }
        row.push(r.verdict.to_string());
        rows.push(row);
    }

    let mut aggregate = Table::new(&["verdict", "count"]);
    for v in ["stationary", "nonstationary", "invertible", "noninvertible", "uncertain"] {
        let c = scan_rows.iter().filter(|r| r.verdict == v).count();
        if c > 0 {
            aggregate.push(vec![v.to_string(), c.to_string()]);
        }
    }

    let mut checks = Vec::new();
    if agarch_family {
        // Weak stationarity sits strictly inside the strict-stationarity
        // region, so a clearly positive margin must come with rho < 0.
        let bad = scan_rows
            .iter()
            .filter(|r| r.margin.unwrap_or(-1.0) > 0.05 && r.estimate >= 0.0)
            .count();
        checks.push(Check {
            name: "weak_margin_implies_rho_negative".into(),
            passed: bad == 0,
            detail: format!("{bad} violations"),
        });
        if plan.model.q == 1 {
            // A_t >= beta1, so beta1 >= 1 forces rho >= log beta1 >= 0.
            let beta_idx = plan.model.beta_range().start;
            let bad = scan_rows
                .iter()
                .filter(|r| {
                    let beta1 = if beta_idx == xi {
                        r.x
                    } else if beta_idx == yi {
                        r.y
                    } else {
                        plan.theta_true[beta_idx]
                    };
                    beta1 >= 1.0 && r.estimate < 0.0
                })
                .count();
            checks.push(Check {
                name: "beta_ge_1_implies_rho_nonneg".into(),
                passed: bad == 0,
                detail: format!("{bad} violations"),
            });
        }
    } else {
        // delta <= 1 at beta = 0 guarantees invertibility.
        let beta = plan.theta_true[1];
        if beta == 0.0 {
            let delta_from = |r: &ScanRow| {
                if xi == 3 {
                    r.x
                } else if yi == 3 {
                    r.y
                } else {
                    plan.theta_true[3]
                }
            };
            let bad = scan_rows
                .iter()
                .filter(|r| delta_from(r) <= 1.0 && r.verdict != "invertible")
                .count();
            checks.push(Check {
                name: "delta_le_1_invertible".into(),
                passed: bad == 0,
                detail: format!("{bad} violations"),
            });
        }
    }

    Ok(ExperimentResult {
        plan: plan.clone(),
        rows,
        aggregate,
        extra: Vec::new(),
        checks,
        failed_fits: 0,
        total_fits: 0,
    })
}

fn run_equivalence(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    let theta0 = theta_true(plan)?;
    gate_diagnostics(plan, &theta0)?;
    let region = CompactRegion::default_for(plan.model);
    let opts = fit_options(plan, false);
    let names = plan.model.coeff_names();
    let d = names.len();
    let reps = plan.replications;
    let jobs = plan.sizes.len() * reps;

    // Two deliberately different volatility initializations iterated
    // from t = 0 with the same innovations (no burn-in), mirroring how
    // simulated series differ from the stationary solution.
    let (init_a, init_b) = if plan.model.log_domain() {
        let a = plan.theta_true[0] / (1.0 - plan.theta_true[1]);
        (vec![a], vec![a + 8.0])
    } else {
        let a = plan.theta_true[0];
        (vec![a], vec![25.0 * a + 10.0])
    };

    struct EqJob {
        n: usize,
        rep: usize,
        outcome: std::result::Result<(Vec<f64>, Vec<f64>, f64, f64), String>,
    }
    let results: Vec<EqJob> = exec::map_indexed(jobs, |j| {
        let size_idx = j / reps;
        let rep = j % reps;
        let n = plan.sizes[size_idx];
        let stream = job_stream(plan, 5, size_idx, rep);
        let run_one = |initial: &Vec<f64>| {
            let sim = SimOptions {
                burn_in: 0,
                initial: Some(initial.clone()),
            };
            simulate_stationary(&theta0, &plan.innovation, stream, n, &sim)
                .map_err(|e| e.to_string())
                .and_then(|path| fit(path.data(), &region, &opts).map_err(|e| e.to_string()))
        };
        let outcome = run_one(&init_a).and_then(|fa| {
            run_one(&init_b).map(|fb| {
                (
                    fa.theta_hat.coeffs().to_vec(),
                    fb.theta_hat.coeffs().to_vec(),
                    fa.loglik,
                    fb.loglik,
                )
            })
        });
        EqJob { n, rep, outcome }
    });

    let mut cols = vec!["n".to_string(), "rep".to_string()];
    cols.extend(names.iter().map(|c| format!("gap.{c}")));
    cols.push("loglik_a".to_string());
    cols.push("loglik_b".to_string());
    cols.push("error".to_string());
    let mut rows = Table {
        columns: cols,
        rows: Vec::new(),
    };
    let mut failures = Vec::new();
    let mut gaps_by_n: Vec<(usize, Vec<f64>)> = Vec::new();
    for job in &results {
        let mut row = vec![job.n.to_string(), job.rep.to_string()];
        match &job.outcome {
            Ok((a, b, la, lb)) => {
                let gaps: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
                for g in &gaps {
                    row.push(fmt_f64(*g));
                }
                row.push(fmt_f64(*la));
                row.push(fmt_f64(*lb));
                row.push(String::new());
                gaps_by_n.push((job.n, gaps));
            }
            Err(msg) => {
                push_nan(&mut row, d + 2);
                row.push(sanitize(msg));
                failures.push(format!("n={} rep={}: {msg}", job.n, job.rep));
            }
        }
        rows.push(row);
    }
    check_failure_budget(failures.len(), jobs, &failures)?;

    let mut aggregate = Table::new(&["n", "coord", "max_gap", "mean_gap"]);
    let mut max_at_largest = 0.0_f64;
    let largest = *plan.sizes.last().expect("nonempty");
    for &n in &plan.sizes {
        for k in 0..d {
            let vals: Vec<f64> = gaps_by_n
                .iter()
                .filter(|(m, _)| *m == n)
                .map(|(_, g)| g[k])
                .collect();
            let mx = vals.iter().copied().fold(0.0_f64, f64::max);
            let mean = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
            if n == largest {
                max_at_largest = max_at_largest.max(mx);
            }
            aggregate.push(vec![
                n.to_string(),
                names[k].clone(),
                fmt_f64(mx),
                fmt_f64(mean),
            ]);
        }
    }

    let checks = vec![Check {
        name: "initialization_equivalence".into(),
        passed: max_at_largest < 1e-4,
        detail: format!("max per-coordinate gap at n={largest}: {max_at_largest:.3e}"),
    }];

    Ok(ExperimentResult {
        plan: plan.clone(),
        rows,
        aggregate,
        extra: Vec::new(),
        checks,
        failed_fits: failures.len(),
        total_fits: 2 * jobs,
    })
}
