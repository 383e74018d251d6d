//! Output writers and the observation-CSV reader. All files are
//! deterministic for a fixed config and seed: CSVs use the pinned
//! 17-significant-digit dialect, JSON objects have sorted keys, and the
//! provenance header carries the tool version, config hash and seed.

use std::path::Path;

use volqml::csvio::{fmt_f64, read_table, Table, SCHEMA_LINE};
use volqml::error::Error;
use volqml::filter::FilterOutput;
use volqml::qmle::EstimateReport;
use volqml::sre::PathSample;

use crate::config::LoadedConfig;

pub struct Provenance {
    pub seed: u64,
    pub config_hash: u64,
}

impl Provenance {
    pub fn comments(&self) -> Vec<String> {
        vec![SCHEMA_LINE.to_string(), self.line()]
    }

    pub fn line(&self) -> String {
        format!(
            "# volqml v{} seed={} config=fnv64:{:016x}",
            env!("CARGO_PKG_VERSION"),
            self.seed,
            self.config_hash
        )
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::json!({
            "tool": "volqml",
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config": format!("fnv64:{:016x}", self.config_hash),
        })
    }
}

/// path.csv: t, X, sigma2, Z with presample rows at t <= 0.
pub fn write_path_csv(path: &Path, sample: &PathSample, prov: &Provenance) -> Result<(), Error> {
    let mut table = Table::new(&["t", "X", "sigma2", "Z"]);
    let p = sample.presample as i64;
    for (i, ((x, s2), z)) in sample
        .x
        .iter()
        .zip(&sample.sigma2)
        .zip(&sample.z)
        .enumerate()
    {
        let t = i as i64 - p + 1;
        table.push(vec![t.to_string(), fmt_f64(*x), fmt_f64(*s2), fmt_f64(*z)]);
    }
    table.write(path, &prov.comments())
}

/// Reads observations from a CSV: the `X` column when present (the
/// simulate output feeds straight back in), otherwise a single-column
/// file.
pub fn read_observations(path: &Path) -> Result<Vec<f64>, Error> {
    let table = read_table(path)?;
    let col = match table.col("X") {
        Some(c) => c,
        None if table.columns.len() == 1 => 0,
        None => {
            return Err(Error::InvalidInput(format!(
                "{}: no \"X\" column among {:?}",
                path.display(),
                table.columns
            )))
        }
    };
    let mut out = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        out.push(row[col].parse::<f64>().map_err(|_| {
            Error::InvalidInput(format!(
                "{}: data row {}: not a number: {:?}",
                path.display(),
                i + 1,
                row[col]
            ))
        })?);
    }
    Ok(out)
}

/// filter.csv: t, h, then dh_1..dh_d and the row-major flattened d2h
/// when those orders were computed. Everything on the variance scale.
pub fn write_filter_csv(
    path: &Path,
    out: &FilterOutput,
    prov: &Provenance,
) -> Result<(), Error> {
    let d = out.model().dim();
    let has_grad = !out.dh.is_empty();
    let has_hess = !out.d2h.is_empty();
    let mut cols: Vec<String> = vec!["t".into(), "h".into()];
    if has_grad {
        cols.extend((1..=d).map(|k| format!("dh_{k}")));
    }
    if has_hess {
        for k in 1..=d {
            for j in 1..=d {
                cols.push(format!("d2h_{k}_{j}"));
            }
        }
    }
    let mut table = Table {
        columns: cols,
        rows: Vec::new(),
    };
    for t in 1..=out.n() {
        let mut row = vec![t.to_string(), fmt_f64(out.var(t))];
        if has_grad {
            let g = out.var_dh(t);
            row.extend(g.iter().map(|v| fmt_f64(*v)));
        }
        if has_hess {
            let h = out.var_d2h(t);
            // Symmetry holds by construction; guard it before export.
            for k in 0..d {
                for j in 0..k {
                    debug_assert!((h[(k, j)] - h[(j, k)]).abs() < 1e-9);
                }
            }
            for k in 0..d {
                for j in 0..d {
                    row.push(fmt_f64(h[(k, j)]));
                }
            }
        }
        table.push(row);
    }
    table.write(path, &prov.comments())
}

pub fn write_residuals_csv(
    path: &Path,
    residuals: &[f64],
    prov: &Provenance,
) -> Result<(), Error> {
    let mut table = Table::new(&["t", "z_hat"]);
    for (i, r) in residuals.iter().enumerate() {
        table.push(vec![(i + 1).to_string(), fmt_f64(*r)]);
    }
    table.write(path, &prov.comments())
}

pub fn write_json(
    path: &Path,
    mut value: serde_json::Value,
    prov: &Provenance,
) -> Result<(), Error> {
    if let serde_json::Value::Object(map) = &mut value {
        map.insert("provenance".into(), prov.json());
    }
    let text = serde_json::to_string_pretty(&value)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// estimate.json with the fixed field names theta_hat.*, se.*, loglik,
/// converged, n.
pub fn write_estimate_json(
    path: &Path,
    report: &EstimateReport,
    loaded: &LoadedConfig,
    prov: &Provenance,
) -> Result<(), Error> {
    let names = loaded.cfg.model.coeff_names();
    let theta: serde_json::Map<String, serde_json::Value> = names
        .iter()
        .zip(report.theta_hat.coeffs())
        .map(|(n, v)| (n.clone(), (*v).into()))
        .collect();
    let mut value = serde_json::json!({
        "n": report.n,
        "loglik": report.loglik,
        "converged": report.converged,
        "iterations": report.iterations,
        "theta_hat": theta,
        "active_constraints": report.active_constraints,
        "boundary_warning": report.boundary_warning,
        "clamp_events": report.clamp_events,
        "starts": report.starts.iter().map(|s| serde_json::json!({
            "start": s.start,
            "loglik": s.loglik,
            "converged": s.converged,
            "iterations": s.iterations,
            "error": s.error,
        })).collect::<Vec<_>>(),
    });
    let map = value.as_object_mut().expect("object");
    match &report.covariance {
        Some(cov) => {
            let se: serde_json::Map<String, serde_json::Value> = names
                .iter()
                .zip(&cov.std_errors)
                .map(|(n, v)| (n.clone(), (*v).into()))
                .collect();
            map.insert("se".into(), se.into());
            map.insert("kurt_hat".into(), cov.kurt_hat.into());
            let d = names.len();
            let v0: Vec<Vec<f64>> = (0..d)
                .map(|i| (0..d).map(|j| cov.v0_hat[(i, j)]).collect())
                .collect();
            map.insert(
                "v0_hat".into(),
                serde_json::to_value(v0).expect("matrix serializes"),
            );
        }
        None => {
            if let Some(err) = &report.covariance_error {
                map.insert("covariance_error".into(), err.clone().into());
            }
        }
    }
    let diag = &report.diagnostics;
    let mut dmap = serde_json::Map::new();
    if let Some(m) = diag.weak_margin {
        dmap.insert("weak_margin".into(), m.into());
    }
    if let Some(s) = &diag.spectral_radius {
        dmap.insert(
            "spectral_radius".into(),
            serde_json::json!({"rho": s.rho, "bound": s.bound}),
        );
    }
    if let Some(c) = &diag.contraction {
        dmap.insert(
            "contraction".into(),
            serde_json::json!({"r": c.r, "estimate": c.log_lambda_mean, "verdict": c.is_contractive()}),
        );
    }
    if let Some(c) = &diag.invertibility {
        dmap.insert(
            "invertibility".into(),
            serde_json::json!({
                "estimate": c.log_lambda_mean,
                "std_error": c.std_error,
                "verdict": c.is_contractive(),
            }),
        );
    }
    map.insert("diagnostics".into(), dmap.into());
    write_json(path, value, prov)
}
