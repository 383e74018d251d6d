//! Volatility filtering from observed data: the recursion
//! `h_{t+1} = g(X_t, ..., X_{t-p+1}, h_t, ..., h_{t-q+1})` seeded at an
//! arbitrary state, its chain-rule first-derivative recursion, and the
//! full second-derivative recursion. For EGARCH the whole filter runs in
//! log volatility; conversion to the variance scale happens only at the
//! likelihood boundary via `h = exp(l)`, `h' = h l'`,
//! `h'' = h (l'' + l' l'^T)`.
//!
//! Data layout: `data[0..p]` are the presample observations
//! `X_{-p+1}, ..., X_0` and `data[p..]` are `X_1, ..., X_n`. Filter
//! output is indexed t = 1..n; lags at or before t = 0 are pinned to the
//! initial state, whose theta-derivative is zero.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    d2g_raw, dg_s_raw, dg_theta_raw, eval_g_raw, Family, ModelSpec, ThetaVector,
};
use crate::sre::{PathSample, DIVERGENCE_LIMIT};

/// How many derivative orders a filter pass carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeriveOrder {
    Value,
    Gradient,
    Hessian,
}

impl DeriveOrder {
    pub fn from_index(order: usize) -> Result<Self> {
        match order {
            0 => Ok(DeriveOrder::Value),
            1 => Ok(DeriveOrder::Gradient),
            2 => Ok(DeriveOrder::Hessian),
            other => Err(Error::Constraint(format!(
                "derivative order must be 0, 1 or 2, got {other}"
            ))),
        }
    }
}

/// Initial filter state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialVol {
    /// Sample variance of the data, broadcast to all lags (its log for
    /// EGARCH). Shortens the warmup in practice.
    SampleVariance,
    /// Explicit state: squared volatility per lag, or the scalar log
    /// squared volatility for EGARCH.
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub initial: InitialVol,
    /// Observations excluded from the head of the likelihood sum.
    pub warmup_skip: usize,
    /// Variance-scale floor applied at the likelihood boundary before
    /// division; crossings are counted, not silently absorbed.
    pub variance_floor: Option<f64>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            initial: InitialVol::SampleVariance,
            warmup_skip: 0,
            variance_floor: None,
        }
    }
}

/// Per-t filter output. `h[t-1]` holds h_t (log h_t for EGARCH); `dh` and
/// `d2h` hold the theta-derivatives of the stored state when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    model: ModelSpec,
    pub h: Vec<f64>,
    pub dh: Vec<DVector<f64>>,
    pub d2h: Vec<DMatrix<f64>>,
}

impl FilterOutput {
    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn log_domain(&self) -> bool {
        self.model.log_domain()
    }

    /// Squared volatility at t = 1..n on the variance scale.
    pub fn var(&self, t: usize) -> f64 {
        let v = self.h[t - 1];
        if self.log_domain() {
            v.exp()
        } else {
            v
        }
    }

    /// All squared volatilities on the variance scale.
    pub fn var_all(&self) -> Vec<f64> {
        (1..=self.n()).map(|t| self.var(t)).collect()
    }

    /// Variance-scale gradient at t (converts from the log domain).
    pub fn var_dh(&self, t: usize) -> DVector<f64> {
        if self.log_domain() {
            &self.dh[t - 1] * self.var(t)
        } else {
            self.dh[t - 1].clone()
        }
    }

    /// Variance-scale Hessian at t (converts from the log domain).
    pub fn var_d2h(&self, t: usize) -> DMatrix<f64> {
        if self.log_domain() {
            let l1 = &self.dh[t - 1];
            (&self.d2h[t - 1] + l1 * l1.transpose()) * self.var(t)
        } else {
            self.d2h[t - 1].clone()
        }
    }
}

fn sample_variance(data: &[f64]) -> f64 {
    if data.is_empty() {
        return 1.0;
    }
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.max(1e-12)
}

fn initial_state(model: &ModelSpec, data: &[f64], config: &FilterConfig) -> Result<Vec<f64>> {
    let q = model.q.max(1);
    match &config.initial {
        InitialVol::SampleVariance => {
            let v = sample_variance(data);
            let s = if model.log_domain() { v.ln() } else { v };
            Ok(vec![s; q])
        }
        InitialVol::Fixed(v) => {
            let state = match v.len() {
                1 => vec![v[0]; q],
                len if len == q => v.clone(),
                len => {
                    return Err(Error::Constraint(format!(
                        "initial state must have 1 or {q} entries, got {len}"
                    )))
                }
            };
            if state.iter().any(|s| !s.is_finite()) {
                return Err(Error::Constraint("initial state must be finite".into()));
            }
            if !model.log_domain() && state.iter().any(|s| *s < 0.0) {
                return Err(Error::Constraint(
                    "initial squared volatility must be nonnegative".into(),
                ));
            }
            Ok(state)
        }
    }
}

/// Runs the filter at the given derivative order over
/// `data = (X_{-p+1}, ..., X_n)`.
pub fn run_filter(
    theta: &ThetaVector,
    data: &[f64],
    config: &FilterConfig,
    order: DeriveOrder,
) -> Result<FilterOutput> {
    let model = *theta.model();
    let p = model.p;
    if data.len() < p {
        return Err(Error::Constraint(format!(
            "need at least {p} presample observations, got {}",
            data.len()
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("observations must be finite".into()));
    }
    let n = data.len() - p;
    let d = model.dim();
    let q = model.q;
    let init = initial_state(&model, data, config)?;
    let c = theta.coeffs();

    let want_grad = !matches!(order, DeriveOrder::Value);
    let want_hess = matches!(order, DeriveOrder::Hessian);

    let mut h = Vec::with_capacity(n);
    let mut dh: Vec<DVector<f64>> = Vec::with_capacity(if want_grad { n } else { 0 });
    let mut d2h: Vec<DMatrix<f64>> = Vec::with_capacity(if want_hess { n } else { 0 });

    let mut x_lags = vec![0.0; p];
    let mut s_lags = vec![0.0; q];
    let mut dg_t = vec![0.0; d];
    let mut dg_s = vec![0.0; q];
    let zero_grad = DVector::<f64>::zeros(d);

    for t in 1..=n {
        for i in 1..=p {
            x_lags[i - 1] = data[p + t - 1 - i];
        }
        for j in 1..=q {
            s_lags[j - 1] = if t > j { h[t - 1 - j] } else { init[j - t] };
        }
        let ht = eval_g_raw(&model, c, &x_lags, &s_lags);
        if !ht.is_finite() || ht.abs() > DIVERGENCE_LIMIT {
            return Err(Error::Numeric {
                what: "filter state is not finite".into(),
                index: t,
            });
        }
        h.push(ht);

        if want_grad {
            dg_theta_raw(&model, c, &x_lags, &s_lags, &mut dg_t);
            dg_s_raw(&model, c, &x_lags, &s_lags, &mut dg_s);
            let mut grad = DVector::from_column_slice(&dg_t);
            for j in 1..=q {
                if t > j {
                    grad.axpy(dg_s[j - 1], &dh[t - 1 - j], 1.0);
                }
                // lags at or before t = 0 carry zero theta-derivative
            }
            if want_hess {
                let blocks = d2g_raw(&model, c, &x_lags, &s_lags);
                let mut hess = blocks.theta_theta.clone();
                // Mixed theta-s terms and the quadratic-in-gradient term.
                for j in 1..=q {
                    let lag_grad = if t > j { &dh[t - 1 - j] } else { &zero_grad };
                    let col = blocks.theta_s.column(j - 1);
                    hess += col * lag_grad.transpose();
                    hess += lag_grad * col.transpose();
                    for j2 in 1..=q {
                        let w = blocks.s_s[(j - 1, j2 - 1)];
                        if w != 0.0 {
                            let lag_grad2 = if t > j2 { &dh[t - 1 - j2] } else { &zero_grad };
                            hess += lag_grad * lag_grad2.transpose() * w;
                        }
                    }
                    if t > j {
                        hess += &d2h[t - 1 - j] * dg_s[j - 1];
                    }
                }
                d2h.push(hess);
            }
            dh.push(grad);
        }
    }

    Ok(FilterOutput { model, h, dh, d2h })
}

/// Truncated series representation of the stationary AGARCH volatility:
/// `h_t = xi_0 + sum_{l=1}^{L} xi_l (|X_{t-l}| - gamma X_{t-l})^2` with
/// coefficients from the power series of `a(z)/b(z)`. Serves as an
/// independent oracle against the filter recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesH {
    /// h_t for t = 1..n.
    pub h: Vec<f64>,
    /// Series coefficients xi_0..xi_L.
    pub xi: Vec<f64>,
    /// Geometric estimate of the dropped tail `c eta^L`.
    pub tail_estimate: f64,
}

pub fn agarch_series_h(theta: &ThetaVector, data: &[f64], truncation: usize) -> Result<SeriesH> {
    let model = *theta.model();
    if model.family == Family::Egarch {
        return Err(Error::Unsupported(
            "the series representation applies to the GARCH/AGARCH family".into(),
        ));
    }
    let beta_sum: f64 = theta.betas().iter().sum();
    if beta_sum >= 1.0 {
        return Err(Error::Constraint(
            "series representation needs sum beta_j < 1".into(),
        ));
    }
    let p = model.p;
    if data.len() < p {
        return Err(Error::Constraint(format!(
            "need at least {p} presample observations, got {}",
            data.len()
        )));
    }
    let n = data.len() - p;
    let gamma = theta.gamma();
    let alphas = theta.alphas();
    let betas = theta.betas();

    // Power-series coefficients of a(z)/b(z):
    // xi_l = alpha_l [l <= p] + sum_{j=1}^{min(l,q)} beta_j xi_{l-j},
    // where the convolution sees xi_0 = 0 (the constant term
    // alpha0 / b(1) sits outside the series).
    let mut xi = vec![0.0; truncation + 1];
    for l in 1..=truncation {
        let mut v = if l <= p { alphas[l - 1] } else { 0.0 };
        for j in 1..=model.q.min(l.saturating_sub(1)) {
            v += betas[j - 1] * xi[l - j];
        }
        xi[l] = v;
    }
    xi[0] = theta.alpha0() / (1.0 - beta_sum);
    let eta = if model.q > 0 {
        beta_sum.powf(1.0 / model.q as f64)
    } else {
        0.0
    };
    let tail_estimate = if truncation >= 1 && eta > 0.0 && eta < 1.0 {
        xi[truncation].abs() * eta / (1.0 - eta)
    } else {
        0.0
    };

    let mut h = Vec::with_capacity(n);
    for t in 1..=n {
        // X_{t-l} exists down to the data start X_{-p+1}, i.e. l <= t-1+p.
        let lmax = truncation.min(t - 1 + p);
        let mut v = xi[0];
        for l in 1..=lmax {
            let x = data[p + t - 1 - l];
            let u = x.abs() - gamma * x;
            v += xi[l] * u * u;
        }
        h.push(v);
    }
    Ok(SeriesH {
        h,
        xi,
        tail_estimate,
    })
}

/// Per-t gap between the filtered and the true squared volatility on a
/// simulated path, with the fitted geometric decay rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// |hhat_t - sigma_t^2| for t = 1..n (variance scale).
    pub gaps: Vec<f64>,
    /// Least-squares slope of log gap against t over the signal window;
    /// `None` when fewer than two points carry signal (e.g. exact
    /// initialization).
    pub fitted_log_rate: Option<f64>,
    /// Points entering the fit.
    pub n_used: usize,
}

/// Runs the filter at the path's generating parameter and reports how
/// fast the initialization error dies out. The regression window keeps
/// gaps above `max(1e-12, first_gap * 1e-11)`; below that relative floor
/// the gap is float noise, not signal.
pub fn filter_error_decay(
    theta_true: &ThetaVector,
    path: &PathSample,
    config: &FilterConfig,
) -> Result<DecayReport> {
    let out = run_filter(theta_true, path.data(), config, DeriveOrder::Value)?;
    let n = out.n();
    let gaps: Vec<f64> = (1..=n)
        .map(|t| (out.var(t) - path.sigma2_at(t)).abs())
        .collect();
    let first = gaps.first().copied().unwrap_or(0.0);
    let floor = 1e-12_f64.max(first * 1e-11);
    let pts: Vec<(f64, f64)> = gaps
        .iter()
        .enumerate()
        .take_while(|(_, g)| **g > floor)
        .map(|(i, g)| ((i + 1) as f64, g.ln()))
        .collect();
    let fitted_log_rate = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let tbar = pts.iter().map(|(t, _)| t).sum::<f64>() / m;
        let ybar = pts.iter().map(|(_, y)| y).sum::<f64>() / m;
        let num: f64 = pts.iter().map(|(t, y)| (t - tbar) * (y - ybar)).sum();
        let den: f64 = pts.iter().map(|(t, _)| (t - tbar) * (t - tbar)).sum();
        Some(num / den)
    } else {
        None
    };
    Ok(DecayReport {
        gaps,
        fitted_log_rate,
        n_used: pts.len(),
    })
}
