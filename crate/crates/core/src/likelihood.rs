//! The Gaussian quasi-log-likelihood
//! `L_n = -(1/2) sum_t (X_t^2 / h_t + log h_t)` and its analytic score
//! and Hessian assembled from the filter recursions:
//!
//! `l'_t = -(1/2) (h'_t / h_t) (1 - X_t^2 / h_t)`
//! `l''_t = -(1/2) [ (h'_t/h_t)(h'_t/h_t)^T (2 X_t^2/h_t - 1) + (h''_t/h_t)(1 - X_t^2/h_t) ]`
//!
//! The constant `-(n/2) log 2pi` is omitted; add it back when comparing
//! against external likelihood values. EGARCH filter output arrives in
//! the log domain, where the ratios are simply `h'/h = l'` and
//! `h''/h = l'' + l' l'^T`, so no exponential ever meets a division.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::filter::{run_filter, DeriveOrder, FilterConfig, FilterOutput};
use crate::models::ThetaVector;

/// Value, and optionally score/Hessian, of the quasi-log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodValue {
    pub loglik: f64,
    pub score: Option<DVector<f64>>,
    pub hessian: Option<DMatrix<f64>>,
    pub n_terms: usize,
    /// Times the variance floor was hit before a division. Zero for
    /// admissible parameters.
    pub clamp_events: usize,
}

/// Per-observation pieces on the variance scale, domain conversion
/// already applied.
struct TermPieces {
    ln_h: f64,
    x2_over_h: f64,
}

fn term_pieces(out: &FilterOutput, t: usize, x: f64, floor: Option<f64>) -> (TermPieces, bool) {
    let mut clamped = false;
    if out.log_domain() {
        let mut l = out.h[t - 1];
        if let Some(f) = floor {
            let lf = f.ln();
            if l < lf {
                l = lf;
                clamped = true;
            }
        }
        (
            TermPieces {
                ln_h: l,
                x2_over_h: x * x * (-l).exp(),
            },
            clamped,
        )
    } else {
        let mut h = out.h[t - 1];
        if let Some(f) = floor {
            if h < f {
                h = f;
                clamped = true;
            }
        }
        (
            TermPieces {
                ln_h: h.ln(),
                x2_over_h: x * x / h,
            },
            clamped,
        )
    }
}

/// Ratio h'_t / h_t on the variance scale.
fn grad_ratio(out: &FilterOutput, t: usize) -> DVector<f64> {
    if out.log_domain() {
        out.dh[t - 1].clone()
    } else {
        &out.dh[t - 1] / out.h[t - 1]
    }
}

/// Ratio h''_t / h_t on the variance scale.
fn hess_ratio(out: &FilterOutput, t: usize) -> DMatrix<f64> {
    if out.log_domain() {
        let l1 = &out.dh[t - 1];
        &out.d2h[t - 1] + l1 * l1.transpose()
    } else {
        &out.d2h[t - 1] / out.h[t - 1]
    }
}

/// Evaluates the likelihood at the requested derivative order over
/// `data = (X_{-p+1}, ..., X_n)`, summing t = warmup_skip+1 .. n.
pub fn evaluate(
    theta: &ThetaVector,
    data: &[f64],
    config: &FilterConfig,
    order: DeriveOrder,
) -> Result<LikelihoodValue> {
    let model = theta.model();
    let p = model.p;
    let out = run_filter(theta, data, config, order)?;
    let n = out.n();
    let d = model.dim();
    let start = config.warmup_skip.min(n);

    let mut loglik = 0.0;
    let mut clamp_events = 0usize;
    let mut score = if matches!(order, DeriveOrder::Gradient | DeriveOrder::Hessian) {
        Some(DVector::<f64>::zeros(d))
    } else {
        None
    };
    let mut hessian = if matches!(order, DeriveOrder::Hessian) {
        Some(DMatrix::<f64>::zeros(d, d))
    } else {
        None
    };

    for t in start + 1..=n {
        let x = data[p + t - 1];
        let (pieces, clamped) = term_pieces(&out, t, x, config.variance_floor);
        if clamped {
            clamp_events += 1;
        }
        loglik += -0.5 * (pieces.x2_over_h + pieces.ln_h);

        if let Some(score) = score.as_mut() {
            let factor = -0.5 * (1.0 - pieces.x2_over_h);
            let scale = if out.log_domain() {
                factor
            } else {
                factor / out.h[t - 1]
            };
            score.axpy(scale, &out.dh[t - 1], 1.0);
            if let Some(hess) = hessian.as_mut() {
                let rdh = grad_ratio(&out, t);
                let rd2h = hess_ratio(&out, t);
                let quad = &rdh * rdh.transpose();
                *hess += quad * (-0.5 * (2.0 * pieces.x2_over_h - 1.0));
                *hess += rd2h * (-0.5 * (1.0 - pieces.x2_over_h));
            }
        }
    }

    Ok(LikelihoodValue {
        loglik,
        score,
        hessian,
        n_terms: n - start,
        clamp_events,
    })
}

/// Quasi-log-likelihood value only.
pub fn loglik(theta: &ThetaVector, data: &[f64], config: &FilterConfig) -> Result<LikelihoodValue> {
    evaluate(theta, data, config, DeriveOrder::Value)
}

/// Analytic score (gradient of [`loglik`] in theta).
pub fn score(theta: &ThetaVector, data: &[f64], config: &FilterConfig) -> Result<DVector<f64>> {
    Ok(evaluate(theta, data, config, DeriveOrder::Gradient)?
        .score
        .expect("gradient order carries a score"))
}

/// Analytic Hessian (Jacobian of [`score`]).
pub fn hessian(theta: &ThetaVector, data: &[f64], config: &FilterConfig) -> Result<DMatrix<f64>> {
    Ok(evaluate(theta, data, config, DeriveOrder::Hessian)?
        .hessian
        .expect("hessian order carries a hessian"))
}

/// The two ingredients of the asymptotic covariance estimator:
/// `M_n = (1/n) sum_t (h'_t/h_t)(h'_t/h_t)^T` and
/// `kurt = (1/n) sum_t (Zhat_t^4 - 1)` with `Zhat_t = X_t / sqrt(h_t)`.
pub fn information_pieces(
    theta: &ThetaVector,
    data: &[f64],
    config: &FilterConfig,
) -> Result<(DMatrix<f64>, f64)> {
    let model = theta.model();
    let p = model.p;
    let out = run_filter(theta, data, config, DeriveOrder::Gradient)?;
    let n = out.n();
    let d = model.dim();
    let start = config.warmup_skip.min(n);
    let m = (n - start) as f64;

    let mut info = DMatrix::<f64>::zeros(d, d);
    let mut kurt = 0.0;
    for t in start + 1..=n {
        let x = data[p + t - 1];
        let (pieces, _) = term_pieces(&out, t, x, config.variance_floor);
        let rdh = grad_ratio(&out, t);
        info += &rdh * rdh.transpose();
        kurt += pieces.x2_over_h * pieces.x2_over_h - 1.0;
    }
    info /= m;
    kurt /= m;
    Ok((info, kurt))
}

/// Model residuals `Zhat_t = X_t / sqrt(h_t)` for t = 1..n.
pub fn residuals(theta: &ThetaVector, data: &[f64], config: &FilterConfig) -> Result<Vec<f64>> {
    let model = theta.model();
    let p = model.p;
    let out = run_filter(theta, data, config, DeriveOrder::Value)?;
    Ok((1..=out.n())
        .map(|t| {
            let x = data[p + t - 1];
            if out.log_domain() {
                x * (-out.h[t - 1] / 2.0).exp()
            } else {
                x / out.h[t - 1].sqrt()
            }
        })
        .collect())
}
