//! Stochastic-recurrence-equation machinery: forward iteration with a
//! divergence guard, stationary simulation via burn-in with a convergence
//! certificate, top Lyapunov exponents of the AGARCH companion random
//! matrix products, companion-matrix spectral radii, and the EGARCH
//! invertibility criterion estimated by Monte Carlo.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::innovations::{InnovationSpec, RngStream, Sampler};
use crate::models::{eval_g_raw, Family, ModelSpec, ThetaVector};

/// Any state coordinate beyond this magnitude aborts the iteration:
/// non-stationary parameters must fail loudly instead of poisoning
/// downstream statistics.
pub const DIVERGENCE_LIMIT: f64 = 1e300;

/// Runs the forward iterates `state_{t+1} = map(t, state_t)` and returns
/// the visited states (the initial value is not included).
pub fn forward_iterate<F>(mut map: F, initial: &[f64], steps: usize) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(usize, &[f64]) -> Vec<f64>,
{
    let mut states = Vec::with_capacity(steps);
    let mut cur = initial.to_vec();
    for t in 0..steps {
        cur = map(t, &cur);
        if cur.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
            return Err(Error::Divergence {
                step: t,
                limit: DIVERGENCE_LIMIT,
            });
        }
        states.push(cur.clone());
    }
    Ok(states)
}

/// Options for [`simulate_stationary`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOptions {
    /// Steps discarded before the retained block. The run also tracks a
    /// second initial value and records the state gap at burn-in end, so
    /// every simulation carries its own convergence certificate.
    pub burn_in: usize,
    /// Initial squared-volatility state (log squared volatility for
    /// EGARCH). A scalar is broadcast to all lags. Default: the
    /// weak-stationarity mean when it exists, otherwise 1.
    pub initial: Option<Vec<f64>>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            burn_in: 1000,
            initial: None,
        }
    }
}

/// A simulated trajectory. `x`, `sigma2` and `z` are aligned and include
/// `presample` leading observations so the filter can start at t = 1;
/// `sigma2` is on the variance scale for every family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub model: ModelSpec,
    pub x: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub z: Vec<f64>,
    pub presample: usize,
    pub burn_in: usize,
    /// Initial state actually used (state domain).
    pub initial: Vec<f64>,
    /// Max state gap between the two tracked initializations at burn-in
    /// end; small values certify that the initialization was forgotten.
    pub convergence_gap: f64,
    /// Weak-stationarity margin of the generating parameter, when the
    /// family has one. Nonpositive values warn that only strict (not
    /// second-order) stationarity may hold.
    pub weak_margin: Option<f64>,
}

impl PathSample {
    /// Retained length n (excludes the presample).
    pub fn n(&self) -> usize {
        self.x.len() - self.presample
    }

    /// Observations including the presample, ready for the filter.
    pub fn data(&self) -> &[f64] {
        &self.x
    }

    /// True squared volatility at t = 1..n.
    pub fn sigma2_at(&self, t: usize) -> f64 {
        self.sigma2[self.presample + t - 1]
    }
}

/// Simulates the (approximately) stationary solution: seed an arbitrary
/// state, iterate the volatility SRE driven by fresh innovations, discard
/// the burn-in and keep `n` observations plus the presample lags.
pub fn simulate_stationary(
    theta: &ThetaVector,
    innovation: &InnovationSpec,
    stream: RngStream,
    n: usize,
    options: &SimOptions,
) -> Result<PathSample> {
    match theta.model().family {
        Family::Garch | Family::Agarch => simulate_agarch(theta, innovation, stream, n, options),
        Family::Egarch => simulate_egarch(theta, innovation, stream, n, options),
    }
}

fn broadcast_initial(init: &Option<Vec<f64>>, k: usize, default: f64) -> Result<Vec<f64>> {
    match init {
        None => Ok(vec![default; k]),
        Some(v) if v.len() == 1 => Ok(vec![v[0]; k]),
        Some(v) if v.len() == k => Ok(v.clone()),
        Some(v) => Err(Error::Constraint(format!(
            "initial state must have 1 or {k} entries, got {}",
            v.len()
        ))),
    }
}

fn simulate_agarch(
    theta: &ThetaVector,
    innovation: &InnovationSpec,
    stream: RngStream,
    n: usize,
    options: &SimOptions,
) -> Result<PathSample> {
    let model = *theta.model();
    let k = model.p.max(model.q).max(1);
    let margin = crate::models::weak_stationarity_margin(theta, innovation)?;
    let default_init = if margin > 0.0 {
        theta.alpha0() / margin
    } else {
        1.0
    };
    let initial = broadcast_initial(&options.initial, k, default_init)?;
    for v in &initial {
        if *v < 0.0 || !v.is_finite() {
            return Err(Error::Constraint(
                "initial squared volatility must be finite and nonnegative".into(),
            ));
        }
    }

    let total = k + options.burn_in + model.p + n;
    let mut sampler = Sampler::new(innovation, stream)?;
    let z: Vec<f64> = (0..total).map(|_| sampler.next_z()).collect();

    let c = theta.coeffs();
    let run = |init: &[f64], upto: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut sigma2 = vec![0.0; upto];
        let mut x = vec![0.0; upto];
        for i in 0..k.min(upto) {
            sigma2[i] = init[i];
            x[i] = init[i].sqrt() * z[i];
        }
        let mut x_lags = vec![0.0; model.p];
        let mut s_lags = vec![0.0; model.q];
        for idx in k..upto {
            for i in 1..=model.p {
                x_lags[i - 1] = x[idx - i];
            }
            for j in 1..=model.q {
                s_lags[j - 1] = sigma2[idx - j];
            }
            let s = eval_g_raw(&model, c, &x_lags, &s_lags);
            if !s.is_finite() || s > DIVERGENCE_LIMIT {
                return Err(Error::Divergence {
                    step: idx - k,
                    limit: DIVERGENCE_LIMIT,
                });
            }
            sigma2[idx] = s;
            x[idx] = s.sqrt() * z[idx];
        }
        Ok((sigma2, x))
    };

    let (sigma2, x) = run(&initial, total)?;

    // Certificate: replay the burn-in from a second initial value with
    // the same innovations and record the state gap at burn-in end.
    let burn_end = k + options.burn_in;
    let initial_b: Vec<f64> = initial.iter().map(|v| 2.0 * v + 1.0).collect();
    let (sigma2_b, _) = run(&initial_b, burn_end)?;
    let gap = (0..k)
        .map(|i| (sigma2[burn_end - 1 - i] - sigma2_b[burn_end - 1 - i]).abs())
        .fold(0.0_f64, f64::max);

    let keep = model.p + n;
    Ok(PathSample {
        model,
        x: x[total - keep..].to_vec(),
        sigma2: sigma2[total - keep..].to_vec(),
        z: z[total - keep..].to_vec(),
        presample: model.p,
        burn_in: options.burn_in,
        initial,
        convergence_gap: gap,
        weak_margin: Some(margin),
    })
}

fn simulate_egarch(
    theta: &ThetaVector,
    innovation: &InnovationSpec,
    stream: RngStream,
    n: usize,
    options: &SimOptions,
) -> Result<PathSample> {
    let model = *theta.model();
    let c = theta.coeffs();
    let (alpha, beta, gamma, delta) = (c[0], c[1], c[2], c[3]);
    let default_init = (alpha + delta * innovation.moment_abs()?.value) / (1.0 - beta);
    let initial = broadcast_initial(&options.initial, 1, default_init)?;
    if !initial[0].is_finite() {
        return Err(Error::Constraint(
            "initial log volatility must be finite".into(),
        ));
    }

    let total = 1 + options.burn_in + model.p + n;
    let mut sampler = Sampler::new(innovation, stream)?;
    let z: Vec<f64> = (0..total).map(|_| sampler.next_z()).collect();

    let mut logv = vec![0.0; total];
    logv[0] = initial[0];
    for idx in 1..total {
        let l = alpha + beta * logv[idx - 1] + gamma * z[idx - 1] + delta * z[idx - 1].abs();
        if !l.is_finite() || l.abs() > 700.0 {
            return Err(Error::Divergence {
                step: idx - 1,
                limit: DIVERGENCE_LIMIT,
            });
        }
        logv[idx] = l;
    }
    // The log-volatility recursion is innovation-driven, so a second
    // initialization differs by exactly beta^t times the initial gap.
    let initial_gap = (2.0 * initial[0] + 1.0 - initial[0]).abs();
    let gap = beta.powi(options.burn_in as i32) * initial_gap;

    let keep = model.p + n;
    let x: Vec<f64> = (total - keep..total)
        .map(|i| (logv[i] / 2.0).exp() * z[i])
        .collect();
    let sigma2: Vec<f64> = (total - keep..total).map(|i| logv[i].exp()).collect();
    Ok(PathSample {
        model,
        x,
        sigma2,
        z: z[total - keep..].to_vec(),
        presample: model.p,
        burn_in: options.burn_in,
        initial,
        convergence_gap: gap,
        weak_margin: None,
    })
}

// ---------------------------------------------------------------------------
// Lyapunov exponent of the AGARCH companion products
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixNorm {
    Frobenius,
    Operator,
}

fn norm_of(m: &DMatrix<f64>, norm: MatrixNorm) -> f64 {
    match norm {
        MatrixNorm::Frobenius => m.norm(),
        MatrixNorm::Operator => m
            .clone()
            .singular_values()
            .iter()
            .copied()
            .fold(0.0, f64::max),
    }
}

/// Monte-Carlo estimate of the top Lyapunov exponent: the mean over
/// replications of `log ||A_0 ... A_{-n+1}|| / n`. The limit does not
/// depend on the matrix norm, so Frobenius (cheap) is the default and the
/// norm actually used is recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub rho_hat: f64,
    pub std_error: f64,
    pub n_products: usize,
    pub n_replications: usize,
    pub norm: MatrixNorm,
}

impl LyapunovEstimate {
    /// Negative beyond three standard errors.
    pub fn is_stationary(&self) -> bool {
        self.rho_hat + 3.0 * self.std_error < 0.0
    }
}

fn companion_matrix(model: &ModelSpec, c: &[f64], w: f64, out: &mut DMatrix<f64>) {
    let (p, q) = (model.p, model.q);
    out.fill(0.0);
    let alphas = &c[1..=p];
    let betas = &c[model.beta_range()];
    out[(0, 0)] = alphas[0] * w + if q >= 1 { betas[0] } else { 0.0 };
    for j in 1..q {
        out[(0, j)] = betas[j];
    }
    for i in 1..p {
        out[(0, q + i - 1)] = alphas[i];
    }
    for r in 1..q {
        out[(r, r - 1)] = 1.0;
    }
    if p >= 2 {
        out[(q, 0)] = w;
        for r in q + 1..p + q - 1 {
            out[(r, r - 1)] = 1.0;
        }
    }
}

/// Estimates the top Lyapunov exponent of the random companion matrices
/// of the AGARCH(p, q) squared-volatility recursion. Replications run on
/// independent child streams; products are renormalized every step so the
/// log norm accumulates without under- or overflow.
pub fn lyapunov_agarch(
    theta: &ThetaVector,
    innovation: &InnovationSpec,
    stream: RngStream,
    n_products: usize,
    n_replications: usize,
    norm: MatrixNorm,
) -> Result<LyapunovEstimate> {
    let model = *theta.model();
    if model.family == Family::Egarch {
        return Err(Error::Unsupported(
            "lyapunov_agarch applies to the GARCH/AGARCH family".into(),
        ));
    }
    if n_products == 0 || n_replications == 0 {
        return Err(Error::Constraint(
            "need n_products >= 1 and n_replications >= 1".into(),
        ));
    }
    if model.q == 0 && model.p > 1 {
        return Err(Error::Unsupported(
            "companion form needs q >= 1 (or the scalar case p = 1)".into(),
        ));
    }
    innovation.validate()?;

    let c = theta.coeffs().to_vec();
    let gamma = theta.gamma();
    let k = (model.p + model.q).saturating_sub(1).max(1);
    let scalar = k == 1;
    let alpha1 = c[1];
    let beta1 = if model.q >= 1 {
        c[model.beta_range()][0]
    } else {
        0.0
    };

    let per_rep: Vec<Result<f64>> = exec::map_indexed(n_replications, |rep| {
        let mut sampler = Sampler::new(innovation, stream.child(rep as u64))?;
        if scalar {
            let mut acc = 0.0;
            for _ in 0..n_products {
                let z = sampler.next_z();
                let u = z.abs() - gamma * z;
                let a = alpha1 * u * u + beta1;
                if a == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                acc += a.ln();
            }
            Ok(acc / n_products as f64)
        } else {
            let mut prod = DMatrix::<f64>::identity(k, k);
            let mut a = DMatrix::<f64>::zeros(k, k);
            let mut acc = 0.0;
            for _ in 0..n_products {
                let z = sampler.next_z();
                let u = z.abs() - gamma * z;
                companion_matrix(&model, &c, u * u, &mut a);
                prod = &a * &prod;
                let nm = norm_of(&prod, norm);
                if nm == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                if !nm.is_finite() {
                    return Err(Error::Numeric {
                        what: "matrix product norm overflowed".into(),
                        index: rep,
                    });
                }
                acc += nm.ln();
                prod /= nm;
            }
            Ok(acc / n_products as f64)
        }
    });

    let mut vals = Vec::with_capacity(n_replications);
    for v in per_rep {
        vals.push(v?);
    }
    let (mean, std_error) = mean_and_se(&vals);
    Ok(LyapunovEstimate {
        rho_hat: mean,
        std_error,
        n_products,
        n_replications,
        norm,
    })
}

// ---------------------------------------------------------------------------
// Companion-matrix spectral radius and contraction diagnostics
// ---------------------------------------------------------------------------

/// Spectral radius of the q x q companion matrix of a beta vector, with
/// the analytic bound `(sum beta_j)^{1/q}` it must stay below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralRadius {
    pub rho: f64,
    pub bound: f64,
}

pub fn spectral_radius_c(betas: &[f64]) -> Result<SpectralRadius> {
    let q = betas.len();
    if q == 0 {
        return Err(Error::Constraint(
            "need at least one beta coefficient".into(),
        ));
    }
    if betas.iter().any(|b| *b < 0.0 || !b.is_finite()) {
        return Err(Error::Constraint("beta coefficients must be >= 0".into()));
    }
    let sum: f64 = betas.iter().sum();
    let bound = sum.powf(1.0 / q as f64);
    if q == 1 {
        return Ok(SpectralRadius {
            rho: betas[0],
            bound,
        });
    }
    let mut c = DMatrix::<f64>::zeros(q, q);
    for j in 0..q {
        c[(0, j)] = betas[j];
    }
    for r in 1..q {
        c[(r, r - 1)] = 1.0;
    }
    let rho = c
        .complex_eigenvalues()
        .iter()
        .map(|ev| ev.norm())
        .fold(0.0, f64::max);
    Ok(SpectralRadius { rho, bound })
}

fn rescale(m: &mut DMatrix<f64>, log: &mut f64) -> bool {
    let n = m.norm();
    if n == 0.0 {
        return false;
    }
    *m /= n;
    *log += n.ln();
    true
}

/// log ||C^r|| computed by square-and-multiply with per-step
/// renormalization, so the result never under- or overflows.
pub fn log_norm_power(c: &DMatrix<f64>, r: usize, norm: MatrixNorm) -> f64 {
    assert!(r >= 1, "power must be >= 1");
    let mut base = c.clone();
    let mut base_log = 0.0;
    if !rescale(&mut base, &mut base_log) {
        return f64::NEG_INFINITY;
    }
    let mut result: Option<(DMatrix<f64>, f64)> = None;
    let mut e = r;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => (base.clone(), base_log),
                Some((m, lg)) => {
                    let mut p = &m * &base;
                    let mut l = lg + base_log;
                    if !rescale(&mut p, &mut l) {
                        return f64::NEG_INFINITY;
                    }
                    (p, l)
                }
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        let mut sq = &base * &base;
        let mut l = 2.0 * base_log;
        if !rescale(&mut sq, &mut l) {
            return f64::NEG_INFINITY;
        }
        base = sq;
        base_log = l;
    }
    let (m, lg) = result.expect("r >= 1");
    lg + norm_of(&m, norm).ln()
}

/// A contraction diagnostic: an estimate of `E[log Lambda(phi^(r))] / r`,
/// declared contractive only when `mean + 3 se < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionDiagnostic {
    pub log_lambda_mean: f64,
    pub std_error: f64,
    pub r: usize,
    pub n: usize,
    /// EGARCH series truncation depth, when applicable.
    pub k_max: Option<usize>,
    /// Bound on the truncated series tail, when applicable.
    pub tail_bound: Option<f64>,
    pub norm: Option<MatrixNorm>,
}

impl ContractionDiagnostic {
    pub fn is_contractive(&self) -> bool {
        self.log_lambda_mean + 3.0 * self.std_error < 0.0
    }
}

fn mean_and_se(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let se = if vals.len() > 1 && mean.is_finite() {
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    (mean, se)
}

/// Monte-Carlo estimate of the EGARCH invertibility criterion
/// `E[log max{beta, (1/2) exp((1/2) sum_k beta^k (gamma Z_{-k-1} + delta |Z_{-k-1}|)) (gamma Z_0 + delta |Z_0|) - beta}]`,
/// truncating the series at a depth where the tail is below 1e-12.
/// A negative mean with margin certifies invertibility.
pub fn egarch_invertibility_check(
    theta: &ThetaVector,
    innovation: &InnovationSpec,
    stream: RngStream,
    n_samples: usize,
) -> Result<ContractionDiagnostic> {
    if theta.model().family != Family::Egarch {
        return Err(Error::Unsupported(
            "invertibility check applies to EGARCH".into(),
        ));
    }
    if n_samples == 0 {
        return Err(Error::Constraint("need n_samples >= 1".into()));
    }
    innovation.validate()?;
    let c = theta.coeffs();
    let (beta, gamma, delta) = (c[1], c[2], c[3]);

    let eps = 1e-12;
    let k_max = if beta == 0.0 {
        0usize
    } else {
        ((eps * (1.0 - beta)).ln() / beta.ln()).ceil().min(50_000.0) as usize
    };
    let tail_bound = if beta == 0.0 {
        0.0
    } else {
        (gamma.abs() + delta) * beta.powi(k_max as i32 + 1) / (1.0 - beta)
    };

    let chunks = 32.min(n_samples);
    let per_chunk = n_samples / chunks;
    let remainder = n_samples % chunks;
    let stats: Vec<Result<(f64, f64, usize)>> = exec::map_indexed(chunks, |chunk| {
        let m = per_chunk + usize::from(chunk < remainder);
        let mut sampler = Sampler::new(innovation, stream.child(chunk as u64))?;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..m {
            let z0 = sampler.next_z();
            let mut series = 0.0;
            let mut bk = 1.0;
            for _ in 0..=k_max {
                let zk = sampler.next_z();
                series += bk * (gamma * zk + delta * zk.abs());
                bk *= beta;
            }
            let inner = 0.5 * (0.5 * series).exp() * (gamma * z0 + delta * z0.abs()) - beta;
            let lambda = beta.max(inner).max(1e-300);
            let v = lambda.ln();
            sum += v;
            sumsq += v * v;
        }
        Ok((sum, sumsq, m))
    });

    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut count = 0usize;
    for s in stats {
        let (a, b, m) = s?;
        sum += a;
        sumsq += b;
        count += m;
    }
    let mean = sum / count as f64;
    let std_error = if count > 1 {
        let var = (sumsq - sum * sum / count as f64) / (count as f64 - 1.0);
        (var.max(0.0) / count as f64).sqrt()
    } else {
        0.0
    };
    Ok(ContractionDiagnostic {
        log_lambda_mean: mean,
        std_error,
        r: 1,
        n: count,
        k_max: Some(k_max),
        tail_bound: Some(tail_bound),
        norm: None,
    })
}

/// Deterministic contraction bound for the AGARCH filter maps:
/// `log||C^r|| / r` for the beta companion matrix, operator norm.
pub fn agarch_contraction(betas: &[f64], r: usize) -> Result<ContractionDiagnostic> {
    if r == 0 {
        return Err(Error::Constraint("need r >= 1".into()));
    }
    let q = betas.len();
    if q == 0 {
        // No volatility feedback: the filter map is constant in s.
        return Ok(ContractionDiagnostic {
            log_lambda_mean: f64::NEG_INFINITY,
            std_error: 0.0,
            r,
            n: 1,
            k_max: None,
            tail_bound: None,
            norm: Some(MatrixNorm::Operator),
        });
    }
    let mut c = DMatrix::<f64>::zeros(q, q);
    for j in 0..q {
        c[(0, j)] = betas[j];
    }
    for row in 1..q {
        c[(row, row - 1)] = 1.0;
    }
    let val = log_norm_power(&c, r, MatrixNorm::Operator) / r as f64;
    Ok(ContractionDiagnostic {
        log_lambda_mean: val,
        std_error: 0.0,
        r,
        n: 1,
        k_max: None,
        tail_bound: None,
        norm: Some(MatrixNorm::Operator),
    })
}

/// Contraction diagnostic for the filter maps. For the AGARCH family the
/// Lipschitz coefficient is bounded by the deterministic `log||C^r||/r`,
/// returned exactly. For EGARCH (r = 1 only; no tractable expression
/// exists for r > 1) the criterion is averaged along the supplied path:
/// `log max{beta, (1/2) exp(-m/2)(gamma X_t + delta |X_t|) - beta}` with
/// `m = alpha (1 - beta)^{-1}`.
pub fn estimate_contraction(
    theta: &ThetaVector,
    path: &PathSample,
    r: usize,
) -> Result<ContractionDiagnostic> {
    if r == 0 {
        return Err(Error::Constraint("need r >= 1".into()));
    }
    let model = theta.model();
    match model.family {
        Family::Garch | Family::Agarch => agarch_contraction(theta.betas(), r),
        Family::Egarch => {
            if r != 1 {
                return Err(Error::Unsupported(
                    "no tractable Lipschitz expression for EGARCH with r > 1".into(),
                ));
            }
            let c = theta.coeffs();
            let (alpha, beta, gamma, delta) = (c[0], c[1], c[2], c[3]);
            let m = alpha / (1.0 - beta);
            let scale = 0.5 * (-m / 2.0).exp();
            let n = path.n();
            if n == 0 {
                return Err(Error::Constraint(
                    "path has no retained observations".into(),
                ));
            }
            let vals: Vec<f64> = (1..=n)
                .map(|t| {
                    let x = path.x[path.presample + t - 1];
                    let inner = scale * (gamma * x + delta * x.abs()) - beta;
                    beta.max(inner).max(1e-300).ln()
                })
                .collect();
            let (mean, se) = mean_and_se(&vals);
            Ok(ContractionDiagnostic {
                log_lambda_mean: mean,
                std_error: se,
                r: 1,
                n,
                k_max: None,
                tail_bound: None,
                norm: None,
            })
        }
    }
}
