//! The three model families and their volatility maps.
//!
//! For GARCH/AGARCH the squared volatility follows
//! `g(x, s) = alpha0 + sum_i alpha_i (|x_i| - gamma x_i)^2 + sum_j beta_j s_j`
//! with GARCH the `gamma = 0` special case (it shares the AGARCH code path
//! so the two agree bit-for-bit on shared coordinates). EGARCH is carried
//! in the log domain throughout: the filter map is
//! `g(x, s) = alpha + beta s + (gamma x + delta |x|) exp(-s/2)` where `s`
//! is the lagged log squared volatility, and conversion `exp(.)` happens
//! only at the likelihood boundary.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::innovations::InnovationSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Garch,
    Agarch,
    Egarch,
}

/// Model family plus lag orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: Family,
    pub p: usize,
    pub q: usize,
}

impl ModelSpec {
    pub fn new(family: Family, p: usize, q: usize) -> Result<Self> {
        match family {
            Family::Garch | Family::Agarch => {
                if p < 1 {
                    return Err(Error::Constraint(
                        "garch/agarch needs at least one observation lag (p >= 1)".into(),
                    ));
                }
            }
            Family::Egarch => {
                if p != 1 || q != 1 {
                    return Err(Error::Unsupported(
                        "egarch is supported with p = q = 1 only".into(),
                    ));
                }
            }
        }
        Ok(ModelSpec { family, p, q })
    }

    pub fn garch(p: usize, q: usize) -> Result<Self> {
        Self::new(Family::Garch, p, q)
    }

    pub fn agarch(p: usize, q: usize) -> Result<Self> {
        Self::new(Family::Agarch, p, q)
    }

    pub fn egarch() -> Self {
        ModelSpec {
            family: Family::Egarch,
            p: 1,
            q: 1,
        }
    }

    /// Number of parameters.
    pub fn dim(&self) -> usize {
        match self.family {
            Family::Garch => 1 + self.p + self.q,
            Family::Agarch => 2 + self.p + self.q,
            Family::Egarch => 4,
        }
    }

    /// Pre-sample observations the filter consumes before t = 1.
    pub fn presample(&self) -> usize {
        self.p
    }

    /// EGARCH state and filter output live in log volatility.
    pub fn log_domain(&self) -> bool {
        self.family == Family::Egarch
    }

    /// Canonical coefficient order, used in CSV/JSON output.
    pub fn coeff_names(&self) -> Vec<String> {
        match self.family {
            Family::Garch | Family::Agarch => {
                let mut names = vec!["alpha0".to_string()];
                names.extend((1..=self.p).map(|i| format!("alpha{i}")));
                names.extend((1..=self.q).map(|j| format!("beta{j}")));
                if self.family == Family::Agarch {
                    names.push("gamma".to_string());
                }
                names
            }
            Family::Egarch => ["alpha", "beta", "gamma", "delta"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }

    /// Index range of the beta block inside the coefficient vector.
    pub fn beta_range(&self) -> std::ops::Range<usize> {
        match self.family {
            Family::Garch | Family::Agarch => 1 + self.p..1 + self.p + self.q,
            Family::Egarch => 1..2,
        }
    }
}

/// A parameter point. Construction checks the family constraints:
/// AGARCH `alpha0 > 0`, `alpha_i >= 0`, `beta_j >= 0` with
/// `sum beta_j < 1`, `|gamma| <= 1`; EGARCH `0 <= beta < 1`,
/// `delta >= |gamma|`. GARCH is AGARCH without the gamma coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaVector {
    model: ModelSpec,
    coeffs: Vec<f64>,
}

impl ThetaVector {
    pub fn new(model: ModelSpec, coeffs: Vec<f64>) -> Result<Self> {
        let theta = Self::new_relaxed(model, coeffs)?;
        if matches!(model.family, Family::Garch | Family::Agarch) {
            let beta_sum: f64 = theta.betas().iter().sum();
            if beta_sum >= 1.0 {
                return Err(Error::Constraint(format!(
                    "sum of beta coefficients must be < 1, got {beta_sum}"
                )));
            }
        }
        Ok(theta)
    }

    /// Like [`ThetaVector::new`] but without the `sum beta_j < 1` cap, so
    /// diagnostics can evaluate parameters outside the stationarity
    /// region (that is exactly what a region scan probes).
    pub fn new_relaxed(model: ModelSpec, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != model.dim() {
            return Err(Error::Constraint(format!(
                "expected {} coefficients for {:?}({},{}), got {}",
                model.dim(),
                model.family,
                model.p,
                model.q,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Constraint("coefficients must be finite".into()));
        }
        match model.family {
            Family::Garch | Family::Agarch => {
                if coeffs[0] <= 0.0 {
                    return Err(Error::Constraint(format!(
                        "alpha0 must be > 0, got {}",
                        coeffs[0]
                    )));
                }
                for (i, &a) in coeffs[1..=model.p].iter().enumerate() {
                    if a < 0.0 {
                        return Err(Error::Constraint(format!(
                            "alpha{} must be >= 0, got {a}",
                            i + 1
                        )));
                    }
                }
                for (j, &b) in coeffs[model.beta_range()].iter().enumerate() {
                    if b < 0.0 {
                        return Err(Error::Constraint(format!(
                            "beta{} must be >= 0, got {b}",
                            j + 1
                        )));
                    }
                }
                if model.family == Family::Agarch {
                    let gamma = coeffs[model.dim() - 1];
                    if gamma.abs() > 1.0 {
                        return Err(Error::Constraint(format!(
                            "|gamma| must be <= 1, got {gamma}"
                        )));
                    }
                }
            }
            Family::Egarch => {
                let beta = coeffs[1];
                if !(0.0..1.0).contains(&beta) {
                    return Err(Error::Constraint(format!(
                        "egarch beta must be in [0, 1), got {beta}"
                    )));
                }
                let (gamma, delta) = (coeffs[2], coeffs[3]);
                if delta < gamma.abs() {
                    return Err(Error::Constraint(format!(
                        "egarch needs delta >= |gamma|, got delta = {delta}, gamma = {gamma}"
                    )));
                }
            }
        }
        Ok(ThetaVector { model, coeffs })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn alpha0(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.coeffs[1..=self.model.p]
    }

    pub fn betas(&self) -> &[f64] {
        &self.coeffs[self.model.beta_range()]
    }

    /// Asymmetry coefficient; zero for GARCH.
    pub fn gamma(&self) -> f64 {
        match self.model.family {
            Family::Garch => 0.0,
            Family::Agarch => self.coeffs[self.model.dim() - 1],
            Family::Egarch => self.coeffs[2],
        }
    }
}

// ---------------------------------------------------------------------------
// Raw kernels. These trust their inputs (callers validated the theta) and
// run in the filter hot loop.
// ---------------------------------------------------------------------------

#[inline]
fn agarch_gamma(model: &ModelSpec, c: &[f64]) -> f64 {
    if model.family == Family::Agarch {
        c[model.dim() - 1]
    } else {
        0.0
    }
}

pub(crate) fn eval_g_raw(model: &ModelSpec, c: &[f64], x: &[f64], s: &[f64]) -> f64 {
    match model.family {
        Family::Garch | Family::Agarch => {
            let gamma = agarch_gamma(model, c);
            let mut g = c[0];
            for i in 0..model.p {
                let u = x[i].abs() - gamma * x[i];
                g += c[1 + i] * u * u;
            }
            let betas = &c[model.beta_range()];
            for j in 0..model.q {
                g += betas[j] * s[j];
            }
            g
        }
        Family::Egarch => {
            let (alpha, beta, gamma, delta) = (c[0], c[1], c[2], c[3]);
            alpha + beta * s[0] + (gamma * x[0] + delta * x[0].abs()) * (-s[0] / 2.0).exp()
        }
    }
}

pub(crate) fn dg_theta_raw(model: &ModelSpec, c: &[f64], x: &[f64], s: &[f64], out: &mut [f64]) {
    match model.family {
        Family::Garch | Family::Agarch => {
            let gamma = agarch_gamma(model, c);
            out[0] = 1.0;
            let mut dgamma = 0.0;
            for i in 0..model.p {
                let u = x[i].abs() - gamma * x[i];
                out[1 + i] = u * u;
                dgamma += -2.0 * c[1 + i] * x[i] * u;
            }
            for j in 0..model.q {
                out[1 + model.p + j] = s[j];
            }
            if model.family == Family::Agarch {
                out[model.dim() - 1] = dgamma;
            }
        }
        Family::Egarch => {
            let e = (-s[0] / 2.0).exp();
            out[0] = 1.0;
            out[1] = s[0];
            out[2] = x[0] * e;
            out[3] = x[0].abs() * e;
        }
    }
}

pub(crate) fn dg_s_raw(model: &ModelSpec, c: &[f64], x: &[f64], s: &[f64], out: &mut [f64]) {
    match model.family {
        Family::Garch | Family::Agarch => {
            out.copy_from_slice(&c[model.beta_range()]);
        }
        Family::Egarch => {
            let (beta, gamma, delta) = (c[1], c[2], c[3]);
            out[0] = beta - 0.5 * (gamma * x[0] + delta * x[0].abs()) * (-s[0] / 2.0).exp();
        }
    }
}

/// Second derivatives of `g`, split by argument blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondDerivs {
    /// d x d block d^2 g / dtheta dtheta.
    pub theta_theta: DMatrix<f64>,
    /// d x q block d^2 g / dtheta ds.
    pub theta_s: DMatrix<f64>,
    /// q x q block d^2 g / ds ds.
    pub s_s: DMatrix<f64>,
}

impl SecondDerivs {
    /// Assembles the full (d+q) x (d+q) symmetric matrix ordered
    /// `[theta; s]`.
    pub fn full(&self) -> DMatrix<f64> {
        let d = self.theta_theta.nrows();
        let q = self.s_s.nrows();
        let mut m = DMatrix::zeros(d + q, d + q);
        m.view_mut((0, 0), (d, d)).copy_from(&self.theta_theta);
        m.view_mut((0, d), (d, q)).copy_from(&self.theta_s);
        m.view_mut((d, 0), (q, d)).copy_from(&self.theta_s.transpose());
        m.view_mut((d, d), (q, q)).copy_from(&self.s_s);
        m
    }
}

pub(crate) fn d2g_raw(model: &ModelSpec, c: &[f64], x: &[f64], s: &[f64]) -> SecondDerivs {
    let d = model.dim();
    let q = model.q;
    let mut tt = DMatrix::zeros(d, d);
    let mut ts = DMatrix::zeros(d, q);
    let mut ss = DMatrix::zeros(q, q);
    match model.family {
        Family::Garch | Family::Agarch => {
            // g is linear in s, so the only curvature sits in the gamma
            // coordinate: d2g/dgamma2 = 2 sum alpha_i x_i^2 and
            // d2g/dalpha_i dgamma = -2 x_i (|x_i| - gamma x_i).
            // Mixed theta-s entries are the bilinear beta_j rows.
            for j in 0..q {
                ts[(1 + model.p + j, j)] = 1.0;
            }
            if model.family == Family::Agarch {
                let gamma = c[d - 1];
                let mut dgg = 0.0;
                for i in 0..model.p {
                    let u = x[i].abs() - gamma * x[i];
                    tt[(1 + i, d - 1)] = -2.0 * x[i] * u;
                    tt[(d - 1, 1 + i)] = tt[(1 + i, d - 1)];
                    dgg += 2.0 * c[1 + i] * x[i] * x[i];
                }
                tt[(d - 1, d - 1)] = dgg;
            }
        }
        Family::Egarch => {
            let (gamma, delta) = (c[2], c[3]);
            let e = (-s[0] / 2.0).exp();
            ts[(1, 0)] = 1.0;
            ts[(2, 0)] = -0.5 * x[0] * e;
            ts[(3, 0)] = -0.5 * x[0].abs() * e;
            ss[(0, 0)] = 0.25 * (gamma * x[0] + delta * x[0].abs()) * e;
        }
    }
    SecondDerivs {
        theta_theta: tt,
        theta_s: ts,
        s_s: ss,
    }
}

fn check_lags(model: &ModelSpec, x: &[f64], s: &[f64]) -> Result<()> {
    if x.len() != model.p || s.len() != model.q {
        return Err(Error::Constraint(format!(
            "expected {} observation lags and {} volatility lags, got {} and {}",
            model.p,
            model.q,
            x.len(),
            s.len()
        )));
    }
    if !model.log_domain() && s.iter().any(|v| *v < 0.0) {
        return Err(Error::Constraint(
            "squared-volatility lags must be nonnegative".into(),
        ));
    }
    Ok(())
}

/// Evaluates the volatility map at the given lags. For EGARCH the lag and
/// the result are log squared volatilities.
pub fn eval_g(theta: &ThetaVector, x_lags: &[f64], s_lags: &[f64]) -> Result<f64> {
    check_lags(theta.model(), x_lags, s_lags)?;
    Ok(eval_g_raw(theta.model(), theta.coeffs(), x_lags, s_lags))
}

/// Exact partial derivatives of `g` in theta at fixed lags.
pub fn dg_dtheta(theta: &ThetaVector, x_lags: &[f64], s_lags: &[f64]) -> Result<Vec<f64>> {
    check_lags(theta.model(), x_lags, s_lags)?;
    let mut out = vec![0.0; theta.model().dim()];
    dg_theta_raw(theta.model(), theta.coeffs(), x_lags, s_lags, &mut out);
    Ok(out)
}

/// Exact partial derivatives of `g` in the lagged volatility arguments.
pub fn dg_ds(theta: &ThetaVector, x_lags: &[f64], s_lags: &[f64]) -> Result<Vec<f64>> {
    check_lags(theta.model(), x_lags, s_lags)?;
    let mut out = vec![0.0; theta.model().q];
    dg_s_raw(theta.model(), theta.coeffs(), x_lags, s_lags, &mut out);
    Ok(out)
}

/// Exact second derivatives of `g`, by blocks.
pub fn d2g(theta: &ThetaVector, x_lags: &[f64], s_lags: &[f64]) -> Result<SecondDerivs> {
    check_lags(theta.model(), x_lags, s_lags)?;
    Ok(d2g_raw(theta.model(), theta.coeffs(), x_lags, s_lags))
}

/// `1 - [sum_i alpha_i E(|Z|-gamma Z)^2 + sum_j beta_j]`. Positive means
/// the AGARCH process is stationary with a finite second moment; a
/// nonpositive value at `sum beta_j >= 1` reflects that the latter is
/// necessary for stationarity.
pub fn weak_stationarity_margin(theta: &ThetaVector, innovation: &InnovationSpec) -> Result<f64> {
    match theta.model().family {
        Family::Garch | Family::Agarch => {
            let gamma = theta.gamma();
            let m = 1.0 + gamma * gamma - 2.0 * gamma * innovation.moment_signed_abs();
            let load: f64 = theta.alphas().iter().map(|a| a * m).sum::<f64>()
                + theta.betas().iter().sum::<f64>();
            Ok(1.0 - load)
        }
        Family::Egarch => Err(Error::Unsupported(
            "weak-stationarity margin is an AGARCH-family diagnostic".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// Admissible parameter region
// ---------------------------------------------------------------------------

/// A compact region K: per-coordinate closed intervals plus the simplex
/// cap `sum beta_j <= beta_sum_max < 1` (GARCH/AGARCH) or the cone
/// `delta >= |gamma|` (EGARCH).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompactRegion {
    model: ModelSpec,
    lower: Vec<f64>,
    upper: Vec<f64>,
    beta_sum_max: f64,
}

pub const DEFAULT_BETA_SUM_MAX: f64 = 0.999;
pub const DEFAULT_ALPHA0_LOWER: f64 = 1e-8;

impl CompactRegion {
    pub fn new(
        model: ModelSpec,
        lower: Vec<f64>,
        upper: Vec<f64>,
        beta_sum_max: f64,
    ) -> Result<Self> {
        let d = model.dim();
        if lower.len() != d || upper.len() != d {
            return Err(Error::Constraint(format!(
                "region bounds must have {d} coordinates"
            )));
        }
        for k in 0..d {
            if !(lower[k].is_finite() && upper[k].is_finite()) || lower[k] > upper[k] {
                return Err(Error::Constraint(format!(
                    "invalid bounds for coordinate {k}: [{}, {}]",
                    lower[k], upper[k]
                )));
            }
        }
        match model.family {
            Family::Garch | Family::Agarch => {
                if lower[0] <= 0.0 {
                    return Err(Error::Constraint(
                        "alpha0 lower bound must be strictly positive".into(),
                    ));
                }
                if !(0.0 < beta_sum_max && beta_sum_max < 1.0) {
                    return Err(Error::Constraint(format!(
                        "beta_sum_max must lie in (0, 1), got {beta_sum_max}"
                    )));
                }
                for j in model.beta_range() {
                    if lower[j] < 0.0 {
                        return Err(Error::Constraint("beta lower bounds must be >= 0".into()));
                    }
                }
                if model.family == Family::Agarch {
                    let g = d - 1;
                    if lower[g] < -1.0 || upper[g] > 1.0 {
                        return Err(Error::Constraint("gamma bounds must lie in [-1, 1]".into()));
                    }
                }
            }
            Family::Egarch => {
                if lower[1] < 0.0 || upper[1] >= 1.0 {
                    return Err(Error::Constraint(
                        "egarch beta bounds must lie in [0, 1)".into(),
                    ));
                }
                if upper[3] < 0.0 {
                    return Err(Error::Constraint(
                        "egarch delta upper bound must be >= 0 (cone delta >= |gamma|)".into(),
                    ));
                }
            }
        }
        Ok(CompactRegion {
            model,
            lower,
            upper,
            beta_sum_max,
        })
    }

    /// Wide defaults: `alpha0 in [1e-8, 1e8]`, `alpha_i in [0, 10]`,
    /// `beta_j in [0, 0.999]` with cap 0.999, `gamma in [-1, 1]`; EGARCH
    /// `alpha in [-20, 20]`, `beta in [0, 0.999]`, `gamma in [-5, 5]`,
    /// `delta in [0, 5]`.
    pub fn default_for(model: ModelSpec) -> Self {
        match model.family {
            Family::Garch | Family::Agarch => {
                let d = model.dim();
                let mut lower = vec![0.0; d];
                let mut upper = vec![10.0; d];
                lower[0] = DEFAULT_ALPHA0_LOWER;
                upper[0] = 1e8;
                for j in model.beta_range() {
                    upper[j] = DEFAULT_BETA_SUM_MAX;
                }
                if model.family == Family::Agarch {
                    lower[d - 1] = -1.0;
                    upper[d - 1] = 1.0;
                }
                CompactRegion {
                    model,
                    lower,
                    upper,
                    beta_sum_max: DEFAULT_BETA_SUM_MAX,
                }
            }
            Family::Egarch => CompactRegion {
                model,
                lower: vec![-20.0, 0.0, -5.0, 0.0],
                upper: vec![20.0, DEFAULT_BETA_SUM_MAX, 5.0, 5.0],
                beta_sum_max: DEFAULT_BETA_SUM_MAX,
            },
        }
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn beta_sum_max(&self) -> f64 {
        self.beta_sum_max
    }

    pub fn contains(&self, coeffs: &[f64]) -> bool {
        if coeffs.len() != self.model.dim() {
            return false;
        }
        for k in 0..coeffs.len() {
            if coeffs[k] < self.lower[k] || coeffs[k] > self.upper[k] {
                return false;
            }
        }
        match self.model.family {
            Family::Garch | Family::Agarch => {
                let sum: f64 = coeffs[self.model.beta_range()].iter().sum();
                sum <= self.beta_sum_max + 1e-10
            }
            Family::Egarch => coeffs[3] >= coeffs[2].abs() - 1e-12,
        }
    }

    /// Euclidean projection onto the region (box blocks exactly; the beta
    /// block via the exact KKT waterfill for box-plus-halfspace; the
    /// EGARCH cone by nearest-ray projection followed by box clamping).
    pub fn project(&self, coeffs: &mut [f64]) {
        let free = vec![true; coeffs.len()];
        self.project_masked(coeffs, &free);
    }

    /// Projection that leaves `free[k] == false` coordinates untouched
    /// (they still count toward the beta cap).
    pub fn project_masked(&self, coeffs: &mut [f64], free: &[bool]) {
        let clamp = |v: f64, lo: f64, hi: f64| v.max(lo).min(hi);
        match self.model.family {
            Family::Garch | Family::Agarch => {
                let beta_range = self.model.beta_range();
                for k in 0..coeffs.len() {
                    if free[k] && !beta_range.contains(&k) {
                        coeffs[k] = clamp(coeffs[k], self.lower[k], self.upper[k]);
                    }
                }
                // Beta block: x_j = clamp(b_j - lambda) with the smallest
                // lambda >= 0 making the capped sum feasible.
                let frozen_sum: f64 = beta_range
                    .clone()
                    .filter(|k| !free[*k])
                    .map(|k| coeffs[k])
                    .sum();
                let cap = self.beta_sum_max - frozen_sum;
                let js: Vec<usize> = beta_range.filter(|k| free[*k]).collect();
                let sum_at = |coeffs: &[f64], lambda: f64| -> f64 {
                    js.iter()
                        .map(|&k| clamp(coeffs[k] - lambda, self.lower[k], self.upper[k]))
                        .sum()
                };
                if sum_at(coeffs, 0.0) <= cap {
                    for &k in &js {
                        coeffs[k] = clamp(coeffs[k], self.lower[k], self.upper[k]);
                    }
                } else {
                    let mut lo = 0.0;
                    let mut hi = js
                        .iter()
                        .map(|&k| coeffs[k] - self.lower[k])
                        .fold(0.0_f64, f64::max)
                        .max(1.0);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if sum_at(coeffs, mid) > cap {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    for &k in &js {
                        coeffs[k] = clamp(coeffs[k] - hi, self.lower[k], self.upper[k]);
                    }
                }
            }
            Family::Egarch => {
                for k in 0..coeffs.len() {
                    if free[k] {
                        coeffs[k] = clamp(coeffs[k], self.lower[k], self.upper[k]);
                    }
                }
                if free[2] && free[3] && coeffs[3] < coeffs[2].abs() {
                    let (g, d) = (coeffs[2], coeffs[3]);
                    if d <= -g.abs() {
                        coeffs[2] = 0.0;
                        coeffs[3] = 0.0;
                    } else {
                        let m = 0.5 * (g.abs() + d);
                        coeffs[2] = g.signum() * m;
                        coeffs[3] = m;
                    }
                    coeffs[2] = clamp(coeffs[2], self.lower[2], self.upper[2]);
                    coeffs[3] = clamp(coeffs[3], self.lower[3], self.upper[3]);
                    if coeffs[3] < coeffs[2].abs() {
                        coeffs[2] = coeffs[2].signum() * coeffs[3];
                    }
                } else if free[3] && coeffs[3] < coeffs[2].abs() {
                    coeffs[3] = clamp(coeffs[2].abs(), self.lower[3], self.upper[3]);
                } else if free[2] && coeffs[3] < coeffs[2].abs() {
                    coeffs[2] = coeffs[2].signum() * coeffs[3];
                }
            }
        }
    }

    /// The K-implied lower bound on the variance scale: the alpha0 lower
    /// bound for GARCH/AGARCH (condition "g bounded below" made
    /// concrete), and for EGARCH a guard band below
    /// `exp(inf_K alpha (1-beta)^{-1})`, since the log state only reaches
    /// that bound eventually.
    pub fn variance_floor(&self) -> f64 {
        match self.model.family {
            Family::Garch | Family::Agarch => self.lower[0],
            Family::Egarch => {
                let corners = [
                    self.lower[0] / (1.0 - self.lower[1]),
                    self.lower[0] / (1.0 - self.upper[1]),
                    self.upper[0] / (1.0 - self.lower[1]),
                    self.upper[0] / (1.0 - self.upper[1]),
                ];
                let m = corners.iter().copied().fold(f64::INFINITY, f64::min);
                (m - 30.0).exp().max(1e-290)
            }
        }
    }

    /// Names of coordinates sitting on the boundary (within `tol`).
    pub fn active_constraints(&self, coeffs: &[f64], tol: f64) -> Vec<String> {
        let names = self.model.coeff_names();
        let mut active = Vec::new();
        for k in 0..coeffs.len() {
            if (coeffs[k] - self.lower[k]).abs() <= tol {
                active.push(format!("{}=lower", names[k]));
            } else if (coeffs[k] - self.upper[k]).abs() <= tol {
                active.push(format!("{}=upper", names[k]));
            }
        }
        match self.model.family {
            Family::Garch | Family::Agarch => {
                let sum: f64 = coeffs[self.model.beta_range()].iter().sum();
                if (sum - self.beta_sum_max).abs() <= tol {
                    active.push("beta_sum=cap".to_string());
                }
            }
            Family::Egarch => {
                if (coeffs[3] - coeffs[2].abs()).abs() <= tol {
                    active.push("delta=|gamma|".to_string());
                }
            }
        }
        active
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innovations::RngStream;
    use proptest::prelude::*;

    fn fd_grad<F: Fn(&[f64]) -> f64>(f: F, point: &[f64], h: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(point.len());
        let mut work = point.to_vec();
        for k in 0..point.len() {
            work[k] = point[k] + h;
            let up = f(&work);
            work[k] = point[k] - h;
            let dn = f(&work);
            work[k] = point[k];
            out.push((up - dn) / (2.0 * h));
        }
        out
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(1e-8_f64, |m, v| m.max(v.abs()));
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0_f64, f64::max)
            / scale
    }

    #[test]
    fn agarch_eval_examples() {
        let m = ModelSpec::agarch(1, 1).unwrap();
        let constant = ThetaVector::new(m, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(eval_g(&constant, &[3.7], &[9.9]).unwrap(), 1.0);

        let theta = ThetaVector::new(m, vec![0.1, 0.2, 0.5, 0.3]).unwrap();
        let g = eval_g(&theta, &[1.0], &[2.0]).unwrap();
        assert!((g - 1.198).abs() < 1e-15, "{g}");
    }

    #[test]
    fn agarch_gradient_example() {
        let m = ModelSpec::agarch(1, 1).unwrap();
        let theta = ThetaVector::new(m, vec![0.1, 0.2, 0.5, 0.3]).unwrap();
        let d = dg_dtheta(&theta, &[1.0], &[2.0]).unwrap();
        let expected = [1.0, 0.49, 2.0, -0.28];
        assert!(rel_err(&d, &expected) < 1e-14, "{d:?}");

        // gamma-partial vanishes when alpha1 = 0.
        let t0 = ThetaVector::new(m, vec![0.1, 0.0, 0.5, 0.3]).unwrap();
        assert_eq!(dg_dtheta(&t0, &[1.0], &[2.0]).unwrap()[3], 0.0);
    }

    #[test]
    fn dg_ds_examples() {
        let m = ModelSpec::agarch(1, 2).unwrap();
        let theta = ThetaVector::new(m, vec![0.1, 0.2, 0.3, 0.2, 0.0]).unwrap();
        assert_eq!(dg_ds(&theta, &[1.0], &[2.0, 3.0]).unwrap(), vec![0.3, 0.2]);

        let e = ModelSpec::egarch();
        let t1 = ThetaVector::new(e, vec![0.0, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(dg_ds(&t1, &[1.3], &[0.7]).unwrap(), vec![0.5]);
        let t2 = ThetaVector::new(e, vec![0.0, 0.5, 0.0, 1.0]).unwrap();
        assert_eq!(dg_ds(&t2, &[1.0], &[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn d2g_agarch_structure() {
        let m = ModelSpec::agarch(2, 2).unwrap();
        let theta =
            ThetaVector::new(m, vec![0.1, 0.2, 0.1, 0.3, 0.2, 0.4]).unwrap();
        let x = [1.0, -0.5];
        let s = [2.0, 1.5];
        let d2 = d2g(&theta, &x, &s).unwrap();
        // d2g/dgamma2 = 2 sum alpha_i x_i^2
        let expected = 2.0 * (0.2 * 1.0 + 0.1 * 0.25);
        assert!((d2.theta_theta[(5, 5)] - expected).abs() < 1e-15);
        // beta_j rows pair with their own lag only.
        assert_eq!(d2.theta_s[(3, 0)], 1.0);
        assert_eq!(d2.theta_s[(3, 1)], 0.0);
        assert_eq!(d2.theta_s[(4, 1)], 1.0);
        assert_eq!(d2.s_s, DMatrix::zeros(2, 2));
        let full = d2.full();
        assert_eq!(full, full.transpose());
    }

    fn random_point(model: &ModelSpec, rs: RngStream) -> (ThetaVector, Vec<f64>, Vec<f64>) {
        let z = crate::innovations::draw(
            &InnovationSpec::Uniform,
            rs,
            model.dim() + model.p + model.q,
        )
        .unwrap();
        let unit = |v: f64| (v / 1.75 + 1.0) / 2.0; // map to (0, 1)
        let mut c = vec![0.0; model.dim()];
        match model.family {
            Family::Garch | Family::Agarch => {
                c[0] = 0.05 + unit(z[0]);
                for i in 0..model.p {
                    c[1 + i] = 0.4 * unit(z[1 + i]) / model.p as f64;
                }
                for j in 0..model.q {
                    c[1 + model.p + j] = 0.5 * unit(z[1 + model.p + j]) / model.q as f64;
                }
                if model.family == Family::Agarch {
                    c[model.dim() - 1] = unit(z[model.dim() - 1]) * 1.6 - 0.8;
                }
            }
            Family::Egarch => {
                c[0] = unit(z[0]) - 0.5;
                c[1] = 0.9 * unit(z[1]);
                c[3] = 0.2 + 0.6 * unit(z[3]);
                c[2] = (unit(z[2]) * 2.0 - 1.0) * c[3] * 0.9;
            }
        }
        let theta = ThetaVector::new(*model, c).unwrap();
        let x: Vec<f64> = z[..model.p].iter().map(|v| v * 1.3).collect();
        let s: Vec<f64> = if model.log_domain() {
            z[..model.q].iter().map(|v| v * 0.8).collect()
        } else {
            z[..model.q].iter().map(|v| 0.5 + unit(*v)).collect()
        };
        (theta, x, s)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let specs = [
            ModelSpec::agarch(1, 1).unwrap(),
            ModelSpec::agarch(2, 2).unwrap(),
            ModelSpec::garch(1, 1).unwrap(),
            ModelSpec::egarch(),
        ];
        for model in specs {
            for k in 0..20u64 {
                let (theta, x, s) = random_point(&model, RngStream::new(777, k));
                let c = theta.coeffs().to_vec();
                let g_of_theta =
                    |t: &[f64]| eval_g_raw(&model, t, &x, &s);
                let g_of_s = |sv: &[f64]| eval_g_raw(&model, &c, &x, sv);

                let fd_t = fd_grad(g_of_theta, &c, 1e-6);
                let an_t = dg_dtheta(&theta, &x, &s).unwrap();
                assert!(
                    rel_err(&an_t, &fd_t) < 1e-5,
                    "{model:?} theta-grad mismatch: {an_t:?} vs {fd_t:?}"
                );

                let fd_s = fd_grad(g_of_s, &s, 1e-6);
                let an_s = dg_ds(&theta, &x, &s).unwrap();
                assert!(
                    rel_err(&an_s, &fd_s) < 1e-5,
                    "{model:?} s-grad mismatch: {an_s:?} vs {fd_s:?}"
                );

                // Second derivatives against finite differences of the
                // analytic first derivatives.
                let d2 = d2g(&theta, &x, &s).unwrap();
                let d = model.dim();
                for k2 in 0..d {
                    let dg_k = |t: &[f64]| {
                        let mut out = vec![0.0; d];
                        dg_theta_raw(&model, t, &x, &s, &mut out);
                        out[k2]
                    };
                    let fd_row = fd_grad(dg_k, &c, 1e-5);
                    let an_row: Vec<f64> =
                        (0..d).map(|j| d2.theta_theta[(k2, j)]).collect();
                    assert!(
                        rel_err(&an_row, &fd_row) < 1e-4,
                        "{model:?} theta-theta row {k2}: {an_row:?} vs {fd_row:?}"
                    );
                    let dg_k_s = |sv: &[f64]| {
                        let mut out = vec![0.0; d];
                        dg_theta_raw(&model, &c, &x, sv, &mut out);
                        out[k2]
                    };
                    let fd_ts = fd_grad(dg_k_s, &s, 1e-5);
                    let an_ts: Vec<f64> =
                        (0..model.q).map(|j| d2.theta_s[(k2, j)]).collect();
                    assert!(
                        rel_err(&an_ts, &fd_ts) < 1e-4,
                        "{model:?} theta-s row {k2}: {an_ts:?} vs {fd_ts:?}"
                    );
                }
                for i in 0..model.q {
                    let ds_i = |sv: &[f64]| {
                        let mut out = vec![0.0; model.q];
                        dg_s_raw(&model, &c, &x, sv, &mut out);
                        out[i]
                    };
                    let fd_ss = fd_grad(ds_i, &s, 1e-5);
                    let an_ss: Vec<f64> = (0..model.q).map(|j| d2.s_s[(i, j)]).collect();
                    assert!(
                        rel_err(&an_ss, &fd_ss) < 1e-4,
                        "{model:?} s-s row {i}: {an_ss:?} vs {fd_ss:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn margin_examples() {
        let garch = ModelSpec::garch(1, 1).unwrap();
        let t = ThetaVector::new(garch, vec![0.1, 0.2, 0.5]).unwrap();
        let m = weak_stationarity_margin(&t, &InnovationSpec::Normal).unwrap();
        assert!((m - 0.3).abs() < 1e-15);

        let agarch = ModelSpec::agarch(1, 1).unwrap();
        let t = ThetaVector::new(agarch, vec![0.1, 0.2, 0.5, 0.3]).unwrap();
        let m = weak_stationarity_margin(&t, &InnovationSpec::Normal).unwrap();
        assert!((m - 0.282).abs() < 1e-15, "{m}");

        // sum beta >= 1 forces a nonpositive margin whatever alpha is.
        let t = ThetaVector::new_relaxed(garch, vec![0.1, 0.0, 1.2]).unwrap();
        assert!(weak_stationarity_margin(&t, &InnovationSpec::Normal).unwrap() <= 0.0);
        assert!(ThetaVector::new(garch, vec![0.1, 0.0, 1.2]).is_err());
    }

    #[test]
    fn theta_constraints() {
        let m = ModelSpec::agarch(1, 1).unwrap();
        assert!(ThetaVector::new(m, vec![0.0, 0.2, 0.5, 0.0]).is_err());
        assert!(ThetaVector::new(m, vec![0.1, -0.1, 0.5, 0.0]).is_err());
        assert!(ThetaVector::new(m, vec![0.1, 0.2, 0.5, 1.5]).is_err());
        let e = ModelSpec::egarch();
        assert!(ThetaVector::new(e, vec![0.0, 1.0, 0.0, 0.5]).is_err());
        assert!(ThetaVector::new(e, vec![0.0, 0.5, 0.6, 0.5]).is_err());
        assert!(ModelSpec::new(Family::Egarch, 2, 1).is_err());
    }

    #[test]
    fn region_projection() {
        let m = ModelSpec::agarch(1, 2).unwrap();
        let region = CompactRegion::default_for(m);
        let mut x = vec![-0.5, 12.0, 0.9, 0.8, 2.0];
        region.project(&mut x);
        assert!(region.contains(&x), "{x:?}");
        let sum: f64 = x[2..4].iter().sum();
        assert!(sum <= region.beta_sum_max() + 1e-10);
        // Projection is idempotent.
        let mut y = x.clone();
        region.project(&mut y);
        assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-12));

        let e = CompactRegion::default_for(ModelSpec::egarch());
        let mut t = vec![0.0, 0.5, 0.8, 0.2];
        e.project(&mut t);
        assert!(e.contains(&t), "{t:?}");
        assert!(t[3] >= t[2].abs());
    }

    proptest! {
        // GARCH and AGARCH-with-gamma-0 share the evaluation path, so the
        // shared coordinates must agree bit for bit.
        #[test]
        fn garch_is_agarch_with_gamma_zero(
            a0 in 0.01f64..2.0, a1 in 0.0f64..0.9, b1 in 0.0f64..0.9,
            x in -3.0f64..3.0, s in 0.01f64..4.0
        ) {
            let g = ThetaVector::new(ModelSpec::garch(1, 1).unwrap(), vec![a0, a1, b1]).unwrap();
            let a = ThetaVector::new(ModelSpec::agarch(1, 1).unwrap(), vec![a0, a1, b1, 0.0]).unwrap();
            prop_assert_eq!(eval_g(&g, &[x], &[s]).unwrap(), eval_g(&a, &[x], &[s]).unwrap());
            let dg = dg_dtheta(&g, &[x], &[s]).unwrap();
            let da = dg_dtheta(&a, &[x], &[s]).unwrap();
            prop_assert_eq!(&dg[..], &da[..3]);
            prop_assert_eq!(dg_ds(&g, &[x], &[s]).unwrap(), dg_ds(&a, &[x], &[s]).unwrap());
            // eval is bounded below by alpha0 on admissible input.
            prop_assert!(eval_g(&a, &[x], &[s]).unwrap() >= a0);
            // Sign symmetry at gamma = 0.
            prop_assert_eq!(eval_g(&a, &[x], &[s]).unwrap(), eval_g(&a, &[-x], &[s]).unwrap());
        }
    }
}
