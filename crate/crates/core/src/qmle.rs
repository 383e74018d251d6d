//! Box-constrained maximization of the quasi-log-likelihood, the
//! plug-in asymptotic covariance `V0 = (1/4) kurt * M^{-1}`, standard
//! errors and residuals.
//!
//! The optimizer is a projected quasi-Newton: BFGS directions with an
//! Armijo backtracking line search, every trial point projected onto the
//! region (boxes exactly, the beta block through the exact
//! box-plus-halfspace waterfill, the EGARCH cone by nearest-ray
//! projection). Coordinates can be frozen; frozen coordinates are
//! eliminated from the optimization space entirely, which makes a
//! gamma-frozen AGARCH fit reproduce a GARCH fit bit for bit.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec;
use crate::filter::{DeriveOrder, FilterConfig, InitialVol};
use crate::innovations::RngStream;
use crate::likelihood;
use crate::models::{CompactRegion, Family, ModelSpec, ThetaVector};
use crate::sre::{self, ContractionDiagnostic, SpectralRadius};

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Deterministic multi-start count when no explicit init is given.
    pub starts: usize,
    /// Explicit starting point (full coefficient vector); overrides the
    /// multi-start schedule.
    pub init: Option<Vec<f64>>,
    /// Coordinates pinned at fixed values and eliminated from the
    /// optimization space.
    pub frozen: Vec<(usize, f64)>,
    pub max_iter: usize,
    /// Converged when the projected-gradient infinity norm drops below
    /// `grad_tol_scale * max(1, |loglik| / n)`.
    pub grad_tol_scale: f64,
    pub step_tol: f64,
    /// Initial filter state used in every likelihood evaluation.
    pub initial: InitialVol,
    pub warmup_skip: usize,
    pub compute_covariance: bool,
    /// Stream driving the EGARCH invertibility diagnostic at theta_hat.
    pub diag_stream: RngStream,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            starts: 5,
            init: None,
            frozen: Vec::new(),
            max_iter: 300,
            grad_tol_scale: 1e-8,
            step_tol: 1e-10,
            initial: InitialVol::SampleVariance,
            warmup_skip: 0,
            compute_covariance: true,
            diag_stream: RngStream::new(0xd1a6, 0),
        }
    }
}

/// Plug-in covariance estimate. Frozen coordinates carry zero rows,
/// columns and standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    /// Raw asymptotic covariance `V0_hat = (1/4) kurt * M^{-1}`.
    pub v0_hat: DMatrix<f64>,
    /// Per-sample standard errors `sqrt(diag(V0_hat) / n)`.
    pub std_errors: Vec<f64>,
    /// `(1/n) sum (Zhat_t^4 - 1)`.
    pub kurt_hat: f64,
}

#[derive(Debug, Clone)]
pub struct StartRecord {
    pub start: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub error: Option<String>,
}

/// Stationarity/invertibility verdicts evaluated at the fitted point.
#[derive(Debug, Clone)]
pub struct FitDiagnostics {
    pub weak_margin: Option<f64>,
    pub spectral_radius: Option<SpectralRadius>,
    pub contraction: Option<ContractionDiagnostic>,
    pub invertibility: Option<ContractionDiagnostic>,
}

#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub theta_hat: ThetaVector,
    pub loglik: f64,
    pub covariance: Option<CovarianceEstimate>,
    pub covariance_error: Option<String>,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Region constraints active at theta_hat. Nonempty means the
    /// asymptotic-normality theory does not apply (it needs an interior
    /// optimum), so standard errors are unreliable.
    pub active_constraints: Vec<String>,
    pub boundary_warning: bool,
    pub n: usize,
    pub clamp_events: usize,
    pub starts: Vec<StartRecord>,
    pub diagnostics: FitDiagnostics,
}

struct Workspace<'a> {
    model: ModelSpec,
    data: &'a [f64],
    cfg: FilterConfig,
    region: &'a CompactRegion,
    free: Vec<usize>,
    free_mask: Vec<bool>,
    template: Vec<f64>,
    n_terms: f64,
}

impl<'a> Workspace<'a> {
    fn full(&self, x: &DVector<f64>) -> Vec<f64> {
        let mut full = self.template.clone();
        for (i, &k) in self.free.iter().enumerate() {
            full[k] = x[i];
        }
        full
    }

    fn project(&self, x: &mut DVector<f64>) {
        let mut full = self.full(x);
        self.region.project_masked(&mut full, &self.free_mask);
        for (i, &k) in self.free.iter().enumerate() {
            x[i] = full[k];
        }
    }

    /// Negative log-likelihood and its gradient on the free coordinates;
    /// `None` when the point cannot be evaluated.
    fn eval(&self, x: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
        let theta = ThetaVector::new(self.model, self.full(x)).ok()?;
        let v = likelihood::evaluate(&theta, self.data, &self.cfg, DeriveOrder::Gradient).ok()?;
        if !v.loglik.is_finite() {
            return None;
        }
        let score = v.score.expect("gradient order");
        if score.iter().any(|s| !s.is_finite()) {
            return None;
        }
        let g = DVector::from_iterator(self.free.len(), self.free.iter().map(|&k| -score[k]));
        Some((-v.loglik, g))
    }
}

struct StartOutcome {
    x: Option<DVector<f64>>,
    f: f64,
    converged: bool,
    iterations: usize,
    error: Option<String>,
    start_full: Vec<f64>,
}

fn optimize_start(ws: &Workspace, start_full: &[f64], opts: &FitOptions) -> StartOutcome {
    let m = ws.free.len();
    let mut x = DVector::from_iterator(m, ws.free.iter().map(|&k| start_full[k]));
    ws.project(&mut x);
    let Some((mut f, mut g)) = ws.eval(&x) else {
        return StartOutcome {
            x: None,
            f: f64::INFINITY,
            converged: false,
            iterations: 0,
            error: Some("objective not evaluable at start".into()),
            start_full: start_full.to_vec(),
        };
    };
    let mut h_inv = DMatrix::<f64>::identity(m, m);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=opts.max_iter {
        iterations = iter;
        let mut probe = &x - &g;
        ws.project(&mut probe);
        let pg = (&x - &probe).amax();
        let tol = opts.grad_tol_scale * (f.abs() / ws.n_terms).max(1.0);
        if pg < tol {
            converged = true;
            break;
        }

        let mut dir = -(&h_inv * &g);
        let mut steepest = false;
        if dir.dot(&g) >= 0.0 {
            h_inv = DMatrix::identity(m, m);
            dir = -g.clone();
            steepest = true;
        }

        let mut accepted = false;
        let mut step = 1.0_f64;
        for _ in 0..60 {
            let mut xn = &x + &dir * step;
            ws.project(&mut xn);
            let s = &xn - &x;
            if s.amax() == 0.0 {
                break;
            }
            if let Some((fn_, gn)) = ws.eval(&xn) {
                let slope = g.dot(&s);
                if fn_ <= f + 1e-4 * slope.min(0.0) {
                    let y = &gn - &g;
                    let sy = s.dot(&y);
                    if sy > 1e-12 * s.norm() * y.norm() {
                        let rho = 1.0 / sy;
                        let hy = &h_inv * &y;
                        let yhy = y.dot(&hy);
                        h_inv += &s * s.transpose() * (rho * rho * yhy + rho);
                        h_inv -= (&hy * s.transpose() + &s * hy.transpose()) * rho;
                    } else {
                        h_inv = DMatrix::identity(m, m);
                    }
                    let step_small = s.amax() < opts.step_tol;
                    x = xn;
                    f = fn_;
                    g = gn;
                    accepted = true;
                    if step_small {
                        converged = true;
                    }
                    break;
                }
            }
            step *= 0.5;
        }
        if converged {
            break;
        }
        if !accepted {
            if steepest {
                // Not even the projected steepest-descent ray improves:
                // treat as converged-at-tolerance if the projected
                // gradient is nearly flat, otherwise stall out.
                converged = pg < 1e3 * tol;
                break;
            }
            h_inv = DMatrix::identity(m, m);
        }
    }

    StartOutcome {
        x: Some(x),
        f,
        converged,
        iterations,
        error: None,
        start_full: start_full.to_vec(),
    }
}

fn sample_variance(data: &[f64]) -> f64 {
    if data.is_empty() {
        return 1.0;
    }
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    (data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).max(1e-12)
}

/// Deterministic start schedule: a method-of-moments point (alpha0 =
/// 0.1 var(X), alpha mass 0.1, beta mass 0.5, gamma 0) followed by fixed
/// persistence profiles spread over the region.
fn default_starts(model: &ModelSpec, data: &[f64], n_starts: usize) -> Vec<Vec<f64>> {
    let var = sample_variance(data);
    let d = model.dim();
    let mut starts = Vec::new();
    match model.family {
        Family::Garch | Family::Agarch => {
            let profiles: [(f64, f64); 5] = [
                (0.1, 0.5),
                (0.05, 0.9),
                (0.3, 0.3),
                (0.1, 0.6),
                (0.45, 0.1),
            ];
            for &(a_mass, b_mass) in profiles.iter().take(n_starts.max(1)) {
                let mut c = vec![0.0; d];
                c[0] = (var * (1.0 - a_mass - b_mass).max(0.1)).max(1e-6);
                for i in 0..model.p {
                    c[1 + i] = a_mass / model.p as f64;
                }
                for j in 0..model.q {
                    c[1 + model.p + j] = b_mass / model.q as f64;
                }
                starts.push(c);
            }
        }
        Family::Egarch => {
            let profiles: [(f64, f64); 5] = [
                (0.5, 0.3),
                (0.9, 0.1),
                (0.2, 0.5),
                (0.7, 0.2),
                (0.0, 0.8),
            ];
            for &(beta, delta) in profiles.iter().take(n_starts.max(1)) {
                let alpha = (1.0 - beta) * var.ln();
                starts.push(vec![alpha, beta, 0.0, delta]);
            }
        }
    }
    starts
}

/// Maximizes the quasi-log-likelihood over the region and assembles the
/// full estimate report.
pub fn fit(data: &[f64], region: &CompactRegion, options: &FitOptions) -> Result<EstimateReport> {
    let model = *region.model();
    let d = model.dim();
    let p = model.p;
    if data.len() < p {
        return Err(Error::Constraint(format!(
            "need at least {p} presample observations"
        )));
    }
    let n = data.len() - p;
    let floor = model.p.max(model.q) + 10 * d;
    if n < floor {
        return Err(Error::Constraint(format!(
            "need at least {floor} observations beyond the presample to fit, got {n}"
        )));
    }
    for &(k, v) in &options.frozen {
        if k >= d {
            return Err(Error::Constraint(format!(
                "frozen coordinate {k} out of range (d = {d})"
            )));
        }
        if !v.is_finite() {
            return Err(Error::Constraint("frozen values must be finite".into()));
        }
    }

    let mut free_mask = vec![true; d];
    let mut template = vec![0.0; d];
    for &(k, v) in &options.frozen {
        free_mask[k] = false;
        template[k] = v;
    }
    let free: Vec<usize> = (0..d).filter(|k| free_mask[*k]).collect();
    if free.is_empty() {
        return Err(Error::Constraint("every coordinate is frozen".into()));
    }

    let cfg = FilterConfig {
        initial: options.initial.clone(),
        warmup_skip: options.warmup_skip,
        variance_floor: Some(region.variance_floor()),
    };
    let ws = Workspace {
        model,
        data,
        cfg: cfg.clone(),
        region,
        free,
        free_mask,
        template,
        n_terms: (n - options.warmup_skip.min(n)).max(1) as f64,
    };

    let starts: Vec<Vec<f64>> = match &options.init {
        Some(init) => {
            if init.len() != d {
                return Err(Error::Constraint(format!(
                    "init must have {d} coordinates, got {}",
                    init.len()
                )));
            }
            vec![init.clone()]
        }
        None => default_starts(&model, data, options.starts),
    };

    let outcomes: Vec<StartOutcome> =
        exec::map_indexed(starts.len(), |i| optimize_start(&ws, &starts[i], options));

    let records: Vec<StartRecord> = outcomes
        .iter()
        .map(|o| StartRecord {
            start: o.start_full.clone(),
            loglik: -o.f,
            converged: o.converged,
            iterations: o.iterations,
            error: o.error.clone(),
        })
        .collect();

    let best = outcomes
        .iter()
        .filter(|o| o.error.is_none() && o.f.is_finite())
        .min_by(|a, b| a.f.partial_cmp(&b.f).expect("finite objectives"));
    let Some(best) = best else {
        let log = records
            .iter()
            .map(|r| {
                format!(
                    "start {:?}: {}",
                    r.start,
                    r.error.as_deref().unwrap_or("not finite")
                )
            })
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::FitFailure(format!("every start failed: {log}")));
    };

    let theta_hat = ThetaVector::new(model, ws.full(best.x.as_ref().expect("evaluated start")))
        .expect("projected point is admissible");
    let value = likelihood::loglik(&theta_hat, data, &cfg)?;
    let residuals = likelihood::residuals(&theta_hat, data, &cfg)?;

    let (covariance, covariance_error) = if options.compute_covariance {
        match covariance_masked(&theta_hat, data, &cfg, &ws.free) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };

    let frozen_names: Vec<String> = options
        .frozen
        .iter()
        .map(|(k, _)| model.coeff_names()[*k].clone())
        .collect();
    let active_constraints: Vec<String> = region
        .active_constraints(theta_hat.coeffs(), 1e-9)
        .into_iter()
        .filter(|a| !frozen_names.iter().any(|f| a.starts_with(&format!("{f}="))))
        .collect();
    let boundary_warning = !active_constraints.is_empty();

    let diagnostics = diagnose_at(&theta_hat, options.diag_stream)?;

    Ok(EstimateReport {
        theta_hat,
        loglik: value.loglik,
        covariance,
        covariance_error,
        residuals,
        converged: best.converged,
        iterations: best.iterations,
        active_constraints,
        boundary_warning,
        n,
        clamp_events: value.clamp_events,
        starts: records,
        diagnostics,
    })
}

fn diagnose_at(theta: &ThetaVector, stream: RngStream) -> Result<FitDiagnostics> {
    match theta.model().family {
        Family::Garch | Family::Agarch => {
            let margin = crate::models::weak_stationarity_margin(
                theta,
                &crate::innovations::InnovationSpec::Normal,
            )?;
            let spectral = if theta.model().q >= 1 {
                Some(sre::spectral_radius_c(theta.betas())?)
            } else {
                None
            };
            let contraction = Some(sre::agarch_contraction(theta.betas(), 64)?);
            Ok(FitDiagnostics {
                weak_margin: Some(margin),
                spectral_radius: spectral,
                contraction,
                invertibility: None,
            })
        }
        Family::Egarch => {
            let inv = sre::egarch_invertibility_check(theta, &crate::innovations::InnovationSpec::Normal, stream, 20_000)?;
            Ok(FitDiagnostics {
                weak_margin: None,
                spectral_radius: None,
                contraction: None,
                invertibility: Some(inv),
            })
        }
    }
}

fn covariance_masked(
    theta: &ThetaVector,
    data: &[f64],
    cfg: &FilterConfig,
    free: &[usize],
) -> Result<CovarianceEstimate> {
    let d = theta.model().dim();
    let (m_full, kurt) = likelihood::information_pieces(theta, data, cfg)?;
    if kurt <= 0.0 {
        return Err(Error::Covariance(format!(
            "residual fourth moment is degenerate (kurt_hat = {kurt})"
        )));
    }
    let m = free.len();
    let mut info = DMatrix::<f64>::zeros(m, m);
    for (i, &ki) in free.iter().enumerate() {
        for (j, &kj) in free.iter().enumerate() {
            info[(i, j)] = m_full[(ki, kj)];
        }
    }
    let inv = info.clone().try_inverse().ok_or_else(|| {
        let min_eig = info
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Error::Covariance(format!(
            "information matrix is singular (smallest eigenvalue {min_eig:.3e}); \
             the model may be over-parameterized"
        ))
    })?;
    let v0_free = inv * (0.25 * kurt);
    let mut v0 = DMatrix::<f64>::zeros(d, d);
    for (i, &ki) in free.iter().enumerate() {
        for (j, &kj) in free.iter().enumerate() {
            v0[(ki, kj)] = v0_free[(i, j)];
        }
    }
    let n_terms = (data.len() - theta.model().p) as f64;
    let std_errors = (0..d)
        .map(|k| (v0[(k, k)] / n_terms).max(0.0).sqrt())
        .collect();
    Ok(CovarianceEstimate {
        v0_hat: v0,
        std_errors,
        kurt_hat: kurt,
    })
}

/// Plug-in asymptotic covariance at a given parameter (all coordinates
/// free).
pub fn covariance(
    theta: &ThetaVector,
    data: &[f64],
    cfg: &FilterConfig,
) -> Result<CovarianceEstimate> {
    let free: Vec<usize> = (0..theta.model().dim()).collect();
    covariance_masked(theta, data, cfg, &free)
}

/// Residuals `Zhat_t = X_t / sqrt(h_t(theta))`.
pub fn residuals(theta: &ThetaVector, data: &[f64], cfg: &FilterConfig) -> Result<Vec<f64>> {
    likelihood::residuals(theta, data, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innovations::InnovationSpec;
    use crate::sre::{simulate_stationary, SimOptions};

    fn garch11(a0: f64, a1: f64, b1: f64) -> ThetaVector {
        ThetaVector::new(ModelSpec::garch(1, 1).unwrap(), vec![a0, a1, b1]).unwrap()
    }

    fn sim(theta: &ThetaVector, n: usize, seed: u64) -> crate::sre::PathSample {
        simulate_stationary(
            theta,
            &InnovationSpec::Normal,
            RngStream::new(seed, 0),
            n,
            &SimOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn fit_recovers_iid_case() {
        // sigma^2 = 1 data. At alpha1 = 0 the pair (alpha0, beta1) is
        // identified only through alpha0/(1 - beta1), so the fit can
        // land anywhere on that ridge; the implied unconditional
        // variance pins it down, and the per-coordinate checks use the
        // fit's own (ridge-inflated) standard errors.
        let truth = garch11(1.0, 0.0, 0.0);
        let path = sim(&truth, 4000, 1);
        let region = CompactRegion::default_for(*truth.model());
        let report = fit(path.data(), &region, &FitOptions::default()).unwrap();
        let c = report.theta_hat.coeffs();
        let var = {
            let d = path.data();
            let m = d.iter().sum::<f64>() / d.len() as f64;
            d.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / d.len() as f64
        };
        let implied = c[0] / (1.0 - c[2]);
        assert!(
            (implied - var).abs() < 0.05,
            "implied variance {implied} vs {var}"
        );
        assert!(c[1] < 0.02, "alpha1 {}", c[1]);
        if let Some(cov) = &report.covariance {
            assert!((c[0] - var).abs() < 3.0 * cov.std_errors[0].max(0.05));
            assert!(c[1] < 3.0 * cov.std_errors[1].max(0.01));
        }
        assert!(report.loglik.is_finite());
        assert_eq!(report.clamp_events, 0);
    }

    #[test]
    fn fit_recovers_garch_within_standard_errors() {
        let truth = garch11(0.1, 0.2, 0.5);
        let path = sim(&truth, 8000, 2);
        let region = CompactRegion::default_for(*truth.model());
        let report = fit(path.data(), &region, &FitOptions::default()).unwrap();
        assert!(report.converged);
        let se = &report.covariance.as_ref().unwrap().std_errors;
        for (k, &truth_k) in [0.1, 0.2, 0.5].iter().enumerate() {
            let err = (report.theta_hat.coeffs()[k] - truth_k).abs();
            assert!(
                err < 4.0 * se[k],
                "coord {k}: {} vs {truth_k} (se {})",
                report.theta_hat.coeffs()[k],
                se[k]
            );
        }
        // Monotone improvement per start.
        let cfg = FilterConfig {
            variance_floor: Some(region.variance_floor()),
            ..FilterConfig::default()
        };
        for s in &report.starts {
            let t0 = ThetaVector::new(*truth.model(), {
                let mut v = s.start.clone();
                region.project(&mut v);
                v
            })
            .unwrap();
            let l0 = likelihood::loglik(&t0, path.data(), &cfg).unwrap().loglik;
            assert!(s.loglik >= l0 - 1e-9, "start worsened: {} -> {}", l0, s.loglik);
            assert!(report.loglik >= s.loglik - 1e-9);
        }
        // The fitted point satisfies the region constraints exactly.
        assert!(region.contains(report.theta_hat.coeffs()));
        assert!(!report.boundary_warning, "{:?}", report.active_constraints);
        // Residual variance near 1.
        let r = &report.residuals;
        let rv = r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64;
        assert!((rv - 1.0).abs() < 0.05, "residual var {rv}");
    }

    #[test]
    fn agarch_on_garch_data_finds_small_gamma() {
        let truth = garch11(0.1, 0.2, 0.5);
        let path = sim(&truth, 6000, 3);
        let model = ModelSpec::agarch(1, 1).unwrap();
        let region = CompactRegion::default_for(model);
        let report = fit(path.data(), &region, &FitOptions::default()).unwrap();
        let gamma = report.theta_hat.coeffs()[3];
        let se = report.covariance.as_ref().unwrap().std_errors[3];
        assert!(gamma.abs() < 4.0 * se.max(0.02), "gamma {gamma} (se {se})");
    }

    #[test]
    fn nesting_gamma_frozen_agarch_equals_garch() {
        let truth = garch11(0.1, 0.2, 0.5);
        let path = sim(&truth, 3000, 4);

        let g_region = CompactRegion::default_for(ModelSpec::garch(1, 1).unwrap());
        let g_fit = fit(path.data(), &g_region, &FitOptions::default()).unwrap();

        let a_model = ModelSpec::agarch(1, 1).unwrap();
        let a_region = CompactRegion::default_for(a_model);
        let a_opts = FitOptions {
            frozen: vec![(3, 0.0)],
            ..FitOptions::default()
        };
        let a_fit = fit(path.data(), &a_region, &a_opts).unwrap();

        for k in 0..3 {
            let (g, a) = (g_fit.theta_hat.coeffs()[k], a_fit.theta_hat.coeffs()[k]);
            assert_eq!(g, a, "coordinate {k} differs: {g} vs {a}");
        }
        assert_eq!(a_fit.theta_hat.coeffs()[3], 0.0);
        assert_eq!(g_fit.loglik, a_fit.loglik);
    }

    #[test]
    fn scale_equivariance() {
        // Scaling data by c maps (a0, a1, b1) to (c^2 a0, a1, b1).
        let truth = garch11(0.1, 0.2, 0.5);
        let path = sim(&truth, 4000, 5);
        let region = CompactRegion::default_for(*truth.model());
        let base = fit(path.data(), &region, &FitOptions::default()).unwrap();

        let c = 3.0_f64;
        let scaled: Vec<f64> = path.data().iter().map(|x| c * x).collect();
        let scaled_fit = fit(&scaled, &region, &FitOptions::default()).unwrap();

        let b = base.theta_hat.coeffs();
        let s = scaled_fit.theta_hat.coeffs();
        assert!(
            ((s[0] / (c * c)) - b[0]).abs() / b[0] < 1e-4,
            "alpha0: {} vs {}",
            s[0] / (c * c),
            b[0]
        );
        assert!((s[1] - b[1]).abs() / b[1].max(1e-3) < 1e-4, "alpha1");
        assert!((s[2] - b[2]).abs() / b[2].max(1e-3) < 1e-4, "beta1");
    }

    #[test]
    fn covariance_scalar_specialization() {
        // Constant-volatility model, one free coordinate: M = 1/c^2, so
        // V0 = kurt c^2 / 4; for normal Z that approaches c^2 / 2.
        let c_true = 2.0;
        let truth = garch11(c_true, 0.0, 0.0);
        let path = sim(&truth, 50_000, 6);
        let theta = garch11(c_true, 0.0, 0.0);
        let cfg = FilterConfig::default();
        let free = vec![0usize];
        let cov = covariance_masked(&theta, path.data(), &cfg, &free).unwrap();
        let expect = c_true * c_true / 2.0;
        assert!(
            (cov.v0_hat[(0, 0)] - expect).abs() < 0.35,
            "{} vs {expect}",
            cov.v0_hat[(0, 0)]
        );
        assert!(cov.kurt_hat > 0.0);
    }

    #[test]
    fn residuals_at_truth_match_innovations() {
        let truth = garch11(0.1, 0.2, 0.5);
        let path = sim(&truth, 2000, 7);
        let cfg = FilterConfig::default();
        let r = residuals(&truth, path.data(), &cfg).unwrap();
        // Initialization error decays geometrically, so late residuals
        // coincide with the generating innovations.
        for t in 200..=path.n() {
            assert!(
                (r[t - 1] - path.z[path.presample + t - 1]).abs() < 1e-8,
                "t={t}"
            );
        }
        let rv = r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64;
        assert!((rv - 1.0).abs() < 0.1, "residual var {rv}");
    }

    #[test]
    fn egarch_fit_smoke() {
        let truth = ThetaVector::new(ModelSpec::egarch(), vec![-0.2, 0.5, -0.15, 0.4]).unwrap();
        let path = sim(&truth, 6000, 8);
        let region = CompactRegion::default_for(ModelSpec::egarch());
        let report = fit(path.data(), &region, &FitOptions::default()).unwrap();
        assert!(report.loglik.is_finite());
        let c = report.theta_hat.coeffs();
        // Loose recovery bands: EGARCH asymptotics are not pinned by the
        // theory, this only guards against gross optimizer failure.
        assert!((c[1] - 0.5).abs() < 0.2, "beta {}", c[1]);
        assert!((c[3] - 0.4).abs() < 0.2, "delta {}", c[3]);
        assert!(report.diagnostics.invertibility.unwrap().is_contractive());
    }

    #[test]
    fn fit_rejects_short_data() {
        let region = CompactRegion::default_for(ModelSpec::garch(1, 1).unwrap());
        let err = fit(&[0.1; 20], &region, &FitOptions::default());
        assert!(matches!(err, Err(Error::Constraint(_))));
    }

    #[test]
    fn boundary_fit_reports_active_constraints() {
        // Force the optimum onto the boundary by shrinking the region
        // away from the truth.
        let truth = garch11(0.1, 0.2, 0.5);
        let path = sim(&truth, 2000, 9);
        let model = ModelSpec::garch(1, 1).unwrap();
        let region = CompactRegion::new(
            model,
            vec![1e-8, 0.0, 0.0],
            vec![1e8, 0.05, 0.999],
            0.999,
        )
        .unwrap();
        let report = fit(path.data(), &region, &FitOptions::default()).unwrap();
        assert!(report.boundary_warning, "{:?}", report.active_constraints);
        assert!(report
            .active_constraints
            .iter()
            .any(|a| a.contains("alpha1")));
    }
}
