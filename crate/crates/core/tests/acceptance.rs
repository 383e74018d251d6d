//! Acceptance suite: one test per criterion, each printing a pass line
//! with its elapsed time. Tolerances are pinned in the asserts.

use std::time::Instant;

use volqml::filter::{
    agarch_series_h, filter_error_decay, run_filter, DeriveOrder, FilterConfig, InitialVol,
};
use volqml::innovations::{draw, InnovationSpec, RngStream, SQRT_2_OVER_PI};
use volqml::likelihood::{hessian, loglik, score};
use volqml::mc::{run, ExperimentKind, ExperimentPlan};
use volqml::models::{CompactRegion, ModelSpec, ThetaVector};
use volqml::qmle::{fit, FitOptions};
use volqml::sre::{
    egarch_invertibility_check, log_norm_power, lyapunov_agarch, simulate_stationary,
    spectral_radius_c, MatrixNorm, SimOptions,
};

/// psi(1/2) + ln 2 = E log Z^2 for standard normal Z.
const E_LOG_CHI2: f64 = -1.270_362_845_461_478_2;

fn garch11(a0: f64, a1: f64, b1: f64) -> ThetaVector {
    ThetaVector::new(ModelSpec::garch(1, 1).unwrap(), vec![a0, a1, b1]).unwrap()
}

fn done(id: u32, name: &str, t0: Instant, budget_s: f64) {
    let elapsed = t0.elapsed().as_secs_f64();
    println!("acceptance {id:2} {name}: pass ({elapsed:.2} s)");
    assert!(
        elapsed < budget_s,
        "criterion {id} exceeded its runtime budget: {elapsed:.2} s > {budget_s} s"
    );
}

#[test]
fn criterion_01_exact_filter_decay() {
    let t0 = Instant::now();
    let theta = garch11(0.3, 0.2, 0.5);
    let path = simulate_stationary(
        &theta,
        &InnovationSpec::Normal,
        RngStream::new(101, 0),
        120,
        &SimOptions::default(),
    )
    .unwrap();
    let cfg = FilterConfig {
        initial: InitialVol::Fixed(vec![path.sigma2[0] + 1e6]),
        ..FilterConfig::default()
    };
    let decay = filter_error_decay(&theta, &path, &cfg).unwrap();
    for t in 0..40 {
        let ratio = decay.gaps[t + 1] / decay.gaps[t];
        assert!(
            (ratio - 0.5).abs() < 1e-9,
            "step {t}: gap ratio {ratio} differs from beta1 = 0.5"
        );
    }
    done(1, "exact filter decay", t0, 1.0);
}

fn fd_vec<F: Fn(&[f64]) -> f64>(f: F, point: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(point.len());
    let mut w = point.to_vec();
    for k in 0..point.len() {
        w[k] = point[k] + h;
        let up = f(&w);
        w[k] = point[k] - h;
        let dn = f(&w);
        w[k] = point[k];
        out.push((up - dn) / (2.0 * h));
    }
    out
}

/// Random admissible interior point for the given family.
fn random_theta(model: &ModelSpec, tag: u64) -> ThetaVector {
    let u = draw(&InnovationSpec::Uniform, RngStream::new(202, tag), model.dim()).unwrap();
    let unit = |v: f64| (v / 1.7320508075688772 + 1.0) / 2.0;
    let mut c = vec![0.0; model.dim()];
    match model.family {
        volqml::models::Family::Egarch => {
            c[0] = unit(u[0]) - 0.5;
            c[1] = 0.1 + 0.7 * unit(u[1]);
            c[3] = 0.2 + 0.5 * unit(u[3]);
            c[2] = (2.0 * unit(u[2]) - 1.0) * 0.8 * c[3];
        }
        _ => {
            c[0] = 0.1 + unit(u[0]);
            for i in 0..model.p {
                c[1 + i] = 0.05 + 0.3 * unit(u[1 + i]) / model.p as f64;
            }
            for j in 0..model.q {
                c[1 + model.p + j] = 0.05 + 0.5 * unit(u[1 + model.p + j]) / model.q as f64;
            }
            if model.dim() == 2 + model.p + model.q {
                c[model.dim() - 1] = (2.0 * unit(u[model.dim() - 1]) - 1.0) * 0.8;
            }
        }
    }
    ThetaVector::new(*model, c).unwrap()
}

#[test]
fn criterion_02_gradient_hessian_oracle() {
    let t0 = Instant::now();
    let models = [
        ModelSpec::agarch(1, 1).unwrap(),
        ModelSpec::agarch(2, 2).unwrap(),
        ModelSpec::egarch(),
    ];
    for (mi, model) in models.iter().enumerate() {
        // One simulated path of length 500 per model family.
        let gen = random_theta(model, 1000 + mi as u64);
        let path = simulate_stationary(
            &gen,
            &InnovationSpec::Normal,
            RngStream::new(203, mi as u64),
            500,
            &SimOptions::default(),
        )
        .unwrap();
        let data = path.data();
        let cfg = FilterConfig::default();
        for k in 0..10u64 {
            let theta = random_theta(model, 100 * (mi as u64 + 1) + k);
            let coeffs = theta.coeffs().to_vec();
            let ll = |c: &[f64]| {
                let th = ThetaVector::new_relaxed(*model, c.to_vec()).unwrap();
                loglik(&th, data, &cfg).unwrap().loglik
            };
            let an = score(&theta, data, &cfg).unwrap();
            let fd = fd_vec(ll, &coeffs, 1e-6);
            let scale = fd.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            for j in 0..model.dim() {
                let rel = (an[j] - fd[j]).abs() / scale;
                assert!(
                    rel < 1e-5,
                    "{model:?} point {k} score[{j}]: rel err {rel:.2e}"
                );
            }

            let sc = |c: &[f64], j: usize| {
                let th = ThetaVector::new_relaxed(*model, c.to_vec()).unwrap();
                score(&th, data, &cfg).unwrap()[j]
            };
            let h = hessian(&theta, data, &cfg).unwrap();
            let hscale = h.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            for j in 0..model.dim() {
                let fd_row = fd_vec(|c| sc(c, j), &coeffs, 1e-5);
                for l in 0..model.dim() {
                    let rel = (h[(j, l)] - fd_row[l]).abs() / hscale;
                    assert!(
                        rel < 1e-4,
                        "{model:?} point {k} hessian[{j},{l}]: rel err {rel:.2e}"
                    );
                }
            }
        }
    }
    done(2, "score/hessian vs finite differences", t0, 10.0);
}

#[test]
fn criterion_03_lyapunov_oracle() {
    let t0 = Instant::now();
    // Closed form at beta1 = 0: rho = log alpha1 + psi(1/2) + log 2.
    let theta = garch11(0.3, 0.5, 0.0);
    let est = lyapunov_agarch(
        &theta,
        &InnovationSpec::Normal,
        RngStream::new(303, 0),
        10_000,
        50,
        MatrixNorm::Frobenius,
    )
    .unwrap();
    let exact = 0.5_f64.ln() + E_LOG_CHI2;
    assert!((exact + 1.9635).abs() < 1e-4, "sanity: {exact}");
    assert!(
        (est.rho_hat - exact).abs() < 3.0 * est.std_error,
        "MC {} +- {} does not cover {exact}",
        est.rho_hat,
        est.std_error
    );

    // Deterministic product at alpha1 = 0: exactly log beta1.
    let det = lyapunov_agarch(
        &garch11(0.3, 0.0, 0.5),
        &InnovationSpec::Normal,
        RngStream::new(303, 1),
        10_000,
        50,
        MatrixNorm::Frobenius,
    )
    .unwrap();
    assert!(
        (det.rho_hat - 0.5_f64.ln()).abs() < 1e-12,
        "{}",
        det.rho_hat
    );
    done(3, "lyapunov closed forms", t0, 30.0);
}

#[test]
fn criterion_04_spectral_radius_bound_and_gelfand() {
    let t0 = Instant::now();
    // q = 1 is the equality case rho = beta1 = bound; the strict bound
    // and the Gelfand check run over q in 2..=5.
    let s1 = spectral_radius_c(&[0.7]).unwrap();
    assert_eq!(s1.rho, s1.bound);

    let u = draw(&InnovationSpec::Uniform, RngStream::new(404, 0), 700).unwrap();
    let unit = |v: f64| (v / 1.7320508075688772 + 1.0) / 2.0;
    let mut idx = 0;
    let mut take = || {
        let v = unit(u[idx]);
        idx += 1;
        v
    };
    for case in 0..100 {
        let q = 2 + (take() * 4.0) as usize % 4;
        let target = 0.15 + 0.8 * take();
        let raw: Vec<f64> = (0..q).map(|_| 0.05 + take()).collect();
        let sum: f64 = raw.iter().sum();
        let betas: Vec<f64> = raw.iter().map(|b| b * target / sum).collect();
        let s = spectral_radius_c(&betas).unwrap();
        assert!(
            s.rho < s.bound,
            "case {case}: rho {} >= bound {} for {betas:?}",
            s.rho,
            s.bound
        );
        // Gelfand: log||C^64||/64 within 0.05 of log rho(C).
        let mut c = nalgebra::DMatrix::<f64>::zeros(q, q);
        for j in 0..q {
            c[(0, j)] = betas[j];
        }
        for r in 1..q {
            c[(r, r - 1)] = 1.0;
        }
        let gelfand = log_norm_power(&c, 64, MatrixNorm::Operator) / 64.0;
        let gap = gelfand - s.rho.ln();
        assert!(
            (0.0..0.05).contains(&gap) || gap.abs() < 0.05,
            "case {case}: gelfand {gelfand} vs log rho {} (gap {gap})",
            s.rho.ln()
        );
    }
    done(4, "spectral radius bound + gelfand", t0, 5.0);
}

#[test]
fn criterion_05_series_vs_recursion_oracle() {
    let t0 = Instant::now();
    for (name, model, coeffs) in [
        ("agarch(1,1)", ModelSpec::agarch(1, 1).unwrap(), vec![0.3, 0.2, 0.5, 0.25]),
        (
            "agarch(2,2)",
            ModelSpec::agarch(2, 2).unwrap(),
            vec![0.25, 0.15, 0.1, 0.3, 0.25, -0.3],
        ),
    ] {
        let theta = ThetaVector::new(model, coeffs).unwrap();
        let path = simulate_stationary(
            &theta,
            &InnovationSpec::Normal,
            RngStream::new(505, model.p as u64),
            600,
            &SimOptions::default(),
        )
        .unwrap();
        let out = run_filter(&theta, path.data(), &FilterConfig::default(), DeriveOrder::Value)
            .unwrap();
        let series = agarch_series_h(&theta, path.data(), 200).unwrap();
        let mut worst = 0.0_f64;
        for t in 101..=out.n() {
            let a = out.var(t);
            let rel = (a - series.h[t - 1]).abs() / a.abs();
            worst = worst.max(rel);
        }
        assert!(worst < 1e-8, "{name}: max rel gap {worst:.2e}");
    }
    done(5, "series representation vs filter recursion", t0, 5.0);
}

#[test]
fn criterion_06_egarch_invertibility_region() {
    let t0 = Instant::now();
    let exact = -(2.0_f64.ln()) + 0.5 * SQRT_2_OVER_PI + 0.5 * E_LOG_CHI2;
    assert!((exact + 0.9294).abs() < 1e-4, "sanity: {exact}");
    let mut tag = 0;
    for delta in [0.25, 0.5, 0.75, 1.0] {
        for gamma in [-delta, 0.0, delta] {
            let theta =
                ThetaVector::new(ModelSpec::egarch(), vec![0.0, 0.0, gamma, delta]).unwrap();
            let d = egarch_invertibility_check(
                &theta,
                &InnovationSpec::Normal,
                RngStream::new(606, tag),
                100_000,
            )
            .unwrap();
            tag += 1;
            assert!(
                d.is_contractive(),
                "(gamma {gamma}, delta {delta}): {} +- {}",
                d.log_lambda_mean,
                d.std_error
            );
            if gamma == 0.0 && delta == 1.0 {
                assert!(
                    (d.log_lambda_mean - exact).abs() < 3.0 * d.std_error,
                    "closed form {exact} not covered: {} +- {}",
                    d.log_lambda_mean,
                    d.std_error
                );
            }
        }
    }
    done(6, "egarch invertibility region", t0, 30.0);
}

fn consistency_plan() -> ExperimentPlan {
    ExperimentPlan {
        kind: ExperimentKind::Consistency,
        model: ModelSpec::garch(1, 1).unwrap(),
        theta_true: vec![0.1, 0.2, 0.5],
        innovation: InnovationSpec::Normal,
        sizes: vec![500, 2000, 8000],
        replications: 100,
        base_seed: 707,
        burn_in: 1000,
        fit_starts: 1,
        grid: None,
    }
}

#[test]
fn criterion_07_consistency() {
    let t0 = Instant::now();
    let result = run(&consistency_plan()).unwrap();
    assert_eq!(result.rows.rows.len(), 300);
    for check in &result.checks {
        assert!(check.passed, "{}: {}", check.name, check.detail);
    }
    done(7, "consistency (rmse falls with n)", t0, 300.0);
}

#[test]
fn criterion_08_coverage_and_normality() {
    let t0 = Instant::now();
    let plan = ExperimentPlan {
        kind: ExperimentKind::Coverage,
        sizes: vec![4000],
        replications: 200,
        base_seed: 808,
        ..consistency_plan()
    };
    let result = run(&plan).unwrap();
    assert_eq!(result.rows.rows.len(), 200);
    for check in &result.checks {
        assert!(check.passed, "{}: {}", check.name, check.detail);
    }
    done(8, "coverage + standardized moments", t0, 600.0);
}

#[test]
fn criterion_09_model_nesting_exactness() {
    let t0 = Instant::now();
    let truth = garch11(0.1, 0.2, 0.5);
    let path = simulate_stationary(
        &truth,
        &InnovationSpec::Normal,
        RngStream::new(909, 0),
        4000,
        &SimOptions::default(),
    )
    .unwrap();

    let g_region = CompactRegion::default_for(ModelSpec::garch(1, 1).unwrap());
    let g_fit = fit(path.data(), &g_region, &FitOptions::default()).unwrap();

    let a_region = CompactRegion::default_for(ModelSpec::agarch(1, 1).unwrap());
    let a_opts = FitOptions {
        frozen: vec![(3, 0.0)],
        ..FitOptions::default()
    };
    let a_fit = fit(path.data(), &a_region, &a_opts).unwrap();

    for k in 0..3 {
        let gap = (g_fit.theta_hat.coeffs()[k] - a_fit.theta_hat.coeffs()[k]).abs();
        assert!(gap < 1e-10, "coordinate {k}: gap {gap:.2e}");
    }
    done(9, "garch equals gamma-frozen agarch", t0, 60.0);
}

#[test]
fn criterion_10_initialization_equivalence() {
    let t0 = Instant::now();
    let plan = ExperimentPlan {
        kind: ExperimentKind::Equivalence,
        sizes: vec![2000, 8000],
        replications: 2,
        base_seed: 1010,
        ..consistency_plan()
    };
    let result = run(&plan).unwrap();
    let check = result
        .checks
        .iter()
        .find(|c| c.name == "initialization_equivalence")
        .unwrap();
    assert!(check.passed, "{}", check.detail);
    done(10, "two-initialization equivalence", t0, 60.0);
}
