//! Command-line front end: simulate paths, filter observed series, fit
//! by QML, run stationarity/invertibility diagnostics, and drive the
//! Monte-Carlo experiment harness. One JSON config file carries the
//! model, parameters and per-command sections; a few flags override it.
//!
//! Exit codes: 0 success, 2 config/input error, 3 numeric divergence,
//! 4 fit failure.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use volqml::error::Error;
use volqml::filter::{run_filter, DeriveOrder, FilterConfig};
use volqml::models::Family;
use volqml::qmle::{fit, FitOptions};
use volqml::sre::{
    egarch_invertibility_check, lyapunov_agarch, simulate_stationary, spectral_radius_c,
    SimOptions,
};

use config::LoadedConfig;

#[derive(Parser)]
#[command(
    name = "volqml",
    version,
    about = "Volatility-model simulation, filtering and quasi-maximum-likelihood estimation"
)]
struct Cli {
    /// Cap the worker thread pool.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory (overrides the config's out_dir).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a stationary path and write path.csv (t, X, sigma2, Z).
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Number of retained observations (overrides the config).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Filter an observed series at a parameter and write filter.csv.
    Filter {
        #[command(flatten)]
        common: Common,
    },
    /// Fit by QML and write estimate.json and residuals.csv.
    Fit {
        #[command(flatten)]
        common: Common,
    },
    /// Stationarity/invertibility diagnostics for a parameter point.
    Diagnose {
        #[command(flatten)]
        common: Common,
    },
    /// Run a Monte-Carlo experiment plan.
    Mc {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = volqml::exec::set_max_threads(n) {
            eprintln!("warning: could not cap threads: {e}");
        }
    }
    let outcome = match &cli.cmd {
        Cmd::Simulate { common, n } => cmd_simulate(common, *n),
        Cmd::Filter { common } => cmd_filter(common),
        Cmd::Fit { common } => cmd_fit(common),
        Cmd::Diagnose { common } => cmd_diagnose(common),
        Cmd::Mc { common } => cmd_mc(common),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Constraint(_) | Error::Unsupported(_) | Error::InvalidInput(_) | Error::Io(_) => 2,
        Error::Divergence { .. } | Error::Numeric { .. } => 3,
        Error::FitFailure(_) | Error::Covariance(_) | Error::Experiment(_) => 4,
    }
}

fn cmd_simulate(common: &Common, n_override: Option<usize>) -> Result<(), Error> {
    let loaded = LoadedConfig::load(&common.config, common.seed)?;
    let sim = loaded.cfg.simulate.clone().ok_or_else(|| {
        Error::InvalidInput("config is missing the \"simulate\" section".into())
    })?;
    let theta = loaded.theta()?;
    let options = SimOptions {
        burn_in: sim.burn_in,
        initial: sim.initial.clone(),
    };
    let n = n_override.unwrap_or(sim.n);
    let path = simulate_stationary(&theta, &loaded.cfg.innovation, loaded.stream(), n, &options)?;

    let prov = loaded.provenance();
    let out = loaded.out_dir(common)?;
    output::write_path_csv(&out.join("path.csv"), &path, &prov)?;

    if let Some(margin) = path.weak_margin {
        println!("weak stationarity margin: {margin:.6}");
        if margin <= 0.0 {
            println!("warning: nonpositive margin; only strict stationarity may hold");
        }
    }
    println!(
        "burn-in {} steps, initialization gap at burn-in end: {:.3e}",
        path.burn_in, path.convergence_gap
    );
    println!("wrote {}", out.join("path.csv").display());
    Ok(())
}

fn cmd_filter(common: &Common) -> Result<(), Error> {
    let loaded = LoadedConfig::load(&common.config, common.seed)?;
    let section = loaded
        .cfg
        .filter
        .clone()
        .ok_or_else(|| Error::InvalidInput("config is missing the \"filter\" section".into()))?;
    let theta = loaded.theta()?;
    let data = output::read_observations(&section.data)?;
    let order = DeriveOrder::from_index(section.order)?;
    let cfg = FilterConfig {
        initial: section.initial.clone(),
        warmup_skip: section.warmup_skip,
        variance_floor: None,
    };
    let out_filter = run_filter(&theta, &data, &cfg, order)?;

    let prov = loaded.provenance();
    let out = loaded.out_dir(common)?;
    output::write_filter_csv(&out.join("filter.csv"), &out_filter, &prov)?;
    println!("wrote {}", out.join("filter.csv").display());
    Ok(())
}

fn cmd_fit(common: &Common) -> Result<(), Error> {
    let loaded = LoadedConfig::load(&common.config, common.seed)?;
    let section = loaded
        .cfg
        .fit
        .clone()
        .ok_or_else(|| Error::InvalidInput("config is missing the \"fit\" section".into()))?;
    let data = output::read_observations(&section.data)?;
    let region = loaded.region()?;
    let mut options = FitOptions {
        starts: section.starts,
        init: section.init.clone(),
        max_iter: section.max_iter,
        grad_tol_scale: section.grad_tol,
        step_tol: section.step_tol,
        warmup_skip: section.warmup_skip,
        ..FitOptions::default()
    };
    if let Some(init) = &section.initial {
        options.initial = init.clone();
    }
    for f in &section.freeze {
        let idx = loaded.coord_index(&f.coord)?;
        options.frozen.push((idx, f.value));
    }
    let report = fit(&data, &region, &options)?;

    let prov = loaded.provenance();
    let out = loaded.out_dir(common)?;
    output::write_estimate_json(&out.join("estimate.json"), &report, &loaded, &prov)?;
    output::write_residuals_csv(&out.join("residuals.csv"), &report.residuals, &prov)?;

    let names = loaded.cfg.model.coeff_names();
    for (k, name) in names.iter().enumerate() {
        let se = report
            .covariance
            .as_ref()
            .map(|c| format!(" (se {:.5})", c.std_errors[k]))
            .unwrap_or_default();
        println!("{name} = {:.6}{se}", report.theta_hat.coeffs()[k]);
    }
    println!(
        "loglik {:.4}, converged: {}, iterations: {}",
        report.loglik, report.converged, report.iterations
    );
    if report.boundary_warning {
        println!(
            "warning: optimum on the region boundary ({}); standard errors unreliable",
            report.active_constraints.join(", ")
        );
    }
    println!("wrote {}", out.join("estimate.json").display());
    Ok(())
}

fn cmd_diagnose(common: &Common) -> Result<(), Error> {
    let loaded = LoadedConfig::load(&common.config, common.seed)?;
    let section = loaded.cfg.diagnose.clone().unwrap_or_default();
    let theta = loaded.theta_relaxed()?;
    let innovation = &loaded.cfg.innovation;
    let stream = loaded.stream();

    let mut report = serde_json::Map::new();
    println!("{:<34} {:>14} {:>12} verdict", "diagnostic", "estimate", "std error");
    match loaded.cfg.model.family {
        Family::Garch | Family::Agarch => {
            let margin = volqml::models::weak_stationarity_margin(&theta, innovation)?;
            println!(
                "{:<34} {:>14.6} {:>12} {}",
                "weak stationarity margin",
                margin,
                "-",
                if margin > 0.0 { "stationary (2nd moment)" } else { "outside" }
            );
            report.insert("weak_margin".into(), margin.into());

            let est = lyapunov_agarch(
                &theta,
                innovation,
                stream,
                section.n_products,
                section.replications,
                section.norm.as_matrix_norm(),
            )?;
            println!(
                "{:<34} {:>14.6} {:>12.6} {}",
                "lyapunov exponent",
                est.rho_hat,
                est.std_error,
                if est.is_stationary() { "stationary" } else { "not certified" }
            );
            report.insert(
                "lyapunov".into(),
                serde_json::json!({
                    "rho_hat": est.rho_hat,
                    "std_error": est.std_error,
                    "n_products": est.n_products,
                    "n_replications": est.n_replications,
                    "norm": format!("{:?}", est.norm).to_lowercase(),
                    "verdict": est.is_stationary(),
                }),
            );

            if loaded.cfg.model.q >= 1 {
                let s = spectral_radius_c(theta.betas())?;
                println!(
                    "{:<34} {:>14.6} {:>12} bound {:.6}",
                    "spectral radius of C", s.rho, "-", s.bound
                );
                report.insert(
                    "spectral_radius".into(),
                    serde_json::json!({"rho": s.rho, "bound": s.bound}),
                );
            }
            let mut contraction = Vec::new();
            for &r in &section.contraction_r {
                let c = volqml::sre::agarch_contraction(theta.betas(), r)?;
                println!(
                    "{:<34} {:>14.6} {:>12} {}",
                    format!("contraction log||C^{r}||/{r}"),
                    c.log_lambda_mean,
                    "-",
                    if c.is_contractive() { "contractive" } else { "not yet" }
                );
                contraction.push(serde_json::json!({
                    "r": r,
                    "estimate": c.log_lambda_mean,
                    "verdict": c.is_contractive(),
                }));
            }
            report.insert("contraction".into(), contraction.into());
        }
        Family::Egarch => {
            let d = egarch_invertibility_check(&theta, innovation, stream, section.n_samples)?;
            println!(
                "{:<34} {:>14.6} {:>12.6} {}",
                "invertibility criterion",
                d.log_lambda_mean,
                d.std_error,
                if d.is_contractive() { "invertible" } else { "not certified" }
            );
            report.insert(
                "invertibility".into(),
                serde_json::json!({
                    "estimate": d.log_lambda_mean,
                    "std_error": d.std_error,
                    "n": d.n,
                    "k_max": d.k_max,
                    "tail_bound": d.tail_bound,
                    "verdict": d.is_contractive(),
                }),
            );
        }
    }

    let prov = loaded.provenance();
    let out = loaded.out_dir(common)?;
    output::write_json(
        &out.join("diagnose.json"),
        serde_json::Value::Object(report),
        &prov,
    )?;
    println!("wrote {}", out.join("diagnose.json").display());
    Ok(())
}

fn cmd_mc(common: &Common) -> Result<(), Error> {
    let loaded = LoadedConfig::load(&common.config, common.seed)?;
    let plan = loaded.mc_plan()?;
    let result = volqml::mc::run(&plan)?;
    let out = loaded.out_dir(common)?;
    result.write_outputs(&out)?;
    for check in &result.checks {
        println!(
            "check {:<40} {} ({})",
            check.name,
            if check.passed { "pass" } else { "FAIL" },
            check.detail
        );
    }
    if result.total_fits > 0 {
        println!(
            "fits: {} total, {} failed",
            result.total_fits, result.failed_fits
        );
    }
    println!("wrote {}", out.join("rows.csv").display());
    Ok(())
}

