//! JSON run configuration. The schema is strict: unknown keys are
//! rejected everywhere, so typos fail loudly instead of being ignored.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use volqml::csvio::fnv1a64;
use volqml::error::Error;
use volqml::filter::InitialVol;
use volqml::innovations::{InnovationSpec, RngStream};
use volqml::mc::{ExperimentKind, ExperimentPlan, GridSpec};
use volqml::models::{CompactRegion, ModelSpec, ThetaVector};
use volqml::sre::MatrixNorm;

use crate::output::Provenance;

fn default_innovation() -> InnovationSpec {
    InnovationSpec::Normal
}

fn default_beta_cap() -> f64 {
    volqml::models::DEFAULT_BETA_SUM_MAX
}

fn default_burn_in() -> usize {
    1000
}

fn default_starts() -> usize {
    5
}

fn default_max_iter() -> usize {
    300
}

fn default_grad_tol() -> f64 {
    1e-8
}

fn default_step_tol() -> f64 {
    1e-10
}

fn default_n_products() -> usize {
    10_000
}

fn default_replications() -> usize {
    50
}

fn default_n_samples() -> usize {
    20_000
}

fn default_contraction_r() -> Vec<usize> {
    vec![1, 2, 4, 8, 16, 32, 64]
}

fn default_mc_sizes() -> Vec<usize> {
    vec![500, 2000, 8000]
}

fn default_mc_reps() -> usize {
    100
}

fn default_fit_starts() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default = "default_beta_cap")]
    pub beta_sum_max: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub n: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub data: PathBuf,
    #[serde(default)]
    pub order: usize,
    #[serde(default = "default_filter_initial")]
    pub initial: InitialVol,
    #[serde(default)]
    pub warmup_skip: usize,
}

fn default_filter_initial() -> InitialVol {
    InitialVol::SampleVariance
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreezeSpec {
    pub coord: String,
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub data: PathBuf,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub init: Option<Vec<f64>>,
    #[serde(default)]
    pub freeze: Vec<FreezeSpec>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_step_tol")]
    pub step_tol: f64,
    #[serde(default)]
    pub warmup_skip: usize,
    #[serde(default)]
    pub initial: Option<InitialVol>,
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormChoice {
    #[default]
    Frobenius,
    Operator,
}

impl NormChoice {
    pub fn as_matrix_norm(&self) -> MatrixNorm {
        match self {
            NormChoice::Frobenius => MatrixNorm::Frobenius,
            NormChoice::Operator => MatrixNorm::Operator,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSection {
    #[serde(default = "default_n_products")]
    pub n_products: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub norm: NormChoice,
    #[serde(default = "default_contraction_r")]
    pub contraction_r: Vec<usize>,
}

impl Default for DiagnoseSection {
    fn default() -> Self {
        DiagnoseSection {
            n_products: default_n_products(),
            replications: default_replications(),
            n_samples: default_n_samples(),
            norm: NormChoice::Frobenius,
            contraction_r: default_contraction_r(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub kind: ExperimentKind,
    #[serde(default = "default_mc_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_mc_reps")]
    pub replications: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_fit_starts")]
    pub fit_starts: usize,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    #[serde(default = "default_innovation")]
    pub innovation: InnovationSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    #[serde(default)]
    pub region: Option<RegionSection>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub simulate: Option<SimSection>,
    #[serde(default)]
    pub filter: Option<FilterSection>,
    #[serde(default)]
    pub fit: Option<FitSection>,
    #[serde(default)]
    pub diagnose: Option<DiagnoseSection>,
    #[serde(default)]
    pub mc: Option<McSection>,
}

/// A parsed config plus the provenance of its raw bytes.
pub struct LoadedConfig {
    pub cfg: RunConfig,
    pub config_hash: u64,
    pub seed: u64,
}

impl LoadedConfig {
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self, Error> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_slice(&bytes)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        volqml::models::ModelSpec::new(cfg.model.family, cfg.model.p, cfg.model.q)?;
        cfg.innovation.validate()?;
        let seed = seed_override.unwrap_or(cfg.seed);
        Ok(LoadedConfig {
            config_hash: fnv1a64(&bytes),
            cfg,
            seed,
        })
    }

    pub fn stream(&self) -> RngStream {
        RngStream::new(self.seed, self.cfg.stream)
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            seed: self.seed,
            config_hash: self.config_hash,
        }
    }

    fn theta_coeffs(&self) -> Result<Vec<f64>, Error> {
        self.cfg
            .theta
            .clone()
            .ok_or_else(|| Error::InvalidInput("config is missing \"theta\"".into()))
    }

    pub fn theta(&self) -> Result<ThetaVector, Error> {
        ThetaVector::new(self.cfg.model, self.theta_coeffs()?)
    }

    /// Theta without the stationarity cap, for diagnostics that probe
    /// outside the stationary region.
    pub fn theta_relaxed(&self) -> Result<ThetaVector, Error> {
        ThetaVector::new_relaxed(self.cfg.model, self.theta_coeffs()?)
    }

    pub fn region(&self) -> Result<CompactRegion, Error> {
        match &self.cfg.region {
            Some(r) => CompactRegion::new(
                self.cfg.model,
                r.lower.clone(),
                r.upper.clone(),
                r.beta_sum_max,
            ),
            None => Ok(CompactRegion::default_for(self.cfg.model)),
        }
    }

    pub fn coord_index(&self, name: &str) -> Result<usize, Error> {
        self.cfg
            .model
            .coeff_names()
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown coordinate {name:?}")))
    }

    pub fn mc_plan(&self) -> Result<ExperimentPlan, Error> {
        let section = self
            .cfg
            .mc
            .clone()
            .ok_or_else(|| Error::InvalidInput("config is missing the \"mc\" section".into()))?;
        let plan = ExperimentPlan {
            kind: section.kind,
            model: self.cfg.model,
            theta_true: self.theta_coeffs()?,
            innovation: self.cfg.innovation,
            sizes: section.sizes,
            replications: section.replications,
            base_seed: self.seed,
            burn_in: section.burn_in,
            fit_starts: section.fit_starts,
            grid: section.grid,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn out_dir(&self, common: &crate::Common) -> Result<PathBuf, Error> {
        let dir = common
            .out_dir
            .clone()
            .or_else(|| self.cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }
}
