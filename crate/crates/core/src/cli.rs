//! JSON run configurations and the command driver behind the `possim` binary.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::credal::{calibrate_ellipsoid, sample_inner_approx, CalibrationOptions, EllipsoidApprox};
use crate::diagnostics::{fcr_estimate, im_fcr_estimate, root_above, uniform_design, FcrSetup, FlatPriorRegression, DEFAULT_POSTERIOR_DRAWS};
use crate::error::{Error, Result};
use crate::im::{evaluate_grid, validity_diagnostic, Axis, ContourMethod, Grid, LikelihoodIm, MonteCarloConfig, PivotalReference};
use crate::io::{digest_hex, load_dataset, Artifact};
use crate::marginal::{marginal_grid, FeatureMap, ProfileOptions};
use crate::models::builtin::{self, ModelOptions};
use crate::models::{Dataset, Model};
use crate::possibility::PossibilityContour;
use crate::predict::{conformal_region, ConformityRanking};
use crate::risk::{LossFunction, LossKind, Predictor, RiskIm, DEFAULT_BOOTSTRAP};

pub const SEED_ENV: &str = "POSSIM_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Contour,
    Region,
    Marginal,
    Sample,
    Predict,
    Riskim,
    DiagnoseValidity,
    DiagnoseFcr,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Contour => "contour",
            Command::Region => "region",
            Command::Marginal => "marginal",
            Command::Sample => "sample",
            Command::Predict => "predict",
            Command::Riskim => "riskim",
            Command::DiagnoseValidity => "diagnose-validity",
            Command::DiagnoseFcr => "diagnose-fcr",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContourKind {
    #[default]
    MonteCarlo,
    Wilks,
}

fn yes() -> bool {
    true
}

fn default_replicates() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub seed: Option<u64>,
    #[serde(default = "yes")]
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FeatureConfig {
    /// One coordinate of the parameter; the others range over `nuisance_box`.
    Coordinate {
        index: usize,
        nuisance_box: Vec<(f64, f64)>,
        #[serde(default)]
        pivotal: bool,
    },
    /// Product of the first two coordinates.
    Product { first_box: (f64, f64) },
    /// Sums over consecutive blocks of a probability vector.
    BlockSums { blocks: usize, size: usize },
}

impl FeatureConfig {
    pub fn build(&self, dim: usize) -> Result<FeatureMap> {
        match self {
            FeatureConfig::Coordinate { index, nuisance_box, pivotal } => {
                if *index >= dim || nuisance_box.len() + 1 != dim {
                    return Err(Error::Config(format!("coordinate feature needs index < {dim} and {} nuisance ranges", dim - 1)));
                }
                Ok(FeatureMap::coordinate(*index, dim, nuisance_box.clone()).with_pivotal(*pivotal))
            }
            FeatureConfig::Product { first_box } => {
                if dim != 2 {
                    return Err(Error::Config("product feature needs a two-parameter model".into()));
                }
                Ok(FeatureMap::product(*first_box))
            }
            FeatureConfig::BlockSums { blocks, size } => {
                if *blocks == 0 || *size == 0 || blocks * size != dim {
                    return Err(Error::Config(format!("block sums of {blocks} x {size} do not match dimension {dim}")));
                }
                Ok(FeatureMap::block_sums(*blocks, *size))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossName {
    SquaredError,
    ZeroOne,
    Check,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub kind: LossName,
    /// Quantile level for the check loss.
    pub level: Option<f64>,
    #[serde(default)]
    pub linear: bool,
}

impl LossConfig {
    pub fn build(&self) -> Result<LossFunction> {
        let kind = match self.kind {
            LossName::SquaredError => LossKind::SquaredError,
            LossName::ZeroOne => LossKind::ZeroOne,
            LossName::Check => LossKind::Check(self.level.ok_or_else(|| Error::Config("check loss needs `level`".into()))?),
        };
        let predictor = if self.linear { Predictor::Linear } else { Predictor::Location };
        LossFunction::new(kind, predictor).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankingName {
    #[default]
    DistanceToMean,
    DistanceToMedian,
}

/// One batch run. Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub model: Option<String>,
    #[serde(default)]
    pub model_options: ModelOptions,
    /// `fixture:<name>` or a CSV path.
    pub dataset: Option<String>,
    pub feature: Option<FeatureConfig>,
    pub grid: Option<Vec<Axis>>,
    pub mc: Option<McSettings>,
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub method: ContourKind,
    /// Credal draws, posterior draws or bootstrap resamples.
    pub draws: Option<usize>,
    /// Simulated datasets for the diagnostics.
    pub reps: Option<usize>,
    /// True parameter for the diagnostics.
    pub theta: Option<Vec<f64>>,
    /// Size of simulated datasets when no dataset is given.
    pub sample_size: Option<usize>,
    pub loss: Option<LossConfig>,
    #[serde(default)]
    pub ranking: RankingName,
    /// Threshold of the regression-root hypothesis for `diagnose-fcr`.
    pub root_cut: Option<f64>,
    /// Artifact file name inside the output directory.
    pub output: Option<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    /// Replaces the seed, creating Monte Carlo settings if none were given.
    pub fn override_seed(&mut self, seed: u64) {
        match &mut self.mc {
            Some(mc) => mc.seed = Some(seed),
            None => self.mc = Some(McSettings { replicates: default_replicates(), seed: Some(seed), parallel: true }),
        }
    }

    /// Applies `POSSIM_SEED` when it is set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            let seed = v.trim().parse().map_err(|_| Error::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer")))?;
            self.override_seed(seed);
        }
        Ok(())
    }

    pub fn is_stochastic(&self) -> bool {
        match self.command {
            Command::Contour | Command::Region => self.method == ContourKind::MonteCarlo,
            Command::Predict => false,
            _ => true,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        self.mc.as_ref().and_then(|m| m.seed)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        digest_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    /// Schema checks that need no data.
    pub fn validate(&self) -> Result<()> {
        if self.is_stochastic() && self.seed().is_none() {
            return Err(Error::Config(format!("command `{}` is stochastic and needs `mc.seed` (or {SEED_ENV})", self.command.name())));
        }
        if let Some(axes) = &self.grid {
            if axes.iter().any(|a| a.steps < 2 || !(a.max > a.min)) {
                return Err(Error::Config("every grid axis needs steps >= 2 and max > min".into()));
            }
        }
        if self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::Config("alphas must lie in [0, 1]".into()));
        }
        if let Some(mc) = &self.mc {
            if mc.replicates < 100 {
                return Err(Error::Config(format!("mc.replicates must be at least 100, got {}", mc.replicates)));
            }
        }
        let needs: &[(&str, bool)] = match self.command {
            Command::Contour | Command::Region => &[("model", self.model.is_some()), ("dataset", self.dataset.is_some()), ("grid", self.grid.is_some())],
            Command::Marginal => &[
                ("model", self.model.is_some()),
                ("dataset", self.dataset.is_some()),
                ("grid", self.grid.is_some()),
                ("feature", self.feature.is_some()),
            ],
            Command::Sample => &[("model", self.model.is_some()), ("dataset", self.dataset.is_some())],
            Command::Predict => &[("dataset", self.dataset.is_some()), ("grid", self.grid.is_some())],
            Command::Riskim => &[("dataset", self.dataset.is_some()), ("grid", self.grid.is_some()), ("loss", self.loss.is_some())],
            Command::DiagnoseValidity => &[("model", self.model.is_some()), ("theta", self.theta.is_some())],
            Command::DiagnoseFcr => &[],
        };
        if let Some((field, _)) = needs.iter().find(|(_, ok)| !ok) {
            return Err(Error::Config(format!("command `{}` needs `{field}`", self.command.name())));
        }
        if matches!(self.command, Command::Region | Command::Predict) && self.alphas.is_empty() {
            return Err(Error::Config(format!("command `{}` needs a non-empty `alphas` list", self.command.name())));
        }
        if matches!(self.command, Command::Marginal | Command::Predict) && self.grid.as_ref().is_some_and(|g| g.len() != 1) {
            return Err(Error::Config(format!("command `{}` needs a one-axis grid", self.command.name())));
        }
        Ok(())
    }

    fn mc_config(&self) -> MonteCarloConfig {
        let mc = self.mc.clone().unwrap_or(McSettings { replicates: default_replicates(), seed: None, parallel: true });
        let cfg = MonteCarloConfig::new(mc.replicates, mc.seed.unwrap_or(0));
        if mc.parallel {
            cfg
        } else {
            cfg.serial()
        }
    }

    fn model_arc(&self) -> Result<Arc<dyn Model>> {
        let id = self.model.as_deref().ok_or_else(|| Error::Config("missing `model`".into()))?;
        builtin::by_id(id, &self.model_options)
    }

    fn dataset(&self) -> Result<Dataset> {
        load_dataset(self.dataset.as_deref().ok_or_else(|| Error::Config("missing `dataset`".into()))?)
    }

    fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.clone().ok_or_else(|| Error::Config("missing `grid`".into()))?).map_err(|e| Error::Config(e.to_string()))
    }

    fn default_output(&self) -> String {
        format!("{}.csv", self.command.name())
    }
}

/// Exit status for an error: 2 for configuration problems, 3 for fixture
/// mismatches, 4 for numerical failures, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Json(_) => 2,
        Error::FixtureMismatch { .. } => 3,
        Error::BoundaryMle(_)
        | Error::NonConvergence { .. }
        | Error::SingularCovariance
        | Error::NonFinite(_)
        | Error::Normalization(_)
        | Error::NotMonotoneAlongRay { .. }
        | Error::TooManyRedraws { .. } => 4,
        _ => 1,
    }
}

/// Pivotal models share one reference sample of `log R` across all points.
fn contour_for(im: &LikelihoodIm, cfg: &RunConfig) -> Result<PossibilityContour> {
    Ok(match cfg.method {
        ContourKind::MonteCarlo if im.model().is_pivotal() => {
            let reference = PivotalReference::new(im.model().as_ref(), im.data(), im.mle(), &cfg.mc_config())?;
            im.pivotal_contour(Arc::new(reference))
        }
        ContourKind::MonteCarlo => im.mc_contour(cfg.mc_config()),
        ContourKind::Wilks => im.wilks_contour(),
    })
}

fn header<A: AsRef<str>, B: AsRef<str>>(names: &[A], extra: &[B]) -> Vec<String> {
    names.iter().map(|s| s.as_ref().to_string()).chain(extra.iter().map(|s| s.as_ref().to_string())).collect()
}

/// Computes the artifact for a validated configuration without writing it.
pub fn execute(cfg: &RunConfig) -> Result<Artifact> {
    cfg.validate()?;
    let mut art = Artifact::new(cfg.hash(), cfg.seed(), Vec::new());
    match cfg.command {
        Command::Contour | Command::Region => {
            let model = cfg.model_arc()?;
            let im = LikelihoodIm::new(Arc::clone(&model), cfg.dataset()?)?;
            let grid = cfg.grid()?;
            if grid.dim() != model.dim() {
                return Err(Error::Config(format!("grid has {} axes, model has {} parameters", grid.dim(), model.dim())));
            }
            let names = model.parameter_names();
            let values = evaluate_grid(&contour_for(&im, cfg)?, &grid)?;
            if cfg.command == Command::Contour {
                art.header = header(&names, &["plausibility"]);
                for (p, v) in values.points.iter().zip(&values.values) {
                    art.push(p.iter().copied().chain([*v]).collect());
                }
            } else {
                art.header = header(&["alpha"], &names);
                art.header.push("plausibility".into());
                for &a in &cfg.alphas {
                    for (p, v) in values.points.iter().zip(&values.values).filter(|(_, v)| **v >= a) {
                        art.push([a].into_iter().chain(p.iter().copied()).chain([*v]).collect());
                    }
                }
            }
        }
        Command::Marginal => {
            let model = cfg.model_arc()?;
            let im = LikelihoodIm::new(Arc::clone(&model), cfg.dataset()?)?;
            let feature = cfg.feature.as_ref().expect("validated").build(model.dim())?;
            let values = cfg.grid()?.axes()[0].values();
            let rows = marginal_grid(&im, &contour_for(&im, cfg)?, &feature, &values, &cfg.mc_config(), &ProfileOptions::default())?;
            art.header = header(&["feature", "extension", "profile"], &[] as &[&str]);
            for (phi, ext, pr) in rows {
                art.push(vec![phi, ext, pr]);
            }
        }
        Command::Sample => {
            let model = cfg.model_arc()?;
            let im = LikelihoodIm::new(Arc::clone(&model), cfg.dataset()?)?;
            let mc = cfg.mc_config();
            let cov = model.asymptotic_covariance(im.data(), im.mle())?;
            let base = EllipsoidApprox::new(im.mle().to_vec(), &cov)?;
            let opts = CalibrationOptions {
                seed: mc.seed,
                monotone_tol: if cfg.method == ContourKind::MonteCarlo { 3.0 / (mc.replicates as f64).sqrt() } else { 1e-9 },
                ..CalibrationOptions::default()
            };
            let ell = calibrate_ellipsoid(&contour_for(&im, cfg)?, base, &opts)?;
            let set = sample_inner_approx(&ell, cfg.draws.unwrap_or(5000), mc.seed);
            art.header = header(&["alpha"], &model.parameter_names());
            for d in &set.draws {
                art.push([d.alpha].into_iter().chain(d.theta.iter().copied()).collect());
            }
        }
        Command::Predict => {
            let observed = cfg.dataset()?.reals()?;
            let grid = cfg.grid()?.axes()[0].values();
            let rho = match cfg.ranking {
                RankingName::DistanceToMean => ConformityRanking::distance_to_mean(),
                RankingName::DistanceToMedian => ConformityRanking::distance_to_median(),
            };
            let set = conformal_region(&observed, &grid, 0.0, &rho)?;
            art.header = header(&["candidate", "plausibility"], &[] as &[&str]);
            art.header.extend(cfg.alphas.iter().map(|a| format!("member_{a}")));
            for (y, v) in &set.values {
                let flags = cfg.alphas.iter().map(|a| if v >= a { 1.0 } else { 0.0 });
                art.push([*y, *v].into_iter().chain(flags).collect());
            }
        }
        Command::Riskim => {
            let loss = cfg.loss.as_ref().expect("validated").build()?;
            let grid = cfg.grid()?;
            if grid.dim() != loss.dim() {
                return Err(Error::Config(format!("grid has {} axes, the loss has {} parameters", grid.dim(), loss.dim())));
            }
            let risk = RiskIm::new(cfg.dataset()?, loss, cfg.draws.unwrap_or(DEFAULT_BOOTSTRAP), cfg.seed().expect("validated"))
                .map_err(|e| match e {
                    Error::InvalidInput(m) => Error::Config(m),
                    other => other,
                })?;
            let values = evaluate_grid(&risk.as_contour(), &grid)?;
            let names: Vec<String> = (0..loss.dim()).map(|k| format!("theta{k}")).collect();
            art.header = names.into_iter().chain(["plausibility".to_string()]).collect();
            for (p, v) in values.points.iter().zip(&values.values) {
                art.push(p.iter().copied().chain([*v]).collect());
            }
        }
        Command::DiagnoseValidity => {
            let model = cfg.model_arc()?;
            let theta = cfg.theta.clone().expect("validated");
            let design = match (&cfg.dataset, cfg.sample_size) {
                (Some(_), _) => cfg.dataset()?,
                (None, Some(n)) => Dataset::from_reals("design", vec![0.0; n]),
                (None, None) => return Err(Error::Config("diagnose-validity needs `dataset` or `sample_size`".into())),
            };
            let alphas = if cfg.alphas.is_empty() { vec![0.01, 0.05, 0.1, 0.25, 0.5] } else { cfg.alphas.clone() };
            let method = match cfg.method {
                ContourKind::MonteCarlo => ContourMethod::MonteCarlo(cfg.mc_config()),
                ContourKind::Wilks => ContourMethod::Wilks,
            };
            let reps = cfg.reps.unwrap_or(1000);
            let table = validity_diagnostic(&model, &[theta], &design, &alphas, reps, method, cfg.seed().expect("validated"))
                .map_err(|e| match e {
                    Error::InvalidInput(m) => Error::Config(m),
                    other => other,
                })?;
            art.header = header(&["alpha", "frequency", "bound", "pass"], &[] as &[&str]);
            for r in &table.rows {
                art.push(vec![r.alpha, r.frequency, r.bound, if r.pass { 1.0 } else { 0.0 }]);
            }
        }
        Command::DiagnoseFcr => {
            let seed = cfg.seed().expect("validated");
            let alphas = if cfg.alphas.is_empty() { (1..=9).map(|k| k as f64 / 10.0).collect() } else { cfg.alphas.clone() };
            let setup = FcrSetup {
                model: builtin::linear_regression(),
                design: uniform_design(cfg.sample_size.unwrap_or(25), -2.0, 2.0, seed),
                theta_true: cfg.theta.clone().unwrap_or_else(|| vec![0.3, 0.1, 1.0]),
                reps: cfg.reps.unwrap_or(1000),
                alphas,
                seed,
            };
            let h = root_above(cfg.root_cut.unwrap_or(-1.0));
            let to_config = |e: Error| match e {
                Error::InvalidInput(m) => Error::Config(m),
                other => other,
            };
            let bayes = fcr_estimate(&FlatPriorRegression, &h, &setup, cfg.draws.unwrap_or(DEFAULT_POSTERIOR_DRAWS)).map_err(to_config)?;
            let im = im_fcr_estimate(&h, &setup, &cfg.mc_config()).map_err(to_config)?;
            art.header = header(&["alpha", "posterior_fcr", "im_fcr"], &[] as &[&str]);
            for ((a, b), (_, p)) in bayes.points.iter().zip(&im.points) {
                art.push(vec![*a, *b, *p]);
            }
        }
    }
    Ok(art)
}

/// Runs `cfg` and writes its artifact under `out_dir`, returning the path.
/// Nothing is written when the run fails.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    let art = execute(cfg)?;
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(cfg.output.clone().unwrap_or_else(|| cfg.default_output()));
    art.write_path(&path)?;
    Ok(path)
}
