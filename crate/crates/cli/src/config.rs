//! Experiment configuration.
//!
//! A run is described by an [`ExperimentConfig`]. It is assembled from three
//! layers with precedence command-line flag > JSON config file > built-in
//! default, and the resolved value is echoed into every run manifest.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use arm_core::sbn::Architecture;
use arm_core::{Estimator, EstimatorKind};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Toy,
    VarianceReport,
    TrainVae,
    TrainMle,
    PropertySuite,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Toy => "toy",
            Experiment::VarianceReport => "variance_report",
            Experiment::TrainVae => "train_vae",
            Experiment::TrainMle => "train_mle",
            Experiment::PropertySuite => "property_suite",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A gradient used by the toy runner: the exact one or a Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GradientSource {
    True,
    Estimator(EstimatorKind),
}

impl GradientSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            GradientSource::True => "true",
            GradientSource::Estimator(k) => k.as_str(),
        }
    }

    /// Builds the concrete estimator, using `baseline` for the constant-baseline variant.
    pub fn estimator(&self, baseline: f64) -> Option<Estimator> {
        match self {
            GradientSource::True => None,
            GradientSource::Estimator(EstimatorKind::ArConstBaseline) => {
                Some(Estimator::ArConstBaseline(vec![baseline]))
            }
            GradientSource::Estimator(k) => Some(Estimator::from(*k)),
        }
    }
}

impl FromStr for GradientSource {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("true") || t.eq_ignore_ascii_case("exact") {
            return Ok(GradientSource::True);
        }
        t.parse::<EstimatorKind>()
            .map(GradientSource::Estimator)
            .map_err(|_| HarnessError::Config(format!("unknown estimator `{t}`")))
    }
}

impl TryFrom<String> for GradientSource {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GradientSource> for String {
    fn from(g: GradientSource) -> String {
        g.as_str().to_string()
    }
}

impl fmt::Display for GradientSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parses a comma-separated estimator list such as `true,arm,ar`.
pub fn parse_estimator_list(s: &str) -> Result<Vec<GradientSource>> {
    let list: Vec<GradientSource> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if list.is_empty() {
        return Err(HarnessError::Config("empty estimator list".into()));
    }
    Ok(list)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyOptimizer {
    Sgd,
    Adam,
}

impl FromStr for ToyOptimizer {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sgd" => Ok(ToyOptimizer::Sgd),
            "adam" => Ok(ToyOptimizer::Adam),
            other => Err(HarnessError::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

/// Where training images come from: `synthetic` or `file:PATH`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DatasetSpec {
    Synthetic,
    File(PathBuf),
}

impl FromStr for DatasetSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "synthetic" {
            Ok(DatasetSpec::Synthetic)
        } else if let Some(path) = t.strip_prefix("file:") {
            if path.is_empty() {
                return Err(HarnessError::Config("`file:` needs a path".into()));
            }
            Ok(DatasetSpec::File(PathBuf::from(path)))
        } else {
            Err(HarnessError::Config(format!(
                "dataset must be `synthetic` or `file:PATH`, got `{t}`"
            )))
        }
    }
}

impl TryFrom<String> for DatasetSpec {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DatasetSpec> for String {
    fn from(d: DatasetSpec) -> String {
        d.to_string()
    }
}

impl fmt::Display for DatasetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSpec::Synthetic => f.write_str("synthetic"),
            DatasetSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Pattern family of the synthetic image generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PatternFamily {
    /// Every `side × side` image whose rows are all constant or whose
    /// columns are all constant.
    BarsAndStripes { side: usize },
    /// Noisy copies of `components` random prototypes, each pixel flipped
    /// with probability `flip`.
    BernoulliMixture { side: usize, components: usize, flip: f64 },
}

impl PatternFamily {
    pub fn side(&self) -> usize {
        match *self {
            PatternFamily::BarsAndStripes { side } | PatternFamily::BernoulliMixture { side, .. } => side,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(flatten)]
    pub family: PatternFamily,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    /// Seed of the generator, independent of the training seed.
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            family: PatternFamily::BarsAndStripes { side: 6 },
            train: 86,
            valid: 20,
            test: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lo: -2.5,
            hi: 2.5,
            step: 0.25,
        }
    }
}

/// Every setting optional: the shape of a config file and of the flag set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub estimators: Option<Vec<GradientSource>>,
    pub p0: Option<f64>,
    pub phi0: Option<f64>,
    pub iterations: Option<u64>,
    pub stepsize: Option<f64>,
    pub optimizer: Option<ToyOptimizer>,
    pub baseline: Option<f64>,
    pub batch: Option<usize>,
    pub k: Option<usize>,
    pub arch: Option<Architecture>,
    pub latent: Option<Vec<usize>>,
    pub dataset: Option<DatasetSpec>,
    pub synthetic: Option<SyntheticSpec>,
    pub grid: Option<GridSpec>,
    pub variance_every: Option<u64>,
    pub variance_samples: Option<usize>,
    pub eval_every: Option<u64>,
    pub smoothing_window: Option<usize>,
    pub samples: Option<usize>,
    pub timing: Option<bool>,
}

impl ConfigOverrides {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| HarnessError::Config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    /// Field-wise `self` if set, else `lower`.
    pub fn over(self, lower: ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            experiment: self.experiment.or(lower.experiment),
            seed: self.seed.or(lower.seed),
            out: self.out.or(lower.out),
            estimators: self.estimators.or(lower.estimators),
            p0: self.p0.or(lower.p0),
            phi0: self.phi0.or(lower.phi0),
            iterations: self.iterations.or(lower.iterations),
            stepsize: self.stepsize.or(lower.stepsize),
            optimizer: self.optimizer.or(lower.optimizer),
            baseline: self.baseline.or(lower.baseline),
            batch: self.batch.or(lower.batch),
            k: self.k.or(lower.k),
            arch: self.arch.or(lower.arch),
            latent: self.latent.or(lower.latent),
            dataset: self.dataset.or(lower.dataset),
            synthetic: self.synthetic.or(lower.synthetic),
            grid: self.grid.or(lower.grid),
            variance_every: self.variance_every.or(lower.variance_every),
            variance_samples: self.variance_samples.or(lower.variance_samples),
            eval_every: self.eval_every.or(lower.eval_every),
            smoothing_window: self.smoothing_window.or(lower.smoothing_window),
            samples: self.samples.or(lower.samples),
            timing: self.timing.or(lower.timing),
        }
    }
}

/// A fully resolved run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub out: PathBuf,
    pub estimators: Vec<GradientSource>,
    pub p0: f64,
    pub phi0: f64,
    pub iterations: u64,
    pub stepsize: f64,
    pub optimizer: ToyOptimizer,
    pub baseline: f64,
    pub batch: usize,
    pub k: usize,
    pub arch: Architecture,
    pub latent: Vec<usize>,
    pub dataset: DatasetSpec,
    pub synthetic: SyntheticSpec,
    pub grid: GridSpec,
    pub variance_every: u64,
    pub variance_samples: usize,
    pub eval_every: u64,
    pub smoothing_window: usize,
    pub samples: usize,
    pub timing: bool,
}

impl ExperimentConfig {
    /// Built-in defaults for `experiment`.
    pub fn defaults(experiment: Experiment) -> Self {
        use GradientSource::{Estimator as E, True};
        let (estimators, iterations, stepsize, k, latent) = match experiment {
            Experiment::Toy => (
                vec![
                    True,
                    E(EstimatorKind::Reinforce),
                    E(EstimatorKind::Ar),
                    E(EstimatorKind::Arm),
                ],
                2000,
                0.1,
                1,
                vec![16],
            ),
            Experiment::VarianceReport => (
                vec![E(EstimatorKind::Reinforce), E(EstimatorKind::Ar), E(EstimatorKind::Arm)],
                1,
                0.1,
                1000,
                vec![16],
            ),
            Experiment::TrainVae => (vec![E(EstimatorKind::Arm)], 5000, 1e-3, 100, vec![16]),
            Experiment::TrainMle => (vec![E(EstimatorKind::Arm)], 5000, 1e-2, 100, vec![8, 8]),
            Experiment::PropertySuite => (
                vec![E(EstimatorKind::Reinforce), E(EstimatorKind::Ar), E(EstimatorKind::Arm)],
                1,
                0.1,
                1,
                vec![16],
            ),
        };
        Self {
            experiment,
            seed: 0,
            out: PathBuf::from("results"),
            estimators,
            p0: 0.49,
            phi0: 0.0,
            iterations,
            stepsize,
            optimizer: ToyOptimizer::Adam,
            baseline: 0.0,
            batch: 50,
            k,
            arch: Architecture::Linear,
            latent,
            dataset: DatasetSpec::Synthetic,
            synthetic: SyntheticSpec::default(),
            grid: GridSpec::default(),
            variance_every: 100,
            variance_samples: 5000,
            eval_every: 500,
            smoothing_window: 100,
            samples: 200_000,
            timing: false,
        }
    }

    /// Applies flag > file > default precedence and validates the result.
    /// The experiment named by the caller wins over one named in the file.
    pub fn resolve(experiment: Experiment, file: ConfigOverrides, flags: ConfigOverrides) -> Result<Self> {
        let o = flags.over(file);
        let d = Self::defaults(experiment);
        let cfg = Self {
            experiment,
            seed: o.seed.unwrap_or(d.seed),
            out: o.out.unwrap_or(d.out),
            estimators: o.estimators.unwrap_or(d.estimators),
            p0: o.p0.unwrap_or(d.p0),
            phi0: o.phi0.unwrap_or(d.phi0),
            iterations: o.iterations.unwrap_or(d.iterations),
            stepsize: o.stepsize.unwrap_or(d.stepsize),
            optimizer: o.optimizer.unwrap_or(d.optimizer),
            baseline: o.baseline.unwrap_or(d.baseline),
            batch: o.batch.unwrap_or(d.batch),
            k: o.k.unwrap_or(d.k),
            arch: o.arch.unwrap_or(d.arch),
            latent: o.latent.unwrap_or(d.latent),
            dataset: o.dataset.unwrap_or(d.dataset),
            synthetic: o.synthetic.unwrap_or(d.synthetic),
            grid: o.grid.unwrap_or(d.grid),
            variance_every: o.variance_every.unwrap_or(d.variance_every),
            variance_samples: o.variance_samples.unwrap_or(d.variance_samples),
            eval_every: o.eval_every.unwrap_or(d.eval_every),
            smoothing_window: o.smoothing_window.unwrap_or(d.smoothing_window),
            samples: o.samples.unwrap_or(d.samples),
            timing: o.timing.unwrap_or(d.timing),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.iterations < 1 {
            return fail("iterations must be at least 1".into());
        }
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return fail(format!("p0 must lie in (0, 1), got {}", self.p0));
        }
        if !self.phi0.is_finite() || !self.baseline.is_finite() {
            return fail("phi0 and baseline must be finite".into());
        }
        if !(self.stepsize > 0.0 && self.stepsize.is_finite()) {
            return fail(format!("stepsize must be positive, got {}", self.stepsize));
        }
        if self.estimators.is_empty() {
            return fail("at least one estimator is required".into());
        }
        if self.batch < 1 || self.k < 1 || self.samples < 2 || self.variance_samples < 2 {
            return fail("batch and k must be at least 1; sample counts at least 2".into());
        }
        if self.variance_every < 1 || self.eval_every < 1 || self.smoothing_window < 1 {
            return fail("logging intervals must be at least 1".into());
        }
        if self.latent.is_empty() || self.latent.contains(&0) {
            return fail("latent widths must be positive".into());
        }
        let g = self.grid;
        if !(g.step > 0.0 && g.hi >= g.lo && g.lo.is_finite() && g.hi.is_finite()) {
            return fail(format!("invalid grid {g:?}"));
        }
        let network = matches!(self.experiment, Experiment::TrainVae | Experiment::TrainMle);
        if network && self.estimators != [GradientSource::Estimator(EstimatorKind::Arm)] {
            return fail("network training supports only the `arm` estimator".into());
        }
        if self.experiment == Experiment::VarianceReport && self.k < 2 {
            return fail("variance report needs k >= 2".into());
        }
        if self.experiment != Experiment::Toy && self.estimators.contains(&GradientSource::True) {
            return fail("the `true` gradient is only available for the toy experiment".into());
        }
        let s = self.synthetic;
        if s.family.side() == 0 || s.train == 0 {
            return fail("synthetic spec needs a positive side and training split".into());
        }
        if let PatternFamily::BernoulliMixture { components, flip, .. } = s.family {
            if components == 0 || !(0.0..=0.5).contains(&flip) {
                return fail("mixture needs components >= 1 and flip in [0, 0.5]".into());
            }
        }
        Ok(())
    }
}
