//! TOML configuration. One file holds a section per command; each command
//! reads only its own section plus the top-level `seed` and `out`. Relative
//! paths are resolved against the directory of the config file. Inputs that
//! are left out default to the output of the previous stage in `out`.

use std::path::{Path, PathBuf};

use percept::baselines::Drift;
use percept::datagen::Scenario;
use percept::detect::Scaling;
use percept::tda::EssentialPolicy;
use percept::weights::WeightMode;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub simulate: Option<SimulateConfig>,
    pub diagrams: Option<DiagramsConfig>,
    pub calibrate: Option<CalibrateConfig>,
    pub detect: Option<DetectConfig>,
    pub baseline: Option<BaselineConfig>,
    pub arl_edd: Option<ArlEddConfig>,
}

fn default_out() -> PathBuf {
    PathBuf::from("percept-out")
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    /// Parses `text`, resolving relative paths against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut c: Config = toml::from_str(text).map_err(|e| CliError::Usage(format!("bad config: {e}")))?;
        c.resolve(base);
        Ok(c)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        if let Some(d) = &mut self.diagrams {
            d.input.as_mut().map(fix);
        }
        if let Some(c) = &mut self.calibrate {
            c.pre.as_mut().map(|s| fix(&mut s.file));
            c.post.as_mut().map(|s| fix(&mut s.file));
            if let PartitionSpec::File { path } = &mut c.partition {
                fix(path);
            }
            if let WeightsSpec::File { path } = &mut c.weights {
                fix(path);
            }
        }
        if let Some(d) = &mut self.detect {
            d.diagrams.as_mut().map(fix);
            d.calibration.as_mut().map(fix);
        }
        if let Some(b) = &mut self.baseline {
            match b {
                BaselineConfig::Hotelling { input, training, .. } => {
                    input.as_mut().map(fix);
                    training.as_mut().map(|s| fix(&mut s.file));
                }
                BaselineConfig::Mmd { input, .. } => {
                    input.as_mut().map(fix);
                }
                BaselineConfig::Wasserstein { diagrams, .. } => {
                    diagrams.as_mut().map(fix);
                }
            }
        }
    }

    pub fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        s.as_ref().ok_or_else(|| CliError::Usage(format!("config has no [{name}] section")))
    }
}

/// `[simulate]`: a scenario whose seed is replaced by the master seed.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub layout: Layout,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// One `stream.csv` with a frame column.
    #[default]
    Packed,
    /// `frames/frame_00000.csv`, ... one point cloud per file.
    Frames,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    /// Packed stream file, or a directory of per-frame point-cloud CSVs.
    #[default]
    Pointcloud,
    /// A PGM or CSV image, or a directory of them.
    Image,
    /// Time-series CSV, turned into point clouds by a sliding window.
    Timeseries,
}

/// `[diagrams]`: persistence diagrams of every frame.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramsConfig {
    #[serde(default)]
    pub modality: Modality,
    pub input: Option<PathBuf>,
    #[serde(default = "infinite")]
    pub max_radius: f64,
    /// Sliding-window length for time series.
    pub window: Option<usize>,
}

impl Default for DiagramsConfig {
    fn default() -> Self {
        Self { modality: Modality::default(), input: None, max_radius: f64::INFINITY, window: None }
    }
}

fn infinite() -> f64 {
    f64::INFINITY
}

/// A diagram file and an optional half-open frame range `[start, end)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    pub file: PathBuf,
    pub frames: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionSpec {
    Histogram {
        bins: usize,
        #[serde(default)]
        layout: BinLayout,
    },
    /// Cluster counts by the elbow rule over `k_range` (inclusive).
    Voronoi {
        #[serde(default = "default_k_range")]
        k_range: [usize; 2],
    },
    /// A partition JSON written by an earlier run.
    File { path: PathBuf },
}

fn default_k_range() -> [usize; 2] {
    [1, 6]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinLayout {
    #[default]
    EqualWidth,
    EqualMass,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightsSpec {
    #[default]
    Uniform,
    /// Worst-case optimal weights; anchored at the pooled training
    /// proportions when post-change training data is given.
    Optimize {
        #[serde(default = "default_rho")]
        rho: f64,
        #[serde(default)]
        mode: WeightMode,
    },
    /// JSON array of weights.
    File { path: PathBuf },
}

fn default_rho() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSpec {
    #[serde(default = "default_sequences")]
    pub sequences: usize,
    #[serde(default = "default_length")]
    pub length: usize,
    /// Burn-in frames before monitoring starts; defaults to `2 * m1`.
    pub history: Option<usize>,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        Self { sequences: default_sequences(), length: default_length(), history: None }
    }
}

fn default_sequences() -> usize {
    200
}

fn default_length() -> usize {
    500
}

/// `[calibrate]`: partition, weights and threshold from pre-change diagrams.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub pre: Option<Source>,
    pub post: Option<Source>,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    pub partition: PartitionSpec,
    #[serde(default)]
    pub weights: WeightsSpec,
    #[serde(default = "default_m0")]
    pub m0: usize,
    #[serde(default = "default_m1")]
    pub m1: usize,
    pub target_arl: f64,
    #[serde(default)]
    pub monte_carlo: MonteCarloSpec,
    #[serde(default = "default_essential")]
    pub essential: EssentialPolicy,
    #[serde(default)]
    pub scaling: Scaling,
}

fn default_dims() -> Vec<usize> {
    vec![0, 1]
}

fn default_m0() -> usize {
    20
}

fn default_m1() -> usize {
    80
}

fn default_essential() -> EssentialPolicy {
    EssentialPolicy::Drop
}

/// `[detect]`: runs the calibrated detector over a diagram stream.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectConfig {
    pub diagrams: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
    /// Replaces the calibrated threshold.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorFormat {
    /// Packed point-cloud stream; each frame flattened to one vector.
    #[default]
    Stream,
    /// Time-series CSV; each row is one vector.
    Series,
}

/// `[baseline]`: a baseline trace in the detector's CSV schema.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaselineConfig {
    Hotelling {
        input: Option<PathBuf>,
        #[serde(default)]
        format: VectorFormat,
        /// Training vectors; defaults to the first `training_frames` of `input`.
        training: Option<Source>,
        training_frames: Option<usize>,
        #[serde(default = "default_hotelling_window")]
        window: usize,
        /// PCA components; no projection when absent.
        components: Option<usize>,
        #[serde(default)]
        drift: Drift,
        #[serde(default = "infinite")]
        threshold: f64,
    },
    Mmd {
        input: Option<PathBuf>,
        #[serde(default)]
        format: VectorFormat,
        #[serde(default = "default_mmd_window")]
        w_pre: usize,
        #[serde(default = "default_mmd_window")]
        w_post: usize,
        #[serde(default = "infinite")]
        threshold: f64,
    },
    Wasserstein {
        diagrams: Option<PathBuf>,
        #[serde(default = "infinite")]
        threshold: f64,
    },
}

fn default_hotelling_window() -> usize {
    10
}

fn default_mmd_window() -> usize {
    20
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Percept,
    Hotelling,
    Mmd,
    Wasserstein,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Percept => "percept",
            Method::Hotelling => "hotelling",
            Method::Mmd => "mmd",
            Method::Wasserstein => "wasserstein",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EddSpec {
    #[serde(default = "default_sequences")]
    pub sequences: usize,
    /// Pre-change frames before the change; defaults to `2 * m1`.
    pub history: Option<usize>,
    /// Post-change frames monitored before a run is censored.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

impl Default for EddSpec {
    fn default() -> Self {
        Self { sequences: default_sequences(), history: None, horizon: default_horizon() }
    }
}

fn default_horizon() -> usize {
    400
}

/// `[arl_edd]`: an ARL–EDD curve on resampled pools of one scenario's
/// regimes. Give exactly one of `targets` (ARLs) or `thresholds`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArlEddConfig {
    pub method: Method,
    pub scenario: Scenario,
    pub targets: Option<Vec<f64>>,
    pub thresholds: Option<Vec<f64>>,
    #[serde(default = "default_m0")]
    pub m0: usize,
    #[serde(default = "default_m1")]
    pub m1: usize,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_k_range")]
    pub k_range: [usize; 2],
    #[serde(default = "default_training_frames")]
    pub training_frames: usize,
    #[serde(default = "default_pool_frames")]
    pub pool_frames: usize,
    #[serde(default = "infinite")]
    pub max_radius: f64,
    #[serde(default = "default_components")]
    pub pca_components: usize,
    #[serde(default = "default_hotelling_window")]
    pub hotelling_window: usize,
    #[serde(default = "default_mmd_window")]
    pub mmd_window: usize,
    #[serde(default)]
    pub monte_carlo: MonteCarloSpec,
    #[serde(default)]
    pub edd: EddSpec,
}

fn default_training_frames() -> usize {
    20
}

fn default_pool_frames() -> usize {
    400
}

fn default_components() -> usize {
    15
}
