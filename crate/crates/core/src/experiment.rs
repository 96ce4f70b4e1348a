//! End-to-end pipelines on synthetic scenarios: training, partition fitting,
//! threshold calibration, monitoring, and ARL–EDD curves for the detector and
//! the Hotelling baseline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{Drift, HotellingModel};
use crate::binning::{bin_diagram, elbow_select_k, fit_persistence_clusters, Partition};
use crate::cloud::{Grid, PointCloud};
use crate::datagen::{sample_shape, Scenario};
use crate::detect::{
    arl_from_maxima, calibrate_from_maxima, estimate_edd_with, scan_trace, simulate_pre_maxima, DetectorConfig,
    MonteCarlo,
};
use crate::embed::{fit_pca, PcaModel};
use crate::error::{Error, Result};
use crate::seed;
use crate::tda::{
    build_lower_star_filtration, compute_persistence, rips_persistence, tilt, EssentialPolicy, PersistenceDiagram,
    TiltedDiagram,
};

/// Rips diagrams of every frame, computed in parallel.
pub fn compute_diagrams(frames: &[PointCloud], max_radius: f64) -> Result<Vec<PersistenceDiagram>> {
    frames.par_iter().map(|f| rips_persistence(f, max_radius)).collect()
}

/// Lower-star diagrams of every image, computed in parallel.
pub fn compute_image_diagrams(images: &[Grid]) -> Result<Vec<PersistenceDiagram>> {
    images.par_iter().map(|g| Ok(compute_persistence(&build_lower_star_filtration(g)?))).collect()
}

pub fn tilt_all(diagrams: &[PersistenceDiagram], policy: EssentialPolicy) -> Result<Vec<TiltedDiagram>> {
    diagrams.iter().map(|d| tilt(d, policy)).collect()
}

/// Per-frame frequency vectors `f_t`.
pub fn frequency_stream(diagrams: &[PersistenceDiagram], partition: &Partition, policy: EssentialPolicy) -> Result<Vec<Vec<f64>>> {
    diagrams.iter().map(|d| Ok(bin_diagram(&tilt(d, policy)?, partition).f)).collect()
}

/// Frames flattened to coordinate vectors.
pub fn vectorize(frames: &[PointCloud]) -> Vec<Vec<f64>> {
    frames.iter().map(|f| f.as_slice().to_vec()).collect()
}

/// Voronoi partition whose cluster counts are picked by the elbow rule per
/// regime and homology dimension.
pub fn fit_voronoi(
    pre: &[TiltedDiagram],
    post: &[TiltedDiagram],
    dims: &[usize],
    k_range: &[usize],
    seed: u64,
) -> Result<Partition> {
    let pick = |set: &[TiltedDiagram], dim: usize| -> Result<usize> {
        let pts: Vec<[f64; 2]> = set.iter().flat_map(|d| d.features.iter()).filter(|f| f.dim == dim).map(|f| [f.birth, f.persistence]).collect();
        let ks: Vec<usize> = k_range.iter().copied().filter(|&k| k <= pts.len()).collect();
        if ks.is_empty() {
            return Err(Error::EmptyInput("training features for clustering"));
        }
        elbow_select_k(&pts, &ks, seed)
    };
    let k_pre = dims.iter().map(|&d| pick(pre, d)).collect::<Result<Vec<_>>>()?;
    let k_post = dims.iter().map(|&d| pick(post, d)).collect::<Result<Vec<_>>>()?;
    Ok(Partition::Voronoi(fit_persistence_clusters(pre, post, dims, &k_pre, &k_post, seed)?))
}

/// Frames from one regime of a scenario, independent of the scenario's own
/// stream (seeded by `stage`).
pub fn regime_frames(scenario: &Scenario, post: bool, count: usize, seed: u64, stage: &str) -> Result<Vec<PointCloud>> {
    scenario.validate()?;
    let (g, s) = scenario.regime(if post { scenario.change } else { 0 });
    (0..count)
        .into_par_iter()
        .map(|i| sample_shape(g, scenario.points, s, &mut seed::rng(seed, stage, i as u64)))
        .collect()
}

/// Settings shared by the synthetic experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDesign {
    /// Template; its seed is ignored in favour of `seed`.
    pub scenario: Scenario,
    pub dims: Vec<usize>,
    pub k_range: Vec<usize>,
    pub training_frames: usize,
    pub pool_frames: usize,
    pub m0: usize,
    pub m1: usize,
    pub max_radius: f64,
    pub pca_components: usize,
    pub hotelling_window: usize,
    pub seed: u64,
}

impl SyntheticDesign {
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        Self {
            scenario,
            dims: vec![0, 1],
            k_range: (1..=6).collect(),
            training_frames: 20,
            pool_frames: 400,
            m0: 20,
            m1: 80,
            max_radius: f64::INFINITY,
            pca_components: 15,
            hotelling_window: 10,
            seed,
        }
    }
}

/// Everything learned from training data for the topological detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPercept {
    pub partition: Partition,
    pub config: DetectorConfig,
    /// Pre-change frequency vectors used for calibration.
    pub pre_pool: Vec<Vec<f64>>,
}

impl TrainedPercept {
    pub fn frequencies(&self, frames: &[PointCloud], max_radius: f64) -> Result<Vec<Vec<f64>>> {
        frequency_stream(&compute_diagrams(frames, max_radius)?, &self.partition, EssentialPolicy::Drop)
    }
}

/// Fits a Voronoi partition on independent training frames from both regimes,
/// uses uniform weights, and builds a pre-change pool for calibration. The
/// threshold is left at +inf.
pub fn train_percept(design: &SyntheticDesign) -> Result<TrainedPercept> {
    let s = &design.scenario;
    let pre = regime_frames(s, false, design.training_frames, design.seed, "train-pre")?;
    let post = regime_frames(s, true, design.training_frames, design.seed, "train-post")?;
    let pre_d = tilt_all(&compute_diagrams(&pre, design.max_radius)?, EssentialPolicy::Drop)?;
    let post_d = tilt_all(&compute_diagrams(&post, design.max_radius)?, EssentialPolicy::Drop)?;
    let partition = fit_voronoi(&pre_d, &post_d, &design.dims, &design.k_range, seed::derive(design.seed, "clusters", 0))?;
    let config = DetectorConfig::uniform(partition.len(), f64::INFINITY, design.m0, design.m1)?;
    let pool = regime_frames(s, false, design.pool_frames, design.seed, "pool-pre")?;
    let pre_pool = frequency_stream(&compute_diagrams(&pool, design.max_radius)?, &partition, EssentialPolicy::Drop)?;
    Ok(TrainedPercept { partition, config, pre_pool })
}

/// PCA projection followed by the Hotelling CUSUM model, both fitted on
/// pre-change vectors.
#[derive(Debug, Clone)]
pub struct TrainedHotelling {
    pub pca: PcaModel,
    pub model: HotellingModel,
}

impl TrainedHotelling {
    pub fn fit(pre_vectors: &[Vec<f64>], components: usize, window: usize) -> Result<Self> {
        let pca = fit_pca(pre_vectors, components)?;
        let projected = pre_vectors.iter().map(|v| pca.project(v)).collect::<Result<Vec<_>>>()?;
        let model = HotellingModel::fit(&projected, window, Drift::default())?;
        Ok(Self { pca, model })
    }

    pub fn project(&self, frames: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        frames.iter().map(|v| self.pca.project(v)).collect()
    }

    /// CUSUM over `frames[start..]` with the windows allowed to reach into
    /// `frames[..start]`.
    pub fn trace_from(&self, projected: &[&[f64]], start: usize) -> Result<Vec<f64>> {
        let owned: Vec<Vec<f64>> = projected.iter().map(|v| v.to_vec()).collect();
        let forms = self.model.windowed_forms(&owned)?;
        let mut s = 0.0f64;
        Ok(forms[start..]
            .iter()
            .map(|q| {
                s = (s + q - self.model.drift()).max(0.0);
                s
            })
            .collect())
    }
}

/// Monte-Carlo design for an ARL–EDD curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveDesign {
    pub arl: MonteCarlo,
    pub edd_sequences: usize,
    pub edd_history: usize,
    pub edd_horizon: usize,
    pub edd_seed: u64,
}

/// Where the curve is evaluated: thresholds calibrated to target ARLs, or a
/// fixed threshold grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveGrid {
    Targets(Vec<f64>),
    Thresholds(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// NaN on a fixed threshold grid.
    pub target_arl: f64,
    pub threshold: f64,
    /// Monte-Carlo ARL estimate at the threshold.
    pub arl: f64,
    pub edd: f64,
    pub censored: usize,
    pub sequences: usize,
}

/// Estimates the ARL of each threshold from pre-change sequences (or picks
/// thresholds for target ARLs) and measures the detection delay at each. `arl_trace(ids, start)` scores
/// pre-change sequences; `edd_trace(ids, onset)` scores sequences whose ids
/// from `onset` on refer to the post-change pool (offset by `pre_len`).
pub fn arl_edd_curve<A, E>(
    pre_len: usize,
    post_len: usize,
    grid: &CurveGrid,
    design: &CurveDesign,
    arl_trace: A,
    edd_trace: E,
) -> Result<Vec<CurvePoint>>
where
    A: Fn(&[usize], usize) -> Result<Vec<f64>> + Sync,
    E: Fn(&[usize], usize) -> Result<Vec<f64>> + Sync,
{
    let (CurveGrid::Targets(values) | CurveGrid::Thresholds(values)) = grid;
    if values.is_empty() {
        return Err(Error::EmptyInput("threshold grid"));
    }
    let maxima = simulate_pre_maxima(pre_len, &design.arl, arl_trace)?;
    let m = design.arl.length;
    // (target, threshold, arl) per grid point.
    let points: Vec<(f64, f64, f64)> = match grid {
        CurveGrid::Targets(t) => t
            .iter()
            .map(|&t| calibrate_from_maxima(t, &maxima, m).map(|c| (c.target_arl, c.threshold, c.arl)))
            .collect::<Result<_>>()?,
        CurveGrid::Thresholds(b) => b.iter().map(|&b| (f64::NAN, b, arl_from_maxima(&maxima, b, m))).collect(),
    };
    let thresholds: Vec<f64> = points.iter().map(|p| p.1).collect();
    let edd = estimate_edd_with(
        pre_len,
        post_len,
        &thresholds,
        design.edd_sequences,
        design.edd_history,
        design.edd_horizon,
        design.edd_seed,
        edd_trace,
    )?;
    Ok(points
        .into_iter()
        .zip(edd)
        .map(|((target_arl, threshold, arl), e)| CurvePoint {
            target_arl,
            threshold,
            arl,
            edd: e.mean_delay,
            censored: e.censored,
            sequences: e.n_sequences,
        })
        .collect())
}

/// Curve for the topological detector on frequency-vector pools.
pub fn percept_curve(
    config: &DetectorConfig,
    pre_pool: &[Vec<f64>],
    post_pool: &[Vec<f64>],
    grid: &CurveGrid,
    design: &CurveDesign,
) -> Result<Vec<CurvePoint>> {
    let frame = |i: usize| if i < pre_pool.len() { pre_pool[i].as_slice() } else { post_pool[i - pre_pool.len()].as_slice() };
    arl_edd_curve(
        pre_pool.len(),
        post_pool.len(),
        grid,
        design,
        |ids, start| scan_trace(ids.iter().map(|&i| pre_pool[i].as_slice()), config, start, 0),
        |ids, onset| scan_trace(ids.iter().map(|&i| frame(i)), config, onset, onset),
    )
}

/// Curve for the Hotelling CUSUM on projected-vector pools; the CUSUM starts
/// from zero at the monitoring start.
pub fn hotelling_curve(
    trained: &TrainedHotelling,
    pre_pool: &[Vec<f64>],
    post_pool: &[Vec<f64>],
    grid: &CurveGrid,
    design: &CurveDesign,
) -> Result<Vec<CurvePoint>> {
    let frame = |i: usize| if i < pre_pool.len() { pre_pool[i].as_slice() } else { post_pool[i - pre_pool.len()].as_slice() };
    arl_edd_curve(
        pre_pool.len(),
        post_pool.len(),
        grid,
        design,
        |ids, start| trained.trace_from(&ids.iter().map(|&i| pre_pool[i].as_slice()).collect::<Vec<_>>(), start),
        |ids, onset| trained.trace_from(&ids.iter().map(|&i| frame(i)).collect::<Vec<_>>(), onset),
    )
}

/// Curve for any baseline whose statistic at `t` is a function of the whole
/// prefix: `stat(frames)` returns one value per frame.
pub fn generic_curve<T, S>(pre_pool: &[T], post_pool: &[T], grid: &CurveGrid, design: &CurveDesign, stat: S) -> Result<Vec<CurvePoint>>
where
    T: Sync,
    S: Fn(&[&T]) -> Result<Vec<f64>> + Sync,
{
    let frame = |i: usize| if i < pre_pool.len() { &pre_pool[i] } else { &post_pool[i - pre_pool.len()] };
    let run = |ids: &[usize], start: usize| -> Result<Vec<f64>> {
        let frames: Vec<&T> = ids.iter().map(|&i| frame(i)).collect();
        Ok(stat(&frames)?.split_off(start))
    };
    arl_edd_curve(pre_pool.len(), post_pool.len(), grid, design, run, run)
}
