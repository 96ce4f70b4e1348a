use std::fs;
use std::path::{Path, PathBuf};

use percept::baselines::{hotelling_cusum, mmd_detector, threshold_trace, wasserstein_detector, HotellingModel};
use percept::binning::{bin_diagram, make_equal_mass_bins, make_equal_width_bins, Partition};
use percept::cloud::{Grid, PointCloud};
use percept::datagen::{generate_scenario, Scenario};
use percept::detect::{calibrate_threshold, run_detector, Calibration, DetectorConfig, MonteCarlo};
use percept::embed::{fit_pca, takens_stream};
use percept::experiment::{
    compute_diagrams, compute_image_diagrams, fit_voronoi, frequency_stream, generic_curve, hotelling_curve,
    percept_curve, regime_frames, tilt_all, train_percept, vectorize, CurveDesign, CurveGrid, CurvePoint,
    SyntheticDesign, TrainedHotelling,
};
use percept::io;
use percept::seed;
use percept::tda::{EssentialPolicy, PersistenceDiagram, TiltedDiagram};
use percept::weights::{optimize_weights, pooled_proportions, WeightProblem};
use serde::{Deserialize, Serialize};

use crate::config::{
    ArlEddConfig, BaselineConfig, BinLayout, CalibrateConfig, Config, DetectConfig, DiagramsConfig, Layout, Method,
    Modality, PartitionSpec, SimulateConfig, Source, VectorFormat, WeightsSpec,
};
use crate::CliError;

/// Everything `detect` needs, written by `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub partition: Partition,
    pub essential: EssentialPolicy,
    pub detector: DetectorConfig,
    pub calibration: Calibration,
}

/// Written by `detect` next to the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub frames: usize,
    #[serde(with = "percept::serde_float::scalar")]
    pub threshold: f64,
    /// 0-based frame index of the first alarm.
    pub stopping_time: Option<usize>,
}

/// Output and default input locations inside the output directory.
pub struct OutputDir {
    pub out: PathBuf,
}

impl OutputDir {
    pub fn stream(&self) -> PathBuf {
        self.out.join("stream.csv")
    }
    pub fn frames_dir(&self) -> PathBuf {
        self.out.join("frames")
    }
    pub fn scenario(&self) -> PathBuf {
        self.out.join("scenario.json")
    }
    pub fn diagrams(&self) -> PathBuf {
        self.out.join("diagrams.json")
    }
    pub fn calibration(&self) -> PathBuf {
        self.out.join("calibration.json")
    }
    pub fn trace(&self) -> PathBuf {
        self.out.join("trace.csv")
    }
    pub fn detection(&self) -> PathBuf {
        self.out.join("detection.json")
    }
    pub fn baseline(&self, method: &str) -> PathBuf {
        self.out.join(format!("baseline_{method}.csv"))
    }
    pub fn curve(&self, method: &str) -> PathBuf {
        self.out.join(format!("curve_{method}.csv"))
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
}

fn with_path<T>(path: &Path, r: percept::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::from(e).context(&path.display().to_string()))
}

/// Files in `dir` with one of `exts`, sorted by name.
fn list_files(dir: &Path, exts: &[&str]) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Data(format!("cannot list {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().and_then(|e| e.to_str()).is_some_and(|e| exts.iter().any(|x| e.eq_ignore_ascii_case(x))))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Data(format!("no {} files in {}", exts.join("/"), dir.display())));
    }
    Ok(files)
}

fn select<T>(mut items: Vec<T>, frames: Option<[usize; 2]>, what: &str) -> Result<Vec<T>, CliError> {
    if let Some([a, b]) = frames {
        if a >= b || b > items.len() {
            return Err(CliError::Usage(format!("frame range [{a}, {b}) invalid for {what} with {} frames", items.len())));
        }
        items.truncate(b);
        items.drain(..a);
    }
    Ok(items)
}

pub fn simulate(cfg: &SimulateConfig, seed: u64, out: &OutputDir) -> Result<String, CliError> {
    let scenario = Scenario { seed, ..cfg.scenario.clone() };
    let frames = generate_scenario(&scenario)?;
    ensure_dir(&out.out)?;
    io::write_json(&out.scenario(), &scenario)?;
    let target = match cfg.layout {
        Layout::Packed => {
            io::write_stream_file(&out.stream(), &frames)?;
            out.stream()
        }
        Layout::Frames => {
            let dir = out.frames_dir();
            ensure_dir(&dir)?;
            for (t, f) in frames.iter().enumerate() {
                io::write_point_cloud(&dir.join(format!("frame_{t:05}.csv")), f)?;
            }
            dir
        }
    };
    Ok(format!("wrote {} frames to {}", frames.len(), target.display()))
}

fn load_clouds(input: &Path) -> Result<Vec<PointCloud>, CliError> {
    if input.is_dir() {
        list_files(input, &["csv"])?.iter().map(|p| with_path(p, io::read_point_cloud(p))).collect()
    } else {
        with_path(input, io::read_stream_file(input))
    }
}

fn load_images(input: &Path) -> Result<Vec<Grid>, CliError> {
    let files = if input.is_dir() { list_files(input, &["pgm", "csv"])? } else { vec![input.to_path_buf()] };
    files.iter().map(|p| with_path(p, io::read_image(p))).collect()
}

pub fn diagrams(cfg: &DiagramsConfig, out: &OutputDir) -> Result<String, CliError> {
    let input = cfg.input.clone().unwrap_or_else(|| out.stream());
    let diagrams = match cfg.modality {
        Modality::Pointcloud => compute_diagrams(&load_clouds(&input)?, cfg.max_radius)?,
        Modality::Image => compute_image_diagrams(&load_images(&input)?)?,
        Modality::Timeseries => {
            let w = cfg.window.ok_or_else(|| CliError::Usage("time-series input needs [diagrams] window".into()))?;
            let series = with_path(&input, io::read_series(&input))?;
            compute_diagrams(&takens_stream(&series, w)?, cfg.max_radius)?
        }
    };
    ensure_dir(&out.out)?;
    io::write_diagrams(&out.diagrams(), &diagrams)?;
    Ok(format!("wrote {} diagrams to {}", diagrams.len(), out.diagrams().display()))
}

fn load_diagram_source(src: &Source) -> Result<Vec<PersistenceDiagram>, CliError> {
    select(with_path(&src.file, io::read_diagrams(&src.file))?, src.frames, &src.file.display().to_string())
}

fn merged(diagrams: &[TiltedDiagram]) -> TiltedDiagram {
    TiltedDiagram { features: diagrams.iter().flat_map(|d| d.features.iter().copied()).collect() }
}

pub fn calibrate(cfg: &CalibrateConfig, seed: u64, out: &OutputDir) -> Result<String, CliError> {
    let pre_src = cfg.pre.clone().unwrap_or(Source { file: out.diagrams(), frames: None });
    let pre = tilt_all(&load_diagram_source(&pre_src)?, cfg.essential)?;
    let post = match &cfg.post {
        Some(src) => Some(tilt_all(&load_diagram_source(src)?, cfg.essential)?),
        None => None,
    };

    let partition = match &cfg.partition {
        PartitionSpec::Histogram { bins, layout: BinLayout::EqualWidth } => {
            Partition::Histogram(make_equal_width_bins(&pre, *bins, &cfg.dims)?)
        }
        PartitionSpec::Histogram { bins, layout: BinLayout::EqualMass } => {
            Partition::Histogram(make_equal_mass_bins(&merged(&pre), *bins, &cfg.dims)?)
        }
        PartitionSpec::Voronoi { k_range: [lo, hi] } => {
            let post = post
                .as_ref()
                .ok_or_else(|| CliError::Usage("a voronoi partition needs post-change training diagrams ([calibrate] post)".into()))?;
            let ks: Vec<usize> = (*lo..=*hi).collect();
            fit_voronoi(&pre, post, &cfg.dims, &ks, seed::derive(seed, "clusters", 0))?
        }
        PartitionSpec::File { path } => with_path(path, io::read_json(path))?,
    };

    let l = partition.len();
    let weights = match &cfg.weights {
        WeightsSpec::Uniform => vec![1.0; l],
        WeightsSpec::File { path } => {
            let w: Vec<f64> = with_path(path, io::read_json(path))?;
            if w.len() != l {
                return Err(CliError::Usage(format!("weight file has {} entries, partition has {l} bins", w.len())));
            }
            w
        }
        WeightsSpec::Optimize { rho, mode } => {
            let mut problem = WeightProblem::new(l).with_mode(*mode);
            problem.rho = *rho;
            if let Some(post) = &post {
                problem = problem.with_anchors(pooled_proportions(&pre, &partition), pooled_proportions(post, &partition));
            }
            optimize_weights(&problem, seed::derive(seed, "weights", 0))?.sigma
        }
    };
    let mut detector = DetectorConfig::new(weights, f64::INFINITY, cfg.m0, cfg.m1)?;
    detector.scaling = cfg.scaling;

    let pool: Vec<Vec<f64>> = pre.iter().map(|d| bin_diagram(d, &partition).f).collect();
    let mc = MonteCarlo {
        n_sequences: cfg.monte_carlo.sequences,
        length: cfg.monte_carlo.length,
        history: cfg.monte_carlo.history.unwrap_or(2 * cfg.m1),
        seed: seed::derive(seed, "calibrate", 0),
    };
    let calibration = calibrate_threshold(cfg.target_arl, &pool, &detector, &mc)?;
    detector.threshold = calibration.threshold;
    let file = CalibrationFile { partition, essential: cfg.essential, detector, calibration };
    ensure_dir(&out.out)?;
    io::write_json(&out.calibration(), &file)?;
    Ok(format!(
        "threshold {} ({} bins, estimated ARL {}) written to {}",
        file.calibration.threshold,
        l,
        file.calibration.arl,
        out.calibration().display()
    ))
}

pub fn detect(cfg: &DetectConfig, out: &OutputDir) -> Result<String, CliError> {
    let cal_path = cfg.calibration.clone().unwrap_or_else(|| out.calibration());
    let cal: CalibrationFile = with_path(&cal_path, io::read_json(&cal_path))?;
    let diag_path = cfg.diagrams.clone().unwrap_or_else(|| out.diagrams());
    let diagrams = with_path(&diag_path, io::read_diagrams(&diag_path))?;
    let mut detector = cal.detector;
    if let Some(b) = cfg.threshold {
        detector.threshold = b;
    }
    let stream = frequency_stream(&diagrams, &cal.partition, cal.essential)?;
    let result = run_detector(&stream, &detector)?;
    let summary = DetectionSummary { frames: stream.len(), threshold: detector.threshold, stopping_time: result.stopping_time };
    ensure_dir(&out.out)?;
    io::write_trace_file(&out.trace(), &result.trace)?;
    io::write_json(&out.detection(), &summary)?;
    Ok(match result.stopping_time {
        Some(t) => format!("alarm at frame {t} of {}", stream.len()),
        None => format!("no alarm in {} frames", stream.len()),
    })
}

fn load_vectors(input: &Path, format: VectorFormat) -> Result<Vec<Vec<f64>>, CliError> {
    with_path(
        input,
        match format {
            VectorFormat::Stream => io::read_stream_file(input).map(|f| vectorize(&f)),
            VectorFormat::Series => io::read_series(input),
        },
    )
}

pub fn baseline(cfg: &BaselineConfig, out: &OutputDir) -> Result<String, CliError> {
    let (name, trace) = match cfg {
        BaselineConfig::Hotelling { input, format, training, training_frames, window, components, drift, threshold } => {
            let stream = load_vectors(&input.clone().unwrap_or_else(|| out.stream()), *format)?;
            let train = match (training, training_frames) {
                (Some(src), _) => select(load_vectors(&src.file, *format)?, src.frames, "training vectors")?,
                (None, Some(n)) => select(stream.clone(), Some([0, *n]), "training vectors")?,
                (None, None) => {
                    return Err(CliError::Usage("hotelling needs `training` or `training_frames`".into()));
                }
            };
            let (train, stream) = match components {
                Some(r) => {
                    let pca = fit_pca(&train, *r)?;
                    let project = |v: &[Vec<f64>]| v.iter().map(|x| pca.project(x)).collect::<percept::Result<Vec<_>>>();
                    (project(&train)?, project(&stream)?)
                }
                None => (train, stream),
            };
            let model = HotellingModel::fit(&train, *window, *drift)?;
            ("hotelling", threshold_trace(&hotelling_cusum(&stream, &model)?, *threshold, 0))
        }
        BaselineConfig::Mmd { input, format, w_pre, w_post, threshold } => {
            let stream = load_vectors(&input.clone().unwrap_or_else(|| out.stream()), *format)?;
            ("mmd", threshold_trace(&mmd_detector(&stream, *w_pre, *w_post)?, *threshold, 0))
        }
        BaselineConfig::Wasserstein { diagrams, threshold } => {
            let path = diagrams.clone().unwrap_or_else(|| out.diagrams());
            let d = with_path(&path, io::read_diagrams(&path))?;
            // The distance between frames t-1 and t is reported at t.
            ("wasserstein", threshold_trace(&wasserstein_detector(&d)?, *threshold, 1))
        }
    };
    ensure_dir(&out.out)?;
    let path = out.baseline(name);
    io::write_trace_file(&path, &trace)?;
    let first = trace.stopping_time();
    Ok(format!(
        "{name} trace of {} values written to {}{}",
        trace.len(),
        path.display(),
        first.map(|t| format!("; first alarm at frame {t}")).unwrap_or_default()
    ))
}

pub fn arl_edd(cfg: &ArlEddConfig, seed: u64, out: &OutputDir) -> Result<String, CliError> {
    let grid = match (&cfg.targets, &cfg.thresholds) {
        (Some(t), None) => CurveGrid::Targets(t.clone()),
        (None, Some(b)) => CurveGrid::Thresholds(b.clone()),
        _ => return Err(CliError::Usage("give exactly one of `targets` or `thresholds` in [arl_edd]".into())),
    };
    let scenario = Scenario { seed, ..cfg.scenario.clone() };
    let history = |h: Option<usize>| h.unwrap_or(2 * cfg.m1);
    let design = CurveDesign {
        arl: MonteCarlo {
            n_sequences: cfg.monte_carlo.sequences,
            length: cfg.monte_carlo.length,
            history: history(cfg.monte_carlo.history),
            seed: seed::derive(seed, "arl-mc", 0),
        },
        edd_sequences: cfg.edd.sequences,
        edd_history: history(cfg.edd.history),
        edd_horizon: cfg.edd.horizon,
        edd_seed: seed::derive(seed, "arl-edd", 0),
    };
    let post_frames = regime_frames(&scenario, true, cfg.pool_frames, seed, "pool-post")?;
    let curve: Vec<CurvePoint> = match cfg.method {
        Method::Percept => {
            let synthetic = SyntheticDesign {
                scenario: scenario.clone(),
                dims: cfg.dims.clone(),
                k_range: (cfg.k_range[0]..=cfg.k_range[1]).collect(),
                training_frames: cfg.training_frames,
                pool_frames: cfg.pool_frames,
                m0: cfg.m0,
                m1: cfg.m1,
                max_radius: cfg.max_radius,
                pca_components: cfg.pca_components,
                hotelling_window: cfg.hotelling_window,
                seed,
            };
            let trained = train_percept(&synthetic)?;
            let post = trained.frequencies(&post_frames, cfg.max_radius)?;
            percept_curve(&trained.config, &trained.pre_pool, &post, &grid, &design)?
        }
        Method::Hotelling => {
            let pre = vectorize(&regime_frames(&scenario, false, cfg.pool_frames, seed, "pool-pre")?);
            let trained = TrainedHotelling::fit(&pre, cfg.pca_components, cfg.hotelling_window)?;
            let post = trained.project(&vectorize(&post_frames))?;
            hotelling_curve(&trained, &trained.project(&pre)?, &post, &grid, &design)?
        }
        Method::Mmd => {
            let pre = vectorize(&regime_frames(&scenario, false, cfg.pool_frames, seed, "pool-pre")?);
            let post = vectorize(&post_frames);
            let w = cfg.mmd_window;
            generic_curve(&pre, &post, &grid, &design, |frames: &[&Vec<f64>]| {
                mmd_detector(&frames.iter().map(|v| v.to_vec()).collect::<Vec<_>>(), w, w)
            })?
        }
        Method::Wasserstein => {
            let pre = compute_diagrams(&regime_frames(&scenario, false, cfg.pool_frames, seed, "pool-pre")?, cfg.max_radius)?;
            let post = compute_diagrams(&post_frames, cfg.max_radius)?;
            generic_curve(&pre, &post, &grid, &design, |frames: &[&PersistenceDiagram]| {
                let owned: Vec<PersistenceDiagram> = frames.iter().map(|d| (*d).clone()).collect();
                let mut values = vec![f64::NEG_INFINITY];
                values.extend(wasserstein_detector(&owned)?);
                Ok(values)
            })?
        }
    };
    ensure_dir(&out.out)?;
    let path = out.curve(cfg.method.name());
    io::write_curve(std::io::BufWriter::new(fs::File::create(&path).map_err(percept::Error::from)?), &curve)?;
    Ok(format!("{} curve with {} points written to {}", cfg.method.name(), curve.len(), path.display()))
}

/// Runs one command with the master seed and output directory already
/// resolved.
pub fn dispatch(command: crate::Command, config: &Config, seed: u64, out: &Path) -> Result<String, CliError> {
    let layout = OutputDir { out: out.to_path_buf() };
    match command {
        crate::Command::Simulate => simulate(config.section(&config.simulate, "simulate")?, seed, &layout),
        crate::Command::Diagrams => diagrams(config.diagrams.as_ref().unwrap_or(&DiagramsConfig::default()), &layout),
        crate::Command::Calibrate => calibrate(config.section(&config.calibrate, "calibrate")?, seed, &layout),
        crate::Command::Detect => detect(config.detect.as_ref().unwrap_or(&DetectConfig::default()), &layout),
        crate::Command::Baseline => baseline(config.section(&config.baseline, "baseline")?, &layout),
        crate::Command::ArlEdd => arl_edd(config.section(&config.arl_edd, "arl_edd")?, seed, &layout),
    }
}
