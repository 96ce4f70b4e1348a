//! The online detector: interval aggregation, weighted cross statistic,
//! window-limited scan, stopping rule and threshold calibration.

mod arl;
mod buffer;
mod calibrate;
mod stat;

pub use arl::{arl_approximation, nu, sigma_p_squared};
pub use buffer::StreamBuffer;
pub use calibrate::{
    arl_from_maxima, calibrate_from_maxima, calibrate_threshold, censored_arl, estimate_edd, estimate_edd_with,
    simulate_pre_maxima, threshold_grid, Calibration, EddEstimate, MonteCarlo,
};
pub use stat::{chi_statistic, interval_proportions, scan_statistic, DetectorConfig, Scaling};

use serde::{Deserialize, Serialize};
use stat::ScanScratch;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    /// `-inf` when no split is admissible at `t`.
    pub chi_max: f64,
    pub k_star: Option<usize>,
    pub alarm: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatTrace {
    pub records: Vec<TraceRecord>,
}

impl StatTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// First alarm time.
    pub fn stopping_time(&self) -> Option<usize> {
        self.records.iter().find(|r| r.alarm).map(|r| r.t)
    }

    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.chi_max).collect()
    }
}

/// Online detector over a stream of frequency vectors.
#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    buffer: StreamBuffer,
    k_min: usize,
    scratch: ScanScratch,
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        let buffer = StreamBuffer::new(config.bins(), config.buffer_capacity());
        Ok(Self { config, buffer, k_min: 0, scratch: ScanScratch::default() })
    }

    /// Only consider change times `k >= k_min`; earlier frames serve as history.
    pub fn with_min_change(mut self, k_min: usize) -> Self {
        self.k_min = k_min;
        self
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn buffer(&self) -> &StreamBuffer {
        &self.buffer
    }

    pub fn push(&mut self, f: Vec<f64>) -> Result<TraceRecord> {
        self.buffer.push(f)?;
        let t = self.buffer.latest().expect("frame just pushed");
        let scan = stat::scan_with(&self.buffer, t, &self.config, self.k_min, &mut self.scratch);
        let (chi_max, k_star) = match scan {
            Some((v, k)) => (v, Some(k)),
            None => (f64::NEG_INFINITY, None),
        };
        Ok(TraceRecord { t, chi_max, k_star, alarm: chi_max >= self.config.threshold })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub trace: StatTrace,
    pub stopping_time: Option<usize>,
}

/// Runs the detector over the whole stream; the trace continues past the alarm.
pub fn run_detector(stream: &[Vec<f64>], config: &DetectorConfig) -> Result<DetectionResult> {
    let mut det = Detector::new(config.clone())?;
    let mut trace = StatTrace::default();
    for f in stream {
        trace.records.push(det.push(f.clone())?);
    }
    let stopping_time = trace.stopping_time();
    Ok(DetectionResult { trace, stopping_time })
}

/// Scan values for `frames[start..]`, with `frames[..start]` as history and
/// change times below `k_min` excluded.
pub fn scan_trace<'a>(
    frames: impl IntoIterator<Item = &'a [f64]>,
    config: &DetectorConfig,
    start: usize,
    k_min: usize,
) -> Result<Vec<f64>> {
    let mut det = Detector::new(config.clone())?.with_min_change(k_min);
    let mut out = Vec::new();
    for (i, f) in frames.into_iter().enumerate() {
        let r = det.push(f.to_vec())?;
        if i >= start {
            out.push(r.chi_max);
        }
    }
    Ok(out)
}
