//! Comparison detectors: Hotelling T² CUSUM, kernel MMD over sliding blocks,
//! and the Wasserstein distance between adjacent persistence diagrams.

mod hotelling;
mod mmd;
mod wasserstein;

pub use hotelling::{hotelling_cusum, Drift, HotellingModel};
pub use mmd::{median_heuristic, mmd_detector, mmd_statistic};
pub use wasserstein::wasserstein_detector;

use crate::detect::{StatTrace, TraceRecord};

/// Wraps a baseline statistic sequence in the detector trace format; entry `i`
/// is reported at time `first_t + i`. Non-finite values never alarm.
pub fn threshold_trace(values: &[f64], threshold: f64, first_t: usize) -> StatTrace {
    StatTrace {
        records: values
            .iter()
            .enumerate()
            .map(|(i, &v)| TraceRecord { t: first_t + i, chi_max: v, k_star: None, alarm: v.is_finite() && v >= threshold })
            .collect(),
    }
}
