use serde::{Deserialize, Serialize};

use super::buffer::StreamBuffer;
use crate::error::{Error, Result};

/// Multiplier applied to the cross-form statistic of a candidate split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// The bare cross form.
    None,
    /// Multiply by the interval length `delta = floor((t - k) / 2)`, which
    /// makes the statistic O(1) under no change.
    #[default]
    HalfWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Diagonal of the weight matrix, one entry per bin.
    pub weights: Vec<f64>,
    #[serde(with = "crate::serde_float::scalar")]
    pub threshold: f64,
    pub m0: usize,
    pub m1: usize,
    #[serde(default)]
    pub scaling: Scaling,
}

impl DetectorConfig {
    pub fn new(weights: Vec<f64>, threshold: f64, m0: usize, m1: usize) -> Result<Self> {
        let c = Self { weights, threshold, m0, m1, scaling: Scaling::default() };
        c.validate()?;
        Ok(c)
    }

    pub fn uniform(l: usize, threshold: f64, m0: usize, m1: usize) -> Result<Self> {
        Self::new(vec![1.0; l], threshold, m0, m1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::invalid("weights must not be empty"));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        if self.threshold.is_nan() {
            return Err(Error::NonFinite("threshold"));
        }
        if self.m0 < 4 {
            return Err(Error::invalid(format!("m0 must be at least 4, got {}", self.m0)));
        }
        if self.m1 <= self.m0 {
            return Err(Error::invalid(format!("m1 ({}) must exceed m0 ({})", self.m1, self.m0)));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.weights.len()
    }

    /// Frames the buffer must retain: the widest split reaches `2 * m1` back.
    pub fn buffer_capacity(&self) -> usize {
        2 * self.m1 + 1
    }
}

/// Proportions over the four intervals `(k-2d, k-d]`, `(k-d, k]`, `(k, k+d]`,
/// `(k+d, t]` with `d = floor((t-k)/2)`. The last interval takes the extra
/// frame when `t - k` is odd. Frequencies are summed within an interval and
/// then normalized; an interval with no mass gets uniform proportions.
pub fn interval_proportions(buffer: &StreamBuffer, t: usize, k: usize) -> Result<[Vec<f64>; 4]> {
    let d = half_window(t, k)?;
    let first = (k + 1).checked_sub(2 * d).filter(|&s| s >= buffer.oldest());
    let Some(first) = first else {
        return Err(Error::InsufficientHistory { needed: 2 * d, available: k + 1 - buffer.oldest().min(k + 1) });
    };
    if buffer.latest().is_none_or(|last| last < t) {
        return Err(Error::invalid(format!("frame {t} not yet observed")));
    }
    let starts = [first, k + 1 - d, k + 1, k + 1 + d, t + 1];
    let mut out: [Vec<f64>; 4] = Default::default();
    for (i, w) in starts.windows(2).enumerate() {
        let mut s = vec![0.0; buffer.dim()];
        for frame in w[0]..w[1] {
            for (acc, x) in s.iter_mut().zip(buffer.get(frame).expect("frame in buffer")) {
                *acc += x;
            }
        }
        out[i] = normalize(s);
    }
    Ok(out)
}

fn half_window(t: usize, k: usize) -> Result<usize> {
    let d = t.checked_sub(k).map(|s| s / 2).unwrap_or(0);
    if d == 0 {
        return Err(Error::invalid(format!("split k = {k} leaves empty intervals before t = {t}")));
    }
    Ok(d)
}

pub(crate) fn normalize(mut s: Vec<f64>) -> Vec<f64> {
    let total: f64 = s.iter().sum();
    if total > 0.0 {
        s.iter_mut().for_each(|x| *x /= total);
    } else {
        let u = 1.0 / s.len() as f64;
        s.iter_mut().for_each(|x| *x = u);
    }
    s
}

/// Weighted cross form `(w11 - w21)' diag(sigma) (w12 - w22)`.
pub fn chi_statistic(w11: &[f64], w12: &[f64], w21: &[f64], w22: &[f64], sigma: &[f64]) -> Result<f64> {
    let l = sigma.len();
    for v in [w11, w12, w21, w22] {
        if v.len() != l {
            return Err(Error::DimensionMismatch { expected: l, found: v.len() });
        }
    }
    Ok((0..l).map(|i| (w11[i] - w21[i]) * sigma[i] * (w12[i] - w22[i])).sum())
}

/// Scratch space reused across scans.
#[derive(Debug, Default, Clone)]
pub(crate) struct ScanScratch {
    prefix: Vec<f64>,
    groups: [Vec<f64>; 4],
}

/// Maximum of the (scaled) statistic over `k` in
/// `[max(k_min, t - m1), t - m0]` whose intervals are covered by the buffer.
/// Returns `None` when no split is admissible; ties keep the smallest `k`.
pub fn scan_statistic(buffer: &StreamBuffer, t: usize, config: &DetectorConfig, k_min: usize) -> Option<(f64, usize)> {
    scan_with(buffer, t, config, k_min, &mut ScanScratch::default())
}

pub(crate) fn scan_with(
    buffer: &StreamBuffer,
    t: usize,
    config: &DetectorConfig,
    k_min: usize,
    scratch: &mut ScanScratch,
) -> Option<(f64, usize)> {
    let l = buffer.dim();
    let oldest = buffer.oldest();
    if buffer.latest() != Some(t) || t < config.m0 {
        return None;
    }
    let hi = t - config.m0;
    let lo = k_min.max(t.saturating_sub(config.m1));
    if lo > hi {
        return None;
    }
    buffer.prefix_sums(&mut scratch.prefix);
    let p = &scratch.prefix;
    let mut best: Option<(f64, usize)> = None;
    for k in lo..=hi {
        let d = (t - k) / 2;
        if k + 1 < 2 * d || k + 1 - 2 * d < oldest {
            continue;
        }
        // Interval g covers frames starts[g] .. starts[g + 1]; prefix row
        // `x - oldest` sums the frames before x.
        let starts = [k + 1 - 2 * d, k + 1 - d, k + 1, k + 1 + d, t + 1];
        for g in 0..4 {
            let (ra, rb) = ((starts[g] - oldest) * l, (starts[g + 1] - oldest) * l);
            let v = &mut scratch.groups[g];
            v.clear();
            v.extend((0..l).map(|c| p[rb + c] - p[ra + c]));
            let total: f64 = v.iter().sum();
            if total > 0.0 {
                v.iter_mut().for_each(|x| *x /= total);
            } else {
                v.iter_mut().for_each(|x| *x = 1.0 / l as f64);
            }
        }
        let [g11, g12, g21, g22] = &scratch.groups;
        let mut chi = 0.0;
        for i in 0..l {
            chi += (g11[i] - g21[i]) * config.weights[i] * (g12[i] - g22[i]);
        }
        if config.scaling == Scaling::HalfWindow {
            chi *= d as f64;
        }
        if best.is_none_or(|(v, _)| chi > v) {
            best = Some((chi, k));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_value() {
        let v = chi_statistic(&[0.6, 0.4], &[0.5, 0.5], &[0.2, 0.8], &[0.3, 0.7], &[1.0, 1.0]).unwrap();
        assert!((v - 0.16).abs() < 1e-15);
        let doubled = chi_statistic(&[0.6, 0.4], &[0.5, 0.5], &[0.2, 0.8], &[0.3, 0.7], &[2.0, 2.0]).unwrap();
        assert!((doubled - 0.32).abs() < 1e-15);
        assert_eq!(chi_statistic(&[0.6, 0.4], &[0.5, 0.5], &[0.6, 0.4], &[0.3, 0.7], &[1.0, 1.0]).unwrap(), 0.0);
        assert!(chi_statistic(&[0.6], &[0.5, 0.5], &[0.2, 0.8], &[0.3, 0.7], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn interval_lengths() {
        let mut b = StreamBuffer::new(2, 64);
        for i in 0..20 {
            b.push(vec![1.0, i as f64]).unwrap();
        }
        // t - k = 4: two frames per interval.
        let w = interval_proportions(&b, 19, 15).unwrap();
        assert!((w[3][1] - (18.0 + 19.0) / (2.0 + 18.0 + 19.0)).abs() < 1e-15);
        // t - k = 5: d = 2 and the last interval holds frames 17..=19.
        let w = interval_proportions(&b, 19, 14).unwrap();
        assert!((w[3][0] - 3.0 / (3.0 + 17.0 + 18.0 + 19.0)).abs() < 1e-15);
        assert!((w[0][1] - (11.0 + 12.0) / (2.0 + 11.0 + 12.0)).abs() < 1e-15);
        assert!(interval_proportions(&b, 19, 19).is_err());
        assert!(interval_proportions(&b, 19, 1).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::uniform(2, 1.0, 3, 10).is_err());
        assert!(DetectorConfig::uniform(2, 1.0, 20, 20).is_err());
        assert!(DetectorConfig::new(vec![1.0, -1.0], 1.0, 20, 80).is_err());
        assert!(DetectorConfig::uniform(2, f64::INFINITY, 20, 80).is_ok());
    }
}
