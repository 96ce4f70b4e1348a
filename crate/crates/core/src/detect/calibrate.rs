use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scan_trace;
use super::stat::DetectorConfig;
use crate::error::{Error, Result};
use crate::seed;

/// Monte-Carlo design: `n_sequences` sequences, each with `history` burn-in
/// frames followed by `length` monitored frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub n_sequences: usize,
    pub length: usize,
    pub history: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    #[serde(with = "crate::serde_float::scalar")]
    pub target_arl: f64,
    pub threshold: f64,
    /// Estimated ARL at the chosen threshold.
    #[serde(with = "crate::serde_float::scalar")]
    pub arl: f64,
    pub grid: Vec<f64>,
    #[serde(with = "crate::serde_float::vec")]
    pub grid_arl: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EddEstimate {
    pub threshold: f64,
    pub mean_delay: f64,
    /// Sequences without an alarm, counted at the censoring horizon.
    pub censored: usize,
    pub n_sequences: usize,
}

/// Maximum monitored statistic of each simulated pre-change sequence.
///
/// Frames are drawn from a pool of `pool_len` items with replacement.
/// `trace(ids, start)` must return the statistic at monitored positions
/// `start..ids.len()`.
pub fn simulate_pre_maxima<F>(pool_len: usize, mc: &MonteCarlo, trace: F) -> Result<Vec<f64>>
where
    F: Fn(&[usize], usize) -> Result<Vec<f64>> + Sync,
{
    if pool_len == 0 {
        return Err(Error::EmptyInput("pre-change pool"));
    }
    if mc.n_sequences == 0 || mc.length == 0 {
        return Err(Error::invalid("need at least one sequence of positive length"));
    }
    (0..mc.n_sequences)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(mc.seed, "mc-pre", i as u64);
            let ids: Vec<usize> = (0..mc.history + mc.length).map(|_| rng.random_range(0..pool_len)).collect();
            let v = trace(&ids, mc.history)?;
            Ok(v.into_iter().fold(f64::NEG_INFINITY, f64::max))
        })
        .collect()
}

/// `m / (-ln p)` with `p` the fraction of maxima below `b`.
pub fn arl_from_maxima(maxima: &[f64], b: f64, m: usize) -> f64 {
    let below = maxima.iter().filter(|&&x| x < b).count();
    if below == maxima.len() {
        return f64::INFINITY;
    }
    if below == 0 {
        return 0.0;
    }
    let p = below as f64 / maxima.len() as f64;
    m as f64 / -p.ln()
}

/// 60 log-spaced thresholds between the 50th and 99.9th percentiles of the
/// finite maxima. A nonpositive lower end is replaced by `upper * 1e-3`.
pub fn threshold_grid(maxima: &[f64]) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = maxima.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return Err(Error::EmptyInput("finite simulated maxima"));
    }
    v.sort_by(f64::total_cmp);
    let upper = quantile(&v, 0.999);
    if !(upper > 0.0) {
        return Err(Error::invalid(format!("simulated maxima are nonpositive (99.9th percentile {upper})")));
    }
    let mut lower = quantile(&v, 0.5);
    if !(lower > 0.0) {
        lower = upper * 1e-3;
    }
    let (ll, lu) = (lower.ln(), upper.ln());
    Ok((0..60).map(|i| (ll + (lu - ll) * i as f64 / 59.0).exp()).collect())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Smallest grid threshold whose estimated ARL reaches `target_arl`.
pub fn calibrate_from_maxima(target_arl: f64, maxima: &[f64], m: usize) -> Result<Calibration> {
    if !(target_arl > 0.0) {
        return Err(Error::invalid(format!("target ARL must be positive, got {target_arl}")));
    }
    let grid = threshold_grid(maxima)?;
    let grid_arl: Vec<f64> = grid.iter().map(|&b| arl_from_maxima(maxima, b, m)).collect();
    match grid_arl.iter().position(|&a| a >= target_arl) {
        Some(i) => Ok(Calibration { target_arl, threshold: grid[i], arl: grid_arl[i], grid, grid_arl }),
        None => Err(Error::UnreachableTarget {
            target: target_arl,
            attained: grid_arl.iter().copied().fold(0.0, f64::max),
        }),
    }
}

/// Monte-Carlo threshold for the detector, ignoring `config.threshold`.
pub fn calibrate_threshold(
    target_arl: f64,
    pre_pool: &[Vec<f64>],
    config: &DetectorConfig,
    mc: &MonteCarlo,
) -> Result<Calibration> {
    config.validate()?;
    if mc.length <= config.m0 {
        return Err(Error::invalid(format!("sequence length {} must exceed m0 = {}", mc.length, config.m0)));
    }
    let maxima = simulate_pre_maxima(pre_pool.len(), mc, |ids, start| {
        scan_trace(ids.iter().map(|&i| pre_pool[i].as_slice()), config, start, 0)
    })?;
    calibrate_from_maxima(target_arl, &maxima, mc.length)
}

/// Delays for several thresholds from one set of simulated sequences.
///
/// Ids below `pre_len` refer to the pre-change pool, the rest to the
/// post-change pool offset by `pre_len`. Each sequence has `m_pre` history
/// frames and `m_post` post-change frames; `trace(ids, m_pre)` returns the
/// statistic from the change onset on. The delay of an alarm at onset + i is
/// `i`; sequences without an alarm count as `m_post`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_edd_with<F>(
    pre_len: usize,
    post_len: usize,
    thresholds: &[f64],
    n_sequences: usize,
    m_pre: usize,
    m_post: usize,
    seed: u64,
    trace: F,
) -> Result<Vec<EddEstimate>>
where
    F: Fn(&[usize], usize) -> Result<Vec<f64>> + Sync,
{
    if pre_len == 0 || post_len == 0 {
        return Err(Error::EmptyInput("change pools"));
    }
    if n_sequences == 0 || m_post == 0 {
        return Err(Error::invalid("need at least one sequence with post-change frames"));
    }
    let traces: Vec<Vec<f64>> = (0..n_sequences)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(seed, "mc-edd", i as u64);
            let mut ids: Vec<usize> = (0..m_pre).map(|_| rng.random_range(0..pre_len)).collect();
            ids.extend((0..m_post).map(|_| pre_len + rng.random_range(0..post_len)));
            trace(&ids, m_pre)
        })
        .collect::<Result<_>>()?;
    Ok(thresholds
        .iter()
        .map(|&b| {
            let mut total = 0.0;
            let mut censored = 0;
            for v in &traces {
                match v.iter().take(m_post).position(|&x| x >= b) {
                    Some(i) => total += i as f64,
                    None => {
                        total += m_post as f64;
                        censored += 1;
                    }
                }
            }
            EddEstimate { threshold: b, mean_delay: total / n_sequences as f64, censored, n_sequences }
        })
        .collect())
}

/// Expected detection delay of the detector at threshold `b`; change times
/// before the onset are excluded so the pre-change frames act as history only.
#[allow(clippy::too_many_arguments)]
pub fn estimate_edd(
    pre_pool: &[Vec<f64>],
    post_pool: &[Vec<f64>],
    b: f64,
    config: &DetectorConfig,
    n_sequences: usize,
    m_pre: usize,
    m_post: usize,
    seed: u64,
) -> Result<EddEstimate> {
    config.validate()?;
    let need = 2 * (config.m0 / 2);
    if m_pre < need {
        return Err(Error::InsufficientHistory { needed: need, available: m_pre });
    }
    let frame = |i: usize| if i < pre_pool.len() { pre_pool[i].as_slice() } else { post_pool[i - pre_pool.len()].as_slice() };
    let mut out = estimate_edd_with(pre_pool.len(), post_pool.len(), &[b], n_sequences, m_pre, m_post, seed, |ids, start| {
        scan_trace(ids.iter().map(|&i| frame(i)), config, start, start)
    })?;
    Ok(out.remove(0))
}

/// Censored-exponential ARL estimate from monitored runs of length `m`:
/// total exposure divided by the number of alarms. `first_alarm[i]` is the
/// 0-based position of the first alarm in run `i`.
pub fn censored_arl(first_alarm: &[Option<usize>], m: usize) -> f64 {
    let alarms = first_alarm.iter().filter(|a| a.is_some()).count();
    if alarms == 0 {
        return f64::INFINITY;
    }
    let exposure: usize = first_alarm.iter().map(|a| a.map_or(m, |i| (i + 1).min(m))).sum();
    exposure as f64 / alarms as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arl_estimate_edges() {
        let maxima = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(arl_from_maxima(&maxima, 5.0, 100), f64::INFINITY);
        assert_eq!(arl_from_maxima(&maxima, 0.5, 100), 0.0);
        let p: f64 = 0.5;
        assert!((arl_from_maxima(&maxima, 2.5, 100) - 100.0 / -p.ln()).abs() < 1e-12);
    }

    #[test]
    fn grid_spans_percentiles() {
        let maxima: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        let g = threshold_grid(&maxima).unwrap();
        assert_eq!(g.len(), 60);
        assert!((g[0] - 500.5).abs() < 1e-9);
        assert!((g[59] - 999.001).abs() < 1e-6);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let neg = [-3.0, -2.0, -1.0, 2.0];
        assert!((threshold_grid(&neg).unwrap()[0] - quantile(&[-3.0, -2.0, -1.0, 2.0], 0.999) * 1e-3).abs() < 1e-12);
    }

    #[test]
    fn unreachable_target_reports_attained() {
        let maxima: Vec<f64> = (0..10).map(|i| 1.0 + i as f64).collect();
        match calibrate_from_maxima(1e12, &maxima, 10) {
            Err(Error::UnreachableTarget { attained, .. }) => assert!(attained > 0.0 && attained.is_finite()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn censored_estimate() {
        assert_eq!(censored_arl(&[None, None], 100), f64::INFINITY);
        assert_eq!(censored_arl(&[Some(9), None], 100), 110.0);
    }
}
