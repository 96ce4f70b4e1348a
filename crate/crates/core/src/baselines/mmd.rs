use crate::cloud::squared_euclidean;
use crate::error::{Error, Result};

/// Biased (V-statistic) squared MMD with kernel `exp(-|x - y|^2 / (2 h^2))`;
/// self-pairs are included, so identical sample sets give exactly 0.
pub fn mmd_statistic(pre: &[Vec<f64>], post: &[Vec<f64>], bandwidth: f64) -> Result<f64> {
    if pre.is_empty() || post.is_empty() {
        return Err(Error::EmptyInput("MMD sample set"));
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let dim = pre[0].len();
    if let Some(bad) = pre.iter().chain(post).find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
    }
    // Sum in a canonical order so equal multisets give bit-identical block sums.
    let sorted = |v: &[Vec<f64>]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
        v
    };
    let (pre, post) = (sorted(pre), sorted(post));
    let g = -0.5 / (bandwidth * bandwidth);
    let block = |a: &[Vec<f64>], b: &[Vec<f64>]| -> f64 {
        let mut s = 0.0;
        for x in a {
            for y in b {
                s += (g * squared_euclidean(x, y)).exp();
            }
        }
        s / (a.len() * b.len()) as f64
    };
    let v = block(&pre, &pre) + block(&post, &post) - 2.0 * block(&pre, &post);
    // The population value is nonnegative; clamp rounding below zero.
    Ok(v.max(0.0))
}

/// Median of the pairwise Euclidean distances (mean of the middle two for an
/// even count).
pub fn median_heuristic(samples: &[Vec<f64>]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::EmptyInput("samples (need at least 2)"));
    }
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(squared_euclidean(&samples[i], &samples[j]).sqrt());
        }
    }
    let m = d.len();
    let (_, &mut hi, _) = d.select_nth_unstable_by(m / 2, f64::total_cmp);
    let med = if m % 2 == 1 {
        hi
    } else {
        let lo = d[..m / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    };
    if !(med > 0.0) {
        return Err(Error::invalid("median pairwise distance is zero"));
    }
    Ok(med)
}

/// Sliding two-block MMD: at `t`, pre = frames `(t - w_pre - w_post, t - w_post]`,
/// post = `(t - w_post, t]`, bandwidth by the median heuristic on their union.
/// Entries before `t = w_pre + w_post - 1` are `-inf`; so are blocks whose
/// frames all coincide (zero bandwidth).
pub fn mmd_detector(stream: &[Vec<f64>], w_pre: usize, w_post: usize) -> Result<Vec<f64>> {
    if w_pre == 0 || w_post == 0 {
        return Err(Error::invalid("MMD windows must be positive"));
    }
    let span = w_pre + w_post;
    (0..stream.len())
        .map(|t| {
            if t + 1 < span {
                return Ok(f64::NEG_INFINITY);
            }
            let block = &stream[t + 1 - span..=t];
            let (pre, post) = block.split_at(w_pre);
            match median_heuristic(block) {
                Ok(h) => mmd_statistic(pre, post, h),
                Err(Error::InvalidParameter(_)) => Ok(f64::NEG_INFINITY),
                Err(e) => Err(e),
            }
        })
        .collect()
}
