use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, nearest};
use crate::error::{Error, Result};
use crate::seed;
use crate::tda::TiltedDiagram;

const DEDUP_TOL: f64 = 1e-9;

/// Nearest-center cells in the (birth, persistence) plane, one set of centers
/// per homology dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiPartition {
    dims: Vec<usize>,
    centers: Vec<Vec<[f64; 2]>>,
}

impl VoronoiPartition {
    /// Coincident centers (within 1e-9) are merged, keeping the first.
    pub fn from_centers(dims: Vec<usize>, centers: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        if dims.is_empty() || dims.len() != centers.len() {
            return Err(Error::invalid("one center list per homology dimension required"));
        }
        let mut kept = Vec::with_capacity(centers.len());
        for cs in centers {
            if cs.is_empty() {
                return Err(Error::invalid("every homology dimension needs at least one center"));
            }
            let mut uniq: Vec<[f64; 2]> = Vec::with_capacity(cs.len());
            for c in cs {
                if !c[0].is_finite() || !c[1].is_finite() {
                    return Err(Error::NonFinite("cluster centers"));
                }
                if !uniq.iter().any(|u| (u[0] - c[0]).abs() <= DEDUP_TOL && (u[1] - c[1]).abs() <= DEDUP_TOL) {
                    uniq.push(c);
                }
            }
            kept.push(uniq);
        }
        let total: usize = kept.iter().map(Vec::len).sum();
        if total < 2 {
            return Err(Error::invalid("a Voronoi partition needs at least 2 distinct centers"));
        }
        Ok(Self { dims, centers: kept })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn centers(&self) -> &[Vec<[f64; 2]>] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn cell_of(&self, dim: usize, birth: f64, persistence: f64) -> Option<usize> {
        let block = self.dims.iter().position(|&d| d == dim)?;
        let offset: usize = self.centers[..block].iter().map(Vec::len).sum();
        Some(offset + nearest(&[birth, persistence], &self.centers[block]).0)
    }
}

pub(crate) fn pooled_points(diagrams: &[TiltedDiagram], dim: usize) -> Vec<[f64; 2]> {
    diagrams
        .iter()
        .flat_map(|d| d.features.iter())
        .filter(|f| f.dim == dim)
        .map(|f| [f.birth, f.persistence])
        .collect()
}

/// k-means centers of the pooled pre-change and post-change points, per
/// dimension, merged into one partition. `k_pre[i]` and `k_post[i]` apply to
/// `dims[i]`.
pub fn fit_persistence_clusters(
    pre: &[TiltedDiagram],
    post: &[TiltedDiagram],
    dims: &[usize],
    k_pre: &[usize],
    k_post: &[usize],
    seed: u64,
) -> Result<VoronoiPartition> {
    if pre.is_empty() || post.is_empty() {
        return Err(Error::EmptyInput("training diagrams (both regimes are required)"));
    }
    if k_pre.len() != dims.len() || k_post.len() != dims.len() {
        return Err(Error::invalid("cluster counts must be given per homology dimension"));
    }
    let mut centers = Vec::with_capacity(dims.len());
    for (i, &dim) in dims.iter().enumerate() {
        let mut cs = Vec::new();
        for (tag, set, k) in [("kmeans-pre", pre, k_pre[i]), ("kmeans-post", post, k_post[i])] {
            let pts = pooled_points(set, dim);
            let mut rng = seed::rng(seed, tag, dim as u64);
            cs.extend(kmeans(&pts, k, &mut rng)?.centers);
        }
        centers.push(cs);
    }
    VoronoiPartition::from_centers(dims.to_vec(), centers)
}

/// The k in `k_range` with the largest second difference of k-means inertia.
/// Only interior points of the range have a second difference; ties and
/// ranges shorter than three go to the smallest candidate.
pub fn elbow_select_k(points: &[[f64; 2]], k_range: &[usize], seed: u64) -> Result<usize> {
    let mut ks = k_range.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let (&lo, &hi) = match (ks.first(), ks.last()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(Error::invalid("empty k range")),
    };
    if hi > points.len() {
        return Err(Error::InsufficientHistory { needed: hi, available: points.len() });
    }
    if ks.len() < 3 {
        return Ok(lo);
    }
    let inertia: Vec<f64> = ks
        .iter()
        .map(|&k| Ok(kmeans(points, k, &mut seed::rng(seed, "elbow", k as u64))?.inertia))
        .collect::<Result<_>>()?;
    let mut best = (ks[1], f64::NEG_INFINITY);
    for i in 1..ks.len() - 1 {
        let curv = inertia[i - 1] - 2.0 * inertia[i] + inertia[i + 1];
        if curv > best.1 {
            best = (ks[i], curv);
        }
    }
    Ok(best.0)
}
