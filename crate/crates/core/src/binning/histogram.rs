use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tda::TiltedDiagram;

const MARGIN: f64 = 1e-9;

/// Birth-axis bins per homology dimension. Bin `l` of a block is
/// `[b_{l-1}, b_l)` with `b_0 = 0`; births below zero fall in the first bin and
/// births at or beyond the last breakpoint in the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBins {
    dims: Vec<usize>,
    breakpoints: Vec<Vec<f64>>,
}

impl HistogramBins {
    pub fn from_breakpoints(dims: Vec<usize>, breakpoints: Vec<Vec<f64>>) -> Result<Self> {
        if dims.is_empty() || dims.len() != breakpoints.len() {
            return Err(Error::invalid("one breakpoint list per homology dimension required"));
        }
        for b in &breakpoints {
            if b.len() < 2 {
                return Err(Error::invalid(format!("need at least 2 bins per dimension, got {}", b.len())));
            }
            if b.iter().any(|x| !x.is_finite()) || b.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid("breakpoints must be finite and strictly increasing"));
            }
        }
        Ok(Self { dims, breakpoints })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn breakpoints(&self) -> &[Vec<f64>] {
        &self.breakpoints
    }

    pub fn len(&self) -> usize {
        self.breakpoints.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn bin_of(&self, dim: usize, birth: f64) -> Option<usize> {
        let block = self.dims.iter().position(|&d| d == dim)?;
        let offset: usize = self.breakpoints[..block].iter().map(Vec::len).sum();
        let b = &self.breakpoints[block];
        let i = b.partition_point(|&x| x <= birth).min(b.len() - 1);
        Some(offset + i)
    }
}

/// `l` equal-width bins per dimension on `[0, max birth]` of the reference diagrams.
pub fn make_equal_width_bins(reference: &[TiltedDiagram], l: usize, dims: &[usize]) -> Result<HistogramBins> {
    if l < 2 {
        return Err(Error::invalid(format!("need at least 2 bins, got {l}")));
    }
    if reference.iter().all(|d| d.features.iter().all(|f| !dims.contains(&f.dim))) {
        return Err(Error::EmptyInput("reference diagrams"));
    }
    let breakpoints = dims
        .iter()
        .map(|&dim| {
            let top = reference
                .iter()
                .flat_map(|d| d.features.iter())
                .filter(|f| f.dim == dim)
                .map(|f| f.birth)
                .fold(0.0f64, f64::max)
                + MARGIN;
            (1..=l).map(|i| top * i as f64 / l as f64).collect()
        })
        .collect();
    HistogramBins::from_breakpoints(dims.to_vec(), breakpoints)
}

/// `l` bins per dimension holding roughly equal persistence mass of one
/// reference diagram, by a greedy sweep over births.
pub fn make_equal_mass_bins(reference: &TiltedDiagram, l: usize, dims: &[usize]) -> Result<HistogramBins> {
    if l < 2 {
        return Err(Error::invalid(format!("need at least 2 bins, got {l}")));
    }
    let mut breakpoints = Vec::with_capacity(dims.len());
    for &dim in dims {
        let mut feats: Vec<(f64, f64)> = reference
            .features
            .iter()
            .filter(|f| f.dim == dim)
            .map(|f| (f.birth, f.persistence))
            .collect();
        if feats.is_empty() {
            return Err(Error::EmptyInput("reference diagram"));
        }
        feats.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = feats.iter().map(|f| f.1).sum();
        if !(total > 0.0) {
            return Err(Error::invalid("reference diagram has no persistence"));
        }

        let m = feats.len();
        let mut cum = Vec::with_capacity(m);
        let mut acc = 0.0;
        for f in &feats {
            acc += f.1;
            cum.push(acc);
        }
        let mut bp = Vec::with_capacity(l);
        let mut next = 0;
        for k in 1..l {
            let target = total * k as f64 / l as f64;
            let mut i = next;
            while i < m && cum[i] < target * (1.0 - 1e-12) {
                i += 1;
            }
            // A breakpoint can only go between distinct births.
            while i + 1 < m && feats[i + 1].0 == feats[i].0 {
                i += 1;
            }
            if i + 1 >= m {
                return Err(Error::invalid(format!(
                    "reference diagram has too few distinct births for {l} bins"
                )));
            }
            bp.push(0.5 * (feats[i].0 + feats[i + 1].0));
            next = i + 1;
        }
        bp.push(feats[m - 1].0 + MARGIN);
        breakpoints.push(bp);
    }
    HistogramBins::from_breakpoints(dims.to_vec(), breakpoints)
}
