//! Fixed-length summaries of persistence diagrams: per-bin persistence sums
//! `f` and their proportions `omega`.
//!
//! Each selected homology dimension gets its own block of bins; the blocks are
//! concatenated in the order of `dims`.

mod histogram;
mod kmeans;
mod voronoi;

pub use histogram::{make_equal_mass_bins, make_equal_width_bins, HistogramBins};
pub use kmeans::{kmeans, KMeansResult};
pub use voronoi::{elbow_select_k, fit_persistence_clusters, VoronoiPartition};

use serde::{Deserialize, Serialize};

use crate::tda::TiltedDiagram;

/// Which homology dimensions feed the summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomologySelection {
    H0,
    H1,
    Both,
}

impl HomologySelection {
    pub fn dims(self) -> Vec<usize> {
        match self {
            HomologySelection::H0 => vec![0],
            HomologySelection::H1 => vec![1],
            HomologySelection::Both => vec![0, 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Partition {
    Histogram(HistogramBins),
    Voronoi(VoronoiPartition),
}

impl Partition {
    /// Total number of bins or cells.
    pub fn len(&self) -> usize {
        match self {
            Partition::Histogram(h) => h.len(),
            Partition::Voronoi(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-bin persistence sums and proportions of one diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceHistogram {
    pub f: Vec<f64>,
    pub omega: Vec<f64>,
    /// No persistence fell into any bin; `omega` is then uniform.
    pub empty: bool,
}

impl PersistenceHistogram {
    pub fn from_frequencies(f: Vec<f64>) -> Self {
        let total: f64 = f.iter().sum();
        if total > 0.0 {
            let omega = f.iter().map(|x| x / total).collect();
            Self { f, omega, empty: false }
        } else {
            let l = f.len();
            Self { f, omega: vec![1.0 / l as f64; l], empty: true }
        }
    }
}

pub fn bin_diagram(diagram: &TiltedDiagram, partition: &Partition) -> PersistenceHistogram {
    let mut f = vec![0.0; partition.len()];
    for feat in &diagram.features {
        let idx = match partition {
            Partition::Histogram(h) => h.bin_of(feat.dim, feat.birth),
            Partition::Voronoi(v) => v.cell_of(feat.dim, feat.birth, feat.persistence),
        };
        if let Some(i) = idx {
            f[i] += feat.persistence;
        }
    }
    PersistenceHistogram::from_frequencies(f)
}
