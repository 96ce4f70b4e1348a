use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tda::{wasserstein1_distance, PersistenceDiagram};

/// `S_t = W1(D_t, D_{t+1})` for `t = 0 .. len - 2`. The value at `t` needs
/// frame `t + 1`, so online it becomes available one step later.
pub fn wasserstein_detector(diagrams: &[PersistenceDiagram]) -> Result<Vec<f64>> {
    if diagrams.len() < 2 {
        return Err(Error::InsufficientHistory { needed: 2, available: diagrams.len() });
    }
    Ok(diagrams.par_windows(2).map(|w| wasserstein1_distance(&w[0], &w[1])).collect())
}
