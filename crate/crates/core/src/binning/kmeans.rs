use rand::Rng;

use crate::error::{Error, Result};

const RESTARTS: usize = 10;
const MAX_ITER: usize = 100;
const REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centers: Vec<[f64; 2]>,
    pub inertia: f64,
}

fn d2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Index of the nearest center; ties go to the lower index.
pub(crate) fn nearest(p: &[f64; 2], centers: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = d2(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Lloyd's algorithm with k-means++ seeding; best of several restarts.
pub fn kmeans<R: Rng>(points: &[[f64; 2]], k: usize, rng: &mut R) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if points.len() < k {
        return Err(Error::InsufficientHistory { needed: k, available: points.len() });
    }
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::NonFinite("clustering input"));
    }
    let mut best: Option<KMeansResult> = None;
    for _ in 0..RESTARTS {
        let run = lloyd(points, seed_plus_plus(points, k, rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn seed_plus_plus<R: Rng>(points: &[[f64; 2]], k: usize, rng: &mut R) -> Vec<[f64; 2]> {
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    let mut dist: Vec<f64> = points.iter().map(|p| d2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut idx = points.len() - 1;
            for (i, d) in dist.iter().enumerate() {
                if u < *d {
                    idx = i;
                    break;
                }
                u -= d;
            }
            idx
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick];
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(d2(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn lloyd(points: &[[f64; 2]], mut centers: Vec<[f64; 2]>) -> KMeansResult {
    let k = centers.len();
    let mut labels = vec![0usize; points.len()];
    let mut prev = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let mut inertia = 0.0;
        for (l, p) in labels.iter_mut().zip(points) {
            let (i, d) = nearest(p, &centers);
            *l = i;
            inertia += d;
        }
        let mut sums = vec![[0.0; 2]; k];
        let mut counts = vec![0usize; k];
        for (l, p) in labels.iter().zip(points) {
            sums[*l][0] += p[0];
            sums[*l][1] += p[1];
            counts[*l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
            } else {
                // Empty cluster: restart it at the worst-fit point.
                let far = (0..points.len())
                    .max_by(|&a, &b| d2(&points[a], &centers[labels[a]]).total_cmp(&d2(&points[b], &centers[labels[b]])))
                    .expect("nonempty input");
                centers[c] = points[far];
            }
        }
        if prev.is_finite() && (prev - inertia).abs() <= REL_TOL * prev.max(f64::MIN_POSITIVE) {
            break;
        }
        prev = inertia;
    }
    let inertia = points.iter().map(|p| nearest(p, &centers).1).sum();
    KMeansResult { centers, inertia }
}
