//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use percept::binning::{bin_diagram, HistogramBins, Partition};
use percept::cloud::Grid;
use percept::tda::{bottleneck_distance, Feature, PersistenceDiagram, TiltedDiagram, TiltedFeature};
use rand::Rng;

/// (value, vertices) for every simplex, built without the library.
pub type Complex = Vec<(f64, Vec<usize>)>;

pub fn rips_complex(points: &[Vec<f64>], max_radius: f64) -> Complex {
    let d = |i: usize, j: usize| -> f64 {
        points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    };
    let n = points.len();
    let mut out = Vec::new();
    for i in 0..n {
        out.push((0.0, vec![i]));
    }
    for i in 0..n {
        for j in i + 1..n {
            if d(i, j) <= max_radius {
                out.push((d(i, j), vec![i, j]));
            }
            for k in j + 1..n {
                let v = d(i, j).max(d(i, k)).max(d(j, k));
                if v <= max_radius {
                    out.push((v, vec![i, j, k]));
                }
            }
        }
    }
    out
}

pub fn grid_complex(g: &Grid) -> Complex {
    let (rows, cols) = (g.rows(), g.cols());
    let id = |r: usize, c: usize| r * cols + c;
    let val = |vs: &[usize]| vs.iter().map(|&v| g.values()[v]).fold(f64::NEG_INFINITY, f64::max);
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            cells.push(vec![id(r, c)]);
            if c + 1 < cols {
                cells.push(vec![id(r, c), id(r, c + 1)]);
            }
            if r + 1 < rows {
                cells.push(vec![id(r, c), id(r + 1, c)]);
            }
            if r + 1 < rows && c + 1 < cols {
                cells.push(vec![id(r, c), id(r + 1, c + 1)]);
                cells.push(vec![id(r, c), id(r, c + 1), id(r + 1, c + 1)]);
                cells.push(vec![id(r, c), id(r + 1, c), id(r + 1, c + 1)]);
            }
        }
    }
    cells.into_iter().map(|mut vs| {
        vs.sort_unstable();
        (val(&vs), vs)
    }).collect()
}

/// Dense Z/2 reduction of the full boundary matrix, no shortcuts. Returns the
/// sorted (dim, birth, death) triples with positive persistence, dims 0 and 1.
pub fn brute_force_diagram(mut cx: Complex) -> Vec<(usize, f64, f64)> {
    cx.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.len().cmp(&b.1.len())).then(a.1.cmp(&b.1)));
    let m = cx.len();
    let index: std::collections::HashMap<Vec<usize>, usize> =
        cx.iter().enumerate().map(|(i, (_, vs))| (vs.clone(), i)).collect();
    let mut cols: Vec<Vec<bool>> = cx
        .iter()
        .map(|(_, vs)| {
            let mut col = vec![false; m];
            if vs.len() > 1 {
                for skip in 0..vs.len() {
                    let face: Vec<usize> = vs.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                    col[index[&face]] = true;
                }
            }
            col
        })
        .collect();
    let low = |c: &Vec<bool>| c.iter().rposition(|&x| x);
    let mut low_owner: Vec<Option<usize>> = vec![None; m];
    let mut paired = vec![false; m];
    let mut out = Vec::new();
    for j in 0..m {
        while let Some(l) = low(&cols[j]) {
            match low_owner[l] {
                Some(o) => {
                    let other = cols[o].clone();
                    for (x, y) in cols[j].iter_mut().zip(other) {
                        *x ^= y;
                    }
                }
                None => break,
            }
        }
        if let Some(l) = low(&cols[j]) {
            low_owner[l] = Some(j);
            paired[l] = true;
            paired[j] = true;
            let dim = cx[l].1.len() - 1;
            if dim <= 1 && cx[j].0 > cx[l].0 {
                out.push((dim, cx[l].0, cx[j].0));
            }
        }
    }
    for i in 0..m {
        let dim = cx[i].1.len() - 1;
        if !paired[i] && dim <= 1 {
            out.push((dim, cx[i].0, f64::INFINITY));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    out
}

pub fn as_triples(d: &percept::tda::PersistenceDiagram) -> Vec<(usize, f64, f64)> {
    d.features.iter().map(|f| (f.dim, f.birth, f.death)).collect()
}

/// Exhaustive search over partial matchings of two finite point sets.
/// Returns (bottleneck, 1-Wasserstein) costs.
pub fn brute_force_distances(a: &[(f64, f64)], b: &[(f64, f64)]) -> (f64, f64) {
    fn rec(i: usize, a: &[(f64, f64)], b: &[(f64, f64)], used: &mut Vec<bool>, worst: f64, sum: f64, best: &mut (f64, f64)) {
        if i == a.len() {
            let mut w = worst;
            let mut s = sum;
            for (j, q) in b.iter().enumerate() {
                if !used[j] {
                    w = w.max((q.1 - q.0) / 2.0);
                    s += (q.1 - q.0) / 2f64.sqrt();
                }
            }
            best.0 = best.0.min(w);
            best.1 = best.1.min(s);
            return;
        }
        let p = a[i];
        rec(i + 1, a, b, used, worst.max((p.1 - p.0) / 2.0), sum + (p.1 - p.0) / 2f64.sqrt(), best);
        for j in 0..b.len() {
            if used[j] {
                continue;
            }
            used[j] = true;
            let q = b[j];
            let linf = (p.0 - q.0).abs().max((p.1 - q.1).abs());
            let l2 = ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
            rec(i + 1, a, b, used, worst.max(linf), sum + l2, best);
            used[j] = false;
        }
    }
    let mut best = (f64::INFINITY, f64::INFINITY);
    rec(0, a, b, &mut vec![false; b.len()], 0.0, 0.0, &mut best);
    best
}

/// Distinct sorted births with two persistence vectors: a base draw and a
/// perturbation of it.
pub fn shared_birth_pair<R: Rng>(rng: &mut R, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut births: Vec<f64> = (0..n).map(|i| i as f64 * 0.1 + rng.random_range(0.0..0.09)).collect();
    births.sort_by(f64::total_cmp);
    let pre: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let post: Vec<f64> = pre.iter().map(|&v| (v + rng.random_range(-0.5..0.5)).max(0.001)).collect();
    (births, pre, post)
}

/// Shared births, one feature per bin: the squared distance between the
/// unnormalized histograms bounds the squared bottleneck distance.
pub fn proposition_holds(births: &[f64], pre: &[f64], post: &[f64]) -> bool {
    let mut bp: Vec<f64> = births.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    bp.push(births[births.len() - 1] + 1.0);
    if bp.len() < 2 {
        bp.insert(0, births[0] - 0.5);
    }
    let bins = Partition::Histogram(HistogramBins::from_breakpoints(vec![0], vec![bp]).unwrap());
    let mk = |p: &[f64]| births.iter().zip(p).map(|(&b, &v)| (b, v)).collect::<Vec<_>>();
    let tilted = |pts: Vec<(f64, f64)>| TiltedDiagram {
        features: pts.into_iter().map(|(birth, persistence)| TiltedFeature { birth, persistence, dim: 0 }).collect(),
    };
    let fa = bin_diagram(&tilted(mk(pre)), &bins).f;
    let fb = bin_diagram(&tilted(mk(post)), &bins).f;
    let l2: f64 = fa.iter().zip(&fb).map(|(a, b)| (a - b).powi(2)).sum();
    let da = PersistenceDiagram::new(births.iter().zip(pre).map(|(&b, &v)| Feature::new(b, b + v, 0)).collect());
    let db = PersistenceDiagram::new(births.iter().zip(post).map(|(&b, &v)| Feature::new(b, b + v, 0)).collect());
    let bn = bottleneck_distance(&da, &db);
    l2 >= bn * bn - 1e-12
}
