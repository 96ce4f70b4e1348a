//! Diagonal weights for the detection statistic, chosen to maximize the
//! worst-case weighted distance between pre- and post-change distributions
//! that are at least `rho` apart.
//!
//! `f(sigma) = min { h_sigma(p, q) : p, q in simplex, |p - q| >= rho }` is
//! maximized over `sigma >= 0` with `g(sigma) = max_p sum sigma_i^2 p_i^2 <= 1`,
//! i.e. `max_i sigma_i <= 1`. The inner problem is solved by projected
//! gradient with restarts and the outer one by projected gradient ascent.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::binning::{bin_diagram, make_equal_width_bins, Partition};
use crate::error::{Error, Result};
use crate::seed;
use crate::tda::TiltedDiagram;

const RESTARTS: usize = 20;
const INNER_ITERS: usize = 200;
const OUTER_ITERS: usize = 40;
const REL_FLOOR: f64 = 1e-6;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `sum sigma_i (p_i - q_i)^2`
    #[default]
    Absolute,
    /// `sum sigma_i ((p_i - q_i) / q_i)^2`, with `q_i` floored at 1e-6.
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightProblem {
    pub l: usize,
    pub rho: f64,
    pub mode: WeightMode,
    /// Estimated pre/post distributions; when present, `p` and `q` are kept
    /// within `anchor_radius` of them.
    pub anchors: Option<(Vec<f64>, Vec<f64>)>,
    pub anchor_radius: f64,
}

impl WeightProblem {
    pub fn new(l: usize) -> Self {
        Self { l, rho: 0.1, mode: WeightMode::Absolute, anchors: None, anchor_radius: 0.25 }
    }

    pub fn with_anchors(mut self, pre: Vec<f64>, post: Vec<f64>) -> Self {
        self.anchors = Some((pre, post));
        self
    }

    pub fn with_mode(mut self, mode: WeightMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(Error::invalid(format!("need at least 2 bins, got {}", self.l)));
        }
        if !(self.rho > 0.0 && self.rho <= 2f64.sqrt()) {
            return Err(Error::invalid(format!("rho must lie in (0, sqrt 2], got {}", self.rho)));
        }
        if let Some((a, b)) = &self.anchors {
            for v in [a, b] {
                if v.len() != self.l {
                    return Err(Error::DimensionMismatch { expected: self.l, found: v.len() });
                }
                if v.iter().any(|x| !x.is_finite() || *x < 0.0) || v.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::invalid("anchors must be nonzero nonnegative vectors"));
                }
            }
            if !(self.anchor_radius > 0.0) {
                return Err(Error::invalid("anchor radius must be positive"));
            }
        }
        Ok(())
    }

    fn normalized_anchors(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.anchors.as_ref().map(|(a, b)| (normalize(a), normalize(b)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSolution {
    pub sigma: Vec<f64>,
    /// Achieved `f(sigma)`.
    pub objective: f64,
    /// Minimizing pair of the inner problem at `sigma`.
    pub p_pre: Vec<f64>,
    pub p_post: Vec<f64>,
}

/// `g(sigma)`: the maximum of `sum sigma_i^2 p_i^2` over the simplex, attained
/// at a vertex.
pub fn weight_constraint(sigma: &[f64]) -> f64 {
    sigma.iter().map(|s| s * s).fold(0.0, f64::max)
}

/// `f(sigma)` with the minimizing pair, by projected gradient with restarts.
/// Deterministic in `seed`.
pub fn worst_case(problem: &WeightProblem, sigma: &[f64], seed: u64) -> Result<WeightSolution> {
    problem.validate()?;
    if sigma.len() != problem.l {
        return Err(Error::DimensionMismatch { expected: problem.l, found: sigma.len() });
    }
    if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    let anchors = problem.normalized_anchors();
    let mut rng = seed::rng(seed, "weights-inner", 0);
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for _ in 0..RESTARTS {
        let (mut p, mut q) = match &anchors {
            Some((a, b)) => (jitter(a, 0.5 * problem.anchor_radius, &mut rng), jitter(b, 0.5 * problem.anchor_radius, &mut rng)),
            None => (random_simplex(problem.l, &mut rng), random_simplex(problem.l, &mut rng)),
        };
        if !project_pair(problem, anchors.as_ref(), &mut p, &mut q) {
            continue;
        }
        let mut val = objective(problem.mode, sigma, &p, &q);
        let mut step = 1.0;
        for _ in 0..INNER_ITERS {
            let (gp, gq) = gradient(problem.mode, sigma, &p, &q);
            let mut improved = false;
            while step > 1e-12 {
                let mut np: Vec<f64> = p.iter().zip(&gp).map(|(x, g)| x - step * g).collect();
                let mut nq: Vec<f64> = q.iter().zip(&gq).map(|(x, g)| x - step * g).collect();
                if project_pair(problem, anchors.as_ref(), &mut np, &mut nq) {
                    let nv = objective(problem.mode, sigma, &np, &nq);
                    if nv < val - 1e-15 {
                        (p, q, val) = (np, nq, nv);
                        improved = true;
                        step *= 2.0;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| val < b.0) {
            best = Some((val, p, q));
        }
    }
    let (objective, p_pre, p_post) =
        best.ok_or_else(|| Error::invalid("no feasible pair found: rho too large for the anchor balls"))?;
    Ok(WeightSolution { sigma: sigma.to_vec(), objective, p_pre, p_post })
}

/// Maximizes `f` over `0 <= sigma_i <= 1` by projected gradient ascent from
/// `sigma = 1/2`, using the inner minimizer's squared differences as the
/// supergradient. The all-ones point is always a candidate.
pub fn optimize_weights(problem: &WeightProblem, seed: u64) -> Result<WeightSolution> {
    problem.validate()?;
    let l = problem.l;
    let mut best = worst_case(problem, &vec![1.0; l], seed)?;
    let mut sigma = vec![0.5; l];
    let mut step = 1.0;
    for _ in 0..OUTER_ITERS {
        let sol = worst_case(problem, &sigma, seed)?;
        if sol.objective > best.objective {
            best = sol.clone();
        }
        let grad = supergradient(problem.mode, &sol.p_pre, &sol.p_post);
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < 1e-15 {
            break;
        }
        let next: Vec<f64> = sigma.iter().zip(&grad).map(|(s, g)| (s + step * g / norm).clamp(0.0, 1.0)).collect();
        if next.iter().zip(&sigma).all(|(a, b)| (a - b).abs() < 1e-12) {
            break;
        }
        sigma = next;
        step *= 0.9;
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinCountSelection {
    /// Selected bins per homology dimension.
    pub l: usize,
    pub partition: Partition,
    pub solution: WeightSolution,
    /// `(bins per dimension, achieved f)` for every candidate.
    pub scores: Vec<(usize, f64)>,
}

/// Tries each bin count with equal-width bins fitted on the pooled training
/// diagrams, anchors the weight problem at the pooled pre/post proportions and
/// keeps the count with the largest achieved objective (ties: smaller count).
pub fn select_bin_count(
    candidates: &[usize],
    pre: &[TiltedDiagram],
    post: &[TiltedDiagram],
    dims: &[usize],
    rho: f64,
    mode: WeightMode,
    seed: u64,
) -> Result<BinCountSelection> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("bin-count candidates"));
    }
    if pre.is_empty() || post.is_empty() {
        return Err(Error::EmptyInput("training diagrams"));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let pooled: Vec<TiltedDiagram> = pre.iter().chain(post).cloned().collect();
    let mut best: Option<BinCountSelection> = None;
    let mut scores = Vec::with_capacity(sorted.len());
    for &l in &sorted {
        let partition = Partition::Histogram(make_equal_width_bins(&pooled, l, dims)?);
        let mut problem = WeightProblem::new(partition.len()).with_mode(mode);
        problem.rho = rho;
        problem.anchors = Some((pooled_proportions(pre, &partition), pooled_proportions(post, &partition)));
        let solution = optimize_weights(&problem, seed)?;
        scores.push((l, solution.objective));
        if best.as_ref().is_none_or(|b| solution.objective > b.solution.objective + 1e-12) {
            best = Some(BinCountSelection { l, partition, solution, scores: Vec::new() });
        }
    }
    let mut best = best.expect("at least one candidate");
    best.scores = scores;
    Ok(best)
}

/// Summed frequencies of all diagrams, normalized (uniform if empty).
pub fn pooled_proportions(diagrams: &[TiltedDiagram], partition: &Partition) -> Vec<f64> {
    let mut f = vec![0.0; partition.len()];
    for d in diagrams {
        for (acc, x) in f.iter_mut().zip(bin_diagram(d, partition).f) {
            *acc += x;
        }
    }
    normalize(&f)
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter().map(|x| x / s).collect()
    } else {
        vec![1.0 / v.len() as f64; v.len()]
    }
}

fn objective(mode: WeightMode, sigma: &[f64], p: &[f64], q: &[f64]) -> f64 {
    let mut v = 0.0;
    for i in 0..sigma.len() {
        let d = p[i] - q[i];
        v += match mode {
            WeightMode::Absolute => sigma[i] * d * d,
            WeightMode::Relative => sigma[i] * (d / q[i].max(REL_FLOOR)).powi(2),
        };
    }
    v
}

fn gradient(mode: WeightMode, sigma: &[f64], p: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let l = sigma.len();
    let (mut gp, mut gq) = (vec![0.0; l], vec![0.0; l]);
    for i in 0..l {
        let d = p[i] - q[i];
        match mode {
            WeightMode::Absolute => {
                gp[i] = 2.0 * sigma[i] * d;
                gq[i] = -gp[i];
            }
            WeightMode::Relative => {
                let qf = q[i].max(REL_FLOOR);
                gp[i] = 2.0 * sigma[i] * d / (qf * qf);
                gq[i] = -gp[i];
                if q[i] > REL_FLOOR {
                    gq[i] -= 2.0 * sigma[i] * d * d / (qf * qf * qf);
                }
            }
        }
    }
    (gp, gq)
}

fn supergradient(mode: WeightMode, p: &[f64], q: &[f64]) -> Vec<f64> {
    p.iter()
        .zip(q)
        .map(|(a, b)| match mode {
            WeightMode::Absolute => (a - b).powi(2),
            WeightMode::Relative => ((a - b) / b.max(REL_FLOOR)).powi(2),
        })
        .collect()
}

fn random_simplex(l: usize, rng: &mut impl Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..l).map(|_| Exp1.sample(rng)).collect();
    normalize(&v)
}

fn jitter(center: &[f64], scale: f64, rng: &mut impl Rng) -> Vec<f64> {
    center.iter().map(|c| c + scale * rng.random_range(-1.0..1.0) / (center.len() as f64).sqrt()).collect()
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
}

fn project_ball(v: &mut [f64], center: &[f64], r: f64) {
    let d = dist(v, center);
    if d > r {
        for (x, c) in v.iter_mut().zip(center) {
            *x = c + (*x - c) * r / d;
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn feasible(problem: &WeightProblem, anchors: Option<&(Vec<f64>, Vec<f64>)>, p: &[f64], q: &[f64]) -> bool {
    let on_simplex = |v: &[f64]| v.iter().all(|x| *x >= -FEAS_TOL) && (v.iter().sum::<f64>() - 1.0).abs() <= FEAS_TOL;
    on_simplex(p)
        && on_simplex(q)
        && dist(p, q) >= problem.rho - FEAS_TOL
        && anchors.is_none_or(|(a, b)| {
            dist(p, a) <= problem.anchor_radius + FEAS_TOL && dist(q, b) <= problem.anchor_radius + FEAS_TOL
        })
}

/// Alternating projections onto the simplex, the anchor balls and the
/// separation constraint. Returns whether a feasible pair was reached.
fn project_pair(problem: &WeightProblem, anchors: Option<&(Vec<f64>, Vec<f64>)>, p: &mut [f64], q: &mut [f64]) -> bool {
    for _ in 0..100 {
        project_simplex(p);
        project_simplex(q);
        if let Some((a, b)) = anchors {
            project_ball(p, a, problem.anchor_radius);
            project_ball(q, b, problem.anchor_radius);
            project_simplex(p);
            project_simplex(q);
        }
        let d = dist(p, q);
        if d < problem.rho {
            // Push the pair apart symmetrically along p - q (or an arbitrary
            // sum-zero direction when they coincide).
            let l = p.len();
            let dir: Vec<f64> = if d > 1e-12 {
                p.iter().zip(q.iter()).map(|(x, y)| (x - y) / d).collect()
            } else {
                let mut e = vec![0.0; l];
                e[0] = std::f64::consts::FRAC_1_SQRT_2;
                e[1] = -std::f64::consts::FRAC_1_SQRT_2;
                e
            };
            let shift = 0.5 * (problem.rho - d) * (1.0 + 1e-9) + 1e-12;
            for i in 0..l {
                p[i] += shift * dir[i];
                q[i] -= shift * dir[i];
            }
        }
        if feasible(problem, anchors, p, q) {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection() {
        let mut v = vec![0.5, 0.5, 0.5];
        project_simplex(&mut v);
        assert!(v.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let mut w = vec![2.0, 0.0, -1.0];
        project_simplex(&mut w);
        assert_eq!(w, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn constraint_at_vertex() {
        assert_eq!(weight_constraint(&[1.0; 4]), 1.0);
        assert!((weight_constraint(&[0.2, 0.7]) - 0.49).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(optimize_weights(&WeightProblem::new(1), 0).is_err());
        let mut p = WeightProblem::new(3);
        p.rho = 2.0;
        assert!(optimize_weights(&p, 0).is_err());
        assert!(worst_case(&WeightProblem::new(3), &[1.0, 1.0], 0).is_err());
    }
}
