//! Bottleneck and 1-Wasserstein distances between persistence diagrams.
//!
//! Both are computed per homology dimension. Essential classes can only be
//! matched with each other; they are paired by sorted birth and a count
//! mismatch makes the distance infinite.

use super::diagram::PersistenceDiagram;

/// Maximum over homology dimensions of the per-dimension bottleneck distance.
pub fn bottleneck_distance(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> f64 {
    let mut worst: f64 = 0.0;
    for dim in union_dims(d1, d2) {
        let (f1, e1) = split(d1, dim);
        let (f2, e2) = split(d2, dim);
        match essential_costs(&e1, &e2) {
            None => return f64::INFINITY,
            Some(c) => worst = c.into_iter().fold(worst, f64::max),
        }
        worst = worst.max(bottleneck_finite(&f1, &f2));
    }
    worst
}

/// Sum over homology dimensions of the per-dimension 1-Wasserstein distance
/// with Euclidean ground metric.
pub fn wasserstein1_distance(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> f64 {
    let mut total = 0.0;
    for dim in union_dims(d1, d2) {
        let (f1, e1) = split(d1, dim);
        let (f2, e2) = split(d2, dim);
        match essential_costs(&e1, &e2) {
            None => return f64::INFINITY,
            Some(c) => total += c.iter().sum::<f64>(),
        }
        total += wasserstein_finite(&f1, &f2);
    }
    total
}

fn union_dims(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> Vec<usize> {
    let mut d = d1.dims();
    d.extend(d2.dims());
    d.sort_unstable();
    d.dedup();
    d
}

fn split(d: &PersistenceDiagram, dim: usize) -> (Vec<(f64, f64)>, Vec<f64>) {
    let mut finite = Vec::new();
    let mut ess = Vec::new();
    for f in d.in_dim(dim) {
        if f.is_essential() {
            ess.push(f.birth);
        } else {
            finite.push((f.birth, f.death));
        }
    }
    ess.sort_by(f64::total_cmp);
    (finite, ess)
}

fn essential_costs(e1: &[f64], e2: &[f64]) -> Option<Vec<f64>> {
    (e1.len() == e2.len()).then(|| e1.iter().zip(e2).map(|(a, b)| (a - b).abs()).collect())
}

fn linf(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

/// Bottleneck distance between finite point sets, by binary search over the
/// candidate costs with a perfect-matching test at each step.
pub(crate) fn bottleneck_finite(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let half = |p: (f64, f64)| (p.1 - p.0) / 2.0;
    let mut cand: Vec<f64> = Vec::with_capacity(a.len() * b.len() + a.len() + b.len() + 1);
    cand.push(0.0);
    cand.extend(a.iter().map(|&p| half(p)));
    cand.extend(b.iter().map(|&p| half(p)));
    for &p in a {
        for &q in b {
            cand.push(linf(p, q));
        }
    }
    cand.sort_by(f64::total_cmp);
    cand.dedup();

    let (mut lo, mut hi) = (0, cand.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching_within(a, b, cand[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    cand[lo]
}

/// Whether the augmented bipartite graph (points plus diagonal copies) has a
/// perfect matching using only edges of cost at most `r`.
fn perfect_matching_within(a: &[(f64, f64)], b: &[(f64, f64)], r: f64) -> bool {
    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;
    // Left: a_0..a_{n1-1}, then diagonal copies of b. Right: b_0..b_{n2-1}, then diagonal copies of a.
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, &p) in a.iter().enumerate() {
        for (j, &q) in b.iter().enumerate() {
            if linf(p, q) <= r {
                adj[i].push(j as u32);
            }
        }
        if (p.1 - p.0) / 2.0 <= r {
            adj[i].push((n2 + i) as u32);
        }
    }
    for (j, &q) in b.iter().enumerate() {
        let row = &mut adj[n1 + j];
        if (q.1 - q.0) / 2.0 <= r {
            row.push(j as u32);
        }
        row.extend((n2..n).map(|k| k as u32));
    }
    hopcroft_karp(&adj, n) == n
}

/// Maximum matching size in a bipartite graph with `adj[left] = rights`.
pub(crate) fn hopcroft_karp(adj: &[Vec<u32>], n_right: usize) -> usize {
    const NONE: u32 = u32::MAX;
    let n_left = adj.len();
    let mut match_l = vec![NONE; n_left];
    let mut match_r = vec![NONE; n_right];
    let mut dist = vec![0u32; n_left];
    let mut queue = Vec::with_capacity(n_left);
    let mut size = 0;

    loop {
        queue.clear();
        for u in 0..n_left {
            if match_l[u] == NONE {
                dist[u] = 0;
                queue.push(u as u32);
            } else {
                dist[u] = u32::MAX;
            }
        }
        let mut found = false;
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head] as usize;
            head += 1;
            for &v in &adj[u] {
                let w = match_r[v as usize];
                if w == NONE {
                    found = true;
                } else if dist[w as usize] == u32::MAX {
                    dist[w as usize] = dist[u] + 1;
                    queue.push(w);
                }
            }
        }
        if !found {
            return size;
        }
        let mut it = vec![0usize; n_left];
        for u in 0..n_left {
            if match_l[u] == NONE && augment(u, adj, &mut match_l, &mut match_r, &mut dist, &mut it) {
                size += 1;
            }
        }
    }
}

fn augment(
    u: usize,
    adj: &[Vec<u32>],
    match_l: &mut [u32],
    match_r: &mut [u32],
    dist: &mut [u32],
    it: &mut [usize],
) -> bool {
    while it[u] < adj[u].len() {
        let v = adj[u][it[u]] as usize;
        it[u] += 1;
        let w = match_r[v];
        let ok = if w == u32::MAX {
            true
        } else if dist[w as usize] == dist[u] + 1 {
            augment(w as usize, adj, match_l, match_r, dist, it)
        } else {
            false
        };
        if ok {
            match_l[u] = v as u32;
            match_r[v] = u as u32;
            return true;
        }
    }
    dist[u] = u32::MAX;
    false
}

/// Optimal-transport cost between finite point sets where unmatched points go
/// to their orthogonal projection on the diagonal.
pub(crate) fn wasserstein_finite(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;
    if n == 0 {
        return 0.0;
    }
    let diag = |p: (f64, f64)| (p.1 - p.0) / std::f64::consts::SQRT_2;
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = match (i < n1, j < n2) {
                (true, true) => {
                    let (p, q) = (a[i], b[j]);
                    ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()
                }
                (true, false) => diag(a[i]),
                (false, true) => diag(b[j]),
                (false, false) => 0.0,
            };
        }
    }
    let assignment = hungarian(&cost, n);
    assignment.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum()
}

/// Minimum-cost perfect assignment on an `n x n` row-major cost matrix.
/// Returns the column assigned to each row.
pub(crate) fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    // Potentials formulation with 1-based sentinel column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}
