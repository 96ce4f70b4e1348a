//! Persistence pairing for filtrations of dimension at most two.
//!
//! Zero-dimensional pairs come from a union–find sweep over the edges (elder
//! rule), which gives the same pairing as reducing the edge columns. The
//! one-dimensional pairs come from reducing the coboundary columns of the
//! positive edges in reverse filtration order; negative edges are cleared
//! up front. The resulting pairing equals the one of the boundary matrix.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;

use super::diagram::{sort_features, Feature, PersistenceDiagram};
use super::filtration::Filtration;

/// Pairs of the reduced boundary matrix, including zero-length ones, plus
/// essential classes in dimensions 0 and 1.
pub fn compute_pairs(filtration: &Filtration) -> Vec<Feature> {
    let entries = filtration.entries();

    let mut vert_pos: FxHashMap<u32, u32> = FxHashMap::default();
    let mut vert_val = Vec::new();
    let mut edge_pos: FxHashMap<(u32, u32), u32> = FxHashMap::default();
    let mut edges: Vec<(u32, u32, f64)> = Vec::new();
    let mut tri_val = Vec::new();
    let mut tri_facets: Vec<[u32; 3]> = Vec::new();
    for (s, v) in entries {
        let vs = s.vertices();
        match vs.len() {
            1 => {
                vert_pos.insert(vs[0], vert_val.len() as u32);
                vert_val.push(*v);
            }
            2 => {
                edge_pos.insert((vs[0], vs[1]), edges.len() as u32);
                edges.push((vert_pos[&vs[0]], vert_pos[&vs[1]], *v));
            }
            _ => {
                let e = |a, b| edge_pos[&(vs[a], vs[b])];
                tri_facets.push([e(0, 1), e(0, 2), e(1, 2)]);
                tri_val.push(*v);
            }
        }
    }

    // Cofacet lists in CSR layout; triangles are keyed by their rank, so the
    // lists come out sorted.
    let mut start = vec![0u32; edges.len() + 1];
    for f in &tri_facets {
        for &e in f {
            start[e as usize + 1] += 1;
        }
    }
    for i in 0..edges.len() {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut cof = vec![0u32; start[edges.len()] as usize];
    for (t, f) in tri_facets.iter().enumerate() {
        for &e in f {
            cof[fill[e as usize] as usize] = t as u32;
            fill[e as usize] += 1;
        }
    }

    let edge_val: Vec<f64> = edges.iter().map(|e| e.2).collect();
    let (mut out, negative) = zero_dim_pairs(&vert_val, edges.iter().map(|&(a, b, _)| (a, b)), &edge_val);
    out.extend(one_dim_pairs(
        &edge_val,
        &negative,
        |e, col| col.extend_from_slice(&cof[start[e] as usize..start[e + 1] as usize]),
        |t: u32| tri_val[t as usize],
        |t: u32| *tri_facets[t as usize].iter().max().unwrap() as usize,
    ));
    sort_features(&mut out);
    out
}

/// Persistence diagram in dimensions 0 and 1; zero-length pairs are dropped.
pub fn compute_persistence(filtration: &Filtration) -> PersistenceDiagram {
    drop_zero_length(compute_pairs(filtration))
}

pub(crate) fn drop_zero_length(pairs: Vec<Feature>) -> PersistenceDiagram {
    PersistenceDiagram { features: pairs.into_iter().filter(|f| f.death > f.birth).collect() }
}

/// Elder-rule sweep over edges given in filtration order. Returns the
/// zero-dimensional features and which edges merged two components.
pub(crate) fn zero_dim_pairs(
    vert_val: &[f64],
    edges: impl Iterator<Item = (u32, u32)>,
    edge_val: &[f64],
) -> (Vec<Feature>, Vec<bool>) {
    let n = vert_val.len();
    // Roots are the oldest vertex of each component.
    let mut parent: Vec<u32> = (0..n as u32).collect();
    let mut negative = vec![false; edge_val.len()];
    let mut out = Vec::with_capacity(n);
    for (e, (a, b)) in edges.enumerate() {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        if ra == rb {
            continue;
        }
        let (old, young) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[young as usize] = old;
        negative[e] = true;
        out.push(Feature::new(vert_val[young as usize], edge_val[e], 0));
    }
    for i in 0..n as u32 {
        if find(&mut parent, i) == i {
            out.push(Feature::essential(vert_val[i as usize], 0));
        }
    }
    (out, negative)
}

/// Reduces the coboundary columns of the positive edges.
///
/// `cofacets` appends the keys of the triangles containing an edge (any
/// order), `value` maps a key to its filtration value and `max_facet` to the
/// latest of its three edges. Reduced columns are kept implicitly as the list
/// of edges whose coboundaries they sum, and the working column is a heap with
/// lazy cancellation, so long columns are never materialized.
pub(crate) fn one_dim_pairs<K, C, V, M>(
    edge_val: &[f64],
    negative: &[bool],
    mut cofacets: C,
    value: V,
    max_facet: M,
) -> Vec<Feature>
where
    K: Ord + Copy + std::hash::Hash,
    C: FnMut(usize, &mut Vec<K>),
    V: Fn(K) -> f64,
    M: Fn(K) -> usize,
{
    let mut out = Vec::new();
    let mut owner: FxHashMap<K, u32> = FxHashMap::default();
    let mut sums: Vec<Vec<u32>> = Vec::new();
    let mut cob = Vec::new();
    let mut heap = BinaryHeap::new();
    for e in (0..edge_val.len()).rev() {
        if negative[e] {
            continue;
        }
        cob.clear();
        cofacets(e, &mut cob);
        let Some(&first) = cob.iter().min() else {
            out.push(Feature::essential(edge_val[e], 1));
            continue;
        };
        // Apparent pair: no later edge has `first` in its coboundary, so the
        // column is already reduced.
        if max_facet(first) == e {
            owner.insert(first, sums.len() as u32);
            sums.push(vec![e as u32]);
            out.push(Feature::new(edge_val[e], value(first), 1));
            continue;
        }

        heap.clear();
        heap.extend(cob.iter().map(|&k| Reverse(k)));
        let mut sum = vec![e as u32];
        let pivot = loop {
            let Some(p) = pop_pivot(&mut heap) else { break None };
            let Some(&o) = owner.get(&p) else { break Some(p) };
            for &f in &sums[o as usize] {
                cob.clear();
                cofacets(f as usize, &mut cob);
                heap.extend(cob.iter().map(|&k| Reverse(k)));
                sum.push(f);
            }
        };
        match pivot {
            Some(p) => {
                sum.sort_unstable();
                let sum = cancel_pairs(sum);
                owner.insert(p, sums.len() as u32);
                sums.push(sum);
                out.push(Feature::new(edge_val[e], value(p), 1));
            }
            None => out.push(Feature::essential(edge_val[e], 1)),
        }
    }
    out
}

/// Smallest key occurring an odd number of times; the entries popped on the
/// way are consumed. The pivot itself stays in the heap.
fn pop_pivot<K: Ord + Copy>(heap: &mut BinaryHeap<Reverse<K>>) -> Option<K> {
    while let Some(Reverse(top)) = heap.pop() {
        let mut odd = true;
        while heap.peek() == Some(&Reverse(top)) {
            heap.pop();
            odd = !odd;
        }
        if odd {
            heap.push(Reverse(top));
            return Some(top);
        }
    }
    None
}

/// Removes elements that occur an even number of times in a sorted list.
fn cancel_pairs(sorted: Vec<u32>) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::with_capacity(sorted.len());
    for x in sorted {
        if out.last() == Some(&x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}
