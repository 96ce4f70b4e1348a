use super::diagram::{sort_features, PersistenceDiagram};
use super::filtration::{entry_order, Filtration, Simplex};
use super::persistence::{drop_zero_length, one_dim_pairs, zero_dim_pairs};
use crate::cloud::{euclidean, PointCloud};
use crate::error::{Error, Result};

/// Vietoris–Rips filtration up to `max_radius`, with triangles when `max_dim == 2`.
///
/// Vertices enter at 0, an edge at the distance between its endpoints, and a
/// triangle at its longest edge.
pub fn build_rips_filtration(points: &PointCloud, max_radius: f64, max_dim: usize) -> Result<Filtration> {
    check(points, max_radius)?;
    if !(1..=2).contains(&max_dim) {
        return Err(Error::invalid(format!("max_dim must be 1 or 2, got {max_dim}")));
    }
    let n = points.len();
    let dist = distance_matrix(points);

    let mut entries: Vec<(Simplex, f64)> = (0..n as u32).map(|v| (Simplex::vertex(v), 0.0)).collect();
    let mut higher = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let dij = dist[i * n + j];
            if dij > max_radius {
                continue;
            }
            higher.push((Simplex::edge(i as u32, j as u32), dij));
            if max_dim < 2 {
                continue;
            }
            for k in j + 1..n {
                let v = dij.max(dist[i * n + k]).max(dist[j * n + k]);
                if v <= max_radius {
                    higher.push((Simplex::triangle(i as u32, j as u32, k as u32), v));
                }
            }
        }
    }
    higher.sort_unstable_by(entry_order);
    entries.extend(higher);
    Ok(Filtration::from_sorted_unchecked(entries))
}

/// Persistence diagram of the two-dimensional Rips filtration up to
/// `max_radius`, without materializing the triangles.
///
/// Produces the same diagram as building the filtration and reducing it.
pub fn rips_persistence(points: &PointCloud, max_radius: f64) -> Result<PersistenceDiagram> {
    check(points, max_radius)?;
    let n = points.len();
    let dist = distance_matrix(points);

    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = dist[i * n + j];
            if d <= max_radius {
                edges.push((d, i as u32, j as u32));
            }
        }
    }
    edges.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let edge_val: Vec<f64> = edges.iter().map(|e| e.0).collect();

    let (mut out, negative) = zero_dim_pairs(&vec![0.0; n], edges.iter().map(|e| (e.1, e.2)), &edge_val);
    let mut rank = vec![u32::MAX; n * n];
    for (r, &(_, i, j)) in edges.iter().enumerate() {
        rank[i as usize * n + j as usize] = r as u32;
    }

    // Triangle key: (bits of the value, lexicographic rank of the sorted
    // vertices). Distances are nonnegative, so the bit order is the value order.
    let nn = n as u64;
    let cofacets = |e: usize, col: &mut Vec<(u64, u64)>| {
        let (d, a, b) = (edges[e].0, edges[e].1 as usize, edges[e].2 as usize);
        for k in 0..n {
            if k == a || k == b {
                continue;
            }
            let v = d.max(dist[a * n + k]).max(dist[b * n + k]);
            if v <= max_radius {
                let mut t = [a as u64, b as u64, k as u64];
                t.sort_unstable();
                col.push((v.to_bits(), (t[0] * nn + t[1]) * nn + t[2]));
            }
        }
    };
    let max_facet = |k: (u64, u64)| {
        let (i, j, l) = ((k.1 / (nn * nn)) as usize, (k.1 / nn % nn) as usize, (k.1 % nn) as usize);
        rank[i * n + j].max(rank[i * n + l]).max(rank[j * n + l]) as usize
    };
    out.extend(one_dim_pairs(&edge_val, &negative, cofacets, |k: (u64, u64)| f64::from_bits(k.0), max_facet));
    sort_features(&mut out);
    Ok(drop_zero_length(out))
}

fn check(points: &PointCloud, max_radius: f64) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyInput("point cloud"));
    }
    if !points.is_finite() {
        return Err(Error::NonFinite("point coordinates"));
    }
    if !(max_radius > 0.0) {
        return Err(Error::invalid(format!("max_radius must be positive, got {max_radius}")));
    }
    if points.len() > u32::MAX as usize {
        return Err(Error::invalid("too many points"));
    }
    Ok(())
}

fn distance_matrix(points: &PointCloud) -> Vec<f64> {
    let n = points.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = euclidean(points.point(i), points.point(j));
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(rows: &[[f64; 2]]) -> PointCloud {
        PointCloud::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn two_points() {
        let f = build_rips_filtration(&cloud(&[[0.0, 0.0], [0.5, 0.0]]), 1.0, 1).unwrap();
        assert_eq!(f.count_dim(0), 2);
        assert_eq!(f.count_dim(1), 1);
        assert_eq!(f.entries()[2].1, 0.5);
    }

    #[test]
    fn equilateral_triangle() {
        let h = 3f64.sqrt() / 2.0;
        let f = build_rips_filtration(&cloud(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]), 2.0, 2).unwrap();
        assert_eq!(f.count_dim(0), 3);
        assert_eq!(f.count_dim(1), 3);
        assert_eq!(f.count_dim(2), 1);
        for (s, v) in f.entries() {
            if s.dim() > 0 {
                assert!((v - 1.0).abs() < 1e-12);
            }
        }
        f.validate().unwrap();
    }

    #[test]
    fn edge_count_matches_pairwise_threshold() {
        let n = 100;
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let pc = PointCloud::from_rows(&pts).unwrap();
        for eps in [0.05, 0.2, 0.7, 1.3, 2.5] {
            let f = build_rips_filtration(&pc, eps, 1).unwrap();
            let mut brute = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if euclidean(&pts[i], &pts[j]) <= eps {
                        brute += 1;
                    }
                }
            }
            assert_eq!(f.count_dim(1), brute, "eps = {eps}");
        }
    }

    #[test]
    fn implicit_path_matches_filtration() {
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let a = i as f64 * 0.7;
                vec![a.cos() * (1.0 + 0.1 * (3.0 * a).sin()), a.sin()]
            })
            .collect();
        let pc = PointCloud::from_rows(&pts).unwrap();
        for r in [0.3, 0.8, f64::INFINITY] {
            let a = rips_persistence(&pc, r).unwrap();
            let b = super::super::persistence::compute_persistence(&build_rips_filtration(&pc, r, 2).unwrap());
            assert_eq!(a, b, "radius {r}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        let empty = PointCloud::new(2, vec![]).unwrap();
        assert!(build_rips_filtration(&empty, 1.0, 1).is_err());
        let nan = PointCloud::new(1, vec![0.0, f64::NAN]).unwrap();
        assert!(matches!(build_rips_filtration(&nan, 1.0, 1), Err(Error::NonFinite(_))));
        let ok = cloud(&[[0.0, 0.0]]);
        assert!(build_rips_filtration(&ok, 0.0, 1).is_err());
        assert!(build_rips_filtration(&ok, 1.0, 3).is_err());
        assert!(rips_persistence(&empty, 1.0).is_err());
    }
}
