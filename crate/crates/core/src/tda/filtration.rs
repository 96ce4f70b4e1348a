use std::cmp::Ordering;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

/// A vertex, edge or triangle given by strictly increasing vertex ids.
///
/// Unused slots are zero so the derived ordering is lexicographic within a
/// dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex {
    verts: [u32; 3],
    len: u8,
}

impl Simplex {
    pub fn vertex(v: u32) -> Self {
        Self { verts: [v, 0, 0], len: 1 }
    }

    /// Edge between two distinct vertices, in either order.
    pub fn edge(a: u32, b: u32) -> Self {
        debug_assert_ne!(a, b);
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        Self { verts: [a, b, 0], len: 2 }
    }

    /// Triangle on three distinct vertices, in any order.
    pub fn triangle(a: u32, b: u32, c: u32) -> Self {
        let mut v = [a, b, c];
        v.sort_unstable();
        debug_assert!(v[0] < v[1] && v[1] < v[2]);
        Self { verts: v, len: 3 }
    }

    pub fn from_vertices(vs: &[u32]) -> Result<Self> {
        let ok = (1..=3).contains(&vs.len()) && vs.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::invalid(format!(
                "simplex vertices must be 1 to 3 strictly increasing ids, got {vs:?}"
            )));
        }
        let mut verts = [0; 3];
        verts[..vs.len()].copy_from_slice(vs);
        Ok(Self { verts, len: vs.len() as u8 })
    }

    pub fn vertices(&self) -> &[u32] {
        &self.verts[..self.len as usize]
    }

    pub fn dim(&self) -> usize {
        self.len as usize - 1
    }

    /// Codimension-one faces; empty for a vertex.
    pub fn facets(&self) -> Vec<Simplex> {
        let v = self.vertices();
        match v.len() {
            2 => vec![Simplex::vertex(v[0]), Simplex::vertex(v[1])],
            3 => vec![
                Simplex::edge(v[1], v[2]),
                Simplex::edge(v[0], v[2]),
                Simplex::edge(v[0], v[1]),
            ],
            _ => Vec::new(),
        }
    }
}

/// Total order on filtration entries: value, then dimension, then lexicographic.
pub(crate) fn entry_order(a: &(Simplex, f64), b: &(Simplex, f64)) -> Ordering {
    a.1.total_cmp(&b.1)
        .then(a.0.len.cmp(&b.0.len))
        .then(a.0.cmp(&b.0))
}

/// Simplices (dimension at most 2) sorted by filtration value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Filtration {
    entries: Vec<(Simplex, f64)>,
}

impl Filtration {
    /// Sorts `entries` into filtration order and checks the face condition.
    pub fn new(mut entries: Vec<(Simplex, f64)>) -> Result<Self> {
        if entries.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite("filtration values"));
        }
        entries.sort_by(entry_order);
        let f = Self { entries };
        f.validate()?;
        Ok(f)
    }

    /// Builders that already guarantee the invariants skip validation.
    pub(crate) fn from_sorted_unchecked(entries: Vec<(Simplex, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| entry_order(&w[0], &w[1]).is_le()));
        Self { entries }
    }

    /// Checks ordering, uniqueness, and that every face enters no later than its cofaces.
    pub fn validate(&self) -> Result<()> {
        let mut seen: FxHashMap<Simplex, f64> = FxHashMap::default();
        for (i, (s, v)) in self.entries.iter().enumerate() {
            if i > 0 && entry_order(&self.entries[i - 1], &self.entries[i]).is_gt() {
                return Err(Error::invalid("filtration entries are not sorted"));
            }
            for face in s.facets() {
                match seen.get(&face) {
                    Some(fv) if fv <= v => {}
                    _ => {
                        return Err(Error::invalid(format!(
                            "face {:?} of {:?} missing or entering late",
                            face.vertices(),
                            s.vertices()
                        )))
                    }
                }
            }
            if seen.insert(*s, *v).is_some() {
                return Err(Error::invalid(format!("duplicate simplex {:?}", s.vertices())));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[(Simplex, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count_dim(&self, dim: usize) -> usize {
        self.entries.iter().filter(|(s, _)| s.dim() == dim).count()
    }

    pub fn max_value(&self) -> Option<f64> {
        self.entries.last().map(|e| e.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_late_faces() {
        let e = vec![
            (Simplex::vertex(0), 0.0),
            (Simplex::vertex(1), 2.0),
            (Simplex::edge(0, 1), 1.0),
        ];
        assert!(Filtration::new(e).is_err());
    }

    #[test]
    fn sorts_faces_before_cofaces_on_ties() {
        let e = vec![
            (Simplex::edge(0, 1), 1.0),
            (Simplex::vertex(1), 1.0),
            (Simplex::vertex(0), 1.0),
        ];
        let f = Filtration::new(e).unwrap();
        assert_eq!(f.entries()[2].0, Simplex::edge(0, 1));
    }

    #[test]
    fn simplex_vertices_must_increase() {
        assert!(Simplex::from_vertices(&[2, 1]).is_err());
        assert!(Simplex::from_vertices(&[1, 1]).is_err());
        assert!(Simplex::from_vertices(&[0, 1, 2, 3]).is_err());
        assert_eq!(Simplex::from_vertices(&[0, 4]).unwrap().dim(), 1);
    }
}
