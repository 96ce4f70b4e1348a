//! Lower-star filtration of a triangulated image grid.
//!
//! Pixels are vertices. Horizontally and vertically adjacent pixels are joined
//! by edges, and every grid cell gets the diagonal from its top-left to its
//! bottom-right corner, which splits it into two triangles. Each simplex
//! enters at the largest intensity among its vertices, so the complex at
//! level `e` is the triangulated sublevel set `{x : f(x) <= e}`.
//!
//! How the sublevel set changes when a pixel enters depends on its lower
//! link (the neighbours that entered before it, see [`classify_vertex`]):
//!
//! * no lower neighbours: a minimum, a new component is born;
//! * one contiguous run of lower neighbours: a regular point, topology is
//!   unchanged;
//! * two or more runs: a saddle, locally separate pieces meet at the pixel
//!   and the component count drops by one for each extra run that was not
//!   already connected elsewhere;
//! * every neighbour lower: a maximum, which closes a loop around an
//!   interior vertex.

use super::filtration::{entry_order, Filtration, Simplex};
use crate::cloud::Grid;
use crate::error::{Error, Result};

pub fn build_lower_star_filtration(image: &Grid) -> Result<Filtration> {
    let (rows, cols) = (image.rows(), image.cols());
    if rows * cols == 0 {
        return Err(Error::EmptyInput("image grid"));
    }
    if image.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("image intensities"));
    }
    let id = |r: usize, c: usize| (r * cols + c) as u32;
    let val = |r: usize, c: usize| image.get(r, c);

    let mut entries = Vec::with_capacity(rows * cols * 6);
    for r in 0..rows {
        for c in 0..cols {
            entries.push((Simplex::vertex(id(r, c)), val(r, c)));
            if c + 1 < cols {
                entries.push((Simplex::edge(id(r, c), id(r, c + 1)), val(r, c).max(val(r, c + 1))));
            }
            if r + 1 < rows {
                entries.push((Simplex::edge(id(r, c), id(r + 1, c)), val(r, c).max(val(r + 1, c))));
            }
            if r + 1 < rows && c + 1 < cols {
                let (tl, tr, bl, br) = (val(r, c), val(r, c + 1), val(r + 1, c), val(r + 1, c + 1));
                entries.push((Simplex::edge(id(r, c), id(r + 1, c + 1)), tl.max(br)));
                entries.push((
                    Simplex::triangle(id(r, c), id(r, c + 1), id(r + 1, c + 1)),
                    tl.max(tr).max(br),
                ));
                entries.push((
                    Simplex::triangle(id(r, c), id(r + 1, c), id(r + 1, c + 1)),
                    tl.max(bl).max(br),
                ));
            }
        }
    }
    entries.sort_unstable_by(entry_order);
    Ok(Filtration::from_sorted_unchecked(entries))
}

/// Critical-point type of a pixel in the lower-star filtration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexKind {
    Minimum,
    Regular,
    Saddle,
    Maximum,
}

// Link of an interior vertex in cyclic order; consecutive entries share a triangle.
const LINK: [(isize, isize); 6] = [(-1, 0), (0, 1), (1, 1), (1, 0), (0, -1), (-1, -1)];

/// Classifies pixel `(r, c)` by the runs of its lower link.
///
/// "Lower" follows the filtration order: smaller intensity, or equal
/// intensity and smaller pixel index.
pub fn classify_vertex(image: &Grid, r: usize, c: usize) -> VertexKind {
    let key = |r: usize, c: usize| (image.get(r, c), r * image.cols() + c);
    let here = key(r, c);
    let lower = |rr: usize, cc: usize| {
        let k = key(rr, cc);
        k.0 < here.0 || (k.0 == here.0 && k.1 < here.1)
    };
    // None = outside the grid, Some(is_lower) otherwise.
    let slots: Vec<Option<bool>> = LINK
        .iter()
        .map(|&(dr, dc)| {
            let (rr, cc) = (r as isize + dr, c as isize + dc);
            if rr < 0 || cc < 0 || rr >= image.rows() as isize || cc >= image.cols() as isize {
                None
            } else {
                Some(lower(rr as usize, cc as usize))
            }
        })
        .collect();
    let present = slots.iter().filter(|s| s.is_some()).count();
    let n_lower = slots.iter().filter(|s| **s == Some(true)).count();
    if n_lower == 0 {
        return VertexKind::Minimum;
    }
    if n_lower == present {
        return VertexKind::Maximum;
    }
    // Count maximal cyclic runs of lower slots; missing slots break runs.
    let runs = (0..6)
        .filter(|&i| slots[i] == Some(true) && slots[(i + 5) % 6] != Some(true))
        .count();
    if runs >= 2 {
        VertexKind::Saddle
    } else {
        VertexKind::Regular
    }
}
