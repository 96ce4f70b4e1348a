//! Filtrations, persistence diagrams and diagram distances.

pub mod diagram;
pub mod distance;
pub mod filtration;
pub mod lower_star;
pub mod persistence;
pub mod rips;

pub use diagram::{tilt, EssentialPolicy, Feature, PersistenceDiagram, TiltedDiagram, TiltedFeature};
pub use distance::{bottleneck_distance, wasserstein1_distance};
pub use filtration::{Filtration, Simplex};
pub use lower_star::{build_lower_star_filtration, classify_vertex, VertexKind};
pub use persistence::{compute_pairs, compute_persistence};
pub use rips::{build_rips_filtration, rips_persistence};
