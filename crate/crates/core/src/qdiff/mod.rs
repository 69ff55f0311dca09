//! Quadratic differentials on planar charts and on flat glued surfaces.

mod compare;
mod cylinders;
mod geodesic;
mod leaves;
mod planar;
mod surface;

pub use compare::{compare_differentials, holomorphic_identity_check, CompareEntry, CompareReport, HolomorphicCheck};
pub use cylinders::{detect_cylinders, CylinderOptions, FlatCylinder};
pub use geodesic::{flat_geodesic, flat_geodesic_with_depth, geodesic_in_class, ClosedGeodesic, FlatSegment};
pub use leaves::{trace_leaf, LeafOptions, LeafTrace};
pub use planar::{epsilon_bound_check, normalize_sign, Chart, EpsilonReport, EpsilonSample, PlanarDifferential, QJet};
pub use surface::{Gluing, HalfTranslationSurface, SurfacePoint, VertexClass};
