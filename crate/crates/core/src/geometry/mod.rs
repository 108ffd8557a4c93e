//! Background mesh, implicit surface, active (cut) elements and the
//! reconstructed surface Γ_h with its quadrature.

pub mod cut;
pub mod level_set;
pub mod mesh;
pub mod quadrature;

pub use cut::{select_active_elements, ActiveMesh, ActiveTet, QuadPoint, SurfaceTriangle};
pub use level_set::{tangential_projector, LevelSetSurface};
pub use mesh::{BackgroundMesh, BoundingBox};
pub use quadrature::{TetRule, TriangleRule};
