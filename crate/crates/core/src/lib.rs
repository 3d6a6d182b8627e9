//! Finite-field models of three compactifications of Drinfeld's upper half
//! space over `k = F_q`: projective space `P_V`, the space `Q_V` of reciprocal
//! maps, and the successive blowup `B_V`, together with their strata,
//! `PGL(V)(k)`-stabilizers and point counts over finite extensions.

pub mod atlas;
pub mod error;
pub mod field;
pub mod group;
pub mod io;
pub mod linalg;
pub mod points;
pub mod space;
pub mod verify;

pub use atlas::{build_atlas, export, Format, StrataAtlas};
pub use error::{Error, Result};
pub use field::{Element, FieldCtx};
pub use group::GroupElement;
pub use linalg::{Flag, Functional, Matrix, Subspace, Vector};
pub use points::{BPoint, PPoint, Point, QPoint, StratumKey, Variety};
pub use space::Space;
