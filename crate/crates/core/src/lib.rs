//! Exact arithmetic for rank-two étale φ-modules over `F_q((u))`, the
//! Bruhat-Tits tree of `PGL_2`, and the Kisin varieties attached to them.

pub mod connect;
pub mod error;
pub mod gf;
pub mod kisin;
pub mod lattice;
pub mod oracle;
pub mod phimod;
pub mod series;
pub mod tree;

pub use error::{Error, Result};
pub use gf::{Field, FieldElement, FieldSpec};
pub use lattice::{Lattice, Mat2, VertexClass};
pub use series::Laurent;
pub use tree::{BuildingPoint, Rational};
