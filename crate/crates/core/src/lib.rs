//! Exact arithmetic over K = F_q((1/T)) and experiments on the diagonal flow
//! in the space of F_q[T]-lattices.

pub mod contfrac;
pub mod dynamics;
pub mod error;
pub mod exterior;
pub mod gf;
pub mod lattice;
pub mod laurent;
pub mod margulis;
pub mod measure;
pub mod poly;
pub mod seed;

pub use error::{Error, Result};
pub use exterior::{pu_factor, KMatrix, SubsetIndex, WedgeVector};
pub use gf::{Field, FieldSpec, GfElem};
pub use lattice::{PolyLattice, RationalSubspace};
pub use laurent::{lift_rational, AbsValue, Laurent, Valuation};
pub use poly::Poly;
