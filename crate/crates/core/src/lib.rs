//! Quiver representations of coupled-cell network dynamics.
//!
//! Networks are turned into quivers whose representations carry the
//! admissible vector fields; the reductions (Lyapunov-Schmidt, center
//! manifold, normal form) act on the whole tuple and keep it equivariant.

pub mod builders;
pub mod casestudy;
pub mod center_manifold;
pub mod dsl;
pub mod io;
pub mod linalg;
pub mod ls;
pub mod network;
pub mod normal_form;
pub mod ode;
pub mod poly;
pub mod polyfield;
pub mod quiver;
pub mod scalar;
pub mod spectral;

pub use linalg::Matrix;
pub use poly::{Monomial, Poly, PolyMap};
pub use quiver::{PolyMapTuple, Quiver, Representation, Subrepresentation};
pub use scalar::Scalar;

/// Exact scalar used for structural checks.
pub type Rational = num_rational::BigRational;
pub type ExactMatrix = Matrix<Rational>;
pub type FloatMatrix = Matrix<f64>;
pub type ExactPolyMap = PolyMap<Rational>;
pub type FloatPolyMap = PolyMap<f64>;
pub type ExactRepresentation = Representation<Rational>;
pub type FloatRepresentation = Representation<f64>;
pub type ExactTuple = PolyMapTuple<Rational>;
pub type FloatTuple = PolyMapTuple<f64>;
