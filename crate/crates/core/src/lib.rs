//! Generalized Weyl equidistribution for polynomial maps from `Z^d`, the
//! discrete Heisenberg group or finite abelian groups into compact abelian
//! groups `T^t x Z/n_1 x ... x Z/n_c`.
//!
//! Exact work (coset prediction, kernels, degrees) happens over
//! [`exact::FieldScalar`]; numeric work (Weyl sums, averages, inequality
//! checks) is generic over `num_traits::Float`, with `f64` aliases below.

pub mod equidist;
pub mod exact;
pub mod orbits;
pub mod phase;
pub mod polymaps;
pub mod source;
pub mod target;

pub use exact::{AlgebraError, FieldScalar, IrrationalRegistry};
pub use polymaps::{PolyError, PolynomialMap};
pub use source::{FolnerFamily, SourceElement, SourceGroup};
pub use target::{Character, ClosedSubgroup, Coset, TargetElement, TargetGroup};

pub type Complex = num_complex::Complex<f64>;
pub type CompensatedSum = equidist::CompensatedSum<f64>;
pub type SampledFunction = equidist::SampledFunction<f64>;
pub type VdcCheck = equidist::VdcCheck<f64>;
pub type ConstDerivRow = equidist::ConstDerivRow<f64>;
pub type ConstDerivReport = equidist::ConstDerivReport<f64>;
/// Integer matrices over arbitrary-precision integers.
pub type IntMatrix = exact::IntMatrix<num_bigint::BigInt>;
