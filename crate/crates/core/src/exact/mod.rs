//! Exact arithmetic: rationals extended by declared irrationals, and integer
//! lattice algorithms (Hermite / Smith normal form, integer kernels).

mod kernel;
mod matrix;
mod scalar;

pub use kernel::{integer_kernel, Condition, ConditionKind, Lattice};
pub use matrix::{hermite_normal_form, smith_normal_form, HermiteForm, IntMatrix, IntegerRing, SmithForm};
pub use scalar::{FieldScalar, HighPrecision, Irrational, IrrationalRegistry, MIN_SIGNIFICANT_DIGITS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("cannot parse scalar {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error("irrational {0:?} is not declared in the registry")]
    UnknownIrrational(String),
    #[error("irrational {0:?} is declared twice")]
    DuplicateIrrational(String),
    #[error("irrational {name:?} rejected: {reason}")]
    InvalidIrrational { name: String, reason: String },
    #[error("operands reference different irrational registries")]
    RegistryMismatch,
    #[error("requested {requested} digits but the registry literals only support {available}")]
    PrecisionExceeded { requested: u32, available: u32 },
    #[error("matrix rows have inconsistent lengths (expected {expected}, found {found})")]
    Ragged { expected: usize, found: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}
