//! Polynomial maps `P: Gamma -> G`: evaluation, discrete derivatives,
//! degree certificates, kernels, and predicted versus empirical image
//! closures.

mod closure;
mod compiled;
mod map;
mod poly;
mod table;

use thiserror::Error;

pub use closure::{
    empirical_image_closure, predicted_image_coset, Certainty, ClosureOptions, ClosureVerdict, Comparison,
    EmpiricalClosure, PredictedCoset, STABILIZATION_RADII,
};
pub use compiled::CompiledPoly;
pub use map::{
    Body, BodyKind, Certificate, Degree, DegreeOptions, DerivativeWitness, KernelReport, PhaseEvaluator,
    PolynomialMap, value_spread,
};
pub use poly::{binomial, Coeff, Exponents, Poly, RatPoly, ScalarPoly, TermSpec};
pub use table::{finite_difference_table, DifferenceTable};

use crate::exact::AlgebraError;
use crate::source::GroupError;
use crate::target::{SubgroupDescriptor, TargetError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error(transparent)]
    Source(#[from] GroupError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("invalid polynomial body: {0}")]
    InvalidBody(String),
    #[error("cyclic coordinate {coordinate} has an irrational coefficient")]
    IrrationalInCyclic { coordinate: usize },
    #[error("cyclic coordinate {coordinate} is not integer-valued: binomial coefficient {coefficient} at {exponents:?}")]
    NotIntegerValued {
        coordinate: usize,
        exponents: Vec<u32>,
        coefficient: String,
    },
    #[error("cyclic coordinate {coordinate} evaluated to the non-integer {value}")]
    NonIntegralValue { coordinate: usize, value: String },
    #[error("no degree up to {d_max} certified: {witness}")]
    DegreeExceeded {
        d_max: u32,
        witness: Box<DerivativeWitness>,
    },
    #[error("image subgroup did not stabilize by the largest radius")]
    StabilizationExhausted {
        previous: Box<SubgroupDescriptor>,
        last: Box<SubgroupDescriptor>,
    },
}

#[cfg(test)]
mod tests;
