//! Fixed-point phases in the circle group `R/Z`.
//!
//! A [`Phase`] stores a turn as a 128-bit binary fraction, so addition and
//! multiplication by integers wrap exactly modulo one. Exact phases computed
//! in [`FieldScalar`] arithmetic are reduced mod 1 first and only then
//! rounded to this representation, which keeps large arguments such as
//! `sqrt2 * n^2` accurate.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, ToPrimitive};

use crate::exact::{AlgebraError, FieldScalar, IrrationalRegistry};

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Phase(pub u128);

impl Phase {
    pub const ZERO: Phase = Phase(0);

    /// Rounds an exact rational turn to the nearest representable phase.
    pub fn from_rational(q: &BigRational) -> Phase {
        let frac = q - q.floor();
        let scaled = (frac * BigRational::from_integer(BigInt::from(1u8) << 128u32))
            .round()
            .to_integer();
        let modulus = BigInt::from(1u8) << 128u32;
        let reduced = ((scaled % &modulus) + &modulus) % &modulus;
        Phase(reduced.to_u128().expect("reduced below 2^128"))
    }

    /// `x mod 1` with irrationals replaced by their registry literals.
    pub fn from_scalar(x: &FieldScalar, registry: &IrrationalRegistry) -> Result<Phase, AlgebraError> {
        Ok(Self::from_rational(&x.approximate(registry)?))
    }

    pub fn from_turns(t: f64) -> Phase {
        let frac = t - t.floor();
        let hi = (frac * TWO_POW_64) as u64;
        Phase((hi as u128) << 64)
    }

    /// The turn in `[0, 1)`.
    pub fn turns(self) -> f64 {
        ((self.0 >> 64) as u64 as f64 + (self.0 as u64 as f64) / TWO_POW_64) / TWO_POW_64
    }

    /// `e^{2 pi i t}`.
    pub fn to_unit<T: Float + FloatConst>(self) -> Complex<T> {
        let angle = T::TAU() * T::from(self.turns()).expect("turn fits the float type");
        Complex::new(angle.cos(), angle.sin())
    }

    /// Distance to the nearest integer, in turns.
    pub fn circle_distance(self, other: Phase) -> f64 {
        let d = self.0.wrapping_sub(other.0);
        let d = d.min(d.wrapping_neg());
        Phase(d).turns()
    }

    pub fn wrapping_add(self, other: Phase) -> Phase {
        Phase(self.0.wrapping_add(other.0))
    }

    pub fn wrapping_sub(self, other: Phase) -> Phase {
        Phase(self.0.wrapping_sub(other.0))
    }

    /// `k * t mod 1` for an integer `k` given modulo `2^128`.
    pub fn wrapping_mul_int(self, k: u128) -> Phase {
        Phase(self.0.wrapping_mul(k))
    }
}
