use crate::exact::{AlgebraError, IrrationalRegistry};
use crate::phase::Phase;

use super::poly::{monomial_bound, ScalarPoly};

/// A scalar polynomial with coefficients rounded to fixed-point turns.
///
/// Evaluation multiplies each coefficient by the exact integer monomial value
/// with wrapping `u128` arithmetic, which is exact modulo one up to the
/// coefficient rounding of `2^-129` turns per unit of monomial size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledPoly {
    nvars: usize,
    terms: Vec<(Vec<u32>, Phase)>,
    constant: Phase,
}

impl CompiledPoly {
    pub fn compile(p: &ScalarPoly, registry: &IrrationalRegistry) -> Result<Self, AlgebraError> {
        let mut terms = Vec::new();
        let mut constant = Phase::ZERO;
        for (e, c) in p.terms() {
            let ph = Phase::from_scalar(&c.mod1(), registry)?;
            if e.iter().all(|&k| k == 0) {
                constant = ph;
            } else {
                terms.push((e.clone(), ph));
            }
        }
        Ok(Self {
            nvars: p.nvars(),
            terms,
            constant,
        })
    }

    pub fn constant(nvars: usize, value: Phase) -> Self {
        Self {
            nvars,
            terms: Vec::new(),
            constant: value,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Checks that every evaluation over the box `ranges` is accurate to
    /// `10^-digits` turns, accounting for fixed-point rounding and for the
    /// finite registry literals behind irrational coefficients.
    pub fn check_accuracy(
        source: &ScalarPoly,
        registry: &IrrationalRegistry,
        ranges: &[(i64, i64)],
        digits: u32,
    ) -> Result<(), AlgebraError> {
        let mut log_err = f64::NEG_INFINITY;
        let mut literal_digits = u32::MAX;
        for (e, c) in source.terms() {
            let m = monomial_bound(e, ranges).max(1.0);
            // monomial values must fit the i128 product
            if m >= 2f64.powi(126) {
                return Err(AlgebraError::PrecisionExceeded {
                    requested: digits,
                    available: 0,
                });
            }
            let weight: f64 = c
                .irrational_parts()
                .values()
                .map(|q| num_traits::ToPrimitive::to_f64(q).unwrap_or(f64::INFINITY).abs())
                .sum();
            for name in c.irrational_parts().keys() {
                literal_digits = literal_digits.min(registry.lookup(name)?.fraction_digits());
            }
            let lit = if weight > 0.0 {
                weight.log10() - literal_digits as f64
            } else {
                f64::NEG_INFINITY
            };
            let fixed = -128.0 * 2f64.log10();
            let term = m.log10() + log_add(fixed, lit);
            log_err = log_add(log_err, term);
        }
        let available = (-log_err).floor().max(0.0);
        if log_err > -(digits as f64) {
            return Err(AlgebraError::PrecisionExceeded {
                requested: digits,
                available: available.min(u32::MAX as f64) as u32,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, x: &[i64]) -> Phase {
        let mut acc = self.constant.0;
        for (e, c) in &self.terms {
            let mut m: i128 = 1;
            for (&k, &xi) in e.iter().zip(x) {
                for _ in 0..k {
                    m = m.wrapping_mul(xi as i128);
                }
            }
            acc = acc.wrapping_add(c.0.wrapping_mul(m as u128));
        }
        Phase(acc)
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let hi = a.max(b);
    hi + (1.0 + 10f64.powf(a.min(b) - hi)).log10()
}
