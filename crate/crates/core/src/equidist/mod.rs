//! Følner averages, Weyl sums and the numeric checks built on them.

mod checks;
mod homomorphism;
mod sum;
mod weyl;

use std::collections::{HashMap, HashSet};

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checks::{constant_derivative_bound_check, vdc_inequality_check, ConstDerivReport, ConstDerivRow, VdcCheck};
pub use homomorphism::{homomorphism_uniformity_report, FiniteGroup, Homomorphism, UniformityReport};
pub use sum::{partitioned_sum, CompensatedSum};
pub(crate) use weyl::weyl_table;
pub use weyl::{
    equidistribution_report, weyl_sum, EquidistReport, ReportOptions, SumOptions, WeylReport, WeylRow,
    MAX_CHARACTERS,
};

use crate::polymaps::PolyError;
use crate::source::{GroupError, SourceElement, SourceGroup};
use crate::target::TargetError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquidistError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Source(#[from] GroupError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error("{count} domain points are missing, first {first}")]
    Uncovered { count: usize, first: SourceElement },
    #[error("duplicate domain point {0}")]
    DuplicatePoint(SourceElement),
    #[error("value {value} at {at} has modulus above 1")]
    NotBounded { at: SourceElement, value: String },
    #[error("value {value} at {at} is not of unit modulus")]
    NotUnit { at: SourceElement, value: String },
    #[error("domain and values differ in length ({domain} vs {values})")]
    Length { domain: usize, values: usize },
    #[error("empty averaging set")]
    EmptySet,
    #[error("z0 must differ from 1")]
    TrivialRatio,
    #[error("derivative hypothesis fails at {at}: ratio {found} differs from z0")]
    Hypothesis { at: SourceElement, found: String },
    #[error("Følner indices must increase")]
    Unordered,
    #[error("{count} characters up to the cutoff exceed the limit of {limit}")]
    TooManyCharacters { count: u128, limit: u128 },
    #[error("invalid finite group: {0}")]
    InvalidFiniteGroup(String),
    #[error("not a homomorphism: {relation} fails for {left} and {right}")]
    NotHomomorphism {
        relation: String,
        left: String,
        right: String,
    },
}

/// A complex number as `{re, im}` in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl<T: Float> From<Complex<T>> for ComplexValue {
    fn from(z: Complex<T>) -> Self {
        Self {
            re: z.re.to_f64().unwrap_or(f64::NAN),
            im: z.im.to_f64().unwrap_or(f64::NAN),
        }
    }
}

impl ComplexValue {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// A bounded complex function on a finite set of source elements.
#[derive(Debug, Clone)]
pub struct SampledFunction<T> {
    domain: Vec<SourceElement>,
    values: Vec<Complex<T>>,
    index: HashMap<SourceElement, usize>,
}

impl<T: Float + FloatConst> SampledFunction<T> {
    /// Checks `|f| <= 1 + 1e-12` everywhere, or `|f| = 1` to within `1e-12`
    /// when `unit` is set.
    pub fn new(domain: Vec<SourceElement>, values: Vec<Complex<T>>, unit: bool) -> Result<Self, EquidistError> {
        if domain.len() != values.len() {
            return Err(EquidistError::Length {
                domain: domain.len(),
                values: values.len(),
            });
        }
        let slack = tolerance::<T>(1e-12);
        let mut index = HashMap::with_capacity(domain.len());
        for (i, (x, v)) in domain.iter().zip(&values).enumerate() {
            if index.insert(x.clone(), i).is_some() {
                return Err(EquidistError::DuplicatePoint(x.clone()));
            }
            let m = v.norm();
            if m > T::one() + slack {
                return Err(EquidistError::NotBounded {
                    at: x.clone(),
                    value: format!("{:?}", ComplexValue::from(*v)),
                });
            }
            if unit && (m - T::one()).abs() > slack {
                return Err(EquidistError::NotUnit {
                    at: x.clone(),
                    value: format!("{:?}", ComplexValue::from(*v)),
                });
            }
        }
        Ok(Self { domain, values, index })
    }

    pub fn from_fn(domain: Vec<SourceElement>, unit: bool, f: impl Fn(&SourceElement) -> Complex<T>) -> Result<Self, EquidistError> {
        let values = domain.iter().map(f).collect();
        Self::new(domain, values, unit)
    }

    /// `x -> e^{2 pi i t(x)}` for a turn-valued `t`.
    pub fn from_turns(domain: Vec<SourceElement>, t: impl Fn(&SourceElement) -> f64) -> Result<Self, EquidistError> {
        Self::from_fn(domain, true, |x| {
            let a = T::TAU() * T::from(t(x)).expect("turn fits the float type");
            Complex::new(a.cos(), a.sin())
        })
    }

    pub fn domain(&self) -> &[SourceElement] {
        &self.domain
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn get(&self, x: &SourceElement) -> Option<Complex<T>> {
        self.index.get(x).map(|&i| self.values[i])
    }

    pub fn contains(&self, x: &SourceElement) -> bool {
        self.index.contains_key(x)
    }

    /// Fails with the number of missing points and the first one.
    pub fn covers<'a>(&self, points: impl IntoIterator<Item = &'a SourceElement>) -> Result<(), EquidistError> {
        let mut missing = points.into_iter().filter(|x| !self.contains(x));
        if let Some(first) = missing.next() {
            return Err(EquidistError::Uncovered {
                count: 1 + missing.count(),
                first: first.clone(),
            });
        }
        Ok(())
    }
}

pub(crate) fn tolerance<T: Float>(at_least: f64) -> T {
    let floor = T::from(at_least).expect("tolerance fits the float type");
    floor.max(T::epsilon() * T::from(64.0).expect("small constant"))
}

/// `A_F(f)`: the mean of `f` over `F` with compensated summation.
pub fn folner_average<T: Float + FloatConst>(f: &SampledFunction<T>, set: &[SourceElement]) -> Result<Complex<T>, EquidistError> {
    if set.is_empty() {
        return Err(EquidistError::EmptySet);
    }
    f.covers(set)?;
    let mut acc = CompensatedSum::new();
    for x in set {
        acc.add(f.get(x).expect("covered"));
    }
    Ok(acc.value() / T::from(set.len()).expect("set size fits the float type"))
}

/// `|g F \u{25b3} F|` for each `g` in `s0` and the size of the union, for an
/// arbitrary finite `F`.
pub fn boundary_of_set(group: &SourceGroup, set: &[SourceElement], s0: &[SourceElement]) -> Result<(Vec<u64>, u64), EquidistError> {
    let members: HashSet<&SourceElement> = set.iter().collect();
    let mut union: HashSet<SourceElement> = HashSet::new();
    let mut per = Vec::with_capacity(s0.len());
    for g in s0 {
        let g_inv = group.inverse(g)?;
        let mut count = 0u64;
        for x in set {
            let gx = group.compose(g, x)?;
            if !members.contains(&gx) {
                count += 1;
                union.insert(gx);
            }
            if !members.contains(&group.compose(&g_inv, x)?) {
                count += 1;
                union.insert(x.clone());
            }
        }
        per.push(count);
    }
    Ok((per, union.len() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(lo: i64, hi: i64) -> Vec<SourceElement> {
        (lo..hi).map(|n| SourceElement::new(&[n])).collect()
    }

    #[test]
    fn average_examples() {
        let one = SampledFunction::<f64>::from_fn(line(-5, 20), true, |_| Complex::new(1.0, 0.0)).unwrap();
        assert_eq!(folner_average(&one, &line(0, 10)).unwrap(), Complex::new(1.0, 0.0));
        let alt = SampledFunction::<f64>::from_turns(line(0, 2000), |x| x.coords()[0] as f64 / 2.0).unwrap();
        assert!(folner_average(&alt, &line(0, 2000)).unwrap().norm() < 1e-12);
        let err = folner_average(&one, &line(15, 30)).unwrap_err();
        assert_eq!(
            err,
            EquidistError::Uncovered {
                count: 10,
                first: SourceElement::new(&[20])
            }
        );
    }

    #[test]
    fn geometric_average_bound() {
        // e^{2 pi i sqrt2 n} over [0, 10^4): |A| <= 2 / (N |1 - e^{2 pi i sqrt2}|)
        let sqrt2 = std::f64::consts::SQRT_2;
        let n = 10_000;
        let f = SampledFunction::<f64>::from_turns(line(0, n), |x| (x.coords()[0] as f64 * sqrt2).fract()).unwrap();
        let a = folner_average(&f, &line(0, n)).unwrap().norm();
        let z = Complex::from_polar(1.0, std::f64::consts::TAU * sqrt2);
        assert!(a <= 2.0 / (n as f64 * (Complex::new(1.0, 0.0) - z).norm()));
    }

    #[test]
    fn rejects_bad_functions() {
        let d = line(0, 2);
        assert!(matches!(
            SampledFunction::<f64>::new(d.clone(), vec![Complex::new(1.5, 0.0), Complex::new(0.0, 0.0)], false),
            Err(EquidistError::NotBounded { .. })
        ));
        assert!(matches!(
            SampledFunction::<f64>::new(d.clone(), vec![Complex::new(0.5, 0.0), Complex::new(1.0, 0.0)], true),
            Err(EquidistError::NotUnit { .. })
        ));
        assert!(matches!(
            SampledFunction::<f64>::new(vec![d[0].clone(), d[0].clone()], vec![Complex::new(0.5, 0.0); 2], false),
            Err(EquidistError::DuplicatePoint(_))
        ));
    }

    #[test]
    fn average_is_order_independent_and_generic() {
        let d = line(0, 5000);
        let f = SampledFunction::<f64>::from_turns(d.clone(), |x| ((x.coords()[0] * x.coords()[0]) as f64 * 0.1234567).fract()).unwrap();
        let mut rev = d.clone();
        rev.reverse();
        let a = folner_average(&f, &d).unwrap();
        let b = folner_average(&f, &rev).unwrap();
        assert!((a - b).norm() < 1e-12);
        let g = SampledFunction::<f32>::from_turns(d.clone(), |x| (x.coords()[0] as f64 / 2.0).fract()).unwrap();
        assert!(folner_average(&g, &d).unwrap().norm() < 1e-4);
    }

    #[test]
    fn boundary_of_interval() {
        let z = SourceGroup::free_abelian(1).unwrap();
        let (per, union) = boundary_of_set(&z, &line(0, 100), &[SourceElement::new(&[1]), SourceElement::new(&[3])]).unwrap();
        assert_eq!(per, vec![2, 6]);
        assert_eq!(union, 6);
    }
}
