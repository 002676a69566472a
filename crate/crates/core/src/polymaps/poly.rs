use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::exact::FieldScalar;

/// Coefficients a [`Poly`] can carry: an additive group with a rational
/// scaling.
pub trait Coeff: Clone + PartialEq + fmt::Debug + fmt::Display {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add_to(&mut self, other: &Self);
    fn negated(&self) -> Self;
    fn scaled(&self, q: &BigRational) -> Self;
}

impl Coeff for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_to(&mut self, other: &Self) {
        *self += other;
    }
    fn negated(&self) -> Self {
        -self
    }
    fn scaled(&self, q: &BigRational) -> Self {
        self * q
    }
}

impl Coeff for FieldScalar {
    fn zero() -> Self {
        FieldScalar::zero()
    }
    fn is_zero(&self) -> bool {
        FieldScalar::is_zero(self)
    }
    fn add_to(&mut self, other: &Self) {
        *self += other;
    }
    fn negated(&self) -> Self {
        -self
    }
    fn scaled(&self, q: &BigRational) -> Self {
        self.scale(q)
    }
}

pub type Exponents = Vec<u32>;

/// A multivariate polynomial in `nvars` variables, stored sparsely by
/// exponent vector with zero coefficients dropped.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Poly<C> {
    nvars: usize,
    terms: BTreeMap<Exponents, C>,
}

/// Polynomials with rational coefficients, used for substitutions.
pub type RatPoly = Poly<BigRational>;
/// Polynomials with [`FieldScalar`] coefficients.
pub type ScalarPoly = Poly<FieldScalar>;

impl<C: Coeff> Poly<C> {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// Sums repeated exponents; panics if an exponent vector has the wrong
    /// length.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponents, C)>) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn add_term(&mut self, exponents: Exponents, c: C) {
        assert_eq!(exponents.len(), self.nvars, "exponent vector length");
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(exponents).or_insert_with(C::zero);
        slot.add_to(&c);
        if slot.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exponents: &[u32]) -> C {
        self.terms.get(exponents).cloned().unwrap_or_else(C::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Largest exponent of each variable.
    pub fn degrees(&self) -> Vec<u32> {
        let mut out = vec![0; self.nvars];
        for e in self.terms.keys() {
            for (o, &x) in out.iter_mut().zip(e) {
                *o = (*o).max(x);
            }
        }
        out
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&vec![0; self.nvars])
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.negated())).collect(),
        }
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        Self::from_terms(self.nvars, self.terms.iter().map(|(e, c)| (e.clone(), c.scaled(q))))
    }

    /// Product with a rational polynomial in the same variables.
    pub fn mul_rat(&self, other: &RatPoly) -> Self {
        assert_eq!(self.nvars, other.nvars, "variable count");
        let mut out = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1.scaled(c2));
            }
        }
        out
    }

    /// Exact value at an integer point.
    pub fn eval_int(&self, x: &[i64]) -> C {
        assert_eq!(x.len(), self.nvars, "point arity");
        let mut acc = C::zero();
        for (e, c) in &self.terms {
            let m = monomial_value(e, x);
            acc.add_to(&c.scaled(&BigRational::from_integer(m)));
        }
        acc
    }

    /// Replaces variable `i` by `subs[i]`; the result lives in the variables of
    /// the substituted polynomials.
    pub fn substitute(&self, subs: &[RatPoly]) -> Self {
        assert_eq!(subs.len(), self.nvars, "one substitution per variable");
        let target_vars = subs.first().map_or(0, |s| s.nvars);
        let mut powers: Vec<Vec<RatPoly>> = subs.iter().map(|s| vec![RatPoly::one(s.nvars)]).collect();
        let mut out = Self::zero(target_vars);
        for (e, c) in &self.terms {
            let mut prod = RatPoly::one(target_vars);
            for (i, &k) in e.iter().enumerate() {
                while powers[i].len() <= k as usize {
                    let next = powers[i].last().expect("nonempty").mul_rat(&subs[i]);
                    powers[i].push(next);
                }
                if k > 0 {
                    prod = prod.mul_rat(&powers[i][k as usize]);
                }
            }
            for (pe, pc) in &prod.terms {
                out.add_term(pe.clone(), c.scaled(pc));
            }
        }
        out
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        Poly::from_terms(self.nvars, self.terms.iter().map(|(e, c)| (e.clone(), f(c))))
    }
}

impl RatPoly {
    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, BigRational::one())
    }

    /// The variable `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::from_terms(nvars, [(e, BigRational::one())])
    }

    pub fn int(nvars: usize, k: i64) -> Self {
        Self::constant(nvars, BigRational::from_integer(k.into()))
    }
}

impl ScalarPoly {
    /// Whether every coefficient is rational.
    pub fn is_rational(&self) -> bool {
        self.terms.values().all(FieldScalar::is_rational)
    }
}

pub(crate) fn monomial_value(e: &[u32], x: &[i64]) -> BigInt {
    let mut m = BigInt::one();
    for (&k, &xi) in e.iter().zip(x) {
        if k > 0 {
            m *= BigInt::from(xi).pow(k);
        }
    }
    m
}

impl<C: Coeff> fmt::Display for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let names = var_names(self.nvars);
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mono: Vec<String> = e
                    .iter()
                    .zip(&names)
                    .filter(|(k, _)| **k > 0)
                    .map(|(k, n)| if *k == 1 { n.clone() } else { format!("{n}^{k}") })
                    .collect();
                if mono.is_empty() {
                    format!("{c}")
                } else {
                    format!("({c})*{}", mono.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

fn var_names(n: usize) -> Vec<String> {
    if n <= 3 {
        ["a", "b", "c"][..n].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=n).map(|i| format!("x{i}")).collect()
    }
}

/// Serialized polynomial term: exponents plus a coefficient string such as
/// `"3/4 + 2*sqrt2"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub exponents: Vec<u32>,
    pub coeff: FieldScalar,
}

impl ScalarPoly {
    pub fn to_spec(&self) -> Vec<TermSpec> {
        self.terms
            .iter()
            .map(|(e, c)| TermSpec {
                exponents: e.clone(),
                coeff: c.clone(),
            })
            .collect()
    }

    pub fn from_spec(nvars: usize, terms: &[TermSpec]) -> Result<Self, String> {
        let mut p = Self::zero(nvars);
        for t in terms {
            if t.exponents.len() != nvars {
                return Err(format!(
                    "term has {} exponents, expected {nvars}",
                    t.exponents.len()
                ));
            }
            p.add_term(t.exponents.clone(), t.coeff.clone());
        }
        Ok(p)
    }
}

/// `binom(x, k) = x (x-1) ... (x-k+1) / k!` for any integer `x`.
pub fn binomial(x: i64, k: u32) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k as i64 {
        num *= BigInt::from(x - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

/// `max |x^e|` over the box `prod [lo_j, hi_j)`, as a float.
pub(crate) fn monomial_bound(e: &[u32], ranges: &[(i64, i64)]) -> f64 {
    e.iter()
        .zip(ranges)
        .map(|(&k, &(lo, hi))| {
            let m = lo.unsigned_abs().max((hi - 1).unsigned_abs()) as f64;
            m.powi(k as i32)
        })
        .product()
}
