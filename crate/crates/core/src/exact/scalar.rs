use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::AlgebraError;

/// Registry literals must carry at least this many significant digits.
pub const MIN_SIGNIFICANT_DIGITS: u32 = 50;

/// A named irrational with a high-precision decimal literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Irrational {
    name: String,
    decimal: String,
    value: BigRational,
    fraction_digits: u32,
}

impl Irrational {
    pub fn new(name: &str, decimal: &str) -> Result<Self, AlgebraError> {
        let invalid = |reason: &str| AlgebraError::InvalidIrrational {
            name: name.to_string(),
            reason: reason.to_string(),
        };
        if !is_identifier(name) {
            return Err(invalid("name must be an identifier"));
        }
        let decimal = decimal.trim();
        let (int_part, frac_part) = decimal.split_once('.').unwrap_or((decimal, ""));
        if int_part.is_empty()
            || !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(invalid("literal must be a plain positive decimal"));
        }
        let significant = format!("{int_part}{frac_part}")
            .trim_start_matches('0')
            .len() as u32;
        if significant < MIN_SIGNIFICANT_DIGITS {
            return Err(invalid(&format!(
                "literal has {significant} significant digits, need {MIN_SIGNIFICANT_DIGITS}"
            )));
        }
        let value = parse_decimal(decimal).ok_or_else(|| invalid("unparsable literal"))?;
        if value.is_zero() || value.is_one() {
            return Err(invalid("value must be nonzero and different from 1"));
        }
        Ok(Self {
            name: name.to_string(),
            decimal: decimal.to_string(),
            value,
            fraction_digits: frac_part.len() as u32,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn decimal(&self) -> &str {
        &self.decimal
    }

    /// The literal as an exact rational.
    pub fn literal(&self) -> &BigRational {
        &self.value
    }

    /// Absolute precision of the literal in decimal places.
    pub fn fraction_digits(&self) -> u32 {
        self.fraction_digits
    }
}

/// The declared irrationals. Each is treated as a basis element that is
/// linearly independent from 1 and from the others over the rationals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IrrationalRegistry {
    entries: Vec<Irrational>,
}

impl IrrationalRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_entries<'a>(
        entries: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, AlgebraError> {
        let mut reg = Self::new();
        for (name, decimal) in entries {
            reg.declare(name, decimal)?;
        }
        Ok(reg)
    }

    pub fn declare(&mut self, name: &str, decimal: &str) -> Result<(), AlgebraError> {
        if self.get(name).is_some() {
            return Err(AlgebraError::DuplicateIrrational(name.to_string()));
        }
        self.entries.push(Irrational::new(name, decimal)?);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Irrational> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn entries(&self) -> &[Irrational] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub(crate) fn lookup(&self, name: &str) -> Result<&Irrational, AlgebraError> {
        self.get(name)
            .ok_or_else(|| AlgebraError::UnknownIrrational(name.to_string()))
    }
}

/// An exact number `q0 + sum_k q_k * alpha_k` with rational `q`s over the
/// irrationals `alpha_k` of a registry. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldScalar {
    rational: BigRational,
    irrational: BTreeMap<String, BigRational>,
}

impl Default for FieldScalar {
    fn default() -> Self {
        Self::zero()
    }
}

impl FieldScalar {
    pub fn zero() -> Self {
        Self {
            rational: BigRational::zero(),
            irrational: BTreeMap::new(),
        }
    }

    pub fn from_rational(q: BigRational) -> Self {
        Self {
            rational: q,
            irrational: BTreeMap::new(),
        }
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Self::from_rational(BigRational::from_integer(n.into()))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::from_rational(BigRational::new(num.into(), den.into()))
    }

    /// `coeff * name`.
    pub fn irrational(name: &str, coeff: BigRational) -> Self {
        let mut s = Self::zero();
        if !coeff.is_zero() {
            s.irrational.insert(name.to_string(), coeff);
        }
        s
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.irrational.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.irrational.is_empty()
    }

    /// True iff the value is an integer (so it vanishes in the circle group).
    pub fn is_integral(&self) -> bool {
        self.irrational.is_empty() && self.rational.is_integer()
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.rational
    }

    pub fn irrational_parts(&self) -> &BTreeMap<String, BigRational> {
        &self.irrational
    }

    pub fn irrational_coeff(&self, name: &str) -> BigRational {
        self.irrational.get(name).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        Self {
            rational: &self.rational * q,
            irrational: self
                .irrational
                .iter()
                .map(|(k, v)| (k.clone(), v * q))
                .collect(),
        }
    }

    pub fn scale_int(&self, n: &BigInt) -> Self {
        self.scale(&BigRational::from_integer(n.clone()))
    }

    /// Reduces the rational part into `[0, 1)`; irrational coefficients are
    /// left untouched.
    pub fn mod1(&self) -> Self {
        let floor = self.rational.floor();
        Self {
            rational: &self.rational - floor,
            irrational: self.irrational.clone(),
        }
    }

    /// Fails if any irrational is not declared in `registry`.
    pub fn check_registry(&self, registry: &IrrationalRegistry) -> Result<(), AlgebraError> {
        for name in self.irrational.keys() {
            registry.lookup(name)?;
        }
        Ok(())
    }

    /// The value with every irrational replaced by its registry literal.
    pub fn approximate(&self, registry: &IrrationalRegistry) -> Result<BigRational, AlgebraError> {
        let mut acc = self.rational.clone();
        for (name, q) in &self.irrational {
            acc += q * registry.lookup(name)?.literal();
        }
        Ok(acc)
    }

    /// Decimal places for which [`Self::numeric_eval`] is trustworthy.
    pub fn available_precision(&self, registry: &IrrationalRegistry) -> Result<u32, AlgebraError> {
        let mut digits = u32::MAX;
        let mut weight = BigRational::zero();
        for (name, q) in &self.irrational {
            digits = digits.min(registry.lookup(name)?.fraction_digits());
            weight += q.abs();
        }
        if digits == u32::MAX {
            return Ok(u32::MAX);
        }
        // the literal error is scaled by sum |q_k|
        let magnitude = weight.ceil().to_integer().to_string().len() as u32;
        Ok(digits.saturating_sub(magnitude))
    }

    /// Evaluates to `digits` decimal places.
    pub fn numeric_eval(
        &self,
        registry: &IrrationalRegistry,
        digits: u32,
    ) -> Result<HighPrecision, AlgebraError> {
        let available = self.available_precision(registry)?;
        if digits > available {
            return Err(AlgebraError::PrecisionExceeded {
                requested: digits,
                available,
            });
        }
        let value = self.approximate(registry)?;
        Ok(HighPrecision::round(&value, digits))
    }

    /// Fractional part of the value, evaluated to `digits` decimal places.
    pub fn numeric_frac(
        &self,
        registry: &IrrationalRegistry,
        digits: u32,
    ) -> Result<HighPrecision, AlgebraError> {
        let v = self.numeric_eval(registry, digits)?;
        let unit = BigInt::from(10u32).pow(digits);
        Ok(HighPrecision {
            scaled: v.scaled.mod_floor(&unit),
            digits,
        })
    }

    fn prune(mut self) -> Self {
        self.irrational.retain(|_, v| !v.is_zero());
        self
    }
}

impl Add for &FieldScalar {
    type Output = FieldScalar;
    fn add(self, rhs: &FieldScalar) -> FieldScalar {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &FieldScalar {
    type Output = FieldScalar;
    fn sub(self, rhs: &FieldScalar) -> FieldScalar {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Add for FieldScalar {
    type Output = FieldScalar;
    fn add(mut self, rhs: FieldScalar) -> FieldScalar {
        self += &rhs;
        self
    }
}

impl Sub for FieldScalar {
    type Output = FieldScalar;
    fn sub(mut self, rhs: FieldScalar) -> FieldScalar {
        self -= &rhs;
        self
    }
}

impl AddAssign<&FieldScalar> for FieldScalar {
    fn add_assign(&mut self, rhs: &FieldScalar) {
        self.rational += &rhs.rational;
        for (k, v) in &rhs.irrational {
            let e = self.irrational.entry(k.clone()).or_insert_with(BigRational::zero);
            *e += v;
        }
        self.irrational.retain(|_, v| !v.is_zero());
    }
}

impl SubAssign<&FieldScalar> for FieldScalar {
    fn sub_assign(&mut self, rhs: &FieldScalar) {
        self.rational -= &rhs.rational;
        for (k, v) in &rhs.irrational {
            let e = self.irrational.entry(k.clone()).or_insert_with(BigRational::zero);
            *e -= v;
        }
        self.irrational.retain(|_, v| !v.is_zero());
    }
}

impl Neg for &FieldScalar {
    type Output = FieldScalar;
    fn neg(self) -> FieldScalar {
        FieldScalar {
            rational: -&self.rational,
            irrational: self.irrational.iter().map(|(k, v)| (k.clone(), -v)).collect(),
        }
    }
}

impl Neg for FieldScalar {
    type Output = FieldScalar;
    fn neg(self) -> FieldScalar {
        -&self
    }
}

impl fmt::Display for FieldScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<String> = Vec::new();
        if !self.rational.is_zero() {
            terms.push(self.rational.to_string());
        }
        for (name, q) in &self.irrational {
            terms.push(if q.is_one() {
                name.clone()
            } else if (-q).is_one() {
                format!("-{name}")
            } else {
                format!("{q}*{name}")
            });
        }
        if terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in terms.iter().enumerate() {
            match (i, t.strip_prefix('-')) {
                (0, _) => f.write_str(t)?,
                (_, Some(rest)) => write!(f, " - {rest}")?,
                (_, None) => write!(f, " + {t}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for FieldScalar {
    type Err = AlgebraError;

    /// Accepts sums such as `"3/4 + 2*sqrt2"`, `"-1/3*alpha"`, `"0.25"`.
    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| AlgebraError::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let compact: String = input.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(err("empty expression"));
        }
        let mut out = FieldScalar::zero();
        let bytes = compact.as_bytes();
        let mut start = 0;
        let mut i = 0;
        while i <= bytes.len() {
            let at_split = i == bytes.len()
                || (i > start && (bytes[i] == b'+' || bytes[i] == b'-')
                    && !matches!(bytes[i - 1], b'*' | b'/' | b'+' | b'-'));
            if at_split {
                let term = &compact[start..i];
                out += &parse_term(term).map_err(|r| err(&r))?;
                start = i;
            }
            i += 1;
        }
        Ok(out.prune())
    }
}

fn parse_term(term: &str) -> Result<FieldScalar, String> {
    let (sign, body) = match term.as_bytes().first() {
        Some(b'+') => (BigRational::one(), &term[1..]),
        Some(b'-') => (-BigRational::one(), &term[1..]),
        _ => (BigRational::one(), term),
    };
    if body.is_empty() {
        return Err("dangling sign".into());
    }
    let scalar = match body.split_once('*') {
        Some((lhs, rhs)) => {
            let (coeff, name) = if is_identifier(rhs) {
                (lhs, rhs)
            } else if is_identifier(lhs) {
                (rhs, lhs)
            } else {
                return Err(format!("term {body:?} is not coefficient*name"));
            };
            FieldScalar::irrational(name, parse_rational(coeff)?)
        }
        None if is_identifier(body) => FieldScalar::irrational(body, BigRational::one()),
        None => FieldScalar::from_rational(parse_rational(body)?),
    };
    Ok(scalar.scale(&sign))
}

/// Parses `"a"`, `"a/b"` or a plain decimal `"a.b"` exactly.
pub(crate) fn parse_rational(s: &str) -> Result<BigRational, String> {
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.parse().map_err(|_| format!("bad numerator {num:?}"))?;
        let den: BigInt = den.parse().map_err(|_| format!("bad denominator {den:?}"))?;
        if den.is_zero() {
            return Err("division by zero".into());
        }
        return Ok(BigRational::new(num, den));
    }
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let q = parse_decimal(digits).ok_or_else(|| format!("bad number {s:?}"))?;
    Ok(if neg { -q } else { q })
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    Some(BigRational::new(digits, den))
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Serialize for FieldScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FieldScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A fixed-point decimal `scaled / 10^digits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HighPrecision {
    scaled: BigInt,
    digits: u32,
}

impl HighPrecision {
    /// Rounds `value` to the nearest multiple of `10^-digits`.
    pub fn round(value: &BigRational, digits: u32) -> Self {
        let unit = BigInt::from(10u32).pow(digits);
        let scaled = (value * BigRational::from_integer(unit)).round().to_integer();
        Self { scaled, digits }
    }

    pub fn scaled(&self) -> &BigInt {
        &self.scaled
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.scaled.clone(), BigInt::from(10u32).pow(self.digits))
    }

    pub fn to_f64(&self) -> f64 {
        self.to_rational().to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for HighPrecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let neg = self.scaled.is_negative();
        let digits = self.scaled.abs().to_string();
        let width = self.digits as usize + 1;
        let padded = format!("{digits:0>width$}");
        let (int_part, frac_part) = padded.split_at(padded.len() - self.digits as usize);
        if neg {
            f.write_str("-")?;
        }
        if frac_part.is_empty() {
            f.write_str(int_part)
        } else {
            write!(f, "{int_part}.{frac_part}")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SQRT2: &str =
        "1.414213562373095048801688724209698078569671875376948073176679737990732";

    fn registry() -> IrrationalRegistry {
        IrrationalRegistry::with_entries([("sqrt2", SQRT2)]).unwrap()
    }

    #[test]
    fn mod1_touches_only_rational_part() {
        let x: FieldScalar = "1/2 + sqrt2".parse().unwrap();
        assert_eq!(x.mod1(), x);
        let y: FieldScalar = "3/2".parse().unwrap();
        assert_eq!(y.mod1(), FieldScalar::ratio(1, 2));
        let z: FieldScalar = "-1/4 + 3*sqrt2".parse().unwrap();
        assert_eq!(z.mod1(), "3/4 + 3*sqrt2".parse().unwrap());
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["0", "3/4", "3/4 + 2*sqrt2", "-1/3*alpha", "sqrt2 - 1/2*beta", "-sqrt2"] {
            let x: FieldScalar = s.parse().unwrap();
            assert_eq!(x.to_string().parse::<FieldScalar>().unwrap(), x, "{s}");
        }
        let x: FieldScalar = "0.25 + sqrt2*2".parse().unwrap();
        assert_eq!(x.to_string(), "1/4 + 2*sqrt2");
        assert_eq!("1 - 1".parse::<FieldScalar>().unwrap(), FieldScalar::zero());
    }

    #[test]
    fn parse_rejects_garbage() {
        for s in ["1/0", "", "3/4 +", "2*3", "sqrt2*alpha", "1..2", "x/2"] {
            assert!(s.parse::<FieldScalar>().is_err(), "{s:?} should be rejected");
        }
    }

    #[test]
    fn registry_validation() {
        assert!(IrrationalRegistry::with_entries([("short", "1.4142")]).is_err());
        let one = format!("1.{}", "0".repeat(60));
        assert!(IrrationalRegistry::with_entries([("one", one.as_str())]).is_err());
        assert!(IrrationalRegistry::with_entries([("a", SQRT2), ("a", SQRT2)]).is_err());
        assert!(registry().get("sqrt2").is_some());
    }

    #[test]
    fn numeric_eval_of_nine_sqrt2_mod_one() {
        // independent mpmath evaluation: frac(9*sqrt(2))
        let oracle = parse_decimal("0.727922061357855439215198517887282707127046878").unwrap();
        let x = FieldScalar::irrational("sqrt2", BigRational::from_integer(9.into())).mod1();
        let v = x.numeric_frac(&registry(), 30).unwrap();
        let err = (v.to_rational() - oracle).abs();
        assert!(err < BigRational::new(1.into(), BigInt::from(10u32).pow(25)));
        assert_eq!(v.to_string(), "0.727922061357855439215198517887");
    }

    #[test]
    fn numeric_eval_rejects_excess_precision() {
        let x = FieldScalar::irrational("sqrt2", BigRational::one());
        assert!(matches!(
            x.numeric_eval(&registry(), 80),
            Err(AlgebraError::PrecisionExceeded { .. })
        ));
        assert!(matches!(
            FieldScalar::irrational("pi", BigRational::one()).numeric_eval(&registry(), 5),
            Err(AlgebraError::UnknownIrrational(_))
        ));
    }
}
