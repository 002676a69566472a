use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::compiled::CompiledPoly;
use super::poly::{RatPoly, ScalarPoly};
use super::table::{finite_difference_table, DifferenceTable};
use super::PolyError;
use crate::exact::{FieldScalar, Lattice};
use crate::phase::Phase;
use crate::source::{SourceElement, SourceGroup};
use crate::target::{Character, TargetElement, TargetGroup};

/// How a map is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyKind {
    /// Coefficient polynomials on `Z^d`.
    CoefficientPoly,
    /// Polynomial expressions in the Heisenberg coordinates `(a, b, c)`.
    CoordinateExpr,
    /// One value per element of a finite source.
    ValueTable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Body {
    /// One polynomial per target coordinate, torus coordinates first.
    Polys(Vec<ScalarPoly>),
    /// Values in the mixed-radix order of the source elements.
    Table(Vec<TargetElement>),
}

/// A map `P: Gamma -> G` given by polynomials or by a value table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolynomialMap {
    source: SourceGroup,
    target: TargetGroup,
    body: Body,
}

impl fmt::Display for PolynomialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            Body::Polys(ps) => {
                let parts: Vec<String> = ps.iter().map(ToString::to_string).collect();
                write!(f, "{} -> {}: ({})", self.source, self.target, parts.join(", "))
            }
            Body::Table(vs) => write!(f, "{} -> {}: table of {} values", self.source, self.target, vs.len()),
        }
    }
}

/// Certified degree of a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Degree {
    pub degree: u32,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    Exact,
    SampledCertificate { samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeOptions {
    pub d_max: u32,
    pub samples: usize,
    pub seed: u64,
}

impl Default for DegreeOptions {
    fn default() -> Self {
        Self {
            d_max: 8,
            samples: 200,
            seed: 0,
        }
    }
}

/// An iterated derivative `Delta_{g_k} ... Delta_{g_1} P (x)` that does not
/// vanish.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DerivativeWitness {
    pub gammas: Vec<SourceElement>,
    pub x: SourceElement,
    pub value: TargetElement,
}

impl fmt::Display for DerivativeWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gs: Vec<String> = self.gammas.iter().map(ToString::to_string).collect();
        write!(f, "gammas [{}] at x = {} give {}", gs.join(", "), self.x, self.value)
    }
}

/// Kernel elements found in a ball, each verified exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KernelReport {
    pub radius: i64,
    pub elements: Vec<SourceElement>,
    /// The subgroup generated by `elements`, for abelian sources (as a
    /// lattice in the coordinate lift; finite sources include modulus rows).
    pub lattice: Option<Lattice>,
    /// Elements outside the ball are never searched.
    pub lower_bound: bool,
}

impl PolynomialMap {
    /// A polynomial body for `Z^d` or Heisenberg sources. Cyclic coordinates
    /// must be rational and integer-valued.
    pub fn from_polys(source: SourceGroup, target: TargetGroup, polys: Vec<ScalarPoly>) -> Result<Self, PolyError> {
        if matches!(source, SourceGroup::FiniteAbelian { .. }) {
            return Err(PolyError::InvalidBody("finite sources take a value table".into()));
        }
        if polys.len() != target.dim() {
            return Err(PolyError::InvalidBody(format!(
                "{} coordinate polynomials for a target of dimension {}",
                polys.len(),
                target.dim()
            )));
        }
        for (i, p) in polys.iter().enumerate() {
            if p.nvars() != source.arity() {
                return Err(PolyError::InvalidBody(format!(
                    "coordinate {i} has {} variables, source {} has arity {}",
                    p.nvars(),
                    source,
                    source.arity()
                )));
            }
            for (_, c) in p.terms() {
                c.check_registry(target.registry())?;
            }
            if i >= target.torus_dim() {
                if !p.is_rational() {
                    return Err(PolyError::IrrationalInCyclic { coordinate: i });
                }
                let table = finite_difference_table(p);
                let bad = table.entries().find(|(_, c)| !c.is_integral()).map(|(k, c)| (k.clone(), c.to_string()));
                if let Some((exponents, coefficient)) = bad {
                    return Err(PolyError::NotIntegerValued {
                        coordinate: i,
                        exponents,
                        coefficient,
                    });
                }
            }
        }
        Ok(Self {
            source,
            target,
            body: Body::Polys(polys),
        })
    }

    /// A value table for a finite source, in mixed-radix element order.
    pub fn from_table(source: SourceGroup, target: TargetGroup, values: Vec<TargetElement>) -> Result<Self, PolyError> {
        let Some(order) = source.order() else {
            return Err(PolyError::InvalidBody("value tables need a finite source".into()));
        };
        if values.len() as u128 != order {
            return Err(PolyError::InvalidBody(format!(
                "{} values for a source of order {order}",
                values.len()
            )));
        }
        for v in &values {
            target.check(v)?;
        }
        Ok(Self {
            source,
            target,
            body: Body::Table(values),
        })
    }

    /// Tabulates `f` over a finite source.
    pub fn from_fn(
        source: SourceGroup,
        target: TargetGroup,
        f: impl Fn(&SourceElement) -> TargetElement,
    ) -> Result<Self, PolyError> {
        let elements = source
            .elements()
            .ok_or_else(|| PolyError::InvalidBody("value tables need a finite source".into()))?;
        let values = elements.iter().map(f).collect();
        Self::from_table(source, target, values)
    }

    pub fn constant(source: SourceGroup, target: TargetGroup, value: TargetElement) -> Result<Self, PolyError> {
        target.check(&value)?;
        match source.order() {
            Some(order) => {
                let values = vec![value; order as usize];
                Self::from_table(source, target, values)
            }
            None => {
                let n = source.arity();
                let polys = value
                    .torus
                    .iter()
                    .cloned()
                    .chain(value.cyclic.iter().map(|&c| FieldScalar::from_integer(c)))
                    .map(|c| ScalarPoly::constant(n, c))
                    .collect();
                Self::from_polys(source, target, polys)
            }
        }
    }

    pub fn source(&self) -> &SourceGroup {
        &self.source
    }

    pub fn target(&self) -> &TargetGroup {
        &self.target
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    pub fn kind(&self) -> BodyKind {
        match (&self.body, &self.source) {
            (Body::Table(_), _) => BodyKind::ValueTable,
            (Body::Polys(_), SourceGroup::Heisenberg3) => BodyKind::CoordinateExpr,
            (Body::Polys(_), _) => BodyKind::CoefficientPoly,
        }
    }

    pub fn polys(&self) -> Option<&[ScalarPoly]> {
        match &self.body {
            Body::Polys(ps) => Some(ps),
            Body::Table(_) => None,
        }
    }

    /// Exact value `P(g)`.
    pub fn evaluate(&self, g: &SourceElement) -> Result<TargetElement, PolyError> {
        self.source.check(g)?;
        let g = self.source.element(g.coords())?;
        self.evaluate_checked(&g)
    }

    pub(crate) fn evaluate_checked(&self, g: &SourceElement) -> Result<TargetElement, PolyError> {
        match &self.body {
            Body::Polys(ps) => {
                let t = self.target.torus_dim();
                let torus = ps[..t].iter().map(|p| p.eval_int(g.coords()).mod1()).collect();
                let mut cyclic = Vec::with_capacity(ps.len() - t);
                for (j, (p, &n)) in ps[t..].iter().zip(self.target.moduli()).enumerate() {
                    let v = p.eval_int(g.coords());
                    if !v.is_integral() {
                        return Err(PolyError::NonIntegralValue {
                            coordinate: t + j,
                            value: v.to_string(),
                        });
                    }
                    let r = v.rational_part().to_integer().mod_floor(&BigInt::from(n));
                    cyclic.push(r.to_u64().expect("reduced"));
                }
                Ok(TargetElement { torus, cyclic })
            }
            Body::Table(vs) => Ok(vs[self.source.index_of(g).expect("finite source")].clone()),
        }
    }

    /// Substitution polynomials for `x -> h x`.
    fn left_translation(&self, h: &SourceElement) -> Vec<RatPoly> {
        let n = self.source.arity();
        let hc = h.coords();
        let mut subs: Vec<RatPoly> = (0..n).map(|i| RatPoly::var(n, i).add(&RatPoly::int(n, hc[i]))).collect();
        if let SourceGroup::Heisenberg3 = self.source {
            // (h_a + a, h_b + b, h_c + c + h_a b)
            subs[2] = subs[2].add(&RatPoly::var(3, 1).scale(&BigRational::from_integer(hc[0].into())));
        }
        subs
    }

    /// Substitution polynomials for `x -> x h`.
    fn right_translation(&self, h: &SourceElement) -> Vec<RatPoly> {
        let n = self.source.arity();
        let hc = h.coords();
        let mut subs: Vec<RatPoly> = (0..n).map(|i| RatPoly::var(n, i).add(&RatPoly::int(n, hc[i]))).collect();
        if let SourceGroup::Heisenberg3 = self.source {
            // (a + h_a, b + h_b, c + h_c + a h_b)
            subs[2] = subs[2].add(&RatPoly::var(3, 0).scale(&BigRational::from_integer(hc[1].into())));
        }
        subs
    }

    fn substituted(&self, subs: &[RatPoly]) -> Vec<ScalarPoly> {
        self.polys().expect("polynomial body").iter().map(|p| p.substitute(subs)).collect()
    }

    fn table_map(&self, f: impl Fn(&SourceElement) -> TargetElement) -> Self {
        let values = self.source.elements().expect("finite source").iter().map(f).collect();
        Self {
            source: self.source.clone(),
            target: self.target.clone(),
            body: Body::Table(values),
        }
    }

    fn with_polys(&self, polys: Vec<ScalarPoly>) -> Self {
        Self {
            source: self.source.clone(),
            target: self.target.clone(),
            body: Body::Polys(polys),
        }
    }

    /// `Delta_g P (x) = P(g x) - P(x)`.
    pub fn discrete_derivative(&self, g: &SourceElement) -> Result<Self, PolyError> {
        let g = self.source.element(g.coords())?;
        Ok(match &self.body {
            Body::Polys(ps) => {
                let moved = self.substituted(&self.left_translation(&g));
                self.with_polys(moved.iter().zip(ps).map(|(a, b)| a.sub(b)).collect())
            }
            Body::Table(_) => self.table_map(|x| {
                let gx = self.source.compose_unchecked(&g, x);
                let a = self.evaluate_checked(&gx).expect("table");
                let b = self.evaluate_checked(x).expect("table");
                self.target.sub(&a, &b)
            }),
        })
    }

    /// `sigma_g P (x) = P(g^-1 x)`.
    pub fn shift(&self, g: &SourceElement) -> Result<Self, PolyError> {
        let g = self.source.element(g.coords())?;
        let g_inv = self.source.inverse_unchecked(&g);
        Ok(match &self.body {
            Body::Polys(_) => self.with_polys(self.substituted(&self.left_translation(&g_inv))),
            Body::Table(_) => self.table_map(|x| {
                self.evaluate_checked(&self.source.compose_unchecked(&g_inv, x)).expect("table")
            }),
        })
    }

    /// `x -> P(x t)`.
    pub fn right_translate(&self, t: &SourceElement) -> Result<Self, PolyError> {
        let t = self.source.element(t.coords())?;
        Ok(match &self.body {
            Body::Polys(_) => self.with_polys(self.substituted(&self.right_translation(&t))),
            Body::Table(_) => {
                self.table_map(|x| self.evaluate_checked(&self.source.compose_unchecked(x, &t)).expect("table"))
            }
        })
    }

    /// Pointwise difference `P - Q`.
    pub fn difference(&self, other: &Self) -> Result<Self, PolyError> {
        if self.source != other.source || self.target != other.target {
            return Err(PolyError::InvalidBody("maps have different source or target".into()));
        }
        Ok(match (&self.body, &other.body) {
            (Body::Polys(a), Body::Polys(b)) => self.with_polys(a.iter().zip(b).map(|(p, q)| p.sub(q)).collect()),
            _ => self.table_map(|x| {
                let a = self.evaluate_checked(x).expect("valid element");
                let b = other.evaluate_checked(x).expect("valid element");
                self.target.sub(&a, &b)
            }),
        })
    }

    /// Binomial-basis tables of the coordinate polynomials.
    pub fn coordinate_tables(&self) -> Option<Vec<DifferenceTable>> {
        self.polys().map(|ps| ps.iter().map(finite_difference_table).collect())
    }

    /// Whether `P` is identically zero in `G`, decided exactly: a polynomial
    /// vanishes mod 1 (resp. mod `n`) on integer points iff all its
    /// binomial-basis coefficients are integers (resp. multiples of `n`).
    pub fn is_zero_map(&self) -> bool {
        match &self.body {
            Body::Polys(ps) => {
                let t = self.target.torus_dim();
                ps.iter().enumerate().all(|(i, p)| {
                    let table = finite_difference_table(p);
                    if i < t {
                        table.entries().all(|(_, c)| c.is_integral())
                    } else {
                        let n = BigInt::from(self.target.moduli()[i - t]);
                        table
                            .entries()
                            .all(|(_, c)| c.is_integral() && c.rational_part().to_integer().is_multiple_of(&n))
                    }
                })
            }
            Body::Table(vs) => vs.iter().all(|v| *v == self.target.zero()),
        }
    }

    /// `P` and `Q` agree everywhere.
    pub fn equivalent(&self, other: &Self) -> Result<bool, PolyError> {
        Ok(self.difference(other)?.is_zero_map())
    }

    /// Degree of `P`: exact for polynomial bodies on `Z^d`, otherwise the
    /// least `d <= d_max` for which sampled `(d+1)`-fold derivatives vanish.
    pub fn degree(&self, opts: &DegreeOptions) -> Result<Degree, PolyError> {
        match (&self.body, &self.source) {
            (Body::Polys(_), SourceGroup::FreeAbelian { .. }) => self.exact_degree(opts),
            _ => self.sampled_degree(opts),
        }
    }

    fn exact_degree(&self, opts: &DegreeOptions) -> Result<Degree, PolyError> {
        let tables = self.coordinate_tables().expect("polynomial body");
        let t = self.target.torus_dim();
        let mut best: Option<(u32, usize, Vec<u32>)> = None;
        for (i, table) in tables.iter().enumerate() {
            for (k, c) in table.entries() {
                let order: u32 = k.iter().sum();
                if order == 0 {
                    continue;
                }
                let survives = if i < t {
                    !c.is_integral()
                } else {
                    let n = BigInt::from(self.target.moduli()[i - t]);
                    !c.rational_part().to_integer().is_multiple_of(&n)
                };
                if survives && best.as_ref().is_none_or(|(o, _, _)| order > *o) {
                    best = Some((order, i, k.clone()));
                }
            }
        }
        let degree = best.as_ref().map_or(0, |(o, _, _)| *o);
        if degree > opts.d_max {
            let (_, _, k) = best.expect("positive degree");
            let gammas: Vec<SourceElement> = k
                .iter()
                .enumerate()
                .flat_map(|(j, &kj)| {
                    let mut e = vec![0i64; k.len()];
                    e[j] = 1;
                    std::iter::repeat_n(SourceElement::from(e), kj as usize)
                })
                .collect();
            let x = self.source.identity();
            let value = self.iterated_derivative(&gammas, &x)?;
            return Err(PolyError::DegreeExceeded {
                d_max: opts.d_max,
                witness: Box::new(DerivativeWitness { gammas, x, value }),
            });
        }
        Ok(Degree {
            degree,
            certificate: Certificate::Exact,
        })
    }

    /// `Delta_{g_k} ... Delta_{g_1} P (x)`, by the recursion
    /// `D_k(x) = D_{k-1}(g_k x) - D_{k-1}(x)`.
    pub fn iterated_derivative(&self, gammas: &[SourceElement], x: &SourceElement) -> Result<TargetElement, PolyError> {
        for g in gammas {
            self.source.check(g)?;
        }
        self.source.check(x)?;
        Ok(self.iterated_rec(gammas, x))
    }

    fn iterated_rec(&self, gammas: &[SourceElement], x: &SourceElement) -> TargetElement {
        match gammas.split_last() {
            None => self.evaluate_checked(x).expect("validated body"),
            Some((g, rest)) => {
                let gx = self.source.compose_unchecked(g, x);
                let a = self.iterated_rec(rest, &gx);
                let b = self.iterated_rec(rest, x);
                self.target.sub(&a, &b)
            }
        }
    }

    fn random_element(&self, rng: &mut ChaCha8Rng, radius: i64) -> SourceElement {
        let coords: Vec<i64> = (0..self.source.arity()).map(|_| rng.random_range(-radius..=radius)).collect();
        self.source.element(&coords).expect("arity matches")
    }

    /// Sampled certificate: random `gamma`s and base points from the radius-3
    /// ball, fresh samples for each candidate degree.
    pub fn sampled_degree(&self, opts: &DegreeOptions) -> Result<Degree, PolyError> {
        let zero = self.target.zero();
        let mut last_witness = None;
        for d in 0..=opts.d_max {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(d as u64 + 1)));
            let mut witness = None;
            for _ in 0..opts.samples {
                let gammas: Vec<SourceElement> = (0..=d).map(|_| self.random_element(&mut rng, 3)).collect();
                let x = self.random_element(&mut rng, 3);
                let value = self.iterated_rec(&gammas, &x);
                if value != zero {
                    witness = Some(DerivativeWitness { gammas, x, value });
                    break;
                }
            }
            match witness {
                None => {
                    return Ok(Degree {
                        degree: d,
                        certificate: Certificate::SampledCertificate { samples: opts.samples },
                    })
                }
                Some(w) => last_witness = Some(w),
            }
        }
        Err(PolyError::DegreeExceeded {
            d_max: opts.d_max,
            witness: Box::new(last_witness.expect("at least one candidate degree")),
        })
    }

    /// Elements `gamma` of the radius ball with `Delta_gamma P = 0`, each
    /// decided exactly (binomial-basis test for polynomial bodies, exhaustive
    /// for tables).
    pub fn kernel_subgroup(&self, radius: i64) -> Result<KernelReport, PolyError> {
        let mut elements = Vec::new();
        for g in self.source.ball(radius) {
            if self.discrete_derivative(&g)?.is_zero_map() {
                elements.push(g);
            }
        }
        let lattice = match &self.source {
            SourceGroup::FreeAbelian { rank } => Some(Lattice::from_generators(*rank, lift(&elements))),
            SourceGroup::FiniteAbelian { moduli } => {
                let mut rows = lift(&elements);
                for (i, &m) in moduli.iter().enumerate() {
                    let mut r = vec![BigInt::zero(); moduli.len()];
                    r[i] = BigInt::from(m);
                    rows.push(r);
                }
                Some(Lattice::from_generators(moduli.len(), rows))
            }
            SourceGroup::Heisenberg3 => None,
        };
        Ok(KernelReport {
            radius,
            elements,
            lattice,
            lower_bound: true,
        })
    }

    /// The scalar polynomial `theta` with `chi(P(x)) = e^{2 pi i theta(x)}`.
    pub fn character_poly(&self, chi: &Character) -> Result<ScalarPoly, PolyError> {
        self.target.check_character(chi)?;
        let ps = self.polys().ok_or_else(|| PolyError::InvalidBody("value tables have no polynomial".into()))?;
        let t = self.target.torus_dim();
        let mut acc = ScalarPoly::zero(self.source.arity());
        for (p, &m) in ps[..t].iter().zip(&chi.torus) {
            if m != 0 {
                acc = acc.add(&p.scale(&BigRational::from_integer(m.into())));
            }
        }
        for ((p, &k), &n) in ps[t..].iter().zip(&chi.cyclic).zip(self.target.moduli()) {
            if k != 0 {
                acc = acc.add(&p.scale(&BigRational::new(k.into(), n.into())));
            }
        }
        Ok(acc)
    }

    /// Fixed-point evaluator of `x -> chi(P(x))` as a turn, checked to be
    /// accurate to `10^-precision` over the box `ranges`.
    pub fn phase_evaluator(
        &self,
        chi: &Character,
        ranges: &[(i64, i64)],
        precision: u32,
    ) -> Result<PhaseEvaluator, PolyError> {
        match &self.body {
            Body::Polys(_) => {
                let theta = self.character_poly(chi)?;
                CompiledPoly::check_accuracy(&theta, self.target.registry(), ranges, precision)?;
                Ok(PhaseEvaluator::Poly(CompiledPoly::compile(&theta, self.target.registry())?))
            }
            Body::Table(vs) => {
                self.target.check_character(chi)?;
                let phases = vs
                    .iter()
                    .map(|v| Phase::from_scalar(&self.target.phase(chi, v).mod1(), self.target.registry()))
                    .collect::<Result<_, _>>()?;
                Ok(PhaseEvaluator::Table {
                    source: self.source.clone(),
                    phases,
                })
            }
        }
    }

    /// One evaluator per target coordinate: torus coordinates as turns and
    /// cyclic coordinates `x_i` as `x_i / n_i`.
    pub fn coordinate_evaluators(&self, ranges: &[(i64, i64)], precision: u32) -> Result<Vec<PhaseEvaluator>, PolyError> {
        let t = self.target.torus_dim();
        (0..self.target.dim())
            .map(|i| {
                let mut chi = Character::trivial(&self.target);
                if i < t {
                    chi.torus[i] = 1;
                } else {
                    chi.cyclic[i - t] = 1;
                }
                self.phase_evaluator(&chi, ranges, precision)
            })
            .collect()
    }
}

fn lift(elements: &[SourceElement]) -> Vec<Vec<BigInt>> {
    elements.iter().map(|g| g.coords().iter().map(|&c| BigInt::from(c)).collect()).collect()
}

/// Turn-valued evaluator of `chi o P`.
#[derive(Debug, Clone)]
pub enum PhaseEvaluator {
    Poly(CompiledPoly),
    Table { source: SourceGroup, phases: Vec<Phase> },
}

impl PhaseEvaluator {
    #[inline]
    pub fn phase(&self, x: &SourceElement) -> Phase {
        match self {
            Self::Poly(p) => p.eval(x.coords()),
            Self::Table { source, phases } => phases[source.index_of(x).expect("finite source")],
        }
    }
}

/// `max - min` of an integer-valued polynomial on `[-radius, radius]`.
pub fn value_spread(p: &ScalarPoly, radius: i64) -> Result<BigInt, PolyError> {
    if p.nvars() != 1 || !p.is_rational() {
        return Err(PolyError::InvalidBody("value spread needs a rational polynomial in one variable".into()));
    }
    let mut lo: Option<BigInt> = None;
    let mut hi: Option<BigInt> = None;
    for x in -radius..=radius {
        let v = p.eval_int(&[x]);
        if !v.is_integral() {
            return Err(PolyError::NonIntegralValue {
                coordinate: 0,
                value: v.to_string(),
            });
        }
        let v = v.rational_part().to_integer();
        if lo.as_ref().is_none_or(|l| &v < l) {
            lo = Some(v.clone());
        }
        if hi.as_ref().is_none_or(|h| &v > h) {
            hi = Some(v);
        }
    }
    Ok(hi.unwrap_or_default() - lo.unwrap_or_default())
}
