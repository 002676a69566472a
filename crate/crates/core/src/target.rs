//! Compact abelian targets `G = T^d x Z/n1 x ... x Z/nk`.
//!
//! A closed subgroup `H` is stored through its annihilator
//! `Ann(H) = { chi : chi(H) = 1 }`, a lattice in the integer model
//! `Z^d x Z^k` of the dual group (cyclic frequencies lifted to `Z`, so the
//! annihilator always contains the modulus rows `n_i e_i`). Equality,
//! membership and structure of subgroups then reduce to integer linear
//! algebra.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::exact::{integer_kernel, smith_normal_form, AlgebraError, Condition, FieldScalar, IrrationalRegistry, Lattice};
use crate::phase::Phase;

/// Largest subgroup that [`ClosedSubgroup::elements`] will list.
pub const ENUMERATION_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TargetError {
    #[error("target group needs at least one coordinate")]
    EmptyGroup,
    #[error("cyclic modulus {0} is below 2")]
    BadModulus(u64),
    #[error("arity mismatch: expected {expected} coordinates, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("elements belong to different target groups")]
    GroupMismatch,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("subgroup of order {order} is too large to enumerate")]
    TooLarge { order: String },
}

/// `T^torus_dim x prod Z/n_i` with the registry its coordinates live over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetGroup {
    torus_dim: usize,
    moduli: Vec<u64>,
    registry: Arc<IrrationalRegistry>,
}

impl fmt::Display for TargetGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.torus_dim > 0 {
            parts.push(format!("T^{}", self.torus_dim));
        }
        parts.extend(self.moduli.iter().map(|m| format!("Z/{m}")));
        write!(f, "{}", parts.join(" x "))
    }
}

impl TargetGroup {
    pub fn new(torus_dim: usize, moduli: Vec<u64>, registry: Arc<IrrationalRegistry>) -> Result<Self, TargetError> {
        if torus_dim + moduli.len() == 0 {
            return Err(TargetError::EmptyGroup);
        }
        if let Some(&m) = moduli.iter().find(|&&m| m < 2) {
            return Err(TargetError::BadModulus(m));
        }
        Ok(Self {
            torus_dim,
            moduli,
            registry,
        })
    }

    pub fn torus(dim: usize, registry: Arc<IrrationalRegistry>) -> Result<Self, TargetError> {
        Self::new(dim, Vec::new(), registry)
    }

    pub fn cyclic(moduli: Vec<u64>) -> Result<Self, TargetError> {
        Self::new(0, moduli, Arc::default())
    }

    pub fn torus_dim(&self) -> usize {
        self.torus_dim
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn registry(&self) -> &Arc<IrrationalRegistry> {
        &self.registry
    }

    /// Torus plus cyclic coordinate count.
    pub fn dim(&self) -> usize {
        self.torus_dim + self.moduli.len()
    }

    pub fn is_finite(&self) -> bool {
        self.torus_dim == 0
    }

    /// `G^k`, ordered block by block: torus coordinates of every copy first,
    /// then the cyclic coordinates of every copy.
    pub fn power(&self, k: usize) -> Result<Self, TargetError> {
        let moduli = (0..k).flat_map(|_| self.moduli.iter().copied()).collect();
        Self::new(self.torus_dim * k, moduli, self.registry.clone())
    }

    pub fn zero(&self) -> TargetElement {
        TargetElement {
            torus: vec![FieldScalar::zero(); self.torus_dim],
            cyclic: vec![0; self.moduli.len()],
        }
    }

    /// Canonicalizes torus coordinates mod 1 and cyclic coordinates mod `n_i`.
    pub fn element(&self, torus: Vec<FieldScalar>, cyclic: Vec<BigInt>) -> Result<TargetElement, TargetError> {
        if torus.len() != self.torus_dim || cyclic.len() != self.moduli.len() {
            return Err(TargetError::Arity {
                expected: self.dim(),
                found: torus.len() + cyclic.len(),
            });
        }
        for t in &torus {
            t.check_registry(&self.registry)?;
        }
        Ok(TargetElement {
            torus: torus.iter().map(FieldScalar::mod1).collect(),
            cyclic: cyclic
                .iter()
                .zip(&self.moduli)
                .map(|(c, &m)| c.mod_floor(&BigInt::from(m)).to_u64().expect("reduced"))
                .collect(),
        })
    }

    pub fn check(&self, x: &TargetElement) -> Result<(), TargetError> {
        if x.torus.len() != self.torus_dim || x.cyclic.len() != self.moduli.len() {
            return Err(TargetError::Arity {
                expected: self.dim(),
                found: x.torus.len() + x.cyclic.len(),
            });
        }
        Ok(())
    }

    pub fn check_character(&self, chi: &Character) -> Result<(), TargetError> {
        if chi.torus.len() != self.torus_dim || chi.cyclic.len() != self.moduli.len() {
            return Err(TargetError::Arity {
                expected: self.dim(),
                found: chi.torus.len() + chi.cyclic.len(),
            });
        }
        Ok(())
    }

    pub fn add(&self, x: &TargetElement, y: &TargetElement) -> TargetElement {
        TargetElement {
            torus: x.torus.iter().zip(&y.torus).map(|(a, b)| (a + b).mod1()).collect(),
            cyclic: x
                .cyclic
                .iter()
                .zip(&y.cyclic)
                .zip(&self.moduli)
                .map(|((a, b), &m)| ((*a as u128 + *b as u128) % m as u128) as u64)
                .collect(),
        }
    }

    pub fn neg(&self, x: &TargetElement) -> TargetElement {
        TargetElement {
            torus: x.torus.iter().map(|a| (-a).mod1()).collect(),
            cyclic: x.cyclic.iter().zip(&self.moduli).map(|(a, &m)| (m - a) % m).collect(),
        }
    }

    pub fn sub(&self, x: &TargetElement, y: &TargetElement) -> TargetElement {
        self.add(x, &self.neg(y))
    }

    /// Exact phase `m . x_torus + sum k_i x_i / n_i` of `chi(x)`.
    pub fn phase(&self, chi: &Character, x: &TargetElement) -> FieldScalar {
        let mut acc = FieldScalar::zero();
        for (m, t) in chi.torus.iter().zip(&x.torus) {
            if *m != 0 {
                acc += &t.scale_int(&BigInt::from(*m));
            }
        }
        let mut cyc = BigRational::zero();
        for ((k, c), &n) in chi.cyclic.iter().zip(&x.cyclic).zip(&self.moduli) {
            cyc += BigRational::new(BigInt::from(*k) * BigInt::from(*c), BigInt::from(n));
        }
        acc += &FieldScalar::from_rational(cyc);
        acc
    }

    /// `chi(x) = e^{2 pi i theta}`. Fails unless the registry literals pin
    /// `theta` down to `precision` digits; the exact phase is reduced mod 1
    /// before rounding to a float.
    pub fn char_eval<T: Float + FloatConst>(
        &self,
        chi: &Character,
        x: &TargetElement,
        precision: u32,
    ) -> Result<Complex<T>, TargetError> {
        self.check_character(chi)?;
        self.check(x)?;
        let theta = self.phase(chi, x);
        let available = theta.available_precision(&self.registry)?;
        if precision > available {
            return Err(AlgebraError::PrecisionExceeded {
                requested: precision,
                available,
            }
            .into());
        }
        Ok(Phase::from_scalar(&theta, &self.registry)?.to_unit())
    }

    /// Characters with max-norm at most `cutoff`, by increasing norm. Cyclic
    /// frequencies are measured through their representative in
    /// `(-n/2, n/2]`.
    pub fn characters_up_to(&self, cutoff: u32) -> Vec<Character> {
        let c = cutoff as i64;
        let mut axes: Vec<Vec<i64>> = vec![(-c..=c).collect(); self.torus_dim];
        for &n in &self.moduli {
            let n = n as i64;
            let mut reps: Vec<i64> = (0..n).map(|k| if 2 * k > n { k - n } else { k }).filter(|r| r.abs() <= c).collect();
            reps.sort();
            axes.push(reps);
        }
        let mut out: Vec<(i64, Vec<i64>)> = Vec::new();
        let total: usize = axes.iter().map(Vec::len).product();
        for mut idx in 0..total {
            let mut v = vec![0i64; axes.len()];
            for (k, axis) in axes.iter().enumerate().rev() {
                v[k] = axis[idx % axis.len()];
                idx /= axis.len();
            }
            let norm = v.iter().map(|x| x.abs()).max().unwrap_or(0);
            out.push((norm, v));
        }
        out.sort();
        out.into_iter()
            .map(|(_, v)| Character {
                torus: v[..self.torus_dim].to_vec(),
                cyclic: v[self.torus_dim..]
                    .iter()
                    .zip(&self.moduli)
                    .map(|(r, &n)| r.rem_euclid(n as i64))
                    .collect(),
            })
            .collect()
    }

    /// Number of characters [`Self::characters_up_to`] would list.
    pub fn character_count(&self, cutoff: u32) -> u128 {
        let side = 2 * cutoff as u128 + 1;
        let torus = (0..self.torus_dim).fold(1u128, |acc, _| acc.saturating_mul(side));
        self.moduli
            .iter()
            .fold(torus, |acc, &n| acc.saturating_mul(side.min(n as u128)))
    }

    /// The annihilator of `{0}`: every character.
    fn full_dual(&self) -> Lattice {
        Lattice::full(self.dim())
    }

    /// The annihilator of `G`: the modulus relations.
    fn modulus_rows(&self) -> Lattice {
        let d = self.dim();
        let rows = self
            .moduli
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let mut r = vec![BigInt::zero(); d];
                r[self.torus_dim + i] = BigInt::from(n);
                r
            })
            .collect();
        Lattice::from_generators(d, rows)
    }

    /// Linear conditions on `chi` (as a lifted integer vector) for `chi(s) = 1`:
    /// the rational part of the phase must be an integer and every irrational
    /// coefficient must vanish.
    fn annihilation_conditions(&self, rows: &[Vec<BigInt>], s: &TargetElement) -> Vec<Condition> {
        let phases: Vec<FieldScalar> = rows.iter().map(|r| self.phase(&Character::from_lifted(self, r), s)).collect();
        let mut names: Vec<&String> = phases.iter().flat_map(|p| p.irrational_parts().keys()).collect();
        names.sort();
        names.dedup();
        let mut conds = vec![Condition::congruence(phases.iter().map(|p| p.rational_part().clone()).collect())];
        for name in names {
            conds.push(Condition::equality(phases.iter().map(|p| p.irrational_coeff(name)).collect()));
        }
        conds
    }

    /// The closure of the subgroup generated by `generators`.
    ///
    /// A character annihilates the closure iff `chi(s) = 1` for every
    /// generator, i.e. every exact phase has zero irrational part and integral
    /// rational part. The annihilator is refined one generator at a time;
    /// generators already in the current subgroup are skipped.
    pub fn closed_subgroup_from_generators(&self, generators: &[TargetElement]) -> Result<ClosedSubgroup, TargetError> {
        let mut h = ClosedSubgroup {
            group: self.clone(),
            annihilator: self.full_dual(),
        };
        for s in generators {
            self.check(s)?;
            for t in &s.torus {
                t.check_registry(&self.registry)?;
            }
            h.absorb(s);
        }
        Ok(h)
    }

    /// Same subgroup as [`Self::closed_subgroup_from_generators`], from a single
    /// integer-kernel solve over all generators at once.
    pub fn closed_subgroup_one_shot(&self, generators: &[TargetElement]) -> Result<ClosedSubgroup, TargetError> {
        let unit: Vec<Vec<BigInt>> = Lattice::full(self.dim()).basis().to_vec();
        let mut conds = Vec::new();
        for s in generators {
            self.check(s)?;
            conds.extend(self.annihilation_conditions(&unit, s));
        }
        Ok(ClosedSubgroup {
            group: self.clone(),
            annihilator: integer_kernel(self.dim(), &conds),
        })
    }

    pub fn whole(&self) -> ClosedSubgroup {
        ClosedSubgroup {
            group: self.clone(),
            annihilator: self.modulus_rows(),
        }
    }

    pub fn trivial(&self) -> ClosedSubgroup {
        ClosedSubgroup {
            group: self.clone(),
            annihilator: self.full_dual(),
        }
    }

    /// Builds the subgroup annihilated by the given lifted characters.
    pub fn subgroup_from_annihilator(&self, rows: Vec<Vec<BigInt>>) -> Result<ClosedSubgroup, TargetError> {
        if let Some(r) = rows.iter().find(|r| r.len() != self.dim()) {
            return Err(TargetError::Arity {
                expected: self.dim(),
                found: r.len(),
            });
        }
        let mut all = rows;
        all.extend(self.modulus_rows().basis().iter().cloned());
        Ok(ClosedSubgroup {
            group: self.clone(),
            annihilator: Lattice::from_generators(self.dim(), all),
        })
    }

    /// Converts a vector `y` of turns (cyclic slots as `x_i / n_i`) into a
    /// canonical element.
    fn element_from_turns(&self, y: &[BigRational]) -> TargetElement {
        let torus = y[..self.torus_dim]
            .iter()
            .map(|t| FieldScalar::from_rational(t.clone()).mod1())
            .collect();
        let cyclic = y[self.torus_dim..]
            .iter()
            .zip(&self.moduli)
            .map(|(t, &n)| {
                let v = t * BigRational::from_integer(BigInt::from(n));
                debug_assert!(v.is_integer());
                v.to_integer().mod_floor(&BigInt::from(n)).to_u64().expect("reduced")
            })
            .collect();
        TargetElement { torus, cyclic }
    }
}

/// A canonical element of a [`TargetGroup`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TargetElement {
    pub torus: Vec<FieldScalar>,
    pub cyclic: Vec<u64>,
}

impl fmt::Display for TargetElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .torus
            .iter()
            .map(ToString::to_string)
            .chain(self.cyclic.iter().map(ToString::to_string))
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// A character `x -> e^{2 pi i (m . x_torus + sum k_i x_i / n_i)}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Character {
    pub torus: Vec<i64>,
    /// Frequencies reduced into `[0, n_i)`.
    pub cyclic: Vec<i64>,
}

impl Character {
    pub fn new(group: &TargetGroup, torus: Vec<i64>, cyclic: Vec<i64>) -> Result<Self, TargetError> {
        let chi = Self {
            torus,
            cyclic: cyclic
                .iter()
                .zip(&group.moduli)
                .map(|(k, &n)| k.rem_euclid(n as i64))
                .collect(),
        };
        if cyclic.len() != group.moduli.len() {
            return Err(TargetError::Arity {
                expected: group.dim(),
                found: chi.torus.len() + cyclic.len(),
            });
        }
        group.check_character(&chi)?;
        Ok(chi)
    }

    pub fn trivial(group: &TargetGroup) -> Self {
        Self {
            torus: vec![0; group.torus_dim],
            cyclic: vec![0; group.moduli.len()],
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.torus.iter().chain(&self.cyclic).all(|&x| x == 0)
    }

    /// Lifted integer vector `(m, k)`.
    pub fn lifted(&self) -> Vec<BigInt> {
        self.torus.iter().chain(&self.cyclic).map(|&x| BigInt::from(x)).collect()
    }

    fn from_lifted(group: &TargetGroup, v: &[BigInt]) -> Self {
        let to_i64 = |x: &BigInt| x.to_i64().expect("character frequency fits i64");
        Self {
            torus: v[..group.torus_dim].iter().map(to_i64).collect(),
            cyclic: v[group.torus_dim..]
                .iter()
                .zip(&group.moduli)
                .map(|(x, &n)| to_i64(&x.mod_floor(&BigInt::from(n))))
                .collect(),
        }
    }

    /// Max-norm, with cyclic frequencies measured in `(-n/2, n/2]`.
    pub fn norm(&self, group: &TargetGroup) -> i64 {
        let torus = self.torus.iter().map(|m| m.abs());
        let cyclic = self.cyclic.iter().zip(&group.moduli).map(|(&k, &n)| {
            let n = n as i64;
            if 2 * k > n {
                n - k
            } else {
                k
            }
        });
        torus.chain(cyclic).max().unwrap_or(0)
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.torus.iter().chain(&self.cyclic).map(ToString::to_string).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Torus rank and cyclic invariants of a closed subgroup:
/// `H ~ T^torus_rank x Z/d_1 x ... x Z/d_s` with `d_1 | ... | d_s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubgroupStructure {
    pub torus_rank: usize,
    pub cyclic_invariants: Vec<BigInt>,
}

impl SubgroupStructure {
    /// `|H|` for finite subgroups.
    pub fn order(&self) -> Option<BigInt> {
        (self.torus_rank == 0).then(|| self.cyclic_invariants.iter().product())
    }
}

/// A closed subgroup, described by its annihilator lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedSubgroup {
    group: TargetGroup,
    annihilator: Lattice,
}

/// Subgroup coordinates from the Smith form of the annihilator: with
/// `U * B * V = diag(d)`, the subgroup is `{ V z mod 1 : d_i z_i in Z }`,
/// free in the coordinates past the annihilator rank.
struct SmithCoordinates {
    v: Vec<Vec<BigInt>>,
    /// One entry per coordinate of `z`; `None` marks a free circle.
    orders: Vec<Option<BigInt>>,
}

impl ClosedSubgroup {
    pub fn group(&self) -> &TargetGroup {
        &self.group
    }

    pub fn annihilator(&self) -> &Lattice {
        &self.annihilator
    }

    pub fn annihilates(&self, chi: &Character) -> bool {
        self.annihilator.contains(&chi.lifted())
    }

    /// `x` lies in the subgroup iff every annihilator basis character takes
    /// the value 1 at `x`, checked exactly.
    pub fn contains(&self, x: &TargetElement) -> bool {
        if self.group.check(x).is_err() {
            return false;
        }
        self.annihilator
            .basis()
            .iter()
            .all(|row| self.group.phase(&Character::from_lifted(&self.group, row), x).is_integral())
    }

    fn absorb(&mut self, s: &TargetElement) {
        if self.contains(s) {
            return;
        }
        let rows = self.annihilator.basis().to_vec();
        let conds = self.group.annihilation_conditions(&rows, s);
        let coeffs = integer_kernel(rows.len(), &conds);
        let d = self.group.dim();
        let generators = coeffs
            .basis()
            .iter()
            .map(|y| {
                let mut v = vec![BigInt::zero(); d];
                for (yi, row) in y.iter().zip(&rows) {
                    if yi.is_zero() {
                        continue;
                    }
                    for (vj, rj) in v.iter_mut().zip(row) {
                        *vj += yi * rj;
                    }
                }
                v
            })
            .collect();
        self.annihilator = Lattice::from_generators(d, generators);
    }

    /// The closed subgroup generated by `self` and `others`.
    pub fn join(&self, others: &[TargetElement]) -> ClosedSubgroup {
        let mut h = self.clone();
        for s in others {
            h.absorb(s);
        }
        h
    }

    pub fn structure(&self) -> SubgroupStructure {
        let coords = self.smith_coordinates();
        SubgroupStructure {
            torus_rank: coords.orders.iter().filter(|o| o.is_none()).count(),
            cyclic_invariants: coords.orders.into_iter().flatten().filter(|d| !d.is_one()).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.annihilator.rank() == self.group.dim()
    }

    pub fn order(&self) -> Option<BigInt> {
        self.structure().order()
    }

    fn smith_coordinates(&self) -> SmithCoordinates {
        let d = self.group.dim();
        let r = self.annihilator.rank();
        if r == 0 {
            return SmithCoordinates {
                v: Lattice::full(d).basis().to_vec(),
                orders: vec![None; d],
            };
        }
        let snf = smith_normal_form(&self.annihilator.basis_matrix());
        let mut orders: Vec<Option<BigInt>> = (0..r).map(|i| Some(snf.d[(i, i)].clone())).collect();
        orders.extend(std::iter::repeat_n(None, d - r));
        SmithCoordinates {
            v: snf.v.to_rows(),
            orders,
        }
    }

    fn element_from_smith(&self, coords: &SmithCoordinates, z: &[BigRational]) -> TargetElement {
        let y: Vec<BigRational> = coords
            .v
            .iter()
            .map(|row| {
                row.iter()
                    .zip(z)
                    .fold(BigRational::zero(), |acc, (vij, zj)| acc + zj * BigRational::from_integer(vij.clone()))
            })
            .collect();
        self.group.element_from_turns(&y)
    }

    /// Every element of a finite subgroup.
    pub fn elements(&self) -> Result<Vec<TargetElement>, TargetError> {
        let coords = self.smith_coordinates();
        let order = self.structure().order();
        let Some(order) = order.filter(|o| o <= &BigInt::from(ENUMERATION_LIMIT)) else {
            return Err(TargetError::TooLarge {
                order: self.order().map_or_else(|| "infinite".to_string(), |o| o.to_string()),
            });
        };
        let radices: Vec<u64> = coords
            .orders
            .iter()
            .map(|o| o.as_ref().and_then(ToPrimitive::to_u64).expect("finite"))
            .collect();
        let total = order.to_u64().expect("bounded by the limit");
        let mut out = Vec::with_capacity(total as usize);
        let mut seen = HashSet::new();
        for mut idx in 0..total {
            let mut z = vec![BigRational::zero(); radices.len()];
            for (k, &dk) in radices.iter().enumerate().rev() {
                z[k] = BigRational::new(BigInt::from(idx % dk), BigInt::from(dk));
                idx /= dk;
            }
            let x = self.element_from_smith(&coords, &z);
            if seen.insert(x.clone()) {
                out.push(x);
            }
        }
        Ok(out)
    }

    pub fn descriptor(&self) -> SubgroupDescriptor {
        SubgroupDescriptor {
            torus_dim: self.group.torus_dim,
            moduli: self.group.moduli.clone(),
            annihilator_rows: self
                .annihilator
                .basis()
                .iter()
                .map(|r| r.iter().cloned().map(ExactInt).collect())
                .collect(),
        }
    }
}

/// A translate `base + H`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coset {
    base: TargetElement,
    subgroup: ClosedSubgroup,
}

impl Coset {
    pub fn new(base: TargetElement, subgroup: ClosedSubgroup) -> Result<Self, TargetError> {
        subgroup.group.check(&base)?;
        Ok(Self { base, subgroup })
    }

    pub fn base(&self) -> &TargetElement {
        &self.base
    }

    pub fn subgroup(&self) -> &ClosedSubgroup {
        &self.subgroup
    }

    pub fn group(&self) -> &TargetGroup {
        &self.subgroup.group
    }

    /// `chi(x - base) = 1` for every annihilator basis character, exactly.
    pub fn contains(&self, x: &TargetElement) -> bool {
        self.group().check(x).is_ok() && self.subgroup.contains(&self.group().sub(x, &self.base))
    }

    /// Equal subgroups and bases differing by a subgroup element.
    pub fn same_as(&self, other: &Coset) -> bool {
        self.subgroup == other.subgroup && self.contains(&other.base)
    }

    /// Every element of a finite coset.
    pub fn elements(&self) -> Result<Vec<TargetElement>, TargetError> {
        Ok(self
            .subgroup
            .elements()?
            .iter()
            .map(|h| self.group().add(&self.base, h))
            .collect())
    }

    /// `count` Haar-distributed members, deterministic in `seed`. Subgroup
    /// coordinates come from the Smith form of the annihilator; cyclic factors
    /// are sampled uniformly, free circle coordinates as dyadic rationals
    /// with 53-bit denominators.
    pub fn haar_sample(&self, seed: u64, count: usize) -> Vec<TargetElement> {
        let coords = self.subgroup.smith_coordinates();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dyadic = BigInt::one() << 53u32;
        (0..count)
            .map(|_| {
                let z: Vec<BigRational> = coords
                    .orders
                    .iter()
                    .map(|o| match o {
                        Some(d) => {
                            let d64 = d.to_u64().expect("cyclic invariant fits u64");
                            BigRational::new(BigInt::from(rng.random_range(0..d64)), d.clone())
                        }
                        None => BigRational::new(BigInt::from(rng.random_range(0u64..1 << 53)), dyadic.clone()),
                    })
                    .collect();
                let h = self.subgroup.element_from_smith(&coords, &z);
                self.group().add(&self.base, &h)
            })
            .collect()
    }

    pub fn descriptor(&self) -> CosetDescriptor {
        let sub = self.subgroup.descriptor();
        CosetDescriptor {
            torus_dim: sub.torus_dim,
            moduli: sub.moduli,
            annihilator_rows: sub.annihilator_rows,
            base: self.base.clone(),
        }
    }

    pub fn from_descriptor(desc: &CosetDescriptor, registry: Arc<IrrationalRegistry>) -> Result<Self, TargetError> {
        let group = TargetGroup::new(desc.torus_dim, desc.moduli.clone(), registry)?;
        let rows = desc
            .annihilator_rows
            .iter()
            .map(|r| r.iter().map(|x| x.0.clone()).collect())
            .collect();
        let subgroup = group.subgroup_from_annihilator(rows)?;
        let base = group.element(
            desc.base.torus.clone(),
            desc.base.cyclic.iter().map(|&c| BigInt::from(c)).collect(),
        )?;
        Coset::new(base, subgroup)
    }
}

/// An integer that serializes as a JSON number when it fits `i64` and as a
/// decimal string otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactInt(pub BigInt);

impl Serialize for ExactInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) => s.serialize_i64(v),
            None => s.collect_str(&self.0),
        }
    }
}

impl<'de> Deserialize<'de> for ExactInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(ExactInt(BigInt::from(v))),
            Repr::Str(s) => s.parse().map(ExactInt).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupDescriptor {
    pub torus_dim: usize,
    pub moduli: Vec<u64>,
    pub annihilator_rows: Vec<Vec<ExactInt>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetDescriptor {
    pub torus_dim: usize,
    pub moduli: Vec<u64>,
    pub annihilator_rows: Vec<Vec<ExactInt>>,
    pub base: TargetElement,
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: &str = "1.414213562373095048801688724209698078569671875376948073176679737990732";

    fn reg() -> Arc<IrrationalRegistry> {
        Arc::new(IrrationalRegistry::with_entries([("sqrt2", SQRT2)]).unwrap())
    }

    fn t1() -> TargetGroup {
        TargetGroup::torus(1, reg()).unwrap()
    }

    fn pt(g: &TargetGroup, torus: &[&str], cyclic: &[i64]) -> TargetElement {
        g.element(
            torus.iter().map(|s| s.parse().unwrap()).collect(),
            cyclic.iter().map(|&c| BigInt::from(c)).collect(),
        )
        .unwrap()
    }

    fn close(a: Complex<f64>, b: Complex<f64>) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn char_eval_examples() {
        let g = t1();
        let chi = Character::new(&g, vec![2], vec![]).unwrap();
        assert!(close(g.char_eval(&chi, &pt(&g, &["1/4"], &[]), 30).unwrap(), Complex::new(-1.0, 0.0)));
        let triv = Character::trivial(&g);
        assert!(close(g.char_eval(&triv, &pt(&g, &["sqrt2"], &[]), 30).unwrap(), Complex::new(1.0, 0.0)));
        let z4 = TargetGroup::cyclic(vec![4]).unwrap();
        let chi = Character::new(&z4, vec![], vec![1]).unwrap();
        assert!(close(z4.char_eval(&chi, &pt(&z4, &[], &[1]), 30).unwrap(), Complex::new(0.0, 1.0)));
        let bad = Character::new(&g, vec![1, 2], vec![]);
        assert!(bad.is_err());
    }

    #[test]
    fn generated_subgroup_examples() {
        let g = t1();
        let h = g.closed_subgroup_from_generators(&[pt(&g, &["1/3"], &[])]).unwrap();
        assert_eq!(h.annihilator().basis(), &[vec![BigInt::from(3)]]);
        assert_eq!(h.order(), Some(BigInt::from(3)));
        let h = g.closed_subgroup_from_generators(&[pt(&g, &["sqrt2"], &[])]).unwrap();
        assert_eq!(h.annihilator().rank(), 0);
        assert_eq!(h, g.whole());

        let t2 = TargetGroup::torus(2, reg()).unwrap();
        let h = t2.closed_subgroup_from_generators(&[pt(&t2, &["1/2", "1/2"], &[])]).unwrap();
        // brute force over |m_i| <= 4: annihilating iff m1 + m2 even
        for m1 in -4i64..=4 {
            for m2 in -4i64..=4 {
                let chi = Character::new(&t2, vec![m1, m2], vec![]).unwrap();
                assert_eq!(h.annihilates(&chi), (m1 + m2) % 2 == 0);
            }
        }
        let mut elems = h.elements().unwrap();
        elems.sort();
        assert_eq!(elems, vec![pt(&t2, &["0", "0"], &[]), pt(&t2, &["1/2", "1/2"], &[])]);
    }

    #[test]
    fn incremental_and_one_shot_agree() {
        let g = TargetGroup::new(2, vec![6, 4], reg()).unwrap();
        let gens = vec![
            pt(&g, &["1/4", "sqrt2"], &[3, 1]),
            pt(&g, &["1/6", "1/2 + 2*sqrt2"], &[2, 2]),
            pt(&g, &["0", "1/3"], &[0, 0]),
        ];
        assert_eq!(
            g.closed_subgroup_from_generators(&gens).unwrap(),
            g.closed_subgroup_one_shot(&gens).unwrap()
        );
    }

    #[test]
    fn membership_examples() {
        let g = t1();
        let h = g.closed_subgroup_from_generators(&[pt(&g, &["1/3"], &[])]).unwrap();
        let c = Coset::new(g.zero(), h).unwrap();
        assert!(c.contains(c.base()));
        assert!(c.contains(&pt(&g, &["2/3"], &[])));
        assert!(!c.contains(&pt(&g, &["1/2"], &[])));
    }

    #[test]
    fn structure_examples() {
        let t2 = TargetGroup::torus(2, reg()).unwrap();
        let s = t2.whole().structure();
        assert_eq!((s.torus_rank, s.cyclic_invariants.len()), (2, 0));
        let g = t1();
        let h = g.closed_subgroup_from_generators(&[pt(&g, &["1/3"], &[])]).unwrap();
        assert_eq!(h.structure(), SubgroupStructure { torus_rank: 0, cyclic_invariants: vec![BigInt::from(3)] });
        let h = t2.closed_subgroup_from_generators(&[pt(&t2, &["1/2", "1/2"], &[])]).unwrap();
        assert_eq!(h.structure(), SubgroupStructure { torus_rank: 0, cyclic_invariants: vec![BigInt::from(2)] });
        let z = TargetGroup::cyclic(vec![4, 6]).unwrap();
        let s = z.whole().structure();
        assert_eq!(s.cyclic_invariants, vec![BigInt::from(2), BigInt::from(12)]);
        assert_eq!(s.order(), Some(BigInt::from(24)));
    }

    #[test]
    fn haar_sample_examples() {
        let g = t1();
        let full = Coset::new(g.zero(), g.whole()).unwrap();
        let chi = Character::new(&g, vec![1], vec![]).unwrap();
        let samples = full.haar_sample(11, 10_000);
        let mean: Complex<f64> = samples
            .iter()
            .map(|x| g.char_eval::<f64>(&chi, x, 20).unwrap())
            .sum::<Complex<f64>>()
            / 10_000.0;
        assert!(mean.norm() <= 0.05, "{mean}");

        let third = Coset::new(g.zero(), g.closed_subgroup_from_generators(&[pt(&g, &["1/3"], &[])]).unwrap()).unwrap();
        let samples = third.haar_sample(5, 10_000);
        for atom in ["0", "1/3", "2/3"] {
            let freq = samples.iter().filter(|x| **x == pt(&g, &[atom], &[])).count() as f64 / 1e4;
            assert!((freq - 1.0 / 3.0).abs() < 0.02, "{atom}: {freq}");
        }

        let half = g.closed_subgroup_from_generators(&[pt(&g, &["1/2"], &[])]).unwrap();
        let c = Coset::new(pt(&g, &["1/4"], &[]), half).unwrap();
        let allowed = [pt(&g, &["1/4"], &[]), pt(&g, &["3/4"], &[])];
        assert!(c.haar_sample(3, 500).iter().all(|x| allowed.contains(x)));
        assert_eq!(c.haar_sample(3, 20), c.haar_sample(3, 20));
    }

    #[test]
    fn haar_samples_are_members_of_mixed_cosets() {
        let g = TargetGroup::new(2, vec![4], reg()).unwrap();
        let h = g
            .closed_subgroup_from_generators(&[pt(&g, &["1/2", "sqrt2"], &[1]), pt(&g, &["1/3", "0"], &[2])])
            .unwrap();
        let c = Coset::new(pt(&g, &["1/5", "sqrt2"], &[3]), h).unwrap();
        for x in c.haar_sample(9, 300) {
            assert!(c.contains(&x), "{x}");
        }
    }

    #[test]
    fn descriptor_round_trip() {
        let g = TargetGroup::new(1, vec![4], reg()).unwrap();
        let h = g.closed_subgroup_from_generators(&[pt(&g, &["1/2"], &[2])]).unwrap();
        let c = Coset::new(pt(&g, &["1/4 + sqrt2"], &[1]), h).unwrap();
        let json = serde_json::to_string(&c.descriptor()).unwrap();
        assert!(!json.contains('.'), "no floats in descriptors: {json}");
        let back: CosetDescriptor = serde_json::from_str(&json).unwrap();
        assert!(Coset::from_descriptor(&back, reg()).unwrap().same_as(&c));
    }

    #[test]
    fn character_enumeration() {
        let g = TargetGroup::new(1, vec![4], reg()).unwrap();
        let chars = g.characters_up_to(1);
        // m in {-1,0,1}, k representatives in {-1,0,1}
        assert_eq!(chars.len(), 9);
        assert!(chars[0].is_trivial());
        assert!(chars.iter().all(|c| c.norm(&g) <= 1));
        assert_eq!(TargetGroup::torus(1, reg()).unwrap().characters_up_to(5).len(), 11);
        for (t, moduli, cutoff) in [(1, vec![4], 1), (2, vec![], 3), (0, vec![2, 7, 9], 2), (1, vec![5, 6], 5)] {
            let g = TargetGroup::new(t, moduli, reg()).unwrap();
            assert_eq!(g.character_count(cutoff), g.characters_up_to(cutoff).len() as u128);
        }
    }
}
