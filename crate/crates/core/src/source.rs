//! Discrete source groups and their Følner families.
//!
//! Three kinds are supported: free abelian groups `Z^d`, the integer
//! Heisenberg group `H3(Z)` with law
//! `(a,b,c)(a',b',c') = (a+a', b+b', c+c'+a*b')`, and finite abelian groups
//! `Z/n1 x ... x Z/nk`. Haar measure is counting measure.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

/// Default ceiling on the number of elements a Følner set may enumerate.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("element of arity {found} does not belong to {group} (arity {expected})")]
    KindMismatch {
        group: String,
        expected: usize,
        found: usize,
    },
    #[error("elements of {left} and {right} cannot be combined")]
    GroupMismatch { left: String, right: String },
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("Følner index must be at least 1")]
    ZeroIndex,
    #[error("Følner set has {cardinality} elements, over the budget of {budget}")]
    BudgetExceeded { cardinality: u128, budget: u128 },
}

/// An element of a source group, as an integer coordinate tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SourceElement(SmallVec<[i64; 4]>);

impl SourceElement {
    pub fn new(coords: &[i64]) -> Self {
        Self(SmallVec::from_slice(coords))
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<i64>> for SourceElement {
    fn from(v: Vec<i64>) -> Self {
        Self(SmallVec::from_vec(v))
    }
}

impl fmt::Display for SourceElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupOp {
    Compose,
    InverseOfFirst,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceGroup {
    FreeAbelian { rank: usize },
    Heisenberg3,
    FiniteAbelian { moduli: Vec<u64> },
}

impl fmt::Display for SourceGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FreeAbelian { rank } => write!(f, "Z^{rank}"),
            Self::Heisenberg3 => write!(f, "H3(Z)"),
            Self::FiniteAbelian { moduli } => {
                let parts: Vec<String> = moduli.iter().map(|m| format!("Z/{m}")).collect();
                write!(f, "{}", parts.join(" x "))
            }
        }
    }
}

impl SourceGroup {
    pub fn free_abelian(rank: usize) -> Result<Self, GroupError> {
        if rank == 0 {
            return Err(GroupError::InvalidGroup("free abelian rank must be at least 1".into()));
        }
        Ok(Self::FreeAbelian { rank })
    }

    pub fn finite_abelian(moduli: Vec<u64>) -> Result<Self, GroupError> {
        if moduli.is_empty() || moduli.iter().any(|&m| m < 2) {
            return Err(GroupError::InvalidGroup(format!(
                "finite abelian moduli must be a nonempty list of integers >= 2, got {moduli:?}"
            )));
        }
        if moduli.iter().any(|&m| m > i64::MAX as u64) {
            return Err(GroupError::InvalidGroup("modulus too large".into()));
        }
        Ok(Self::FiniteAbelian { moduli })
    }

    pub fn arity(&self) -> usize {
        match self {
            Self::FreeAbelian { rank } => *rank,
            Self::Heisenberg3 => 3,
            Self::FiniteAbelian { moduli } => moduli.len(),
        }
    }

    pub fn is_abelian(&self) -> bool {
        !matches!(self, Self::Heisenberg3)
    }

    /// Group order for finite groups.
    pub fn order(&self) -> Option<u128> {
        match self {
            Self::FiniteAbelian { moduli } => Some(moduli.iter().map(|&m| m as u128).product()),
            _ => None,
        }
    }

    pub fn identity(&self) -> SourceElement {
        SourceElement(SmallVec::from_elem(0, self.arity()))
    }

    /// Standard generators (unit vectors).
    pub fn generators(&self) -> Vec<SourceElement> {
        (0..self.arity())
            .map(|i| {
                let mut v = self.identity();
                v.0[i] = 1;
                v
            })
            .collect()
    }

    pub fn check(&self, g: &SourceElement) -> Result<(), GroupError> {
        if g.arity() != self.arity() {
            return Err(GroupError::KindMismatch {
                group: self.to_string(),
                expected: self.arity(),
                found: g.arity(),
            });
        }
        Ok(())
    }

    /// Builds an element, reducing finite coordinates into `[0, n)`.
    pub fn element(&self, coords: &[i64]) -> Result<SourceElement, GroupError> {
        let mut g = SourceElement::new(coords);
        self.check(&g)?;
        if let Self::FiniteAbelian { moduli } = self {
            for (c, &m) in g.0.iter_mut().zip(moduli) {
                *c = c.rem_euclid(m as i64);
            }
        }
        Ok(g)
    }

    pub fn compose(&self, g: &SourceElement, h: &SourceElement) -> Result<SourceElement, GroupError> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.compose_unchecked(g, h))
    }

    pub(crate) fn compose_unchecked(&self, g: &SourceElement, h: &SourceElement) -> SourceElement {
        let (x, y) = (g.coords(), h.coords());
        match self {
            Self::FreeAbelian { .. } => SourceElement(x.iter().zip(y).map(|(a, b)| a + b).collect()),
            Self::Heisenberg3 => SourceElement::new(&[x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1]]),
            Self::FiniteAbelian { moduli } => SourceElement(
                x.iter()
                    .zip(y)
                    .zip(moduli)
                    .map(|((a, b), &m)| (a + b).rem_euclid(m as i64))
                    .collect(),
            ),
        }
    }

    pub fn inverse(&self, g: &SourceElement) -> Result<SourceElement, GroupError> {
        self.check(g)?;
        Ok(self.inverse_unchecked(g))
    }

    pub(crate) fn inverse_unchecked(&self, g: &SourceElement) -> SourceElement {
        let x = g.coords();
        match self {
            Self::FreeAbelian { .. } => SourceElement(x.iter().map(|a| -a).collect()),
            // (a,b,c)^-1 = (-a, -b, -c + a*b)
            Self::Heisenberg3 => SourceElement::new(&[-x[0], -x[1], -x[2] + x[0] * x[1]]),
            Self::FiniteAbelian { moduli } => SourceElement(
                x.iter()
                    .zip(moduli)
                    .map(|(a, &m)| (-a).rem_euclid(m as i64))
                    .collect(),
            ),
        }
    }

    /// Evaluates the group law: `g*h`, `g^-1`, or the identity.
    pub fn group_law(&self, g: &SourceElement, h: &SourceElement, op: GroupOp) -> Result<SourceElement, GroupError> {
        self.check(g)?;
        self.check(h)?;
        Ok(match op {
            GroupOp::Compose => self.compose_unchecked(g, h),
            GroupOp::InverseOfFirst => self.inverse_unchecked(g),
            GroupOp::Identity => self.identity(),
        })
    }

    /// All elements with every coordinate in `[-radius, radius]` (reduced and
    /// deduplicated for finite groups).
    pub fn ball(&self, radius: i64) -> Vec<SourceElement> {
        let ranges: Vec<(i64, i64)> = match self {
            Self::FiniteAbelian { moduli } => moduli
                .iter()
                .map(|&m| {
                    let m = m as i64;
                    if 2 * radius + 1 >= m {
                        (0, m)
                    } else {
                        (-radius, radius + 1)
                    }
                })
                .collect(),
            _ => vec![(-radius, radius + 1); self.arity()],
        };
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for idx in 0..ranges.iter().map(|(lo, hi)| (hi - lo) as u128).product::<u128>() {
            let coords = decode(&ranges, idx);
            let g = self.element(&coords).expect("arity matches");
            if seen.insert(g.clone()) {
                out.push(g);
            }
        }
        out
    }

    /// Every element of a finite group in mixed-radix order.
    pub fn elements(&self) -> Option<Vec<SourceElement>> {
        let Self::FiniteAbelian { moduli } = self else {
            return None;
        };
        let ranges: Vec<(i64, i64)> = moduli.iter().map(|&m| (0, m as i64)).collect();
        let total: u128 = self.order()?;
        Some((0..total).map(|i| SourceElement(decode(&ranges, i))).collect())
    }

    /// Mixed-radix index of an element of a finite group.
    pub fn index_of(&self, g: &SourceElement) -> Option<usize> {
        let Self::FiniteAbelian { moduli } = self else {
            return None;
        };
        let mut idx = 0usize;
        for (&c, &m) in g.coords().iter().zip(moduli) {
            idx = idx * m as usize + c.rem_euclid(m as i64) as usize;
        }
        Some(idx)
    }
}

fn decode(ranges: &[(i64, i64)], mut idx: u128) -> SmallVec<[i64; 4]> {
    let mut coords: SmallVec<[i64; 4]> = SmallVec::from_elem(0, ranges.len());
    for (k, &(lo, hi)) in ranges.iter().enumerate().rev() {
        let width = (hi - lo) as u128;
        coords[k] = lo + (idx % width) as i64;
        idx /= width;
    }
    coords
}

/// Box parametrization of a Følner family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FolnerShape {
    /// `[-n, n]^d`; Heisenberg `|a|,|b| <= n, |c| <= n^2`.
    #[default]
    Symmetric,
    /// `[0, n)^d`; Heisenberg `a,b in [0,n), c in [0, n^2)`.
    Anchored,
}

/// A Følner family `F_1, F_2, ...` in a source group. Finite groups use the
/// whole group for every `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FolnerFamily {
    group: SourceGroup,
    shape: FolnerShape,
    budget: u128,
}

/// Exact boundary sizes `|gF \u{25b3} F|` and the size of their union.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundaryCounts {
    pub per_element: Vec<u64>,
    pub union: u64,
    pub set_size: u64,
}

impl FolnerFamily {
    pub fn new(group: SourceGroup, shape: FolnerShape) -> Self {
        Self {
            group,
            shape,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn symmetric(group: SourceGroup) -> Self {
        Self::new(group, FolnerShape::Symmetric)
    }

    pub fn anchored(group: SourceGroup) -> Self {
        Self::new(group, FolnerShape::Anchored)
    }

    pub fn with_budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }

    pub fn group(&self) -> &SourceGroup {
        &self.group
    }

    pub fn shape(&self) -> FolnerShape {
        self.shape
    }

    pub fn budget(&self) -> u128 {
        self.budget
    }

    /// Half-open coordinate ranges of `F_n`.
    pub fn ranges(&self, n: u64) -> Result<Vec<(i64, i64)>, GroupError> {
        if n == 0 {
            return Err(GroupError::ZeroIndex);
        }
        let n = n as i64;
        let sym = |r: i64| (-r, r + 1);
        Ok(match (&self.group, self.shape) {
            (SourceGroup::FiniteAbelian { moduli }, _) => moduli.iter().map(|&m| (0, m as i64)).collect(),
            (SourceGroup::FreeAbelian { rank }, FolnerShape::Symmetric) => vec![sym(n); *rank],
            (SourceGroup::FreeAbelian { rank }, FolnerShape::Anchored) => vec![(0, n); *rank],
            (SourceGroup::Heisenberg3, FolnerShape::Symmetric) => vec![sym(n), sym(n), sym(n * n)],
            (SourceGroup::Heisenberg3, FolnerShape::Anchored) => vec![(0, n), (0, n), (0, n * n)],
        })
    }

    /// `|F_n|` in closed form.
    pub fn len(&self, n: u64) -> Result<u128, GroupError> {
        Ok(self.ranges(n)?.iter().map(|(lo, hi)| (hi - lo) as u128).product())
    }

    /// Fails with the refused cardinality when `|F_n|` exceeds the budget.
    pub fn check_budget(&self, n: u64) -> Result<u128, GroupError> {
        let len = self.len(n)?;
        if len > self.budget {
            return Err(GroupError::BudgetExceeded {
                cardinality: len,
                budget: self.budget,
            });
        }
        Ok(len)
    }

    pub fn contains(&self, n: u64, x: &SourceElement) -> Result<bool, GroupError> {
        self.group.check(x)?;
        Ok(contains_in(&self.ranges(n)?, x))
    }

    pub fn element_at(&self, n: u64, idx: u128) -> Result<SourceElement, GroupError> {
        Ok(SourceElement(decode(&self.ranges(n)?, idx)))
    }

    /// Iterates `F_n` without materializing it.
    pub fn iter(&self, n: u64) -> Result<FolnerIter, GroupError> {
        let len = self.check_budget(n)?;
        FolnerIter::new(self.ranges(n)?, 0, len)
    }

    /// Iterates the index range `[start, end)` of `F_n`.
    pub fn iter_range(&self, n: u64, start: u128, end: u128) -> Result<FolnerIter, GroupError> {
        let len = self.check_budget(n)?;
        FolnerIter::new(self.ranges(n)?, start.min(len), end.min(len))
    }

    /// Every element of `F_n` exactly once.
    pub fn folner_set(&self, n: u64) -> Result<Vec<SourceElement>, GroupError> {
        Ok(self.iter(n)?.collect())
    }

    /// `|gF_n \u{25b3} F_n|` for each `g` in `s0`, and `|\u{222a}_g (gF_n \u{25b3} F_n)|`.
    ///
    /// Since `|gF| = |F|`, the symmetric difference splits into `gF \ F`
    /// (points `gx` with `x` in `F`, `gx` outside) and `F \ gF` (points `y`
    /// in `F` with `g^-1 y` outside); both halves are enumerated exactly.
    pub fn boundary_count(&self, n: u64, s0: &[SourceElement]) -> Result<BoundaryCounts, GroupError> {
        for g in s0 {
            self.group.check(g)?;
        }
        let ranges = self.ranges(n)?;
        let set_size = self.check_budget(n)? as u64;
        let mut per_element = Vec::with_capacity(s0.len());
        let mut union: HashSet<SourceElement> = HashSet::new();
        let track_union = s0.len() > 1;
        for g in s0 {
            let g_inv = self.group.inverse_unchecked(g);
            let mut count = 0u64;
            for x in self.iter(n)? {
                let gx = self.group.compose_unchecked(g, &x);
                if !contains_in(&ranges, &gx) {
                    count += 1;
                    if track_union {
                        union.insert(gx);
                    }
                }
                let ginv_x = self.group.compose_unchecked(&g_inv, &x);
                if !contains_in(&ranges, &ginv_x) {
                    count += 1;
                    if track_union {
                        union.insert(x);
                    }
                }
            }
            per_element.push(count);
        }
        let union = if track_union {
            union.len() as u64
        } else {
            per_element.first().copied().unwrap_or(0)
        };
        Ok(BoundaryCounts {
            per_element,
            union,
            set_size,
        })
    }
}

fn contains_in(ranges: &[(i64, i64)], x: &SourceElement) -> bool {
    x.coords().iter().zip(ranges).all(|(c, (lo, hi))| lo <= c && c < hi)
}

/// Odometer over a box of coordinates, in mixed-radix index order.
#[derive(Debug, Clone)]
pub struct FolnerIter {
    ranges: Vec<(i64, i64)>,
    current: SmallVec<[i64; 4]>,
    remaining: u128,
}

impl FolnerIter {
    fn new(ranges: Vec<(i64, i64)>, start: u128, end: u128) -> Result<Self, GroupError> {
        let current = decode(&ranges, start);
        Ok(Self {
            ranges,
            current,
            remaining: end.saturating_sub(start),
        })
    }
}

impl Iterator for FolnerIter {
    type Item = SourceElement;

    fn next(&mut self) -> Option<SourceElement> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = SourceElement(self.current.clone());
        for k in (0..self.ranges.len()).rev() {
            self.current[k] += 1;
            if self.current[k] < self.ranges[k].1 {
                break;
            }
            self.current[k] = self.ranges[k].0;
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}
