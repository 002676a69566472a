use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::matrix::{hermite_normal_form, IntMatrix};

/// A full-rank-or-not sublattice of `Z^dim`, stored as the nonzero rows of
/// its canonical row Hermite normal form. Two lattices are equal iff their
/// bases are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lattice {
    dim: usize,
    basis: Vec<Vec<BigInt>>,
}

impl Lattice {
    pub fn zero(dim: usize) -> Self {
        Self { dim, basis: Vec::new() }
    }

    pub fn full(dim: usize) -> Self {
        let basis = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        Self { dim, basis }
    }

    /// The lattice spanned by `generators`, canonicalized.
    pub fn from_generators(dim: usize, generators: Vec<Vec<BigInt>>) -> Self {
        let generators: Vec<_> = generators.into_iter().filter(|g| g.iter().any(|x| !x.is_zero())).collect();
        if generators.is_empty() {
            return Self::zero(dim);
        }
        debug_assert!(generators.iter().all(|g| g.len() == dim));
        let m = IntMatrix::from_rows(generators).expect("generators share a dimension");
        let hnf = hermite_normal_form(&m);
        Self {
            dim,
            basis: hnf.basis_rows(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<BigInt>] {
        &self.basis
    }

    pub fn basis_matrix(&self) -> IntMatrix<BigInt> {
        if self.basis.is_empty() {
            return IntMatrix::zeros(0, self.dim);
        }
        IntMatrix::from_rows(self.basis.clone()).expect("basis rows share a dimension")
    }

    /// Membership by reduction against the echelon basis.
    pub fn contains(&self, v: &[BigInt]) -> bool {
        if v.len() != self.dim {
            return false;
        }
        let mut w = v.to_vec();
        for row in &self.basis {
            let p = row.iter().position(|x| !x.is_zero()).expect("basis rows are nonzero");
            let (q, r) = w[p].div_rem(&row[p]);
            if !r.is_zero() {
                return false;
            }
            if !q.is_zero() {
                for (wj, rj) in w.iter_mut().zip(row) {
                    *wj -= &q * rj;
                }
            }
        }
        w.iter().all(Zero::is_zero)
    }

    pub fn contains_i64(&self, v: &[i64]) -> bool {
        let v: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        self.contains(&v)
    }

    pub fn is_full(&self) -> bool {
        self == &Self::full(self.dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionKind {
    /// `coeffs . m = 0`
    Equality,
    /// `coeffs . m` is an integer
    Congruence,
}

/// One rational linear condition on an integer unknown vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub coeffs: Vec<BigRational>,
    pub kind: ConditionKind,
}

impl Condition {
    pub fn equality(coeffs: Vec<BigRational>) -> Self {
        Self {
            coeffs,
            kind: ConditionKind::Equality,
        }
    }

    pub fn congruence(coeffs: Vec<BigRational>) -> Self {
        Self {
            coeffs,
            kind: ConditionKind::Congruence,
        }
    }

    pub fn is_trivial(&self) -> bool {
        match self.kind {
            ConditionKind::Equality => self.coeffs.iter().all(Zero::is_zero),
            ConditionKind::Congruence => self.coeffs.iter().all(|q| q.is_integer()),
        }
    }
}

/// All `m` in `Z^cols` satisfying every condition.
///
/// Each congruence row gets an integer slack unknown `s` with
/// `L*(coeffs . m) - L*s = 0` after clearing denominators by `L`; the kernel
/// of the resulting integer system is projected back onto the first `cols`
/// coordinates.
pub fn integer_kernel(cols: usize, conditions: &[Condition]) -> Lattice {
    let conditions: Vec<&Condition> = conditions.iter().filter(|c| !c.is_trivial()).collect();
    if conditions.is_empty() {
        return Lattice::full(cols);
    }
    let slacks = conditions.iter().filter(|c| c.kind == ConditionKind::Congruence).count();
    let width = cols + slacks;
    let mut system = IntMatrix::<BigInt>::zeros(conditions.len(), width);
    let mut slack = cols;
    for (i, cond) in conditions.iter().enumerate() {
        assert_eq!(cond.coeffs.len(), cols, "condition width must match the unknown count");
        let lcm = cond.coeffs.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        for (j, q) in cond.coeffs.iter().enumerate() {
            system[(i, j)] = (q * BigRational::from_integer(lcm.clone())).to_integer();
        }
        if cond.kind == ConditionKind::Congruence {
            system[(i, slack)] = -lcm;
            slack += 1;
        }
    }
    // U * S^T = H; the rows of U past rank(H) span the right kernel of S.
    let hnf = hermite_normal_form(&system.transpose());
    let generators = (hnf.rank..width)
        .map(|i| hnf.u.row(i)[..cols].to_vec())
        .collect();
    Lattice::from_generators(cols, generators)
}
