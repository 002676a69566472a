use std::collections::BTreeMap;

use num_rational::BigRational;

use super::poly::{binomial, Exponents, ScalarPoly};
use crate::exact::FieldScalar;

/// Binomial-basis coefficients `c_k = (Delta^k f)(0)` of a polynomial on
/// `Z^d`, so that `f(x) = sum_k c_k prod_j binom(x_j, k_j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceTable {
    nvars: usize,
    entries: BTreeMap<Exponents, FieldScalar>,
}

impl DifferenceTable {
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Exponents, &FieldScalar)> {
        self.entries.iter()
    }

    pub fn get(&self, k: &[u32]) -> FieldScalar {
        self.entries.get(k).cloned().unwrap_or_else(FieldScalar::zero)
    }

    /// Largest `|k|` with a nonzero coefficient satisfying `keep`.
    pub fn top_order(&self, keep: impl Fn(&FieldScalar) -> bool) -> u32 {
        self.entries
            .iter()
            .filter(|(_, c)| keep(c))
            .map(|(k, _)| k.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn reconstruct(&self, x: &[i64]) -> FieldScalar {
        let mut acc = FieldScalar::zero();
        for (k, c) in &self.entries {
            let b = k.iter().zip(x).fold(num_bigint::BigInt::from(1), |acc, (&kj, &xj)| acc * binomial(xj, kj));
            acc += &c.scale(&BigRational::from_integer(b));
        }
        acc
    }
}

/// Iterated unit-direction forward differences of `f` at the origin.
///
/// `f` is evaluated on the grid `prod [0, deg_j]`, and the forward-difference
/// operator is applied along each axis in turn; afterwards grid point `k`
/// holds `(Delta^k f)(0)`.
pub fn finite_difference_table(f: &ScalarPoly) -> DifferenceTable {
    let d = f.nvars();
    let degs = f.degrees();
    let sizes: Vec<usize> = degs.iter().map(|&k| k as usize + 1).collect();
    let total: usize = sizes.iter().product();
    let mut strides = vec![1usize; d];
    for j in (0..d.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * sizes[j + 1];
    }
    let point = |mut idx: usize| -> Vec<i64> {
        let mut x = vec![0i64; d];
        for j in (0..d).rev() {
            x[j] = (idx % sizes[j]) as i64;
            idx /= sizes[j];
        }
        x
    };
    let mut grid: Vec<FieldScalar> = (0..total).map(|i| f.eval_int(&point(i))).collect();
    for j in 0..d {
        let n = sizes[j];
        for base in 0..total {
            if !(base / strides[j]).is_multiple_of(n) {
                continue;
            }
            for level in 1..n {
                for i in (level..n).rev() {
                    let prev = grid[base + (i - 1) * strides[j]].clone();
                    grid[base + i * strides[j]] -= &prev;
                }
            }
        }
    }
    let entries = grid
        .into_iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| (point(i).into_iter().map(|v| v as u32).collect(), c))
        .collect();
    DifferenceTable { nvars: d, entries }
}
