use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::AlgebraError;

/// Integer types the normal-form algorithms run over (`BigInt`, `i64`, ...).
pub trait IntegerRing: Clone + Integer + Signed + fmt::Debug + fmt::Display {}

impl<T: Clone + Integer + Signed + fmt::Debug + fmt::Display> IntegerRing for T {}

/// Dense row-major integer matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix<T = BigInt> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: IntegerRing> IntMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, AlgebraError> {
        let cols = rows.first().map_or(0, Vec::len);
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            if r.len() != cols {
                return Err(AlgebraError::Ragged {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend(r);
        }
        Ok(Self { rows: n, cols, data })
    }

    /// Builds a `rows x cols` matrix from a flat row-major vector.
    pub fn from_flat(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "flat data has the wrong length");
        Self { rows, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.rows().map(<[T]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self, AlgebraError> {
        if self.cols != rhs.rows {
            return Err(AlgebraError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let prod = a.clone() * rhs[(k, j)].clone();
                    out[(i, j)] = out[(i, j)].clone() + prod;
                }
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> Result<T, AlgebraError> {
        if self.rows != self.cols {
            return Err(AlgebraError::Dimension("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(T::one());
        }
        let mut m = self.clone();
        let mut sign = T::one();
        let mut prev = T::one();
        for k in 0..n - 1 {
            if m[(k, k)].is_zero() {
                match (k + 1..n).find(|&i| !m[(i, k)].is_zero()) {
                    Some(i) => {
                        m.swap_rows(k, i);
                        sign = -sign;
                    }
                    None => return Ok(T::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = m[(i, j)].clone() * m[(k, k)].clone() - m[(i, k)].clone() * m[(k, j)].clone();
                    m[(i, j)] = v / prev.clone();
                }
            }
            prev = m[(k, k)].clone();
        }
        Ok(sign * m[(n - 1, n - 1)].clone())
    }

    pub fn is_unimodular(&self) -> bool {
        matches!(self.det(), Ok(d) if d.abs().is_one())
    }

    pub(crate) fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub(crate) fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    pub(crate) fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            self[(i, j)] = -self[(i, j)].clone();
        }
    }

    /// `row[dst] += k * row[src]`
    pub(crate) fn add_row_multiple(&mut self, dst: usize, src: usize, k: &T) {
        if k.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = self[(src, j)].clone() * k.clone();
            self[(dst, j)] = self[(dst, j)].clone() + v;
        }
    }

    /// Replaces rows `(a, b)` by `(x*a + y*b, z*a + w*b)`.
    fn combine_rows(&mut self, a: usize, b: usize, [x, y, z, w]: &[T; 4]) {
        for j in 0..self.cols {
            let ra = self[(a, j)].clone();
            let rb = self[(b, j)].clone();
            self[(a, j)] = x.clone() * ra.clone() + y.clone() * rb.clone();
            self[(b, j)] = z.clone() * ra + w.clone() * rb;
        }
    }

    /// Same as [`Self::combine_rows`] on columns.
    fn combine_cols(&mut self, a: usize, b: usize, [x, y, z, w]: &[T; 4]) {
        for i in 0..self.rows {
            let ca = self[(i, a)].clone();
            let cb = self[(i, b)].clone();
            self[(i, a)] = x.clone() * ca.clone() + y.clone() * cb.clone();
            self[(i, b)] = z.clone() * ca + w.clone() * cb;
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for IntMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for IntMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for IntMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self.data[i * self.cols + j])?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// `(g, x, y)` with `x*a + y*b = g >= 0`.
fn ext_gcd<T: IntegerRing>(a: &T, b: &T) -> (T, T, T) {
    let (mut old_r, mut r) = (a.clone(), b.clone());
    let (mut old_s, mut s) = (T::one(), T::zero());
    let (mut old_t, mut t) = (T::zero(), T::one());
    while !r.is_zero() {
        let q = old_r.div_floor(&r);
        let next_r = old_r - q.clone() * r.clone();
        old_r = std::mem::replace(&mut r, next_r);
        let next_s = old_s - q.clone() * s.clone();
        old_s = std::mem::replace(&mut s, next_s);
        let next_t = old_t - q * t.clone();
        old_t = std::mem::replace(&mut t, next_t);
    }
    if old_r.is_negative() {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Unimodular 2x2 block sending `(a, b)` to `(gcd, 0)`. When `a | b` the
/// block is a plain subtraction so the first line is left unchanged.
fn gcd_block<T: IntegerRing>(a: &T, b: &T) -> [T; 4] {
    if !a.is_zero() && b.is_multiple_of(a) {
        return [T::one(), T::zero(), -(b.clone() / a.clone()), T::one()];
    }
    let (g, x, y) = ext_gcd(a, b);
    [x, y, -(b.clone() / g.clone()), a.clone() / g]
}

/// Row Hermite normal form `H = U * A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HermiteForm<T = BigInt> {
    pub h: IntMatrix<T>,
    pub u: IntMatrix<T>,
    pub rank: usize,
    /// Pivot column of each of the first `rank` rows.
    pub pivots: Vec<usize>,
}

impl<T: IntegerRing> HermiteForm<T> {
    /// The nonzero rows of `H`.
    pub fn basis_rows(&self) -> Vec<Vec<T>> {
        (0..self.rank).map(|i| self.h.row(i).to_vec()).collect()
    }
}

/// Canonical row-style HNF: echelon staircase, positive pivots, entries above
/// each pivot reduced into `[0, pivot)`, zero rows last.
pub fn hermite_normal_form<T: IntegerRing>(a: &IntMatrix<T>) -> HermiteForm<T> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut h = a.clone();
    let mut u = IntMatrix::identity(m);
    let mut pivots = Vec::new();
    let mut p = 0;
    for col in 0..n {
        if p == m {
            break;
        }
        for i in p + 1..m {
            if h[(i, col)].is_zero() {
                continue;
            }
            let block = gcd_block(&h[(p, col)], &h[(i, col)]);
            h.combine_rows(p, i, &block);
            u.combine_rows(p, i, &block);
        }
        if h[(p, col)].is_zero() {
            continue;
        }
        if h[(p, col)].is_negative() {
            h.negate_row(p);
            u.negate_row(p);
        }
        let pivot = h[(p, col)].clone();
        for i in 0..p {
            let q = h[(i, col)].div_floor(&pivot);
            h.add_row_multiple(i, p, &-q.clone());
            u.add_row_multiple(i, p, &-q);
        }
        pivots.push(col);
        p += 1;
    }
    HermiteForm { h, u, rank: p, pivots }
}

/// Smith normal form `D = U * A * V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithForm<T = BigInt> {
    pub u: IntMatrix<T>,
    pub d: IntMatrix<T>,
    pub v: IntMatrix<T>,
}

impl<T: IntegerRing> SmithForm<T> {
    /// Nonzero diagonal entries `d_1 | d_2 | ...`.
    pub fn invariants(&self) -> Vec<T> {
        (0..self.d.nrows().min(self.d.ncols()))
            .map(|i| self.d[(i, i)].clone())
            .take_while(|x| !x.is_zero())
            .collect()
    }
}

pub fn smith_normal_form<T: IntegerRing>(a: &IntMatrix<T>) -> SmithForm<T> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut d = a.clone();
    let mut u = IntMatrix::identity(m);
    let mut v = IntMatrix::identity(n);
    for t in 0..m.min(n) {
        loop {
            // smallest nonzero entry of the trailing block becomes the pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..m {
                for j in t..n {
                    let x = &d[(i, j)];
                    if !x.is_zero() && best.is_none_or(|(bi, bj)| x.abs() < d[(bi, bj)].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                return finish_smith(u, d, v);
            };
            d.swap_rows(t, bi);
            u.swap_rows(t, bi);
            d.swap_cols(t, bj);
            v.swap_cols(t, bj);

            let mut clean = true;
            for i in t + 1..m {
                if d[(i, t)].is_zero() {
                    continue;
                }
                let block = gcd_block(&d[(t, t)], &d[(i, t)]);
                d.combine_rows(t, i, &block);
                u.combine_rows(t, i, &block);
            }
            for j in t + 1..n {
                if d[(t, j)].is_zero() {
                    continue;
                }
                let block = gcd_block(&d[(t, t)], &d[(t, j)]);
                d.combine_cols(t, j, &block);
                v.combine_cols(t, j, &block);
                clean = false;
            }
            if !clean && (t + 1..m).any(|i| !d[(i, t)].is_zero()) {
                continue;
            }
            let pivot = d[(t, t)].clone();
            let offender = (t + 1..m).find(|&i| (t + 1..n).any(|j| !d[(i, j)].is_multiple_of(&pivot)));
            match offender {
                Some(i) => {
                    d.add_row_multiple(t, i, &T::one());
                    u.add_row_multiple(t, i, &T::one());
                }
                None => break,
            }
        }
        if d[(t, t)].is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    finish_smith(u, d, v)
}

fn finish_smith<T: IntegerRing>(mut u: IntMatrix<T>, mut d: IntMatrix<T>, v: IntMatrix<T>) -> SmithForm<T> {
    for t in 0..d.nrows().min(d.ncols()) {
        if d[(t, t)].is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    SmithForm { u, d, v }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix<BigInt> {
        IntMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()).unwrap()
    }

    /// All integer matrices with entries in [-2, 2] that are unimodular; used
    /// to find the canonical HNF by search.
    fn small_unimodular_2x2() -> Vec<IntMatrix<BigInt>> {
        let mut out = Vec::new();
        for a in -3i64..=3 {
            for b in -3i64..=3 {
                for c in -3i64..=3 {
                    for d in -3i64..=3 {
                        if (a * d - b * c).abs() == 1 {
                            out.push(m(&[&[a, b], &[c, d]]));
                        }
                    }
                }
            }
        }
        out
    }

    fn is_canonical_hnf(h: &IntMatrix<BigInt>) -> bool {
        let mut last_pivot: Option<usize> = None;
        let mut seen_zero = false;
        for i in 0..h.nrows() {
            let row = h.row(i);
            match row.iter().position(|x| !x.is_zero()) {
                None => seen_zero = true,
                Some(p) => {
                    if seen_zero || last_pivot.is_some_and(|lp| p <= lp) || !row[p].is_positive() {
                        return false;
                    }
                    for k in 0..i {
                        let above = &h[(k, p)];
                        if above.is_negative() || above >= &row[p] {
                            return false;
                        }
                    }
                    last_pivot = Some(p);
                }
            }
        }
        true
    }

    #[test]
    fn hnf_identity_is_fixed() {
        let id = IntMatrix::<BigInt>::identity(3);
        let f = hermite_normal_form(&id);
        assert_eq!(f.h, id);
        assert_eq!(f.rank, 3);
    }

    #[test]
    fn hnf_matches_unimodular_search_oracle() {
        let a = m(&[&[2, 4], &[6, 8]]);
        let oracle: Vec<_> = small_unimodular_2x2()
            .into_iter()
            .map(|u| u.mul(&a).unwrap())
            .filter(is_canonical_hnf)
            .collect();
        assert!(!oracle.is_empty());
        assert!(oracle.iter().all(|h| h == &oracle[0]), "canonical form is unique");
        let f = hermite_normal_form(&a);
        assert_eq!(f.h, oracle[0]);
        assert_eq!(f.h, m(&[&[2, 0], &[0, 4]]));
        assert_eq!(f.u.mul(&a).unwrap(), f.h);
        assert!(f.u.is_unimodular());
    }

    #[test]
    fn hnf_of_zero_matrix_has_rank_zero() {
        let f = hermite_normal_form(&m(&[&[0, 0]]));
        assert_eq!(f.rank, 0);
        assert!(f.basis_rows().is_empty());
    }

    #[test]
    fn snf_small_examples() {
        let s = smith_normal_form(&IntMatrix::<BigInt>::identity(2));
        assert_eq!(s.d, IntMatrix::identity(2));
        // minor-gcd oracle: gcd of entries 2, gcd of 2x2 minors 8
        let s = smith_normal_form(&m(&[&[2, 4], &[6, 8]]));
        assert_eq!(s.d, m(&[&[2, 0], &[0, 4]]));
        let s = smith_normal_form(&m(&[&[1, 2], &[3, 4]]));
        assert_eq!(s.d, m(&[&[1, 0], &[0, 2]]));
    }

    #[test]
    fn snf_over_machine_integers() {
        let a = IntMatrix::<i64>::from_rows(vec![vec![4, 6], vec![6, 9], vec![2, 3]]).unwrap();
        let s = smith_normal_form(&a);
        assert_eq!(s.u.mul(&a).unwrap().mul(&s.v).unwrap(), s.d);
        assert_eq!(s.invariants(), vec![1]);
    }

    #[test]
    fn det_bareiss() {
        assert_eq!(m(&[&[2, 4], &[6, 8]]).det().unwrap(), BigInt::from(-8));
        assert_eq!(m(&[&[0, 1, 0], &[1, 0, 0], &[0, 0, 5]]).det().unwrap(), BigInt::from(-5));
        assert_eq!(m(&[&[1, 2], &[2, 4]]).det().unwrap(), BigInt::from(0));
    }
}
