use std::collections::BTreeSet;

use serde::Serialize;

use super::EquidistError;
use crate::source::{FolnerFamily, SourceElement, SourceGroup};

/// Tables above this order skip the full associativity check and only test
/// triples involving the generators of interest.
const ASSOCIATIVITY_CHECK_LIMIT: usize = 256;

/// A finite group given by its multiplication table over `0..order`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiniteGroup {
    labels: Vec<String>,
    table: Vec<Vec<usize>>,
    identity: usize,
    inverses: Vec<usize>,
}

impl FiniteGroup {
    /// Validates closure, identity, inverses and (for small orders) associativity.
    pub fn from_table(labels: Vec<String>, table: Vec<Vec<usize>>) -> Result<Self, EquidistError> {
        let n = table.len();
        let bad = |msg: String| Err(EquidistError::InvalidFiniteGroup(msg));
        if n == 0 {
            return bad("empty table".into());
        }
        if labels.len() != n {
            return bad(format!("{} labels for {n} elements", labels.len()));
        }
        if labels.iter().collect::<BTreeSet<_>>().len() != n {
            return bad("duplicate labels".into());
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != n {
                return bad(format!("row {i} has {} entries, expected {n}", row.len()));
            }
            if let Some(&x) = row.iter().find(|&&x| x >= n) {
                return bad(format!("entry {x} in row {i} is out of range"));
            }
        }
        let Some(identity) = (0..n).find(|&e| (0..n).all(|x| table[e][x] == x && table[x][e] == x)) else {
            return bad("no identity element".into());
        };
        let mut inverses = Vec::with_capacity(n);
        for x in 0..n {
            match (0..n).find(|&y| table[x][y] == identity && table[y][x] == identity) {
                Some(y) => inverses.push(y),
                None => return bad(format!("{} has no inverse", labels[x])),
            }
        }
        if n <= ASSOCIATIVITY_CHECK_LIMIT {
            for a in 0..n {
                for b in 0..n {
                    let ab = table[a][b];
                    for c in 0..n {
                        if table[ab][c] != table[a][table[b][c]] {
                            return bad(format!("({} {}) {} is not associative", labels[a], labels[b], labels[c]));
                        }
                    }
                }
            }
        }
        Ok(Self {
            labels,
            table,
            identity,
            inverses,
        })
    }

    /// `Z/n` with labels `0..n`.
    pub fn cyclic(n: usize) -> Result<Self, EquidistError> {
        let labels = (0..n).map(|k| k.to_string()).collect();
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self::from_table(labels, table)
    }

    /// Permutations of three points, labelled in one-line notation.
    pub fn symmetric3() -> Self {
        let perms: Vec<[usize; 3]> = vec![[0, 1, 2], [1, 2, 0], [2, 0, 1], [1, 0, 2], [2, 1, 0], [0, 2, 1]];
        let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).expect("S3 is closed");
        let table = perms
            .iter()
            .map(|p| perms.iter().map(|q| index([p[q[0]], p[q[1]], p[q[2]]])).collect())
            .collect();
        let labels = perms.iter().map(|p| format!("{}{}{}", p[0], p[1], p[2])).collect();
        Self::from_table(labels, table).expect("S3 table is a group")
    }

    /// The quaternion group `{±1, ±i, ±j, ±k}`.
    pub fn quaternion8() -> Self {
        // element = (sign, unit) with unit 0..4 standing for 1, i, j, k
        const UNIT: [[(bool, usize); 4]; 4] = [
            [(false, 0), (false, 1), (false, 2), (false, 3)],
            [(false, 1), (true, 0), (false, 3), (true, 2)],
            [(false, 2), (true, 3), (true, 0), (false, 1)],
            [(false, 3), (false, 2), (true, 1), (true, 0)],
        ];
        let names = ["1", "i", "j", "k"];
        let idx = |neg: bool, u: usize| u + if neg { 4 } else { 0 };
        let mut table = vec![vec![0; 8]; 8];
        for (a, row) in table.iter_mut().enumerate() {
            for (b, entry) in row.iter_mut().enumerate() {
                let (neg, u) = UNIT[a % 4][b % 4];
                *entry = idx(neg ^ (a >= 4) ^ (b >= 4), u);
            }
        }
        let labels = (0..8).map(|e| format!("{}{}", if e >= 4 { "-" } else { "" }, names[e % 4])).collect();
        Self::from_table(labels, table).expect("Q8 table is a group")
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverses[a]
    }

    /// `a^k` for any integer `k`.
    pub fn power(&self, a: usize, k: i64) -> usize {
        let (mut base, mut e) = if k < 0 { (self.inverse(a), k.unsigned_abs()) } else { (a, k as u64) };
        let mut acc = self.identity;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// The cyclic list `a^0, a^1, ...` up to the order of `a`.
    pub fn powers(&self, a: usize) -> Vec<usize> {
        let mut out = vec![self.identity];
        let mut x = a;
        while x != self.identity {
            out.push(x);
            x = self.mul(x, a);
        }
        out
    }

    /// Closure of `generators` under multiplication, sorted.
    pub fn generated_subgroup(&self, generators: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.order()];
        seen[self.identity] = true;
        let mut frontier = vec![self.identity];
        while let Some(x) = frontier.pop() {
            for &g in generators {
                let y = self.mul(x, g);
                if !seen[y] {
                    seen[y] = true;
                    frontier.push(y);
                }
            }
        }
        (0..self.order()).filter(|&x| seen[x]).collect()
    }
}

/// A homomorphism from a source group into a [`FiniteGroup`], fixed by the
/// images of the standard generators.
///
/// Heisenberg elements are read as `(a, b, c) -> W^c V^b U^a` with `U`, `V`
/// the images of the two generators and `W = U^-1 V^-1 U V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Homomorphism {
    source: SourceGroup,
    target: FiniteGroup,
    images: Vec<usize>,
    powers: Vec<Vec<usize>>,
}

impl Homomorphism {
    /// Checks the defining relations of `source` on the generator images.
    /// The Heisenberg group takes two images, for `(1,0,0)` and `(0,1,0)`.
    pub fn new(source: SourceGroup, target: FiniteGroup, images: Vec<usize>) -> Result<Self, EquidistError> {
        let generators = match source {
            SourceGroup::Heisenberg3 => 2,
            _ => source.arity(),
        };
        if images.len() != generators {
            return Err(EquidistError::InvalidFiniteGroup(format!(
                "{} generator images for {generators} generators",
                images.len()
            )));
        }
        if let Some(&x) = images.iter().find(|&&x| x >= target.order()) {
            return Err(EquidistError::InvalidFiniteGroup(format!("image {x} is out of range")));
        }
        let g = &target;
        let fail = |relation: &str, a: usize, b: usize| EquidistError::NotHomomorphism {
            relation: relation.to_string(),
            left: g.label(a).to_string(),
            right: g.label(b).to_string(),
        };
        let commute = |a: usize, b: usize| g.mul(a, b) == g.mul(b, a);
        let mut generator_images = images.clone();
        match &source {
            SourceGroup::FreeAbelian { .. } => {}
            SourceGroup::FiniteAbelian { moduli } => {
                for (&x, &n) in images.iter().zip(moduli) {
                    if g.power(x, n as i64) != g.identity() {
                        return Err(fail(&format!("g^{n} = e"), x, x));
                    }
                }
            }
            SourceGroup::Heisenberg3 => {
                let (u, v) = (images[0], images[1]);
                let w = g.mul(g.mul(g.inverse(u), g.inverse(v)), g.mul(u, v));
                for x in [u, v] {
                    if !commute(w, x) {
                        return Err(fail("[U, V] central", w, x));
                    }
                }
                generator_images.push(w);
            }
        }
        if source.is_abelian() {
            for i in 0..images.len() {
                for j in i + 1..images.len() {
                    if !commute(images[i], images[j]) {
                        return Err(fail("generators commute", images[i], images[j]));
                    }
                }
            }
        }
        let powers = generator_images.iter().map(|&x| target.powers(x)).collect();
        Ok(Self {
            source,
            target,
            images: generator_images,
            powers,
        })
    }

    pub fn source(&self) -> &SourceGroup {
        &self.source
    }

    pub fn target(&self) -> &FiniteGroup {
        &self.target
    }

    pub fn apply(&self, x: &SourceElement) -> Result<usize, EquidistError> {
        self.source.check(x)?;
        Ok(self.apply_unchecked(x))
    }

    fn apply_unchecked(&self, x: &SourceElement) -> usize {
        let pow = |i: usize, k: i64| {
            let table = &self.powers[i];
            table[k.rem_euclid(table.len() as i64) as usize]
        };
        let c = x.coords();
        match self.source {
            SourceGroup::Heisenberg3 => {
                let w = pow(2, c[2]);
                let v = pow(1, c[1]);
                let u = pow(0, c[0]);
                self.target.mul(self.target.mul(w, v), u)
            }
            _ => c
                .iter()
                .enumerate()
                .fold(self.target.identity(), |acc, (i, &k)| self.target.mul(acc, pow(i, k))),
        }
    }

    /// The subgroup generated by the image.
    pub fn image_subgroup(&self) -> Vec<usize> {
        self.target.generated_subgroup(&self.images)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementFrequency {
    pub element: String,
    pub count: u64,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityReport {
    pub n: u64,
    pub set_size: u64,
    pub subgroup: Vec<String>,
    pub frequencies: Vec<ElementFrequency>,
    /// `max_h |freq(h) - 1/|H||` over the generated subgroup `H`.
    pub max_deviation: f64,
}

/// Empirical distribution of `h` over `F_n` against the uniform measure on
/// the subgroup generated by the image.
pub fn homomorphism_uniformity_report(
    h: &Homomorphism,
    family: &FolnerFamily,
    n: u64,
) -> Result<UniformityReport, EquidistError> {
    if family.group() != h.source() {
        return Err(crate::source::GroupError::GroupMismatch {
            left: family.group().to_string(),
            right: h.source().to_string(),
        }
        .into());
    }
    let set_size = family.check_budget(n)? as u64;
    let mut counts = vec![0u64; h.target().order()];
    for x in family.iter(n)? {
        counts[h.apply_unchecked(&x)] += 1;
    }
    let subgroup = h.image_subgroup();
    let uniform = 1.0 / subgroup.len() as f64;
    let frequencies: Vec<ElementFrequency> = subgroup
        .iter()
        .map(|&e| ElementFrequency {
            element: h.target().label(e).to_string(),
            count: counts[e],
            frequency: counts[e] as f64 / set_size as f64,
        })
        .collect();
    let max_deviation = frequencies.iter().map(|f| (f.frequency - uniform).abs()).fold(0.0, f64::max);
    Ok(UniformityReport {
        n,
        set_size,
        subgroup: subgroup.iter().map(|&e| h.target().label(e).to_string()).collect(),
        frequencies,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_tables_are_groups() {
        assert_eq!(FiniteGroup::symmetric3().order(), 6);
        let q = FiniteGroup::quaternion8();
        let i = q.index_of("i").unwrap();
        let j = q.index_of("j").unwrap();
        assert_eq!(q.label(q.mul(i, j)), "k");
        assert_eq!(q.label(q.mul(j, i)), "-k");
        assert_eq!(q.label(q.power(i, 2)), "-1");
        assert_eq!(q.label(q.power(i, -1)), "-i");
        assert_eq!(FiniteGroup::cyclic(5).unwrap().generated_subgroup(&[2]).len(), 5);
    }

    #[test]
    fn rejects_non_groups() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let err = FiniteGroup::from_table(labels.clone(), vec![vec![0, 0], vec![0, 0]]);
        assert!(matches!(err, Err(EquidistError::InvalidFiniteGroup(_))));
        let err = FiniteGroup::from_table(labels, vec![vec![0, 2], vec![1, 0]]);
        assert!(matches!(err, Err(EquidistError::InvalidFiniteGroup(_))));
    }

    #[test]
    fn s3_three_cycle() {
        let s3 = FiniteGroup::symmetric3();
        let cycle = s3.index_of("120").unwrap();
        let h = Homomorphism::new(SourceGroup::free_abelian(1).unwrap(), s3, vec![cycle]).unwrap();
        let fam = FolnerFamily::anchored(h.source().clone());
        for n in [3, 30, 300] {
            let r = homomorphism_uniformity_report(&h, &fam, n).unwrap();
            assert_eq!(r.subgroup.len(), 3);
            assert!(r.frequencies.iter().all(|f| f.count * 3 == n));
            assert_eq!(r.max_deviation, 0.0);
        }
    }

    #[test]
    fn parity_on_z2() {
        let g = FiniteGroup::cyclic(2).unwrap();
        let h = Homomorphism::new(SourceGroup::free_abelian(2).unwrap(), g, vec![1, 0]).unwrap();
        let fam = FolnerFamily::symmetric(h.source().clone());
        let r = homomorphism_uniformity_report(&h, &fam, 10).unwrap();
        // x in [-10, 10]: 11 even, 10 odd
        assert_eq!(r.frequencies[0].count, 11 * 21);
        assert_eq!(r.frequencies[1].count, 10 * 21);
        let anchored = FolnerFamily::anchored(h.source().clone());
        let r = homomorphism_uniformity_report(&h, &anchored, 10).unwrap();
        assert!(r.frequencies.iter().all(|f| f.frequency == 0.5));
    }

    #[test]
    fn quaternion_unit_matches_counting() {
        let q = FiniteGroup::quaternion8();
        let i = q.index_of("i").unwrap();
        let h = Homomorphism::new(SourceGroup::free_abelian(1).unwrap(), q.clone(), vec![i]).unwrap();
        let fam = FolnerFamily::symmetric(h.source().clone());
        for n in [1, 2, 7, 50, 1001] {
            let r = homomorphism_uniformity_report(&h, &fam, n).unwrap();
            let mut sub = r.subgroup.clone();
            sub.sort();
            assert_eq!(sub, ["-1", "-i", "1", "i"]);
            // x in [-n, n]; i^x depends on x mod 4
            for f in &r.frequencies {
                let class = ["1", "i", "-1", "-i"].iter().position(|l| *l == f.element).unwrap() as i64;
                let oracle = (-(n as i64)..=n as i64).filter(|x| x.rem_euclid(4) == class).count() as u64;
                assert_eq!(f.count, oracle);
            }
            assert!(r.max_deviation <= 4.0 / r.set_size as f64);
        }
    }

    #[test]
    fn relation_failures_have_witnesses() {
        let s3 = FiniteGroup::symmetric3();
        let a = s3.index_of("120").unwrap();
        let b = s3.index_of("102").unwrap();
        let err = Homomorphism::new(SourceGroup::free_abelian(2).unwrap(), s3.clone(), vec![a, b]).unwrap_err();
        assert!(matches!(err, EquidistError::NotHomomorphism { .. }));
        let err = Homomorphism::new(SourceGroup::finite_abelian(vec![2]).unwrap(), s3.clone(), vec![a]).unwrap_err();
        assert!(matches!(err, EquidistError::NotHomomorphism { .. }));
        // S3 commutators are not central
        assert!(Homomorphism::new(SourceGroup::Heisenberg3, s3, vec![a, b]).is_err());
    }

    #[test]
    fn heisenberg_into_quaternions() {
        let q = FiniteGroup::quaternion8();
        let (i, j) = (q.index_of("i").unwrap(), q.index_of("j").unwrap());
        let h = Homomorphism::new(SourceGroup::Heisenberg3, q, vec![i, j]).unwrap();
        let grp = SourceGroup::Heisenberg3;
        let ball = grp.ball(2);
        for x in &ball {
            for y in &ball {
                let xy = grp.compose(x, y).unwrap();
                let lhs = h.apply(&xy).unwrap();
                let rhs = h.target().mul(h.apply(x).unwrap(), h.apply(y).unwrap());
                assert_eq!(lhs, rhs, "{x} {y}");
            }
        }
        assert_eq!(h.image_subgroup().len(), 8);
        let fam = FolnerFamily::symmetric(grp);
        let r = homomorphism_uniformity_report(&h, &fam, 4).unwrap();
        assert!(r.max_deviation < 0.05, "{r:?}");
    }
}
