use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::exact::{FieldScalar, IrrationalRegistry};
use crate::source::{SourceElement, SourceGroup};
use crate::target::{Character, TargetElement, TargetGroup};

const SQRT2: &str = "1.414213562373095048801688724209698078569671875376948073176679737990732";

fn reg() -> Arc<IrrationalRegistry> {
    Arc::new(IrrationalRegistry::with_entries([("sqrt2", SQRT2)]).unwrap())
}

fn s(x: &str) -> FieldScalar {
    x.parse().unwrap()
}

fn z1() -> SourceGroup {
    SourceGroup::free_abelian(1).unwrap()
}

fn t1() -> TargetGroup {
    TargetGroup::torus(1, reg()).unwrap()
}

/// `sum c_k n^k` from `(k, coefficient)` pairs, `Z -> T^1`.
fn torus_map(terms: &[(u32, &str)]) -> PolynomialMap {
    let p = ScalarPoly::from_terms(1, terms.iter().map(|(k, c)| (vec![*k], s(c))));
    PolynomialMap::from_polys(z1(), t1(), vec![p]).unwrap()
}

fn cyclic_map(n: u64, terms: &[(u32, &str)]) -> PolynomialMap {
    let p = ScalarPoly::from_terms(1, terms.iter().map(|(k, c)| (vec![*k], s(c))));
    PolynomialMap::from_polys(z1(), TargetGroup::cyclic(vec![n]).unwrap(), vec![p]).unwrap()
}

fn heisenberg_sqrt2_c() -> PolynomialMap {
    let p = ScalarPoly::from_terms(3, [(vec![0, 0, 1], s("sqrt2"))]);
    PolynomialMap::from_polys(SourceGroup::Heisenberg3, t1(), vec![p]).unwrap()
}

fn el(c: &[i64]) -> SourceElement {
    SourceElement::new(c)
}

fn pt(g: &TargetGroup, torus: &[&str]) -> TargetElement {
    g.element(torus.iter().map(|x| s(x)).collect(), vec![]).unwrap()
}

/// Closure under addition of a finite set of torus points, by saturation.
fn exhaustive_closure(g: &TargetGroup, gens: &[TargetElement]) -> BTreeSet<TargetElement> {
    let mut set: BTreeSet<TargetElement> = [g.zero()].into();
    loop {
        let mut grown = set.clone();
        for a in &set {
            for b in gens {
                grown.insert(g.add(a, b));
            }
        }
        if grown.len() == set.len() {
            return set;
        }
        set = grown;
    }
}

#[test]
fn evaluate_examples() {
    let p = torus_map(&[(2, "sqrt2")]);
    let v = p.evaluate(&el(&[3])).unwrap();
    assert_eq!(v.torus[0], s("9*sqrt2"));
    let c = PolynomialMap::constant(z1(), t1(), pt(&t1(), &["2/7"])).unwrap();
    for n in [-5, 0, 11] {
        assert_eq!(c.evaluate(&el(&[n])).unwrap(), pt(&t1(), &["2/7"]));
    }
    let h = heisenberg_sqrt2_c();
    assert_eq!(h.evaluate(&el(&[1, 1, 1])).unwrap().torus[0], s("sqrt2"));
    assert!(p.evaluate(&el(&[1, 2])).is_err());
}

#[test]
fn derivative_examples() {
    let p = torus_map(&[(2, "sqrt2")]);
    let d = p.discrete_derivative(&el(&[1])).unwrap();
    assert_eq!(d.polys().unwrap()[0], ScalarPoly::from_terms(1, [(vec![1], s("2*sqrt2")), (vec![0], s("sqrt2"))]));
    let c = PolynomialMap::constant(z1(), t1(), pt(&t1(), &["1/3"])).unwrap();
    assert!(c.discrete_derivative(&el(&[5])).unwrap().is_zero_map());
    // Heisenberg: Delta_g P (a,b,c) = sqrt2 (c' + a' b)
    let h = heisenberg_sqrt2_c();
    let g = el(&[2, -1, 5]);
    let d = h.discrete_derivative(&g).unwrap();
    let expect = ScalarPoly::from_terms(3, [(vec![0, 0, 0], s("5*sqrt2")), (vec![0, 1, 0], s("2*sqrt2"))]);
    assert_eq!(d.polys().unwrap()[0], expect);
}

#[test]
fn degree_examples() {
    let opts = DegreeOptions::default();
    let c = PolynomialMap::constant(z1(), t1(), pt(&t1(), &["1/3"])).unwrap();
    assert_eq!(c.degree(&opts).unwrap().degree, 0);
    let p = torus_map(&[(2, "sqrt2")]);
    assert_eq!(p.degree(&opts).unwrap(), Degree { degree: 2, certificate: Certificate::Exact });
    let h = heisenberg_sqrt2_c().degree(&opts).unwrap();
    assert_eq!(h.degree, 2);
    assert_eq!(h.certificate, Certificate::SampledCertificate { samples: 200 });
    // n^2/2 coincides with n/2 mod 1
    assert_eq!(torus_map(&[(2, "1/2")]).degree(&opts).unwrap().degree, 1);
    // sampled and exact agree on Z^d bodies
    let q = torus_map(&[(3, "sqrt2"), (1, "1/5")]);
    assert_eq!(q.sampled_degree(&opts).unwrap().degree, q.degree(&opts).unwrap().degree);
}

#[test]
fn degree_bound_failure_carries_a_witness() {
    let p = torus_map(&[(4, "sqrt2")]);
    let err = p.degree(&DegreeOptions { d_max: 2, ..Default::default() }).unwrap_err();
    let PolyError::DegreeExceeded { witness, .. } = err else { panic!("{err}") };
    assert_ne!(witness.value, t1().zero());
    let err = heisenberg_sqrt2_c().degree(&DegreeOptions { d_max: 1, ..Default::default() }).unwrap_err();
    let PolyError::DegreeExceeded { witness, .. } = err else { panic!("{err}") };
    assert_eq!(p.target().zero().torus.len(), witness.value.torus.len());
    assert_eq!(witness.gammas.len(), 2);
}

#[test]
fn predicted_coset_examples() {
    let g = t1();
    // n^2 / 2: annihilator 2Z
    let pc = predicted_image_coset(&torus_map(&[(2, "1/2")])).unwrap();
    assert_eq!(pc.certainty, Certainty::Exact);
    let mut atoms = pc.coset.elements().unwrap();
    atoms.sort();
    assert_eq!(atoms, vec![pt(&g, &["0"]), pt(&g, &["1/2"])]);

    // sqrt2 n: full torus; no |m| <= 10 annihilates
    let pc = predicted_image_coset(&torus_map(&[(1, "sqrt2")])).unwrap();
    assert_eq!(pc.coset.subgroup(), &g.whole());
    for m in 1..=10 {
        assert!(!pc.coset.subgroup().annihilates(&Character::new(&g, vec![m], vec![]).unwrap()));
    }

    // 1/4 + n/2
    let pc = predicted_image_coset(&torus_map(&[(0, "1/4"), (1, "1/2")])).unwrap();
    assert_eq!(pc.coset.base(), &pt(&g, &["1/4"]));
    let mut atoms = pc.coset.elements().unwrap();
    atoms.sort();
    assert_eq!(atoms, vec![pt(&g, &["1/4"]), pt(&g, &["3/4"])]);

    // n/3
    let pc = predicted_image_coset(&torus_map(&[(1, "1/3")])).unwrap();
    assert_eq!(pc.coset.base(), &g.zero());
    assert_eq!(pc.coset.subgroup().order(), Some(BigInt::from(3)));
}

#[test]
fn predicted_coset_matches_residue_oracle() {
    // For rational maps the values repeat with the denominator; G_0 is the
    // additive closure of P(n) - P(0) over one period.
    let g = t1();
    for terms in [
        vec![(2, "1/2")],
        vec![(2, "1/4")],
        vec![(1, "1/3")],
        vec![(0, "1/4"), (1, "1/2")],
        vec![(3, "1/6"), (2, "5/6")],
        vec![(2, "3/10"), (1, "1/15")],
    ] {
        let p = torus_map(&terms);
        let base = p.evaluate(&el(&[0])).unwrap();
        let diffs: Vec<TargetElement> = (0..60).map(|n| g.sub(&p.evaluate(&el(&[n])).unwrap(), &base)).collect();
        let oracle = exhaustive_closure(&g, &diffs);
        let pc = predicted_image_coset(&p).unwrap();
        let got: BTreeSet<TargetElement> = pc.coset.subgroup().elements().unwrap().into_iter().collect();
        assert_eq!(got, oracle, "{terms:?}");
    }
}

#[test]
fn heisenberg_and_finite_predictions() {
    let pc = predicted_image_coset(&heisenberg_sqrt2_c()).unwrap();
    assert_eq!(pc.certainty, Certainty::Heuristic);
    assert_eq!(pc.coset.subgroup(), &t1().whole());
    // c/3 on H3: order-3 subgroup
    let p = ScalarPoly::from_terms(3, [(vec![0, 0, 1], s("1/3"))]);
    let m = PolynomialMap::from_polys(SourceGroup::Heisenberg3, t1(), vec![p]).unwrap();
    assert_eq!(predicted_image_coset(&m).unwrap().coset.subgroup().order(), Some(BigInt::from(3)));
    // x -> 2x on Z/6 into Z/6: image {0,2,4}
    let z6 = TargetGroup::cyclic(vec![6]).unwrap();
    let src = SourceGroup::finite_abelian(vec![6]).unwrap();
    let m = PolynomialMap::from_fn(src, z6.clone(), |x| z6.element(vec![], vec![BigInt::from(2 * x.coords()[0])]).unwrap()).unwrap();
    let pc = predicted_image_coset(&m).unwrap();
    assert_eq!(pc.certainty, Certainty::Exact);
    assert_eq!(pc.coset.subgroup().order(), Some(BigInt::from(3)));
}

#[test]
fn empirical_closure_examples() {
    let opts = ClosureOptions::default();
    let p = torus_map(&[(1, "1/3")]);
    let pc = predicted_image_coset(&p).unwrap();
    let e = empirical_image_closure(&p, &pc.coset, &opts).unwrap();
    assert_eq!(e.comparison, Comparison::Match);
    let ClosureVerdict::Finite { atoms, .. } = &e.verdict else { panic!() };
    assert_eq!(atoms.len(), 3);

    // n^2/4: n^2 mod 4 is 0 or 1
    let p = torus_map(&[(2, "1/4")]);
    let pc = predicted_image_coset(&p).unwrap();
    assert_eq!(pc.coset.subgroup().order(), Some(BigInt::from(4)));
    let e = empirical_image_closure(&p, &pc.coset, &opts).unwrap();
    let ClosureVerdict::Finite { atoms, .. } = &e.verdict else { panic!() };
    assert_eq!(atoms, &vec![pt(&t1(), &["0"]), pt(&t1(), &["1/4"])]);
    assert_eq!(e.comparison, Comparison::Mismatch);
    assert_eq!(e.outside_predicted, 0);

    let p = torus_map(&[(1, "sqrt2")]);
    let pc = predicted_image_coset(&p).unwrap();
    let e = empirical_image_closure(&p, &pc.coset, &opts).unwrap();
    let ClosureVerdict::Dense { samples, approached, .. } = e.verdict else { panic!() };
    assert_eq!((samples, approached), (100, 100));
    assert_eq!(e.comparison, Comparison::Match);
}

#[test]
fn kernel_examples() {
    let k = torus_map(&[(1, "1/3")]).kernel_subgroup(6).unwrap();
    assert_eq!(k.elements, vec![el(&[-6]), el(&[-3]), el(&[0]), el(&[3]), el(&[6])]);
    assert_eq!(k.lattice.unwrap().basis(), &[vec![BigInt::from(3)]]);
    let k = torus_map(&[(1, "sqrt2")]).kernel_subgroup(10).unwrap();
    assert_eq!(k.elements, vec![el(&[0])]);
    let c = PolynomialMap::constant(z1(), t1(), pt(&t1(), &["1/5"])).unwrap();
    assert_eq!(c.kernel_subgroup(4).unwrap().elements.len(), 9);
    assert!(c.kernel_subgroup(4).unwrap().lower_bound);
}

#[test]
fn cyclic_integrality_validation() {
    let err = PolynomialMap::from_polys(
        z1(),
        TargetGroup::cyclic(vec![5]).unwrap(),
        vec![ScalarPoly::from_terms(1, [(vec![2], s("1/3"))])],
    );
    assert!(matches!(err, Err(PolyError::NotIntegerValued { .. })));
    let err = PolynomialMap::from_polys(
        z1(),
        TargetGroup::new(0, vec![5], reg()).unwrap(),
        vec![ScalarPoly::from_terms(1, [(vec![1], s("sqrt2"))])],
    );
    assert!(matches!(err, Err(PolyError::IrrationalInCyclic { .. })));
    let binom2 = cyclic_map(2, &[(2, "1/2"), (1, "-1/2")]);
    let vals: Vec<u64> = (0..4).map(|n| binom2.evaluate(&el(&[n])).unwrap().cyclic[0]).collect();
    assert_eq!(vals, vec![0, 0, 1, 1]);
}

#[test]
fn derivative_drops_degree() {
    let opts = DegreeOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = torus_map(&[(3, "sqrt2"), (2, "1/7"), (1, "1/3")]);
    let dp = p.degree(&opts).unwrap().degree;
    for _ in 0..100 {
        let g = el(&[rng.random_range(-20..=20)]);
        let dd = p.discrete_derivative(&g).unwrap().degree(&opts).unwrap().degree;
        if g.coords()[0] == 0 {
            assert_eq!(dd, 0);
        } else {
            assert_eq!(dd, dp - 1, "g = {g}");
        }
    }
    let h = heisenberg_sqrt2_c();
    for _ in 0..20 {
        let g = el(&[rng.random_range(-3..=3), rng.random_range(-3..=3), rng.random_range(-3..=3)]);
        assert!(h.discrete_derivative(&g).unwrap().sampled_degree(&opts).unwrap().degree <= 1);
    }
}

#[test]
fn cocycle_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h3 = SourceGroup::Heisenberg3;
    let body = ScalarPoly::from_terms(
        3,
        [(vec![0, 0, 1], s("sqrt2")), (vec![2, 0, 0], s("1/3")), (vec![1, 1, 0], s("1/5 + sqrt2"))],
    );
    let p = PolynomialMap::from_polys(h3.clone(), t1(), vec![body]).unwrap();
    let g = p.target().clone();
    let rand_el = |rng: &mut ChaCha8Rng| el(&[rng.random_range(-5..=5), rng.random_range(-5..=5), rng.random_range(-9..=9)]);
    for _ in 0..50 {
        let (a, b, x) = (rand_el(&mut rng), rand_el(&mut rng), rand_el(&mut rng));
        let ab = h3.compose(&a, &b).unwrap();
        let lhs = p.discrete_derivative(&ab).unwrap();
        let da = p.discrete_derivative(&a).unwrap();
        let db = p.discrete_derivative(&b).unwrap();
        let bx = h3.compose(&b, &x).unwrap();
        let rhs = g.add(&da.evaluate(&bx).unwrap(), &db.evaluate(&x).unwrap());
        assert_eq!(lhs.evaluate(&x).unwrap(), rhs);
        // symbolically: Delta_ab P = (Delta_a P)(b .) + Delta_b P
        let moved = da.shift(&h3.inverse(&b).unwrap()).unwrap();
        let sum = PolynomialMap::from_polys(
            h3.clone(),
            g.clone(),
            vec![moved.polys().unwrap()[0].add(&db.polys().unwrap()[0])],
        )
        .unwrap();
        assert!(lhs.equivalent(&sum).unwrap());
    }
}

#[test]
fn values_lie_in_the_predicted_coset() {
    let maps = [
        torus_map(&[(2, "sqrt2"), (1, "1/3")]),
        torus_map(&[(3, "1/6"), (0, "1/9")]),
        cyclic_map(6, &[(2, "1/2"), (1, "1/2")]),
    ];
    for p in &maps {
        let pc = predicted_image_coset(p).unwrap();
        for n in -40..=40 {
            assert!(pc.coset.contains(&p.evaluate(&el(&[n])).unwrap()));
        }
    }
    let h = heisenberg_sqrt2_c();
    let pc = predicted_image_coset(&h).unwrap();
    for x in SourceGroup::Heisenberg3.ball(2) {
        assert!(pc.coset.contains(&h.evaluate(&x).unwrap()));
    }
}

#[test]
fn bounded_integer_polynomials_are_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let deg = rng.random_range(1..=4u32);
        let mut terms: Vec<(Vec<u32>, FieldScalar)> =
            (0..deg).map(|k| (vec![k], FieldScalar::from_integer(rng.random_range(-9..=9)))).collect();
        let top: i64 = loop {
            let c = rng.random_range(-9..=9);
            if c != 0 {
                break c;
            }
        };
        terms.push((vec![deg], FieldScalar::from_integer(top)));
        let p = ScalarPoly::from_terms(1, terms);
        let mut prev = BigInt::from(0);
        for r in [64, 128, 256, 512, 1024] {
            let spread = value_spread(&p, r).unwrap();
            assert!(spread > prev, "{p}");
            prev = spread;
        }
        assert!(prev > BigInt::from(1000));
    }
    assert_eq!(value_spread(&ScalarPoly::constant(1, s("4")), 1024).unwrap(), BigInt::from(0));
}

#[test]
fn phase_evaluators_agree_with_exact_values() {
    let p = torus_map(&[(2, "sqrt2"), (1, "1/3")]);
    let chi = Character::new(p.target(), vec![3], vec![]).unwrap();
    let ev = p.phase_evaluator(&chi, &[(-1000, 1001)], 15).unwrap();
    for n in [-1000, -7, 0, 999] {
        let x = el(&[n]);
        let exact = p.target().phase(&chi, &p.evaluate(&x).unwrap()).mod1();
        let expect = crate::phase::Phase::from_scalar(&exact, p.target().registry()).unwrap();
        assert!(ev.phase(&x).circle_distance(expect) < 1e-18);
    }
}
