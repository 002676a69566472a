use std::collections::BTreeSet;
use std::sync::Arc;

use equidistlab::equidist::{equidistribution_report, weyl_sum, ReportOptions, SumOptions};
use equidistlab::exact::IrrationalRegistry;
use equidistlab::orbits::{orbit_map, window_project, Window};
use equidistlab::polymaps::{predicted_image_coset, Certainty, Exponents, ScalarPoly};
use equidistlab::{FieldScalar, FolnerFamily, PolynomialMap, SourceElement, SourceGroup, TargetElement, TargetGroup};
use num_bigint::BigInt;
use num_complex::Complex;
use proptest::prelude::*;

const SQRT2: &str = "1.414213562373095048801688724209698078569671875376948073176679737990732";

fn registry() -> Arc<IrrationalRegistry> {
    Arc::new(IrrationalRegistry::with_entries([("sqrt2", SQRT2)]).unwrap())
}

fn z() -> SourceGroup {
    SourceGroup::free_abelian(1).unwrap()
}

/// `n -> sum_k coeffs[k] n^k` into the circle.
fn circle_map(coeffs: &[&str]) -> PolynomialMap {
    let terms = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| (Exponents::from(vec![k as u32]), c.parse::<FieldScalar>().unwrap()));
    let target = TargetGroup::torus(1, registry()).unwrap();
    PolynomialMap::from_polys(z(), target, vec![ScalarPoly::from_terms(1, terms)]).unwrap()
}

fn point(x: &str) -> TargetElement {
    TargetElement {
        torus: vec![x.parse::<FieldScalar>().unwrap().mod1()],
        cyclic: vec![],
    }
}

fn image_set(p: &PolynomialMap, range: std::ops::Range<i64>) -> BTreeSet<TargetElement> {
    range.map(|n| p.evaluate(&SourceElement::new(&[n])).unwrap()).collect()
}

#[test]
fn predicted_cosets_of_one_variable_maps() {
    let whole = predicted_image_coset(&circle_map(&["0", "sqrt2"])).unwrap();
    assert_eq!(whole.certainty, Certainty::Exact);
    assert_eq!(whole.coset.subgroup().structure().torus_rank, 1);

    let cases: [(&[&str], &[&str]); 3] = [
        (&["0", "1/3"], &["0", "1/3", "2/3"]),
        (&["1/4", "1/2"], &["1/4", "3/4"]),
        (&["0", "0", "1/2"], &["0", "1/2"]),
    ];
    for (coeffs, atoms) in cases {
        let p = circle_map(coeffs);
        let predicted = predicted_image_coset(&p).unwrap();
        let listed: BTreeSet<TargetElement> = predicted.coset.elements().unwrap().into_iter().collect();
        let expected: BTreeSet<TargetElement> = atoms.iter().map(|a| point(a)).collect();
        assert_eq!(listed, expected, "{coeffs:?}");
        // residue oracle: the image over one full period
        assert_eq!(image_set(&p, 0..12), expected, "{coeffs:?}");
    }
}

#[test]
fn report_for_the_classical_weyl_map() {
    let p = circle_map(&["0", "sqrt2"]);
    let family = FolnerFamily::anchored(z());
    let r = equidistribution_report(&p, &family, &[1000, 100_000], 5, 1e-3, &ReportOptions::default()).unwrap();
    assert!(r.pass);
    let trivial = r.weyl.rows.iter().filter(|row| row.annihilating).count();
    assert_eq!(trivial, 2);
    assert!(r.weyl.rows.iter().filter(|row| row.n == 100_000 && !row.annihilating).all(|row| row.modulus < 1e-3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn image_lies_in_the_predicted_coset(a0 in -20i64..20, a1 in -20i64..20, a2 in -20i64..20, q in 1i64..=12) {
        let coeffs = [format!("{a0}/{q}"), format!("{a1}/{q}"), format!("{a2}/{q}")];
        let refs: Vec<&str> = coeffs.iter().map(String::as_str).collect();
        let p = circle_map(&refs);
        let predicted = predicted_image_coset(&p).unwrap();
        // period divides 2q
        let image = image_set(&p, 0..2 * q);
        prop_assert!(image.iter().all(|x| predicted.coset.contains(x)));
        let order = predicted.coset.subgroup().order().unwrap();
        prop_assert!(BigInt::from(image.len()) <= order);
        if a2 == 0 {
            prop_assert_eq!(BigInt::from(image.len()), order);
        }
    }

    #[test]
    fn annihilating_sums_are_constant(a1 in -9i64..9, a2 in -9i64..9, q in 1i64..=8, n in 1u64..300) {
        let coeffs = ["1/5".to_string(), format!("{a1}/{q}"), format!("{a2}/{q} + sqrt2")];
        let refs: Vec<&str> = coeffs.iter().map(String::as_str).collect();
        let p = circle_map(&refs);
        let predicted = predicted_image_coset(&p).unwrap();
        let family = FolnerFamily::symmetric(z());
        for chi in p.target().characters_up_to(3) {
            if predicted.coset.subgroup().annihilates(&chi) {
                let sum: Complex<f64> = weyl_sum(&p, &chi, &family, n, &SumOptions::default()).unwrap();
                let expected: Complex<f64> = p.target().char_eval(&chi, predicted.coset.base(), 15).unwrap();
                prop_assert!((sum - expected).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn orbit_map_is_the_shift_definition(g in -30i64..30, x in -5i64..5, a in -9i64..9, q in 1i64..9) {
        let coeffs = ["0".to_string(), format!("{a}/{q}"), "sqrt2".to_string()];
        let refs: Vec<&str> = coeffs.iter().map(String::as_str).collect();
        let p = circle_map(&refs);
        let points = if x == 0 { vec![0] } else { vec![0, x] };
        let w = Window::new(&z(), points.iter().map(|&k| SourceElement::new(&[k])).collect()).unwrap();
        let psi = orbit_map(&p, &w).unwrap();
        let shifted = p.shift(&SourceElement::new(&[g])).unwrap();
        let direct = window_project(&shifted, &w).unwrap().to_element();
        prop_assert_eq!(psi.evaluate(&SourceElement::new(&[g])).unwrap(), direct);
        for &k in &points {
            prop_assert_eq!(shifted.evaluate(&SourceElement::new(&[k])).unwrap(), p.evaluate(&SourceElement::new(&[k - g])).unwrap());
        }
    }
}
