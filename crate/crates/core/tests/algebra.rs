use equidistlab::exact::{hermite_normal_form, integer_kernel, smith_normal_form, Condition, FieldScalar, IntMatrix, Lattice};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn matrix() -> impl Strategy<Value = IntMatrix<BigInt>> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(m, n)| {
        prop::collection::vec(-50i64..=50, m * n)
            .prop_map(move |v| IntMatrix::from_flat(m, n, v.into_iter().map(BigInt::from).collect()))
    })
}

fn small_matrix_i64() -> impl Strategy<Value = IntMatrix<i64>> {
    (1usize..=4, 1usize..=4)
        .prop_flat_map(|(m, n)| prop::collection::vec(-9i64..=9, m * n).prop_map(move |v| IntMatrix::from_flat(m, n, v)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hermite_form_identities(a in matrix()) {
        let f = hermite_normal_form(&a);
        prop_assert_eq!(f.u.mul(&a).unwrap(), f.h.clone());
        prop_assert!(f.u.is_unimodular());
        for (i, &p) in f.pivots.iter().enumerate() {
            prop_assert!(f.h[(i, p)].is_positive());
            for k in 0..i {
                prop_assert!(!f.h[(k, p)].is_negative() && f.h[(k, p)] < f.h[(i, p)]);
            }
            for r in i + 1..f.h.nrows() {
                prop_assert!((0..=p).all(|c| f.h[(r, c)].is_zero()));
            }
        }
        // idempotent on its own output
        prop_assert_eq!(hermite_normal_form(&f.h).h, f.h);
    }

    #[test]
    fn smith_form_identities(a in matrix()) {
        let s = smith_normal_form(&a);
        prop_assert_eq!(s.u.mul(&a).unwrap().mul(&s.v).unwrap(), s.d.clone());
        prop_assert!(s.u.is_unimodular() && s.v.is_unimodular());
        for i in 0..s.d.nrows() {
            for j in 0..s.d.ncols() {
                prop_assert!(i == j || s.d[(i, j)].is_zero());
            }
        }
        let inv = s.invariants();
        prop_assert!(inv.iter().all(Signed::is_positive));
        prop_assert!(inv.windows(2).all(|w| w[1].is_multiple_of(&w[0])));
        // the rank is the same as the Hermite rank
        prop_assert_eq!(inv.len(), hermite_normal_form(&a).rank);
    }

    #[test]
    fn machine_integers_agree_with_big_integers(a in small_matrix_i64()) {
        let big = IntMatrix::from_rows(a.to_rows().into_iter().map(|r| r.into_iter().map(BigInt::from).collect()).collect()).unwrap();
        let small: Vec<i64> = smith_normal_form(&a).invariants();
        let large: Vec<BigInt> = smith_normal_form(&big).invariants();
        prop_assert_eq!(small.into_iter().map(BigInt::from).collect::<Vec<_>>(), large);
        let h_small = hermite_normal_form(&a).h.to_rows();
        let h_big = hermite_normal_form(&big).h.to_rows();
        prop_assert_eq!(h_small.into_iter().map(|r| r.into_iter().map(BigInt::from).collect::<Vec<_>>()).collect::<Vec<_>>(), h_big);
    }

    #[test]
    fn kernel_vectors_satisfy_the_conditions(a in matrix(), d in 1i64..=6) {
        // congruence rows (row / d) . m in Z
        let conds: Vec<Condition> = a
            .rows()
            .map(|r| Condition::congruence(r.iter().map(|x| BigRational::new(x.clone(), d.into())).collect()))
            .collect();
        let lat = integer_kernel(a.ncols(), &conds);
        for v in lat.basis() {
            for r in a.rows() {
                let dot: BigInt = r.iter().zip(v).map(|(x, y)| x * y).sum();
                prop_assert!(dot.is_multiple_of(&BigInt::from(d)));
            }
        }
        // d * e_i always satisfies them
        for i in 0..a.ncols() {
            let mut e = vec![BigInt::zero(); a.ncols()];
            e[i] = BigInt::from(d);
            prop_assert!(lat.contains(&e));
        }
    }

    #[test]
    fn lattices_are_canonical(a in matrix(), shuffle in any::<u64>()) {
        let rows = a.to_rows();
        let mut permuted = rows.clone();
        let k = permuted.len();
        permuted.rotate_left((shuffle as usize) % k);
        prop_assert_eq!(Lattice::from_generators(a.ncols(), rows), Lattice::from_generators(a.ncols(), permuted));
    }

    #[test]
    fn scalar_addition_inverts(a in -1000i64..1000, b in 1i64..50, c in -1000i64..1000, d in 1i64..50, e in -20i64..20) {
        let x: FieldScalar = format!("{a}/{b} + {e}*sqrt2").parse().unwrap();
        let y: FieldScalar = format!("{c}/{d} - 1/{b}*sqrt3").parse().unwrap();
        prop_assert_eq!(&(&x + &y) - &y, x.clone());
        prop_assert_eq!(x.mod1().mod1(), x.mod1());
        prop_assert!((&x - &x.mod1()).is_integral());
    }
}
