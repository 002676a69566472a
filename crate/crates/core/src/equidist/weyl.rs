use num_complex::Complex;
use num_traits::{Float, FloatConst};
use serde::Serialize;

use super::sum::partitioned_sum;
use super::{ComplexValue, EquidistError};
use crate::polymaps::{
    empirical_image_closure, predicted_image_coset, Certainty, ClosureOptions, Comparison, EmpiricalClosure,
    PolynomialMap,
};
use crate::source::FolnerFamily;
use crate::target::{Character, Coset, CosetDescriptor, SubgroupStructure};

/// Largest number of characters a report will enumerate.
pub const MAX_CHARACTERS: u128 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SumOptions {
    /// Number of contiguous partitions summed in parallel.
    pub threads: usize,
    /// Decimal digits every phase must be accurate to.
    pub precision: u32,
}

impl Default for SumOptions {
    fn default() -> Self {
        Self {
            threads: 1,
            precision: 12,
        }
    }
}

/// `A_{F_n}(chi o P)`.
///
/// Each phase is reduced mod 1 in exact arithmetic before it is rounded, so
/// accuracy does not degrade with `|x|`; the evaluator refuses Følner sets on
/// which that guarantee fails at the requested precision.
pub fn weyl_sum<T>(
    p: &PolynomialMap,
    chi: &Character,
    family: &FolnerFamily,
    n: u64,
    opts: &SumOptions,
) -> Result<Complex<T>, EquidistError>
where
    T: Float + FloatConst + Send,
{
    if family.group() != p.source() {
        return Err(EquidistError::Source(crate::source::GroupError::GroupMismatch {
            left: family.group().to_string(),
            right: p.source().to_string(),
        }));
    }
    let len = family.check_budget(n)?;
    let ranges = family.ranges(n)?;
    let eval = p.phase_evaluator(chi, &ranges, opts.precision)?;
    let total = partitioned_sum::<T, _>(len, opts.threads, |a, b, acc| {
        for x in family.iter_range(n, a, b).expect("budget checked") {
            acc.add(eval.phase(&x).to_unit());
        }
    });
    Ok(total / T::from(len).expect("set size fits the float type"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylRow {
    pub character: Character,
    pub n: u64,
    pub sum: ComplexValue,
    pub modulus: f64,
    pub annihilating: bool,
    /// `chi(P(1))`, which every sum of an annihilating character must equal.
    pub expected: Option<ComplexValue>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylReport {
    pub rows: Vec<WeylRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquidistReport {
    pub predicted: CosetDescriptor,
    pub certainty: Certainty,
    pub structure: SubgroupStructure,
    pub closure: EmpiricalClosure,
    pub weyl: WeylReport,
    pub tolerance: f64,
    pub pass: bool,
    pub comparison: Comparison,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReportOptions {
    pub sum: SumOptions,
    pub closure: ClosureOptions,
}

/// Agreement required between an annihilating character's sum and its
/// constant value.
pub(crate) const CONSTANT_TOLERANCE: f64 = 1e-10;

/// Weyl sums of every character up to `cutoff` at every `n`, classified by
/// the predicted coset.
pub(crate) fn weyl_table(
    p: &PolynomialMap,
    coset: &Coset,
    family: &FolnerFamily,
    n_list: &[u64],
    cutoff: u32,
    tolerance: f64,
    opts: &SumOptions,
) -> Result<WeylReport, EquidistError> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EquidistError::Unordered);
    }
    let target = p.target();
    let count = target.character_count(cutoff);
    if count > MAX_CHARACTERS {
        return Err(EquidistError::TooManyCharacters {
            count,
            limit: MAX_CHARACTERS,
        });
    }
    let mut rows = Vec::new();
    for chi in target.characters_up_to(cutoff) {
        let annihilating = coset.subgroup().annihilates(&chi);
        let expected: Option<Complex<f64>> = if annihilating {
            Some(target.char_eval(&chi, coset.base(), opts.precision)?)
        } else {
            None
        };
        for &n in n_list {
            let sum: Complex<f64> = weyl_sum(p, &chi, family, n, opts)?;
            let pass = match expected {
                Some(e) => (sum - e).norm() <= CONSTANT_TOLERANCE,
                None => sum.norm() <= tolerance,
            };
            rows.push(WeylRow {
                character: chi.clone(),
                n,
                sum: sum.into(),
                modulus: sum.norm(),
                annihilating,
                expected: expected.map(Into::into),
                pass,
            });
        }
    }
    Ok(WeylReport { rows })
}

/// Predicted coset, empirical closure and Weyl sums of `P`. Passes when every
/// non-annihilating sum at the largest `n` is within `tolerance` and every
/// annihilating sum equals its constant.
pub fn equidistribution_report(
    p: &PolynomialMap,
    family: &FolnerFamily,
    n_list: &[u64],
    cutoff: u32,
    tolerance: f64,
    opts: &ReportOptions,
) -> Result<EquidistReport, EquidistError> {
    let predicted = predicted_image_coset(p)?;
    let weyl = weyl_table(p, &predicted.coset, family, n_list, cutoff, tolerance, &opts.sum)?;
    let closure = empirical_image_closure(p, &predicted.coset, &opts.closure)?;
    let last = *n_list.last().expect("checked nonempty");
    let pass = weyl.rows.iter().all(|r| r.pass || (!r.annihilating && r.n != last));
    Ok(EquidistReport {
        predicted: predicted.coset.descriptor(),
        certainty: predicted.certainty,
        structure: predicted.coset.subgroup().structure(),
        comparison: closure.comparison,
        closure,
        weyl,
        tolerance,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::exact::IrrationalRegistry;
    use crate::polymaps::ScalarPoly;
    use crate::source::SourceGroup;
    use crate::target::TargetGroup;

    const SQRT2: &str = "1.414213562373095048801688724209698078569671875376948073176679737990732";

    fn map(terms: &[(u32, &str)]) -> PolynomialMap {
        let reg = Arc::new(IrrationalRegistry::with_entries([("sqrt2", SQRT2)]).unwrap());
        let p = ScalarPoly::from_terms(1, terms.iter().map(|(k, c)| (vec![*k], c.parse().unwrap())));
        PolynomialMap::from_polys(
            SourceGroup::free_abelian(1).unwrap(),
            TargetGroup::torus(1, reg).unwrap(),
            vec![p],
        )
        .unwrap()
    }

    fn chi(p: &PolynomialMap, m: i64) -> Character {
        Character::new(p.target(), vec![m], vec![]).unwrap()
    }

    fn anchored() -> FolnerFamily {
        FolnerFamily::anchored(SourceGroup::free_abelian(1).unwrap())
    }

    #[test]
    fn weyl_sum_examples() {
        let opts = SumOptions::default();
        let p = map(&[(1, "1/3")]);
        let s: Complex<f64> = weyl_sum(&p, &chi(&p, 1), &anchored(), 3 * 1000, &opts).unwrap();
        assert!(s.norm() < 1e-12);
        for n in [7, 100, 3001] {
            let s: Complex<f64> = weyl_sum(&p, &chi(&p, 3), &anchored(), n, &opts).unwrap();
            assert!((s - Complex::new(1.0, 0.0)).norm() < 1e-12);
        }
        // direct-summation oracle: 0.00134 at N = 10^5
        let q = map(&[(2, "sqrt2")]);
        let s: Complex<f64> = weyl_sum(&q, &chi(&q, 1), &anchored(), 100_000, &opts).unwrap();
        assert!((s.norm() - 0.00134).abs() < 5e-5, "{}", s.norm());
        assert!(s.norm() <= 0.02);
    }

    #[test]
    fn threads_do_not_change_the_sum() {
        let q = map(&[(2, "sqrt2"), (1, "1/7")]);
        let one: Complex<f64> = weyl_sum(&q, &chi(&q, 2), &anchored(), 50_000, &SumOptions::default()).unwrap();
        for threads in [2, 5, 8] {
            let opts = SumOptions { threads, precision: 12 };
            let many: Complex<f64> = weyl_sum(&q, &chi(&q, 2), &anchored(), 50_000, &opts).unwrap();
            assert!((many - one).norm() < 1e-12);
            let again: Complex<f64> = weyl_sum(&q, &chi(&q, 2), &anchored(), 50_000, &opts).unwrap();
            assert_eq!(many, again);
        }
        let single: Complex<f32> = weyl_sum(&q, &chi(&q, 2), &anchored(), 50_000, &SumOptions::default()).unwrap();
        assert!((single.re as f64 - one.re).abs() < 1e-3);
    }

    #[test]
    fn precision_guard() {
        let q = map(&[(2, "sqrt2")]);
        let opts = SumOptions { threads: 1, precision: 40 };
        assert!(weyl_sum::<f64>(&q, &chi(&q, 1), &anchored(), 1_000_000, &opts).is_err());
    }

    #[test]
    fn report_examples() {
        let opts = ReportOptions::default();
        let r = equidistribution_report(&map(&[(1, "sqrt2")]), &anchored(), &[10_000, 100_000], 5, 1e-3, &opts).unwrap();
        assert!(r.pass);
        assert_eq!(r.comparison, Comparison::Match);
        assert_eq!(r.structure.torus_rank, 1);

        let r = equidistribution_report(&map(&[(1, "1/3")]), &anchored(), &[3000, 30_000], 5, 1e-3, &opts).unwrap();
        assert!(r.pass);
        assert_eq!(r.comparison, Comparison::Match);
        assert_eq!(r.structure.order(), Some(3.into()));

        let r = equidistribution_report(&map(&[(2, "1/4")]), &anchored(), &[40_000], 5, 0.05, &opts).unwrap();
        assert!(!r.pass);
        assert_eq!(r.comparison, Comparison::Mismatch);
        let m1 = r.weyl.rows.iter().find(|row| row.character.torus == vec![1]).unwrap();
        assert!((m1.sum.re - 0.5).abs() < 1e-6 && (m1.sum.im - 0.5).abs() < 1e-6);
    }

    #[test]
    fn annihilating_sums_are_constant() {
        let p = map(&[(2, "1/6"), (1, "1/2"), (0, "2/5")]);
        let pc = predicted_image_coset(&p).unwrap();
        let opts = SumOptions::default();
        for chi in p.target().characters_up_to(12) {
            if !pc.coset.subgroup().annihilates(&chi) {
                continue;
            }
            let want: Complex<f64> = p.target().char_eval(&chi, pc.coset.base(), 12).unwrap();
            for n in [1, 10, 777] {
                let got: Complex<f64> = weyl_sum(&p, &chi, &anchored(), n, &opts).unwrap();
                assert!((got - want).norm() < 1e-10);
            }
        }
    }
}
