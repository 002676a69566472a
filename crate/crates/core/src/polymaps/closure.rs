use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use super::map::{Body, PolynomialMap};
use super::PolyError;
use crate::exact::{integer_kernel, Condition};
use crate::phase::Phase;
use crate::source::{FolnerFamily, SourceGroup};
use crate::target::{ClosedSubgroup, Coset, TargetElement};

/// Radii tried by the stabilization search for non-`Z^d` sources.
pub const STABILIZATION_RADII: [i64; 6] = [2, 4, 8, 16, 32, 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    Exact,
    /// Stabilized over growing balls; not a proof.
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictedCoset {
    pub coset: Coset,
    pub certainty: Certainty,
    /// Ball radius at which the stabilization search stopped.
    pub radius: Option<i64>,
}

/// `P(1) + G_0`, where `G_0` is the closed subgroup generated by all values
/// `Delta_g P(x)`.
///
/// On `Z^d` a character `chi` annihilates `G_0` iff `chi o P` minus its
/// constant term is integer-valued, i.e. every nonconstant binomial-basis
/// coefficient of `chi o P` is an integer. These coefficients are linear in
/// the frequencies of `chi`, so the annihilator is an integer kernel.
/// Other sources use the generators `P(y) - P(1)`, which span the same group:
/// all of them for finite sources, and growing balls until the subgroup
/// repeats for the Heisenberg group.
pub fn predicted_image_coset(p: &PolynomialMap) -> Result<PredictedCoset, PolyError> {
    let source = p.source();
    let base = p.evaluate(&source.identity())?;
    match (p.body(), source) {
        (Body::Polys(_), SourceGroup::FreeAbelian { .. }) => {
            let subgroup = exact_difference_group(p)?;
            Ok(PredictedCoset {
                coset: Coset::new(base, subgroup)?,
                certainty: Certainty::Exact,
                radius: None,
            })
        }
        (_, SourceGroup::FiniteAbelian { .. }) => {
            let elements = source.elements().expect("finite source");
            let mut h = p.target().trivial();
            for y in &elements {
                let v = p.target().sub(&p.evaluate(y)?, &base);
                h = h.join(&[v]);
            }
            Ok(PredictedCoset {
                coset: Coset::new(base, h)?,
                certainty: Certainty::Exact,
                radius: None,
            })
        }
        _ => {
            let mut h = p.target().trivial();
            let mut previous: Option<ClosedSubgroup> = None;
            let mut inner = -1i64;
            for r in STABILIZATION_RADII {
                for y in source.ball(r) {
                    if y.coords().iter().all(|c| c.abs() <= inner) {
                        continue;
                    }
                    let v = p.target().sub(&p.evaluate(&y)?, &base);
                    if !h.contains(&v) {
                        h = h.join(&[v]);
                    }
                }
                inner = r;
                if previous.as_ref() == Some(&h) {
                    return Ok(PredictedCoset {
                        coset: Coset::new(base, h)?,
                        certainty: Certainty::Heuristic,
                        radius: Some(r),
                    });
                }
                previous = Some(h.clone());
            }
            let last = h.descriptor();
            Err(PolyError::StabilizationExhausted {
                previous: Box::new(previous.map_or_else(|| last.clone(), |h| h.descriptor())),
                last: Box::new(last),
            })
        }
    }
}

fn exact_difference_group(p: &PolynomialMap) -> Result<ClosedSubgroup, PolyError> {
    let target = p.target();
    let tables = p.coordinate_tables().expect("polynomial body");
    let t = target.torus_dim();
    let keys: BTreeSet<&Vec<u32>> = tables
        .iter()
        .flat_map(|tab| tab.entries().map(|(k, _)| k))
        .filter(|k| k.iter().any(|&e| e > 0))
        .collect();
    let mut conds = Vec::new();
    for k in keys {
        // coefficient of binom(x, k) in chi o P, per unit frequency
        let column: Vec<_> = tables
            .iter()
            .enumerate()
            .map(|(i, tab)| {
                let c = tab.get(k);
                if i < t {
                    c
                } else {
                    c.scale(&BigRational::new(1.into(), BigInt::from(target.moduli()[i - t])))
                }
            })
            .collect();
        conds.push(Condition::congruence(column.iter().map(|c| c.rational_part().clone()).collect()));
        let names: BTreeSet<&String> = column.iter().flat_map(|c| c.irrational_parts().keys()).collect();
        for name in names {
            conds.push(Condition::equality(column.iter().map(|c| c.irrational_coeff(name)).collect()));
        }
    }
    let lattice = integer_kernel(target.dim(), &conds);
    Ok(target.subgroup_from_annihilator(lattice.basis().to_vec())?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureOptions {
    /// Largest Følner set that may be enumerated.
    pub budget: u128,
    /// Circle distance, in turns, at which a Haar sample counts as approached.
    pub tolerance: f64,
    pub samples: usize,
    pub seed: u64,
    /// Value sets larger than this are treated as infinite.
    pub atom_cap: usize,
    pub precision: u32,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        Self {
            budget: 100_000,
            tolerance: 1e-2,
            samples: 100,
            seed: 0,
            atom_cap: 4096,
            precision: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Comparison {
    Match,
    Mismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosureVerdict {
    /// The value set stopped growing over two doublings of the Følner index.
    Finite { atoms: Vec<TargetElement>, folner_index: u64 },
    /// Values over `F_n` came within the tolerance of the listed fraction of
    /// Haar samples from the predicted coset.
    Dense {
        folner_index: u64,
        evaluated: u128,
        samples: usize,
        approached: usize,
        worst_distance: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalClosure {
    pub verdict: ClosureVerdict,
    pub comparison: Comparison,
    /// `|predicted coset|` when finite.
    pub predicted_atoms: Option<String>,
    /// Empirical atoms outside the predicted coset (always zero for a correct
    /// prediction).
    pub outside_predicted: usize,
}

/// Finite-or-dense closure of any `x -> values(x)` over a symmetric Følner
/// exhaustion, compared against `predicted`.
pub(crate) fn empirical_closure_with<F, G>(
    family: &FolnerFamily,
    predicted: &Coset,
    opts: &ClosureOptions,
    exact: F,
    numeric: G,
) -> Result<EmpiricalClosure, PolyError>
where
    F: Fn(&crate::source::SourceElement) -> Result<TargetElement, PolyError>,
    G: Fn(u64) -> Result<Vec<Vec<Phase>>, PolyError>,
{
    let finite_source = family.group().order().is_some();
    let mut history: Vec<BTreeSet<TargetElement>> = Vec::new();
    let mut n = 1u64;
    let mut last_n = 0u64;
    loop {
        let len = family.len(n)?;
        if len > opts.budget {
            break;
        }
        let mut atoms = BTreeSet::new();
        let mut overflow = false;
        for x in family.iter(n)? {
            atoms.insert(exact(&x)?);
            if atoms.len() > opts.atom_cap {
                overflow = true;
                break;
            }
        }
        if overflow {
            break;
        }
        last_n = n;
        history.push(atoms);
        let k = history.len();
        let stable = finite_source || (k >= 3 && history[k - 1] == history[k - 2] && history[k - 2] == history[k - 3]);
        if stable {
            let atoms: Vec<TargetElement> = history.pop().expect("nonempty").into_iter().collect();
            return Ok(compare_finite(atoms, n, predicted));
        }
        n *= 2;
    }
    // dense path over the largest affordable F_n
    let mut n = last_n.max(1);
    while family.len(n * 2)? <= opts.budget {
        n *= 2;
    }
    if family.len(n)? > opts.budget {
        return Err(PolyError::Source(crate::source::GroupError::BudgetExceeded {
            cardinality: family.len(n)?,
            budget: opts.budget,
        }));
    }
    let values = numeric(n)?;
    let group = predicted.group();
    let t = group.torus_dim();
    let samples = predicted.haar_sample(opts.seed, opts.samples);
    let mut approached = 0;
    let mut worst = 0.0f64;
    for s in &samples {
        let target: Vec<Phase> = to_phases(group, s)?;
        let mut best = f64::INFINITY;
        for v in &values {
            let mut d = 0.0f64;
            for (i, (a, b)) in v.iter().zip(&target).enumerate() {
                let di = a.circle_distance(*b);
                // cyclic coordinates must agree exactly
                let di = if i >= t && di > 0.5 / group.moduli()[i - t] as f64 { f64::INFINITY } else { di };
                d = d.max(di);
                if d >= best {
                    break;
                }
            }
            best = best.min(d);
        }
        worst = worst.max(best);
        if best <= opts.tolerance {
            approached += 1;
        }
    }
    Ok(EmpiricalClosure {
        verdict: ClosureVerdict::Dense {
            folner_index: n,
            evaluated: values.len() as u128,
            samples: samples.len(),
            approached,
            worst_distance: worst,
        },
        comparison: if approached == samples.len() {
            Comparison::Match
        } else {
            Comparison::Mismatch
        },
        predicted_atoms: predicted.subgroup().order().map(|o| o.to_string()),
        outside_predicted: 0,
    })
}

fn compare_finite(atoms: Vec<TargetElement>, n: u64, predicted: &Coset) -> EmpiricalClosure {
    let outside = atoms.iter().filter(|a| !predicted.contains(a)).count();
    let order = predicted.subgroup().order();
    let matches = outside == 0 && order.as_ref() == Some(&BigInt::from(atoms.len()));
    EmpiricalClosure {
        verdict: ClosureVerdict::Finite { atoms, folner_index: n },
        comparison: if matches { Comparison::Match } else { Comparison::Mismatch },
        predicted_atoms: order.map(|o| o.to_string()),
        outside_predicted: outside,
    }
}

fn to_phases(group: &crate::target::TargetGroup, x: &TargetElement) -> Result<Vec<Phase>, PolyError> {
    let mut out = Vec::with_capacity(group.dim());
    for t in &x.torus {
        out.push(Phase::from_scalar(t, group.registry())?);
    }
    for (&c, &n) in x.cyclic.iter().zip(group.moduli()) {
        out.push(Phase::from_rational(&BigRational::new(c.into(), n.into())));
    }
    Ok(out)
}

/// Image closure of `P` over the symmetric Følner exhaustion of its source,
/// with a MATCH/MISMATCH comparison against the predicted coset.
pub fn empirical_image_closure(
    p: &PolynomialMap,
    predicted: &Coset,
    opts: &ClosureOptions,
) -> Result<EmpiricalClosure, PolyError> {
    let family = FolnerFamily::symmetric(p.source().clone());
    empirical_closure_with(
        &family,
        predicted,
        opts,
        |x| p.evaluate(x),
        |n| {
            let ranges = family.ranges(n)?;
            let evals = p.coordinate_evaluators(&ranges, opts.precision)?;
            Ok(family.iter(n)?.map(|x| evals.iter().map(|e| e.phase(&x)).collect()).collect())
        },
    )
}
