use num_complex::Complex;
use num_traits::{Float, FloatConst};
use serde::Serialize;

use super::sum::CompensatedSum;
use super::{boundary_of_set, folner_average, tolerance, EquidistError, SampledFunction};
use crate::source::{FolnerFamily, SourceElement, SourceGroup};

/// Slack allowed on inequality checks.
const INEQUALITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VdcCheck<T> {
    pub lhs: T,
    pub rhs: T,
    /// `|partial_{F0} F|`.
    pub boundary: u64,
    pub holds: bool,
}

/// Both sides of the van der Corput inequality
/// `|A_F(phi)| <= (1/|F0|) sqrt(sum_{g1,g2 in F0} A_F(x -> phi(g1^-1 x) conj(phi(g2^-1 x)))) + |partial_{F0} F| / |F|`.
///
/// The double sum is real up to rounding; its real part is clamped at zero
/// before the square root.
pub fn vdc_inequality_check<T>(
    group: &SourceGroup,
    phi: &SampledFunction<T>,
    set: &[SourceElement],
    f0: &[SourceElement],
) -> Result<VdcCheck<T>, EquidistError>
where
    T: Float + FloatConst,
{
    if set.is_empty() || f0.is_empty() {
        return Err(EquidistError::EmptySet);
    }
    let lhs = folner_average(phi, set)?.norm();
    // psi[g][x] = phi(g^-1 x)
    let mut psi: Vec<Vec<Complex<T>>> = Vec::with_capacity(f0.len());
    for g in f0 {
        let g_inv = group.inverse(g)?;
        let shifted: Vec<SourceElement> = set.iter().map(|x| group.compose(&g_inv, x)).collect::<Result<_, _>>()?;
        phi.covers(&shifted)?;
        psi.push(shifted.iter().map(|y| phi.get(y).expect("covered")).collect());
    }
    let size = T::from(set.len()).expect("set size fits the float type");
    let mut double = CompensatedSum::new();
    for a in &psi {
        for b in &psi {
            let mut inner = CompensatedSum::new();
            for (u, v) in a.iter().zip(b) {
                inner.add(u * v.conj());
            }
            double.add(inner.value() / size);
        }
    }
    let root = double.value().re.max(T::zero()).sqrt();
    let (_, boundary) = boundary_of_set(group, set, f0)?;
    let rhs = root / T::from(f0.len()).expect("set size fits the float type")
        + T::from(boundary).expect("count fits the float type") / size;
    Ok(VdcCheck {
        lhs,
        rhs,
        boundary,
        holds: lhs <= rhs + T::from(INEQUALITY_SLACK).expect("small constant"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstDerivRow<T> {
    pub n: u64,
    pub set_size: u64,
    pub boundary: u64,
    /// `|A_{F_n}(Phi)|`.
    pub value: T,
    /// `|partial_g F_n| / (|F_n| |1 - z0|)`.
    pub bound: T,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstDerivReport<T> {
    pub rows: Vec<ConstDerivRow<T>>,
    pub holds: bool,
    /// Averages never increase along `n_list` and the bound shrinks.
    pub decays: bool,
}

/// Checks `|A_{F_n}(Phi)| <= |partial_g F_n| / (|F_n| |1 - z0|)` for a `Phi`
/// with `Phi(g x) conj(Phi(x)) = z0` on its sampled domain.
pub fn constant_derivative_bound_check<T>(
    group: &SourceGroup,
    phi: &SampledFunction<T>,
    gamma: &SourceElement,
    z0: Complex<T>,
    family: &FolnerFamily,
    n_list: &[u64],
) -> Result<ConstDerivReport<T>, EquidistError>
where
    T: Float + FloatConst,
{
    let gap = (Complex::new(T::one(), T::zero()) - z0).norm();
    if gap <= tolerance::<T>(1e-12) {
        return Err(EquidistError::TrivialRatio);
    }
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EquidistError::Unordered);
    }
    let slack = tolerance::<T>(1e-12);
    for (x, v) in phi.domain().iter().zip(phi.values()) {
        let gx = group.compose(gamma, x)?;
        if let Some(w) = phi.get(&gx) {
            let ratio = w * v.conj();
            if (ratio - z0).norm() > slack {
                return Err(EquidistError::Hypothesis {
                    at: x.clone(),
                    found: format!("{:?}", super::ComplexValue::from(ratio)),
                });
            }
        }
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let set = family.folner_set(n)?;
        let value = folner_average(phi, &set)?.norm();
        let counts = family.boundary_count(n, std::slice::from_ref(gamma))?;
        let size = T::from(counts.set_size).expect("size fits the float type");
        let bound = T::from(counts.union).expect("count fits the float type") / (size * gap);
        rows.push(ConstDerivRow {
            n,
            set_size: counts.set_size,
            boundary: counts.union,
            value,
            bound,
            holds: value <= bound + T::from(INEQUALITY_SLACK).expect("small constant"),
        });
    }
    let eps = tolerance::<T>(1e-12);
    let decays = rows.windows(2).all(|w| w[1].value <= w[0].value + eps)
        && rows.last().map(|r| r.bound) < rows.first().map(|r| r.bound);
    Ok(ConstDerivReport {
        holds: rows.iter().all(|r| r.holds),
        rows,
        decays,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{SQRT_2, TAU};

    fn line(lo: i64, hi: i64) -> Vec<SourceElement> {
        (lo..hi).map(|n| SourceElement::new(&[n])).collect()
    }

    fn z() -> SourceGroup {
        SourceGroup::free_abelian(1).unwrap()
    }

    #[test]
    fn vdc_examples() {
        let one = SampledFunction::<f64>::from_fn(line(-20, 120), true, |_| Complex::new(1.0, 0.0)).unwrap();
        let c = vdc_inequality_check(&z(), &one, &line(0, 100), &line(0, 10)).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-12 && c.rhs >= 1.0 && c.holds);

        let phi = SampledFunction::<f64>::from_turns(line(-30, 1000), |x| (x.coords()[0] as f64 * SQRT_2).fract()).unwrap();
        let c = vdc_inequality_check(&z(), &phi, &line(0, 1000), &line(0, 20)).unwrap();
        assert!(c.holds, "{c:?}");
        // identity: the double sum equals A_F(|sum_g phi(g^-1 x)|^2)
        let mut direct = 0.0;
        for x in 0..1000i64 {
            let s: Complex<f64> = (0..20).map(|g| phi.get(&SourceElement::new(&[x - g])).unwrap()).sum();
            direct += s.norm_sqr();
        }
        let root = (direct / 1000.0).sqrt() / 20.0;
        assert!((c.rhs - c.boundary as f64 / 1000.0 - root).abs() < 1e-9);
    }

    #[test]
    fn vdc_holds_for_random_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let phi = SampledFunction::<f64>::from_turns(line(-50, 1050), |_| 0.0).unwrap();
            let turns: Vec<f64> = (0..1100).map(|_| rng.random::<f64>()).collect();
            let phi = SampledFunction::<f64>::from_turns(phi.domain().to_vec(), |x| turns[(x.coords()[0] + 50) as usize]).unwrap();
            let k = rng.random_range(1..=10);
            let f0: Vec<SourceElement> = (0..k).map(|_| SourceElement::new(&[rng.random_range(0..50)])).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
            let c = vdc_inequality_check(&z(), &phi, &line(0, 1000), &f0).unwrap();
            assert!(c.holds, "{c:?}");
        }
    }

    #[test]
    fn vdc_on_heisenberg() {
        let h = SourceGroup::Heisenberg3;
        let fam = FolnerFamily::symmetric(h.clone());
        let set = fam.folner_set(3).unwrap();
        let domain = fam.folner_set(6).unwrap();
        let phi = SampledFunction::<f64>::from_turns(domain, |x| {
            let c = x.coords();
            ((c[2] as f64) * SQRT_2 + (c[0] * c[1]) as f64 * 0.3).fract()
        })
        .unwrap();
        let f0 = vec![h.identity(), SourceElement::new(&[1, 0, 0]), SourceElement::new(&[0, 1, 1])];
        assert!(vdc_inequality_check(&h, &phi, &set, &f0).unwrap().holds);
        let too_small = fam.folner_set(3).unwrap();
        let phi = SampledFunction::<f64>::from_turns(too_small.clone(), |_| 0.0).unwrap();
        assert!(matches!(vdc_inequality_check(&h, &phi, &too_small, &f0), Err(EquidistError::Uncovered { .. })));
    }

    #[test]
    fn constant_derivative_examples() {
        let anchored = FolnerFamily::anchored(z());
        let alt = SampledFunction::<f64>::from_turns(line(0, 2001), |x| (x.coords()[0] as f64 / 2.0).fract()).unwrap();
        let r = constant_derivative_bound_check(&z(), &alt, &SourceElement::new(&[1]), Complex::new(-1.0, 0.0), &anchored, &[10, 1000, 2000])
            .unwrap();
        assert!(r.holds);
        assert!(r.rows.iter().all(|row| row.value < 1e-12));

        let n_max = 100_000;
        let phi = SampledFunction::<f64>::from_turns(line(0, n_max + 1), |x| (x.coords()[0] % 7) as f64 / 7.0).unwrap();
        let z0 = Complex::from_polar(1.0, TAU / 7.0);
        let r = constant_derivative_bound_check(&z(), &phi, &SourceElement::new(&[1]), z0, &anchored, &[1000, 10_000, n_max as u64]).unwrap();
        assert!(r.holds && r.decays);
        for row in &r.rows {
            let nf = row.n as f64;
            let closed = (z0.powf(nf) - 1.0).norm() / (nf * (z0 - 1.0).norm());
            assert!((row.value - closed).abs() < 1e-10);
            assert!((row.bound - 2.0 / (nf * (Complex::new(1.0, 0.0) - z0).norm())).abs() < 1e-15);
        }
        assert!(r.rows[2].value < 1e-4);
    }

    #[test]
    fn constant_derivative_hypothesis_violation() {
        let anchored = FolnerFamily::anchored(z());
        let phi = SampledFunction::<f64>::from_turns(line(0, 100), |x| ((x.coords()[0] * x.coords()[0]) as f64 / 7.0).fract()).unwrap();
        let err = constant_derivative_bound_check(&z(), &phi, &SourceElement::new(&[1]), Complex::from_polar(1.0, TAU / 7.0), &anchored, &[10]);
        assert!(matches!(err, Err(EquidistError::Hypothesis { .. })));
        let err = constant_derivative_bound_check(&z(), &phi, &SourceElement::new(&[1]), Complex::new(1.0, 0.0), &anchored, &[10]);
        assert_eq!(err.unwrap_err(), EquidistError::TrivialRatio);
    }
}
