//! The bundled acceptance suite: eleven numbered criteria, each checked
//! against an independent oracle (closed forms, brute-force enumeration or
//! exact recomputation).

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use equidistlab::equidist::{weyl_sum, SumOptions};
use equidistlab::exact::{hermite_normal_form, smith_normal_form, IntMatrix, IrrationalRegistry};
use equidistlab::orbits::{
    empirical_orbit_closure, predicted_orbit_coset, unique_ergodicity_check, ErgodicityOptions, Window,
};
use equidistlab::polymaps::{
    empirical_image_closure, predicted_image_coset, value_spread, ClosureOptions, ClosureVerdict, Comparison,
    DegreeOptions, ScalarPoly,
};
use equidistlab::{
    Character, FieldScalar, FolnerFamily, PolynomialMap, SourceElement, SourceGroup, TargetElement, TargetGroup,
};
use num_bigint::BigInt;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Command, ExperimentConfig};
use crate::run::{run_experiment, ExitStatus, RunOptions};

pub const SQRT2: &str = "1.414213562373095048801688724209698078569671875376948073176679737990732";

/// Thresholds used by the criteria. [`Tolerances::scaled`] multiplies every
/// numeric threshold (not the runtime limits), so a factor of zero forces
/// the tolerance-bound criteria to fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub linear_weyl: f64,
    pub quadratic_weyl: f64,
    pub torsion_sum: f64,
    pub vdc_slack: f64,
    pub closed_form: f64,
    pub decay: f64,
    pub heisenberg_weyl: f64,
    pub frequency: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            linear_weyl: 1e-3,
            quadratic_weyl: 0.02,
            torsion_sum: 1e-6,
            vdc_slack: 1e-9,
            closed_form: 1e-10,
            decay: 1e-4,
            heisenberg_weyl: 0.01,
            frequency: 1e-2,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            linear_weyl: self.linear_weyl * factor,
            quadratic_weyl: self.quadratic_weyl * factor,
            torsion_sum: self.torsion_sum * factor,
            vdc_slack: self.vdc_slack * factor,
            closed_form: self.closed_form * factor,
            decay: self.decay * factor,
            heisenberg_weyl: self.heisenberg_weyl * factor,
            frequency: self.frequency * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} {:>2}  {:<34} {} ({:.2} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

pub const CRITERIA: [(u32, &str); 11] = [
    (1, "linear irrational Weyl sums"),
    (2, "quadratic irrational Weyl sums"),
    (3, "exact image cosets"),
    (4, "torsion discrepancy n^2/4"),
    (5, "van der Corput inequality"),
    (6, "constant-derivative bound"),
    (7, "Heisenberg polynomial"),
    (8, "orbit closure binom(n,2) mod 2"),
    (9, "orbit discrepancy n^2 mod 4"),
    (10, "HNF/SNF and duality properties"),
    (11, "bounded integer polynomials"),
];

/// Runs every criterion in order.
pub fn selftest(tol: &Tolerances, seed: u64) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|&(id, _)| run_criterion(id, tol, seed)).collect()
}

pub fn run_criterion(id: u32, tol: &Tolerances, seed: u64) -> CriterionResult {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, n)| *n)
        .unwrap_or("unknown criterion");
    let start = Instant::now();
    let outcome = match id {
        1 => linear_weyl(tol),
        2 => quadratic_weyl(tol),
        3 => exact_cosets(),
        4 => torsion_discrepancy(tol),
        5 => vdc_suite(tol, seed),
        6 => constant_derivative(tol),
        7 => heisenberg(tol, seed),
        8 => binomial_orbit(tol),
        9 => square_orbit(),
        10 => algebra_properties(seed),
        11 => bounded_polynomials(seed),
        _ => Err(format!("no criterion {id}")),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (pass, detail) = match outcome {
        Ok((pass, detail)) => (pass, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult {
        id,
        name,
        pass,
        detail,
        seconds,
    }
}

type Outcome = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn registry() -> Arc<IrrationalRegistry> {
    Arc::new(IrrationalRegistry::with_entries([("sqrt2", SQRT2)]).expect("literal is valid"))
}

fn scalar(s: &str) -> FieldScalar {
    s.parse().expect("valid scalar")
}

fn z() -> SourceGroup {
    SourceGroup::free_abelian(1).expect("rank 1")
}

/// `n -> sum_k coeffs[k] n^k` into the circle.
fn circle_map(coeffs: &[&str]) -> Result<PolynomialMap, String> {
    let terms = coeffs.iter().enumerate().map(|(k, c)| (vec![k as u32], scalar(c)));
    let target = TargetGroup::torus(1, registry()).map_err(err)?;
    PolynomialMap::from_polys(z(), target, vec![ScalarPoly::from_terms(1, terms)]).map_err(err)
}

fn cyclic_map(modulus: u64, coeffs: &[&str]) -> Result<PolynomialMap, String> {
    let terms = coeffs.iter().enumerate().map(|(k, c)| (vec![k as u32], scalar(c)));
    let target = TargetGroup::cyclic(vec![modulus]).map_err(err)?;
    PolynomialMap::from_polys(z(), target, vec![ScalarPoly::from_terms(1, terms)]).map_err(err)
}

fn torus_char(p: &PolynomialMap, m: i64) -> Result<Character, String> {
    Character::new(p.target(), vec![m], vec![]).map_err(err)
}

fn sum(p: &PolynomialMap, m: i64, family: &FolnerFamily, n: u64, threads: usize) -> Result<Complex<f64>, String> {
    let opts = SumOptions {
        threads,
        ..SumOptions::default()
    };
    weyl_sum::<f64>(p, &torus_char(p, m)?, family, n, &opts).map_err(err)
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get().min(8))
}

fn linear_weyl(tol: &Tolerances) -> Outcome {
    let start = Instant::now();
    let p = circle_map(&["0", "sqrt2"])?;
    let family = FolnerFamily::anchored(z());
    let n = 100_000u64;
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut worst = 0.0f64;
    let mut min_gap = f64::INFINITY;
    let mut within_bound = true;
    for m in (-5i64..=5).filter(|&m| m != 0) {
        let s = sum(&p, m, &family, n, 1)?.norm();
        // |sum_{k<N} e(k t)| / N = |sin(pi N t)| / (N |sin(pi t)|) <= 2 / (N |1 - e(t)|)
        let gap = (Complex::new(1.0, 0.0) - Complex::from_polar(1.0, std::f64::consts::TAU * m as f64 * sqrt2)).norm();
        within_bound &= s <= 2.0 / (n as f64 * gap) + 1e-12;
        min_gap = min_gap.min(gap);
        worst = worst.max(s);
    }
    let bound = 2.0 / (n as f64 * min_gap);
    let fast = within(start.elapsed(), 5.0);
    Ok((
        worst <= tol.linear_weyl && within_bound && fast,
        format!("max |A| = {worst:.3e} (geometric bound {bound:.3e}, limit {:.0e})", tol.linear_weyl),
    ))
}

fn quadratic_weyl(tol: &Tolerances) -> Outcome {
    let start = Instant::now();
    let p = circle_map(&["0", "0", "sqrt2"])?;
    let family = FolnerFamily::anchored(z());
    let mut values = Vec::new();
    for m in 1..=3 {
        values.push(sum(&p, m, &family, 1_000_000, 4)?.norm());
    }
    let worst = values.iter().copied().fold(0.0, f64::max);
    let fast = within(start.elapsed(), 60.0);
    Ok((
        worst <= tol.quadratic_weyl && fast,
        format!("|A| for m = 1,2,3: {:.2e} {:.2e} {:.2e}", values[0], values[1], values[2]),
    ))
}

/// The image of `p` on `0..period`, which is the whole image for periodic maps.
fn residues(p: &PolynomialMap, period: i64) -> Result<BTreeSet<TargetElement>, String> {
    (0..period)
        .map(|n| p.evaluate(&SourceElement::new(&[n])).map_err(err))
        .collect()
}

fn exact_cosets() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let whole = predicted_image_coset(&circle_map(&["0", "sqrt2"])?).map_err(err)?;
    let rank = whole.coset.subgroup().structure().torus_rank;
    ok &= rank == 1 && whole.coset.subgroup().annihilator().rank() == 0;
    notes.push(format!("sqrt2 n: torus rank {rank}"));
    let cases: [(&[&str], &str, u64); 3] = [(&["0", "1/3"], "0", 3), (&["1/4", "1/2"], "1/4", 2), (&["0", "0", "1/2"], "0", 2)];
    for (coeffs, base, order) in cases {
        let p = circle_map(coeffs)?;
        let predicted = predicted_image_coset(&p).map_err(err)?;
        let listed: BTreeSet<TargetElement> = predicted.coset.elements().map_err(err)?.into_iter().collect();
        let oracle = residues(&p, 24)?;
        let base_ok = predicted.coset.base().torus[0] == scalar(base);
        let order_ok = predicted.coset.subgroup().order() == Some(BigInt::from(order));
        ok &= base_ok && order_ok && listed == oracle;
        notes.push(format!("{}: {} atoms", p.polys().map_or(String::new(), |ps| ps[0].to_string()), listed.len()));
    }
    Ok((ok, notes.join("; ")))
}

fn torsion_config() -> String {
    r#"
command = "closure"

[source]
kind = "free_abelian"
rank = 1

[target]
torus_dim = 1

[[map.coordinates]]
terms = [{ exponents = [2], coeff = "1/4" }]
"#
    .to_string()
}

fn torsion_discrepancy(tol: &Tolerances) -> Outcome {
    let p = circle_map(&["0", "0", "1/4"])?;
    let predicted = predicted_image_coset(&p).map_err(err)?;
    let empirical = empirical_image_closure(&p, &predicted.coset, &ClosureOptions::default()).map_err(err)?;
    let atoms: BTreeSet<TargetElement> = match &empirical.verdict {
        ClosureVerdict::Finite { atoms, .. } => atoms.iter().cloned().collect(),
        ClosureVerdict::Dense { .. } => BTreeSet::new(),
    };
    let expected_atoms: BTreeSet<TargetElement> = residues(&p, 8)?;
    let config: ExperimentConfig = torsion_config().parse().map_err(err)?;
    let report = run_experiment(&config, Command::Closure, &RunOptions::default()).map_err(err)?;
    let s = sum(&p, 1, &FolnerFamily::anchored(z()), 40_000, 1)?;
    let deviation = (s - Complex::new(0.5, 0.5)).norm();
    let ok = empirical.comparison == Comparison::Mismatch
        && atoms == expected_atoms
        && atoms.len() == 2
        && predicted.coset.subgroup().order() == Some(BigInt::from(4))
        && report.status == ExitStatus::Mismatch
        && report.exit_code == 4
        && deviation <= tol.torsion_sum;
    Ok((
        ok,
        format!(
            "{} atoms vs 4 predicted, {:?}, exit {}; |A - (1+i)/2| = {deviation:.1e}",
            atoms.len(),
            empirical.comparison,
            report.exit_code
        ),
    ))
}

fn vdc_suite(tol: &Tolerances, seed: u64) -> Outcome {
    let text = r#"
[source]
kind = "free_abelian"
rank = 1

[folner]
shape = "anchored"

[vdc]
function = "random"
trials = 200
set = 1000
f0_index = 50
f0_max_size = 10
"#;
    let config: ExperimentConfig = text.parse().map_err(err)?;
    let report = run_experiment(&config, Command::Vdc, &RunOptions { seed: Some(seed), ..RunOptions::default() }).map_err(err)?;
    let crate::run::Payload::Vdc(payload) = &report.payload else {
        return Err("unexpected payload".into());
    };
    let holding = payload
        .trials
        .iter()
        .filter(|t| t.check.lhs <= t.check.rhs + tol.vdc_slack)
        .count();
    Ok((
        holding == 200 && payload.trials.len() == 200,
        format!("{holding}/200 hold, min rhs - lhs = {:.3e}", payload.min_margin),
    ))
}

fn constant_derivative(tol: &Tolerances) -> Outcome {
    use equidistlab::equidist::{constant_derivative_bound_check, SampledFunction};
    let n_list = [1_000u64, 10_000, 100_000];
    let domain: Vec<SourceElement> = (0..=100_000).map(|n| SourceElement::new(&[n])).collect();
    let phi = SampledFunction::<f64>::from_turns(domain, |x| x.coords()[0].rem_euclid(7) as f64 / 7.0).map_err(err)?;
    let z0 = Complex::from_polar(1.0, std::f64::consts::TAU / 7.0);
    let family = FolnerFamily::anchored(z());
    let report = constant_derivative_bound_check(&z(), &phi, &SourceElement::new(&[1]), z0, &family, &n_list).map_err(err)?;
    let mut ok = report.holds && report.decays;
    let mut worst_closed = 0.0f64;
    for row in &report.rows {
        let n = row.n as f64;
        let closed = (z0.powf(n) - 1.0).norm() / (n * (z0 - 1.0).norm());
        worst_closed = worst_closed.max((row.value - closed).abs());
        let bound = 2.0 / (n * (Complex::new(1.0, 0.0) - z0).norm());
        ok &= row.value <= bound;
    }
    let last = report.rows.last().map_or(f64::INFINITY, |r| r.value);
    ok &= worst_closed <= tol.closed_form && last < tol.decay;
    Ok((
        ok,
        format!(
            "|A| = {:.3e}, {:.3e}, {:.3e}; closed-form error {worst_closed:.1e}",
            report.rows[0].value, report.rows[1].value, report.rows[2].value
        ),
    ))
}

fn heisenberg(tol: &Tolerances, seed: u64) -> Outcome {
    let start = Instant::now();
    let h = SourceGroup::Heisenberg3;
    let body = ScalarPoly::from_terms(3, [(vec![0, 0, 1], scalar("sqrt2"))]);
    let p = PolynomialMap::from_polys(h.clone(), TargetGroup::torus(1, registry()).map_err(err)?, vec![body]).map_err(err)?;
    let opts = DegreeOptions {
        samples: 200,
        seed,
        ..DegreeOptions::default()
    };
    let degree = p.sampled_degree(&opts).map_err(err)?;
    let family = FolnerFamily::symmetric(h);
    let s = sum(&p, 1, &family, 30, threads())?.norm();
    // the c-sum factors out: |sum_{|c| <= 900} e(sqrt2 c)| / 1801
    let t = std::f64::consts::SQRT_2;
    let factor = ((std::f64::consts::PI * 1801.0 * t).sin() / (std::f64::consts::PI * t).sin()).abs() / 1801.0;
    let ok = degree.degree == 2 && s <= tol.heisenberg_weyl && (s - factor).abs() < 1e-9 && within(start.elapsed(), 120.0);
    Ok((ok, format!("degree {} ({} samples), |A| over F_30 = {s:.3e}", degree.degree, 200)))
}

fn window(points: &[i64]) -> Result<Window, String> {
    Window::new(&z(), points.iter().map(|&k| SourceElement::new(&[k])).collect()).map_err(err)
}

/// `{(f(x - k) mod m)_{x in W} : |k| <= 64}`.
fn orbit_oracle(f: impl Fn(i64) -> i64, m: i64, w: &[i64]) -> BTreeSet<Vec<u64>> {
    (-64..=64)
        .map(|k| w.iter().map(|&x| f(x - k).rem_euclid(m) as u64).collect())
        .collect()
}

fn binomial_orbit(tol: &Tolerances) -> Outcome {
    let p = cyclic_map(2, &["0", "-1/2", "1/2"])?;
    let points = [0, 1, 2, 3];
    let w = window(&points)?;
    let predicted = predicted_orbit_coset(&p, &w).map_err(err)?;
    let coset: BTreeSet<Vec<u64>> = predicted.coset.elements().map_err(err)?.into_iter().map(|e| e.cyclic).collect();
    let oracle = orbit_oracle(|n| n * (n - 1) / 2, 2, &points);
    let empirical = empirical_orbit_closure(&p, &w, &predicted, &ClosureOptions::default()).map_err(err)?;
    let atoms: BTreeSet<Vec<u64>> = match &empirical.verdict {
        ClosureVerdict::Finite { atoms, .. } => atoms.iter().map(|e| e.cyclic.clone()).collect(),
        ClosureVerdict::Dense { .. } => BTreeSet::new(),
    };
    let starts: Vec<SourceElement> = [0, 17, 1001].iter().map(|&k| SourceElement::new(&[k])).collect();
    let opts = ErgodicityOptions {
        tolerance: tol.frequency,
        ..ErgodicityOptions::default()
    };
    let report = unique_ergodicity_check(&p, &w, &FolnerFamily::anchored(z()), &[10_000], &starts, &opts).map_err(err)?;
    let table = report.ergodicity.ok_or("no ergodicity table")?;
    let worst = table
        .frequencies
        .as_ref()
        .map_or(f64::INFINITY, |fs| fs.iter().map(|f| f.max_deviation).fold(0.0, f64::max));
    let ok = predicted.coset.subgroup().order() == Some(BigInt::from(4))
        && coset == oracle
        && atoms == oracle
        && empirical.comparison == Comparison::Match
        && worst <= tol.frequency;
    Ok((
        ok,
        format!("{} atoms, {:?}; max frequency deviation over 3 starts {worst:.1e}", atoms.len(), empirical.comparison),
    ))
}

fn square_orbit() -> Outcome {
    let p = cyclic_map(4, &["0", "0", "1"])?;
    let points = [0, 1, 2];
    let w = window(&points)?;
    let predicted = predicted_orbit_coset(&p, &w).map_err(err)?;
    let empirical = empirical_orbit_closure(&p, &w, &predicted, &ClosureOptions::default()).map_err(err)?;
    let atoms: BTreeSet<Vec<u64>> = match &empirical.verdict {
        ClosureVerdict::Finite { atoms, .. } => atoms.iter().map(|e| e.cyclic.clone()).collect(),
        ClosureVerdict::Dense { .. } => BTreeSet::new(),
    };
    let oracle = orbit_oracle(|n| n * n, 4, &points);
    let ok = atoms == oracle
        && atoms.len() == 2
        && predicted.coset.subgroup().order() == Some(BigInt::from(4))
        && empirical.comparison == Comparison::Mismatch;
    Ok((ok, format!("{} atoms vs 4 predicted, {:?}", atoms.len(), empirical.comparison)))
}

fn random_matrix(rng: &mut ChaCha8Rng) -> IntMatrix<BigInt> {
    let (m, n) = (rng.random_range(1..=6), rng.random_range(1..=6));
    let data = (0..m * n).map(|_| BigInt::from(rng.random_range(-50i64..=50))).collect();
    IntMatrix::from_flat(m, n, data)
}

fn algebra_properties(seed: u64) -> Outcome {
    use num_integer::Integer;
    use num_traits::{Signed, Zero};
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for i in 0..200 {
        let a = random_matrix(&mut rng);
        let hnf = hermite_normal_form(&a);
        let snf = smith_normal_form(&a);
        let uav = snf.u.mul(&a).and_then(|ua| ua.mul(&snf.v)).map_err(err)?;
        let diagonal = (0..snf.d.nrows()).all(|r| (0..snf.d.ncols()).all(|c| r == c || snf.d[(r, c)].is_zero()));
        let inv = snf.invariants();
        let chain = inv.iter().all(Signed::is_positive) && inv.windows(2).all(|w| w[1].is_multiple_of(&w[0]));
        let ok = hnf.u.mul(&a).map_err(err)? == hnf.h
            && hnf.u.is_unimodular()
            && uav == snf.d
            && snf.u.is_unimodular()
            && snf.v.is_unimodular()
            && diagonal
            && chain
            && inv.len() == hnf.rank;
        if !ok {
            failures.push(format!("matrix {i}"));
        }
    }
    let mut groups = 0;
    while groups < 200 {
        let k = rng.random_range(1..=3);
        let moduli: Vec<u64> = (0..k).map(|_| rng.random_range(2..=12)).collect();
        if moduli.iter().product::<u64>() > 200 {
            continue;
        }
        groups += 1;
        let g = TargetGroup::cyclic(moduli.clone()).map_err(err)?;
        let gens: Vec<TargetElement> = (0..rng.random_range(0..=3))
            .map(|_| TargetElement {
                torus: vec![],
                cyclic: moduli.iter().map(|&n| rng.random_range(0..n)).collect(),
            })
            .collect();
        let h = g.closed_subgroup_from_generators(&gens).map_err(err)?;
        let back = g.subgroup_from_annihilator(h.annihilator().basis().to_vec()).map_err(err)?;
        let listed: BTreeSet<TargetElement> = h.elements().map_err(err)?.into_iter().collect();
        let mut closure = BTreeSet::from([g.zero()]);
        let mut frontier = vec![g.zero()];
        while let Some(x) = frontier.pop() {
            for s in &gens {
                let y = g.add(&x, s);
                if closure.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        if back != h || listed != closure {
            failures.push(format!("group {moduli:?}"));
        }
    }
    let fast = within(start.elapsed(), 30.0);
    Ok((
        failures.is_empty() && fast,
        if failures.is_empty() {
            "200 matrices, 200 finite groups".to_string()
        } else {
            format!("failures: {}", failures.join(", "))
        },
    ))
}

fn bounded_polynomials(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x11);
    let mut smallest: Option<BigInt> = None;
    for _ in 0..50 {
        let degree = rng.random_range(1..=4u32);
        let mut terms = Vec::new();
        for k in 0..=degree {
            let c = if k == degree {
                let c = rng.random_range(1..=9i64);
                if rng.random() { c } else { -c }
            } else {
                rng.random_range(-9..=9i64)
            };
            terms.push((vec![k], FieldScalar::from_integer(c)));
        }
        let p = ScalarPoly::from_terms(1, terms);
        let spread = value_spread(&p, 1024).map_err(err)?;
        if smallest.as_ref().is_none_or(|s| &spread < s) {
            smallest = Some(spread);
        }
    }
    let smallest = smallest.unwrap_or_default();
    Ok((
        smallest > BigInt::from(1000),
        format!("smallest spread over [-1024, 1024] across 50 polynomials: {smallest}"),
    ))
}
