//! Finite-window views of the shift orbit of a polynomial map.
//!
//! For a window `W` the orbit map `Psi(g) = (P(g^-1 x))_{x in W}` is itself a
//! polynomial map into `G^W`, whose coordinates are laid out window-major:
//! all torus coordinates first, then all cyclic ones. Orbit closures and
//! ergodic averages are then image closures and Weyl sums of `Psi`.

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use serde::Serialize;
use thiserror::Error;

use crate::equidist::{weyl_table, EquidistError, SumOptions, WeylReport, WeylRow};
use crate::polymaps::{
    empirical_image_closure, predicted_image_coset, Body, Certainty, ClosureOptions, ClosureVerdict, Comparison,
    Degree, DegreeOptions, EmpiricalClosure, PolyError, PolynomialMap, PredictedCoset, RatPoly, ScalarPoly,
};
use crate::source::{FolnerFamily, GroupError, SourceElement, SourceGroup};
use crate::target::{CosetDescriptor, SubgroupStructure, TargetElement, TargetError, TargetGroup};

/// Ball radius of [`Window::default_for`].
pub const DEFAULT_WINDOW_RADIUS: i64 = 3;

/// Largest predicted coset whose atoms get exact frequency counts.
pub const MAX_FREQUENCY_ATOMS: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrbitError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Equidist(#[from] EquidistError),
    #[error(transparent)]
    Source(#[from] GroupError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error("invalid window: {0}")]
    Window(String),
    #[error("start points must be distinct and nonempty")]
    Starts,
}

/// A finite set of source elements containing the identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Window {
    elements: Vec<SourceElement>,
}

impl Window {
    pub fn new(group: &SourceGroup, elements: Vec<SourceElement>) -> Result<Self, OrbitError> {
        if elements.is_empty() {
            return Err(OrbitError::Window("empty".into()));
        }
        let mut seen = HashSet::new();
        let mut canonical = Vec::with_capacity(elements.len());
        for g in &elements {
            let g = group.element(g.coords())?;
            if !seen.insert(g.clone()) {
                return Err(OrbitError::Window(format!("duplicate element {g}")));
            }
            canonical.push(g);
        }
        if !seen.contains(&group.identity()) {
            return Err(OrbitError::Window("missing the identity".into()));
        }
        Ok(Self { elements: canonical })
    }

    pub fn ball(group: &SourceGroup, radius: i64) -> Result<Self, OrbitError> {
        Self::new(group, group.ball(radius.max(0)))
    }

    pub fn default_for(group: &SourceGroup) -> Result<Self, OrbitError> {
        Self::ball(group, DEFAULT_WINDOW_RADIUS)
    }

    pub fn elements(&self) -> &[SourceElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// One target value per window element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct WindowedConfiguration {
    pub values: Vec<TargetElement>,
}

impl WindowedConfiguration {
    /// The same configuration as an element of `G^W`.
    pub fn to_element(&self) -> TargetElement {
        TargetElement {
            torus: self.values.iter().flat_map(|v| v.torus.iter().cloned()).collect(),
            cyclic: self.values.iter().flat_map(|v| v.cyclic.iter().copied()).collect(),
        }
    }

    /// Splits an element of `G^W` back into window components.
    pub fn from_element(group: &TargetGroup, x: &TargetElement) -> Self {
        let (t, c) = (group.torus_dim(), group.moduli().len());
        let k = (x.torus.len() + x.cyclic.len()).checked_div(t + c).unwrap_or(0);
        let values = (0..k)
            .map(|i| TargetElement {
                torus: x.torus[i * t..(i + 1) * t].to_vec(),
                cyclic: x.cyclic[i * c..(i + 1) * c].to_vec(),
            })
            .collect();
        Self { values }
    }
}

/// `(P(x))_{x in W}`.
pub fn window_project(p: &PolynomialMap, window: &Window) -> Result<WindowedConfiguration, OrbitError> {
    let values = window.elements().iter().map(|x| p.evaluate(x)).collect::<Result<_, _>>()?;
    Ok(WindowedConfiguration { values })
}

/// `sigma_g P (x) = P(g^-1 x)`.
pub fn shift(p: &PolynomialMap, g: &SourceElement) -> Result<PolynomialMap, OrbitError> {
    Ok(p.shift(g)?)
}

/// The orbit map `g -> window_project(sigma_g P, W)` as a map into `G^W`.
pub fn orbit_map(p: &PolynomialMap, window: &Window) -> Result<PolynomialMap, OrbitError> {
    let source = p.source().clone();
    for x in window.elements() {
        source.check(x)?;
    }
    let target = p.target().power(window.len())?;
    let t = p.target().torus_dim();
    let map = match p.body() {
        Body::Polys(polys) => {
            let d = source.arity();
            let substitutions: Vec<Vec<RatPoly>> = window.elements().iter().map(|x| inverse_times(&source, x, d)).collect();
            let shifted: Vec<Vec<ScalarPoly>> = substitutions
                .iter()
                .map(|subs| polys.iter().map(|q| q.substitute(subs)).collect())
                .collect();
            let mut coords = Vec::with_capacity(target.dim());
            for s in &shifted {
                coords.extend(s[..t].iter().cloned());
            }
            for s in &shifted {
                coords.extend(s[t..].iter().cloned());
            }
            PolynomialMap::from_polys(source, target, coords)?
        }
        Body::Table(_) => {
            let err = std::cell::RefCell::new(None);
            let map = PolynomialMap::from_fn(source.clone(), target, |g| {
                let g_inv = source.inverse(g).expect("element of the source");
                let values = window
                    .elements()
                    .iter()
                    .map(|x| p.evaluate(&source.compose(&g_inv, x).expect("element of the source")))
                    .collect::<Result<Vec<_>, _>>();
                match values {
                    Ok(values) => WindowedConfiguration { values }.to_element(),
                    Err(e) => {
                        *err.borrow_mut() = Some(e);
                        TargetElement {
                            torus: Vec::new(),
                            cyclic: Vec::new(),
                        }
                    }
                }
            });
            if let Some(e) = err.into_inner() {
                return Err(e.into());
            }
            map?
        }
    };
    Ok(map)
}

/// Coordinates of `g^-1 x` as polynomials in the coordinates of `g`.
fn inverse_times(source: &SourceGroup, x: &SourceElement, d: usize) -> Vec<RatPoly> {
    let c = x.coords();
    let var = |i| RatPoly::var(d, i);
    let int = |k| RatPoly::int(d, k);
    match source {
        // (-a, -b, ab - c) * (xa, xb, xc) = (xa - a, xb - b, ab - c + xc - a xb)
        SourceGroup::Heisenberg3 => vec![
            int(c[0]).sub(&var(0)),
            int(c[1]).sub(&var(1)),
            var(0)
                .mul_rat(&var(1))
                .sub(&var(2))
                .add(&int(c[2]))
                .sub(&var(0).scale(&BigInt::from(c[1]).into())),
        ],
        _ => (0..d).map(|i| int(c[i]).sub(&var(i))).collect(),
    }
}

/// The predicted closure of `{window_project(sigma_g P, W)}`: the image coset
/// of the orbit map.
pub fn predicted_orbit_coset(p: &PolynomialMap, window: &Window) -> Result<PredictedCoset, OrbitError> {
    Ok(predicted_image_coset(&orbit_map(p, window)?)?)
}

/// Enumerates the windowed orbit over a Følner exhaustion and compares it with
/// `predicted`.
pub fn empirical_orbit_closure(
    p: &PolynomialMap,
    window: &Window,
    predicted: &PredictedCoset,
    opts: &ClosureOptions,
) -> Result<EmpiricalClosure, OrbitError> {
    Ok(empirical_image_closure(&orbit_map(p, window)?, &predicted.coset, opts)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitDegree {
    /// Degree of the orbit map.
    pub orbit: Degree,
    /// Degree of `P` itself.
    pub map: Degree,
    pub agrees: bool,
}

/// Degree of `g -> window_project(sigma_g P, W)` next to the degree of `P`.
pub fn orbit_polynomiality_check(
    p: &PolynomialMap,
    window: &Window,
    opts: &DegreeOptions,
) -> Result<OrbitDegree, OrbitError> {
    let psi = orbit_map(p, window)?;
    let orbit = psi.sampled_degree(opts)?;
    let map = p.sampled_degree(opts)?;
    Ok(OrbitDegree {
        agrees: orbit.degree == map.degree,
        orbit,
        map,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityRow {
    pub start: SourceElement,
    #[serde(flatten)]
    pub row: WeylRow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomFrequency {
    pub atom: WindowedConfiguration,
    pub count: u64,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartFrequencies {
    pub start: SourceElement,
    pub n: u64,
    pub atoms: Vec<AtomFrequency>,
    /// `max |frequency - 1/|coset||`.
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityTable {
    pub rows: Vec<ErgodicityRow>,
    /// Largest difference between two starts' averages of one character at
    /// the largest `n`.
    pub start_spread: f64,
    /// Exact atom counts, present when the predicted coset is small and finite.
    pub frequencies: Option<Vec<StartFrequencies>>,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitReport {
    pub window: Vec<SourceElement>,
    pub base: WindowedConfiguration,
    pub predicted: CosetDescriptor,
    pub certainty: Certainty,
    pub structure: SubgroupStructure,
    pub empirical: Option<EmpiricalClosure>,
    pub comparison: Option<Comparison>,
    pub degree: Option<OrbitDegree>,
    pub ergodicity: Option<ErgodicityTable>,
}

impl OrbitReport {
    fn new(p: &PolynomialMap, window: &Window, predicted: &PredictedCoset) -> Self {
        Self {
            window: window.elements().to_vec(),
            base: WindowedConfiguration::from_element(p.target(), predicted.coset.base()),
            predicted: predicted.coset.descriptor(),
            certainty: predicted.certainty,
            structure: predicted.coset.subgroup().structure(),
            empirical: None,
            comparison: None,
            degree: None,
            ergodicity: None,
        }
    }

    /// Empirical atoms of the orbit closure, when it was found finite.
    pub fn atoms(&self) -> Option<&[TargetElement]> {
        match &self.empirical.as_ref()?.verdict {
            ClosureVerdict::Finite { atoms, .. } => Some(atoms),
            ClosureVerdict::Dense { .. } => None,
        }
    }
}

/// Predicted orbit coset, empirical orbit closure and orbit degree.
pub fn orbit_report(
    p: &PolynomialMap,
    window: &Window,
    closure: &ClosureOptions,
    degree: &DegreeOptions,
) -> Result<OrbitReport, OrbitError> {
    let predicted = predicted_orbit_coset(p, window)?;
    let mut report = OrbitReport::new(p, window, &predicted);
    let empirical = empirical_orbit_closure(p, window, &predicted, closure)?;
    report.comparison = Some(empirical.comparison);
    report.empirical = Some(empirical);
    report.degree = Some(orbit_polynomiality_check(p, window, degree)?);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicityOptions {
    pub cutoff: u32,
    pub tolerance: f64,
    pub sum: SumOptions,
}

impl Default for ErgodicityOptions {
    fn default() -> Self {
        Self {
            cutoff: 1,
            tolerance: 1e-2,
            sum: SumOptions::default(),
        }
    }
}

/// Averages every window character along `g -> Psi(g t)` over `F_n` for each
/// start `t`.
///
/// Passes when every character meets its target at every `n` (zero within
/// the tolerance off the annihilator, the exact constant on it), the starts
/// agree within the tolerance at the largest `n`, and, for small finite
/// cosets, every atom's frequency is within the tolerance of uniform.
pub fn unique_ergodicity_check(
    p: &PolynomialMap,
    window: &Window,
    family: &FolnerFamily,
    n_list: &[u64],
    starts: &[SourceElement],
    opts: &ErgodicityOptions,
) -> Result<OrbitReport, OrbitError> {
    let source = p.source();
    if family.group() != source {
        return Err(GroupError::GroupMismatch {
            left: family.group().to_string(),
            right: source.to_string(),
        }
        .into());
    }
    let starts: Vec<SourceElement> = starts.iter().map(|s| source.element(s.coords())).collect::<Result<_, _>>()?;
    if starts.is_empty() || starts.iter().collect::<HashSet<_>>().len() != starts.len() {
        return Err(OrbitError::Starts);
    }
    let psi = orbit_map(p, window)?;
    let predicted = predicted_image_coset(&psi)?;
    let mut report = OrbitReport::new(p, window, &predicted);

    let mut rows = Vec::new();
    let mut at_last: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let last_n = n_list.last().copied();
    for t in &starts {
        let moved = psi.right_translate(t)?;
        let WeylReport { rows: table } =
            weyl_table(&moved, &predicted.coset, family, n_list, opts.cutoff, opts.tolerance, &opts.sum)?;
        for row in table {
            if Some(row.n) == last_n {
                at_last
                    .entry(format!("{:?}", row.character))
                    .or_default()
                    .push((row.sum.re, row.sum.im));
            }
            rows.push(ErgodicityRow { start: t.clone(), row });
        }
    }
    let start_spread = at_last
        .values()
        .flat_map(|v| {
            v.iter()
                .flat_map(move |a| v.iter().map(move |b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()))
        })
        .fold(0.0, f64::max);

    let order = predicted.coset.subgroup().order();
    let small = order.as_ref().is_some_and(|o| *o <= BigInt::from(MAX_FREQUENCY_ATOMS));
    let frequencies = match (small, last_n) {
        (true, Some(n)) => {
            let order = order.expect("finite").to_string().parse::<f64>().expect("small order");
            let mut out = Vec::new();
            for t in &starts {
                out.push(atom_frequencies(&psi, p.target(), family, n, t, order)?);
            }
            Some(out)
        }
        _ => None,
    };
    let pass = rows.iter().all(|r| r.row.pass)
        && start_spread <= opts.tolerance
        && frequencies
            .as_ref()
            .is_none_or(|fs| fs.iter().all(|f| f.max_deviation <= opts.tolerance));
    report.ergodicity = Some(ErgodicityTable {
        rows,
        start_spread,
        frequencies,
        tolerance: opts.tolerance,
        pass,
    });
    Ok(report)
}

fn atom_frequencies(
    psi: &PolynomialMap,
    target: &TargetGroup,
    family: &FolnerFamily,
    n: u64,
    start: &SourceElement,
    order: f64,
) -> Result<StartFrequencies, OrbitError> {
    let source = psi.source();
    let size = family.check_budget(n)? as u64;
    let mut counts: BTreeMap<TargetElement, u64> = BTreeMap::new();
    for g in family.iter(n)? {
        let v = psi.evaluate(&source.compose(&g, start)?)?;
        *counts.entry(v).or_default() += 1;
    }
    let atoms: Vec<AtomFrequency> = counts
        .into_iter()
        .map(|(v, count)| AtomFrequency {
            atom: WindowedConfiguration::from_element(target, &v),
            count,
            frequency: count as f64 / size as f64,
        })
        .collect();
    let uniform = 1.0 / order;
    // atoms never reached count as frequency zero
    let missing = if (atoms.len() as f64) < order { uniform } else { 0.0 };
    let max_deviation = atoms
        .iter()
        .map(|a| (a.frequency - uniform).abs())
        .fold(missing, f64::max);
    Ok(StartFrequencies {
        start: start.clone(),
        n,
        atoms,
        max_deviation,
    })
}
