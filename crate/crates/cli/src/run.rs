//! Dispatch of one experiment and its JSON / CSV outputs.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use equidistlab::equidist::{
    constant_derivative_bound_check, equidistribution_report, homomorphism_uniformity_report, vdc_inequality_check,
    ConstDerivReport, EquidistReport, Homomorphism, ReportOptions, SampledFunction, SumOptions, UniformityReport,
    VdcCheck,
};
use equidistlab::orbits::{orbit_report, unique_ergodicity_check, ErgodicityOptions, OrbitReport};
use equidistlab::polymaps::{
    empirical_image_closure, predicted_image_coset, Certainty, ClosureOptions, Comparison, DegreeOptions,
    EmpiricalClosure,
};
use equidistlab::target::{CosetDescriptor, SubgroupStructure};
use equidistlab::{Character, PolynomialMap, SourceElement, SourceGroup};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Command, ExperimentConfig, VdcFunction, VdcSpec};
use crate::CliError;

pub const SCHEMA: &str = "equidistlab/1";

/// Default decimal places for numeric phase evaluation.
pub const DEFAULT_PRECISION: u32 = 12;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Pass,
    /// A numeric tolerance was not met.
    Fail,
    /// Bad flags, unreadable or invalid config, or an input the library rejects.
    Usage,
    /// A Følner set, stabilization search or character list exceeded its budget.
    Budget,
    /// The empirical closure disagrees with the predicted coset.
    Mismatch,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            Self::Pass => 0,
            Self::Fail => 1,
            Self::Usage => 2,
            Self::Budget => 3,
            Self::Mismatch => 4,
        }
    }

    /// A mismatch outranks a tolerance failure.
    pub fn from_outcome(pass: bool, mismatch: bool) -> Self {
        if mismatch {
            Self::Mismatch
        } else if pass {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

/// Command-line overrides of config fields.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub precision: Option<u32>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosurePayload {
    pub predicted: CosetDescriptor,
    pub certainty: Certainty,
    pub structure: SubgroupStructure,
    pub stabilization_radius: Option<i64>,
    pub empirical: EmpiricalClosure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VdcTrial {
    pub f0: Vec<SourceElement>,
    #[serde(flatten)]
    pub check: VdcCheck<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VdcPayload {
    pub set_size: usize,
    pub trials: Vec<VdcTrial>,
    /// `min(rhs - lhs)` over all trials.
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstDerivPayload {
    pub gamma: SourceElement,
    pub z0: (f64, f64),
    #[serde(flatten)]
    pub report: ConstDerivReport<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomoPayload {
    pub group_order: usize,
    pub reports: Vec<UniformityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Payload {
    Weyl(Box<EquidistReport>),
    Closure(Box<ClosurePayload>),
    Vdc(VdcPayload),
    ConstDeriv(ConstDerivPayload),
    Homo(HomoPayload),
    Orbit(Box<OrbitReport>),
}

/// A CSV table written next to the JSON report.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub command: Command,
    pub config: ExperimentConfig,
    pub pass: bool,
    pub mismatch: bool,
    pub status: ExitStatus,
    pub exit_code: i32,
    pub summary: String,
    pub payload: Payload,
    #[serde(skip)]
    pub tables: Vec<Table>,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

struct Outcome {
    pass: bool,
    mismatch: bool,
    summary: String,
    payload: Payload,
    tables: Vec<Table>,
}

/// Runs `command` on `config` after applying `opts`.
pub fn run_experiment(config: &ExperimentConfig, command: Command, opts: &RunOptions) -> Result<RunReport, CliError> {
    if let Some(c) = config.command {
        if c != command {
            return Err(CliError::Config(format!(
                "config is for `{}` but `{}` was requested",
                c.name(),
                command.name()
            )));
        }
    }
    let mut config = config.clone();
    config.command = Some(command);
    if opts.threads.is_some() {
        config.threads = opts.threads;
    }
    if opts.precision.is_some() {
        config.precision = opts.precision;
    }
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if config.threads == Some(0) {
        return Err(CliError::Config("threads: must be at least 1".into()));
    }
    let start = Instant::now();
    let outcome = match command {
        Command::Weyl => run_weyl(&config)?,
        Command::Closure => run_closure(&config)?,
        Command::Vdc => run_vdc(&config)?,
        Command::Constderiv => run_constderiv(&config)?,
        Command::Homo => run_homo(&config)?,
        Command::Orbit => run_orbit(&config)?,
        Command::Ergodic => run_ergodic(&config)?,
    };
    let status = ExitStatus::from_outcome(outcome.pass, outcome.mismatch);
    Ok(RunReport {
        schema: SCHEMA,
        command,
        config,
        pass: outcome.pass,
        mismatch: outcome.mismatch,
        status,
        exit_code: status.code(),
        summary: outcome.summary,
        payload: outcome.payload,
        tables: outcome.tables,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Writes `report.json` and one CSV per table into `dir`.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report.to_json() + "\n")?;
    for t in &report.tables {
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", t.name))).map_err(csv_error)?;
        w.write_record(&t.header).map_err(csv_error)?;
        for row in &t.rows {
            w.write_record(row).map_err(csv_error)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e.to_string()))
}

fn sum_options(config: &ExperimentConfig) -> SumOptions {
    SumOptions {
        threads: config.threads.unwrap_or(1),
        precision: config.precision.unwrap_or(DEFAULT_PRECISION),
    }
}

fn closure_options(config: &ExperimentConfig) -> ClosureOptions {
    let defaults = ClosureOptions::default();
    ClosureOptions {
        budget: config.budget.map_or(defaults.budget, u128::from),
        seed: config.seed,
        precision: config.precision.unwrap_or(DEFAULT_PRECISION),
        ..defaults
    }
}

fn degree_options(config: &ExperimentConfig) -> DegreeOptions {
    let defaults = DegreeOptions::default();
    match &config.degree {
        Some(d) => DegreeOptions {
            d_max: d.d_max,
            samples: d.samples,
            seed: config.seed,
        },
        None => DegreeOptions {
            seed: config.seed,
            ..defaults
        },
    }
}

fn character_label(chi: &Character) -> String {
    let join = |v: &[i64]| v.iter().map(i64::to_string).collect::<Vec<_>>().join(" ");
    if chi.cyclic.is_empty() {
        format!("[{}]", join(&chi.torus))
    } else {
        format!("[{} | {}]", join(&chi.torus), join(&chi.cyclic))
    }
}

fn run_weyl(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = config.polynomial_map()?;
    let family = config.family()?;
    let tolerance = config.tolerance()?;
    let opts = ReportOptions {
        sum: sum_options(config),
        closure: closure_options(config),
    };
    let report = equidistribution_report(&p, &family, config.n_list()?, config.char_cutoff, tolerance, &opts)?;
    let rows = report
        .weyl
        .rows
        .iter()
        .map(|r| {
            vec![
                character_label(&r.character),
                r.n.to_string(),
                format!("{:e}", r.modulus),
                r.annihilating.to_string(),
                r.pass.to_string(),
            ]
        })
        .collect();
    let failing = report.weyl.rows.iter().filter(|r| !r.pass).count();
    let summary = format!(
        "{} Weyl sums, {failing} outside tolerance {tolerance:e}; closure {:?}",
        report.weyl.rows.len(),
        report.comparison
    );
    Ok(Outcome {
        pass: report.pass,
        mismatch: report.comparison == Comparison::Mismatch,
        summary,
        payload: Payload::Weyl(Box::new(report)),
        tables: vec![Table {
            name: "weyl",
            header: vec!["character", "n", "modulus", "annihilating", "pass"],
            rows,
        }],
    })
}

fn run_closure(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = config.polynomial_map()?;
    let predicted = predicted_image_coset(&p)?;
    let empirical = empirical_image_closure(&p, &predicted.coset, &closure_options(config))?;
    let mismatch = empirical.comparison == Comparison::Mismatch;
    let summary = format!(
        "predicted coset of order {}, empirical closure {:?}",
        predicted.coset.subgroup().order().map_or("infinite".to_string(), |o| o.to_string()),
        empirical.comparison
    );
    Ok(Outcome {
        pass: !mismatch,
        mismatch,
        summary,
        payload: Payload::Closure(Box::new(ClosurePayload {
            predicted: predicted.coset.descriptor(),
            certainty: predicted.certainty,
            structure: predicted.coset.subgroup().structure(),
            stabilization_radius: predicted.radius,
            empirical,
        })),
        tables: Vec::new(),
    })
}

/// All points `g^-1 x` with `g` in `f0` and `x` in `set`, sorted.
fn shifted_domain(group: &SourceGroup, set: &[SourceElement], f0: &[SourceElement]) -> Result<Vec<SourceElement>, CliError> {
    let mut domain: BTreeSet<SourceElement> = set.iter().cloned().collect();
    for g in f0 {
        let g_inv = group.inverse(g)?;
        for x in set {
            domain.insert(group.compose(&g_inv, x)?);
        }
    }
    Ok(domain.into_iter().collect())
}

fn map_function(
    p: &PolynomialMap,
    chi: &Character,
    domain: Vec<SourceElement>,
    precision: u32,
) -> Result<SampledFunction<f64>, CliError> {
    let target = p.target();
    let values = domain
        .iter()
        .map(|x| Ok(target.char_eval::<f64>(chi, &p.evaluate(x)?, precision)?))
        .collect::<Result<Vec<Complex<f64>>, CliError>>()?;
    Ok(SampledFunction::new(domain, values, true)?)
}

fn run_vdc(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let spec: &VdcSpec = config.vdc.as_ref().ok_or_else(|| CliError::Config("vdc: section required".into()))?;
    let family = config.family()?;
    let group = family.group().clone();
    let set = family.folner_set(spec.set)?;
    let precision = config.precision.unwrap_or(DEFAULT_PRECISION);
    let map = match spec.function {
        VdcFunction::Map => {
            let chi_spec = spec
                .character
                .as_ref()
                .ok_or_else(|| CliError::Config("vdc.character: required when function = \"map\"".into()))?;
            let p = config.polynomial_map()?;
            let chi = config.character(p.target(), chi_spec, "vdc.character")?;
            Some((p, chi))
        }
        VdcFunction::Random => None,
    };
    let explicit = match &spec.f0 {
        Some(points) => Some(
            points
                .iter()
                .map(|c| config.element(&group, c, "vdc.f0"))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    let pool = match (&explicit, spec.f0_index) {
        (Some(_), _) => Vec::new(),
        (None, Some(k)) => family.folner_set(k)?,
        (None, None) => return Err(CliError::Config("vdc: give `f0` or `f0_index`".into())),
    };
    if spec.trials == 0 || spec.f0_max_size == 0 {
        return Err(CliError::Config("vdc: trials and f0_max_size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trials = Vec::with_capacity(spec.trials);
    for _ in 0..spec.trials {
        let f0 = match &explicit {
            Some(f0) => f0.clone(),
            None => {
                let k = rng.random_range(1..=spec.f0_max_size.min(pool.len()));
                sample_subset(&mut rng, &pool, k)
            }
        };
        let domain = shifted_domain(&group, &set, &f0)?;
        let phi = match &map {
            Some((p, chi)) => map_function(p, chi, domain, precision)?,
            None => {
                let turns: Vec<f64> = domain.iter().map(|_| rng.random::<f64>()).collect();
                let values = turns
                    .iter()
                    .map(|t| Complex::from_polar(1.0, std::f64::consts::TAU * t))
                    .collect();
                SampledFunction::new(domain, values, true)?
            }
        };
        let check = vdc_inequality_check(&group, &phi, &set, &f0)?;
        trials.push(VdcTrial { f0, check });
    }
    let min_margin = trials.iter().map(|t| t.check.rhs - t.check.lhs).fold(f64::INFINITY, f64::min);
    let pass = trials.iter().all(|t| t.check.holds);
    let rows = trials
        .iter()
        .enumerate()
        .map(|(i, t)| {
            vec![
                i.to_string(),
                t.f0.len().to_string(),
                format!("{:e}", t.check.lhs),
                format!("{:e}", t.check.rhs),
                t.check.boundary.to_string(),
                t.check.holds.to_string(),
            ]
        })
        .collect();
    let holding = trials.iter().filter(|t| t.check.holds).count();
    Ok(Outcome {
        pass,
        mismatch: false,
        summary: format!("inequality holds in {holding} of {} trials, min margin {min_margin:e}", trials.len()),
        payload: Payload::Vdc(VdcPayload {
            set_size: set.len(),
            trials,
            min_margin,
        }),
        tables: vec![Table {
            name: "vdc",
            header: vec!["trial", "f0_size", "lhs", "rhs", "boundary", "holds"],
            rows,
        }],
    })
}

/// `k` distinct elements of `pool`, sorted by position.
fn sample_subset(rng: &mut ChaCha8Rng, pool: &[SourceElement], k: usize) -> Vec<SourceElement> {
    let mut chosen = BTreeSet::new();
    while chosen.len() < k {
        chosen.insert(rng.random_range(0..pool.len()));
    }
    chosen.into_iter().map(|i| pool[i].clone()).collect()
}

fn run_constderiv(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let spec = config
        .constderiv
        .as_ref()
        .ok_or_else(|| CliError::Config("constderiv: section required".into()))?;
    let p = config.polynomial_map()?;
    let family = config.family()?;
    let group = family.group().clone();
    let gamma = config.element(&group, &spec.gamma, "constderiv.gamma")?;
    let chi = config.character(p.target(), &spec.character, "constderiv.character")?;
    let n_list = config.n_list()?;
    let largest = family.folner_set(*n_list.last().expect("nonempty"))?;
    let mut domain: BTreeSet<SourceElement> = largest.iter().cloned().collect();
    for x in &largest {
        domain.insert(group.compose(&gamma, x)?);
    }
    let phi = map_function(&p, &chi, domain.into_iter().collect(), config.precision.unwrap_or(DEFAULT_PRECISION))?;
    let z0 = Complex::from_polar(1.0, std::f64::consts::TAU * spec.z0_turns.to_f64());
    let report = constant_derivative_bound_check(&group, &phi, &gamma, z0, &family, n_list)?;
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.set_size.to_string(),
                r.boundary.to_string(),
                format!("{:e}", r.value),
                format!("{:e}", r.bound),
                r.holds.to_string(),
            ]
        })
        .collect();
    let pass = report.holds && (report.rows.len() < 2 || report.decays);
    Ok(Outcome {
        pass,
        mismatch: false,
        summary: format!("bound holds: {}, decays: {}", report.holds, report.decays),
        payload: Payload::ConstDeriv(ConstDerivPayload {
            gamma,
            z0: (z0.re, z0.im),
            report,
        }),
        tables: vec![Table {
            name: "constderiv",
            header: vec!["n", "set_size", "boundary", "value", "bound", "holds"],
            rows,
        }],
    })
}

fn run_homo(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let spec = config.homo.as_ref().ok_or_else(|| CliError::Config("homo: section required".into()))?;
    let group = spec.group.build()?;
    let images = spec
        .images
        .iter()
        .map(|l| {
            group
                .index_of(l)
                .ok_or_else(|| CliError::Config(format!("homo.images: unknown element {l:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let family = config.family()?;
    let h = Homomorphism::new(family.group().clone(), group, images)?;
    let tolerance = config.tolerance()?;
    let reports = config
        .n_list()?
        .iter()
        .map(|&n| homomorphism_uniformity_report(&h, &family, n))
        .collect::<Result<Vec<_>, _>>()?;
    let last = reports.last().expect("nonempty n_list");
    let pass = last.max_deviation <= tolerance;
    let rows = reports
        .iter()
        .flat_map(|r| {
            r.frequencies.iter().map(move |f| {
                vec![r.n.to_string(), f.element.clone(), f.count.to_string(), format!("{:e}", f.frequency)]
            })
        })
        .collect();
    Ok(Outcome {
        pass,
        mismatch: false,
        summary: format!(
            "image subgroup of order {}, max deviation from uniform {:e} at n = {}",
            last.subgroup.len(),
            last.max_deviation,
            last.n
        ),
        payload: Payload::Homo(HomoPayload {
            group_order: h.target().order(),
            reports,
        }),
        tables: vec![Table {
            name: "homo",
            header: vec!["n", "element", "count", "frequency"],
            rows,
        }],
    })
}

fn run_orbit(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = config.polynomial_map()?;
    let window = config.window(p.source())?;
    let report = orbit_report(&p, &window, &closure_options(config), &degree_options(config))?;
    let mismatch = report.comparison == Some(Comparison::Mismatch);
    let agrees = report.degree.as_ref().is_some_and(|d| d.agrees);
    let summary = format!(
        "window of {} points, orbit closure {:?}, orbit degree {}",
        window.len(),
        report.comparison.expect("set by orbit_report"),
        if agrees { "agrees with the map degree" } else { "differs from the map degree" }
    );
    Ok(Outcome {
        pass: !mismatch && agrees,
        mismatch,
        summary,
        payload: Payload::Orbit(Box::new(report)),
        tables: Vec::new(),
    })
}

fn run_ergodic(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = config.polynomial_map()?;
    let group = p.source().clone();
    let window = config.window(&group)?;
    let starts = config
        .starts
        .as_ref()
        .ok_or_else(|| CliError::Config("starts: required for `ergodic`".into()))?
        .iter()
        .map(|c| config.element(&group, c, "starts"))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = ErgodicityOptions {
        cutoff: config.char_cutoff,
        tolerance: config.tolerance()?,
        sum: sum_options(config),
    };
    let report = unique_ergodicity_check(&p, &window, &config.family()?, config.n_list()?, &starts, &opts)?;
    let table = report.ergodicity.as_ref().expect("set by unique_ergodicity_check");
    let rows = table
        .rows
        .iter()
        .map(|r| {
            vec![
                format!("{:?}", r.start.coords()),
                character_label(&r.row.character),
                r.row.n.to_string(),
                format!("{:e}", r.row.sum.re),
                format!("{:e}", r.row.sum.im),
                format!("{:e}", r.row.modulus),
                r.row.annihilating.to_string(),
                r.row.pass.to_string(),
            ]
        })
        .collect();
    let pass = table.pass;
    let summary = format!(
        "{} averages over {} starts, spread between starts {:e}",
        table.rows.len(),
        starts.len(),
        table.start_spread
    );
    Ok(Outcome {
        pass,
        mismatch: false,
        summary,
        payload: Payload::Orbit(Box::new(report)),
        tables: vec![Table {
            name: "ergodic",
            header: vec!["start", "character", "n", "re", "im", "modulus", "annihilating", "pass"],
            rows,
        }],
    })
}
