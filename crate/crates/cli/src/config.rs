//! Experiment configuration files.
//!
//! Configs are TOML. Every exact number (coefficients, tolerances, phases)
//! is written as a string such as `"1/3"`, `"0.25"` or `"2*sqrt2"`, and TOML
//! floats are rejected so that inputs stay exact. Unknown keys are errors.

use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use equidistlab::equidist::FiniteGroup;
use equidistlab::exact::IrrationalRegistry;
use equidistlab::orbits::Window;
use equidistlab::polymaps::{ScalarPoly, TermSpec};
use equidistlab::source::FolnerShape;
use equidistlab::{
    Character, FieldScalar, FolnerFamily, PolynomialMap, SourceElement, SourceGroup, TargetElement, TargetGroup,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Weyl,
    Closure,
    Vdc,
    Constderiv,
    Homo,
    Orbit,
    Ergodic,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Weyl => "weyl",
            Self::Closure => "closure",
            Self::Vdc => "vdc",
            Self::Constderiv => "constderiv",
            Self::Homo => "homo",
            Self::Orbit => "orbit",
            Self::Ergodic => "ergodic",
        }
    }
}

/// An exact rational written as a string, e.g. `"1/1000"` or `"0.001"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl TryFrom<String> for ExactRational {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        let x = FieldScalar::from_str(&s).map_err(|e| e.to_string())?;
        if !x.is_rational() {
            return Err(format!("{s:?} must be rational"));
        }
        Ok(Self(x.rational_part().clone()))
    }
}

impl From<ExactRational> for String {
    fn from(q: ExactRational) -> String {
        FieldScalar::from_rational(q.0).to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum SourceSpec {
    FreeAbelian { rank: usize },
    Heisenberg,
    FiniteAbelian { moduli: Vec<u64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrrationalSpec {
    pub name: String,
    pub decimal: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    #[serde(default)]
    pub torus_dim: usize,
    #[serde(default)]
    pub moduli: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinateSpec {
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueSpec {
    #[serde(default)]
    pub torus: Vec<FieldScalar>,
    #[serde(default)]
    pub cyclic: Vec<i64>,
}

/// Either coordinate polynomials (torus coordinates first) or, for finite
/// sources, one value per element in mixed-radix order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<CoordinateSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<ValueSpec>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FolnerSpec {
    #[serde(default)]
    pub shape: FolnerShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSpec {
    Points(Vec<Vec<i64>>),
    Ball { radius: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterSpec {
    #[serde(default)]
    pub torus: Vec<i64>,
    #[serde(default)]
    pub cyclic: Vec<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VdcFunction {
    /// Independent uniform random phases at every point.
    #[default]
    Random,
    /// `x -> chi(P(x))`.
    Map,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VdcSpec {
    #[serde(default)]
    pub function: VdcFunction,
    #[serde(default = "one")]
    pub trials: usize,
    /// Følner index of the averaging set `F`.
    pub set: u64,
    /// Explicit shift set `F0`; otherwise random subsets of `F_{f0_index}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0_index: Option<u64>,
    #[serde(default = "ten")]
    pub f0_max_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub character: Option<CharacterSpec>,
}

fn one() -> usize {
    1
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstDerivSpec {
    pub gamma: Vec<i64>,
    /// `z0 = e^{2 pi i t}` given by the turn `t`.
    pub z0_turns: ExactRational,
    pub character: CharacterSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FiniteGroupSpec {
    Named(String),
    Cyclic { cyclic: usize },
    Table { labels: Vec<String>, table: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomoSpec {
    pub group: FiniteGroupSpec,
    /// Labels of the generator images.
    pub images: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeSpec {
    #[serde(default = "default_d_max")]
    pub d_max: u32,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_d_max() -> u32 {
    8
}

fn default_samples() -> usize {
    200
}

fn default_cutoff() -> u32 {
    1
}

fn default_tolerance() -> ExactRational {
    ExactRational(BigRational::new(1.into(), 100.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub source: SourceSpec,
    #[serde(default)]
    pub irrationals: Vec<IrrationalSpec>,
    #[serde(default)]
    pub target: TargetSpec,
    #[serde(default)]
    pub map: MapSpec,
    #[serde(default)]
    pub folner: FolnerSpec,
    #[serde(default)]
    pub n_list: Vec<u64>,
    #[serde(default = "default_cutoff")]
    pub char_cutoff: u32,
    #[serde(default = "default_tolerance")]
    pub tolerance: ExactRational,
    #[serde(default)]
    pub seed: u64,
    /// Largest Følner set the closure search may enumerate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<DegreeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vdc: Option<VdcSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constderiv: Option<ConstDerivSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homo: Option<HomoSpec>,
}

impl FromStr for ExperimentConfig {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse().map_err(|e: CliError| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn registry(&self) -> Result<Arc<IrrationalRegistry>, CliError> {
        let reg = IrrationalRegistry::with_entries(self.irrationals.iter().map(|i| (i.name.as_str(), i.decimal.as_str())))
            .map_err(|e| CliError::Config(format!("irrationals: {e}")))?;
        Ok(Arc::new(reg))
    }

    pub fn source_group(&self) -> Result<SourceGroup, CliError> {
        let g = match &self.source {
            SourceSpec::FreeAbelian { rank } => SourceGroup::free_abelian(*rank),
            SourceSpec::Heisenberg => Ok(SourceGroup::Heisenberg3),
            SourceSpec::FiniteAbelian { moduli } => SourceGroup::finite_abelian(moduli.clone()),
        };
        g.map_err(|e| CliError::Config(format!("source: {e}")))
    }

    pub fn target_group(&self) -> Result<TargetGroup, CliError> {
        TargetGroup::new(self.target.torus_dim, self.target.moduli.clone(), self.registry()?)
            .map_err(|e| CliError::Config(format!("target: {e}")))
    }

    pub fn family(&self) -> Result<FolnerFamily, CliError> {
        Ok(FolnerFamily::new(self.source_group()?, self.folner.shape))
    }

    pub fn polynomial_map(&self) -> Result<PolynomialMap, CliError> {
        let source = self.source_group()?;
        let target = self.target_group()?;
        let built = match (&self.map.coordinates, &self.map.values) {
            (Some(coords), None) => {
                let polys = coords
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        ScalarPoly::from_spec(source.arity(), &c.terms)
                            .map_err(|e| CliError::Config(format!("map.coordinates[{i}]: {e}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                PolynomialMap::from_polys(source, target, polys)
            }
            (None, Some(values)) => {
                let values = values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        target
                            .element(v.torus.clone(), v.cyclic.iter().map(|&k| BigInt::from(k)).collect())
                            .map_err(|e| CliError::Config(format!("map.values[{i}]: {e}")))
                    })
                    .collect::<Result<Vec<TargetElement>, _>>()?;
                PolynomialMap::from_table(source, target, values)
            }
            _ => return Err(CliError::Config("map: give exactly one of `coordinates` or `values`".into())),
        };
        built.map_err(|e| CliError::Config(format!("map: {e}")))
    }

    pub fn character(&self, target: &TargetGroup, spec: &CharacterSpec, key: &str) -> Result<Character, CliError> {
        Character::new(target, spec.torus.clone(), spec.cyclic.clone()).map_err(|e| CliError::Config(format!("{key}: {e}")))
    }

    pub fn element(&self, group: &SourceGroup, coords: &[i64], key: &str) -> Result<SourceElement, CliError> {
        group.element(coords).map_err(|e| CliError::Config(format!("{key}: {e}")))
    }

    pub fn window(&self, group: &SourceGroup) -> Result<Window, CliError> {
        let w = match &self.window {
            None => Window::default_for(group),
            Some(WindowSpec::Ball { radius }) => Window::ball(group, *radius),
            Some(WindowSpec::Points(points)) => {
                let elements = points
                    .iter()
                    .map(|p| self.element(group, p, "window"))
                    .collect::<Result<Vec<_>, _>>()?;
                Window::new(group, elements)
            }
        };
        w.map_err(|e| CliError::Config(format!("window: {e}")))
    }

    pub fn n_list(&self) -> Result<&[u64], CliError> {
        if self.n_list.is_empty() {
            return Err(CliError::Config("n_list: at least one Følner index is required".into()));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) || self.n_list[0] == 0 {
            return Err(CliError::Config("n_list: indices must be positive and increasing".into()));
        }
        Ok(&self.n_list)
    }

    pub fn tolerance(&self) -> Result<f64, CliError> {
        let t = self.tolerance.to_f64();
        if t.is_nan() || t < 0.0 {
            return Err(CliError::Config("tolerance: must be nonnegative".into()));
        }
        Ok(t)
    }
}

impl FiniteGroupSpec {
    pub fn build(&self) -> Result<FiniteGroup, CliError> {
        let g = match self {
            Self::Named(name) => match name.to_ascii_uppercase().as_str() {
                "S3" => Ok(FiniteGroup::symmetric3()),
                "Q8" => Ok(FiniteGroup::quaternion8()),
                _ => return Err(CliError::Config(format!("homo.group: unknown group {name:?} (use S3, Q8, a cyclic order or a table)"))),
            },
            Self::Cyclic { cyclic } => FiniteGroup::cyclic(*cyclic),
            Self::Table { labels, table } => FiniteGroup::from_table(labels.clone(), table.clone()),
        };
        g.map_err(|e| CliError::Config(format!("homo.group: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WEYL: &str = r#"
command = "weyl"
n_list = [1000]
char_cutoff = 2
tolerance = "1/1000"

[source]
kind = "free_abelian"
rank = 1

[[irrationals]]
name = "sqrt2"
decimal = "1.414213562373095048801688724209698078569671875376948073176679737990732"

[target]
torus_dim = 1

[[map.coordinates]]
terms = [{ exponents = [1], coeff = "sqrt2" }]
"#;

    #[test]
    fn parses_a_weyl_config() {
        let cfg: ExperimentConfig = WEYL.parse().unwrap();
        assert_eq!(cfg.command, Some(Command::Weyl));
        assert_eq!(cfg.tolerance.to_f64(), 1e-3);
        let p = cfg.polynomial_map().unwrap();
        assert_eq!(p.target().dim(), 1);
        // echo parses back to the same config
        let again: ExperimentConfig = cfg.to_toml().parse().unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_floats_unknown_keys_and_bad_numbers() {
        let float = WEYL.replace("\"1/1000\"", "0.001");
        assert!(matches!(float.parse::<ExperimentConfig>(), Err(CliError::Config(_))));
        let unknown = WEYL.replace("char_cutoff = 2", "char_cutof = 2");
        let msg = unknown.parse::<ExperimentConfig>().unwrap_err().to_string();
        assert!(msg.contains("char_cutof"), "{msg}");
        let zero = WEYL.replace("coeff = \"sqrt2\"", "coeff = \"1/0\"");
        let msg = zero.parse::<ExperimentConfig>().unwrap_err().to_string();
        assert!(msg.contains("line"), "{msg}");
        let coeff = WEYL.replace("coeff = \"sqrt2\"", "coeff = \"sqrt5\"");
        let cfg: ExperimentConfig = coeff.parse().unwrap();
        assert!(cfg.polynomial_map().is_err());
    }

    #[test]
    fn windows_and_groups() {
        let mut cfg: ExperimentConfig = WEYL.parse().unwrap();
        cfg.window = Some(WindowSpec::Points(vec![vec![0], vec![2]]));
        assert_eq!(cfg.window(&cfg.source_group().unwrap()).unwrap().len(), 2);
        cfg.window = Some(WindowSpec::Ball { radius: 1 });
        assert_eq!(cfg.window(&cfg.source_group().unwrap()).unwrap().len(), 3);
        assert_eq!(FiniteGroupSpec::Named("q8".into()).build().unwrap().order(), 8);
        assert!(FiniteGroupSpec::Named("A5".into()).build().is_err());
    }
}
