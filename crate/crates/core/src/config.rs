//! Declarative experiment description, read from TOML.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bandit::{Algorithm, ContextSource, MatroidSchedule, RewardLaw, Schedules};
use crate::error::{Error, Result};
use crate::matroid::{Matroid, DEFAULT_ENUMERATION_BUDGET};
use crate::oracle::{
    default_eta, Doubling, FiniteClassOracle, GlmOracle, MultiGlmOracle, OracleFactory,
    RegressionOracle, TruthOracle, DEFAULT_ETA_AGG,
};
use crate::rng::{stream, Role};
use crate::set::ElementSet;
use crate::set_function::{
    Concave, ConcaveModular, Context, GlmModel, GlmTerm, Link, Modular, PositionTerm,
    PositionWeight, RankingModel, Restricted, SharedModel, SumGlmModel, WeightedCoverage,
    WidthBaseline, WidthModel,
};
use crate::t_operator::{TConfig, WeightFamily, WeightTable, DEFAULT_QUAD_POINTS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub horizon: usize,
    /// Ground size `A`.
    pub ground: usize,
    /// Rank `k` shared by every matroid.
    pub k: usize,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    /// Directory receiving the CSV files.
    pub output: PathBuf,
    #[serde(default = "default_budget")]
    pub enumeration_budget: usize,
    #[serde(default)]
    pub matroid_schedule: ScheduleMode,
    pub matroids: Vec<MatroidSpec>,
    pub model: ModelSpec,
    pub contexts: ContextSpec,
    pub oracle: OracleSpec,
    #[serde(default)]
    pub reward: RewardSpec,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub local_search: LocalSearchSpec,
    #[serde(default)]
    pub t_operator: TOperatorSpec,
}

fn default_budget() -> usize {
    DEFAULT_ENUMERATION_BUDGET
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleMode {
    #[default]
    Fixed,
    Cycle,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MatroidSpec {
    /// Rank taken from the top-level `k`.
    Uniform,
    Partition {
        blocks: Vec<Vec<usize>>,
        capacities: Vec<usize>,
    },
    Laminar {
        family: Vec<LaminarSet>,
    },
    /// Positions × items placement matroid on `ground = items²`.
    Ranking { items: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaminarSet {
    pub set: Vec<usize>,
    pub cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkSpec {
    Logistic,
    ClippedLinear,
    Relu,
}

impl From<LinkSpec> for Link {
    fn from(l: LinkSpec) -> Link {
        match l {
            LinkSpec::Logistic => Link::Logistic,
            LinkSpec::ClippedLinear => Link::ClippedLinear,
            LinkSpec::Relu => Link::Relu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConcaveSpec {
    Sqrt,
    Saturate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineSpec {
    #[default]
    Origin,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Modular {
        weights: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
    },
    Coverage {
        covers: Vec<Vec<usize>>,
        topic_weights: Vec<f64>,
    },
    Concave {
        weights: Vec<f64>,
        phi: ConcaveSpec,
    },
    Width {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vectors: Option<Vec<Vec<f64>>>,
        /// Whitespace-separated numbers, one row per element.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vectors_file: Option<PathBuf>,
        draws: usize,
        #[serde(default)]
        baseline: BaselineSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        noise_seed: u64,
    },
    /// `v(S ∩ C)`.
    Restricted {
        inner: Box<ModelSpec>,
        category: Vec<usize>,
    },
    Glm {
        base: Box<ModelSpec>,
        theta: Vec<f64>,
        link: LinkSpec,
    },
    SumGlm {
        terms: Vec<TermSpec>,
        theta: Vec<f64>,
        link: LinkSpec,
    },
    Ranking {
        items: usize,
        positions: Vec<PositionSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub base: ModelSpec,
    /// Row-major rows of `P_i`.
    pub projection: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionSpec {
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    pub f: ModelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ContextSpec {
    Fixed {
        list: Vec<Vec<f64>>,
    },
    Sampled {
        list: Vec<Vec<f64>>,
        #[serde(default)]
        symmetric: bool,
    },
    Gaussian {
        dim: usize,
        scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OracleSpec {
    Finite {
        experts: Vec<ModelSpec>,
        #[serde(default = "default_eta_agg")]
        eta_agg: f64,
    },
    Glm {
        base: ModelSpec,
        link: LinkSpec,
        dim: usize,
        /// Defaults to `n^{-1/2}`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
        #[serde(default)]
        doubling: bool,
    },
    Multiglm {
        terms: Vec<TermSpec>,
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
        #[serde(default)]
        doubling: bool,
    },
    /// The true model itself; never learns.
    Truth,
}

fn default_eta_agg() -> f64 {
    DEFAULT_ETA_AGG
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RewardSpec {
    #[default]
    Bernoulli,
    ClippedGaussian { sd: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSpec {
    pub c_gamma: f64,
    pub c_rho: f64,
    pub mu: f64,
    pub delta: f64,
    pub rho_min: f64,
    /// Defaults to `ln |F|` for the finite oracle and `sqrt(n)` otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reg_hat: Option<f64>,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        let s = Schedules::default();
        ScheduleSpec {
            c_gamma: s.c_gamma,
            c_rho: s.c_rho,
            mu: s.mu,
            delta: s.delta,
            rho_min: s.rho_min,
            reg_hat: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalSearchSpec {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for LocalSearchSpec {
    fn default() -> Self {
        LocalSearchSpec {
            tol: crate::local_search::DEFAULT_LS_TOL,
            max_iters: crate::local_search::DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilySpec {
    #[default]
    FilmusWard,
    Literal,
}

impl From<FamilySpec> for WeightFamily {
    fn from(f: FamilySpec) -> Self {
        match f {
            FamilySpec::FilmusWard => WeightFamily::FilmusWard,
            FamilySpec::Literal => WeightFamily::Literal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TOperatorSpec {
    pub family: FamilySpec,
    pub quad_points: usize,
    pub exact_max: usize,
    /// 0 disables Monte Carlo.
    pub mc_draws: usize,
}

impl Default for TOperatorSpec {
    fn default() -> Self {
        let t = TConfig::default();
        TOperatorSpec {
            family: FamilySpec::default(),
            quad_points: DEFAULT_QUAD_POINTS,
            exact_max: t.exact_max,
            mc_draws: t.mc_draws.unwrap_or(0),
        }
    }
}

impl TOperatorSpec {
    pub fn t_config(&self) -> TConfig {
        TConfig {
            exact_max: self.exact_max,
            mc_draws: (self.mc_draws > 0).then_some(self.mc_draws),
        }
    }

    pub fn table(&self, k: usize) -> Result<WeightTable> {
        WeightTable::compute_family(k.max(1), self.quad_points, self.family.into())
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Config(format!("{what}: ragged matrix rows")));
    }
    Ok(DMatrix::from_row_iterator(r, c, rows.iter().flatten().copied()))
}

fn read_vectors(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|e| {
                        Error::Config(format!("{}:{}: {e}", path.display(), i + 1))
                    })
                })
                .collect()
        })
        .collect()
}

impl ModelSpec {
    pub fn build(&self) -> Result<SharedModel> {
        Ok(match self {
            ModelSpec::Modular { weights, bound } => {
                let m = Modular::new(weights.clone())?;
                Arc::new(match bound {
                    Some(b) => m.with_bound(*b),
                    None => m,
                })
            }
            ModelSpec::Coverage {
                covers,
                topic_weights,
            } => Arc::new(WeightedCoverage::new(
                covers.iter().map(|c| c.iter().copied().collect()).collect(),
                topic_weights.clone(),
            )?),
            ModelSpec::Concave { weights, phi } => {
                let phi = match phi {
                    ConcaveSpec::Sqrt => Concave::Sqrt,
                    ConcaveSpec::Saturate => Concave::Saturate,
                };
                Arc::new(ConcaveModular::new(weights.clone(), phi)?)
            }
            ModelSpec::Width {
                vectors,
                vectors_file,
                draws,
                baseline,
                sigma,
                noise_seed,
            } => {
                let vecs = match (vectors, vectors_file) {
                    (Some(v), None) => v.clone(),
                    (None, Some(p)) => read_vectors(p)?,
                    _ => {
                        return Err(Error::Config(
                            "width model needs exactly one of vectors or vectors_file".into(),
                        ))
                    }
                };
                let sigma = sigma.as_ref().map(|s| matrix(s, "sigma")).transpose()?;
                let baseline = match baseline {
                    BaselineSpec::Origin => WidthBaseline::Origin,
                    BaselineSpec::Raw => WidthBaseline::Raw,
                };
                let mut rng = stream(*noise_seed, Role::Model);
                Arc::new(WidthModel::sample(vecs, *draws, sigma.as_ref(), baseline, &mut rng)?)
            }
            ModelSpec::Restricted { inner, category } => Arc::new(Restricted::new(
                inner.build()?,
                category.iter().copied().collect(),
            )),
            ModelSpec::Glm { base, theta, link } => {
                Arc::new(GlmModel::new(base.build()?, theta.clone(), (*link).into())?)
            }
            ModelSpec::SumGlm { terms, theta, link } => Arc::new(SumGlmModel::new(
                build_terms(terms)?,
                theta.clone(),
                (*link).into(),
            )?),
            ModelSpec::Ranking { items, positions } => {
                let pos = positions
                    .iter()
                    .map(|p| {
                        Ok(PositionTerm {
                            weight: PositionWeight {
                                base: p.weight,
                                theta: p.theta.clone(),
                            },
                            f: p.f.build()?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Arc::new(RankingModel::new(*items, pos)?)
            }
        })
    }
}

fn build_terms(terms: &[TermSpec]) -> Result<Vec<GlmTerm>> {
    terms
        .iter()
        .map(|t| {
            Ok(GlmTerm {
                base: t.base.build()?,
                projection: matrix(&t.projection, "projection")?,
            })
        })
        .collect()
}

impl MatroidSpec {
    pub fn build(&self, ground: usize, k: usize) -> Result<Matroid> {
        match self {
            MatroidSpec::Uniform => Matroid::uniform(ground, k),
            MatroidSpec::Partition { blocks, capacities } => Matroid::partition(
                ground,
                blocks.iter().map(|b| b.iter().copied().collect()).collect(),
                capacities.clone(),
            ),
            MatroidSpec::Laminar { family } => Matroid::laminar(
                ground,
                family
                    .iter()
                    .map(|f| (f.set.iter().copied().collect::<ElementSet>(), f.cap))
                    .collect(),
            ),
            MatroidSpec::Ranking { items } => {
                if items * items != ground {
                    return Err(Error::Config(format!(
                        "ranking matroid on {items} items needs ground = {}",
                        items * items
                    )));
                }
                Matroid::ranking(*items)
            }
        }
    }
}

impl ContextSpec {
    pub fn build(&self) -> ContextSource {
        let ctxs = |l: &[Vec<f64>]| l.iter().cloned().map(Context::new).collect();
        match self {
            ContextSpec::Fixed { list } => ContextSource::Fixed(ctxs(list)),
            ContextSpec::Sampled { list, symmetric } => ContextSource::Sampled {
                pool: ctxs(list),
                symmetric: *symmetric,
            },
            ContextSpec::Gaussian { dim, scale } => ContextSource::Gaussian {
                dim: *dim,
                scale: *scale,
            },
        }
    }

    fn max_norm(&self) -> f64 {
        match self {
            ContextSpec::Fixed { list } | ContextSpec::Sampled { list, .. } => list
                .iter()
                .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
                .fold(0.0, f64::max),
            ContextSpec::Gaussian { .. } => 1.0,
        }
    }
}

impl OracleSpec {
    /// Square-loss regret estimate used by the schedules when none is given.
    pub fn default_reg_hat(&self, horizon: usize) -> f64 {
        match self {
            OracleSpec::Finite { experts, .. } => (experts.len() as f64).ln().max(1.0),
            OracleSpec::Truth => 1.0,
            _ => (horizon as f64).sqrt(),
        }
    }

    /// Fresh oracle for a run of length `horizon`.
    pub fn build(&self, horizon: usize, truth: &SharedModel) -> Result<Box<dyn RegressionOracle>> {
        Ok(match self {
            OracleSpec::Finite { experts, eta_agg } => {
                let models = experts.iter().map(ModelSpec::build).collect::<Result<Vec<_>>>()?;
                Box::new(FiniteClassOracle::new(models, *eta_agg)?)
            }
            OracleSpec::Glm {
                base,
                link,
                dim,
                eta,
                doubling,
            } => {
                let base = base.build()?;
                let (link, dim) = ((*link).into(), *dim);
                if *doubling {
                    GlmOracle::new(base.clone(), link, dim, 1.0)?;
                    let factory: OracleFactory = Box::new(move |h| {
                        Box::new(
                            GlmOracle::new(base.clone(), link, dim, default_eta(h))
                                .expect("validated above"),
                        )
                    });
                    Box::new(Doubling::new(factory))
                } else {
                    let eta = eta.unwrap_or_else(|| default_eta(horizon));
                    Box::new(GlmOracle::new(base, link, dim, eta)?)
                }
            }
            OracleSpec::Multiglm {
                terms,
                dim,
                eta,
                doubling,
            } => {
                let terms = build_terms(terms)?;
                let dim = *dim;
                if *doubling {
                    MultiGlmOracle::new(terms.clone(), dim, 1.0)?;
                    let factory: OracleFactory = Box::new(move |h| {
                        Box::new(
                            MultiGlmOracle::new(terms.clone(), dim, default_eta(h))
                                .expect("validated above"),
                        )
                    });
                    Box::new(Doubling::new(factory))
                } else {
                    let eta = eta.unwrap_or_else(|| default_eta(horizon));
                    Box::new(MultiGlmOracle::new(terms, dim, eta)?)
                }
            }
            OracleSpec::Truth => Box::new(TruthOracle(truth.clone())),
        })
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.ground == 0 || self.k > self.ground {
            return Err(Error::Config(format!(
                "need 1 <= ground and k <= ground, got ground = {}, k = {}",
                self.ground, self.k
            )));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds list is empty".into()));
        }
        if self.matroids.is_empty() {
            return Err(Error::Config("at least one matroid is required".into()));
        }
        if self.matroid_schedule == ScheduleMode::Fixed && self.matroids.len() != 1 {
            return Err(Error::Config("a fixed matroid schedule takes exactly one matroid".into()));
        }
        let glm = matches!(self.oracle, OracleSpec::Glm { .. } | OracleSpec::Multiglm { .. });
        if glm && self.contexts.max_norm() > 1.0 + 1e-12 {
            return Err(Error::Config("GLM oracles need contexts with norm at most 1".into()));
        }
        Ok(())
    }

    pub fn schedules(&self) -> Schedules {
        let s = &self.schedule;
        Schedules {
            c_gamma: s.c_gamma,
            c_rho: s.c_rho,
            mu: s.mu,
            delta: s.delta,
            rho_min: s.rho_min,
            reg_hat: s
                .reg_hat
                .unwrap_or_else(|| self.oracle.default_reg_hat(self.horizon)),
        }
    }

    pub fn reward_law(&self) -> RewardLaw {
        match self.reward {
            RewardSpec::Bernoulli => RewardLaw::Bernoulli,
            RewardSpec::ClippedGaussian { sd } => RewardLaw::ClippedGaussian { sd },
        }
    }

    pub fn matroid_schedule(&self) -> Result<MatroidSchedule> {
        let list = self
            .matroids
            .iter()
            .map(|m| m.build(self.ground, self.k))
            .collect::<Result<Vec<_>>>()?;
        Ok(match self.matroid_schedule {
            ScheduleMode::Fixed => MatroidSchedule::Fixed(list.into_iter().next().expect("validated")),
            ScheduleMode::Cycle => MatroidSchedule::Cycle(list),
            ScheduleMode::Sampled => MatroidSchedule::Sampled(list),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"
horizon = 100
ground = 4
k = 2
algorithm = "squarecb"
seeds = [1]
output = "out"

[[matroids]]
kind = "uniform"

[model]
kind = "modular"
weights = [0.4, 0.3, 0.2, 0.1]

[contexts]
kind = "fixed"
list = [[]]

[oracle]
kind = "finite"
experts = [
  { kind = "modular", weights = [0.4, 0.3, 0.2, 0.1] },
  { kind = "modular", weights = [0.1, 0.2, 0.3, 0.4] },
]
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.enumeration_budget, DEFAULT_ENUMERATION_BUDGET);
        assert_eq!(cfg.reward, RewardSpec::Bernoulli);
        assert!((cfg.schedules().reg_hat - 1.0).abs() < 1e-15);
        assert_eq!(cfg.matroid_schedule().unwrap().matroids()[0].rank(), 2);
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let broken = MINIMAL.replace("horizon = 100", "horizon = \"many\"");
        let err = ExperimentConfig::from_toml(&broken).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn k_above_ground_is_rejected() {
        let bad = MINIMAL.replace("k = 2", "k = 5");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn nested_models_build() {
        let spec: ModelSpec = toml::from_str(
            r#"
kind = "sum-glm"
theta = [0.6, 0.8]
link = "relu"
[[terms]]
projection = [[1.0, 0.0], [0.0, 0.0]]
base = { kind = "restricted", category = [0, 1], inner = { kind = "modular", weights = [0.1, 0.2, 0.3, 0.4] } }
[[terms]]
projection = [[0.0, 0.0], [0.0, 1.0]]
base = { kind = "restricted", category = [2, 3], inner = { kind = "modular", weights = [0.1, 0.2, 0.3, 0.4] } }
"#,
        )
        .unwrap();
        let m = spec.build().unwrap();
        let v = m.value(&ElementSet::from([1, 2]), &Context::new(vec![0.5, 0.5]));
        assert!((v - 0.18).abs() < 1e-12);
    }
}
