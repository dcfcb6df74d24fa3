use std::path::{Path, PathBuf};

use coop_bandits::graph::{
    generate_ba, generate_er, load_edge_list, sample_connected_subgraph, Graph,
};
use coop_bandits::rewards::{make_gaussian_instance, make_hard_instance, make_stable_instance};
use coop_bandits::{BanditInstance, EstimatorKind, PolicyKind};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    ErdosRenyi {
        agents: usize,
        p: f64,
    },
    BarabasiAlbert {
        agents: usize,
        attach: usize,
    },
    /// SNAP-style edge list, optionally cut down to a BFS-sampled subgraph.
    EdgeList {
        path: PathBuf,
        #[serde(default)]
        subgraph: Option<usize>,
    },
    Complete {
        agents: usize,
    },
    Path {
        agents: usize,
    },
    Cycle {
        agents: usize,
    },
    Star {
        leaves: usize,
    },
}

impl Default for GraphSpec {
    fn default() -> Self {
        Self::ErdosRenyi { agents: 50, p: 0.7 }
    }
}

impl GraphSpec {
    /// Reads any file the spec refers to. Relative paths resolve against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<Option<Graph>, CliError> {
        let Self::EdgeList { path, .. } = self else {
            return Ok(None);
        };
        let full = match base {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.clone(),
        };
        let text = std::fs::read_to_string(&full).map_err(|e| CliError::Io {
            path: full.clone(),
            source: e,
        })?;
        Ok(Some(load_edge_list(&text)?))
    }

    /// Draws one graph. `loaded` is the result of [`GraphSpec::load`].
    pub fn build<R: Rng + ?Sized>(
        &self,
        loaded: Option<&Graph>,
        rng: &mut R,
    ) -> Result<Graph, CliError> {
        let g = match *self {
            Self::ErdosRenyi { agents, p } => generate_er(agents, p, rng)?,
            Self::BarabasiAlbert { agents, attach } => generate_ba(agents, attach, rng)?,
            Self::EdgeList { subgraph, .. } => {
                let full = loaded.ok_or_else(|| CliError::Config("edge list not loaded".into()))?;
                match subgraph {
                    Some(n) => sample_connected_subgraph(full, n, rng)?,
                    None => full.clone(),
                }
            }
            Self::Complete { agents } => Graph::complete(agents),
            Self::Path { agents } => Graph::path(agents),
            Self::Cycle { agents } => Graph::cycle(agents),
            Self::Star { leaves } => Graph::star(leaves),
        };
        g.ensure_connected()?;
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSpec {
    /// Unit-scale symmetric stable arms with locations uniform on `[0, 1]`.
    Stable {
        arms: usize,
        alpha: f64,
    },
    /// Scaled-Bernoulli lower-bound construction.
    Hard {
        arms: usize,
        gap: f64,
        eps: f64,
    },
    Gaussian {
        arms: usize,
        std: f64,
    },
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self::Stable {
            arms: 5,
            alpha: 1.9,
        }
    }
}

impl InstanceSpec {
    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BanditInstance, CliError> {
        Ok(match *self {
            Self::Stable { arms, alpha } => make_stable_instance(arms, alpha, rng)?,
            Self::Hard { arms, gap, eps } => make_hard_instance(arms, gap, eps)?,
            Self::Gaussian { arms, std } => make_gaussian_instance(arms, std, rng)?,
        })
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Self::Stable { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self, CliError> {
        match *self {
            Self::Stable { arms, .. } => Ok(Self::Stable { arms, alpha }),
            _ => Err(CliError::Config(
                "an alpha sweep needs a stable instance".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaRule {
    /// `floor(diameter / 2)`.
    HalfDiameter,
    Diameter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Hops(usize),
    Rule(GammaRule),
}

impl Default for GammaSpec {
    fn default() -> Self {
        Self::Rule(GammaRule::HalfDiameter)
    }
}

impl GammaSpec {
    /// Hop count for a graph of the given diameter. Fixed values beyond the
    /// diameter are clamped to it.
    pub fn resolve(&self, diameter: usize) -> usize {
        match *self {
            Self::Hops(h) => h.min(diameter),
            Self::Rule(GammaRule::HalfDiameter) => diameter / 2,
            Self::Rule(GammaRule::Diameter) => diameter,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Hops(h) => h.to_string(),
            Self::Rule(GammaRule::HalfDiameter) => "half-diameter".into(),
            Self::Rule(GammaRule::Diameter) => "diameter".into(),
        }
    }

    pub(crate) fn sort_key(&self) -> (u8, usize) {
        match *self {
            Self::Hops(h) => (0, h),
            Self::Rule(GammaRule::HalfDiameter) => (1, 0),
            Self::Rule(GammaRule::Diameter) => (2, 0),
        }
    }
}

fn default_policies() -> Vec<PolicyKind> {
    PolicyKind::ALL.to_vec()
}
fn default_horizon() -> usize {
    2000
}
fn default_repetitions() -> usize {
    20
}
fn default_kappa() -> f64 {
    0.5
}
fn default_c() -> f64 {
    1.0
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_alpha_sweep() -> Vec<f64> {
    vec![1.1, 1.3, 1.5, 1.7, 1.9]
}

/// Everything an experiment needs. Every field has a desk-scale default, so
/// `{}` is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub graph: GraphSpec,
    #[serde(default)]
    pub instance: InstanceSpec,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyKind>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub gamma: GammaSpec,
    /// Points for `sweep-gamma`; defaults to every hop count up to the diameter.
    #[serde(default)]
    pub gamma_sweep: Option<Vec<GammaSpec>>,
    #[serde(default = "default_alpha_sweep")]
    pub alpha_sweep: Vec<f64>,
    #[serde(default)]
    pub estimator: EstimatorKind,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults parse")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.repetitions == 0 {
            return Err(CliError::Config("repetitions must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(CliError::Config("horizon must be at least 1".into()));
        }
        if self.policies.is_empty() {
            return Err(CliError::Config("no policies selected".into()));
        }
        if matches!(&self.gamma_sweep, Some(s) if s.is_empty()) {
            return Err(CliError::Config("gamma_sweep is empty".into()));
        }
        if self.alpha_sweep.is_empty() {
            return Err(CliError::Config("alpha_sweep is empty".into()));
        }
        Ok(())
    }

    pub fn seed(&self, repetition: usize) -> u64 {
        self.base_seed.wrapping_add(repetition as u64)
    }
}
