//! TOML run configuration.
//!
//! ```toml
//! schema_version = 1
//!
//! [experiment]
//! m_max = 20
//! n_samples = 100
//! seed = 7
//!
//! [noise]
//! kind = "phase_flip"
//! p = 0.06
//!
//! [learner]
//! optimizer = "adagrad"
//! rate = 1e-5
//! ```
use std::path::Path;

use nmrb_core::learner::{LearnerConfig, NodeUpdate, OptimizerConfig, SweepOrder, DEFAULT_INIT_JITTER, OPTIMIZER_EPSILON};
use nmrb_core::noise::{amplitude_damping, depolarizing, phase_flip, spin_unitary, NoiseModel};
use nmrb_core::quantum::{enumerate_clifford_1q, DensityMatrix, PovmElement, UnitaryGate};
use nmrb_core::rb::ExperimentConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::format::MatrixRecord;

pub const SCHEMA_VERSION: u32 = 1;

/// Benchmarks are single-qubit Clifford RB.
pub const SYSTEM_DIM: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learner: Option<LearnerSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub m_max: usize,
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Computational basis state the system is prepared in.
    #[serde(default)]
    pub initial_state: usize,
    /// Computational basis state whose projector is measured.
    #[serde(default)]
    pub measurement: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Identity,
    PhaseFlip { p: f64 },
    AmplitudeDamping { gamma: f64 },
    Depolarizing { p: f64 },
    /// Two-spin model with the environment spin starting in `|0⟩`.
    Spin { j: f64, hx: f64, hy: f64, delta: f64 },
    /// An arbitrary unitary on `E ⊗ S` with the environment starting in `|0⟩`.
    JointUnitary { lambda: MatrixRecord },
}

impl NoiseSpec {
    pub fn build(&self) -> Result<NoiseModel> {
        Ok(match self {
            Self::Identity => NoiseModel::identity(SYSTEM_DIM),
            Self::PhaseFlip { p } => phase_flip(*p)?,
            Self::AmplitudeDamping { gamma } => amplitude_damping(*gamma)?,
            Self::Depolarizing { p } => depolarizing(*p)?,
            Self::Spin { j, hx, hy, delta } => spin_unitary(*j, *hx, *hy, *delta)?,
            Self::JointUnitary { lambda } => {
                let u = UnitaryGate::new(lambda.to_matrix()?)?;
                let n = u.dim();
                if n % SYSTEM_DIM != 0 {
                    return Err(CliError::Input(format!("joint unitary dimension {n} is not a multiple of {SYSTEM_DIM}")));
                }
                NoiseModel::joint_unitary(u, DensityMatrix::basis(n / SYSTEM_DIM, 0))?
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adagrad,
    Adam,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Ascending,
    Descending,
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeUpdateKind {
    PairRoot,
    PairProduct,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.99
}
fn default_epsilon() -> f64 {
    OPTIMIZER_EPSILON
}
fn default_iterations() -> usize {
    200
}
fn default_one() -> f64 {
    1.0
}
fn default_env_dim() -> usize {
    2
}
fn default_true() -> bool {
    true
}
fn default_unitarity() -> f64 {
    1e-9
}
fn default_jitter() -> f64 {
    DEFAULT_INIT_JITTER
}
fn default_sweep() -> SweepKind {
    SweepKind::Ascending
}
fn default_update() -> NodeUpdateKind {
    NodeUpdateKind::PairRoot
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSection {
    pub optimizer: OptimizerKind,
    pub rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    /// The run converges once the l1 residual drops to the summed standard
    /// errors divided by this.
    #[serde(default = "default_one")]
    pub convergence_divisor: f64,
    #[serde(default = "default_env_dim")]
    pub env_dim: usize,
    #[serde(default = "default_sweep")]
    pub sweep: SweepKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_slot: Option<usize>,
    #[serde(default = "default_update")]
    pub node_update: NodeUpdateKind,
    #[serde(default = "default_true")]
    pub tangent_projection: bool,
    #[serde(default = "default_unitarity")]
    pub unitarity_tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_jitter")]
    pub init_jitter: f64,
}

impl LearnerSection {
    pub fn build(&self) -> Result<LearnerConfig> {
        let optimizer = match self.optimizer {
            OptimizerKind::Adagrad => OptimizerConfig::Adagrad { rate: self.rate },
            OptimizerKind::Adam => OptimizerConfig::Adam { rate: self.rate, beta1: self.beta1, beta2: self.beta2, epsilon: self.epsilon },
        };
        let sweep = match (self.sweep, self.fixed_slot) {
            (SweepKind::Ascending, None) => SweepOrder::Ascending,
            (SweepKind::Descending, None) => SweepOrder::Descending,
            (SweepKind::Fixed, Some(k)) => SweepOrder::Fixed(k),
            (SweepKind::Fixed, None) => return Err(CliError::Input("sweep = \"fixed\" needs fixed_slot".into())),
            (_, Some(_)) => return Err(CliError::Input("fixed_slot is only valid with sweep = \"fixed\"".into())),
        };
        let mut cfg = LearnerConfig::new(optimizer);
        cfg.d_e = self.env_dim;
        cfg.max_iterations = self.max_iterations;
        cfg.convergence_divisor = self.convergence_divisor;
        cfg.sweep = sweep;
        cfg.node_update = match self.node_update {
            NodeUpdateKind::PairRoot => NodeUpdate::PairRoot,
            NodeUpdateKind::PairProduct => NodeUpdate::PairProduct,
        };
        cfg.tangent_projection = self.tangent_projection;
        cfg.unitarity_tolerance = self.unitarity_tolerance;
        cfg.seed = self.seed;
        cfg.init_jitter = self.init_jitter;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentSection {
    pub fn state_and_measurement(&self) -> Result<(DensityMatrix, PovmElement)> {
        for (name, k) in [("initial_state", self.initial_state), ("measurement", self.measurement)] {
            if k >= SYSTEM_DIM {
                return Err(CliError::Input(format!("{name} = {k} is not a basis state of a {SYSTEM_DIM}-level system")));
            }
        }
        Ok((DensityMatrix::basis(SYSTEM_DIM, self.initial_state), PovmElement::projector(SYSTEM_DIM, self.measurement)))
    }
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::parse(path, e))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::parse(path, format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", cfg.schema_version)));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn experiment_section(&self) -> Result<&ExperimentSection> {
        self.experiment.as_ref().ok_or_else(|| CliError::Input("config has no [experiment] section".into()))
    }

    pub fn learner_section(&self) -> Result<&LearnerSection> {
        self.learner.as_ref().ok_or_else(|| CliError::Input("config has no [learner] section".into()))
    }

    /// The experiment described by the `[experiment]` and `[noise]` sections.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let ex = self.experiment_section()?;
        let noise = self.noise.as_ref().ok_or_else(|| CliError::Input("config has no [noise] section".into()))?.build()?;
        let (rho_s, povm) = ex.state_and_measurement()?;
        let cfg = ExperimentConfig { m_max: ex.m_max, n_samples: ex.n_samples, gate_set: enumerate_clifford_1q(), rho_s, povm, seed: ex.seed, noise };
        cfg.validate()?;
        Ok(cfg)
    }

    /// State preparation and measurement used when learning; `|0⟩` for both
    /// unless an `[experiment]` section says otherwise.
    pub fn learning_spam(&self) -> Result<(DensityMatrix, PovmElement)> {
        match &self.experiment {
            Some(ex) => ex.state_and_measurement(),
            None => Ok((DensityMatrix::basis(SYSTEM_DIM, 0), PovmElement::projector(SYSTEM_DIM, 0))),
        }
    }
}
