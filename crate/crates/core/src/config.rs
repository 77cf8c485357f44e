//! Experiment configuration files.
//!
//! A configuration is a TOML document. Top-level keys select the experiment
//! and the scan parameters; sections describe the field, the initial state,
//! the integrator and the pass/fail tolerances. Every key is optional except
//! `[field]`, and unknown keys are rejected.
//!
//! ```toml
//! kind = "residual-scan"
//! epsilons = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
//! orders = [0, 1]
//!
//! [field]
//! model = "linear-gradient"
//! alpha = 0.1
//!
//! [slow]
//! xbar = [0.1, 0.2, 0.0]
//! ubar = 0.4
//! w = [0.6, -0.3]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fastslow::SlowState;
use crate::fields::{FieldModel, Vec3};
use crate::loopspace::{MidpointOptions, MidpointSolver};
use crate::lorentz::ParticleState;
use crate::slow_manifold::ShapeOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Orbit,
    Loop,
    Gc,
    ResidualScan,
    CompareDrift,
    NoetherScan,
    Stick,
    FastslowCheck,
    FieldsCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::Orbit,
        ExperimentKind::Loop,
        ExperimentKind::Gc,
        ExperimentKind::ResidualScan,
        ExperimentKind::CompareDrift,
        ExperimentKind::NoetherScan,
        ExperimentKind::Stick,
        ExperimentKind::FastslowCheck,
        ExperimentKind::FieldsCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Orbit => "orbit",
            ExperimentKind::Loop => "loop",
            ExperimentKind::Gc => "gc",
            ExperimentKind::ResidualScan => "residual-scan",
            ExperimentKind::CompareDrift => "compare-drift",
            ExperimentKind::NoetherScan => "noether-scan",
            ExperimentKind::Stick => "stick",
            ExperimentKind::FastslowCheck => "fastslow-check",
            ExperimentKind::FieldsCheck => "fields-check",
        }
    }
}

/// Initial slow state; `𝒮` starts at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlowInit {
    pub xbar: [f64; 3],
    pub ubar: f64,
    pub w: [f64; 2],
}

impl Default for SlowInit {
    fn default() -> Self {
        SlowInit {
            xbar: [0.0; 3],
            ubar: 0.0,
            w: [1.0, 0.0],
        }
    }
}

impl SlowInit {
    pub fn state(&self) -> SlowState {
        SlowState::new(Vec3::from(self.xbar), self.ubar, self.w[0], self.w[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleInit {
    pub x: [f64; 3],
    pub v: [f64; 3],
}

impl ParticleInit {
    pub fn state(&self) -> ParticleState {
        ParticleState::new(Vec3::from(self.x), Vec3::from(self.v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StepperKind {
    #[default]
    Boris,
    Rk4,
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    #[default]
    Newton,
    FixedPoint,
}

/// Time stepping. `dt` wins over `dt_over_eps` when both are given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub stepper: StepperKind,
    pub dt: Option<f64>,
    pub dt_over_eps: f64,
    pub t_final: f64,
    /// Write every `output_every`-th step.
    pub output_every: usize,
    pub solver: SolverKind,
    pub solver_tol: f64,
    pub max_iter: usize,
    /// Gyroperiods per drift measurement.
    pub periods: f64,
    /// Boris steps per gyroperiod in drift measurements.
    pub samples_per_period: usize,
    /// Check the slow-manifold deviation every `sample_every` steps.
    pub sample_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            stepper: StepperKind::Boris,
            dt: None,
            dt_over_eps: 1.0 / 50.0,
            t_final: 1.0,
            output_every: 1,
            solver: SolverKind::Newton,
            solver_tol: 1e-12,
            max_iter: 50,
            periods: 50.0,
            samples_per_period: 256,
            sample_every: 1,
        }
    }
}

impl IntegratorConfig {
    pub fn step(&self, eps: f64) -> f64 {
        self.dt.unwrap_or(self.dt_over_eps * eps)
    }

    pub fn midpoint_options(&self) -> MidpointOptions {
        MidpointOptions {
            tol: self.solver_tol,
            max_iter: self.max_iter,
            solver: match self.solver {
                SolverKind::Newton => MidpointSolver::Newton,
                SolverKind::FixedPoint => MidpointSolver::FixedPoint { damping: 1.0 },
            },
        }
    }
}

/// Pass/fail thresholds. Unset entries take per-experiment defaults,
/// listed in the README.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub energy: Option<f64>,
    pub action: Option<f64>,
    pub mu: Option<f64>,
    pub slope: Option<f64>,
    pub slope_band: Option<f64>,
    pub min_slope: Option<f64>,
    pub residual: Option<f64>,
    pub roundtrip: Option<f64>,
    pub inverse: Option<f64>,
    pub shape: Option<f64>,
    pub relative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_order")]
    pub order: ShapeOrder,
    #[serde(default = "default_orders")]
    pub orders: Vec<ShapeOrder>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub output: Option<String>,
    pub field: FieldModel,
    #[serde(default)]
    pub slow: SlowInit,
    pub particle: Option<ParticleInit>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub tolerance: Tolerances,
}

fn default_seed() -> u64 {
    42
}
fn default_n_theta() -> usize {
    16
}
fn default_epsilon() -> f64 {
    0.01
}
fn default_order() -> ShapeOrder {
    ShapeOrder::Order1
}
fn default_orders() -> Vec<ShapeOrder> {
    vec![ShapeOrder::Order0, ShapeOrder::Order1]
}
fn default_samples() -> usize {
    100
}

impl ExperimentConfig {
    /// Parses and validates a configuration. Parse errors carry the line,
    /// column and offending key.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::Config(format!("field `{field}`: {why}")));
        if self.n_theta < 8 || !self.n_theta.is_multiple_of(2) {
            return bad("n_theta", format!("must be even and at least 8, got {}", self.n_theta));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon", format!("must be positive, got {}", self.epsilon));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return bad("epsilons", format!("entries must be positive, got {e}"));
        }
        let ig = &self.integrator;
        if !(ig.t_final > 0.0 && ig.t_final.is_finite()) {
            return bad("integrator.t_final", format!("must be positive, got {}", ig.t_final));
        }
        if let Some(dt) = ig.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("integrator.dt", format!("must be positive, got {dt}"));
            }
        }
        if !(ig.dt_over_eps > 0.0 && ig.dt_over_eps.is_finite()) {
            return bad(
                "integrator.dt_over_eps",
                format!("must be positive, got {}", ig.dt_over_eps),
            );
        }
        if ig.output_every == 0 || ig.sample_every == 0 {
            return bad(
                "integrator.output_every",
                "output and sample strides must be at least 1".into(),
            );
        }
        if !(ig.periods >= 2.0) {
            return bad(
                "integrator.periods",
                format!("need at least 2 gyroperiods, got {}", ig.periods),
            );
        }
        if ig.samples_per_period < 4 {
            return bad(
                "integrator.samples_per_period",
                format!("need at least 4, got {}", ig.samples_per_period),
            );
        }
        Ok(())
    }

    /// The configured ε list, falling back to the single `epsilon`.
    pub fn epsilon_list(&self) -> Vec<f64> {
        if self.epsilons.is_empty() {
            vec![self.epsilon]
        } else {
            self.epsilons.clone()
        }
    }
}
