//! TOML run configuration.
//!
//! Every key is optional. Defaults describe an L = 4 Ising chain with
//! `t1 = t2 = 1`, `h0 = 2e4`, `sigma_h = 50`, `sigma_J = 3`, `J0 = 5`, the
//! initial state `1000`, 200 periods and 100 realizations, swept over a
//! 21-point epsilon grid on `[0, 0.2]`. Unknown keys are rejected.
//!
//! ```toml
//! L = 4
//! epsilon = 0.0
//! J0 = 5.0
//! sigma_J = 3.0
//! initial_state = "1000"      # or "all", "random:N"
//! observables = ["Z_1", "Z_3"] # Z_k, lifetime_k, fspt
//! horizon = 200
//! realizations = 100
//! seed = 0
//!
//! [[axes]]
//! name = "epsilon"
//! min = 0.0
//! max = 0.2
//! count = 21
//!
//! [[axes]]
//! name = "sigma_J"
//! values = [0.0, 0.1, 1.0]
//!
//! [output]
//! path = "fig.csv"
//! format = "csv"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DisorderDistribution, FloquetDriveSpec, ModelKind};
use crate::scaling::{ScalingCampaign, DEFAULT_HORIZON_CAP};
use crate::sweep::{
    Campaign, InitialStates, ObservableId, Parameter, SweepAxis, DEFAULT_WORK_BUDGET,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::config(format!("unknown output format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Standard output when absent.
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
    /// Add a wall-clock timestamp to JSON metadata. Off by default so that
    /// a config determines its output byte for byte.
    pub timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawValue {
    Number(f64),
    Text(String),
}

/// One `[[axes]]` table: either `values`, or `min`, `max`, `count` and an
/// optional `scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<RawValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<GridScale>,
}

impl AxisConfig {
    pub fn grid(name: &str, min: f64, max: f64, count: usize) -> Self {
        AxisConfig {
            name: name.into(),
            values: None,
            min: Some(min),
            max: Some(max),
            count: Some(count),
            scale: None,
        }
    }

    pub fn list(name: &str, values: Vec<RawValue>) -> Self {
        AxisConfig {
            name: name.into(),
            values: Some(values),
            min: None,
            max: None,
            count: None,
            scale: None,
        }
    }

    fn resolve(&self, n_qubits: usize) -> Result<SweepAxis> {
        let parameter: Parameter = self.name.parse()?;
        let ctx = |e: Error| Error::config(format!("axis {:?}: {}", self.name, strip(e)));
        match (&self.values, self.min, self.max, self.count) {
            (Some(values), None, None, None) if parameter == Parameter::InitialState => {
                let texts = values
                    .iter()
                    .map(|v| match v {
                        RawValue::Text(s) => Ok(s.clone()),
                        RawValue::Number(x) => Err(Error::config(format!(
                            "initial states must be quoted strings, got {x}"
                        ))),
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(ctx)?;
                SweepAxis::initial_states(&texts, n_qubits).map_err(ctx)
            }
            (Some(values), None, None, None) => {
                let nums = values
                    .iter()
                    .map(|v| match v {
                        RawValue::Number(x) => Ok(*x),
                        RawValue::Text(s) => Err(Error::config(format!("expected a number, got {s:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(ctx)?;
                SweepAxis::numeric(parameter, nums).map_err(ctx)
            }
            (None, Some(min), Some(max), Some(count)) => match self.scale.unwrap_or_default() {
                GridScale::Linear => SweepAxis::linear(parameter, min, max, count),
                GridScale::Log => SweepAxis::logarithmic(parameter, min, max, count),
            }
            .map_err(ctx),
            _ => Err(ctx(Error::config(
                "give either `values` or all of `min`, `max`, `count`",
            ))),
        }
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) | Error::InvalidInput(m) => m,
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub lengths: Vec<usize>,
    pub horizon_cap: u64,
    /// Existing per-length file to refit instead of simulating.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<PathBuf>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            lengths: vec![3, 4, 5, 6],
            horizon_cap: DEFAULT_HORIZON_CAP,
            points: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(rename = "L")]
    pub n_qubits: usize,
    pub epsilon: f64,
    pub t1: f64,
    pub t2: f64,
    pub model: ModelKind,
    pub h2i_pulses: u32,
    #[serde(rename = "J0")]
    pub j0: f64,
    #[serde(rename = "sigma_J")]
    pub sigma_j: f64,
    pub h0: f64,
    pub sigma_h: f64,
    pub initial_state: String,
    pub observables: Vec<String>,
    pub horizon: u64,
    pub realizations: u64,
    pub seed: u64,
    pub work_budget: f64,
    /// `None` means the default epsilon grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<AxisConfig>>,
    pub scaling: ScalingConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_qubits: 4,
            epsilon: 0.0,
            t1: 1.0,
            t2: 1.0,
            model: ModelKind::Ising,
            h2i_pulses: 0,
            j0: 5.0,
            sigma_j: 3.0,
            h0: 2.0e4,
            sigma_h: 50.0,
            initial_state: "1000".into(),
            observables: vec!["Z_1".into(), "Z_3".into()],
            horizon: 200,
            realizations: 100,
            seed: 0,
            work_budget: DEFAULT_WORK_BUDGET,
            axes: None,
            scaling: ScalingConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parse TOML; `origin` names the source in error messages.
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("{origin}: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn drive_spec(&self) -> FloquetDriveSpec {
        FloquetDriveSpec {
            n_qubits: self.n_qubits,
            epsilon: self.epsilon,
            t1: self.t1,
            t2: self.t2,
            model: self.model,
            h2i_pulses: self.h2i_pulses,
            distribution: DisorderDistribution {
                j0: self.j0,
                sigma_j: self.sigma_j,
                h0: self.h0,
                sigma_h: self.sigma_h,
            },
        }
    }

    pub fn initial_states(&self) -> Result<InitialStates> {
        self.initial_state
            .parse()
            .map_err(|e| Error::config(format!("initial_state: {}", strip(e))))
    }

    pub fn observable_ids(&self) -> Result<Vec<ObservableId>> {
        self.observables
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.parse()
                    .map_err(|e| Error::config(format!("observables[{i}]: {}", strip(e))))
            })
            .collect()
    }

    /// Explicit axes, or the default 21-point epsilon grid when none are given.
    pub fn sweep_axes(&self) -> Result<Vec<SweepAxis>> {
        match &self.axes {
            Some(axes) => axes.iter().map(|a| a.resolve(self.n_qubits)).collect(),
            None => Ok(vec![SweepAxis::linear(Parameter::Epsilon, 0.0, 0.2, 21)?]),
        }
    }

    pub fn has_explicit_axes(&self) -> bool {
        self.axes.as_ref().is_some_and(|a| !a.is_empty())
    }

    pub fn campaign(&self) -> Result<Campaign> {
        let mut campaign = Campaign::new(
            self.drive_spec(),
            self.initial_states()?,
            self.sweep_axes()?,
            self.observable_ids()?,
            self.horizon,
            self.realizations,
            self.seed,
        );
        campaign.work_budget = self.work_budget;
        campaign.cells()?;
        Ok(campaign)
    }

    pub fn scaling_campaign(&self) -> Result<ScalingCampaign> {
        Ok(ScalingCampaign {
            lengths: self.scaling.lengths.clone(),
            base: self.drive_spec(),
            initial: self.initial_states()?,
            n_realizations: self.realizations,
            seed: self.seed,
            horizon_cap: self.scaling.horizon_cap,
            work_budget: self.work_budget,
        })
    }
}
