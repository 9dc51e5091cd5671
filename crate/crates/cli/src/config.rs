use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use uatlab::construct::{FitMode, KnotGrid};
use uatlab::lab::{ProbeConfig, DEFAULT_RADII};
use uatlab::{Activation, Domain, QuadratureConfig};

use crate::CliError;

/// Built-in targets, since closures cannot travel through JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// `exp(−|x|²)`
    Gaussian,
    Zero,
    /// `σ(x₀+1) − σ(x₀)`
    LogisticStep,
    /// product of tents `G(xᵢ+1)`, supported on `[−1,1]ⁿ`
    Tent,
}

impl Target {
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Target::Gaussian => (-x.iter().map(|v| v * v).sum::<f64>()).exp(),
            Target::Zero => 0.0,
            Target::LogisticStep => Activation::Logistic.eval(x[0] + 1.0) - Activation::Logistic.eval(x[0]),
            Target::Tent => x.iter().map(|v| uatlab::construct::tent(v + 1.0)).product(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Depth3Config {
    pub target: Target,
    pub domain: Domain,
    /// Lattice widths, fitted in order.
    pub sigma: Vec<f64>,
    pub mode: FitMode,
    pub p: f64,
    pub quadrature: QuadratureConfig,
}

impl Default for Depth3Config {
    fn default() -> Self {
        Self {
            target: Target::Gaussian,
            domain: Domain::cube(2, -4.0, 4.0),
            sigma: vec![1.0, 0.5, 0.25],
            mode: FitMode::LeastSquares,
            p: 2.0,
            quadrature: QuadratureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Shallow1dConfig {
    pub target: Target,
    pub activation: Activation,
    pub k: usize,
    pub knots: KnotGrid,
    pub mode: FitMode,
    pub p: f64,
    pub quadrature: QuadratureConfig,
}

impl Default for Shallow1dConfig {
    fn default() -> Self {
        Self {
            target: Target::Gaussian,
            activation: Activation::Logistic,
            k: 200,
            knots: KnotGrid { lo: -4.0, hi: 4.0 },
            mode: FitMode::LeastSquares,
            p: 2.0,
            quadrature: QuadratureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftedConfig {
    pub target: Target,
    pub y: Vec<f64>,
    pub activation: Activation,
    pub k: usize,
    pub knots: KnotGrid,
    pub mode: FitMode,
    pub p: f64,
    pub quadrature: QuadratureConfig,
}

impl Default for LiftedConfig {
    fn default() -> Self {
        let s = Shallow1dConfig::default();
        Self {
            target: s.target,
            y: vec![2.0, 0.5],
            activation: s.activation,
            k: s.k,
            knots: s.knots,
            mode: s.mode,
            p: s.p,
            quadrature: s.quadrature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ApproximateConfig {
    Depth3(Depth3Config),
    #[serde(rename = "shallow_1d")]
    Shallow1d(Shallow1dConfig),
    Lifted(LiftedConfig),
}

impl Default for ApproximateConfig {
    fn default() -> Self {
        ApproximateConfig::Depth3(Depth3Config::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeCmdConfig {
    pub target: Target,
    pub activation: Activation,
    pub probe: ProbeConfig,
    pub quadrature: QuadratureConfig,
}

impl Default for ProbeCmdConfig {
    fn default() -> Self {
        Self {
            target: Target::Gaussian,
            activation: Activation::Relu,
            probe: ProbeConfig::default(),
            quadrature: QuadratureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthCmdConfig {
    /// Planar shallow net JSON; when absent the single unit below is used.
    pub net: Option<PathBuf>,
    pub activation: Activation,
    pub t: f64,
    pub y: [f64; 2],
    pub rho: f64,
    pub radii: Vec<f64>,
    pub p: f64,
    pub quadrature: QuadratureConfig,
}

impl Default for GrowthCmdConfig {
    fn default() -> Self {
        Self {
            net: None,
            activation: Activation::Relu,
            t: 1.0,
            y: [1.0, 0.0],
            rho: 0.0,
            radii: DEFAULT_RADII.to_vec(),
            p: 1.0,
            quadrature: QuadratureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConeCmdConfig {
    pub c: f64,
    pub two_sided: bool,
    pub quadrature: QuadratureConfig,
}

impl Default for ConeCmdConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            two_sided: true,
            quadrature: QuadratureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct NormCmdConfig {
    /// Shallow or deep net JSON.
    pub net: Option<PathBuf>,
    /// Defaults to ℝⁿ for the net's input dimension.
    pub domain: Option<Domain>,
    pub p: Option<f64>,
    pub quadrature: QuadratureConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub seed: u64,
    pub lifting_trials: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 0, lifting_trials: 8 }
    }
}

/// Reads a config file, or the `config` member of a report this tool wrote.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(obj) = value.as_object_mut() {
        if obj.get("tool").and_then(|t| t.as_str()) == Some("uatlab") {
            let from = obj.get("command").and_then(|c| c.as_str()).unwrap_or_default().to_owned();
            if from != command {
                return Err(CliError::Config(format!("{} is a `{from}` report, not `{command}`", path.display())));
            }
            value = obj.remove("config").unwrap_or_default();
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn show<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default()
}

/// Default config of each command, for `--help`.
pub fn defaults_help() -> Vec<(&'static str, String)> {
    let methods = [
        ApproximateConfig::Depth3(Depth3Config::default()),
        ApproximateConfig::Shallow1d(Shallow1dConfig::default()),
        ApproximateConfig::Lifted(LiftedConfig::default()),
    ];
    vec![
        ("verify-lemmas", show(&VerifyConfig::default())),
        ("approximate", methods.iter().map(show).collect::<Vec<_>>().join("\n")),
        ("probe", show(&ProbeCmdConfig::default())),
        ("growth", show(&GrowthCmdConfig::default())),
        ("cone", show(&ConeCmdConfig::default())),
        ("norm", show(&NormCmdConfig::default())),
    ]
}
