//! Run configuration: a flat, human-writable key-value file (TOML syntax)
//! describing the model, the chart, the calibration budget and I/O paths.
//! Command-line flags override file keys; absent keys fall back to the
//! defaults documented on each accessor.

use std::path::Path;

use serde::{Deserialize, Serialize};
use shiftguard::arma::ArmaModel;
use shiftguard::{Error, Result};

/// Which chart a run drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartMethod {
    /// Windowed level-shift chart.
    Tsay,
    /// Two-sided CUSUM on standardized one-step errors.
    Cusum,
}

/// The full run configuration. Every key is optional in the file; exactly
/// one chart method is in force per run (`method`, default `"tsay"`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// AR coefficients φ₁..φ_p.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ar: Vec<f64>,
    /// MA coefficients θ₁..θ_q.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ma: Vec<f64>,
    /// Innovation standard deviation (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_a: Option<f64>,
    /// Process mean (default 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    /// Chart method: "tsay" (default) or "cusum".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    /// Window size K for the windowed chart.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_size: Option<usize>,
    /// Critical value h; omit with `auto = true` to calibrate on demand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_value: Option<f64>,
    /// CUSUM slack s (standardized units).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    /// CUSUM decision interval h_c; omit with `auto = true` to calibrate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    /// Allow on-demand calibration when the chart limit is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto: Option<bool>,
    /// Target in-control ARL (default 370.4).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_arl0: Option<f64>,
    /// Significance level for intervals (default 0.05).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Monte Carlo repetitions; omit to derive from `margin`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Half-width (ARL units) the repetition count must reach (default 5).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    /// Additive step of the critical-value search (default 0.05).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Input path ("-" or absent = stdin where a stream is read).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    /// Output path ("-" or absent = stdout for streams).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Master seed (default 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Parses a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Parses configuration text.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Malformed(format!("config: {e}")))
    }

    /// Builds the ARMA model (validates stationarity/invertibility).
    pub fn model(&self) -> Result<ArmaModel> {
        ArmaModel::new(
            self.ar.clone(),
            self.ma.clone(),
            self.sigma_a.unwrap_or(1.0),
            self.mean.unwrap_or(0.0),
        )
    }

    /// Selected chart method (default the windowed chart).
    pub fn chart_method(&self) -> Result<ChartMethod> {
        match self.method.as_deref() {
            None | Some("tsay") => Ok(ChartMethod::Tsay),
            Some("cusum") => Ok(ChartMethod::Cusum),
            Some(other) => Err(Error::InvalidParameter(format!(
                "method must be \"tsay\" or \"cusum\", got \"{other}\""
            ))),
        }
    }

    /// Target in-control ARL (default 370.4).
    pub fn target_arl0(&self) -> f64 {
        self.target_arl0.unwrap_or(370.4)
    }

    /// Interval significance level (default 0.05).
    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(0.05)
    }

    /// Critical-value search step (default 0.05).
    pub fn step(&self) -> f64 {
        self.step.unwrap_or(0.05)
    }

    /// Repetition count: explicit `n`, else the smallest N whose interval
    /// half-width at the target ARL meets `margin` (default margin 5).
    pub fn n_reps(&self) -> Result<usize> {
        match self.n {
            Some(n) => Ok(n),
            None => shiftguard::calibrate::choose_n_for_margin(
                self.target_arl0(),
                self.beta(),
                self.margin.unwrap_or(5.0),
            ),
        }
    }

    /// Master seed (default 0).
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Whether on-demand calibration is allowed (default false).
    pub fn auto(&self) -> bool {
        self.auto.unwrap_or(false)
    }
}
