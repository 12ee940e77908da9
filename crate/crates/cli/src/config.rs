//! Run configuration: a TOML file with one flat section per command plus shared
//! `[driver]` and `[field]` sections. Every key has a default, so an absent file or
//! section is valid.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub driver: DriverConfig,
    pub field: FieldConfig,
    pub sample: OutputConfig,
    pub lift: OutputConfig,
    pub validate: ValidateConfig,
    #[serde(rename = "solve-sde")]
    pub solve_sde: SolveSdeConfig,
    #[serde(rename = "solve-dde")]
    pub solve_dde: SolveDdeConfig,
    pub convergence: ConvergenceConfig,
    #[serde(rename = "mc-area")]
    pub mc_area: McAreaConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }
}

/// The driving signal: an fBm sample, or a path read from a CSV file.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriverConfig {
    #[serde(rename = "H", alias = "hurst")]
    pub hurst: f64,
    #[serde(alias = "dim")]
    pub d: usize,
    pub n: usize,
    #[serde(rename = "T", alias = "t_end")]
    pub t_end: f64,
    pub seed: u64,
    /// Delays in time units; the sampled grid then starts at `-max(delays)`.
    pub delays: Vec<f64>,
    /// CSV path file (as written by `sample`) used instead of sampling.
    pub input: Option<String>,
}

impl Default for DriverConfig {
    fn default() -> Self {
        Self {
            hurst: 0.35,
            d: 2,
            n: 256,
            t_end: 1.0,
            seed: 7,
            delays: Vec::new(),
            input: None,
        }
    }
}

/// A catalog vector field; every key other than `name` is a numeric parameter.
#[derive(Debug, Clone, Deserialize)]
pub struct FieldConfig {
    #[serde(default = "default_field")]
    pub name: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

fn default_field() -> String {
    "linear".into()
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            name: default_field(),
            params: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// File name inside the output directory.
    pub output: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub inject_fault: bool,
    pub output: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdeMethod {
    Step3,
    Picard,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSdeConfig {
    /// Initial state; its length is the state dimension.
    pub y0: Vec<f64>,
    pub method: SdeMethod,
    pub tol: f64,
    pub max_iter: usize,
    /// Driver regularity used by the diagnostics.
    pub gamma: Option<f64>,
    pub output: Option<String>,
}

impl Default for SolveSdeConfig {
    fn default() -> Self {
        Self {
            y0: vec![1.0],
            method: SdeMethod::Step3,
            tol: 1e-10,
            max_iter: 100,
            gamma: None,
            output: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveDdeConfig {
    /// Constant initial segment on `[-max(delays), 0]`.
    pub xi: Vec<f64>,
    pub gamma: Option<f64>,
    pub output: Option<String>,
}

impl Default for SolveDdeConfig {
    fn default() -> Self {
        Self {
            xi: vec![1.0],
            gamma: None,
            output: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Sde,
    Dde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signal {
    /// `x_t = t` in every component.
    Identity,
    /// `x^i_t = sin((i + 1) t)`.
    Sine,
    /// fBm from the `[driver]` section.
    Fbm,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub solver: Solver,
    pub signal: Signal,
    /// Cell counts of the ladder; the reference uses 16 times the largest.
    pub rungs: Vec<usize>,
    /// Initial state (or constant initial segment for the delay solver).
    pub y0: Vec<f64>,
    /// fBm draws (seeds `seed..seed + samples`) whose errors are averaged per rung.
    pub samples: usize,
    pub output: Option<String>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            solver: Solver::Sde,
            signal: Signal::Identity,
            rungs: vec![16, 32, 64, 128],
            y0: vec![1.0],
            samples: 32,
            output: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum McMode {
    Area,
    Scaling,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McAreaConfig {
    pub mode: McMode,
    #[serde(rename = "H", alias = "hurst")]
    pub hurst: f64,
    pub v1: f64,
    pub v2: f64,
    #[serde(rename = "N", alias = "samples")]
    pub samples: usize,
    /// Cells on `[0, tau]` in area mode.
    pub n: usize,
    pub tau: f64,
    pub seed: u64,
    /// Scaling mode: 2 for areas, 3 for volumes.
    pub level: u8,
    pub taus: Vec<f64>,
    pub cells_per_min_tau: usize,
    pub output: Option<String>,
}

impl Default for McAreaConfig {
    fn default() -> Self {
        Self {
            mode: McMode::Area,
            hurst: 0.3,
            v1: 0.0,
            v2: 0.0,
            samples: 2000,
            n: 1024,
            tau: 1.0,
            seed: 20240601,
            level: 2,
            taus: (2..=7).map(|k| 0.5f64.powi(k)).collect(),
            cells_per_min_tau: 32,
            output: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_field_parameters_parse() {
        let cfg: RunConfig = toml::from_str(
            "[driver]\nH = 0.4\nn = 64\nT = 2\ndelays = [0.25]\n\
             [field]\nname = \"sine\"\namplitude = 0.5\nomega = 2\n\
             [solve-sde]\ny0 = [1.0, 0.0]\nmethod = \"picard\"\n",
        )
        .unwrap();
        assert_eq!(cfg.driver.hurst, 0.4);
        assert_eq!(cfg.driver.t_end, 2.0);
        assert_eq!(cfg.driver.d, 2);
        assert_eq!(cfg.field.name, "sine");
        assert_eq!(cfg.field.params["omega"], 2.0);
        assert_eq!(cfg.solve_sde.method, SdeMethod::Picard);
        assert_eq!(cfg.mc_area.samples, 2000);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[driver]\nhurts = 0.3\n").is_err());
        assert!(toml::from_str::<RunConfig>("[nope]\n").is_err());
    }
}
