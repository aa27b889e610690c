//! Run configuration: a TOML file layered over a named preset.

use std::path::{Path, PathBuf};

use copos::fuzzy::{Domain, ExtremaMode, DEFAULT_SAMPLING_PERIOD};
use copos::model::ModelParams;
use copos::sim::{DoseCaps, Scenario, SimOptions, WINDUP_LIMIT};
use copos::synthesis::SynthesisOptions;
use serde::{Deserialize, Serialize};

pub const PRESET_REPRODUCE: &str = "reproduce-paper";
pub const DEFAULT_CSV_STRIDE: usize = 10;

/// Parameter overrides; unset fields come from the preset.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsOverride {
    pub mu_c: Option<f64>,
    pub mu_i: Option<f64>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub x_inf: Option<f64>,
    pub k_x1: Option<f64>,
    pub k_x2: Option<f64>,
}

impl ParamsOverride {
    fn apply(&self, mut p: ModelParams) -> ModelParams {
        let fields = [
            (&mut p.mu_c, self.mu_c),
            (&mut p.mu_i, self.mu_i),
            (&mut p.gamma, self.gamma),
            (&mut p.beta, self.beta),
            (&mut p.delta, self.delta),
            (&mut p.alpha, self.alpha),
            (&mut p.x_inf, self.x_inf),
            (&mut p.k_x1, self.k_x1),
            (&mut p.k_x2, self.k_x2),
        ];
        for (slot, v) in fields {
            if let Some(v) = v {
                *slot = v;
            }
        }
        p
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainOverride {
    pub x1_min: Option<f64>,
    pub x1_max: Option<f64>,
    pub x2_min: Option<f64>,
    pub x2_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuzzyOverride {
    pub mode: Option<ExtremaMode>,
    pub sampling_period: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationOverride {
    pub caps: Option<DoseCaps>,
    pub windup_limit: Option<f64>,
    pub csv_stride: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOverride {
    pub dir: Option<PathBuf>,
    pub timestamp: Option<bool>,
}

/// The file as written by the user.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    #[serde(default)]
    pub params: ParamsOverride,
    #[serde(default)]
    pub domain: DomainOverride,
    #[serde(default)]
    pub fuzzy: FuzzyOverride,
    pub synthesis: Option<SynthesisOptions>,
    #[serde(default)]
    pub simulation: SimulationOverride,
    pub scenarios: Option<Vec<Scenario>>,
    #[serde(default)]
    pub output: OutputOverride,
}

/// Fully resolved configuration. Serialized into every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub preset: String,
    pub params: ModelParams,
    pub domain: Domain,
    pub mode: ExtremaMode,
    pub sampling_period: f64,
    pub synthesis: SynthesisOptions,
    pub caps: DoseCaps,
    pub windup_limit: f64,
    pub csv_stride: usize,
    pub scenarios: Vec<Scenario>,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub timestamp: bool,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
    pub mode: Option<ExtremaMode>,
    pub sampling_period: Option<f64>,
    pub strict_paper: bool,
    pub no_timestamp: bool,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn parse_file(path: &Path) -> Result<ConfigFile, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse_str(&text).map_err(|ConfigError(msg)| ConfigError(format!("{}: {msg}", path.display())))
}

pub fn parse_str(text: &str) -> Result<ConfigFile, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
}

impl RunConfig {
    pub fn resolve(file: ConfigFile, cli: &Overrides) -> Result<RunConfig, ConfigError> {
        let preset = cli
            .preset
            .clone()
            .or(file.preset.clone())
            .unwrap_or_else(|| ModelParams::PRESET_NAME.to_string());
        let base = match preset.as_str() {
            PRESET_REPRODUCE => ModelParams::stepanova_table1(),
            name => ModelParams::preset(name).ok_or_else(|| {
                ConfigError(format!(
                    "unknown preset '{name}' (expected '{}' or '{PRESET_REPRODUCE}')",
                    ModelParams::PRESET_NAME
                ))
            })?,
        };
        let params = file.params.apply(base);

        let d = Domain::default();
        let domain = Domain {
            x1_min: file.domain.x1_min.unwrap_or(d.x1_min),
            x1_max: file.domain.x1_max.unwrap_or(d.x1_max),
            x2_min: file.domain.x2_min.unwrap_or(d.x2_min),
            x2_max: file.domain.x2_max.unwrap_or(d.x2_max),
        };

        let mut synthesis = match (cli.strict_paper, file.synthesis) {
            (true, _) => SynthesisOptions::strict_paper(),
            (false, Some(s)) => s,
            (false, None) => SynthesisOptions::default(),
        };
        if cli.strict_paper {
            synthesis.enforce_nonpositive_m = true;
        }

        // The reproduction preset always runs the four standard scenarios.
        let scenarios = if preset == PRESET_REPRODUCE {
            Scenario::standard_set()
        } else {
            file.scenarios.unwrap_or_else(Scenario::standard_set)
        };

        let cfg = RunConfig {
            preset,
            params,
            domain,
            mode: cli.mode.or(file.fuzzy.mode).unwrap_or_default(),
            sampling_period: cli
                .sampling_period
                .or(file.fuzzy.sampling_period)
                .unwrap_or(DEFAULT_SAMPLING_PERIOD),
            synthesis,
            caps: file.simulation.caps.unwrap_or_default(),
            windup_limit: file.simulation.windup_limit.unwrap_or(WINDUP_LIMIT),
            csv_stride: file.simulation.csv_stride.unwrap_or(DEFAULT_CSV_STRIDE),
            scenarios,
            out_dir: cli
                .out
                .clone()
                .or(file.output.dir)
                .unwrap_or_else(|| PathBuf::from("out")),
            timestamp: !cli.no_timestamp && file.output.timestamp.unwrap_or(true),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that can be checked before any computation. A zero-width
    /// domain is allowed here; it is reported later as a degenerate sector.
    fn validate(&self) -> Result<(), ConfigError> {
        let wrap = |what: &str, e: copos::Error| ConfigError(format!("{what}: {e}"));
        self.params.validate().map_err(|e| wrap("params", e))?;
        self.domain.validate().map_err(|e| wrap("domain", e))?;
        self.synthesis.validate().map_err(|e| wrap("synthesis", e))?;
        if !(self.sampling_period > 0.0 && self.sampling_period.is_finite()) {
            return Err(ConfigError(format!(
                "fuzzy.sampling_period must be positive, got {}",
                self.sampling_period
            )));
        }
        if !(self.caps.u1 >= 0.0 && self.caps.u2 >= 0.0) {
            return Err(ConfigError(format!("simulation.caps must be nonnegative, got {:?}", self.caps)));
        }
        if !(self.windup_limit > 0.0) {
            return Err(ConfigError("simulation.windup_limit must be positive".into()));
        }
        if self.csv_stride == 0 {
            return Err(ConfigError("simulation.csv_stride must be >= 1".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for sc in &self.scenarios {
            sc.validate().map_err(|e| wrap("scenarios", e))?;
            let safe = !sc.name.is_empty()
                && sc.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !safe {
                return Err(ConfigError(format!(
                    "scenario name '{}' must be non-empty and use only [A-Za-z0-9_-]",
                    sc.name
                )));
            }
            if !names.insert(sc.name.as_str()) {
                return Err(ConfigError(format!("duplicate scenario name '{}'", sc.name)));
            }
        }
        Ok(())
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            caps: self.caps,
            windup_limit: self.windup_limit,
        }
    }
}
