//! Run configuration, read from TOML or from a previous run's manifest.

use std::path::{Path, PathBuf};

use cylfield_core::flow::{Integrator, Refresh, DEFAULT_DLAMBDA};
use cylfield_core::FreeMeasureSpec;
use serde::{Deserialize, Serialize};

/// A configuration problem; maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub spec: SpecConfig,
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub coupling: f64,
    #[serde(default)]
    pub series: SeriesConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub mixing: MixingConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub dim: usize,
    pub mass: f64,
    pub n_max: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub count: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesConfig {
    /// Top level of the tail sums; defaults to `n_max`.
    pub top: Option<usize>,
    pub degree: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig { top: None, degree: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub level: usize,
    /// Cutoffs `m`; defaults to `level+1..=n_max`.
    pub cutoffs: Option<Vec<usize>>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { level: 1, cutoffs: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixingConfig {
    pub degree: usize,
}

impl Default for MixingConfig {
    fn default() -> Self {
        MixingConfig { degree: 4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub dlambda: f64,
    pub steps: usize,
    /// Flow level; defaults to `n_max`.
    pub level: Option<usize>,
    pub integrator: Integrator,
    pub refresh: Refresh,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            dlambda: DEFAULT_DLAMBDA,
            steps: 10,
            level: None,
            integrator: Integrator::Euler,
            refresh: Refresh::Wick,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Also write the sampled ensemble in binary form.
    pub save_ensemble: bool,
}

pub const MAX_DIM: usize = 3;
pub const MAX_LEVEL: usize = 8;
pub const MAX_COUNT: usize = 10_000_000;
pub const MAX_STEPS: usize = 100_000;

impl RunConfig {
    /// Reads a TOML config, or the `config` field of a `.json` manifest.
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            let manifest: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
            let inner = manifest.get("config").ok_or_else(|| bad("manifest has no config field"))?;
            serde_json::from_value(inner.clone()).map_err(|e| bad(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(bad("name must be non-empty and contain no path separators"));
        }
        let s = &self.spec;
        if !(1..=MAX_DIM).contains(&s.dim) {
            return Err(bad(format!("spec.dim must be in 1..={MAX_DIM}")));
        }
        if !(s.mass > 0.0 && s.mass.is_finite()) {
            return Err(bad("spec.mass must be positive"));
        }
        if s.n_max > MAX_LEVEL {
            return Err(bad(format!("spec.n_max must be at most {MAX_LEVEL}")));
        }
        if !(1..=MAX_COUNT).contains(&self.sampling.count) {
            return Err(bad(format!("sampling.count must be in 1..={MAX_COUNT}")));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(bad("coupling must be finite and non-negative"));
        }
        if self.series_top() > s.n_max {
            return Err(bad("series.top exceeds spec.n_max"));
        }
        if self.series.degree > 6 {
            return Err(bad("series.degree must be at most 6"));
        }
        if self.probe.level >= s.n_max {
            return Err(bad("probe.level must be below spec.n_max"));
        }
        if self.probe_cutoffs().iter().any(|&m| m <= self.probe.level || m > s.n_max) {
            return Err(bad("probe.cutoffs must lie in (probe.level, n_max]"));
        }
        if !(1..=8).contains(&self.mixing.degree) {
            return Err(bad("mixing.degree must be in 1..=8"));
        }
        let f = &self.flow;
        if !(f.dlambda > 0.0 && f.dlambda.is_finite()) {
            return Err(bad("flow.dlambda must be positive"));
        }
        if f.steps > MAX_STEPS {
            return Err(bad(format!("flow.steps must be at most {MAX_STEPS}")));
        }
        if self.flow_level() > s.n_max {
            return Err(bad("flow.level exceeds spec.n_max"));
        }
        Ok(())
    }

    pub fn free_spec(&self) -> anyhow::Result<FreeMeasureSpec> {
        FreeMeasureSpec::new(self.spec.dim, self.spec.mass, self.spec.n_max).map_err(|e| bad(e.to_string()))
    }

    pub fn series_top(&self) -> usize {
        self.series.top.unwrap_or(self.spec.n_max)
    }

    pub fn probe_cutoffs(&self) -> Vec<usize> {
        self.probe.cutoffs.clone().unwrap_or_else(|| (self.probe.level + 1..=self.spec.n_max).collect())
    }

    pub fn flow_level(&self) -> usize {
        self.flow.level.unwrap_or(self.spec.n_max)
    }
}
