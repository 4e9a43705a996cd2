//! Run configuration: JSON on disk, resolved into [`ResolvedConfig`] once
//! command-line overrides and defaults are applied. The resolved form is what
//! gets hashed into every CSV header.

use std::path::{Path, PathBuf};

use pointer_basis::continuum::GridScheme;
use pointer_basis::model::ModelSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const DEFAULT_GRID_M: usize = 2000;
pub const DEFAULT_SAMPLES: usize = 60;

/// Model given either as a path (relative to the config file) or inline.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Path(PathBuf),
    Inline(ModelSpec),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    #[default]
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub scheme: GridScheme,
}

fn default_m() -> usize {
    DEFAULT_GRID_M
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            m: DEFAULT_GRID_M,
            scheme: GridScheme::default(),
        }
    }
}

/// `t_end` defaults to five lifetimes of the slowest decaying level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimesConfig {
    #[serde(default)]
    pub t_start: f64,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

impl Default for TimesConfig {
    fn default() -> Self {
        TimesConfig {
            t_start: 0.0,
            t_end: None,
            samples: DEFAULT_SAMPLES,
            spacing: Spacing::Log,
        }
    }
}

/// Initial state of `evolve` and `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialState {
    /// All population in one level.
    Level { level: usize },
    /// Diagonal mixture.
    Populations { values: Vec<f64> },
    /// Pure superposition, `[re, im]` pairs.
    Amplitudes { values: Vec<[f64; 2]> },
    /// Pure superposition drawn from the seed.
    Random,
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Level { level: 0 }
    }
}

/// Quantity compared against the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "observable", rename_all = "lowercase", deny_unknown_fields)]
pub enum CompareConfig {
    /// `|⟨i|e^{−iHt}|i⟩|²` against `e^{−Γ_i t}`.
    Survival { level: usize },
    /// `|ρ_ij(t)|` against `|ρ_ij(0)| e^{−(Γ_i+Γ_j)t/2}`.
    Coherence { i: usize, j: usize },
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig::Survival { level: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub amplitudes: Vec<[f64; 2]>,
    #[serde(default)]
    pub labels: Option<Vec<usize>>,
    /// Also write pointer weights over the time grid.
    #[serde(default = "default_true")]
    pub timeline: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSource,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub times: TimesConfig,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub measure: Option<MeasureConfig>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid_m: Option<usize>,
    pub seed: Option<u64>,
    pub amplitudes: Option<Vec<[f64; 2]>>,
}

/// Everything a run depends on, with the model loaded and paths resolved.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub model: ModelSpec,
    pub grid: GridConfig,
    pub times: TimesConfig,
    pub initial: InitialState,
    pub seed: u64,
    pub compare: CompareConfig,
    pub measure: Option<MeasureConfig>,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl ResolvedConfig {
    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn parse_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::ConfigParse(format!("{}: {e}", path.display()))
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<ResolvedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_error(path, e))?;
    let config: RunConfig = serde_json::from_str(&text).map_err(|e| parse_error(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    resolve(config, base, overrides)
}

pub fn resolve(config: RunConfig, base: &Path, overrides: &Overrides) -> Result<ResolvedConfig, CliError> {
    let model = match config.model {
        ModelSource::Inline(spec) => spec,
        ModelSource::Path(p) => {
            let full = base.join(&p);
            let text = std::fs::read_to_string(&full).map_err(|e| parse_error(&full, e))?;
            serde_json::from_str(&text).map_err(|e| parse_error(&full, e))?
        }
    };
    let mut grid = config.grid;
    if let Some(m) = overrides.grid_m {
        grid.m = m;
    }
    let mut measure = config.measure;
    if let Some(a) = &overrides.amplitudes {
        match measure.as_mut() {
            Some(m) => m.amplitudes = a.clone(),
            None => {
                measure = Some(MeasureConfig {
                    amplitudes: a.clone(),
                    labels: None,
                    timeline: true,
                })
            }
        }
    }
    let output_dir = match (&overrides.out, &config.output_dir) {
        (Some(o), _) => o.clone(),
        (None, Some(d)) => base.join(d),
        (None, None) => PathBuf::from("out"),
    };
    let times = config.times;
    if times.samples < 2 {
        return Err(CliError::ConfigParse(format!("times.samples must be at least 2, got {}", times.samples)));
    }
    if !(times.t_start >= 0.0) {
        return Err(CliError::ConfigParse(format!("times.t_start must be ≥ 0, got {}", times.t_start)));
    }
    if let Some(end) = times.t_end {
        if !(end > times.t_start) {
            return Err(CliError::ConfigParse(format!(
                "times.t_end ({end}) must exceed t_start ({})",
                times.t_start
            )));
        }
    }
    Ok(ResolvedConfig {
        model,
        grid,
        times,
        initial: config.initial,
        seed: overrides.seed.unwrap_or(config.seed),
        compare: config.compare,
        measure,
        output_dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> Result<ResolvedConfig, CliError> {
        let c: RunConfig = serde_json::from_str(json).map_err(|e| CliError::ConfigParse(e.to_string()))?;
        resolve(c, Path::new("."), &Overrides::default())
    }

    const MODEL: &str = r#"{"levels": [1.0, 2.0], "omega_max": 10.0, "coupling": {"kind": "constant", "amplitude": 0.05}}"#;

    #[test]
    fn defaults() {
        let c = parse(&format!(r#"{{"model": {MODEL}}}"#)).unwrap();
        assert_eq!(c.grid.m, DEFAULT_GRID_M);
        assert_eq!(c.times.spacing, Spacing::Log);
        assert_eq!(c.initial, InitialState::Level { level: 0 });
        assert_eq!(c.compare, CompareConfig::Survival { level: 0 });
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn full_config() {
        let c = parse(&format!(
            r#"{{
                "model": {MODEL},
                "grid": {{"m": 500, "scheme": "gauss-legendre-composite"}},
                "times": {{"t_start": 1.0, "t_end": 50.0, "samples": 10, "spacing": "linear"}},
                "initial": {{"kind": "amplitudes", "values": [[0.6, 0.0], [0.0, 0.8]]}},
                "compare": {{"observable": "coherence", "i": 0, "j": 1}},
                "measure": {{"amplitudes": [[1.0, 0.0], [0.0, 0.0]]}},
                "seed": 9
            }}"#
        ))
        .unwrap();
        assert_eq!(c.grid.scheme, GridScheme::GaussLegendreComposite);
        assert_eq!(c.times.t_end, Some(50.0));
        assert_eq!(c.compare, CompareConfig::Coherence { i: 0, j: 1 });
        assert!(c.measure.unwrap().timeline);
    }

    #[test]
    fn invalid_times() {
        assert!(parse(&format!(r#"{{"model": {MODEL}, "times": {{"samples": 1}}}}"#)).is_err());
        assert!(parse(&format!(r#"{{"model": {MODEL}, "times": {{"t_start": 5, "t_end": 1}}}}"#)).is_err());
        assert!(parse(&format!(r#"{{"model": {MODEL}, "bogus": 1}}"#)).is_err());
    }

    #[test]
    fn overrides_change_the_hash() {
        let c: RunConfig = serde_json::from_str(&format!(r#"{{"model": {MODEL}}}"#)).unwrap();
        let a = resolve(c.clone(), Path::new("."), &Overrides::default()).unwrap();
        let b = resolve(
            c,
            Path::new("."),
            &Overrides {
                grid_m: Some(100),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
