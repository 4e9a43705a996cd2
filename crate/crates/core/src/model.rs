//! Discrete levels embedded in a continuum `[0, omega_max]` and the real
//! coupling profile `V(ω, i)` linking them.
//!
//! A [`ModelSpec`] is the raw, serializable description (the JSON model file
//! maps onto it field for field). [`Model`] is the validated form every other
//! module consumes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Ratio between the default continuum cutoff and the highest level.
pub const DEFAULT_CUTOFF_MARGIN: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("level {index} at {level} lies outside the open continuum (0, {omega_max})")]
    LevelOutsideContinuum {
        index: usize,
        level: f64,
        omega_max: f64,
    },
    #[error("levels {first} and {second} are degenerate at {level}")]
    DegenerateLevels {
        first: usize,
        second: usize,
        level: f64,
    },
    #[error("coupling scale must be non-negative, got {0}")]
    NegativeScale(f64),
    #[error("model needs at least one discrete level")]
    NoLevels,
    #[error("continuum cutoff must be positive and finite, got {0}")]
    InvalidCutoff(f64),
    #[error("invalid coupling profile: {0}")]
    InvalidCoupling(String),
    #[error("energy {omega} is outside the continuum support [0, {omega_max}]")]
    OutOfSupport { omega: f64, omega_max: f64 },
    #[error("level index {index} out of range for {count} levels")]
    LevelIndex { index: usize, count: usize },
}

/// A profile parameter that is either shared by all levels or given per level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelParam {
    Uniform(f64),
    PerLevel(Vec<f64>),
}

impl LevelParam {
    pub fn get(&self, i: usize) -> f64 {
        match self {
            LevelParam::Uniform(v) => *v,
            LevelParam::PerLevel(v) => v[i],
        }
    }

    fn check(&self, name: &str, n: usize) -> Result<(), ModelError> {
        let values: &[f64] = match self {
            LevelParam::Uniform(v) => std::slice::from_ref(v),
            LevelParam::PerLevel(v) => {
                if v.len() != n {
                    return Err(ModelError::InvalidCoupling(format!(
                        "`{name}` has {} entries for {n} levels",
                        v.len()
                    )));
                }
                v
            }
        };
        if values.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::InvalidCoupling(format!("`{name}` is not finite")));
        }
        Ok(())
    }
}

impl From<f64> for LevelParam {
    fn from(v: f64) -> Self {
        LevelParam::Uniform(v)
    }
}

impl From<Vec<f64>> for LevelParam {
    fn from(v: Vec<f64>) -> Self {
        LevelParam::PerLevel(v)
    }
}

/// Functional family of `V(ω, i)`.
///
/// Window profiles are centred on the level itself unless `center` is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CouplingProfile {
    Constant {
        amplitude: LevelParam,
    },
    /// `A w² / ((ω − c)² + w²)`
    LorentzianWindow {
        amplitude: LevelParam,
        width: LevelParam,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<LevelParam>,
    },
    /// `A exp(−(ω − c)² / 2w²)`
    GaussianWindow {
        amplitude: LevelParam,
        width: LevelParam,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<LevelParam>,
    },
    /// Piecewise-linear interpolation of sampled values; `values[i]` holds
    /// the samples for level `i` at the energies in `omega`.
    Tabulated { omega: Vec<f64>, values: Vec<Vec<f64>> },
}

impl CouplingProfile {
    pub fn constant(amplitude: f64) -> Self {
        CouplingProfile::Constant {
            amplitude: amplitude.into(),
        }
    }

    fn validate(&self, levels: &[f64], omega_max: f64) -> Result<(), ModelError> {
        let n = levels.len();
        match self {
            CouplingProfile::Constant { amplitude } => amplitude.check("amplitude", n),
            CouplingProfile::LorentzianWindow {
                amplitude,
                width,
                center,
            }
            | CouplingProfile::GaussianWindow {
                amplitude,
                width,
                center,
            } => {
                amplitude.check("amplitude", n)?;
                width.check("width", n)?;
                if let Some(c) = center {
                    c.check("center", n)?;
                }
                if (0..n).any(|i| width.get(i) <= 0.0) {
                    return Err(ModelError::InvalidCoupling("window width must be positive".into()));
                }
                Ok(())
            }
            CouplingProfile::Tabulated { omega, values } => {
                if omega.len() < 2 {
                    return Err(ModelError::InvalidCoupling(
                        "tabulated profile needs at least two samples".into(),
                    ));
                }
                if omega.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(ModelError::InvalidCoupling(
                        "tabulated energies must be strictly increasing".into(),
                    ));
                }
                if omega[0] > 0.0 || omega[omega.len() - 1] < omega_max {
                    return Err(ModelError::InvalidCoupling(format!(
                        "tabulated energies must cover [0, {omega_max}]"
                    )));
                }
                if values.len() != n {
                    return Err(ModelError::InvalidCoupling(format!(
                        "tabulated profile has {} rows for {n} levels",
                        values.len()
                    )));
                }
                for row in values {
                    if row.len() != omega.len() {
                        return Err(ModelError::InvalidCoupling(
                            "tabulated row length differs from the energy table".into(),
                        ));
                    }
                    if row.iter().chain(omega).any(|x| !x.is_finite()) {
                        return Err(ModelError::InvalidCoupling(
                            "tabulated profile contains non-finite values".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// Unscaled `V(ω, i)`; `level` is `Ω_i`, used as the default window centre.
    fn eval(&self, omega: f64, i: usize, level: f64) -> f64 {
        match self {
            CouplingProfile::Constant { amplitude } => amplitude.get(i),
            CouplingProfile::LorentzianWindow {
                amplitude,
                width,
                center,
            } => {
                let c = center.as_ref().map_or(level, |c| c.get(i));
                let w = width.get(i);
                let d = omega - c;
                amplitude.get(i) * w * w / (d * d + w * w)
            }
            CouplingProfile::GaussianWindow {
                amplitude,
                width,
                center,
            } => {
                let c = center.as_ref().map_or(level, |c| c.get(i));
                let w = width.get(i);
                let d = omega - c;
                amplitude.get(i) * (-(d * d) / (2.0 * w * w)).exp()
            }
            CouplingProfile::Tabulated { omega: xs, values } => {
                let ys = &values[i];
                let k = xs.partition_point(|&x| x <= omega).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[k - 1], xs[k]);
                let s = (omega - x0) / (x1 - x0);
                ys[k - 1] + s * (ys[k] - ys[k - 1])
            }
        }
    }
}

fn default_scale() -> f64 {
    1.0
}

/// Serializable model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub levels: Vec<f64>,
    pub omega_max: f64,
    pub coupling: CouplingProfile,
    #[serde(default = "default_scale")]
    pub coupling_scale: f64,
}

impl ModelSpec {
    pub fn new(levels: Vec<f64>, omega_max: f64, coupling: CouplingProfile) -> Self {
        ModelSpec {
            levels,
            omega_max,
            coupling,
            coupling_scale: 1.0,
        }
    }

    /// Spec whose cutoff is [`DEFAULT_CUTOFF_MARGIN`] times the highest level.
    pub fn with_default_cutoff(levels: Vec<f64>, coupling: CouplingProfile) -> Self {
        let top = levels.iter().copied().fold(0.0, f64::max);
        Self::new(levels, DEFAULT_CUTOFF_MARGIN * top, coupling)
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.coupling_scale = scale;
        self
    }

    pub fn validate(self) -> Result<Model, ModelError> {
        Model::new(self)
    }
}

/// A validated [`ModelSpec`]. Immutable; cheap to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ModelSpec,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self, ModelError> {
        if spec.levels.is_empty() {
            return Err(ModelError::NoLevels);
        }
        if !(spec.omega_max.is_finite() && spec.omega_max > 0.0) {
            return Err(ModelError::InvalidCutoff(spec.omega_max));
        }
        for (index, &level) in spec.levels.iter().enumerate() {
            if !(level > 0.0 && level < spec.omega_max) {
                return Err(ModelError::LevelOutsideContinuum {
                    index,
                    level,
                    omega_max: spec.omega_max,
                });
            }
        }
        for (first, &a) in spec.levels.iter().enumerate() {
            for (second, &b) in spec.levels.iter().enumerate().skip(first + 1) {
                if a == b {
                    return Err(ModelError::DegenerateLevels {
                        first,
                        second,
                        level: a,
                    });
                }
            }
        }
        if spec.coupling_scale.is_nan() || spec.coupling_scale < 0.0 {
            return Err(ModelError::NegativeScale(spec.coupling_scale));
        }
        if !spec.coupling_scale.is_finite() {
            return Err(ModelError::InvalidCoupling("coupling scale is not finite".into()));
        }
        spec.coupling.validate(&spec.levels, spec.omega_max)?;
        Ok(Model { spec })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn into_spec(self) -> ModelSpec {
        self.spec
    }

    pub fn levels(&self) -> &[f64] {
        &self.spec.levels
    }

    pub fn level(&self, i: usize) -> f64 {
        self.spec.levels[i]
    }

    pub fn n_levels(&self) -> usize {
        self.spec.levels.len()
    }

    pub fn omega_max(&self) -> f64 {
        self.spec.omega_max
    }

    pub fn coupling_scale(&self) -> f64 {
        self.spec.coupling_scale
    }

    /// Same model with the coupling scale replaced.
    pub fn rescaled(&self, scale: f64) -> Result<Model, ModelError> {
        self.spec.clone().with_scale(scale).validate()
    }

    /// `coupling_scale · V(ω, i)`, which is also `V(i, ω)`.
    pub fn coupling_at(&self, omega: f64, i: usize) -> Result<f64, ModelError> {
        if i >= self.n_levels() {
            return Err(ModelError::LevelIndex {
                index: i,
                count: self.n_levels(),
            });
        }
        if !(0.0..=self.spec.omega_max).contains(&omega) {
            return Err(ModelError::OutOfSupport {
                omega,
                omega_max: self.spec.omega_max,
            });
        }
        Ok(self.coupling(omega, i))
    }

    /// Unchecked variant of [`Model::coupling_at`] for hot loops over grid nodes.
    #[inline]
    pub fn coupling(&self, omega: f64, i: usize) -> f64 {
        if self.spec.coupling_scale == 0.0 {
            return 0.0;
        }
        self.spec.coupling_scale * self.spec.coupling.eval(omega, i, self.spec.levels[i])
    }

    /// `V(ω, i)²`.
    #[inline]
    pub fn coupling_sq(&self, omega: f64, i: usize) -> f64 {
        let v = self.coupling(omega, i);
        v * v
    }

    /// `V(Ω_i, i)²`, the on-shell coupling strength of level `i`.
    pub fn on_shell_coupling_sq(&self, i: usize) -> f64 {
        self.coupling_sq(self.level(i), i)
    }
}
