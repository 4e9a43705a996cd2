//! Quadrature over the continuum `[0, omega_max]` and Cauchy principal-value
//! integrals with a simple pole at a discrete level.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest grid accepted by [`build_grid`].
pub const MIN_NODES: usize = 16;

// 4-point Gauss-Legendre rule on [-1, 1].
const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuumError {
    #[error("grid needs at least {MIN_NODES} nodes, got {0}")]
    TooFewNodes(usize),
    #[error("composite Gauss-Legendre grid needs a multiple of 4 nodes, got {0}")]
    IncompatibleNodeCount(usize),
    #[error("continuum cutoff must be positive and finite, got {0}")]
    InvalidCutoff(f64),
    #[error("integrand is not finite at ω = {0}")]
    NonFiniteValue(f64),
    #[error("singularity {singularity} outside the open support (0, {omega_max})")]
    SingularityOutsideSupport { singularity: f64, omega_max: f64 },
    #[error("integrand jumps by {jump:e} at the singularity {singularity}")]
    DiscontinuousAtSingularity { singularity: f64, jump: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridScheme {
    #[default]
    UniformMidpoint,
    GaussLegendreComposite,
}

impl std::str::FromStr for GridScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform-midpoint" => Ok(GridScheme::UniformMidpoint),
            "gauss-legendre-composite" => Ok(GridScheme::GaussLegendreComposite),
            other => Err(format!("unknown grid scheme `{other}`")),
        }
    }
}

impl std::fmt::Display for GridScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GridScheme::UniformMidpoint => "uniform-midpoint",
            GridScheme::GaussLegendreComposite => "gauss-legendre-composite",
        })
    }
}

/// Quadrature nodes and weights on `[0, omega_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    scheme: GridScheme,
    omega_max: f64,
}

/// Builds a grid with `m` nodes. Weights always sum to `omega_max`.
pub fn build_grid(omega_max: f64, m: usize, scheme: GridScheme) -> Result<ContinuumGrid, ContinuumError> {
    if m < MIN_NODES {
        return Err(ContinuumError::TooFewNodes(m));
    }
    if !(omega_max.is_finite() && omega_max > 0.0) {
        return Err(ContinuumError::InvalidCutoff(omega_max));
    }
    let (nodes, weights) = match scheme {
        GridScheme::UniformMidpoint => {
            let h = omega_max / m as f64;
            let nodes = (0..m).map(|k| (k as f64 + 0.5) * h).collect();
            (nodes, vec![h; m])
        }
        GridScheme::GaussLegendreComposite => {
            if m % 4 != 0 {
                return Err(ContinuumError::IncompatibleNodeCount(m));
            }
            let panels = m / 4;
            let h = omega_max / panels as f64;
            let mut nodes = Vec::with_capacity(m);
            let mut weights = Vec::with_capacity(m);
            for p in 0..panels {
                let mid = (p as f64 + 0.5) * h;
                for (x, w) in GL4_NODES.iter().zip(GL4_WEIGHTS) {
                    nodes.push(mid + 0.5 * h * x);
                    weights.push(0.5 * h * w);
                }
            }
            (nodes, weights)
        }
    };
    Ok(ContinuumGrid {
        nodes,
        weights,
        scheme,
        omega_max,
    })
}

impl ContinuumGrid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    /// Largest local spacing, measured by the largest weight.
    pub fn max_spacing(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Moves any node that coincides with one of `levels` by half a local
    /// spacing (towards the interior). Returns the indices that moved.
    pub fn avoid_levels(&mut self, levels: &[f64]) -> Vec<usize> {
        let mut moved = Vec::new();
        for k in 0..self.nodes.len() {
            let spacing = self.weights[k];
            if levels.iter().any(|&l| (self.nodes[k] - l).abs() <= 1e-12 * spacing) {
                let up = self.nodes[k] + 0.5 * spacing;
                let shifted = if up < self.omega_max {
                    up
                } else {
                    self.nodes[k] - 0.5 * spacing
                };
                log::warn!(
                    "grid node {k} at {} coincides with a level; shifted to {shifted}",
                    self.nodes[k]
                );
                self.nodes[k] = shifted;
                moved.push(k);
            }
        }
        moved
    }

    /// Index of the node closest to `omega`.
    pub fn nearest_node(&self, omega: f64) -> usize {
        let k = self.nodes.partition_point(|&x| x < omega);
        if k == 0 {
            0
        } else if k == self.nodes.len() {
            k - 1
        } else if omega - self.nodes[k - 1] <= self.nodes[k] - omega {
            k - 1
        } else {
            k
        }
    }

    /// `Σ w_k f_k` for values already sampled on the nodes.
    pub fn integrate_values(&self, values: &[f64]) -> Result<f64, ContinuumError> {
        debug_assert_eq!(values.len(), self.nodes.len());
        let mut acc = 0.0;
        for ((&x, &w), &v) in self.nodes.iter().zip(&self.weights).zip(values) {
            if !v.is_finite() {
                return Err(ContinuumError::NonFiniteValue(x));
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

/// `Σ w_k f(ω_k)`.
pub fn integrate(f: impl Fn(f64) -> f64, grid: &ContinuumGrid) -> Result<f64, ContinuumError> {
    let mut acc = 0.0;
    for (&x, &w) in grid.nodes.iter().zip(&grid.weights) {
        let v = f(x);
        if !v.is_finite() {
            return Err(ContinuumError::NonFiniteValue(x));
        }
        acc += w * v;
    }
    Ok(acc)
}

/// `PV ∫₀^ωmax f(ω) / (ω − Ω) dω` by singularity subtraction:
/// `∫ (f(ω) − f(Ω)) / (ω − Ω) dω + f(Ω) ln((ωmax − Ω) / Ω)`.
pub fn principal_value(
    f: impl Fn(f64) -> f64,
    singularity: f64,
    grid: &ContinuumGrid,
) -> Result<f64, ContinuumError> {
    let omega_max = grid.omega_max;
    if !(singularity > 0.0 && singularity < omega_max) {
        return Err(ContinuumError::SingularityOutsideSupport {
            singularity,
            omega_max,
        });
    }
    let at_pole = f(singularity);
    if !at_pole.is_finite() {
        return Err(ContinuumError::NonFiniteValue(singularity));
    }
    // A jump at the pole leaves a non-integrable 1/(ω − Ω) residue after
    // subtraction; probe the one-sided values just around it.
    let h = 1e-9 * omega_max;
    let jump = (f(singularity + h) - f(singularity - h)).abs();
    if !(jump <= 1e-6 * (1.0 + at_pole.abs())) {
        return Err(ContinuumError::DiscontinuousAtSingularity { singularity, jump });
    }

    let mut acc = 0.0;
    for (&x, &w) in grid.nodes.iter().zip(&grid.weights) {
        let v = f(x);
        if !v.is_finite() {
            return Err(ContinuumError::NonFiniteValue(x));
        }
        if x == singularity {
            // removable: the subtracted integrand tends to f'(Ω)
            let d = 1e-6 * omega_max;
            acc += w * (f(singularity + d) - f(singularity - d)) / (2.0 * d);
        } else {
            acc += w * (v - at_pole) / (x - singularity);
        }
    }
    Ok(acc + at_pole * ((omega_max - singularity) / singularity).ln())
}

/// Boundary value `∫ f(ω) / (ω − i0 − Ω) dω = iπ f(Ω) + PV ∫ f(ω) / (ω − Ω) dω`.
pub fn resolvent_boundary(
    f: impl Fn(f64) -> f64,
    singularity: f64,
    grid: &ContinuumGrid,
) -> Result<Complex64, ContinuumError> {
    let pv = principal_value(&f, singularity, grid)?;
    Ok(Complex64::new(pv, PI * f(singularity)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// A finite sum of weighted Dirac deltas `Σ w δ(ω − ω₀)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `weight` at `location`, merging with an existing atom there.
    pub fn add(&mut self, location: f64, weight: f64) {
        match self.atoms.iter_mut().find(|a| a.location == location) {
            Some(a) => a.weight += weight,
            None => self.atoms.push(Atom { location, weight }),
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn weight_at(&self, location: f64) -> f64 {
        self.atoms
            .iter()
            .find(|a| a.location == location)
            .map_or(0.0, |a| a.weight)
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }
}

impl FromIterator<(f64, f64)> for AtomicMeasure {
    fn from_iter<T: IntoIterator<Item = (f64, f64)>>(iter: T) -> Self {
        let mut m = AtomicMeasure::new();
        for (location, weight) in iter {
            m.add(location, weight);
        }
        m
    }
}
