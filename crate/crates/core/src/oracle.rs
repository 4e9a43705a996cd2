//! Exact dynamics of the continuum-discretized Hamiltonian.
//!
//! The continuum on the grid becomes `M` extra levels `|ω_k⟩` with
//! `H_{i,k} = V(ω_k, i)·√w_k`, so `Σ_k H_{i,k}² → ∫ V² dω`. One dense
//! symmetric eigendecomposition is done up front; every later query is a
//! spectral sum. A finite grid revives after `2π/Δω`, so samples carry a
//! flag saying whether they lie inside half that window.

use std::sync::Arc;

use faer::{Mat, Side};
use num_complex::Complex64;
use thiserror::Error;

use crate::continuum::ContinuumGrid;
use crate::fit::{exponential_rate, linear_fit, linspace, unwrap_phase};
use crate::model::Model;

const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("eigendecomposition failed: {0}")]
    EigensolverFailure(String),
    #[error("initial vector has norm² {0}, expected 1")]
    NotNormalized(f64),
    #[error("t = {0} is past half the recurrence time")]
    RecurrenceWindowExceeded(f64),
    #[error("initial vector has length {got}, expected {levels} or {total}")]
    DimensionMismatch { got: usize, levels: usize, total: usize },
    #[error("level index {index} out of range for {count} levels")]
    LevelIndex { index: usize, count: usize },
    #[error("fit failed: {0}")]
    FitFailed(&'static str),
}

/// An oracle result together with its recurrence-window flag.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSample<T> {
    pub t: f64,
    pub value: T,
    pub within_window: bool,
}

impl<T> OracleSample<T> {
    /// The value, or an error if the sample lies past the recurrence window.
    pub fn require_valid(self) -> Result<T, OracleError> {
        if self.within_window {
            Ok(self.value)
        } else {
            Err(OracleError::RecurrenceWindowExceeded(self.t))
        }
    }
}

/// Initial vector expanded on the eigenbasis, `c = Qᵀψ₀`.
#[derive(Debug, Clone)]
pub struct PreparedState {
    coefficients: Vec<Complex64>,
}

/// Continuum occupation density and discrete populations at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDistribution {
    /// `|⟨ω_k|ψ⟩|² / w_k`.
    pub density: Vec<f64>,
    pub discrete: Vec<f64>,
    weights: Vec<f64>,
}

impl EnergyDistribution {
    pub fn continuum_mass(&self) -> f64 {
        self.density.iter().zip(&self.weights).map(|(d, w)| d * w).sum()
    }

    pub fn total(&self) -> f64 {
        self.continuum_mass() + self.discrete.iter().sum::<f64>()
    }

    /// Continuum mass with `lo ≤ ω_k < hi`.
    pub fn mass_between(&self, nodes: &[f64], lo: f64, hi: f64) -> f64 {
        nodes
            .iter()
            .zip(self.density.iter().zip(&self.weights))
            .filter(|(&x, _)| x >= lo && x < hi)
            .map(|(_, (d, w))| d * w)
            .sum()
    }
}

/// Rate and energy read off the survival amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceFit {
    /// Decay rate of `|A(t)|²`.
    pub rate: f64,
    /// Oscillation frequency of `A(t)`, the dressed level energy.
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct OracleModel {
    grid: Arc<ContinuumGrid>,
    levels: Vec<f64>,
    hamiltonian: Mat<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<f64>,
    decoupled: Vec<bool>,
    recurrence_time: f64,
}

/// Builds and diagonalizes the `(N+M)×(N+M)` Hamiltonian.
pub fn discretize(model: &Model, grid: &ContinuumGrid) -> Result<OracleModel, OracleError> {
    let n = model.n_levels();
    let m = grid.len();
    let dim = n + m;
    let mut h = Mat::<f64>::zeros(dim, dim);
    let mut decoupled = vec![true; n];
    for i in 0..n {
        h[(i, i)] = model.level(i);
        for (k, (&x, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
            let c = model.coupling(x, i) * w.sqrt();
            if c != 0.0 {
                decoupled[i] = false;
            }
            h[(i, n + k)] = c;
            h[(n + k, i)] = c;
        }
    }
    for (k, &x) in grid.nodes().iter().enumerate() {
        h[(n + k, n + k)] = x;
    }
    let (eigenvalues, eigenvectors) = if decoupled.iter().all(|&d| d) {
        // already diagonal: keep the basis order and skip the solver
        ((0..dim).map(|r| h[(r, r)]).collect(), Mat::identity(dim, dim))
    } else {
        let evd = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| OracleError::EigensolverFailure(format!("{e:?}")))?;
        let values: Vec<f64> = evd.S().column_vector().iter().copied().collect();
        if values.iter().any(|e| !e.is_finite()) {
            return Err(OracleError::EigensolverFailure("non-finite eigenvalue".into()));
        }
        (values, evd.U().to_owned())
    };
    Ok(OracleModel {
        grid: Arc::new(grid.clone()),
        levels: model.levels().to_vec(),
        hamiltonian: h,
        eigenvalues,
        eigenvectors,
        decoupled,
        recurrence_time: 2.0 * std::f64::consts::PI / grid.max_spacing(),
    })
}

impl OracleModel {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn grid(&self) -> &ContinuumGrid {
        &self.grid
    }

    pub fn hamiltonian(&self) -> &Mat<f64> {
        &self.hamiltonian
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Mat<f64> {
        &self.eigenvectors
    }

    pub fn recurrence_time(&self) -> f64 {
        self.recurrence_time
    }

    /// `0 ≤ t < recurrence_time / 2`.
    pub fn within_window(&self, t: f64) -> bool {
        t >= 0.0 && t < 0.5 * self.recurrence_time
    }

    fn sample<T>(&self, t: f64, value: T) -> OracleSample<T> {
        let within_window = self.within_window(t);
        if !within_window {
            log::warn!(
                "oracle sample at t = {t} lies past half the recurrence time {}",
                self.recurrence_time
            );
        }
        OracleSample { t, value, within_window }
    }

    fn check_level(&self, i: usize) -> Result<(), OracleError> {
        if i >= self.n_levels() {
            return Err(OracleError::LevelIndex {
                index: i,
                count: self.n_levels(),
            });
        }
        Ok(())
    }

    /// `max |QᵀQ − I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let q = self.eigenvectors.as_ref();
        let g = q.transpose() * q;
        let mut worst: f64 = 0.0;
        for c in 0..g.ncols() {
            for r in 0..g.nrows() {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((g[(r, c)] - target).abs());
            }
        }
        worst
    }

    /// Accepts either discrete amplitudes (length N, continuum empty) or a
    /// full vector (length N+M). Must have unit norm.
    pub fn prepare(&self, initial: &[Complex64]) -> Result<PreparedState, OracleError> {
        let n = self.n_levels();
        let dim = self.dim();
        if initial.len() != n && initial.len() != dim {
            return Err(OracleError::DimensionMismatch {
                got: initial.len(),
                levels: n,
                total: dim,
            });
        }
        let norm: f64 = initial.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(OracleError::NotNormalized(norm));
        }
        let q = &self.eigenvectors;
        let coefficients = (0..dim)
            .map(|e| {
                initial
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| **a != Complex64::new(0.0, 0.0))
                    .map(|(r, a)| a * q[(r, e)])
                    .sum()
            })
            .collect();
        Ok(PreparedState { coefficients })
    }

    /// `⟨r|e^{−iHt}|ψ₀⟩`, in `O(N+M)`.
    pub fn component(&self, state: &PreparedState, r: usize, t: f64) -> Complex64 {
        let q = &self.eigenvectors;
        self.eigenvalues
            .iter()
            .zip(&state.coefficients)
            .enumerate()
            .map(|(e, (&ev, c))| c * q[(r, e)] * Complex64::from_polar(1.0, -ev * t))
            .sum()
    }

    fn propagate(&self, state: &PreparedState, t: f64) -> Vec<Complex64> {
        let phased: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .zip(&state.coefficients)
            .map(|(&ev, c)| c * Complex64::from_polar(1.0, -ev * t))
            .collect();
        let q = &self.eigenvectors;
        (0..self.dim())
            .map(|r| (0..self.dim()).map(|e| phased[e] * q[(r, e)]).sum())
            .collect()
    }

    /// `e^{−iHt}|ψ₀⟩`.
    pub fn evolve_pure(&self, initial: &[Complex64], t: f64) -> Result<OracleSample<Vec<Complex64>>, OracleError> {
        let state = self.prepare(initial)?;
        Ok(self.sample(t, self.propagate(&state, t)))
    }

    /// `⟨i|e^{−iHt}|i⟩`.
    pub fn survival_amplitude(&self, i: usize, t: f64) -> Result<OracleSample<Complex64>, OracleError> {
        self.check_level(i)?;
        let a = if self.decoupled[i] {
            Complex64::from_polar(1.0, -self.levels[i] * t)
        } else {
            let q = &self.eigenvectors;
            self.eigenvalues
                .iter()
                .enumerate()
                .map(|(e, &ev)| q[(i, e)] * q[(i, e)] * Complex64::from_polar(1.0, -ev * t))
                .sum()
        };
        Ok(self.sample(t, a))
    }

    pub fn survival_probability(&self, i: usize, t: f64) -> Result<OracleSample<f64>, OracleError> {
        let s = self.survival_amplitude(i, t)?;
        let value = if self.decoupled[i] { 1.0 } else { s.value.norm_sqr() };
        Ok(OracleSample {
            t: s.t,
            value,
            within_window: s.within_window,
        })
    }

    /// `ρ_ij(t) = ψ_i(t)·conj(ψ_j(t))` for the evolved pure state.
    pub fn coherence(
        &self,
        i: usize,
        j: usize,
        initial: &[Complex64],
        t: f64,
    ) -> Result<OracleSample<Complex64>, OracleError> {
        self.check_level(i)?;
        self.check_level(j)?;
        let state = self.prepare(initial)?;
        Ok(self.sample(t, self.coherence_of(&state, i, j, t)))
    }

    /// Same as [`OracleModel::coherence`] on an already prepared state.
    pub fn coherence_of(&self, state: &PreparedState, i: usize, j: usize, t: f64) -> Complex64 {
        self.component(state, i, t) * self.component(state, j, t).conj()
    }

    /// Continuum density `|⟨ω_k|ψ(t)⟩|²/w_k` plus discrete populations.
    pub fn energy_distribution(
        &self,
        initial: &[Complex64],
        t: f64,
    ) -> Result<OracleSample<EnergyDistribution>, OracleError> {
        let state = self.prepare(initial)?;
        let psi = self.propagate(&state, t);
        let n = self.n_levels();
        let weights = self.grid.weights().to_vec();
        let density = psi[n..]
            .iter()
            .zip(&weights)
            .map(|(a, w)| a.norm_sqr() / w)
            .collect();
        let discrete = psi[..n].iter().map(|a| a.norm_sqr()).collect();
        Ok(self.sample(
            t,
            EnergyDistribution {
                density,
                discrete,
                weights,
            },
        ))
    }

    /// Second-order eigenvalue displacement of level `i` by direct sum,
    /// `Σ_k H_{i,k}² / (Ω_i − ω_k)`.
    pub fn second_order_displacement(&self, i: usize) -> Result<f64, OracleError> {
        self.check_level(i)?;
        let n = self.n_levels();
        Ok(self
            .grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let c = self.hamiltonian[(i, n + k)];
                c * c / (self.levels[i] - x)
            })
            .sum())
    }

    /// Fits `ln|A|²` and the unwrapped phase of `A(t)` over `[t0, t1]`.
    pub fn fit_resonance(&self, i: usize, t0: f64, t1: f64, samples: usize) -> Result<ResonanceFit, OracleError> {
        self.check_level(i)?;
        if !self.within_window(t1) {
            return Err(OracleError::RecurrenceWindowExceeded(t1));
        }
        let ts = linspace(t0, t1, samples);
        let amps = ts
            .iter()
            .map(|&t| self.survival_amplitude(i, t).map(|s| s.value))
            .collect::<Result<Vec<_>, _>>()?;
        let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
        let rate = exponential_rate(&ts, &probs).ok_or(OracleError::FitFailed("survival probability"))?;
        let phases = unwrap_phase(&amps.iter().map(|a| a.arg()).collect::<Vec<_>>());
        let line = linear_fit(&ts, &phases).ok_or(OracleError::FitFailed("phase"))?;
        Ok(ResonanceFit {
            rate,
            energy: -line.slope,
        })
    }
}
