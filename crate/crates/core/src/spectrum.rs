//! Second-order spectrum of the Liouvillian and first-order eigenvector
//! corrections.
//!
//! Conventions: states evolve as `(ρ(t)| = (ρ(0)| e^{iLt}`, so a component
//! with eigenvalue `λ` picks up `e^{iλt}` and `Im λ ≥ 0` means damping.
//! The component on `(i j|` is `⟨j|ρ|i⟩`.
//!
//! For discrete pairs:
//!
//! ```text
//! λ_dij = Ω_i − Ω_j − δ_i + δ_j + iπ (V²(Ω_i, i) + V²(Ω_j, j))
//! δ_i   = PV ∫ V²(ω, i) / (ω − Ω_i) dω
//! Γ_i   = 2π V²(Ω_i, i)            (so λ_dii = iΓ_i)
//! ```
//!
//! The imaginary part is the *sum* of the two half-widths: coherences damp at
//! `(Γ_i + Γ_j)/2` and `Im λ_dij ≥ 0` for every pair.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::continuum::{principal_value, ContinuumError, ContinuumGrid};
use crate::model::{Model, ModelError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("level index {index} out of range for {count} levels")]
    LevelIndex { index: usize, count: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Continuum(#[from] ContinuumError),
}

fn check_level(model: &Model, i: usize) -> Result<(), SpectrumError> {
    if i >= model.n_levels() {
        return Err(SpectrumError::LevelIndex {
            index: i,
            count: model.n_levels(),
        });
    }
    Ok(())
}

/// Golden-rule width `Γ_i = 2π V(Ω_i, i)²`.
pub fn decay_rate(model: &Model, i: usize) -> Result<f64, SpectrumError> {
    check_level(model, i)?;
    Ok(2.0 * PI * model.on_shell_coupling_sq(i))
}

/// `δ_i = PV ∫ V²(ω, i) / (ω − Ω_i) dω`.
pub fn level_shift(model: &Model, grid: &ContinuumGrid, i: usize) -> Result<f64, SpectrumError> {
    check_level(model, i)?;
    Ok(principal_value(|w| model.coupling_sq(w, i), model.level(i), grid)?)
}

pub fn lambda_dij(model: &Model, grid: &ContinuumGrid, i: usize, j: usize) -> Result<Complex64, SpectrumError> {
    check_level(model, i)?;
    check_level(model, j)?;
    if i == j {
        return Ok(Complex64::new(0.0, decay_rate(model, i)?));
    }
    let re = model.level(i) - model.level(j) - level_shift(model, grid, i)? + level_shift(model, grid, j)?;
    let im = PI * (model.on_shell_coupling_sq(i) + model.on_shell_coupling_sq(j));
    Ok(Complex64::new(re, im))
}

/// `λ_iu = Ω_i − u − δ_i + iπ V²(Ω_i, i)`.
pub fn lambda_iu(model: &Model, grid: &ContinuumGrid, i: usize, u: f64) -> Result<Complex64, SpectrumError> {
    check_level(model, i)?;
    check_support(model, u)?;
    let shift = level_shift(model, grid, i)?;
    Ok(Complex64::new(
        model.level(i) - u - shift,
        PI * model.on_shell_coupling_sq(i),
    ))
}

/// `λ_ui = u − Ω_i`, purely real.
pub fn lambda_ui(model: &Model, i: usize, u: f64) -> Result<Complex64, SpectrumError> {
    check_level(model, i)?;
    check_support(model, u)?;
    Ok(Complex64::new(u - model.level(i), 0.0))
}

fn check_support(model: &Model, u: f64) -> Result<(), SpectrumError> {
    if !(0.0..=model.omega_max()).contains(&u) {
        return Err(ModelError::OutOfSupport {
            omega: u,
            omega_max: model.omega_max(),
        }
        .into());
    }
    Ok(())
}

/// Tabulated second-order spectrum for every discrete pair, plus the rules
/// for the continuum families.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleSpectrum {
    levels: Vec<f64>,
    gamma: Vec<f64>,
    shift: Vec<f64>,
    lambda_d: Vec<Complex64>,
}

impl LiouvilleSpectrum {
    pub fn compute(model: &Model, grid: &ContinuumGrid) -> Result<Self, SpectrumError> {
        let n = model.n_levels();
        let gamma = (0..n).map(|i| decay_rate(model, i)).collect::<Result<Vec<_>, _>>()?;
        let shift = (0..n)
            .map(|i| level_shift(model, grid, i))
            .collect::<Result<Vec<_>, _>>()?;
        let levels = model.levels().to_vec();
        let mut lambda_d = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            lambda_d[i * n + i] = Complex64::new(0.0, gamma[i]);
            for j in i + 1..n {
                let l = Complex64::new(
                    levels[i] - levels[j] - shift[i] + shift[j],
                    0.5 * (gamma[i] + gamma[j]),
                );
                lambda_d[i * n + j] = l;
                // fill the mirror so λ_dji = −conj(λ_dij) holds bit for bit
                lambda_d[j * n + i] = -l.conj();
            }
        }
        Ok(LiouvilleSpectrum {
            levels,
            gamma,
            shift,
            lambda_d,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn lambda_d(&self, i: usize, j: usize) -> Complex64 {
        self.lambda_d[i * self.levels.len() + j]
    }

    /// Dressed level energy `Ω_i − δ_i`.
    pub fn resonance_energy(&self, i: usize) -> f64 {
        self.levels[i] - self.shift[i]
    }

    pub fn lambda_iu(&self, i: usize, u: f64) -> Complex64 {
        Complex64::new(self.levels[i] - u - self.shift[i], 0.5 * self.gamma[i])
    }

    pub fn lambda_ui(&self, i: usize, u: f64) -> Complex64 {
        Complex64::new(u - self.levels[i], 0.0)
    }

    pub fn lambda_cc(&self, u: f64, u_prime: f64) -> Complex64 {
        Complex64::new(u - u_prime, 0.0)
    }
}

/// `(ψ_dii| = (i i| − (ω = Ω_i|`: unit weight on the discrete diagonal and a
/// negative unit atom at the level energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalEigenbra {
    pub level: usize,
    pub discrete_weight: f64,
    pub atom_location: f64,
    pub atom_weight: f64,
}

/// First-order eigenvector corrections. All coefficient rules are built
/// from the ratio `V(u, i) / (u − Ω_i)` and are singular only at `u = Ω_i`.
#[derive(Debug, Clone)]
pub struct EigenvectorCorrections {
    model: Model,
}

pub fn eigenvector_corrections(model: &Model) -> EigenvectorCorrections {
    EigenvectorCorrections { model: model.clone() }
}

impl EigenvectorCorrections {
    pub fn n_levels(&self) -> usize {
        self.model.n_levels()
    }

    /// `V(u, i) / (u − Ω_i)`.
    pub fn continuum_ratio(&self, i: usize, u: f64) -> f64 {
        self.model.coupling(u, i) / (u - self.model.level(i))
    }

    /// Coefficient of both `|ω i)` and `|i ω)` in `|φ_dii)`: `V(ω, i) / (Ω_i − ω)`.
    pub fn phi_dii(&self, i: usize, omega: f64) -> f64 {
        self.model.coupling(omega, i) / (self.model.level(i) - omega)
    }

    /// Coefficients of `|ω j)` and `|i ω)` in the first-order part of `|φ_dij)`.
    pub fn phi_offdiag(&self, i: usize, j: usize, omega: f64) -> (f64, f64) {
        (
            self.model.coupling(omega, i) / (self.model.level(i) - omega),
            self.model.coupling(omega, j) / (self.model.level(j) - omega),
        )
    }

    pub fn psi_dii(&self, i: usize) -> DiagonalEigenbra {
        DiagonalEigenbra {
            level: i,
            discrete_weight: 1.0,
            atom_location: self.model.level(i),
            atom_weight: -1.0,
        }
    }

    /// Ket of the given family on `grid`, in the discretized superoperator basis.
    pub fn ket(&self, label: EigenLabel, grid: &ContinuumGrid) -> SuperVector {
        let mut v = SuperVector::default();
        let nodes = grid.nodes();
        let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
        let n = self.n_levels();
        match label {
            EigenLabel::Omega(k) => {
                v.add(SuperIndex::Diag(k), 1.0 / sw[k]);
            }
            EigenLabel::DiscreteDiag(i) => {
                v.add(SuperIndex::Disc(i, i), 1.0);
                for k in 0..nodes.len() {
                    let c = self.phi_dii(i, nodes[k]) * sw[k];
                    v.add(SuperIndex::ContDisc(k, i), c);
                    v.add(SuperIndex::DiscCont(i, k), c);
                }
            }
            EigenLabel::DiscreteOff(i, j) => {
                v.add(SuperIndex::Disc(i, j), 1.0);
                for k in 0..nodes.len() {
                    let (on_wj, on_iw) = self.phi_offdiag(i, j, nodes[k]);
                    v.add(SuperIndex::ContDisc(k, j), on_wj * sw[k]);
                    v.add(SuperIndex::DiscCont(i, k), on_iw * sw[k]);
                }
            }
            EigenLabel::ContDisc(k, i) => {
                // |u i) + g(u)|i i) − ∫ du' g(u') |u u')
                v.add(SuperIndex::ContDisc(k, i), 1.0 / sw[k]);
                v.add(SuperIndex::Disc(i, i), self.continuum_ratio(i, nodes[k]));
                for q in 0..nodes.len() {
                    v.add(
                        SuperIndex::ContCont(k, q),
                        -self.continuum_ratio(i, nodes[q]) * sw[q] / sw[k],
                    );
                }
            }
            EigenLabel::DiscCont(i, k) => {
                // |i u') + g(u')|i i) − ∫ du g(u) |u u')
                v.add(SuperIndex::DiscCont(i, k), 1.0 / sw[k]);
                v.add(SuperIndex::Disc(i, i), self.continuum_ratio(i, nodes[k]));
                for q in 0..nodes.len() {
                    v.add(
                        SuperIndex::ContCont(q, k),
                        -self.continuum_ratio(i, nodes[q]) * sw[q] / sw[k],
                    );
                }
            }
            EigenLabel::ContCont(k, q) => {
                // |u u') + Σ_i [g_i(u)|i u') + g_i(u')|u i)]
                let norm = sw[k] * sw[q];
                v.add(SuperIndex::ContCont(k, q), 1.0 / norm);
                for i in 0..n {
                    v.add(SuperIndex::DiscCont(i, q), self.continuum_ratio(i, nodes[k]) / sw[q]);
                    v.add(SuperIndex::ContDisc(k, i), self.continuum_ratio(i, nodes[q]) / sw[k]);
                }
            }
        }
        v
    }

    /// Bra of the given family on `grid`.
    pub fn bra(&self, label: EigenLabel, grid: &ContinuumGrid) -> SuperVector {
        let mut v = SuperVector::default();
        let nodes = grid.nodes();
        let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
        let n = self.n_levels();
        match label {
            EigenLabel::Omega(k) => {
                v.add(SuperIndex::Diag(k), 1.0 / sw[k]);
            }
            EigenLabel::DiscreteDiag(i) => {
                let psi = self.psi_dii(i);
                v.add(SuperIndex::Disc(i, i), psi.discrete_weight);
                v.add(SuperIndex::AtomAt(i), psi.atom_weight);
            }
            EigenLabel::DiscreteOff(i, j) => {
                v.add(SuperIndex::Disc(i, j), 1.0);
            }
            EigenLabel::ContDisc(k, i) => {
                // (u i| + g(u)[(i i| − (u|]
                let g = self.continuum_ratio(i, nodes[k]);
                v.add(SuperIndex::ContDisc(k, i), 1.0 / sw[k]);
                v.add(SuperIndex::Disc(i, i), g);
                v.add(SuperIndex::Diag(k), -g / sw[k]);
            }
            EigenLabel::DiscCont(i, k) => {
                // (i u'| + g(u')[(i i| − (u'|] − ∫ du g(u) (u u'|
                let g = self.continuum_ratio(i, nodes[k]);
                v.add(SuperIndex::DiscCont(i, k), 1.0 / sw[k]);
                v.add(SuperIndex::Disc(i, i), g);
                v.add(SuperIndex::Diag(k), -g / sw[k]);
                for q in 0..nodes.len() {
                    v.add(
                        SuperIndex::ContCont(q, k),
                        -self.continuum_ratio(i, nodes[q]) * sw[q] / sw[k],
                    );
                }
            }
            EigenLabel::ContCont(k, q) => {
                // (u u'| + Σ_i [g_i(u)(i u'| + g_i(u')(u i|]
                v.add(SuperIndex::ContCont(k, q), 1.0 / (sw[k] * sw[q]));
                for i in 0..n {
                    v.add(SuperIndex::DiscCont(i, q), self.continuum_ratio(i, nodes[k]) / sw[q]);
                    v.add(SuperIndex::ContDisc(k, i), self.continuum_ratio(i, nodes[q]) / sw[k]);
                }
            }
        }
        v
    }
}

/// Eigenvector families of the Liouvillian; continuum arguments are grid
/// node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EigenLabel {
    /// `φ_ω`, the stationary continuum diagonal
    Omega(usize),
    DiscreteDiag(usize),
    DiscreteOff(usize, usize),
    /// `φ_ui`
    ContDisc(usize, usize),
    /// `φ_iu'`
    DiscCont(usize, usize),
    /// `φ_uu'`
    ContCont(usize, usize),
}

impl EigenLabel {
    /// Discretized normalization of the label's delta-function pairing.
    pub fn measure(&self, grid: &ContinuumGrid) -> f64 {
        let w = grid.weights();
        match *self {
            EigenLabel::DiscreteDiag(_) | EigenLabel::DiscreteOff(..) => 1.0,
            EigenLabel::Omega(k) | EigenLabel::ContDisc(k, _) | EigenLabel::DiscCont(_, k) => w[k],
            EigenLabel::ContCont(k, q) => w[k] * w[q],
        }
    }
}

/// Basis element of the discretized operator space. Continuum indices are
/// grid nodes; components are stored against the orthonormal discretized
/// basis, so pairing is a plain dot product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SuperIndex {
    Disc(usize, usize),
    Diag(usize),
    DiscCont(usize, usize),
    ContDisc(usize, usize),
    ContCont(usize, usize),
    /// evaluation of the continuum diagonal at `Ω_i`
    AtomAt(usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuperVector {
    entries: BTreeMap<SuperIndex, f64>,
}

impl SuperVector {
    pub fn add(&mut self, index: SuperIndex, value: f64) {
        if value != 0.0 {
            *self.entries.entry(index).or_insert(0.0) += value;
        }
    }

    pub fn get(&self, index: SuperIndex) -> f64 {
        self.entries.get(&index).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(self|other)`.
    pub fn pair(&self, other: &SuperVector) -> f64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .entries
            .iter()
            .map(|(k, v)| v * large.get(*k))
            .sum()
    }
}
