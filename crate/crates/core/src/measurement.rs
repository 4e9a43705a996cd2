//! Premeasurement, pointer readout, CSCO block diagonalization and
//! classical profiles.
//!
//! A measurement starts from the correlated pure state `Σ a_i |i⟩`. The
//! readout is nothing but the equilibrium of that state: the pointer atom at
//! `Ω_i` ends up with weight `|a_i|²`.

use std::sync::Arc;

use faer::{Mat, Side};
use num_complex::Complex64;
use thiserror::Error;

use crate::continuum::ContinuumGrid;
use crate::evolution::{
    decompose_initial, diagonal_evolution, equilibrium, DiagonalWeights, EquilibriumState, EvolutionError,
    GeneralizedState,
};
use crate::spectrum::LiouvilleSpectrum;

pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("amplitudes have Σ|a|² = {0}, expected 1")]
    NotNormalized(f64),
    #[error("{labels} labels given for {levels} amplitudes")]
    LabelCount { labels: usize, levels: usize },
    #[error("block {0} is not Hermitian")]
    NonHermitianBlock(usize),
    #[error("block {0} is not square")]
    NonSquareBlock(usize),
    #[error("eigendecomposition of block {0} failed")]
    EigensolverFailure(usize),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
}

/// Amplitudes `a_i` of the premeasured state and optional CSCO labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSetup {
    amplitudes: Vec<Complex64>,
    labels: Option<Vec<usize>>,
}

impl MeasurementSetup {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self, MeasurementError> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(MeasurementError::NotNormalized(norm));
        }
        Ok(MeasurementSetup {
            amplitudes,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self, MeasurementError> {
        if labels.len() != self.amplitudes.len() {
            return Err(MeasurementError::LabelCount {
                labels: labels.len(),
                levels: self.amplitudes.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }
}

/// `ρ_dij = conj(a_i)·a_j`, every other sector empty.
pub fn premeasure(setup: &MeasurementSetup, grid: Arc<ContinuumGrid>) -> GeneralizedState {
    let a = &setup.amplitudes;
    let n = a.len();
    let rho = Mat::from_fn(n, n, |i, j| a[i].conj() * a[j]);
    GeneralizedState::from_discrete(rho, grid)
}

/// One pointer state and the probability it ends up with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerOutcome {
    pub level: usize,
    pub energy: f64,
    pub probability: f64,
    pub label: Option<usize>,
}

/// Final pointer weights, read from `equilibrium(premeasure(setup))`.
pub fn readout(
    setup: &MeasurementSetup,
    spectrum: &LiouvilleSpectrum,
    grid: Arc<ContinuumGrid>,
) -> Result<Vec<PointerOutcome>, MeasurementError> {
    let eq = readout_equilibrium(setup, spectrum, grid)?;
    Ok(spectrum
        .levels()
        .iter()
        .enumerate()
        .map(|(i, &energy)| PointerOutcome {
            level: i,
            energy,
            probability: eq.atoms.weight_at(energy) + eq.bound[i],
            label: setup.labels().map(|l| l[i]),
        })
        .collect())
}

/// The equilibrium state reached from the premeasured state.
pub fn readout_equilibrium(
    setup: &MeasurementSetup,
    spectrum: &LiouvilleSpectrum,
    grid: Arc<ContinuumGrid>,
) -> Result<EquilibriumState, MeasurementError> {
    let state = premeasure(setup, grid);
    let decomposed = decompose_initial(&state, spectrum)?;
    Ok(equilibrium(&decomposed, spectrum))
}

/// Discrete populations and pointer-atom weights at time `t`.
pub fn pointer_weights(
    setup: &MeasurementSetup,
    spectrum: &LiouvilleSpectrum,
    grid: Arc<ContinuumGrid>,
    t: f64,
) -> Result<DiagonalWeights, MeasurementError> {
    let state = premeasure(setup, grid);
    let decomposed = decompose_initial(&state, spectrum)?;
    Ok(diagonal_evolution(&decomposed, spectrum, t))
}

/// Eigenweights of one degenerate block and the rotation to the new labels.
///
/// Column `r` of `rotation` is the eigenvector carrying `weights[r]`.
#[derive(Debug, Clone)]
pub struct CscoBlock {
    pub weights: Vec<f64>,
    pub rotation: Mat<Complex64>,
}

impl CscoBlock {
    /// `max |U†U − I|`.
    pub fn unitarity_residual(&self) -> f64 {
        let u = self.rotation.as_ref();
        let g = u.adjoint() * u;
        let mut worst: f64 = 0.0;
        for c in 0..g.ncols() {
            for r in 0..g.nrows() {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((g[(r, c)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

fn block_scale(b: &Mat<Complex64>) -> f64 {
    let mut s: f64 = 0.0;
    for c in 0..b.ncols() {
        for r in 0..b.nrows() {
            s = s.max(b[(r, c)].norm());
        }
    }
    s
}

/// Diagonalizes each Hermitian block `ρ_{i i m m'}`.
///
/// Eigenvectors are matched to the original labels greedily (largest weight
/// first, each picking its dominant remaining component), so an already
/// diagonal block comes back with the identity rotation. Phases are fixed so
/// the diagonal of the rotation is real and non-negative.
pub fn csco_diagonalize(blocks: &[Mat<Complex64>]) -> Result<Vec<CscoBlock>, MeasurementError> {
    blocks
        .iter()
        .enumerate()
        .map(|(index, b)| {
            if b.nrows() != b.ncols() {
                return Err(MeasurementError::NonSquareBlock(index));
            }
            let n = b.nrows();
            let scale = block_scale(b);
            let tol = 1e-12 * scale.max(1.0);
            for c in 0..n {
                for r in 0..=c {
                    if (b[(r, c)] - b[(c, r)].conj()).norm() > tol {
                        return Err(MeasurementError::NonHermitianBlock(index));
                    }
                }
            }
            if n == 0 {
                return Ok(CscoBlock {
                    weights: Vec::new(),
                    rotation: Mat::zeros(0, 0),
                });
            }
            let evd = b
                .self_adjoint_eigen(Side::Lower)
                .map_err(|_| MeasurementError::EigensolverFailure(index))?;
            let values: Vec<f64> = evd.S().column_vector().iter().map(|z| z.re).collect();
            let vectors = evd.U();

            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&x, &y| values[y].total_cmp(&values[x]));
            let mut slot_of = vec![usize::MAX; n];
            let mut taken = vec![false; n];
            for &e in &order {
                let mut best = usize::MAX;
                let mut best_mag = -1.0;
                for m in 0..n {
                    let mag = vectors[(m, e)].norm();
                    if !taken[m] && mag > best_mag + 1e-12 {
                        best = m;
                        best_mag = mag;
                    }
                }
                taken[best] = true;
                slot_of[e] = best;
            }

            let mut weights = vec![0.0; n];
            let mut rotation = Mat::<Complex64>::zeros(n, n);
            for e in 0..n {
                let r = slot_of[e];
                let w = values[e];
                weights[r] = if w < 0.0 && w > -1e-13 * scale { 0.0 } else { w };
                let pivot = vectors[(r, e)];
                let fix = if pivot.norm() > 0.0 {
                    pivot.conj() / pivot.norm()
                } else {
                    Complex64::new(1.0, 0.0)
                };
                for m in 0..n {
                    rotation[(m, r)] = vectors[(m, e)] * fix;
                }
            }
            Ok(CscoBlock { weights, rotation })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileAtom {
    pub energy: f64,
    pub weight: f64,
    pub label: Option<usize>,
}

/// Classical limit of the equilibrium state: weighted energy shells plus a
/// continuous density.
#[derive(Debug, Clone)]
pub struct ClassicalProfile {
    grid: Arc<ContinuumGrid>,
    pub atoms: Vec<ProfileAtom>,
    pub continuous: Vec<f64>,
}

impl ClassicalProfile {
    pub fn grid(&self) -> &ContinuumGrid {
        &self.grid
    }

    pub fn total_mass(&self) -> f64 {
        let cont: f64 = self
            .continuous
            .iter()
            .zip(self.grid.weights())
            .map(|(d, w)| d * w)
            .sum();
        cont + self.atoms.iter().map(|a| a.weight).sum::<f64>()
    }
}

/// Rewrites an equilibrium state as a classical profile. `levels[i]` and
/// `labels[i]` tag level `i`; atoms elsewhere carry no label. Bound levels
/// are reported as atoms at their own energy.
pub fn classical_profile(eq: &EquilibriumState, levels: &[f64], labels: Option<&[usize]>) -> ClassicalProfile {
    let label_for = |energy: f64| {
        levels
            .iter()
            .position(|&l| l == energy)
            .and_then(|i| labels.and_then(|l| l.get(i).copied()))
    };
    let mut atoms: Vec<ProfileAtom> = eq
        .atoms
        .iter()
        .map(|a| ProfileAtom {
            energy: a.location,
            weight: a.weight,
            label: label_for(a.location),
        })
        .collect();
    for (i, &p) in eq.bound.iter().enumerate() {
        if p > 0.0 {
            atoms.push(ProfileAtom {
                energy: levels[i],
                weight: p,
                label: labels.and_then(|l| l.get(i).copied()),
            });
        }
    }
    ClassicalProfile {
        grid: Arc::new(eq.grid().clone()),
        atoms,
        continuous: eq.continuous.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::{build_grid, GridScheme};
    use crate::model::{CouplingProfile, ModelSpec};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn setup(levels: Vec<f64>) -> (LiouvilleSpectrum, Arc<ContinuumGrid>) {
        let model = ModelSpec::new(levels, 10.0, CouplingProfile::constant(0.1)).validate().unwrap();
        let grid = build_grid(10.0, 100, GridScheme::UniformMidpoint).unwrap();
        (LiouvilleSpectrum::compute(&model, &grid).unwrap(), Arc::new(grid))
    }

    #[test]
    fn premeasure_examples() {
        let (_, g) = setup(vec![1.0, 2.0]);
        let s = MeasurementSetup::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let rho = premeasure(&s, g.clone()).rho_d;
        assert_eq!(rho[(0, 0)], c(1.0, 0.0));
        assert_eq!(rho[(1, 1)], c(0.0, 0.0));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = MeasurementSetup::new(vec![c(h, 0.0), c(h, 0.0)]).unwrap();
        let rho = premeasure(&s, g).rho_d;
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(rho[(i, j)].re, 0.5, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn premeasure_is_pure() {
        let (_, g) = setup(vec![1.0, 2.0, 3.0]);
        let s = MeasurementSetup::new(vec![c(0.6, 0.0), c(0.0, 0.48), c(0.0, -0.64)]).unwrap();
        let rho = premeasure(&s, g).rho_d;
        let sq = &rho * &rho;
        let purity: f64 = (0..3).map(|i| sq[(i, i)].re).sum();
        assert_abs_diff_eq!(purity, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn not_normalized() {
        assert!(matches!(
            MeasurementSetup::new(vec![c(0.6, 0.0), c(0.6, 0.0)]),
            Err(MeasurementError::NotNormalized(_))
        ));
        let s = MeasurementSetup::new(vec![c(1.0, 0.0)]).unwrap();
        assert!(s.with_labels(vec![0, 1]).is_err());
    }

    #[test]
    fn readout_examples() {
        let (sp, g) = setup(vec![1.0, 2.0]);
        let s = MeasurementSetup::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let r = readout(&s, &sp, g.clone()).unwrap();
        assert_eq!(r.len(), 2);
        assert_abs_diff_eq!(r[0].probability, 0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(r[1].probability, 0.64, epsilon = 1e-15);
        assert_eq!(r[1].energy, 2.0);

        let s = MeasurementSetup::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let r = readout(&s, &sp, g).unwrap();
        assert_eq!(r[0].probability, 1.0);
        assert_eq!(r[1].probability, 0.0);
    }

    #[test]
    fn csco_identity_for_diagonal_block() {
        let b = Mat::from_fn(3, 3, |i, j| if i == j { c([0.2, 0.5, 0.3][i], 0.0) } else { c(0.0, 0.0) });
        let out = csco_diagonalize(&[b]).unwrap();
        assert_eq!(out[0].weights.len(), 3);
        for (w, e) in out[0].weights.iter().zip([0.2, 0.5, 0.3]) {
            assert_abs_diff_eq!(*w, e, epsilon = 1e-14);
        }
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((out[0].rotation[(i, j)] - c(e, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn csco_hadamard_block() {
        let b = Mat::from_fn(2, 2, |_, _| c(0.5, 0.0));
        let out = &csco_diagonalize(&[b]).unwrap()[0];
        assert_abs_diff_eq!(out.weights[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out.weights[1], 0.0, epsilon = 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(out.rotation[(0, 0)].re, h, epsilon = 1e-14);
        assert_abs_diff_eq!(out.rotation[(1, 0)].re, h, epsilon = 1e-14);
        assert_abs_diff_eq!(out.rotation[(0, 1)].norm(), h, epsilon = 1e-14);
        assert!(out.unitarity_residual() < 1e-14);
    }

    #[test]
    fn csco_rejects_non_hermitian() {
        let b = Mat::from_fn(2, 2, |i, j| if i < j { c(0.1, 0.0) } else { c(0.5, 0.0) });
        assert_eq!(
            csco_diagonalize(&[b]).unwrap_err(),
            MeasurementError::NonHermitianBlock(0)
        );
    }

    #[test]
    fn profile_matches_equilibrium() {
        let (sp, g) = setup(vec![1.0, 2.0]);
        let s = MeasurementSetup::new(vec![c(0.6, 0.0), c(0.0, 0.8)])
            .unwrap()
            .with_labels(vec![7, 9])
            .unwrap();
        let eq = readout_equilibrium(&s, &sp, g).unwrap();
        let p = classical_profile(&eq, sp.levels(), s.labels());
        assert_eq!(p.atoms.len(), 2);
        assert_eq!(p.atoms[0].weight, eq.atoms.weight_at(1.0));
        assert_eq!(p.atoms[1].label, Some(9));
        assert_abs_diff_eq!(p.total_mass(), 1.0, epsilon = 1e-14);
    }
}
