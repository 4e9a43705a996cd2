//! Generalized states, their expansion on the Liouvillian eigenbras, time
//! evolution, and the equilibrium state in the final pointer basis.
//!
//! A [`GeneralizedState`] holds components against the free observable basis
//! `{(i j|, (ω|, (i ω|, (ω i|, (ω ω'|}`. [`decompose_initial`] re-expresses it
//! on the eigenbras of the Liouvillian: the discrete diagonal `(i i|` becomes
//! `(ψ_dii| = (i i| − (ω = Ω_i|`, which moves a Dirac atom of weight `ρ_ii`
//! into the continuum diagonal. Evolution then multiplies every sector by
//! `e^{iλt}`; only the `λ = 0` continuum diagonal survives at long times.

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;
use thiserror::Error;

use crate::continuum::{AtomicMeasure, ContinuumGrid};
use crate::spectrum::LiouvilleSpectrum;

/// Tolerance on `tr ρ = 1`.
pub const TRACE_TOLERANCE: f64 = 1e-10;
const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("state trace is {0}, expected 1")]
    TraceViolation(f64),
    #[error("{0} sector is not Hermitian")]
    NotHermitian(&'static str),
    #[error("negative {0}")]
    NegativeDensity(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("evolution time must be non-negative, got {0}")]
    NegativeTime(f64),
}

/// Components of a state functional.
///
/// `rho_d[(i, j)]` is the component on `(i j|`. The mixed sectors are stored
/// level-major: `rho_iomega[(i, k)]` and `rho_omegai[(i, k)]` are the
/// components on `(i ω_k|` and `(ω_k i|`.
#[derive(Debug, Clone)]
pub struct GeneralizedState {
    grid: Arc<ContinuumGrid>,
    pub rho_omega: Vec<f64>,
    pub atoms: AtomicMeasure,
    pub rho_d: Mat<Complex64>,
    pub rho_iomega: Mat<Complex64>,
    pub rho_omegai: Mat<Complex64>,
    /// `(ω ω'|` sector; only transient, so it is optional.
    pub rho_omegaomega: Option<Mat<Complex64>>,
}

impl GeneralizedState {
    pub fn zeros(n_levels: usize, grid: Arc<ContinuumGrid>) -> Self {
        let m = grid.len();
        GeneralizedState {
            rho_omega: vec![0.0; m],
            atoms: AtomicMeasure::new(),
            rho_d: Mat::zeros(n_levels, n_levels),
            rho_iomega: Mat::zeros(n_levels, m),
            rho_omegai: Mat::zeros(n_levels, m),
            rho_omegaomega: None,
            grid,
        }
    }

    /// Purely discrete diagonal state.
    pub fn from_populations(populations: &[f64], grid: Arc<ContinuumGrid>) -> Self {
        let mut s = Self::zeros(populations.len(), grid);
        for (i, &p) in populations.iter().enumerate() {
            s.rho_d[(i, i)] = Complex64::new(p, 0.0);
        }
        s
    }

    /// Purely discrete state with the given `(i j|` components.
    pub fn from_discrete(rho_d: Mat<Complex64>, grid: Arc<ContinuumGrid>) -> Self {
        let mut s = Self::zeros(rho_d.nrows(), grid);
        s.rho_d = rho_d;
        s
    }

    /// Replaces the regular continuum diagonal.
    pub fn with_continuum(mut self, rho_omega: Vec<f64>) -> Self {
        self.rho_omega = rho_omega;
        self
    }

    pub fn grid(&self) -> &ContinuumGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> Arc<ContinuumGrid> {
        Arc::clone(&self.grid)
    }

    pub fn n_levels(&self) -> usize {
        self.rho_d.nrows()
    }

    pub fn continuum_mass(&self) -> f64 {
        self.rho_omega
            .iter()
            .zip(self.grid.weights())
            .map(|(r, w)| r * w)
            .sum()
    }

    /// `∫ ρ_ω dω + Σ atoms + Σ_i ρ_ii`.
    pub fn trace(&self) -> f64 {
        let discrete: f64 = (0..self.n_levels()).map(|i| self.rho_d[(i, i)].re).sum();
        self.continuum_mass() + self.atoms.total() + discrete
    }

    /// Checks every structural invariant, including unit trace.
    pub fn validate(&self) -> Result<(), EvolutionError> {
        self.check_structure()?;
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOLERANCE {
            return Err(EvolutionError::TraceViolation(tr));
        }
        Ok(())
    }

    /// Every invariant except normalization.
    pub fn check_structure(&self) -> Result<(), EvolutionError> {
        let n = self.n_levels();
        let m = self.grid.len();
        if self.rho_d.ncols() != n {
            return Err(EvolutionError::ShapeMismatch("discrete block must be square".into()));
        }
        if self.rho_omega.len() != m
            || self.rho_iomega.shape() != (n, m)
            || self.rho_omegai.shape() != (n, m)
        {
            return Err(EvolutionError::ShapeMismatch(format!(
                "sectors do not match {n} levels on a {m}-node grid"
            )));
        }
        if let Some(cc) = &self.rho_omegaomega {
            if cc.shape() != (m, m) {
                return Err(EvolutionError::ShapeMismatch("continuum block must be M×M".into()));
            }
        }
        if self.rho_omega.iter().any(|&r| !(r >= 0.0)) {
            return Err(EvolutionError::NegativeDensity("continuum density"));
        }
        if self.atoms.iter().any(|a| !(a.weight >= 0.0)) {
            return Err(EvolutionError::NegativeDensity("atom weight"));
        }
        for i in 0..n {
            if !(self.rho_d[(i, i)].re >= 0.0) {
                return Err(EvolutionError::NegativeDensity("discrete population"));
            }
            for j in 0..n {
                if (self.rho_d[(i, j)] - self.rho_d[(j, i)].conj()).norm() > HERMITIAN_TOLERANCE {
                    return Err(EvolutionError::NotHermitian("discrete"));
                }
            }
            for k in 0..m {
                if (self.rho_iomega[(i, k)] - self.rho_omegai[(i, k)].conj()).norm() > HERMITIAN_TOLERANCE {
                    return Err(EvolutionError::NotHermitian("discrete-continuum"));
                }
            }
        }
        if let Some(cc) = &self.rho_omegaomega {
            for k in 0..m {
                for q in 0..=k {
                    if (cc[(k, q)] - cc[(q, k)].conj()).norm() > HERMITIAN_TOLERANCE {
                        return Err(EvolutionError::NotHermitian("continuum-continuum"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest violation of the Hermiticity relations over all sectors.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.n_levels();
        let m = self.grid.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.rho_d[(i, j)] - self.rho_d[(j, i)].conj()).norm());
            }
            for k in 0..m {
                worst = worst.max((self.rho_iomega[(i, k)] - self.rho_omegai[(i, k)].conj()).norm());
            }
        }
        if let Some(cc) = &self.rho_omegaomega {
            for k in 0..m {
                for q in 0..m {
                    worst = worst.max((cc[(k, q)] - cc[(q, k)].conj()).norm());
                }
            }
        }
        worst
    }
}

/// Coefficients of a state on the Liouvillian eigenbras.
///
/// Same layout as [`GeneralizedState`], but `rho_d[(i, i)]` multiplies
/// `(ψ_dii|` and the atoms include the `ρ_ii δ(ω − Ω_i)` terms.
#[derive(Debug, Clone)]
pub struct DecomposedState {
    coefficients: GeneralizedState,
    levels: Vec<f64>,
}

impl DecomposedState {
    pub fn coefficients(&self) -> &GeneralizedState {
        &self.coefficients
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn coherence(&self, i: usize, j: usize) -> Complex64 {
        self.coefficients.rho_d[(i, j)]
    }

    /// Trace of the represented state: only `(ψ_ω|` carries trace, since
    /// `(ψ_dii|` is traceless.
    pub fn trace(&self) -> f64 {
        self.coefficients.continuum_mass() + self.coefficients.atoms.total()
    }

    /// Components of the same state back on the free observable basis.
    pub fn to_free(&self) -> GeneralizedState {
        let mut s = self.coefficients.clone();
        let mut atoms = AtomicMeasure::new();
        for a in s.atoms.iter() {
            atoms.add(a.location, a.weight);
        }
        for (i, &level) in self.levels.iter().enumerate() {
            atoms.add(level, -s.rho_d[(i, i)].re);
        }
        s.atoms = atoms
            .iter()
            .filter(|a| a.weight != 0.0)
            .map(|a| (a.location, a.weight.max(0.0)))
            .collect();
        s
    }
}

/// Expands a free-basis state on the Liouvillian eigenbras:
/// `ρ_dii = ρ⁰_ii` and `ρ_ω = ρ⁰_ω + Σ_i ρ⁰_ii δ(ω − Ω_i)`; the other sectors
/// keep their coefficients at this order.
pub fn decompose_initial(
    state: &GeneralizedState,
    spectrum: &LiouvilleSpectrum,
) -> Result<DecomposedState, EvolutionError> {
    if state.n_levels() != spectrum.n_levels() {
        return Err(EvolutionError::ShapeMismatch(format!(
            "state has {} levels, spectrum has {}",
            state.n_levels(),
            spectrum.n_levels()
        )));
    }
    state.validate()?;
    let mut coefficients = state.clone();
    for (i, &level) in spectrum.levels().iter().enumerate() {
        let p = state.rho_d[(i, i)].re;
        if p != 0.0 {
            coefficients.atoms.add(level, p);
        }
    }
    Ok(DecomposedState {
        coefficients,
        levels: spectrum.levels().to_vec(),
    })
}

fn phase(lambda: Complex64, t: f64) -> Complex64 {
    (Complex64::i() * lambda * t).exp()
}

/// Multiplies every sector by its `e^{iλt}`.
///
/// The `(ω i|` sector uses `−conj(λ_iu)`, the Hermitian partner of the
/// `(i ω|` eigenvalue, so `ρ_iω = conj(ρ_ωi)` holds at all times.
pub fn evolve(
    state: &DecomposedState,
    spectrum: &LiouvilleSpectrum,
    t: f64,
) -> Result<DecomposedState, EvolutionError> {
    if !(t >= 0.0) {
        return Err(EvolutionError::NegativeTime(t));
    }
    let mut out = state.clone();
    let c = &mut out.coefficients;
    let n = c.n_levels();
    let nodes = c.grid.nodes().to_vec();
    for i in 0..n {
        for j in 0..n {
            c.rho_d[(i, j)] *= phase(spectrum.lambda_d(i, j), t);
        }
        for (k, &u) in nodes.iter().enumerate() {
            let lam = spectrum.lambda_iu(i, u);
            c.rho_iomega[(i, k)] *= phase(lam, t);
            c.rho_omegai[(i, k)] *= phase(-lam.conj(), t);
        }
    }
    if let Some(cc) = c.rho_omegaomega.as_mut() {
        for (k, &u) in nodes.iter().enumerate() {
            for (q, &v) in nodes.iter().enumerate() {
                cc[(k, q)] *= phase(spectrum.lambda_cc(u, v), t);
            }
        }
    }
    Ok(out)
}

/// Discrete populations and the pointer-atom weights they have fed.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalWeights {
    pub discrete: Vec<f64>,
    pub atoms: Vec<f64>,
}

/// Diagonal projection of the evolution:
/// `ρ_ii(t) = ρ⁰_ii e^{−Γ_i t}` and atom `ρ⁰_ii (1 − e^{−Γ_i t})`.
pub fn diagonal_evolution(state: &DecomposedState, spectrum: &LiouvilleSpectrum, t: f64) -> DiagonalWeights {
    let n = spectrum.n_levels();
    let mut discrete = Vec::with_capacity(n);
    let mut atoms = Vec::with_capacity(n);
    for i in 0..n {
        let p0 = state.coefficients.rho_d[(i, i)].re;
        let x = -spectrum.gamma()[i] * t;
        discrete.push(p0 * x.exp());
        atoms.push(-p0 * x.exp_m1());
    }
    DiagonalWeights { discrete, atoms }
}

/// Long-time limit `ρ* = ∫ ρ_ω (ω| + Σ_i ρ⁰_ii (ω = Ω_i|`.
#[derive(Debug, Clone)]
pub struct EquilibriumState {
    grid: Arc<ContinuumGrid>,
    pub continuous: Vec<f64>,
    pub atoms: AtomicMeasure,
    /// Populations of levels with `Γ_i = 0`, which never leave `(i i|`.
    pub bound: Vec<f64>,
}

impl EquilibriumState {
    pub fn grid(&self) -> &ContinuumGrid {
        &self.grid
    }

    pub fn continuum_mass(&self) -> f64 {
        self.continuous
            .iter()
            .zip(self.grid.weights())
            .map(|(r, w)| r * w)
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.continuum_mass() + self.atoms.total() + self.bound.iter().sum::<f64>()
    }

    /// The equilibrium as a free-basis state, with bound populations on the
    /// discrete diagonal.
    pub fn to_state(&self) -> GeneralizedState {
        let mut s = GeneralizedState::from_populations(&self.bound, Arc::clone(&self.grid));
        s.rho_omega = self.continuous.clone();
        s.atoms = self.atoms.clone();
        s
    }
}

/// Keeps the `λ = 0` sectors and drops every damped or oscillating one.
pub fn equilibrium(state: &DecomposedState, spectrum: &LiouvilleSpectrum) -> EquilibriumState {
    let c = &state.coefficients;
    let mut atoms = c.atoms.clone();
    let mut bound = vec![0.0; spectrum.n_levels()];
    for (i, &g) in spectrum.gamma().iter().enumerate() {
        if g == 0.0 {
            let p = c.rho_d[(i, i)].re;
            bound[i] = p;
            atoms.add(spectrum.levels()[i], -p);
        }
    }
    let atoms = atoms.iter().filter(|a| a.weight > 0.0).map(|a| (a.location, a.weight)).collect();
    EquilibriumState {
        grid: Arc::clone(&c.grid),
        continuous: c.rho_omega.clone(),
        atoms,
        bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::{build_grid, GridScheme};
    use crate::model::{CouplingProfile, ModelSpec};
    use approx::assert_abs_diff_eq;

    fn setup(levels: Vec<f64>, v: f64) -> (LiouvilleSpectrum, Arc<ContinuumGrid>) {
        let model = ModelSpec::new(levels, 10.0, CouplingProfile::constant(v))
            .validate()
            .unwrap();
        let grid = build_grid(10.0, 200, GridScheme::UniformMidpoint).unwrap();
        let spectrum = LiouvilleSpectrum::compute(&model, &grid).unwrap();
        (spectrum, Arc::new(grid))
    }

    #[test]
    fn pure_discrete_single_level() {
        let (s, g) = setup(vec![1.0], 0.1);
        let d = decompose_initial(&GeneralizedState::from_populations(&[1.0], g), &s).unwrap();
        assert_eq!(d.coherence(0, 0), Complex64::new(1.0, 0.0));
        assert_eq!(d.coefficients().atoms.atoms().len(), 1);
        assert_eq!(d.coefficients().atoms.weight_at(1.0), 1.0);
        assert_eq!(d.coefficients().continuum_mass(), 0.0);
    }

    #[test]
    fn mixed_populations_become_atoms() {
        let (s, g) = setup(vec![1.0, 2.0], 0.1);
        let d = decompose_initial(&GeneralizedState::from_populations(&[0.3, 0.7], g), &s).unwrap();
        assert_eq!(d.coefficients().atoms.weight_at(1.0), 0.3);
        assert_eq!(d.coefficients().atoms.weight_at(2.0), 0.7);
        assert_eq!(d.coherence(0, 0).re, 0.3);
        assert_eq!(d.coherence(1, 1).re, 0.7);
    }

    #[test]
    fn continuous_state_untouched() {
        let (s, g) = setup(vec![1.0], 0.1);
        let state = GeneralizedState::zeros(1, g).with_continuum(vec![0.1; 200]);
        let d = decompose_initial(&state, &s).unwrap();
        assert!(d.coefficients().atoms.is_empty());
        assert_eq!(d.coefficients().rho_omega, state.rho_omega);
        for t in [0.0, 1.0, 1e3] {
            let e = evolve(&d, &s, t).unwrap();
            assert_eq!(e.coefficients().rho_omega, state.rho_omega);
            assert_abs_diff_eq!(e.to_free().trace(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn trace_violation_rejected() {
        let (s, g) = setup(vec![1.0, 2.0], 0.1);
        let err = decompose_initial(&GeneralizedState::from_populations(&[0.3, 0.6], g), &s).unwrap_err();
        assert!(matches!(err, EvolutionError::TraceViolation(_)));
    }

    #[test]
    fn non_hermitian_rejected() {
        let (s, g) = setup(vec![1.0, 2.0], 0.1);
        let mut st = GeneralizedState::from_populations(&[0.5, 0.5], g);
        st.rho_d[(0, 1)] = Complex64::new(0.1, 0.1);
        st.rho_d[(1, 0)] = Complex64::new(0.1, 0.1);
        assert_eq!(
            decompose_initial(&st, &s).unwrap_err(),
            EvolutionError::NotHermitian("discrete")
        );
    }

    #[test]
    fn identity_at_zero_and_negative_time() {
        let (s, g) = setup(vec![1.0, 2.0], 0.1);
        let mut st = GeneralizedState::from_populations(&[0.5, 0.5], g);
        st.rho_d[(0, 1)] = Complex64::new(0.2, 0.3);
        st.rho_d[(1, 0)] = Complex64::new(0.2, -0.3);
        let d = decompose_initial(&st, &s).unwrap();
        let e = evolve(&d, &s, 0.0).unwrap();
        assert_eq!(e.coefficients().rho_d, d.coefficients().rho_d);
        assert_eq!(evolve(&d, &s, -1.0).unwrap_err(), EvolutionError::NegativeTime(-1.0));
    }

    #[test]
    fn coherence_damps_at_mean_rate() {
        let (s, g) = setup(vec![1.0, 2.0], 0.1);
        let mut st = GeneralizedState::from_populations(&[0.5, 0.5], g);
        st.rho_d[(0, 1)] = Complex64::new(0.5, 0.0);
        st.rho_d[(1, 0)] = Complex64::new(0.5, 0.0);
        let d = decompose_initial(&st, &s).unwrap();
        let rate = 0.5 * (s.gamma()[0] + s.gamma()[1]);
        for t in [0.5, 3.0, 40.0] {
            let e = evolve(&d, &s, t).unwrap();
            assert_abs_diff_eq!(e.coherence(0, 1).norm(), 0.5 * (-rate * t).exp(), epsilon = 1e-14);
        }
    }

    #[test]
    fn diagonal_evolution_limits() {
        let (s, g) = setup(vec![1.0, 2.0], 0.1);
        let d = decompose_initial(&GeneralizedState::from_populations(&[0.4, 0.6], g), &s).unwrap();
        let w0 = diagonal_evolution(&d, &s, 0.0);
        assert_eq!(w0.discrete, vec![0.4, 0.6]);
        assert_eq!(w0.atoms, vec![0.0, 0.0]);
        let inf = diagonal_evolution(&d, &s, 1e6);
        assert_eq!(inf.discrete, vec![0.0, 0.0]);
        assert_eq!(inf.atoms, vec![0.4, 0.6]);
        let half = diagonal_evolution(&d, &s, 2f64.ln() / s.gamma()[0]);
        assert_abs_diff_eq!(half.discrete[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(half.atoms[0], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn free_view_matches_diagonal_projection() {
        let (s, g) = setup(vec![1.0, 2.0], 0.1);
        let d = decompose_initial(&GeneralizedState::from_populations(&[0.4, 0.6], g), &s).unwrap();
        let t = 7.0;
        let free = evolve(&d, &s, t).unwrap().to_free();
        let w = diagonal_evolution(&d, &s, t);
        for i in 0..2 {
            assert_abs_diff_eq!(free.rho_d[(i, i)].re, w.discrete[i], epsilon = 1e-15);
            assert_abs_diff_eq!(free.atoms.weight_at(s.levels()[i]), w.atoms[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn equilibrium_examples() {
        let (s, g) = setup(vec![1.0, 2.0], 0.1);
        let d = decompose_initial(&GeneralizedState::from_populations(&[1.0, 0.0], g.clone()), &s).unwrap();
        let eq = equilibrium(&d, &s);
        assert_eq!(eq.atoms.atoms().len(), 1);
        assert_eq!(eq.atoms.weight_at(1.0), 1.0);

        // 0.3 of continuous mass spread uniformly over [0, 10]
        let st = GeneralizedState::from_populations(&[0.5, 0.2], g).with_continuum(vec![0.03; 200]);
        let d = decompose_initial(&st, &s).unwrap();
        let eq = equilibrium(&d, &s);
        assert_eq!(eq.atoms.weight_at(1.0), 0.5);
        assert_eq!(eq.atoms.weight_at(2.0), 0.2);
        assert_abs_diff_eq!(eq.continuum_mass(), 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(eq.total_mass(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn bound_level_keeps_population() {
        let (s, g) = setup(vec![1.0], 0.0);
        let d = decompose_initial(&GeneralizedState::from_populations(&[1.0], g), &s).unwrap();
        let eq = equilibrium(&d, &s);
        assert!(eq.atoms.is_empty());
        assert_eq!(eq.bound, vec![1.0]);
        assert_eq!(eq.total_mass(), 1.0);
        let again = equilibrium(&decompose_initial(&eq.to_state(), &s).unwrap(), &s);
        assert_eq!(again.bound, eq.bound);
        assert!(again.atoms.is_empty());
    }
}
