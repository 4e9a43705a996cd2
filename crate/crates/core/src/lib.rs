//! Perturbative Liouvillian spectrum and pointer-basis decoherence for
//! discrete levels coupled to a continuum, with an exact-diagonalization
//! oracle to check it against.
//!
//! The pieces, bottom up:
//!
//! - [`model`]: levels, cutoff and coupling profile.
//! - [`continuum`]: quadrature grids, principal values, atomic measures.
//! - [`spectrum`]: decay rates, level shifts and the Liouvillian eigenvalues.
//! - [`evolution`]: generalized states, their evolution and equilibrium.
//! - [`oracle`]: exact dynamics of the discretized Hamiltonian.
//! - [`measurement`]: premeasurement, readout and CSCO blocks.
//!
//! ```
//! use pointer_basis::{build_grid, CouplingProfile, GridScheme, LiouvilleSpectrum, ModelSpec};
//!
//! let model = ModelSpec::new(vec![1.0], 10.0, CouplingProfile::constant(0.05)).validate().unwrap();
//! let grid = build_grid(10.0, 2000, GridScheme::UniformMidpoint).unwrap();
//! let spectrum = LiouvilleSpectrum::compute(&model, &grid).unwrap();
//! assert!((spectrum.gamma()[0] - 2.0 * std::f64::consts::PI * 0.0025).abs() < 1e-15);
//! ```

pub mod continuum;
pub mod evolution;
pub mod fit;
pub mod measurement;
pub mod model;
pub mod oracle;
pub mod spectrum;

pub use continuum::{build_grid, principal_value, AtomicMeasure, ContinuumError, ContinuumGrid, GridScheme};
pub use evolution::{
    decompose_initial, diagonal_evolution, equilibrium, evolve, DecomposedState, EquilibriumState, EvolutionError,
    GeneralizedState,
};
pub use measurement::{classical_profile, csco_diagonalize, premeasure, readout, MeasurementError, MeasurementSetup};
pub use model::{CouplingProfile, Model, ModelError, ModelSpec};
pub use oracle::{discretize, OracleError, OracleModel};
pub use spectrum::{LiouvilleSpectrum, SpectrumError};

pub use num_complex::Complex64;

/// Any error raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Continuum(#[from] ContinuumError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
}
