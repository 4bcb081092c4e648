//! Two-mode tomography: fringe normalization, coincidence reconstruction,
//! linear inversion, maximum-likelihood refinement and entanglement metrics.
//!
//! All matrices use the basis order (|0s0c⟩, |0s1c⟩, |1s0c⟩, |1s1c⟩).

pub mod bootstrap;
pub mod density;
pub mod fringes;
pub mod matrices;
pub mod maxlik;
pub mod reconstruct;
pub mod reference;
pub mod states;

use thiserror::Error;

pub use bootstrap::{bootstrap_errors, BootstrapOptions, BootstrapResult};
pub use density::{ideal_concurrence_bound, two_mode_state, DensityMatrix4, DensityMatrixJson, InputState, BASIS_ORDER};
pub use fringes::{normalize_fringes, CoincidenceSet, FringeData, FringeSeries};
pub use matrices::{compare_m_matrices, derived_m_matrices, m_matrices, printed_m_matrices, MMatrixMismatch};
pub use maxlik::{maxlik_reconstruct, MaxLikOptions, MaxLikParams, MaxLikResult};
pub use reconstruct::{linear_inversion, projections, reconstruct_coincidences, LinearInversion};
pub use states::{tomographic_states, TomographicState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomographyError {
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("corner coherence |rho[0,3]| = {magnitude:e} too small to define a phase")]
    UndefinedPhase { magnitude: f64 },
    #[error("invalid `{field}`: {reason}")]
    InvalidInput { field: &'static str, reason: String },
    #[error("fringe for nu = {nu} is degenerate: amplitude {amplitude:e} below 3x its standard error {stderr:e}")]
    DegenerateFringe { nu: usize, amplitude: f64, stderr: f64 },
    #[error("interference parameter for nu = {nu} is {value}, outside [-1, 1]")]
    InterferenceOutOfRange { nu: usize, value: f64 },
    #[error("reconstructed coincidence n{nu} = {value} is negative")]
    NegativeCoincidence { nu: usize, value: f64 },
    #[error("n1 + n2 + n3 + n4 = {0}; cannot normalize")]
    ZeroNormalization(f64),
    #[error(transparent)]
    MMatrix(#[from] MMatrixMismatch),
    #[error("maximum-likelihood fit did not converge after {} evaluations (best objective {})", .0.evaluations, .0.objective)]
    NotConverged(Box<MaxLikResult>),
}

impl std::error::Error for MMatrixMismatch {}
