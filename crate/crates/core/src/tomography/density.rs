//! Two-mode density matrices over (|0s0c⟩, |0s1c⟩, |1s0c⟩, |1s1c⟩).

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::TomographyError;

pub type CMatrix4 = Matrix4<Complex64>;

pub const BASIS_ORDER: &str = "|0s0c>, |0s1c>, |1s0c>, |1s1c>";
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
pub const TRACE_TOLERANCE: f64 = 1e-9;
pub const PSD_TOLERANCE: f64 = 1e-9;
const MIN_CORNER: f64 = 1e-9;
const EIGENVALUE_FLOOR: f64 = 1e-13;

/// Hermitian, unit-trace 4×4 matrix. Positivity is not enforced; see
/// [`DensityMatrix4::is_psd`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4 {
    elements: CMatrix4,
}

/// Serialized form: separate real and imaginary 4×4 arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub re: [[f64; 4]; 4],
    pub im: [[f64; 4]; 4],
}

impl From<&DensityMatrix4> for DensityMatrixJson {
    fn from(rho: &DensityMatrix4) -> Self {
        let m = rho.matrix();
        Self {
            re: std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)].re)),
            im: std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)].im)),
        }
    }
}

impl TryFrom<&DensityMatrixJson> for DensityMatrix4 {
    type Error = TomographyError;

    fn try_from(j: &DensityMatrixJson) -> Result<Self, Self::Error> {
        DensityMatrix4::from_matrix(CMatrix4::from_fn(|r, c| Complex64::new(j.re[r][c], j.im[r][c])))
    }
}

fn hermitian_eigen(m: &CMatrix4) -> (Vector4<f64>, CMatrix4) {
    let eig = m.symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

/// f(H) for Hermitian H through its eigendecomposition.
fn hermitian_map(m: &CMatrix4, f: impl Fn(f64) -> f64) -> CMatrix4 {
    let (values, vectors) = hermitian_eigen(m);
    let diag = CMatrix4::from_diagonal(&values.map(|v| Complex64::new(f(v), 0.0)));
    vectors * diag * vectors.adjoint()
}

fn sqrt_psd(m: &CMatrix4) -> CMatrix4 {
    hermitian_map(m, |v| v.max(0.0).sqrt())
}

impl DensityMatrix4 {
    /// Checks Hermiticity (1e-12) and unit trace (1e-9).
    pub fn from_matrix(elements: CMatrix4) -> Result<Self, TomographyError> {
        let asym = (elements - elements.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > HERMITIAN_TOLERANCE {
            return Err(TomographyError::InvalidDensity(format!("not Hermitian: max |rho - rho^dag| = {asym:e}")));
        }
        let trace = elements.trace();
        if (trace.re - 1.0).abs() > TRACE_TOLERANCE || trace.im.abs() > TRACE_TOLERANCE {
            return Err(TomographyError::InvalidDensity(format!("trace {trace} is not 1")));
        }
        if elements.iter().any(|z| !z.is_finite()) {
            return Err(TomographyError::InvalidDensity("non-finite element".into()));
        }
        let elements = (elements + elements.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(Self { elements })
    }

    /// Hermitian part of `m`, divided by its trace.
    pub fn normalized(m: CMatrix4) -> Result<Self, TomographyError> {
        let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let trace = h.trace().re;
        if !(trace.is_finite() && trace.abs() > 1e-300) {
            return Err(TomographyError::InvalidDensity(format!("trace {trace} cannot be normalized")));
        }
        Ok(Self { elements: h / Complex64::new(trace, 0.0) })
    }

    pub fn pure(state: &Vector4<Complex64>) -> Result<Self, TomographyError> {
        let norm = state.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(TomographyError::InvalidDensity("zero state vector".into()));
        }
        let v = state / Complex64::new(norm, 0.0);
        Ok(Self { elements: v * v.adjoint() })
    }

    pub fn maximally_mixed() -> Self {
        Self { elements: CMatrix4::identity() * Complex64::new(0.25, 0.0) }
    }

    pub fn matrix(&self) -> &CMatrix4 {
        &self.elements
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.elements[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.elements.trace().re
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut v: [f64; 4] = hermitian_eigen(&self.elements).0.into();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOLERANCE
    }

    fn require_psd(&self) -> Result<(), TomographyError> {
        let min = self.min_eigenvalue();
        if min < -PSD_TOLERANCE {
            Err(TomographyError::NotPositive { min_eigenvalue: min })
        } else {
            Ok(())
        }
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        (self.elements * self.elements).trace().re
    }

    /// Wootters concurrence, max(0, λ₁ − λ₂ − λ₃ − λ₄), with λ the square
    /// roots of the eigenvalues of ρ ρ̃, ρ̃ = (σy⊗σy) ρ* (σy⊗σy).
    ///
    /// With ρ = W W†, the λ are the singular values of Wᵀ (σy⊗σy) W.
    /// Eigenvalues of ρ below 1e-13 are treated as zero so that pure states
    /// do not pick up √(rounding) noise.
    pub fn concurrence(&self) -> Result<f64, TomographyError> {
        self.require_psd()?;
        let (values, vectors) = hermitian_eigen(&self.elements);
        let roots = values.map(|v| if v > EIGENVALUE_FLOOR { Complex64::new(v.sqrt(), 0.0) } else { Complex64::new(0.0, 0.0) });
        let w = vectors * CMatrix4::from_diagonal(&roots);
        let tau = w.transpose() * spin_flip() * w;
        let mut lambdas: Vec<f64> = tau.singular_values().iter().copied().collect();
        lambdas.sort_by(|a, b| b.total_cmp(a));
        Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0))
    }

    /// Phase θ of the |1s1c⟩ amplitude relative to |0s0c⟩, read from the
    /// corner coherence: θ = Arg⟨1s1c|ρ|0s0c⟩ = −Arg⟨0s0c|ρ|1s1c⟩, in (−π, π].
    /// A state with amplitude p11 e^{iθ} on |1s1c⟩ returns +θ.
    pub fn nonlinear_phase(&self) -> Result<f64, TomographyError> {
        let corner = self.elements[(3, 0)];
        if corner.norm() < MIN_CORNER {
            return Err(TomographyError::UndefinedPhase { magnitude: corner.norm() });
        }
        Ok(corner.arg())
    }

    /// Uhlmann fidelity (Tr √(√ρ σ √ρ))².
    pub fn fidelity(&self, other: &DensityMatrix4) -> f64 {
        let root = sqrt_psd(&self.elements);
        let inner = root * other.elements * root;
        let inner = (inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
        let t: f64 = hermitian_eigen(&inner).0.iter().map(|v| v.max(0.0).sqrt()).sum();
        t * t
    }

    /// Nearest PSD matrix in the eigenbasis: negative eigenvalues clipped,
    /// then renormalized.
    pub fn clip_to_psd(&self) -> DensityMatrix4 {
        let clipped = hermitian_map(&self.elements, |v| v.max(0.0));
        Self::normalized(clipped).unwrap_or_else(|_| Self::maximally_mixed())
    }

    /// Applies local z-rotations so that ⟨0s0c|ρ|0s1c⟩ and ⟨0s0c|ρ|1s0c⟩
    /// become real and non-negative. Only the ⟨0s0c|ρ|1s1c⟩ corner keeps
    /// a phase that local operations cannot remove.
    pub fn remove_local_phases(&self) -> DensityMatrix4 {
        let a = self.elements[(0, 1)].arg();
        let b = self.elements[(0, 2)].arg();
        let phase = |x: f64| Complex64::from_polar(1.0, x);
        let d = [Complex64::new(1.0, 0.0), phase(a), phase(b), phase(a + b)];
        // D ρ D†, D = diag(1, e^{ia}, e^{ib}, e^{i(a+b)})
        let rotated = CMatrix4::from_fn(|r, c| d[r] * self.elements[(r, c)] * d[c].conj());
        Self { elements: rotated }
    }

    /// U ρ U†.
    pub fn transform(&self, u: &CMatrix4) -> DensityMatrix4 {
        Self { elements: u * self.elements * u.adjoint() }
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn expectation(&self, psi: &Vector4<Complex64>) -> f64 {
        (psi.adjoint() * self.elements * psi)[(0, 0)].re
    }
}

fn spin_flip() -> CMatrix4 {
    let one = Complex64::new(1.0, 0.0);
    let mut m = CMatrix4::zeros();
    // σy ⊗ σy
    m[(0, 3)] = -one;
    m[(1, 2)] = one;
    m[(2, 1)] = one;
    m[(3, 0)] = -one;
    m
}

/// |Ψ⟩ ∝ |0s0c⟩ + √n_c|0s1c⟩ + √n_s|1s0c⟩ + √(n_s n_c) e^{iθ}|1s1c⟩:
/// coherent states cut to their vacuum and one-photon parts, with the
/// interaction phase on the doubly occupied term.
pub fn two_mode_state(theta: f64, signal_mean: f64, control_mean: f64) -> Result<DensityMatrix4, TomographyError> {
    if !(theta.is_finite() && signal_mean >= 0.0 && control_mean >= 0.0) {
        return Err(TomographyError::InvalidInput {
            field: "two_mode_state",
            reason: format!("theta={theta}, n_s={signal_mean}, n_c={control_mean}"),
        });
    }
    let (s, c) = (signal_mean.sqrt(), control_mean.sqrt());
    amplitudes_state([1.0, c, s, s * c], theta)
}

/// Pure state with real amplitudes (p00, p01, p10, p11) and phase θ on p11.
pub fn amplitudes_state(amplitudes: [f64; 4], theta: f64) -> Result<DensityMatrix4, TomographyError> {
    let [p00, p01, p10, p11] = amplitudes;
    let v = Vector4::new(
        Complex64::new(p00, 0.0),
        Complex64::new(p01, 0.0),
        Complex64::new(p10, 0.0),
        Complex64::from_polar(p11, theta),
    );
    DensityMatrix4::pure(&v)
}

/// Initial state of the ideal-concurrence estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InputState {
    /// Both modes in (|0⟩ + |1⟩)/√2.
    EqualSuperposition,
    /// Weak coherent states with the given mean photon numbers.
    Coherent { signal_mean: f64, control_mean: f64 },
}

/// Concurrence of the ideal phase-entangled state for interaction phase `phi`.
pub fn ideal_concurrence_bound(phi: f64, input: InputState) -> Result<f64, TomographyError> {
    let rho = match input {
        InputState::EqualSuperposition => amplitudes_state([0.5; 4], phi)?,
        InputState::Coherent { signal_mean, control_mean } => two_mode_state(phi, signal_mean, control_mean)?,
    };
    rho.concurrence()
}
