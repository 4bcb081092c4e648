//! Reconstruction matrices M_ν with Σ_ν M_ν ⟨ψ_ν|ρ|ψ_ν⟩ = ρ.

use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use serde::Serialize;

use super::states::tomographic_states;

pub type CMatrix4 = Matrix4<Complex64>;

/// Element-wise agreement required between printed and derived matrices.
pub const M_MATRIX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MMatrixMismatch {
    /// Largest |printed − derived| element for each ν = 1..16.
    pub max_deviation: Vec<f64>,
    /// 1-based indices exceeding the tolerance.
    pub mismatched: Vec<usize>,
}

impl std::fmt::Display for MMatrixMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "printed M matrices disagree with the derived ones for nu = {:?}", self.mismatched)?;
        for &nu in &self.mismatched {
            write!(f, "; M{nu}: {:.3e}", self.max_deviation[nu - 1])?;
        }
        Ok(())
    }
}

fn half(rows: [[(f64, f64); 4]; 4]) -> CMatrix4 {
    CMatrix4::from_fn(|r, c| Complex64::new(rows[r][c].0, rows[r][c].1) * 0.5)
}

/// The M_ν as tabulated, including the typo-corrected M₂ and M₁₄.
#[rustfmt::skip]
pub fn printed_m_matrices() -> [CMatrix4; 16] {
    const O: (f64, f64) = (0.0, 0.0);
    const P1: (f64, f64) = (1.0, 0.0);
    const N1: (f64, f64) = (-1.0, 0.0);
    const P2: (f64, f64) = (2.0, 0.0);
    const PI: (f64, f64) = (0.0, 1.0);
    const NI: (f64, f64) = (0.0, -1.0);
    const P2I: (f64, f64) = (0.0, 2.0);
    const N2I: (f64, f64) = (0.0, -2.0);
    // -(1-i), -(1+i), (1-i), (1+i)
    const NMI: (f64, f64) = (-1.0, 1.0);
    const NPI: (f64, f64) = (-1.0, -1.0);
    const PMI: (f64, f64) = (1.0, -1.0);
    const PPI: (f64, f64) = (1.0, 1.0);
    [
        half([[P2, NMI, NPI, P1], [NPI, O, PI, O], [NMI, NI, O, O], [P1, O, O, O]]),
        half([[O, NMI, O, P1], [NPI, P2, PI, NPI], [O, NI, O, O], [P1, NMI, O, O]]),
        half([[O, O, O, P1], [O, O, PI, NPI], [O, NI, O, NMI], [P1, NMI, NPI, P2]]),
        half([[O, O, NPI, P1], [O, O, PI, O], [NMI, NI, P2, NMI], [P1, O, NPI, O]]),
        half([[O, O, P2I, NPI], [O, O, PMI, O], [N2I, PPI, O, O], [NMI, O, O, O]]),
        half([[O, O, O, NPI], [O, O, PMI, P2I], [O, PPI, O, O], [NMI, N2I, O, O]]),
        half([[O, O, O, NPI], [O, O, NMI, P2], [O, NPI, O, O], [NMI, P2, O, O]]),
        half([[O, O, P2, NPI], [O, O, NMI, O], [P2, NPI, O, O], [NMI, O, O, O]]),
        half([[O, O, O, PI], [O, O, NI, O], [O, PI, O, O], [NI, O, O, O]]),
        half([[O, O, O, P1], [O, O, P1, O], [O, P1, O, O], [P1, O, O, O]]),
        half([[O, O, O, PI], [O, O, PI, O], [O, NI, O, O], [NI, O, O, O]]),
        half([[O, P2, O, NPI], [P2, O, NPI, O], [O, NMI, O, O], [NMI, O, O, O]]),
        half([[O, O, O, NPI], [O, O, NPI, O], [O, NMI, O, P2], [NMI, O, P2, O]]),
        half([[O, O, O, NMI], [O, O, PMI, O], [O, PPI, O, N2I], [NPI, O, P2I, O]]),
        half([[O, N2I, O, NMI], [P2I, O, PMI, O], [O, PPI, O, O], [NPI, O, O, O]]),
        half([[O, O, O, P1], [O, O, N1, O], [O, N1, O, O], [P1, O, O, O]]),
    ]
}

/// Orthonormal operator basis σ_i ⊗ σ_j / 2.
fn pauli_products() -> [CMatrix4; 16] {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let paulis = [
        Matrix2::new(one, z, z, one),
        Matrix2::new(z, one, one, z),
        Matrix2::new(z, -i, i, z),
        Matrix2::new(one, z, z, -one),
    ];
    std::array::from_fn(|k| {
        let (a, b) = (paulis[k / 4], paulis[k % 4]);
        CMatrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)] * 0.5)
    })
}

fn derive() -> [CMatrix4; 16] {
    let projectors = tomographic_states().map(|s| s.projector());
    let basis = pauli_products();
    let overlap = DMatrix::from_fn(16, 16, |nu, mu| (projectors[nu] * basis[mu]).trace());
    let inverse = overlap.try_inverse().expect("the sixteen projections are tomographically complete");
    std::array::from_fn(|nu| {
        basis.iter().enumerate().fold(CMatrix4::zeros(), |acc, (mu, g)| acc + g * inverse[(mu, nu)])
    })
}

/// The dual frame of the sixteen projectors: the matrices used for linear inversion.
pub fn derived_m_matrices() -> &'static [CMatrix4; 16] {
    static DERIVED: OnceLock<[CMatrix4; 16]> = OnceLock::new();
    DERIVED.get_or_init(derive)
}

/// Per-ν comparison of the printed and derived matrices.
pub fn compare_m_matrices() -> MMatrixMismatch {
    let printed = printed_m_matrices();
    let derived = derived_m_matrices();
    let max_deviation: Vec<f64> =
        (0..16).map(|k| (printed[k] - derived[k]).iter().map(|z| z.norm()).fold(0.0, f64::max)).collect();
    let mismatched = (1..=16).filter(|&nu| max_deviation[nu - 1] > M_MATRIX_TOLERANCE).collect();
    MMatrixMismatch { max_deviation, mismatched }
}

/// The printed matrices, provided they agree with the derived ones.
pub fn m_matrices() -> Result<[CMatrix4; 16], MMatrixMismatch> {
    let report = compare_m_matrices();
    if report.mismatched.is_empty() {
        Ok(printed_m_matrices())
    } else {
        Err(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn m9_corner_pattern() {
        let m9 = printed_m_matrices()[8];
        let nonzero: Vec<(usize, usize, Complex64)> = (0..4)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .filter(|&(r, c)| m9[(r, c)].norm() > 0.0)
            .map(|(r, c)| (r, c, m9[(r, c)]))
            .collect();
        assert_eq!(nonzero.len(), 4);
        for (r, c, v) in nonzero {
            assert_eq!(r + c, 3);
            assert_eq!(v.re, 0.0);
            assert_eq!(v.im.abs(), 0.5);
        }
    }

    #[test]
    fn all_matrices_hermitian() {
        for m in printed_m_matrices().iter().chain(derived_m_matrices()) {
            assert_abs_diff_eq!((m - m.adjoint()).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn derived_traces() {
        for (k, m) in derived_m_matrices().iter().enumerate() {
            let expected = if k < 4 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(m.trace().re, expected, epsilon = 1e-12);
            assert_abs_diff_eq!(m.trace().im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dual_frame_property() {
        let projectors = tomographic_states().map(|s| s.projector());
        for (nu, m) in derived_m_matrices().iter().enumerate() {
            for (mu, p) in projectors.iter().enumerate() {
                let expected = if nu == mu { 1.0 } else { 0.0 };
                assert_abs_diff_eq!((m * p).trace().re, expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn printed_and_derived_differ_only_in_the_halved_four() {
        let report = compare_m_matrices();
        assert_eq!(report.mismatched, vec![9, 10, 11, 16]);
        let printed = printed_m_matrices();
        for nu in [9, 10, 11, 16] {
            assert_abs_diff_eq!((printed[nu - 1] * Complex64::new(2.0, 0.0) - derived_m_matrices()[nu - 1]).norm(), 0.0, epsilon = 1e-12);
        }
        assert!(m_matrices().is_err());
    }
}
