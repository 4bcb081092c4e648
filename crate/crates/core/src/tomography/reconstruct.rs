//! From interference parameters to sixteen coincidence numbers, and from
//! those to a density matrix by linear inversion.

use num_complex::Complex64;

use super::density::{CMatrix4, DensityMatrix4};
use super::fringes::CoincidenceSet;
use super::matrices::derived_m_matrices;
use super::states::tomographic_states;
use super::TomographyError;

/// Expected n_ν / 𝒩 = ⟨ψ_ν|ρ|ψ_ν⟩ for ν = 1..16.
pub fn projections(rho: &DensityMatrix4) -> [f64; 16] {
    let states = tomographic_states();
    std::array::from_fn(|k| rho.expectation(&states[k].vector()))
}

/// Coincidences for all sixteen projections from n₁..n₄ and ℐ₅..ℐ₁₆.
///
/// n₁..n₄ are first divided by `detection_efficiency`, once per set.
pub fn reconstruct_coincidences(set: &CoincidenceSet, detection_efficiency: f64) -> Result<[f64; 16], TomographyError> {
    set.validate()?;
    if !(detection_efficiency > 0.0 && detection_efficiency <= 1.0) {
        return Err(TomographyError::InvalidInput {
            field: "detection_efficiency",
            reason: format!("must lie in (0, 1], got {detection_efficiency}"),
        });
    }
    let [n1, n2, n3, n4] = set.direct.map(|n| n / detection_efficiency);
    let i = |nu: usize| set.interference[nu - 5];
    let sum = n1 + n2 + n3 + n4;
    let (r14, r23, r12, r34) = ((n1 * n4).sqrt(), (n2 * n3).sqrt(), (n1 * n2).sqrt(), (n3 * n4).sqrt());
    let cross = 0.5 * ((r14 + r23).powi(2) + ((n2 * n4).sqrt() - (n1 * n3).sqrt()).powi(2)).sqrt();
    let diag_mean = (sum + 2.0 * r12 + 2.0 * r34) / 4.0;
    let diag_amp = 0.5 * (n1.sqrt() + n2.sqrt()) * (n3.sqrt() + n4.sqrt());

    let n = [
        n1,
        n2,
        n3,
        n4,
        (n1 + n4) / 2.0 + r14 * i(5),
        (n2 + n3) / 2.0 + r23 * i(6),
        (n2 + n3) / 2.0 + r23 * i(7),
        (n1 + n4) / 2.0 + r14 * i(8),
        sum / 4.0 + cross * i(9),
        diag_mean + diag_amp * i(10),
        diag_mean + diag_amp * i(11),
        (n1 + n2) / 2.0 + r12 * i(12),
        (n3 + n4) / 2.0 + r34 * i(13),
        (n3 + n4) / 2.0 + r34 * i(14),
        (n1 + n2) / 2.0 + r12 * i(15),
        sum / 4.0 + cross * i(16),
    ];
    let floor = -1e-12 * sum.max(f64::MIN_POSITIVE);
    let mut out = [0.0; 16];
    for (k, &v) in n.iter().enumerate() {
        if v < floor || !v.is_finite() {
            return Err(TomographyError::NegativeCoincidence { nu: k + 1, value: v });
        }
        out[k] = v.max(0.0);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearInversion {
    pub rho: DensityMatrix4,
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

/// ρ = Σ_ν M_ν n_ν / (n₁ + n₂ + n₃ + n₄), with the M_ν derived from the
/// measurement table. The result is Hermitian with unit trace but may have
/// negative eigenvalues; that is flagged, not rejected.
pub fn linear_inversion(n: &[f64; 16]) -> Result<LinearInversion, TomographyError> {
    if let Some(k) = n.iter().position(|v| !v.is_finite()) {
        return Err(TomographyError::InvalidInput { field: "n", reason: format!("n{} is not finite", k + 1) });
    }
    let norm: f64 = n[..4].iter().sum();
    if norm.is_nan() || norm == 0.0 {
        return Err(TomographyError::ZeroNormalization(norm));
    }
    let m = derived_m_matrices();
    let sum = m.iter().zip(n).fold(CMatrix4::zeros(), |acc, (mat, &count)| acc + mat * Complex64::new(count, 0.0));
    let rho = DensityMatrix4::normalized(sum)?;
    let min_eigenvalue = rho.min_eigenvalue();
    Ok(LinearInversion { rho, is_psd: min_eigenvalue >= -super::density::PSD_TOLERANCE, min_eigenvalue })
}
