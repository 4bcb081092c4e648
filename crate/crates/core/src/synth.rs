//! Synthetic tomography data from a known state, for round-trip checks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::tomography::density::{two_mode_state, DensityMatrix4};
use crate::tomography::fringes::{FringeData, FringeSeries};
use crate::tomography::reconstruct::projections;
use crate::tomography::states::tomographic_states;
use crate::tomography::TomographyError;

/// Phase samples per fringe.
pub const FRINGE_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Noise {
    None,
    Poisson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub rho: DensityMatrix4,
    /// Expected coincidences 𝒩 in ν = 1..4 before detection losses.
    pub counts_scale: f64,
    pub noise: Noise,
    /// ϑ_ν for ν = 5..16.
    pub contrast_ref: [f64; 12],
    /// Detection efficiency applied to the direct counts n₁..n₄.
    pub detection_efficiency: f64,
}

impl GroundTruth {
    pub fn new(rho: DensityMatrix4, counts_scale: f64) -> Self {
        Self { rho, counts_scale, noise: Noise::None, contrast_ref: [1.0; 12], detection_efficiency: 1.0 }
    }

    pub fn validate(&self) -> Result<(), TomographyError> {
        if !self.rho.is_psd() {
            return Err(TomographyError::NotPositive { min_eigenvalue: self.rho.min_eigenvalue() });
        }
        let bad = |field, reason: String| TomographyError::InvalidInput { field, reason };
        if !(self.counts_scale.is_finite() && self.counts_scale > 0.0) {
            return Err(bad("counts_scale", format!("must be > 0, got {}", self.counts_scale)));
        }
        if !(self.detection_efficiency > 0.0 && self.detection_efficiency <= 1.0) {
            return Err(bad("detection_efficiency", format!("must lie in (0, 1], got {}", self.detection_efficiency)));
        }
        if let Some(c) = self.contrast_ref.iter().find(|c| !(**c > 0.0 && **c <= 1.0)) {
            return Err(bad("contrast_ref", format!("{c} not in (0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    /// 𝒩⟨ψ_ν|ρ|ψ_ν⟩.
    pub expected: [f64; 16],
    /// `expected`, Poisson-drawn in noisy mode.
    pub counts: [f64; 16],
    /// Detected n₁..n₄ and the twelve beat-note fringes.
    pub data: FringeData,
}

impl SyntheticDataset {
    /// Counts rounded to whole events.
    pub fn event_counts(&self) -> [u64; 16] {
        self.counts.map(|v| v.round().max(0.0) as u64)
    }
}

/// Offset and √-scale of each reconstruction formula, n_ν = base + scale·ℐ_ν,
/// for ν = 5..16.
fn formula_terms(n: &[f64; 16]) -> ([f64; 12], [f64; 12]) {
    let [n1, n2, n3, n4] = [n[0], n[1], n[2], n[3]];
    let sum = n1 + n2 + n3 + n4;
    let (r14, r23, r12, r34) = ((n1 * n4).sqrt(), (n2 * n3).sqrt(), (n1 * n2).sqrt(), (n3 * n4).sqrt());
    let cross = 0.5 * ((r14 + r23).powi(2) + ((n2 * n4).sqrt() - (n1 * n3).sqrt()).powi(2)).sqrt();
    let diag_mean = (sum + 2.0 * r12 + 2.0 * r34) / 4.0;
    let diag_amp = 0.5 * (n1.sqrt() + n2.sqrt()) * (n3.sqrt() + n4.sqrt());
    let pair14 = (n1 + n4) / 2.0;
    let pair23 = (n2 + n3) / 2.0;
    let pair12 = (n1 + n2) / 2.0;
    let pair34 = (n3 + n4) / 2.0;
    (
        [pair14, pair23, pair23, pair14, sum / 4.0, diag_mean, diag_mean, pair12, pair34, pair34, pair12, sum / 4.0],
        [r14, r23, r23, r14, cross, diag_amp, diag_amp, r12, r34, r34, r12, cross],
    )
}

/// ℐ_ν for ν = 5..16 obtained by solving the coincidence-reconstruction
/// formulas for ℐ given exact counts. Zero when the scale vanishes.
pub fn exact_interference(n: &[f64; 16]) -> [f64; 12] {
    let (base, scale) = formula_terms(n);
    std::array::from_fn(|k| if scale[k] > 0.0 { (n[k + 4] - base[k]) / scale[k] } else { 0.0 })
}

/// The coherence ⟨a₀|ρ|a₁⟩ that the swept phase of measurement ν beats
/// against: the signal superposition is swept when a signal reference is
/// used, otherwise the control one.
fn swept_coherence(rho: &DensityMatrix4, nu: usize) -> num_complex::Complex64 {
    use nalgebra::Vector4;
    use num_complex::Complex64;
    let state = tomographic_states()[nu - 1];
    let zero = Complex64::new(0.0, 0.0);
    let (a0, a1) = if state.theta_s.is_some() {
        let c = state.control;
        (Vector4::new(c[0], c[1], zero, zero), Vector4::new(zero, zero, c[0], c[1]))
    } else {
        let s = state.signal;
        (Vector4::new(s[0], zero, s[1], zero), Vector4::new(zero, s[0], zero, s[1]))
    };
    (a0.adjoint() * rho.matrix() * a1)[(0, 0)]
}

fn poisson_draw(mean: f64, rng: &mut ChaCha8Rng) -> f64 {
    if mean > 0.0 {
        Poisson::new(mean).expect("positive mean").sample(rng)
    } else {
        0.0
    }
}

/// Coincidences and fringes for `gt`. Each channel ν uses its own
/// substream of `seed`, so the output is reproducible.
///
/// Fringe ν is sampled at [`FRINGE_SAMPLES`] phases x over [0, 2π) as
/// B + A ϑ (ℐ cos(x − θ) + q sin(x − θ)), where θ is the measurement's
/// tomographic angle, ℐ the exact interference parameter, q the physical
/// quadrature of the same coherence, A = 𝒩 per sample and
/// B = A (1 + ϑ √(ℐ² + q²)) keeps the series non-negative.
pub fn project_counts(gt: &GroundTruth, seed: u64) -> Result<SyntheticDataset, TomographyError> {
    gt.validate()?;
    let expected = projections(&gt.rho).map(|p| gt.counts_scale * p.max(0.0));
    let interference = exact_interference(&expected);
    let stream = |k: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k);
        rng
    };
    let noisy = gt.noise == Noise::Poisson;

    let counts: [f64; 16] = std::array::from_fn(|k| {
        if noisy {
            poisson_draw(expected[k], &mut stream(k as u64))
        } else {
            expected[k]
        }
    });
    let direct: [f64; 4] = std::array::from_fn(|k| {
        let mean = gt.detection_efficiency * expected[k];
        if noisy {
            poisson_draw(mean, &mut stream(16 + k as u64))
        } else {
            mean
        }
    });

    let (_, scales) = formula_terms(&expected);
    let per_sample = gt.counts_scale;
    let fringes = (5..=16)
        .map(|nu| {
            let k = nu - 5;
            let state = tomographic_states()[nu - 1];
            let theta = state.fringe_angle().expect("fringe measurement");
            let ip = interference[k];
            let coherence = swept_coherence(&gt.rho, nu) * gt.counts_scale;
            let w = coherence * num_complex::Complex64::from_polar(1.0, theta);
            let quadrature = if scales[k] > 0.0 { -w.im / scales[k] } else { 0.0 };
            let contrast = gt.contrast_ref[k];
            let offset = per_sample * (1.0 + contrast * ip.hypot(quadrature));
            let mut rng = stream(32 + nu as u64);
            let angles: Vec<f64> =
                (0..FRINGE_SAMPLES).map(|j| std::f64::consts::TAU * j as f64 / FRINGE_SAMPLES as f64).collect();
            let counts = angles
                .iter()
                .map(|&x| {
                    let mean = offset + per_sample * contrast * (ip * (x - theta).cos() + quadrature * (x - theta).sin());
                    if noisy {
                        poisson_draw(mean.max(0.0), &mut rng)
                    } else {
                        mean
                    }
                })
                .collect();
            FringeSeries { nu, angles, counts, conditioning_total: per_sample * FRINGE_SAMPLES as f64, contrast }
        })
        .collect();
    Ok(SyntheticDataset { expected, counts, data: FringeData { direct, fringes } })
}

/// Ground truth for the ideal interaction: coherent inputs with means
/// `signal_mean`, `control_mean`, cut to 0 and 1 photons, with phase `phi`
/// on the doubly occupied term.
pub fn entangled_state_from_physics(phi: f64, signal_mean: f64, control_mean: f64) -> Result<GroundTruth, TomographyError> {
    Ok(GroundTruth::new(two_mode_state(phi, signal_mean, control_mean)?, 1e4))
}
