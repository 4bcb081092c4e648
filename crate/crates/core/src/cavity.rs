//! Closed-form dispersive atom-cavity model.
//!
//! All detunings and linewidths are angular frequencies in rad/s. Use
//! [`crate::units`] to convert from the `2π × MHz` notation used on the
//! command line.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::units;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CavityError {
    #[error("invalid cavity parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("cooperativity {eta} differs from 4g²/(κ₀Γ) = {single_atom} by more than {tolerance}")]
    InconsistentCooperativity { eta: f64, single_atom: f64, tolerance: f64 },
    #[error("asymmetry {asymmetry} exceeds the fringe bound {bound} for blocking factor {blocking}")]
    AsymmetryOutOfRange { asymmetry: f64, bound: f64, blocking: f64 },
    #[error("invalid atom cloud `{field}`: {reason}")]
    InvalidCloud { field: &'static str, reason: String },
    #[error("quadrature did not converge after {refinements} refinements (last relative change {last_change:e})")]
    QuadratureNotConverged { refinements: usize, last_change: f64 },
}

/// Physical constants of the atom-cavity system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Empty-cavity linewidth κ₀ (rad/s).
    pub kappa0: f64,
    /// Coupling g, half the single-photon Rabi frequency (rad/s).
    pub g: f64,
    /// Excited-state decay rate Γ (rad/s).
    pub gamma: f64,
    /// Ensemble-averaged cooperativity η.
    pub eta: f64,
    /// Light-cavity detuning δ_c (rad/s).
    pub delta_c: f64,
    pub finesse: f64,
    /// Cavity mode waist (m).
    pub waist: f64,
    /// Wavelength (m).
    pub wavelength: f64,
}

impl CavityParams {
    /// The Cs cavity of the experiment: κ₀ = 2π×150 kHz, 2g = 2π×1.6 MHz,
    /// Γ = 2π×5.2 MHz, η = 3.8, 𝓕 = 77.1×10³, w_c = 35.5 μm, λ = 852.347 nm.
    pub fn experiment() -> Self {
        Self {
            kappa0: units::khz(150.0),
            g: units::mhz(0.8),
            gamma: units::mhz(5.2),
            eta: 3.8,
            delta_c: 0.0,
            finesse: 77.1e3,
            waist: 35.5e-6,
            wavelength: 852.347e-9,
        }
    }

    pub fn validate(&self) -> Result<(), CavityError> {
        fn positive(field: &'static str, v: f64) -> Result<(), CavityError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(CavityError::InvalidParam { field, reason: format!("must be > 0, got {v}") })
            }
        }
        fn non_negative(field: &'static str, v: f64) -> Result<(), CavityError> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(CavityError::InvalidParam { field, reason: format!("must be >= 0, got {v}") })
            }
        }
        positive("kappa0", self.kappa0)?;
        positive("gamma", self.gamma)?;
        non_negative("g", self.g)?;
        non_negative("eta", self.eta)?;
        positive("finesse", self.finesse)?;
        positive("waist", self.waist)?;
        positive("wavelength", self.wavelength)?;
        if !self.delta_c.is_finite() {
            return Err(CavityError::InvalidParam {
                field: "delta_c",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    /// Single-atom cooperativity 4g²/(κ₀Γ).
    pub fn single_atom_cooperativity(&self) -> f64 {
        4.0 * self.g * self.g / (self.kappa0 * self.gamma)
    }

    /// Opt-in check that `eta` agrees with 4g²/(κ₀Γ) within `rel_tol`.
    ///
    /// The experiment quotes a spatially averaged η that is not expected to
    /// satisfy this, so it is not part of [`validate`](Self::validate).
    pub fn check_cooperativity(&self, rel_tol: f64) -> Result<(), CavityError> {
        let single_atom = self.single_atom_cooperativity();
        if (self.eta - single_atom).abs() <= rel_tol * single_atom.abs() {
            Ok(())
        } else {
            Err(CavityError::InconsistentCooperativity {
                eta: self.eta,
                single_atom,
                tolerance: rel_tol,
            })
        }
    }
}

/// Complex atomic susceptibility χ(Δ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Susceptibility {
    pub re: f64,
    pub im: f64,
}

impl Susceptibility {
    pub fn norm_sqr(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// χ = (2Δ/Γ + i) / (1 + (2Δ/Γ)²).
pub fn susceptibility(delta: f64, params: &CavityParams) -> Susceptibility {
    let x = 2.0 * delta / params.gamma;
    let denom = 1.0 + x * x;
    Susceptibility { re: x / denom, im: 1.0 / denom }
}

/// Conditional single-photon phase φ = (η/2) Re[χ] / (1 + η Im[χ]).
pub fn conditional_signal_phase(delta: f64, params: &CavityParams) -> f64 {
    let chi = susceptibility(delta, params);
    0.5 * params.eta * chi.re / (1.0 + params.eta * chi.im)
}

/// Φ = arctan(2δ_c/κ + φ) − arctan(2δ_c/κ₀), with κ the single-excitation
/// linewidth. At δ_c = 0 this is arctan(φ).
pub fn conditional_phase_full(delta: f64, params: &CavityParams) -> f64 {
    let kappa = cavity_linewidth(delta, 1.0, params);
    let phi = conditional_signal_phase(delta, params);
    (2.0 * params.delta_c / kappa + phi).atan() - (2.0 * params.delta_c / params.kappa0).atan()
}

/// κ = κ₀ (1 + n_s η Im[χ]).
pub fn cavity_linewidth(delta: f64, n_s: f64, params: &CavityParams) -> f64 {
    let chi = susceptibility(delta, params);
    params.kappa0 * (1.0 + n_s * params.eta * chi.im)
}

/// Signal retrieval conditioned on one control photon, T_s/T₀ = exp(−η Im[χ] κ₀/κ).
pub fn conditional_signal_transmission(delta: f64, params: &CavityParams) -> f64 {
    let chi = susceptibility(delta, params);
    let kappa = cavity_linewidth(delta, 1.0, params);
    (-params.eta * chi.im * params.kappa0 / kappa).exp()
}

/// Atom-induced cavity transmission for a mean stored photon number `n_s`.
pub fn cavity_transmission(delta: f64, n_s: f64, params: &CavityParams) -> f64 {
    let chi = susceptibility(delta, params);
    let kappa = cavity_linewidth(delta, n_s, params);
    let absorptive = 1.0 + n_s * params.eta * chi.im;
    let dispersive = 2.0 * params.delta_c / kappa + n_s * params.eta * chi.re;
    1.0 / (absorptive * absorptive + dispersive * dispersive)
}

/// Blocking factor B = (1 + η Im[χ])² + (η Re[χ])².
pub fn blocking_factor(delta: f64, params: &CavityParams) -> f64 {
    let chi = susceptibility(delta, params);
    let a = 1.0 + params.eta * chi.im;
    let b = params.eta * chi.re;
    a * a + b * b
}

fn polarization_contrast(blocking: f64) -> f64 {
    2.0 * blocking.sqrt() / (1.0 + blocking)
}

/// Normalized detector asymmetry (d₁ − d₂)/(d₁ + d₂) = 2√B/(1+B) sin ψ.
pub fn polarization_rotation_signal(psi: f64, blocking: f64) -> f64 {
    polarization_contrast(blocking) * psi.sin()
}

/// Inverse of [`polarization_rotation_signal`] on the principal branch.
pub fn extract_control_phase(asymmetry: f64, blocking: f64) -> Result<f64, CavityError> {
    let bound = polarization_contrast(blocking);
    if blocking.is_nan() || blocking < 1.0 || asymmetry.abs() > bound {
        return Err(CavityError::AsymmetryOutOfRange { asymmetry, bound, blocking });
    }
    Ok((asymmetry / bound).clamp(-1.0, 1.0).asin())
}

/// Peak cooperativity η₀ = (24𝓕/π) / (k² w_c²) on axis at an antinode.
pub fn peak_cooperativity(finesse: f64, waist: f64, wavelength: f64) -> f64 {
    let k = 2.0 * PI / wavelength;
    (24.0 * finesse / PI) / (k * k * waist * waist)
}

/// Dispersive coupling Ω = g²Δ / (Δ² + (Γ/2)²).
pub fn effective_coupling(delta: f64, params: &CavityParams) -> f64 {
    let half_gamma = 0.5 * params.gamma;
    params.g * params.g * delta / (delta * delta + half_gamma * half_gamma)
}

/// Light shift of the stored spin wave per cavity photon, δ = η (κ₀/2) Re[χ].
pub fn light_shift(delta: f64, params: &CavityParams) -> f64 {
    let chi = susceptibility(delta, params);
    params.eta * 0.5 * params.kappa0 * chi.re
}

/// Gaussian atomic density with independent transverse and axial widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomCloud {
    /// Transverse rms radius (m), shared by x and y.
    pub sigma_radial: f64,
    /// Axial rms radius (m).
    pub sigma_axial: f64,
    /// Cloud center relative to the mode center, (x, y, z) in m.
    pub offset: [f64; 3],
}

impl AtomCloud {
    pub fn experiment() -> Self {
        Self { sigma_radial: 5e-6, sigma_axial: 19e-6, offset: [0.0; 3] }
    }

    pub fn validate(&self) -> Result<(), CavityError> {
        for (field, v) in [("sigma_radial", self.sigma_radial), ("sigma_axial", self.sigma_axial)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CavityError::InvalidCloud { field, reason: format!("must be > 0, got {v}") });
            }
        }
        if self.offset.iter().any(|v| !v.is_finite()) {
            return Err(CavityError::InvalidCloud { field: "offset", reason: "must be finite".into() });
        }
        Ok(())
    }
}

/// Radial envelope of the coupling used in the position average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeExponent {
    /// exp(−r²/(2w_c²)), as the averaging integral is usually written for this setup.
    #[default]
    Printed,
    /// exp(−2r²/w_c²), the intensity profile of a Gaussian TEM₀₀ mode.
    GaussianMode,
}

impl ModeExponent {
    /// Coefficient a in exp(−a r²).
    pub fn coefficient(self, waist: f64) -> f64 {
        match self {
            ModeExponent::Printed => 1.0 / (2.0 * waist * waist),
            ModeExponent::GaussianMode => 2.0 / (waist * waist),
        }
    }
}

const QUAD_REL_TOL: f64 = 1e-4;
const QUAD_MAX_REFINEMENTS: usize = 24;
const QUAD_HALF_WIDTH_SIGMAS: f64 = 5.0;

/// Density-weighted mean of η₀ cos²(kz) exp(−a r²) over the cloud.
///
/// The Gaussian density factorizes, so each axis is integrated separately
/// with an interval-halving trapezoid rule over ±5σ. When the axial width
/// exceeds ten wavelengths the standing wave is replaced by its period
/// average of ½.
pub fn effective_cooperativity(
    eta0: f64,
    cloud: &AtomCloud,
    waist: f64,
    wavelength: f64,
    mode: ModeExponent,
) -> Result<f64, CavityError> {
    cloud.validate()?;
    let a = mode.coefficient(waist);
    let k = 2.0 * PI / wavelength;
    let radial = |x0: f64| {
        gaussian_average(x0, cloud.sigma_radial, 16, |x| (-a * x * x).exp())
    };
    let fx = radial(cloud.offset[0])?;
    let fy = radial(cloud.offset[1])?;
    let fz = if cloud.sigma_axial > 10.0 * wavelength {
        0.5
    } else {
        // Start with enough panels to resolve the standing wave.
        let periods = 2.0 * QUAD_HALF_WIDTH_SIGMAS * cloud.sigma_axial / (0.5 * wavelength);
        let panels = (periods.ceil() as usize * 16).max(16);
        gaussian_average(cloud.offset[2], cloud.sigma_axial, panels, |z| (k * z).cos().powi(2))?
    };
    Ok(eta0 * fx * fy * fz)
}

/// ∫ N(x; mean, σ) f(x) dx over mean ± 5σ, normalized by the truncated mass.
fn gaussian_average<F: Fn(f64) -> f64>(
    mean: f64,
    sigma: f64,
    initial_panels: usize,
    f: F,
) -> Result<f64, CavityError> {
    let lo = mean - QUAD_HALF_WIDTH_SIGMAS * sigma;
    let hi = mean + QUAD_HALF_WIDTH_SIGMAS * sigma;
    let weight = |x: f64| {
        let u = (x - mean) / sigma;
        (-0.5 * u * u).exp()
    };
    let mut panels = initial_panels;
    let (mut num, mut den) = trapezoid(lo, hi, panels, |x| weight(x) * f(x), weight);
    let mut last_change = f64::INFINITY;
    for _ in 0..QUAD_MAX_REFINEMENTS {
        // Interval halving: reuse previous sums and add the midpoints.
        let h = (hi - lo) / panels as f64;
        let (mut add_num, mut add_den) = (0.0, 0.0);
        for i in 0..panels {
            let x = lo + (i as f64 + 0.5) * h;
            let w = weight(x);
            add_num += w * f(x);
            add_den += w;
        }
        let new_num = 0.5 * num + 0.5 * h * add_num;
        let new_den = 0.5 * den + 0.5 * h * add_den;
        panels *= 2;
        let previous = num / den;
        let current = new_num / new_den;
        num = new_num;
        den = new_den;
        last_change = if current == 0.0 {
            (current - previous).abs()
        } else {
            ((current - previous) / current).abs()
        };
        if last_change < QUAD_REL_TOL {
            return Ok(current);
        }
    }
    Err(CavityError::QuadratureNotConverged { refinements: QUAD_MAX_REFINEMENTS, last_change })
}

fn trapezoid<F: Fn(f64) -> f64, W: Fn(f64) -> f64>(
    lo: f64,
    hi: f64,
    panels: usize,
    fw: F,
    w: W,
) -> (f64, f64) {
    let h = (hi - lo) / panels as f64;
    let mut num = 0.5 * (fw(lo) + fw(hi));
    let mut den = 0.5 * (w(lo) + w(hi));
    for i in 1..panels {
        let x = lo + i as f64 * h;
        num += fw(x);
        den += w(x);
    }
    (num * h, den * h)
}
