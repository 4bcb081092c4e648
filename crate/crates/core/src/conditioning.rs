//! Photon statistics when conditioning on clicks from weak coherent states.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditioningError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("no photon number is compatible with {detected} detected clicks")]
    EmptySupport { detected: u32 },
    #[error("weighted phasor sum has magnitude {magnitude:e}; phase undefined")]
    DegeneratePhase { magnitude: f64 },
    #[error("atom-induced transmission {0:e} too small to calibrate against")]
    VanishingTransmission(f64),
}

/// Omitted Poisson tail mass when truncating photon-number sums.
pub const POISSON_TAIL: f64 = 1e-12;
const MIN_PHASOR: f64 = 1e-12;
const MIN_TRANSMISSION: f64 = 1e-6;

/// Detector on the conditioning path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionChannel {
    /// Detection efficiency ε_d.
    pub efficiency: f64,
    /// Detected background rate R_b (counts/s).
    pub background_rate: f64,
    /// Conditioning window t (s).
    pub window: f64,
}

impl DetectionChannel {
    pub fn new(efficiency: f64, background_rate: f64, window: f64) -> Result<Self, ConditioningError> {
        let c = Self { efficiency, background_rate, window };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConditioningError> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(invalid("efficiency", format!("must lie in [0, 1], got {}", self.efficiency)));
        }
        if !(self.background_rate.is_finite() && self.background_rate >= 0.0) {
            return Err(invalid("background_rate", format!("must be >= 0, got {}", self.background_rate)));
        }
        if !(self.window.is_finite() && self.window > 0.0) {
            return Err(invalid("window", format!("must be > 0, got {}", self.window)));
        }
        Ok(())
    }

    /// Mean background counts in the window, n_bg = R_b t.
    pub fn background_counts(&self) -> f64 {
        self.background_rate * self.window
    }
}

/// Weak coherent state, described by its mean photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentInput {
    pub mean_photons: f64,
}

impl CoherentInput {
    pub fn new(mean_photons: f64) -> Result<Self, ConditioningError> {
        let c = Self { mean_photons };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConditioningError> {
        if self.mean_photons.is_finite() && self.mean_photons >= 0.0 {
            Ok(())
        } else {
            Err(invalid("mean_photons", format!("must be >= 0, got {}", self.mean_photons)))
        }
    }
}

/// Losses between the cavity input and the counter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationChain {
    pub detector_eff: f64,
    pub fiber_eff: f64,
    pub outcoupling_eff: f64,
    /// Atom-induced cavity transmission T_c.
    pub atom_transmission: f64,
}

impl CalibrationChain {
    /// Detector 0.45, fiber 0.7, out-coupling 0.66.
    pub fn experiment(atom_transmission: f64) -> Self {
        Self { detector_eff: 0.45, fiber_eff: 0.7, outcoupling_eff: 0.66, atom_transmission }
    }

    pub fn total(&self) -> f64 {
        self.detector_eff * self.fiber_eff * self.outcoupling_eff * self.atom_transmission
    }
}

fn invalid(field: &'static str, reason: String) -> ConditioningError {
    ConditioningError::Invalid { field, reason }
}

/// ln(base^exp) with 0⁰ = 1.
fn ln_pow(base: f64, exp: f64) -> f64 {
    if exp == 0.0 {
        0.0
    } else if base == 0.0 {
        f64::NEG_INFINITY
    } else {
        exp * base.ln()
    }
}

/// Poisson log-probabilities ln P(m) for m = 0..=m_max, where m_max is the
/// first index past `at_least` whose remaining tail is below [`POISSON_TAIL`].
fn poisson_log_pmf(mean: f64, at_least: usize) -> Vec<f64> {
    if mean == 0.0 {
        let mut v = vec![f64::NEG_INFINITY; at_least + 1];
        v[0] = 0.0;
        return v;
    }
    let ln_mean = mean.ln();
    let mut out = Vec::new();
    let mut m = 0usize;
    loop {
        let lp = -mean + m as f64 * ln_mean - ln_gamma(m as f64 + 1.0);
        out.push(lp);
        if m >= at_least && (m as f64 + 2.0) > mean {
            // Geometric bound on the tail beyond m.
            let next = lp + ln_mean - (m as f64 + 1.0).ln();
            let ratio = mean / (m as f64 + 2.0);
            if next.exp() / (1.0 - ratio) < POISSON_TAIL {
                return out;
            }
        }
        m += 1;
    }
}

/// P(m | n) for m = 0..=m_max: the photon-number distribution of the
/// coherent input given `detected` clicks, with background counts n_bg
/// entering the binomial like additional photons.
///
/// The weights C(m + n_bg, n) ε^n (1−ε)^(n_bg+m−n) P(m) are normalized
/// explicitly; the binomial coefficient uses the gamma function so
/// fractional n_bg is allowed.
pub fn conditional_distribution(
    detected: u32,
    input: &CoherentInput,
    channel: &DetectionChannel,
) -> Result<Vec<f64>, ConditioningError> {
    input.validate()?;
    channel.validate()?;
    let n = detected as f64;
    let n_bg = channel.background_counts();
    let eps = channel.efficiency;
    let log_p = poisson_log_pmf(input.mean_photons, detected as usize);
    let log_w: Vec<f64> = log_p
        .iter()
        .enumerate()
        .map(|(m, &lp)| {
            let sources = m as f64 + n_bg;
            if sources < n || lp == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            let ln_binom = ln_gamma(sources + 1.0) - ln_gamma(n + 1.0) - ln_gamma(sources - n + 1.0);
            ln_binom + ln_pow(eps, n) + ln_pow(1.0 - eps, sources - n) + lp
        })
        .collect();
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(ConditioningError::EmptySupport { detected });
    }
    let w: Vec<f64> = log_w.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Single entry P(m | n) of [`conditional_distribution`]; zero beyond the truncation.
pub fn conditional_photon_probability(
    m: usize,
    detected: u32,
    input: &CoherentInput,
    channel: &DetectionChannel,
) -> Result<f64, ConditioningError> {
    let dist = conditional_distribution(detected, input, channel)?;
    Ok(dist.get(m).copied().unwrap_or(0.0))
}

fn phasor_arg(weights: impl Iterator<Item = f64>, phi_single: f64) -> Result<f64, ConditioningError> {
    let sum: Complex64 = weights
        .enumerate()
        .map(|(m, w)| Complex64::from_polar(w, m as f64 * phi_single))
        .sum();
    let magnitude = sum.norm();
    if magnitude < MIN_PHASOR {
        return Err(ConditioningError::DegeneratePhase { magnitude });
    }
    Ok(sum.arg())
}

/// Signal phase conditioned on `detected` control clicks,
/// Arg Σ_m P(m|n) e^{imφ}.
pub fn conditional_phase_coherent(
    phi_single: f64,
    detected: u32,
    input: &CoherentInput,
    channel: &DetectionChannel,
) -> Result<f64, ConditioningError> {
    let dist = conditional_distribution(detected, input, channel)?;
    phasor_arg(dist.into_iter(), phi_single)
}

/// Unconditioned mean phase, Arg Σ_m P(m) e^{imφ} over the Poisson distribution.
pub fn mean_phase_coherent(phi_single: f64, input: &CoherentInput) -> Result<f64, ConditioningError> {
    input.validate()?;
    let log_p = poisson_log_pmf(input.mean_photons, 0);
    phasor_arg(log_p.into_iter().map(f64::exp), phi_single)
}

/// Mean photon number at the cavity input from the mean detected number.
pub fn calibrate_input_photons(
    detected_mean: f64,
    chain: &CalibrationChain,
) -> Result<CoherentInput, ConditioningError> {
    if !(detected_mean.is_finite() && detected_mean >= 0.0) {
        return Err(invalid("detected_mean", format!("must be >= 0, got {detected_mean}")));
    }
    for (field, v) in [
        ("detector_eff", chain.detector_eff),
        ("fiber_eff", chain.fiber_eff),
        ("outcoupling_eff", chain.outcoupling_eff),
    ] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(invalid(field, format!("must lie in (0, 1], got {v}")));
        }
    }
    if chain.atom_transmission.is_nan() || chain.atom_transmission < MIN_TRANSMISSION {
        return Err(ConditioningError::VanishingTransmission(chain.atom_transmission));
    }
    if chain.atom_transmission > 1.0 {
        return Err(invalid("atom_transmission", format!("must lie in (0, 1], got {}", chain.atom_transmission)));
    }
    CoherentInput::new(detected_mean / chain.total())
}
