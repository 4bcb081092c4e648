//! Interference fringes to interference parameters ℐ_ν.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::states::tomographic_states;
use super::TomographyError;

/// Slack on |ℐ| ≤ 1 for rounding.
const INTERFERENCE_SLACK: f64 = 1e-9;

/// Coincidences for ν = 1..4 plus ℐ_ν and the reference contrast ϑ_ν for ν = 5..16.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceSet {
    pub direct: [f64; 4],
    pub interference: [f64; 12],
    pub contrast_ref: [f64; 12],
}

impl CoincidenceSet {
    pub fn validate(&self) -> Result<(), TomographyError> {
        for (k, &n) in self.direct.iter().enumerate() {
            if !(n.is_finite() && n >= 0.0) {
                return Err(TomographyError::NegativeCoincidence { nu: k + 1, value: n });
            }
        }
        for (k, &i) in self.interference.iter().enumerate() {
            if !(i.is_finite() && i.abs() <= 1.0 + INTERFERENCE_SLACK) {
                return Err(TomographyError::InterferenceOutOfRange { nu: k + 5, value: i });
            }
        }
        for (k, &c) in self.contrast_ref.iter().enumerate() {
            if !(c > 0.0 && c <= 1.0) {
                return Err(TomographyError::InvalidInput {
                    field: "contrast_ref",
                    reason: format!("nu = {}: {c} not in (0, 1]", k + 5),
                });
            }
        }
        Ok(())
    }
}

/// Raw beat-note coincidences for one ν ≥ 5, sampled at reference phases
/// (signal) or wave-plate angles (control), in rad of fringe phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeSeries {
    pub nu: usize,
    pub angles: Vec<f64>,
    pub counts: Vec<f64>,
    /// Detected counts in the conditioning port over the whole series.
    pub conditioning_total: f64,
    /// Fringe amplitude without interaction, ϑ_ν.
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeData {
    pub direct: [f64; 4],
    pub fringes: Vec<FringeSeries>,
}

/// Least-squares fit of a0 + b cos x + c sin x. Returns the coefficients,
/// the amplitude √(b² + c²) and its standard error.
fn fit_sinusoid(angles: &[f64], counts: &[f64]) -> Option<(Vector3<f64>, f64, f64)> {
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (&x, &y) in angles.iter().zip(counts) {
        let row = Vector3::new(1.0, x.cos(), x.sin());
        normal += row * row.transpose();
        rhs += row * y;
    }
    let inverse = normal.try_inverse()?;
    let coef = inverse * rhs;
    let rss: f64 = angles
        .iter()
        .zip(counts)
        .map(|(&x, &y)| (y - coef[0] - coef[1] * x.cos() - coef[2] * x.sin()).powi(2))
        .sum();
    let dof = angles.len().saturating_sub(3).max(1) as f64;
    let cov = inverse * (rss / dof);
    let (b, c) = (coef[1], coef[2]);
    let amplitude = b.hypot(c);
    let stderr = if amplitude > 0.0 {
        ((b * b * cov[(1, 1)] + c * c * cov[(2, 2)] + 2.0 * b * c * cov[(1, 2)]) / (amplitude * amplitude)).max(0.0).sqrt()
    } else {
        (0.5 * (cov[(1, 1)] + cov[(2, 2)])).max(0.0).sqrt()
    };
    Some((coef, amplitude, stderr))
}

/// Relative residual scale below which a fit counts as exact.
const ROUNDOFF_FLOOR: f64 = 1e-9;

/// ℐ_ν for one series: the fitted fringe with its mean removed, read at the
/// measurement's tomographic angle, per conditioning count and per unit
/// reference contrast.
pub fn interference_parameter(series: &FringeSeries) -> Result<f64, TomographyError> {
    let nu = series.nu;
    let bad = |reason: String| TomographyError::InvalidInput { field: "fringes", reason: format!("nu = {nu}: {reason}") };
    if !(5..=16).contains(&nu) {
        return Err(bad("only nu = 5..16 carry fringes".into()));
    }
    if series.angles.len() != series.counts.len() {
        return Err(bad(format!("{} angles but {} counts", series.angles.len(), series.counts.len())));
    }
    if series.counts.len() < 4 {
        return Err(bad(format!("need at least 4 samples, got {}", series.counts.len())));
    }
    if series.counts.iter().chain(&series.angles).any(|v| !v.is_finite()) {
        return Err(bad("non-finite sample".into()));
    }
    if !(series.conditioning_total.is_finite() && series.conditioning_total > 0.0) {
        return Err(bad(format!("conditioning total must be > 0, got {}", series.conditioning_total)));
    }
    if !(series.contrast > 0.0 && series.contrast <= 1.0) {
        return Err(bad(format!("contrast must lie in (0, 1], got {}", series.contrast)));
    }
    let (coef, amplitude, stderr) =
        fit_sinusoid(&series.angles, &series.counts).ok_or_else(|| bad("angles do not resolve a sinusoid".into()))?;
    // Residual scatter at round-off level means an exact fit, flat or not.
    let level = series.counts.iter().map(|c| c.abs()).sum::<f64>() / series.counts.len() as f64;
    if amplitude < 3.0 * stderr && stderr > ROUNDOFF_FLOOR * level {
        return Err(TomographyError::DegenerateFringe { nu, amplitude, stderr });
    }
    let angle = tomographic_states()[nu - 1].fringe_angle().expect("nu >= 5 has a fringe angle");
    let centered = coef[1] * angle.cos() + coef[2] * angle.sin();
    let per_sample = series.conditioning_total / series.counts.len() as f64;
    let value = centered / per_sample / series.contrast;
    if value.abs() > 1.0 + INTERFERENCE_SLACK {
        return Err(TomographyError::InterferenceOutOfRange { nu, value });
    }
    Ok(value.clamp(-1.0, 1.0))
}

/// Normalizes the twelve fringe series; each ν = 5..16 must appear once.
pub fn normalize_fringes(data: &FringeData) -> Result<CoincidenceSet, TomographyError> {
    let mut interference = [f64::NAN; 12];
    let mut contrast_ref = [f64::NAN; 12];
    for series in &data.fringes {
        if !(5..=16).contains(&series.nu) {
            return Err(TomographyError::InvalidInput {
                field: "fringes",
                reason: format!("unexpected nu = {}", series.nu),
            });
        }
        let slot = series.nu - 5;
        if !interference[slot].is_nan() {
            return Err(TomographyError::InvalidInput { field: "fringes", reason: format!("nu = {} repeated", series.nu) });
        }
        interference[slot] = interference_parameter(series)?;
        contrast_ref[slot] = series.contrast;
    }
    if let Some(k) = interference.iter().position(|v| v.is_nan()) {
        return Err(TomographyError::InvalidInput { field: "fringes", reason: format!("nu = {} missing", k + 5) });
    }
    let set = CoincidenceSet { direct: data.direct, interference, contrast_ref };
    set.validate()?;
    Ok(set)
}
