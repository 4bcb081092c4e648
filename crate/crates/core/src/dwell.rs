//! Monte Carlo of control photons passing through the cavity.
//!
//! Each trial draws its own ChaCha8 stream, keyed by `(seed, trial)`, so
//! results do not depend on the rayon thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conditioning::DetectionChannel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DwellError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("{expected:e} expected events exceeds the limit of {limit:e}")]
    TooManyEvents { expected: f64, limit: f64 },
    #[error("no trial has a detected click in [{start:e}, {end:e}] s")]
    EmptySelection { start: f64, end: f64 },
}

pub const MAX_EXPECTED_EVENTS: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseKind {
    Square,
    Gaussian,
}

/// Control pulse. For a Gaussian, `duration` is the FWHM and the pulse
/// is centred at `2 * duration` so that entry times stay positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    pub kind: PulseKind,
    pub duration: f64,
    pub amplitude: f64,
}

impl PulseShape {
    pub fn square(duration: f64, amplitude: f64) -> Self {
        Self { kind: PulseKind::Square, duration, amplitude }
    }

    pub fn gaussian(fwhm: f64, amplitude: f64) -> Self {
        Self { kind: PulseKind::Gaussian, duration: fwhm, amplitude }
    }

    pub fn validate(&self) -> Result<(), DwellError> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(invalid("duration", format!("must be > 0, got {}", self.duration)));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(invalid("amplitude", format!("must be >= 0, got {}", self.amplitude)));
        }
        Ok(())
    }

    fn sample_entry<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.kind {
            PulseKind::Square => rng.random::<f64>() * self.duration,
            PulseKind::Gaussian => {
                let sigma = self.duration / (8.0 * std::f64::consts::LN_2).sqrt();
                let normal = Normal::new(2.0 * self.duration, sigma).expect("finite sigma");
                loop {
                    let t = normal.sample(rng);
                    if t >= 0.0 {
                        return t;
                    }
                }
            }
        }
    }
}

/// One photon or background event. Background events have
/// `entry_time == exit_time` (the click time) and are always detected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub trial: u64,
    #[serde(rename = "entry_time_s")]
    pub entry_time: f64,
    #[serde(rename = "exit_time_s")]
    pub exit_time: f64,
    pub is_background: bool,
    pub detected: bool,
}

impl DetectionRecord {
    pub fn dwell(&self) -> f64 {
        self.exit_time - self.entry_time
    }

    fn click_time(&self) -> Option<f64> {
        self.detected.then_some(self.exit_time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellResult {
    pub mean_phase: f64,
    pub visibility: f64,
    pub n_events: u64,
    pub stderr_phase: f64,
}

/// Phase a photon picks up while it is inside the cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhaseModel {
    /// light shift × dwell time
    DwellTime,
    /// the same phase for every photon, in rad
    Fixed(f64),
}

fn invalid(field: &'static str, reason: String) -> DwellError {
    DwellError::Invalid { field, reason }
}

fn check_positive(field: &'static str, v: f64) -> Result<(), DwellError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be > 0, got {v}")))
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draws photon and background events for `n_trials` pulses.
///
/// Background clicks are spread uniformly over `[0, channel.window)`, the
/// observation span that later conditioning windows are cut from.
/// Records come out grouped by trial, in trial order.
pub fn simulate_records(
    pulse: &PulseShape,
    kappa: f64,
    channel: &DetectionChannel,
    n_trials: u64,
    seed: u64,
) -> Result<Vec<DetectionRecord>, DwellError> {
    pulse.validate()?;
    check_positive("kappa", kappa)?;
    channel.validate().map_err(|e| invalid("channel", e.to_string()))?;
    if n_trials == 0 {
        return Err(invalid("n_trials", "must be >= 1".into()));
    }
    let n_bg = channel.background_counts();
    let expected = n_trials as f64 * (pulse.amplitude + n_bg);
    if expected > MAX_EXPECTED_EVENTS {
        return Err(DwellError::TooManyEvents { expected, limit: MAX_EXPECTED_EVENTS });
    }
    let photons = (pulse.amplitude > 0.0).then(|| Poisson::new(pulse.amplitude).expect("positive mean"));
    let background = (n_bg > 0.0).then(|| Poisson::new(n_bg).expect("positive mean"));
    let dwell = Exp::new(kappa).expect("positive rate");
    let eff = channel.efficiency;

    let per_trial: Vec<Vec<DetectionRecord>> = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let mut out = Vec::new();
            if let Some(p) = &photons {
                let count = p.sample(&mut rng) as u64;
                for _ in 0..count {
                    let entry = pulse.sample_entry(&mut rng);
                    let exit = entry + dwell.sample(&mut rng);
                    let detected = rng.random::<f64>() < eff;
                    out.push(DetectionRecord { trial, entry_time: entry, exit_time: exit, is_background: false, detected });
                }
            }
            if let Some(b) = &background {
                let count = b.sample(&mut rng) as u64;
                for _ in 0..count {
                    let t = rng.random::<f64>() * channel.window;
                    out.push(DetectionRecord { trial, entry_time: t, exit_time: t, is_background: true, detected: true });
                }
            }
            out
        })
        .collect();
    Ok(per_trial.into_iter().flatten().collect())
}

/// Neumaier-compensated sum.
#[derive(Default, Clone, Copy)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Circular mean, resultant length and delta-method standard error of the mean direction.
pub fn circular_summary(phases: &[f64]) -> Option<DwellResult> {
    if phases.is_empty() {
        return None;
    }
    let n = phases.len() as f64;
    let (mut c, mut s) = (KahanSum::default(), KahanSum::default());
    for &p in phases {
        c.add(p.cos());
        s.add(p.sin());
    }
    let (c, s) = (c.value() / n, s.value() / n);
    let resultant = c.hypot(s).min(1.0);
    let mean = s.atan2(c);
    let mut spread = KahanSum::default();
    for &p in phases {
        spread.add((p - mean).sin().powi(2));
    }
    let stderr = if resultant > 0.0 { (spread.value() / n).sqrt() / (resultant * n.sqrt()) } else { f64::INFINITY };
    Some(DwellResult { mean_phase: mean, visibility: resultant, n_events: phases.len() as u64, stderr_phase: stderr })
}

/// Phase of the trials with a detected click in
/// `[window_start, window_start + window_len]`. A trial with several
/// clicks there is counted once.
///
/// Every photon of a selected trial adds its phase, whether or not it was
/// the one detected. Background events add nothing themselves; a trial
/// selected by a background click therefore carries whatever the photons
/// present happened to give, which averages to the unconditioned phase.
pub fn conditioned_phase_vs_exit_time(
    records: &[DetectionRecord],
    light_shift: f64,
    window_start: f64,
    window_len: f64,
    model: PhaseModel,
) -> Result<DwellResult, DwellError> {
    check_positive("window_len", window_len)?;
    if records.is_empty() {
        return Err(invalid("records", "must be nonempty".into()));
    }
    let end = window_start + window_len;
    let phases: Vec<f64> = records
        .chunk_by(|a, b| a.trial == b.trial)
        .filter_map(|trial| {
            let selected = trial
                .iter()
                .filter_map(DetectionRecord::click_time)
                .any(|t| (window_start..=end).contains(&t));
            if !selected {
                return None;
            }
            let phase = trial
                .iter()
                .filter(|r| !r.is_background)
                .map(|r| match model {
                    PhaseModel::DwellTime => light_shift * r.dwell(),
                    PhaseModel::Fixed(phi) => phi,
                })
                .sum::<f64>();
            Some(phase)
        })
        .collect();
    circular_summary(&phases).ok_or(DwellError::EmptySelection { start: window_start, end })
}

/// Scans windows of length `window_len` centred on each of `centers`.
pub fn phase_vs_conditioning_time(
    records: &[DetectionRecord],
    light_shift: f64,
    centers: &[f64],
    window_len: f64,
    model: PhaseModel,
) -> Vec<Result<DwellResult, DwellError>> {
    centers
        .iter()
        .map(|&c| conditioned_phase_vs_exit_time(records, light_shift, c - 0.5 * window_len, window_len, model))
        .collect()
}

/// Arg⟨e^{iΦ}⟩ without conditioning, for Poisson(amplitude) photons each
/// picking up light_shift × Exp(κ) dwell: a r/(1+r²) with r = δ/κ.
pub fn unconditioned_mean_phase(amplitude: f64, light_shift: f64, kappa: f64) -> f64 {
    let r = light_shift / kappa;
    amplitude * r / (1.0 + r * r)
}

/// Ordinary least-squares slope and intercept.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Visibility of a phase `phi` accumulated over the interaction interval of
/// a long pulse.
///
/// The interval is the pulse length with an independent Exp(κ) uncertainty
/// at entry and at exit, T = τ_p + E_out − E_in; each trial carries
/// φ·T/⟨T⟩ with ⟨T⟩ the ensemble mean. For large κτ_p this tends to
/// 1/(1 + (φ/κτ_p)²).
pub fn long_pulse_visibility(
    pulse: &PulseShape,
    kappa: f64,
    phi: f64,
    n_trials: u64,
    seed: u64,
) -> Result<DwellResult, DwellError> {
    pulse.validate()?;
    check_positive("kappa", kappa)?;
    if !phi.is_finite() {
        return Err(invalid("phi", format!("must be finite, got {phi}")));
    }
    if kappa * pulse.duration < 1.0 {
        return Err(invalid("kappa", format!("kappa * duration = {} must be >= 1", kappa * pulse.duration)));
    }
    if n_trials == 0 {
        return Err(invalid("n_trials", "must be >= 1".into()));
    }
    if n_trials as f64 > MAX_EXPECTED_EVENTS {
        return Err(DwellError::TooManyEvents { expected: n_trials as f64, limit: MAX_EXPECTED_EVENTS });
    }
    let jitter = Exp::new(kappa).expect("positive rate");
    let intervals: Vec<f64> = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let entry = jitter.sample(&mut rng);
            let exit = jitter.sample(&mut rng);
            pulse.duration + exit - entry
        })
        .collect();
    let mut total = KahanSum::default();
    intervals.iter().for_each(|&t| total.add(t));
    let mean = total.value() / n_trials as f64;
    let phases: Vec<f64> = intervals.iter().map(|t| phi * t / mean).collect();
    Ok(circular_summary(&phases).expect("nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{khz, micros};
    use approx::assert_abs_diff_eq;

    fn quiet(eff: f64) -> DetectionChannel {
        DetectionChannel::new(eff, 0.0, micros(10.0)).unwrap()
    }

    #[test]
    fn nothing_in_nothing_out() {
        let recs = simulate_records(&PulseShape::square(micros(0.2), 0.0), khz(150.0), &quiet(0.5), 1000, 1).unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let pulse = PulseShape::gaussian(micros(0.2), 0.8);
        let ch = DetectionChannel::new(0.3, 2e4, micros(10.0)).unwrap();
        let a = simulate_records(&pulse, khz(150.0), &ch, 5000, 7).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_records(&pulse, khz(150.0), &ch, 5000, 7).unwrap());
        assert_eq!(a, b);
        let c = simulate_records(&pulse, khz(150.0), &ch, 5000, 8).unwrap();
        assert_ne!(a, c);
        let ra = conditioned_phase_vs_exit_time(&a, -5e5, micros(1.0), micros(0.5), PhaseModel::DwellTime).unwrap();
        let rb = conditioned_phase_vs_exit_time(&b, -5e5, micros(1.0), micros(0.5), PhaseModel::DwellTime).unwrap();
        assert_eq!(ra.mean_phase.to_bits(), rb.mean_phase.to_bits());
        assert_eq!(ra.visibility.to_bits(), rb.visibility.to_bits());
    }

    #[test]
    fn records_are_well_formed() {
        let ch = DetectionChannel::new(0.3, 1e5, micros(5.0)).unwrap();
        let recs = simulate_records(&PulseShape::square(micros(2.0), 1.5), khz(150.0), &ch, 2000, 3).unwrap();
        for w in recs.windows(2) {
            assert!(w[0].trial <= w[1].trial);
        }
        for r in &recs {
            if r.is_background {
                assert_eq!(r.entry_time, r.exit_time);
                assert!(r.detected && r.entry_time >= 0.0 && r.entry_time < micros(5.0));
            } else {
                assert!(r.exit_time >= r.entry_time && r.entry_time <= micros(2.0));
            }
        }
    }

    #[test]
    fn resource_guard() {
        let r = simulate_records(&PulseShape::square(1e-6, 1e4), 1e6, &quiet(0.5), 1_000_000, 1);
        assert!(matches!(r, Err(DwellError::TooManyEvents { .. })));
    }

    #[test]
    fn fast_cavity_means_short_dwell() {
        let duration = micros(1.0);
        let kappa = 2e3 / duration;
        let recs = simulate_records(&PulseShape::square(duration, 1.0), kappa, &quiet(1.0), 20_000, 5).unwrap();
        let mean = recs.iter().map(DetectionRecord::dwell).sum::<f64>() / recs.len() as f64;
        assert!(mean < duration / 100.0);
    }

    #[test]
    fn mean_dwell_matches_exponential() {
        let kappa = khz(150.0);
        let recs = simulate_records(&PulseShape::square(micros(0.2), 1.0), kappa, &quiet(1.0), 1_000_000, 9).unwrap();
        assert!(recs.len() > 900_000);
        let mean = recs.iter().map(DetectionRecord::dwell).sum::<f64>() / recs.len() as f64;
        assert_abs_diff_eq!(mean * 1e6, 1.0 / kappa * 1e6, epsilon = 0.02 * 1.061);
        assert_abs_diff_eq!(1.0 / kappa, 1.061e-6, epsilon = 1e-9);
    }

    #[test]
    fn dwell_times_pass_kolmogorov_smirnov() {
        let kappa = khz(150.0);
        let recs = simulate_records(&PulseShape::square(micros(0.2), 1.0), kappa, &quiet(1.0), 100_000, 21).unwrap();
        let mut d: Vec<f64> = recs.iter().map(DetectionRecord::dwell).collect();
        d.sort_by(f64::total_cmp);
        let n = d.len() as f64;
        let stat = d
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = 1.0 - (-kappa * x).exp();
                (cdf - i as f64 / n).abs().max((i as f64 + 1.0) / n - cdf)
            })
            .fold(0.0, f64::max);
        // α = 0.01
        assert!(stat < 1.628 / n.sqrt(), "D = {stat}");
    }

    #[test]
    fn zero_light_shift_is_phase_free() {
        let recs = simulate_records(&PulseShape::square(micros(0.2), 0.5), khz(150.0), &quiet(0.5), 50_000, 4).unwrap();
        let r = conditioned_phase_vs_exit_time(&recs, 0.0, micros(0.5), micros(0.5), PhaseModel::DwellTime).unwrap();
        assert_eq!(r.mean_phase, 0.0);
        assert_eq!(r.visibility, 1.0);
        assert!(r.n_events > 0);
    }

    #[test]
    fn circular_summary_degenerate_inputs() {
        let r = circular_summary(&[0.3; 10]).unwrap();
        assert_abs_diff_eq!(r.mean_phase, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(r.visibility, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.stderr_phase, 0.0, epsilon = 1e-9);
        let spread = circular_summary(&[0.1, 0.5]).unwrap();
        assert!(spread.visibility < 1.0);
        assert_abs_diff_eq!(spread.visibility, 0.2f64.cos(), epsilon = 1e-15);
        let cancel = circular_summary(&[0.0, std::f64::consts::PI]).unwrap();
        assert!(cancel.visibility < 1e-15);
        assert!(circular_summary(&[]).is_none());
    }

    #[test]
    fn empty_window() {
        let recs = simulate_records(&PulseShape::square(micros(0.2), 0.5), khz(150.0), &quiet(0.5), 100, 4).unwrap();
        let r = conditioned_phase_vs_exit_time(&recs, 1e5, 1.0, micros(0.5), PhaseModel::DwellTime);
        assert!(matches!(r, Err(DwellError::EmptySelection { .. })));
    }

    #[test]
    fn fixed_phase_counts_photons() {
        // Weak pulse: almost every selected trial holds a single photon.
        let recs = simulate_records(&PulseShape::square(micros(0.2), 1e-3), khz(150.0), &quiet(1.0), 200_000, 4).unwrap();
        let r = conditioned_phase_vs_exit_time(&recs, 0.0, 0.0, micros(10.0), PhaseModel::Fixed(0.4)).unwrap();
        assert_abs_diff_eq!(r.mean_phase, 0.4, epsilon = 1e-3);
    }

    #[test]
    fn unconditioned_phase_matches_simulation() {
        let kappa = khz(150.0);
        let shift = -0.6 * kappa;
        let amplitude = 0.8;
        let recs = simulate_records(&PulseShape::square(micros(0.2), amplitude), kappa, &quiet(1.0), 400_000, 17).unwrap();
        // Every trial, including empty ones.
        let mut phases = vec![0.0; 400_000];
        for r in &recs {
            phases[r.trial as usize] += shift * r.dwell();
        }
        let mc = circular_summary(&phases).unwrap();
        let closed = unconditioned_mean_phase(amplitude, shift, kappa);
        assert_abs_diff_eq!(mc.mean_phase, closed, epsilon = 4.0 * mc.stderr_phase);
    }

    #[test]
    fn line_fit() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (m, b) = fit_line(&xs, &ys);
        assert_abs_diff_eq!(m, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn long_pulse_limits() {
        let pulse = PulseShape::square(micros(2.0), 1.0);
        let kappa = 4.0 / pulse.duration;
        let flat = long_pulse_visibility(&pulse, kappa, 0.0, 10_000, 1).unwrap();
        assert_eq!(flat.visibility, 1.0);
        let v4 = long_pulse_visibility(&pulse, kappa, 0.4, 200_000, 1).unwrap().visibility;
        let v16 = long_pulse_visibility(&pulse, 4.0 * kappa, 0.4, 200_000, 1).unwrap().visibility;
        let v64 = long_pulse_visibility(&pulse, 16.0 * kappa, 0.4, 200_000, 1).unwrap().visibility;
        assert!(v4 < v16 && v16 < v64 && v64 < 1.0);
        assert_abs_diff_eq!(v4, 1.0 / (1.0 + 0.01), epsilon = 2e-3);
        assert!(long_pulse_visibility(&pulse, 0.5 / pulse.duration, 0.4, 10, 1).is_err());
    }
}
