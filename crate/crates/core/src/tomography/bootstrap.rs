//! Half-sample resampling errors for concurrence and nonlinear phase.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Hypergeometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::maxlik::{maxlik_reconstruct, MaxLikOptions};
use super::TomographyError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    pub n_resamples: usize,
    pub seed: u64,
    pub maxlik: MaxLikOptions,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self { n_resamples: 100, seed: 0, maxlik: MaxLikOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Sample standard deviation over successful resamples.
    pub concurrence_std: f64,
    /// Sample standard deviation of the phase about its circular mean.
    pub phase_std: f64,
    pub concurrences: Vec<f64>,
    pub phases: Vec<f64>,
    pub succeeded: usize,
    /// (resample index, error message) for every excluded resample.
    pub failures: Vec<(usize, String)>,
}

/// Draws ⌊N/2⌋ of the N pooled coincidence events without replacement,
/// channel by channel.
pub fn half_sample(counts: &[u64; 16], rng: &mut ChaCha8Rng) -> [u64; 16] {
    let mut population: u64 = counts.iter().sum();
    let mut remaining = population / 2;
    let mut out = [0u64; 16];
    for (slot, &k) in out.iter_mut().zip(counts) {
        if remaining == 0 || population == 0 {
            break;
        }
        let draw = if k == population {
            remaining
        } else {
            Hypergeometric::new(population, k, remaining).expect("valid hypergeometric").sample(rng)
        };
        *slot = draw;
        population -= k;
        remaining -= draw;
    }
    out
}

fn sample_std(values: &[f64], center: f64) -> f64 {
    let n = values.len() as f64;
    (values.iter().map(|v| (v - center).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn wrap(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    x - tau * ((x + std::f64::consts::PI) / tau).floor()
}

/// Reruns the maximum-likelihood reconstruction on `n_resamples` half
/// samples of the coincidence events. Failed resamples are excluded and
/// listed; at least two must succeed.
pub fn bootstrap_errors(counts: &[u64; 16], opts: &BootstrapOptions) -> Result<BootstrapResult, TomographyError> {
    if counts[..4].iter().sum::<u64>() < 2 {
        return Err(TomographyError::ZeroNormalization(counts[..4].iter().sum::<u64>() as f64));
    }
    let outcomes: Vec<Result<(f64, f64), String>> = (0..opts.n_resamples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let half = half_sample(counts, &mut rng).map(|v| v as f64);
            let fit = maxlik_reconstruct(&half, None, &opts.maxlik).map_err(|e| e.to_string())?;
            let c = fit.rho.concurrence().map_err(|e| e.to_string())?;
            let p = fit.rho.nonlinear_phase().map_err(|e| e.to_string())?;
            Ok((c, p))
        })
        .collect();
    let mut concurrences = Vec::new();
    let mut phases = Vec::new();
    let mut failures = Vec::new();
    for (k, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok((c, p)) => {
                concurrences.push(c);
                phases.push(p);
            }
            Err(e) => failures.push((k, e)),
        }
    }
    if concurrences.len() < 2 {
        return Err(TomographyError::InvalidInput {
            field: "bootstrap",
            reason: format!("only {} of {} resamples succeeded", concurrences.len(), opts.n_resamples),
        });
    }
    let mean_c = concurrences.iter().sum::<f64>() / concurrences.len() as f64;
    let (s, c) = phases.iter().fold((0.0, 0.0), |(s, c), p| (s + p.sin(), c + p.cos()));
    let direction = f64::atan2(s, c);
    let deviations: Vec<f64> = phases.iter().map(|p| wrap(p - direction)).collect();
    let mean_dev = deviations.iter().sum::<f64>() / deviations.len() as f64;
    Ok(BootstrapResult {
        concurrence_std: sample_std(&concurrences, mean_c),
        phase_std: sample_std(&deviations, mean_dev),
        succeeded: concurrences.len(),
        concurrences,
        phases,
        failures,
    })
}
