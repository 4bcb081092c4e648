//! Reconstruction pipeline: normalize fringes, rescale coincidences, invert
//! linearly, fit by maximum likelihood, bootstrap, report.

use serde::Serialize;
use sha2::{Digest, Sha256};
use xkerr::optim::MinimizeOptions;
use xkerr::synth::{project_counts, GroundTruth};
use xkerr::tomography::{
    bootstrap_errors, linear_inversion, maxlik_reconstruct, normalize_fringes, reconstruct_coincidences, BootstrapOptions,
    CoincidenceSet, DensityMatrix4, DensityMatrixJson, MaxLikOptions, TomographyError, BASIS_ORDER,
};

use crate::config::{ConfigError, RunConfig};
use crate::input::{parse_csv, parse_json, write_csv, InputError};

#[derive(Debug, thiserror::Error)]
pub enum TomographyRunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("{context}: {source}")]
    Data { context: &'static str, source: TomographyError },
}

fn data(context: &'static str) -> impl FnOnce(TomographyError) -> TomographyRunError {
    move |source| TomographyRunError::Data { context, source }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    /// None when undefined for a non-physical matrix.
    pub concurrence: Option<f64>,
    pub purity: f64,
    /// Argument of the |1s1c⟩⟨0s0c| coherence; None when it vanishes.
    pub nonlinear_phase_rad: Option<f64>,
    /// Tr ρ.
    pub purity_trace: f64,
}

impl Metrics {
    pub fn of(rho: &DensityMatrix4) -> Self {
        Self {
            concurrence: rho.concurrence().ok(),
            purity: rho.purity(),
            nonlinear_phase_rad: rho.nonlinear_phase().ok(),
            purity_trace: rho.trace(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearReport {
    pub density_matrix: DensityMatrixJson,
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxLikReport {
    pub converged: bool,
    pub objective: f64,
    pub initial_objective: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapReport {
    pub resamples: usize,
    pub succeeded: usize,
    pub concurrence_std: f64,
    pub nonlinear_phase_std_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub mode: &'static str,
    pub input_sha256: String,
    pub seed: u64,
    pub optimizer_evaluations: usize,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub basis: &'static str,
    /// MaxLik estimate with local phases rotated out.
    pub density_matrix: DensityMatrixJson,
    pub metrics: Metrics,
    /// MaxLik estimate as fitted.
    pub density_matrix_raw: DensityMatrixJson,
    pub linear_inversion: LinearReport,
    pub coincidences: [f64; 16],
    pub maxlik: MaxLikReport,
    pub bootstrap: Option<BootstrapReport>,
    pub provenance: Provenance,
}

/// Input as read from disk, with its hash.
pub struct Input {
    pub set: CoincidenceSet,
    pub sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads a CSV fringe file or a JSON coincidence set, by extension.
pub fn load_input(path: &std::path::Path, cfg: &RunConfig) -> Result<Input, TomographyRunError> {
    let name = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| InputError::Read { path: name.clone(), reason: e.to_string() })?;
    let text = std::str::from_utf8(&bytes).map_err(|e| InputError::Read { path: name.clone(), reason: e.to_string() })?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let set = if is_json { parse_json(text, &name)? } else { csv_set(text, &name, cfg)? };
    Ok(Input { set, sha256: sha256_hex(&bytes) })
}

fn csv_set(text: &str, name: &str, cfg: &RunConfig) -> Result<CoincidenceSet, TomographyRunError> {
    let tc = &cfg.tomography;
    let table = parse_csv(text, name)?;
    let fringes = table.fringe_data(&tc.contrast_ref, tc.conditioning_totals.as_ref(), tc.detection_efficiency);
    normalize_fringes(&fringes).map_err(|e| InputError::Content { path: name.into(), reason: e.to_string() }.into())
}

/// Synthetic fringe file for the configured ground truth, as CSV text.
pub fn simulate_input(cfg: &RunConfig) -> Result<String, TomographyRunError> {
    let sim = &cfg.tomography.simulate;
    let gt = GroundTruth {
        rho: sim.state.density()?,
        counts_scale: sim.counts_scale,
        noise: sim.noise,
        contrast_ref: cfg.tomography.contrast_ref,
        detection_efficiency: cfg.tomography.detection_efficiency,
    };
    let ds = project_counts(&gt, cfg.seed).map_err(data("synthetic data"))?;
    let mut buf = Vec::new();
    write_csv(&ds.data, &mut buf).expect("write to memory");
    Ok(String::from_utf8(buf).expect("ascii"))
}

/// Runs the pipeline on simulated data through the same CSV path real data takes.
pub fn simulate(cfg: &RunConfig) -> Result<(Report, String), TomographyRunError> {
    let text = simulate_input(cfg)?;
    let set = csv_set(&text, "<simulated>", cfg)?;
    let report = reconstruct(&Input { set, sha256: sha256_hex(text.as_bytes()) }, cfg, "simulate")?;
    Ok((report, text))
}

pub fn reconstruct(input: &Input, cfg: &RunConfig, mode: &'static str) -> Result<Report, TomographyRunError> {
    let tc = &cfg.tomography;
    let n = reconstruct_coincidences(&input.set, tc.detection_efficiency).map_err(data("coincidence reconstruction"))?;
    let lin = linear_inversion(&n).map_err(data("linear inversion"))?;
    let opts = MaxLikOptions { minimize: MinimizeOptions { max_evals: tc.max_evaluations, ..Default::default() } };
    let (ml, converged) = match maxlik_reconstruct(&n, None, &opts) {
        Ok(r) => (r, true),
        Err(TomographyError::NotConverged(best)) => (*best, false),
        Err(e) => return Err(data("maximum likelihood")(e)),
    };
    let bootstrap = if tc.bootstrap_resamples >= 2 {
        let counts = n.map(|v| v.round().max(0.0) as u64);
        let bo = BootstrapOptions { n_resamples: tc.bootstrap_resamples, seed: cfg.seed, maxlik: opts };
        match bootstrap_errors(&counts, &bo) {
            Ok(b) => Some(BootstrapReport {
                resamples: tc.bootstrap_resamples,
                succeeded: b.succeeded,
                concurrence_std: b.concurrence_std,
                nonlinear_phase_std_rad: b.phase_std,
            }),
            Err(e) => {
                eprintln!("warning: bootstrap skipped: {e}");
                None
            }
        }
    } else {
        None
    };
    let rotated = ml.rho.remove_local_phases();
    Ok(Report {
        basis: BASIS_ORDER,
        density_matrix: DensityMatrixJson::from(&rotated),
        metrics: Metrics::of(&rotated),
        density_matrix_raw: DensityMatrixJson::from(&ml.rho),
        linear_inversion: LinearReport {
            density_matrix: DensityMatrixJson::from(&lin.rho),
            is_psd: lin.is_psd,
            min_eigenvalue: lin.min_eigenvalue,
            metrics: Metrics::of(&lin.rho),
        },
        coincidences: n,
        maxlik: MaxLikReport {
            converged,
            objective: ml.objective,
            initial_objective: ml.initial_objective,
            evaluations: ml.evaluations,
        },
        bootstrap,
        provenance: Provenance {
            mode,
            input_sha256: input.sha256.clone(),
            seed: cfg.seed,
            optimizer_evaluations: ml.evaluations,
            version: env!("CARGO_PKG_VERSION"),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::StateConfig;

    fn quick() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.tomography.bootstrap_resamples = 0;
        cfg
    }

    #[test]
    fn maximally_mixed_round_trip() {
        let mut cfg = quick();
        cfg.tomography.simulate.state = StateConfig::MaximallyMixed;
        let (r, _) = simulate(&cfg).unwrap();
        assert!(r.metrics.concurrence.unwrap().abs() < 1e-9);
        assert!((r.metrics.purity - 0.25).abs() < 1e-9);
        assert!((r.metrics.purity_trace - 1.0).abs() < 1e-12);
        assert!(r.maxlik.converged);
    }

    #[test]
    fn phase_entangled_round_trip() {
        let mut cfg = quick();
        cfg.tomography.simulate.state =
            StateConfig::PhaseEntangled { theta_rad: 0.45, signal_mean_photons: 0.0497, control_mean_photons: 0.507 };
        let (r, text) = simulate(&cfg).unwrap();
        assert!((r.metrics.nonlinear_phase_rad.unwrap().abs() - 0.45).abs() < 0.01);
        assert_eq!(r.provenance.input_sha256, sha256_hex(text.as_bytes()));
        assert_eq!(r.provenance.input_sha256.len(), 64);
    }

    #[test]
    fn measured_state_fixture() {
        let (r, _) = simulate(&quick()).unwrap();
        assert!((r.metrics.concurrence.unwrap() - 0.082).abs() <= 0.005);
        assert!((r.metrics.purity - 0.92).abs() <= 0.01);
        // local phase removal leaves the first row real
        for c in 1..3 {
            assert!(r.density_matrix.im[0][c].abs() < 1e-12);
            assert!(r.density_matrix.re[0][c] >= 0.0);
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut cfg = quick();
        cfg.tomography.max_evaluations = 20;
        let (r, _) = simulate(&cfg).unwrap();
        assert!(!r.maxlik.converged);
    }
}
