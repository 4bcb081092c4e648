//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are evaluated exactly as stated and
//! are expected to print FAIL; the reasons are given next to the list. The
//! binary exits non-zero when any outcome differs from that expectation, so
//! both a regression and a silently "fixed" known failure are caught.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xkerr::cavity::{
    cavity_linewidth, conditional_signal_phase, conditional_signal_transmission, peak_cooperativity, CavityParams,
};
use xkerr::conditioning::{mean_phase_coherent, CoherentInput, DetectionChannel};
use xkerr::dwell::{
    fit_line, long_pulse_visibility, phase_vs_conditioning_time, simulate_records, unconditioned_mean_phase, PhaseModel,
    PulseShape,
};
use xkerr::optim::{minimize, MinimizeOptions};
use xkerr::synth::{project_counts, GroundTruth};
use xkerr::tomography::reference::measured_physical;
use xkerr::tomography::{
    bootstrap_errors, compare_m_matrices, ideal_concurrence_bound, linear_inversion, m_matrices, maxlik_reconstruct,
    BootstrapOptions, DensityMatrix4, InputState, MaxLikOptions,
};
use xkerr::units::mhz;

/// Criteria that cannot hold as stated:
/// 2: φ(x) = (η/2) x/(1 + η + x²), x = 2Δ/Γ, peaks at Δ/Γ = √(1+η)/2, not (1+η)/2.
/// 8: four of the tabulated inversion matrices (ν = 9, 10, 11, 16) are half
///    the unique dual frame of the sixteen projectors.
/// 12: qubit-truncated coherent inputs matched to the measured populations
///    give about 0.09, not 0.11.
const KNOWN_FAILURES: [u32; 3] = [2, 8, 12];

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn with_eta(eta: f64) -> CavityParams {
    CavityParams { eta, ..CavityParams::experiment() }
}

/// Numerical maximum of the conditional phase over x = 2Δ/Γ > 0.
fn phase_optimum(params: &CavityParams) -> (f64, f64) {
    let phase_at = |x: f64| conditional_signal_phase(0.5 * x * params.gamma, params);
    let opts = MinimizeOptions { f_tol: 1e-15, x_tol: 1e-10, ..Default::default() };
    let m = minimize(|v| if v[0] <= 0.0 { f64::INFINITY } else { -phase_at(v[0]) }, &[1.0], &opts);
    (m.x[0], -m.value)
}

fn criterion_1() -> Outcome {
    let phi = conditional_signal_phase(mhz(-8.0), &CavityParams::experiment());
    check(within(phi.abs(), 0.41, 0.02), format!("|phi(-8 MHz)| = {:.4} rad (0.41 +/- 0.02)", phi.abs()))
}

fn criterion_2() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for eta in [0.5, 1.0, 3.8, 10.0] {
        let (x, phi) = phase_optimum(&with_eta(eta));
        let value_err = (phi - eta / (4.0 * (1.0 + eta).sqrt())).abs();
        let location = 0.5 * x;
        let location_err = (location - 0.5 * (1.0 + eta)).abs();
        pass &= value_err <= 1e-6 && location_err <= 1e-3;
        parts.push(format!("eta={eta}: |dphi|={value_err:.1e}, Delta/Gamma={location:.4} vs {:.4}", 0.5 * (1.0 + eta)));
    }
    check(pass, parts.join("; "))
}

fn criterion_3() -> Outcome {
    let params = with_eta(3.8);
    let (x, _) = phase_optimum(&params);
    let t = conditional_signal_transmission(0.5 * x * params.gamma, &params);
    check(within(t, 0.67, 0.01), format!("T_s/T_0 at optimum = {t:.4} (0.67 +/- 0.01)"))
}

fn criterion_4() -> Outcome {
    let eta0 = peak_cooperativity(77.1e3, 35.5e-6, 852.347e-9);
    check(within(eta0, 8.6, 0.1), format!("eta_0 = {eta0:.4} (8.6 +/- 0.1)"))
}

fn criterion_5() -> Outcome {
    let params = CavityParams::experiment();
    let on_resonance = cavity_linewidth(0.0, 1.0, &params) / params.kappa0;
    let mut worst: f64 = 0.0;
    for k in 0..41 {
        let delta = params.gamma * (-5.0 + 0.25 * k as f64);
        let x = 2.0 * delta / params.gamma;
        let im_chi = 1.0 / (1.0 + x * x);
        let expected = 1.0 + params.eta * im_chi;
        worst = worst.max((cavity_linewidth(delta, 1.0, &params) / params.kappa0 - expected).abs());
    }
    check(
        within(on_resonance, 4.8, 1e-12) && worst <= 1e-12,
        format!("kappa/kappa0(0) = {on_resonance}, worst grid deviation {worst:.1e}"),
    )
}

fn criterion_6() -> Outcome {
    let rho = measured_physical();
    let c = rho.concurrence().unwrap_or(f64::NAN);
    let p = rho.purity();
    let theta = rho.nonlinear_phase().map(f64::abs).unwrap_or(f64::NAN);
    check(
        within(c, 0.082, 0.005) && within(p, 0.92, 0.01) && within(theta, 0.45, 0.02),
        format!("concurrence {c:.4}, purity {p:.4}, |phase| {theta:.4}"),
    )
}

fn random_density(rng: &mut ChaCha8Rng, rank: usize) -> DensityMatrix4 {
    let a = Matrix4::from_fn(|_, c| {
        if c < rank {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    DensityMatrix4::normalized(a * a.adjoint()).expect("Gram matrix")
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut min_fidelity: f64 = 1.0;
    for k in 0..1000 {
        let rho = random_density(&mut rng, 1 + k % 4);
        let Ok(ds) = project_counts(&GroundTruth::new(rho, 1e4), k as u64) else {
            return check(false, format!("state {k}: projection failed"));
        };
        let Ok(lin) = linear_inversion(&ds.counts) else {
            return check(false, format!("state {k}: inversion failed"));
        };
        let err = (lin.rho.matrix() - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst = worst.max(err);
        if k % 20 == 0 {
            let f = match maxlik_reconstruct(&ds.counts, None, &MaxLikOptions::default()) {
                Ok(ml) => ml.rho.fidelity(&rho),
                Err(_) => 0.0,
            };
            min_fidelity = min_fidelity.min(f);
        }
    }
    check(
        worst <= 1e-10 && min_fidelity >= 0.9999,
        format!("1000 states: worst inversion error {worst:.1e}; 50 MaxLik fits: min fidelity {min_fidelity:.6}"),
    )
}

fn criterion_8() -> Outcome {
    let mismatch = compare_m_matrices();
    let worst = mismatch.max_deviation.iter().cloned().fold(0.0, f64::max);
    check(
        m_matrices().is_ok(),
        format!("mismatched nu = {:?}, worst element deviation {worst:.3}", mismatch.mismatched),
    )
}

fn criterion_9() -> Outcome {
    let ns: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let phases: Vec<f64> = ns
        .iter()
        .map(|&n| mean_phase_coherent(0.39, &CoherentInput::new(n).expect("valid mean")).unwrap_or(f64::NAN))
        .collect();
    let (slope, _) = fit_line(&ns, &phases);
    check(within(slope, 0.39, 0.01), format!("slope {slope:.4} rad/photon (0.39 +/- 0.01)"))
}

fn criterion_10() -> Outcome {
    let pulse = PulseShape::square(2e-6, 1.0);
    match long_pulse_visibility(&pulse, 2e6, 0.4, 1_000_000, 10) {
        Ok(r) => check(within(r.visibility, 0.99, 0.005), format!("visibility {:.5} (0.99 +/- 0.005)", r.visibility)),
        Err(e) => check(false, e.to_string()),
    }
}

/// Conditioned phase at window centres `centers` (in units of 1/κ).
fn dwell_scan(amplitude: f64, background_rate: f64, centers: &[f64], light_shift: f64) -> Result<Vec<f64>, String> {
    let kappa = CavityParams::experiment().kappa0;
    let pulse = PulseShape::square(0.1 / kappa, amplitude);
    let channel = DetectionChannel::new(0.5, background_rate, 14.0 / kappa).map_err(|e| e.to_string())?;
    let records = simulate_records(&pulse, kappa, &channel, 1_000_000, 11).map_err(|e| e.to_string())?;
    let times: Vec<f64> = centers.iter().map(|c| c / kappa).collect();
    phase_vs_conditioning_time(&records, light_shift, &times, 0.5e-6, PhaseModel::DwellTime)
        .into_iter()
        .map(|r| r.map(|d| d.mean_phase).map_err(|e| e.to_string()))
        .collect()
}

fn criterion_11() -> Outcome {
    let params = CavityParams::experiment();
    let kappa = params.kappa0;
    let delta = xkerr::cavity::light_shift(mhz(-8.0), &params);
    let centers: Vec<f64> = (0..=10).map(|k| 0.5 + 0.25 * k as f64).collect();
    let clean = match dwell_scan(0.05, 0.0, &centers, delta) {
        Ok(p) => p,
        Err(e) => return check(false, e),
    };
    let times: Vec<f64> = centers.iter().map(|c| c / kappa).collect();
    let (slope, _) = fit_line(&times, &clean);
    let rel = (slope / delta - 1.0).abs();

    // With background, late windows are mostly background clicks whose
    // trials carry the unconditioned phase, so the curve falls back to it.
    let late = [1.0, 2.0, 3.0, 5.0, 8.0, 12.0];
    let noisy = match dwell_scan(0.8, 1e-2 * kappa, &late, delta) {
        Ok(p) => p,
        Err(e) => return check(false, e),
    };
    let baseline = unconditioned_mean_phase(0.8, delta, kappa);
    let peak = noisy.iter().map(|p| (p - baseline).abs()).fold(0.0, f64::max);
    let last = noisy.last().map(|p| (p - baseline).abs()).unwrap_or(f64::NAN);
    let rolls_off = last < 0.25 * peak;
    check(
        rel <= 0.05 && rolls_off,
        format!(
            "slope/delta = {:.4} (1 +/- 0.05); with background the excess over the unconditioned {baseline:.3} rad peaks at {peak:.3} and falls to {last:.3} at 12/kappa",
            slope / delta
        ),
    )
}

fn criterion_12() -> Outcome {
    let diag = [0.6315, 0.321224, 0.0319, 0.0154];
    let signal_mean = (diag[2] + diag[3]) / (diag[0] + diag[1]);
    let control_mean = (diag[1] + diag[3]) / (diag[0] + diag[2]);
    let coherent = ideal_concurrence_bound(0.45, InputState::Coherent { signal_mean, control_mean }).unwrap_or(f64::NAN);
    let equal = ideal_concurrence_bound(0.45, InputState::EqualSuperposition).unwrap_or(f64::NAN);
    let equal_err = (equal - (0.45f64 / 2.0).sin().abs()).abs();
    check(
        within(coherent, 0.11, 0.01) && equal_err <= 1e-12,
        format!(
            "coherent (n_s={signal_mean:.4}, n_c={control_mean:.4}) -> {coherent:.4} (0.11 +/- 0.01); equal superposition off by {equal_err:.1e}"
        ),
    )
}

/// The measured state has two near-zero eigenvalues, so MaxLik sits on the
/// boundary of the physical set and 1/√N scaling only sets in at large
/// counts; the same noiseless counts are therefore doubled at 𝒩 = 2×10⁵.
fn criterion_13() -> Outcome {
    let rho = measured_physical();
    let stds = |scale: f64| -> Result<(f64, f64), String> {
        let counts = project_counts(&GroundTruth::new(rho, scale), 0).map_err(|e| e.to_string())?.event_counts();
        let r = bootstrap_errors(&counts, &BootstrapOptions { seed: 13, ..Default::default() }).map_err(|e| e.to_string())?;
        Ok((r.concurrence_std, r.phase_std))
    };
    let (low, high) = match (stds(2e5), stds(4e5)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return check(false, e),
    };
    let rc = low.0 / high.0;
    let rp = low.1 / high.1;
    let ok = |r: f64| within(r / 2f64.sqrt(), 1.0, 0.2);
    check(ok(rc) && ok(rp), format!("std ratios: concurrence {rc:.3}, phase {rp:.3} (sqrt 2 = 1.414 +/- 20%)"))
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome); 13] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
        (13, criterion_13),
    ];
    let mut unexpected = Vec::new();
    for (id, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        let known = KNOWN_FAILURES.contains(&id);
        let note = if known { " [known failure]" } else { "" };
        println!("criterion {id:>2}: {status}{note} ({:.1} s) {}", start.elapsed().as_secs_f64(), outcome.detail);
        if outcome.pass == known {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: outcomes as expected");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
