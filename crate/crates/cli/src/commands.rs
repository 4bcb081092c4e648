//! Table-producing scenarios.

use xkerr::cavity::{
    blocking_factor, cavity_linewidth, cavity_transmission, conditional_phase_full, conditional_signal_phase,
    conditional_signal_transmission, light_shift,
};
use xkerr::conditioning::{conditional_phase_coherent, mean_phase_coherent, CoherentInput, DetectionChannel};
use xkerr::dwell::{phase_vs_conditioning_time, simulate_records, DetectionRecord, DwellError, PhaseModel};
use xkerr::units;

use crate::config::{ConfigError, RunConfig, SweepVariable};
use crate::table::Table;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation: {0}")]
    Simulation(#[from] DwellError),
}

/// Cavity response against control-atom detuning. `psi_model_rad` is the
/// control phase at zero light-cavity detuning, `phase_full_rad` at the
/// configured one.
pub fn sweep_detuning(cfg: &RunConfig) -> Result<Table, CommandError> {
    let params = cfg.cavity.params()?;
    let ideal = xkerr::cavity::CavityParams { delta_c: 0.0, ..params };
    let mut t = Table::new(&[
        "delta_over_2pi_mhz",
        "phi_rad",
        "phase_full_rad",
        "psi_model_rad",
        "signal_transmission",
        "control_transmission",
        "linewidth_ratio",
        "blocking_factor",
    ]);
    for d in cfg.sweep(SweepVariable::DeltaOver2piMhz).values() {
        let delta = units::mhz(d);
        t.push(vec![
            Some(d),
            Some(conditional_signal_phase(delta, &params)),
            Some(conditional_phase_full(delta, &params)),
            Some(conditional_phase_full(delta, &ideal)),
            Some(conditional_signal_transmission(delta, &params)),
            Some(cavity_transmission(delta, 1.0, &params)),
            Some(cavity_linewidth(delta, 1.0, &params) / params.kappa0),
            Some(blocking_factor(delta, &params)),
        ]);
    }
    Ok(t)
}

/// Mean and click-conditioned phase against the mean control photon number.
/// Points where the conditional phase is undefined are left empty.
pub fn conditional_phase(cfg: &RunConfig) -> Result<Table, CommandError> {
    let params = cfg.cavity.params()?;
    let channel = cfg.channel.channel()?;
    let c = &cfg.conditioning;
    let phi = c.single_photon_phase_rad.unwrap_or_else(|| conditional_signal_phase(units::mhz(c.delta_over_2pi_mhz), &params));
    let mut t = Table::new(&["control_mean_photons", "mean_phase_rad", "conditional_phase_rad"]);
    for n in cfg.sweep(SweepVariable::ControlMeanPhotons).values() {
        let input = CoherentInput::new(n).map_err(|e| ConfigError::Invalid { field: "sweeps".into(), reason: e.to_string() })?;
        let mean = mean_phase_coherent(phi, &input);
        let cond = conditional_phase_coherent(phi, c.detected_photons, &input, &channel);
        for (what, r) in [("mean", &mean), ("conditional", &cond)] {
            if let Err(e) = r {
                eprintln!("warning: <n> = {n}: {what} phase undefined: {e}");
            }
        }
        t.push(vec![Some(n), mean.ok(), cond.ok()]);
    }
    Ok(t)
}

/// Monte Carlo conditioned phase against conditioning time. The control
/// photon leaves the cavity at the linewidth it sees with one stored
/// signal photon, so its mean phase is the single-photon phase.
pub fn dwell(cfg: &RunConfig) -> Result<(Table, Vec<DetectionRecord>), CommandError> {
    let params = cfg.cavity.params()?;
    let window = cfg.channel.channel()?;
    let pulse = cfg.pulse.pulse()?;
    let observation = DetectionChannel { window: units::micros(cfg.dwell.observation_us), ..window };
    let delta = units::mhz(cfg.dwell.delta_over_2pi_mhz);
    let kappa = cavity_linewidth(delta, 1.0, &params);
    let shift = light_shift(delta, &params);
    let records = simulate_records(&pulse, kappa, &observation, cfg.dwell.trials, cfg.seed)?;
    let taus = cfg.sweep(SweepVariable::ConditioningTimeUs).values();
    let centers: Vec<f64> = taus.iter().map(|t| units::micros(*t)).collect();
    let results = phase_vs_conditioning_time(&records, shift, &centers, window.window, PhaseModel::DwellTime);
    let mut t = Table::new(&["tau_us", "mean_phase_rad", "visibility", "stderr_phase_rad", "n_events"]);
    for (tau, r) in taus.iter().zip(results) {
        match r {
            Ok(d) => t.push(vec![Some(*tau), Some(d.mean_phase), Some(d.visibility), Some(d.stderr_phase), Some(d.n_events as f64)]),
            Err(DwellError::EmptySelection { .. }) => {
                eprintln!("warning: tau = {tau} us: no detected click in the window");
                t.push(vec![Some(*tau), None, None, None, Some(0.0)]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((t, records))
}

pub fn write_records(records: &[DetectionRecord], out: &mut dyn std::io::Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Sweep;

    fn row_at(t: &Table, col: &str, key: f64) -> f64 {
        let k = t.columns.iter().position(|c| *c == col).unwrap();
        t.rows.iter().find(|r| r[0] == Some(key)).unwrap()[k].unwrap()
    }

    #[test]
    fn detuning_table_anchor_rows() {
        let mut cfg = RunConfig::default();
        cfg.sweeps.push(Sweep { variable: SweepVariable::DeltaOver2piMhz, start: -8.0, stop: 8.0, points: 5 });
        let t = sweep_detuning(&cfg).unwrap();
        // x = 2Δ/Γ, χ = (x + i)/(1 + x²)
        let x: f64 = -16.0 / 5.2;
        let (re, im) = (x / (1.0 + x * x), 1.0 / (1.0 + x * x));
        assert!((row_at(&t, "phi_rad", -8.0) - 1.9 * re / (1.0 + 3.8 * im)).abs() < 1e-12);
        assert!((row_at(&t, "phi_rad", -8.0) + 0.41).abs() < 0.01);
        assert!((row_at(&t, "linewidth_ratio", -8.0) - (1.0 + 3.8 * im)).abs() < 1e-12);
        assert!((row_at(&t, "linewidth_ratio", -8.0) - 1.36).abs() < 0.01);
        assert_eq!(row_at(&t, "phi_rad", 0.0), 0.0);
        assert!((row_at(&t, "linewidth_ratio", 0.0) - 4.8).abs() < 1e-12);
        for d in [4.0, 8.0] {
            assert_eq!(row_at(&t, "phi_rad", d), -row_at(&t, "phi_rad", -d));
        }
        // at zero light-cavity detuning the full phase is arctan(phi)
        assert!((row_at(&t, "phase_full_rad", -8.0) - row_at(&t, "phi_rad", -8.0).atan()).abs() < 1e-15);
    }

    #[test]
    fn conditional_phase_rows() {
        let mut cfg = RunConfig::default();
        cfg.conditioning.single_photon_phase_rad = Some(0.39);
        cfg.sweeps.push(Sweep { variable: SweepVariable::ControlMeanPhotons, start: 0.0, stop: 1.5, points: 4 });
        let t = conditional_phase(&cfg).unwrap();
        assert_eq!(t.rows[0], vec![Some(0.0), Some(0.0), None]);
        // Poisson input: the mean phase is <n> sin(phi)
        assert!((t.rows[2][1].unwrap() - 0.39f64.sin()).abs() < 1e-9);
        assert!(t.rows[3][2].unwrap() > 0.39);
    }

    #[test]
    fn dwell_rows_and_empty_windows() {
        let mut cfg = RunConfig::default();
        cfg.dwell.trials = 20_000;
        cfg.sweeps.push(Sweep { variable: SweepVariable::ConditioningTimeUs, start: 0.5, stop: 30.0, points: 3 });
        let (t, records) = dwell(&cfg).unwrap();
        assert!(!records.is_empty());
        assert!(t.rows[0][4].unwrap() > 0.0);
        // past the observation span nothing is ever detected
        assert_eq!(t.rows[2], vec![Some(30.0), None, None, None, Some(0.0)]);
    }
}
