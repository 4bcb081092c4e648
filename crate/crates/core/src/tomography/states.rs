//! The sixteen tomographic projections.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Coefficients of |0⟩ and |1⟩ for one mode.
pub type ModeVector = [Complex64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographicState {
    /// 1-based measurement index ν.
    pub index: usize,
    pub signal: ModeVector,
    pub control: ModeVector,
    /// Signal-reference phase at which the fringe is read, if any.
    pub theta_s: Option<f64>,
    /// Relative σ⁻/σ⁺ phase selected by the control wave plates, if any.
    pub theta_c: Option<f64>,
    pub hwp: f64,
    pub qwp: f64,
}

impl TomographicState {
    /// |ψ_ν⟩ = signal ⊗ control over (|0s0c⟩, |0s1c⟩, |1s0c⟩, |1s1c⟩).
    pub fn vector(&self) -> Vector4<Complex64> {
        let (s, c) = (self.signal, self.control);
        Vector4::new(s[0] * c[0], s[0] * c[1], s[1] * c[0], s[1] * c[1])
    }

    pub fn projector(&self) -> Matrix4<Complex64> {
        let v = self.vector();
        v * v.adjoint()
    }

    /// Angle at which the fringe for this measurement is evaluated.
    pub fn fringe_angle(&self) -> Option<f64> {
        self.theta_s.or(self.theta_c)
    }
}

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const ZERO: ModeVector = [c(1.0, 0.0), c(0.0, 0.0)];
const ONE: ModeVector = [c(0.0, 0.0), c(1.0, 0.0)];
/// (|0⟩ + |1⟩)/√2
const DIAG: ModeVector = [c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)];
/// (|0⟩ − i|1⟩)/√2
const RIGHT: ModeVector = [c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)];
/// (|0⟩ + i|1⟩)/√2
const LEFT: ModeVector = [c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)];

const THREE_HALVES_PI: f64 = 3.0 * FRAC_PI_2;

/// (signal, control, θ_s, θ_c, HWP, QWP)
type Row = (ModeVector, ModeVector, Option<f64>, Option<f64>, f64, f64);

/// The measurement table, ν = 1..16 in order.
pub fn tomographic_states() -> [TomographicState; 16] {
    #[rustfmt::skip]
    let rows: [Row; 16] = [
        (ZERO,  ZERO,  None,                 None,            0.0,       FRAC_PI_4),
        (ZERO,  ONE,   None,                 None,            0.0,       -FRAC_PI_4),
        (ONE,   ONE,   None,                 None,            0.0,       -FRAC_PI_4),
        (ONE,   ZERO,  None,                 None,            0.0,       FRAC_PI_4),
        (RIGHT, ZERO,  Some(THREE_HALVES_PI), None,           0.0,       FRAC_PI_4),
        (RIGHT, ONE,   Some(THREE_HALVES_PI), None,           0.0,       -FRAC_PI_4),
        (DIAG,  ONE,   Some(0.0),            None,            0.0,       -FRAC_PI_4),
        (DIAG,  ZERO,  Some(0.0),            None,            0.0,       FRAC_PI_4),
        (DIAG,  RIGHT, Some(0.0),            None,            -FRAC_PI_8, 0.0),
        (DIAG,  DIAG,  Some(0.0),            None,            0.0,       0.0),
        (RIGHT, DIAG,  Some(THREE_HALVES_PI), None,           0.0,       0.0),
        (ZERO,  DIAG,  None,                 Some(0.0),       0.0,       0.0),
        (ONE,   DIAG,  None,                 Some(0.0),       0.0,       0.0),
        (ONE,   LEFT,  None,                 Some(FRAC_PI_2), FRAC_PI_8,  0.0),
        (ZERO,  LEFT,  None,                 Some(FRAC_PI_2), FRAC_PI_8,  0.0),
        (RIGHT, LEFT,  Some(THREE_HALVES_PI), None,           FRAC_PI_8,  0.0),
    ];
    std::array::from_fn(|i| {
        let (signal, control, theta_s, theta_c, hwp, qwp) = rows[i];
        TomographicState { index: i + 1, signal, control, theta_s, theta_c, hwp, qwp }
    })
}
