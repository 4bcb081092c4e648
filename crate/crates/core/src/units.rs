//! Conversions between `ν` values (what people quote, e.g. "κ₀/2π = 150 kHz")
//! and the angular frequencies used everywhere else.

use std::f64::consts::TAU;

/// ν in MHz → ω in rad/s.
pub fn mhz(nu: f64) -> f64 {
    TAU * nu * 1e6
}

/// ν in kHz → ω in rad/s.
pub fn khz(nu: f64) -> f64 {
    TAU * nu * 1e3
}

/// ω in rad/s → ν in MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / (TAU * 1e6)
}

/// ω in rad/s → ν in kHz.
pub fn to_khz(omega: f64) -> f64 {
    omega / (TAU * 1e3)
}

pub fn micros(t: f64) -> f64 {
    t * 1e-6
}

pub fn to_micros(t: f64) -> f64 {
    t * 1e6
}
