//! Cross-Kerr phase shifts from a strongly coupled atom–cavity system:
//! cavity response, click-conditioned phases, photon dwell-time Monte Carlo
//! and two-mode density-matrix tomography.

pub mod cavity;
pub mod conditioning;
pub mod dwell;
pub mod optim;
pub mod synth;
pub mod tomography;
pub mod units;
