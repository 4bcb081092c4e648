//! Experimental reference matrices used as golden data.

use num_complex::Complex64;

use super::density::{CMatrix4, DensityMatrix4};

fn hermitian_from_upper(diag: [f64; 4], upper: [(usize, usize, f64, f64); 6]) -> CMatrix4 {
    let mut m = CMatrix4::zeros();
    for (i, d) in diag.into_iter().enumerate() {
        m[(i, i)] = Complex64::new(d, 0.0);
    }
    for (r, c, re, im) in upper {
        m[(r, c)] = Complex64::new(re, im);
        m[(c, r)] = Complex64::new(re, -im);
    }
    m
}

/// Physical (maximum-likelihood) estimate after local phase removal, as
/// tabulated to four digits. Its trace is 1.000024, so it is renormalized.
pub fn measured_physical() -> DensityMatrix4 {
    let m = hermitian_from_upper(
        [0.6315, 0.321224, 0.0319, 0.0154],
        [
            (0, 1, 0.4174, 0.0),
            (0, 2, 0.1375, 0.0),
            (0, 3, 0.0495, -0.0239),
            (1, 2, 0.0996, -0.0035),
            (1, 3, 0.0527, -0.0248),
            (2, 3, 0.0153, -0.0054),
        ],
    );
    DensityMatrix4::normalized(m).expect("nonzero trace")
}

/// Linear-inversion estimate, as tabulated. Not positive semidefinite.
pub fn measured_linear() -> DensityMatrix4 {
    let m = hermitian_from_upper(
        [0.6358, 0.3205, 0.02899, 0.0146],
        [
            (0, 1, 0.4319, -0.07635),
            (0, 2, 0.1337, -0.00026),
            (0, 3, 0.00154, -0.0222),
            (1, 2, 0.1292, -0.07199),
            (1, 3, 0.0593, -0.01282),
            (2, 3, 0.0184, -0.0084),
        ],
    );
    DensityMatrix4::normalized(m).expect("nonzero trace")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn physical_estimate_metrics() {
        let rho = measured_physical();
        assert!(rho.is_psd());
        assert_abs_diff_eq!(rho.concurrence().unwrap(), 0.082, epsilon = 0.005);
        assert_abs_diff_eq!(rho.purity(), 0.92, epsilon = 0.01);
        assert_abs_diff_eq!(rho.nonlinear_phase().unwrap().abs(), 0.45, epsilon = 0.02);
    }

    #[test]
    fn linear_estimate_is_unphysical() {
        let rho = measured_linear();
        assert!(!rho.is_psd());
        assert_abs_diff_eq!(rho.get(0, 3).re, 0.00154, epsilon = 1e-4);
        assert_abs_diff_eq!(rho.get(0, 3).im, -0.0222, epsilon = 1e-4);
    }
}
