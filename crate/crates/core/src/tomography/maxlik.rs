//! Maximum-likelihood density matrix with ρ = T†T / Tr(T†T), T lower triangular.

use nalgebra::Vector4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::density::{CMatrix4, DensityMatrix4};
use super::reconstruct::linear_inversion;
use super::states::tomographic_states;
use super::TomographyError;
use crate::optim::{minimize, MinimizeOptions};

/// Weight of the maximally mixed state mixed into the starting point, so
/// that the triangular factor exists.
const START_REGULARIZATION: f64 = 1e-6;

/// The sixteen real parameters of T: t1..t4 on the diagonal, then
/// (t5 + i t6) at (2,1), (t7 + i t8) at (3,2), (t9 + i t10) at (4,3),
/// (t11 + i t12) at (3,1), (t13 + i t14) at (4,2), (t15 + i t16) at (4,1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxLikParams {
    pub t: [f64; 16],
}

const OFF_DIAGONAL: [(usize, usize); 6] = [(1, 0), (2, 1), (3, 2), (2, 0), (3, 1), (3, 0)];

impl MaxLikParams {
    pub fn t_matrix(&self) -> CMatrix4 {
        let t = &self.t;
        let mut m = CMatrix4::zeros();
        for i in 0..4 {
            m[(i, i)] = Complex64::new(t[i], 0.0);
        }
        for (k, &(r, c)) in OFF_DIAGONAL.iter().enumerate() {
            m[(r, c)] = Complex64::new(t[4 + 2 * k], t[5 + 2 * k]);
        }
        m
    }

    fn gram(&self) -> CMatrix4 {
        let t = self.t_matrix();
        t.adjoint() * t
    }

    pub fn density(&self) -> Result<DensityMatrix4, TomographyError> {
        DensityMatrix4::normalized(self.gram())
    }

    /// Inverse relation: T with T†T = ρ. Reversing the basis turns this
    /// into an ordinary Cholesky factorization. ρ is first made strictly
    /// positive by clipping negative eigenvalues and mixing in a little I/4.
    pub fn from_density(rho: &DensityMatrix4) -> MaxLikParams {
        let clipped = rho.clip_to_psd();
        let eps = Complex64::new(START_REGULARIZATION, 0.0);
        let m = clipped.matrix() * (Complex64::new(1.0, 0.0) - eps) + CMatrix4::identity() * (eps * 0.25);
        let reversed = CMatrix4::from_fn(|r, c| m[(3 - r, 3 - c)]);
        let chol = reversed.cholesky().expect("regularized matrix is positive definite").l();
        // T = J C† J
        let ct = chol.adjoint();
        let t_mat = CMatrix4::from_fn(|r, c| ct[(3 - r, 3 - c)]);
        let mut t = [0.0; 16];
        for i in 0..4 {
            t[i] = t_mat[(i, i)].re;
        }
        for (k, &(r, c)) in OFF_DIAGONAL.iter().enumerate() {
            t[4 + 2 * k] = t_mat[(r, c)].re;
            t[5 + 2 * k] = t_mat[(r, c)].im;
        }
        MaxLikParams { t }
    }

    /// Rescaled so that Tr(T†T) = 1.
    pub fn normalized(&self) -> MaxLikParams {
        let scale = self.gram().trace().re.sqrt();
        MaxLikParams { t: self.t.map(|v| v / scale) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MaxLikOptions {
    pub minimize: MinimizeOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxLikResult {
    pub rho: DensityMatrix4,
    pub params: MaxLikParams,
    pub objective: f64,
    pub initial_objective: f64,
    pub evaluations: usize,
}

/// Σ_ν (𝒩⟨ψ_ν|ρ|ψ_ν⟩ − n_ν)² / (2𝒩σ_ν²) with 𝒩 = n₁+n₂+n₃+n₄ and
/// σ_ν² = max(n_ν, 1).
pub struct Likelihood {
    states: [Vector4<Complex64>; 16],
    counts: [f64; 16],
    total: f64,
    weights: [f64; 16],
}

impl Likelihood {
    pub fn new(n: &[f64; 16]) -> Result<Self, TomographyError> {
        if let Some(k) = n.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(TomographyError::NegativeCoincidence { nu: k + 1, value: n[k] });
        }
        let total: f64 = n[..4].iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(TomographyError::ZeroNormalization(total));
        }
        Ok(Self {
            states: tomographic_states().map(|s| s.vector()),
            counts: *n,
            total,
            weights: n.map(|v| 1.0 / (2.0 * total * v.max(1.0))),
        })
    }

    pub fn of_matrix(&self, rho: &CMatrix4) -> f64 {
        self.states
            .iter()
            .zip(&self.counts)
            .zip(&self.weights)
            .map(|((psi, n), w)| {
                let p = (psi.adjoint() * rho * psi)[(0, 0)].re;
                w * (self.total * p - n).powi(2)
            })
            .sum()
    }

    pub fn of_params(&self, t: &[f64]) -> f64 {
        let params = MaxLikParams { t: t.try_into().expect("16 parameters") };
        let gram = params.gram();
        let trace = gram.trace().re;
        if trace.is_nan() || trace <= 0.0 {
            return f64::INFINITY;
        }
        self.of_matrix(&(gram / Complex64::new(trace, 0.0)))
    }
}

/// Minimizes the likelihood objective over T, starting from the inverse
/// relation applied to `init` or to the linear-inversion estimate.
///
/// On hitting the evaluation cap the best point so far is returned inside
/// [`TomographyError::NotConverged`].
pub fn maxlik_reconstruct(
    n: &[f64; 16],
    init: Option<&DensityMatrix4>,
    opts: &MaxLikOptions,
) -> Result<MaxLikResult, TomographyError> {
    let objective = Likelihood::new(n)?;
    let start = match init {
        Some(rho) => *rho,
        None => linear_inversion(n)?.rho,
    };
    let start = MaxLikParams::from_density(&start);
    let initial_objective = objective.of_params(&start.t);
    let found = minimize(|t| objective.of_params(t), &start.t, &opts.minimize);
    let params = MaxLikParams { t: found.x.as_slice().try_into().expect("16 parameters") }.normalized();
    let rho = params.density()?;
    let result = MaxLikResult { rho, params, objective: found.value, initial_objective, evaluations: found.evaluations };
    if found.converged {
        Ok(result)
    } else {
        Err(TomographyError::NotConverged(Box::new(result)))
    }
}
