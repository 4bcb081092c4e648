//! Derivative-free minimization: adaptive Nelder–Mead with restarts and an
//! optional quasi-Newton polish.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    /// Initial simplex edge, relative to |x_i| (absolute when x_i = 0).
    pub initial_step: f64,
    /// Relative spread of simplex values.
    pub f_tol: f64,
    /// Absolute floor on the spread, for minima at zero.
    pub f_abs_tol: f64,
    /// Simplex diameter.
    pub x_tol: f64,
    pub max_evals: usize,
    pub max_restarts: usize,
    pub polish: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { initial_step: 0.1, f_tol: 1e-10, f_abs_tol: 1e-16, x_tol: 1e-8, max_evals: 100_000, max_restarts: 20, polish: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub restarts: usize,
    pub converged: bool,
}

struct Counted<'a, F> {
    f: &'a F,
    evals: usize,
}

impl<F: Fn(&[f64]) -> f64> Counted<'_, F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// One Nelder–Mead run from `x0`. Returns (best x, best f, converged).
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    fun: &mut Counted<'_, F>,
    x0: &[f64],
    opts: &MinimizeOptions,
) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let nf = n as f64;
    // Dimension-adapted coefficients.
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i] != 0.0 { opts.initial_step * v[i].abs() } else { opts.initial_step };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| fun.call(v)).collect();

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..].iter().map(|v| dist(v, &simplex[0])).fold(0.0, f64::max);
        if spread <= opts.f_tol * values[0].abs() + opts.f_abs_tol && diameter <= opts.x_tol {
            return (simplex[0].clone(), values[0], true);
        }
        if fun.evals >= opts.max_evals {
            return (simplex[0].clone(), values[0], false);
        }

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / nf;
            }
        }
        let worst = simplex[n].clone();
        let dir: Vec<f64> = centroid.iter().zip(&worst).map(|(c, w)| c - w).collect();
        let reflected = axpy(alpha, &dir, &centroid);
        let fr = fun.call(&reflected);

        if fr < values[0] {
            let expanded = axpy(beta, &dir, &centroid);
            let fe = fun.call(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let c = axpy(gamma, &dir, &centroid);
            let f = fun.call(&c);
            (c, f)
        } else {
            let c = axpy(-gamma, &dir, &centroid);
            let f = fun.call(&c);
            (c, f)
        };
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            simplex[i] = simplex[i].iter().zip(&best).map(|(x, b)| b + delta * (x - b)).collect();
            values[i] = fun.call(&simplex[i]);
        }
    }
}

fn gradient<F: Fn(&[f64]) -> f64>(fun: &mut Counted<'_, F>, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let up = fun.call(&probe);
        probe[i] = x[i] - h;
        let down = fun.call(&probe);
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    g
}

/// BFGS with central-difference gradients and Armijo backtracking.
fn bfgs_polish<F: Fn(&[f64]) -> f64>(
    fun: &mut Counted<'_, F>,
    mut x: Vec<f64>,
    mut fx: f64,
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let n = x.len();
    let mut h_inv = vec![vec![0.0; n]; n];
    for (i, row) in h_inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut g = gradient(fun, &x);
    for _ in 0..200 {
        if fun.evals + 4 * n + 60 > max_evals {
            break;
        }
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < 1e-12 {
            break;
        }
        let mut p: Vec<f64> = h_inv.iter().map(|row| -row.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()).collect();
        let mut slope: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            p = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
            for (i, row) in h_inv.iter_mut().enumerate() {
                row.iter_mut().for_each(|v| *v = 0.0);
                row[i] = 1.0;
            }
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let trial = axpy(step, &p, &x);
            let ft = fun.call(&trial);
            if ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else { break };
        let g_new = gradient(fun, &x_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let done = (fx - f_new).abs() <= 1e-15 * fx.abs().max(1e-300);
        x = x_new;
        fx = f_new;
        g = g_new;
        if done {
            break;
        }
        if sy > 1e-300 {
            let hy: Vec<f64> = h_inv.iter().map(|row| row.iter().zip(&y).map(|(a, b)| a * b).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    h_inv[i][j] += (1.0 + yhy * rho) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
    }
    (x, fx)
}

/// Minimizes `f` from `x0`. Nelder–Mead is restarted from its best point
/// until a restart no longer improves the value; the optional BFGS polish
/// is only kept if it lowers it further.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &MinimizeOptions) -> Minimum {
    let mut fun = Counted { f: &f, evals: 0 };
    if x0.is_empty() {
        let value = fun.call(x0);
        return Minimum { x: vec![], value, evaluations: 1, restarts: 0, converged: true };
    }
    let (mut x, mut value, mut converged) = nelder_mead(&mut fun, x0, opts);
    let mut restarts = 0;
    while converged && restarts < opts.max_restarts && fun.evals < opts.max_evals {
        let (xr, vr, cr) = nelder_mead(&mut fun, &x, opts);
        restarts += 1;
        let improved = value - vr > opts.f_tol * value.abs().max(1e-300);
        if vr <= value {
            x = xr;
            value = vr;
        }
        converged = cr;
        if !improved {
            break;
        }
    }
    if opts.polish && fun.evals < opts.max_evals {
        let (xp, vp) = bfgs_polish(&mut fun, x.clone(), value, opts.max_evals);
        if vp < value {
            x = xp;
            value = vp;
        }
    }
    Minimum { x, value, evaluations: fun.evals, restarts, converged }
}
