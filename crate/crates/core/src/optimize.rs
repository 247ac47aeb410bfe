//! Multi-start projected gradient ascent over coefficient spheres.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::norm::{luxemburg_with_gradient, modular_abs, DEFAULT_TOL};
use crate::phi::PhiFunction;

/// Settings for [`sphere_ascent`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AscentOptions {
    /// Random starts in addition to the coordinate directions.
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop a run when the tangential gradient norm falls below this.
    pub grad_tol: f64,
    /// Stop a run when one step improves the value by less than this (relative).
    pub value_tol: f64,
    /// Skip coordinate-direction starts.
    pub random_only: bool,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            restarts: 32,
            max_iter: 200,
            grad_tol: 1e-9,
            value_tol: 1e-12,
            random_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscentResult {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub iterations: usize,
    pub starts: usize,
    /// Set when a run crossed the caller's early-exit level.
    pub stopped_early: bool,
}

fn normalize(x: &mut [f64]) -> bool {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= n);
    true
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central-difference gradient of `f` at `x`.
pub fn numeric_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let dn = f(&y);
            y[i] = x[i];
            (up - dn) / (2.0 * h)
        })
        .collect()
}

/// Maximizes `f` over the unit sphere of `R^dim`.
///
/// `f` returns the value and its Euclidean gradient. Runs start from each
/// coordinate direction (unless disabled) and from `restarts` Gaussian
/// directions; each run is Riemannian gradient ascent with Armijo backtracking.
/// `stop_above` ends the search as soon as a value exceeds it.
pub fn sphere_ascent<F, R>(dim: usize, f: F, opts: &AscentOptions, stop_above: Option<f64>, rng: &mut R) -> AscentResult
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
    R: Rng,
{
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if !opts.random_only {
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            starts.push(e);
        }
    }
    for _ in 0..opts.restarts {
        let mut x: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if normalize(&mut x) {
            starts.push(x);
        }
    }
    let mut best = AscentResult {
        value: f64::NEG_INFINITY,
        argmax: vec![0.0; dim],
        iterations: 0,
        starts: 0,
        stopped_early: false,
    };
    for x0 in starts {
        best.starts += 1;
        let (value, x, iters) = ascend(&f, x0, opts, stop_above);
        best.iterations += iters;
        if value > best.value {
            best.value = value;
            best.argmax = x;
        }
        if stop_above.is_some_and(|s| best.value > s) {
            best.stopped_early = true;
            break;
        }
    }
    best
}

fn ascend<F>(f: &F, mut x: Vec<f64>, opts: &AscentOptions, stop_above: Option<f64>) -> (f64, Vec<f64>, usize)
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let (mut val, mut grad) = f(&x);
    let mut step = 1.0;
    let mut iters = 0;
    while iters < opts.max_iter {
        if stop_above.is_some_and(|s| val > s) {
            break;
        }
        iters += 1;
        let radial = dot(&grad, &x);
        let tangent: Vec<f64> = grad.iter().zip(&x).map(|(g, xi)| g - radial * xi).collect();
        let gnorm2 = dot(&tangent, &tangent);
        if !(gnorm2.sqrt() > opts.grad_tol) {
            break;
        }
        let mut accepted = false;
        while step > 1e-14 {
            let mut y: Vec<f64> = x.iter().zip(&tangent).map(|(xi, t)| xi + step * t).collect();
            if normalize(&mut y) {
                let (v, g) = f(&y);
                if v.is_finite() && v >= val + 1e-4 * step * gnorm2 {
                    let gain = v - val;
                    x = y;
                    val = v;
                    grad = g;
                    accepted = true;
                    step *= 2.0;
                    if gain <= opts.value_tol * val.abs().max(1e-300) {
                        return (val, x, iters);
                    }
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (val, x, iters)
}

/// Subspace data needed to optimize over an Orlicz unit sphere.
///
/// Coefficients are real vectors: `θ ∈ R^N` for a real basis, otherwise
/// `θ ∈ R^{2N}` with `c_k = θ_k + iθ_{N+k}`.
#[derive(Debug, Clone)]
pub struct BallProblem<'a> {
    pub phi: &'a PhiFunction,
    /// Generator for the `ν` side of [`BallProblem::ratio`]; `phi` when absent.
    pub phi_nu: Option<&'a PhiFunction>,
    pub u_mu: DMatrix<Complex64>,
    pub w_mu: Vec<f64>,
    pub u_nu: DMatrix<Complex64>,
    pub w_nu: Vec<f64>,
    pub real: bool,
}

/// Grid values, magnitudes, and the map from magnitude sensitivities to a `θ` gradient.
struct Evaluated {
    values: Vec<Complex64>,
    abs: Vec<f64>,
}

impl<'a> BallProblem<'a> {
    pub fn dim(&self) -> usize {
        if self.real {
            self.u_mu.ncols()
        } else {
            2 * self.u_mu.ncols()
        }
    }

    pub fn coefficients(&self, theta: &[f64]) -> Vec<Complex64> {
        let n = self.u_mu.ncols();
        (0..n)
            .map(|k| {
                if self.real {
                    Complex64::new(theta[k], 0.0)
                } else {
                    Complex64::new(theta[k], theta[n + k])
                }
            })
            .collect()
    }

    fn evaluate(&self, u: &DMatrix<Complex64>, theta: &[f64]) -> Evaluated {
        let values: Vec<Complex64> = (u * DVector::from_vec(self.coefficients(theta))).iter().cloned().collect();
        let abs = values.iter().map(|v| v.norm()).collect();
        Evaluated { values, abs }
    }

    /// `θ`-gradient of a function of the magnitudes with sensitivities `v_j = ∂/∂|f_j|`.
    fn pullback(&self, u: &DMatrix<Complex64>, ev: &Evaluated, v: &[f64]) -> Vec<f64> {
        let w: Vec<Complex64> = ev
            .values
            .iter()
            .zip(&ev.abs)
            .zip(v)
            .map(|((f, &a), &s)| if a > 0.0 { f * (s / a) } else { Complex64::new(0.0, 0.0) })
            .collect();
        let g = u.adjoint() * DVector::from_vec(w);
        let mut out: Vec<f64> = g.iter().map(|z| z.re).collect();
        if !self.real {
            out.extend(g.iter().map(|z| z.im));
        }
        out
    }

    /// `‖f‖_{Φ',ν} / ‖f‖_{Φ,μ}` (with `Φ'` the `ν`-side generator) and gradient; `inverse` flips to `‖f‖_{Φ,μ} / ‖f‖_{Φ,ν}`.
    pub fn ratio(&self, theta: &[f64], inverse: bool) -> (f64, Vec<f64>) {
        let em = self.evaluate(&self.u_mu, theta);
        let en = self.evaluate(&self.u_nu, theta);
        let (lm, gm) = luxemburg_with_gradient(self.phi, &em.abs, &self.w_mu, DEFAULT_TOL);
        let (ln, gn) = luxemburg_with_gradient(self.phi_nu.unwrap_or(self.phi), &en.abs, &self.w_nu, DEFAULT_TOL);
        let (top, bottom, gt, gb, ut, ub, et, eb) = if inverse {
            (lm, ln, gm, gn, &self.u_mu, &self.u_nu, &em, &en)
        } else {
            (ln, lm, gn, gm, &self.u_nu, &self.u_mu, &en, &em)
        };
        if !(bottom > 0.0) {
            return (f64::NEG_INFINITY, vec![0.0; self.dim()]);
        }
        let r = top / bottom;
        let d_top = self.pullback(ut, et, &gt);
        let d_bot = self.pullback(ub, eb, &gb);
        let grad = d_top.iter().zip(&d_bot).map(|(a, b)| (a - r * b) / bottom).collect();
        (r, grad)
    }

    /// Signed modular gap `ρ_ν(sf) − ρ_μ(sf)` with `s = radius / ‖f‖_{Φ,μ}`, and gradient.
    pub fn gap(&self, theta: &[f64], radius: f64) -> (f64, Vec<f64>) {
        let em = self.evaluate(&self.u_mu, theta);
        let en = self.evaluate(&self.u_nu, theta);
        let (lm, gm) = luxemburg_with_gradient(self.phi, &em.abs, &self.w_mu, DEFAULT_TOL);
        if !(lm > 0.0) {
            return (0.0, vec![0.0; self.dim()]);
        }
        let s = radius / lm;
        let value = modular_abs(self.phi, &en.abs, &self.w_nu, s) - modular_abs(self.phi, &em.abs, &self.w_mu, s);
        // direct sensitivities at fixed s
        let dn: Vec<f64> = en.abs.iter().zip(&self.w_nu).map(|(&a, &w)| w * s * self.phi.deriv(s * a)).collect();
        let dm: Vec<f64> = em.abs.iter().zip(&self.w_mu).map(|(&a, &w)| w * s * self.phi.deriv(s * a)).collect();
        // sensitivity to s, chained through ‖f‖_{Φ,μ}
        let ds: f64 = en.abs.iter().zip(&self.w_nu).map(|(&a, &w)| w * a * self.phi.deriv(s * a)).sum::<f64>()
            - em.abs.iter().zip(&self.w_mu).map(|(&a, &w)| w * a * self.phi.deriv(s * a)).sum::<f64>();
        let dlm: Vec<f64> = gm.iter().map(|g| -ds * radius / (lm * lm) * g).collect();
        let gn = self.pullback(&self.u_nu, &en, &dn);
        let gmu = self.pullback(&self.u_mu, &em, &dm);
        let gl = self.pullback(&self.u_mu, &em, &dlm);
        let grad = (0..self.dim()).map(|i| gn[i] - gmu[i] + gl[i]).collect();
        (value, grad)
    }
}

/// Outcome of [`minimize_bfgs`].
#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub value: f64,
    pub argmin: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Quasi-Newton descent with Armijo backtracking for smooth convex objectives.
///
/// Stops when the gradient norm falls below `grad_tol·(1 + |f|)` or a step
/// fails to decrease the value by more than `value_tol·(1 + |f|)`.
pub fn minimize_bfgs<F>(f: F, x0: Vec<f64>, grad_tol: f64, value_tol: f64, max_iter: usize) -> MinimizeResult
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = DVector::from_vec(x0);
    let (mut fx, g) = f(x.as_slice());
    let mut g = DVector::from_vec(g);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut stalls = 0;
    for it in 0..max_iter {
        if g.norm() <= grad_tol * (1.0 + fx.abs()) {
            return MinimizeResult {
                value: fx,
                argmin: x.iter().cloned().collect(),
                iterations: it,
                converged: true,
            };
        }
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            h = DMatrix::identity(n, n);
            d = -g.clone();
            slope = -g.norm_squared();
        }
        let mut step = 1.0;
        let mut next = None;
        while step > 1e-16 {
            let xt = &x + &d * step;
            let (ft, gt) = f(xt.as_slice());
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                next = Some((xt, ft, DVector::from_vec(gt)));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn)) = next else {
            return MinimizeResult {
                value: fx,
                argmin: x.iter().cloned().collect(),
                iterations: it,
                converged: true,
            };
        };
        let decrease = fx - fnew;
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(n, n);
            let left = &eye - &s * y.transpose() * rho;
            let right = &eye - &y * s.transpose() * rho;
            h = &left * &h * &right + &s * s.transpose() * rho;
        }
        x = xn;
        fx = fnew;
        g = gn;
        if decrease <= value_tol * (1.0 + fx.abs()) {
            stalls += 1;
            if stalls >= 3 {
                return MinimizeResult {
                    value: fx,
                    argmin: x.iter().cloned().collect(),
                    iterations: it + 1,
                    converged: true,
                };
            }
        } else {
            stalls = 0;
        }
    }
    MinimizeResult {
        value: fx,
        argmin: x.iter().cloned().collect(),
        iterations: max_iter,
        converged: false,
    }
}
