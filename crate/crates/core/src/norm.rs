//! Modulars, Luxemburg norms and `L^p` norms on finite-support measures.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, SampledFunction};
use crate::phi::PhiFunction;

/// Default relative tolerance for Luxemburg norm evaluation.
pub const DEFAULT_TOL: f64 = 1e-10;

fn check_aligned(f: &SampledFunction, nu: &DiscreteMeasure) -> Result<()> {
    if f.len() != nu.len() {
        return Err(Error::LengthMismatch {
            expected: nu.len(),
            got: f.len(),
        });
    }
    Ok(())
}

/// `ρ_Φ(f) = Σ_j w_j Φ(|f_j|)`.
pub fn modular(phi: &PhiFunction, f: &SampledFunction, nu: &DiscreteMeasure) -> Result<f64> {
    check_aligned(f, nu)?;
    Ok(modular_abs(phi, &f.abs(), nu.weights(), 1.0))
}

/// `Σ_j w_j Φ(scale · a_j)` on precomputed magnitudes.
pub fn modular_abs(phi: &PhiFunction, abs: &[f64], weights: &[f64], scale: f64) -> f64 {
    abs.iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&a, &w)| w * phi.eval(scale * a))
        .sum()
}

/// `‖f‖_Φ = inf{λ > 0 : ρ_Φ(f/λ) ≤ 1}`.
///
/// The result `λ` satisfies `ρ_Φ(f/λ) ≤ 1 < ρ_Φ(f/(λ(1−tol)))`, or is `0`
/// when `f` vanishes on the support.
pub fn luxemburg_norm(phi: &PhiFunction, f: &SampledFunction, nu: &DiscreteMeasure, tol: f64) -> Result<f64> {
    check_aligned(f, nu)?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!("Luxemburg tolerance {tol} not in (0, 1)")));
    }
    Ok(luxemburg_abs(phi, &f.abs(), nu.weights(), tol))
}

/// Luxemburg norm of magnitudes `abs` under `weights`.
///
/// Works on the reciprocal `u = 1/λ`, for which `u ↦ ρ(u·a)` is increasing.
/// A bracket `[lo, hi]` with `ρ(lo·a) ≤ 1 < ρ(hi·a)` is narrowed by safeguarded
/// Newton steps until `hi(1 − tol) ≤ lo`.
pub fn luxemburg_abs(phi: &PhiFunction, abs: &[f64], weights: &[f64], tol: f64) -> f64 {
    let amax = abs
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&a, _)| a)
        .fold(0.0, f64::max);
    if amax == 0.0 {
        return 0.0;
    }
    let rho = |u: f64| modular_abs(phi, abs, weights, u);
    let drho = |u: f64| -> f64 {
        abs.iter()
            .zip(weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&a, &w)| w * a * phi.deriv(u * a))
            .sum()
    };

    let mut u = 1.0 / amax;
    let (mut lo, mut hi);
    if rho(u) <= 1.0 {
        lo = u;
        loop {
            u *= 2.0;
            if rho(u) > 1.0 {
                hi = u;
                break;
            }
            lo = u;
            if u > 1e300 {
                // modular never exceeds one: treat as zero norm
                return 0.0;
            }
        }
    } else {
        hi = u;
        loop {
            u *= 0.5;
            if rho(u) <= 1.0 {
                lo = u;
                break;
            }
            hi = u;
            if u < 1e-300 {
                return f64::INFINITY;
            }
        }
    }

    let mut u = 0.5 * (lo + hi);
    for _ in 0..200 {
        if hi * (1.0 - tol) <= lo {
            break;
        }
        let r = rho(u);
        if r <= 1.0 {
            lo = lo.max(u);
        } else {
            hi = hi.min(u);
        }
        if hi * (1.0 - tol) <= lo {
            break;
        }
        let d = drho(u);
        let mut next = if d > 0.0 && d.is_finite() { u - (r - 1.0) / d } else { f64::NAN };
        // once Newton has located the root, probe just across it to close the bracket
        if (r - 1.0).abs() < tol * 0.1 * d.abs().max(f64::MIN_POSITIVE) * u {
            next = if r <= 1.0 { u * (1.0 + 0.25 * tol) } else { u * (1.0 - 0.25 * tol) };
        }
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        u = next;
    }
    1.0 / lo
}

/// `‖f‖_Φ` together with `∂‖f‖_Φ/∂a_j` where `a_j = |f_j|`.
pub fn luxemburg_with_gradient(phi: &PhiFunction, abs: &[f64], weights: &[f64], tol: f64) -> (f64, Vec<f64>) {
    let lam = luxemburg_abs(phi, abs, weights, tol);
    if lam == 0.0 || !lam.is_finite() {
        return (lam, vec![0.0; abs.len()]);
    }
    let dphi: Vec<f64> = abs.iter().map(|&a| phi.deriv(a / lam)).collect();
    let den: f64 = abs
        .iter()
        .zip(weights)
        .zip(&dphi)
        .map(|((&a, &w), &d)| w * d * a)
        .sum();
    let grad = weights
        .iter()
        .zip(&dphi)
        .map(|(&w, &d)| if den > 0.0 { lam * w * d / den } else { 0.0 })
        .collect();
    (lam, grad)
}

/// `‖f‖_p = (Σ_j w_j |f_j|^p)^{1/p}`.
pub fn lp_norm(f: &SampledFunction, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_aligned(f, nu)?;
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("L^p norm needs p ≥ 1, got {p}")));
    }
    Ok(lp_abs(&f.abs(), nu.weights(), p))
}

pub(crate) fn lp_abs(abs: &[f64], weights: &[f64], p: f64) -> f64 {
    let amax = abs.iter().cloned().fold(0.0, f64::max);
    if amax == 0.0 {
        return 0.0;
    }
    // factor out the maximum to avoid overflow for large p
    let s: f64 = abs.iter().zip(weights).map(|(&a, &w)| w * (a / amax).powf(p)).sum();
    amax * s.powf(p.recip())
}

/// Two-sided norm-equivalence constants implied by a modular gap `eps`:
/// `(a1⁻¹(bq⁻¹ − eps), a1(1 + eps))`.
pub fn norm_equiv_from_modular_gap(a1: f64, bq: f64, eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0) || eps >= bq.recip() {
        return Err(Error::HypothesisFails(format!(
            "modular gap {eps} must lie in (0, 1/b_Φ(q)) = (0, {})",
            bq.recip()
        )));
    }
    Ok(((bq.recip() - eps) / a1, a1 * (1.0 + eps)))
}

/// Largest observed `‖f+g‖_Φ / (‖f‖_Φ + ‖g‖_Φ)` over `trials` random real pairs.
pub fn quasi_triangle_constant<R: Rng>(phi: &PhiFunction, nu: &DiscreteMeasure, trials: usize, rng: &mut R) -> f64 {
    let n = nu.len();
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let f: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| (a + b).abs()).collect();
        let fa: Vec<f64> = f.iter().map(|v| v.abs()).collect();
        let ga: Vec<f64> = g.iter().map(|v| v.abs()).collect();
        let w = nu.weights();
        let num = luxemburg_abs(phi, &sum, w, DEFAULT_TOL);
        let den = luxemburg_abs(phi, &fa, w, DEFAULT_TOL) + luxemburg_abs(phi, &ga, w, DEFAULT_TOL);
        if den > 0.0 {
            worst = worst.max(num / den);
        }
    }
    worst
}
