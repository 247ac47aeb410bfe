//! Random point sets and empirical discretization constants.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::optimize::{sphere_ascent, AscentOptions, AscentResult, BallProblem};
use crate::phi::PhiFunction;
use crate::seeding::{derive_seed, rng_for};
use crate::subspace::Subspace;

/// Radius used for the open unit ball.
pub const BALL_RADIUS: f64 = 1.0 - 1e-9;

/// `m` i.i.d. draws (with replacement) of grid indices from `mu`.
pub fn sample_indices<R: Rng>(mu: &DiscreteMeasure, m: usize, rng: &mut R) -> Result<Vec<usize>> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one sample point".into()));
    }
    let dist = WeightedIndex::new(mu.weights()).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
    Ok((0..m).map(|_| dist.sample(rng)).collect())
}

/// Uniform measure on `m` i.i.d. draws from `mu`; deterministic in `seed`.
pub fn sample_points(mu: &DiscreteMeasure, m: usize, seed: u64) -> Result<DiscreteMeasure> {
    let idx = sample_indices(mu, m, &mut rng_for(seed, 0))?;
    points_measure(mu, &idx)
}

/// Uniform measure on the grid points with the given indices (repeats allowed).
pub fn points_measure(mu: &DiscreteMeasure, idx: &[usize]) -> Result<DiscreteMeasure> {
    DiscreteMeasure::uniform(idx.iter().map(|&j| mu.point(j).to_vec()).collect())
}

/// Outcome of comparing the `L^Φ(μ)` and `L^Φ(ν)` norms on a subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub m: usize,
    pub seed: u64,
    /// Largest modular gap found on the unit ball.
    pub eps_hat: f64,
    /// Smallest `‖f‖_{Φ,ν}` found on the unit sphere of `L^Φ(μ)` (an upper estimate of the minimum).
    pub c_low: f64,
    /// Largest `‖f‖_{Φ,ν}` found (a lower estimate of the maximum).
    pub c_high: f64,
    pub restarts: usize,
    pub iterations: usize,
    /// True only when the values are exact rather than optimizer estimates.
    pub certified: bool,
}

fn ball_problem<'a>(phi: &'a PhiFunction, x: &Subspace, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<BallProblem<'a>> {
    let u_mu = if mu.points() == x.grid().points() {
        x.onb().clone()
    } else {
        x.evaluate(mu.points())?
    };
    let u_nu = x.evaluate(nu.points())?;
    Ok(BallProblem {
        phi,
        phi_nu: None,
        u_mu,
        w_mu: mu.weights().to_vec(),
        u_nu,
        w_nu: nu.weights().to_vec(),
        real: x.is_real(),
    })
}

/// Largest `|ρ_Φ,ν(f) − ρ_Φ,μ(f)|` found over `‖f‖_{Φ,μ} = 1 − 10⁻⁹`.
pub fn distortion<R: Rng>(
    phi: &PhiFunction,
    x: &Subspace,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    opts: &AscentOptions,
    rng: &mut R,
) -> Result<AscentResult> {
    if mu == nu {
        return Ok(exact(0.0, x));
    }
    let prob = ball_problem(phi, x, mu, nu)?;
    let up = sphere_ascent(prob.dim(), |t| prob.gap(t, BALL_RADIUS), opts, None, rng);
    let down = sphere_ascent(
        prob.dim(),
        |t| {
            let (v, g) = prob.gap(t, BALL_RADIUS);
            (-v, g.into_iter().map(|x| -x).collect())
        },
        opts,
        None,
        rng,
    );
    check_finite(&up)?;
    check_finite(&down)?;
    Ok(merge(up, down, |a, b| a.max(b)))
}

fn exact(value: f64, x: &Subspace) -> AscentResult {
    AscentResult {
        value,
        argmax: vec![0.0; x.dim()],
        iterations: 0,
        starts: 0,
        stopped_early: false,
    }
}

fn check_finite(r: &AscentResult) -> Result<()> {
    if r.value.is_finite() {
        Ok(())
    } else {
        Err(Error::NoConvergence {
            iterations: r.iterations,
            context: "ball optimizer diverged".into(),
        })
    }
}

fn merge(a: AscentResult, b: AscentResult, pick: impl Fn(f64, f64) -> f64) -> AscentResult {
    let value = pick(a.value, b.value);
    let argmax = if value == a.value { a.argmax } else { b.argmax };
    AscentResult {
        value,
        argmax,
        iterations: a.iterations + b.iterations,
        starts: a.starts + b.starts,
        stopped_early: a.stopped_early || b.stopped_early,
    }
}

/// Estimated extreme values of `‖f‖_{Φ,ν}` over the unit sphere of `L^Φ(μ)` on `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceConstants {
    pub c_low: f64,
    pub c_high: f64,
    pub restarts: usize,
    pub iterations: usize,
}

/// `(min, max)` of `‖f‖_{Φ,ν} / ‖f‖_{Φ,μ}` on `X` by multi-start ascent.
pub fn norm_equivalence_constants<R: Rng>(
    phi: &PhiFunction,
    x: &Subspace,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    opts: &AscentOptions,
    rng: &mut R,
) -> Result<EquivalenceConstants> {
    norm_equivalence_bounded(phi, x, mu, nu, opts, None, rng)
}

/// As [`norm_equivalence_constants`], stopping early once `c_low < lo` or `c_high > hi`.
pub fn norm_equivalence_bounded<R: Rng>(
    phi: &PhiFunction,
    x: &Subspace,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    opts: &AscentOptions,
    window: Option<(f64, f64)>,
    rng: &mut R,
) -> Result<EquivalenceConstants> {
    if mu == nu {
        return Ok(EquivalenceConstants {
            c_low: 1.0,
            c_high: 1.0,
            restarts: 0,
            iterations: 0,
        });
    }
    let prob = ball_problem(phi, x, mu, nu)?;
    let high = sphere_ascent(prob.dim(), |t| prob.ratio(t, false), opts, window.map(|w| w.1), rng);
    check_finite(&high)?;
    let low = if high.stopped_early {
        None
    } else {
        let inv = sphere_ascent(prob.dim(), |t| prob.ratio(t, true), opts, window.map(|w| 1.0 / w.0), rng);
        check_finite(&inv)?;
        Some(inv)
    };
    Ok(EquivalenceConstants {
        c_low: low.as_ref().map_or(f64::NAN, |r| 1.0 / r.value),
        c_high: high.value,
        restarts: high.starts + low.as_ref().map_or(0, |r| r.starts),
        iterations: high.iterations + low.as_ref().map_or(0, |r| r.iterations),
    })
}

/// Full report for one random draw of `m` points.
pub fn distortion_report(
    phi: &PhiFunction,
    x: &Subspace,
    mu: &DiscreteMeasure,
    m: usize,
    seed: u64,
    opts: &AscentOptions,
) -> Result<DistortionReport> {
    let nu = sample_points(mu, m, seed)?;
    let mut rng = rng_for(seed, 1);
    let d = distortion(phi, x, mu, &nu, opts, &mut rng)?;
    let c = norm_equivalence_constants(phi, x, mu, &nu, opts, &mut rng)?;
    Ok(DistortionReport {
        m,
        seed,
        eps_hat: d.value.max(0.0),
        c_low: c.c_low,
        c_high: c.c_high,
        restarts: d.starts + c.restarts,
        iterations: d.iterations + c.iterations,
        certified: mu == &nu,
    })
}

/// Whether `(c_low, c_high)` lies in `[a⁻¹(1−ε), a(1+ε)]`.
pub fn within(c: &EquivalenceConstants, a: f64, eps: f64) -> bool {
    c.c_low >= (1.0 - eps) / a && c.c_high <= a * (1.0 + eps)
}

/// Fraction of `trials` seeded draws of `m` points whose constants lie in `[a⁻¹(1−ε), a(1+ε)]`, `a = a_Φ(1)`.
pub fn monte_carlo_success(
    phi: &PhiFunction,
    x: &Subspace,
    mu: &DiscreteMeasure,
    m: usize,
    eps: f64,
    trials: usize,
    seed: u64,
    opts: &AscentOptions,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let a = phi.a_lower;
    let lo = (1.0 - eps) / a;
    let hi = a * (1.0 + eps);
    let outcomes: Vec<Result<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive_seed(seed, t as u64);
            let nu = sample_points(mu, m, trial_seed)?;
            let mut rng = rng_for(trial_seed, 1);
            let c = norm_equivalence_bounded(phi, x, mu, &nu, opts, Some((lo, hi)), &mut rng)?;
            Ok(within(&c, a, eps))
        })
        .collect();
    let mut ok = 0usize;
    for o in outcomes {
        if o? {
            ok += 1;
        }
    }
    Ok(ok as f64 / trials as f64)
}

/// Constants of an accepted simultaneous discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimultaneousReport {
    pub phi: EquivalenceConstants,
    pub psi: EquivalenceConstants,
    pub attempts: usize,
    pub accepted: bool,
}

/// Checks both `Φ` and `Ψ` constants against `[½ a⁻¹, (3/2) a]` with `a` the generator's own constant.
pub fn verify_simultaneous<R: Rng>(
    phi: &PhiFunction,
    psi: &PhiFunction,
    x: &Subspace,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    opts: &AscentOptions,
    rng: &mut R,
) -> Result<(bool, EquivalenceConstants, EquivalenceConstants)> {
    let window = |g: &PhiFunction| (0.5 / g.a_lower, 1.5 * g.a_lower);
    let cp = norm_equivalence_bounded(phi, x, mu, nu, opts, Some(window(phi)), rng)?;
    let ok_phi = within(&cp, phi.a_lower, 0.5);
    if !ok_phi {
        return Ok((false, cp, cp));
    }
    let cs = if phi.label == psi.label {
        cp
    } else {
        norm_equivalence_bounded(psi, x, mu, nu, opts, Some(window(psi)), rng)?
    };
    Ok((within(&cs, psi.a_lower, 0.5), cp, cs))
}

/// Draws `m` points from `mu` until both the `Φ` and `Ψ` norms are discretized with constants in `[½ a⁻¹, (3/2) a]`.
pub fn simultaneous_discretization(
    phi: &PhiFunction,
    psi: &PhiFunction,
    x: &Subspace,
    mu: &DiscreteMeasure,
    m: usize,
    seed: u64,
    max_retries: usize,
    opts: &AscentOptions,
) -> Result<(Vec<usize>, SimultaneousReport)> {
    let mut best: Option<(f64, EquivalenceConstants, EquivalenceConstants)> = None;
    for attempt in 0..max_retries.max(1) {
        let s = derive_seed(seed, attempt as u64);
        let idx = sample_indices(mu, m, &mut rng_for(s, 0))?;
        let nu = points_measure(mu, &idx)?;
        let (ok, cp, cs) = verify_simultaneous(phi, psi, x, mu, &nu, opts, &mut rng_for(s, 1))?;
        if ok {
            return Ok((
                idx,
                SimultaneousReport {
                    phi: cp,
                    psi: cs,
                    attempts: attempt + 1,
                    accepted: true,
                },
            ));
        }
        let spread = cp.c_high.max(cs.c_high) / cp.c_low.min(cs.c_low);
        let spread = if spread.is_nan() { f64::INFINITY } else { spread };
        if best.as_ref().is_none_or(|b| spread < b.0) {
            best = Some((spread, cp, cs));
        }
    }
    let detail = best.map_or_else(String::new, |(_, cp, cs)| {
        format!(
            "best Φ constants ({:.4}, {:.4}), Ψ constants ({:.4}, {:.4})",
            cp.c_low, cp.c_high, cs.c_low, cs.c_high
        )
    });
    Err(Error::RetriesExhausted {
        retries: max_retries,
        detail,
    })
}
