//! Φ-functions: construction, index certification and calculus.
//!
//! A [`PhiFunction`] bundles an evaluator on `[0, ∞)` with the growth
//! metadata that the discretization bounds consume: the lower index `p`
//! with its almost-increase constant `a_Φ(p)`, the upper index `q` with its
//! almost-decrease constant `b_Φ(q)`, and the threshold `t_*` above which the
//! (∞)-variants of these conditions hold.
//!
//! All certification is done on log-spaced grids. The grid used for a check
//! is part of its report so that a failing certificate can be replayed.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower end of the default certification grid.
pub const GRID_LO: f64 = 1e-8;
/// Upper end of the default certification grid.
pub const GRID_HI: f64 = 1e8;
/// Size of the default certification grid.
pub const GRID_SIZE: usize = 1000;
/// Bracket cap for [`phi_inverse`].
pub const INVERSE_CAP: f64 = 1e300;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Power {
        p: f64,
    },
    Pab {
        p: f64,
        alpha: f64,
        beta: f64,
    },
    TailExtension {
        inner: Arc<PhiFunction>,
        t0: f64,
        p: f64,
        scale: f64,
    },
    Envelope {
        inner: Arc<PhiFunction>,
        grid: Arc<[f64]>,
        /// `Φ(t)` at the grid points.
        dens: Arc<[f64]>,
    },
    Custom {
        eval: RealFn,
        deriv: Option<RealFn>,
    },
}

/// An Orlicz generator with certified growth metadata.
///
/// Values are immutable after construction and cheap to clone.
#[derive(Clone)]
pub struct PhiFunction {
    kind: Kind,
    /// Lower index `p`: `Φ(t)t^{-p}` is almost increasing.
    pub lower_index: f64,
    /// Upper index `q`: `Φ(t)t^{-q}` is almost decreasing.
    pub upper_index: f64,
    /// Almost-increase constant `a_Φ(p) ≥ 1`.
    pub a_lower: f64,
    /// Almost-decrease constant `b_Φ(q) ≥ 1`.
    pub b_upper: f64,
    /// Threshold for the (∞)-variants; `0` means the conditions hold globally.
    pub t_star: f64,
    pub label: String,
}

impl fmt::Debug for PhiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiFunction")
            .field("label", &self.label)
            .field("lower_index", &self.lower_index)
            .field("upper_index", &self.upper_index)
            .field("a_lower", &self.a_lower)
            .field("b_upper", &self.b_upper)
            .field("t_star", &self.t_star)
            .finish()
    }
}

/// Growth metadata for [`PhiFunction::custom`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Indices {
    pub lower: f64,
    pub upper: f64,
    pub a_lower: f64,
    pub b_upper: f64,
    pub t_star: f64,
}

impl PhiFunction {
    /// `Φ(t) = t^p`.
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidPhi(format!("power exponent must be ≥ 1, got {p}")));
        }
        Ok(PhiFunction {
            kind: Kind::Power { p },
            lower_index: p,
            upper_index: p,
            a_lower: 1.0,
            b_upper: 1.0,
            t_star: 0.0,
            label: format!("t^{p}"),
        })
    }

    /// The family `t^p (ln(e+t))^α / (ln(e+1/t))^β`.
    ///
    /// Its logarithmic derivative lies in `[p, p+α+β]`, so the indices are
    /// exact with `a = b = 1`.
    pub fn pab(p: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(p.is_finite() && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidPhi("non-finite Φ_{p,α,β} parameter".into()));
        }
        if p < 1.0 || alpha < 0.0 || beta < 0.0 {
            return Err(Error::InvalidPhi(format!(
                "Φ_{{p,α,β}} needs p ≥ 1, α, β ≥ 0; got ({p}, {alpha}, {beta})"
            )));
        }
        Ok(PhiFunction {
            kind: Kind::Pab { p, alpha, beta },
            lower_index: p,
            upper_index: p + alpha + beta,
            a_lower: 1.0,
            b_upper: 1.0,
            t_star: 0.0,
            label: format!("pab({p},{alpha},{beta})"),
        })
    }

    /// A user-supplied generator. Without `deriv`, derivatives use central
    /// differences with relative step `1e-6`.
    pub fn custom<F>(label: impl Into<String>, eval: F, deriv: Option<RealFn>, indices: Indices) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        PhiFunction {
            kind: Kind::Custom {
                eval: Arc::new(eval),
                deriv,
            },
            lower_index: indices.lower,
            upper_index: indices.upper,
            a_lower: indices.a_lower,
            b_upper: indices.b_upper,
            t_star: indices.t_star,
            label: label.into(),
        }
    }

    pub fn indices(&self) -> Indices {
        Indices {
            lower: self.lower_index,
            upper: self.upper_index,
            a_lower: self.a_lower,
            b_upper: self.b_upper,
            t_star: self.t_star,
        }
    }

    /// Evaluates `Φ(t)`; negative arguments are treated as `|t|`.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        if t == 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Power { p } => t.powf(*p),
            Kind::Pab { p, alpha, beta } => pab_eval(t, *p, *alpha, *beta),
            Kind::TailExtension { inner, t0, p, scale } => {
                if t <= *t0 {
                    scale * t.powf(*p)
                } else {
                    inner.eval(t)
                }
            }
            Kind::Envelope { inner, grid, dens } => envelope_argmax(inner, t, grid, dens).0,
            Kind::Custom { eval, .. } => eval(t),
        }
    }

    /// Evaluates `Φ'(t)` for `t > 0`.
    pub fn deriv(&self, t: f64) -> f64 {
        let t = t.abs();
        match &self.kind {
            Kind::Power { p } => {
                if t == 0.0 {
                    if *p > 1.0 {
                        0.0
                    } else {
                        1.0
                    }
                } else {
                    p * t.powf(p - 1.0)
                }
            }
            Kind::Pab { p, alpha, beta } => {
                if t == 0.0 {
                    return if *p > 1.0 { 0.0 } else { central_difference(self, f64::MIN_POSITIVE.sqrt()) };
                }
                pab_eval(t, *p, *alpha, *beta) / t * pab_log_derivative(t, *p, *alpha, *beta)
            }
            Kind::TailExtension { inner, t0, p, scale } => {
                if t <= *t0 {
                    scale * p * t.powf(p - 1.0)
                } else {
                    inner.deriv(t)
                }
            }
            Kind::Custom { deriv: Some(d), .. } => d(t),
            // derivative of the active ratio at the maximizing grid point
            Kind::Envelope { inner, grid, dens } if t > 0.0 => {
                let (_, k) = envelope_argmax(inner, t, grid, dens);
                match k {
                    Some(k) => grid[k] * inner.deriv(grid[k] * t) / dens[k],
                    None => 0.0,
                }
            }
            _ => central_difference(self, t),
        }
    }

    /// `φ(t) = tΦ'(t)/Φ(t)`, the logarithmic derivative.
    pub fn log_derivative(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Power { p } => *p,
            Kind::Pab { p, alpha, beta } => pab_log_derivative(t, *p, *alpha, *beta),
            _ => t * self.deriv(t) / self.eval(t),
        }
    }

    /// The serializable description, when the function came from a spec.
    pub fn spec(&self) -> Option<PhiSpec> {
        match &self.kind {
            Kind::Power { p } => Some(PhiSpec::Power { p: *p }),
            Kind::Pab { p, alpha, beta } => Some(PhiSpec::Pab {
                p: *p,
                alpha: *alpha,
                beta: *beta,
            }),
            Kind::TailExtension { inner, t0, p, .. } => Some(PhiSpec::TailExt {
                inner: Box::new(inner.spec()?),
                t0: *t0,
                p: Some(*p),
            }),
            Kind::Envelope { inner, grid, .. } => Some(PhiSpec::Envelope {
                inner: Box::new(inner.spec()?),
                grid_size: Some(grid.len()),
            }),
            Kind::Custom { .. } => None,
        }
    }

    /// True for `t^2`, where least-squares shortcuts apply.
    pub fn is_square(&self) -> bool {
        match &self.kind {
            Kind::Power { p } => *p == 2.0,
            Kind::Pab { p, alpha, beta } => *p == 2.0 && *alpha == 0.0 && *beta == 0.0,
            _ => false,
        }
    }
}

fn pab_eval(t: f64, p: f64, alpha: f64, beta: f64) -> f64 {
    let mut v = t.powf(p);
    if alpha != 0.0 {
        v *= (std::f64::consts::E + t).ln().powf(alpha);
    }
    if beta != 0.0 {
        v /= (std::f64::consts::E + t.recip()).ln().powf(beta);
    }
    v
}

fn pab_log_derivative(t: f64, p: f64, alpha: f64, beta: f64) -> f64 {
    let e = std::f64::consts::E;
    let mut phi = p;
    if alpha != 0.0 {
        phi += alpha * t / (e + t) / (e + t).ln();
    }
    if beta != 0.0 {
        let inv = t.recip();
        phi += beta * inv / (e + inv) / (e + inv).ln();
    }
    phi
}

fn central_difference(phi: &PhiFunction, t: f64) -> f64 {
    let h = t * 1e-6;
    (phi.eval(t + h) - phi.eval(t - h)) / (2.0 * h)
}

fn envelope_eval(inner: &PhiFunction, s: f64, grid: &[f64]) -> f64 {
    let dens: Vec<f64> = grid.iter().map(|&t| inner.eval(t)).collect();
    envelope_argmax(inner, s, grid, &dens).0
}

/// Largest `Φ(ts)/Φ(t)` over the grid and the index attaining it.
fn envelope_argmax(inner: &PhiFunction, s: f64, grid: &[f64], dens: &[f64]) -> (f64, Option<usize>) {
    let mut best = (0.0, None);
    for (k, (&t, &den)) in grid.iter().zip(dens).enumerate() {
        if den > 0.0 {
            let r = inner.eval(t * s) / den;
            if r > best.0 {
                best = (r, Some(k));
            }
        }
    }
    best
}

// =============================================================================
// Grids
// =============================================================================

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo, "log grid needs 0 < lo ≤ hi");
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// The default certification grid: 10³ points on `[1e-8, 1e8]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(GRID_LO, GRID_HI, GRID_SIZE)
}

// =============================================================================
// Operations
// =============================================================================

/// Grid estimate of the lower and upper indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexEstimate {
    pub p_hat: f64,
    pub q_hat: f64,
}

/// Infimum and supremum of `tΦ'(t)/Φ(t)` over `grid`.
pub fn estimate_indices(phi: &PhiFunction, grid: &[f64]) -> Result<IndexEstimate> {
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("index grid needs at least 2 points".into()));
    }
    let mut p_hat = f64::INFINITY;
    let mut q_hat = f64::NEG_INFINITY;
    for &t in grid {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("grid point {t} is not positive")));
        }
        let v = phi.log_derivative(t);
        if !v.is_finite() {
            return Err(Error::InvalidPhi(format!(
                "{}: tΦ'/Φ is not finite at t = {t:e}",
                phi.label
            )));
        }
        p_hat = p_hat.min(v);
        q_hat = q_hat.max(v);
    }
    Ok(IndexEstimate { p_hat, q_hat })
}

/// `R_Φ(p) = (1 + a_Φ(p)/Φ(1))^{1/p}`.
pub fn r_constant(phi: &PhiFunction, p: f64) -> Result<f64> {
    let at_one = phi.eval(1.0);
    if !(at_one > 0.0) {
        return Err(Error::DegeneratePhi(format!("{}: Φ(1) = {at_one}", phi.label)));
    }
    Ok((1.0 + phi.a_lower / at_one).powf(p.recip()))
}

/// Solves `Φ(t) = y` by bracketing bisection to relative width `tol`.
pub fn phi_inverse(phi: &PhiFunction, y: f64, tol: f64) -> Result<f64> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::InvalidArgument(format!("cannot invert Φ at y = {y}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("inverse tolerance must be positive".into()));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if phi.eval(hi) < y {
        lo = hi;
        while phi.eval(hi) < y {
            lo = hi;
            hi *= 2.0;
            if hi > INVERSE_CAP {
                return Err(Error::UnboundedInverse(y, INVERSE_CAP));
            }
        }
    } else {
        // shrink towards zero while Φ(lo) still exceeds y
        let mut probe = 0.5;
        while probe > 1e-300 && phi.eval(probe) >= y {
            hi = probe;
            probe *= 0.5;
        }
        if probe > 1e-300 {
            lo = probe;
        }
    }
    for _ in 0..2000 {
        if hi - lo <= tol * hi {
            break;
        }
        let mid = if lo > 0.0 && hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if phi.eval(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `max_t Φ(ts)/Φ(t)` over `grid`: a lower bound on `Ψ_Φ(s) = sup_t Φ(ts)/Φ(t)`.
pub fn psi_envelope(phi: &PhiFunction, s: f64, grid: &[f64]) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    envelope_eval(phi, s.abs(), grid)
}

/// The envelope `Ψ_Φ` as a Φ-function of its own.
///
/// It satisfies `Φ(ts)/Φ(t) ≤ Ψ_Φ(s)` with `K = 1` (on the grid) and inherits
/// the indices and constants of `Φ`.
pub fn envelope_function(phi: &PhiFunction, grid: &[f64]) -> PhiFunction {
    PhiFunction {
        kind: Kind::Envelope {
            inner: Arc::new(phi.clone()),
            grid: grid.to_vec().into(),
            dens: grid.iter().map(|&t| phi.eval(t)).collect(),
        },
        lower_index: phi.lower_index,
        upper_index: phi.upper_index,
        a_lower: phi.a_lower,
        b_upper: phi.b_upper,
        t_star: phi.t_star,
        label: format!("envelope({})", phi.label),
    }
}

/// `Φ₁(t) = Φ(t₀)t₀^{-p} t^p` on `(0, t₀]` and `Φ(t)` above `t₀`.
///
/// For `t₀ ≥ 2t_*` the result is in `(aInc)_p ∩ (aDec)_q` globally with the
/// constants of `Φ`.
pub fn tail_extension(phi: &PhiFunction, t0: f64, p: f64) -> Result<PhiFunction> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::InvalidArgument(format!("tail extension needs t0 > 0, got {t0}")));
    }
    let scale = phi.eval(t0) / t0.powf(p);
    Ok(PhiFunction {
        kind: Kind::TailExtension {
            inner: Arc::new(phi.clone()),
            t0,
            p,
            scale,
        },
        lower_index: p,
        upper_index: phi.upper_index.max(p),
        a_lower: phi.a_lower,
        b_upper: phi.b_upper,
        t_star: 0.0,
        label: format!("tail_ext({}, t0={t0})", phi.label),
    })
}

/// `M_{Φ,Ψ}(m) = max{1, max Ψ(t)/Φ(t) : t ∈ [Φ⁻¹(1), Φ⁻¹(m)]}` on a log grid.
pub fn m_phi_psi(phi: &PhiFunction, psi: &PhiFunction, m: f64, grid_size: usize) -> Result<f64> {
    if !(m >= 1.0) {
        return Err(Error::InvalidArgument(format!("M_{{Φ,Ψ}} needs m ≥ 1, got {m}")));
    }
    let lo = phi_inverse(phi, 1.0, 1e-13)?;
    let hi = phi_inverse(phi, m, 1e-13)?.max(lo);
    let n = if hi > lo { grid_size.max(2) } else { 1 };
    let best = log_grid(lo, hi, n)
        .into_iter()
        .map(|t| psi.eval(t) / phi.eval(t))
        .fold(1.0, f64::max);
    Ok(best)
}

// =============================================================================
// Certificates
// =============================================================================

/// Outcome of checking the two defining inequalities of a [`PhiFunction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_size: usize,
    /// Smallest `a` for which `Φ(t)t^{-p}` is almost increasing on the grid.
    pub a_needed: f64,
    /// Smallest `b` for which `Φ(t)t^{-q}` is almost decreasing on the grid.
    pub b_needed: f64,
    pub zero_at_origin: bool,
    pub nondecreasing: bool,
    pub grows: bool,
    pub passed: bool,
}

/// Checks `Φ(0) = 0`, monotonicity, growth and the `(aInc)_p`/`(aDec)_q`
/// inequalities for every pair of grid points above `t_*`.
pub fn check_classification(phi: &PhiFunction, grid: &[f64]) -> ClassificationReport {
    let (p, q) = (phi.lower_index, phi.upper_index);
    let mut run_max_inc = f64::NEG_INFINITY;
    let mut run_min_dec = f64::INFINITY;
    let mut a_log = 0.0_f64;
    let mut b_log = 0.0_f64;
    let mut nondecreasing = true;
    let mut prev = 0.0;
    for &t in grid {
        let v = phi.eval(t);
        if v < prev * (1.0 - 1e-14) {
            nondecreasing = false;
        }
        prev = v;
        if t <= phi.t_star || v <= 0.0 {
            continue;
        }
        let lv = v.ln();
        let inc = lv - p * t.ln();
        let dec = lv - q * t.ln();
        run_max_inc = run_max_inc.max(inc);
        run_min_dec = run_min_dec.min(dec);
        a_log = a_log.max(run_max_inc - inc);
        b_log = b_log.max(dec - run_min_dec);
    }
    let a_needed = a_log.exp();
    let b_needed = b_log.exp();
    let zero_at_origin = phi.eval(0.0) == 0.0;
    let grows = match (grid.first(), grid.last()) {
        (Some(&lo), Some(&hi)) => phi.eval(hi) > phi.eval(lo) && phi.eval(hi) > 1.0,
        _ => false,
    };
    let slack = 1.0 + 1e-9;
    let passed = zero_at_origin
        && nondecreasing
        && grows
        && a_needed <= phi.a_lower * slack
        && b_needed <= phi.b_upper * slack;
    ClassificationReport {
        grid_lo: grid.first().copied().unwrap_or(f64::NAN),
        grid_hi: grid.last().copied().unwrap_or(f64::NAN),
        grid_size: grid.len(),
        a_needed,
        b_needed,
        zero_at_origin,
        nondecreasing,
        grows,
        passed,
    }
}

/// Worst value of `Φ(a^{-1/p}λ^{-1/p}t) · λ / Φ(t)` over the grid and `lambdas`;
/// the scaling law holds when this is `≤ 1`.
pub fn scaling_law_ratio(phi: &PhiFunction, grid: &[f64], lambdas: &[f64]) -> f64 {
    let p = phi.lower_index;
    let a = phi.a_lower;
    let mut worst = 0.0_f64;
    for &lam in lambdas {
        let shrink = (a * lam).powf(-p.recip());
        for &t in grid {
            let base = phi.eval(t);
            if base > 0.0 {
                worst = worst.max(phi.eval(shrink * t) * lam / base);
            }
        }
    }
    worst
}

/// Worst value of `|Φ(u)−Φ(v)| / (q|u−v|(Φ(u)/u + Φ(v)/v))` over grid pairs.
pub fn lipschitz_ratio(phi: &PhiFunction, pairs: &[(f64, f64)]) -> f64 {
    let q = phi.upper_index;
    pairs
        .iter()
        .filter(|(u, v)| u != v && *u > 0.0 && *v > 0.0)
        .map(|&(u, v)| {
            let (fu, fv) = (phi.eval(u), phi.eval(v));
            let bound = q * (u - v).abs() * (fu / u + fv / v);
            if bound > 0.0 {
                (fu - fv).abs() / bound
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Checks convexity of `Φ` through monotonicity of its derivative on `grid`.
pub fn is_convex_on_grid(phi: &PhiFunction, grid: &[f64]) -> bool {
    let mut prev = 0.0_f64;
    for &t in grid {
        let d = phi.deriv(t);
        if !d.is_finite() || d < prev * (1.0 - 1e-6) - 1e-300 {
            return false;
        }
        prev = d;
    }
    true
}

/// Greatest convex minorant of sampled `(t, Φ(t))` pairs, as hull vertices.
///
/// This is a numeric stand-in for exact convexification and is never fed into
/// certified constants.
pub fn convex_minorant(samples: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = samples.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Evaluates a piecewise-linear hull returned by [`convex_minorant`].
pub fn eval_minorant(hull: &[(f64, f64)], t: f64) -> f64 {
    match hull.iter().position(|&(x, _)| x >= t) {
        None => hull.last().map_or(f64::NAN, |h| h.1),
        Some(0) => hull[0].1,
        Some(i) => {
            let (a, b) = (hull[i - 1], hull[i]);
            a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
        }
    }
}

// =============================================================================
// Config form
// =============================================================================

/// Serializable Φ description used by configs and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiSpec {
    Pab { p: f64, alpha: f64, beta: f64 },
    Power { p: f64 },
    TailExt {
        inner: Box<PhiSpec>,
        t0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<f64>,
    },
    Envelope {
        inner: Box<PhiSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid_size: Option<usize>,
    },
}

impl PhiSpec {
    pub fn build(&self) -> Result<PhiFunction> {
        match self {
            PhiSpec::Pab { p, alpha, beta } => PhiFunction::pab(*p, *alpha, *beta),
            PhiSpec::Power { p } => PhiFunction::power(*p),
            PhiSpec::TailExt { inner, t0, p } => {
                let inner = inner.build()?;
                let p = p.unwrap_or(inner.lower_index);
                tail_extension(&inner, *t0, p)
            }
            PhiSpec::Envelope { inner, grid_size } => {
                let inner = inner.build()?;
                let grid = log_grid(1e-6, 1e6, grid_size.unwrap_or(400));
                Ok(envelope_function(&inner, &grid))
            }
        }
    }
}
