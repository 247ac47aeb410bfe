//! Change of density, weighted one-sided discretization, and optimal designs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::discretization::{norm_equivalence_bounded, points_measure, sample_indices, simultaneous_discretization, SimultaneousReport};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::norm::luxemburg_abs;
use crate::optimize::AscentOptions;
use crate::phi::{m_phi_psi, PhiFunction, GRID_SIZE};
use crate::seeding::{derive_seed, rng_for};
use crate::subspace::{weighted_gram, Subspace, RANK_TOL};

const LEWIS_MAX_ITER: usize = 2000;
const KW_MAX_ITER: usize = 200_000;
/// Weights above this count as design support.
pub const KW_SUPPORT_WEIGHT: f64 = 1e-6;
/// Relative tolerance on `σ = N` over the design support.
pub const KW_SLACK: f64 = 1e-2;

/// Output of the determinant maximization.
///
/// `basis` holds the values of `v_1..v_n` at the support points, one row per
/// point. For a span closed under conjugation `n = N` and the `v_r` are
/// real-valued; otherwise the space is realified and `n = 2N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LewisSolution {
    /// Indices of the support points within the input measure.
    pub support: Vec<usize>,
    pub points: Vec<Vec<f64>>,
    /// Input measure weights at the support points.
    pub weights: Vec<f64>,
    pub basis: Vec<Vec<Complex64>>,
    pub c: f64,
    /// `F = (Σ_r |v_r|²)^{1/2}` at the support points.
    pub density: Vec<f64>,
    /// Real dimension `n` the conditions are stated in.
    pub dim: usize,
    pub realified: bool,
    pub orthogonality_residual: f64,
    pub normalization_residual: f64,
    pub iterations: usize,
}

impl LewisSolution {
    pub fn basis_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.basis.len(), self.dim, |j, r| self.basis[j][r])
    }

    /// `c·n`, which lies in `[p, q]`.
    pub fn c_dim(&self) -> f64 {
        self.c * self.dim as f64
    }

    /// Recomputes `(max_{r,r'} |M_{rr'} − cδ|, |G − 1|)` from the stored basis.
    pub fn residuals(&self, phi: &PhiFunction) -> (f64, f64) {
        let v = self.basis_matrix();
        let f = row_norms(&v);
        let m = phi_gram(phi, &v, &f, &self.weights);
        let orth = max_offset(&m, self.c);
        let g: f64 = self.weights.iter().zip(&f).map(|(w, &x)| w * phi.eval(x)).sum();
        (orth, (g - 1.0).abs())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn row_norms(v: &DMatrix<Complex64>) -> Vec<f64> {
    v.row_iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect()
}

/// `M_{rr'} = Σ_j w_j φ(F_j)/F_j Re(conj(v_r) v_r')`.
fn phi_gram(phi: &PhiFunction, v: &DMatrix<Complex64>, f: &[f64], w: &[f64]) -> DMatrix<f64> {
    let scale: Vec<f64> = f
        .iter()
        .zip(w)
        .map(|(&x, &wj)| if x > 0.0 { wj * phi.deriv(x) / x } else { 0.0 })
        .collect();
    real_gram(v, &scale)
}

/// `Re(Vᴴ diag(w) V)`.
fn real_gram(v: &DMatrix<Complex64>, w: &[f64]) -> DMatrix<f64> {
    weighted_gram(v, w).map(|z| z.re)
}

fn max_offset(m: &DMatrix<f64>, c: f64) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for s in 0..m.ncols() {
            let target = if r == s { c } else { 0.0 };
            worst = worst.max((m[(r, s)] - target).abs());
        }
    }
    worst
}

fn sym_power(m: &DMatrix<f64>, power: f64) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(power)));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Real frame of the span at the support points, orthonormal for `Re⟨·,·⟩_{L²(w)}`.
///
/// Returns real-valued columns when the span is closed under conjugation,
/// otherwise the realification `[U, iU]`.
fn real_frame(u: &DMatrix<Complex64>, w: &[f64]) -> Result<(DMatrix<Complex64>, bool)> {
    let (rows, n) = u.shape();
    let parts = DMatrix::from_fn(rows, 2 * n, |j, k| {
        if k < n {
            Complex64::new(u[(j, k)].re, 0.0)
        } else {
            Complex64::new(u[(j, k - n)].im, 0.0)
        }
    });
    let eig = real_gram(&parts, w).symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..2 * n).filter(|&i| eig.eigenvalues[i] > RANK_TOL * top).collect();
    if keep.len() == n {
        let mut out = DMatrix::zeros(rows, n);
        for (c, &i) in keep.iter().enumerate() {
            let col = to_complex(&DMatrix::from_column_slice(2 * n, 1, eig.eigenvectors.column(i).as_slice()));
            out.set_column(c, &(&parts * col * Complex64::new(eig.eigenvalues[i].sqrt().recip(), 0.0)).column(0));
        }
        return Ok((out, false));
    }
    let mut w2 = DMatrix::zeros(rows, 2 * n);
    for k in 0..n {
        w2.set_column(k, &u.column(k));
        w2.set_column(n + k, &(u.column(k) * Complex64::i()));
    }
    let g = real_gram(&w2, w);
    if g.clone().symmetric_eigen().eigenvalues.min() <= RANK_TOL * top {
        return Err(Error::InvalidSubspace("realified Gram matrix is singular".into()));
    }
    Ok((&w2 * to_complex(&sym_power(&g, -0.5)), true))
}

/// Scale `t` with `Σ_j w_j Φ(t F_j) = 1`.
fn ray_scale(phi: &PhiFunction, f: &[f64], w: &[f64]) -> f64 {
    let norm = luxemburg_abs(phi, f, w, 1e-14);
    let mut t = 1.0 / norm;
    for _ in 0..3 {
        let g: f64 = f.iter().zip(w).map(|(&x, &wj)| wj * phi.eval(t * x)).sum::<f64>() - 1.0;
        let dg: f64 = f.iter().zip(w).map(|(&x, &wj)| wj * x * phi.deriv(t * x)).sum();
        if !(dg > 0.0) || g == 0.0 {
            break;
        }
        let next = t - g / dg;
        if !(next > 0.0) || (next - t).abs() > 1e-6 * t {
            break;
        }
        t = next;
    }
    t
}

/// Basis `v_1..v_n` maximizing `log|det B|` over real recombinations subject to `Σ_j w_j Φ(F_j) = 1`.
///
/// Iterates `V ← t·V·(M/c)^{-s/2}` where `t` restores the constraint and `s`
/// is halved until `log|det|` increases; stops when the `φ`-weighted Gram `M`
/// is within `tol` of `c·I`, absolutely and relative to `c`.
pub fn lewis_basis(phi: &PhiFunction, x: &Subspace, nu: &DiscreteMeasure, tol: f64) -> Result<LewisSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let u_all = if nu.points() == x.grid().points() {
        x.onb().clone()
    } else {
        x.evaluate(nu.points())?
    };
    let support: Vec<usize> = (0..nu.len())
        .filter(|&j| nu.weights()[j] > 0.0 && u_all.row(j).iter().any(|z| z.norm() > 0.0))
        .collect();
    if support.is_empty() {
        return Err(Error::InvalidSubspace("subspace vanishes on the support of the measure".into()));
    }
    let w: Vec<f64> = support.iter().map(|&j| nu.weights()[j]).collect();
    let u = DMatrix::from_fn(support.len(), x.dim(), |r, k| u_all[(support[r], k)]);
    let (frame, realified) = real_frame(&u, &w)?;
    let dim = frame.ncols();

    let mut v = frame;
    let t = ray_scale(phi, &row_norms(&v), &w);
    v *= Complex64::new(t, 0.0);
    let mut step = 1.0f64;
    let mut iterations = 0;
    loop {
        let f = row_norms(&v);
        let m = phi_gram(phi, &v, &f, &w);
        let c = m.trace() / dim as f64;
        let resid = max_offset(&m, c);
        if resid <= tol && resid <= tol * c {
            let g: f64 = w.iter().zip(&f).map(|(wj, &x)| wj * phi.eval(x)).sum();
            return Ok(LewisSolution {
                points: support.iter().map(|&j| nu.point(j).to_vec()).collect(),
                support,
                weights: w,
                basis: v.row_iter().map(|r| r.iter().cloned().collect()).collect(),
                c,
                density: f,
                dim,
                realified,
                orthogonality_residual: resid,
                normalization_residual: (g - 1.0).abs(),
                iterations,
            });
        }
        if iterations >= LEWIS_MAX_ITER {
            return Err(Error::NoConvergence {
                iterations,
                context: format!("Lewis orthogonality residual {resid:e} above {tol:e}"),
            });
        }
        let eig = (m / c).symmetric_eigen();
        let log_sum: f64 = eig.eigenvalues.iter().map(|l| l.ln()).sum();
        let mut accepted = false;
        while step >= 1e-12 {
            let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(-0.5 * step)));
            let a = to_complex(&(&eig.eigenvectors * d * eig.eigenvectors.transpose()));
            let trial = &v * a;
            let t = ray_scale(phi, &row_norms(&trial), &w);
            let gain = -0.5 * step * log_sum + dim as f64 * t.ln();
            if gain >= -1e-13 * dim as f64 {
                v = trial * Complex64::new(t, 0.0);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                iterations,
                context: format!("Lewis line search failed at residual {resid:e}"),
            });
        }
        step = (2.0 * step).min(1.0);
        iterations += 1;
    }
}

/// The reweighted measure `ν̃ = φ(F)F/(cn)·ν` and the space `F⁻¹X` on it.
#[derive(Debug, Clone)]
pub struct ChangeOfDensity {
    pub nu_tilde: DiscreteMeasure,
    pub x_tilde: Subspace,
    /// `ṽ_r = √n v_r / F` at the support points.
    pub values: DMatrix<Complex64>,
    /// `max |Re⟨ṽ_r, ṽ_r'⟩_{L²(ν̃)} − δ|`.
    pub orthonormality_residual: f64,
    /// `max_j Σ_r |ṽ_r(y_j)|²`, at most `n`.
    pub max_christoffel: f64,
}

pub fn change_of_density(phi: &PhiFunction, sol: &LewisSolution) -> Result<ChangeOfDensity> {
    if sol.density.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::InvalidArgument("density vanishes on the support".into()));
    }
    let n = sol.dim as f64;
    let cn = sol.c_dim();
    let weights: Vec<f64> = sol
        .weights
        .iter()
        .zip(&sol.density)
        .map(|(&w, &f)| w * phi.deriv(f) * f / cn)
        .collect();
    let nu_tilde = DiscreteMeasure::new(sol.points.clone(), weights)?;
    let v = sol.basis_matrix();
    let values = DMatrix::from_fn(v.nrows(), v.ncols(), |j, r| v[(j, r)] * (n.sqrt() / sol.density[j]));
    let gram = real_gram(&values, nu_tilde.weights());
    let orthonormality_residual = max_offset(&gram, 1.0);
    let max_christoffel = row_norms(&values).into_iter().map(|x| x * x).fold(0.0, f64::max);
    let x_tilde = if sol.realified {
        let half = sol.dim / 2;
        Subspace::from_values(values.columns(0, half).into_owned(), nu_tilde.clone())?
    } else {
        Subspace::from_values(values.clone(), nu_tilde.clone())?.with_complex_scalars()
    };
    Ok(ChangeOfDensity {
        nu_tilde,
        x_tilde,
        values,
        orthonormality_residual,
        max_christoffel,
    })
}

/// `M₀ = q·max(1, max_j Φ(F_j)Φ(1/F_j))`.
pub fn m0_constant(phi: &PhiFunction, sol: &LewisSolution, q: f64) -> f64 {
    let top = sol
        .density
        .iter()
        .filter(|&&f| f > 0.0)
        .map(|&f| phi.eval(f) * phi.eval(1.0 / f))
        .fold(1.0, f64::max);
    q * top
}

/// Weights at the selected points together with the value of `(1/m)Σ Φ(1/(2M₀F_j))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneSidedWeights {
    pub weights: Vec<f64>,
    pub check_value: f64,
}

impl OneSidedWeights {
    pub fn check_holds(&self) -> bool {
        self.check_value <= 1.0
    }
}

/// `λ_j ∝ Φ(max(1/(2M₀F_j), 1))`.
pub fn one_sided_weights(phi: &PhiFunction, density: &[f64], m0: f64) -> Result<OneSidedWeights> {
    if density.is_empty() {
        return Err(Error::InvalidArgument("no points selected".into()));
    }
    if density.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::InvalidArgument("density must be positive at the selected points".into()));
    }
    let args: Vec<f64> = density.iter().map(|&f| 1.0 / (2.0 * m0 * f)).collect();
    let raw: Vec<f64> = args.iter().map(|&a| phi.eval(a.max(1.0))).collect();
    let total: f64 = raw.iter().sum();
    let m = density.len() as f64;
    let weights = if raw.iter().all(|&r| r == raw[0]) {
        vec![1.0 / m; raw.len()]
    } else {
        raw.iter().map(|r| r / total).collect()
    };
    Ok(OneSidedWeights {
        weights,
        check_value: args.iter().map(|&a| phi.eval(a)).sum::<f64>() / m,
    })
}

/// Multiset with `⌊λ_j k⌋ + 1` copies of each index `j`.
pub fn equal_weight_replication(weights: &[f64], k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let kf = k as f64;
    Ok(weights
        .iter()
        .enumerate()
        .flat_map(|(j, &l)| {
            // absorb rounding in products such as (1/k)·k
            let copies = (l * kf * (1.0 + 1e-12)).floor() as usize + 1;
            std::iter::repeat_n(j, copies)
        })
        .collect())
}

/// A design with `max_x σ(x) ≤ N(1+tol)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KwDesign {
    pub measure: DiscreteMeasure,
    /// `σ(x) = Σ_k |u_k(x)|²` for the design's orthonormal basis.
    pub sigma: Vec<f64>,
    pub max_sigma: f64,
    pub iterations: usize,
}

impl KwDesign {
    /// Constant `√(max σ)` in `‖f‖_∞ ≤ √(max σ)·‖f‖_{L²(design)}`.
    pub fn kw_constant(&self) -> f64 {
        self.max_sigma.sqrt()
    }
}

fn christoffel_under(u: &DMatrix<Complex64>, w: &[f64]) -> Result<Vec<f64>> {
    let g = weighted_gram(u, w);
    let inv = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidSubspace("design Gram matrix is not positive definite".into()))?
        .inverse();
    Ok(u.row_iter()
        .map(|r| {
            let r = r.transpose();
            (r.adjoint() * &inv * &r)[(0, 0)].re
        })
        .collect())
}

/// D-optimal design on the grid by the multiplicative update `w ← w·σ/N`, started from uniform weights.
///
/// Iterates until `max σ ≤ N(1+tol)` and `|σ − N| ≤ 10⁻²N` wherever the weight exceeds `10⁻⁶`.
pub fn kw_measure(x: &Subspace, grid: &DiscreteMeasure, tol: f64) -> Result<KwDesign> {
    let u = if grid.points() == x.grid().points() {
        x.onb().clone()
    } else {
        x.evaluate(grid.points())?
    };
    let n = x.dim() as f64;
    let mut w = vec![1.0 / grid.len() as f64; grid.len()];
    let mut iterations = 0;
    loop {
        let sigma = christoffel_under(&u, &w)?;
        let max_sigma = sigma.iter().cloned().fold(0.0, f64::max);
        let slack = w
            .iter()
            .zip(&sigma)
            .filter(|(&wj, _)| wj > KW_SUPPORT_WEIGHT)
            .all(|(_, s)| (s - n).abs() <= KW_SLACK * n);
        if max_sigma <= n * (1.0 + tol) && slack {
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            return Ok(KwDesign {
                measure: DiscreteMeasure::new(grid.points().to_vec(), w)?,
                sigma,
                max_sigma,
                iterations,
            });
        }
        if iterations >= KW_MAX_ITER {
            return Err(Error::NoConvergence {
                iterations,
                context: format!("design max σ = {max_sigma:.6} above N(1+tol) = {:.6}", n * (1.0 + tol)),
            });
        }
        for (wj, s) in w.iter_mut().zip(&sigma) {
            *wj *= s / n;
        }
        iterations += 1;
    }
}

/// Settings for the two-part L² one-sided construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct L2OneSidedConfig {
    /// Initial oversampling `m = ⌈c₁N⌉`.
    pub c1: f64,
    /// `c₁` doubles after each failed batch until it exceeds this.
    pub c1_max: f64,
    /// Target for both certificates.
    pub c2: f64,
    /// Draws per value of `c₁`.
    pub retries: usize,
    pub kw_tol: f64,
    pub seed: u64,
}

impl Default for L2OneSidedConfig {
    fn default() -> Self {
        L2OneSidedConfig {
            c1: 2.0,
            c1_max: 16.0,
            c2: 3.0,
            retries: 20,
            kw_tol: 1e-3,
            seed: 0,
        }
    }
}

/// Accepted point sets; indices refer to the grid of `mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2OneSided {
    pub y: Vec<usize>,
    pub z: Vec<usize>,
    pub m: usize,
    /// `sup ‖f‖₂ / ‖f‖_{2,y}`.
    pub c_y: f64,
    /// `sup ‖f‖_∞ / (√N ‖f‖_{2,z})`.
    pub c_z: f64,
    pub c2_hat: f64,
    pub attempts: usize,
    pub seed: u64,
}

impl L2OneSided {
    /// Grid indices of `x = y ∪ z`.
    pub fn points(&self) -> Vec<usize> {
        self.y.iter().chain(&self.z).cloned().collect()
    }
}

/// `(c_y, c_z)` for the ONB `u` on the grid and the chosen indices.
///
/// `c_y = λ_min(G_y)^{-1/2}` and `c_z = (max_x u(x)ᴴ G_z⁻¹ u(x) / N)^{1/2}` with
/// `G_s = (1/m) Σ_j u(s_j) u(s_j)ᴴ`; a singular Gram gives `∞`.
pub fn l2_certificates(u: &DMatrix<Complex64>, y: &[usize], z: &[usize]) -> (f64, f64) {
    let n = u.ncols();
    let gram_of = |idx: &[usize]| {
        let rows = DMatrix::from_fn(idx.len(), n, |r, k| u[(idx[r], k)]);
        weighted_gram(&rows, &vec![1.0 / idx.len() as f64; idx.len()])
    };
    let gy = gram_of(y);
    let low = gy.symmetric_eigen().eigenvalues.min();
    let c_y = if low > 0.0 { low.sqrt().recip() } else { f64::INFINITY };
    let c_z = match christoffel_from_gram(u, &gram_of(z)) {
        Some(s) => (s.into_iter().fold(0.0, f64::max) / n as f64).sqrt(),
        None => f64::INFINITY,
    };
    (c_y, c_z)
}

fn christoffel_from_gram(u: &DMatrix<Complex64>, g: &DMatrix<Complex64>) -> Option<Vec<f64>> {
    let eig = g.clone().symmetric_eigen();
    let top = eig.eigenvalues.max();
    if !(eig.eigenvalues.min() > RANK_TOL * top) {
        return None;
    }
    let inv = g.clone().cholesky()?.inverse();
    Some(
        u.row_iter()
            .map(|r| {
                let r = r.transpose();
                (r.adjoint() * &inv * &r)[(0, 0)].re
            })
            .collect(),
    )
}

/// Draws `y` from `mu` and `z` from the optimal design until both certificates are at most `c₂`.
pub fn l2_one_sided(x: &Subspace, mu: &DiscreteMeasure, cfg: &L2OneSidedConfig) -> Result<L2OneSided> {
    if !(cfg.c1 >= 1.0) || !(cfg.c2 > 0.0) {
        return Err(Error::InvalidArgument("need c1 ≥ 1 and c2 > 0".into()));
    }
    let xs = x.orthonormalize(mu)?;
    let u = xs.onb().clone();
    let n = xs.dim();
    let design = kw_measure(&xs, mu, cfg.kw_tol)?;
    let mut c1 = cfg.c1;
    let mut attempts = 0usize;
    let mut best = f64::INFINITY;
    while c1 <= cfg.c1_max * (1.0 + 1e-12) {
        let m = ((c1 * n as f64) - 1e-9).ceil().max(n as f64) as usize;
        for _ in 0..cfg.retries.max(1) {
            let seed = derive_seed(cfg.seed, attempts as u64);
            attempts += 1;
            let y = sample_indices(mu, m, &mut rng_for(seed, 0))?;
            let z = sample_indices(&design.measure, m, &mut rng_for(seed, 1))?;
            let (c_y, c_z) = l2_certificates(&u, &y, &z);
            let c2_hat = c_y.max(c_z);
            best = best.min(c2_hat);
            if c2_hat <= cfg.c2 {
                return Ok(L2OneSided {
                    y,
                    z,
                    m,
                    c_y,
                    c_z,
                    c2_hat,
                    attempts,
                    seed,
                });
            }
        }
        c1 *= 2.0;
    }
    Err(Error::RetriesExhausted {
        retries: attempts,
        detail: format!("smallest c2 found {best:.4} above target {:.4}", cfg.c2),
    })
}

/// `√2·c₂·a^{2/p}(1 + 1/Φ(1))^{1/p}(Φ(√N)/N)^{1/p}`, the constant in `‖f‖_Φ ≤ K‖f‖_{2,x}` for `x = y ∪ z`.
pub fn l2_one_sided_bound(phi: &PhiFunction, p: f64, n: usize, c2: f64) -> f64 {
    let nf = n as f64;
    let a = phi.a_lower;
    std::f64::consts::SQRT_2 * c2 * a.powf(2.0 / p) * (1.0 + 1.0 / phi.eval(1.0)).powf(1.0 / p) * (phi.eval(nf.sqrt()) / nf).powf(1.0 / p)
}

/// Settings for the weighted one-sided construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Size of the initial two-sided discretization.
    pub m0: usize,
    /// Size of the simultaneous discretization.
    pub m: usize,
    pub seed: u64,
    pub max_retries: usize,
    pub lewis_tol: f64,
    /// Random functions in the battery measuring `Ĉ`.
    pub battery: usize,
    pub ascent: AscentOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            m0: 64,
            m: 32,
            seed: 0,
            max_retries: 20,
            lewis_tol: 1e-8,
            battery: 200,
            ascent: AscentOptions {
                restarts: 4,
                max_iter: 100,
                ..AscentOptions::default()
            },
        }
    }
}

/// Outcome of the weighted one-sided construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    /// Grid indices of `x_1..x_m` in `mu` (repeats allowed).
    pub indices: Vec<usize>,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub m0_points: usize,
    pub init_attempts: usize,
    pub lewis_c_dim: f64,
    pub m0_constant: f64,
    pub weight_check: f64,
    pub simultaneous: SimultaneousReport,
    /// `M_{Φ,Ψ}(m)`.
    pub m_phi_psi: f64,
    /// `max ‖f‖_{Φ,μ} / (M^{1/p} ‖f‖_{Ψ,x,λ})` over the battery.
    pub c_hat: f64,
}

impl PipelineResult {
    pub fn measure(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(self.points.clone(), self.weights.clone())
    }
}

fn random_coefficients<R: Rng>(n: usize, real: bool, rng: &mut R) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if real { 0.0 } else { rng.sample(StandardNormal) };
            Complex64::new(re, im)
        })
        .collect()
}

/// Runs two-sided discretization, Lewis change of density, simultaneous discretization and weighting.
pub fn one_sided_pipeline(
    phi: &PhiFunction,
    psi: &PhiFunction,
    x: &Subspace,
    mu: &DiscreteMeasure,
    cfg: &PipelineConfig,
) -> Result<PipelineResult> {
    let p = phi.lower_index;
    let q = phi.upper_index;

    // y with ½‖f‖_{Φ,μ} ≤ ‖f‖_{Φ,ν₀} ≤ (3/2)‖f‖_{Φ,μ}
    let mut init = None;
    for attempt in 0..cfg.max_retries.max(1) {
        let s = derive_seed(cfg.seed, attempt as u64);
        let idx = sample_indices(mu, cfg.m0, &mut rng_for(s, 0)).map_err(|e| e.in_stage("init-discretization"))?;
        let nu0 = points_measure(mu, &idx)?;
        let c = norm_equivalence_bounded(phi, x, mu, &nu0, &cfg.ascent, Some((0.5, 1.5)), &mut rng_for(s, 1))
            .map_err(|e| e.in_stage("init-discretization"))?;
        if c.c_low >= 0.5 && c.c_high <= 1.5 {
            init = Some((idx, nu0, attempt + 1));
            break;
        }
    }
    let (idx0, nu0, init_attempts) = init.ok_or_else(|| {
        Error::RetriesExhausted {
            retries: cfg.max_retries,
            detail: format!("no {}-point draw met the [1/2, 3/2] window", cfg.m0),
        }
        .in_stage("init-discretization")
    })?;

    let sol = lewis_basis(phi, x, &nu0, cfg.lewis_tol).map_err(|e| e.in_stage("lewis"))?;
    let cod = change_of_density(phi, &sol).map_err(|e| e.in_stage("change-of-density"))?;
    let (sel, simultaneous) = simultaneous_discretization(
        phi,
        psi,
        &cod.x_tilde,
        &cod.nu_tilde,
        cfg.m,
        derive_seed(cfg.seed, 1 << 32),
        cfg.max_retries,
        &cfg.ascent,
    )
    .map_err(|e| e.in_stage("simultaneous-discretization"))?;

    let m0c = m0_constant(phi, &sol, q);
    let density: Vec<f64> = sel.iter().map(|&j| sol.density[j]).collect();
    let lw = one_sided_weights(phi, &density, m0c).map_err(|e| e.in_stage("weights"))?;
    let indices: Vec<usize> = sel.iter().map(|&j| idx0[sol.support[j]]).collect();
    let points: Vec<Vec<f64>> = indices.iter().map(|&j| mu.point(j).to_vec()).collect();

    let mpp = m_phi_psi(phi, psi, cfg.m as f64, GRID_SIZE).map_err(|e| e.in_stage("constant"))?;
    let u_mu = if mu.points() == x.grid().points() {
        x.onb().clone()
    } else {
        x.evaluate(mu.points())?
    };
    let u_x = x.evaluate(&points)?;
    let mut rng = rng_for(cfg.seed, 2);
    let real = x.is_real();
    let mut battery: Vec<Vec<Complex64>> = (0..x.dim())
        .map(|k| (0..x.dim()).map(|i| Complex64::new(if i == k { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect();
    battery.extend((0..cfg.battery).map(|_| random_coefficients(x.dim(), real, &mut rng)));
    let scale = mpp.powf(1.0 / p);
    let mut c_hat = 0.0f64;
    for c in &battery {
        let cv = DVector::from_column_slice(c);
        let on_mu: Vec<f64> = (&u_mu * &cv).iter().map(|z| z.norm()).collect();
        let on_x: Vec<f64> = (&u_x * &cv).iter().map(|z| z.norm()).collect();
        let top = luxemburg_abs(phi, &on_mu, mu.weights(), 1e-12);
        let bottom = luxemburg_abs(psi, &on_x, &lw.weights, 1e-12);
        let r = if bottom > 0.0 { top / (scale * bottom) } else { f64::INFINITY };
        c_hat = c_hat.max(r);
    }

    Ok(PipelineResult {
        indices,
        points,
        weights: lw.weights,
        m0_points: cfg.m0,
        init_attempts,
        lewis_c_dim: sol.c_dim(),
        m0_constant: m0c,
        weight_check: lw.check_value,
        simultaneous,
        m_phi_psi: mpp,
        c_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::{make_monomial_space, make_trig_space, symmetric_range};
    use approx::assert_relative_eq;

    fn trig(n: i64, grid: usize) -> (Subspace, DiscreteMeasure) {
        let mu = DiscreteMeasure::torus_grid(grid, 1).unwrap();
        (make_trig_space(&symmetric_range(n), &mu).unwrap(), mu)
    }

    #[test]
    fn square_lewis_matches_closed_form() {
        let (x, mu) = trig(2, 32);
        let phi = PhiFunction::power(2.0).unwrap();
        let sol = lewis_basis(&phi, &x, &mu, 1e-10).unwrap();
        assert!(!sol.realified);
        assert_relative_eq!(sol.c_dim(), 2.0, epsilon = 1e-10);
        assert_relative_eq!(sol.c, 2.0 / 5.0, epsilon = 1e-10);
        // Σ|u_k|² = N on the uniform grid, so F ≡ 1
        for f in &sol.density {
            assert_relative_eq!(*f, 1.0, epsilon = 1e-8);
        }
        let (o, g) = sol.residuals(&phi);
        assert!(o <= 1e-10 && g <= 1e-10);
    }

    #[test]
    fn pab_lewis_invariants() {
        let (x, _) = trig(1, 64);
        let grid = DiscreteMeasure::torus_grid(64, 1).unwrap();
        let mut rng = rng_for(3, 0);
        let idx = sample_indices(&grid, 16, &mut rng).unwrap();
        let nu = points_measure(&grid, &idx).unwrap();
        let phi = PhiFunction::pab(2.0, 1.0, 0.0).unwrap();
        let sol = lewis_basis(&phi, &x, &nu, 1e-6).unwrap();
        let (o, g) = sol.residuals(&phi);
        assert!(o <= 1e-6, "orthogonality {o}");
        assert!(g <= 1e-6, "normalization {g}");
        assert!(sol.c_dim() >= 2.0 - 1e-6 && sol.c_dim() <= 3.0 + 1e-6);
    }

    #[test]
    fn realifies_one_sided_frequencies() {
        let mu = DiscreteMeasure::torus_grid(32, 1).unwrap();
        let x = make_trig_space(&[vec![0], vec![1], vec![3]], &mu).unwrap();
        let phi = PhiFunction::power(2.0).unwrap();
        let sol = lewis_basis(&phi, &x, &mu, 1e-9).unwrap();
        assert!(sol.realified);
        assert_eq!(sol.dim, 6);
        assert_relative_eq!(sol.c_dim(), 2.0, epsilon = 1e-9);
        let cod = change_of_density(&phi, &sol).unwrap();
        assert!(cod.orthonormality_residual <= 1e-8);
        assert!(cod.max_christoffel <= 6.0 * (1.0 + 1e-8));
        assert_eq!(cod.x_tilde.dim(), 3);
    }

    #[test]
    fn change_of_density_on_monomials() {
        let grid = DiscreteMeasure::interval_grid(40, -1.0, 1.0).unwrap();
        let x = make_monomial_space(3, &grid).unwrap();
        let phi = PhiFunction::pab(2.0, 1.0, 1.0).unwrap();
        let sol = lewis_basis(&phi, &x, &grid, 1e-9).unwrap();
        let cod = change_of_density(&phi, &sol).unwrap();
        let total: f64 = cod.nu_tilde.weights().iter().sum();
        assert!((total - 1.0).abs() <= 1e-10);
        assert!(cod.orthonormality_residual <= 1e-6);
        assert!(cod.max_christoffel <= 4.0 * (1.0 + 1e-8));
    }

    #[test]
    fn lewis_json_round_trip() {
        let (x, mu) = trig(1, 16);
        let phi = PhiFunction::pab(2.0, 1.0, 0.0).unwrap();
        let sol = lewis_basis(&phi, &x, &mu, 1e-8).unwrap();
        let back = LewisSolution::from_json(&sol.to_json().unwrap()).unwrap();
        assert_eq!(sol, back);
    }

    #[test]
    fn m0_for_square_is_two() {
        let (x, mu) = trig(1, 16);
        let phi = PhiFunction::power(2.0).unwrap();
        let sol = lewis_basis(&phi, &x, &mu, 1e-10).unwrap();
        assert_relative_eq!(m0_constant(&phi, &sol, 2.0), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn weights_clamp_and_two_point_ratio() {
        let phi = PhiFunction::pab(2.0, 1.0, 1.0).unwrap();
        let m0 = 3.0;
        let w = one_sided_weights(&phi, &[1.0, 2.0, 0.5], m0).unwrap();
        for l in &w.weights {
            assert_eq!(*l, 1.0 / 3.0);
        }
        let w = one_sided_weights(&phi, &[1.0 / (4.0 * m0), 1.0], m0).unwrap();
        let a = phi.eval(2.0);
        let b = phi.eval(1.0);
        assert_relative_eq!(w.weights[0], a / (a + b), epsilon = 1e-14);
        assert_relative_eq!(w.weights[1], b / (a + b), epsilon = 1e-14);
        assert_relative_eq!(w.check_value, 0.5 * (phi.eval(2.0) + phi.eval(1.0 / 6.0)), epsilon = 1e-14);
    }

    #[test]
    fn replication_counts() {
        let k = 7;
        let rep = equal_weight_replication(&vec![1.0 / 7.0; 7], k).unwrap();
        assert_eq!(rep.len(), 14);
        let rep = equal_weight_replication(&[0.5, 0.3, 0.2], 1).unwrap();
        assert_eq!(rep, vec![0, 1, 2]);
        let rep = equal_weight_replication(&[0.5, 0.3, 0.2], 10).unwrap();
        assert_eq!(rep.len(), 13);
    }

    #[test]
    fn kw_trig_uniform_needs_no_iterations() {
        let (x, mu) = trig(3, 64);
        let d = kw_measure(&x, &mu, 1e-3).unwrap();
        assert_eq!(d.iterations, 0);
        assert_relative_eq!(d.max_sigma, 7.0, epsilon = 1e-10);
    }

    #[test]
    fn kw_monomials_converge() {
        let grid = DiscreteMeasure::interval_grid(64, -1.0, 1.0).unwrap();
        let x = make_monomial_space(3, &grid).unwrap();
        let d = kw_measure(&x, &grid, 1e-3).unwrap();
        assert!(d.max_sigma <= 4.0 * (1.0 + 1e-3));
        for (w, s) in d.measure.weights().iter().zip(&d.sigma) {
            if *w > 1e-6 {
                assert!((s - 4.0).abs() <= 0.04, "weight {w} has σ = {s}");
            }
        }
    }

    #[test]
    fn l2_full_grid_is_exact() {
        let (x, mu) = trig(2, 16);
        let all: Vec<usize> = (0..16).collect();
        let (cy, cz) = l2_certificates(x.onb(), &all, &all);
        assert_relative_eq!(cy, 1.0, epsilon = 1e-12);
        assert_relative_eq!(cz, 1.0, epsilon = 1e-12);
        let _ = mu;
    }

    #[test]
    fn l2_one_sided_meets_target() {
        let (x, mu) = trig(2, 64);
        let r = l2_one_sided(&x, &mu, &L2OneSidedConfig::default()).unwrap();
        assert!(r.c2_hat <= 3.0);
        let (cy, cz) = l2_certificates(x.onb(), &r.y, &r.z);
        assert_eq!((cy, cz), (r.c_y, r.c_z));
    }

    #[test]
    fn pipeline_square_trig() {
        let (x, mu) = trig(1, 64);
        let phi = PhiFunction::power(2.0).unwrap();
        let cfg = PipelineConfig {
            m0: 48,
            m: 24,
            battery: 50,
            ..Default::default()
        };
        let r = one_sided_pipeline(&phi, &phi, &x, &mu, &cfg).unwrap();
        let total: f64 = r.weights.iter().sum();
        assert!((total - 1.0).abs() <= 1e-10);
        assert!(r.weight_check <= 1.0);
        assert!(r.c_hat.is_finite() && r.c_hat > 0.0);
        assert_relative_eq!(r.lewis_c_dim, 2.0, epsilon = 1e-8);
    }
}
