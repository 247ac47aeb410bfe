//! Least-Orlicz projection, recovery error bounds, and sampling-number experiments.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{l2_one_sided, one_sided_pipeline, L2OneSidedConfig, PipelineConfig};
use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, SampledFunction};
use crate::norm::{luxemburg_abs, luxemburg_norm, luxemburg_with_gradient};
use crate::optimize::{minimize_bfgs, sphere_ascent, AscentOptions, BallProblem};
use crate::phi::{default_grid, envelope_function, is_convex_on_grid, log_grid, m_phi_psi, PhiFunction, PhiSpec, GRID_SIZE};
use crate::seeding::{derive_seed, rng_for};
use crate::subspace::{best_uniform_approx, weighted_gram, width_upper, Subspace, RANK_TOL};

const PROJECTION_LUX_TOL: f64 = 1e-13;

/// A target on the ambient grid together with the data used to recover it.
#[derive(Debug, Clone)]
pub struct RecoveryInstance {
    pub target: SampledFunction,
    pub x: Subspace,
    /// Grid indices of the sample points (repeats allowed).
    pub samples: Vec<usize>,
    pub weights: Vec<f64>,
    /// Norm the error is measured in.
    pub phi: PhiFunction,
    /// Norm the projection minimizes.
    pub psi: PhiFunction,
}

impl RecoveryInstance {
    pub fn new(
        target: SampledFunction,
        x: Subspace,
        samples: Vec<usize>,
        weights: Vec<f64>,
        phi: PhiFunction,
        psi: PhiFunction,
    ) -> Result<Self> {
        let g = x.grid().len();
        if target.len() != g {
            return Err(Error::LengthMismatch {
                expected: g,
                got: target.len(),
            });
        }
        if samples.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: samples.len(),
                got: weights.len(),
            });
        }
        if let Some(&bad) = samples.iter().find(|&&j| j >= g) {
            return Err(Error::InvalidArgument(format!("sample index {bad} is off the grid")));
        }
        let inst = RecoveryInstance {
            target,
            x,
            samples,
            weights,
            phi,
            psi,
        };
        inst.nu()?;
        Ok(inst)
    }

    /// The sampling measure `ν = Σ_j w_j δ_{x_j}`.
    pub fn nu(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(
            self.samples.iter().map(|&j| self.x.grid().point(j).to_vec()).collect(),
            self.weights.clone(),
        )
    }

    pub fn sampled_values(&self) -> SampledFunction {
        self.target.select(&self.samples)
    }
}

/// Minimum-norm weighted least squares `argmin_c Σ_j w_j |f_j − (Uc)_j|²`.
fn weighted_least_squares(u: &DMatrix<Complex64>, w: &[f64], f: &[Complex64]) -> Result<Vec<Complex64>> {
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let a = DMatrix::from_fn(u.nrows(), u.ncols(), |j, k| u[(j, k)] * sw[j]);
    let b = DVector::from_iterator(f.len(), f.iter().zip(&sw).map(|(v, s)| v * *s));
    let svd = a.svd(true, true);
    let top = svd.singular_values.max();
    let x = svd
        .solve(&b, RANK_TOL * top.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(x.iter().cloned().collect())
}

/// Orthonormal basis of the row space of `diag(√w)U`, or `None` when it has full column rank.
fn row_space(u: &DMatrix<Complex64>, w: &[f64]) -> Option<DMatrix<Complex64>> {
    let eig = weighted_gram(u, w).symmetric_eigen();
    let top = eig.eigenvalues.max();
    let keep: Vec<usize> = (0..u.ncols()).filter(|&i| eig.eigenvalues[i] > RANK_TOL * top).collect();
    if keep.len() == u.ncols() {
        return None;
    }
    Some(DMatrix::from_fn(u.ncols(), keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]))
}

/// Coefficients `c` (in the orthonormal basis of `X`) minimizing `‖f − Σ c_k u_k‖_{L^Ψ(ν)}`.
///
/// `samples` holds the values of `f` at the points of `nu`. For `Ψ(t) = t²`
/// this is minimum-norm weighted least squares; otherwise the residual norm is
/// minimized by quasi-Newton descent from the least-squares solution,
/// restricted to the row space of the sampling matrix so that the minimizer of
/// smallest coefficient norm is returned.
pub fn orlicz_projection(
    psi: &PhiFunction,
    nu: &DiscreteMeasure,
    x: &Subspace,
    samples: &SampledFunction,
    tol: f64,
) -> Result<Vec<Complex64>> {
    if samples.len() != nu.len() {
        return Err(Error::LengthMismatch {
            expected: nu.len(),
            got: samples.len(),
        });
    }
    let u = x.evaluate(nu.points())?;
    let w = nu.weights();
    let ls = weighted_least_squares(&u, w, &samples.values)?;
    if psi.is_square() {
        return Ok(ls);
    }
    if !is_convex_on_grid(psi, &default_grid()) {
        return Err(Error::HypothesisFails(format!("projection generator {} is not convex", psi.label)));
    }
    let (basis, start): (DMatrix<Complex64>, Vec<Complex64>) = match row_space(&u, w) {
        None => (DMatrix::identity(x.dim(), x.dim()), ls),
        Some(p) => {
            let z = (p.adjoint() * DVector::from_vec(ls)).iter().cloned().collect();
            (p, z)
        }
    };
    let up = &u * &basis;
    let r = up.ncols();
    let real = x.is_real() && samples.is_real() && up.iter().all(|z| z.im == 0.0);
    let f = DVector::from_vec(samples.values.clone());
    let coef = |theta: &[f64]| -> DVector<Complex64> {
        DVector::from_fn(r, |k, _| {
            if real {
                Complex64::new(theta[k], 0.0)
            } else {
                Complex64::new(theta[k], theta[r + k])
            }
        })
    };
    let objective = |theta: &[f64]| -> (f64, Vec<f64>) {
        let res = &f - &up * coef(theta);
        let abs: Vec<f64> = res.iter().map(|z| z.norm()).collect();
        let (val, g) = luxemburg_with_gradient(psi, &abs, w, PROJECTION_LUX_TOL);
        let dirs = DVector::from_fn(res.len(), |j, _| {
            if abs[j] > 0.0 {
                res[j] * (g[j] / abs[j])
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let s = up.adjoint() * dirs;
        let mut grad: Vec<f64> = s.iter().map(|z| -z.re).collect();
        if !real {
            grad.extend(s.iter().map(|z| -z.im));
        }
        (val, grad)
    };
    let mut theta: Vec<f64> = start.iter().map(|z| z.re).collect();
    if !real {
        theta.extend(start.iter().map(|z| z.im));
    }
    let out = minimize_bfgs(objective, theta, tol, 1e-15, 5000);
    if !out.converged {
        return Err(Error::NoConvergence {
            iterations: out.iterations,
            context: "Orlicz projection".into(),
        });
    }
    Ok((&basis * coef(&out.argmin)).iter().cloned().collect())
}

/// `‖f − Σ c_k u_k‖_{L^Ψ(ν)}` for sample values `f`.
pub fn projection_residual(
    psi: &PhiFunction,
    nu: &DiscreteMeasure,
    x: &Subspace,
    samples: &SampledFunction,
    coeffs: &[Complex64],
) -> Result<f64> {
    let u = x.evaluate(nu.points())?;
    let fit = &u * DVector::from_column_slice(coeffs);
    let abs: Vec<f64> = samples.values.iter().zip(fit.iter()).map(|(a, b)| (a - b).norm()).collect();
    Ok(luxemburg_abs(psi, &abs, nu.weights(), PROJECTION_LUX_TOL))
}

/// `C_Φ(2a_Φ^{1/p}(Φ(1)+1)^{1/p} + 4D·C_Ψ·a_Ψ^{1/p}(Ψ(1)+1)^{1/p})`.
pub fn recovery_constant(phi: &PhiFunction, psi: &PhiFunction, p: f64, d: f64, cphi: f64, cpsi: f64) -> f64 {
    let term = |g: &PhiFunction| g.a_lower.powf(1.0 / p) * (g.eval(1.0) + 1.0).powf(1.0 / p);
    cphi * (2.0 * term(phi) + 4.0 * d * cpsi * term(psi))
}

/// Estimate of `D = sup_{u∈X} ‖u‖_{L^Φ(μ)} / ‖u‖_{L^Ψ(ν)}`.
///
/// Exact (a generalized eigenvalue) when both generators are `t²`, otherwise
/// the best value found by multi-start ascent, which is a lower estimate.
pub fn domination_constant<R: Rng>(
    phi: &PhiFunction,
    psi: &PhiFunction,
    x: &Subspace,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    opts: &AscentOptions,
    rng: &mut R,
) -> Result<f64> {
    let u_mu = x.evaluate(mu.points())?;
    let u_nu = x.evaluate(nu.points())?;
    if phi.is_square() && psi.is_square() {
        let g_mu = weighted_gram(&u_mu, mu.weights());
        let g_nu = weighted_gram(&u_nu, nu.weights());
        let eig = g_nu.clone().symmetric_eigen();
        if !(eig.eigenvalues.min() > RANK_TOL * eig.eigenvalues.max()) {
            return Ok(f64::INFINITY);
        }
        let half = crate::subspace::inv_sqrt_hermitian(&g_nu)?;
        let top = (&half * g_mu * &half).symmetric_eigen().eigenvalues.max();
        return Ok(top.sqrt());
    }
    let prob = BallProblem {
        phi,
        phi_nu: Some(psi),
        u_mu,
        w_mu: mu.weights().to_vec(),
        u_nu,
        w_nu: nu.weights().to_vec(),
        real: x.is_real(),
    };
    let r = sphere_ascent(prob.dim(), |t| prob.ratio(t, true), opts, None, rng);
    Ok(r.value)
}

/// Both sides of the recovery bound for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    /// `‖f − ℓ(f)‖_{L^Φ(μ)}`.
    pub error: f64,
    /// `d(f, X)_∞` on the grid.
    pub distance: f64,
    pub ratio: f64,
    pub d: f64,
    pub constant: f64,
    /// `‖f − ℓ(f)‖_{L^Ψ(ν)} − ‖f − P f‖_{L^Ψ(ν)}` with `P f` the best uniform approximant.
    pub comparison_gap: f64,
    pub violated: bool,
}

/// Evaluates `‖f − ℓ(f)‖_{L^Φ(μ)} ≤ C(Φ,Ψ,p,D)·d(f,X)_∞` for an instance.
///
/// Errors below `tol` count as zero, so `f ∈ X` yields ratio 0.
pub fn recovery_error_check(
    inst: &RecoveryInstance,
    mu: &DiscreteMeasure,
    d: f64,
    cphi: f64,
    cpsi: f64,
    tol: f64,
) -> Result<RecoveryReport> {
    let nu = inst.nu()?;
    let samples = inst.sampled_values();
    let coeffs = orlicz_projection(&inst.psi, &nu, &inst.x, &samples, tol)?;
    let recovered = inst.x.combine(&coeffs);
    let error = luxemburg_norm(&inst.phi, &inst.target.sub(&recovered)?, mu, PROJECTION_LUX_TOL)?;
    let best = best_uniform_approx(&inst.target, &inst.x, 1e-10)?;
    let distance = best.dist;
    let constant = recovery_constant(&inst.phi, &inst.psi, inst.phi.lower_index, d, cphi, cpsi);
    let ratio = if error <= tol {
        0.0
    } else if distance > 0.0 {
        error / distance
    } else {
        f64::INFINITY
    };
    let own = projection_residual(&inst.psi, &nu, &inst.x, &samples, &coeffs)?;
    let other = projection_residual(&inst.psi, &nu, &inst.x, &samples, &best.coeffs)?;
    Ok(RecoveryReport {
        error,
        distance,
        ratio,
        d,
        constant,
        comparison_gap: own - other,
        violated: ratio > constant,
    })
}

/// How sample points are produced in a sampling-number experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Unweighted `y ∪ z` points with least-squares recovery.
    L2OneSided,
    /// Weighted points from the one-sided pipeline with projection in `L^{Ψ_Φ}(ν)`.
    Weighted,
}

impl Route {
    pub fn name(&self) -> &'static str {
        match self {
            Route::L2OneSided => "l2_one_sided",
            Route::Weighted => "weighted",
        }
    }
}

/// Which bound factor the fitted constant is taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    /// `(Φ(√N)/N)^{1/p}` for the unweighted route, `M_{Φ,Ψ_Φ}(m)^{1/p}` for the weighted one.
    #[default]
    General,
    /// `N^{1/2−1/p}(log₂ 4N)^{α/p}` for `Φ_{p,α,β}`.
    LogPower,
}

/// Settings shared by all rows of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSettings {
    pub route: Route,
    pub bound: BoundForm,
    pub seed: u64,
    pub l2: L2OneSidedConfig,
    pub pipeline: PipelineConfig,
    pub tol: f64,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            route: Route::L2OneSided,
            bound: BoundForm::General,
            seed: 0,
            l2: L2OneSidedConfig::default(),
            pipeline: PipelineConfig::default(),
            tol: 1e-10,
        }
    }
}

/// One row of the bench table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub m: usize,
    pub route: String,
    pub worst_error: f64,
    pub bound_factor: f64,
    #[serde(rename = "fitted_C")]
    pub fitted_c: f64,
    pub seed: u64,
}

/// Bound factor for one row; `m` is the number of sample points.
pub fn bound_factor(phi: &PhiFunction, p: f64, n: usize, m: usize, route: Route, form: BoundForm) -> Result<f64> {
    let nf = n as f64;
    match (form, route) {
        (BoundForm::LogPower, _) => match phi.spec() {
            Some(PhiSpec::Pab { alpha, .. }) => Ok(nf.powf(0.5 - 1.0 / p) * (4.0 * nf).log2().powf(alpha / p)),
            Some(PhiSpec::Power { .. }) => Ok(nf.powf(0.5 - 1.0 / p)),
            _ => Err(Error::InvalidArgument(format!(
                "the log-power bound needs a Φ_{{p,α,β}} generator, got {}",
                phi.label
            ))),
        },
        (BoundForm::General, Route::L2OneSided) => Ok((phi.eval(nf.sqrt()) / nf).powf(1.0 / p)),
        (BoundForm::General, Route::Weighted) => {
            let psi = envelope_of(phi);
            Ok(m_phi_psi(phi, &psi, m as f64, GRID_SIZE)?.powf(1.0 / p))
        }
    }
}

fn envelope_of(phi: &PhiFunction) -> PhiFunction {
    if phi.is_square() {
        phi.clone()
    } else {
        envelope_function(phi, &log_grid(1e-6, 1e6, 400))
    }
}

/// Recovers every function of `fset` from points built for each subspace and tabulates the worst error.
///
/// `fset` lives on the grid of `mu`, which must also be the grid of every
/// subspace. `fitted_C = worst_error / (bound_factor · d)` with `d` the
/// largest best-uniform-approximation distance over `fset`.
pub fn sampling_number_experiment(
    fset: &[SampledFunction],
    mu: &DiscreteMeasure,
    phi: &PhiFunction,
    p: f64,
    spaces: &[Subspace],
    cfg: &ExperimentSettings,
) -> Result<Vec<BenchRow>> {
    if fset.is_empty() {
        return Err(Error::InvalidArgument("empty function set".into()));
    }
    for x in spaces {
        if x.grid().points() != mu.points() {
            return Err(Error::InvalidSubspace("subspace grid differs from the ambient measure".into()));
        }
    }
    spaces
        .par_iter()
        .map(|x| experiment_row(fset, mu, phi, p, x, cfg))
        .collect()
}

fn experiment_row(
    fset: &[SampledFunction],
    mu: &DiscreteMeasure,
    phi: &PhiFunction,
    p: f64,
    x: &Subspace,
    cfg: &ExperimentSettings,
) -> Result<BenchRow> {
    let n = x.dim();
    let seed = derive_seed(cfg.seed, n as u64);
    let (samples, weights, psi) = match cfg.route {
        Route::L2OneSided => {
            let l2 = L2OneSidedConfig {
                seed,
                ..cfg.l2.clone()
            };
            let r = l2_one_sided(x, mu, &l2).map_err(|e| e.in_stage("l2-one-sided"))?;
            let pts = r.points();
            let w = vec![1.0 / pts.len() as f64; pts.len()];
            (pts, w, PhiFunction::power(2.0)?)
        }
        Route::Weighted => {
            let psi = envelope_of(phi);
            let pc = PipelineConfig {
                seed,
                ..cfg.pipeline.clone()
            };
            let r = one_sided_pipeline(phi, &psi, x, mu, &pc).map_err(|e| e.in_stage("one-sided-pipeline"))?;
            (r.indices, r.weights, psi)
        }
    };
    let m = samples.len();
    let nu = DiscreteMeasure::new(samples.iter().map(|&j| mu.point(j).to_vec()).collect(), weights)?;
    let mut worst = 0.0f64;
    for f in fset {
        let c = orlicz_projection(&psi, &nu, x, &f.select(&samples), cfg.tol).map_err(|e| e.in_stage("projection"))?;
        let err = luxemburg_norm(phi, &f.sub(&x.combine(&c))?, mu, PROJECTION_LUX_TOL)?;
        worst = worst.max(err);
    }
    let factor = bound_factor(phi, p, n, m, cfg.route, cfg.bound)?;
    let width = width_upper(fset, x, 1e-10).map_err(|e| e.in_stage("width"))?;
    let fitted = if width > 0.0 { worst / (factor * width) } else { 0.0 };
    Ok(BenchRow {
        n,
        m,
        route: cfg.route.name().into(),
        worst_error: worst,
        bound_factor: factor,
        fitted_c: fitted,
        seed,
    })
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_bench_csv<R: Read>(input: R) -> Result<Vec<BenchRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// `count` real trigonometric series `Σ_{|k|≤K} ρ^{|k|} cos(k x + θ_k)` with random phases, on a one-dimensional torus grid.
pub fn fourier_family(grid: &DiscreteMeasure, count: usize, decay: f64, max_freq: i64, seed: u64) -> Result<Vec<SampledFunction>> {
    if grid.dim() != 1 {
        return Err(Error::InvalidMeasure("Fourier family needs a one-dimensional grid".into()));
    }
    let phase = Uniform::new(0.0, std::f64::consts::TAU).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok((0..count)
        .map(|i| {
            let mut rng = rng_for(seed, i as u64);
            let thetas: Vec<f64> = (0..=max_freq).map(|_| phase.sample(&mut rng)).collect();
            let vals: Vec<f64> = grid
                .points()
                .iter()
                .map(|x| {
                    (0..=max_freq)
                        .map(|k| {
                            let amp = if k == 0 { 1.0 } else { 2.0 } * decay.powi(k as i32);
                            amp * (k as f64 * x[0] + thetas[k as usize]).cos()
                        })
                        .sum()
                })
                .collect();
            SampledFunction::from_real(&vals)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::{make_monomial_space, make_trig_space, symmetric_range};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(n: i64, g: usize) -> (Subspace, DiscreteMeasure) {
        let mu = DiscreteMeasure::torus_grid(g, 1).unwrap();
        (make_trig_space(&symmetric_range(n), &mu).unwrap(), mu)
    }

    #[test]
    fn square_constant_is_six_root_two() {
        let sq = PhiFunction::power(2.0).unwrap();
        assert_relative_eq!(recovery_constant(&sq, &sq, 2.0, 1.0, 1.0, 1.0), 6.0 * 2f64.sqrt(), epsilon = 1e-12);
        let a = recovery_constant(&sq, &sq, 2.0, 10.0, 1.0, 1.0);
        let b = recovery_constant(&sq, &sq, 2.0, 20.0, 1.0, 1.0);
        let c = recovery_constant(&sq, &sq, 2.0, 30.0, 1.0, 1.0);
        assert_relative_eq!(c - b, b - a, epsilon = 1e-9);
    }

    #[test]
    fn projection_interpolates_members() {
        let (x, mu) = setup(2, 32);
        let c: Vec<Complex64> = (0..5).map(|k| Complex64::new(k as f64 - 1.5, 0.3 * k as f64)).collect();
        let f = x.combine(&c);
        let idx: Vec<usize> = (0..32).step_by(3).collect();
        let nu = DiscreteMeasure::uniform(idx.iter().map(|&j| mu.point(j).to_vec()).collect()).unwrap();
        for psi in [PhiFunction::power(2.0).unwrap(), PhiFunction::pab(2.0, 1.0, 0.0).unwrap()] {
            let got = orlicz_projection(&psi, &nu, &x, &f.select(&idx), 1e-12).unwrap();
            for (a, b) in got.iter().zip(&c) {
                assert!((a - b).norm() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn square_projection_matches_normal_equations() {
        let (x, mu) = setup(1, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let idx: Vec<usize> = (0..9).map(|_| rng.random_range(0..16)).collect();
        let w: Vec<f64> = (0..9).map(|_| rng.random_range(0.5..1.5)).collect();
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|v| v / total).collect();
        let nu = DiscreteMeasure::new(idx.iter().map(|&j| mu.point(j).to_vec()).collect(), w.clone()).unwrap();
        let f = SampledFunction::new((0..9).map(|_| Complex64::new(rng.random(), rng.random())).collect());
        let sq = PhiFunction::power(2.0).unwrap();
        let got = orlicz_projection(&sq, &nu, &x, &f, 1e-12).unwrap();
        let u = x.evaluate(nu.points()).unwrap();
        let g = weighted_gram(&u, &w);
        let mut rhs = DVector::zeros(3);
        for j in 0..9 {
            for k in 0..3 {
                rhs[k] += w[j] * u[(j, k)].conj() * f.values[j];
            }
        }
        let want = g.lu().solve(&rhs).unwrap();
        for (a, b) in got.iter().zip(want.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn projection_beats_coefficient_net() {
        let grid = DiscreteMeasure::interval_grid(8, -1.0, 1.0).unwrap();
        let x = make_monomial_space(1, &grid).unwrap();
        let psi = PhiFunction::pab(2.0, 1.0, 0.0).unwrap();
        let f = SampledFunction::from_real(&grid.points().iter().map(|p| (3.0 * p[0]).sin() + p[0] * p[0]).collect::<Vec<_>>());
        let c = orlicz_projection(&psi, &grid, &x, &f, 1e-12).unwrap();
        let best = projection_residual(&psi, &grid, &x, &f, &c).unwrap();
        // coarse net then local refinement around the best net point
        let eval = |a: f64, b: f64| {
            projection_residual(&psi, &grid, &x, &f, &[Complex64::new(a, 0.0), Complex64::new(b, 0.0)]).unwrap()
        };
        let (mut ca, mut cb, mut h) = (0.0, 0.0, 1.0);
        let mut val = eval(ca, cb);
        for _ in 0..40 {
            let mut improved = (ca, cb, val);
            for i in -10..=10 {
                for j in -10..=10 {
                    let (a, b) = (ca + h * i as f64, cb + h * j as f64);
                    let v = eval(a, b);
                    if v < improved.2 {
                        improved = (a, b, v);
                    }
                }
            }
            (ca, cb, val) = improved;
            h *= 0.3;
        }
        assert!((best - val).abs() <= 1e-4, "{best} vs {val}");
        assert!(best <= val + 1e-10);
    }

    #[test]
    fn square_projection_is_linear() {
        let (x, mu) = setup(2, 32);
        let idx: Vec<usize> = (0..32).step_by(2).collect();
        let nu = DiscreteMeasure::uniform(idx.iter().map(|&j| mu.point(j).to_vec()).collect()).unwrap();
        let sq = PhiFunction::power(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut rand_f = || SampledFunction::new((0..16).map(|_| Complex64::new(rng.random(), rng.random())).collect());
        let (f, g) = (rand_f(), rand_f());
        let lf = orlicz_projection(&sq, &nu, &x, &f, 1e-12).unwrap();
        let lg = orlicz_projection(&sq, &nu, &x, &g, 1e-12).unwrap();
        let lfg = orlicz_projection(&sq, &nu, &x, &f.add(&g).unwrap(), 1e-12).unwrap();
        let lt = orlicz_projection(&sq, &nu, &x, &f.scaled(2.5), 1e-12).unwrap();
        for k in 0..5 {
            assert!((lfg[k] - lf[k] - lg[k]).norm() < 1e-8);
            assert!((lt[k] - lf[k] * 2.5).norm() < 1e-8);
        }
    }

    #[test]
    fn nonconvex_generator_rejected() {
        let (x, mu) = setup(1, 16);
        let bumpy = PhiFunction::custom(
            "bumpy",
            |t: f64| t * t * (2.0 + (5.0 * t.ln()).sin()),
            None,
            crate::phi::Indices {
                lower: 1.0,
                upper: 4.0,
                a_lower: 3.0,
                b_upper: 3.0,
                t_star: 0.0,
            },
        );
        let f = SampledFunction::from_real(&vec![1.0; 16]);
        assert!(matches!(
            orlicz_projection(&bumpy, &mu, &x, &f, 1e-10),
            Err(Error::HypothesisFails(_))
        ));
    }

    #[test]
    fn member_target_has_zero_ratio() {
        let (x, mu) = setup(1, 32);
        let f = x.combine(&[Complex64::new(1.0, 0.0), Complex64::new(0.5, -0.5), Complex64::new(0.0, 2.0)]);
        let sq = PhiFunction::power(2.0).unwrap();
        let idx: Vec<usize> = (0..32).step_by(4).collect();
        let inst = RecoveryInstance::new(f, x, idx.clone(), vec![1.0 / 8.0; 8], sq.clone(), sq).unwrap();
        let r = recovery_error_check(&inst, &mu, 1.0, 1.0, 1.0, 1e-9).unwrap();
        assert!(r.error <= 1e-9);
        assert_eq!(r.ratio, 0.0);
        assert!(!r.violated);
    }

    #[test]
    fn exact_domination_for_full_grid() {
        let (x, mu) = setup(2, 16);
        let sq = PhiFunction::power(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = domination_constant(&sq, &sq, &x, &mu, &mu, &AscentOptions::default(), &mut rng).unwrap();
        assert_relative_eq!(d, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn bench_csv_round_trip() {
        let rows = vec![BenchRow {
            n: 3,
            m: 12,
            route: "l2_one_sided".into(),
            worst_error: 0.125,
            bound_factor: 1.0,
            fitted_c: 2.5,
            seed: 7,
        }];
        let mut buf = Vec::new();
        write_bench_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("N,m,route,worst_error,bound_factor,fitted_C,seed"));
        assert_eq!(read_bench_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn small_experiment_runs() {
        let mu = DiscreteMeasure::torus_grid(64, 1).unwrap();
        let fset = fourier_family(&mu, 3, 0.5, 12, 1).unwrap();
        let spaces: Vec<Subspace> = [1, 2].iter().map(|&n| make_trig_space(&symmetric_range(n), &mu).unwrap()).collect();
        let sq = PhiFunction::power(2.0).unwrap();
        let rows = sampling_number_experiment(&fset, &mu, &sq, 2.0, &spaces, &ExperimentSettings::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].n, 3);
        for r in &rows {
            assert!(r.worst_error > 0.0 && r.fitted_c.is_finite());
            assert_relative_eq!(r.bound_factor, 1.0, epsilon = 1e-12);
        }
    }
}
