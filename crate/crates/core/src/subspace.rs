//! Finite-dimensional function spaces sampled on a finite grid.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, SampledFunction};

/// Relative eigenvalue floor for Gram matrices.
pub const RANK_TOL: f64 = 1e-10;

/// Raw basis of a subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Basis {
    /// `e^{i⟨k,x⟩}` for each frequency vector `k`.
    Trig { freqs: Vec<Vec<i64>> },
    /// `1, x, …, x^degree` on a one-dimensional domain.
    Monomial { degree: usize },
    /// Values given at a fixed list of points; evaluation elsewhere is an error.
    Custom {
        points: Vec<Vec<f64>>,
        values: Vec<Vec<Complex64>>,
    },
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Trig { freqs } => freqs.len(),
            Basis::Monomial { degree } => degree + 1,
            Basis::Custom { values, .. } => values.first().map_or(0, Vec::len),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        match self {
            Basis::Trig { freqs } => freqs
                .iter()
                .map(|k| {
                    if k.len() != x.len() {
                        return Err(Error::LengthMismatch {
                            expected: k.len(),
                            got: x.len(),
                        });
                    }
                    let phase: f64 = k.iter().zip(x).map(|(&ki, &xi)| ki as f64 * xi).sum();
                    Ok(Complex64::from_polar(1.0, phase))
                })
                .collect(),
            Basis::Monomial { degree } => {
                if x.len() != 1 {
                    return Err(Error::InvalidSubspace("monomials need a one-dimensional domain".into()));
                }
                Ok((0..=*degree as i32).map(|k| Complex64::new(x[0].powi(k), 0.0)).collect())
            }
            Basis::Custom { points, values } => points
                .iter()
                .position(|p| p.as_slice() == x)
                .map(|j| values[j].clone())
                .ok_or_else(|| Error::InvalidSubspace(format!("custom basis has no value at {x:?}"))),
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Basis::Trig { freqs } => freqs.iter().all(|k| k.iter().all(|&v| v == 0)),
            Basis::Monomial { .. } => true,
            Basis::Custom { values, .. } => values.iter().flatten().all(|v| v.im == 0.0),
        }
    }
}

/// Frequencies `{-n, …, n}` in one dimension.
pub fn symmetric_range(n: i64) -> Vec<Vec<i64>> {
    (-n..=n).map(|k| vec![k]).collect()
}

/// An `N`-dimensional subspace with an orthonormal basis with respect to its grid measure.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: Basis,
    grid: DiscreteMeasure,
    raw: DMatrix<Complex64>,
    coeffs: DMatrix<Complex64>,
    onb: DMatrix<Complex64>,
    complex_scalars: bool,
}

/// Values of the raw basis at each point, one row per point.
pub fn eval_matrix(basis: &Basis, points: &[Vec<f64>]) -> Result<DMatrix<Complex64>> {
    let n = basis.dim();
    let mut out = DMatrix::zeros(points.len(), n);
    for (j, x) in points.iter().enumerate() {
        for (k, v) in basis.eval(x)?.into_iter().enumerate() {
            out[(j, k)] = v;
        }
    }
    Ok(out)
}

/// `Vᴴ diag(w) V`.
pub fn weighted_gram(values: &DMatrix<Complex64>, weights: &[f64]) -> DMatrix<Complex64> {
    let mut scaled = values.clone();
    for (j, &w) in weights.iter().enumerate() {
        scaled.row_mut(j).scale_mut(w);
    }
    values.adjoint() * scaled
}

/// `G^{-1/2}` for a Hermitian positive definite `G`.
pub fn inv_sqrt_hermitian(g: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let eig = g.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let low = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(top > 0.0) || low < RANK_TOL * top {
        return Err(Error::InvalidSubspace(format!(
            "Gram matrix is rank deficient (eigenvalues in [{low:e}, {top:e}])"
        )));
    }
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| Complex64::new(l.sqrt().recip(), 0.0)),
    ));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

impl Subspace {
    /// Builds the subspace and orthonormalizes it with respect to `grid`.
    pub fn new(basis: Basis, grid: DiscreteMeasure) -> Result<Self> {
        if basis.dim() == 0 {
            return Err(Error::InvalidSubspace("empty basis".into()));
        }
        let raw = eval_matrix(&basis, grid.points())?;
        let coeffs = inv_sqrt_hermitian(&weighted_gram(&raw, grid.weights()))?;
        let onb = &raw * &coeffs;
        Ok(Subspace {
            basis,
            grid,
            raw,
            coeffs,
            onb,
            complex_scalars: false,
        })
    }

    /// Same raw basis, orthonormalized with respect to another measure on the same grid points.
    pub fn orthonormalize(&self, mu: &DiscreteMeasure) -> Result<Self> {
        if mu.points() != self.grid.points() {
            return Subspace::new(self.basis.clone(), mu.clone());
        }
        let coeffs = inv_sqrt_hermitian(&weighted_gram(&self.raw, mu.weights()))?;
        let onb = &self.raw * &coeffs;
        Ok(Subspace {
            basis: self.basis.clone(),
            grid: mu.clone(),
            raw: self.raw.clone(),
            coeffs,
            onb,
            complex_scalars: self.complex_scalars,
        })
    }

    /// Subspace spanned by the columns of `values` on `grid`.
    pub fn from_values(values: DMatrix<Complex64>, grid: DiscreteMeasure) -> Result<Self> {
        if values.nrows() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.nrows(),
            });
        }
        let rows = (0..values.nrows())
            .map(|j| values.row(j).iter().cloned().collect())
            .collect();
        Subspace::new(
            Basis::Custom {
                points: grid.points().to_vec(),
                values: rows,
            },
            grid,
        )
    }

    pub fn dim(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn grid(&self) -> &DiscreteMeasure {
        &self.grid
    }

    /// Orthonormal basis values on the grid, one row per grid point.
    pub fn onb(&self) -> &DMatrix<Complex64> {
        &self.onb
    }

    /// ONB expressed in the raw basis: `onb = raw · coeffs`.
    pub fn coeffs(&self) -> &DMatrix<Complex64> {
        &self.coeffs
    }

    /// Treats the span as a space over `C` even when the basis is real-valued.
    pub fn with_complex_scalars(mut self) -> Self {
        self.complex_scalars = true;
        self
    }

    /// Real-valued basis and real scalars.
    pub fn is_real(&self) -> bool {
        !self.complex_scalars
            && self.onb.iter().all(|v| v.im.abs() <= 1e-14 * (1.0 + v.re.abs()))
    }

    /// ONB values at arbitrary points.
    pub fn evaluate(&self, points: &[Vec<f64>]) -> Result<DMatrix<Complex64>> {
        Ok(eval_matrix(&self.basis, points)? * &self.coeffs)
    }

    /// ONB rows at the given grid indices.
    pub fn rows(&self, idx: &[usize]) -> DMatrix<Complex64> {
        DMatrix::from_fn(idx.len(), self.dim(), |r, k| self.onb[(idx[r], k)])
    }

    /// Grid values of `Σ_k c_k u_k`.
    pub fn combine(&self, c: &[Complex64]) -> SampledFunction {
        let v = &self.onb * DVector::from_column_slice(c);
        SampledFunction::new(v.iter().cloned().collect())
    }

    /// Gram matrix of the ONB with respect to grid weights `w`.
    pub fn gram(&self, w: &[f64]) -> DMatrix<Complex64> {
        weighted_gram(&self.onb, w)
    }

    /// ONB coefficients of a grid function lying in the span (orthogonal projection).
    pub fn project(&self, f: &SampledFunction) -> Vec<Complex64> {
        (0..self.dim())
            .map(|k| {
                self.grid
                    .weights()
                    .iter()
                    .zip(&f.values)
                    .enumerate()
                    .map(|(j, (&w, &v))| w * self.onb[(j, k)].conj() * v)
                    .sum()
            })
            .collect()
    }

    /// Grid maxima of `Σ_k |u_k(x)|²`.
    pub fn christoffel(&self) -> Vec<f64> {
        self.onb.row_iter().map(|r| r.iter().map(|v| v.norm_sqr()).sum()).collect()
    }

    /// `max_x (Σ_k |u_k(x)|²)^{1/2}` over the grid.
    pub fn nikolskii_constant(&self) -> f64 {
        self.christoffel().into_iter().fold(0.0, f64::max).sqrt()
    }

    /// True when the grid maximum falls below `√N`, which no continuous domain allows.
    pub fn nikolskii_quadrature_warning(&self) -> bool {
        self.nikolskii_constant() < (self.dim() as f64).sqrt() * (1.0 - 1e-8)
    }

    /// A real orthonormal basis of the span when the span is closed under conjugation.
    pub fn real_basis(&self) -> Option<DMatrix<f64>> {
        let n = self.dim();
        let rows = self.onb.nrows();
        let mut m = DMatrix::<f64>::zeros(rows, 2 * n);
        for j in 0..rows {
            for k in 0..n {
                m[(j, k)] = self.onb[(j, k)].re;
                m[(j, n + k)] = self.onb[(j, k)].im;
            }
        }
        let w = self.grid.weights();
        let mut scaled = m.clone();
        for (j, &wj) in w.iter().enumerate() {
            scaled.row_mut(j).scale_mut(wj);
        }
        let g = m.transpose() * scaled;
        let eig = g.symmetric_eigen();
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..2 * n).filter(|&i| eig.eigenvalues[i] > RANK_TOL * top).collect();
        if keep.len() != n {
            return None;
        }
        let mut out = DMatrix::<f64>::zeros(rows, n);
        for (c, &i) in keep.iter().enumerate() {
            let s = eig.eigenvalues[i].sqrt().recip();
            let col = &m * eig.eigenvectors.column(i) * s;
            out.set_column(c, &col);
        }
        Some(out)
    }
}

/// `T(Q)` on a grid of the torus.
pub fn make_trig_space(q: &[Vec<i64>], grid: &DiscreteMeasure) -> Result<Subspace> {
    if q.is_empty() {
        return Err(Error::InvalidSubspace("empty frequency set".into()));
    }
    for (i, k) in q.iter().enumerate() {
        if q[..i].contains(k) {
            return Err(Error::InvalidSubspace(format!("duplicate frequency {k:?}")));
        }
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    if grid.points().iter().flatten().any(|&x| !(0.0..two_pi).contains(&x)) {
        return Err(Error::InvalidSubspace("trig grid must lie in [0, 2π)^d".into()));
    }
    Subspace::new(Basis::Trig { freqs: q.to_vec() }, grid.clone())
}

/// Polynomials of degree at most `degree` on a one-dimensional grid.
pub fn make_monomial_space(degree: usize, grid: &DiscreteMeasure) -> Result<Subspace> {
    Subspace::new(Basis::Monomial { degree }, grid.clone())
}

fn residual_sup(f: &[Complex64], values: &DMatrix<Complex64>, c: &[Complex64]) -> f64 {
    (0..values.nrows())
        .map(|j| {
            let approx: Complex64 = (0..c.len()).map(|k| values[(j, k)] * c[k]).sum();
            (f[j] - approx).norm()
        })
        .fold(0.0, f64::max)
}

fn lp_err(e: impl std::fmt::Display) -> Error {
    Error::LinearProgram(e.to_string())
}

fn finished(outcome: microlp::SolveOutcome) -> Result<microlp::Solution> {
    outcome
        .into_solution()
        .map_err(|_| Error::LinearProgram("solve interrupted".into()))
}

/// Discrete Chebyshev fit of real `f` by the columns of real `basis`.
fn minimax_real(f: &[f64], basis: &DMatrix<f64>) -> Result<Vec<f64>> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let n = basis.ncols();
    let scale = f.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    let t = lp.add_var(1.0, (0.0, f64::INFINITY));
    for (j, &fj) in f.iter().enumerate() {
        let mut row: Vec<_> = vars.iter().enumerate().map(|(k, &v)| (v, basis[(j, k)])).collect();
        row.push((t, -1.0));
        lp.add_constraint(row, ComparisonOp::Le, fj / scale);
        let mut row: Vec<_> = vars.iter().enumerate().map(|(k, &v)| (v, -basis[(j, k)])).collect();
        row.push((t, -1.0));
        lp.add_constraint(row, ComparisonOp::Le, -fj / scale);
    }
    let sol = finished(lp.solve().map_err(lp_err)?)?;
    Ok(vars.iter().map(|&v| sol[v] * scale).collect())
}

/// Complex Chebyshev fit via polygonal cutting planes on `|r_j| ≤ t`.
fn minimax_complex(f: &[Complex64], values: &DMatrix<Complex64>, tol: f64, max_iter: usize) -> Result<Vec<Complex64>> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let n = values.ncols();
    let scale = f.iter().fold(0.0_f64, |a, v| a.max(v.norm())).max(1e-300);
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let re: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    let im: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    let t = lp.add_var(1.0, (0.0, f64::INFINITY));
    let cut = |j: usize, theta: f64| {
        // Re(e^{-iθ}(f_j − Σ u_jk c_k)) ≤ t
        let z = Complex64::from_polar(1.0, -theta);
        let mut row = Vec::with_capacity(2 * n + 1);
        for k in 0..n {
            let zu = z * values[(j, k)];
            row.push((re[k], -zu.re));
            row.push((im[k], zu.im));
        }
        row.push((t, -1.0));
        (row, -(z * f[j]).re / scale)
    };
    for j in 0..f.len() {
        for s in 0..8 {
            let (row, rhs) = cut(j, s as f64 * std::f64::consts::FRAC_PI_4);
            lp.add_constraint(row, ComparisonOp::Le, rhs);
        }
    }
    let mut sol = finished(lp.solve().map_err(lp_err)?)?;
    for _ in 0..max_iter {
        let c: Vec<Complex64> = (0..n).map(|k| Complex64::new(sol[re[k]], sol[im[k]]) * scale).collect();
        let lower = sol[t] * scale;
        let mut worst = 0.0_f64;
        let mut cuts = Vec::new();
        for j in 0..f.len() {
            let approx: Complex64 = (0..n).map(|k| values[(j, k)] * c[k]).sum();
            let r = f[j] - approx;
            worst = worst.max(r.norm());
            if r.norm() > lower * (1.0 + 0.1 * tol) + 1e-300 {
                cuts.push((j, r.arg()));
            }
        }
        if worst - lower <= tol * (1.0 + lower) {
            return Ok(c);
        }
        for (j, theta) in cuts {
            let (row, rhs) = cut(j, theta);
            sol = finished(sol.add_constraint(row, ComparisonOp::Le, rhs).map_err(lp_err)?)?;
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        context: "complex minimax cutting planes".into(),
    })
}

/// Outcome of a discrete best uniform approximation.
#[derive(Debug, Clone)]
pub struct UniformApprox {
    pub dist: f64,
    /// ONB coefficients of the minimizer.
    pub coeffs: Vec<Complex64>,
}

/// `min_{u∈X} max_grid |f − u|`.
pub fn best_uniform_approx(f: &SampledFunction, x: &Subspace, tol: f64) -> Result<UniformApprox> {
    if f.len() != x.grid().len() {
        return Err(Error::LengthMismatch {
            expected: x.grid().len(),
            got: f.len(),
        });
    }
    if f.sup_norm() == 0.0 {
        return Ok(UniformApprox {
            dist: 0.0,
            coeffs: vec![Complex64::new(0.0, 0.0); x.dim()],
        });
    }
    let real_basis = if f.is_real() { x.real_basis() } else { None };
    let coeffs = match real_basis {
        Some(rb) => {
            let fr: Vec<f64> = f.values.iter().map(|v| v.re).collect();
            let c = minimax_real(&fr, &rb)?;
            let g = &rb * DVector::from_vec(c);
            x.project(&SampledFunction::from_real(g.as_slice()))
        }
        None => minimax_complex(&f.values, x.onb(), tol, 200)?,
    };
    let dist = residual_sup(&f.values, x.onb(), &coeffs);
    Ok(UniformApprox { dist, coeffs })
}

/// `max_{f∈F} d(f, X)_∞`, an upper bound for the Kolmogorov width when `X` is a candidate.
pub fn width_upper(fset: &[SampledFunction], x: &Subspace, tol: f64) -> Result<f64> {
    if fset.is_empty() {
        return Err(Error::InvalidArgument("empty function set".into()));
    }
    fset.iter()
        .map(|f| best_uniform_approx(f, x, tol).map(|a| a.dist))
        .try_fold(0.0_f64, |acc, d| d.map(|d| acc.max(d)))
}
