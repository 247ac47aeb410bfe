//! Finite-support probability measures and sampled functions.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ w = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// `Σ_j w_j δ_{x_j}` with nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        if points.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidMeasure("points have mixed dimension".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMeasure(format!("weight {w} is not a finite nonnegative number")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure { points, weights })
    }

    /// Normalizes nonnegative masses into a probability measure.
    pub fn from_masses(points: Vec<Vec<f64>>, masses: Vec<f64>) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidMeasure(format!("total mass {total} cannot be normalized")));
        }
        let weights = masses.iter().map(|m| m / total).collect();
        Self::new(points, weights)
    }

    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n as f64; n])
    }

    /// Uniform grid of `n^d` nodes on the torus `[0, 2π)^d`.
    pub fn torus_grid(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidMeasure("torus grid needs n, d ≥ 1".into()));
        }
        let step = 2.0 * std::f64::consts::PI / n as f64;
        let total = n.pow(d as u32);
        let points = (0..total)
            .map(|mut idx| {
                (0..d)
                    .map(|_| {
                        let k = idx % n;
                        idx /= n;
                        k as f64 * step
                    })
                    .collect()
            })
            .collect();
        Self::uniform(points)
    }

    /// Uniform measure on `n` equispaced points of `[a, b]` (endpoints included).
    pub fn interval_grid(n: usize, a: f64, b: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMeasure("interval grid needs n ≥ 1".into()));
        }
        let points = (0..n)
            .map(|i| {
                if n == 1 {
                    vec![0.5 * (a + b)]
                } else {
                    vec![a + (b - a) * i as f64 / (n - 1) as f64]
                }
            })
            .collect();
        Self::uniform(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j]
    }

    /// Restriction to the atoms with index in `keep`, renormalized.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let points = keep.iter().map(|&j| self.points[j].clone()).collect();
        let masses = keep.iter().map(|&j| self.weights[j]).collect();
        Self::from_masses(points, masses)
    }

    /// CSV with columns `x_1..x_d, weight`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.dim()).map(|i| format!("x_{i}")).collect();
        header.push("weight".into());
        w.write_record(&header)?;
        for (p, wt) in self.points.iter().zip(&self.weights) {
            let mut row: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
            row.push(format!("{wt:?}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        let d = headers.len().checked_sub(1).filter(|d| *d > 0).ok_or_else(|| {
            Error::InvalidMeasure("measure CSV needs x_1..x_d and weight columns".into())
        })?;
        if headers.get(d) != Some("weight") {
            return Err(Error::InvalidMeasure("last measure CSV column must be `weight`".into()));
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidMeasure(format!("bad number: {e}")))?;
            weights.push(vals[d]);
            points.push(vals[..d].to_vec());
        }
        Self::new(points, weights)
    }
}

/// A function's values on the support of a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    pub values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(values: Vec<Complex64>) -> Self {
        SampledFunction { values }
    }

    pub fn from_real(values: &[f64]) -> Self {
        SampledFunction {
            values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        SampledFunction {
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn scaled(&self, t: f64) -> Self {
        SampledFunction {
            values: self.values.iter().map(|v| v * t).collect(),
        }
    }

    pub fn sub(&self, other: &SampledFunction) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(SampledFunction {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &SampledFunction) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(SampledFunction {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    /// Values at the given indices.
    pub fn select(&self, idx: &[usize]) -> Self {
        SampledFunction {
            values: idx.iter().map(|&i| self.values[i]).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// CSV with columns `re, im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["re", "im"])?;
        for v in &self.values {
            w.write_record([format!("{:?}", v.re), format!("{:?}", v.im)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["re", "im"] {
            return Err(Error::InvalidArgument("sampled function CSV needs columns re, im".into()));
        }
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .unwrap_or("")
                    .trim()
                    .parse()
                    .map_err(|e| Error::InvalidArgument(format!("bad number: {e}")))
            };
            values.push(Complex64::new(parse(0)?, parse(1)?));
        }
        Ok(SampledFunction { values })
    }
}
