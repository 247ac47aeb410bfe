//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::density::{L2OneSidedConfig, PipelineConfig};
use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, SampledFunction};
use crate::optimize::AscentOptions;
use crate::phi::PhiSpec;
use crate::recovery::{fourier_family, ExperimentSettings};
use crate::subspace::{make_monomial_space, make_trig_space, symmetric_range, Subspace};

/// Ambient measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// Uniform grid of `n^d` points on `[0, 2π)^d`.
    TorusGrid {
        n: usize,
        #[serde(default = "one")]
        d: usize,
    },
    /// Uniform grid of `n` points on `[a, b]`.
    IntervalGrid { n: usize, a: f64, b: f64 },
    /// Measure CSV (`x_1..x_d,weight`), relative to the config file.
    File { path: PathBuf },
}

fn one() -> usize {
    1
}

impl MeasureSpec {
    pub fn build(&self, base: &Path) -> Result<DiscreteMeasure> {
        match self {
            MeasureSpec::TorusGrid { n, d } => DiscreteMeasure::torus_grid(*n, *d),
            MeasureSpec::IntervalGrid { n, a, b } => DiscreteMeasure::interval_grid(*n, *a, *b),
            MeasureSpec::File { path } => DiscreteMeasure::read_csv(std::fs::File::open(base.join(path))?),
        }
    }
}

/// Subspace of functions on the ambient grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubspaceSpec {
    /// `T(Q)` for an explicit frequency set.
    Trig { freqs: Vec<Vec<i64>> },
    /// `T([-n, n])` in one variable, of dimension `2n + 1`.
    TrigSymmetric { n: i64 },
    /// Polynomials of degree at most `degree` in one variable.
    Monomial { degree: usize },
}

impl SubspaceSpec {
    pub fn build(&self, grid: &DiscreteMeasure) -> Result<Subspace> {
        match self {
            SubspaceSpec::Trig { freqs } => make_trig_space(freqs, grid),
            SubspaceSpec::TrigSymmetric { n } => make_trig_space(&symmetric_range(*n), grid),
            SubspaceSpec::Monomial { degree } => make_monomial_space(*degree, grid),
        }
    }
}

/// Symmetric trigonometric space of odd dimension `n`.
pub fn trig_of_dim(n: usize, grid: &DiscreteMeasure) -> Result<Subspace> {
    if n % 2 == 0 {
        return Err(Error::InvalidArgument(format!("symmetric trigonometric spaces have odd dimension, got {n}")));
    }
    make_trig_space(&symmetric_range((n as i64 - 1) / 2), grid)
}

/// Test functions on the ambient grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSetSpec {
    /// Real series `Σ_{|k|≤K} ρ^{|k|} cos(kx + θ_k)` with seeded random phases.
    Fourier {
        count: usize,
        decay: f64,
        max_freq: i64,
        seed: u64,
    },
    /// SampledFunction CSV files (`re,im`), relative to the config file.
    Files { paths: Vec<PathBuf> },
}

impl FunctionSetSpec {
    pub fn build(&self, grid: &DiscreteMeasure, base: &Path) -> Result<Vec<SampledFunction>> {
        match self {
            FunctionSetSpec::Fourier {
                count,
                decay,
                max_freq,
                seed,
            } => fourier_family(grid, *count, *decay, *max_freq, *seed),
            FunctionSetSpec::Files { paths } => paths
                .iter()
                .map(|p| {
                    let f = SampledFunction::read_csv(std::fs::File::open(base.join(p))?)?;
                    if f.len() != grid.len() {
                        return Err(Error::LengthMismatch {
                            expected: grid.len(),
                            got: f.len(),
                        });
                    }
                    Ok(f)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyPhiTask {
    pub phi: PhiSpec,
    #[serde(default)]
    pub grid_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormTask {
    pub phi: PhiSpec,
    pub measure: MeasureSpec,
    pub functions: FunctionSetSpec,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizeTask {
    pub phi: PhiSpec,
    pub subspace: SubspaceSpec,
    pub measure: MeasureSpec,
    pub m_list: Vec<usize>,
    pub eps: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub ascent: AscentOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LewisTask {
    pub phi: PhiSpec,
    pub subspace: SubspaceSpec,
    pub measure: MeasureSpec,
    #[serde(default = "default_lewis_tol")]
    pub tol: f64,
}

fn default_lewis_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KwDesignTask {
    pub subspace: SubspaceSpec,
    pub measure: MeasureSpec,
    #[serde(default = "default_kw_tol")]
    pub tol: f64,
}

fn default_kw_tol() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneSidedTask {
    pub phi: PhiSpec,
    /// Defaults to the envelope `Ψ_Φ`.
    #[serde(default)]
    pub psi: Option<PhiSpec>,
    pub subspace: SubspaceSpec,
    pub measure: MeasureSpec,
    #[serde(default)]
    pub pipeline: PipelineConfig,
}

/// Points for a recovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplingSpec {
    /// `m` i.i.d. draws from the ambient measure with equal weights.
    Random { m: usize, seed: u64 },
    /// The `y ∪ z` construction.
    L2OneSided {
        #[serde(default)]
        config: L2OneSidedConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverTask {
    pub phi: PhiSpec,
    pub psi: PhiSpec,
    pub subspace: SubspaceSpec,
    pub measure: MeasureSpec,
    pub functions: FunctionSetSpec,
    pub sampling: SamplingSpec,
    /// Quasi-norm constants `C_Φ`, `C_Ψ`; 1 for convex generators.
    #[serde(default = "unit")]
    pub c_phi: f64,
    #[serde(default = "unit")]
    pub c_psi: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub ascent: AscentOptions,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchTask {
    pub phi: PhiSpec,
    /// Defaults to the lower index of `Φ`.
    #[serde(default)]
    pub p: Option<f64>,
    /// Odd dimensions of symmetric trigonometric spaces.
    pub n_list: Vec<usize>,
    pub measure: MeasureSpec,
    pub functions: FunctionSetSpec,
    #[serde(default)]
    pub settings: ExperimentSettings,
    /// Largest allowed `max fitted_C / min fitted_C`.
    #[serde(default)]
    pub max_spread: Option<f64>,
}

/// Work requested by a config, keyed by the subcommand name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    ClassifyPhi(ClassifyPhiTask),
    Norm(NormTask),
    Discretize(DiscretizeTask),
    Lewis(LewisTask),
    KwDesign(KwDesignTask),
    OneSided(OneSidedTask),
    Recover(RecoverTask),
    Bench(BenchTask),
}

impl Task {
    pub fn command(&self) -> &'static str {
        match self {
            Task::ClassifyPhi(_) => "classify-phi",
            Task::Norm(_) => "norm",
            Task::Discretize(_) => "discretize",
            Task::Lewis(_) => "lewis",
            Task::KwDesign(_) => "kw-design",
            Task::OneSided(_) => "one-sided",
            Task::Recover(_) => "recover",
            Task::Bench(_) => "bench",
        }
    }
}

/// Top-level config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Directory for CSV/JSON outputs, relative to the config file.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub task: Task,
}

impl ExperimentConfig {
    /// Parses and validates, reporting the offending field path on failure.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            Error::Config {
                path: e.path().to_string(),
                message: format!("{inner} (line {}, column {})", inner.line(), inner.column()),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks that every referenced spec resolves.
    pub fn validate(&self) -> Result<()> {
        let cmd = self.task.command();
        let bad = |field: &str, message: String| {
            Err(Error::Config {
                path: format!("task.{cmd}.{field}"),
                message,
            })
        };
        let phi_ok = |field: &str, spec: &PhiSpec| -> Result<()> {
            spec.build().map(|_| ()).map_err(|e| Error::Config {
                path: format!("task.{cmd}.{field}"),
                message: e.to_string(),
            })
        };
        match &self.task {
            Task::ClassifyPhi(t) => phi_ok("phi", &t.phi)?,
            Task::Norm(t) => phi_ok("phi", &t.phi)?,
            Task::Discretize(t) => {
                phi_ok("phi", &t.phi)?;
                if t.m_list.is_empty() || t.m_list.contains(&0) {
                    return bad("m_list", "need positive sample sizes".into());
                }
                if t.trials == 0 {
                    return bad("trials", "need at least one trial".into());
                }
                if !(t.eps > 0.0 && t.eps < 1.0) {
                    return bad("eps", format!("eps must lie in (0, 1), got {}", t.eps));
                }
            }
            Task::Lewis(t) => phi_ok("phi", &t.phi)?,
            Task::KwDesign(t) => {
                if !(t.tol > 0.0) {
                    return bad("tol", "tolerance must be positive".into());
                }
            }
            Task::OneSided(t) => {
                phi_ok("phi", &t.phi)?;
                if let Some(psi) = &t.psi {
                    phi_ok("psi", psi)?;
                }
            }
            Task::Recover(t) => {
                phi_ok("phi", &t.phi)?;
                phi_ok("psi", &t.psi)?;
            }
            Task::Bench(t) => {
                phi_ok("phi", &t.phi)?;
                if t.n_list.is_empty() {
                    return bad("n_list", "need at least one dimension".into());
                }
                if let Some(n) = t.n_list.iter().find(|n| *n % 2 == 0) {
                    return bad("n_list", format!("dimensions must be odd, got {n}"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_family_with_path() {
        let text = r#"{"task": {"classify-phi": {"phi": {"family": "bogus", "p": 2}}}}"#;
        match ExperimentConfig::from_json_str(text) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "task.classify-phi.phi.family"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_field_value() {
        let text = r#"{"task": {"classify-phi": {"phi": {"family": "pab", "p": 0.5, "alpha": 0, "beta": 0}}}}"#;
        assert!(matches!(ExperimentConfig::from_json_str(text), Err(Error::Config { .. })));
    }

    #[test]
    fn parses_bench() {
        let text = r#"{
            "name": "b",
            "task": {
                "bench": {
                "phi": {"family": "pab", "p": 2, "alpha": 1, "beta": 0},
                "n_list": [3, 5],
                "measure": {"kind": "torus_grid", "n": 64},
                "functions": {"kind": "fourier", "count": 2, "decay": 0.5, "max_freq": 10, "seed": 1},
                "settings": {"bound": "log_power", "seed": 3}
                }
            }
        }"#;
        let cfg = ExperimentConfig::from_json_str(text).unwrap();
        assert_eq!(cfg.task.command(), "bench");
        let back = ExperimentConfig::from_json_str(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn rejects_even_dimension() {
        let text = r#"{"task": {"bench": {"phi": {"family": "power", "p": 2}, "n_list": [4],
            "measure": {"kind": "torus_grid", "n": 32},
            "functions": {"kind": "fourier", "count": 1, "decay": 0.5, "max_freq": 4, "seed": 0}}}}"#;
        match ExperimentConfig::from_json_str(text) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "task.bench.n_list"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
