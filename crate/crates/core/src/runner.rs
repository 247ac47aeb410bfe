//! Executes experiment configs and collects reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{trig_of_dim, ExperimentConfig, SamplingSpec, Task};
use crate::density::{change_of_density, kw_measure, l2_one_sided, lewis_basis, one_sided_pipeline};
use crate::discretization::{monte_carlo_success, sample_indices};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::norm::{luxemburg_norm, lp_norm, modular};
use crate::phi::{check_classification, envelope_function, estimate_indices, log_grid, r_constant, PhiSpec, GRID_HI, GRID_LO, GRID_SIZE};
use crate::recovery::{domination_constant, recovery_error_check, sampling_number_experiment, write_bench_csv, RecoveryInstance};
use crate::seeding::{derive_seed, rng_for};
use crate::subspace::Subspace;

/// A named pass/fail check with the measured value and its threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
}

impl Certificate {
    fn upper(name: &str, value: f64, threshold: f64) -> Self {
        Certificate {
            name: name.into(),
            passed: value <= threshold,
            value: finite(value),
            threshold: finite(threshold),
        }
    }

    fn flag(name: &str, passed: bool) -> Self {
        Certificate {
            name: name.into(),
            passed,
            value: None,
            threshold: None,
        }
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Everything a run produced except the artifact files themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub command: String,
    /// Measured constants keyed by `stage.quantity`; non-finite values are `null`.
    pub measured: BTreeMap<String, Option<f64>>,
    pub certificates: Vec<Certificate>,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
    pub versions: BTreeMap<String, String>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.certificates.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// A file body produced by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: ExperimentReport,
    pub artifacts: Vec<Artifact>,
}

#[derive(Default)]
struct Collector {
    measured: BTreeMap<String, Option<f64>>,
    certificates: Vec<Certificate>,
    artifacts: Vec<Artifact>,
}

impl Collector {
    fn measure(&mut self, key: &str, value: f64) {
        self.measured.insert(key.into(), finite(value));
    }

    fn certify(&mut self, c: Certificate) {
        self.certificates.push(c);
    }

    fn artifact(&mut self, name: &str, content: String) {
        self.artifacts.push(Artifact {
            name: name.into(),
            content,
        });
    }
}

fn csv_string(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn rows_csv<S: Serialize>(rows: &[S]) -> Result<String> {
    csv_string(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    })
}

fn measure_csv(m: &DiscreteMeasure) -> Result<String> {
    csv_string(|buf| m.write_csv(buf))
}

/// Runs the task in memory; `base` resolves relative paths inside the config.
pub fn execute(cfg: &ExperimentConfig, base: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = Collector::default();
    match &cfg.task {
        Task::ClassifyPhi(t) => {
            let phi = t.phi.build()?;
            let grid = log_grid(GRID_LO, GRID_HI, t.grid_size.unwrap_or(GRID_SIZE));
            let idx = estimate_indices(&phi, &grid)?;
            let report = check_classification(&phi, &grid);
            out.measure("indices.p_hat", idx.p_hat);
            out.measure("indices.q_hat", idx.q_hat);
            out.measure("indices.lower", phi.lower_index);
            out.measure("indices.upper", phi.upper_index);
            out.measure("classification.a_needed", report.a_needed);
            out.measure("classification.b_needed", report.b_needed);
            out.measure("r_constant", r_constant(&phi, phi.lower_index)?);
            out.certify(Certificate::flag("classification", report.passed));
            out.certify(Certificate::flag(
                "index_band",
                idx.p_hat >= phi.lower_index - 1e-6 && idx.q_hat <= phi.upper_index + 1e-6,
            ));
        }
        Task::Norm(t) => {
            let phi = t.phi.build()?;
            let mu = t.measure.build(base)?;
            let fs = t.functions.build(&mu, base)?;
            let power = match t.phi {
                PhiSpec::Power { p } => Some(p),
                PhiSpec::Pab { p, alpha, beta } if alpha == 0.0 && beta == 0.0 => Some(p),
                _ => None,
            };
            #[derive(Serialize)]
            struct Row {
                index: usize,
                luxemburg: f64,
                modular: f64,
                lp: Option<f64>,
            }
            let mut rows = Vec::new();
            let mut worst_rel = 0.0f64;
            for (i, f) in fs.iter().enumerate() {
                let lux = luxemburg_norm(&phi, f, &mu, t.tol)?;
                let lp = power.map(|p| lp_norm(f, &mu, p)).transpose()?;
                if let Some(l) = lp {
                    if l > 0.0 {
                        worst_rel = worst_rel.max((lux - l).abs() / l);
                    }
                }
                rows.push(Row {
                    index: i,
                    luxemburg: lux,
                    modular: modular(&phi, f, &mu)?,
                    lp,
                });
            }
            out.certify(Certificate::flag("finite", rows.iter().all(|r| r.luxemburg.is_finite())));
            if power.is_some() {
                out.measure("norm.max_relative_lp_gap", worst_rel);
                out.certify(Certificate::upper("lp_agreement", worst_rel, 1e-8));
            }
            out.artifact("norms.csv", rows_csv(&rows)?);
        }
        Task::Discretize(t) => {
            let phi = t.phi.build()?;
            let mu = t.measure.build(base)?;
            let x = t.subspace.build(&mu)?;
            #[derive(Serialize)]
            struct Row {
                m: usize,
                success_fraction: f64,
                trials: usize,
                eps: f64,
                seed: u64,
            }
            let mut rows = Vec::new();
            for &m in &t.m_list {
                let seed = derive_seed(t.seed, m as u64);
                let frac = monte_carlo_success(&phi, &x, &mu, m, t.eps, t.trials, seed, &t.ascent)?;
                rows.push(Row {
                    m,
                    success_fraction: frac,
                    trials: t.trials,
                    eps: t.eps,
                    seed,
                });
            }
            let monotone = rows.windows(2).all(|w| w[1].success_fraction >= w[0].success_fraction);
            out.certify(Certificate::flag("nondecreasing", monotone));
            if let Some(last) = rows.last() {
                out.measure("discretize.final_success", last.success_fraction);
            }
            out.artifact("discretize.csv", rows_csv(&rows)?);
        }
        Task::Lewis(t) => {
            let phi = t.phi.build()?;
            let mu = t.measure.build(base)?;
            let x = t.subspace.build(&mu)?;
            let sol = lewis_basis(&phi, &x, &mu, t.tol)?;
            let cod = change_of_density(&phi, &sol)?;
            out.measure("lewis.c", sol.c);
            out.measure("lewis.c_dim", sol.c_dim());
            out.measure("lewis.iterations", sol.iterations as f64);
            out.measure("change_of_density.max_christoffel", cod.max_christoffel);
            out.certify(Certificate::upper("orthogonality", sol.orthogonality_residual, t.tol));
            out.certify(Certificate::upper("normalization", sol.normalization_residual, t.tol));
            out.certify(Certificate::flag(
                "sandwich",
                sol.c_dim() >= phi.lower_index - t.tol && sol.c_dim() <= phi.upper_index + t.tol,
            ));
            out.certify(Certificate::upper("tilde_orthonormality", cod.orthonormality_residual, 1e-6));
            out.certify(Certificate::upper(
                "tilde_christoffel",
                cod.max_christoffel,
                sol.dim as f64 * (1.0 + 1e-8),
            ));
            out.artifact("lewis.json", sol.to_json()?);
        }
        Task::KwDesign(t) => {
            let mu = t.measure.build(base)?;
            let x = t.subspace.build(&mu)?;
            let d = kw_measure(&x, &mu, t.tol)?;
            out.measure("kw.max_sigma", d.max_sigma);
            out.measure("kw.iterations", d.iterations as f64);
            out.certify(Certificate::upper("max_sigma", d.max_sigma, x.dim() as f64 * (1.0 + t.tol)));
            out.artifact("kw_design.csv", measure_csv(&d.measure)?);
        }
        Task::OneSided(t) => {
            let phi = t.phi.build()?;
            let psi = match &t.psi {
                Some(s) => s.build()?,
                None if phi.is_square() => phi.clone(),
                None => envelope_function(&phi, &log_grid(1e-6, 1e6, 400)),
            };
            let mu = t.measure.build(base)?;
            let x = t.subspace.build(&mu)?;
            let r = one_sided_pipeline(&phi, &psi, &x, &mu, &t.pipeline)?;
            let total: f64 = r.weights.iter().sum();
            out.measure("pipeline.c_hat", r.c_hat);
            out.measure("pipeline.m0_constant", r.m0_constant);
            out.measure("pipeline.m_phi_psi", r.m_phi_psi);
            out.measure("pipeline.lewis_c_dim", r.lewis_c_dim);
            out.measure("pipeline.weight_check", r.weight_check);
            out.certify(Certificate::upper("weight_check", r.weight_check, 1.0));
            out.certify(Certificate::upper("weight_sum", (total - 1.0).abs(), 1e-10));
            out.artifact("one_sided.csv", measure_csv(&r.measure()?)?);
        }
        Task::Recover(t) => {
            let phi = t.phi.build()?;
            let psi = t.psi.build()?;
            let mu = t.measure.build(base)?;
            let x = t.subspace.build(&mu)?;
            let fs = t.functions.build(&mu, base)?;
            let (samples, weights) = sampling(&t.sampling, &x, &mu)?;
            let nu = DiscreteMeasure::new(samples.iter().map(|&j| mu.point(j).to_vec()).collect(), weights.clone())?;
            let d = domination_constant(&phi, &psi, &x, &mu, &nu, &t.ascent, &mut rng_for(0, 0))?;
            out.measure("recover.d", d);
            out.measure("recover.m", samples.len() as f64);
            #[derive(Serialize)]
            struct Row {
                index: usize,
                error: f64,
                distance: f64,
                ratio: f64,
                constant: f64,
            }
            let mut rows = Vec::new();
            for (i, f) in fs.into_iter().enumerate() {
                let inst = RecoveryInstance::new(f, x.clone(), samples.clone(), weights.clone(), phi.clone(), psi.clone())?;
                let r = recovery_error_check(&inst, &mu, d, t.c_phi, t.c_psi, t.tol)?;
                rows.push(Row {
                    index: i,
                    error: r.error,
                    distance: r.distance,
                    ratio: r.ratio,
                    constant: r.constant,
                });
            }
            let worst = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
            out.measure("recover.worst_ratio", worst);
            if let Some(r) = rows.first() {
                out.certify(Certificate::upper("ratio", worst, r.constant));
            }
            out.artifact("recover.csv", rows_csv(&rows)?);
        }
        Task::Bench(t) => {
            let phi = t.phi.build()?;
            let mu = t.measure.build(base)?;
            let fs = t.functions.build(&mu, base)?;
            let spaces: Vec<Subspace> = t.n_list.iter().map(|&n| trig_of_dim(n, &mu)).collect::<Result<_>>()?;
            let p = t.p.unwrap_or(phi.lower_index);
            let rows = sampling_number_experiment(&fs, &mu, &phi, p, &spaces, &t.settings)?;
            let fitted: Vec<f64> = rows.iter().map(|r| r.fitted_c).collect();
            let hi = fitted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = fitted.iter().cloned().fold(f64::INFINITY, f64::min);
            out.measure("bench.fitted_c_max", hi);
            out.measure("bench.fitted_c_min", lo);
            out.certify(Certificate::flag("finite", fitted.iter().all(|c| c.is_finite())));
            if let Some(s) = t.max_spread {
                out.certify(Certificate::upper("fitted_c_spread", hi / lo, s));
            }
            out.artifact("bench.csv", csv_string(|buf| write_bench_csv(&rows, buf))?);
        }
    }
    let mut versions = BTreeMap::new();
    versions.insert("orlicz".to_string(), env!("CARGO_PKG_VERSION").to_string());
    let report = ExperimentReport {
        config: cfg.clone(),
        command: cfg.task.command().into(),
        measured: out.measured,
        certificates: out.certificates,
        outputs: out.artifacts.iter().map(|a| a.name.clone()).collect(),
        wall_time_s: start.elapsed().as_secs_f64(),
        versions,
    };
    Ok(RunOutput {
        report,
        artifacts: out.artifacts,
    })
}

fn sampling(spec: &SamplingSpec, x: &Subspace, mu: &DiscreteMeasure) -> Result<(Vec<usize>, Vec<f64>)> {
    let idx = match spec {
        SamplingSpec::Random { m, seed } => sample_indices(mu, *m, &mut rng_for(*seed, 0))?,
        SamplingSpec::L2OneSided { config } => l2_one_sided(x, mu, config)?.points(),
    };
    let w = vec![1.0 / idx.len() as f64; idx.len()];
    Ok((idx, w))
}

/// Runs the task and writes artifacts plus `report.json` into the configured output directory.
pub fn run(cfg: &ExperimentConfig, base: &Path) -> Result<RunOutput> {
    let mut output = execute(cfg, base)?;
    if let Some(dir) = &cfg.output_dir {
        let dir: PathBuf = base.join(dir);
        std::fs::create_dir_all(&dir)?;
        for a in &output.artifacts {
            std::fs::write(dir.join(&a.name), &a.content)?;
        }
        output.report.outputs.push("report.json".into());
        std::fs::write(dir.join("report.json"), output.report.to_json()?)?;
    }
    Ok(output)
}
