//! Dispatches a resolved configuration to the library and renders reports.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::Value;
use strc_core::coeffs::{cached_coefficient_matrix, CACHE_DIR_ENV};
use strc_core::report::{json_report, to_json_text, CoefficientsReport, CsvTable, EnvBlock, KernelTraceReport, TensorTraceReport};
use strc_core::stochastic::campaign_with_matrix;
use strc_core::trace::{tensor_neighbor_trace, tensor_nonneighbor_trace, NeighborPair};
use strc_core::*;

use crate::config::{Experiment, ExperimentConfig};
use crate::weights::parse_weight;

/// What a finished experiment hands back to `main`.
pub struct Finished {
    pub json: Value,
    pub csv: String,
    pub converged: bool,
    pub summary: String,
}

struct Payload {
    json: Value,
    csv: String,
    converged: bool,
    summary: String,
}

impl Payload {
    fn new<T: Serialize + CsvTable>(r: &T, converged: bool, summary: String) -> Result<Self> {
        Ok(Self {
            json: serde_json::to_value(r)?,
            csv: r.csv(),
            converged,
            summary,
        })
    }
}

fn missing(field: &str, exp: Experiment) -> anyhow::Error {
    anyhow!("missing required option `--{field}` for {}", exp.name())
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    exp: Experiment,
    interval: Interval,
    quad: QuadratureConfig,
}

impl Ctx<'_> {
    fn weight(&self, field: &str, spec: Option<&String>) -> Result<WeightFunction> {
        let spec = spec.ok_or_else(|| missing(field, self.exp))?;
        parse_weight(field, spec, self.interval)
    }

    fn weight_or_one(&self, field: &str, spec: Option<&String>) -> Result<WeightFunction> {
        match spec {
            Some(s) => parse_weight(field, s, self.interval),
            None => Ok(WeightFunction::constant(self.interval, 1.0)),
        }
    }

    fn family(&self, name: &str, field: &str) -> Result<BasisFamily> {
        name.parse().map_err(|_| anyhow!("invalid `{field}`: unknown basis family `{name}`"))
    }

    fn basis(&self, n: usize) -> Result<OrthonormalBasis> {
        let name = self.cfg.basis.as_deref().unwrap_or("legendre");
        let fam = self.family(name, "basis")?;
        Ok(OrthonormalBasis::with_count(fam, self.interval, n)?)
    }

    /// `--nmax`, falling back to `--n`.
    fn nmax(&self, default: usize) -> usize {
        self.cfg.nmax.or(self.cfg.n).unwrap_or(default)
    }

    /// `--n`, falling back to `--nmax`.
    fn n(&self, default: usize) -> usize {
        self.cfg.n.or(self.cfg.nmax).unwrap_or(default)
    }

    fn tol(&self, default: f64) -> f64 {
        self.cfg.tol.unwrap_or(default)
    }

    fn schedule(&self) -> Vec<f64> {
        self.cfg.eps.clone().unwrap_or_else(|| default_epsilon_schedule(self.interval))
    }

    fn cache_dir(&self) -> Option<PathBuf> {
        self.cfg.cache_dir.clone().or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
    }

    fn matrix(&self, phi: &WeightFunction, psi: &WeightFunction, basis: &OrthonormalBasis, n: usize) -> Result<CoefficientMatrix> {
        match self.cache_dir() {
            Some(dir) => {
                std::fs::create_dir_all(&dir).with_context(|| format!("cannot create cache directory `{}`", dir.display()))?;
                Ok(cached_coefficient_matrix(&dir, phi, psi, basis, n, &self.quad)?)
            }
            None => Ok(coefficient_matrix(phi, psi, basis, n, &self.quad)?),
        }
    }

    fn kernel(&self) -> Result<KernelSpec> {
        let name = self.cfg.kernel.as_deref().ok_or_else(|| missing("kernel", self.exp))?;
        let int = |field: &str, v: Option<i64>| v.ok_or_else(|| missing(field, self.exp));
        let unsigned = |field: &str, v: Option<i64>| -> Result<u32> {
            let v = int(field, v)?;
            u32::try_from(v).map_err(|_| anyhow!("invalid `{field}`: must be a non-negative integer"))
        };
        let signed = |field: &str, v: Option<i64>| -> Result<i32> {
            i32::try_from(int(field, v)?).map_err(|_| anyhow!("invalid `{field}`: out of range"))
        };
        let (kn, km) = (self.cfg.kernel_n, self.cfg.kernel_m);
        let kind = match name {
            "min" => KernelKind::MonomialMin {
                n: unsigned("kernel-n", kn)?,
                m: unsigned("kernel-m", km)?,
            },
            "max" => KernelKind::MonomialMax {
                n: unsigned("kernel-n", kn)?,
                m: unsigned("kernel-m", km)?,
            },
            "cexp" => KernelKind::ComplexExponential {
                n: signed("kernel-n", kn)?,
                m: signed("kernel-m", km)?,
            },
            "symmetrized" | "volterra" | "rank-one" => {
                let phi = self.weight("phi", self.cfg.phi.as_ref())?;
                let psi = self.weight("psi", self.cfg.psi.as_ref())?;
                return Ok(match name {
                    "symmetrized" => KernelSpec::symmetrized(phi, psi)?,
                    "volterra" => KernelSpec::volterra(phi, psi)?,
                    _ => KernelSpec::rank_one(phi, psi)?,
                });
            }
            other => bail!("invalid `kernel`: unknown kind `{other}` (min, max, cexp, symmetrized, volterra, rank-one)"),
        };
        KernelSpec::new(kind, self.interval).map_err(|e| anyhow!("invalid `kernel`: {e}"))
    }
}

fn verdict(converged: bool) -> &'static str {
    if converged {
        "converged"
    } else {
        "NOT converged"
    }
}

fn trace_payload(r: &TraceReport) -> Result<Payload> {
    let summary = format!(
        "{}: {} (N={} sum {:.10} target {:.10} error {:.3e}, tol {:.1e})",
        r.experiment,
        verdict(r.converged),
        r.n_values.last().copied().unwrap_or(0),
        r.last_sum(),
        r.target,
        r.last_error(),
        r.tolerance
    );
    Payload::new(r, r.converged, summary)
}

fn execute(ctx: &Ctx) -> Result<Payload> {
    let cfg = ctx.cfg;
    let q = &ctx.quad;
    match ctx.exp {
        Experiment::Coeffs => {
            let phi = ctx.weight("phi", cfg.phi.as_ref())?;
            let psi = ctx.weight("psi", cfg.psi.as_ref())?;
            let n = ctx.n(16);
            let g = ctx.matrix(&phi, &psi, &ctx.basis(n)?, n)?;
            let r = CoefficientsReport::from(&g);
            Payload::new(&r, true, format!("coeffs: {n}x{n} matrix, trace {:.12}", r.trace))
        }
        Experiment::Theorem2 => {
            let phi = ctx.weight("phi", cfg.phi.as_ref())?;
            let psi = ctx.weight("psi", cfg.psi.as_ref())?;
            let n = ctx.nmax(128);
            trace_payload(&verify_theorem2(&phi, &psi, &ctx.basis(n)?, n, ctx.tol(1e-3), q)?)
        }
        Experiment::Eq7 => {
            let phi = ctx.weight("phi", cfg.phi.as_ref())?;
            let psi = ctx.weight("psi", cfg.psi.as_ref())?;
            let n = ctx.nmax(128);
            trace_payload(&verify_eq7(&phi, &psi, &ctx.basis(n)?, n, ctx.tol(1e-3), q)?)
        }
        Experiment::Theorem1 => {
            let spec = ctx.kernel()?;
            let n = ctx.nmax(128);
            trace_payload(&verify_theorem1(&spec, &ctx.basis(n)?, n, &ctx.schedule(), ctx.tol(2e-3), q)?)
        }
        Experiment::BasisIndependence => {
            let phi = ctx.weight("phi", cfg.phi.as_ref())?;
            let psi = ctx.weight("psi", cfg.psi.as_ref())?;
            let n = ctx.nmax(128);
            let names = cfg
                .bases
                .clone()
                .unwrap_or_else(|| vec!["legendre".into(), "fourier".into(), "haar".into()]);
            let bases = names
                .iter()
                .map(|b| Ok(OrthonormalBasis::with_count(ctx.family(b, "bases")?, ctx.interval, n)?))
                .collect::<Result<Vec<_>>>()?;
            let r = basis_independence(&phi, &psi, &bases, n, ctx.tol(2e-3), q)?;
            let spread = r.pairs.iter().map(|p| p.difference).fold(0.0, f64::max);
            let summary = format!("basis-independence: {} (largest pairwise difference {spread:.3e})", verdict(r.converged));
            Payload::new(&r, r.converged, summary)
        }
        Experiment::KernelTrace => {
            let spec = ctx.kernel()?;
            let averaged = spec.diagonal_trace(&ctx.schedule(), q)?;
            let summary = format!("kernel-trace: extrapolated limit {:.10}", averaged.limit);
            let r = KernelTraceReport {
                experiment: "kernel-trace".into(),
                kernel: spec.id(),
                averaged,
            };
            Payload::new(&r, true, summary)
        }
        Experiment::TensorTrace => {
            let w = [
                ctx.weight_or_one("psi1", cfg.psi1.as_ref())?,
                ctx.weight_or_one("psi2", cfg.psi2.as_ref())?,
                ctx.weight_or_one("psi3", cfg.psi3.as_ref())?,
            ];
            let psi = [&w[0], &w[1], &w[2]];
            let n = ctx.n(16);
            let sizes = cfg.sizes.clone().unwrap_or_else(|| vec![8, 16, 32]);
            let big = sizes.iter().copied().max().unwrap_or(n);
            let tensor = |n: usize| -> Result<CoefficientTensor> { Ok(tensor_coefficients(psi[0], psi[1], psi[2], &ctx.basis(n)?, n, q)?) };
            let t = tensor(n)?;
            let neighbor = [NeighborPair::First, NeighborPair::Second]
                .into_iter()
                .map(|p| tensor_neighbor_trace(&t, psi, p, ctx.tol(5e-3)))
                .collect::<strc_core::Result<Vec<_>>>()?;
            let tb = if big == n { t } else { tensor(big)? };
            let nonneighbor = sizes
                .iter()
                .map(|&s| tensor_nonneighbor_trace(&tb, s))
                .collect::<strc_core::Result<Vec<_>>>()?;
            let decreasing = nonneighbor.windows(2).all(|w| w[1].max_abs < w[0].max_abs);
            let converged = decreasing && neighbor.iter().all(|r| r.converged);
            let worst = neighbor.iter().map(|r| r.max_error).fold(0.0, f64::max);
            let summary = format!(
                "tensor-trace: {} (neighbor max error {worst:.3e}; non-neighbor maxima {})",
                verdict(converged),
                nonneighbor
                    .iter()
                    .map(|r| format!("N={}: {:.3e}", r.n, r.max_abs))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            let r = TensorTraceReport {
                experiment: "tensor-trace".into(),
                neighbor,
                nonneighbor,
                nonneighbor_decreasing: decreasing,
                converged,
            };
            Payload::new(&r, converged, summary)
        }
        Experiment::Simulate => {
            let phi = ctx.weight("phi", cfg.phi.as_ref())?;
            let psi = ctx.weight("psi", cfg.psi.as_ref())?;
            let paths = cfg.paths.unwrap_or(10_000);
            let seed = cfg.seed.unwrap_or(0);
            let r = if cfg.brownian.unwrap_or(false) {
                brownian_midpoint_oracle(&phi, &psi, cfg.mesh.unwrap_or(1 << 14), seed, paths, q)?
            } else {
                let n = ctx.n(64);
                let g = ctx.matrix(&phi, &psi, &ctx.basis(n)?, n)?;
                let mut mc = McConfig::new(paths, seed);
                mc.same_process = !cfg.two_process.unwrap_or(false);
                mc.oracle_paths = cfg.oracle_paths.unwrap_or(mc.oracle_paths).min(paths);
                mc.oracle_mesh = cfg.mesh.unwrap_or(mc.oracle_mesh);
                campaign_with_matrix(&g, &phi, &psi, &mc, q)?
            };
            let ok = r.stratonovich().mean_within_ci997(r.expected_mean);
            let summary = format!(
                "{}: mean {:.6} ± {:.6} (99.7%), expected {:.6}, variance {:.6}; {}",
                r.experiment,
                r.mean,
                r.ci997,
                r.expected_mean,
                r.variance,
                if ok { "within band" } else { "OUTSIDE band" }
            );
            Payload::new(&r, ok, summary)
        }
    }
}

/// Runs the configured experiment on a pool of `workers` threads.
pub fn run(cfg: &ExperimentConfig) -> Result<Finished> {
    cfg.validate()?;
    let exp = cfg
        .experiment
        .ok_or_else(|| anyhow!("missing experiment: name one on the command line or set `experiment` in the config file"))?;
    let interval = Interval::new(cfg.t0.unwrap_or(0.0), cfg.end.unwrap_or(1.0)).map_err(|e| anyhow!("invalid `end`: {e}"))?;
    let defaults = QuadratureConfig::default();
    let quad = QuadratureConfig {
        panels: cfg.panels.unwrap_or(defaults.panels),
        nodes_per_panel: cfg.nodes.unwrap_or(defaults.nodes_per_panel),
        tolerance: cfg.quad_tol.unwrap_or(defaults.tolerance),
    };
    quad.validate()?;
    let workers = cfg
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("cannot start worker pool")?;

    let ctx = Ctx { cfg, exp, interval, quad };
    let start = Instant::now();
    let payload = pool.install(|| execute(&ctx))?;
    let env = EnvBlock::new(start.elapsed().as_secs_f64() * 1e3, workers);
    let json = json_report(&payload.json, &env)?;

    if let Some(stem) = &cfg.out {
        if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("cannot create `{}`", dir.display()))?;
        }
        let json_path = stem.with_extension("json");
        let csv_path = stem.with_extension("csv");
        std::fs::write(&json_path, to_json_text(&json)).with_context(|| format!("cannot write `{}`", json_path.display()))?;
        std::fs::write(&csv_path, &payload.csv).with_context(|| format!("cannot write `{}`", csv_path.display()))?;
    }
    Ok(Finished {
        json,
        csv: payload.csv,
        converged: payload.converged,
        summary: payload.summary,
    })
}
