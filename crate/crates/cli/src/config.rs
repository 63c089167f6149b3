//! Experiment configuration from flags and an optional TOML file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Coeffs,
    Theorem2,
    Theorem1,
    Eq7,
    BasisIndependence,
    TensorTrace,
    KernelTrace,
    Simulate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Coeffs => "coeffs",
            Experiment::Theorem2 => "theorem2",
            Experiment::Theorem1 => "theorem1",
            Experiment::Eq7 => "eq7",
            Experiment::BasisIndependence => "basis-independence",
            Experiment::TensorTrace => "tensor-trace",
            Experiment::KernelTrace => "kernel-trace",
            Experiment::Simulate => "simulate",
        }
    }
}

/// Every setting an experiment can read. Flag names and TOML keys coincide.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Declarative config file; flags given on the command line win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(skip)]
    pub experiment: Option<Experiment>,

    /// Interval start.
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    /// Interval end.
    #[arg(long, allow_hyphen_values = true)]
    pub end: Option<f64>,

    /// legendre, fourier or haar.
    #[arg(long)]
    pub basis: Option<String>,
    /// Comma-separated families for basis-independence.
    #[arg(long, value_delimiter = ',')]
    pub bases: Option<Vec<String>>,

    /// Weight spec: poly:c0,c1,… | trig:k,s,c;… | table:@file.csv
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub psi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub psi1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub psi2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub psi3: Option<String>,

    /// min, max, cexp, symmetrized, volterra or rank-one.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub kernel_n: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kernel_m: Option<i64>,

    /// Truncation size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Largest partial sum for trace experiments.
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Block sizes for the non-neighbor tensor contraction.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Explicit ε schedule, strictly decreasing.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,

    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    /// Sample ζᵀGη with a second independent process.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub two_process: Option<bool>,
    /// Run the Brownian midpoint oracle instead of the expansion.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub brownian: Option<bool>,
    #[arg(long)]
    pub mesh: Option<usize>,
    #[arg(long)]
    pub oracle_paths: Option<usize>,

    /// Gauss nodes per quadrature panel.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Minimum quadrature panels.
    #[arg(long)]
    pub panels: Option<usize>,
    /// Accepted quadrature error estimate.
    #[arg(long)]
    pub quad_tol: Option<f64>,

    /// Output stem; writes <stem>.json and <stem>.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Coefficient cache root (defaults to $STRC_CACHE_DIR).
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl ExperimentConfig {
    pub fn from_toml(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config `{}`", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config `{}`", path.display()))
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overlaid(mut self, flags: ExperimentConfig) -> Self {
        overlay!(self, flags;
            experiment, t0, end, basis, bases, phi, psi, psi1, psi2, psi3,
            kernel, kernel_n, kernel_m, n, nmax, sizes, tol, eps, seed, paths,
            two_process, brownian, mesh, oracle_paths, nodes, panels, quad_tol,
            out, workers, cache_dir,
        );
        self
    }

    /// Flags layered over the config file they name, if any.
    pub fn resolve(flags: ExperimentConfig) -> Result<Self> {
        match &flags.config {
            Some(path) => Ok(Self::from_toml(path)?.overlaid(flags)),
            None => Ok(flags),
        }
    }

    /// Checks fields shared by all experiments.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n", self.n), ("nmax", self.nmax), ("paths", self.paths), ("mesh", self.mesh), ("workers", self.workers)] {
            if v == Some(0) {
                bail!("invalid `{name}`: must be positive");
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                bail!("invalid `tol`: must be positive and finite");
            }
        }
        if let Some(eps) = &self.eps {
            if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                bail!("invalid `eps`: values must be positive and finite");
            }
            if eps.windows(2).any(|w| w[1] >= w[0]) {
                bail!("invalid `eps`: schedule must be strictly decreasing");
            }
        }
        if let Some(sizes) = &self.sizes {
            if sizes.is_empty() || sizes.contains(&0) {
                bail!("invalid `sizes`: block sizes must be positive");
            }
        }
        Ok(())
    }
}
