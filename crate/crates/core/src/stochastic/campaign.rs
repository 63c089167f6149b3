use rand::RngExt;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{path_rng, simulate_stratonovich_pair, GaussianDraw, SmoothPathOracle};
use crate::basis::{Interval, OrthonormalBasis};
use crate::coeffs::{coefficient_matrix, CoefficientMatrix};
use crate::error::{Error, Result};
use crate::kernel::WeightFunction;
use crate::quadrature::QuadratureConfig;
use crate::trace::inner_product;

/// Mixed into the master seed of the Brownian oracle so its increments are
/// independent of expansion draws made with the same seed.
const BROWNIAN_DOMAIN: u64 = 0x6272_6f77_6e69_616e;

const MIN_PATHS: usize = 100;

fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 32 {
        x.iter().sum()
    } else {
        let (a, b) = x.split_at(x.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Sample moments with normal-theory confidence half-widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// `1.96 √(variance / n)`.
    pub ci95: f64,
    /// `3 √(variance / n)`.
    pub ci997: f64,
    /// Standard error of the sample variance from the fourth central moment.
    pub variance_se: f64,
}

impl SampleStats {
    /// Summation is pairwise over the samples in index order, so the result
    /// is fixed by the samples alone.
    pub fn from_samples(x: &[f64]) -> Self {
        let n = x.len();
        let nf = n as f64;
        let mean = pairwise_sum(x) / nf;
        let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
        let sq: Vec<f64> = dev.iter().map(|d| d * d).collect();
        let variance = if n > 1 { pairwise_sum(&sq) / (nf - 1.0) } else { 0.0 };
        let quart: Vec<f64> = sq.iter().map(|s| s * s).collect();
        let m4 = pairwise_sum(&quart) / nf;
        let var_of_var = if n > 3 {
            ((m4 - variance * variance * (nf - 3.0) / (nf - 1.0)) / nf).max(0.0)
        } else {
            f64::NAN
        };
        let se = (variance / nf).sqrt();
        Self {
            n,
            mean,
            variance,
            ci95: 1.96 * se,
            ci997: 3.0 * se,
            variance_se: var_of_var.sqrt(),
        }
    }

    /// `|mean − target| ≤ 3 · standard error`.
    pub fn mean_within_ci997(&self, target: f64) -> bool {
        (self.mean - target).abs() <= self.ci997
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// `ζᵀGζ` when set, `ζᵀGη` otherwise.
    pub same_process: bool,
    /// Leading paths also evaluated by the smooth-path oracle.
    pub oracle_paths: usize,
    pub oracle_mesh: usize,
}

impl McConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self {
            n_paths,
            seed,
            same_process: true,
            oracle_paths: 100,
            oracle_mesh: 2048,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths < MIN_PATHS {
            return Err(Error::invalid("n_paths", format!("must be at least {MIN_PATHS}")));
        }
        if self.oracle_paths > 0 && self.oracle_mesh < 2 {
            return Err(Error::invalid("oracle_mesh", "need at least two cells"));
        }
        Ok(())
    }
}

/// Monte Carlo statistics of `J_N` (or of the Brownian-mesh oracle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    pub experiment: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub basis: Option<String>,
    pub weights: Vec<String>,
    pub seed: u64,
    pub same_process: bool,
    pub n_paths: usize,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mesh: Option<usize>,
    pub mean: f64,
    pub variance: f64,
    pub ci95: f64,
    pub ci997: f64,
    pub variance_se: f64,
    /// `tr G_N`; absent for the Brownian oracle.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target_trace: Option<f64>,
    /// `½ (φ, ψ)`.
    pub target_half_inner: f64,
    /// Exact expectation of the sampled quantity.
    pub expected_mean: f64,
    /// Statistics of the Itô counterpart.
    pub ito: SampleStats,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oracle_rms: Option<f64>,
    pub oracle_paths: usize,
}

impl MCReport {
    pub fn stratonovich(&self) -> SampleStats {
        SampleStats {
            n: self.n_paths,
            mean: self.mean,
            variance: self.variance,
            ci95: self.ci95,
            ci997: self.ci997,
            variance_se: self.variance_se,
        }
    }
}

/// Samples `J_N` over `n_paths` independent draws, with the Itô correction
/// `tr G_N` and an RMS comparison against the smooth-path oracle.
pub fn mc_campaign(
    phi: &WeightFunction,
    psi: &WeightFunction,
    basis: &OrthonormalBasis,
    n: usize,
    cfg: &McConfig,
    quad: &QuadratureConfig,
) -> Result<MCReport> {
    cfg.validate()?;
    let g = coefficient_matrix(phi, psi, basis, n, quad)?;
    campaign_with_matrix(&g, phi, psi, cfg, quad)
}

/// As [`mc_campaign`] with a precomputed matrix.
pub fn campaign_with_matrix(
    g: &CoefficientMatrix,
    phi: &WeightFunction,
    psi: &WeightFunction,
    cfg: &McConfig,
    quad: &QuadratureConfig,
) -> Result<MCReport> {
    cfg.validate()?;
    let n = g.n();
    if [phi.id(), psi.id()] != *g.weight_ids() {
        return Err(Error::invalid("weights", "do not match the coefficient matrix"));
    }
    let samples: Vec<f64> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let d = GaussianDraw::generate(cfg.seed, p, n, !cfg.same_process);
            simulate_stratonovich_pair(g, &d, cfg.same_process)
        })
        .collect::<Result<_>>()?;
    let trace = g.trace();
    let strat = SampleStats::from_samples(&samples);
    let shift = if cfg.same_process { trace } else { 0.0 };
    let ito: Vec<f64> = samples.iter().map(|j| j - shift).collect();

    let oracle_paths = cfg.oracle_paths.min(cfg.n_paths);
    let oracle_rms = if oracle_paths > 0 {
        let oracle = SmoothPathOracle::new(phi, psi, g.basis(), n, cfg.oracle_mesh)?;
        let sq: Vec<f64> = (0..oracle_paths as u64)
            .into_par_iter()
            .map(|p| {
                let d = GaussianDraw::generate(cfg.seed, p, n, !cfg.same_process);
                let inner = if cfg.same_process { &d.zeta } else { d.eta.as_ref().expect("second process") };
                let v = oracle.evaluate(&d.zeta, inner)?;
                Ok((v - samples[p as usize]).powi(2))
            })
            .collect::<Result<_>>()?;
        Some((pairwise_sum(&sq) / oracle_paths as f64).sqrt())
    } else {
        None
    };

    Ok(MCReport {
        experiment: "simulate".into(),
        basis: Some(g.basis().id()),
        weights: g.weight_ids().to_vec(),
        seed: cfg.seed,
        same_process: cfg.same_process,
        n_paths: cfg.n_paths,
        n: Some(n),
        mesh: None,
        mean: strat.mean,
        variance: strat.variance,
        ci95: strat.ci95,
        ci997: strat.ci997,
        variance_se: strat.variance_se,
        target_trace: Some(trace),
        target_half_inner: 0.5 * inner_product(phi, psi, quad)?,
        expected_mean: shift,
        ito: SampleStats::from_samples(&ito),
        oracle_rms,
        oracle_paths,
    })
}

/// Iterated Stratonovich integral over true Brownian increments on a uniform
/// mesh, `Σ_k φ(m_k) ΔW_k [Σ_{l<k} ψ(m_l) ΔW_l + ½ ψ(m_k) ΔW_k]` with
/// midpoints `m_k`. The Itô statistics drop the half-increment term.
pub fn brownian_midpoint_oracle(
    phi: &WeightFunction,
    psi: &WeightFunction,
    mesh: usize,
    seed: u64,
    n_paths: usize,
    quad: &QuadratureConfig,
) -> Result<MCReport> {
    if mesh < 64 {
        return Err(Error::invalid("mesh", "must be at least 64"));
    }
    if n_paths < MIN_PATHS {
        return Err(Error::invalid("n_paths", format!("must be at least {MIN_PATHS}")));
    }
    let iv: Interval = phi.interval();
    if !psi.interval().same_as(&iv) {
        return Err(Error::IntervalMismatch);
    }
    let h = iv.length() / mesh as f64;
    let sqrt_h = h.sqrt();
    let mid: Vec<(f64, f64)> = (0..mesh)
        .map(|k| {
            let m = iv.start() + h * (k as f64 + 0.5);
            (phi.value(m), psi.value(m))
        })
        .collect();
    let pairs: Vec<(f64, f64)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(seed ^ BROWNIAN_DOMAIN, p);
            let (mut running, mut strat, mut ito) = (0.0, 0.0, 0.0);
            for &(f, g) in &mid {
                let dw = sqrt_h * rng.sample::<f64, _>(StandardNormal);
                let left = f * dw * running;
                ito += left;
                strat += left + 0.5 * f * g * dw * dw;
                running += g * dw;
            }
            (strat, ito)
        })
        .collect();
    let (strat, ito): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let s = SampleStats::from_samples(&strat);
    let half = 0.5 * inner_product(phi, psi, quad)?;
    Ok(MCReport {
        experiment: "brownian-midpoint".into(),
        basis: None,
        weights: vec![phi.id(), psi.id()],
        seed,
        same_process: true,
        n_paths,
        n: None,
        mesh: Some(mesh),
        mean: s.mean,
        variance: s.variance,
        ci95: s.ci95,
        ci997: s.ci997,
        variance_se: s.variance_se,
        target_trace: None,
        target_half_inner: half,
        expected_mean: half,
        ito: SampleStats::from_samples(&ito),
        oracle_rms: None,
        oracle_paths: 0,
    })
}
