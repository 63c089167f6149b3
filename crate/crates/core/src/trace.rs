//! Trace identities as checkable diagnostics.
//!
//! * Matrix-trace partial sums `Σ_{i<N} G_ii` against `½ (φ, ψ)`.
//! * Matrix trace `Σ F_ii` of a trace-class kernel against its averaged
//!   diagonal integral.
//! * The symmetric sum `Σ G_ii(φ,ψ) + G_ii(ψ,φ)` against `(φ, ψ)`.
//! * Basis independence of the partial sums.
//! * Contractions of the three-index tensor over neighbor and non-neighbor
//!   index pairs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::basis::{Interval, OrthonormalBasis};
use crate::coeffs::{coefficient_diagonal, kernel_diagonal, partial_sums, CoefficientTensor};
use crate::error::{Error, Result};
use crate::kernel::{KernelKind, KernelSpec, WeightFunction, WeightRepr};
use crate::quadrature::{GaussRule, Grid, QuadratureConfig};

/// Partial sums of a trace series against a target value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub experiment: String,
    pub basis: String,
    pub weights: Vec<String>,
    #[serde(rename = "N_values")]
    pub n_values: Vec<usize>,
    pub partial_sums: Vec<f64>,
    pub target: f64,
    /// `|partial_sums[k] − target|`; complex series use the modulus.
    pub errors: Vec<f64>,
    pub tolerance: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub partial_sums_imag: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target_imag: Option<f64>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl TraceReport {
    fn new(experiment: &str, basis: &OrthonormalBasis, weights: Vec<String>, sums: Vec<f64>, target: f64, tol: f64) -> Self {
        let errors: Vec<f64> = sums.iter().map(|s| (s - target).abs()).collect();
        let converged = errors.last().is_some_and(|&e| e <= tol);
        Self {
            experiment: experiment.into(),
            basis: basis.id(),
            weights,
            n_values: (1..=sums.len()).collect(),
            partial_sums: sums,
            target,
            errors,
            tolerance: tol,
            converged,
            partial_sums_imag: None,
            target_imag: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn last_sum(&self) -> f64 {
        *self.partial_sums.last().expect("at least one partial sum")
    }

    pub fn last_error(&self) -> f64 {
        *self.errors.last().expect("at least one partial sum")
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid("tolerance", "must be positive"));
    }
    Ok(())
}

/// `(φ, ψ) = ∫ φ ψ dt`.
pub fn inner_product(phi: &WeightFunction, psi: &WeightFunction, quad: &QuadratureConfig) -> Result<f64> {
    if !phi.interval().same_as(&psi.interval()) {
        return Err(Error::IntervalMismatch);
    }
    let res = phi.resolution().times(&psi.resolution());
    let grid = Grid::build(phi.interval(), quad, &res)?;
    Ok(grid.integrate(|t| phi.value(t) * psi.value(t)))
}

/// `Σ_{i<N} G_ii` for `N = 1..=N_max` against `½ (φ, ψ)`.
pub fn verify_theorem2(
    phi: &WeightFunction,
    psi: &WeightFunction,
    basis: &OrthonormalBasis,
    n_max: usize,
    tol: f64,
    quad: &QuadratureConfig,
) -> Result<TraceReport> {
    check_tol(tol)?;
    let diag = coefficient_diagonal(phi, psi, basis, n_max, quad)?;
    let target = 0.5 * inner_product(phi, psi, quad)?;
    Ok(TraceReport::new(
        "theorem2",
        basis,
        vec![phi.id(), psi.id()],
        partial_sums(diag),
        target,
        tol,
    ))
}

/// `½ Σ_{i<N} (ψ, q_i)²` for `N = 1..=N_max`; the equal-weight shortcut for
/// the matrix-trace partial sums.
pub fn parseval_partial_sums(
    psi: &WeightFunction,
    basis: &OrthonormalBasis,
    n_max: usize,
    quad: &QuadratureConfig,
) -> Result<Vec<f64>> {
    if n_max == 0 || n_max > basis.len() {
        return Err(Error::invalid("N", format!("must lie in 1..={}", basis.len())));
    }
    if !psi.interval().same_as(&basis.interval()) {
        return Err(Error::IntervalMismatch);
    }
    let b = basis.resolution(n_max);
    let grid = Grid::build(basis.interval(), quad, &b.times(&psi.resolution()))?;
    let mut proj = vec![0.0; n_max];
    let mut q = vec![0.0; n_max];
    for node in grid.nodes() {
        basis.evaluate_into(node.x, &mut q);
        let w = psi.value(node.x) * node.w;
        for (p, qi) in proj.iter_mut().zip(&q) {
            *p += w * qi;
        }
    }
    Ok(partial_sums(proj.iter().map(|c| 0.5 * c * c)))
}

fn certified(spec: &KernelSpec) -> Result<()> {
    let smooth = |w: &WeightFunction| !matches!(w.repr(), WeightRepr::Tabulated { .. });
    match spec.kind() {
        KernelKind::Symmetrized { phi, psi } if smooth(phi) && smooth(psi) => Ok(()),
        KernelKind::Symmetrized { .. } => Err(Error::UnsupportedKernel(
            "symmetrized kernels are certified for polynomial and trigonometric weights",
        )),
        KernelKind::VolterraProduct { .. } => Err(Error::UnsupportedKernel(
            "Volterra product kernels are not trace class; use the matrix-trace check instead",
        )),
        _ => Ok(()),
    }
}

/// Matrix trace `Σ_{i<N} F_ii` against the averaged diagonal integral
/// `lim_{ε→0} ∫ S_ε f(t,t) dt`.
pub fn verify_theorem1(
    spec: &KernelSpec,
    basis: &OrthonormalBasis,
    n_max: usize,
    schedule: &[f64],
    tol: f64,
    quad: &QuadratureConfig,
) -> Result<TraceReport> {
    check_tol(tol)?;
    certified(spec)?;
    let diag = kernel_diagonal(spec, basis, n_max, quad)?;
    let integral = spec.diagonal_trace(schedule, quad)?;
    let sums = partial_sums(diag.iter().map(|z| z.re));
    let mut report = TraceReport::new("theorem1", basis, vec![spec.id()], sums, integral.limit, tol);
    if let Some(target_im) = integral.limit_imag {
        let ims = partial_sums(diag.iter().map(|z| z.im));
        report.errors = report
            .partial_sums
            .iter()
            .zip(&ims)
            .map(|(re, im)| (re - integral.limit).hypot(im - target_im))
            .collect();
        report.converged = report.last_error() <= tol;
        report.partial_sums_imag = Some(ims);
        report.target_imag = Some(target_im);
    }
    report
        .metadata
        .insert("averaged".into(), serde_json::to_value(&integral).expect("serializable"));
    Ok(report)
}

/// `Σ_{i<N} [G_ii(φ,ψ) + G_ii(ψ,φ)]` against `(φ, ψ)` for polynomial weights.
pub fn verify_eq7(
    phi: &WeightFunction,
    psi: &WeightFunction,
    basis: &OrthonormalBasis,
    n_max: usize,
    tol: f64,
    quad: &QuadratureConfig,
) -> Result<TraceReport> {
    check_tol(tol)?;
    if !phi.is_polynomial() || !psi.is_polynomial() {
        return Err(Error::invalid("weights", "the symmetric-sum identity needs polynomial weights"));
    }
    let a = coefficient_diagonal(phi, psi, basis, n_max, quad)?;
    let b = coefficient_diagonal(psi, phi, basis, n_max, quad)?;
    let target = inner_product(phi, psi, quad)?;
    Ok(TraceReport::new(
        "eq7",
        basis,
        vec![phi.id(), psi.id()],
        partial_sums(a.iter().zip(&b).map(|(x, y)| x + y)),
        target,
        tol,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSum {
    pub basis: String,
    pub sum: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisPair {
    pub a: String,
    pub b: String,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisIndependenceReport {
    pub experiment: String,
    pub weights: Vec<String>,
    #[serde(rename = "N")]
    pub n: usize,
    pub target: f64,
    pub sums: Vec<BasisSum>,
    pub pairs: Vec<BasisPair>,
    pub tolerance: f64,
    /// Every sum lies within `tolerance` of the target and every pairwise
    /// difference within `tolerance`.
    pub converged: bool,
}

/// Matrix-trace partial sums at `N` across several bases.
pub fn basis_independence(
    phi: &WeightFunction,
    psi: &WeightFunction,
    bases: &[OrthonormalBasis],
    n: usize,
    tol: f64,
    quad: &QuadratureConfig,
) -> Result<BasisIndependenceReport> {
    check_tol(tol)?;
    if bases.is_empty() {
        return Err(Error::invalid("bases", "need at least one basis"));
    }
    let iv = bases[0].interval();
    if bases.iter().any(|b| !b.interval().same_as(&iv)) {
        return Err(Error::IntervalMismatch);
    }
    let target = 0.5 * inner_product(phi, psi, quad)?;
    let sums = bases
        .iter()
        .map(|b| {
            let sum: f64 = coefficient_diagonal(phi, psi, b, n, quad)?.iter().sum();
            Ok(BasisSum {
                basis: b.id(),
                sum,
                error: (sum - target).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for (k, a) in sums.iter().enumerate() {
        for b in &sums[k + 1..] {
            pairs.push(BasisPair {
                a: a.basis.clone(),
                b: b.basis.clone(),
                difference: (a.sum - b.sum).abs(),
            });
        }
    }
    let converged = sums.iter().all(|s| s.error <= tol) && pairs.iter().all(|p| p.difference <= tol);
    Ok(BasisIndependenceReport {
        experiment: "basis-independence".into(),
        weights: vec![phi.id(), psi.id()],
        n,
        target,
        sums,
        pairs,
        tolerance: tol,
        converged,
    })
}

/// Adjacent index pair contracted in a three-index tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NeighborPair {
    /// `Σ_i G_{i i k}`, free index `i3`.
    #[serde(rename = "1-2")]
    First,
    /// `Σ_i G_{k i i}`, free index `i1`.
    #[serde(rename = "2-3")]
    Second,
}

impl std::str::FromStr for NeighborPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1-2" | "12" | "(1,2)" => Ok(Self::First),
            "2-3" | "23" | "(2,3)" => Ok(Self::Second),
            _ => Err(Error::invalid("pair", format!("expected 1-2 or 2-3, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborTraceReport {
    pub experiment: String,
    pub basis: String,
    pub weights: Vec<String>,
    pub pair: NeighborPair,
    #[serde(rename = "N")]
    pub n: usize,
    /// Contracted values indexed by the free index.
    pub traces: Vec<f64>,
    /// `(h, q_k)` of the reduced weight by direct quadrature.
    pub oracle: Vec<f64>,
    pub errors: Vec<f64>,
    pub max_error: f64,
    pub tolerance: f64,
    pub converged: bool,
}

/// Reduced weight left after contracting a neighbor pair:
/// `½ ψ3(t) ∫_{t0}^t ψ1 ψ2` for `(1,2)`, `½ ψ1(t) ∫_t^T ψ2 ψ3` for `(2,3)`.
pub fn reduced_weight(psi: [&WeightFunction; 3], pair: NeighborPair, t: f64, rule: &GaussRule) -> f64 {
    let iv = psi[0].interval();
    match pair {
        NeighborPair::First => {
            let inner = rule.integrate(iv.start(), t, |s| psi[0].value(s) * psi[1].value(s));
            0.5 * psi[2].value(t) * inner
        }
        NeighborPair::Second => {
            let inner = rule.integrate(t, iv.end(), |s| psi[1].value(s) * psi[2].value(s));
            0.5 * psi[0].value(t) * inner
        }
    }
}

/// `(h, q_k)` for `k < n` by composite Gauss–Legendre on uniform panels,
/// with the inner integral of `h` recomputed at every node.
pub fn reduced_coefficients(
    psi: [&WeightFunction; 3],
    pair: NeighborPair,
    basis: &OrthonormalBasis,
    n: usize,
) -> Vec<f64> {
    let iv: Interval = basis.interval();
    let panels = 64.max(8 * n);
    let rule = GaussRule::new(20);
    let inner_rule = GaussRule::new(24);
    let h = iv.length() / panels as f64;
    let mut out = vec![0.0; n];
    let mut q = vec![0.0; n];
    for p in 0..panels {
        let a = iv.start() + h * p as f64;
        for (x, w) in rule.mapped(a, a + h) {
            basis.evaluate_into(x, &mut q);
            let hx = reduced_weight(psi, pair, x, &inner_rule) * w;
            for (o, qk) in out.iter_mut().zip(&q) {
                *o += hx * qk;
            }
        }
    }
    out
}

/// Neighbor contraction of a tensor against the reduced-weight oracle.
pub fn tensor_neighbor_trace(
    tensor: &CoefficientTensor,
    psi: [&WeightFunction; 3],
    pair: NeighborPair,
    tol: f64,
) -> Result<NeighborTraceReport> {
    check_tol(tol)?;
    let basis = tensor.basis();
    if psi.iter().any(|w| !w.interval().same_as(&basis.interval())) {
        return Err(Error::IntervalMismatch);
    }
    let ids: Vec<String> = psi.iter().map(|w| w.id()).collect();
    if ids.as_slice() != tensor.weight_ids().as_slice() {
        return Err(Error::invalid("weights", "do not match the tensor's weights"));
    }
    let n = tensor.n();
    let traces: Vec<f64> = (0..n)
        .map(|k| {
            (0..n)
                .map(|i| match pair {
                    NeighborPair::First => tensor.get(i, i, k),
                    NeighborPair::Second => tensor.get(k, i, i),
                })
                .sum()
        })
        .collect();
    let oracle = reduced_coefficients(psi, pair, basis, n);
    let errors: Vec<f64> = traces.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).collect();
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    Ok(NeighborTraceReport {
        experiment: "tensor-neighbor-trace".into(),
        basis: basis.id(),
        weights: ids,
        pair,
        n,
        traces,
        oracle,
        errors,
        max_error,
        tolerance: tol,
        converged: max_error <= tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonNeighborTraceReport {
    pub experiment: String,
    pub basis: String,
    pub weights: Vec<String>,
    #[serde(rename = "N")]
    pub n: usize,
    /// `v_k = Σ_{i<N} G_{i k i}` for `k < N`.
    pub values: Vec<f64>,
    pub max_abs: f64,
}

/// Non-neighbor `(1,3)` contraction of the leading `n`-block.
pub fn tensor_nonneighbor_trace(tensor: &CoefficientTensor, n: usize) -> Result<NonNeighborTraceReport> {
    if n == 0 || n > tensor.n() {
        return Err(Error::invalid("N", format!("must lie in 1..={}", tensor.n())));
    }
    let values: Vec<f64> = (0..n).map(|k| (0..n).map(|i| tensor.get(i, k, i)).sum()).collect();
    let max_abs = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(NonNeighborTraceReport {
        experiment: "tensor-nonneighbor-trace".into(),
        basis: tensor.basis().id(),
        weights: tensor.weight_ids().to_vec(),
        n,
        values,
        max_abs,
    })
}
