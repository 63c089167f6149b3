//! Expansion coefficients of Volterra kernels against products of basis
//! functions.
//!
//! For weights `φ, ψ` the matrix `G_ij = ∫ φ(t) q_i(t) ∫_{t0}^t ψ(τ) q_j(τ) dτ dt`
//! holds the coefficients of `φ(t) ψ(τ) 1(t − τ)` in the basis `{q_i q_j}`.
//! General two-branch kernels give `F_ij = ∫∫ f(t,τ) q_i(t) q_j(τ)`, and three
//! weights give the tensor of the triple iterated kernel.
//!
//! Every computation also re-evaluates a few probe entries (first, middle and
//! last index) on a grid with bisected panels; if the two disagree by more than
//! the configured tolerance the call fails with
//! [`Error::QuadratureTolerance`].

mod cache;
mod engine;

pub use cache::{cache_path, cached_coefficient_matrix, CACHE_DIR_ENV, CACHE_MAGIC, CACHE_VERSION};

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{Interval, OrthonormalBasis};
use crate::error::{Error, Result};
use crate::kernel::{Branch, Factor, KernelSpec, WeightFunction};
use crate::quadrature::{Grid, QuadratureConfig, Resolution};
use crate::scalar::Scalar;

use engine::{branch_factors, triple_block};

/// Largest supported tensor edge.
pub const MAX_TENSOR_N: usize = 64;

/// `G_ij` for `i, j < N`, with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientMatrix {
    entries: Array2<f64>,
    basis: OrthonormalBasis,
    weights: [String; 2],
    quad: QuadratureConfig,
    /// Largest probe difference against the refined grid; absent for
    /// matrices restored from a cache file.
    error_estimate: Option<f64>,
}

impl CoefficientMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[[i, j]]
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    pub fn interval(&self) -> Interval {
        self.basis.interval()
    }

    pub fn weight_ids(&self) -> &[String; 2] {
        &self.weights
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    pub fn error_estimate(&self) -> Option<f64> {
        self.error_estimate
    }

    /// `Σ_{i<N} G_ii`.
    pub fn trace(&self) -> f64 {
        self.entries.diag().iter().sum()
    }

    /// `Σ_{i<k} G_ii` for `k = 1..=N`.
    pub fn partial_traces(&self) -> Vec<f64> {
        partial_sums(self.entries.diag().iter().copied())
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum()
    }

    /// Leading `k × k` block.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n() {
            return Err(Error::invalid("N", format!("must lie in 1..={}", self.n())));
        }
        Ok(Self {
            entries: self.entries.slice(ndarray::s![..k, ..k]).to_owned(),
            ..self.clone()
        })
    }
}

/// `G_{i1 i2 i3}` for indices below `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTensor {
    entries: Array3<f64>,
    basis: OrthonormalBasis,
    weights: [String; 3],
    quad: QuadratureConfig,
    error_estimate: Option<f64>,
}

impl CoefficientTensor {
    pub fn n(&self) -> usize {
        self.entries.shape()[0]
    }

    pub fn entries(&self) -> &Array3<f64> {
        &self.entries
    }

    pub fn get(&self, i1: usize, i2: usize, i3: usize) -> f64 {
        self.entries[[i1, i2, i3]]
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    pub fn interval(&self) -> Interval {
        self.basis.interval()
    }

    pub fn weight_ids(&self) -> &[String; 3] {
        &self.weights
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    pub fn error_estimate(&self) -> Option<f64> {
        self.error_estimate
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum()
    }
}

pub(crate) fn partial_sums(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    values
        .into_iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

fn check_count(basis: &OrthonormalBasis, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("N", "must be at least 1"));
    }
    if n > basis.len() {
        return Err(Error::IndexOutOfRange {
            index: n - 1,
            max: basis.max_index(),
        });
    }
    Ok(())
}

fn check_intervals(basis: &OrthonormalBasis, weights: &[&WeightFunction]) -> Result<()> {
    let iv = basis.interval();
    if weights.iter().any(|w| !w.interval().same_as(&iv)) {
        return Err(Error::IntervalMismatch);
    }
    Ok(())
}

fn probe_indices(n: usize) -> Vec<usize> {
    let mut p = vec![0, n / 2, n - 1];
    p.dedup();
    p
}

fn tolerance_check(estimate: f64, quad: &QuadratureConfig) -> Result<f64> {
    if estimate.is_nan() || estimate > quad.tolerance {
        return Err(Error::QuadratureTolerance {
            estimate,
            tolerance: quad.tolerance,
        });
    }
    Ok(estimate)
}

fn pair_grid(
    basis: &OrthonormalBasis,
    top: usize,
    extra: &[Resolution],
    quad: &QuadratureConfig,
) -> Result<Grid> {
    let b = basis.resolution(top + 1);
    let res = extra.iter().fold(b.clone().times(&b), |acc, r| acc.times(r));
    Grid::build(basis.interval(), quad, &res)
}

/// Two-branch block with a refined-grid probe check.
struct BlockJob<'a> {
    lower: Option<&'a Branch>,
    upper: Option<&'a Branch>,
    basis: &'a OrthonormalBasis,
    grid: Grid,
}

impl BlockJob<'_> {
    fn probe<S: Scalar>(&self, n: usize, computed: impl Fn(usize, usize) -> S, diag_only: bool) -> f64 {
        let probe = probe_indices(n);
        let fine = self.grid.refined();
        let f = branch_factors::<S>(self.lower, self.upper, self.basis, &probe, &probe, &fine);
        let mut worst: f64 = 0.0;
        if diag_only {
            for (c, v) in f.diagonal().into_iter().enumerate() {
                worst = worst.max((v - computed(probe[c], probe[c])).modulus());
            }
        } else {
            let block = f.block();
            for (a, &i) in probe.iter().enumerate() {
                for (b, &j) in probe.iter().enumerate() {
                    worst = worst.max((block[a * probe.len() + b] - computed(i, j)).modulus());
                }
            }
        }
        worst
    }

    fn matrix<S: Scalar>(&self, n: usize, quad: &QuadratureConfig) -> Result<(Vec<S>, f64)> {
        let idx: Vec<usize> = (0..n).collect();
        let entries = branch_factors::<S>(self.lower, self.upper, self.basis, &idx, &idx, &self.grid).block();
        let est = self.probe::<S>(n, |i, j| entries[i * n + j], false);
        Ok((entries, tolerance_check(est, quad)?))
    }

    fn diagonal<S: Scalar>(&self, n: usize, quad: &QuadratureConfig) -> Result<(Vec<S>, f64)> {
        let idx: Vec<usize> = (0..n).collect();
        let diag = branch_factors::<S>(self.lower, self.upper, self.basis, &idx, &idx, &self.grid).diagonal();
        let est = self.probe::<S>(n, |i, _| diag[i], true);
        Ok((diag, tolerance_check(est, quad)?))
    }

    fn single<S: Scalar>(&self, i: usize, j: usize, quad: &QuadratureConfig) -> Result<S> {
        let v = branch_factors::<S>(self.lower, self.upper, self.basis, &[i], &[j], &self.grid).block()[0];
        let fine = self.grid.refined();
        let w = branch_factors::<S>(self.lower, self.upper, self.basis, &[i], &[j], &fine).block()[0];
        tolerance_check((v - w).modulus(), quad)?;
        Ok(v)
    }
}

fn weight_job<'a>(
    branch: &'a Branch,
    phi: &WeightFunction,
    psi: &WeightFunction,
    basis: &'a OrthonormalBasis,
    top: usize,
    quad: &QuadratureConfig,
) -> Result<BlockJob<'a>> {
    check_intervals(basis, &[phi, psi])?;
    let grid = pair_grid(basis, top, &[phi.resolution(), psi.resolution()], quad)?;
    Ok(BlockJob {
        lower: Some(branch),
        upper: None,
        basis,
        grid,
    })
}

fn volterra_branch(phi: &WeightFunction, psi: &WeightFunction) -> Branch {
    Branch {
        left: Factor::Weight(phi.clone()),
        right: Factor::Weight(psi.clone()),
    }
}

/// A single `G_ij`.
pub fn coefficient(
    phi: &WeightFunction,
    psi: &WeightFunction,
    basis: &OrthonormalBasis,
    i: usize,
    j: usize,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let top = i.max(j);
    check_count(basis, top + 1)?;
    let branch = volterra_branch(phi, psi);
    weight_job(&branch, phi, psi, basis, top, quad)?.single::<f64>(i, j, quad)
}

/// The full `N × N` matrix `G_ij`.
pub fn coefficient_matrix(
    phi: &WeightFunction,
    psi: &WeightFunction,
    basis: &OrthonormalBasis,
    n: usize,
    quad: &QuadratureConfig,
) -> Result<CoefficientMatrix> {
    check_count(basis, n)?;
    let branch = volterra_branch(phi, psi);
    let (entries, est) = weight_job(&branch, phi, psi, basis, n - 1, quad)?.matrix::<f64>(n, quad)?;
    Ok(CoefficientMatrix {
        entries: Array2::from_shape_vec((n, n), entries).expect("n × n entries"),
        basis: *basis,
        weights: [phi.id(), psi.id()],
        quad: *quad,
        error_estimate: Some(est),
    })
}

/// Only the diagonal `G_ii`, `i < N`; the inputs of matrix-trace partial sums.
pub fn coefficient_diagonal(
    phi: &WeightFunction,
    psi: &WeightFunction,
    basis: &OrthonormalBasis,
    n: usize,
    quad: &QuadratureConfig,
) -> Result<Vec<f64>> {
    check_count(basis, n)?;
    let branch = volterra_branch(phi, psi);
    let (diag, _) = weight_job(&branch, phi, psi, basis, n - 1, quad)?.diagonal::<f64>(n, quad)?;
    Ok(diag)
}

fn kernel_job<'a>(
    spec: &KernelSpec,
    branches: &'a (Option<Branch>, Option<Branch>),
    basis: &'a OrthonormalBasis,
    top: usize,
    quad: &QuadratureConfig,
) -> Result<BlockJob<'a>> {
    if !spec.interval().same_as(&basis.interval()) {
        return Err(Error::IntervalMismatch);
    }
    let r = spec.resolution();
    let grid = pair_grid(basis, top, &[r.clone(), r], quad)?;
    Ok(BlockJob {
        lower: branches.0.as_ref(),
        upper: branches.1.as_ref(),
        basis,
        grid,
    })
}

/// `F_ij = ∫∫ f(t,τ) q_i(t) q_j(τ) dt dτ` for a real kernel.
pub fn kernel_coefficient(
    spec: &KernelSpec,
    basis: &OrthonormalBasis,
    i: usize,
    j: usize,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if spec.is_complex() {
        return Err(Error::ComplexKernel);
    }
    check_count(basis, i.max(j) + 1)?;
    let branches = spec.branches();
    kernel_job(spec, &branches, basis, i.max(j), quad)?.single::<f64>(i, j, quad)
}

/// `F_ij` for any kernel, including complex ones.
pub fn kernel_coefficient_complex(
    spec: &KernelSpec,
    basis: &OrthonormalBasis,
    i: usize,
    j: usize,
    quad: &QuadratureConfig,
) -> Result<Complex64> {
    check_count(basis, i.max(j) + 1)?;
    let branches = spec.branches();
    kernel_job(spec, &branches, basis, i.max(j), quad)?.single::<Complex64>(i, j, quad)
}

/// `F_ij` for `i, j < N`, real kernels only.
pub fn kernel_matrix(
    spec: &KernelSpec,
    basis: &OrthonormalBasis,
    n: usize,
    quad: &QuadratureConfig,
) -> Result<Array2<f64>> {
    if spec.is_complex() {
        return Err(Error::ComplexKernel);
    }
    check_count(basis, n)?;
    let branches = spec.branches();
    let (entries, _) = kernel_job(spec, &branches, basis, n - 1, quad)?.matrix::<f64>(n, quad)?;
    Ok(Array2::from_shape_vec((n, n), entries).expect("n × n entries"))
}

/// Diagonal `F_ii`, `i < N`. Real kernels are computed in real arithmetic
/// and returned with zero imaginary parts.
pub fn kernel_diagonal(
    spec: &KernelSpec,
    basis: &OrthonormalBasis,
    n: usize,
    quad: &QuadratureConfig,
) -> Result<Vec<Complex64>> {
    check_count(basis, n)?;
    let branches = spec.branches();
    let job = kernel_job(spec, &branches, basis, n - 1, quad)?;
    if spec.is_complex() {
        Ok(job.diagonal::<Complex64>(n, quad)?.0)
    } else {
        Ok(job
            .diagonal::<f64>(n, quad)?
            .0
            .into_iter()
            .map(|x| Complex64::new(x, 0.0))
            .collect())
    }
}

/// `G_{i1 i2 i3} = ∫ ψ3 q_{i3}(t3) ∫^{t3} ψ2 q_{i2}(t2) ∫^{t2} ψ1 q_{i1}(t1) dt1 dt2 dt3`.
pub fn tensor_coefficients(
    psi1: &WeightFunction,
    psi2: &WeightFunction,
    psi3: &WeightFunction,
    basis: &OrthonormalBasis,
    n: usize,
    quad: &QuadratureConfig,
) -> Result<CoefficientTensor> {
    check_count(basis, n)?;
    if n > MAX_TENSOR_N {
        return Err(Error::invalid("N", format!("tensors are limited to N ≤ {MAX_TENSOR_N}")));
    }
    check_intervals(basis, &[psi1, psi2, psi3])?;
    let b = basis.resolution(n);
    let res = [psi1.resolution(), psi2.resolution(), psi3.resolution()]
        .iter()
        .fold(b.clone().times(&b).times(&b), |acc, r| acc.times(r));
    let grid = Grid::build(basis.interval(), quad, &res)?;
    let factors = [
        Factor::Weight(psi1.clone()),
        Factor::Weight(psi2.clone()),
        Factor::Weight(psi3.clone()),
    ];
    let w = [&factors[0], &factors[1], &factors[2]];
    let idx: Vec<usize> = (0..n).collect();
    let entries = triple_block(w, basis, [&idx, &idx, &idx], &grid);

    let probe = probe_indices(n);
    let fine = triple_block(w, basis, [&probe, &probe, &probe], &grid.refined());
    let p = probe.len();
    let mut est: f64 = 0.0;
    for (a, &i1) in probe.iter().enumerate() {
        for (b, &i2) in probe.iter().enumerate() {
            for (c, &i3) in probe.iter().enumerate() {
                let coarse = entries[(i1 * n + i2) * n + i3];
                est = est.max((fine[(a * p + b) * p + c] - coarse).abs());
            }
        }
    }
    let est = tolerance_check(est, quad)?;
    Ok(CoefficientTensor {
        entries: Array3::from_shape_vec((n, n, n), entries).expect("n³ entries"),
        basis: *basis,
        weights: [psi1.id(), psi2.id(), psi3.id()],
        quad: *quad,
        error_estimate: Some(est),
    })
}
