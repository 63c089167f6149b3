//! Iterated Stratonovich and Itô integrals of multiplicity two from truncated
//! orthogonal expansions.
//!
//! With i.i.d. standard normals `ζ_i = ∫ q_i dW` the truncated Stratonovich
//! integral is the quadratic form `J_N = ζᵀ G_N ζ` (or `ζᵀ G_N η` for two
//! independent Wiener processes), and the Itô integral is `J_N − tr G_N`.

mod campaign;
mod oracle;

pub use campaign::{brownian_midpoint_oracle, campaign_with_matrix, mc_campaign, McConfig, MCReport, SampleStats};
pub use oracle::SmoothPathOracle;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::basis::OrthonormalBasis;
use crate::coeffs::CoefficientMatrix;
use crate::error::{Error, Result};
use crate::kernel::WeightFunction;

/// Generator for path `path` under master seed `seed`: one ChaCha stream per
/// path, so draws never depend on scheduling.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Standard normal coordinates `ζ` (and `η` for a second, independent
/// Wiener process) for one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianDraw {
    pub zeta: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta: Option<Vec<f64>>,
    pub seed: u64,
    pub path: u64,
}

impl GaussianDraw {
    pub fn generate(seed: u64, path: u64, n: usize, second_process: bool) -> Self {
        let mut rng = path_rng(seed, path);
        let zeta: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let eta = second_process.then(|| (0..n).map(|_| rng.sample(StandardNormal)).collect());
        Self { zeta, eta, seed, path }
    }

    /// A fixed draw, e.g. for closed-form checks.
    pub fn from_vectors(zeta: Vec<f64>, eta: Option<Vec<f64>>) -> Self {
        Self {
            zeta,
            eta,
            seed: 0,
            path: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }
}

fn quadratic_form(g: &CoefficientMatrix, x: &[f64], y: &[f64]) -> f64 {
    let n = g.n();
    let e = g.entries();
    let mut acc = 0.0;
    for i in 0..n {
        let row: f64 = (0..n).map(|j| e[[i, j]] * y[j]).sum();
        acc += x[i] * row;
    }
    acc
}

/// `J_N = ζᵀ G ζ` for one process, `ζᵀ G η` for two.
pub fn simulate_stratonovich_pair(g: &CoefficientMatrix, draw: &GaussianDraw, same_process: bool) -> Result<f64> {
    let n = g.n();
    if draw.len() < n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: draw.len(),
        });
    }
    if same_process {
        return Ok(quadratic_form(g, &draw.zeta, &draw.zeta));
    }
    match &draw.eta {
        Some(eta) if eta.len() >= n => Ok(quadratic_form(g, &draw.zeta, eta)),
        Some(eta) => Err(Error::DimensionMismatch {
            expected: n,
            got: eta.len(),
        }),
        None => Err(Error::invalid("draw", "two processes need a second normal vector")),
    }
}

/// `I_N = J_N − Σ_{i<N} G_ii`.
pub fn ito_from_stratonovich(j: f64, g: &CoefficientMatrix) -> f64 {
    j - g.trace()
}

/// `W_N(t) = Σ_{i<N} ζ_i Q_i(t)` with `Q_i` the exact primitives.
pub fn build_truncated_path(basis: &OrthonormalBasis, zeta: &[f64], n: usize, t: f64) -> Result<f64> {
    if n > basis.len() {
        return Err(Error::IndexOutOfRange {
            index: n - 1,
            max: basis.max_index(),
        });
    }
    if zeta.len() < n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: zeta.len(),
        });
    }
    let t = basis.interval().check(t)?;
    let mut prim = vec![0.0; n];
    basis.antiderivative_into(t, &mut prim);
    Ok(prim.iter().zip(zeta).map(|(p, z)| p * z).sum())
}

/// `∫ φ Ẇ_N ∫^t ψ Ẇ_N` on the smooth truncated path, by composite
/// quadrature on a uniform mesh.
pub fn smooth_path_oracle(
    phi: &WeightFunction,
    psi: &WeightFunction,
    basis: &OrthonormalBasis,
    zeta: &[f64],
    n: usize,
    mesh: usize,
) -> Result<f64> {
    SmoothPathOracle::new(phi, psi, basis, n, mesh)?.evaluate(zeta, zeta)
}
