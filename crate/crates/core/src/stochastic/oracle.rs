use crate::basis::OrthonormalBasis;
use crate::error::{Error, Result};
use crate::kernel::WeightFunction;
use crate::quadrature::GaussRule;

const NODES: usize = 4;

/// Evaluates `∫ φ(t) Ẋ(t) ∫_{t0}^t ψ(τ) Ẏ(τ) dτ dt` for smooth truncated paths
/// `X = Σ ζ_i Q_i`, `Y = Σ η_i Q_i` on a uniform mesh, with the basis and
/// weights tabulated once so repeated draws are cheap.
///
/// Each mesh cell carries a four-point Gauss rule; the inner integral up to a
/// node adds a Gauss rule mapped onto the partial cell. A power-of-two mesh
/// keeps Haar jumps on cell boundaries.
#[derive(Debug, Clone)]
pub struct SmoothPathOracle {
    n: usize,
    cells: usize,
    /// `w φ(x) q(x)` per outer node, `n` entries each.
    outer: Vec<f64>,
    /// `w ψ(s) q(s)` per (outer node, partial node).
    partial: Vec<f64>,
    /// `Σ w ψ(x) q(x)` over each cell.
    cell_total: Vec<f64>,
}

impl SmoothPathOracle {
    pub fn new(
        phi: &WeightFunction,
        psi: &WeightFunction,
        basis: &OrthonormalBasis,
        n: usize,
        mesh: usize,
    ) -> Result<Self> {
        if mesh < 2 {
            return Err(Error::invalid("mesh", "need at least two cells"));
        }
        if n == 0 || n > basis.len() {
            return Err(Error::invalid("N", format!("must lie in 1..={}", basis.len())));
        }
        let iv = basis.interval();
        if !phi.interval().same_as(&iv) || !psi.interval().same_as(&iv) {
            return Err(Error::IntervalMismatch);
        }
        let rule = GaussRule::new(NODES);
        let h = iv.length() / mesh as f64;
        let mut outer = Vec::with_capacity(mesh * NODES * n);
        let mut partial = Vec::with_capacity(mesh * NODES * NODES * n);
        let mut cell_total = Vec::with_capacity(mesh * n);
        let mut q = vec![0.0; n];
        for k in 0..mesh {
            let a = iv.start() + h * k as f64;
            let b = if k + 1 == mesh { iv.end() } else { a + h };
            let mut total = vec![0.0; n];
            for (x, w) in rule.mapped(a, b) {
                basis.evaluate_into(x, &mut q);
                let (fx, gx) = (phi.value(x) * w, psi.value(x) * w);
                outer.extend(q.iter().map(|v| v * fx));
                for (t, v) in total.iter_mut().zip(&q) {
                    *t += gx * v;
                }
                for (s, ws) in rule.mapped(a, x) {
                    basis.evaluate_into(s, &mut q);
                    let gs = psi.value(s) * ws;
                    partial.extend(q.iter().map(|v| v * gs));
                }
            }
            cell_total.extend(total);
        }
        Ok(Self {
            n,
            cells: mesh,
            outer,
            partial,
            cell_total,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The functional for coordinates `ζ` (outer path) and `η` (inner path).
    pub fn evaluate(&self, zeta: &[f64], eta: &[f64]) -> Result<f64> {
        let n = self.n;
        for v in [zeta, eta] {
            if v.len() < n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        let (zeta, eta) = (&zeta[..n], &eta[..n]);
        let dot = |row: &[f64], c: &[f64]| -> f64 { row.iter().zip(c).map(|(a, b)| a * b).sum() };
        let mut prefix = 0.0;
        let mut acc = 0.0;
        for k in 0..self.cells {
            for l in 0..NODES {
                let node = k * NODES + l;
                let outer = dot(&self.outer[node * n..(node + 1) * n], zeta);
                let mut inner = prefix;
                for r in 0..NODES {
                    let p = (node * NODES + r) * n;
                    inner += dot(&self.partial[p..p + n], eta);
                }
                acc += outer * inner;
            }
            prefix += dot(&self.cell_total[k * n..(k + 1) * n], eta);
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Interval;
    use crate::coeffs::coefficient_matrix;
    use crate::quadrature::QuadratureConfig;
    use crate::stochastic::GaussianDraw;

    #[test]
    fn matches_quadratic_form_in_every_basis() {
        let iv = Interval::unit();
        let phi = WeightFunction::polynomial(iv, vec![1.0, -0.5]).unwrap();
        let psi = WeightFunction::polynomial(iv, vec![0.0, 1.0, 1.0]).unwrap();
        let q = QuadratureConfig::default();
        for basis in [
            OrthonormalBasis::legendre(iv, 7),
            OrthonormalBasis::fourier(iv, 7),
            OrthonormalBasis::haar(iv, 3).unwrap(),
        ] {
            let g = coefficient_matrix(&phi, &psi, &basis, 8, &q).unwrap();
            let o = SmoothPathOracle::new(&phi, &psi, &basis, 8, 256).unwrap();
            for p in 0..5 {
                let d = GaussianDraw::generate(11, p, 8, true);
                let eta = d.eta.as_ref().unwrap();
                let e = g.entries();
                let mut j = 0.0;
                for a in 0..8 {
                    for b in 0..8 {
                        j += d.zeta[a] * e[[a, b]] * eta[b];
                    }
                }
                let v = o.evaluate(&d.zeta, eta).unwrap();
                assert!((v - j).abs() < 1e-10, "{}: {v} vs {j}", basis.id());
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let iv = Interval::unit();
        let one = WeightFunction::constant(iv, 1.0);
        let b = OrthonormalBasis::legendre(iv, 3);
        assert!(SmoothPathOracle::new(&one, &one, &b, 4, 1).is_err());
        assert!(SmoothPathOracle::new(&one, &one, &b, 5, 16).is_err());
        let o = SmoothPathOracle::new(&one, &one, &b, 4, 16).unwrap();
        assert!(o.evaluate(&[1.0; 3], &[1.0; 4]).is_err());
    }
}
