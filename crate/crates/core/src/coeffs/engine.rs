//! Quadrature machinery shared by matrix and tensor coefficients.
//!
//! Volterra inner integrals are running primitives: panel totals are summed
//! once into prefix sums, and the partial integral from the panel start to a
//! node uses a Gauss rule mapped onto `[a_p, x]`.

use rayon::prelude::*;

use crate::basis::OrthonormalBasis;
use crate::kernel::{Branch, Factor};
use crate::quadrature::{Grid, Node};
use crate::scalar::Scalar;

/// Running primitives `∫_{t0}^{x} f_c(s) ds` of a family of functions
/// `f_c`, `c < cols`.
pub(crate) struct Primitive<'g, S, F> {
    grid: &'g Grid,
    cols: usize,
    f: F,
    prefix: Vec<S>,
}

impl<'g, S, F> Primitive<'g, S, F>
where
    S: Scalar,
    F: Fn(usize, f64, &mut [S]) + Sync,
{
    pub(crate) fn new(grid: &'g Grid, cols: usize, f: F) -> Self {
        let panels = grid.panel_count();
        let totals: Vec<Vec<S>> = (0..panels)
            .into_par_iter()
            .map(|p| {
                let mut acc = vec![S::zero(); cols];
                let mut vals = vec![S::zero(); cols];
                for node in grid.panel_nodes(p) {
                    f(p, node.x, &mut vals);
                    for (a, v) in acc.iter_mut().zip(&vals) {
                        *a += *v * node.w;
                    }
                }
                acc
            })
            .collect();
        let mut prefix = vec![S::zero(); (panels + 1) * cols];
        for (p, tot) in totals.iter().enumerate() {
            for c in 0..cols {
                prefix[(p + 1) * cols + c] = prefix[p * cols + c] + tot[c];
            }
        }
        Self {
            grid,
            cols,
            f,
            prefix,
        }
    }

    /// Writes the primitives at `x` (inside panel `panel`) into `out`.
    pub(crate) fn at(&self, panel: usize, x: f64, out: &mut [S]) {
        let base = &self.prefix[panel * self.cols..(panel + 1) * self.cols];
        out.copy_from_slice(base);
        let mut vals = vec![S::zero(); self.cols];
        for (s, w) in self.grid.partial_panel(panel, x) {
            (self.f)(panel, s, &mut vals);
            for (o, v) in out.iter_mut().zip(&vals) {
                *o += *v * w;
            }
        }
    }

    pub(crate) fn total(&self) -> &[S] {
        &self.prefix[self.grid.panel_count() * self.cols..]
    }
}

/// Per-node factors of a kernel block `F_ij = Σ_k left_k[i] · right_k[j]`.
pub(crate) struct BlockFactors<S> {
    rows: usize,
    cols: usize,
    left: Vec<S>,
    right: Vec<S>,
}

impl<S: Scalar> BlockFactors<S> {
    /// Full `rows × cols` block, row-major. Each entry is an independent
    /// node-ordered sum, so the result does not depend on thread count.
    pub(crate) fn block(&self) -> Vec<S> {
        let nodes = self.left.len() / self.rows.max(1);
        (0..self.rows)
            .into_par_iter()
            .flat_map_iter(|i| {
                (0..self.cols).map(move |j| {
                    let mut acc = S::zero();
                    for k in 0..nodes {
                        acc += self.left[k * self.rows + i] * self.right[k * self.cols + j];
                    }
                    acc
                })
            })
            .collect()
    }

    /// Entries `(c, c)` for `c < min(rows, cols)`.
    pub(crate) fn diagonal(&self) -> Vec<S> {
        let nodes = self.left.len() / self.rows.max(1);
        (0..self.rows.min(self.cols))
            .map(|c| {
                let mut acc = S::zero();
                for k in 0..nodes {
                    acc += self.left[k * self.rows + c] * self.right[k * self.cols + c];
                }
                acc
            })
            .collect()
    }
}

fn basis_row(basis: &OrthonormalBasis, x: f64, indices: &[usize], top: usize) -> Vec<f64> {
    let mut all = vec![0.0; top + 1];
    basis.evaluate_into(x, &mut all);
    indices.iter().map(|&i| all[i]).collect()
}

/// Node factors for `∫∫ f(t,τ) q_i(t) q_j(τ)` where `f` has separable
/// branches below (`t > τ`) and above (`t < τ`) the diagonal.
pub(crate) fn branch_factors<S: Scalar>(
    lower: Option<&Branch>,
    upper: Option<&Branch>,
    basis: &OrthonormalBasis,
    rows: &[usize],
    cols: &[usize],
    grid: &Grid,
) -> BlockFactors<S> {
    let top_r = rows.iter().copied().max().unwrap_or(0);
    let top_c = cols.iter().copied().max().unwrap_or(0);
    let nc = cols.len();

    let primitive_of = |factor: &Factor| {
        let factor = factor.clone();
        Primitive::new(grid, nc, move |_p, x, out: &mut [S]| {
            let q = basis_row(basis, x, cols, top_c);
            let w = S::factor(&factor, x);
            for (o, qj) in out.iter_mut().zip(q) {
                *o = w * qj;
            }
        })
    };
    let low_prim = lower.map(|b| primitive_of(&b.right));
    let up_prim = upper.map(|b| primitive_of(&b.right));

    let nodes: Vec<Node> = grid.nodes().collect();
    let per_node: Vec<(Vec<S>, Vec<S>)> = nodes
        .par_iter()
        .map(|node| {
            let q = basis_row(basis, node.x, rows, top_r);
            let left: Vec<S> = q.iter().map(|&qi| S::from_real(qi * node.w)).collect();
            let mut right = vec![S::zero(); nc];
            let mut buf = vec![S::zero(); nc];
            if let (Some(b), Some(prim)) = (lower, low_prim.as_ref()) {
                prim.at(node.panel, node.x, &mut buf);
                let a = S::factor(&b.left, node.x);
                for (r, v) in right.iter_mut().zip(&buf) {
                    *r += a * *v;
                }
            }
            if let (Some(b), Some(prim)) = (upper, up_prim.as_ref()) {
                prim.at(node.panel, node.x, &mut buf);
                let c = S::factor(&b.left, node.x);
                for ((r, v), tot) in right.iter_mut().zip(&buf).zip(prim.total()) {
                    *r += c * (*tot - *v);
                }
            }
            (left, right)
        })
        .collect();

    let mut left = Vec::with_capacity(nodes.len() * rows.len());
    let mut right = Vec::with_capacity(nodes.len() * nc);
    for (l, r) in per_node {
        left.extend(l);
        right.extend(r);
    }
    BlockFactors {
        rows: rows.len(),
        cols: nc,
        left,
        right,
    }
}

/// Triple iterated coefficients
/// `∫ ψ3 q_c(t3) ∫^{t3} ψ2 q_b(t2) ∫^{t2} ψ1 q_a(t1)` for `a ∈ i1, b ∈ i2, c ∈ i3`,
/// returned in `(a, b, c)` row-major order.
pub(crate) fn triple_block(
    weights: [&Factor; 3],
    basis: &OrthonormalBasis,
    idx: [&[usize]; 3],
    grid: &Grid,
) -> Vec<f64> {
    let [w1, w2, w3] = weights;
    let [i1, i2, i3] = idx;
    let top = i1.iter().chain(i2).chain(i3).copied().max().unwrap_or(0);
    let (n1, n2, n3) = (i1.len(), i2.len(), i3.len());

    let level1 = Primitive::new(grid, n1, |_p, x, out: &mut [f64]| {
        let q = basis_row(basis, x, i1, top);
        let w = w1.value_real(x);
        for (o, qa) in out.iter_mut().zip(q) {
            *o = w * qa;
        }
    });
    let level2 = Primitive::new(grid, n1 * n2, |p, x, out: &mut [f64]| {
        let mut inner = vec![0.0; n1];
        level1.at(p, x, &mut inner);
        let q = basis_row(basis, x, i2, top);
        let w = w2.value_real(x);
        for (a, &ia) in inner.iter().enumerate() {
            for (b, &qb) in q.iter().enumerate() {
                out[a * n2 + b] = w * qb * ia;
            }
        }
    });

    let nodes: Vec<Node> = grid.nodes().collect();
    let per_node: Vec<(Vec<f64>, Vec<f64>)> = nodes
        .par_iter()
        .map(|node| {
            let mut h = vec![0.0; n1 * n2];
            level2.at(node.panel, node.x, &mut h);
            let w = w3.value_real(node.x) * node.w;
            let outer: Vec<f64> = basis_row(basis, node.x, i3, top).into_iter().map(|q| q * w).collect();
            (h, outer)
        })
        .collect();

    (0..n1 * n2)
        .into_par_iter()
        .flat_map_iter(|ab| {
            let per_node = &per_node;
            (0..n3).map(move |c| {
                let mut acc = 0.0;
                for (h, outer) in per_node {
                    acc += h[ab] * outer[c];
                }
                acc
            })
        })
        .collect()
}
