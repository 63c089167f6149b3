//! Composite Gauss–Legendre quadrature.
//!
//! A [`Grid`] is a set of panels covering the interval, each carrying the same
//! `n`-point Gauss rule (exact for degree `2n - 1` per panel). Panel counts
//! grow with the oscillation of the integrand, and panel edges include every
//! breakpoint where an integrand is only piecewise smooth (Haar jumps, table
//! knots).

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::basis::Interval;
use crate::error::{Error, Result};

const MAX_PANELS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Minimum number of panels; more are added when the integrand needs them.
    pub panels: usize,
    pub nodes_per_panel: usize,
    /// Accepted error estimate for coefficient computations.
    pub tolerance: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panels: 16,
            nodes_per_panel: 8,
            tolerance: 1e-9,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.panels == 0 {
            return Err(Error::invalid("panels", "must be positive"));
        }
        if !(1..=64).contains(&self.nodes_per_panel) {
            return Err(Error::invalid("nodes_per_panel", "must lie in 1..=64"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::invalid("tolerance", "must be positive and finite"));
        }
        Ok(())
    }

    /// Stable textual identity of the configuration, stored with cached
    /// coefficients.
    pub fn fingerprint(&self) -> String {
        format!(
            "gauss-legendre-composite/panels={}/nodes={}/tol={:016x}",
            self.panels,
            self.nodes_per_panel,
            self.tolerance.to_bits()
        )
    }
}

/// What an integrand needs from a grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Resolution {
    /// Rough count of sign changes over the whole interval.
    pub oscillation: f64,
    /// Points where the integrand may have a jump or a kink.
    pub breakpoints: Vec<f64>,
    /// Oscillation bunches up near the endpoints (polynomials of high degree).
    pub clustered: bool,
}

impl Resolution {
    pub fn oscillating(oscillation: f64) -> Self {
        Self {
            oscillation,
            ..Self::default()
        }
    }

    pub fn breaks(breakpoints: Vec<f64>) -> Self {
        Self {
            breakpoints,
            ..Self::default()
        }
    }

    pub fn clustered(mut self) -> Self {
        self.clustered = true;
        self
    }

    /// Resolution of a product of two integrand factors.
    pub fn times(mut self, other: &Resolution) -> Self {
        self.oscillation += other.oscillation;
        self.breakpoints.extend_from_slice(&other.breakpoints);
        self.clustered |= other.clustered;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub panel: usize,
    pub x: f64,
    pub w: f64,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let n = NonZeroUsize::new(n).expect("Gauss rule needs at least one node");
        let rule = GaussLegendre::new(n);
        let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    interval: Interval,
    breaks: Vec<f64>,
    rule: GaussRule,
}

impl Grid {
    /// Builds a grid fine enough for an integrand with the given resolution.
    pub fn build(interval: Interval, config: &QuadratureConfig, res: &Resolution) -> Result<Self> {
        config.validate()?;
        let n = config.nodes_per_panel;
        // About half a sign change per 8-point panel keeps products of
        // oscillatory factors near machine precision.
        let needed = (16.0 * res.oscillation / n as f64).ceil();
        let panels = (needed as usize).max(config.panels).min(MAX_PANELS);

        let (t0, l) = (interval.start(), interval.length());
        let mut breaks: Vec<f64> = (0..=panels)
            .map(|k| {
                let s = k as f64 / panels as f64;
                let pos = if res.clustered {
                    0.5 * (1.0 - (PI * s).cos())
                } else {
                    s
                };
                t0 + l * pos
            })
            .collect();
        breaks.extend(
            res.breakpoints
                .iter()
                .copied()
                .filter(|&b| b > interval.start() && b < interval.end()),
        );
        breaks.sort_by(f64::total_cmp);
        let eps = 1e-13 * l;
        breaks.dedup_by(|b, a| (*b - *a).abs() <= eps);
        // Endpoints must be exact.
        breaks[0] = interval.start();
        *breaks.last_mut().unwrap() = interval.end();

        Ok(Self {
            interval,
            breaks,
            rule: GaussRule::new(n),
        })
    }

    /// Same grid with every panel bisected.
    pub fn refined(&self) -> Self {
        let mut breaks = Vec::with_capacity(2 * self.breaks.len());
        for w in self.breaks.windows(2) {
            breaks.push(w[0]);
            breaks.push(0.5 * (w[0] + w[1]));
        }
        breaks.push(*self.breaks.last().unwrap());
        Self {
            interval: self.interval,
            breaks,
            rule: self.rule.clone(),
        }
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn panel_count(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn panel(&self, p: usize) -> (f64, f64) {
        (self.breaks[p], self.breaks[p + 1])
    }

    pub fn rule(&self) -> &GaussRule {
        &self.rule
    }

    pub fn node_count(&self) -> usize {
        self.panel_count() * self.rule.len()
    }

    /// All nodes, panel by panel, in ascending order.
    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.panel_count()).flat_map(move |p| {
            let (a, b) = self.panel(p);
            self.rule.mapped(a, b).map(move |(x, w)| Node { panel: p, x, w })
        })
    }

    pub fn panel_nodes(&self, p: usize) -> impl Iterator<Item = Node> + '_ {
        let (a, b) = self.panel(p);
        self.rule.mapped(a, b).map(move |(x, w)| Node { panel: p, x, w })
    }

    /// Gauss rule on `[a_p, x]` for a point `x` inside panel `p`.
    pub fn partial_panel(&self, p: usize, x: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let a = self.breaks[p];
        self.rule.mapped(a, x)
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes().map(|n| n.w * f(n.x)).sum()
    }
}
