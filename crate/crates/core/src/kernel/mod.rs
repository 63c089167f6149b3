//! Kernels on the square `[t0, T]²`.
//!
//! Every supported kernel is made of at most two separable branches: one used
//! below the diagonal (`t > τ`) and one above it (`t < τ`). On the diagonal
//! the unit step takes the value `1(0) = ½`, so a kernel equals the mean of its
//! two branches there.

mod factor;
mod weight;

pub use factor::{factorization_residual, FactorKernel, FactorPair, RankOneTerm, StepSupport};
pub use weight::{TrigTerm, WeightFunction, WeightRepr};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::Interval;
use crate::error::{Error, Result};
use crate::quadrature::{GaussRule, Grid, QuadratureConfig, Resolution};
use crate::scalar::Scalar;

/// A univariate factor of a separable kernel branch.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    Weight(WeightFunction),
    /// `t^p`
    Power(u32),
    /// `e^{iωt}`; only meaningful on the complex path.
    Exp(f64),
}

impl Factor {
    #[inline]
    pub(crate) fn value_real(&self, t: f64) -> f64 {
        match self {
            Factor::Weight(w) => w.value(t),
            Factor::Power(p) => t.powi(*p as i32),
            // Real code paths never see exponential factors; see `KernelSpec::is_complex`.
            Factor::Exp(_) => f64::NAN,
        }
    }

    #[inline]
    pub(crate) fn value_complex(&self, t: f64) -> Complex64 {
        match self {
            Factor::Exp(omega) => Complex64::cis(omega * t),
            other => Complex64::new(other.value_real(t), 0.0),
        }
    }

    pub(crate) fn resolution(&self, interval: Interval) -> Resolution {
        match self {
            Factor::Weight(w) => w.resolution(),
            Factor::Power(p) => Resolution::oscillating(*p as f64),
            Factor::Exp(omega) => {
                Resolution::oscillating(omega.abs() * interval.length() / std::f64::consts::PI)
            }
        }
    }
}

/// `left(t) · right(τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub left: Factor,
    pub right: Factor,
}

impl Branch {
    fn new(left: Factor, right: Factor) -> Self {
        Self { left, right }
    }

    #[inline]
    pub(crate) fn value<S: Scalar>(&self, t: f64, tau: f64) -> S {
        S::factor(&self.left, t) * S::factor(&self.right, tau)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    /// `φ(t) ψ(τ) 1(t − τ)`
    VolterraProduct { phi: WeightFunction, psi: WeightFunction },
    /// `φ(t) ψ(τ) 1(t − τ) + ψ(t) φ(τ) 1(τ − t)`
    Symmetrized { phi: WeightFunction, psi: WeightFunction },
    /// `tⁿ τ^{m+n} 1(t − τ) + τⁿ t^{m+n} 1(τ − t) = (tτ)ⁿ min(t, τ)^m`
    MonomialMin { n: u32, m: u32 },
    /// `t^{m+n} τⁿ 1(t − τ) + τ^{m+n} tⁿ 1(τ − t) = (tτ)ⁿ max(t, τ)^m`
    MonomialMax { n: u32, m: u32 },
    /// `e^{int} e^{imτ} 1(t − τ) + e^{inτ} e^{imt} 1(τ − t)`
    ComplexExponential { n: i32, m: i32 },
    /// `φ(t) ψ(τ)` everywhere.
    SeparableRankOne { phi: WeightFunction, psi: WeightFunction },
}

impl KernelKind {
    fn name(&self) -> &'static str {
        match self {
            KernelKind::VolterraProduct { .. } => "volterra",
            KernelKind::Symmetrized { .. } => "symmetrized",
            KernelKind::MonomialMin { .. } => "monomial-min",
            KernelKind::MonomialMax { .. } => "monomial-max",
            KernelKind::ComplexExponential { .. } => "complex-exp",
            KernelKind::SeparableRankOne { .. } => "rank-one",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    kind: KernelKind,
    interval: Interval,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, interval: Interval) -> Result<Self> {
        match &kind {
            KernelKind::VolterraProduct { phi, psi }
            | KernelKind::Symmetrized { phi, psi }
            | KernelKind::SeparableRankOne { phi, psi } => {
                if !phi.interval().same_as(&interval) || !psi.interval().same_as(&interval) {
                    return Err(Error::IntervalMismatch);
                }
            }
            KernelKind::MonomialMin { m, .. } | KernelKind::MonomialMax { m, .. } => {
                if *m == 0 {
                    return Err(Error::invalid("m", "must be a positive integer"));
                }
            }
            KernelKind::ComplexExponential { m, .. } => {
                if *m == 0 {
                    return Err(Error::invalid("m", "must be nonzero"));
                }
            }
        }
        Ok(Self { kind, interval })
    }

    pub fn volterra(phi: WeightFunction, psi: WeightFunction) -> Result<Self> {
        let iv = phi.interval();
        Self::new(KernelKind::VolterraProduct { phi, psi }, iv)
    }

    pub fn symmetrized(phi: WeightFunction, psi: WeightFunction) -> Result<Self> {
        let iv = phi.interval();
        Self::new(KernelKind::Symmetrized { phi, psi }, iv)
    }

    pub fn rank_one(phi: WeightFunction, psi: WeightFunction) -> Result<Self> {
        let iv = phi.interval();
        Self::new(KernelKind::SeparableRankOne { phi, psi }, iv)
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.kind, KernelKind::ComplexExponential { .. })
    }

    pub fn id(&self) -> String {
        let inner = match &self.kind {
            KernelKind::VolterraProduct { phi, psi }
            | KernelKind::Symmetrized { phi, psi }
            | KernelKind::SeparableRankOne { phi, psi } => format!("{}|{}", phi.id(), psi.id()),
            KernelKind::MonomialMin { n, m } | KernelKind::MonomialMax { n, m } => {
                format!("n={n},m={m}")
            }
            KernelKind::ComplexExponential { n, m } => format!("n={n},m={m}"),
        };
        format!("{}({inner}){}", self.kind.name(), self.interval)
    }

    /// The branches used below (`t > τ`) and above (`t < τ`) the diagonal.
    pub(crate) fn branches(&self) -> (Option<Branch>, Option<Branch>) {
        use Factor::{Exp, Power, Weight};
        match &self.kind {
            KernelKind::VolterraProduct { phi, psi } => (
                Some(Branch::new(Weight(phi.clone()), Weight(psi.clone()))),
                None,
            ),
            KernelKind::Symmetrized { phi, psi } => (
                Some(Branch::new(Weight(phi.clone()), Weight(psi.clone()))),
                Some(Branch::new(Weight(psi.clone()), Weight(phi.clone()))),
            ),
            KernelKind::MonomialMin { n, m } => (
                Some(Branch::new(Power(*n), Power(m + n))),
                Some(Branch::new(Power(m + n), Power(*n))),
            ),
            KernelKind::MonomialMax { n, m } => (
                Some(Branch::new(Power(m + n), Power(*n))),
                Some(Branch::new(Power(*n), Power(m + n))),
            ),
            KernelKind::ComplexExponential { n, m } => (
                Some(Branch::new(Exp(*n as f64), Exp(*m as f64))),
                Some(Branch::new(Exp(*m as f64), Exp(*n as f64))),
            ),
            KernelKind::SeparableRankOne { phi, psi } => (
                Some(Branch::new(Weight(phi.clone()), Weight(psi.clone()))),
                Some(Branch::new(Weight(phi.clone()), Weight(psi.clone()))),
            ),
        }
    }

    /// Resolution needed along one variable of the kernel.
    pub(crate) fn resolution(&self) -> Resolution {
        let (lo, up) = self.branches();
        let mut res = Resolution::default();
        for b in lo.iter().chain(up.iter()) {
            for f in [&b.left, &b.right] {
                let r = f.resolution(self.interval);
                res.oscillation = res.oscillation.max(r.oscillation);
                res.breakpoints.extend(r.breakpoints);
            }
        }
        res
    }

    #[inline]
    pub(crate) fn value<S: Scalar>(
        lower: Option<&Branch>,
        upper: Option<&Branch>,
        t: f64,
        tau: f64,
    ) -> S {
        let lo = || lower.map_or(S::zero(), |b| b.value(t, tau));
        let up = || upper.map_or(S::zero(), |b| b.value(t, tau));
        if t > tau {
            lo()
        } else if t < tau {
            up()
        } else {
            (lo() + up()) * 0.5
        }
    }

    fn checked<S: Scalar>(&self, t: f64, tau: f64) -> Result<S> {
        let t = self.interval.check(t)?;
        let tau = self.interval.check(tau)?;
        let (lo, up) = self.branches();
        Ok(Self::value(lo.as_ref(), up.as_ref(), t, tau))
    }

    /// `f(t, τ)` for real kernels.
    pub fn evaluate(&self, t: f64, tau: f64) -> Result<f64> {
        if self.is_complex() {
            return Err(Error::ComplexKernel);
        }
        self.checked(t, tau)
    }

    /// `f(t, τ)` for any kernel.
    pub fn evaluate_complex(&self, t: f64, tau: f64) -> Result<Complex64> {
        self.checked(t, tau)
    }

    /// Box average `S_ε f(t, τ)` over `[t−ε, t+ε] × [τ−ε, τ+ε]`, with the
    /// kernel extended by zero outside the square.
    pub fn averaging(&self, eps: f64, t: f64, tau: f64) -> Result<f64> {
        if self.is_complex() {
            return Err(Error::ComplexKernel);
        }
        check_eps(eps)?;
        let (lo, up) = self.branches();
        Ok(Averager::new(self.interval, lo.as_ref(), up.as_ref()).average(eps, t, tau))
    }

    pub fn averaging_complex(&self, eps: f64, t: f64, tau: f64) -> Result<Complex64> {
        check_eps(eps)?;
        let (lo, up) = self.branches();
        Ok(Averager::new(self.interval, lo.as_ref(), up.as_ref()).average(eps, t, tau))
    }

    /// `∫ S_ε f(t, t) dt` for each `ε` of a strictly decreasing schedule,
    /// plus a Richardson limit `ε → 0` from the last two entries.
    pub fn diagonal_trace(&self, schedule: &[f64], quad: &QuadratureConfig) -> Result<DiagonalTrace> {
        if schedule.is_empty() {
            return Err(Error::invalid("epsilon schedule", "must not be empty"));
        }
        for &e in schedule {
            check_eps(e)?;
        }
        if schedule.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::invalid("epsilon schedule", "must be strictly decreasing"));
        }
        if self.is_complex() {
            self.diagonal_trace_generic::<Complex64>(schedule, quad)
        } else {
            self.diagonal_trace_generic::<f64>(schedule, quad)
        }
    }

    fn diagonal_trace_generic<S: Scalar>(
        &self,
        schedule: &[f64],
        quad: &QuadratureConfig,
    ) -> Result<DiagonalTrace> {
        use rayon::prelude::*;

        let (lo, up) = self.branches();
        let averager = Averager::new(self.interval, lo.as_ref(), up.as_ref());
        let base = self.resolution();
        let values: Vec<S> = schedule
            .iter()
            .map(|&eps| {
                let mut res = base.clone();
                res.oscillation *= 2.0;
                res.breakpoints
                    .extend([self.interval.start() + eps, self.interval.end() - eps]);
                let grid = Grid::build(self.interval, quad, &res)?;
                let nodes: Vec<_> = grid.nodes().collect();
                let terms: Vec<S> = nodes
                    .par_iter()
                    .map(|n| averager.average::<S>(eps, n.x, n.x) * n.w)
                    .collect();
                Ok(terms.into_iter().fold(S::zero(), |a, b| a + b))
            })
            .collect::<Result<_>>()?;

        let limit = match values.len() {
            1 => values[0],
            k => {
                let r = schedule[k - 2] / schedule[k - 1];
                (values[k - 1] * r - values[k - 2]) * (1.0 / (r - 1.0))
            }
        };
        let (re, im): (Vec<f64>, Vec<f64>) = values.iter().map(|v| v.parts()).unzip();
        let (limit, limit_imag) = limit.parts();
        Ok(DiagonalTrace {
            epsilons: schedule.to_vec(),
            values: re,
            values_imag: if self.is_complex() { Some(im) } else { None },
            limit,
            limit_imag: if self.is_complex() { Some(limit_imag) } else { None },
        })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    Ok(())
}

/// `ε_k = L · 2^{-k}` for `k = 3, …, 12`.
pub fn default_epsilon_schedule(interval: Interval) -> Vec<f64> {
    (3..=12).map(|k| interval.length() * 0.5f64.powi(k)).collect()
}

/// Averaged integral traces along an `ε` schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalTrace {
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub values_imag: Option<Vec<f64>>,
    pub limit: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub limit_imag: Option<f64>,
}

/// Integrates a two-branch kernel over axis-aligned boxes.
struct Averager<'a> {
    interval: Interval,
    lower: Option<&'a Branch>,
    upper: Option<&'a Branch>,
    rule: GaussRule,
}

impl<'a> Averager<'a> {
    const MAX_DEPTH: u32 = 10;

    fn new(interval: Interval, lower: Option<&'a Branch>, upper: Option<&'a Branch>) -> Self {
        Self {
            interval,
            lower,
            upper,
            rule: GaussRule::new(16),
        }
    }

    fn average<S: Scalar>(&self, eps: f64, t: f64, tau: f64) -> S {
        let (t0, end) = (self.interval.start(), self.interval.end());
        let (a, b) = ((t - eps).max(t0), (t + eps).min(end));
        let (c, d) = ((tau - eps).max(t0), (tau + eps).min(end));
        if !(a < b && c < d) {
            return S::zero();
        }
        let mut total = S::zero();
        let mut cuts = vec![a, b];
        cuts.extend([c, d].into_iter().filter(|&x| x > a && x < b));
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            total += self.adaptive(w[0], w[1], c, d, Self::MAX_DEPTH, None);
        }
        total * (1.0 / (4.0 * eps * eps))
    }

    /// `∫_c^d f(θ, ϑ) dϑ`, split at the diagonal.
    fn inner<S: Scalar>(&self, theta: f64, c: f64, d: f64) -> S {
        let mut acc = S::zero();
        if let Some(b) = self.lower {
            let hi = d.min(theta);
            if hi > c {
                for (x, w) in self.rule.mapped(c, hi) {
                    acc += b.value::<S>(theta, x) * w;
                }
            }
        }
        if let Some(b) = self.upper {
            let lo = c.max(theta);
            if d > lo {
                for (x, w) in self.rule.mapped(lo, d) {
                    acc += b.value::<S>(theta, x) * w;
                }
            }
        }
        acc
    }

    fn panel<S: Scalar>(&self, a: f64, b: f64, c: f64, d: f64) -> S {
        let mut acc = S::zero();
        for (x, w) in self.rule.mapped(a, b) {
            acc += self.inner::<S>(x, c, d) * w;
        }
        acc
    }

    fn adaptive<S: Scalar>(&self, a: f64, b: f64, c: f64, d: f64, depth: u32, whole: Option<S>) -> S {
        let whole: S = whole.unwrap_or_else(|| self.panel::<S>(a, b, c, d));
        let m = 0.5 * (a + b);
        let left: S = self.panel::<S>(a, m, c, d);
        let right: S = self.panel::<S>(m, b, c, d);
        let split: S = left + right;
        let floor: f64 = 1e-15 * (b - a) * (d - c);
        let scale: f64 = 1e-13 * split.modulus();
        if depth == 0 || (split - whole).modulus() <= scale.max(floor) {
            split
        } else {
            self.adaptive(a, m, c, d, depth - 1, Some(left))
                + self.adaptive(m, b, c, d, depth - 1, Some(right))
        }
    }
}
