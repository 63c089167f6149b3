//! Explicit trace-class factorizations `f(t,τ) = ∫ f1(t,ξ) f2(ξ,τ) dξ + r(t,τ)`
//! for the monomial and complex-exponential kernel families, where `r` is a
//! separable rank-one remainder.

use num_complex::Complex64;

use super::{Factor, KernelKind, KernelSpec};
use crate::error::{Error, Result};
use crate::quadrature::GaussRule;

/// Which side of the diagonal a step-restricted kernel lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSupport {
    /// `1(x − y)`
    FirstAbove,
    /// `1(y − x)`
    SecondAbove,
}

/// `scale · left(x) · right(y) · step(x, y)`, with `step = ½` on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorKernel {
    pub scale: Complex64,
    pub left: Factor,
    pub right: Factor,
    pub support: StepSupport,
}

impl FactorKernel {
    pub fn value(&self, x: f64, y: f64) -> Complex64 {
        let step = match self.support {
            StepSupport::FirstAbove => unit_step(x - y),
            StepSupport::SecondAbove => unit_step(y - x),
        };
        if step == 0.0 || self.scale == Complex64::new(0.0, 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        self.scale * self.left.value_complex(x) * self.right.value_complex(y) * step
    }
}

/// `scale · left(t) · right(τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneTerm {
    pub scale: Complex64,
    pub left: Factor,
    pub right: Factor,
}

impl RankOneTerm {
    pub fn value(&self, t: f64, tau: f64) -> Complex64 {
        self.scale * self.left.value_complex(t) * self.right.value_complex(tau)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub f1: FactorKernel,
    pub f2: FactorKernel,
    pub remainder: RankOneTerm,
}

fn unit_step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

impl FactorPair {
    /// The constructive factorization of a monomial or complex-exponential
    /// kernel.
    ///
    /// * `(tτ)ⁿ min(t,τ)^m`: `f1 = m tⁿ ξ^{m−1} 1(t−ξ)`, `f2 = τⁿ 1(τ−ξ)`,
    ///   remainder `t0^m (tτ)ⁿ`.
    /// * `(tτ)ⁿ max(t,τ)^m`: `f1 = −m tⁿ ξ^{m−1} 1(ξ−t)`, `f2 = τⁿ 1(ξ−τ)`,
    ///   remainder `T^m (tτ)ⁿ`.
    /// * `e^{in(t+τ)} e^{id·min(t,τ)}` with `d = m − n`: `f1 = id e^{int} e^{idξ} 1(t−ξ)`,
    ///   `f2 = e^{inτ} 1(τ−ξ)`, remainder `e^{id t0} e^{in(t+τ)}`. For `d = 0` the
    ///   kernel is itself rank one and `f1` vanishes.
    pub fn for_kernel(spec: &KernelSpec) -> Result<Self> {
        let iv = spec.interval();
        let re = |x: f64| Complex64::new(x, 0.0);
        match *spec.kind() {
            KernelKind::MonomialMin { n, m } => Ok(Self {
                f1: FactorKernel {
                    scale: re(m as f64),
                    left: Factor::Power(n),
                    right: Factor::Power(m - 1),
                    support: StepSupport::FirstAbove,
                },
                f2: FactorKernel {
                    scale: re(1.0),
                    left: Factor::Power(0),
                    right: Factor::Power(n),
                    support: StepSupport::SecondAbove,
                },
                remainder: RankOneTerm {
                    scale: re(iv.start().powi(m as i32)),
                    left: Factor::Power(n),
                    right: Factor::Power(n),
                },
            }),
            KernelKind::MonomialMax { n, m } => Ok(Self {
                f1: FactorKernel {
                    scale: re(-(m as f64)),
                    left: Factor::Power(n),
                    right: Factor::Power(m - 1),
                    support: StepSupport::SecondAbove,
                },
                f2: FactorKernel {
                    scale: re(1.0),
                    left: Factor::Power(0),
                    right: Factor::Power(n),
                    support: StepSupport::FirstAbove,
                },
                remainder: RankOneTerm {
                    scale: re(iv.end().powi(m as i32)),
                    left: Factor::Power(n),
                    right: Factor::Power(n),
                },
            }),
            KernelKind::ComplexExponential { n, m } => {
                let d = (m - n) as f64;
                Ok(Self {
                    f1: FactorKernel {
                        scale: Complex64::new(0.0, d),
                        left: Factor::Exp(n as f64),
                        right: Factor::Exp(d),
                        support: StepSupport::FirstAbove,
                    },
                    f2: FactorKernel {
                        scale: re(1.0),
                        left: Factor::Power(0),
                        right: Factor::Exp(n as f64),
                        support: StepSupport::SecondAbove,
                    },
                    remainder: RankOneTerm {
                        scale: Complex64::cis(d * iv.start()),
                        left: Factor::Exp(n as f64),
                        right: Factor::Exp(n as f64),
                    },
                })
            }
            _ => Err(Error::UnsupportedKernel(
                "factorizations exist for monomial and complex-exponential kernels only",
            )),
        }
    }

    /// `∫_𝕋 f1(t, ξ) f2(ξ, τ) dξ`, integrated piecewise between the step
    /// discontinuities at `ξ = t` and `ξ = τ`.
    pub fn composition(&self, spec: &KernelSpec, t: f64, tau: f64) -> Complex64 {
        let rule = GaussRule::new(24);
        let iv = spec.interval();
        let (lo, hi) = (t.min(tau), t.max(tau));
        let mut cuts = vec![iv.start(), lo, hi, iv.end()];
        cuts.dedup();
        let mut acc = Complex64::new(0.0, 0.0);
        for w in cuts.windows(2) {
            // Four sub-panels per piece keep exponentials well resolved.
            for k in 0..4 {
                let a = w[0] + (w[1] - w[0]) * k as f64 / 4.0;
                let b = w[0] + (w[1] - w[0]) * (k + 1) as f64 / 4.0;
                for (xi, wt) in rule.mapped(a, b) {
                    acc += self.f1.value(t, xi) * self.f2.value(xi, tau) * wt;
                }
            }
        }
        acc
    }
}

/// Largest `|f − ∫ f1 f2 − r|` over a `grid × grid` lattice covering the
/// square, endpoints included.
pub fn factorization_residual(spec: &KernelSpec, pair: &FactorPair, grid: usize) -> Result<f64> {
    if grid < 2 {
        return Err(Error::invalid("sample_grid", "need at least two points per axis"));
    }
    if !matches!(
        spec.kind(),
        KernelKind::MonomialMin { .. }
            | KernelKind::MonomialMax { .. }
            | KernelKind::ComplexExponential { .. }
    ) {
        return Err(Error::UnsupportedKernel(
            "factorization residuals are defined for monomial and complex-exponential kernels",
        ));
    }
    let iv = spec.interval();
    let point = |k: usize| iv.start() + iv.length() * k as f64 / (grid - 1) as f64;
    let mut worst: f64 = 0.0;
    for a in 0..grid {
        for b in 0..grid {
            let (t, tau) = (point(a), point(b));
            let f = spec.evaluate_complex(t, tau)?;
            let r = f - pair.composition(spec, t, tau) - pair.remainder.value(t, tau);
            worst = worst.max(r.norm());
        }
    }
    Ok(worst)
}
