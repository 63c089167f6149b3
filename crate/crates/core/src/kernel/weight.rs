use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::basis::Interval;
use crate::error::{Error, Result};
use crate::quadrature::Resolution;

/// One `s·sin(2πk u') + c·cos(2πk u')` term, `u' = (t - t0)/L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub frequency: u32,
    pub sin_amp: f64,
    pub cos_amp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WeightRepr {
    /// Monomial coefficients `c0 + c1 t + c2 t² + …` in the raw variable `t`.
    Polynomial { coeffs: Vec<f64> },
    TrigSum { terms: Vec<TrigTerm> },
    /// Piecewise-linear interpolation through `(grid[k], values[k])`.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

/// A square-integrable weight on an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    repr: WeightRepr,
    interval: Interval,
}

impl WeightFunction {
    pub fn polynomial(interval: Interval, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coeffs", "polynomial coefficients must be finite"));
        }
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Ok(Self {
            repr: WeightRepr::Polynomial { coeffs },
            interval,
        })
    }

    pub fn constant(interval: Interval, value: f64) -> Self {
        Self::polynomial(interval, vec![value]).expect("finite constant")
    }

    pub fn zero(interval: Interval) -> Self {
        Self::constant(interval, 0.0)
    }

    pub fn trig(interval: Interval, terms: Vec<TrigTerm>) -> Result<Self> {
        if terms
            .iter()
            .any(|t| !t.sin_amp.is_finite() || !t.cos_amp.is_finite())
        {
            return Err(Error::invalid("trig", "amplitudes must be finite"));
        }
        Ok(Self {
            repr: WeightRepr::TrigSum { terms },
            interval,
        })
    }

    pub fn tabulated(interval: Interval, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::invalid(
                "table",
                "need at least two points and one value per grid point",
            ));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("table", "grid must be strictly increasing"));
        }
        if values.iter().chain(&grid).any(|v| !v.is_finite()) {
            return Err(Error::invalid("table", "entries must be finite"));
        }
        let slack = 1e-12 * interval.length();
        if grid[0] > interval.start() + slack || grid[grid.len() - 1] < interval.end() - slack {
            return Err(Error::invalid(
                "table",
                format!("grid must span {interval}"),
            ));
        }
        Ok(Self {
            repr: WeightRepr::Tabulated { grid, values },
            interval,
        })
    }

    /// `Σ c_k q̂_k(t)` where `q̂_k` are the orthonormal shifted Legendre
    /// polynomials of the interval, expanded into monomial coefficients.
    pub fn legendre_combination(interval: Interval, coeffs: &[f64]) -> Result<Self> {
        let l = interval.length();
        // u = a t + b maps the interval onto [-1, 1].
        let u = [-(2.0 * interval.start() / l) - 1.0, 2.0 / l];
        let mut out = vec![0.0; coeffs.len().max(1)];
        let mut p_prev: Vec<f64> = vec![];
        let mut p: Vec<f64> = vec![1.0];
        for (k, &c) in coeffs.iter().enumerate() {
            let norm = ((2 * k + 1) as f64 / l).sqrt();
            for (o, pk) in out.iter_mut().zip(&p) {
                *o += c * norm * pk;
            }
            let kf = k as f64;
            let mut next = vec![0.0; p.len() + 1];
            for (i, &pi) in p.iter().enumerate() {
                next[i] += (2.0 * kf + 1.0) * u[0] * pi / (kf + 1.0);
                next[i + 1] += (2.0 * kf + 1.0) * u[1] * pi / (kf + 1.0);
            }
            for (i, &pi) in p_prev.iter().enumerate() {
                next[i] -= kf * pi / (kf + 1.0);
            }
            p_prev = std::mem::replace(&mut p, next);
        }
        Self::polynomial(interval, out)
    }

    pub fn repr(&self) -> &WeightRepr {
        &self.repr
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self.repr, WeightRepr::Polynomial { .. })
    }

    /// True when the weight vanishes identically.
    pub fn is_zero(&self) -> bool {
        match &self.repr {
            WeightRepr::Polynomial { coeffs } => coeffs.iter().all(|&c| c == 0.0),
            WeightRepr::TrigSum { terms } => terms
                .iter()
                .all(|t| t.cos_amp == 0.0 && (t.sin_amp == 0.0 || t.frequency == 0)),
            WeightRepr::Tabulated { values, .. } => values.iter().all(|&v| v == 0.0),
        }
    }

    /// Checked evaluation.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        let t = self.interval.check(t)?;
        Ok(self.value(t))
    }

    /// Unchecked evaluation; `t` is assumed to lie in the interval.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match &self.repr {
            WeightRepr::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c),
            WeightRepr::TrigSum { terms } => {
                let u = 2.0 * PI * self.interval.unit_position(t);
                terms
                    .iter()
                    .map(|term| {
                        let arg = u * term.frequency as f64;
                        term.sin_amp * arg.sin() + term.cos_amp * arg.cos()
                    })
                    .sum()
            }
            WeightRepr::Tabulated { grid, values } => {
                let k = grid.partition_point(|&g| g <= t);
                if k == 0 {
                    values[0]
                } else if k == grid.len() {
                    values[k - 1]
                } else {
                    let s = (t - grid[k - 1]) / (grid[k] - grid[k - 1]);
                    values[k - 1] + s * (values[k] - values[k - 1])
                }
            }
        }
    }

    pub(crate) fn resolution(&self) -> Resolution {
        match &self.repr {
            WeightRepr::Polynomial { coeffs } => Resolution::oscillating((coeffs.len() - 1) as f64),
            WeightRepr::TrigSum { terms } => Resolution::oscillating(
                2.0 * terms.iter().map(|t| t.frequency).max().unwrap_or(0) as f64,
            ),
            WeightRepr::Tabulated { grid, .. } => Resolution::breaks(grid.clone()),
        }
    }

    /// Canonical textual form; identical weights give identical ids.
    pub fn id(&self) -> String {
        let join = |xs: &[f64]| {
            let mut s = String::new();
            for (k, x) in xs.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{x}");
            }
            s
        };
        match &self.repr {
            WeightRepr::Polynomial { coeffs } => format!("poly:{}", join(coeffs)),
            WeightRepr::TrigSum { terms } => {
                let parts: Vec<String> = terms
                    .iter()
                    .map(|t| format!("{},{},{}", t.frequency, t.sin_amp, t.cos_amp))
                    .collect();
                format!("trig:{}", parts.join(";"))
            }
            WeightRepr::Tabulated { grid, values } => {
                format!("table:[{}]->[{}]", join(grid), join(values))
            }
        }
    }
}
