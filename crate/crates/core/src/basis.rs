//! Orthonormal basis families on a bounded interval.
//!
//! Three families are provided: shifted Legendre polynomials, the real
//! Fourier system, and the Haar wavelets. Each basis function `q_i` comes with
//! an exact primitive `Q_i(t) = ∫_{t0}^t q_i(s) ds`.

use std::f64::consts::PI;
use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{Grid, QuadratureConfig, Resolution};

/// A closed interval `[t0, end]` with `end > t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    t0: f64,
    end: f64,
}

impl Interval {
    pub fn new(t0: f64, end: f64) -> Result<Self> {
        if !(t0.is_finite() && end.is_finite() && end > t0) {
            return Err(Error::InvalidInterval { t0, end });
        }
        Ok(Self { t0, end })
    }

    /// The unit interval `[0, 1]`.
    pub fn unit() -> Self {
        Self { t0: 0.0, end: 1.0 }
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn length(&self) -> f64 {
        self.end - self.t0
    }

    /// Maps `t` to `(t - t0) / L`, the position within the interval in `[0, 1]`.
    #[inline]
    pub fn unit_position(&self, t: f64) -> f64 {
        (t - self.t0) / self.length()
    }

    /// Checks membership, allowing a few ulps of slack at the endpoints.
    pub fn check(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.length();
        if t.is_nan() || t < self.t0 - slack || t > self.end + slack {
            return Err(Error::OutsideInterval {
                t,
                t0: self.t0,
                end: self.end,
            });
        }
        Ok(t.clamp(self.t0, self.end))
    }

    pub(crate) fn same_as(&self, other: &Interval) -> bool {
        self.t0.to_bits() == other.t0.to_bits() && self.end.to_bits() == other.end.to_bits()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.t0, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisFamily {
    Legendre,
    Fourier,
    Haar,
}

impl fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisFamily::Legendre => "legendre",
            BasisFamily::Fourier => "fourier",
            BasisFamily::Haar => "haar",
        })
    }
}

impl std::str::FromStr for BasisFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "legendre" => Ok(BasisFamily::Legendre),
            "fourier" => Ok(BasisFamily::Fourier),
            "haar" => Ok(BasisFamily::Haar),
            other => Err(Error::invalid("basis", format!("unknown family `{other}`"))),
        }
    }
}

/// An orthonormal family `{q_0, …, q_max_index}` on an interval.
///
/// Immutable and stateless: every evaluation is a pure function of
/// `(family, interval, i, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthonormalBasis {
    family: BasisFamily,
    interval: Interval,
    max_index: usize,
}

impl OrthonormalBasis {
    pub fn legendre(interval: Interval, max_index: usize) -> Self {
        Self {
            family: BasisFamily::Legendre,
            interval,
            max_index,
        }
    }

    pub fn fourier(interval: Interval, max_index: usize) -> Self {
        Self {
            family: BasisFamily::Fourier,
            interval,
            max_index,
        }
    }

    /// Haar system of the given dyadic depth: `2^depth` functions.
    pub fn haar(interval: Interval, depth: u32) -> Result<Self> {
        if depth > 24 {
            return Err(Error::invalid("depth", "Haar depth is limited to 24"));
        }
        Ok(Self {
            family: BasisFamily::Haar,
            interval,
            max_index: (1usize << depth) - 1,
        })
    }

    /// Smallest basis of `family` that holds at least `count` functions.
    pub fn with_count(family: BasisFamily, interval: Interval, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("N", "basis size must be positive"));
        }
        match family {
            BasisFamily::Legendre => Ok(Self::legendre(interval, count - 1)),
            BasisFamily::Fourier => Ok(Self::fourier(interval, count - 1)),
            BasisFamily::Haar => Self::haar(interval, count.next_power_of_two().trailing_zeros()),
        }
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    pub fn len(&self) -> usize {
        self.max_index + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Short identifier used in reports and cache keys.
    pub fn id(&self) -> String {
        format!("{}{}", self.family, self.interval)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i > self.max_index {
            return Err(Error::IndexOutOfRange {
                index: i,
                max: self.max_index,
            });
        }
        Ok(())
    }

    /// `q_i(t)`.
    pub fn evaluate(&self, i: usize, t: f64) -> Result<f64> {
        self.check_index(i)?;
        let t = self.interval.check(t)?;
        Ok(match self.family {
            BasisFamily::Legendre => {
                let mut values = vec![0.0; i + 1];
                self.legendre_values(t, &mut values);
                values[i]
            }
            BasisFamily::Fourier => self.fourier_value(i, t),
            BasisFamily::Haar => self.haar_value(i, t),
        })
    }

    /// `Q_i(t) = ∫_{t0}^t q_i(s) ds`, in closed form.
    pub fn antiderivative(&self, i: usize, t: f64) -> Result<f64> {
        self.check_index(i)?;
        let t = self.interval.check(t)?;
        Ok(match self.family {
            BasisFamily::Legendre => {
                let mut values = vec![0.0; i + 1];
                self.legendre_primitives(t, &mut values);
                values[i]
            }
            BasisFamily::Fourier => self.fourier_primitive(i, t),
            BasisFamily::Haar => self.haar_primitive(i, t),
        })
    }

    /// Fills `out[i] = q_i(t)` for `i < out.len()`. `t` must already lie in
    /// the interval and `out.len()` must not exceed `len()`.
    pub(crate) fn evaluate_into(&self, t: f64, out: &mut [f64]) {
        debug_assert!(out.len() <= self.len());
        match self.family {
            BasisFamily::Legendre => self.legendre_values(t, out),
            BasisFamily::Fourier => {
                for (i, v) in out.iter_mut().enumerate() {
                    *v = self.fourier_value(i, t);
                }
            }
            BasisFamily::Haar => {
                for (i, v) in out.iter_mut().enumerate() {
                    *v = self.haar_value(i, t);
                }
            }
        }
    }

    /// Fills `out[i] = Q_i(t)` for `i < out.len()`.
    pub(crate) fn antiderivative_into(&self, t: f64, out: &mut [f64]) {
        debug_assert!(out.len() <= self.len());
        match self.family {
            BasisFamily::Legendre => self.legendre_primitives(t, out),
            BasisFamily::Fourier => {
                for (i, v) in out.iter_mut().enumerate() {
                    *v = self.fourier_primitive(i, t);
                }
            }
            BasisFamily::Haar => {
                for (i, v) in out.iter_mut().enumerate() {
                    *v = self.haar_primitive(i, t);
                }
            }
        }
    }

    /// Quadrature resolution needed to integrate products involving the
    /// first `count` basis functions.
    pub(crate) fn resolution(&self, count: usize) -> Resolution {
        let top = count.saturating_sub(1) as f64;
        match self.family {
            BasisFamily::Legendre => Resolution::oscillating(top).clustered(),
            BasisFamily::Fourier => Resolution::oscillating(2.0 * (top / 2.0).ceil()),
            BasisFamily::Haar => {
                let cells = count.next_power_of_two();
                let l = self.interval.length();
                let t0 = self.interval.start();
                Resolution::breaks((1..cells).map(|k| t0 + l * k as f64 / cells as f64).collect())
            }
        }
    }

    /// Matrix of pairwise inner products `(q_i, q_j)` for `i, j < n`,
    /// computed by composite Gauss–Legendre quadrature.
    pub fn gram_matrix(&self, n: usize, quad: &QuadratureConfig) -> Result<Array2<f64>> {
        if n == 0 || n > self.len() {
            return Err(Error::invalid(
                "N",
                format!("must lie in 1..={} for this basis", self.len()),
            ));
        }
        let mut res = self.resolution(n);
        res.oscillation *= 2.0;
        let grid = Grid::build(self.interval, quad, &res)?;
        let mut values = vec![0.0; n];
        let mut gram = Array2::<f64>::zeros((n, n));
        for node in grid.nodes() {
            self.evaluate_into(node.x, &mut values);
            for i in 0..n {
                let wi = node.w * values[i];
                for j in 0..n {
                    gram[[i, j]] += wi * values[j];
                }
            }
        }
        Ok(gram)
    }

    // Legendre: q_i(t) = sqrt((2i+1)/L) P_i(u), u = 2(t - t0)/L - 1.

    fn legendre_arg(&self, t: f64) -> f64 {
        2.0 * self.interval.unit_position(t) - 1.0
    }

    fn legendre_values(&self, t: f64, out: &mut [f64]) {
        let u = self.legendre_arg(t);
        let l = self.interval.length();
        let (mut p_prev, mut p) = (0.0, 1.0);
        for (i, v) in out.iter_mut().enumerate() {
            *v = ((2 * i + 1) as f64 / l).sqrt() * p;
            let k = i as f64;
            let next = ((2.0 * k + 1.0) * u * p - k * p_prev) / (k + 1.0);
            p_prev = p;
            p = next;
        }
    }

    fn legendre_primitives(&self, t: f64, out: &mut [f64]) {
        // ∫_{-1}^{u} P_i = (P_{i+1}(u) - P_{i-1}(u)) / (2i + 1) for i ≥ 1.
        let u = self.legendre_arg(t);
        let l = self.interval.length();
        let half_root = 0.5 * l.sqrt();
        let (mut p_prev, mut p) = (1.0, u); // P_{i-1}, P_i starting at i = 1
        for (i, v) in out.iter_mut().enumerate() {
            if i == 0 {
                *v = (t - self.interval.start()) / l.sqrt();
                continue;
            }
            let k = i as f64;
            let p_next = ((2.0 * k + 1.0) * u * p - k * p_prev) / (k + 1.0);
            *v = half_root * (p_next - p_prev) / (2.0 * k + 1.0).sqrt();
            p_prev = p;
            p = p_next;
        }
    }

    // Fourier: q_0 = 1/sqrt(L), q_{2k-1} = sqrt(2/L) sin(2πk u'), q_{2k} = sqrt(2/L) cos(2πk u').

    fn fourier_value(&self, i: usize, t: f64) -> f64 {
        let l = self.interval.length();
        if i == 0 {
            return 1.0 / l.sqrt();
        }
        let k = i.div_ceil(2) as f64;
        let arg = 2.0 * PI * k * self.interval.unit_position(t);
        let amp = (2.0 / l).sqrt();
        if i % 2 == 1 {
            amp * arg.sin()
        } else {
            amp * arg.cos()
        }
    }

    fn fourier_primitive(&self, i: usize, t: f64) -> f64 {
        let l = self.interval.length();
        if i == 0 {
            return (t - self.interval.start()) / l.sqrt();
        }
        let k = i.div_ceil(2) as f64;
        let arg = 2.0 * PI * k * self.interval.unit_position(t);
        let scale = (2.0 / l).sqrt() * l / (2.0 * PI * k);
        if i % 2 == 1 {
            // 1 - cos(x) = 2 sin²(x/2) keeps full relative precision near zero.
            let s = (0.5 * arg).sin();
            scale * 2.0 * s * s
        } else {
            scale * arg.sin()
        }
    }

    // Haar: q_0 = 1/sqrt(L); index 2^j + k has support [k, k+1)/2^j (in unit
    // position), value +2^{j/2}/sqrt(L) on the left half and minus that on the right.

    fn haar_cell(i: usize) -> (u32, usize) {
        let level = usize::BITS - 1 - i.leading_zeros();
        (level, i - (1usize << level))
    }

    fn haar_value(&self, i: usize, t: f64) -> f64 {
        let l = self.interval.length();
        if i == 0 {
            return 1.0 / l.sqrt();
        }
        let (level, k) = Self::haar_cell(i);
        let cells = (1usize << level) as f64;
        let x = self.interval.unit_position(t) * cells - k as f64;
        let height = cells.sqrt() / l.sqrt();
        let last = k + 1 == 1usize << level;
        if (0.0..0.5).contains(&x) {
            height
        } else if (0.5..1.0).contains(&x) || (last && x == 1.0) {
            -height
        } else {
            0.0
        }
    }

    fn haar_primitive(&self, i: usize, t: f64) -> f64 {
        let l = self.interval.length();
        if i == 0 {
            return (t - self.interval.start()) / l.sqrt();
        }
        let (level, k) = Self::haar_cell(i);
        let cells = (1usize << level) as f64;
        let x = self.interval.unit_position(t) * cells - k as f64;
        let height = cells.sqrt() / l.sqrt();
        // One cell spans L / cells in t.
        let width = l / cells;
        if x <= 0.0 || x >= 1.0 {
            0.0
        } else if x < 0.5 {
            height * x * width
        } else {
            height * (1.0 - x) * width
        }
    }
}
