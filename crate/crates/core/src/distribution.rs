//! Weighted empirical distributions, their summary statistics and the Omega
//! measure built from Bachelier call/put partial moments.

use std::cmp::Ordering;

use serde::Serialize;

use crate::cashflow::{compensated_sum, validate_weights};
use crate::error::{AppraiseError, Result};

/// Relative tolerance under which two finite Omega values count as tied.
const OMEGA_TIE_TOLERANCE: f64 = 1e-12;

/// Bisection stops once a bracket is no wider than `grid_step / CROSSING_REFINEMENT`.
pub const CROSSING_REFINEMENT: f64 = 1024.0;

/// A weighted sample set. Samples are kept sorted by value (ties by weight)
/// so every aggregate is independent of input order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(samples: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(AppraiseError::EmptyDistribution);
        }
        if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
            return Err(AppraiseError::InvalidScenario(format!(
                "sample {x} is not finite"
            )));
        }
        validate_weights(&weights, samples.len())?;
        let mut pairs: Vec<(f64, f64)> = samples.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let (values, weights) = pairs.into_iter().unzip();
        Ok(Self { values, weights })
    }

    pub fn uniform(samples: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(AppraiseError::EmptyDistribution);
        }
        Self::new(samples, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sorted sample values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Weights aligned with [`values`](Self::values).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.pairs().map(|(x, w)| w * x))
    }

    /// Lower weighted median: smallest value whose cumulative weight reaches 1/2.
    pub fn median(&self) -> f64 {
        let mut cumulative = 0.0;
        for (x, w) in self.pairs() {
            cumulative += w;
            if cumulative >= 0.5 - 1e-12 {
                return x;
            }
        }
        *self.values.last().expect("non-empty")
    }

    pub fn summarize(&self) -> Summary {
        let mean = self.mean();
        let m2 = compensated_sum(self.pairs().map(|(x, w)| w * (x - mean).powi(2)));
        let m3 = compensated_sum(self.pairs().map(|(x, w)| w * (x - mean).powi(3)));
        let std_dev = m2.sqrt();
        // a point mass has no defined skewness
        let skewness = if m2 > 0.0 && self.support_size() > 1 {
            Some(m3 / m2.powf(1.5))
        } else {
            None
        };
        Summary {
            mean,
            median: self.median(),
            std_dev,
            skewness,
        }
    }

    /// Omega at `threshold` with its call (upside) and put (downside) parts.
    pub fn omega(&self, threshold: f64) -> OmegaResult {
        let call = compensated_sum(self.pairs().map(|(x, w)| w * (x - threshold).max(0.0)));
        let put = compensated_sum(self.pairs().map(|(x, w)| w * (threshold - x).max(0.0)));
        OmegaResult {
            threshold,
            call,
            put,
            omega: OmegaValue::from_parts(call, put),
        }
    }

    pub fn omega_curve(&self, grid: &[f64]) -> Result<Vec<OmegaResult>> {
        validate_grid(grid)?;
        Ok(grid.iter().map(|&t| self.omega(t)).collect())
    }

    /// Applies `f` to every sample, keeping weights.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&x| f(x)).collect(), self.weights.clone())
    }

    fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.weights.iter().copied())
    }

    fn support_size(&self) -> usize {
        let mut distinct = 0;
        let mut last = None;
        for (x, w) in self.pairs() {
            if w > 0.0 && last != Some(x) {
                distinct += 1;
                last = Some(x);
            }
        }
        distinct
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub std_dev: f64,
    /// `None` for a point mass.
    pub skewness: Option<f64>,
}

/// Omega with its degenerate cases made explicit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaValue {
    Finite(f64),
    /// Nothing lies below the threshold.
    Infinite,
    /// Every sample sits exactly at the threshold.
    Indeterminate,
}

impl OmegaValue {
    pub fn from_parts(call: f64, put: f64) -> Self {
        if put > 0.0 {
            OmegaValue::Finite(call / put)
        } else if call > 0.0 {
            OmegaValue::Infinite
        } else {
            OmegaValue::Indeterminate
        }
    }

    /// `f64::INFINITY` for the infinite case and NaN when indeterminate.
    pub fn as_f64(&self) -> f64 {
        match *self {
            OmegaValue::Finite(v) => v,
            OmegaValue::Infinite => f64::INFINITY,
            OmegaValue::Indeterminate => f64::NAN,
        }
    }

    pub fn is_determinate(&self) -> bool {
        !matches!(self, OmegaValue::Indeterminate)
    }

    /// Orders determinate values with infinity above every finite value.
    /// Finite values within a relative 1e-12 compare equal.
    pub fn partial_cmp_value(&self, other: &OmegaValue) -> Option<Ordering> {
        use OmegaValue::*;
        match (self, other) {
            (Indeterminate, _) | (_, Indeterminate) => None,
            (Infinite, Infinite) => Some(Ordering::Equal),
            (Infinite, Finite(_)) => Some(Ordering::Greater),
            (Finite(_), Infinite) => Some(Ordering::Less),
            (Finite(a), Finite(b)) => {
                if (a - b).abs() <= OMEGA_TIE_TOLERANCE * a.abs().max(b.abs()) {
                    Some(Ordering::Equal)
                } else {
                    a.partial_cmp(b)
                }
            }
        }
    }

    /// Text form used in CSV output.
    pub fn to_csv_field(&self) -> String {
        match *self {
            OmegaValue::Finite(v) => format!("{v}"),
            OmegaValue::Infinite => "inf".into(),
            OmegaValue::Indeterminate => "nan".into(),
        }
    }
}

impl Serialize for OmegaValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            OmegaValue::Finite(v) => s.serialize_f64(v),
            OmegaValue::Infinite => s.serialize_str("inf"),
            OmegaValue::Indeterminate => s.serialize_str("indeterminate"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaResult {
    pub threshold: f64,
    pub call: f64,
    pub put: f64,
    pub omega: OmegaValue,
}

/// A grid interval, refined by bisection, on which the Omega ranking of two
/// distributions flips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub lower: f64,
    pub upper: f64,
    /// Sign of `Ω_a - Ω_b` at `lower` (+1 or -1); 0 if the bracket collapsed
    /// onto an exact tie.
    pub sign_lower: i8,
    pub sign_upper: i8,
}

/// Finds every grid interval where `sign(Ω_a - Ω_b)` changes and narrows it
/// to at most `grid_step / 1024` by bisecting on the distributions.
pub fn crossing(
    curve_a: &[OmegaResult],
    curve_b: &[OmegaResult],
    dist_a: &EmpiricalDistribution,
    dist_b: &EmpiricalDistribution,
) -> Result<Vec<Crossing>> {
    crossing_with(curve_a, curve_b, |t| {
        omega_sign(&dist_a.omega(t).omega, &dist_b.omega(t).omega)
    })
}

/// As [`crossing`], with the bisection driven by `sign_at`, which must return
/// the sign of `Ω_a - Ω_b` at an arbitrary grid coordinate.
pub fn crossing_with(
    curve_a: &[OmegaResult],
    curve_b: &[OmegaResult],
    sign_at: impl Fn(f64) -> i8,
) -> Result<Vec<Crossing>> {
    if curve_a.len() != curve_b.len()
        || curve_a
            .iter()
            .zip(curve_b)
            .any(|(a, b)| a.threshold != b.threshold)
    {
        return Err(AppraiseError::GridMismatch);
    }
    let grid: Vec<f64> = curve_a.iter().map(|r| r.threshold).collect();
    validate_grid(&grid)?;
    let step = grid
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let target = step / CROSSING_REFINEMENT;

    let signs: Vec<i8> = curve_a
        .iter()
        .zip(curve_b)
        .map(|(a, b)| omega_sign(&a.omega, &b.omega))
        .collect();

    let mut out = Vec::new();
    let mut last: Option<(usize, i8)> = None;
    for (i, &s) in signs.iter().enumerate() {
        if s == 0 {
            continue;
        }
        if let Some((j, prev)) = last {
            if prev != s {
                out.push(refine(&sign_at, grid[j], grid[i], prev, s, target));
            }
        }
        last = Some((i, s));
    }
    Ok(out)
}

fn refine(
    sign_at: &impl Fn(f64) -> i8,
    mut lo: f64,
    mut hi: f64,
    sign_lo: i8,
    sign_hi: i8,
    target: f64,
) -> Crossing {
    while hi - lo > target {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match sign_at(mid) {
            0 => {
                return Crossing {
                    lower: mid,
                    upper: mid,
                    sign_lower: 0,
                    sign_upper: 0,
                }
            }
            s if s == sign_lo => lo = mid,
            _ => hi = mid,
        }
    }
    Crossing {
        lower: lo,
        upper: hi,
        sign_lower: sign_lo,
        sign_upper: sign_hi,
    }
}

/// Sign of `a - b`; ties and indeterminate values give 0.
pub fn omega_sign(a: &OmegaValue, b: &OmegaValue) -> i8 {
    match a.partial_cmp_value(b) {
        Some(Ordering::Greater) => 1,
        Some(Ordering::Less) => -1,
        _ => 0,
    }
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(AppraiseError::EmptyGrid);
    }
    for (i, w) in grid.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(AppraiseError::GridNotIncreasing { index: i + 1 });
        }
    }
    Ok(())
}

/// `lo, lo + step, ...` up to `hi` inclusive (within half a step).
pub fn linear_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(AppraiseError::InvalidSpec {
            field: "grid".into(),
            message: format!("need lo <= hi and step > 0, got {lo}:{hi}:{step}"),
        });
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}
