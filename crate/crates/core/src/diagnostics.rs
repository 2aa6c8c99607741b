//! Half the mean-squared distance `f = (1/2m)·Σ d²_{Fᵢ}`, its gradient, the
//! value/gradient sandwich, Q-ratios and R-linear rate fits.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::Point;
use crate::par::{self, Parallelism};
use crate::sets::{mean_of, ProjectableSet};

/// Distances below this are rounding noise and are not used in rate fits.
pub const DISTANCE_FLOOR: f64 = 1e-13;
/// Values of `f` below this are rounding noise.
pub const F_FLOOR: f64 = 1e-26;

/// Projections of one point onto every set of a system.
#[derive(Debug, Clone)]
pub struct SetEvaluation {
    pub projections: Vec<Point>,
    pub distances: Vec<f64>,
    pub degenerate: usize,
}

impl SetEvaluation {
    pub fn f(&self) -> f64 {
        msd_from_distances(&self.distances)
    }

    /// `x − mean(P_{Fᵢ}(x))`.
    pub fn gradient(&self, x: &Point) -> Point {
        x - mean_of(&self.projections)
    }
}

pub fn evaluate(mode: Parallelism, sets: &[ProjectableSet], x: &Point) -> Result<SetEvaluation> {
    if sets.is_empty() {
        return Err(Error::invalid("empty set system"));
    }
    let projected = par::try_map(mode, sets, |s| s.project_flagged(x))?;
    let degenerate = projected.iter().filter(|p| p.degenerate).count();
    let projections: Vec<Point> = projected.into_iter().map(|p| p.point).collect();
    let distances = projections.iter().map(|p| (x - p).norm()).collect();
    Ok(SetEvaluation {
        projections,
        distances,
        degenerate,
    })
}

/// `(1/2m)·Σ dᵢ²`.
pub fn msd_from_distances(distances: &[f64]) -> f64 {
    let m = distances.len() as f64;
    distances.iter().map(|d| d * d).sum::<f64>() / (2.0 * m)
}

pub fn msd(sets: &[ProjectableSet], x: &Point) -> Result<f64> {
    Ok(evaluate(Parallelism::Sequential, sets, x)?.f())
}

/// `∇f(x) = x − (1/m)·Σ P_{Fᵢ}(x)`; valid where every set is prox-regular.
pub fn msd_gradient(sets: &[ProjectableSet], x: &Point) -> Result<Point> {
    Ok(evaluate(Parallelism::Sequential, sets, x)?.gradient(x))
}

/// Relative error `‖g − g_fd‖ / max(‖g‖, ‖g_fd‖)` between the closed-form
/// gradient and central differences of `f`.
pub fn gradient_fd_error(sets: &[ProjectableSet], x: &Point, step: f64) -> Result<f64> {
    let g = msd_gradient(sets, x)?;
    let fd = crate::numkernel::fd_gradient(|y| msd(sets, y).unwrap_or(f64::NAN), x, step)?;
    let scale = g.norm().max(fd.norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((g - fd).norm() / scale)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SandwichReport {
    pub f: f64,
    pub grad_norm_sq: f64,
    /// `½‖∇f‖²`
    pub lower: f64,
    /// `(k²m/2)‖∇f‖²`
    pub upper: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
    /// `f − lower`
    pub lower_slack: f64,
    /// `upper − f`
    pub upper_slack: f64,
}

/// Relative slack allowed when checking either side of the sandwich.
pub const SANDWICH_TOL: f64 = 1e-10;

/// Evaluate `½‖∇f‖² ≤ f ≤ (k²m/2)‖∇f‖²` at `x`. Violations are reported.
///
/// The lower bound holds for any closed sets; the upper one only near a point
/// of strongly regular intersection with `k ≥ cond`.
pub fn check_sandwich(sets: &[ProjectableSet], x: &Point, k: f64) -> Result<SandwichReport> {
    let eval = evaluate(Parallelism::Sequential, sets, x)?;
    let f = eval.f();
    let g2 = eval.gradient(x).norm_squared();
    let m = sets.len() as f64;
    let lower = 0.5 * g2;
    let upper = 0.5 * k * k * m * g2;
    Ok(SandwichReport {
        f,
        grad_norm_sq: g2,
        lower,
        upper,
        lower_holds: lower <= f * (1.0 + SANDWICH_TOL),
        upper_holds: f <= upper * (1.0 + SANDWICH_TOL),
        lower_slack: f - lower,
        upper_slack: upper - f,
    })
}

/// `f_{k+1}/f_k`, stopping once either value drops below [`F_FLOOR`].
pub fn qlinear_ratios(f_values: &[f64]) -> Vec<f64> {
    f_values
        .windows(2)
        .take_while(|w| w[0] >= F_FLOOR && w[1] >= F_FLOOR)
        .map(|w| w[1] / w[0])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub window: Range<usize>,
    /// Sum of squared residuals of the `log10` fit.
    pub residual: f64,
    /// Entries dropped at or after the first value below [`DISTANCE_FLOOR`].
    pub floor_excluded: usize,
}

pub const MIN_FIT_POINTS: usize = 8;

/// Fit `series[k] ≈ C·rate^k` by least squares on `log10` over the last half
/// of the admissible prefix (entries above [`DISTANCE_FLOOR`]).
pub fn fit_rlinear_rate(series: &[f64]) -> Result<RateFit> {
    let admissible = series
        .iter()
        .take_while(|v| v.is_finite() && **v > DISTANCE_FLOOR)
        .count();
    if admissible < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: admissible,
        });
    }
    let window = admissible / 2..admissible;
    let pts: Vec<(f64, f64)> = window
        .clone()
        .map(|k| (k as f64, series[k].log10()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let residual = pts
        .iter()
        .map(|p| (p.1 - (my + slope * (p.0 - mx))).powi(2))
        .sum();
    Ok(RateFit {
        rate: 10f64.powf(slope),
        window,
        residual,
        floor_excluded: series.len() - admissible,
    })
}
