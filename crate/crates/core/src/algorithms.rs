//! Projection iterations. Every run returns a [`Trace`].
//!
//! Bookkeeping is the same for all runs: at every recorded iterate `x_k` the
//! run projects onto every set of the system, records the distances, `f` and
//! `‖∇f‖`, and then takes its step. For alternating runs each recorded iterate
//! is one projection; for averaged and cyclic runs it is one sweep.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, SetEvaluation};
use crate::error::{Error, Result};
use crate::numkernel::{self, Point};
use crate::par::Parallelism;
use crate::sets::{mean_of, ProjectableSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Alternating,
    Averaged,
    AveragedViaProduct,
    Cyclic,
    InexactAlternating,
    Perturbed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Cap on recorded steps (projections for alternating runs, sweeps otherwise).
    pub max_iter: usize,
    /// Averaged/cyclic runs stop when `f ≤ stop_tol²`; alternating runs when
    /// both distances are at most `stop_tol`.
    pub stop_tol: f64,
    pub seed: u64,
    /// Tolerance `ε` of the inexact iteration; `0` makes it exact.
    pub inexact_eps: f64,
    /// Keep every iterate. When false only the first and last are kept.
    pub store_iterates: bool,
    pub parallelism: Parallelism,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            stop_tol: 1e-10,
            seed: 0,
            inexact_eps: 0.0,
            store_iterates: true,
            parallelism: Parallelism::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if !(self.stop_tol > 0.0) {
            return Err(Error::invalid("stop_tol must be positive"));
        }
        if !(0.0..1.0).contains(&self.inexact_eps) {
            return Err(Error::invalid("inexact_eps must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Verification record for one inexact step onto `F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InexactStep {
    /// Index of the accepted iterate `x_{2n+1}`.
    pub index: usize,
    /// Distance from the normalized step direction to `N_F(x_{2n+1})`.
    pub cone_distance: f64,
    /// `‖x_{2n+1} − x_{2n}‖`
    pub step: f64,
    /// `‖x_{2n} − x_{2n−1}‖`
    pub prev_step: f64,
    /// Tangential slip relative to the exact gap.
    pub theta: f64,
}

mod point_list {
    use super::Point;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(points: &[Point], s: S) -> Result<S::Ok, S::Error> {
        let raw: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Point>, D::Error> {
        let raw: Vec<Vec<f64>> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(Point::from_vec).collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trace {
    pub algorithm: Algorithm,
    pub set_count: usize,
    /// Number of recorded iterates (equals `f_values.len()`).
    pub iterations: usize,
    /// All iterates, or just the first and last when `store_iterates` is off.
    #[serde(with = "point_list")]
    pub iterates: Vec<Point>,
    pub per_set_distances: Vec<Vec<f64>>,
    pub f_values: Vec<f64>,
    pub grad_norms: Vec<f64>,
    /// `‖x_{k+1} − x_k‖`, one shorter than `f_values`.
    pub step_norms: Vec<f64>,
    /// `f_{k+1}/f_k`, one shorter than `f_values`.
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub seed: u64,
    pub degenerate_projections: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inexact_steps: Vec<InexactStep>,
}

impl Trace {
    fn new(algorithm: Algorithm, set_count: usize, seed: u64) -> Self {
        Self {
            algorithm,
            set_count,
            iterations: 0,
            iterates: Vec::new(),
            per_set_distances: Vec::new(),
            f_values: Vec::new(),
            grad_norms: Vec::new(),
            step_norms: Vec::new(),
            ratios: Vec::new(),
            converged: false,
            seed,
            degenerate_projections: 0,
            inexact_steps: Vec::new(),
        }
    }

    fn record(&mut self, x: &Point, eval: &SetEvaluation, store: bool) {
        let f = eval.f();
        if let Some(&prev) = self.f_values.last() {
            self.ratios.push(if prev > 0.0 { f / prev } else { 0.0 });
        }
        if store || self.iterates.is_empty() {
            self.iterates.push(x.clone());
        } else {
            // keep [first, latest]
            if self.iterates.len() == 2 {
                self.iterates[1] = x.clone();
            } else {
                self.iterates.push(x.clone());
            }
        }
        self.per_set_distances.push(eval.distances.clone());
        self.f_values.push(f);
        self.grad_norms.push(eval.gradient(x).norm());
        self.degenerate_projections += eval.degenerate;
        self.iterations += 1;
    }

    pub fn last_iterate(&self) -> Option<&Point> {
        self.iterates.last()
    }

    /// `f_{k+1}/f_k` above the floating floor.
    pub fn qlinear_ratios(&self) -> Vec<f64> {
        diagnostics::qlinear_ratios(&self.f_values)
    }

    /// `‖x_k − target‖` for every stored iterate.
    pub fn errors_to(&self, target: &Point) -> Vec<f64> {
        self.iterates.iter().map(|x| (x - target).norm()).collect()
    }
}

fn check_same_dims(sets: &[ProjectableSet], x0: &Point) -> Result<()> {
    for s in sets {
        if s.ambient_dim() != x0.len() {
            return Err(Error::DimensionMismatch {
                expected: s.ambient_dim(),
                got: x0.len(),
            });
        }
    }
    Ok(())
}

fn require_member(set: &ProjectableSet, x: &Point) -> Result<()> {
    let d = set.distance(x)?;
    if d > ProjectableSet::membership_tolerance(x) {
        return Err(Error::NotInSet { distance: d });
    }
    Ok(())
}

/// Alternating projections `x_{2n+1} ∈ P_F(x_{2n})`, `x_{2n+2} ∈ P_C(x_{2n+1})`
/// from `x0 ∈ C`.
pub fn run_alternating(
    f: &ProjectableSet,
    c: &ProjectableSet,
    x0: &Point,
    cfg: &RunConfig,
) -> Result<Trace> {
    alternating_impl(f, c, x0, cfg, Algorithm::Alternating)
}

fn alternating_impl(
    f: &ProjectableSet,
    c: &ProjectableSet,
    x0: &Point,
    cfg: &RunConfig,
    tag: Algorithm,
) -> Result<Trace> {
    cfg.validate()?;
    let pair = [f.clone(), c.clone()];
    check_same_dims(&pair, x0)?;
    require_member(c, x0)?;

    let mut trace = Trace::new(tag, 2, cfg.seed);
    let mut x = x0.clone();
    for k in 0..=cfg.max_iter {
        let eval = diagnostics::evaluate(cfg.parallelism, &pair, &x)?;
        trace.record(&x, &eval, cfg.store_iterates);
        if eval.distances.iter().all(|&d| d <= cfg.stop_tol) {
            trace.converged = true;
            break;
        }
        if k == cfg.max_iter {
            break;
        }
        // even iterates sit in C and step onto F
        let next = eval.projections[k % 2].clone();
        trace.step_norms.push((&next - &x).norm());
        x = next;
    }
    Ok(trace)
}

/// Averaged projections `x_{k+1} = (1/m)·Σ P_{Fᵢ}(x_k)`.
pub fn run_averaged(sets: &[ProjectableSet], x0: &Point, cfg: &RunConfig) -> Result<Trace> {
    cfg.validate()?;
    if sets.len() < 2 {
        return Err(Error::invalid(
            "averaged projections need at least two sets",
        ));
    }
    check_same_dims(sets, x0)?;

    let mut trace = Trace::new(Algorithm::Averaged, sets.len(), cfg.seed);
    let mut x = x0.clone();
    let tol2 = cfg.stop_tol * cfg.stop_tol;
    for k in 0..=cfg.max_iter {
        let eval = diagnostics::evaluate(cfg.parallelism, sets, &x)?;
        trace.record(&x, &eval, cfg.store_iterates);
        if eval.f() <= tol2 {
            trace.converged = true;
            break;
        }
        if k == cfg.max_iter {
            break;
        }
        let next = mean_of(&eval.projections);
        trace.step_norms.push((&next - &x).norm());
        x = next;
    }
    Ok(trace)
}

/// Averaged projections realised as alternating projections between
/// `F = ∏ Fᵢ` and the diagonal `L = {(x, …, x)}` of the product space,
/// starting from `(x0, …, x0)`. Base-space iterates are read off the points
/// of `L`.
pub fn run_averaged_via_product(
    sets: &[ProjectableSet],
    x0: &Point,
    cfg: &RunConfig,
) -> Result<Trace> {
    cfg.validate()?;
    if sets.len() < 2 {
        return Err(Error::invalid(
            "averaged projections need at least two sets",
        ));
    }
    check_same_dims(sets, x0)?;
    let n = x0.len();
    let m = sets.len();
    let product = ProjectableSet::product(sets.to_vec())?.with_parallelism(cfg.parallelism);
    let diagonal = ProjectableSet::diagonal(n, m)?;

    let mut trace = Trace::new(Algorithm::AveragedViaProduct, m, cfg.seed);
    let tol2 = cfg.stop_tol * cfg.stop_tol;
    let mut y = lift(x0, m);
    for k in 0..=cfg.max_iter {
        let x = y.rows(0, n).into_owned();
        let z = product.project_flagged(&y)?;
        let projections: Vec<Point> = (0..m)
            .map(|i| z.point.rows(i * n, n).into_owned())
            .collect();
        let distances = projections.iter().map(|p| (&x - p).norm()).collect();
        let eval = SetEvaluation {
            projections,
            distances,
            degenerate: usize::from(z.degenerate),
        };
        trace.record(&x, &eval, cfg.store_iterates);
        if eval.f() <= tol2 {
            trace.converged = true;
            break;
        }
        if k == cfg.max_iter {
            break;
        }
        y = diagonal.project(&z.point)?;
        trace.step_norms.push((y.rows(0, n) - &x).norm());
    }
    Ok(trace)
}

/// `(x, …, x)` with `copies` blocks.
pub fn lift(x: &Point, copies: usize) -> Point {
    let n = x.len();
    Point::from_fn(n * copies, |i, _| x[i % n])
}

/// Cyclic projections `x_{k+1} = P_{F_m}(⋯P_{F_1}(x_k))`. No rate guarantee
/// for three or more sets; offered for comparison only.
pub fn run_cyclic(sets: &[ProjectableSet], x0: &Point, cfg: &RunConfig) -> Result<Trace> {
    cfg.validate()?;
    if sets.len() < 2 {
        return Err(Error::invalid("cyclic projections need at least two sets"));
    }
    check_same_dims(sets, x0)?;

    let mut trace = Trace::new(Algorithm::Cyclic, sets.len(), cfg.seed);
    let mut x = x0.clone();
    let tol2 = cfg.stop_tol * cfg.stop_tol;
    for k in 0..=cfg.max_iter {
        let eval = diagnostics::evaluate(cfg.parallelism, sets, &x)?;
        trace.record(&x, &eval, cfg.store_iterates);
        if eval.f() <= tol2 {
            trace.converged = true;
            break;
        }
        if k == cfg.max_iter {
            break;
        }
        let mut next = eval.projections[0].clone();
        for s in &sets[1..] {
            let p = s.project_flagged(&next)?;
            trace.degenerate_projections += usize::from(p.degenerate);
            next = p.point;
        }
        trace.step_norms.push((&next - &x).norm());
        x = next;
    }
    Ok(trace)
}

/// A verified inexact step onto `F`.
#[derive(Debug, Clone)]
pub struct InexactCandidate {
    pub point: Point,
    pub theta: f64,
    pub cone_distance: f64,
    pub step: f64,
}

const INEXACT_BISECTIONS: usize = 40;
const INEXACT_RETRIES: usize = 8;

fn inexact_check(f: &ProjectableSet, q: &Point, x_cur: &Point) -> Result<(f64, f64)> {
    let dir = x_cur - q;
    let step = dir.norm();
    if step == 0.0 {
        return Ok((0.0, 0.0));
    }
    let cone = f.normal_cone(q)?;
    Ok((cone.distance(&(dir / step)), step))
}

/// Produce `x_{2n+1} ∈ F` from `x_prev = x_{2n−1}` and `x_cur = x_{2n}`.
///
/// The exact projection `p = P_F(x_cur)` is pushed along a random direction
/// tangent to `F` (the residual of a Gaussian vector after removing its
/// normal-cone component) by `θ·‖x_cur − p‖`, then projected back onto `F`.
/// The largest `θ ∈ [0, theta_max]` passing both acceptance tests is found by
/// bisection:
///
/// - `‖x_{2n+1} − x_cur‖ ≤ ‖x_cur − x_prev‖`
/// - `d_{N_F(x_{2n+1})}((x_cur − x_{2n+1})/‖x_cur − x_{2n+1}‖) ≤ ε`
///
/// `θ = 0` returns the exact projection.
pub fn inexact_candidate<R: Rng>(
    f: &ProjectableSet,
    x_prev: &Point,
    x_cur: &Point,
    eps: f64,
    theta_max: f64,
    rng: &mut R,
) -> Result<InexactCandidate> {
    let p = f.project(x_cur)?;
    let gap = (x_cur - &p).norm();
    let prev_step = (x_cur - x_prev).norm();
    let exact = |p: Point| -> Result<InexactCandidate> {
        let (cone_distance, step) = inexact_check(f, &p, x_cur)?;
        Ok(InexactCandidate {
            point: p,
            theta: 0.0,
            cone_distance,
            step,
        })
    };
    if gap == 0.0 || theta_max <= 0.0 || eps <= 0.0 {
        return exact(p);
    }

    let cone = f.normal_cone(&p)?;
    let r = Point::from_fn(p.len(), |_, _| rng.sample(StandardNormal));
    let tangent = &r - cone.project(&r);
    let tn = tangent.norm();
    if tn <= 1e-12 * r.norm() {
        return exact(p);
    }
    let tangent = tangent / tn;

    let try_theta = |theta: f64| -> Result<Option<InexactCandidate>> {
        let q = f.project(&(&p + &tangent * (theta * gap)))?;
        let (cone_distance, step) = inexact_check(f, &q, x_cur)?;
        Ok(
            (step <= prev_step && cone_distance <= eps).then_some(InexactCandidate {
                point: q,
                theta,
                cone_distance,
                step,
            }),
        )
    };

    if let Some(c) = try_theta(theta_max)? {
        return Ok(c);
    }
    let (mut lo, mut hi) = (0.0, theta_max);
    let mut best = None;
    for _ in 0..INEXACT_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        match try_theta(mid)? {
            Some(c) => {
                lo = mid;
                best = Some(c);
            }
            None => hi = mid,
        }
    }
    match best {
        Some(c) => Ok(c),
        None => exact(p),
    }
}

/// Inexact alternating projections: exact steps onto `C`, verified relaxed
/// steps onto `F`. `x1` is the exact projection of `x0 ∈ C`.
pub fn run_inexact_alternating(
    f: &ProjectableSet,
    c: &ProjectableSet,
    x0: &Point,
    cfg: &RunConfig,
) -> Result<Trace> {
    run_inexact_alternating_with(f, c, x0, cfg, 1.0)
}

/// [`run_inexact_alternating`] with an explicit cap on the tangential slip.
pub fn run_inexact_alternating_with(
    f: &ProjectableSet,
    c: &ProjectableSet,
    x0: &Point,
    cfg: &RunConfig,
    theta_max: f64,
) -> Result<Trace> {
    cfg.validate()?;
    let pair = [f.clone(), c.clone()];
    check_same_dims(&pair, x0)?;
    require_member(c, x0)?;

    let mut rng = numkernel::seeded_rng(cfg.seed);
    let mut trace = Trace::new(Algorithm::InexactAlternating, 2, cfg.seed);
    let mut prev = x0.clone();
    let mut x = x0.clone();
    for k in 0..=cfg.max_iter {
        let eval = diagnostics::evaluate(cfg.parallelism, &pair, &x)?;
        trace.record(&x, &eval, cfg.store_iterates);
        if eval.distances.iter().all(|&d| d <= cfg.stop_tol) {
            trace.converged = true;
            break;
        }
        if k == cfg.max_iter {
            break;
        }
        let next = if k % 2 == 1 {
            eval.projections[1].clone()
        } else if k == 0 {
            eval.projections[0].clone()
        } else {
            let prev_step = (&x - &prev).norm();
            let mut accepted = None;
            for _ in 0..INEXACT_RETRIES {
                let cand = inexact_candidate(f, &prev, &x, cfg.inexact_eps, theta_max, &mut rng)?;
                let tol = 1e-12;
                if cand.step <= prev_step * (1.0 + tol)
                    && cand.cone_distance <= cfg.inexact_eps + tol
                {
                    accepted = Some(cand);
                    break;
                }
            }
            let cand = accepted.ok_or(Error::InexactInfeasible {
                attempts: INEXACT_RETRIES,
            })?;
            trace.inexact_steps.push(InexactStep {
                index: k + 1,
                cone_distance: cand.cone_distance,
                step: cand.step,
                prev_step,
                theta: cand.theta,
            });
            cand.point
        };
        trace.step_norms.push((&next - &x).norm());
        prev = std::mem::replace(&mut x, next);
    }
    Ok(trace)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbedRun {
    pub trace: Trace,
    #[serde(with = "point_serde")]
    pub limit: Point,
    /// `‖x̃ − x̄‖`
    pub displacement: f64,
    /// `‖d‖`
    pub shift_norm: f64,
    pub rate_c: f64,
    /// `((1+c)/(1−c))·‖d‖`
    pub bound: f64,
}

mod point_serde {
    use super::Point;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(p: &Point, s: S) -> Result<S::Ok, S::Error> {
        p.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Point, D::Error> {
        Ok(Point::from_vec(Vec::deserialize(d)?))
    }
}

/// Limit-point bound `((1+c)/(1−c))·‖d‖`.
pub fn perturbation_bound(c: f64, shift_norm: f64) -> f64 {
    (1.0 + c) / (1.0 - c) * shift_norm
}

/// Alternating projections on `d + F` and `C` from `x̄ ∈ F ∩ C`.
pub fn run_perturbed(
    f: &ProjectableSet,
    c: &ProjectableSet,
    shift: &Point,
    xbar: &Point,
    rate_c: f64,
    cfg: &RunConfig,
) -> Result<PerturbedRun> {
    if !(rate_c > 0.0 && rate_c < 1.0) {
        return Err(Error::invalid("rate constant c must lie in (0, 1)"));
    }
    require_member(f, xbar)?;
    let moved = ProjectableSet::translate(f.clone(), shift.clone())?;
    let mut trace = alternating_impl(&moved, c, xbar, cfg, Algorithm::Perturbed)?;
    trace.algorithm = Algorithm::Perturbed;
    let limit = trace
        .last_iterate()
        .cloned()
        .unwrap_or_else(|| xbar.clone());
    let shift_norm = shift.norm();
    Ok(PerturbedRun {
        displacement: (&limit - xbar).norm(),
        limit,
        shift_norm,
        rate_c,
        bound: perturbation_bound(rate_c, shift_norm),
        trace,
    })
}
