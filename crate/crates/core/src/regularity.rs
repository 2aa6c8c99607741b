//! Regularity constants of an intersection and the rates they predict.
//!
//! When every normal cone involved is a linear subspace the constants are
//! computed exactly from orthonormal bases. Otherwise they are estimated by
//! sampling unit vectors of the cones on a deterministic low-discrepancy grid;
//! such estimates are lower bounds and carry [`Method::Sampled`].

use serde::{Deserialize, Serialize};

use crate::algorithms::lift;
use crate::error::{Error, Result};
use crate::numkernel::{self, Matrix, Point};
use crate::par::{self, Parallelism};
use crate::sets::{ConeKind, NormalCone, ProjectableSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactSubspace,
    Sampled,
}

impl Method {
    fn join(self, other: Method) -> Method {
        if self == Method::Sampled || other == Method::Sampled {
            Method::Sampled
        } else {
            Method::ExactSubspace
        }
    }
}

/// The condition modulus of a system of normal cones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum CondModulus {
    /// Every cone is `{0}`; the modulus is zero.
    AllInterior,
    Finite {
        k: f64,
        method: Method,
    },
    /// Some nonzero choice of normals sums to zero.
    NotStronglyRegular {
        method: Method,
    },
}

impl CondModulus {
    /// Numeric value; `None` when the intersection is not strongly regular.
    pub fn value(&self) -> Option<f64> {
        match *self {
            CondModulus::AllInterior => Some(0.0),
            CondModulus::Finite { k, .. } => Some(k),
            CondModulus::NotStronglyRegular { .. } => None,
        }
    }

    pub fn method(&self) -> Method {
        match *self {
            CondModulus::AllInterior => Method::ExactSubspace,
            CondModulus::Finite { method, .. } | CondModulus::NotStronglyRegular { method } => {
                method
            }
        }
    }

    pub fn is_strongly_regular(&self) -> bool {
        !matches!(self, CondModulus::NotStronglyRegular { .. })
    }

    /// Averaged-projections constant for `m` sets; `1` when not strongly regular.
    pub fn cbar_avg(&self, m: usize) -> Result<f64> {
        match self.value() {
            Some(k) => cbar_avg(m, k),
            None => Ok(1.0),
        }
    }
}

/// `c̄` for a pair of cones, with the way it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairConstant {
    pub value: f64,
    pub method: Method,
}

/// Below this `λ_min(GᵀG)` counts as zero.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Sampling settings for cones that are not subspaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub samples: usize,
    pub parallelism: Parallelism,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            samples: 512,
            parallelism: Parallelism::default(),
        }
    }
}

fn check_cones(cones: &[&NormalCone]) -> Result<()> {
    let first = cones[0];
    for c in &cones[1..] {
        if c.kind.dim() != first.kind.dim() {
            return Err(Error::DimensionMismatch {
                expected: first.kind.dim(),
                got: c.kind.dim(),
            });
        }
        let gap = (&c.base_point - &first.base_point).norm();
        if gap > ProjectableSet::membership_tolerance(&first.base_point) {
            return Err(Error::invalid(format!(
                "normal cones taken at different points ({gap:.3e} apart)"
            )));
        }
    }
    Ok(())
}

fn basis_matrix(basis: &[Point], dim: usize) -> Matrix {
    if basis.is_empty() {
        return Matrix::zeros(dim, 0);
    }
    Matrix::from_columns(basis)
}

/// `max⟨u, v⟩` over unit `u ∈ N_F` and unit `v ∈ −N_C`, clamped to `[0, 1]`.
///
/// Exact (largest singular value of `B_Fᵀ·B_C`) when both cones are
/// subspaces; otherwise a sampled lower bound.
pub fn cbar_pair(nf: &NormalCone, nc: &NormalCone) -> Result<PairConstant> {
    cbar_pair_with(nf, nc, &Sampling::default())
}

pub fn cbar_pair_with(
    nf: &NormalCone,
    nc: &NormalCone,
    sampling: &Sampling,
) -> Result<PairConstant> {
    check_cones(&[nf, nc])?;
    if nf.kind.is_trivial() || nc.kind.is_trivial() {
        return Ok(PairConstant {
            value: 0.0,
            method: Method::ExactSubspace,
        });
    }
    if let (Some(bf), Some(bc)) = (nf.kind.subspace_basis(), nc.kind.subspace_basis()) {
        let dim = nf.kind.dim();
        let cross = basis_matrix(&bf, dim).transpose() * basis_matrix(&bc, dim);
        let top = numkernel::thin_svd(&cross)?
            .singulars
            .first()
            .copied()
            .unwrap_or(0.0);
        return Ok(PairConstant {
            value: top.clamp(0.0, 1.0),
            method: Method::ExactSubspace,
        });
    }
    cbar_pair_sampled(nf, nc, sampling)
}

/// Sampled lower bound for `c̄`, whatever the cone shapes.
///
/// For a convex cone `K`, `max{⟨u, v⟩ : v ∈ K, ‖v‖ ≤ 1} = ‖Π_K(u)‖`, so only
/// one side needs sampling. Both sides are sampled and the larger value kept.
pub fn cbar_pair_sampled(
    nf: &NormalCone,
    nc: &NormalCone,
    sampling: &Sampling,
) -> Result<PairConstant> {
    check_cones(&[nf, nc])?;
    let neg_c = nc.kind.negated();
    let from_f = sample_max(&nf.kind, sampling, |u| neg_c.project(u).norm());
    let from_c = sample_max(&neg_c, sampling, |v| nf.kind.project(v).norm());
    Ok(PairConstant {
        value: from_f.max(from_c).clamp(0.0, 1.0),
        method: Method::Sampled,
    })
}

/// The condition modulus `k` of the system of normal cones: the least `k`
/// with `Σ‖uᵢ‖² ≤ k²·‖Σuᵢ‖²` for all `uᵢ ∈ N_{Fᵢ}`.
///
/// Exact `1/√λ_min(GᵀG)` when every cone is a subspace, `G` stacking their
/// orthonormal bases; sampled lower bound otherwise.
pub fn cond_modulus(cones: &[NormalCone]) -> Result<CondModulus> {
    cond_modulus_with(cones, &Sampling::default())
}

pub fn cond_modulus_with(cones: &[NormalCone], sampling: &Sampling) -> Result<CondModulus> {
    if cones.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: cones.len(),
        });
    }
    check_cones(&cones.iter().collect::<Vec<_>>())?;
    if cones.iter().all(|c| c.kind.is_trivial()) {
        return Ok(CondModulus::AllInterior);
    }
    let bases: Option<Vec<Vec<Point>>> = cones.iter().map(|c| c.kind.subspace_basis()).collect();
    match bases {
        Some(bases) => {
            let columns: Vec<Point> = bases.into_iter().flatten().collect();
            let lambda = numkernel::gram_min_eig(&columns)?;
            Ok(modulus_from_lambda(lambda, Method::ExactSubspace))
        }
        None => cond_modulus_sampled(cones, sampling),
    }
}

fn modulus_from_lambda(lambda: f64, method: Method) -> CondModulus {
    if lambda <= SINGULAR_TOL {
        CondModulus::NotStronglyRegular { method }
    } else {
        CondModulus::Finite {
            k: 1.0 / lambda.sqrt(),
            method,
        }
    }
}

/// Sampled lower bound on the condition modulus.
pub fn cond_modulus_sampled(cones: &[NormalCone], sampling: &Sampling) -> Result<CondModulus> {
    if cones.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: cones.len(),
        });
    }
    check_cones(&cones.iter().collect::<Vec<_>>())?;
    if cones.iter().all(|c| c.kind.is_trivial()) {
        return Ok(CondModulus::AllInterior);
    }
    let n = cones[0].kind.dim();
    let m = cones.len();
    let product = ConeKind::Product(cones.iter().map(|c| c.kind.clone()).collect());
    // u = (u₁, …, u_m) of unit norm; maximize −‖Σuᵢ‖² to find λ_min
    let min_sq = -sample_max(&product, sampling, |u| {
        let mut s = Point::zeros(n);
        for i in 0..m {
            s += u.rows(i * n, n);
        }
        -s.norm_squared()
    });
    Ok(modulus_from_lambda(min_sq, Method::Sampled))
}

/// `√(1 − 1/(m·k²))`, or `0` for `k = 0`.
pub fn cbar_avg(m: usize, k: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("cbar_avg needs at least one set"));
    }
    if k == 0.0 {
        return Ok(0.0);
    }
    let floor = 1.0 / (m as f64).sqrt();
    if !(k >= floor * (1.0 - 1e-12)) {
        return Err(Error::invalid(format!(
            "condition modulus {k} is below the floor 1/√{m} = {floor}"
        )));
    }
    Ok((1.0 - 1.0 / (m as f64 * k * k)).max(0.0).sqrt())
}

/// `1/√(1 − c̄)`; `None` stands for an infinite modulus (`c̄ ≥ 1`).
pub fn reg_modulus_pair(cbar: f64) -> Option<f64> {
    (cbar < 1.0).then(|| 1.0 / (1.0 - cbar.max(0.0)).sqrt())
}

/// Rate of the inexact alternating iteration with rate constant `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InexactRate {
    pub c: f64,
}

impl InexactRate {
    /// `√(c·√(1−ε²) + ε·√(1−c²))`
    pub fn eval(&self, eps: f64) -> f64 {
        let c = self.c;
        (c * (1.0 - eps * eps).sqrt() + eps * (1.0 - c * c).sqrt()).sqrt()
    }
}

/// Bounds on the alternating and averaged rates in terms of `κ = cond`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltVsAv {
    pub kappa: f64,
    /// `1 − 1/(2κ²)`
    pub averaged: f64,
    /// `1 − 1/κ²`
    pub alternating: f64,
}

impl AltVsAv {
    pub fn new(kappa: f64) -> Self {
        let k2 = kappa * kappa;
        Self {
            kappa,
            averaged: 1.0 - 1.0 / (2.0 * k2),
            alternating: 1.0 - 1.0 / k2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedRates {
    /// Rate constant used for alternating projections, `c > c̄`.
    pub c_alternating: f64,
    /// Rate constant used for averaged projections, `c > c̄_avg`.
    pub c_averaged: f64,
    /// `√c`
    pub rate_alternating: f64,
    /// `c`, when both sets are super-regular
    pub rate_alternating_both_super: f64,
    /// `c`
    pub rate_averaged: f64,
    /// `c²`, when every set is super-regular
    pub rate_averaged_super: f64,
    /// `1 − 1/(k²m)`: per-step reduction factor of `f`
    pub qlinear_factor: f64,
    pub rate_inexact: InexactRate,
    /// Absent when every cone is `{0}`.
    pub alt_vs_av: Option<AltVsAv>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub m_sets: usize,
    pub method: Method,
    pub cbar_pairwise: f64,
    pub cond: CondModulus,
    pub cbar_avg: f64,
    /// `None` when infinite.
    pub reg_modulus: Option<f64>,
    /// `None` when the intersection is not strongly regular.
    pub rates: Option<PredictedRates>,
}

impl RegularityReport {
    pub fn cond_k(&self) -> Option<f64> {
        self.cond.value()
    }
}

/// Inputs of [`predicted_rates`]. Unset rate constants default to the
/// corresponding `c̄ + 1e-6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInputs {
    pub cbar_pairwise: f64,
    pub cond: CondModulus,
    pub m_sets: usize,
    pub method: Method,
    pub c_alternating: Option<f64>,
    pub c_averaged: Option<f64>,
}

const DEFAULT_C_MARGIN: f64 = 1e-6;

fn pick_c(supplied: Option<f64>, cbar: f64, what: &str) -> Result<Option<f64>> {
    match supplied {
        Some(c) if !(c > cbar && c < 1.0) => Err(Error::invalid(format!(
            "{what} rate constant {c} must lie in ({cbar}, 1)"
        ))),
        Some(c) => Ok(Some(c)),
        None => {
            let c = cbar + DEFAULT_C_MARGIN;
            Ok((c < 1.0).then_some(c))
        }
    }
}

pub fn predicted_rates(inputs: &RateInputs) -> Result<RegularityReport> {
    let m = inputs.m_sets;
    let cbar_pair = inputs.cbar_pairwise.clamp(0.0, 1.0);
    let cbar_av = inputs.cond.cbar_avg(m)?;
    let method = inputs.method.join(inputs.cond.method());

    let rates = match inputs.cond.value() {
        Some(k) if cbar_pair < 1.0 => {
            let c_alt = pick_c(inputs.c_alternating, cbar_pair, "alternating")?;
            let c_avg = pick_c(inputs.c_averaged, cbar_av, "averaged")?;
            match (c_alt, c_avg) {
                (Some(ca), Some(cv)) => Some(PredictedRates {
                    c_alternating: ca,
                    c_averaged: cv,
                    rate_alternating: ca.sqrt(),
                    rate_alternating_both_super: ca,
                    rate_averaged: cv,
                    rate_averaged_super: cv * cv,
                    qlinear_factor: if k == 0.0 {
                        0.0
                    } else {
                        1.0 - 1.0 / (k * k * m as f64)
                    },
                    rate_inexact: InexactRate { c: ca },
                    alt_vs_av: (k > 0.0).then(|| AltVsAv::new(k)),
                }),
                _ => None,
            }
        }
        _ => None,
    };

    Ok(RegularityReport {
        m_sets: m,
        method,
        cbar_pairwise: cbar_pair,
        cond: inputs.cond,
        cbar_avg: cbar_av,
        reg_modulus: reg_modulus_pair(cbar_pair),
        rates,
    })
}

/// Full report for a set system at a point `x̄` of the intersection.
///
/// For two sets `c̄` is taken between the two normal cones. For more, it is
/// taken between the product of the normal cones and the normal space of the
/// diagonal in the product space.
pub fn analyze(
    sets: &[ProjectableSet],
    xbar: &Point,
    c_alternating: Option<f64>,
    c_averaged: Option<f64>,
) -> Result<RegularityReport> {
    analyze_with(sets, xbar, c_alternating, c_averaged, &Sampling::default())
}

pub fn analyze_with(
    sets: &[ProjectableSet],
    xbar: &Point,
    c_alternating: Option<f64>,
    c_averaged: Option<f64>,
    sampling: &Sampling,
) -> Result<RegularityReport> {
    let m = sets.len();
    if m < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: m });
    }
    let cones = sets
        .iter()
        .map(|s| s.normal_cone(xbar))
        .collect::<Result<Vec<_>>>()?;
    let cond = cond_modulus_with(&cones, sampling)?;
    let pair = if m == 2 {
        cbar_pair_with(&cones[0], &cones[1], sampling)?
    } else {
        let (prod, diag) = product_pair(&cones, xbar)?;
        cbar_pair_with(&prod, &diag, sampling)?
    };
    predicted_rates(&RateInputs {
        cbar_pairwise: pair.value,
        cond,
        m_sets: m,
        method: pair.method,
        c_alternating,
        c_averaged,
    })
}

/// Normal cones of `∏Fᵢ` and of the diagonal at `(x̄, …, x̄)`.
pub fn product_pair(cones: &[NormalCone], xbar: &Point) -> Result<(NormalCone, NormalCone)> {
    let n = xbar.len();
    let m = cones.len();
    let lifted = lift(xbar, m);
    let prod = NormalCone::new(
        ConeKind::Product(cones.iter().map(|c| c.kind.clone()).collect()),
        lifted.clone(),
    );
    let diagonal = ProjectableSet::diagonal(n, m)?;
    let diag = diagonal.normal_cone(&lifted)?;
    Ok((prod, diag))
}

/// Roberts' generalized golden-ratio constant for dimension `d`: the positive
/// root of `x^{d+1} = x + 1`.
fn golden(d: usize) -> f64 {
    let mut x: f64 = 2.0;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (d as f64 + 1.0));
    }
    x
}

/// Maximum of `score` over unit vectors of `cone`.
///
/// Candidates are each generator on its own plus `sampling.samples`
/// combinations whose coefficients come from a Kronecker sequence pushed
/// through Box–Muller (absolute values on one-sided generators).
fn sample_max<S>(cone: &ConeKind, sampling: &Sampling, score: S) -> f64
where
    S: Fn(&Point) -> f64 + Sync,
{
    let gens = cone.generators();
    if gens.is_empty() {
        return f64::NEG_INFINITY;
    }
    let g = gens.len();
    let pairs = g.div_ceil(2);
    let phi = golden(2 * pairs);
    let alpha: Vec<f64> = (1..=2 * pairs)
        .map(|j| phi.powi(-(j as i32)).fract())
        .collect();

    let combine = |coeffs: &[f64]| -> Option<Point> {
        let mut v = Point::zeros(gens[0].0.len());
        for ((gen, nonneg), &a) in gens.iter().zip(coeffs) {
            let a = if *nonneg { a.abs() } else { a };
            v.axpy(a, gen, 1.0);
        }
        let norm = v.norm();
        (norm > 1e-300).then(|| v / norm)
    };

    let singles = par::map_range(sampling.parallelism, g, |i| {
        let mut e = vec![0.0; g];
        e[i] = 1.0;
        combine(&e).map_or(f64::NEG_INFINITY, |u| score(&u))
    });
    let mixed = par::map_range(sampling.parallelism, sampling.samples, |i| {
        let t = (i + 1) as f64;
        let mut coeffs = Vec::with_capacity(2 * pairs);
        for p in 0..pairs {
            let u1 = (0.5 + t * alpha[2 * p]).fract().max(1e-12);
            let u2 = (0.5 + t * alpha[2 * p + 1]).fract();
            let r = (-2.0 * u1.ln()).sqrt();
            let angle = std::f64::consts::TAU * u2;
            coeffs.push(r * angle.cos());
            coeffs.push(r * angle.sin());
        }
        combine(&coeffs[..g]).map_or(f64::NEG_INFINITY, |u| score(&u))
    });
    singles
        .into_iter()
        .chain(mixed)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn p(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    fn normal_line(theta: f64) -> NormalCone {
        NormalCone::new(
            ConeKind::Subspace {
                dim: 2,
                basis: vec![p(&[theta.cos(), theta.sin()])],
            },
            p(&[0.0, 0.0]),
        )
    }

    fn zero_cone() -> NormalCone {
        NormalCone::new(
            ConeKind::Subspace {
                dim: 2,
                basis: vec![],
            },
            p(&[0.0, 0.0]),
        )
    }

    #[test]
    fn cbar_pair_examples() {
        let c = cbar_pair(&normal_line(0.0), &normal_line(FRAC_PI_2)).unwrap();
        assert_abs_diff_eq!(c.value, 0.0, epsilon = 1e-15);
        let c = cbar_pair(&normal_line(0.0), &normal_line(FRAC_PI_3)).unwrap();
        assert_abs_diff_eq!(c.value, 0.5, epsilon = 1e-15);
        assert_eq!(c.method, Method::ExactSubspace);
        let c = cbar_pair(&normal_line(0.4), &normal_line(0.4)).unwrap();
        assert_abs_diff_eq!(c.value, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn cond_modulus_examples() {
        let k = cond_modulus(&[normal_line(0.0), normal_line(FRAC_PI_2)]).unwrap();
        assert_abs_diff_eq!(k.value().unwrap(), 1.0, epsilon = 1e-15);
        let k = cond_modulus(&[normal_line(0.0), normal_line(FRAC_PI_3)]).unwrap();
        assert_abs_diff_eq!(k.value().unwrap(), 2f64.sqrt(), epsilon = 1e-12);
        assert_eq!(
            cond_modulus(&[zero_cone(), zero_cone()]).unwrap(),
            CondModulus::AllInterior
        );
        let k = cond_modulus(&[normal_line(0.3), normal_line(0.3)]).unwrap();
        assert!(!k.is_strongly_regular());
        assert_eq!(k.value(), None);
    }

    #[test]
    fn cbar_avg_examples() {
        assert_abs_diff_eq!(
            cbar_avg(2, 2f64.sqrt()).unwrap(),
            (0.75f64).sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(cbar_avg(2, 1.0).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(cbar_avg(2, 0.0).unwrap(), 0.0);
        assert!(cbar_avg(2, 0.5).is_err());
    }

    #[test]
    fn reg_modulus_examples() {
        assert_eq!(reg_modulus_pair(0.0), Some(1.0));
        assert_abs_diff_eq!(reg_modulus_pair(0.75).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(reg_modulus_pair(0.5).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(reg_modulus_pair(1.0), None);
    }

    #[test]
    fn predicted_rate_examples() {
        let inputs = RateInputs {
            cbar_pairwise: 0.5,
            cond: CondModulus::Finite {
                k: 2f64.sqrt(),
                method: Method::ExactSubspace,
            },
            m_sets: 2,
            method: Method::ExactSubspace,
            c_alternating: Some(0.6),
            c_averaged: None,
        };
        let r = predicted_rates(&inputs).unwrap();
        let rates = r.rates.unwrap();
        assert_abs_diff_eq!(rates.qlinear_factor, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(rates.rate_inexact.eval(0.0), 0.6f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            rates.rate_inexact.eval(0.2),
            0.74787f64.sqrt(),
            epsilon = 1e-5
        );
        assert_abs_diff_eq!(rates.rate_inexact.eval(0.2), 0.86480, epsilon = 1e-5);
        assert_abs_diff_eq!(rates.rate_alternating, 0.6f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(rates.c_averaged, 0.75f64.sqrt() + 1e-6, epsilon = 1e-15);
        let bounds = rates.alt_vs_av.unwrap();
        assert_abs_diff_eq!(bounds.averaged, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(bounds.alternating, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.reg_modulus.unwrap(), 2f64.sqrt(), epsilon = 1e-15);

        let bad = RateInputs {
            c_alternating: Some(0.4),
            ..inputs
        };
        assert!(predicted_rates(&bad).is_err());
    }

    #[test]
    fn not_strongly_regular_report_has_no_rates() {
        let r = predicted_rates(&RateInputs {
            cbar_pairwise: 1.0,
            cond: CondModulus::NotStronglyRegular {
                method: Method::ExactSubspace,
            },
            m_sets: 2,
            method: Method::ExactSubspace,
            c_alternating: None,
            c_averaged: None,
        })
        .unwrap();
        assert!(r.rates.is_none());
        assert_eq!(r.cbar_avg, 1.0);
        assert_eq!(r.reg_modulus, None);
    }

    #[test]
    fn sampled_matches_exact_on_lines() {
        let s = Sampling::default();
        let (a, b) = (normal_line(0.2), normal_line(1.1));
        let exact = cbar_pair(&a, &b).unwrap().value;
        let sampled = cbar_pair_sampled(&a, &b, &s).unwrap();
        assert_eq!(sampled.method, Method::Sampled);
        assert!(sampled.value <= exact + 1e-12);
        assert_abs_diff_eq!(sampled.value, exact, epsilon = 1e-12);

        let cones = [a, b];
        let exact = cond_modulus(&cones).unwrap().value().unwrap();
        let sampled = cond_modulus_sampled(&cones, &s).unwrap().value().unwrap();
        assert!(sampled <= exact * (1.0 + 1e-12));
        assert!(sampled >= 0.99 * exact);
    }

    #[test]
    fn rays_use_sampling() {
        let r1 = NormalCone::new(
            ConeKind::Ray {
                direction: p(&[1.0, 0.0]),
                two_sided: false,
            },
            p(&[0.0, 0.0]),
        );
        let r2 = NormalCone::new(
            ConeKind::Ray {
                direction: p(&[-1.0, 0.0]),
                two_sided: false,
            },
            p(&[0.0, 0.0]),
        );
        // u = e₁, v ∈ −N = R₊e₁ gives ⟨u, v⟩ = 1
        let c = cbar_pair(&r1, &r2).unwrap();
        assert_eq!(c.method, Method::Sampled);
        assert_abs_diff_eq!(c.value, 1.0, epsilon = 1e-12);
        let k = cond_modulus(&[r1.clone(), r1.clone()]).unwrap();
        assert_eq!(k.method(), Method::Sampled);
        // same ray twice: worst case u₂ = 0 gives k = 1
        assert_abs_diff_eq!(k.value().unwrap(), 1.0, epsilon = 1e-12);
        // opposite rays are not strongly regular; sampling only approaches it
        let k = cond_modulus(&[r1, r2]).unwrap();
        assert!(k.value().is_none_or(|k| k > 10.0));
    }

    #[test]
    fn analyze_two_lines() {
        let f =
            ProjectableSet::line(p(&[0.0, 0.0]), p(&[FRAC_PI_3.cos(), FRAC_PI_3.sin()])).unwrap();
        let c = ProjectableSet::line(p(&[0.0, 0.0]), p(&[1.0, 0.0])).unwrap();
        let r = analyze(&[f, c], &p(&[0.0, 0.0]), None, None).unwrap();
        assert_abs_diff_eq!(r.cbar_pairwise, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.cond_k().unwrap(), 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.cbar_avg, (FRAC_PI_3 / 2.0).cos(), epsilon = 1e-12);
        assert_eq!(r.method, Method::ExactSubspace);
    }

    #[test]
    fn product_pair_matches_cbar_avg() {
        // three planes in R³ with independent normals
        let sets: Vec<ProjectableSet> = [
            [p(&[1.0, 0.0, 0.0]), p(&[0.0, 1.0, 0.0])],
            [p(&[1.0, 0.0, 0.3]), p(&[0.0, 1.0, 0.2])],
            [p(&[0.0, 1.0, 0.0]), p(&[0.0, 0.5, 1.0])],
        ]
        .into_iter()
        .map(|d| ProjectableSet::affine(p(&[0.0, 0.0, 0.0]), &d).unwrap())
        .collect();
        let r = analyze(&sets, &p(&[0.0, 0.0, 0.0]), None, None).unwrap();
        let k = r.cond_k().unwrap();
        assert_abs_diff_eq!(r.cbar_pairwise, cbar_avg(3, k).unwrap(), epsilon = 1e-10);
    }

    #[test]
    fn golden_constants() {
        assert_abs_diff_eq!(golden(1), (1.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(golden(2), 1.324717957244746, epsilon = 1e-12);
    }
}
