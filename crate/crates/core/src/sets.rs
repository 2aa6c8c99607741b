//! Closed sets with exact projections and normal-cone descriptions.
//!
//! Every set lives in a flat Euclidean space. Matrix-valued sets
//! ([`ProjectableSet::orthonormal_rows`], [`ProjectableSet::row_space`]) use
//! the row-major flattening of [`crate::numkernel::flatten`].
//!
//! Projections are deterministic. Where the nearest point is not unique the
//! tie is resolved as follows:
//!
//! - a sphere projected from its centre is an error unless the set was built
//!   with [`ProjectableSet::with_center_fallback`], which returns
//!   `center + radius·e₁`;
//! - a rank-deficient matrix projected onto the orthonormal-rows manifold is
//!   completed from the computed SVD bases and flagged as degenerate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{self, flatten, unflatten, Matrix, Point};
use crate::par::{self, Parallelism};

/// Relative membership tolerance: `x ∈ S` iff `d_S(x) ≤ MEMBERSHIP_TOL·(1 + ‖x‖)`.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Niceness class of a set near the points of interest. Supplied by the
/// constructor (or the caller), never verified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularityClass {
    Convex,
    ProxRegular,
    SuperRegularOnly,
    Unclassified,
}

impl RegularityClass {
    /// Prox-regular (which includes convex).
    pub fn is_prox_regular(self) -> bool {
        matches!(self, RegularityClass::Convex | RegularityClass::ProxRegular)
    }

    /// Super-regular (implied by prox-regularity).
    pub fn is_super_regular(self) -> bool {
        self != RegularityClass::Unclassified
    }
}

/// A projection together with its tie-break flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Projected {
    pub point: Point,
    /// The nearest point was not unique and a representative was chosen.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub enum SetKind {
    /// `anchor + span(basis)`, basis orthonormal.
    Affine { anchor: Point, basis: Vec<Point> },
    /// `{(x, …, x)} ⊂ E^copies` with `E = R^base_dim`.
    DiagonalLift { base_dim: usize, copies: usize },
    Product {
        parts: Vec<ProjectableSet>,
        mode: Parallelism,
    },
    /// `shift + base`.
    Translate {
        base: Box<ProjectableSet>,
        shift: Point,
    },
    /// `{x : ‖x‖∞ ≤ radius}`.
    LinfBall { dim: usize, radius: f64 },
    /// `{U ∈ R^{rows×cols} : U·Uᵀ = I}`.
    OrthonormalRows { rows: usize, cols: usize },
    /// `{U = P·W}` for a fixed dictionary `W`; `row_basis` holds an
    /// orthonormal basis of the row space of `W` as columns.
    RowSpace {
        rows: usize,
        dictionary: Matrix,
        row_basis: Matrix,
    },
    Sphere {
        center: Point,
        radius: f64,
        center_fallback: bool,
    },
}

#[derive(Debug, Clone)]
pub struct ProjectableSet {
    kind: SetKind,
    class: RegularityClass,
}

fn check_dim(expected: usize, x: &Point) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

/// `(z₁ + ⋯ + z_m) / m`, summed in order.
pub(crate) fn mean_of(points: &[Point]) -> Point {
    let mut acc = points[0].clone();
    for p in &points[1..] {
        acc += p;
    }
    acc / points.len() as f64
}

fn split_blocks(x: &Point, dims: &[usize]) -> Vec<Point> {
    let mut out = Vec::with_capacity(dims.len());
    let mut offset = 0;
    for &d in dims {
        out.push(x.rows(offset, d).into_owned());
        offset += d;
    }
    out
}

fn concat(blocks: &[Point]) -> Point {
    let n = blocks.iter().map(|b| b.len()).sum();
    let mut out = Point::zeros(n);
    let mut offset = 0;
    for b in blocks {
        out.rows_mut(offset, b.len()).copy_from(b);
        offset += b.len();
    }
    out
}

fn sym(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

impl ProjectableSet {
    /// `anchor + span(directions)`. The directions are orthonormalized.
    pub fn affine(anchor: Point, directions: &[Point]) -> Result<Self> {
        for d in directions {
            check_dim(anchor.len(), d)?;
        }
        let basis = numkernel::orthonormal_basis(directions, numkernel::DEFAULT_RANK_TOL)?;
        Ok(Self {
            kind: SetKind::Affine { anchor, basis },
            class: RegularityClass::Convex,
        })
    }

    /// The line `point + R·direction`.
    pub fn line(point: Point, direction: Point) -> Result<Self> {
        if direction.norm() == 0.0 {
            return Err(Error::invalid("line direction must be nonzero"));
        }
        Self::affine(point, &[direction])
    }

    /// The diagonal `{(x, …, x)}` of `E^copies`.
    pub fn diagonal(base_dim: usize, copies: usize) -> Result<Self> {
        if base_dim == 0 || copies == 0 {
            return Err(Error::invalid("diagonal lift needs positive dimensions"));
        }
        Ok(Self {
            kind: SetKind::DiagonalLift { base_dim, copies },
            class: RegularityClass::Convex,
        })
    }

    /// Cartesian product; its projection is the tuple of component projections.
    pub fn product(parts: Vec<ProjectableSet>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::invalid("product of zero sets"));
        }
        let class = parts
            .iter()
            .map(|p| p.class)
            .max()
            .unwrap_or(RegularityClass::Convex);
        Ok(Self {
            kind: SetKind::Product {
                parts,
                mode: Parallelism::default(),
            },
            class,
        })
    }

    /// `shift + base`.
    pub fn translate(base: ProjectableSet, shift: Point) -> Result<Self> {
        check_dim(base.ambient_dim(), &shift)?;
        let class = base.class;
        Ok(Self {
            kind: SetKind::Translate {
                base: Box::new(base),
                shift,
            },
            class,
        })
    }

    pub fn linf_ball(dim: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid("ℓ∞ radius must be positive and finite"));
        }
        Ok(Self {
            kind: SetKind::LinfBall { dim, radius },
            class: RegularityClass::Convex,
        })
    }

    /// Matrices of shape `rows × cols` with orthonormal rows; needs `rows ≤ cols`.
    pub fn orthonormal_rows(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || rows > cols {
            return Err(Error::invalid(format!(
                "orthonormal rows need 0 < rows ≤ cols, got {rows}×{cols}"
            )));
        }
        Ok(Self {
            kind: SetKind::OrthonormalRows { rows, cols },
            class: RegularityClass::ProxRegular,
        })
    }

    /// `{P·W : P ∈ R^{rows×n}}` for the `n × m` dictionary `W`.
    pub fn row_space(dictionary: Matrix, rows: usize) -> Result<Self> {
        if rows == 0 || dictionary.ncols() == 0 {
            return Err(Error::invalid("row space needs positive dimensions"));
        }
        let row_basis = numkernel::row_space_basis(&dictionary, numkernel::DEFAULT_RANK_TOL)?;
        Ok(Self {
            kind: SetKind::RowSpace {
                rows,
                dictionary,
                row_basis,
            },
            class: RegularityClass::Convex,
        })
    }

    pub fn sphere(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid("sphere radius must be positive and finite"));
        }
        Ok(Self {
            kind: SetKind::Sphere {
                center,
                radius,
                center_fallback: false,
            },
            class: RegularityClass::ProxRegular,
        })
    }

    /// Sphere only: project the centre to `center + radius·e₁` instead of failing.
    pub fn with_center_fallback(mut self) -> Self {
        if let SetKind::Sphere {
            center_fallback, ..
        } = &mut self.kind
        {
            *center_fallback = true;
        }
        self
    }

    /// Product only: how component projections are scheduled.
    pub fn with_parallelism(mut self, new_mode: Parallelism) -> Self {
        if let SetKind::Product { mode, .. } = &mut self.kind {
            *mode = new_mode;
        }
        self
    }

    pub fn with_class(mut self, class: RegularityClass) -> Self {
        self.class = class;
        self
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn regularity_class(&self) -> RegularityClass {
        self.class
    }

    pub fn ambient_dim(&self) -> usize {
        match &self.kind {
            SetKind::Affine { anchor, .. } => anchor.len(),
            SetKind::DiagonalLift { base_dim, copies } => base_dim * copies,
            SetKind::Product { parts, .. } => parts.iter().map(|p| p.ambient_dim()).sum(),
            SetKind::Translate { shift, .. } => shift.len(),
            SetKind::LinfBall { dim, .. } => *dim,
            SetKind::OrthonormalRows { rows, cols } => rows * cols,
            SetKind::RowSpace {
                rows, dictionary, ..
            } => rows * dictionary.ncols(),
            SetKind::Sphere { center, .. } => center.len(),
        }
    }

    pub fn project(&self, x: &Point) -> Result<Point> {
        self.project_flagged(x).map(|p| p.point)
    }

    pub fn project_flagged(&self, x: &Point) -> Result<Projected> {
        check_dim(self.ambient_dim(), x)?;
        let exact = |point| {
            Ok(Projected {
                point,
                degenerate: false,
            })
        };
        match &self.kind {
            SetKind::Affine { anchor, basis } => {
                let rel = x - anchor;
                let mut p = anchor.clone();
                for b in basis {
                    p.axpy(b.dot(&rel), b, 1.0);
                }
                exact(p)
            }
            SetKind::DiagonalLift { base_dim, copies } => {
                let blocks = split_blocks(x, &vec![*base_dim; *copies]);
                let mean = mean_of(&blocks);
                exact(concat(&vec![mean; *copies]))
            }
            SetKind::Product { parts, mode } => {
                let dims: Vec<usize> = parts.iter().map(|p| p.ambient_dim()).collect();
                let blocks = split_blocks(x, &dims);
                let pairs: Vec<(&ProjectableSet, Point)> = parts.iter().zip(blocks).collect();
                let projected =
                    par::try_map(*mode, &pairs, |(set, block)| set.project_flagged(block))?;
                let degenerate = projected.iter().any(|p| p.degenerate);
                let points: Vec<Point> = projected.into_iter().map(|p| p.point).collect();
                Ok(Projected {
                    point: concat(&points),
                    degenerate,
                })
            }
            SetKind::Translate { base, shift } => {
                let inner = base.project_flagged(&(x - shift))?;
                Ok(Projected {
                    point: inner.point + shift,
                    degenerate: inner.degenerate,
                })
            }
            SetKind::LinfBall { radius, .. } => exact(x.map(|v| v.max(-radius).min(*radius))),
            SetKind::OrthonormalRows { rows, cols } => {
                let u = unflatten(x, *rows, *cols);
                let svd = numkernel::thin_svd(&u)?;
                let smax = svd.singulars.first().copied().unwrap_or(0.0);
                let smin = svd.singulars.last().copied().unwrap_or(0.0);
                let degenerate = smin <= 1e-12 * smax.max(f64::MIN_POSITIVE);
                Ok(Projected {
                    point: flatten(&(&svd.u * &svd.v_t)),
                    degenerate,
                })
            }
            SetKind::RowSpace {
                rows,
                dictionary,
                row_basis,
            } => {
                let u = unflatten(x, *rows, dictionary.ncols());
                let coeffs = &u * row_basis;
                exact(flatten(&(coeffs * row_basis.transpose())))
            }
            SetKind::Sphere {
                center,
                radius,
                center_fallback,
            } => {
                let rel = x - center;
                let n = rel.norm();
                if n == 0.0 {
                    if !center_fallback {
                        return Err(Error::ProjectionTie(
                            "every point of the sphere is nearest to its centre".into(),
                        ));
                    }
                    let mut p = center.clone();
                    p[0] += radius;
                    return Ok(Projected {
                        point: p,
                        degenerate: true,
                    });
                }
                exact(center + rel * (*radius / n))
            }
        }
    }

    pub fn distance(&self, x: &Point) -> Result<f64> {
        Ok((x - self.project(x)?).norm())
    }

    pub fn membership_tolerance(x: &Point) -> f64 {
        MEMBERSHIP_TOL * (1.0 + x.norm())
    }

    pub fn contains(&self, x: &Point) -> Result<bool> {
        Ok(self.distance(x)? <= Self::membership_tolerance(x))
    }

    /// Normal cone at a member point.
    pub fn normal_cone(&self, x: &Point) -> Result<NormalCone> {
        let d = self.distance(x)?;
        if d > Self::membership_tolerance(x) {
            return Err(Error::NotInSet { distance: d });
        }
        Ok(NormalCone {
            kind: self.cone_kind(x)?,
            base_point: x.clone(),
        })
    }

    fn cone_kind(&self, x: &Point) -> Result<ConeKind> {
        Ok(match &self.kind {
            SetKind::Affine { anchor, basis } => ConeKind::Complement {
                dim: anchor.len(),
                basis: basis.clone(),
            },
            SetKind::DiagonalLift { base_dim, copies } => {
                let scale = 1.0 / (*copies as f64).sqrt();
                let n = base_dim * copies;
                let basis = (0..*base_dim)
                    .map(|j| {
                        let mut v = Point::zeros(n);
                        for c in 0..*copies {
                            v[c * base_dim + j] = scale;
                        }
                        v
                    })
                    .collect();
                ConeKind::Complement { dim: n, basis }
            }
            SetKind::Product { parts, .. } => {
                let dims: Vec<usize> = parts.iter().map(|p| p.ambient_dim()).collect();
                let blocks = split_blocks(x, &dims);
                let kinds = parts
                    .iter()
                    .zip(&blocks)
                    .map(|(p, b)| p.cone_kind(b))
                    .collect::<Result<Vec<_>>>()?;
                ConeKind::Product(kinds)
            }
            SetKind::Translate { base, shift } => base.cone_kind(&(x - shift))?,
            SetKind::LinfBall { dim, radius } => {
                let active = radius * (1.0 - 1e-12);
                let rays = x
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.abs() >= active)
                    .map(|(j, v)| (j, v.signum()))
                    .collect();
                ConeKind::CoordinateRays { dim: *dim, rays }
            }
            SetKind::OrthonormalRows { rows, cols } => ConeKind::SymmetricConjugation {
                base: unflatten(x, *rows, *cols),
            },
            SetKind::RowSpace {
                rows, row_basis, ..
            } => ConeKind::RowComplement {
                rows: *rows,
                row_basis: row_basis.clone(),
            },
            SetKind::Sphere { center, .. } => {
                let rel = x - center;
                ConeKind::Ray {
                    direction: &rel / rel.norm(),
                    two_sided: true,
                }
            }
        })
    }
}

/// A normal cone `N_S(base_point)`.
#[derive(Debug, Clone)]
pub struct NormalCone {
    pub kind: ConeKind,
    pub base_point: Point,
}

impl NormalCone {
    pub fn new(kind: ConeKind, base_point: Point) -> Self {
        Self { kind, base_point }
    }

    /// Euclidean distance from `v` to the cone.
    pub fn distance(&self, v: &Point) -> f64 {
        self.kind.distance(v)
    }

    pub fn project(&self, v: &Point) -> Point {
        self.kind.project(v)
    }
}

/// Distance from `v` to the described cone.
pub fn normal_cone_distance(cone: &NormalCone, v: &Point) -> f64 {
    cone.distance(v)
}

/// Shapes of normal cones that the concrete sets produce. All projections
/// onto these cones are exact.
#[derive(Debug, Clone)]
pub enum ConeKind {
    /// `span(basis)`, basis orthonormal.
    Subspace {
        dim: usize,
        basis: Vec<Point>,
    },
    /// Orthogonal complement of `span(basis)`, basis orthonormal.
    Complement {
        dim: usize,
        basis: Vec<Point>,
    },
    /// `{V ∈ R^{rows×m} : V·Q = 0}` with `Q = row_basis` (orthonormal columns).
    RowComplement {
        rows: usize,
        row_basis: Matrix,
    },
    /// Nonnegative combinations of `sign·e_j`; other coordinates are zero.
    CoordinateRays {
        dim: usize,
        rays: Vec<(usize, f64)>,
    },
    /// `R₊·direction` or, when `two_sided`, `R·direction`; direction is a unit vector.
    Ray {
        direction: Point,
        two_sided: bool,
    },
    /// `{A·U : A symmetric}` for a matrix `U` with orthonormal rows.
    SymmetricConjugation {
        base: Matrix,
    },
    Product(Vec<ConeKind>),
}

impl ConeKind {
    pub fn dim(&self) -> usize {
        match self {
            ConeKind::Subspace { dim, .. }
            | ConeKind::Complement { dim, .. }
            | ConeKind::CoordinateRays { dim, .. } => *dim,
            ConeKind::RowComplement { rows, row_basis } => rows * row_basis.nrows(),
            ConeKind::Ray { direction, .. } => direction.len(),
            ConeKind::SymmetricConjugation { base } => base.len(),
            ConeKind::Product(parts) => parts.iter().map(|p| p.dim()).sum(),
        }
    }

    /// Nearest point of the cone to `v`.
    pub fn project(&self, v: &Point) -> Point {
        match self {
            ConeKind::Subspace { dim, basis } => {
                let mut p = Point::zeros(*dim);
                for b in basis {
                    p.axpy(b.dot(v), b, 1.0);
                }
                p
            }
            ConeKind::Complement { basis, .. } => {
                let mut p = v.clone();
                for b in basis {
                    p.axpy(-b.dot(v), b, 1.0);
                }
                p
            }
            ConeKind::RowComplement { rows, row_basis } => {
                let m = unflatten(v, *rows, row_basis.nrows());
                let inside = (&m * row_basis) * row_basis.transpose();
                flatten(&(m - inside))
            }
            ConeKind::CoordinateRays { dim, rays } => {
                let mut p = Point::zeros(*dim);
                for &(j, s) in rays {
                    if s * v[j] > 0.0 {
                        p[j] = v[j];
                    }
                }
                p
            }
            ConeKind::Ray {
                direction,
                two_sided,
            } => {
                let t = direction.dot(v);
                let t = if *two_sided { t } else { t.max(0.0) };
                direction * t
            }
            ConeKind::SymmetricConjugation { base } => {
                let m = unflatten(v, base.nrows(), base.ncols());
                let a = sym(&(m * base.transpose()));
                flatten(&(a * base))
            }
            ConeKind::Product(parts) => {
                let dims: Vec<usize> = parts.iter().map(|p| p.dim()).collect();
                let blocks = split_blocks(v, &dims);
                let projected: Vec<Point> = parts
                    .iter()
                    .zip(&blocks)
                    .map(|(p, b)| p.project(b))
                    .collect();
                concat(&projected)
            }
        }
    }

    pub fn distance(&self, v: &Point) -> f64 {
        (v - self.project(v)).norm()
    }

    /// The cone `−K`.
    pub fn negated(&self) -> ConeKind {
        match self {
            ConeKind::CoordinateRays { dim, rays } => ConeKind::CoordinateRays {
                dim: *dim,
                rays: rays.iter().map(|&(j, s)| (j, -s)).collect(),
            },
            ConeKind::Ray {
                direction,
                two_sided,
            } => ConeKind::Ray {
                direction: -direction,
                two_sided: *two_sided,
            },
            ConeKind::Product(parts) => {
                ConeKind::Product(parts.iter().map(|p| p.negated()).collect())
            }
            other => other.clone(),
        }
    }

    /// The cone is `{0}`.
    pub fn is_trivial(&self) -> bool {
        match self {
            ConeKind::Subspace { basis, .. } => basis.is_empty(),
            ConeKind::Complement { dim, basis } => basis.len() >= *dim,
            ConeKind::RowComplement { row_basis, .. } => row_basis.ncols() >= row_basis.nrows(),
            ConeKind::CoordinateRays { rays, .. } => rays.is_empty(),
            ConeKind::Ray { .. } => false,
            ConeKind::SymmetricConjugation { base } => base.is_empty(),
            ConeKind::Product(parts) => parts.iter().all(|p| p.is_trivial()),
        }
    }

    /// The cone is a linear subspace.
    pub fn is_subspace(&self) -> bool {
        match self {
            ConeKind::CoordinateRays { rays, .. } => rays.is_empty(),
            ConeKind::Ray { two_sided, .. } => *two_sided,
            ConeKind::Product(parts) => parts.iter().all(|p| p.is_subspace()),
            _ => true,
        }
    }

    /// Materialized orthonormal basis when the cone is a linear subspace.
    ///
    /// Complements are built explicitly, so this is meant for the small
    /// systems the regularity analysis works on.
    pub fn subspace_basis(&self) -> Option<Vec<Point>> {
        match self {
            ConeKind::Subspace { basis, .. } => Some(basis.clone()),
            ConeKind::Complement { dim, basis } => {
                Some(numkernel::orthogonal_complement(basis, *dim))
            }
            ConeKind::RowComplement { rows, row_basis } => {
                let m = row_basis.nrows();
                let inside: Vec<Point> = (0..*rows)
                    .flat_map(|i| {
                        row_basis.column_iter().map(move |q| {
                            let mut v = Point::zeros(rows * m);
                            v.rows_mut(i * m, m).copy_from(&q);
                            v
                        })
                    })
                    .collect();
                Some(numkernel::orthogonal_complement(&inside, rows * m))
            }
            ConeKind::CoordinateRays { rays, .. } if rays.is_empty() => Some(Vec::new()),
            ConeKind::CoordinateRays { .. } => None,
            ConeKind::Ray {
                direction,
                two_sided,
            } => two_sided.then(|| vec![direction.clone()]),
            ConeKind::SymmetricConjugation { base } => {
                let d = base.nrows();
                let mut out = Vec::with_capacity(d * (d + 1) / 2);
                let s = std::f64::consts::FRAC_1_SQRT_2;
                for i in 0..d {
                    for j in i..d {
                        let mut a = Matrix::zeros(d, d);
                        if i == j {
                            a[(i, i)] = 1.0;
                        } else {
                            a[(i, j)] = s;
                            a[(j, i)] = s;
                        }
                        out.push(flatten(&(a * base)));
                    }
                }
                Some(out)
            }
            ConeKind::Product(parts) => {
                let dims: Vec<usize> = parts.iter().map(|p| p.dim()).collect();
                let total: usize = dims.iter().sum();
                let mut out = Vec::new();
                let mut offset = 0;
                for (p, d) in parts.iter().zip(&dims) {
                    for b in p.subspace_basis()? {
                        let mut v = Point::zeros(total);
                        v.rows_mut(offset, *d).copy_from(&b);
                        out.push(v);
                    }
                    offset += d;
                }
                Some(out)
            }
        }
    }

    /// Generators of the cone, each flagged `true` when only nonnegative
    /// multiples are allowed. Subspaces contribute a basis with free signs.
    pub fn generators(&self) -> Vec<(Point, bool)> {
        match self {
            ConeKind::CoordinateRays { dim, rays } => rays
                .iter()
                .map(|&(j, s)| {
                    let mut e = Point::zeros(*dim);
                    e[j] = s;
                    (e, true)
                })
                .collect(),
            ConeKind::Ray {
                direction,
                two_sided,
            } => vec![(direction.clone(), !two_sided)],
            ConeKind::Product(parts) => {
                let dims: Vec<usize> = parts.iter().map(|p| p.dim()).collect();
                let total: usize = dims.iter().sum();
                let mut out = Vec::new();
                let mut offset = 0;
                for (p, d) in parts.iter().zip(&dims) {
                    for (g, nonneg) in p.generators() {
                        let mut v = Point::zeros(total);
                        v.rows_mut(offset, *d).copy_from(&g);
                        out.push((v, nonneg));
                    }
                    offset += d;
                }
                out
            }
            other => other
                .subspace_basis()
                .unwrap_or_default()
                .into_iter()
                .map(|b| (b, false))
                .collect(),
        }
    }
}
