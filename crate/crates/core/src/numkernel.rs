//! Dense linear algebra and sampling primitives.
//!
//! Points of the ambient Euclidean space are plain vectors. Matrices that
//! live in that space (dictionaries, compression maps, iterates of the
//! matrix-design experiment) are flattened in row-major order, so the
//! Euclidean inner product of two flattened matrices is their Frobenius
//! inner product.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::par::{self, Parallelism};

pub type Point = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Relative rank tolerance used when callers have no better choice.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

const SVD_MAX_SWEEPS: usize = 10_000;

/// Full singular value decomposition `input = left · diag(singulars) · rightᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows × rows`, orthogonal.
    pub left: Matrix,
    /// `min(rows, cols)` values, nonincreasing.
    pub singulars: Vec<f64>,
    /// `cols × cols`, orthogonal.
    pub right: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let (r, c) = (self.left.nrows(), self.right.nrows());
        let mut sigma = Matrix::zeros(r, c);
        for (i, s) in self.singulars.iter().enumerate() {
            sigma[(i, i)] = *s;
        }
        &self.left * sigma * self.right.transpose()
    }
}

/// Economy SVD: `u` is `rows × k`, `v_t` is `k × cols`, `k = min(rows, cols)`.
#[derive(Debug, Clone)]
pub(crate) struct ThinSvd {
    pub u: Matrix,
    pub singulars: Vec<f64>,
    pub v_t: Matrix,
}

pub(crate) fn thin_svd(m: &Matrix) -> Result<ThinSvd> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Ok(ThinSvd {
            u: Matrix::zeros(m.nrows(), 0),
            singulars: Vec::new(),
            v_t: Matrix::zeros(0, m.ncols()),
        });
    }
    let svd = SVD::try_new(m.clone(), true, true, f64::EPSILON, SVD_MAX_SWEEPS).ok_or(
        Error::DecompositionFailed {
            max_iter: SVD_MAX_SWEEPS,
        },
    )?;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let singulars: Vec<f64> = svd.singular_values.iter().copied().collect();

    // nalgebra sorts already; keep the contract explicit regardless.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| singulars[b].total_cmp(&singulars[a]));
    let u = Matrix::from_fn(u.nrows(), k, |i, j| u[(i, order[j])]);
    let v_t = Matrix::from_fn(k, v_t.ncols(), |i, j| v_t[(order[i], j)]);
    let singulars = order.iter().map(|&i| singulars[i]).collect();
    Ok(ThinSvd { u, singulars, v_t })
}

/// Extend the orthonormal columns of `q` to an orthonormal basis of `R^n`.
fn complete_orthonormal_columns(q: &Matrix) -> Matrix {
    let n = q.nrows();
    let mut cols: Vec<Point> = q.column_iter().map(|c| c.into_owned()).collect();
    for i in 0..n {
        if cols.len() == n {
            break;
        }
        let mut e = Point::zeros(n);
        e[i] = 1.0;
        if let Some(v) = orthogonalize_against(&e, &cols, 1e-8) {
            cols.push(v);
        }
    }
    Matrix::from_columns(&cols)
}

/// Full SVD with square orthogonal factors and nonincreasing singular values.
pub fn svd(m: &Matrix) -> Result<SvdResult> {
    let thin = thin_svd(m)?;
    let left = complete_orthonormal_columns(&thin.u);
    let right = complete_orthonormal_columns(&thin.v_t.transpose());
    Ok(SvdResult {
        left,
        singulars: thin.singulars,
        right,
    })
}

/// Moore–Penrose pseudo-inverse; singular values below `rank_tol · σ_max`
/// are treated as zero.
pub fn pseudo_inverse(m: &Matrix, rank_tol: f64) -> Result<Matrix> {
    if !(rank_tol > 0.0) {
        return Err(Error::invalid("rank_tol must be positive"));
    }
    let thin = thin_svd(m)?;
    let mut out = Matrix::zeros(m.ncols(), m.nrows());
    let smax = thin.singulars.first().copied().unwrap_or(0.0);
    let cutoff = rank_tol * smax;
    for (i, &s) in thin.singulars.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            // out += v_i · u_iᵀ / s
            let v = thin.v_t.row(i).transpose();
            let u = thin.u.column(i);
            out += (v * u.transpose()) / s;
        }
    }
    Ok(out)
}

/// Orthonormal basis of the row space of `m`, as the columns of the result.
pub(crate) fn row_space_basis(m: &Matrix, rank_tol: f64) -> Result<Matrix> {
    let thin = thin_svd(m)?;
    let smax = thin.singulars.first().copied().unwrap_or(0.0);
    let rank = thin
        .singulars
        .iter()
        .take_while(|&&s| s > rank_tol * smax && s > 0.0)
        .count();
    Ok(thin.v_t.rows(0, rank).transpose())
}

/// Residual of `v` after removing its components along `basis`, normalized,
/// or `None` when the residual is below `tol · ‖v‖`.
fn orthogonalize_against(v: &Point, basis: &[Point], tol: f64) -> Option<Point> {
    let norm0 = v.norm();
    if norm0 == 0.0 {
        return None;
    }
    let mut r = v.clone();
    // two passes of modified Gram–Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&r);
            r.axpy(-c, b, 1.0);
        }
    }
    let nr = r.norm();
    if nr <= tol * norm0 {
        None
    } else {
        Some(r / nr)
    }
}

/// Orthonormal basis for the span of `vectors`.
///
/// Vectors whose residual after orthogonalization is at most
/// `rank_tol · max‖vᵢ‖` are dropped. Earlier vectors take precedence, so a
/// single nonzero vector is simply normalized.
pub fn orthonormal_basis(vectors: &[Point], rank_tol: f64) -> Result<Vec<Point>> {
    let Some(first) = vectors.first() else {
        return Ok(Vec::new());
    };
    let dim = first.len();
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: v.len(),
        });
    }
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(Vec::new());
    }
    let mut basis: Vec<Point> = Vec::new();
    for v in vectors {
        if basis.len() == dim {
            break;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&r);
                r.axpy(-c, b, 1.0);
            }
        }
        let nr = r.norm();
        if nr > rank_tol.max(1e-14) * scale {
            basis.push(r / nr);
        }
    }
    Ok(basis)
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal family `basis` inside `R^dim`.
pub fn orthogonal_complement(basis: &[Point], dim: usize) -> Vec<Point> {
    let mut all: Vec<Point> = basis.to_vec();
    let start = all.len();
    for i in 0..dim {
        if all.len() == dim {
            break;
        }
        let mut e = Point::zeros(dim);
        e[i] = 1.0;
        if let Some(v) = orthogonalize_against(&e, &all, 1e-8) {
            all.push(v);
        }
    }
    all.split_off(start)
}

/// Smallest eigenvalue of `GᵀG`, where `G` has the given columns.
///
/// Equals the square of the smallest singular value of `G` (zero when there
/// are more columns than rows).
pub fn gram_min_eig(columns: &[Point]) -> Result<f64> {
    let Some(first) = columns.first() else {
        return Err(Error::invalid("gram_min_eig needs at least one column"));
    };
    let dim = first.len();
    if let Some(c) = columns.iter().find(|c| c.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: c.len(),
        });
    }
    let k = columns.len();
    let gram = Matrix::from_fn(k, k, |i, j| columns[i].dot(&columns[j]));
    let eig = SymmetricEigen::new(gram);
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(min.max(0.0))
}

/// Seeded generator shared by every random construction in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `rows × cols` matrix of i.i.d. standard normals.
///
/// Entries are drawn in row-major order from `ChaCha8Rng::seed_from_u64(seed)`
/// through `rand_distr::StandardNormal` (ziggurat transform).
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = seeded_rng(seed);
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    Matrix::from_row_slice(rows, cols, &data)
}

/// Central-difference gradient of `h` at `x`.
pub fn fd_gradient<H>(h: H, x: &Point, step: f64) -> Result<Point>
where
    H: Fn(&Point) -> f64 + Sync + Send,
{
    fd_gradient_with(Parallelism::Sequential, h, x, step)
}

/// [`fd_gradient`] with the coordinate loop dispatched through [`par`].
pub fn fd_gradient_with<H>(mode: Parallelism, h: H, x: &Point, step: f64) -> Result<Point>
where
    H: Fn(&Point) -> f64 + Sync + Send,
{
    if !(step > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let comps = par::map_range(mode, x.len(), |i| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += step;
        xm[i] -= step;
        (h(&xp) - h(&xm)) / (2.0 * step)
    });
    Ok(Point::from_vec(comps))
}

/// Row-major flattening of a matrix into a point.
pub fn flatten(m: &Matrix) -> Point {
    Point::from_column_slice(m.transpose().as_slice())
}

/// Inverse of [`flatten`].
pub fn unflatten(x: &Point, rows: usize, cols: usize) -> Matrix {
    Matrix::from_row_slice(rows, cols, x.as_slice())
}
