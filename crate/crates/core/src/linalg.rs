//! Dense complex matrix kernel.
//!
//! Everything downstream works with small dense matrices, so all
//! decompositions here are full: Hermitian eigendecomposition and LU.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, SchurError};

pub type ComplexMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const SINGULAR_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

/// Builds a matrix from real row-major entries.
pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    assert_eq!(entries.len(), rows * cols);
    ComplexMatrix::from_fn(rows, cols, |i, j| c(entries[i * cols + j], 0.0))
}

pub fn scalar(value: f64) -> ComplexMatrix {
    from_real(1, 1, &[value])
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// Largest entrywise modulus of `a - b`; shapes must agree.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Block-diagonal matrix; zero-sized blocks are legal.
pub fn block_diag(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        paste(&mut out, r, c, b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Copies `block` into `target` with its top-left corner at `(row, col)`.
pub fn paste(target: &mut ComplexMatrix, row: usize, col: usize, block: &ComplexMatrix) {
    if block.is_empty() {
        return;
    }
    target
        .view_mut((row, col), (block.nrows(), block.ncols()))
        .copy_from(block);
}

pub fn block(m: &ComplexMatrix, row: usize, col: usize, rows: usize, cols: usize) -> ComplexMatrix {
    if rows == 0 || cols == 0 {
        return zeros(rows, cols);
    }
    m.view((row, col), (rows, cols)).into_owned()
}

/// Frobenius-norm asymmetry check followed by symmetrization.
fn hermitian_part(h: &ComplexMatrix, scale: f64) -> Result<ComplexMatrix> {
    if !h.is_square() {
        return Err(SchurError::ShapeMismatch {
            what: "Hermitian operand".into(),
            expected: (h.nrows(), h.nrows()),
            found: h.shape(),
        });
    }
    let adj = h.adjoint();
    let asymmetry = (h - &adj).norm();
    let tolerance = HERMITIAN_TOL * scale;
    if asymmetry > tolerance {
        return Err(SchurError::NotHermitian {
            asymmetry,
            tolerance,
        });
    }
    Ok((h + adj) * c(0.5, 0.0))
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order.
///
/// `scale` sets the yardstick for the Hermitian check.
pub(crate) fn hermitian_eigen_scaled(
    h: &ComplexMatrix,
    scale: f64,
) -> Result<(Vec<f64>, ComplexMatrix)> {
    let h = hermitian_part(h, scale)?;
    let n = h.nrows();
    if n == 0 {
        return Ok((Vec::new(), zeros(0, 0)));
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    hermitian_eigen_scaled(h, frobenius_scale(h))
}

fn frobenius_scale(h: &ComplexMatrix) -> f64 {
    h.norm()
}

/// Square root of a Hermitian PSD matrix with tolerances measured against `scale`.
pub(crate) fn psd_sqrt_scaled(h: &ComplexMatrix, scale: f64) -> Result<ComplexMatrix> {
    psd_sqrt_cut(h, 0.0, scale)
}

/// PSD square root with eigenvalues at or below `cut` treated as exact zeros.
pub(crate) fn psd_sqrt_cut(h: &ComplexMatrix, cut: f64, scale: f64) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eigen_scaled(h, scale)?;
    let tol = PSD_TOL * scale;
    let mut roots = Vec::with_capacity(values.len());
    for &v in &values {
        if v < -tol {
            return Err(SchurError::NotPsd {
                eigenvalue: v,
                tolerance: tol,
            });
        }
        roots.push(if v <= cut { 0.0 } else { v.sqrt() });
    }
    let mut scaled = vectors.clone();
    for (j, r) in roots.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*r);
    }
    let root = &scaled * vectors.adjoint();
    Ok((&root + root.adjoint()) * c(0.5, 0.0))
}

/// Hermitian PSD square root `R` with `R·R = H`.
///
/// Eigenvalues in `[-1e-10·‖H‖, 0)` are clamped to zero; anything more
/// negative is rejected.
pub fn psd_sqrt(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let scale = operator_norm(h);
    psd_sqrt_scaled(h, scale)
}

/// Rotates each column so its largest-modulus entry is real and positive.
fn normalize_phases(basis: &mut ComplexMatrix) {
    for mut col in basis.column_iter_mut() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for (i, v) in col.iter().enumerate() {
            // strict comparison with a small margin keeps the choice stable under round-off
            if v.norm() > best_abs * (1.0 + 1e-9) {
                best_abs = v.norm();
                best = i;
            }
        }
        if best_abs > 0.0 {
            let phase = col[best] / col[best].norm();
            let rot = phase.conj();
            for v in col.iter_mut() {
                *v *= rot;
            }
        }
    }
}

/// Orthonormal basis of the eigenspaces of `h` with eigenvalue above `threshold`.
///
/// Full-rank operators get the identity basis.
pub(crate) fn range_basis_above(
    h: &ComplexMatrix,
    threshold: f64,
    scale: f64,
) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eigen_scaled(h, scale)?;
    let n = values.len();
    let keep = values.iter().take_while(|&&v| v > threshold).count();
    if keep == n {
        return Ok(identity(n));
    }
    let mut basis = block(&vectors, 0, 0, n, keep);
    normalize_phases(&mut basis);
    Ok(basis)
}

/// Orthonormal basis of the range of a Hermitian PSD matrix.
///
/// Eigenvalues above `rel_tol·λ_max` span the range; a zero matrix yields
/// an `n × 0` basis.
pub fn range_basis(h: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix> {
    let (values, _) = hermitian_eigen(h)?;
    let lambda_max = values.first().copied().unwrap_or(0.0);
    if lambda_max <= 0.0 {
        return Ok(zeros(h.nrows(), 0));
    }
    range_basis_above(h, rel_tol * lambda_max, frobenius_scale(h))
}

/// Singular triplets `(σ, u, v)` with `σ > cut`, read off the eigenpairs of the
/// Hermitian dilation `[[0, A], [A*, 0]]`. nalgebra's complex SVD recomposes with
/// errors near 1e-9 when singular values cluster; the Hermitian eigensolver does not.
fn singular_triplets(a: &ComplexMatrix, cut: f64) -> Vec<(f64, DVector<Complex64>, DVector<Complex64>)> {
    let (m, n) = a.shape();
    let mut h = zeros(m + n, m + n);
    paste(&mut h, 0, m, a);
    paste(&mut h, m, 0, &a.adjoint());
    let eig = SymmetricEigen::new(h);
    let mut out: Vec<_> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > cut && s > 0.0)
        .map(|(k, &s)| {
            let x = eig.eigenvectors.column(k);
            let scale = c(std::f64::consts::SQRT_2, 0.0);
            let u = x.rows(0, m).into_owned() * scale;
            let v = x.rows(m, n).into_owned() * scale;
            (s, u, v)
        })
        .collect();
    out.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));
    out
}

/// Singular values in decreasing order, `min(rows, cols)` of them.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Vec::new();
    }
    let mut h = zeros(m + n, m + n);
    paste(&mut h, 0, m, a);
    paste(&mut h, m, 0, &a.adjoint());
    let mut s: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    s.truncate(m.min(n));
    s.iter().map(|x| x.max(0.0)).collect()
}

/// Largest singular value; zero for empty matrices.
pub fn operator_norm(a: &ComplexMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Solves `A·X = B` after checking that `A` is numerically nonsingular.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() || a.nrows() != b.nrows() {
        return Err(SchurError::ShapeMismatch {
            what: "linear solve".into(),
            expected: (a.nrows(), a.nrows()),
            found: (a.ncols(), b.nrows()),
        });
    }
    if a.nrows() == 0 {
        return Ok(zeros(0, b.ncols()));
    }
    let s = singular_values(a);
    let sigma_max = s[0];
    let sigma_min = *s.last().unwrap();
    if sigma_min <= SINGULAR_TOL * sigma_max || sigma_max == 0.0 {
        return Err(SchurError::Singular { sigma_min });
    }
    lu_solve(a, b)
}

/// LU solve without the conditioning check, for operators known to be invertible
/// (resolvents of contractions inside the disk).
pub(crate) fn lu_solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.nrows() == 0 {
        return Ok(zeros(0, b.ncols()));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or(SchurError::Singular { sigma_min: 0.0 })
}

/// Moore–Penrose pseudo-inverse discarding singular values below `rel_tol·σ_max`.
pub fn pseudo_inverse(a: &ComplexMatrix, rel_tol: f64) -> ComplexMatrix {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return zeros(n, m);
    }
    let cutoff = rel_tol * operator_norm(a);
    let mut out = zeros(n, m);
    for (s, u, v) in singular_triplets(a, cutoff) {
        out += (v * u.adjoint()) * c(1.0 / s, 0.0);
    }
    out
}

/// Replaces singular values in `(1, 1 + slack]` by 1; larger ones are an error.
pub(crate) fn clamp_to_contraction(a: &ComplexMatrix, slack: f64) -> Result<ComplexMatrix> {
    if a.is_empty() {
        return Ok(a.clone());
    }
    let norm = operator_norm(a);
    if norm > 1.0 + slack {
        return Err(SchurError::NotContraction { norm });
    }
    if norm <= 1.0 {
        return Ok(a.clone());
    }
    let mut out = a.clone();
    for (s, u, v) in singular_triplets(a, 1.0) {
        out -= (u * v.adjoint()) * c(s - 1.0, 0.0);
    }
    Ok(out)
}
