//! Dense matrix kernels: symmetric eigendecomposition, Lyapunov and Riccati
//! solvers, and the Hurwitz / PSD / stabilizability predicates built on them.
//!
//! Norms are Frobenius norms unless stated otherwise.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Eigendecomposition of a symmetric matrix with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub eigenvalues: Vec<f64>,
    /// Orthogonal matrix whose columns are the eigenvectors, in the same
    /// order as `eigenvalues`.
    pub vectors: Matrix,
}

impl SymmetricEigen {
    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let d = Matrix::from_diagonal(&Vector::from_column_slice(&self.eigenvalues));
        &self.vectors * d * self.vectors.transpose()
    }
}

pub(crate) fn ensure_finite(m: &Matrix, what: &'static str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what })
    }
}

pub(crate) fn ensure_square(m: &Matrix, what: &str) -> Result<usize> {
    if m.is_square() {
        Ok(m.nrows())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub(crate) fn ensure_shape(m: &Matrix, rows: usize, cols: usize, what: &str) -> Result<()> {
    if m.shape() == (rows, cols) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} must be {rows}x{cols}, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub(crate) fn ensure_symmetric(m: &Matrix, what: &'static str, tol: &Tolerances) -> Result<()> {
    let defect = (m - m.transpose()).norm();
    if defect > tol.sym * m.norm() {
        Err(Error::NonSymmetric { what, defect })
    } else {
        Ok(())
    }
}

pub(crate) fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Symmetric eigendecomposition, eigenvalues sorted ascending.
///
/// Equal eigenvalues keep the relative order produced by the underlying
/// solver (stable sort).
pub fn symmetric_eigen(s: &Matrix, tol: &Tolerances) -> Result<SymmetricEigen> {
    ensure_finite(s, "S")?;
    ensure_square(s, "S")?;
    ensure_symmetric(s, "S", tol)?;
    let n = s.nrows();
    if n == 0 {
        return Ok(SymmetricEigen { eigenvalues: vec![], vectors: Matrix::zeros(0, 0) });
    }
    let raw = nalgebra::linalg::SymmetricEigen::new(symmetrize(s));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw.eigenvalues[i].total_cmp(&raw.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| raw.eigenvalues[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &raw.eigenvectors.column(src));
    }
    Ok(SymmetricEigen { eigenvalues, vectors })
}

/// Complex eigenvalues of a general real square matrix.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex<f64>>> {
    ensure_finite(m, "M")?;
    let n = ensure_square(m, "M")?;
    if n == 0 {
        return Ok(vec![]);
    }
    let schur = m
        .clone()
        .try_schur(f64::EPSILON, 1000 * n.max(10))
        .ok_or_else(|| Error::IllConditioned("Schur iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest real part over the spectrum of `m`.
pub fn spectral_abscissa(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// True iff every eigenvalue of `m` has real part `< -tol.hurwitz`.
pub fn is_hurwitz(m: &Matrix, tol: &Tolerances) -> Result<bool> {
    Ok(spectral_abscissa(m)? < -tol.hurwitz)
}

/// Returns `(min_eig >= -psd·‖M‖, min_eig)`.
pub fn psd_check(m: &Matrix, tol: &Tolerances) -> Result<(bool, f64)> {
    let eig = symmetric_eigen(m, tol)?;
    let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
    Ok((min >= -tol.psd * m.norm(), min))
}

/// Largest eigenvalue of a symmetric matrix.
pub(crate) fn max_eigenvalue(m: &Matrix, tol: &Tolerances) -> Result<f64> {
    let eig = symmetric_eigen(m, tol)?;
    Ok(eig.eigenvalues.last().copied().unwrap_or(0.0))
}

/// `ĀᵀY + YĀ + Q̄`.
pub fn lyapunov_residual(abar: &Matrix, qbar: &Matrix, y: &Matrix) -> Matrix {
    abar.transpose() * y + y * abar + qbar
}

/// Real Schur form of `A` prepared for repeated solves of `AᵀX + XA = -C`.
struct SchurLyapunov {
    z: Matrix,
    t: Matrix,
    /// (start, size) of each diagonal block; size is 1 or 2.
    blocks: Vec<(usize, usize)>,
}

impl SchurLyapunov {
    fn new(a: &Matrix) -> Result<Self> {
        let n = a.nrows();
        let (z, mut t) = a
            .clone()
            .try_schur(f64::EPSILON, 1000 * n.max(10))
            .ok_or_else(|| Error::IllConditioned("Schur iteration did not converge".into()))?
            .unpack();
        let thresh = f64::EPSILON * t.norm();
        let mut blocks = Vec::new();
        let mut k = 0;
        while k < n {
            if k + 1 < n && t[(k + 1, k)].abs() > thresh {
                blocks.push((k, 2));
                k += 2;
            } else {
                if k + 1 < n {
                    t[(k + 1, k)] = 0.0;
                }
                blocks.push((k, 1));
                k += 1;
            }
        }
        // Entries below the first subdiagonal are rounding noise.
        for j in 0..n {
            for i in (j + 2)..n {
                t[(i, j)] = 0.0;
            }
        }
        Ok(Self { z, t, blocks })
    }

    /// Solves `AᵀX + XA = -C` by block forward substitution on
    /// `TᵀW + WT = -ZᵀCZ`.
    fn solve(&self, c: &Matrix) -> Result<Matrix> {
        let n = self.t.nrows();
        let f = -(self.z.transpose() * c * &self.z);
        let t = &self.t;
        let mut w = Matrix::zeros(n, n);
        for &(ri, p) in &self.blocks {
            for &(rj, q) in &self.blocks {
                let mut rhs = f.view((ri, rj), (p, q)).into_owned();
                if ri > 0 {
                    rhs -= t.view((0, ri), (ri, p)).transpose() * w.view((0, rj), (ri, q));
                }
                if rj > 0 {
                    rhs -= w.view((ri, 0), (p, rj)) * t.view((0, rj), (rj, q));
                }
                let tii = t.view((ri, ri), (p, p)).into_owned();
                let tjj = t.view((rj, rj), (q, q)).into_owned();
                // (I_q ⊗ T_iiᵀ + T_jjᵀ ⊗ I_p) vec(X) = vec(rhs), column-major vec.
                let sys = Matrix::identity(q, q).kronecker(&tii.transpose())
                    + tjj.transpose().kronecker(&Matrix::identity(p, p));
                let rhs_vec = Vector::from_column_slice(rhs.as_slice());
                let x = sys.lu().solve(&rhs_vec).ok_or_else(|| {
                    Error::IllConditioned("singular Sylvester block in Lyapunov solve".into())
                })?;
                w.view_mut((ri, rj), (p, q)).copy_from_slice(x.as_slice());
            }
        }
        Ok(&self.z * w * self.z.transpose())
    }
}

/// Bartels–Stewart solve with one step of iterative refinement. No
/// precondition checks beyond what the algorithm itself needs.
fn lyapunov_unchecked(abar: &Matrix, qbar: &Matrix) -> Result<Matrix> {
    let schur = SchurLyapunov::new(abar)?;
    let mut y = symmetrize(&schur.solve(qbar)?);
    let r = lyapunov_residual(abar, qbar, &y);
    y += schur.solve(&r)?;
    Ok(symmetrize(&y))
}

/// Solves `ĀᵀY + YĀ + Q̄ = 0` for Hurwitz `Ā` and symmetric PSD `Q̄`.
pub fn solve_lyapunov(abar: &Matrix, qbar: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    ensure_finite(abar, "Abar")?;
    ensure_finite(qbar, "Qbar")?;
    let n = ensure_square(abar, "Abar")?;
    ensure_shape(qbar, n, n, "Qbar")?;
    ensure_symmetric(qbar, "Qbar", tol)?;
    let (psd, min_eig) = psd_check(qbar, tol)?;
    if !psd {
        return Err(Error::NotPsd { what: "Qbar", min_eig });
    }
    let max_real = spectral_abscissa(abar)?;
    if max_real >= -tol.hurwitz {
        return Err(Error::NotHurwitz { max_real });
    }
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let y = lyapunov_unchecked(abar, qbar)?;
    let res = lyapunov_residual(abar, qbar, &y).norm();
    let bound = tol.lyap * (abar.norm() * y.norm() + qbar.norm());
    if res > bound {
        return Err(Error::IllConditioned(format!(
            "Lyapunov residual {res:e} exceeds {bound:e}"
        )));
    }
    Ok(y)
}

/// PBH test: for each eigenvalue λ of `A` with `Re λ >= -tol.hurwitz`,
/// `[A - λI, B]` must have full row rank.
///
/// Rank is decided on the real embedding `[[X, -Y], [Y, X]]` of the complex
/// matrix `X + iY`, with singular-value threshold `tol.rank·max(‖A‖, 1)`.
pub fn is_stabilizable(a: &Matrix, b: &Matrix, tol: &Tolerances) -> Result<bool> {
    ensure_finite(a, "A")?;
    ensure_finite(b, "B")?;
    let n = ensure_square(a, "A")?;
    if b.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "B must have {n} rows, got {}",
            b.nrows()
        )));
    }
    let m = b.ncols();
    let threshold = tol.rank * a.norm().max(1.0);
    for lambda in eigenvalues(a)? {
        if lambda.re < -tol.hurwitz {
            continue;
        }
        let w = n + m;
        let mut emb = Matrix::zeros(2 * n, 2 * w);
        for i in 0..n {
            for j in 0..n {
                let x = a[(i, j)] - if i == j { lambda.re } else { 0.0 };
                emb[(i, j)] = x;
                emb[(n + i, w + j)] = x;
            }
            for j in 0..m {
                emb[(i, n + j)] = b[(i, j)];
                emb[(n + i, w + n + j)] = b[(i, j)];
            }
            // Imaginary part -βI sits in the first n columns only.
            emb[(n + i, i)] = -lambda.im;
            emb[(i, w + i)] = lambda.im;
        }
        let sv = emb.singular_values();
        let rank = sv.iter().filter(|&&s| s > threshold).count();
        if rank < 2 * n {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `AᵀP + PA - P G P + Q̄` with `G = B R̄⁻¹ Bᵀ`.
pub(crate) fn care_residual_with_g(a: &Matrix, g: &Matrix, qbar: &Matrix, p: &Matrix) -> Matrix {
    a.transpose() * p + p * a - p * g * p + qbar
}

/// `AᵀP + PA - PBR̄⁻¹BᵀP + Q̄`.
pub fn care_residual(a: &Matrix, b: &Matrix, rbar: &Matrix, qbar: &Matrix, p: &Matrix) -> Result<Matrix> {
    let g = input_gramian(b, rbar)?;
    Ok(care_residual_with_g(a, &g, qbar, p))
}

/// `B R⁻¹ Bᵀ` via a Cholesky factorisation of `R`.
pub(crate) fn input_gramian(b: &Matrix, r: &Matrix) -> Result<Matrix> {
    let chol = r
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { what: "R" })?;
    let rinv_bt = chol.solve(&b.transpose());
    Ok(symmetrize(&(b * rinv_bt)))
}

/// Matrix sign function of `h` by scaled Newton iteration.
fn matrix_sign(h: &Matrix) -> Result<Matrix> {
    let dim = h.nrows();
    let mut w = h.clone();
    let mut scaling = true;
    for _ in 0..100 {
        let lu = w.clone().lu();
        let det = lu.determinant();
        let inv = lu.try_inverse().ok_or(Error::NotStabilizable)?;
        let mu = if scaling {
            let mu = det.abs().powf(-1.0 / dim as f64);
            if mu.is_finite() && mu > 0.0 {
                mu
            } else {
                1.0
            }
        } else {
            1.0
        };
        let next = (&w * mu + inv / mu) * 0.5;
        ensure_finite(&next, "sign iterate").map_err(|_| Error::NotStabilizable)?;
        let diff = (&next - &w).norm();
        w = next;
        let size = w.norm();
        if diff <= 1e-13 * size {
            break;
        }
        if diff < 1e-2 * size {
            scaling = false;
        }
    }
    let defect = (&w * &w - Matrix::identity(dim, dim)).norm();
    if defect > 1e-6 * w.norm_squared().max(1.0) {
        // Eigenvalues on or near the imaginary axis: no stabilizing solution.
        return Err(Error::NotStabilizable);
    }
    Ok(w)
}

/// Stabilizing solution of `AᵀP + PA - PBR̄⁻¹BᵀP + Q̄ = 0`.
///
/// The stable invariant subspace of the Hamiltonian is extracted with the
/// matrix sign function, then polished with Newton–Kleinman steps.
pub fn solve_care(a: &Matrix, b: &Matrix, rbar: &Matrix, qbar: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    ensure_finite(a, "A")?;
    ensure_finite(b, "B")?;
    ensure_finite(rbar, "Rbar")?;
    ensure_finite(qbar, "Qbar")?;
    let n = ensure_square(a, "A")?;
    if b.nrows() != n {
        return Err(Error::DimensionMismatch(format!("B must have {n} rows, got {}", b.nrows())));
    }
    let m = b.ncols();
    ensure_shape(rbar, m, m, "Rbar")?;
    ensure_shape(qbar, n, n, "Qbar")?;
    ensure_symmetric(rbar, "Rbar", tol)?;
    ensure_symmetric(qbar, "Qbar", tol)?;
    let (psd, min_eig) = psd_check(qbar, tol)?;
    if !psd {
        return Err(Error::NotPsd { what: "Qbar", min_eig });
    }
    let g = input_gramian(b, rbar).map_err(|_| Error::NotPositiveDefinite { what: "Rbar" })?;
    if !is_stabilizable(a, b, tol)? {
        return Err(Error::NotStabilizable);
    }
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }

    let mut h = Matrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-qbar));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let w = matrix_sign(&h)?;

    // Stable subspace = range [I; P] = ker(W + I).
    let mut lhs = Matrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n))
        .copy_from(&(w.view((n, n), (n, n)) + Matrix::identity(n, n)));
    let mut rhs = Matrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n))
        .copy_from(&(-(w.view((0, 0), (n, n)) + Matrix::identity(n, n))));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w.view((n, 0), (n, n))));
    let svd = lhs.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::IllConditioned(format!(
            "stable subspace basis is rank deficient (sigma_min/sigma_max = {:e})",
            smin / smax
        )));
    }
    let p = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::IllConditioned(e.to_string()))?;
    let mut p = symmetrize(&p);

    let scale = |p: &Matrix| tol.care * p.norm_squared().max(1.0);
    let mut res = care_residual_with_g(a, &g, qbar, &p).norm();
    for _ in 0..20 {
        if res <= 1e-3 * scale(&p) {
            break;
        }
        let closed = a - &g * &p;
        if spectral_abscissa(&closed)? >= -tol.hurwitz {
            break;
        }
        let next = lyapunov_unchecked(&closed, &(qbar + &p * &g * &p))?;
        let next_res = care_residual_with_g(a, &g, qbar, &next).norm();
        if next_res < res {
            p = next;
            res = next_res;
        } else {
            break;
        }
    }

    if res > scale(&p) {
        return Err(Error::IllConditioned(format!(
            "CARE residual {res:e} exceeds {:e}",
            scale(&p)
        )));
    }
    if !is_hurwitz(&(a - &g * &p), tol)? {
        return Err(Error::NotStabilizable);
    }
    Ok(p)
}
