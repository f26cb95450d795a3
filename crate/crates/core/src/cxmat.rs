//! Dense complex linear algebra for small matrices.
//!
//! Everything in this crate runs on channel matrices of a handful of
//! antennas, so the kernel favors robustness over asymptotics: Cholesky
//! for log-determinants of Hermitian positive-definite matrices,
//! Householder QR with a real non-negative R diagonal, and a one-sided
//! Jacobi compact SVD. All matrices are dense, row-major `Complex<f64>`.

use std::fmt;
use std::ops::{Index, IndexMut};

/// Complex scalar used throughout the crate.
pub type Complex64 = num_complex::Complex<f64>;

/// Shorthand constructor for a complex scalar.
#[inline]
pub fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Relative Hermitian-symmetry tolerance for `logdet_hpd` and friends.
pub const TAU_HERM: f64 = 1e-8;
/// Reconstruction tolerance, relative to the Frobenius norm.
pub const TAU_RECON: f64 = 1e-10;
/// Orthonormality tolerance for Q/W/V factors.
pub const TAU_ORTH: f64 = 1e-10;
/// Maximum number of Jacobi sweeps before the SVD gives up.
pub const MAX_SVD_SWEEPS: usize = 100;

/// Errors from the matrix kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum MatError {
    /// Inner dimensions (or shapes) do not line up.
    DimMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    /// Backing buffer length disagrees with rows×cols.
    BadLength { rows: usize, cols: usize, len: usize },
    /// Operation requires a square matrix.
    NotSquare { rows: usize, cols: usize },
    /// Matrix is not Hermitian within `TAU_HERM`.
    NotHermitian { defect: f64 },
    /// Cholesky hit a non-positive pivot; matrix is not positive definite.
    NotPositiveDefinite { pivot: f64, index: usize },
    /// `block_diag` needs at least one block.
    EmptyBlockList,
    /// Jacobi SVD failed to converge within `MAX_SVD_SWEEPS`.
    SvdNoConvergence { sweeps: usize },
    /// QR requires rows ≥ cols.
    RowsLessThanCols { rows: usize, cols: usize },
}

impl fmt::Display for MatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatError::DimMismatch { left, right } => write!(
                f,
                "dimension mismatch: {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
            MatError::BadLength { rows, cols, len } => {
                write!(f, "buffer of length {len} cannot hold a {rows}x{cols} matrix")
            }
            MatError::NotSquare { rows, cols } => write!(f, "matrix is {rows}x{cols}, not square"),
            MatError::NotHermitian { defect } => {
                write!(f, "matrix is not Hermitian (defect {defect:.3e})")
            }
            MatError::NotPositiveDefinite { pivot, index } => write!(
                f,
                "matrix is not positive definite (pivot {pivot:.3e} at index {index})"
            ),
            MatError::EmptyBlockList => write!(f, "block_diag requires at least one block"),
            MatError::SvdNoConvergence { sweeps } => {
                write!(f, "SVD did not converge after {sweeps} sweeps")
            }
            MatError::RowsLessThanCols { rows, cols } => {
                write!(f, "QR requires rows >= cols, got {rows}x{cols}")
            }
        }
    }
}

impl std::error::Error for MatError {}

/// Dense complex matrix, row-major.
///
/// Zero-dimensional matrices (0 rows or 0 columns) are permitted; they show
/// up as empty conditioning blocks and behave as the natural degenerate
/// cases (empty products are zero matrices, empty determinants are 1).
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl CMat {
    /// Build a matrix from a row-major buffer.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, MatError> {
        if data.len() != rows * cols {
            return Err(MatError::BadLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(CMat { rows, cols, data })
    }

    /// All-zeros matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    /// Matrix from nested rows of complex entries.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, MatError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(MatError::BadLength {
                    rows: r,
                    cols: c,
                    len: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        CMat::new(r, c, data)
    }

    /// Matrix from nested rows of real entries.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self, MatError> {
        let complex: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| cx(x, 0.0)).collect())
            .collect();
        CMat::from_rows(&complex)
    }

    /// Square diagonal matrix with real diagonal entries.
    pub fn diag_real(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = CMat::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = cx(d, 0.0);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// True if either dimension is zero.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    /// Real parts of the diagonal.
    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].re).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &CMat) -> Result<CMat, MatError> {
        if self.cols != other.rows {
            return Err(MatError::DimMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `self · self†`, always Hermitian PSD.
    pub fn aat(&self) -> CMat {
        let mut out = CMat::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..self.rows {
                let mut s = Complex64::ZERO;
                for k in 0..self.cols {
                    s += self[(i, k)] * self[(j, k)].conj();
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    /// Entrywise sum.
    pub fn add(&self, other: &CMat) -> Result<CMat, MatError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatError::DimMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a + b)
            .collect();
        CMat::new(self.rows, self.cols, data)
    }

    /// Entrywise difference.
    pub fn sub(&self, other: &CMat) -> Result<CMat, MatError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatError::DimMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a - b)
            .collect();
        CMat::new(self.rows, self.cols, data)
    }

    /// Scale by a real factor.
    pub fn scale(&self, factor: f64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// Sum of squared entry magnitudes.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Stack `self` on top of `bottom` (column counts must match).
    pub fn vstack(&self, bottom: &CMat) -> Result<CMat, MatError> {
        if self.cols != bottom.cols {
            return Err(MatError::DimMismatch {
                left: (self.rows, self.cols),
                right: (bottom.rows, bottom.cols),
            });
        }
        let mut data = Vec::with_capacity((self.rows + bottom.rows) * self.cols);
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&bottom.data);
        CMat::new(self.rows + bottom.rows, self.cols, data)
    }

    /// Place `right` next to `self` (row counts must match).
    pub fn hstack(&self, right: &CMat) -> Result<CMat, MatError> {
        if self.rows != right.rows {
            return Err(MatError::DimMismatch {
                left: (self.rows, self.cols),
                right: (right.rows, right.cols),
            });
        }
        let mut out = CMat::zeros(self.rows, self.cols + right.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)];
            }
            for j in 0..right.cols {
                out[(i, self.cols + j)] = right[(i, j)];
            }
        }
        Ok(out)
    }

    /// Columns `lo..hi` as a new matrix.
    pub fn columns(&self, lo: usize, hi: usize) -> CMat {
        assert!(lo <= hi && hi <= self.cols, "column range out of bounds");
        let mut out = CMat::zeros(self.rows, hi - lo);
        for i in 0..self.rows {
            for j in lo..hi {
                out[(i, j - lo)] = self[(i, j)];
            }
        }
        out
    }

    /// Rows `lo..hi` as a new matrix.
    pub fn row_block(&self, lo: usize, hi: usize) -> CMat {
        assert!(lo <= hi && hi <= self.rows, "row range out of bounds");
        let mut out = CMat::zeros(hi - lo, self.cols);
        for i in lo..hi {
            for j in 0..self.cols {
                out[(i - lo, j)] = self[(i, j)];
            }
        }
        out
    }

    /// Block-diagonal assembly of the given blocks.
    pub fn block_diag(blocks: &[CMat]) -> Result<CMat, MatError> {
        if blocks.is_empty() {
            return Err(MatError::EmptyBlockList);
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = CMat::zeros(rows, cols);
        let mut ro = 0;
        let mut co = 0;
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(ro + i, co + j)] = b[(i, j)];
                }
            }
            ro += b.rows;
            co += b.cols;
        }
        Ok(out)
    }

    fn hermitian_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                defect = defect.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        defect
    }

    /// Cholesky factor L with `self == L·L†`, L lower triangular with
    /// real positive diagonal. Requires Hermitian positive definite input.
    pub fn cholesky(&self) -> Result<CMat, MatError> {
        if self.rows != self.cols {
            return Err(MatError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let scale = self.data.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        let defect = self.hermitian_defect();
        if defect > TAU_HERM * (1.0 + scale) {
            return Err(MatError::NotHermitian { defect });
        }
        let n = self.rows;
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(MatError::NotPositiveDefinite { pivot: d, index: j });
            }
            let ljj = d.sqrt();
            l[(j, j)] = cx(ljj, 0.0);
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(l)
    }

    /// log2 det of a Hermitian positive-definite matrix, in bits.
    pub fn logdet_hpd(&self) -> Result<f64, MatError> {
        let l = self.cholesky()?;
        let mut acc = 0.0;
        for i in 0..l.rows {
            acc += l[(i, i)].re.log2();
        }
        Ok(2.0 * acc)
    }

    /// Inverse of a Hermitian positive-definite matrix via Cholesky solves.
    pub fn inverse_hpd(&self) -> Result<CMat, MatError> {
        let l = self.cholesky()?;
        let n = self.rows;
        let mut inv = CMat::zeros(n, n);
        for col in 0..n {
            // forward: L y = e_col
            let mut y = vec![Complex64::ZERO; n];
            for i in 0..n {
                let mut s = if i == col { Complex64::ONE } else { Complex64::ZERO };
                for k in 0..i {
                    s -= l[(i, k)] * y[k];
                }
                y[i] = s / l[(i, i)].re;
            }
            // backward: L† x = y
            let mut x = vec![Complex64::ZERO; n];
            for i in (0..n).rev() {
                let mut s = y[i];
                for k in (i + 1)..n {
                    s -= l[(k, i)].conj() * x[k];
                }
                x[i] = s / l[(i, i)].re;
            }
            for i in 0..n {
                inv[(i, col)] = x[i];
            }
        }
        Ok(inv)
    }

    /// Thin QR via Householder reflections, for rows ≥ cols.
    ///
    /// Returns `(q, r)` with `self == q·r`, `q†q == I`, `r` upper triangular
    /// with real non-negative diagonal. Rank deficiency is permitted and
    /// shows up as zero entries on the diagonal of `r`.
    pub fn qr(&self) -> Result<(CMat, CMat), MatError> {
        let (m, n) = (self.rows, self.cols);
        if m < n {
            return Err(MatError::RowsLessThanCols { rows: m, cols: n });
        }
        let mut r = self.clone();
        let mut q = CMat::identity(m);
        let mut v = vec![Complex64::ZERO; m];
        for j in 0..n {
            let mut norm_sq = 0.0;
            for i in j..m {
                norm_sq += r[(i, j)].norm_sqr();
            }
            let norm = norm_sq.sqrt();
            if norm < 1e-300 {
                continue; // zero column; leave the zero diagonal in place
            }
            let x0 = r[(j, j)];
            let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::ONE };
            for i in j..m {
                v[i - j] = r[(i, j)];
            }
            v[0] += phase * norm;
            let vlen = m - j;
            let vnorm_sq: f64 = v[..vlen].iter().map(|z| z.norm_sqr()).sum();
            if vnorm_sq < 1e-300 {
                continue;
            }
            // R <- H R on the trailing block, with H = I - 2 v v† / v†v
            for c in j..n {
                let mut w = Complex64::ZERO;
                for i in j..m {
                    w += v[i - j].conj() * r[(i, c)];
                }
                let f = w * (2.0 / vnorm_sq);
                for i in j..m {
                    let upd = f * v[i - j];
                    r[(i, c)] -= upd;
                }
            }
            // Q <- Q H
            for row in 0..m {
                let mut w = Complex64::ZERO;
                for c in j..m {
                    w += q[(row, c)] * v[c - j];
                }
                let f = w * (2.0 / vnorm_sq);
                for c in j..m {
                    let upd = f * v[c - j].conj();
                    q[(row, c)] -= upd;
                }
            }
            // clean exact zeros below the diagonal of column j
            for i in (j + 1)..m {
                r[(i, j)] = Complex64::ZERO;
            }
        }
        let mut q_thin = q.columns(0, n);
        let mut r_thin = r.row_block(0, n);
        // make the R diagonal real and non-negative
        for j in 0..n {
            let d = r_thin[(j, j)];
            let dn = d.norm();
            if dn > 0.0 {
                let ph = d / dn;
                for i in 0..m {
                    q_thin[(i, j)] *= ph;
                }
                for c in 0..n {
                    r_thin[(j, c)] *= ph.conj();
                }
                r_thin[(j, j)] = cx(dn, 0.0);
            }
        }
        Ok((q_thin, r_thin))
    }

    /// Compact SVD `self == w·lambda·v†`.
    ///
    /// For an N×M input with K = min(N, M): `w` is N×K with orthonormal
    /// columns, `lambda` is K×K real diagonal with entries sorted in
    /// descending order, `v` is M×K with orthonormal columns. One-sided
    /// Jacobi (Hestenes) sweeps; wide inputs are handled through the
    /// adjoint.
    pub fn compact_svd(&self) -> Result<(CMat, CMat, CMat), MatError> {
        if self.rows >= self.cols {
            let (w, sigma, v) = jacobi_svd_tall(self)?;
            Ok((w, CMat::diag_real(&sigma), v))
        } else {
            let (w_t, sigma, v_t) = jacobi_svd_tall(&self.adjoint())?;
            // A† = w_t Λ v_t†  =>  A = v_t Λ w_t†
            Ok((v_t, CMat::diag_real(&sigma), w_t))
        }
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Result<Vec<f64>, MatError> {
        let (_, lambda, _) = self.compact_svd()?;
        Ok(lambda.diagonal_real())
    }
}

/// One-sided Jacobi SVD of a tall (rows ≥ cols) matrix.
///
/// Returns `(w, sigma, v)` with `a == w·diag(sigma)·v†`, sigma descending.
fn jacobi_svd_tall(a: &CMat) -> Result<(CMat, Vec<f64>, CMat), MatError> {
    let (n, m) = (a.rows(), a.cols());
    debug_assert!(n >= m);
    let mut u = a.clone();
    let mut v = CMat::identity(m);
    let tol = 1e-14;
    let mut converged = m < 2;
    for _ in 0..MAX_SVD_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..m {
            for q in (p + 1)..m {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = Complex64::ZERO;
                for i in 0..n {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    app += up.norm_sqr();
                    aqq += uq.norm_sqr();
                    apq += up.conj() * uq;
                }
                if apq.norm() <= tol * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                // zero the (p,q) entry of the column Gram matrix with a
                // complex plane rotation
                let phi = apq.arg();
                let theta = 0.5 * f64::atan2(2.0 * apq.norm(), app - aqq);
                let (s, c) = theta.sin_cos();
                let e_neg = Complex64::from_polar(1.0, -phi);
                let e_pos = Complex64::from_polar(1.0, phi);
                for i in 0..n {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    u[(i, p)] = up * c + uq * (e_neg * s);
                    u[(i, q)] = up * (-e_pos * s) + uq * c;
                }
                for i in 0..m {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = vp * c + vq * (e_neg * s);
                    v[(i, q)] = vp * (-e_pos * s) + vq * c;
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(MatError::SvdNoConvergence {
            sweeps: MAX_SVD_SWEEPS,
        });
    }

    // singular values and descending sort
    let mut order: Vec<usize> = (0..m).collect();
    let sigmas: Vec<f64> = (0..m)
        .map(|j| {
            let mut s = 0.0;
            for i in 0..n {
                s += u[(i, j)].norm_sqr();
            }
            s.sqrt()
        })
        .collect();
    order.sort_by(|&x, &y| sigmas[y].partial_cmp(&sigmas[x]).unwrap());

    let mut w = CMat::zeros(n, m);
    let mut v_sorted = CMat::zeros(m, m);
    let mut sigma_sorted = Vec::with_capacity(m);
    for (dst, &src) in order.iter().enumerate() {
        let s = sigmas[src];
        sigma_sorted.push(if s < 1e-150 { 0.0 } else { s });
        for i in 0..m {
            v_sorted[(i, dst)] = v[(i, src)];
        }
        if s >= 1e-150 {
            for i in 0..n {
                w[(i, dst)] = u[(i, src)] / s;
            }
        }
    }
    // complete W columns for zero singular values so W stays orthonormal
    for j in 0..m {
        if sigma_sorted[j] > 0.0 {
            continue;
        }
        for basis in 0..n {
            let mut cand = vec![Complex64::ZERO; n];
            cand[basis] = Complex64::ONE;
            for k in 0..m {
                if k == j {
                    continue;
                }
                let mut proj = Complex64::ZERO;
                for i in 0..n {
                    proj += w[(i, k)].conj() * cand[i];
                }
                for i in 0..n {
                    let upd = proj * w[(i, k)];
                    cand[i] -= upd;
                }
            }
            let norm: f64 = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.5 {
                for i in 0..n {
                    w[(i, j)] = cand[i] / norm;
                }
                break;
            }
        }
    }
    Ok((w, sigma_sorted, v_sorted))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frob_diff(a: &CMat, b: &CMat) -> f64 {
        a.sub(b).unwrap().frobenius_norm_sq().sqrt()
    }

    /// Test-only determinant via Gaussian elimination with partial
    /// pivoting; independent of the Cholesky and Jacobi code paths.
    fn det_via_lu(a: &CMat) -> Complex64 {
        let n = a.rows();
        assert_eq!(n, a.cols());
        let mut m = a.clone();
        let mut det = Complex64::ONE;
        for col in 0..n {
            let mut piv = col;
            let mut best = m[(col, col)].norm();
            for row in (col + 1)..n {
                if m[(row, col)].norm() > best {
                    best = m[(row, col)].norm();
                    piv = row;
                }
            }
            if best == 0.0 {
                return Complex64::ZERO;
            }
            if piv != col {
                for j in 0..n {
                    let tmp = m[(col, j)];
                    m[(col, j)] = m[(piv, j)];
                    m[(piv, j)] = tmp;
                }
                det = -det;
            }
            det *= m[(col, col)];
            let inv = Complex64::ONE / m[(col, col)];
            for row in (col + 1)..n {
                let f = m[(row, col)] * inv;
                for j in col..n {
                    let upd = f * m[(col, j)];
                    m[(row, j)] -= upd;
                }
            }
        }
        det
    }

    /// Eigenvalues of a small Hermitian PSD matrix by sign-change
    /// bisection on det(A - λI); test oracle only.
    fn eigenvalues_hermitian_psd(a: &CMat) -> Vec<f64> {
        let n = a.rows();
        let hi = a.frobenius_norm_sq().sqrt() + 1.0;
        let f = |lam: f64| {
            let mut shifted = a.clone();
            for i in 0..n {
                shifted[(i, i)] -= cx(lam, 0.0);
            }
            det_via_lu(&shifted).re
        };
        let grid = 20_000;
        let mut roots = Vec::new();
        let mut prev = f(-1e-9);
        let mut prev_x = -1e-9;
        for k in 1..=grid {
            let x = -1e-9 + (hi + 1e-9) * (k as f64) / (grid as f64);
            let cur = f(x);
            if prev == 0.0 || prev.signum() != cur.signum() {
                let (mut lo, mut hi_b) = (prev_x, x);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi_b);
                    if f(lo).signum() == f(mid).signum() {
                        lo = mid;
                    } else {
                        hi_b = mid;
                    }
                }
                roots.push(0.5 * (lo + hi_b));
            }
            prev = cur;
            prev_x = x;
        }
        roots.sort_by(|x, y| y.partial_cmp(x).unwrap());
        roots
    }

    fn seeded_ginibre(seed: u64, n: usize, m: usize) -> CMat {
        // tiny LCG is enough for deterministic test matrices
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut mat = CMat::zeros(n, m);
        for i in 0..n {
            for j in 0..m {
                mat[(i, j)] = cx(next(), next());
            }
        }
        mat
    }

    #[test]
    fn matmul_identity_passthrough() {
        let a = CMat::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let prod = CMat::identity(2).matmul(&a).unwrap();
        assert_eq!(prod, a);
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = CMat::zeros(2, 3);
        let b = CMat::zeros(4, 2);
        assert!(matches!(a.matmul(&b), Err(MatError::DimMismatch { .. })));
    }

    #[test]
    fn matmul_permutation_swaps_rows() {
        let p = CMat::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let v = CMat::from_rows(&[vec![cx(1.0, 2.0)], vec![cx(3.0, -1.0)]]).unwrap();
        let out = p.matmul(&v).unwrap();
        assert_eq!(out[(0, 0)], cx(3.0, -1.0));
        assert_eq!(out[(1, 0)], cx(1.0, 2.0));
    }

    #[test]
    fn matmul_associativity_on_random_triples() {
        for seed in 0..20u64 {
            let a = seeded_ginibre(seed * 3 + 1, 3, 3);
            let b = seeded_ginibre(seed * 3 + 2, 3, 3);
            let c = seeded_ginibre(seed * 3 + 3, 3, 3);
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            assert!(frob_diff(&left, &right) < 1e-12);
        }
    }

    #[test]
    fn adjoint_is_involutive() {
        let a = seeded_ginibre(7, 3, 5);
        assert_eq!(a.adjoint().adjoint(), a);
    }

    #[test]
    fn logdet_identity_is_zero() {
        assert_eq!(CMat::identity(3).logdet_hpd().unwrap(), 0.0);
    }

    #[test]
    fn logdet_diag_two_two() {
        let d = CMat::diag_real(&[2.0, 2.0]);
        assert!((d.logdet_hpd().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn logdet_scaled_identity() {
        // I + 1.5 I = diag(2.5, 2.5): 2·log2(2.5)
        let d = CMat::diag_real(&[2.5, 2.5]);
        let expected = 2.0 * 2.5f64.log2();
        assert!((d.logdet_hpd().unwrap() - expected).abs() < 1e-12);
        assert!((expected - 2.6438561897747244).abs() < 1e-12);
    }

    #[test]
    fn logdet_rejects_non_hermitian() {
        let a = CMat::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(a.logdet_hpd(), Err(MatError::NotHermitian { .. })));
    }

    #[test]
    fn logdet_rejects_indefinite() {
        let a = CMat::diag_real(&[1.0, -2.0]);
        assert!(matches!(
            a.logdet_hpd(),
            Err(MatError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn logdet_matches_negated_inverse() {
        for seed in 0..10u64 {
            let g = seeded_ginibre(seed + 100, 4, 4);
            // I + G G† is comfortably HPD
            let a = CMat::identity(4).add(&g.aat()).unwrap();
            let inv = a.inverse_hpd().unwrap();
            let ld = a.logdet_hpd().unwrap();
            let ld_inv = inv.logdet_hpd().unwrap();
            assert!((ld + ld_inv).abs() < 1e-9, "ld {ld} vs inv {ld_inv}");
            // and the inverse really inverts
            assert!(frob_diff(&a.matmul(&inv).unwrap(), &CMat::identity(4)) < 1e-10);
        }
    }

    #[test]
    fn qr_identity() {
        let (q, r) = CMat::identity(2).qr().unwrap();
        assert!(frob_diff(&q, &CMat::identity(2)) < 1e-14);
        assert!(frob_diff(&r, &CMat::identity(2)) < 1e-14);
    }

    #[test]
    fn qr_three_four_column() {
        let a = CMat::from_real_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let (q, r) = a.qr().unwrap();
        assert!((q[(0, 0)].re - 0.6).abs() < 1e-12);
        assert!((q[(1, 0)].re - 0.8).abs() < 1e-12);
        assert!((r[(0, 0)].re - 5.0).abs() < 1e-12);
        assert!(r[(0, 0)].im.abs() < 1e-15);
    }

    #[test]
    fn qr_orthonormal_columns_on_random_tall() {
        let a = seeded_ginibre(42, 4, 2);
        let (q, r) = a.qr().unwrap();
        let qtq = q.adjoint().matmul(&q).unwrap();
        assert!(frob_diff(&qtq, &CMat::identity(2)) < 1e-10);
        // reconstruction and upper-triangularity
        let recon = q.matmul(&r).unwrap();
        assert!(frob_diff(&recon, &a) < 1e-10 * (1.0 + a.frobenius_norm_sq().sqrt()));
        assert!(r[(1, 0)].norm() < 1e-14);
        // diagonal real non-negative
        for j in 0..2 {
            assert!(r[(j, j)].im.abs() < 1e-14);
            assert!(r[(j, j)].re >= 0.0);
        }
    }

    #[test]
    fn qr_rejects_wide() {
        assert!(matches!(
            CMat::zeros(2, 3).qr(),
            Err(MatError::RowsLessThanCols { .. })
        ));
    }

    #[test]
    fn svd_diagonal() {
        let a = CMat::diag_real(&[3.0, 1.0]);
        let (w, lambda, v) = a.compact_svd().unwrap();
        assert_eq!(lambda.diagonal_real(), vec![3.0, 1.0]);
        // w and v are unitary diagonal-phase matrices here
        assert!(frob_diff(&w.aat(), &CMat::identity(2)) < 1e-12);
        assert!(frob_diff(&v.aat(), &CMat::identity(2)) < 1e-12);
        let recon = w.matmul(&lambda).unwrap().matmul(&v.adjoint()).unwrap();
        assert!(frob_diff(&recon, &a) < 1e-12);
    }

    #[test]
    fn svd_rank_deficient() {
        let a = CMat::from_real_rows(&[vec![0.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let (w, lambda, v) = a.compact_svd().unwrap();
        let sv = lambda.diagonal_real();
        assert!((sv[0] - 2.0).abs() < 1e-14);
        assert_eq!(sv[1], 0.0);
        // leading singular vectors: w1 along e1, v1 along e2
        assert!((w[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((v[(1, 0)].norm() - 1.0).abs() < 1e-12);
        // orthonormality survives the basis completion
        let wtw = w.adjoint().matmul(&w).unwrap();
        assert!(frob_diff(&wtw, &CMat::identity(2)) < 1e-12);
        let recon = w.matmul(&lambda).unwrap().matmul(&v.adjoint()).unwrap();
        assert!(frob_diff(&recon, &a) < 1e-12);
    }

    #[test]
    fn svd_reconstructs_random_draws() {
        for (seed, n, m) in [(1u64, 4, 4), (2, 5, 3), (3, 3, 5), (4, 2, 2), (5, 6, 1)] {
            let a = seeded_ginibre(seed + 10, n, m);
            let (w, lambda, v) = a.compact_svd().unwrap();
            let k = n.min(m);
            assert_eq!(w.rows(), n);
            assert_eq!(w.cols(), k);
            assert_eq!(v.rows(), m);
            assert_eq!(v.cols(), k);
            let recon = w.matmul(&lambda).unwrap().matmul(&v.adjoint()).unwrap();
            assert!(
                frob_diff(&recon, &a) < 1e-10 * (1.0 + a.frobenius_norm_sq().sqrt()),
                "reconstruction failed for {n}x{m}"
            );
            let wtw = w.adjoint().matmul(&w).unwrap();
            let vtv = v.adjoint().matmul(&v).unwrap();
            assert!(frob_diff(&wtw, &CMat::identity(k)) < TAU_ORTH);
            assert!(frob_diff(&vtv, &CMat::identity(k)) < TAU_ORTH);
            // descending order
            let sv = lambda.diagonal_real();
            for pair in sv.windows(2) {
                assert!(pair[0] >= pair[1]);
            }
        }
    }

    #[test]
    fn svd_matches_gram_eigenvalues() {
        for seed in 0..3u64 {
            let a = seeded_ginibre(seed + 50, 4, 4);
            let sv = a.singular_values().unwrap();
            let gram = a.adjoint().matmul(&a).unwrap();
            let eigs = eigenvalues_hermitian_psd(&gram);
            assert_eq!(eigs.len(), 4, "bisection oracle missed an eigenvalue");
            for (s, lam) in sv.iter().zip(eigs.iter()) {
                assert!(
                    (s - lam.max(0.0).sqrt()).abs() < 1e-9,
                    "sv {s} vs sqrt(eig) {}",
                    lam.sqrt()
                );
            }
        }
    }

    #[test]
    fn svd_agrees_after_qr() {
        // Q unitary, so R has the same singular values as A
        for seed in 0..5u64 {
            let a = seeded_ginibre(seed + 200, 5, 3);
            let (_, r) = a.qr().unwrap();
            let sv_a = a.singular_values().unwrap();
            let sv_r = r.singular_values().unwrap();
            for (x, y) in sv_a.iter().zip(sv_r.iter()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn block_diag_assembles() {
        let a = CMat::block_diag(&[CMat::identity(1), CMat::identity(2)]).unwrap();
        assert!(frob_diff(&a, &CMat::identity(3)) < 1e-15);

        let b = CMat::diag_real(&[2.0]);
        let c = CMat::diag_real(&[3.0]);
        let bd = CMat::block_diag(&[b.clone(), c]).unwrap();
        assert_eq!(bd.diagonal_real(), vec![2.0, 3.0]);

        let single = CMat::block_diag(&[b.clone()]).unwrap();
        assert_eq!(single, b);
    }

    #[test]
    fn block_diag_rejects_empty() {
        assert!(matches!(
            CMat::block_diag(&[]),
            Err(MatError::EmptyBlockList)
        ));
    }

    #[test]
    fn frobenius_values() {
        assert_eq!(CMat::identity(3).frobenius_norm_sq(), 3.0);
        assert_eq!(CMat::zeros(2, 2).frobenius_norm_sq(), 0.0);
        let a = CMat::from_real_rows(&[vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.frobenius_norm_sq(), 25.0);
    }

    #[test]
    fn empty_matrices_degenerate_cleanly() {
        let a = CMat::zeros(2, 0);
        let b = CMat::zeros(0, 3);
        let prod = a.matmul(&b).unwrap();
        assert_eq!(prod, CMat::zeros(2, 3));
        assert_eq!(CMat::zeros(0, 0).logdet_hpd().unwrap(), 0.0);
        let stacked = CMat::zeros(0, 3).vstack(&CMat::identity(3)).unwrap();
        assert_eq!(stacked, CMat::identity(3));
    }
}
