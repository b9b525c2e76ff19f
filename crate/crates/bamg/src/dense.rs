//! Small dense and banded linear algebra used for coarsest-level solves,
//! local least-squares systems, and the generalized eigensolver.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Row-major dense matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn from_sparse(a: &SparseMatrix) -> Self {
        let mut d = DenseMatrix::zeros(a.n_rows(), a.n_cols());
        for i in 0..a.n_rows() {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            let row = &self.data[i * self.n_cols..(i + 1) * self.n_cols];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n_cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n_cols + j]
    }
}

/// Dense Cholesky factorization A = L L^T of an SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>, // lower triangle, row-major full storage
}

impl Cholesky {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let n = a.n_rows;
        if a.n_cols != n {
            return Err(Error::SingularCoarse("matrix not square".into()));
        }
        let mut l = a.data.clone();
        for j in 0..n {
            let mut d = l[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= 0.0 {
                return Err(Error::SingularCoarse(format!(
                    "nonpositive pivot {d} at column {j}"
                )));
            }
            let dj = d.sqrt();
            l[j * n + j] = dj;
            for i in (j + 1)..n {
                let mut s = l[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / dj;
            }
        }
        Ok(Cholesky { n, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    /// Solve L y = b (forward substitution only).
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }

    /// Solve L^T y = b (backward substitution only).
    pub fn solve_lower_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

/// Banded Cholesky factorization for SPD matrices with modest bandwidth.
///
/// Stores the lower band row-wise: `band[i][d]` holds entry (i, i-bw+d) with
/// the diagonal at d = bw. Factorization cost is O(n bw^2), which keeps
/// coarse-level direct solves cheap for lexicographically ordered grids.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>, // (bw + 1) entries per row
}

impl BandedCholesky {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.n_rows();
        if !a.is_square() {
            return Err(Error::SingularCoarse("matrix not square".into()));
        }
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut band = vec![0.0f64; n * w];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    band[i * w + (bw - (i - j))] = v;
                }
            }
        }
        for j in 0..n {
            let start = j.saturating_sub(bw);
            let mut d = band[j * w + bw];
            for k in start..j {
                let ljk = band[j * w + (bw - (j - k))];
                d -= ljk * ljk;
            }
            if d <= 0.0 {
                return Err(Error::SingularCoarse(format!(
                    "nonpositive pivot {d} at column {j}"
                )));
            }
            let dj = d.sqrt();
            band[j * w + bw] = dj;
            let end = (j + bw + 1).min(n);
            for i in (j + 1)..end {
                let mut s = band[i * w + (bw - (i - j))];
                let kstart = start.max(i.saturating_sub(bw));
                for k in kstart..j {
                    s -= band[i * w + (bw - (i - k))] * band[j * w + (bw - (j - k))];
                }
                band[i * w + (bw - (i - j))] = s / dj;
            }
        }
        Ok(BandedCholesky { n, bw, band })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut x = b.to_vec();
        for i in 0..n {
            let start = i.saturating_sub(bw);
            let mut s = x[i];
            for k in start..i {
                s -= self.band[i * w + (bw - (i - k))] * x[k];
            }
            x[i] = s / self.band[i * w + bw];
        }
        for i in (0..n).rev() {
            let end = (i + bw + 1).min(n);
            let mut s = x[i];
            for k in (i + 1)..end {
                s -= self.band[k * w + (bw - (k - i))] * x[k];
            }
            x[i] = s / self.band[i * w + bw];
        }
        x
    }
}

/// Direct SPD solver that picks banded or dense storage by bandwidth.
#[derive(Debug, Clone)]
pub enum DirectSolver {
    Dense(Cholesky),
    Banded(BandedCholesky),
}

impl DirectSolver {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.n_rows();
        let bw = a.bandwidth();
        // banded wins once the band is clearly narrower than the full width
        if n > 64 && bw + 1 < n / 2 {
            Ok(DirectSolver::Banded(BandedCholesky::factor(a)?))
        } else {
            Ok(DirectSolver::Dense(Cholesky::factor(
                &DenseMatrix::from_sparse(a),
            )?))
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            DirectSolver::Dense(c) => c.solve(b),
            DirectSolver::Banded(c) => c.solve(b),
        }
    }
}

/// Eigen-decomposition of a symmetric matrix by the cyclic Jacobi method.
///
/// Returns eigenvalues ascending with matching orthonormal eigenvectors as
/// columns of the returned matrix.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.n_rows;
    if a.n_cols != n {
        return Err(Error::InvalidArgument("eigen: matrix not square".into()));
    }
    let mut m = a.data.clone();
    let mut v = DenseMatrix::zeros(n, n);
    for i in 0..n {
        v[(i, i)] = 1.0;
    }
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        let scale: f64 = (0..n).map(|i| m[i * n + i] * m[i * n + i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (m[i * n + i], i)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let eigenvalues: Vec<f64> = pairs.iter().map(|&(w, _)| w).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (new_col, &(_, old_col)) in pairs.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new_col)] = v[(i, old_col)];
        }
    }
    Ok((eigenvalues, vectors))
}

/// Smallest `k` eigenpairs of the generalized problem A x = lambda T x with
/// T symmetric positive definite. Vectors come back T-orthonormal.
pub fn generalized_symmetric_eigen(
    a: &SparseMatrix,
    t: &SparseMatrix,
    k: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = a.n_rows();
    if t.n_rows() != n || !a.is_square() || !t.is_square() {
        return Err(Error::DimensionMismatch {
            op: "generalized_symmetric_eigen",
            detail: "A and T must be square with equal dimension".into(),
        });
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "requested {k} eigenpairs from dimension {n}"
        )));
    }
    let lt = Cholesky::factor(&DenseMatrix::from_sparse(t))
        .map_err(|e| Error::GramDegenerate(e.to_string()))?;
    // C = L^-1 A L^-T, assembled column by column
    let ad = DenseMatrix::from_sparse(a);
    let mut c = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let linv_t_col = lt.solve_lower_transpose(&e); // L^-T e_j
        let a_col = ad.mul_vec(&linv_t_col);
        let col = lt.solve_lower(&a_col); // L^-1 A L^-T e_j
        for i in 0..n {
            c[(i, j)] = col[i];
        }
    }
    // symmetrize roundoff before Jacobi
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = avg;
            c[(j, i)] = avg;
        }
    }
    let (eigenvalues, vectors) = symmetric_eigen(&c)?;
    let mut out = Vec::with_capacity(k);
    for idx in 0..k {
        let y: Vec<f64> = (0..n).map(|i| vectors[(i, idx)]).collect();
        let x = lt.solve_lower_transpose(&y);
        out.push((eigenvalues[idx], x));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::dot;

    fn poisson_1d(n: usize, h_inv2: f64) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 * h_inv2));
            if i > 0 {
                t.push((i, i - 1, -h_inv2));
            }
            if i + 1 < n {
                t.push((i, i + 1, -h_inv2));
            }
        }
        SparseMatrix::from_triplets(n, n, &t, true).unwrap()
    }

    #[test]
    fn dense_cholesky_solves() {
        let a = DenseMatrix::from_sparse(&poisson_1d(8, 1.0));
        let c = Cholesky::factor(&a).unwrap();
        let x_true: Vec<f64> = (0..8).map(|i| (i as f64) * 0.5 - 1.0).collect();
        let b = a.mul_vec(&x_true);
        let x = c.solve(&b);
        for i in 0..8 {
            assert!((x[i] - x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_cholesky_rejects_indefinite() {
        let a = DenseMatrix {
            n_rows: 2,
            n_cols: 2,
            data: vec![1.0, 3.0, 3.0, 1.0],
        };
        assert!(Cholesky::factor(&a).is_err());
    }

    #[test]
    fn banded_matches_dense() {
        let a = poisson_1d(40, 16.0);
        let banded = BandedCholesky::factor(&a).unwrap();
        let dense = Cholesky::factor(&DenseMatrix::from_sparse(&a)).unwrap();
        let b: Vec<f64> = (0..40).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
        let xb = banded.solve(&b);
        let xd = dense.solve(&b);
        for i in 0..40 {
            assert!((xb[i] - xd[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn jacobi_eigen_diag() {
        let a = DenseMatrix {
            n_rows: 3,
            n_cols: 3,
            data: vec![3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0],
        };
        let (w, _) = symmetric_eigen(&a).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12);
        assert!((w[1] - 2.0).abs() < 1e-12);
        assert!((w[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_eigen_poisson_closed_form() {
        // 1D Poisson eigenvalues (2 - 2 cos(k pi h)) / h^2
        let n = 15;
        let h = 1.0 / 16.0;
        let a = poisson_1d(n, 1.0 / (h * h));
        let (w, v) = symmetric_eigen(&DenseMatrix::from_sparse(&a)).unwrap();
        for k in 1..=n {
            let expect = (2.0 - 2.0 * ((k as f64) * std::f64::consts::PI * h).cos()) / (h * h);
            assert!(
                (w[k - 1] - expect).abs() < 1e-8 * expect,
                "eigenvalue {k}: {} vs {expect}",
                w[k - 1]
            );
        }
        // residual check on the lowest pair
        let x: Vec<f64> = (0..n).map(|i| v[(i, 0)]).collect();
        let ax = a.mul_vec(&x).unwrap();
        for i in 0..n {
            assert!((ax[i] - w[0] * x[i]).abs() < 1e-8 * w[0]);
        }
    }

    #[test]
    fn generalized_eigen_identity_metric() {
        let n = 15;
        let h = 1.0 / 16.0;
        let a = poisson_1d(n, 1.0 / (h * h));
        let t = SparseMatrix::identity(n);
        let pairs = generalized_symmetric_eigen(&a, &t, 3).unwrap();
        let expect = (2.0 - 2.0 * (std::f64::consts::PI * h).cos()) / (h * h);
        assert!((pairs[0].0 - expect).abs() < 1e-8 * expect);
        // T-orthonormal == orthonormal here
        assert!((dot(&pairs[0].1, &pairs[0].1) - 1.0).abs() < 1e-10);
        assert!(dot(&pairs[0].1, &pairs[1].1).abs() < 1e-10);
    }

    #[test]
    fn generalized_eigen_equal_operators() {
        let a = poisson_1d(6, 1.0);
        let pairs = generalized_symmetric_eigen(&a, &a, 3).unwrap();
        for (w, _) in pairs {
            assert!((w - 1.0).abs() < 1e-10);
        }
    }
}
