//! Compressed sparse row matrices and the dense-vector kernels built on them.
//!
//! All matrices are CSR with strictly increasing column indices inside each
//! row. Products accumulate row-major in ascending column order, so repeated
//! runs of the same build produce bit-identical results.

use crate::error::{Error, Result};

/// Dense vector of real scalars.
pub type Vector = Vec<f64>;

/// Square or rectangular sparse matrix in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    /// Hint that the matrix is symmetric; checked on construction when set.
    symmetric: bool,
}

impl SparseMatrix {
    /// Build from raw CSR arrays, validating the structural invariants.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
        symmetric: bool,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::DimensionMismatch {
                op: "from_csr",
                detail: format!("row_offsets length {} != n_rows+1", row_offsets.len()),
            });
        }
        if row_offsets[0] != 0 || *row_offsets.last().unwrap() != col_indices.len() {
            return Err(Error::DimensionMismatch {
                op: "from_csr",
                detail: "row_offsets must start at 0 and end at nnz".into(),
            });
        }
        if col_indices.len() != values.len() {
            return Err(Error::DimensionMismatch {
                op: "from_csr",
                detail: "col_indices and values length differ".into(),
            });
        }
        for i in 0..n_rows {
            if row_offsets[i] > row_offsets[i + 1] {
                return Err(Error::DimensionMismatch {
                    op: "from_csr",
                    detail: format!("row_offsets not monotone at row {i}"),
                });
            }
            let mut last: Option<usize> = None;
            for k in row_offsets[i]..row_offsets[i + 1] {
                let j = col_indices[k];
                if j >= n_cols {
                    return Err(Error::DimensionMismatch {
                        op: "from_csr",
                        detail: format!("column {j} out of range in row {i}"),
                    });
                }
                if let Some(prev) = last {
                    if j <= prev {
                        return Err(Error::DimensionMismatch {
                            op: "from_csr",
                            detail: format!("columns not strictly increasing in row {i}"),
                        });
                    }
                }
                last = Some(j);
            }
        }
        let m = SparseMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
            symmetric,
        };
        if symmetric && !m.is_symmetric(1e-12) {
            return Err(Error::DimensionMismatch {
                op: "from_csr",
                detail: "symmetry hint set but matrix is not symmetric to 1e-12".into(),
            });
        }
        Ok(m)
    }

    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
        symmetric: bool,
    ) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for &(i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::DimensionMismatch {
                    op: "from_triplets",
                    detail: format!("entry ({i},{j}) out of range"),
                });
            }
            per_row[i].push((j, v));
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for row in &mut per_row {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == j {
                    sum += row[k].1;
                    k += 1;
                }
                col_indices.push(j);
                values.push(sum);
            }
            row_offsets.push(col_indices.len());
        }
        SparseMatrix::from_csr(n_rows, n_cols, row_offsets, col_indices, values, symmetric)
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
            symmetric: true,
        }
    }

    /// Dense constructor for tests and small oracles; drops exact zeros.
    pub fn from_dense(rows: &[&[f64]], symmetric: bool) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = if n_rows == 0 { 0 } else { rows[0].len() };
        let mut trip = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        SparseMatrix::from_triplets(n_rows, n_cols, &trip, symmetric)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn symmetric_hint(&self) -> bool {
        self.symmetric
    }

    pub fn set_symmetric_hint(&mut self, flag: bool) {
        self.symmetric = flag;
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Entry (i, j) or zero when outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vector {
        let n = self.n_rows.min(self.n_cols);
        (0..n).map(|i| self.get(i, i)).collect()
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if (v - self.get(j, i)).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// y = A x.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                op: "mul_vec",
                detail: format!("x length {} != n_cols {}", x.len(), self.n_cols),
            });
        }
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut y);
        Ok(y)
    }

    /// y = A x without allocation; dimensions must already agree.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let lo = self.row_offsets[i];
            let hi = self.row_offsets[i + 1];
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            y[i] = acc;
        }
    }

    /// y = A^T x without materializing the transpose.
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                op: "mul_transpose_vec",
                detail: format!("x length {} != n_rows {}", x.len(), self.n_rows),
            });
        }
        let mut y = vec![0.0; self.n_cols];
        for i in 0..self.n_rows {
            let lo = self.row_offsets[i];
            let hi = self.row_offsets[i + 1];
            for k in lo..hi {
                y[self.col_indices[k]] += self.values[k] * x[i];
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols];
        for &j in &self.col_indices {
            counts[j] += 1;
        }
        let mut row_offsets = vec![0usize; self.n_cols + 1];
        for j in 0..self.n_cols {
            row_offsets[j + 1] = row_offsets[j] + counts[j];
        }
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = row_offsets.clone();
        for i in 0..self.n_rows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[k];
                let slot = next[j];
                col_indices[slot] = i;
                values[slot] = self.values[k];
                next[j] += 1;
            }
        }
        // Source rows are scanned in order, so each transposed row comes out sorted.
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets,
            col_indices,
            values,
            symmetric: self.symmetric,
        }
    }

    /// Sparse product self * other via row merge with a dense scratch
    /// accumulator; output columns ascend within each row.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                detail: format!(
                    "inner dimensions {} and {} differ",
                    self.n_cols, other.n_rows
                ),
            });
        }
        let n_rows = self.n_rows;
        let n_cols = other.n_cols;
        let mut scratch = vec![0.0f64; n_cols];
        let mut marker = vec![usize::MAX; n_cols];
        let mut touched: Vec<usize> = Vec::new();
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..n_rows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[k];
                let v = self.values[k];
                for kk in other.row_offsets[j]..other.row_offsets[j + 1] {
                    let jj = other.col_indices[kk];
                    if marker[jj] != i {
                        marker[jj] = i;
                        scratch[jj] = 0.0;
                        touched.push(jj);
                    }
                    scratch[jj] += v * other.values[kk];
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_indices.push(j);
                values.push(scratch[j]);
            }
            touched.clear();
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
            symmetric: false,
        })
    }

    /// self + alpha * other on the union pattern.
    pub fn add_scaled(&self, alpha: f64, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::DimensionMismatch {
                op: "add_scaled",
                detail: "shapes differ".into(),
            });
        }
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..self.n_rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let ja = if p < ca.len() { ca[p] } else { usize::MAX };
                let jb = if q < cb.len() { cb[q] } else { usize::MAX };
                if ja < jb {
                    col_indices.push(ja);
                    values.push(va[p]);
                    p += 1;
                } else if jb < ja {
                    col_indices.push(jb);
                    values.push(alpha * vb[q]);
                    q += 1;
                } else {
                    col_indices.push(ja);
                    values.push(va[p] + alpha * vb[q]);
                    p += 1;
                    q += 1;
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
            symmetric: false,
        })
    }

    /// Maximum |i - j| over the stored pattern.
    pub fn bandwidth(&self) -> usize {
        let mut b = 0usize;
        for i in 0..self.n_rows {
            let (cols, _) = self.row(i);
            for &j in cols {
                b = b.max(i.abs_diff(j));
            }
        }
        b
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[i][j] = v;
            }
        }
        d
    }
}

/// r = b - A x.
pub fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Result<Vector> {
    if b.len() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            op: "residual",
            detail: format!("b length {} != n_rows {}", b.len(), a.n_rows()),
        });
    }
    let ax = a.mul_vec(x)?;
    Ok(b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect())
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(x: &mut [f64], alpha: f64) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Energy norm sqrt(<Ax, x>) of an SPD matrix.
///
/// The quadratic form reuses `mul_vec`, so `a_norm(a, x)^2` equals
/// `dot(a.mul_vec(x), x)` exactly.
pub fn a_norm(a: &SparseMatrix, x: &[f64]) -> Result<f64> {
    let ax = a.mul_vec(x)?;
    let q = dot(&ax, x);
    let nx2 = dot(x, x);
    if q < -1e-10 * nx2 {
        return Err(Error::Indefinite(q));
    }
    Ok(q.max(0.0).sqrt())
}

/// <Ax,x> / <Bx,x>; B = None means the identity metric.
pub fn rayleigh_quotient(a: &SparseMatrix, b: Option<&SparseMatrix>, x: &[f64]) -> Result<f64> {
    let num = dot(&a.mul_vec(x)?, x);
    let den = match b {
        Some(bm) => dot(&bm.mul_vec(x)?, x),
        None => dot(x, x),
    };
    if den <= 0.0 {
        return Err(Error::DegenerateVector);
    }
    Ok(num / den)
}

/// Matrix rescaled so every row has unit l1 norm, with the scales retained.
#[derive(Debug, Clone)]
pub struct NormalizedMatrix {
    base: SparseMatrix,
    row_scales: Vec<f64>,
}

impl NormalizedMatrix {
    /// The l1-normalized matrix.
    pub fn matrix(&self) -> &SparseMatrix {
        &self.base
    }

    /// Multiplier that was applied to each row (1 / l1 row norm).
    pub fn row_scales(&self) -> &[f64] {
        &self.row_scales
    }

    /// Undo the scaling, reproducing the original matrix.
    pub fn unscale(&self) -> SparseMatrix {
        let mut m = self.base.clone();
        for i in 0..m.n_rows() {
            let lo = m.row_offsets()[i];
            let hi = m.row_offsets()[i + 1];
            let s = self.row_scales[i];
            for k in lo..hi {
                m.values_mut()[k] /= s;
            }
        }
        m
    }
}

/// Scale each row of `a` to unit l1 norm.
pub fn normalize_l1(a: &SparseMatrix) -> Result<NormalizedMatrix> {
    let mut base = a.clone();
    base.set_symmetric_hint(false);
    let mut row_scales = Vec::with_capacity(a.n_rows());
    for i in 0..a.n_rows() {
        let (_, vals) = a.row(i);
        let l1: f64 = vals.iter().map(|v| v.abs()).sum();
        if l1 == 0.0 {
            return Err(Error::DegenerateRow(i));
        }
        let s = 1.0 / l1;
        row_scales.push(s);
        let lo = base.row_offsets()[i];
        let hi = base.row_offsets()[i + 1];
        for k in lo..hi {
            base.values_mut()[k] *= s;
        }
    }
    Ok(NormalizedMatrix { base, row_scales })
}

/// Galerkin triple product R A P.
///
/// When R is P^T (detected structurally is too costly, so callers pass the
/// `variational` flag via [`galerkin`]) the result of an SPD input is SPD.
pub fn triple_product(
    r: &SparseMatrix,
    a: &SparseMatrix,
    p: &SparseMatrix,
) -> Result<SparseMatrix> {
    let ap = a.matmul(p)?;
    r.matmul(&ap)
}

/// Variational coarse operator P^T A P with the symmetry hint set.
pub fn galerkin(a: &SparseMatrix, p: &SparseMatrix) -> Result<SparseMatrix> {
    let rt = p.transpose();
    let mut c = triple_product(&rt, a, p)?;
    if a.symmetric_hint() {
        c.set_symmetric_hint(true);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_1d(n: usize) -> SparseMatrix {
        // tridiag(-1, 2, -1) without the 1/h^2 scale
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, n, &t, true).unwrap()
    }

    #[test]
    fn spmv_identity() {
        let a = SparseMatrix::identity(3);
        let y = a.mul_vec(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn spmv_zero_matrix() {
        let a = SparseMatrix::from_triplets(3, 3, &[], false).unwrap();
        let y = a.mul_vec(&[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn spmv_poisson_stencil() {
        let a = poisson_1d(3);
        let y = a.mul_vec(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(y, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let a = SparseMatrix::identity(3);
        assert!(a.mul_vec(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn spmv_linearity() {
        let a = poisson_1d(7);
        let x: Vec<f64> = (0..7).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..7).map(|i| (i as f64 * 1.91).cos()).collect();
        let (alpha, beta) = (0.6, -1.7);
        let mut z = vec![0.0; 7];
        for i in 0..7 {
            z[i] = alpha * x[i] + beta * y[i];
        }
        let az = a.mul_vec(&z).unwrap();
        let ax = a.mul_vec(&x).unwrap();
        let ay = a.mul_vec(&y).unwrap();
        for i in 0..7 {
            let expect = alpha * ax[i] + beta * ay[i];
            assert!((az[i] - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn residual_cases() {
        let a = SparseMatrix::identity(2);
        // exact solve -> zero residual
        let r = residual(&a, &[3.0, 3.0], &[3.0, 3.0]).unwrap();
        assert_eq!(r, vec![0.0, 0.0]);
        // zero guess -> r = b
        let r = residual(&a, &[0.0, 0.0], &[3.0, 3.0]).unwrap();
        assert_eq!(r, vec![3.0, 3.0]);
        // direct subtraction
        let r = residual(&a, &[1.0, 2.0], &[3.0, 3.0]).unwrap();
        assert_eq!(r, vec![2.0, 1.0]);
    }

    #[test]
    fn a_norm_cases() {
        let id = SparseMatrix::identity(2);
        assert!((a_norm(&id, &[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(a_norm(&id, &[0.0, 0.0]).unwrap(), 0.0);
        let d = SparseMatrix::from_dense(&[&[4.0, 0.0], &[0.0, 1.0]], true).unwrap();
        assert!((a_norm(&d, &[1.0, 1.0]).unwrap() - 5.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn a_norm_indefinite_error() {
        let d = SparseMatrix::from_dense(&[&[-1.0, 0.0], &[0.0, -1.0]], true).unwrap();
        assert!(matches!(
            a_norm(&d, &[1.0, 0.0]),
            Err(Error::Indefinite(_))
        ));
    }

    #[test]
    fn a_norm_matches_quadratic_form_exactly() {
        let a = poisson_1d(9);
        let x: Vec<f64> = (0..9).map(|i| ((i * i) as f64).sin()).collect();
        let nrm = a_norm(&a, &x).unwrap();
        let q = dot(&a.mul_vec(&x).unwrap(), &x);
        assert_eq!(nrm * nrm, q.max(0.0).sqrt().powi(2));
    }

    #[test]
    fn normalize_l1_cases() {
        let id = SparseMatrix::identity(3);
        let nm = normalize_l1(&id).unwrap();
        assert_eq!(nm.row_scales(), &[1.0, 1.0, 1.0]);
        assert_eq!(nm.matrix().to_dense(), id.to_dense());

        let a = SparseMatrix::from_dense(&[&[2.0, -2.0], &[0.0, 1.0]], false).unwrap();
        let nm = normalize_l1(&a).unwrap();
        assert_eq!(nm.matrix().get(0, 0), 0.5);
        assert_eq!(nm.matrix().get(0, 1), -0.5);
        assert_eq!(nm.row_scales()[0], 0.25);
    }

    #[test]
    fn normalize_l1_zero_row_error() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0)], false).unwrap();
        assert!(matches!(normalize_l1(&a), Err(Error::DegenerateRow(1))));
    }

    #[test]
    fn normalize_l1_unscale_round_trip() {
        let a = poisson_1d(6);
        let nm = normalize_l1(&a).unwrap();
        let back = nm.unscale();
        for i in 0..6 {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                assert!((back.get(i, j) - v).abs() <= 1e-15 * v.abs());
            }
        }
    }

    #[test]
    fn rayleigh_quotient_cases() {
        let id = SparseMatrix::identity(2);
        assert!((rayleigh_quotient(&id, None, &[0.3, -2.0]).unwrap() - 1.0).abs() < 1e-15);
        let d = SparseMatrix::from_dense(&[&[1.0, 0.0], &[0.0, 3.0]], true).unwrap();
        assert!((rayleigh_quotient(&d, None, &[1.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);
        // eigenpair of a diagonal matrix
        assert!((rayleigh_quotient(&d, None, &[0.0, 2.0]).unwrap() - 3.0).abs() < 1e-15);
        assert!(rayleigh_quotient(&d, None, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn galerkin_identity_and_column() {
        let a = poisson_1d(3);
        let id = SparseMatrix::identity(3);
        let c = galerkin(&a, &id).unwrap();
        assert_eq!(c.to_dense(), a.to_dense());

        let ones = SparseMatrix::from_dense(&[&[1.0], &[1.0]], false).unwrap();
        let id2 = SparseMatrix::identity(2);
        let c = galerkin(&id2, &ones).unwrap();
        assert_eq!(c.get(0, 0), 2.0);
    }

    #[test]
    fn galerkin_hand_triple_product() {
        let a = poisson_1d(3);
        let p = SparseMatrix::from_dense(&[&[0.5], &[1.0], &[0.5]], false).unwrap();
        let c = galerkin(&a, &p).unwrap();
        assert_eq!(c.n_rows(), 1);
        assert!((c.get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn galerkin_symmetry_and_rayleigh_signs() {
        use rand::{Rng, SeedableRng};
        let a = poisson_1d(12);
        // caliber-2 interpolation onto 6 coarse points
        let mut t = Vec::new();
        for c in 0..6 {
            t.push((2 * c, c, 1.0));
            if 2 * c + 1 < 12 {
                t.push((2 * c + 1, c, 0.5));
                if c + 1 < 6 {
                    t.push((2 * c + 1, c + 1, 0.5));
                }
            }
        }
        let p = SparseMatrix::from_triplets(12, 6, &t, false).unwrap();
        let c = galerkin(&a, &p).unwrap();
        assert!(c.is_symmetric(1e-12));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if norm2(&x) == 0.0 {
                continue;
            }
            assert!(rayleigh_quotient(&c, None, &x).unwrap() >= 0.0);
        }
    }

    #[test]
    fn transpose_round_trip() {
        let a = SparseMatrix::from_dense(&[&[1.0, 2.0, 0.0], &[0.0, 0.0, 3.0]], false).unwrap();
        let t = a.transpose();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.get(1, 0), 2.0);
        assert_eq!(t.transpose().to_dense(), a.to_dense());
    }
}
