//! Relaxation schemes: lexicographic Gauss-Seidel, weighted Jacobi, and
//! Kaczmarz, plus the F-point and habituated variants used by compatible
//! relaxation.

use crate::dense::{Cholesky, DenseMatrix};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::sparse::{dot, SparseMatrix, Vector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmootherKind {
    GaussSeidelLex,
    WeightedJacobi,
    Kaczmarz,
}

/// Relaxation scheme specification; sweeps are full passes over the grid in
/// forward lexicographic order.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SmootherSpec {
    pub kind: SmootherKind,
    pub sweeps: usize,
    /// Damping for weighted Jacobi; ignored by the other kinds.
    pub weight: f64,
}

impl SmootherSpec {
    pub fn gauss_seidel(sweeps: usize) -> Self {
        SmootherSpec {
            kind: SmootherKind::GaussSeidelLex,
            sweeps,
            weight: 1.0,
        }
    }

    pub fn jacobi(sweeps: usize, weight: f64) -> Self {
        SmootherSpec {
            kind: SmootherKind::WeightedJacobi,
            sweeps,
            weight,
        }
    }

    pub fn kaczmarz(sweeps: usize) -> Self {
        SmootherSpec {
            kind: SmootherKind::Kaczmarz,
            sweeps,
            weight: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps < 1 {
            return Err(Error::Config("smoother sweeps must be >= 1".into()));
        }
        if !(self.weight > 0.0 && self.weight <= 1.0) {
            return Err(Error::Config(format!(
                "smoother weight {} outside (0, 1]",
                self.weight
            )));
        }
        Ok(())
    }
}

impl Default for SmootherSpec {
    fn default() -> Self {
        SmootherSpec::gauss_seidel(1)
    }
}

fn checked_diagonal(a: &SparseMatrix) -> Result<Vector> {
    let d = a.diagonal();
    for (i, &di) in d.iter().enumerate() {
        if di == 0.0 {
            return Err(Error::ZeroDiagonal(i));
        }
    }
    Ok(d)
}

fn gauss_seidel_sweep(a: &SparseMatrix, x: &mut [f64], b: &[f64], diag: &[f64]) {
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        let mut s = b[i];
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i {
                s -= v * x[j];
            }
        }
        x[i] = s / diag[i];
    }
}

fn jacobi_sweep(a: &SparseMatrix, x: &mut [f64], b: &[f64], diag: &[f64], w: f64, scratch: &mut [f64]) {
    a.mul_vec_into(x, scratch);
    for i in 0..a.n_rows() {
        x[i] += w * (b[i] - scratch[i]) / diag[i];
    }
}

fn kaczmarz_sweep(a: &SparseMatrix, x: &mut [f64], b: &[f64]) {
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        let mut r = b[i];
        let mut nrm2 = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            r -= v * x[j];
            nrm2 += v * v;
        }
        if nrm2 == 0.0 {
            continue;
        }
        let t = r / nrm2;
        for (&j, &v) in cols.iter().zip(vals) {
            x[j] += t * v;
        }
    }
}

/// Apply `spec.sweeps` full relaxation sweeps to the system A x = b in place.
pub fn smooth_in_place(
    spec: &SmootherSpec,
    a: &SparseMatrix,
    x: &mut [f64],
    b: &[f64],
) -> Result<()> {
    if x.len() != a.n_cols() || b.len() != a.n_rows() || !a.is_square() {
        return Err(Error::DimensionMismatch {
            op: "smooth",
            detail: format!(
                "matrix {}x{}, x {}, b {}",
                a.n_rows(),
                a.n_cols(),
                x.len(),
                b.len()
            ),
        });
    }
    match spec.kind {
        SmootherKind::GaussSeidelLex => {
            let d = checked_diagonal(a)?;
            for _ in 0..spec.sweeps {
                gauss_seidel_sweep(a, x, b, &d);
            }
        }
        SmootherKind::WeightedJacobi => {
            let d = checked_diagonal(a)?;
            let mut scratch = vec![0.0; a.n_rows()];
            for _ in 0..spec.sweeps {
                jacobi_sweep(a, x, b, &d, spec.weight, &mut scratch);
            }
        }
        SmootherKind::Kaczmarz => {
            for _ in 0..spec.sweeps {
                kaczmarz_sweep(a, x, b);
            }
        }
    }
    Ok(())
}

/// Pure-function form of [`smooth_in_place`].
pub fn smooth(spec: &SmootherSpec, a: &SparseMatrix, x: &[f64], b: &[f64]) -> Result<Vector> {
    let mut out = x.to_vec();
    smooth_in_place(spec, a, &mut out, b)?;
    Ok(out)
}

/// Compatible relaxation sweep: relax the homogeneous system on F rows only,
/// keeping values at C frozen.
pub fn f_relax(
    spec: &SmootherSpec,
    a: &SparseMatrix,
    part: &Partition,
    x: &[f64],
) -> Result<Vector> {
    if part.len() != a.n_rows() || x.len() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            op: "f_relax",
            detail: "partition or vector length differs from matrix dimension".into(),
        });
    }
    let mut out = x.to_vec();
    f_relax_in_place(spec, a, part, &mut out)?;
    Ok(out)
}

pub fn f_relax_in_place(
    spec: &SmootherSpec,
    a: &SparseMatrix,
    part: &Partition,
    x: &mut [f64],
) -> Result<()> {
    if part.n_fine() == 0 {
        return Ok(());
    }
    match spec.kind {
        SmootherKind::GaussSeidelLex => {
            let d = checked_diagonal(a)?;
            for _ in 0..spec.sweeps {
                for i in 0..a.n_rows() {
                    if part.is_coarse(i) {
                        continue;
                    }
                    let (cols, vals) = a.row(i);
                    let mut s = 0.0;
                    for (&j, &v) in cols.iter().zip(vals) {
                        if j != i {
                            s -= v * x[j];
                        }
                    }
                    x[i] = s / d[i];
                }
            }
        }
        SmootherKind::WeightedJacobi => {
            let d = checked_diagonal(a)?;
            let mut scratch = vec![0.0; a.n_rows()];
            for _ in 0..spec.sweeps {
                a.mul_vec_into(x, &mut scratch);
                for i in 0..a.n_rows() {
                    if !part.is_coarse(i) {
                        x[i] -= spec.weight * scratch[i] / d[i];
                    }
                }
            }
        }
        SmootherKind::Kaczmarz => {
            // project onto F rows only, moving F unknowns
            for _ in 0..spec.sweeps {
                for i in 0..a.n_rows() {
                    if part.is_coarse(i) {
                        continue;
                    }
                    let (cols, vals) = a.row(i);
                    let mut r = 0.0;
                    let mut nrm2 = 0.0;
                    for (&j, &v) in cols.iter().zip(vals) {
                        r -= v * x[j];
                        if !part.is_coarse(j) {
                            nrm2 += v * v;
                        }
                    }
                    if nrm2 == 0.0 {
                        continue;
                    }
                    let t = r / nrm2;
                    for (&j, &v) in cols.iter().zip(vals) {
                        if !part.is_coarse(j) {
                            x[j] += t * v;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// l2 projector onto range(X^T) for a full-row-rank constraint matrix X.
///
/// Solves (X X^T) y = X e by dense Cholesky up to 4096 constraints and by
/// conjugate gradients beyond that; setup-scale sizes only.
pub struct ConstraintProjector<'a> {
    x: &'a SparseMatrix,
    solver: ProjectorSolver,
}

enum ProjectorSolver {
    Dense(Cholesky),
    Cg(SparseMatrix),
}

impl<'a> ConstraintProjector<'a> {
    pub fn new(x: &'a SparseMatrix) -> Result<Self> {
        let xxt = x.matmul(&x.transpose())?;
        let n_c = xxt.n_rows();
        let solver = if n_c <= 4096 {
            let chol = Cholesky::factor(&DenseMatrix::from_sparse(&xxt))
                .map_err(|_| Error::SingularProjection)?;
            ProjectorSolver::Dense(chol)
        } else {
            ProjectorSolver::Cg(xxt)
        };
        Ok(ConstraintProjector { x, solver })
    }

    fn solve_gram(&self, rhs: &[f64]) -> Result<Vector> {
        match &self.solver {
            ProjectorSolver::Dense(chol) => Ok(chol.solve(rhs)),
            ProjectorSolver::Cg(xxt) => cg_solve(xxt, rhs, 1e-12, 10 * rhs.len()),
        }
    }

    /// e - X^T (X X^T)^-1 X e.
    pub fn project_out(&self, e: &[f64]) -> Result<Vector> {
        let xe = self.x.mul_vec(e)?;
        let y = self.solve_gram(&xe)?;
        let xty = self.x.mul_transpose_vec(&y)?;
        Ok(e.iter().zip(&xty).map(|(a, b)| a - b).collect())
    }
}

fn cg_solve(a: &SparseMatrix, b: &[f64], rel_tol: f64, max_iters: usize) -> Result<Vector> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let b_norm2 = rr.sqrt().max(f64::MIN_POSITIVE);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iters {
        if rr.sqrt() <= rel_tol * b_norm2 {
            break;
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SingularProjection);
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Ok(x)
}

/// One habituated-CR application: nu full-grid sweeps on the homogeneous
/// system, then the l2 projection off range(X^T), so X * result = 0.
pub fn hcr_apply(
    a: &SparseMatrix,
    spec: &SmootherSpec,
    x_constraints: &SparseMatrix,
    e: &[f64],
) -> Result<Vector> {
    let mut v = e.to_vec();
    if spec.sweeps > 0 {
        let b = vec![0.0; a.n_rows()];
        smooth_in_place(spec, a, &mut v, &b)?;
    }
    let projector = ConstraintProjector::new(x_constraints)?;
    projector.project_out(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::fd_poisson;
    use crate::sparse::{a_norm, norm2};
    use rand::{Rng, SeedableRng};

    fn poisson_1d(n: usize) -> SparseMatrix {
        let h_inv2 = ((n + 1) * (n + 1)) as f64;
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
    fn exact_solution_is_fixed_point() {
        let a = poisson_1d(5);
        let x_true: Vec<f64> = (0..5).map(|i| (i as f64 + 1.0) * 0.2).collect();
        let b = a.mul_vec(&x_true).unwrap();
        for spec in [
            SmootherSpec::gauss_seidel(3),
            SmootherSpec::jacobi(3, 0.8),
            SmootherSpec::kaczmarz(3),
        ] {
            let out = smooth(&spec, &a, &x_true, &b).unwrap();
            for i in 0..5 {
                assert!((out[i] - x_true[i]).abs() < 1e-12, "{spec:?}");
            }
        }
    }

    #[test]
    fn jacobi_explicit_step() {
        let a = SparseMatrix::from_dense(&[&[2.0, 0.0], &[0.0, 2.0]], true).unwrap();
        let out = smooth(
            &SmootherSpec::jacobi(1, 1.0),
            &a,
            &[1.0, 1.0],
            &[0.0, 0.0],
        )
        .unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn gauss_seidel_hand_sweep() {
        // forward sweep on tridiag Poisson from (1,0,0): each update reads
        // already-updated neighbors, so everything collapses to zero
        let a = poisson_1d(3);
        let out = smooth(
            &SmootherSpec::gauss_seidel(1),
            &a,
            &[1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0],
        )
        .unwrap();
        // hand simulation: x1 <- x2/2 = 0; x2 <- (x1+x3)/2 = 0; x3 <- x2/2 = 0
        assert_eq!(out, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_diagonal_rejected() {
        let a = SparseMatrix::from_dense(&[&[0.0, 1.0], &[1.0, 0.0]], true).unwrap();
        let r = smooth(&SmootherSpec::gauss_seidel(1), &a, &[1.0, 1.0], &[0.0, 0.0]);
        assert!(matches!(r, Err(Error::ZeroDiagonal(0))));
    }

    #[test]
    fn gauss_seidel_a_norm_nonincreasing() {
        let (a, _) = fd_poisson(9).unwrap();
        let n = a.n_rows();
        let b = vec![0.0; n];
        let spec = SmootherSpec::gauss_seidel(1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let before = a_norm(&a, &x).unwrap();
            let out = smooth(&spec, &a, &x, &b).unwrap();
            let after = a_norm(&a, &out).unwrap();
            assert!(after <= before * (1.0 + 1e-12));
        }
    }

    #[test]
    fn f_relax_c_everything_is_identity() {
        let a = poisson_1d(4);
        let part = Partition::all_coarse(4);
        let x = vec![1.0, -2.0, 3.0, -4.0];
        let out = f_relax(&SmootherSpec::gauss_seidel(2), &a, &part, &x).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn f_relax_c_empty_equals_smooth() {
        let a = poisson_1d(6);
        let part = Partition::all_fine(6);
        let x: Vec<f64> = (0..6).map(|i| (i as f64).cos()).collect();
        let b = vec![0.0; 6];
        let spec = SmootherSpec::gauss_seidel(2);
        let via_f = f_relax(&spec, &a, &part, &x).unwrap();
        let via_smooth = smooth(&spec, &a, &x, &b).unwrap();
        assert_eq!(via_f, via_smooth);
    }

    #[test]
    fn f_relax_freezes_coarse_values() {
        let a = poisson_1d(3);
        let part = Partition::from_coarse_indices(3, &[1]);
        let out = f_relax(
            &SmootherSpec::gauss_seidel(1),
            &a,
            &part,
            &[1.0, 1.0, 1.0],
        )
        .unwrap();
        // hand sweep: x0 <- x1/2 = 0.5, x1 frozen, x2 <- x1/2 = 0.5
        assert_eq!(out, vec![0.5, 1.0, 0.5]);
    }

    #[test]
    fn f_relax_invariance_random() {
        let (a, _) = fd_poisson(6).unwrap();
        let n = a.n_rows();
        let part = Partition::from_coarse_indices(n, &[0, 7, 12, 23, 35]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for spec in [
            SmootherSpec::gauss_seidel(2),
            SmootherSpec::jacobi(2, 0.7),
            SmootherSpec::kaczmarz(1),
        ] {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let out = f_relax(&spec, &a, &part, &x).unwrap();
            for &c in &part.coarse_indices() {
                assert_eq!(out[c], x[c], "{spec:?}");
            }
        }
    }

    #[test]
    fn hcr_coordinate_projection() {
        // X selecting C rows of the identity: result vanishes on C exactly
        let (a, _) = fd_poisson(4).unwrap();
        let n = a.n_rows();
        let coarse = [2usize, 5, 9, 14];
        let mut t = Vec::new();
        for (r, &c) in coarse.iter().enumerate() {
            t.push((r, c, 1.0));
        }
        let x_mat = SparseMatrix::from_triplets(coarse.len(), n, &t, false).unwrap();
        let mut e = vec![0.0; n];
        for i in 0..n {
            e[i] = ((i * 13 % 7) as f64) - 3.0;
        }
        let out = hcr_apply(&a, &SmootherSpec::gauss_seidel(2), &x_mat, &e).unwrap();
        for &c in &coarse {
            assert!(out[c].abs() < 1e-12);
        }
    }

    #[test]
    fn hcr_explicit_two_point_projection() {
        let a = SparseMatrix::identity(2);
        let s = 1.0 / 2.0f64.sqrt();
        let x_mat = SparseMatrix::from_dense(&[&[s, s]], false).unwrap();
        let spec = SmootherSpec {
            sweeps: 0,
            ..SmootherSpec::gauss_seidel(1)
        };
        let out = hcr_apply(&a, &spec, &x_mat, &[1.0, 0.0]).unwrap();
        assert!((out[0] - 0.5).abs() < 1e-14);
        assert!((out[1] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn hcr_annihilates_constraint_range() {
        // e in range(X^T) with no smoothing projects to zero
        let a = SparseMatrix::identity(4);
        let x_mat =
            SparseMatrix::from_dense(&[&[1.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 2.0, -1.0]], false)
                .unwrap();
        let e = x_mat.mul_transpose_vec(&[0.7, -0.3]).unwrap();
        let spec = SmootherSpec {
            sweeps: 0,
            ..SmootherSpec::gauss_seidel(1)
        };
        let out = hcr_apply(&a, &spec, &x_mat, &e).unwrap();
        assert!(norm2(&out) < 1e-12);
    }

    #[test]
    fn projection_idempotent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 12;
            let rows = 4;
            let mut t = Vec::new();
            for i in 0..rows {
                for j in 0..n {
                    t.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
            let x_mat = SparseMatrix::from_triplets(rows, n, &t, false).unwrap();
            let projector = ConstraintProjector::new(&x_mat).unwrap();
            let e: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let once = projector.project_out(&e).unwrap();
            let twice = projector.project_out(&once).unwrap();
            for i in 0..n {
                assert!((once[i] - twice[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_deficient_constraints_rejected() {
        let x_mat =
            SparseMatrix::from_dense(&[&[1.0, 2.0, 0.0], &[2.0, 4.0, 0.0]], false).unwrap();
        assert!(matches!(
            ConstraintProjector::new(&x_mat),
            Err(Error::SingularProjection)
        ));
    }
}
