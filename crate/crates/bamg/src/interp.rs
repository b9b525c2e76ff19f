//! Least-squares interpolation: fits each row of P to a set of test vectors
//! over a small interpolatory set, with an optional residual-based update of
//! the test vectors (LSR) before the fit.

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::problems::GridMeta;
use crate::sparse::{dot, norm2, normalize_l1, SparseMatrix, Vector};
use serde::{Deserialize, Serialize};

/// Where a test vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TvOrigin {
    Relaxed,
    Eigen,
}

/// One test vector with its least-squares metadata.
#[derive(Debug, Clone)]
pub struct TestVector {
    pub values: Vector,
    /// Positive least-squares weight.
    pub weight: f64,
    /// <Av, v> on the owning level.
    pub energy: f64,
    /// ||Av||_2 on the owning level (homogeneous residual).
    pub residual_norm: f64,
    pub origin: TvOrigin,
    /// Generalized eigenvalue estimate; eigen-origin vectors only.
    pub eigenvalue: Option<f64>,
}

impl TestVector {
    pub fn relaxed(values: Vector) -> Self {
        TestVector {
            values,
            weight: 1.0,
            energy: 0.0,
            residual_norm: 0.0,
            origin: TvOrigin::Relaxed,
            eigenvalue: None,
        }
    }
}

/// Ordered collection of test vectors of one common length.
#[derive(Debug, Clone, Default)]
pub struct TestVectorSet {
    vectors: Vec<TestVector>,
}

impl TestVectorSet {
    pub fn new(vectors: Vec<TestVector>) -> Result<Self> {
        let set = TestVectorSet { vectors };
        if set.vectors.is_empty() {
            return Err(Error::InvalidArgument("empty test-vector set".into()));
        }
        let n = set.dim();
        if set.vectors.iter().any(|v| v.values.len() != n) {
            return Err(Error::DimensionMismatch {
                op: "TestVectorSet::new",
                detail: "test vectors differ in length".into(),
            });
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.values.len())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[TestVector] {
        &self.vectors
    }

    pub fn vectors_mut(&mut self) -> &mut [TestVector] {
        &mut self.vectors
    }

    pub fn push(&mut self, tv: TestVector) {
        self.vectors.push(tv);
    }

    /// Values of all test vectors at point `i` (the row trace V_(i)).
    pub fn trace(&self, i: usize) -> Vector {
        self.vectors.iter().map(|v| v.values[i]).collect()
    }

    /// Point-major copy of the data: entry [i * k + kappa].
    pub fn point_major(&self) -> Vector {
        let (n, k) = (self.dim(), self.len());
        let mut out = vec![0.0; n * k];
        for (kappa, v) in self.vectors.iter().enumerate() {
            for i in 0..n {
                out[i * k + kappa] = v.values[i];
            }
        }
        out
    }

    /// Recompute energies and residual norms against `a`.
    pub fn refresh_metadata(&mut self, a: &SparseMatrix) -> Result<()> {
        for tv in &mut self.vectors {
            let av = a.mul_vec(&tv.values)?;
            tv.energy = dot(&av, &tv.values);
            tv.residual_norm = norm2(&av);
        }
        Ok(())
    }
}

/// Weighting rule for the least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// omega = ||v||^2 / <Av, v>: globally smooth vectors count more.
    ANorm,
    /// omega = 1 / ||A~ v||_2 with l1-normalized A~ and unit-norm v; favors
    /// almost-zero modes.
    Azm,
    /// All weights one.
    Uniform,
}

/// Largest weight assigned to a vector with vanishing energy or residual.
pub const WEIGHT_CAP: f64 = 1e8;

/// Compute least-squares weights in place and normalize by the maximum.
///
/// Eigen-origin vectors with an eigenvalue estimate are weighted by its
/// inverse in `ANorm` mode, which is the generalized Rayleigh-quotient form
/// of the same rule.
pub fn compute_weights(v: &mut TestVectorSet, a: &SparseMatrix, mode: WeightMode) -> Result<()> {
    let azm_matrix = match mode {
        WeightMode::Azm => Some(normalize_l1(a)?),
        _ => None,
    };
    for tv in v.vectors_mut() {
        let w = match mode {
            WeightMode::Uniform => 1.0,
            WeightMode::ANorm => {
                if let (TvOrigin::Eigen, Some(lambda)) = (tv.origin, tv.eigenvalue) {
                    if lambda > 1.0 / WEIGHT_CAP {
                        1.0 / lambda
                    } else {
                        WEIGHT_CAP
                    }
                } else {
                    let av = a.mul_vec(&tv.values)?;
                    let energy = dot(&av, &tv.values);
                    tv.energy = energy;
                    tv.residual_norm = norm2(&av);
                    let nrm2 = dot(&tv.values, &tv.values);
                    if energy > nrm2 / WEIGHT_CAP {
                        nrm2 / energy
                    } else {
                        WEIGHT_CAP
                    }
                }
            }
            WeightMode::Azm => {
                let nrm = norm2(&tv.values);
                if nrm == 0.0 {
                    WEIGHT_CAP
                } else {
                    let unit: Vector = tv.values.iter().map(|x| x / nrm).collect();
                    let r = azm_matrix.as_ref().unwrap().matrix().mul_vec(&unit)?;
                    let rn = norm2(&r);
                    if rn > 1.0 / WEIGHT_CAP {
                        1.0 / rn
                    } else {
                        WEIGHT_CAP
                    }
                }
            }
        };
        tv.weight = w;
    }
    normalize_weights(v);
    Ok(())
}

/// Divide all weights by the maximum; the LS minimizer is invariant under a
/// common positive scaling, this just conditions the normal equations.
pub fn normalize_weights(v: &mut TestVectorSet) {
    let max_w = v
        .vectors()
        .iter()
        .fold(0.0f64, |m, tv| m.max(tv.weight));
    if max_w > 0.0 {
        for tv in v.vectors_mut() {
            tv.weight /= max_w;
        }
    }
}

/// Sparse rectangular interpolation map with per-row fit diagnostics.
#[derive(Debug, Clone)]
pub struct InterpolationOperator {
    /// n x n_c map; rows at C-points are unit coordinate rows.
    pub p: SparseMatrix,
    /// Interpolatory set per row (empty at C-points).
    pub sets: Vec<Vec<usize>>,
    /// Least-squares functional value at the minimizer, per row.
    pub fitness: Vec<f64>,
    /// Largest |C_i| used.
    pub caliber: usize,
    /// Rows whose fitness exceeds 10x the median (reported, not repaired).
    pub flagged_rows: Vec<usize>,
    /// Rows where every test vector vanished on C_i and {i}.
    pub degenerate_rows: Vec<usize>,
}

/// Full-coarsening partition of a structured grid: C-points have both grid
/// indices even.
pub fn full_coarsening_partition(meta: &GridMeta) -> Partition {
    let mut part = Partition::all_fine(meta.n_points());
    for j in 1..=meta.ny {
        for i in 1..=meta.nx {
            if i % 2 == 0 && j % 2 == 0 {
                part.set_coarse(meta.index(i, j));
            }
        }
    }
    part
}

/// Geometric interpolatory sets for standard full coarsening: F-points on a
/// coarse line take their two collinear coarse neighbors, cell centers take
/// their four diagonal coarse neighbors.
pub fn geometric_interp_sets(meta: &GridMeta, part: &Partition) -> Result<Vec<Vec<usize>>> {
    let mut sets = vec![Vec::new(); meta.n_points()];
    for j in 1..=meta.ny {
        for i in 1..=meta.nx {
            let idx = meta.index(i, j);
            if part.is_coarse(idx) {
                continue;
            }
            let mut cands: Vec<(isize, isize)> = Vec::new();
            match (i % 2 == 0, j % 2 == 0) {
                (false, true) => {
                    cands.push((i as isize - 1, j as isize));
                    cands.push((i as isize + 1, j as isize));
                }
                (true, false) => {
                    cands.push((i as isize, j as isize - 1));
                    cands.push((i as isize, j as isize + 1));
                }
                (false, false) => {
                    for di in [-1isize, 1] {
                        for dj in [-1isize, 1] {
                            cands.push((i as isize + di, j as isize + dj));
                        }
                    }
                }
                (true, true) => unreachable!("even-even points are coarse"),
            }
            let mut set = Vec::new();
            for (ci, cj) in cands {
                if ci >= 1 && ci <= meta.nx as isize && cj >= 1 && cj <= meta.ny as isize {
                    let c_idx = meta.index(ci as usize, cj as usize);
                    if part.is_coarse(c_idx) {
                        set.push(c_idx);
                    }
                }
            }
            if set.is_empty() {
                return Err(Error::IsolatedPoint(idx));
            }
            set.sort_unstable();
            sets[idx] = set;
        }
    }
    Ok(sets)
}

/// Algebraic interpolatory sets: the `caliber` coarse neighbors within graph
/// distance two that have the smallest algebraic distance to each F-point.
pub fn algebraic_interp_sets(
    a: &SparseMatrix,
    part: &Partition,
    tvs: &TestVectorSet,
    caliber: usize,
) -> Result<Vec<Vec<usize>>> {
    if caliber < 1 {
        return Err(Error::InvalidArgument("caliber must be >= 1".into()));
    }
    let n = a.n_rows();
    let point_major = tvs.point_major();
    let k = tvs.len();
    let mut sets = vec![Vec::new(); n];
    let mut seen = vec![usize::MAX; n];
    for i in 0..n {
        if part.is_coarse(i) {
            continue;
        }
        let mut cands: Vec<usize> = Vec::new();
        seen[i] = i;
        let (cols, _) = a.row(i);
        for &j in cols {
            if seen[j] != i {
                seen[j] = i;
                if part.is_coarse(j) {
                    cands.push(j);
                }
            }
        }
        for &j in cols {
            let (cols2, _) = a.row(j);
            for &j2 in cols2 {
                if seen[j2] != i {
                    seen[j2] = i;
                    if part.is_coarse(j2) {
                        cands.push(j2);
                    }
                }
            }
        }
        if cands.is_empty() {
            return Err(Error::IsolatedPoint(i));
        }
        let ti = &point_major[i * k..(i + 1) * k];
        let mut scored: Vec<(f64, usize)> = cands
            .into_iter()
            .map(|j| {
                let tj = &point_major[j * k..(j + 1) * k];
                let mu = mu_from_traces(ti, tj).unwrap_or(1.0);
                (mu, j)
            })
            .collect();
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        scored.truncate(caliber);
        let mut set: Vec<usize> = scored.into_iter().map(|(_, j)| j).collect();
        set.sort_unstable();
        sets[i] = set;
    }
    Ok(sets)
}

/// Algebraic distance between two point traces:
/// mu = 1 - <ti,tj>^2 / (||ti||^2 ||tj||^2), clamped into [0, 1].
pub fn mu_from_traces(ti: &[f64], tj: &[f64]) -> Result<f64> {
    let ni = dot(ti, ti);
    let nj = dot(tj, tj);
    if ni == 0.0 {
        return Err(Error::UndefinedDistance(0));
    }
    if nj == 0.0 {
        return Err(Error::UndefinedDistance(1));
    }
    let ip = dot(ti, tj);
    let mu = 1.0 - (ip * ip) / (ni * nj);
    Ok(mu.clamp(0.0, 1.0))
}

/// Tikhonov scaling used when the local Gram matrix is singular to working
/// precision.
const LS_SHIFT_GAMMA: f64 = 1e-12;

/// Minimize the weighted local least-squares functional
/// sum_k w_k (v_i - sum_j p_j v_j)^2 over the row coefficients.
///
/// Returns the coefficients, the functional value at the minimizer, and a
/// degeneracy flag set when every test vector vanishes on C_i and {i}.
pub fn ls_row(
    i: usize,
    c_i: &[usize],
    tvs: &TestVectorSet,
) -> Result<(Vector, f64, bool)> {
    let m = c_i.len();
    if m == 0 {
        return Err(Error::IsolatedPoint(i));
    }
    let k = tvs.len();
    let mut gram = vec![0.0f64; m * m];
    let mut rhs = vec![0.0f64; m];
    let mut all_zero = true;
    for tv in tvs.vectors() {
        let w = tv.weight;
        let vi = tv.values[i];
        if vi != 0.0 {
            all_zero = false;
        }
        for (a, &ja) in c_i.iter().enumerate() {
            let va = tv.values[ja];
            if va != 0.0 {
                all_zero = false;
            }
            rhs[a] += w * vi * va;
            for (b, &jb) in c_i.iter().enumerate() {
                gram[a * m + b] += w * va * tv.values[jb];
            }
        }
    }
    if all_zero {
        return Ok((vec![0.0; m], 0.0, true));
    }
    let coeffs = match solve_small_spd(&gram, &rhs, m) {
        Some(p) => p,
        None => {
            let trace: f64 = (0..m).map(|a| gram[a * m + a]).sum();
            let shift = LS_SHIFT_GAMMA * (trace / m as f64).max(f64::MIN_POSITIVE);
            let mut shifted = gram.clone();
            for a in 0..m {
                shifted[a * m + a] += shift;
            }
            solve_small_spd(&shifted, &rhs, m).ok_or_else(|| {
                Error::InvalidArgument(format!("LS normal equations singular at row {i}"))
            })?
        }
    };
    // evaluate the functional directly at the minimizer
    let mut fitness = 0.0;
    for tv in tvs.vectors() {
        let mut e = tv.values[i];
        for (a, &ja) in c_i.iter().enumerate() {
            e -= coeffs[a] * tv.values[ja];
        }
        fitness += tv.weight * e * e;
    }
    let _ = k;
    Ok((coeffs, fitness, false))
}

/// Cholesky solve of a tiny SPD system; None when a pivot fails.
fn solve_small_spd(g: &[f64], rhs: &[f64], m: usize) -> Option<Vector> {
    let mut l = g.to_vec();
    for j in 0..m {
        let mut d = l[j * m + j];
        for t in 0..j {
            d -= l[j * m + t] * l[j * m + t];
        }
        if d <= 0.0 {
            return None;
        }
        let dj = d.sqrt();
        l[j * m + j] = dj;
        for i2 in (j + 1)..m {
            let mut s = l[i2 * m + j];
            for t in 0..j {
                s -= l[i2 * m + t] * l[j * m + t];
            }
            l[i2 * m + j] = s / dj;
        }
    }
    let mut x = rhs.to_vec();
    for i2 in 0..m {
        let mut s = x[i2];
        for t in 0..i2 {
            s -= l[i2 * m + t] * x[t];
        }
        x[i2] = s / l[i2 * m + i2];
    }
    for i2 in (0..m).rev() {
        let mut s = x[i2];
        for t in (i2 + 1)..m {
            s -= l[t * m + i2] * x[t];
        }
        x[i2] = s / l[i2 * m + i2];
    }
    Some(x)
}

/// Residual-based test-vector update: one Jacobi correction applied to the
/// fraction of entries with the largest homogeneous residual |.(Av)_i|.
/// Returns a temporary copy; the originals stay untouched for the next
/// bootstrap stage.
pub fn lsr_update(tvs: &TestVectorSet, a: &SparseMatrix, fraction: f64) -> Result<TestVectorSet> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "LSR fraction {fraction} outside (0, 1]"
        )));
    }
    let diag = a.diagonal();
    for (i, &d) in diag.iter().enumerate() {
        if d == 0.0 {
            return Err(Error::ZeroDiagonal(i));
        }
    }
    let n = tvs.dim();
    let count = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut out = tvs.clone();
    for tv in out.vectors_mut() {
        let r = a.mul_vec(&tv.values)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&p, &q| {
            r[q].abs()
                .partial_cmp(&r[p].abs())
                .unwrap()
                .then(p.cmp(&q))
        });
        for &i in order.iter().take(count) {
            tv.values[i] -= r[i] / diag[i];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpMode {
    Ls,
    Lsr,
}

/// Fraction of entries touched by the LSR update.
pub const LSR_FRACTION: f64 = 0.20;

/// Build the interpolation operator: identity rows at C-points, weighted LS
/// rows over `sets` elsewhere. In LSR mode the fit runs on residual-updated
/// copies of the test vectors.
pub fn build_interpolation(
    a: &SparseMatrix,
    part: &Partition,
    tvs: &TestVectorSet,
    mode: InterpMode,
    sets: &[Vec<usize>],
) -> Result<InterpolationOperator> {
    let n = a.n_rows();
    if part.len() != n || tvs.dim() != n || sets.len() != n {
        return Err(Error::DimensionMismatch {
            op: "build_interpolation",
            detail: "partition, test vectors, and sets must match the matrix dimension".into(),
        });
    }
    let fit_tvs = match mode {
        InterpMode::Ls => None,
        InterpMode::Lsr => Some(lsr_update(tvs, a, LSR_FRACTION)?),
    };
    let fit_set = fit_tvs.as_ref().unwrap_or(tvs);
    let rank = part.coarse_rank();
    let n_c = part.n_coarse();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut fitness = vec![0.0f64; n];
    let mut stored_sets = vec![Vec::new(); n];
    let mut degenerate_rows = Vec::new();
    let mut caliber = 0usize;
    for i in 0..n {
        if let Some(c) = rank[i] {
            triplets.push((i, c, 1.0));
            continue;
        }
        let set = &sets[i];
        let (coeffs, fit, degenerate) = ls_row(i, set, fit_set)?;
        caliber = caliber.max(set.len());
        for (a_idx, &j) in set.iter().enumerate() {
            let c = rank[j].ok_or_else(|| {
                Error::InvalidArgument(format!("interpolatory point {j} is not coarse"))
            })?;
            if coeffs[a_idx] != 0.0 {
                triplets.push((i, c, coeffs[a_idx]));
            }
        }
        fitness[i] = fit;
        stored_sets[i] = set.clone();
        if degenerate {
            degenerate_rows.push(i);
        }
    }
    let p = SparseMatrix::from_triplets(n, n_c, &triplets, false)?;
    // flag rows with fitness above 10x the median positive fitness
    let mut positives: Vec<f64> = fitness
        .iter()
        .copied()
        .filter(|&f| f > 0.0)
        .collect();
    positives.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let flagged_rows = if positives.is_empty() {
        Vec::new()
    } else {
        let median = positives[positives.len() / 2];
        (0..n).filter(|&i| fitness[i] > 10.0 * median).collect()
    };
    Ok(InterpolationOperator {
        p,
        sets: stored_sets,
        fitness,
        caliber,
        flagged_rows,
        degenerate_rows,
    })
}
