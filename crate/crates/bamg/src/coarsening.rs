//! Compatible-relaxation coarsening: rate estimation on the homogeneous
//! system with frozen coarse values, candidate scores from the slow-to-
//! converge points, and independent-set growth of C over an algebraic-
//! distance strength graph.

use crate::error::{Error, Result};
use crate::interp::{mu_from_traces, TestVectorSet};
use crate::partition::Partition;
use crate::problems::GridMeta;
use crate::smoothing::{f_relax_in_place, smooth_in_place, ConstraintProjector, SmootherSpec};
use crate::sparse::{norm2, SparseMatrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Pairwise algebraic distance between the test-vector traces at two points.
pub fn algebraic_distance(v: &TestVectorSet, i: usize, j: usize) -> Result<f64> {
    let ti = v.trace(i);
    let tj = v.trace(j);
    mu_from_traces(&ti, &tj).map_err(|_| {
        if ti.iter().all(|&x| x == 0.0) {
            Error::UndefinedDistance(i)
        } else {
            Error::UndefinedDistance(j)
        }
    })
}

/// Strength-of-connectivity graph on the off-diagonal pattern of A.
#[derive(Debug, Clone)]
pub struct StrengthGraph {
    /// mu values stored on the (symmetrized) off-diagonal pattern.
    mu: SparseMatrix,
    threshold: f64,
    /// When set, every stored edge counts as strong regardless of mu.
    all_strong: bool,
}

impl StrengthGraph {
    pub fn n(&self) -> usize {
        self.mu.n_rows()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn mu(&self, i: usize, j: usize) -> f64 {
        self.mu.get(i, j)
    }

    pub fn is_strong(&self, i: usize, j: usize) -> bool {
        let (cols, vals) = self.mu.row(i);
        match cols.binary_search(&j) {
            Ok(k) => self.all_strong || vals[k] <= self.threshold,
            Err(_) => false,
        }
    }

    /// Strong neighbors of i in ascending index order.
    pub fn strong_neighbors(&self, i: usize) -> Vec<usize> {
        let (cols, vals) = self.mu.row(i);
        cols.iter()
            .zip(vals)
            .filter(|&(_, &mu)| self.all_strong || mu <= self.threshold)
            .map(|(&j, _)| j)
            .collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.mu.n_rows()).flat_map(move |i| {
            let (cols, vals) = self.mu.row(i);
            cols.iter().zip(vals).map(move |(&j, &mu)| (i, j, mu))
        })
    }
}

/// Build the strength graph from algebraic distances over the pattern of A.
///
/// `fallback_all_strong` implements the pre-bootstrap stage where the test
/// vectors are not yet reliable: any non-vanishing dependence is strong.
/// Undefined distances (a zero trace) are treated as not strong.
pub fn strength_graph(
    v: &TestVectorSet,
    a: &SparseMatrix,
    threshold: f64,
    fallback_all_strong: bool,
) -> Result<StrengthGraph> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!(
            "strength threshold {threshold} outside [0, 1]"
        )));
    }
    if v.dim() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            op: "strength_graph",
            detail: "test vectors do not match the matrix dimension".into(),
        });
    }
    let n = a.n_rows();
    let k = v.len();
    let pm = v.point_major();
    let mut triplets = Vec::with_capacity(a.nnz());
    for i in 0..n {
        let (cols, _) = a.row(i);
        for &j in cols {
            if j <= i {
                continue;
            }
            let ti = &pm[i * k..(i + 1) * k];
            let tj = &pm[j * k..(j + 1) * k];
            let mu = mu_from_traces(ti, tj).unwrap_or(1.0);
            triplets.push((i, j, mu));
            triplets.push((j, i, mu));
        }
    }
    let mu = SparseMatrix::from_triplets(n, n, &triplets, false)?;
    Ok(StrengthGraph {
        mu,
        threshold,
        all_strong: fallback_all_strong,
    })
}

/// How compatible relaxation keeps the coarse variables invariant.
pub enum CrMode<'a> {
    /// F-point relaxation with C values frozen at zero.
    FRelax,
    /// Full-grid sweeps followed by projection off range(X^T).
    Hcr(&'a SparseMatrix),
}

/// Outcome of one CR rate estimation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrReport {
    /// ||e_nu|| / ||e_{nu-1}||.
    pub rho_cr: f64,
    /// Error norms after each sweep, starting with the initial error.
    pub sweep_norms: Vec<f64>,
    /// Error vector after the final sweep.
    pub final_error: Vector,
    /// Max-normalized pointwise scores (zero at C-points).
    pub scores: Vector,
    /// Coarsening stage this report belongs to.
    pub stage: usize,
    /// Estimated cycle work for the current candidate hierarchy.
    pub work: f64,
    /// rho_cr^(1/work); the quantity the stage loop approximately optimizes.
    pub beta: f64,
    /// Set when C = Omega was reached with the rate still above the target.
    pub degenerate: bool,
}

/// Max-normalized candidate scores: |e_i| / max_j |e_j| on F, zero on C.
pub fn candidate_scores(final_error: &[f64], part: &Partition) -> Vector {
    let max = final_error
        .iter()
        .enumerate()
        .filter(|(i, _)| !part.is_coarse(*i))
        .fold(0.0f64, |m, (_, &e)| m.max(e.abs()));
    if max == 0.0 {
        return vec![0.0; final_error.len()];
    }
    final_error
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            if part.is_coarse(i) {
                0.0
            } else {
                e.abs() / max
            }
        })
        .collect()
}

/// Two-level work estimate: fine plus coarse operator size relative to the
/// fine one, with coarse nonzeros taken proportional to |C|/n. Reporting
/// only; the stage loop stops on rho_cr.
fn work_estimate(part: &Partition) -> f64 {
    let n = part.len().max(1);
    1.0 + part.n_coarse() as f64 / n as f64
}

/// Run `nu` CR sweeps on the homogeneous system from a seeded random start
/// (uniform on F, zero at C) and estimate the CR convergence rate.
pub fn estimate_cr_rate(
    a: &SparseMatrix,
    part: &Partition,
    spec: &SmootherSpec,
    nu: usize,
    mode: CrMode<'_>,
    seed: u64,
) -> Result<CrReport> {
    if nu < 2 {
        return Err(Error::InvalidArgument("CR needs at least 2 sweeps".into()));
    }
    let n = a.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e: Vector = (0..n)
        .map(|i| {
            let u: f64 = rng.gen_range(-1.0..1.0);
            if part.is_coarse(i) {
                0.0
            } else {
                u
            }
        })
        .collect();
    let sweep_spec = SmootherSpec {
        sweeps: 1,
        ..*spec
    };
    let projector = match &mode {
        CrMode::Hcr(x) => Some(ConstraintProjector::new(x)?),
        CrMode::FRelax => None,
    };
    if let Some(p) = &projector {
        e = p.project_out(&e)?;
    }
    let mut sweep_norms = vec![norm2(&e)];
    let zeros = vec![0.0; n];
    for _ in 0..nu {
        match &mode {
            CrMode::FRelax => f_relax_in_place(&sweep_spec, a, part, &mut e)?,
            CrMode::Hcr(_) => {
                smooth_in_place(&sweep_spec, a, &mut e, &zeros)?;
                e = projector.as_ref().unwrap().project_out(&e)?;
            }
        }
        sweep_norms.push(norm2(&e));
    }
    let prev = sweep_norms[nu - 1];
    let rho_cr = if prev == 0.0 {
        0.0
    } else {
        sweep_norms[nu] / prev
    };
    let scores = candidate_scores(&e, part);
    let work = work_estimate(part);
    Ok(CrReport {
        rho_cr,
        sweep_norms,
        final_error: e,
        scores,
        stage: 0,
        work,
        beta: rho_cr.powf(1.0 / work),
        degenerate: false,
    })
}

/// Add to C a maximal independent set of the high-score candidates, greedily
/// by descending score with ascending index as the tie-break. Independence
/// is with respect to strong edges among the points added this stage.
pub fn update_coarse_set(
    part: &Partition,
    scores: &[f64],
    graph: &StrengthGraph,
    score_threshold: f64,
) -> Partition {
    let mut order: Vec<usize> = (0..part.len())
        .filter(|&i| !part.is_coarse(i) && scores[i] >= score_threshold)
        .collect();
    order.sort_by(|&p, &q| {
        scores[q]
            .partial_cmp(&scores[p])
            .unwrap()
            .then(p.cmp(&q))
    });
    let mut out = part.clone();
    let mut added = vec![false; part.len()];
    for &i in &order {
        let blocked = graph
            .strong_neighbors(i)
            .iter()
            .any(|&j| added[j]);
        if !blocked {
            added[i] = true;
            out.set_coarse(i);
        }
    }
    out
}

/// Configuration of the stage loop.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CrConfig {
    /// CR sweeps per rate estimate.
    pub nu: usize,
    /// Target CR rate; stages run while the estimate exceeds it.
    pub delta: f64,
    /// Candidate cut on the max-normalized scores.
    pub score_threshold: f64,
    pub max_stages: usize,
    pub seed: u64,
}

impl Default for CrConfig {
    fn default() -> Self {
        CrConfig {
            nu: 5,
            delta: 0.7,
            score_threshold: 0.5,
            max_stages: 10,
            seed: 1,
        }
    }
}

/// The full coarsening loop: estimate, and while the rate is above delta,
/// grow C by an independent candidate set and re-estimate.
pub fn cr_coarsen(
    a: &SparseMatrix,
    c0: &Partition,
    spec: &SmootherSpec,
    cfg: &CrConfig,
    graph: &StrengthGraph,
) -> Result<(Partition, Vec<CrReport>)> {
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta {} outside (0, 1)",
            cfg.delta
        )));
    }
    if cfg.max_stages < 1 {
        return Err(Error::InvalidArgument("max_stages must be >= 1".into()));
    }
    let mut part = c0.clone();
    let mut reports = Vec::new();
    let mut report = estimate_cr_rate(a, &part, spec, cfg.nu, CrMode::FRelax, cfg.seed)?;
    for stage in 1..=cfg.max_stages {
        if report.rho_cr <= cfg.delta {
            break;
        }
        let next = update_coarse_set(&part, &report.scores, graph, cfg.score_threshold);
        if next.n_coarse() == part.n_coarse() {
            // no candidates cleared the threshold; the rate cannot improve
            report.degenerate = true;
            break;
        }
        reports.push(report);
        part = next;
        report = estimate_cr_rate(
            a,
            &part,
            spec,
            cfg.nu,
            CrMode::FRelax,
            cfg.seed.wrapping_add(stage as u64),
        )?;
        report.stage = stage;
        if part.n_fine() == 0 && report.rho_cr > cfg.delta {
            report.degenerate = true;
            break;
        }
    }
    reports.push(report);
    Ok((part, reports))
}

/// Per-region coarsening statistics on a structured grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionStats {
    pub region: u8,
    pub points: usize,
    pub coarse: usize,
    pub fraction: f64,
    /// Coarse pairs adjacent along x within the region.
    pub x_adjacent_coarse_pairs: usize,
    /// Coarse pairs adjacent along y within the region.
    pub y_adjacent_coarse_pairs: usize,
}

pub fn region_stats(meta: &GridMeta, part: &Partition) -> Vec<RegionStats> {
    let mut labels: Vec<u8> = (0..meta.n_points()).map(|i| meta.region(i)).collect();
    labels.sort_unstable();
    labels.dedup();
    labels
        .into_iter()
        .map(|label| {
            let mut points = 0;
            let mut coarse = 0;
            let mut x_pairs = 0;
            let mut y_pairs = 0;
            for j in 1..=meta.ny {
                for i in 1..=meta.nx {
                    let idx = meta.index(i, j);
                    if meta.region(idx) != label {
                        continue;
                    }
                    points += 1;
                    if !part.is_coarse(idx) {
                        continue;
                    }
                    coarse += 1;
                    if i < meta.nx {
                        let r = meta.index(i + 1, j);
                        if meta.region(r) == label && part.is_coarse(r) {
                            x_pairs += 1;
                        }
                    }
                    if j < meta.ny {
                        let u = meta.index(i, j + 1);
                        if meta.region(u) == label && part.is_coarse(u) {
                            y_pairs += 1;
                        }
                    }
                }
            }
            RegionStats {
                region: label,
                points,
                coarse,
                fraction: coarse as f64 / points.max(1) as f64,
                x_adjacent_coarse_pairs: x_pairs,
                y_adjacent_coarse_pairs: y_pairs,
            }
        })
        .collect()
}
