//! Multilevel hierarchy assembly and the V/W solve cycles.
//!
//! Levels are built variationally: A_{l+1} = P^T A_l P with restriction
//! fixed to P^T. Each level carries the composite interpolation back to the
//! finest grid and its Gram operator T_l = P_l^T P_l, which define the
//! generalized eigenproblem metric used by the bootstrap setup.

use crate::coarsening::{cr_coarsen, strength_graph, CrConfig};
use crate::dense::DirectSolver;
use crate::error::{Error, Result};
use crate::interp::{
    algebraic_interp_sets, build_interpolation, compute_weights, full_coarsening_partition,
    geometric_interp_sets, InterpMode, InterpolationOperator, TestVectorSet, WeightMode,
};
use crate::partition::Partition;
use crate::problems::GridMeta;
use crate::smoothing::{smooth_in_place, SmootherSpec};
use crate::sparse::{galerkin, norm2, residual, SparseMatrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One level of the hierarchy.
#[derive(Debug, Clone)]
pub struct Level {
    pub a: SparseMatrix,
    /// Interpolation to this level's coarser neighbor (absent on the coarsest).
    pub p_down: Option<InterpolationOperator>,
    /// C/F split that produced `p_down`.
    pub part: Option<Partition>,
    /// Structured-grid metadata when the level still lives on a grid.
    pub meta: Option<GridMeta>,
    /// Composite interpolation P_l mapping this level to the finest one.
    pub composite_p: SparseMatrix,
    /// Gram operator T_l = P_l^T P_l.
    pub gram_t: SparseMatrix,
}

impl Level {
    pub fn dim(&self) -> usize {
        self.a.n_rows()
    }
}

/// Solve-cycle shape: sweep counts, V or W recursion, smoother kind.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CycleSpec {
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    /// 1 for V-cycles, 2 for W-cycles.
    pub cycle_index: usize,
    pub smoother: SmootherSpec,
}

impl CycleSpec {
    pub fn v(pre: usize, post: usize) -> Self {
        CycleSpec {
            pre_sweeps: pre,
            post_sweeps: post,
            cycle_index: 1,
            smoother: SmootherSpec::gauss_seidel(1),
        }
    }

    pub fn w(pre: usize, post: usize) -> Self {
        CycleSpec {
            cycle_index: 2,
            ..CycleSpec::v(pre, post)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pre_sweeps + self.post_sweeps == 0 {
            return Err(Error::Config("cycle needs at least one sweep".into()));
        }
        if !(1..=2).contains(&self.cycle_index) {
            return Err(Error::Config("cycle_index must be 1 (V) or 2 (W)".into()));
        }
        Ok(())
    }
}

/// Multigrid hierarchy with a factored coarsest level.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    levels: Vec<Level>,
    coarsest_solver: Option<DirectSolver>,
}

impl Hierarchy {
    /// Single-level hierarchy over the fine operator.
    pub fn single_level(a: SparseMatrix, meta: Option<GridMeta>) -> Self {
        let n = a.n_rows();
        Hierarchy {
            levels: vec![Level {
                a,
                p_down: None,
                part: None,
                meta,
                composite_p: SparseMatrix::identity(n),
                gram_t: SparseMatrix::identity(n),
            }],
            coarsest_solver: None,
        }
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, l: usize) -> &Level {
        &self.levels[l]
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn coarsest(&self) -> &Level {
        self.levels.last().unwrap()
    }

    /// Drop levels below `n_levels` (used when setup rebuilds a subtree).
    pub fn truncate(&mut self, n_levels: usize) {
        assert!(n_levels >= 1);
        if n_levels < self.levels.len() {
            self.levels.truncate(n_levels);
            let last = self.levels.last_mut().unwrap();
            last.p_down = None;
            last.part = None;
            self.coarsest_solver = None;
        }
    }

    /// Append a coarser level through interpolation `p` built on partition
    /// `part` of the current coarsest level.
    pub fn push_level(&mut self, p: InterpolationOperator, part: Partition) -> Result<()> {
        let current = self.levels.last().unwrap();
        let n = current.dim();
        if part.len() != n || p.p.n_rows() != n {
            return Err(Error::DimensionMismatch {
                op: "push_level",
                detail: "interpolation does not match the coarsest level".into(),
            });
        }
        let n_c = p.p.n_cols();
        if n_c == 0 || n_c >= n {
            return Err(Error::Stagnation(format!(
                "coarse size {n_c} of fine size {n} makes no progress"
            )));
        }
        let a_next = galerkin(&current.a, &p.p)?;
        let composite_next = current.composite_p.matmul(&p.p)?;
        let mut gram_next = composite_next.transpose().matmul(&composite_next)?;
        gram_next.set_symmetric_hint(true);
        let meta_next = current
            .meta
            .as_ref()
            .and_then(|m| coarse_meta_for(m, &part));
        let idx = self.levels.len() - 1;
        self.levels[idx].p_down = Some(p);
        self.levels[idx].part = Some(part);
        self.levels.push(Level {
            a: a_next,
            p_down: None,
            part: None,
            meta: meta_next,
            composite_p: composite_next,
            gram_t: gram_next,
        });
        self.coarsest_solver = None;
        Ok(())
    }

    /// Factor the coarsest operator for direct solves.
    pub fn finalize(&mut self) -> Result<()> {
        let a = &self.levels.last().unwrap().a;
        self.coarsest_solver = Some(DirectSolver::factor(a)?);
        Ok(())
    }

    pub fn is_finalized(&self) -> bool {
        self.coarsest_solver.is_some()
    }

    pub fn solve_coarsest(&self, b: &[f64]) -> Result<Vector> {
        match &self.coarsest_solver {
            Some(s) => Ok(s.solve(b)),
            None => Err(Error::Config("hierarchy is not finalized".into())),
        }
    }

    /// Sum of operator sizes relative to the finest one.
    pub fn operator_complexity(&self) -> f64 {
        let base = self.levels[0].a.nnz().max(1) as f64;
        self.levels.iter().map(|l| l.a.nnz() as f64).sum::<f64>() / base
    }

    /// One multigrid cycle on level `l` for A_l x = b, in place.
    pub fn cycle_in_place(
        &self,
        spec: &CycleSpec,
        l: usize,
        x: &mut Vector,
        b: &[f64],
    ) -> Result<()> {
        let level = &self.levels[l];
        if l + 1 == self.levels.len() {
            let direct = self.solve_coarsest(b)?;
            x.copy_from_slice(&direct);
            return Ok(());
        }
        if spec.pre_sweeps > 0 {
            let s = SmootherSpec {
                sweeps: spec.pre_sweeps,
                ..spec.smoother
            };
            smooth_in_place(&s, &level.a, x, b)?;
        }
        let r = residual(&level.a, x, b)?;
        let p = &level.p_down.as_ref().unwrap().p;
        let rc = p.mul_transpose_vec(&r)?;
        let mut ec = vec![0.0; rc.len()];
        for _ in 0..spec.cycle_index {
            self.cycle_in_place(spec, l + 1, &mut ec, &rc)?;
        }
        let correction = p.mul_vec(&ec)?;
        for (xi, ci) in x.iter_mut().zip(&correction) {
            *xi += ci;
        }
        if spec.post_sweeps > 0 {
            let s = SmootherSpec {
                sweeps: spec.post_sweeps,
                ..spec.smoother
            };
            smooth_in_place(&s, &level.a, x, b)?;
        }
        Ok(())
    }

    /// Pure-function form of [`Hierarchy::cycle_in_place`].
    pub fn cycle(&self, spec: &CycleSpec, l: usize, x: &[f64], b: &[f64]) -> Result<Vector> {
        let mut out = x.to_vec();
        self.cycle_in_place(spec, l, &mut out, b)?;
        Ok(out)
    }

    pub fn summary(&self) -> HierarchySummary {
        HierarchySummary {
            levels: self
                .levels
                .iter()
                .map(|l| LevelSummary {
                    dim: l.dim(),
                    nnz: l.a.nnz(),
                    h: l.meta.as_ref().map(|m| m.h),
                })
                .collect(),
            operator_complexity: self.operator_complexity(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSummary {
    pub dim: usize,
    pub nnz: usize,
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchySummary {
    pub levels: Vec<LevelSummary>,
    pub operator_complexity: f64,
}

/// Coarse-grid metadata when the partition is exactly standard full
/// coarsening of the given grid.
fn coarse_meta_for(meta: &GridMeta, part: &Partition) -> Option<GridMeta> {
    if meta.nx < 2 || meta.ny < 2 {
        return None;
    }
    let full = full_coarsening_partition(meta);
    if &full != part {
        return None;
    }
    let nx_c = meta.nx / 2;
    let ny_c = meta.ny / 2;
    let region_of = if meta.region_of.is_empty() {
        Vec::new()
    } else {
        let mut labels = Vec::with_capacity(nx_c * ny_c);
        for j in 1..=ny_c {
            for i in 1..=nx_c {
                labels.push(meta.region(meta.index(2 * i, 2 * j)));
            }
        }
        labels
    };
    Some(GridMeta {
        nx: nx_c,
        ny: ny_c,
        h: 1.0 / (nx_c as f64 + 1.0),
        region_of,
    })
}

/// How each level picks its coarse variables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CoarseningMode {
    /// Even-even points of the structured grid (needs grid metadata).
    GeometricFull,
    /// Compatible-relaxation coarsening over an algebraic-distance graph.
    Cr {
        cr: CrConfig,
        strength_threshold: f64,
        /// Treat every pattern edge as strong (pre-bootstrap stage).
        fallback_all_strong: bool,
        smoother: SmootherSpec,
    },
}

/// When to stop coarsening.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StopRule {
    pub max_levels: usize,
    /// Stop once a level's dimension is at or below this.
    pub min_dim: usize,
    /// Stop once a structured level's spacing reaches this (1/16 by default).
    pub max_h: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_levels: 50,
            min_dim: 225,
            max_h: 1.0 / 16.0 - 1e-12,
        }
    }
}

impl StopRule {
    pub fn two_level() -> Self {
        StopRule {
            max_levels: 2,
            min_dim: 1,
            max_h: 1.0,
        }
    }

    pub fn stops_at(&self, level_count: usize, dim: usize, h: Option<f64>) -> bool {
        if level_count >= self.max_levels || dim <= self.min_dim {
            return true;
        }
        if let Some(h) = h {
            if h >= self.max_h {
                return true;
            }
        }
        false
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildConfig {
    pub coarsening: CoarseningMode,
    pub interp_mode: InterpMode,
    pub weight_mode: WeightMode,
    /// Interpolation caliber for algebraic sets; geometric sets are <= 4 by
    /// construction.
    pub caliber: usize,
    pub stop: StopRule,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            coarsening: CoarseningMode::GeometricFull,
            interp_mode: InterpMode::Ls,
            weight_mode: WeightMode::ANorm,
            caliber: 4,
            stop: StopRule::default(),
        }
    }
}

/// Choose the partition and interpolatory sets for the current level.
pub fn choose_partition_and_sets(
    a: &SparseMatrix,
    meta: Option<&GridMeta>,
    tvs: &TestVectorSet,
    cfg: &BuildConfig,
) -> Result<(Partition, Vec<Vec<usize>>)> {
    match &cfg.coarsening {
        CoarseningMode::GeometricFull => {
            let meta = meta.ok_or_else(|| {
                Error::Config("geometric coarsening requires grid metadata".into())
            })?;
            let part = full_coarsening_partition(meta);
            let sets = geometric_interp_sets(meta, &part)?;
            Ok((part, sets))
        }
        CoarseningMode::Cr {
            cr,
            strength_threshold,
            fallback_all_strong,
            smoother,
        } => {
            let graph = strength_graph(tvs, a, *strength_threshold, *fallback_all_strong)?;
            let (part, _) = cr_coarsen(a, &Partition::all_fine(a.n_rows()), smoother, cr, &graph)?;
            if part.n_coarse() == 0 {
                return Err(Error::Stagnation(
                    "CR coarsening selected no coarse points".into(),
                ));
            }
            let sets = algebraic_interp_sets(a, &part, tvs, cfg.caliber)?;
            Ok((part, sets))
        }
    }
}

/// Restriction of test vectors to the coarse level by injection at C-points.
pub fn restrict_tvs(tvs: &TestVectorSet, part: &Partition) -> Result<TestVectorSet> {
    let coarse = part.coarse_indices();
    let vectors = tvs
        .vectors()
        .iter()
        .map(|tv| {
            let mut out = tv.clone();
            out.values = coarse.iter().map(|&i| tv.values[i]).collect();
            out
        })
        .collect();
    TestVectorSet::new(vectors)
}

/// Build a hierarchy with a fixed set of test vectors, restricting them by
/// injection as the levels coarsen.
pub fn build_hierarchy(
    a: &SparseMatrix,
    meta: Option<&GridMeta>,
    tvs: &TestVectorSet,
    cfg: &BuildConfig,
) -> Result<Hierarchy> {
    if !a.symmetric_hint() {
        return Err(Error::Config(
            "hierarchy construction expects an SPD matrix (symmetry hint unset)".into(),
        ));
    }
    let mut hier = Hierarchy::single_level(a.clone(), meta.cloned());
    let mut level_tvs = tvs.clone();
    loop {
        let current = hier.coarsest();
        let h = current.meta.as_ref().map(|m| m.h);
        if cfg.stop.stops_at(hier.n_levels(), current.dim(), h) {
            break;
        }
        let (part, sets) =
            choose_partition_and_sets(&current.a, current.meta.as_ref(), &level_tvs, cfg)?;
        if part.n_coarse() == part.len() {
            return Err(Error::Stagnation(
                "coarsening kept every variable coarse".into(),
            ));
        }
        compute_weights(&mut level_tvs, &current.a, cfg.weight_mode)?;
        let p = build_interpolation(&current.a, &part, &level_tvs, cfg.interp_mode, &sets)?;
        level_tvs = restrict_tvs(&level_tvs, &part)?;
        hier.push_level(p, part)?;
    }
    hier.finalize()?;
    Ok(hier)
}

/// Per-seed outcome of the asymptotic-rate estimator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRate {
    pub seed: u64,
    pub rho: f64,
    pub iterations: usize,
    pub diverged: bool,
}

/// Asymptotic convergence-rate estimate across seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateEstimate {
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub per_seed: Vec<SeedRate>,
}

impl RateEstimate {
    pub fn diverged(&self) -> bool {
        self.per_seed.iter().any(|s| s.diverged)
    }
}

/// Measure the asymptotic rate of an arbitrary linear iteration on the
/// homogeneous system: rho is the geometric mean of the last ten error-norm
/// ratios, the median is taken over seeds, and five consecutive growing
/// ratios report divergence.
pub fn estimate_rate_of<F>(
    n: usize,
    mut step: F,
    seeds: &[u64],
    max_iters: usize,
) -> Result<RateEstimate>
where
    F: FnMut(&mut Vector) -> Result<()>,
{
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("need at least one seed".into()));
    }
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x: Vector = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm0 = norm2(&x).max(f64::MIN_POSITIVE);
        let mut prev = norm0;
        let mut ratios: Vec<f64> = Vec::with_capacity(max_iters);
        let mut growing = 0usize;
        let mut diverged = false;
        let mut iterations = 0usize;
        for _ in 0..max_iters {
            step(&mut x)?;
            iterations += 1;
            let nrm = norm2(&x);
            if prev == 0.0 {
                ratios.push(0.0);
                break;
            }
            let ratio = nrm / prev;
            ratios.push(ratio);
            if ratio > 1.0 {
                growing += 1;
                if growing >= 5 {
                    diverged = true;
                    break;
                }
            } else {
                growing = 0;
            }
            if nrm < 1e-50 * norm0 || nrm == 0.0 {
                break;
            }
            prev = nrm;
        }
        let tail = &ratios[ratios.len().saturating_sub(10)..];
        let rho = if tail.iter().any(|&r| r == 0.0) {
            0.0
        } else {
            let log_sum: f64 = tail.iter().map(|r| r.ln()).sum();
            (log_sum / tail.len() as f64).exp()
        };
        per_seed.push(SeedRate {
            seed,
            rho,
            iterations,
            diverged,
        });
    }
    let mut rhos: Vec<f64> = per_seed.iter().map(|s| s.rho).collect();
    rhos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(RateEstimate {
        median: rhos[rhos.len() / 2],
        min: rhos[0],
        max: *rhos.last().unwrap(),
        per_seed,
    })
}

/// Asymptotic rate of the hierarchy's cycle on A x = 0.
pub fn estimate_asymptotic_rate(
    hier: &Hierarchy,
    spec: &CycleSpec,
    seeds: &[u64],
    max_iters: usize,
) -> Result<RateEstimate> {
    spec.validate()?;
    let n = hier.level(0).dim();
    let b = vec![0.0; n];
    estimate_rate_of(
        n,
        |x| hier.cycle_in_place(spec, 0, x, &b),
        seeds,
        max_iters,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::TestVector;
    use crate::problems::fd_poisson;
    use crate::smoothing::smooth;
    use crate::sparse::dot;

    fn relaxed_tvs(a: &SparseMatrix, k: usize, eta: usize, seed: u64) -> TestVectorSet {
        let n = a.n_rows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = vec![0.0; n];
        let vectors = (0..k)
            .map(|_| {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                TestVector::relaxed(
                    smooth(&SmootherSpec::gauss_seidel(eta), a, &x, &b).unwrap(),
                )
            })
            .collect();
        TestVectorSet::new(vectors).unwrap()
    }

    #[test]
    fn single_level_identities() {
        let (a, meta) = fd_poisson(3).unwrap();
        let hier = Hierarchy::single_level(a.clone(), Some(meta));
        assert_eq!(hier.n_levels(), 1);
        assert_eq!(
            hier.level(0).composite_p.to_dense(),
            SparseMatrix::identity(9).to_dense()
        );
        assert_eq!(
            hier.level(0).gram_t.to_dense(),
            SparseMatrix::identity(9).to_dense()
        );
    }

    #[test]
    fn geometric_levels_march_to_coarse() {
        let (a, meta) = fd_poisson(63).unwrap();
        let tvs = relaxed_tvs(&a, 8, 4, 5);
        let cfg = BuildConfig::default();
        let hier = build_hierarchy(&a, Some(&meta), &tvs, &cfg).unwrap();
        let dims: Vec<usize> = hier.levels().iter().map(|l| l.dim()).collect();
        assert_eq!(dims, vec![63 * 63, 31 * 31, 15 * 15]);
        let hs: Vec<f64> = hier
            .levels()
            .iter()
            .map(|l| l.meta.as_ref().unwrap().h)
            .collect();
        assert!((hs[0] - 1.0 / 64.0).abs() < 1e-15);
        assert!((hs[1] - 1.0 / 32.0).abs() < 1e-15);
        assert!((hs[2] - 1.0 / 16.0).abs() < 1e-15);
        // coarse operators stay SPD: the factorization succeeded, and the
        // composite product matches the explicit chain
        let p0 = &hier.level(0).p_down.as_ref().unwrap().p;
        let p1 = &hier.level(1).p_down.as_ref().unwrap().p;
        let explicit = p0.matmul(p1).unwrap();
        let composite = &hier.level(2).composite_p;
        for i in 0..explicit.n_rows() {
            let (cols, vals) = explicit.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                assert!((composite.get(i, j) - v).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn gram_identity_random_vectors() {
        let (a, meta) = fd_poisson(31).unwrap();
        let tvs = relaxed_tvs(&a, 6, 3, 8);
        let hier = build_hierarchy(&a, Some(&meta), &tvs, &BuildConfig::default()).unwrap();
        let l = hier.n_levels() - 1;
        let level = hier.level(l);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x: Vec<f64> = (0..level.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let tx = level.gram_t.mul_vec(&x).unwrap();
            let px = level.composite_p.mul_vec(&x).unwrap();
            let lhs = dot(&tx, &x);
            let rhs = dot(&px, &px);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }
    }

    #[test]
    fn fixed_point_and_exactness() {
        let (a, meta) = fd_poisson(15).unwrap();
        let tvs = relaxed_tvs(&a, 6, 4, 2);
        let cfg = BuildConfig {
            stop: StopRule::two_level(),
            ..BuildConfig::default()
        };
        let hier = build_hierarchy(&a, Some(&meta), &tvs, &cfg).unwrap();
        // exact solution is a fixed point
        let n = a.n_rows();
        let x_true: Vec<f64> = (0..n).map(|i| ((i % 7) as f64) - 3.0).collect();
        let b = a.mul_vec(&x_true).unwrap();
        let spec = CycleSpec::v(2, 2);
        let out = hier.cycle(&spec, 0, &x_true, &b).unwrap();
        for i in 0..n {
            assert!((out[i] - x_true[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn variational_exactness_on_range_p() {
        let (a, meta) = fd_poisson(15).unwrap();
        let tvs = relaxed_tvs(&a, 6, 4, 2);
        let cfg = BuildConfig {
            stop: StopRule::two_level(),
            ..BuildConfig::default()
        };
        let hier = build_hierarchy(&a, Some(&meta), &tvs, &cfg).unwrap();
        let p = &hier.level(0).p_down.as_ref().unwrap().p;
        let spec = CycleSpec {
            pre_sweeps: 0,
            post_sweeps: 0,
            cycle_index: 1,
            smoother: SmootherSpec::gauss_seidel(1),
        };
        // error in range(P) is annihilated by the exact coarse correction
        let w: Vec<f64> = (0..p.n_cols()).map(|i| ((i % 5) as f64) - 2.0).collect();
        let e = p.mul_vec(&w).unwrap();
        // solving A x = 0 from x0 = e leaves error e' = E e
        let b = vec![0.0; e.len()];
        let e_after = hier.cycle(&spec, 0, &e, &b).unwrap();
        assert!(norm2(&e_after) <= 1e-9 * norm2(&e));
        // generic error lands A-orthogonal to range(P)
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let e: Vec<f64> = (0..e.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let e_after = hier.cycle(&spec, 0, &e, &b).unwrap();
        let ae = a.mul_vec(&e_after).unwrap();
        let pta = p.mul_transpose_vec(&ae).unwrap();
        assert!(norm2(&pta) <= 1e-10 * norm2(&ae).max(1.0));
    }

    #[test]
    fn a_norm_monotone_v_cycle() {
        use crate::sparse::a_norm;
        let (a, meta) = fd_poisson(15).unwrap();
        let tvs = relaxed_tvs(&a, 6, 4, 21);
        let hier = build_hierarchy(&a, Some(&meta), &tvs, &BuildConfig::default()).unwrap();
        let spec = CycleSpec::v(1, 1);
        let n = a.n_rows();
        let b = vec![0.0; n];
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let before = a_norm(&a, &x).unwrap();
            let out = hier.cycle(&spec, 0, &x, &b).unwrap();
            let after = a_norm(&a, &out).unwrap();
            assert!(after <= before * (1.0 + 1e-10));
        }
    }

    #[test]
    fn rate_of_direct_solver_is_zero() {
        let (a, meta) = fd_poisson(7).unwrap();
        let hier = {
            let mut h = Hierarchy::single_level(a, Some(meta));
            h.finalize().unwrap();
            h
        };
        let spec = CycleSpec::v(1, 1);
        // single level means the cycle is the direct solve
        let est = estimate_asymptotic_rate(&hier, &spec, &[1, 2, 3], 50).unwrap();
        assert!(est.median < 1e-12);
    }

    #[test]
    fn smoother_rate_matches_power_iteration() {
        let (a, _) = fd_poisson(15).unwrap();
        let n = a.n_rows();
        let b = vec![0.0; n];
        let spec = SmootherSpec::gauss_seidel(1);
        let est = estimate_rate_of(
            n,
            |x| smooth_in_place(&spec, &a, x, &b),
            &[11, 22, 33],
            2000,
        )
        .unwrap();
        // dense power iteration on I - M A
        let mut x: Vec<f64> = (0..n).map(|i| ((i * 31 % 17) as f64) - 8.0).collect();
        let mut rho_power = 0.0;
        for _ in 0..2000 {
            let prev = norm2(&x);
            smooth_in_place(&spec, &a, &mut x, &b).unwrap();
            rho_power = norm2(&x) / prev;
            let inv = 1.0 / norm2(&x);
            x.iter_mut().for_each(|v| *v *= inv);
        }
        assert!(
            (est.median - rho_power).abs() < 0.02,
            "measured {} vs power {}",
            est.median,
            rho_power
        );
    }

    #[test]
    fn two_grid_rate_matches_dense_operator() {
        // small version of the dense error-propagation oracle
        let (a, meta) = fd_poisson(15).unwrap();
        let n = a.n_rows();
        let tvs = relaxed_tvs(&a, 6, 4, 9);
        let cfg = BuildConfig {
            stop: StopRule::two_level(),
            ..BuildConfig::default()
        };
        let hier = build_hierarchy(&a, Some(&meta), &tvs, &cfg).unwrap();
        let spec = CycleSpec::v(2, 2);
        let est = estimate_asymptotic_rate(&hier, &spec, &[1, 2, 3, 4, 5], 400).unwrap();
        // assemble E column by column and run power iteration
        let b = vec![0.0; n];
        let mut columns = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            columns.push(hier.cycle(&spec, 0, &e, &b).unwrap());
        }
        let mut x = vec![1.0; n];
        let mut rho = 0.0;
        for _ in 0..1000 {
            let prev = norm2(&x);
            let mut next = vec![0.0; n];
            for (j, col) in columns.iter().enumerate() {
                let xj = x[j];
                if xj != 0.0 {
                    for i in 0..n {
                        next[i] += col[i] * xj;
                    }
                }
            }
            x = next;
            rho = norm2(&x) / prev;
            let inv = 1.0 / norm2(&x).max(f64::MIN_POSITIVE);
            x.iter_mut().for_each(|v| *v *= inv);
        }
        assert!(
            (est.median - rho).abs() < 0.02,
            "measured {} vs dense {}",
            est.median,
            rho
        );
    }

    #[test]
    fn cr_coarsening_mode_builds() {
        let (a, meta) = fd_poisson(15).unwrap();
        let tvs = relaxed_tvs(&a, 6, 6, 4);
        let cfg = BuildConfig {
            coarsening: CoarseningMode::Cr {
                cr: CrConfig {
                    delta: 0.5,
                    ..CrConfig::default()
                },
                strength_threshold: 0.1,
                fallback_all_strong: false,
                smoother: SmootherSpec::gauss_seidel(1),
            },
            stop: StopRule::two_level(),
            ..BuildConfig::default()
        };
        let hier = build_hierarchy(&a, Some(&meta), &tvs, &cfg).unwrap();
        assert_eq!(hier.n_levels(), 2);
        assert!(hier.level(1).dim() > 0);
        assert!(hier.level(1).dim() < a.n_rows());
        let spec = CycleSpec::v(2, 2);
        let est = estimate_asymptotic_rate(&hier, &spec, &[3], 100).unwrap();
        assert!(est.median < 0.9, "rate {}", est.median);
    }
}
