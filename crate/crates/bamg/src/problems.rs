//! Model diffusion discretizations on the unit square with grid metadata.
//!
//! All generators eliminate homogeneous Dirichlet boundary unknowns, so the
//! matrices act on the interior grid points only and stay SPD.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use serde::{Deserialize, Serialize};

/// Structured-grid metadata for the interior points of a uniform mesh.
#[derive(Debug, Clone)]
pub struct GridMeta {
    /// Interior points along x.
    pub nx: usize,
    /// Interior points along y.
    pub ny: usize,
    /// Mesh spacing, 1 / (nx + 1).
    pub h: f64,
    /// Region label per interior point (empty when the problem has one region).
    pub region_of: Vec<u8>,
}

impl GridMeta {
    pub fn n_points(&self) -> usize {
        self.nx * self.ny
    }

    /// Linear index of interior point (i, j), both 1-based.
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= 1 && i <= self.nx && j >= 1 && j <= self.ny);
        (j - 1) * self.nx + (i - 1)
    }

    /// Inverse of [`GridMeta::index`].
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx + 1, idx / self.nx + 1)
    }

    /// Physical coordinates of an interior point.
    pub fn xy(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.coords(idx);
        (i as f64 * self.h, j as f64 * self.h)
    }

    pub fn region(&self, idx: usize) -> u8 {
        if self.region_of.is_empty() {
            0
        } else {
            self.region_of[idx]
        }
    }
}

/// One axis-aligned subrectangle of the domain with constant coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiffusionRegionSpec {
    /// Box corners (x0, y0, x1, y1); the boxes of a problem partition [0,1]^2.
    pub rect: (f64, f64, f64, f64),
    /// Anisotropy strength in (0, 1].
    pub epsilon: f64,
    /// Anisotropy angle in radians.
    pub theta: f64,
    /// Zeroth-order (mass) coefficient, >= 0.
    pub mass: f64,
}

impl DiffusionRegionSpec {
    pub fn isotropic(rect: (f64, f64, f64, f64)) -> Self {
        DiffusionRegionSpec {
            rect,
            epsilon: 1.0,
            theta: 0.0,
            mass: 0.0,
        }
    }

    /// Diffusion tensor entries (a, b, c) for K = [a c; c b].
    pub fn tensor(&self) -> (f64, f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let a = c * c + self.epsilon * s * s;
        let b = self.epsilon * c * c + s * s;
        let cc = (1.0 - self.epsilon) * c * s;
        (a, b, cc)
    }

    /// Half-open membership (x0, x1] x (y0, y1], closed at the domain edge;
    /// points on an interior interface belong to the box they close.
    fn contains(&self, x: f64, y: f64) -> bool {
        let (x0, y0, x1, y1) = self.rect;
        let in_x = x <= x1 + 1e-12 && (x > x0 + 1e-12 || (x0 == 0.0 && x >= -1e-12));
        let in_y = y <= y1 + 1e-12 && (y > y0 + 1e-12 || (y0 == 0.0 && y >= -1e-12));
        in_x && in_y
    }
}

/// The four-quadrant anisotropic test configuration.
pub fn four_region_spec() -> Vec<DiffusionRegionSpec> {
    use std::f64::consts::FRAC_PI_2;
    vec![
        DiffusionRegionSpec {
            rect: (0.0, 0.0, 0.5, 0.5),
            epsilon: 1.0,
            theta: 0.0,
            mass: 1.0e4,
        },
        DiffusionRegionSpec {
            rect: (0.5, 0.0, 1.0, 0.5),
            epsilon: 1.0,
            theta: 0.0,
            mass: 0.0,
        },
        DiffusionRegionSpec {
            rect: (0.0, 0.5, 0.5, 1.0),
            epsilon: 0.01,
            theta: 0.0,
            mass: 0.0,
        },
        DiffusionRegionSpec {
            rect: (0.5, 0.5, 1.0, 1.0),
            epsilon: 0.01,
            theta: FRAC_PI_2,
            mass: 0.0,
        },
    ]
}

/// Two-scale permeability layout: unit-coefficient square inclusions over a
/// 10^exponent background.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct JumpSpec {
    /// Background coefficient exponent; the background is 10^exponent.
    pub exponent: i32,
    /// Tiling count: 1 centered inclusion, or tau^2 inclusions for tau in {4, 8, 16}.
    pub tiling: u32,
}

impl JumpSpec {
    /// True when (x, y) lies inside an inclusion (coefficient 1).
    pub fn in_inclusion(&self, x: f64, y: f64) -> bool {
        let tau = self.tiling as f64;
        if self.tiling == 1 {
            return x > 0.25 && x < 0.75 && y > 0.25 && y < 0.75;
        }
        // inclusions of side 1/(2 tau) centered in each macro cell
        let fx = (x * tau).fract();
        let fy = (y * tau).fract();
        fx > 0.25 && fx < 0.75 && fy > 0.25 && fy < 0.75
    }
}

/// Standard 5-point finite difference Poisson matrix on an n x n interior grid.
pub fn fd_poisson(n_per_side: usize) -> Result<(SparseMatrix, GridMeta)> {
    if n_per_side < 1 {
        return Err(Error::InvalidArgument(
            "fd_poisson requires at least one interior point".into(),
        ));
    }
    let n = n_per_side;
    let h = 1.0 / (n as f64 + 1.0);
    let h_inv2 = 1.0 / (h * h);
    let meta = GridMeta {
        nx: n,
        ny: n,
        h,
        region_of: Vec::new(),
    };
    let mut triplets = Vec::with_capacity(5 * n * n);
    for j in 1..=n {
        for i in 1..=n {
            let row = meta.index(i, j);
            triplets.push((row, row, 4.0 * h_inv2));
            if i > 1 {
                triplets.push((row, meta.index(i - 1, j), -h_inv2));
            }
            if i < n {
                triplets.push((row, meta.index(i + 1, j), -h_inv2));
            }
            if j > 1 {
                triplets.push((row, meta.index(i, j - 1), -h_inv2));
            }
            if j < n {
                triplets.push((row, meta.index(i, j + 1), -h_inv2));
            }
        }
    }
    let a = SparseMatrix::from_triplets(n * n, n * n, &triplets, true)?;
    Ok((a, meta))
}

/// 2x2 Gauss points on the reference square [-1,1]^2; exact for bilinear
/// elements with constant coefficients.
const GAUSS: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Reference bilinear shape values and gradients at (xi, eta).
/// Node order: (-1,-1), (1,-1), (1,1), (-1,1).
fn shape(xi: f64, eta: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let n = [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ];
    let g = [
        [-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)],
        [0.25 * (1.0 - eta), -0.25 * (1.0 + xi)],
        [0.25 * (1.0 + eta), 0.25 * (1.0 + xi)],
        [-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)],
    ];
    (n, g)
}

/// Element matrix for -div(K grad u) + d u on an h x h square with constant
/// K = [a c; c b] and constant d, integrated with 2x2 Gauss quadrature.
pub fn element_matrix(a: f64, b: f64, c: f64, d: f64, h: f64) -> [[f64; 4]; 4] {
    let mut ke = [[0.0f64; 4]; 4];
    // physical gradient = (2/h) * reference gradient; det J = h^2 / 4
    let det_j = h * h / 4.0;
    let grad_scale = 2.0 / h;
    for &xi in &GAUSS {
        for &eta in &GAUSS {
            let (n, g) = shape(xi, eta);
            for alpha in 0..4 {
                let gax = g[alpha][0] * grad_scale;
                let gay = g[alpha][1] * grad_scale;
                for beta in 0..4 {
                    let gbx = g[beta][0] * grad_scale;
                    let gby = g[beta][1] * grad_scale;
                    let diff = a * gax * gbx + b * gay * gby + c * (gax * gby + gay * gbx);
                    let mass = d * n[alpha] * n[beta];
                    ke[alpha][beta] += (diff + mass) * det_j;
                }
            }
        }
    }
    ke
}

fn assemble_bilinear<F>(n_per_side: usize, coeff_of_element: F) -> Result<(SparseMatrix, GridMeta)>
where
    F: Fn(f64, f64) -> (f64, f64, f64, f64),
{
    if n_per_side < 1 {
        return Err(Error::InvalidArgument(
            "finite element grid requires at least one interior point".into(),
        ));
    }
    let n = n_per_side;
    let cells = n + 1;
    let h = 1.0 / cells as f64;
    let meta = GridMeta {
        nx: n,
        ny: n,
        h,
        region_of: Vec::new(),
    };
    let mut triplets = Vec::with_capacity(9 * n * n);
    for ey in 0..cells {
        for ex in 0..cells {
            let cx = (ex as f64 + 0.5) * h;
            let cy = (ey as f64 + 0.5) * h;
            let (a, b, c, d) = coeff_of_element(cx, cy);
            let ke = element_matrix(a, b, c, d, h);
            // corner nodes in reference order; boundary nodes are eliminated
            let corners = [
                (ex, ey),
                (ex + 1, ey),
                (ex + 1, ey + 1),
                (ex, ey + 1),
            ];
            let idx: Vec<Option<usize>> = corners
                .iter()
                .map(|&(gi, gj)| {
                    if gi >= 1 && gi <= n && gj >= 1 && gj <= n {
                        Some(meta.index(gi, gj))
                    } else {
                        None
                    }
                })
                .collect();
            for alpha in 0..4 {
                let Some(row) = idx[alpha] else { continue };
                for beta in 0..4 {
                    let Some(col) = idx[beta] else { continue };
                    triplets.push((row, col, ke[alpha][beta]));
                }
            }
        }
    }
    let a = SparseMatrix::from_triplets(n * n, n * n, &triplets, true)?;
    Ok((a, meta))
}

/// Bilinear finite element discretization of -div(K grad u) + d u with
/// region-wise constant anisotropic K on a uniform quadrilateral mesh.
pub fn fe_diffusion(
    n_per_side: usize,
    regions: &[DiffusionRegionSpec],
) -> Result<(SparseMatrix, GridMeta)> {
    if regions.is_empty() {
        return Err(Error::Config("no diffusion regions given".into()));
    }
    let area: f64 = regions
        .iter()
        .map(|r| (r.rect.2 - r.rect.0) * (r.rect.3 - r.rect.1))
        .sum();
    if (area - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "region boxes cover area {area}, expected the unit square"
        )));
    }
    let cells = n_per_side + 1;
    let h = 1.0 / cells as f64;
    for r in regions {
        for edge in [r.rect.0, r.rect.1, r.rect.2, r.rect.3] {
            let steps = edge / h;
            if (steps - steps.round()).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "region edge at {edge} does not align with mesh lines of spacing {h}"
                )));
            }
        }
    }
    let lookup = |x: f64, y: f64| -> Result<(f64, f64, f64, f64)> {
        for r in regions {
            if r.contains(x, y) {
                let (a, b, c) = r.tensor();
                return Ok((a, b, c, r.mass));
            }
        }
        Err(Error::Config(format!(
            "point ({x}, {y}) not covered by any region box"
        )))
    };
    // fail fast if any element center falls through the partition
    for ey in 0..cells {
        for ex in 0..cells {
            lookup((ex as f64 + 0.5) * h, (ey as f64 + 0.5) * h)?;
        }
    }
    let (a, mut meta) = assemble_bilinear(n_per_side, |x, y| lookup(x, y).unwrap())?;
    meta.region_of = (0..meta.n_points())
        .map(|idx| {
            let (x, y) = meta.xy(idx);
            regions
                .iter()
                .position(|r| r.contains(x, y))
                .unwrap_or(0) as u8
        })
        .collect();
    Ok((a, meta))
}

/// Bilinear finite element diffusion matrix with the two-scale scalar
/// permeability layout of [`JumpSpec`].
pub fn jump_permeability(n_per_side: usize, spec: JumpSpec) -> Result<(SparseMatrix, GridMeta)> {
    if !matches!(spec.tiling, 1 | 4 | 8 | 16) {
        return Err(Error::Config(format!(
            "tiling {} not in {{1, 4, 8, 16}}",
            spec.tiling
        )));
    }
    let cells = n_per_side + 1;
    // inclusion interfaces sit at odd multiples of 1/(4 tau)
    if cells % (4 * spec.tiling as usize) != 0 {
        return Err(Error::Resolution(format!(
            "grid with {cells} cells per side does not align with tiling tau={}",
            spec.tiling
        )));
    }
    let background = 10f64.powi(spec.exponent);
    let (a, mut meta) = assemble_bilinear(n_per_side, |x, y| {
        let k = if spec.in_inclusion(x, y) { 1.0 } else { background };
        (k, k, 0.0, 0.0)
    })?;
    meta.region_of = (0..meta.n_points())
        .map(|idx| {
            let (x, y) = meta.xy(idx);
            u8::from(spec.in_inclusion(x, y))
        })
        .collect();
    Ok((a, meta))
}
