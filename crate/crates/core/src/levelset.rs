//! Grid-sampled level-set state: the scalar field whose negative region is
//! the tube, with interpolation, validity policing, and VTK snapshots.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::Box3;
use crate::vec3::Vec3;

/// Node counts per axis. Spacings derive from the box extents; nodes include
/// both endpoints of every axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

impl GridSpec {
    pub fn new(n1: usize, n2: usize, n3: usize) -> Result<Self> {
        if n1 < 8 || n2 < 8 || n3 < 8 {
            return Err(Error::Config(format!(
                "grid must have at least 8 nodes per axis, got {n1}x{n2}x{n3}"
            )));
        }
        Ok(Self { n1, n2, n3 })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    pub fn spacing(&self, bx: &Box3) -> [f64; 3] {
        [
            bx.i1.len() / (self.n1 - 1) as f64,
            bx.i2.len() / (self.n2 - 1) as f64,
            bx.i3.len() / (self.n3 - 1) as f64,
        ]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n1 * (j + self.n2 * k)
    }
}

/// Sampled level-set function on the box at one instant. Immutable after
/// construction; transport steps produce fresh states.
#[derive(Debug, Clone)]
pub struct LevelSetState {
    pub grid: GridSpec,
    pub bx: Box3,
    pub values: Vec<f64>,
    pub time: f64,
}

/// Regularity verdict for a state: in-plane gradient floor near the zero set,
/// slabs with an empty cross-section, and lateral wall contact.
#[derive(Debug, Clone)]
pub struct ValidityReport {
    /// Smallest `|grad_{x1,x2} theta|` over nodes whose cell crosses zero.
    /// Infinite when no cell crosses zero at all.
    pub min_slice_gradient: f64,
    /// Slab indices whose cross-section contains no negative node.
    pub empty_slices: Vec<usize>,
    /// True when the zero set or the negative region reaches the outermost
    /// cell ring of some slice.
    pub boundary_contact: bool,
    pub is_regular: bool,
}

impl ValidityReport {
    fn assemble(
        min_slice_gradient: f64,
        empty_slices: Vec<usize>,
        boundary_contact: bool,
        eps_grad: f64,
    ) -> Self {
        let is_regular =
            min_slice_gradient >= eps_grad && empty_slices.is_empty() && !boundary_contact;
        Self {
            min_slice_gradient,
            empty_slices,
            boundary_contact,
            is_regular,
        }
    }
}

/// Sample a time-dependent scalar onto the grid at time `t`.
pub fn sample_levelset(
    theta: impl Fn(Vec3, f64) -> f64,
    grid: GridSpec,
    bx: Box3,
    t: f64,
) -> Result<LevelSetState> {
    let h = grid.spacing(&bx);
    let mut values = vec![0.0; grid.node_count()];
    for k in 0..grid.n3 {
        let z = bx.i3.lo + h[2] * k as f64;
        for j in 0..grid.n2 {
            let y = bx.i2.lo + h[1] * j as f64;
            for i in 0..grid.n1 {
                let x = bx.i1.lo + h[0] * i as f64;
                let v = theta([x, y, z], t);
                if !v.is_finite() {
                    return Err(Error::Input(format!(
                        "non-finite level-set sample {v} at ({x}, {y}, {z})"
                    )));
                }
                values[grid.index(i, j, k)] = v;
            }
        }
    }
    Ok(LevelSetState {
        grid,
        bx,
        values,
        time: t,
    })
}

/// Sample an initial level-set function at time zero.
pub fn init_levelset(
    theta0: impl Fn(Vec3) -> f64,
    grid: GridSpec,
    bx: Box3,
) -> Result<LevelSetState> {
    sample_levelset(|p, _| theta0(p), grid, bx, 0.0)
}

impl LevelSetState {
    #[inline]
    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.grid.spacing(&self.bx);
        [
            self.bx.i1.lo + h[0] * i as f64,
            self.bx.i2.lo + h[1] * j as f64,
            self.bx.i3.lo + h[2] * k as f64,
        ]
    }

    /// Cell index and fractional offset along one axis for an in-box point.
    fn locate(&self, axis: usize, x: f64) -> (usize, f64) {
        let iv = self.bx.axis(axis);
        let n = match axis {
            0 => self.grid.n1,
            1 => self.grid.n2,
            _ => self.grid.n3,
        };
        let h = iv.len() / (n - 1) as f64;
        let u = (iv.clamp(x) - iv.lo) / h;
        let cell = (u.floor() as usize).min(n - 2);
        (cell, u - cell as f64)
    }

    /// Trilinear interpolation of the nodal values. Errors outside the box;
    /// at nodes this reproduces the stored value exactly.
    pub fn theta_at(&self, p: Vec3) -> Result<f64> {
        self.bx.check_contains(p)?;
        let (i, fx) = self.locate(0, p[0]);
        let (j, fy) = self.locate(1, p[1]);
        let (k, fz) = self.locate(2, p[2]);
        let g = &self.grid;
        let v = |di: usize, dj: usize, dk: usize| self.values[g.index(i + di, j + dj, k + dk)];
        let lerp = |a: f64, b: f64, f: f64| a + (b - a) * f;
        let c00 = lerp(v(0, 0, 0), v(1, 0, 0), fx);
        let c10 = lerp(v(0, 1, 0), v(1, 1, 0), fx);
        let c01 = lerp(v(0, 0, 1), v(1, 0, 1), fx);
        let c11 = lerp(v(0, 1, 1), v(1, 1, 1), fx);
        Ok(lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz))
    }

    /// Nodal gradient: central differences in the interior, second-order
    /// one-sided stencils on the faces.
    pub fn nodal_gradient(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.grid.spacing(&self.bx);
        let g = &self.grid;
        let deriv = |axis: usize| -> f64 {
            let (idx, n, ha) = match axis {
                0 => (i, g.n1, h[0]),
                1 => (j, g.n2, h[1]),
                _ => (k, g.n3, h[2]),
            };
            let at = |q: usize| -> f64 {
                match axis {
                    0 => self.values[g.index(q, j, k)],
                    1 => self.values[g.index(i, q, k)],
                    _ => self.values[g.index(i, j, q)],
                }
            };
            if idx == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * ha)
            } else if idx == n - 1 {
                (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * ha)
            } else {
                (at(idx + 1) - at(idx - 1)) / (2.0 * ha)
            }
        };
        [deriv(0), deriv(1), deriv(2)]
    }

    /// Gradient at an arbitrary in-box point: nodal central differences,
    /// then trilinear interpolation of each component.
    pub fn gradient_at(&self, p: Vec3) -> Result<Vec3> {
        self.bx.check_contains(p)?;
        let (i, fx) = self.locate(0, p[0]);
        let (j, fy) = self.locate(1, p[1]);
        let (k, fz) = self.locate(2, p[2]);
        let mut out = [0.0; 3];
        let lerp = |a: f64, b: f64, f: f64| a + (b - a) * f;
        for comp in 0..3 {
            let gval =
                |di: usize, dj: usize, dk: usize| self.nodal_gradient(i + di, j + dj, k + dk)[comp];
            let c00 = lerp(gval(0, 0, 0), gval(1, 0, 0), fx);
            let c10 = lerp(gval(0, 1, 0), gval(1, 1, 0), fx);
            let c01 = lerp(gval(0, 0, 1), gval(1, 0, 1), fx);
            let c11 = lerp(gval(0, 1, 1), gval(1, 1, 1), fx);
            out[comp] = lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz);
        }
        Ok(out)
    }

    /// Level-set values interpolated onto the plane `x3 = const`, as an
    /// `n1 x n2` row-major slab.
    pub fn slice_values(&self, x3: f64) -> Result<Vec<f64>> {
        if !self.bx.i3.contains(x3) {
            return Err(Error::OutsideDomain(self.bx.i1.lo, self.bx.i2.lo, x3));
        }
        let (k, fz) = self.locate(2, x3);
        let g = &self.grid;
        let mut out = vec![0.0; g.n1 * g.n2];
        for j in 0..g.n2 {
            for i in 0..g.n1 {
                let a = self.values[g.index(i, j, k)];
                let b = self.values[g.index(i, j, k + 1)];
                out[i + g.n1 * j] = a + (b - a) * fz;
            }
        }
        Ok(out)
    }

    /// In-plane gradient magnitude `|(d1 theta, d2 theta)|` at a node.
    fn slice_gradient_mag(&self, i: usize, j: usize, k: usize) -> f64 {
        let grad = self.nodal_gradient(i, j, k);
        (grad[0] * grad[0] + grad[1] * grad[1]).sqrt()
    }

    /// Police the regular-tube conditions: non-vanishing in-plane gradient on
    /// the zero set, non-empty cross-sections, and clearance from the lateral
    /// walls. The report carries the verdict; this never errors.
    pub fn validate_regular_tube(&self, eps_grad: f64) -> ValidityReport {
        let g = &self.grid;
        let mut min_grad = f64::INFINITY;
        let mut visited = vec![false; g.node_count()];
        let mut boundary_contact = false;
        let mut empty_slices = Vec::new();

        for k in 0..g.n3 {
            let mut any_negative = false;
            for j in 0..g.n2 {
                for i in 0..g.n1 {
                    let v = self.values[g.index(i, j, k)];
                    if v < 0.0 {
                        any_negative = true;
                        if i == 0 || i == g.n1 - 1 || j == 0 || j == g.n2 - 1 {
                            boundary_contact = true;
                        }
                    }
                }
            }
            if !any_negative {
                empty_slices.push(k);
            }
        }

        // Cells whose corners mix signs sit on the zero set; their corner
        // nodes feed the gradient floor. In-plane crossing cells in the
        // outermost ring mean wall contact.
        for k in 0..g.n3 {
            for j in 0..g.n2 - 1 {
                for i in 0..g.n1 - 1 {
                    let corners = [
                        self.values[g.index(i, j, k)],
                        self.values[g.index(i + 1, j, k)],
                        self.values[g.index(i, j + 1, k)],
                        self.values[g.index(i + 1, j + 1, k)],
                    ];
                    let neg = corners.iter().any(|&v| v < 0.0);
                    let nonneg = corners.iter().any(|&v| v >= 0.0);
                    if !(neg && nonneg) {
                        continue;
                    }
                    if i == 0 || i == g.n1 - 2 || j == 0 || j == g.n2 - 2 {
                        boundary_contact = true;
                    }
                    for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                        let idx = g.index(i + di, j + dj, k);
                        if !visited[idx] {
                            visited[idx] = true;
                            min_grad = min_grad.min(self.slice_gradient_mag(i + di, j + dj, k));
                        }
                    }
                }
            }
        }

        ValidityReport::assemble(min_grad, empty_slices, boundary_contact, eps_grad)
    }

    /// Write the state as a legacy-VTK structured-points file (ASCII) with a
    /// single scalar field named `theta`. See the README for the exact header.
    pub fn write_vtk(&self, path: &Path) -> Result<()> {
        let g = &self.grid;
        let h = g.spacing(&self.bx);
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "# vtk DataFile Version 3.0")?;
        writeln!(out, "theta t={:.6e}", self.time)?;
        writeln!(out, "ASCII")?;
        writeln!(out, "DATASET STRUCTURED_POINTS")?;
        writeln!(out, "DIMENSIONS {} {} {}", g.n1, g.n2, g.n3)?;
        writeln!(
            out,
            "ORIGIN {:.9e} {:.9e} {:.9e}",
            self.bx.i1.lo, self.bx.i2.lo, self.bx.i3.lo
        )?;
        writeln!(out, "SPACING {:.9e} {:.9e} {:.9e}", h[0], h[1], h[2])?;
        writeln!(out, "POINT_DATA {}", g.node_count())?;
        writeln!(out, "SCALARS theta double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in &self.values {
            writeln!(out, "{v:.9e}")?;
        }
        Ok(())
    }
}

/// Default gradient floor separating genuine degeneracy from discretization
/// noise at the default resolution.
pub const DEFAULT_EPS_GRAD: f64 = 1e-3;
