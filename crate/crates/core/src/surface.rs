//! Surface samples along slice contours (normals, front speeds, velocity,
//! quadrature weights), the boundary and stacked-slice integrals built from
//! them, slice-region quadrature, and the per-slice area-derivative identity
//! check.

use std::f64::consts::PI;

use crate::contour::{slice_contour, ContourLoop, SliceContour};
use crate::error::{Error, Result};
use crate::flow::{Box3, VelocityField};
use crate::graph::GraphTube;
use crate::levelset::{sample_levelset, GridSpec, LevelSetState};
use crate::vec3::{self, Vec3};

/// A point on the tube surface with everything the slice calculus needs:
/// the full outward normal, the in-slice normal (zero third component), the
/// front speeds along each, the flow velocity, and a length-element weight.
#[derive(Debug, Clone)]
pub struct SurfaceSample {
    pub position: Vec3,
    pub normal: Vec3,
    pub slice_normal: Vec3,
    pub normal_speed: f64,
    pub slice_normal_speed: f64,
    pub velocity: Vec3,
    pub weight: f64,
}

impl SurfaceSample {
    /// `normal . slice_normal`, strictly positive on a regular surface.
    #[inline]
    pub fn alignment(&self) -> f64 {
        vec3::dot(self.normal, self.slice_normal)
    }
}

/// Source of cross-section curves, indexed by the axial coordinate.
pub trait SliceCurves {
    fn curves_at(&self, x3: f64) -> Result<SliceContour>;
    /// Quadrature nodes across the axial direction.
    fn slice_positions(&self) -> Vec<f64>;
}

impl SliceCurves for LevelSetState {
    fn curves_at(&self, x3: f64) -> Result<SliceContour> {
        slice_contour(self, x3)
    }

    fn slice_positions(&self) -> Vec<f64> {
        let h = self.grid.spacing(&self.bx);
        (0..self.grid.n3)
            .map(|k| self.bx.i3.lo + h[2] * k as f64)
            .collect()
    }
}

/// Slice curves of a graph sheet, sampled analytically: one open polyline per
/// slice with `n2` vertices across the sheet's transverse range.
pub struct GraphCurves<'a> {
    pub tube: &'a GraphTube,
    pub t: f64,
    pub n2: usize,
    pub n3: usize,
}

impl SliceCurves for GraphCurves<'_> {
    fn curves_at(&self, x3: f64) -> Result<SliceContour> {
        let r = self.tube.x2_range;
        let h = r.len() / (self.n2 - 1) as f64;
        let vertices: Vec<[f64; 2]> = (0..self.n2)
            .map(|j| {
                let x2 = r.lo + h * j as f64;
                [self.tube.psi(x2, x3, self.t), x2]
            })
            .collect();
        Ok(SliceContour {
            x3,
            t: self.t,
            loops: vec![ContourLoop {
                vertices,
                closed: false,
            }],
        })
    }

    fn slice_positions(&self) -> Vec<f64> {
        let r = self.tube.x3_range;
        let h = r.len() / (self.n3 - 1) as f64;
        (0..self.n3).map(|k| r.lo + h * k as f64).collect()
    }
}

/// Turns a contour into surface samples.
pub trait SurfaceSampler {
    fn sample(&self, contour: &SliceContour) -> Result<Vec<SurfaceSample>>;
}

/// Grid-pipeline sampler: gradients by interpolated central differences, time
/// derivative by a central difference across three consecutive snapshots.
pub struct GridSampler<'a> {
    state: &'a LevelSetState,
    prev: &'a LevelSetState,
    next: &'a LevelSetState,
    field: Option<&'a VelocityField>,
    eps_grad: f64,
    dt: f64,
}

impl<'a> GridSampler<'a> {
    pub fn new(
        state: &'a LevelSetState,
        prev: &'a LevelSetState,
        next: &'a LevelSetState,
        field: Option<&'a VelocityField>,
        eps_grad: f64,
    ) -> Result<Self> {
        let dt = state.time - prev.time;
        let dt_next = next.time - state.time;
        if dt <= 0.0 || (dt_next - dt).abs() > 1e-9 * dt.max(1e-300) {
            return Err(Error::Precondition(format!(
                "snapshots must be consecutive with uniform spacing, got dt- = {dt:.3e}, dt+ = {dt_next:.3e}"
            )));
        }
        if state.grid != prev.grid || state.grid != next.grid {
            return Err(Error::Precondition("snapshots must share one grid".into()));
        }
        Ok(Self {
            state,
            prev,
            next,
            field,
            eps_grad,
            dt,
        })
    }
}

impl SurfaceSampler for GridSampler<'_> {
    fn sample(&self, contour: &SliceContour) -> Result<Vec<SurfaceSample>> {
        let mut out = Vec::new();
        for lp in &contour.loops {
            let weights = lp.vertex_weights();
            for (v, &w) in lp.vertices.iter().zip(weights.iter()) {
                let pos = [v[0], v[1], contour.x3];
                let grad = self.state.gradient_at(pos)?;
                let slice_mag = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
                if slice_mag < self.eps_grad {
                    return Err(Error::DegenerateGradient {
                        value: slice_mag,
                        eps: self.eps_grad,
                        x1: pos[0],
                        x2: pos[1],
                        x3: pos[2],
                    });
                }
                let full_mag = vec3::norm(grad);
                let theta_dot =
                    (self.next.theta_at(pos)? - self.prev.theta_at(pos)?) / (2.0 * self.dt);
                let velocity = match self.field {
                    Some(f) => f.eval_in(&self.state.bx, pos, self.state.time)?,
                    None => [0.0; 3],
                };
                out.push(SurfaceSample {
                    position: pos,
                    normal: vec3::scale(1.0 / full_mag, grad),
                    slice_normal: [grad[0] / slice_mag, grad[1] / slice_mag, 0.0],
                    normal_speed: -theta_dot / full_mag,
                    slice_normal_speed: -theta_dot / slice_mag,
                    velocity,
                    weight: w,
                });
            }
        }
        Ok(out)
    }
}

/// Closed-form sampler for graph sheets: exact normals and speeds.
pub struct GraphSampler<'a> {
    pub tube: &'a GraphTube,
    pub t: f64,
}

impl SurfaceSampler for GraphSampler<'_> {
    fn sample(&self, contour: &SliceContour) -> Result<Vec<SurfaceSample>> {
        let mut out = Vec::new();
        for lp in &contour.loops {
            let weights = lp.vertex_weights();
            for (v, &w) in lp.vertices.iter().zip(weights.iter()) {
                let (x2, x3) = (v[1], contour.x3);
                self.tube.check_domain(x2, x3, self.t)?;
                let (normal, slice_normal) = self.tube.normals(x2, x3, self.t);
                out.push(SurfaceSample {
                    position: [v[0], v[1], x3],
                    normal,
                    slice_normal,
                    normal_speed: self.tube.normal_speed(x2, x3, self.t),
                    slice_normal_speed: self.tube.slice_normal_speed(x2, x3, self.t),
                    velocity: [0.0; 3],
                    weight: w,
                });
            }
        }
        Ok(out)
    }
}

/// Weighted sum of a per-sample integrand along the contour: the discrete
/// line integral over the slice boundary.
pub fn boundary_integral(
    samples: &[SurfaceSample],
    integrand: impl Fn(&SurfaceSample) -> f64,
) -> f64 {
    samples.iter().map(|s| integrand(s) * s.weight).sum()
}

/// Linear interpolation of sampled values at `x`.
fn lerp_samples(xs: &[f64], g: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return g[0];
    }
    if x >= xs[xs.len() - 1] {
        return g[g.len() - 1];
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    let k = k.min(xs.len() - 2);
    let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    g[k] + (g[k + 1] - g[k]) * w
}

/// Trapezoid integral of linearly interpolated samples over `[lo, hi]`,
/// where `lo` and `hi` need not be sample points.
pub fn integrate_samples_over_interval(xs: &[f64], g: &[f64], lo: f64, hi: f64) -> Result<f64> {
    if xs.len() != g.len() || xs.len() < 2 {
        return Err(Error::Precondition(
            "interval quadrature needs matching sample arrays of length >= 2".into(),
        ));
    }
    let span = xs[xs.len() - 1] - xs[0];
    let slack = 1e-9 * span;
    if lo < xs[0] - slack || hi > xs[xs.len() - 1] + slack {
        return Err(Error::Precondition(format!(
            "interval [{lo}, {hi}] is not contained in the sampled range"
        )));
    }
    if hi <= lo {
        if hi < lo {
            return Err(Error::Precondition(format!(
                "interval [{lo}, {hi}] is reversed"
            )));
        }
        return Ok(0.0);
    }

    let mut breaks = vec![lo];
    for &x in xs.iter() {
        if x > lo && x < hi {
            breaks.push(x);
        }
    }
    breaks.push(hi);

    let mut total = 0.0;
    let mut left_val = lerp_samples(xs, g, lo);
    for pair in breaks.windows(2) {
        let right_val = lerp_samples(xs, g, pair[1]);
        total += 0.5 * (left_val + right_val) * (pair[1] - pair[0]);
        left_val = right_val;
    }
    Ok(total)
}

fn collect_inner<C: SliceCurves, S: SurfaceSampler>(
    curves: &C,
    sampler: &S,
    integrand: &impl Fn(&SurfaceSample) -> f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let xs = curves.slice_positions();
    let mut inner = Vec::with_capacity(xs.len());
    for &x3 in &xs {
        let contour = curves.curves_at(x3)?;
        let samples = sampler.sample(&contour)?;
        inner.push(boundary_integral(&samples, integrand));
    }
    Ok((xs, inner))
}

/// Surface integral over the lateral patch with axial extent `[lo, hi]`,
/// computed from a general per-sample integrand: outer trapezoid across
/// slices of the inner boundary integral.
pub fn surface_integral_sliced_with<C: SliceCurves, S: SurfaceSampler>(
    curves: &C,
    sampler: &S,
    lo: f64,
    hi: f64,
    integrand: impl Fn(&SurfaceSample) -> f64,
) -> Result<f64> {
    let (xs, inner) = collect_inner(curves, sampler, &integrand)?;
    integrate_samples_over_interval(&xs, &inner, lo, hi)
}

/// Surface integral of a pointwise function `f` via the slice formula: the
/// inner integrand is `f / (normal . slice_normal)`.
pub fn surface_integral_sliced<C: SliceCurves, S: SurfaceSampler>(
    curves: &C,
    sampler: &S,
    lo: f64,
    hi: f64,
    f: impl Fn(Vec3) -> f64,
) -> Result<f64> {
    surface_integral_sliced_with(curves, sampler, lo, hi, |s| f(s.position) / s.alignment())
}

/// Surface integral of `f` via the speed-weighted slice formula: the inner
/// integrand is `f sigma_tilde / sigma`. Errors when any sample's normal
/// speed falls below `sigma_floor` (the weighted form divides by it; use the
/// unweighted formula for near-stationary surfaces).
pub fn surface_integral_weighted<C: SliceCurves, S: SurfaceSampler>(
    curves: &C,
    sampler: &S,
    lo: f64,
    hi: f64,
    f: impl Fn(Vec3) -> f64,
    sigma_floor: f64,
) -> Result<f64> {
    let xs = curves.slice_positions();
    let mut inner = Vec::with_capacity(xs.len());
    for &x3 in &xs {
        let contour = curves.curves_at(x3)?;
        let samples = sampler.sample(&contour)?;
        for s in &samples {
            if s.normal_speed.abs() <= sigma_floor {
                return Err(Error::NearStationarySurface {
                    sigma: s.normal_speed,
                    floor: sigma_floor,
                    x1: s.position[0],
                    x2: s.position[1],
                });
            }
        }
        inner.push(boundary_integral(&samples, |s| {
            f(s.position) * s.slice_normal_speed / s.normal_speed
        }));
    }
    integrate_samples_over_interval(&xs, &inner, lo, hi)
}

// ---------------------------------------------------------------------------
// Slice-region quadrature
// ---------------------------------------------------------------------------

/// Clip the negative region out of a quadrilateral with linearly interpolated
/// edges. `corners` are in counterclockwise order. Returns (area, centroid).
fn clip_negative_quad(corners: &[([f64; 2], f64); 4]) -> Option<([f64; 2], f64)> {
    let mut poly: Vec<[f64; 2]> = Vec::with_capacity(6);
    for e in 0..4 {
        let (p, a) = corners[e];
        let (q, b) = corners[(e + 1) % 4];
        if a < 0.0 {
            poly.push(p);
        }
        if (a < 0.0) != (b < 0.0) {
            let s = a / (a - b);
            poly.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
        }
    }
    if poly.len() < 3 {
        return None;
    }
    let n = poly.len();
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let cross = p[0] * q[1] - q[0] * p[1];
        area2 += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    let area = 0.5 * area2;
    if area.abs() < 1e-300 {
        return None;
    }
    Some(([cx / (3.0 * area2), cy / (3.0 * area2)], area))
}

/// Integral of `f` over the negative region of one grid slab: full interior
/// cells by the midpoint rule, boundary cells by linear-fraction clipping
/// (split at the cell center, which also resolves saddle topology the same
/// way the contour extraction does).
pub fn region_integral_slab(state: &LevelSetState, slab: usize, f: impl Fn(Vec3) -> f64) -> f64 {
    let g = &state.grid;
    let h = g.spacing(&state.bx);
    let z = state.bx.i3.lo + h[2] * slab as f64;
    let cell_area = h[0] * h[1];
    let mut total = 0.0;
    for j in 0..g.n2 - 1 {
        let y = state.bx.i2.lo + h[1] * j as f64;
        for i in 0..g.n1 - 1 {
            let x = state.bx.i1.lo + h[0] * i as f64;
            let v = [
                state.values[g.index(i, j, slab)],
                state.values[g.index(i + 1, j, slab)],
                state.values[g.index(i + 1, j + 1, slab)],
                state.values[g.index(i, j + 1, slab)],
            ];
            let n_neg = v.iter().filter(|&&w| w < 0.0).count();
            if n_neg == 0 {
                continue;
            }
            if n_neg == 4 {
                total += f([x + 0.5 * h[0], y + 0.5 * h[1], z]) * cell_area;
                continue;
            }
            // mixed cell: split into four subquads at the (bilinear) center
            let p = [[x, y], [x + h[0], y], [x + h[0], y + h[1]], [x, y + h[1]]];
            let center = (
                [x + 0.5 * h[0], y + 0.5 * h[1]],
                0.25 * (v[0] + v[1] + v[2] + v[3]),
            );
            let mids = [
                ([x + 0.5 * h[0], y], 0.5 * (v[0] + v[1])),
                ([x + h[0], y + 0.5 * h[1]], 0.5 * (v[1] + v[2])),
                ([x + 0.5 * h[0], y + h[1]], 0.5 * (v[2] + v[3])),
                ([x, y + 0.5 * h[1]], 0.5 * (v[3] + v[0])),
            ];
            let subquads = [
                [(p[0], v[0]), mids[0], center, mids[3]],
                [mids[0], (p[1], v[1]), mids[1], center],
                [center, mids[1], (p[2], v[2]), mids[2]],
                [mids[3], center, mids[2], (p[3], v[3])],
            ];
            for quad in &subquads {
                if let Some((centroid, area)) = clip_negative_quad(quad) {
                    total += f([centroid[0], centroid[1], z]) * area;
                }
            }
        }
    }
    total
}

/// Cubic Lagrange weights on the four stencil nodes `{0, 1, 2, 3}` at local
/// coordinate `s`.
#[inline]
fn cubic_weights(s: f64) -> [f64; 4] {
    [
        -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
        s * (s - 2.0) * (s - 3.0) / 2.0,
        -s * (s - 1.0) * (s - 3.0) / 2.0,
        s * (s - 1.0) * (s - 2.0) / 6.0,
    ]
}

/// Refined region integral over one slab: mixed cells are subdivided 8x8
/// with bicubic-interpolated corner values before linear clipping. Compared
/// to [`region_integral_slab`] this shrinks both the bilinear-surrogate area
/// bias and its grid-locked oscillation in the interface position; the
/// latter dominates finite differences of such integrals in time.
pub fn region_integral_slab_refined(
    state: &LevelSetState,
    slab: usize,
    f: impl Fn(Vec3) -> f64,
) -> f64 {
    const SUB: usize = 8;
    let g = &state.grid;
    let h = g.spacing(&state.bx);
    let z = state.bx.i3.lo + h[2] * slab as f64;
    let cell_area = h[0] * h[1];
    let (n1, n2) = (g.n1, g.n2);
    let value = |i: usize, j: usize| state.values[g.index(i, j, slab)];

    let mut total = 0.0;
    let mut corner_vals = [[0.0_f64; SUB + 1]; SUB + 1];
    for j in 0..n2 - 1 {
        let y = state.bx.i2.lo + h[1] * j as f64;
        for i in 0..n1 - 1 {
            let x = state.bx.i1.lo + h[0] * i as f64;
            let v = [
                value(i, j),
                value(i + 1, j),
                value(i + 1, j + 1),
                value(i, j + 1),
            ];
            let n_neg = v.iter().filter(|&&w| w < 0.0).count();
            if n_neg == 0 {
                continue;
            }
            if n_neg == 4 {
                total += f([x + 0.5 * h[0], y + 0.5 * h[1], z]) * cell_area;
                continue;
            }
            // bicubic values on the (SUB+1)^2 subcell corner lattice
            let ib = (i.max(1) - 1).min(n1 - 4);
            let jb = (j.max(1) - 1).min(n2 - 4);
            for (qy, row) in corner_vals.iter_mut().enumerate() {
                let sy = j as f64 + qy as f64 / SUB as f64 - jb as f64;
                let wy = cubic_weights(sy);
                for (qx, out) in row.iter_mut().enumerate() {
                    let sx = i as f64 + qx as f64 / SUB as f64 - ib as f64;
                    let wx = cubic_weights(sx);
                    let mut acc = 0.0;
                    for (b, wyb) in wy.iter().enumerate() {
                        let mut line = 0.0;
                        for (a, wxa) in wx.iter().enumerate() {
                            line += wxa * value(ib + a, jb + b);
                        }
                        acc += wyb * line;
                    }
                    *out = acc;
                }
            }
            let hs = [h[0] / SUB as f64, h[1] / SUB as f64];
            for qy in 0..SUB {
                let y0 = y + hs[1] * qy as f64;
                for qx in 0..SUB {
                    let x0 = x + hs[0] * qx as f64;
                    let quad = [
                        ([x0, y0], corner_vals[qy][qx]),
                        ([x0 + hs[0], y0], corner_vals[qy][qx + 1]),
                        ([x0 + hs[0], y0 + hs[1]], corner_vals[qy + 1][qx + 1]),
                        ([x0, y0 + hs[1]], corner_vals[qy + 1][qx]),
                    ];
                    if let Some((centroid, area)) = clip_negative_quad(&quad) {
                        total += f([centroid[0], centroid[1], z]) * area;
                    }
                }
            }
        }
    }
    total
}

fn region_integral_at_with(
    state: &LevelSetState,
    x3: f64,
    slab_integral: impl Fn(&LevelSetState, usize) -> f64,
) -> Result<f64> {
    if !state.bx.i3.contains(x3) {
        return Err(Error::OutsideDomain(state.bx.i1.lo, state.bx.i2.lo, x3));
    }
    let h3 = state.bx.i3.len() / (state.grid.n3 - 1) as f64;
    let u = (state.bx.i3.clamp(x3) - state.bx.i3.lo) / h3;
    let k = (u.floor() as usize).min(state.grid.n3 - 2);
    let w = u - k as f64;
    let a = slab_integral(state, k);
    if w == 0.0 {
        return Ok(a);
    }
    let b = slab_integral(state, k + 1);
    Ok(a + (b - a) * w)
}

/// Region integral at an arbitrary axial coordinate: linear interpolation
/// between the integrals over the two neighboring slabs.
pub fn region_integral_at(
    state: &LevelSetState,
    x3: f64,
    f: impl Fn(Vec3) -> f64 + Copy,
) -> Result<f64> {
    region_integral_at_with(state, x3, |s, k| region_integral_slab(s, k, f))
}

/// Interpolated-slab variant of [`region_integral_slab_refined`].
pub fn region_integral_at_refined(
    state: &LevelSetState,
    x3: f64,
    f: impl Fn(Vec3) -> f64 + Copy,
) -> Result<f64> {
    region_integral_at_with(state, x3, |s, k| region_integral_slab_refined(s, k, f))
}

/// Cross-section areas at every grid slab, from the extracted contours.
pub fn slab_areas(state: &LevelSetState) -> Result<Vec<f64>> {
    let xs = state.slice_positions();
    xs.iter()
        .map(|&x3| slice_contour(state, x3)?.area())
        .collect()
}

/// Tube volume over `[lo, hi]`: trapezoid quadrature of the slab areas with
/// linearly interpolated areas at non-grid endpoints.
pub fn tube_volume(state: &LevelSetState, lo: f64, hi: f64) -> Result<f64> {
    let xs = state.slice_positions();
    let areas = slab_areas(state)?;
    integrate_samples_over_interval(&xs, &areas, lo, hi)
}

/// Interpolated cross-section area at an arbitrary axial coordinate.
pub fn slice_area_at(xs: &[f64], areas: &[f64], x3: f64) -> f64 {
    lerp_samples(xs, areas, x3)
}

// ---------------------------------------------------------------------------
// Identity reports
// ---------------------------------------------------------------------------

/// Two routes to one quantity plus their discrepancy. The relative error is
/// measured against the larger of the two values and a caller-supplied
/// characteristic magnitude; when everything is at the noise floor the
/// absolute error is reported instead.
#[derive(Debug, Clone, Copy)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

impl IdentityReport {
    pub fn new(lhs: f64, rhs: f64, characteristic: f64) -> Self {
        let abs_error = (lhs - rhs).abs();
        let scale = lhs.abs().max(rhs.abs()).max(characteristic);
        let rel_error = if scale > 1e-14 {
            abs_error / scale
        } else {
            abs_error
        };
        Self {
            lhs,
            rhs,
            abs_error,
            rel_error,
        }
    }
}

/// Per-slice area-derivative identity: the time derivative of the area
/// integral of `f` over the cross-section equals the boundary integral of
/// `f` times the in-slice front speed.
///
/// The left side is a central finite difference (step `dt_fd`) of the
/// region quadrature on states sampled from the closed form `theta`; the
/// right side is the boundary integral on the middle state.
#[allow(clippy::too_many_arguments)]
pub fn check_identity_14(
    theta: impl Fn(Vec3, f64) -> f64 + Copy,
    grid: GridSpec,
    bx: Box3,
    x3: f64,
    t: f64,
    f: impl Fn(Vec3) -> f64 + Copy,
    dt_fd: f64,
    eps_grad: f64,
) -> Result<IdentityReport> {
    let prev = sample_levelset(theta, grid, bx, t - dt_fd)?;
    let state = sample_levelset(theta, grid, bx, t)?;
    let next = sample_levelset(theta, grid, bx, t + dt_fd)?;

    let lhs = (region_integral_at_refined(&next, x3, f)?
        - region_integral_at_refined(&prev, x3, f)?)
        / (2.0 * dt_fd);

    let contour = slice_contour(&state, x3)?;
    let sampler = GridSampler::new(&state, &prev, &next, None, eps_grad)?;
    let samples = sampler.sample(&contour)?;
    let rhs = boundary_integral(&samples, |s| f(s.position) * s.slice_normal_speed);

    // Characteristic magnitude of the identity's content, so odd integrands
    // whose two sides both vanish do not divide noise by noise.
    let max_f = samples
        .iter()
        .map(|s| f(s.position).abs())
        .fold(0.0_f64, f64::max);
    let speed_mass = boundary_integral(&samples, |s| s.slice_normal_speed.abs());
    Ok(IdentityReport::new(lhs, rhs, max_f * speed_mass))
}

// ---------------------------------------------------------------------------
// Probe family
// ---------------------------------------------------------------------------

/// The fixed family of continuous test functions used by the identity
/// checks; a spanning set of smooth probes stands in for "any continuous F".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    One,
    X1,
    X3,
    SinCos,
}

impl Probe {
    pub const FAMILY: [Probe; 4] = [Probe::One, Probe::X1, Probe::X3, Probe::SinCos];

    pub fn eval(&self, p: Vec3) -> f64 {
        match self {
            Probe::One => 1.0,
            Probe::X1 => p[0],
            Probe::X3 => p[2],
            Probe::SinCos => (PI * p[0]).sin() * (PI * p[2]).cos(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Probe::One => "1",
            Probe::X1 => "x1",
            Probe::X3 => "x3",
            Probe::SinCos => "sin(pi x1)cos(pi x3)",
        }
    }
}
