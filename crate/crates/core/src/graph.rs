//! Closed-form sheet surfaces given as a graph `x1 = psi(x2, x3, t)`, with
//! exact normals and front speeds. These serve as analytic ground truth for
//! the grid pipeline, plus an independent fine-mesh surface quadrature.

use crate::error::{Error, Result};
use crate::flow::{Box3, Interval};
use crate::levelset::{sample_levelset, GridSpec, LevelSetState};
use crate::vec3::Vec3;

/// Coefficients of the supported graph family
///
/// `psi = offset + drift t + slope_x2 x2 + slope_x3 x3 + quad_x3 x3^2
///        + sine_amp sin(sine_freq pi x3)`
///
/// All partial derivatives are exact, which is what makes the family usable
/// as an oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    pub offset: f64,
    pub drift: f64,
    pub slope_x2: f64,
    pub slope_x3: f64,
    pub quad_x3: f64,
    pub sine_amp: f64,
    pub sine_freq: f64,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            offset: 0.0,
            drift: 0.0,
            slope_x2: 0.0,
            slope_x3: 0.0,
            quad_x3: 0.0,
            sine_amp: 0.0,
            sine_freq: 1.0,
        }
    }
}

impl GraphParams {
    #[inline]
    pub fn psi(&self, x2: f64, x3: f64, t: f64) -> f64 {
        self.offset
            + self.drift * t
            + self.slope_x2 * x2
            + self.slope_x3 * x3
            + self.quad_x3 * x3 * x3
            + self.sine_amp * (self.sine_freq * std::f64::consts::PI * x3).sin()
    }

    #[inline]
    pub fn psi_t(&self) -> f64 {
        self.drift
    }

    #[inline]
    pub fn psi_x2(&self) -> f64 {
        self.slope_x2
    }

    #[inline]
    pub fn psi_x3(&self, x3: f64) -> f64 {
        let kpi = self.sine_freq * std::f64::consts::PI;
        self.slope_x3 + 2.0 * self.quad_x3 * x3 + self.sine_amp * kpi * (kpi * x3).cos()
    }
}

/// A moving graph sheet over a rectangle in `(x2, x3)` and a time interval.
#[derive(Debug, Clone)]
pub struct GraphTube {
    pub params: GraphParams,
    pub x2_range: Interval,
    pub x3_range: Interval,
    pub time_range: Interval,
}

impl GraphTube {
    pub fn new(
        params: GraphParams,
        x2_range: Interval,
        x3_range: Interval,
        time_range: Interval,
    ) -> Self {
        Self {
            params,
            x2_range,
            x3_range,
            time_range,
        }
    }

    pub fn check_domain(&self, x2: f64, x3: f64, t: f64) -> Result<()> {
        if self.x2_range.contains(x2) && self.x3_range.contains(x3) && self.time_range.contains(t) {
            Ok(())
        } else {
            Err(Error::OutsideDomain(x2, x3, t))
        }
    }

    #[inline]
    pub fn psi(&self, x2: f64, x3: f64, t: f64) -> f64 {
        self.params.psi(x2, x3, t)
    }

    #[inline]
    pub fn psi_t(&self, _x2: f64, _x3: f64, _t: f64) -> f64 {
        self.params.psi_t()
    }

    #[inline]
    pub fn psi_x2(&self, _x2: f64, _x3: f64, _t: f64) -> f64 {
        self.params.psi_x2()
    }

    #[inline]
    pub fn psi_x3(&self, _x2: f64, x3: f64, _t: f64) -> f64 {
        self.params.psi_x3(x3)
    }

    /// Outward surface normal and in-slice normal at a graph point:
    ///
    /// `nu       = (1, -psi_x2, -psi_x3) / sqrt(1 + psi_x2^2 + psi_x3^2)`
    /// `nu_tilde = (1, -psi_x2, 0)       / sqrt(1 + psi_x2^2)`
    pub fn normals(&self, x2: f64, x3: f64, t: f64) -> (Vec3, Vec3) {
        let p2 = self.psi_x2(x2, x3, t);
        let p3 = self.psi_x3(x2, x3, t);
        let full = (1.0 + p2 * p2 + p3 * p3).sqrt();
        let slice = (1.0 + p2 * p2).sqrt();
        (
            [1.0 / full, -p2 / full, -p3 / full],
            [1.0 / slice, -p2 / slice, 0.0],
        )
    }

    /// Normal speed of the moving sheet:
    /// `sigma = psi_t / sqrt(1 + psi_x2^2 + psi_x3^2)`.
    pub fn normal_speed(&self, x2: f64, x3: f64, t: f64) -> f64 {
        let p2 = self.psi_x2(x2, x3, t);
        let p3 = self.psi_x3(x2, x3, t);
        self.psi_t(x2, x3, t) / (1.0 + p2 * p2 + p3 * p3).sqrt()
    }

    /// In-slice normal speed: `sigma_tilde = psi_t / sqrt(1 + psi_x2^2)`.
    pub fn slice_normal_speed(&self, x2: f64, x3: f64, t: f64) -> f64 {
        let p2 = self.psi_x2(x2, x3, t);
        self.psi_t(x2, x3, t) / (1.0 + p2 * p2).sqrt()
    }

    /// Closed-form `nu . nu_tilde`:
    /// `sqrt(1 + psi_x2^2) / sqrt(1 + psi_x2^2 + psi_x3^2)`.
    pub fn normal_alignment(&self, x2: f64, x3: f64, t: f64) -> f64 {
        let p2 = self.psi_x2(x2, x3, t);
        let p3 = self.psi_x3(x2, x3, t);
        (1.0 + p2 * p2).sqrt() / (1.0 + p2 * p2 + p3 * p3).sqrt()
    }

    /// Maximum of `|sigma - sigma_tilde (nu . nu_tilde)|` over a uniform
    /// sample grid of the domain. Algebraically zero; the contract is
    /// machine precision (<= 1e-12).
    pub fn speed_relation_residual(&self, n2: usize, n3: usize, nt: usize) -> f64 {
        let mut worst = 0.0_f64;
        for it in 0..nt {
            let t = self.time_range.lo + self.time_range.len() * it as f64 / (nt.max(2) - 1) as f64;
            for i3 in 0..n3 {
                let x3 =
                    self.x3_range.lo + self.x3_range.len() * i3 as f64 / (n3.max(2) - 1) as f64;
                for i2 in 0..n2 {
                    let x2 =
                        self.x2_range.lo + self.x2_range.len() * i2 as f64 / (n2.max(2) - 1) as f64;
                    let (nu, nu_tilde) = self.normals(x2, x3, t);
                    let align = nu[0] * nu_tilde[0] + nu[1] * nu_tilde[1] + nu[2] * nu_tilde[2];
                    let sigma = self.normal_speed(x2, x3, t);
                    let sigma_tilde = self.slice_normal_speed(x2, x3, t);
                    worst = worst.max((sigma - sigma_tilde * align).abs());
                }
            }
        }
        worst
    }

    /// Sample `theta(x, t) = x1 - psi(x2, x3, t)` onto a grid. Errors when
    /// the sheet leaves the interior of the box's first interval anywhere on
    /// the grid's `(x2, x3)` nodes.
    pub fn to_levelset(&self, grid: GridSpec, bx: Box3, t: f64) -> Result<LevelSetState> {
        let h = grid.spacing(&bx);
        for k in 0..grid.n3 {
            let x3 = bx.i3.lo + h[2] * k as f64;
            for j in 0..grid.n2 {
                let x2 = bx.i2.lo + h[1] * j as f64;
                let val = self.psi(x2, x3, t);
                if val <= bx.i1.lo || val >= bx.i1.hi {
                    return Err(Error::OutsideDomain(val, x2, x3));
                }
            }
        }
        sample_levelset(|p, tt| p[0] - self.psi(p[1], p[2], tt), grid, bx, t)
    }

    /// Independent fine-mesh quadrature of `F` over the sheet patch with
    /// `x3` in the given interval:
    ///
    /// `integral F(psi, x2, x3) sqrt(1 + psi_x2^2 + psi_x3^2) dx2 dx3`
    ///
    /// 2D trapezoid rule at the requested resolution. This route never goes
    /// through slices or grids, so it can arbitrate the slice machinery.
    pub fn direct_surface_integral(
        &self,
        f: impl Fn(Vec3) -> f64,
        x3_lo: f64,
        x3_hi: f64,
        n2: usize,
        n3: usize,
        t: f64,
    ) -> f64 {
        let h2 = self.x2_range.len() / (n2 - 1) as f64;
        let h3 = (x3_hi - x3_lo) / (n3 - 1) as f64;
        let mut total = 0.0;
        for i3 in 0..n3 {
            let x3 = x3_lo + h3 * i3 as f64;
            let w3 = if i3 == 0 || i3 == n3 - 1 { 0.5 } else { 1.0 };
            for i2 in 0..n2 {
                let x2 = self.x2_range.lo + h2 * i2 as f64;
                let w2 = if i2 == 0 || i2 == n2 - 1 { 0.5 } else { 1.0 };
                let p2 = self.psi_x2(x2, x3, t);
                let p3 = self.psi_x3(x2, x3, t);
                let area_el = (1.0 + p2 * p2 + p3 * p3).sqrt();
                total += w2 * w3 * f([self.psi(x2, x3, t), x2, x3]) * area_el;
            }
        }
        total * h2 * h3
    }
}
