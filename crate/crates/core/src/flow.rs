//! Divergence-free velocity fields on a box, their sup-norm sampling, and the
//! cumulative speed envelope that drives the axial window construction.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

/// Closed interval with strictly positive length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!(
                "interval [{lo}, {hi}] must be finite with positive length"
            )));
        }
        Ok(Self { lo, hi })
    }

    #[inline]
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        // Tolerate roundoff at the endpoints: interpolated contour vertices
        // can land a few ulps outside the box.
        let slack = 1e-9 * self.len();
        x >= self.lo - slack && x <= self.hi + slack
    }

    #[inline]
    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// The computational box `Q = I1 x I2 x I3`. The third interval's endpoints
/// are the axial bounds the window construction works against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3 {
    pub i1: Interval,
    pub i2: Interval,
    pub i3: Interval,
}

impl Box3 {
    pub fn new(i1: Interval, i2: Interval, i3: Interval) -> Self {
        Self { i1, i2, i3 }
    }

    pub fn from_bounds(bounds: [[f64; 2]; 3]) -> Result<Self> {
        Ok(Self {
            i1: Interval::new(bounds[0][0], bounds[0][1])?,
            i2: Interval::new(bounds[1][0], bounds[1][1])?,
            i3: Interval::new(bounds[2][0], bounds[2][1])?,
        })
    }

    #[inline]
    pub fn axis(&self, k: usize) -> Interval {
        match k {
            0 => self.i1,
            1 => self.i2,
            _ => self.i3,
        }
    }

    #[inline]
    pub fn contains(&self, p: Vec3) -> bool {
        self.i1.contains(p[0]) && self.i2.contains(p[1]) && self.i3.contains(p[2])
    }

    pub fn check_contains(&self, p: Vec3) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutsideDomain(p[0], p[1], p[2]))
        }
    }
}

/// Time-dependent vector potential with an analytic Jacobian, used to build
/// exactly divergence-free fields via the curl.
pub trait Potential: Send + Sync {
    fn eval(&self, p: Vec3, t: f64) -> Vec3;
    /// `jac[i][j] = d A_i / d x_j`.
    fn jacobian(&self, p: Vec3, t: f64) -> [[f64; 3]; 3];
}

/// A vector potential given by closures (handy in tests and custom scenarios).
pub struct ClosurePotential<E, J> {
    pub eval: E,
    pub jacobian: J,
}

impl<E, J> Potential for ClosurePotential<E, J>
where
    E: Fn(Vec3, f64) -> Vec3 + Send + Sync,
    J: Fn(Vec3, f64) -> [[f64; 3]; 3] + Send + Sync,
{
    fn eval(&self, p: Vec3, t: f64) -> Vec3 {
        (self.eval)(p, t)
    }
    fn jacobian(&self, p: Vec3, t: f64) -> [[f64; 3]; 3] {
        (self.jacobian)(p, t)
    }
}

#[derive(Clone)]
enum FieldKind {
    Zero,
    Uniform(Vec3),
    /// `u = (-alpha x1, -alpha x2, 2 alpha x3)`: incompressible axial stretching.
    AxialStrain {
        alpha: f64,
    },
    /// `u = omega (-x2, x1, 0)`: rigid rotation about the x3 axis.
    RigidRotation {
        omega: f64,
    },
    /// Arnold-Beltrami-Childress flow.
    Abc {
        a: f64,
        b: f64,
        c: f64,
    },
    Curl(Arc<dyn Potential>),
}

impl fmt::Debug for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldKind::Zero => write!(f, "Zero"),
            FieldKind::Uniform(c) => write!(f, "Uniform({c:?})"),
            FieldKind::AxialStrain { alpha } => write!(f, "AxialStrain(alpha={alpha})"),
            FieldKind::RigidRotation { omega } => write!(f, "RigidRotation(omega={omega})"),
            FieldKind::Abc { a, b, c } => write!(f, "Abc({a}, {b}, {c})"),
            FieldKind::Curl(_) => write!(f, "Curl(<potential>)"),
        }
    }
}

/// An evaluable, deterministic velocity field `u(x, t)`. All builtin fields
/// are divergence-free in closed form; curl-of-potential fields are
/// divergence-free by construction.
#[derive(Debug, Clone)]
pub struct VelocityField {
    kind: FieldKind,
}

pub const BUILTIN_FIELD_NAMES: [&str; 5] =
    ["zero", "uniform", "axial-strain", "rigid-rotation", "abc"];

fn take_param(
    params: &BTreeMap<String, f64>,
    used: &mut Vec<&'static str>,
    key: &'static str,
    default: f64,
) -> f64 {
    used.push(key);
    params.get(key).copied().unwrap_or(default)
}

/// Construct a named builtin field. Unknown names and unknown parameter keys
/// are configuration errors; omitted parameters take the documented defaults.
pub fn builtin_field(name: &str, params: &BTreeMap<String, f64>) -> Result<VelocityField> {
    let mut used: Vec<&'static str> = Vec::new();
    let kind = match name {
        "zero" => FieldKind::Zero,
        "uniform" => FieldKind::Uniform([
            take_param(params, &mut used, "u1", 0.0),
            take_param(params, &mut used, "u2", 0.0),
            take_param(params, &mut used, "u3", 0.0),
        ]),
        "axial-strain" => FieldKind::AxialStrain {
            alpha: take_param(params, &mut used, "alpha", 1.0),
        },
        "rigid-rotation" => FieldKind::RigidRotation {
            omega: take_param(params, &mut used, "omega", 1.0),
        },
        "abc" => FieldKind::Abc {
            a: take_param(params, &mut used, "A", 1.0),
            b: take_param(params, &mut used, "B", 1.0),
            c: take_param(params, &mut used, "C", 1.0),
        },
        other => {
            return Err(Error::Config(format!(
                "unknown builtin field `{other}`; valid names: {}",
                BUILTIN_FIELD_NAMES.join(", ")
            )))
        }
    };
    for key in params.keys() {
        if !used.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "unknown parameter `{key}` for field `{name}` (accepted: {})",
                if used.is_empty() {
                    "none".to_string()
                } else {
                    used.join(", ")
                }
            )));
        }
    }
    Ok(VelocityField { kind })
}

/// Wrap a vector potential as the field `u = curl A`, divergence-free by
/// construction.
pub fn curl_of_potential(potential: Arc<dyn Potential>) -> VelocityField {
    VelocityField {
        kind: FieldKind::Curl(potential),
    }
}

impl VelocityField {
    pub fn zero() -> Self {
        VelocityField {
            kind: FieldKind::Zero,
        }
    }

    pub fn uniform(c: Vec3) -> Self {
        VelocityField {
            kind: FieldKind::Uniform(c),
        }
    }

    pub fn axial_strain(alpha: f64) -> Self {
        VelocityField {
            kind: FieldKind::AxialStrain { alpha },
        }
    }

    pub fn rigid_rotation(omega: f64) -> Self {
        VelocityField {
            kind: FieldKind::RigidRotation { omega },
        }
    }

    pub fn abc(a: f64, b: f64, c: f64) -> Self {
        VelocityField {
            kind: FieldKind::Abc { a, b, c },
        }
    }

    /// Evaluate `u(x, t)`. The builtin formulas are entire functions, so this
    /// never fails; domain enforcement lives in [`VelocityField::eval_in`].
    #[inline]
    pub fn eval(&self, p: Vec3, t: f64) -> Vec3 {
        match &self.kind {
            FieldKind::Zero => [0.0, 0.0, 0.0],
            FieldKind::Uniform(c) => *c,
            FieldKind::AxialStrain { alpha } => [-alpha * p[0], -alpha * p[1], 2.0 * alpha * p[2]],
            FieldKind::RigidRotation { omega } => [-omega * p[1], omega * p[0], 0.0],
            FieldKind::Abc { a, b, c } => [
                a * p[2].sin() + c * p[1].cos(),
                b * p[0].sin() + a * p[2].cos(),
                c * p[1].sin() + b * p[0].cos(),
            ],
            FieldKind::Curl(pot) => {
                let j = pot.jacobian(p, t);
                // curl A = (dA3/dx2 - dA2/dx3, dA1/dx3 - dA3/dx1, dA2/dx1 - dA1/dx2)
                [j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]]
            }
        }
    }

    /// Evaluate with the domain check of the field contract: the point must
    /// lie in the box.
    pub fn eval_in(&self, bx: &Box3, p: Vec3, t: f64) -> Result<Vec3> {
        bx.check_contains(p)?;
        Ok(self.eval(p, t))
    }
}

/// Maximum of `|u(., t)|` over a uniform sample grid of the box (endpoints
/// included), refined once at eight-fold density in the two-cell neighborhood
/// of the coarse argmax. Non-decreasing when `n` is refined to `2n - 1`.
pub fn sup_speed(field: &VelocityField, bx: &Box3, t: f64, n: usize) -> f64 {
    assert!(n >= 2, "sup_speed needs at least 2 sample points per axis");
    let coords = |iv: Interval| -> Vec<f64> {
        (0..n)
            .map(|i| iv.lo + iv.len() * i as f64 / (n - 1) as f64)
            .collect()
    };
    let xs = coords(bx.i1);
    let ys = coords(bx.i2);
    let zs = coords(bx.i3);

    let best = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut local = (0.0_f64, [0usize; 3]);
            for j in 0..n {
                for i in 0..n {
                    let s = vec3::norm(field.eval([xs[i], ys[j], zs[k]], t));
                    if s > local.0 {
                        local = (s, [i, j, k]);
                    }
                }
            }
            local
        })
        .reduce(|| (0.0, [0; 3]), |a, b| if a.0 >= b.0 { a } else { b });

    let (mut sup, argmax) = best;

    // One refinement pass: 8x density over the coarse cells around the argmax.
    let h = [
        bx.i1.len() / (n - 1) as f64,
        bx.i2.len() / (n - 1) as f64,
        bx.i3.len() / (n - 1) as f64,
    ];
    let centers = [xs[argmax[0]], ys[argmax[1]], zs[argmax[2]]];
    let m = 17; // 8x density across the two-cell span
    for kk in 0..m {
        for jj in 0..m {
            for ii in 0..m {
                let p = [
                    bx.i1
                        .clamp(centers[0] + h[0] * (ii as f64 / (m - 1) as f64 * 2.0 - 1.0)),
                    bx.i2
                        .clamp(centers[1] + h[1] * (jj as f64 / (m - 1) as f64 * 2.0 - 1.0)),
                    bx.i3
                        .clamp(centers[2] + h[2] * (kk as f64 / (m - 1) as f64 * 2.0 - 1.0)),
                ];
                let s = vec3::norm(field.eval(p, t));
                if s > sup {
                    sup = s;
                }
            }
        }
    }
    sup
}

pub const DEFAULT_SUP_SAMPLING: usize = 64;

/// Per-time sup speeds over the box together with the trapezoid tail
/// integrals from each grid time to the horizon.
#[derive(Debug, Clone)]
pub struct SpeedEnvelope {
    pub times: Vec<f64>,
    pub sup_speeds: Vec<f64>,
    pub cumulative_tail: Vec<f64>,
}

/// Sample the sup speed on the given ascending time grid covering `[0, T]`
/// and accumulate the trapezoid tails. `tail[last]` is exactly zero and the
/// tails are non-increasing as stored.
pub fn speed_envelope(
    field: &VelocityField,
    bx: &Box3,
    horizon: f64,
    times: &[f64],
    sampling: usize,
) -> Result<SpeedEnvelope> {
    if times.len() < 2 {
        return Err(Error::Precondition(
            "speed envelope needs at least two time samples".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(
            "speed envelope time grid must be strictly ascending".into(),
        ));
    }
    let t0 = times[0];
    let tn = *times.last().unwrap();
    let slack = 1e-9 * horizon.max(1.0);
    if t0 > slack || (tn - horizon).abs() > slack {
        return Err(Error::Precondition(format!(
            "time grid [{t0}, {tn}] must cover [0, {horizon}]"
        )));
    }

    let sup_speeds: Vec<f64> = times
        .par_iter()
        .map(|&t| sup_speed(field, bx, t, sampling))
        .collect();

    let mut cumulative_tail = vec![0.0; times.len()];
    for i in (0..times.len() - 1).rev() {
        let dt = times[i + 1] - times[i];
        cumulative_tail[i] =
            cumulative_tail[i + 1] + 0.5 * (sup_speeds[i] + sup_speeds[i + 1]) * dt;
    }

    Ok(SpeedEnvelope {
        times: times.to_vec(),
        sup_speeds,
        cumulative_tail,
    })
}

impl SpeedEnvelope {
    /// Tail integral at time `t`, linearly interpolated between grid times
    /// (exact at grid times by construction).
    pub fn tail(&self, t: f64) -> f64 {
        let times = &self.times;
        if t <= times[0] {
            return self.cumulative_tail[0];
        }
        if t >= *times.last().unwrap() {
            return *self.cumulative_tail.last().unwrap();
        }
        let idx = match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.cumulative_tail[i],
            Err(i) => i - 1,
        };
        let w = (t - times[idx]) / (times[idx + 1] - times[idx]);
        (1.0 - w) * self.cumulative_tail[idx] + w * self.cumulative_tail[idx + 1]
    }

    /// Sup speed at a grid time index.
    pub fn sup_at(&self, idx: usize) -> f64 {
        self.sup_speeds[idx]
    }

    /// Sup speed at time `t`, linearly interpolated between grid times.
    pub fn sup(&self, t: f64) -> f64 {
        let times = &self.times;
        if t <= times[0] {
            return self.sup_speeds[0];
        }
        if t >= *times.last().unwrap() {
            return *self.sup_speeds.last().unwrap();
        }
        let idx = match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.sup_speeds[i],
            Err(i) => i - 1,
        };
        let w = (t - times[idx]) / (times[idx + 1] - times[idx]);
        (1.0 - w) * self.sup_speeds[idx] + w * self.sup_speeds[idx + 1]
    }

    /// Return a copy with every sup speed and tail multiplied by `factor`.
    /// A factor below one deliberately under-reports the flow speed; the
    /// theorem harness uses this to demonstrate hypothesis-failure detection.
    pub fn scaled(&self, factor: f64) -> SpeedEnvelope {
        SpeedEnvelope {
            times: self.times.clone(),
            sup_speeds: self.sup_speeds.iter().map(|s| s * factor).collect(),
            cumulative_tail: self.cumulative_tail.iter().map(|s| s * factor).collect(),
        }
    }
}

/// Central-difference divergence of a field at a point, spacing `h`.
/// Second-order; used as an independent check on the analytic constructions.
pub fn divergence_central(field: &VelocityField, p: Vec3, t: f64, h: f64) -> f64 {
    let mut div = 0.0;
    for k in 0..3 {
        let mut hi = p;
        let mut lo = p;
        hi[k] += h;
        lo[k] -= h;
        div += (field.eval(hi, t)[k] - field.eval(lo, t)[k]) / (2.0 * h);
    }
    div
}

/// Fourth-order central-difference divergence, spacing `h`.
pub fn divergence_central4(field: &VelocityField, p: Vec3, t: f64, h: f64) -> f64 {
    let mut div = 0.0;
    for k in 0..3 {
        let mut p1 = p;
        let mut p2 = p;
        let mut m1 = p;
        let mut m2 = p;
        p1[k] += h;
        p2[k] += 2.0 * h;
        m1[k] -= h;
        m2[k] -= 2.0 * h;
        div += (-field.eval(p2, t)[k] + 8.0 * field.eval(p1, t)[k] - 8.0 * field.eval(m1, t)[k]
            + field.eval(m2, t)[k])
            / (12.0 * h);
    }
    div
}
