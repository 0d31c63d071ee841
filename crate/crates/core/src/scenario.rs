//! Scenario configuration: TOML schema with strict validation, plus the
//! registry of closed-form level sets that oracle-capable scenarios expose.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::flow::{builtin_field, curl_of_potential, Box3, ClosurePotential, VelocityField};
use crate::graph::{GraphParams, GraphTube};
use crate::levelset::{sample_levelset, GridSpec, LevelSetState};
use crate::vec3::Vec3;

pub const DEFAULT_GRID: (usize, usize, usize) = (96, 96, 64);
pub const DEFAULT_CFL: f64 = 0.4;
pub const DEFAULT_MARGIN: f64 = 0.25;
pub const DEFAULT_EPS_SIGMA: f64 = 1e-6;
pub const DEFAULT_TOL_MONO: f64 = 1e-4;
pub const DEFAULT_TOL_FINAL: f64 = 1e-2;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    horizon: f64,
    #[serde(default = "default_cfl")]
    cfl: f64,
    #[serde(rename = "box")]
    bx: RawBox,
    #[serde(default)]
    grid: RawGrid,
    field: RawField,
    initial_tube: RawTube,
    #[serde(default)]
    window: RawWindow,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    outputs: RawOutputs,
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    x1: [f64; 2],
    x2: [f64; 2],
    x3: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n1: usize,
    n2: usize,
    n3: usize,
}

impl Default for RawGrid {
    fn default() -> Self {
        Self {
            n1: DEFAULT_GRID.0,
            n2: DEFAULT_GRID.1,
            n3: DEFAULT_GRID.2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawField {
    name: String,
    #[serde(default)]
    potential: Option<String>,
    #[serde(flatten)]
    params: BTreeMap<String, toml::Value>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawTube {
    kind: String,
    #[serde(flatten)]
    params: BTreeMap<String, toml::Value>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindow {
    #[serde(default = "default_margin")]
    margin: f64,
    #[serde(default = "default_scale")]
    envelope_scale: f64,
}

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}
fn default_scale() -> f64 {
    1.0
}

impl Default for RawWindow {
    fn default() -> Self {
        Self {
            margin: DEFAULT_MARGIN,
            envelope_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    #[serde(default = "default_eps_grad")]
    eps_grad: f64,
    #[serde(default = "default_eps_sigma")]
    eps_sigma: f64,
    #[serde(default = "default_tol_mono")]
    tol_mono: f64,
    #[serde(default = "default_tol_final")]
    tol_final: f64,
}

fn default_eps_grad() -> f64 {
    crate::levelset::DEFAULT_EPS_GRAD
}
fn default_eps_sigma() -> f64 {
    DEFAULT_EPS_SIGMA
}
fn default_tol_mono() -> f64 {
    DEFAULT_TOL_MONO
}
fn default_tol_final() -> f64 {
    DEFAULT_TOL_FINAL
}

impl Default for RawTolerances {
    fn default() -> Self {
        Self {
            eps_grad: default_eps_grad(),
            eps_sigma: default_eps_sigma(),
            tol_mono: default_tol_mono(),
            tol_final: default_tol_final(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    #[serde(default = "default_outdir")]
    directory: PathBuf,
    #[serde(default)]
    snapshot_cadence: usize,
    #[serde(default)]
    vtk: bool,
    #[serde(default)]
    contour_slices: Vec<f64>,
}

fn default_outdir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RawOutputs {
    fn default() -> Self {
        Self {
            directory: default_outdir(),
            snapshot_cadence: 0,
            vtk: false,
            contour_slices: Vec::new(),
        }
    }
}

/// Velocity-field declaration: builtin name plus numeric parameters, or a
/// named vector potential taken through the curl.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    pub name: String,
    pub potential: Option<String>,
    pub params: BTreeMap<String, f64>,
}

/// Initial-tube declaration: a registered level-set expression or a graph
/// sheet, with numeric parameters.
#[derive(Debug, Clone)]
pub struct TubeSpec {
    pub kind: String,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub eps_grad: f64,
    pub eps_sigma: f64,
    pub tol_mono: f64,
    pub tol_final: f64,
}

#[derive(Debug, Clone)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub snapshot_cadence: usize,
    pub vtk: bool,
    /// Axial coordinates whose cross-section contours are dumped as CSV at
    /// every snapshot step.
    pub contour_slices: Vec<f64>,
}

/// Fully validated scenario configuration.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub bx: Box3,
    pub grid: GridSpec,
    pub field: FieldSpec,
    pub initial_tube: TubeSpec,
    pub horizon: f64,
    pub cfl: f64,
    pub margin: f64,
    pub envelope_scale: f64,
    pub tolerances: Tolerances,
    pub outputs: OutputSpec,
}

fn numeric_params(
    table: &str,
    raw: &BTreeMap<String, toml::Value>,
) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (key, value) in raw {
        let num = match value {
            toml::Value::Float(f) => *f,
            toml::Value::Integer(i) => *i as f64,
            other => {
                return Err(Error::Config(format!(
                    "key `{table}.{key}` must be numeric, got {other}"
                )))
            }
        };
        out.insert(key.clone(), num);
    }
    Ok(out)
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "`{name}` must be positive, got {value}"
        )))
    }
}

pub const TUBE_KINDS: [&str; 2] = ["cylinder", "graph"];
pub const POTENTIAL_NAMES: [&str; 2] = ["rotation", "shear"];

const CYLINDER_PARAMS: [&str; 3] = ["r0", "cx", "cy"];
const GRAPH_PARAMS: [&str; 7] = [
    "offset",
    "drift",
    "slope_x2",
    "slope_x3",
    "quad_x3",
    "sine_amp",
    "sine_freq",
];

fn check_param_names(table: &str, params: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    for key in params.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "unknown parameter `{table}.{key}` (accepted: {})",
                allowed.join(", ")
            )));
        }
    }
    Ok(())
}

/// Parse and validate a scenario from TOML text. Unknown keys anywhere are
/// rejected, every reported problem names the offending key.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("malformed scenario file: {e}")))?;

    let bx = Box3::from_bounds([raw.bx.x1, raw.bx.x2, raw.bx.x3])?;
    let grid = GridSpec::new(raw.grid.n1, raw.grid.n2, raw.grid.n3)?;

    positive("horizon", raw.horizon)?;
    if !(raw.cfl > 0.0 && raw.cfl < 1.0) {
        return Err(Error::Config(format!(
            "`cfl` must lie in (0, 1), got {}",
            raw.cfl
        )));
    }
    if !(raw.window.margin > 0.0 && raw.window.margin <= 1.0) {
        return Err(Error::Config(format!(
            "`window.margin` must lie in (0, 1], got {}",
            raw.window.margin
        )));
    }
    positive("window.envelope_scale", raw.window.envelope_scale)?;
    positive("tolerances.eps_grad", raw.tolerances.eps_grad)?;
    positive("tolerances.eps_sigma", raw.tolerances.eps_sigma)?;
    positive("tolerances.tol_mono", raw.tolerances.tol_mono)?;
    positive("tolerances.tol_final", raw.tolerances.tol_final)?;

    let field = FieldSpec {
        name: raw.field.name.clone(),
        potential: raw.field.potential.clone(),
        params: numeric_params("field", &raw.field.params)?,
    };
    let initial_tube = TubeSpec {
        kind: raw.initial_tube.kind.clone(),
        params: numeric_params("initial_tube", &raw.initial_tube.params)?,
    };

    let config = ScenarioConfig {
        bx,
        grid,
        field,
        initial_tube,
        horizon: raw.horizon,
        cfl: raw.cfl,
        margin: raw.window.margin,
        envelope_scale: raw.window.envelope_scale,
        tolerances: Tolerances {
            eps_grad: raw.tolerances.eps_grad,
            eps_sigma: raw.tolerances.eps_sigma,
            tol_mono: raw.tolerances.tol_mono,
            tol_final: raw.tolerances.tol_final,
        },
        outputs: OutputSpec {
            directory: raw.outputs.directory,
            snapshot_cadence: raw.outputs.snapshot_cadence,
            vtk: raw.outputs.vtk,
            contour_slices: raw.outputs.contour_slices,
        },
    };
    for (idx, &x3) in config.outputs.contour_slices.iter().enumerate() {
        if !config.bx.i3.contains(x3) {
            return Err(Error::Config(format!(
                "`outputs.contour_slices[{idx}]` = {x3} lies outside the axial interval"
            )));
        }
    }

    // Fail fast on bad field and tube declarations.
    config.velocity_field()?;
    config.tube_kind_checked()?;
    Ok(config)
}

/// Parse and validate a scenario file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

impl ScenarioConfig {
    /// Instantiate the declared velocity field.
    pub fn velocity_field(&self) -> Result<VelocityField> {
        if self.field.name == "curl-of-potential" {
            let name = self.field.potential.as_deref().ok_or_else(|| {
                Error::Config("field `curl-of-potential` needs a `field.potential` name".into())
            })?;
            return named_potential_field(name, &self.field.params);
        }
        if self.field.potential.is_some() {
            return Err(Error::Config(
                "`field.potential` is only valid with name = \"curl-of-potential\"".into(),
            ));
        }
        builtin_field(&self.field.name, &self.field.params)
    }

    fn tube_kind_checked(&self) -> Result<&str> {
        match self.initial_tube.kind.as_str() {
            "cylinder" => {
                check_param_names("initial_tube", &self.initial_tube.params, &CYLINDER_PARAMS)?;
                Ok("cylinder")
            }
            "graph" => {
                check_param_names("initial_tube", &self.initial_tube.params, &GRAPH_PARAMS)?;
                Ok("graph")
            }
            other => Err(Error::Config(format!(
                "unknown initial_tube kind `{other}`; valid kinds: {}",
                TUBE_KINDS.join(", ")
            ))),
        }
    }

    fn tube_param(&self, key: &str, default: f64) -> f64 {
        self.initial_tube
            .params
            .get(key)
            .copied()
            .unwrap_or(default)
    }

    /// The initial level-set function declared by `initial_tube`.
    pub fn initial_theta(&self) -> Result<impl Fn(Vec3) -> f64 + Copy> {
        match self.tube_kind_checked()? {
            "cylinder" => {
                let r0 = self.tube_param("r0", 0.25);
                let cx = self.tube_param("cx", 0.0);
                let cy = self.tube_param("cy", 0.0);
                positive("initial_tube.r0", r0)?;
                Ok(TubeShape::Cylinder { r0, cx, cy })
            }
            _ => {
                let tube = self.graph_tube()?;
                Ok(TubeShape::Graph(tube.params))
            }
        }
        .map(|shape| move |p: Vec3| shape.eval(p))
    }

    /// The graph sheet declared by `initial_tube` (graph scenarios only).
    pub fn graph_tube(&self) -> Result<GraphTube> {
        if self.initial_tube.kind != "graph" {
            return Err(Error::Config(format!(
                "scenario's initial_tube is `{}`, not `graph`",
                self.initial_tube.kind
            )));
        }
        check_param_names("initial_tube", &self.initial_tube.params, &GRAPH_PARAMS)?;
        let params = GraphParams {
            offset: self.tube_param("offset", 0.0),
            drift: self.tube_param("drift", 0.0),
            slope_x2: self.tube_param("slope_x2", 0.0),
            slope_x3: self.tube_param("slope_x3", 0.0),
            quad_x3: self.tube_param("quad_x3", 0.0),
            sine_amp: self.tube_param("sine_amp", 0.0),
            sine_freq: self.tube_param("sine_freq", 1.0),
        };
        let time_range = crate::flow::Interval::new(-1.0, self.horizon.max(1.0) + 1.0)?;
        Ok(GraphTube::new(params, self.bx.i2, self.bx.i3, time_range))
    }

    /// Closed-form evolution of this scenario, when one is registered for
    /// the (field, initial tube) pair.
    pub fn exact_scenario(&self) -> Result<ExactScenario> {
        let kind = self.tube_kind_checked()?;
        if kind == "graph" {
            if self.field.name != "zero" {
                return Err(Error::Config(
                    "graph scenarios carry their own motion; use field name = \"zero\"".into(),
                ));
            }
            return Ok(ExactScenario::Graph(self.graph_tube()?));
        }
        let r0 = self.tube_param("r0", 0.25);
        let cx = self.tube_param("cx", 0.0);
        let cy = self.tube_param("cy", 0.0);
        let centered = cx == 0.0 && cy == 0.0;
        match self.field.name.as_str() {
            "zero" => Ok(ExactScenario::StaticCylinder { r0, cx, cy }),
            "uniform" => {
                let u = [
                    self.field.params.get("u1").copied().unwrap_or(0.0),
                    self.field.params.get("u2").copied().unwrap_or(0.0),
                    self.field.params.get("u3").copied().unwrap_or(0.0),
                ];
                Ok(ExactScenario::TranslatingCylinder { r0, cx, cy, u })
            }
            "axial-strain" if centered => Ok(ExactScenario::AxialStrainCylinder {
                alpha: self.field.params.get("alpha").copied().unwrap_or(1.0),
                r0,
            }),
            "rigid-rotation" if centered => Ok(ExactScenario::RotatingCylinder { r0 }),
            other => Err(Error::Config(format!(
                "no closed-form level set registered for field `{other}` with this tube \
                 (oracle scenarios: zero/uniform/axial-strain/rigid-rotation on a centered \
                 cylinder, or a graph sheet with the zero field)"
            ))),
        }
    }
}

#[derive(Clone, Copy)]
enum TubeShape {
    Cylinder { r0: f64, cx: f64, cy: f64 },
    Graph(GraphParams),
}

impl TubeShape {
    fn eval(&self, p: Vec3) -> f64 {
        match *self {
            TubeShape::Cylinder { r0, cx, cy } => {
                (p[0] - cx) * (p[0] - cx) + (p[1] - cy) * (p[1] - cy) - r0 * r0
            }
            TubeShape::Graph(params) => p[0] - params.psi(p[1], p[2], 0.0),
        }
    }
}

fn named_potential_field(name: &str, params: &BTreeMap<String, f64>) -> Result<VelocityField> {
    match name {
        // A = (0, 0, -omega (x1^2 + x2^2) / 2) => u = omega (-x2, x1, 0)
        "rotation" => {
            check_param_names("field", params, &["omega"])?;
            let omega = params.get("omega").copied().unwrap_or(1.0);
            Ok(curl_of_potential(Arc::new(ClosurePotential {
                eval: move |p: Vec3, _t: f64| {
                    [0.0, 0.0, -omega * (p[0] * p[0] + p[1] * p[1]) / 2.0]
                },
                jacobian: move |p: Vec3, _t: f64| {
                    [[0.0; 3], [0.0; 3], [-omega * p[0], -omega * p[1], 0.0]]
                },
            })))
        }
        // A = (0, c x1 x3, 0) => u = (-c x1, 0, c x3)
        "shear" => {
            check_param_names("field", params, &["c"])?;
            let c = params.get("c").copied().unwrap_or(1.0);
            Ok(curl_of_potential(Arc::new(ClosurePotential {
                eval: move |p: Vec3, _t: f64| [0.0, c * p[0] * p[2], 0.0],
                jacobian: move |p: Vec3, _t: f64| [[0.0; 3], [c * p[2], 0.0, c * p[0]], [0.0; 3]],
            })))
        }
        other => Err(Error::Config(format!(
            "unknown potential `{other}`; valid potentials: {}",
            POTENTIAL_NAMES.join(", ")
        ))),
    }
}

/// Scenarios whose level set is known in closed form at every time. These
/// bypass transport discretization error and anchor the identity checks.
#[derive(Debug, Clone)]
pub enum ExactScenario {
    StaticCylinder {
        r0: f64,
        cx: f64,
        cy: f64,
    },
    TranslatingCylinder {
        r0: f64,
        cx: f64,
        cy: f64,
        u: Vec3,
    },
    /// Centered cylinder under `u = (-a x1, -a x2, 2 a x3)`: the radius
    /// contracts to `r0 exp(-a t)` along characteristics.
    AxialStrainCylinder {
        alpha: f64,
        r0: f64,
    },
    /// Centered cylinder under rigid rotation: invariant in time.
    RotatingCylinder {
        r0: f64,
    },
    /// Self-prescribed moving sheet.
    Graph(GraphTube),
}

impl ExactScenario {
    /// The level-set value at a point and time.
    pub fn theta(&self, p: Vec3, t: f64) -> f64 {
        match self {
            ExactScenario::StaticCylinder { r0, cx, cy } => {
                (p[0] - cx) * (p[0] - cx) + (p[1] - cy) * (p[1] - cy) - r0 * r0
            }
            ExactScenario::TranslatingCylinder { r0, cx, cy, u } => {
                let x = p[0] - u[0] * t - cx;
                let y = p[1] - u[1] * t - cy;
                x * x + y * y - r0 * r0
            }
            ExactScenario::AxialStrainCylinder { alpha, r0 } => {
                (p[0] * p[0] + p[1] * p[1]) * (2.0 * alpha * t).exp() - r0 * r0
            }
            ExactScenario::RotatingCylinder { r0 } => p[0] * p[0] + p[1] * p[1] - r0 * r0,
            ExactScenario::Graph(tube) => p[0] - tube.psi(p[1], p[2], t),
        }
    }

    /// Sample the closed form onto a grid at time `t`.
    pub fn state(&self, grid: GridSpec, bx: Box3, t: f64) -> Result<LevelSetState> {
        sample_levelset(|p, tt| self.theta(p, tt), grid, bx, t)
    }

    /// The velocity field the scenario moves with.
    pub fn velocity(&self) -> VelocityField {
        match self {
            ExactScenario::StaticCylinder { .. } | ExactScenario::Graph(_) => VelocityField::zero(),
            ExactScenario::TranslatingCylinder { u, .. } => VelocityField::uniform(*u),
            ExactScenario::AxialStrainCylinder { alpha, .. } => VelocityField::axial_strain(*alpha),
            ExactScenario::RotatingCylinder { .. } => VelocityField::rigid_rotation(1.0),
        }
    }
}

/// Sample a registered closed-form scenario at time `t` (the discretization
/// bypass used by oracle paths).
pub fn exact_levelset(
    scenario: &ExactScenario,
    t: f64,
    grid: GridSpec,
    bx: Box3,
) -> Result<LevelSetState> {
    scenario.state(grid, bx, t)
}
