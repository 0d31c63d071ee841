// Index loops that mirror the grid arithmetic read better than iterator
// chains in the stencil code.
#![allow(clippy::needless_range_loop)]

//! Numerical laboratory for level-set tubes carried by incompressible flows:
//! divergence-free velocity fields with sup-speed envelopes, WENO transport
//! of a level-set function, marching-squares cross-sections with surface
//! sampling, closed-form graph-sheet oracles, slice-calculus identity checks,
//! and a shrinking-window experiment that verifies tube volume cannot collapse
//! while the flow's cumulative speed stays finite.

pub mod contour;
pub mod error;
pub mod flow;
pub mod graph;
pub mod levelset;
pub mod scenario;
pub mod surface;
pub mod theorem;
pub mod transport;
pub mod vec3;

pub use contour::{boundary_length, slice_area, slice_contour, ContourLoop, SliceContour};
pub use error::{Error, Result};
pub use flow::{
    builtin_field, curl_of_potential, speed_envelope, sup_speed, Box3, Interval, Potential,
    SpeedEnvelope, VelocityField,
};
pub use graph::{GraphParams, GraphTube};
pub use levelset::{
    init_levelset, sample_levelset, GridSpec, LevelSetState, ValidityReport, DEFAULT_EPS_GRAD,
};
pub use scenario::{exact_levelset, parse_config, parse_config_str, ExactScenario, ScenarioConfig};
pub use surface::{
    boundary_integral, check_identity_14, region_integral_at, region_integral_at_refined,
    surface_integral_sliced, surface_integral_sliced_with, surface_integral_weighted, tube_volume,
    GraphCurves, GraphSampler, GridSampler, IdentityReport, Probe, SliceCurves, SurfaceSample,
    SurfaceSampler,
};
pub use theorem::{
    divergence_flux_residual, endpoint_speed_check, pick_t0, run_noncollapse_experiment,
    volume_balance_residual, window_endpoints, write_summary_json, write_timeseries_csv,
    EndpointSpeedCheck, ExperimentOutcome, ExperimentSummary, FluxBalance, TimeSeriesRecord,
    TubeWindow, Verdict,
};
pub use transport::{advect, max_grid_speed, DEFAULT_CFL};
