//! Shared scenario builders for the benchmark targets.

use tubelab_core::flow::{Box3, VelocityField};
use tubelab_core::levelset::{init_levelset, GridSpec, LevelSetState};
use tubelab_core::vec3::Vec3;

pub fn unit_box() -> Box3 {
    Box3::from_bounds([[-1.0, 1.0], [-1.0, 1.0], [0.0, 1.0]]).unwrap()
}

pub fn cylinder(r: f64) -> impl Fn(Vec3) -> f64 {
    move |p| p[0] * p[0] + p[1] * p[1] - r * r
}

/// Strained-cylinder state on an `n x n x n/2` grid with its driving field.
pub fn strain_scenario(n: usize) -> (LevelSetState, VelocityField) {
    let grid = GridSpec::new(n, n, (n / 2).max(8)).unwrap();
    let state = init_levelset(cylinder(0.3), grid, unit_box()).unwrap();
    (state, VelocityField::axial_strain(0.5))
}

/// A CFL-safe step size for the scenario.
pub fn stable_dt(state: &LevelSetState) -> f64 {
    let h = state.grid.spacing(&state.bx);
    let min_h = h[0].min(h[1]).min(h[2]);
    0.9 * 0.4 * min_h / 1.224_744_871_391_589
}
