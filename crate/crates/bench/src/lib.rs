//! Shared fixtures for the benchmarks.

use std::f64::consts::PI;

use kslab_core::{circle_grid, torus2d_grid, IndexSet, PointCloudSpace, ScalarField};

pub fn circle(n: usize) -> PointCloudSpace {
    circle_grid(n).expect("valid grid size")
}

pub fn torus(side: usize) -> PointCloudSpace {
    torus2d_grid(side).expect("valid grid size")
}

pub fn sine(space: &PointCloudSpace) -> ScalarField {
    ScalarField::from_fn(space, |x| (2.0 * PI * x[0]).sin()).expect("finite values")
}

/// Two antipodal arcs of width `0.1` on the circle: ids in `[0, 0.1) ∪ [0.5, 0.6)`.
pub fn two_arc_boundary(space: &PointCloudSpace) -> (IndexSet, Vec<f64>) {
    let set = IndexSet::from_predicate(space.len(), |i| {
        let t = space.coords(i)[0];
        t < 0.1 || (0.5..0.6).contains(&t)
    });
    let values = set.iter().map(|i| if space.coords(i)[0] < 0.5 { 0.0 } else { 1.0 }).collect();
    (set, values)
}
