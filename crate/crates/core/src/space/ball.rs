use rayon::prelude::*;

use super::PointCloudSpace;
use crate::error::Result;
use crate::sum::CompensatedSum;

/// Fixed-radius ball enumeration at one scale `r`.
///
/// Implementations must visit neighbours in a deterministic order so that all
/// reductions built on top are reproducible.
pub trait BallQuery: Sync {
    fn space(&self) -> &PointCloudSpace;

    fn radius(&self) -> f64;

    /// Calls `f(j)` for every `j ∈ B(x_i, r)`.
    fn visit<F: FnMut(usize)>(&self, i: usize, f: F);

    /// μ(B(x_i, r)).
    fn ball_mass(&self, i: usize) -> f64 {
        let space = self.space();
        let mut acc = CompensatedSum::new();
        self.visit(i, |j| acc.add(space.weight(j)));
        acc.value()
    }

    fn ball_masses(&self) -> Vec<f64> {
        (0..self.space().len()).into_par_iter().map(|i| self.ball_mass(i)).collect()
    }
}

/// Queries the spatial index on every call; no per-scale memory.
#[derive(Debug, Clone, Copy)]
pub struct StreamingBalls<'a> {
    space: &'a PointCloudSpace,
    r: f64,
}

impl<'a> StreamingBalls<'a> {
    pub fn new(space: &'a PointCloudSpace, r: f64) -> Result<Self> {
        space.check_radius(r)?;
        Ok(Self { space, r })
    }
}

impl BallQuery for StreamingBalls<'_> {
    fn space(&self) -> &PointCloudSpace {
        self.space
    }

    fn radius(&self) -> f64 {
        self.r
    }

    #[inline]
    fn visit<F: FnMut(usize)>(&self, i: usize, mut f: F) {
        self.space.for_each_in_ball(i, self.r, |j, _| f(j));
    }
}

/// Neighbour lists at one scale stored in CSR form, plus cached ball masses.
/// Used where the same scale is evaluated many times (descent loops).
#[derive(Debug, Clone)]
pub struct BallGraph<'a> {
    space: &'a PointCloudSpace,
    r: f64,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    masses: Vec<f64>,
}

impl<'a> BallGraph<'a> {
    pub fn new(space: &'a PointCloudSpace, r: f64) -> Result<Self> {
        space.check_radius(r)?;
        let lists: Vec<Vec<u32>> = (0..space.len())
            .into_par_iter()
            .map(|i| {
                let mut v = Vec::new();
                space.for_each_in_ball(i, r, |j, _| v.push(j as u32));
                v
            })
            .collect();
        let mut offsets = Vec::with_capacity(space.len() + 1);
        offsets.push(0);
        for l in &lists {
            offsets.push(offsets.last().unwrap() + l.len());
        }
        let neighbors: Vec<u32> = lists.into_iter().flatten().collect();
        let mut graph = Self { space, r, offsets, neighbors, masses: Vec::new() };
        let masses = (0..space.len())
            .into_par_iter()
            .map(|i| {
                let mut acc = CompensatedSum::new();
                for &j in graph.neighbors_of(i) {
                    acc.add(space.weight(j as usize));
                }
                acc.value()
            })
            .collect();
        graph.masses = masses;
        Ok(graph)
    }

    #[inline]
    pub fn neighbors_of(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len()
    }
}

impl BallQuery for BallGraph<'_> {
    fn space(&self) -> &PointCloudSpace {
        self.space
    }

    fn radius(&self) -> f64 {
        self.r
    }

    #[inline]
    fn visit<F: FnMut(usize)>(&self, i: usize, mut f: F) {
        for &j in self.neighbors_of(i) {
            f(j as usize);
        }
    }

    fn ball_mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    fn ball_masses(&self) -> Vec<f64> {
        self.masses.clone()
    }
}
