//! Finite weighted point clouds standing in for doubling metric measure spaces.
//!
//! Integrals become weighted sums `∫ g dμ = Σ μ_i g(x_i)` and ball averages are
//! μ-weighted means over the open ball `B(x, r) = { y : d(x, y) < r }` with the
//! strict inequality applied literally. Each space carries a resolution scale
//! `h` (the largest nearest-distinct-neighbour distance); scale-dependent
//! operations require `r >= 3h`.

mod ball;
mod generators;
mod grid;
mod set;

use std::hash::{DefaultHasher, Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::compensated_sum;

pub use ball::{BallGraph, BallQuery, StreamingBalls};
pub use generators::{circle_grid, interval_grid, random_cloud, torus2d_grid, Sampler};
pub use set::IndexSet;

use grid::CellGrid;

/// Multiplier in the resolution rule `r >= RESOLUTION_FACTOR * h`.
pub const RESOLUTION_FACTOR: f64 = 3.0;

/// Tables up to this size get an exhaustive triangle-inequality check.
const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 512;
const SAMPLED_TRIANGLES: usize = 200_000;
/// Highest coordinate dimension served by the cell grid; above it queries scan.
const MAX_GRID_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    /// Flat torus `Π [0, period_k)` with the geodesic (wrapped) metric.
    Torus { period: Vec<f64> },
    Table,
}

/// Integer lattice carried by the grid generators. Distances between lattice
/// points are evaluated as `sqrt(Σ k_i²) / denom`, so every pair at the same
/// lattice offset gets the same bits and ties against radii like `3/N` resolve
/// consistently.
#[derive(Debug, Clone)]
struct Lattice {
    ints: Vec<i64>,
    /// Per-axis period in lattice units for wrapped axes.
    wrap: Option<Vec<i64>>,
    denom: f64,
}

/// Input accepted by [`build_space`].
#[derive(Debug, Clone)]
pub enum PointSource {
    /// Row-major coordinates with `dim` entries per point.
    Coordinates { dim: usize, values: Vec<f64> },
    /// Full symmetric distance table.
    Table(Vec<Vec<f64>>),
}

#[derive(Debug, Clone)]
pub struct PointCloudSpace {
    id: u64,
    n: usize,
    dim: usize,
    coords: Vec<f64>,
    table: Option<Vec<f64>>,
    lattice: Option<Lattice>,
    metric: MetricKind,
    weights: Vec<f64>,
    total_mass: f64,
    resolution: f64,
    resolution_factor: f64,
    grid: Option<CellGrid>,
}

/// Validates inputs and builds a space (with a neighbour index for coordinate metrics).
pub fn build_space(points: PointSource, weights: Vec<f64>, metric: MetricKind) -> Result<PointCloudSpace> {
    match points {
        PointSource::Coordinates { dim, values } => PointCloudSpace::from_coordinates(dim, values, weights, metric),
        PointSource::Table(rows) => {
            if metric != MetricKind::Table {
                return Err(Error::InvalidInput("distance tables require the table metric".into()));
            }
            PointCloudSpace::from_table(rows, weights)
        }
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    for (index, &weight) in weights.iter().enumerate() {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::NonPositiveWeight { index, weight });
        }
    }
    Ok(())
}

impl PointCloudSpace {
    pub fn from_coordinates(dim: usize, coords: Vec<f64>, weights: Vec<f64>, metric: MetricKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("coordinate dimension must be positive".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        let n = coords.len() / dim;
        if n == 0 {
            return Err(Error::EmptySet);
        }
        if weights.len() != n {
            return Err(Error::InvalidInput(format!("{} weights for {n} points", weights.len())));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index: pos / dim, coord: pos % dim });
        }
        check_weights(&weights)?;
        let period = match &metric {
            MetricKind::Euclidean => None,
            MetricKind::Torus { period } => {
                if period.len() != dim || period.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
                    return Err(Error::InvalidInput(format!(
                        "torus period must have {dim} positive entries, got {period:?}"
                    )));
                }
                Some(period.as_slice())
            }
            MetricKind::Table => {
                return Err(Error::InvalidInput("coordinate spaces cannot use the table metric".into()))
            }
        };
        let grid = (dim <= MAX_GRID_DIM).then(|| CellGrid::build(&coords, dim, period));
        let mut space = Self {
            id: 0,
            n,
            dim,
            coords,
            table: None,
            lattice: None,
            metric,
            total_mass: compensated_sum(weights.iter().copied()),
            weights,
            resolution: 0.0,
            resolution_factor: RESOLUTION_FACTOR,
            grid,
        };
        space.finish();
        Ok(space)
    }

    pub fn from_table(rows: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptySet);
        }
        if weights.len() != n {
            return Err(Error::InvalidInput(format!("{} weights for {n} points", weights.len())));
        }
        check_weights(&weights)?;
        let mut table = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidTable(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            table.extend_from_slice(row);
        }
        for i in 0..n {
            if table[i * n + i] != 0.0 {
                return Err(Error::InvalidTable(format!("d({i},{i}) = {} is not zero", table[i * n + i])));
            }
            for j in 0..n {
                let d = table[i * n + j];
                if !(d >= 0.0 && d.is_finite()) {
                    return Err(Error::InvalidTable(format!("d({i},{j}) = {d} is not a finite nonnegative value")));
                }
                if d != table[j * n + i] {
                    return Err(Error::AsymmetricDistance { i, j });
                }
            }
        }
        check_triangle(&table, n)?;
        let mut space = Self {
            id: 0,
            n,
            dim: 0,
            coords: Vec::new(),
            table: Some(table),
            lattice: None,
            metric: MetricKind::Table,
            total_mass: compensated_sum(weights.iter().copied()),
            weights,
            resolution: 0.0,
            resolution_factor: RESOLUTION_FACTOR,
            grid: None,
        };
        space.finish();
        Ok(space)
    }

    fn with_lattice(mut self, ints: Vec<i64>, wrap: Option<Vec<i64>>, denom: f64) -> Self {
        self.lattice = Some(Lattice { ints, wrap, denom });
        self.finish();
        self
    }

    fn finish(&mut self) {
        self.resolution = self.compute_resolution();
        self.id = self.fingerprint();
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.n.hash(&mut h);
        self.dim.hash(&mut h);
        for c in &self.coords {
            c.to_bits().hash(&mut h);
        }
        if let Some(t) = &self.table {
            for d in t {
                d.to_bits().hash(&mut h);
            }
        }
        for w in &self.weights {
            w.to_bits().hash(&mut h);
        }
        if let MetricKind::Torus { period } = &self.metric {
            for p in period {
                p.to_bits().hash(&mut h);
            }
        }
        self.lattice.is_some().hash(&mut h);
        h.finish()
    }

    /// Largest distance from a point to its nearest distinct point.
    fn compute_resolution(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let mut start = match self.diameter_bound() {
            d if d > 0.0 => d * (self.dim.max(1) as f64 / self.n as f64).min(1.0) * 0.5,
            _ => return 0.0,
        };
        if start <= 0.0 {
            start = f64::MIN_POSITIVE;
        }
        let limit = self.diameter_bound() * 2.0 + 1.0;
        let nearest: Vec<f64> = {
            use rayon::prelude::*;
            (0..self.n)
                .into_par_iter()
                .map(|i| {
                    let mut radius = start;
                    loop {
                        let mut best = f64::INFINITY;
                        self.for_each_in_ball(i, radius, |_, d| {
                            if d > 0.0 && d < best {
                                best = d;
                            }
                        });
                        if best.is_finite() {
                            return best;
                        }
                        if radius > limit {
                            return 0.0;
                        }
                        radius *= 2.0;
                    }
                })
                .collect()
        };
        nearest.into_iter().fold(0.0, f64::max)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Coordinate dimension; zero for table spaces.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> &MetricKind {
        &self.metric
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Resolution scale `h`.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Smallest radius accepted by scale-dependent operations.
    pub fn min_radius(&self) -> f64 {
        self.resolution_factor * self.resolution
    }

    /// Overrides the multiplier in the resolution rule (default
    /// [`RESOLUTION_FACTOR`]). Hand-sized spaces of a few points need `0`.
    pub fn with_resolution_factor(mut self, factor: f64) -> Self {
        self.resolution_factor = factor.max(0.0);
        self
    }

    pub fn resolution_factor(&self) -> f64 {
        self.resolution_factor
    }

    pub fn has_coordinates(&self) -> bool {
        self.table.is_none()
    }

    pub fn coords(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn all_coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, len: self.n })
        }
    }

    /// Enforces `r > 0` and the resolution rule.
    pub fn check_radius(&self, r: f64) -> Result<()> {
        if !(r > 0.0 && r.is_finite()) || r < self.min_radius() {
            return Err(Error::RadiusBelowResolution { r, min: self.min_radius() });
        }
        Ok(())
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        if let Some(t) = &self.table {
            return t[i * self.n + j];
        }
        if let Some(lat) = &self.lattice {
            let (a, b) = (&lat.ints[i * self.dim..(i + 1) * self.dim], &lat.ints[j * self.dim..(j + 1) * self.dim]);
            let mut s = 0i64;
            for k in 0..self.dim {
                let mut dk = (a[k] - b[k]).abs();
                if let Some(w) = &lat.wrap {
                    dk = dk.min(w[k] - dk);
                }
                s += dk * dk;
            }
            return (s as f64).sqrt() / lat.denom;
        }
        let (a, b) = (self.coords(i), self.coords(j));
        match &self.metric {
            MetricKind::Torus { period } => {
                let mut s = 0.0;
                for k in 0..self.dim {
                    let raw = (a[k] - b[k]).abs().rem_euclid(period[k]);
                    let dk = raw.min(period[k] - raw);
                    s += dk * dk;
                }
                s.sqrt()
            }
            _ => {
                let mut s = 0.0;
                for k in 0..self.dim {
                    let dk = a[k] - b[k];
                    s += dk * dk;
                }
                s.sqrt()
            }
        }
    }

    /// Calls `f(j, d(i, j))` for every `j` with `d(i, j) < r`, in a fixed order.
    #[inline]
    pub fn for_each_in_ball(&self, i: usize, r: f64, mut f: impl FnMut(usize, f64)) {
        match &self.grid {
            Some(grid) => grid.for_each_candidate(self.coords(i), r, |j| {
                let d = self.distance(i, j);
                if d < r {
                    f(j, d);
                }
            }),
            None => {
                for j in 0..self.n {
                    let d = self.distance(i, j);
                    if d < r {
                        f(j, d);
                    }
                }
            }
        }
    }

    /// Open ball `B(x_i, r)`; always contains `i`.
    pub fn ball(&self, i: usize, r: f64) -> Result<IndexSet> {
        self.check_index(i)?;
        if !(r > 0.0) {
            return Err(Error::InvalidRadii(format!("ball radius must be positive, got {r}")));
        }
        let mut out = Vec::new();
        self.for_each_in_ball(i, r, |j, _| out.push(j));
        out.sort_unstable();
        Ok(IndexSet::from_sorted_unchecked(out))
    }

    /// μ(B(x_i, r)).
    pub fn ball_mass(&self, i: usize, r: f64) -> f64 {
        let mut acc = crate::sum::CompensatedSum::new();
        self.for_each_in_ball(i, r, |j, _| acc.add(self.weights[j]));
        acc.value()
    }

    /// μ(S).
    pub fn mu(&self, set: &IndexSet) -> f64 {
        compensated_sum(set.iter().map(|j| self.weights[j]))
    }

    /// `{ j : d(x_j, U) < λ } ∪ U`.
    pub fn neighborhood(&self, set: &IndexSet, lambda: f64) -> IndexSet {
        if !(lambda > 0.0) {
            return set.clone();
        }
        let mut mask = set.to_mask(self.n);
        for i in set {
            self.for_each_in_ball(i, lambda, |j, _| mask[j] = true);
        }
        IndexSet::from_mask(&mask)
    }

    /// `d(x_i, S)`, or `+∞` for the empty set.
    pub fn distance_to_set(&self, i: usize, set: &IndexSet) -> f64 {
        if set.is_empty() {
            return f64::INFINITY;
        }
        if set.contains(i) {
            return 0.0;
        }
        let mask = set.to_mask(self.n);
        self.distance_to_mask(i, &mask, self.diameter_bound() * 2.0 + 1.0)
    }

    /// Nearest flagged point within `limit`, growing the search radius geometrically.
    pub(crate) fn distance_to_mask(&self, i: usize, mask: &[bool], limit: f64) -> f64 {
        if mask[i] {
            return 0.0;
        }
        let mut radius = (self.resolution * 2.0).max(limit * 1e-3).max(f64::MIN_POSITIVE);
        loop {
            let r = radius.min(limit);
            let mut best = f64::INFINITY;
            self.for_each_in_ball(i, r, |j, d| {
                if mask[j] && d < best {
                    best = d;
                }
            });
            if best.is_finite() || r >= limit {
                return best;
            }
            radius *= 2.0;
        }
    }

    /// Minimum pairwise distance between two sets (`+∞` if either is empty).
    pub fn set_distance(&self, a: &IndexSet, b: &IndexSet) -> f64 {
        if a.is_empty() || b.is_empty() {
            return f64::INFINITY;
        }
        let mask = b.to_mask(self.n);
        let limit = self.diameter_bound() * 2.0 + 1.0;
        a.iter().map(|i| self.distance_to_mask(i, &mask, limit)).fold(f64::INFINITY, f64::min)
    }

    /// Upper bound on the diameter (exact for tables).
    pub fn diameter_bound(&self) -> f64 {
        if let Some(t) = &self.table {
            return t.iter().copied().fold(0.0, f64::max);
        }
        match &self.metric {
            MetricKind::Torus { period } => period.iter().map(|p| (p / 2.0).powi(2)).sum::<f64>().sqrt(),
            _ => {
                let mut s = 0.0;
                for k in 0..self.dim {
                    let (lo, hi) = (0..self.n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                        let c = self.coords[i * self.dim + k];
                        (lo.min(c), hi.max(c))
                    });
                    s += (hi - lo).powi(2);
                }
                s.sqrt()
            }
        }
    }

    /// Restriction to `set`, reindexed in ascending order.
    pub fn subspace(&self, set: &IndexSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        let weights: Vec<f64> = set.iter().map(|i| self.weights[i]).collect();
        let mut sub = if let Some(t) = &self.table {
            let rows = set.iter().map(|i| set.iter().map(|j| t[i * self.n + j]).collect()).collect();
            Self::from_table(rows, weights)?
        } else {
            let coords = set.iter().flat_map(|i| self.coords(i).to_vec()).collect();
            Self::from_coordinates(self.dim, coords, weights, self.metric.clone())?
        };
        if let Some(lat) = &self.lattice {
            let ints = set.iter().flat_map(|i| lat.ints[i * self.dim..(i + 1) * self.dim].to_vec()).collect();
            sub = sub.with_lattice(ints, lat.wrap.clone(), lat.denom);
        }
        sub.resolution_factor = self.resolution_factor;
        Ok(sub)
    }

    /// Whether this space was produced by a grid generator (exact lattice distances).
    pub fn is_lattice(&self) -> bool {
        self.lattice.is_some()
    }
}

fn check_triangle(table: &[f64], n: usize) -> Result<()> {
    let d = |i: usize, j: usize| table[i * n + j];
    let scale = table.iter().copied().fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let violates = |i, j, k| d(i, k) > d(i, j) + d(j, k) + tol;
    if n <= EXHAUSTIVE_TRIANGLE_LIMIT {
        for i in 0..n {
            for j in 0..n {
                for k in (i + 1)..n {
                    if violates(i, j, k) {
                        return Err(Error::TriangleInequality { i, j, k });
                    }
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7472_6961_6e67);
        for _ in 0..SAMPLED_TRIANGLES {
            let (i, j, k) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
            if violates(i, j, k) {
                return Err(Error::TriangleInequality { i, j, k });
            }
        }
    }
    Ok(())
}

/// Output of [`doubling_estimate`].
#[derive(Debug, Clone, Serialize)]
pub struct DoublingEstimate {
    /// max μ(B(x,2r)) / μ(B(x,r)) over all samples.
    pub c_hat: f64,
    /// log2 of `c_hat`.
    pub q_hat: f64,
    /// Per-radius maxima `(r, ratio, log2 ratio)`.
    pub per_radius: Vec<(f64, f64, f64)>,
}

/// Empirical doubling constant and exponent over sampled balls.
pub fn doubling_estimate(space: &PointCloudSpace, radii: &[f64], points: &IndexSet) -> Result<DoublingEstimate> {
    if space.len() == 1 {
        return Ok(DoublingEstimate { c_hat: 1.0, q_hat: 0.0, per_radius: radii.iter().map(|&r| (r, 1.0, 0.0)).collect() });
    }
    if radii.is_empty() || points.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut per_radius = Vec::with_capacity(radii.len());
    for &r in radii {
        space.check_radius(r)?;
        let mut worst: f64 = 1.0;
        for i in points {
            space.check_index(i)?;
            let small = space.ball_mass(i, r);
            if small <= space.weight(i) {
                return Err(Error::RadiusBelowResolution { r, min: space.min_radius() });
            }
            worst = worst.max(space.ball_mass(i, 2.0 * r) / small);
        }
        per_radius.push((r, worst, worst.log2()));
    }
    let c_hat = per_radius.iter().map(|t| t.1).fold(1.0, f64::max);
    Ok(DoublingEstimate { c_hat, q_hat: c_hat.log2(), per_radius })
}
