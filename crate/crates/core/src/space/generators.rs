use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MetricKind, PointCloudSpace};
use crate::error::{Error, Result};

fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("grid generators need N >= 2, got {n}")));
    }
    Ok(())
}

/// `N` equispaced points `i/(N-1)` on `[0, 1]`, Euclidean metric.
pub fn interval_grid(n: usize) -> Result<PointCloudSpace> {
    check_n(n)?;
    let denom = (n - 1) as f64;
    let coords = (0..n).map(|i| i as f64 / denom).collect();
    let space = PointCloudSpace::from_coordinates(1, coords, uniform_weights(n), MetricKind::Euclidean)?;
    Ok(space.with_lattice((0..n as i64).collect(), None, denom))
}

/// `N` points `i/N` on the unit-length circle (flat 1-torus, geodesic metric).
pub fn circle_grid(n: usize) -> Result<PointCloudSpace> {
    check_n(n)?;
    let coords = (0..n).map(|i| i as f64 / n as f64).collect();
    let space = PointCloudSpace::from_coordinates(1, coords, uniform_weights(n), MetricKind::Torus { period: vec![1.0] })?;
    Ok(space.with_lattice((0..n as i64).collect(), Some(vec![n as i64]), n as f64))
}

/// `N × N` grid `(i/N, j/N)` on the unit flat 2-torus.
pub fn torus2d_grid(n: usize) -> Result<PointCloudSpace> {
    check_n(n)?;
    let mut coords = Vec::with_capacity(2 * n * n);
    let mut ints = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            coords.extend([i as f64 / n as f64, j as f64 / n as f64]);
            ints.extend([i as i64, j as i64]);
        }
    }
    let space =
        PointCloudSpace::from_coordinates(2, coords, uniform_weights(n * n), MetricKind::Torus { period: vec![1.0, 1.0] })?;
    Ok(space.with_lattice(ints, Some(vec![n as i64, n as i64]), n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    /// Uniform on `[0, 1]`, Euclidean.
    Interval,
    /// Uniform on `[0, 1]²`, Euclidean.
    Square,
    /// Uniform on the unit circle (1-torus).
    Circle,
    /// Uniform on the unit flat 2-torus.
    Torus2d,
}

impl std::str::FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interval" => Ok(Self::Interval),
            "square" => Ok(Self::Square),
            "circle" => Ok(Self::Circle),
            "torus2d" => Ok(Self::Torus2d),
            other => Err(Error::InvalidInput(format!("unknown sampler `{other}`"))),
        }
    }
}

/// `N` i.i.d. uniform points with weights `1/N`; identical seeds give identical spaces.
pub fn random_cloud(n: usize, seed: u64, sampler: Sampler) -> Result<PointCloudSpace> {
    check_n(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dim, metric) = match sampler {
        Sampler::Interval => (1, MetricKind::Euclidean),
        Sampler::Square => (2, MetricKind::Euclidean),
        Sampler::Circle => (1, MetricKind::Torus { period: vec![1.0] }),
        Sampler::Torus2d => (2, MetricKind::Torus { period: vec![1.0, 1.0] }),
    };
    let coords = (0..n * dim).map(|_| rng.random::<f64>()).collect();
    PointCloudSpace::from_coordinates(dim, coords, uniform_weights(n), metric)
}
