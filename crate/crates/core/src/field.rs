use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::space::{IndexSet, PointCloudSpace};
use crate::sum::compensated_sum;

/// One finite real value per point of a specific space.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
    space_id: u64,
}

impl ScalarField {
    pub fn new(space: &PointCloudSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::InvalidInput(format!(
                "field has {} values for a space of {} points",
                values.len(),
                space.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("field value at point {i} is not finite")));
        }
        Ok(Self { values, space_id: space.id() })
    }

    pub fn constant(space: &PointCloudSpace, c: f64) -> Self {
        Self { values: vec![c; space.len()], space_id: space.id() }
    }

    /// Evaluates `f` on point coordinates.
    pub fn from_fn(space: &PointCloudSpace, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        if !space.has_coordinates() {
            return Err(Error::NoCoordinates);
        }
        Self::new(space, (0..space.len()).map(|i| f(space.coords(i))).collect())
    }

    /// `1` on `set`, `0` elsewhere.
    pub fn indicator(space: &PointCloudSpace, set: &IndexSet) -> Self {
        let mut values = vec![0.0; space.len()];
        for i in set {
            values[i] = 1.0;
        }
        Self { values, space_id: space.id() }
    }

    /// Independent uniform values in `[-1, 1)`.
    pub fn random_uniform(space: &PointCloudSpace, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self { values: (0..space.len()).map(|_| rng.random_range(-1.0..1.0)).collect(), space_id: space.id() }
    }

    /// Random trigonometric polynomial `Σ_k a_k sin(2π ⟨m_k, x⟩ + θ_k)` with integer
    /// frequencies `|m_k|_∞ ≤ 3`, which is smooth on unit tori.
    pub fn random_smooth(space: &PointCloudSpace, seed: u64, modes: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = space.dim();
        let terms: Vec<(f64, Vec<f64>, f64)> = (0..modes)
            .map(|_| {
                let freq = (0..dim).map(|_| rng.random_range(-3i32..=3) as f64).collect();
                (rng.random_range(-1.0..1.0), freq, rng.random_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        Self::from_fn(space, |x| {
            terms
                .iter()
                .map(|(a, m, t)| a * (std::f64::consts::TAU * m.iter().zip(x).map(|(m, x)| m * x).sum::<f64>() + t).sin())
                .sum()
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn space_id(&self) -> u64 {
        self.space_id
    }

    pub fn check_space(&self, space: &PointCloudSpace) -> Result<()> {
        if self.space_id != space.id() || self.values.len() != space.len() {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect(), space_id: self.space_id }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.space_id != other.space_id || self.len() != other.len() {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self {
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            space_id: self.space_id,
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.zip_with(other, |x, y| a * x + b * y)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(Σ μ_i |f_i|^p)^{1/p}`.
    pub fn lp_norm(&self, space: &PointCloudSpace, p: f64) -> f64 {
        compensated_sum(self.values.iter().enumerate().map(|(i, v)| space.weight(i) * v.abs().powf(p))).powf(1.0 / p)
    }

    /// μ-weighted mean over `set`.
    pub fn average_over(&self, space: &PointCloudSpace, set: &IndexSet) -> f64 {
        let num = compensated_sum(set.iter().map(|i| space.weight(i) * self.values[i]));
        num / space.mu(set)
    }

    /// `max_i |f_i - g_i|`.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}
