//! Maximal ε-nets, bounded-overlap bookkeeping and subordinated tent
//! partitions of unity.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{IndexSet, PointCloudSpace};

/// Dilation used for covering bookkeeping unless configured otherwise.
pub const DEFAULT_DILATION: f64 = 5.0;
const MIN_DENOMINATOR: f64 = 1e-9;

/// ε-separated centers whose open ε-balls cover the space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsNet {
    pub eps: f64,
    pub centers: IndexSet,
    pub covering_radius_check: bool,
}

impl EpsNet {
    /// Greedy net in ascending index order: a point is admitted iff no
    /// previously admitted center lies within distance `< eps`.
    pub fn greedy(space: &PointCloudSpace, eps: f64) -> Self {
        let mut is_center = vec![false; space.len()];
        let mut centers = Vec::new();
        for i in 0..space.len() {
            let mut blocked = false;
            space.for_each_in_ball(i, eps, |j, _| blocked |= is_center[j]);
            if !blocked {
                is_center[i] = true;
                centers.push(i);
            }
        }
        let mut net = Self { eps, centers: IndexSet::from_mask(&is_center), covering_radius_check: false };
        net.covering_radius_check = net.verify_covering(space);
        net
    }

    /// Every point lies within `< eps` of some center.
    pub fn verify_covering(&self, space: &PointCloudSpace) -> bool {
        let mask = self.centers.to_mask(space.len());
        (0..space.len()).into_par_iter().all(|i| {
            let mut found = false;
            space.for_each_in_ball(i, self.eps, |j, _| found |= mask[j]);
            found
        })
    }

    /// Distinct centers are at distance `>= eps` (exhaustive pair scan).
    pub fn verify_separation(&self, space: &PointCloudSpace) -> bool {
        let c = self.centers.as_slice();
        c.par_iter().enumerate().all(|(a, &i)| c[a + 1..].iter().all(|&j| space.distance(i, j) >= self.eps))
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// `{ "eps": e, "centers": [...] }`
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "eps": self.eps, "centers": self.centers })
    }
}

pub fn maximal_eps_net(space: &PointCloudSpace, eps: f64) -> Result<EpsNet> {
    space.check_radius(eps)?;
    Ok(EpsNet::greedy(space, eps))
}

/// `max_x #{ i : d(x, c_i) < λ ε }`.
pub fn overlap_count(space: &PointCloudSpace, net: &EpsNet, lambda: f64) -> Result<usize> {
    if !(lambda >= 1.0) {
        return Err(Error::InvalidInput(format!("dilation must be >= 1, got {lambda}")));
    }
    let mut counts = vec![0usize; space.len()];
    let radius = lambda * net.eps;
    for c in &net.centers {
        space.for_each_in_ball(c, radius, |j, _| counts[j] += 1);
    }
    Ok(counts.into_iter().max().unwrap_or(0))
}

/// Normalized tents `φ_i = ψ_i / Σ_j ψ_j`, `ψ_i(x) = max(0, 1 - d(x, c_i)/(2ε))`.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    pub net: EpsNet,
    space_id: u64,
    /// Per center (in net order): `(point, φ)` for points in the open support.
    per_center: Vec<Vec<(u32, f64)>>,
    /// Per point: `(center position, φ)` in ascending center order.
    per_point: Vec<Vec<(u32, f64)>>,
    /// Overlap count of the 2ε-dilated balls.
    pub support_overlap: usize,
    /// Each φ_i is `lip_bound`-Lipschitz: `2 (1 + K) / ε` with `K = support_overlap`.
    pub lip_bound: f64,
}

pub fn partition_of_unity(space: &PointCloudSpace, net: &EpsNet) -> Result<PartitionOfUnity> {
    let two_eps = 2.0 * net.eps;
    let tents: Vec<Vec<(u32, f64)>> = net
        .centers
        .as_slice()
        .par_iter()
        .map(|&c| {
            let mut v = Vec::new();
            space.for_each_in_ball(c, two_eps, |j, d| v.push((j as u32, 1.0 - d / two_eps)));
            v.sort_unstable_by_key(|e| e.0);
            v
        })
        .collect();

    let mut denom = vec![0.0; space.len()];
    let mut per_point: Vec<Vec<(u32, f64)>> = vec![Vec::new(); space.len()];
    for (k, tent) in tents.iter().enumerate() {
        for &(j, psi) in tent {
            denom[j as usize] += psi;
            per_point[j as usize].push((k as u32, psi));
        }
    }
    if let Some((point, &sum)) = denom.iter().enumerate().find(|(_, &s)| s < MIN_DENOMINATOR) {
        return Err(Error::DegenerateDenominator { point, sum });
    }
    for (j, entries) in per_point.iter_mut().enumerate() {
        for e in entries.iter_mut() {
            e.1 /= denom[j];
        }
    }
    let per_center = tents
        .into_iter()
        .map(|tent| tent.into_iter().map(|(j, psi)| (j, psi / denom[j as usize])).collect())
        .collect();

    let support_overlap = overlap_count(space, net, 2.0)?;
    Ok(PartitionOfUnity {
        net: net.clone(),
        space_id: space.id(),
        per_center,
        per_point,
        support_overlap,
        lip_bound: 2.0 * (1.0 + support_overlap as f64) / net.eps,
    })
}

impl PartitionOfUnity {
    pub fn check_space(&self, space: &PointCloudSpace) -> Result<()> {
        if self.space_id != space.id() || self.per_point.len() != space.len() {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    pub fn num_centers(&self) -> usize {
        self.per_center.len()
    }

    /// Nonzero `(point, φ_k)` entries of center `k` (net order).
    pub fn center_entries(&self, k: usize) -> &[(u32, f64)] {
        &self.per_center[k]
    }

    /// Nonzero `(center position, φ)` entries at a point.
    pub fn point_entries(&self, i: usize) -> &[(u32, f64)] {
        &self.per_point[i]
    }

    /// Dense values of `φ_k`.
    pub fn dense(&self, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.per_point.len()];
        for &(j, phi) in &self.per_center[k] {
            v[j as usize] = phi;
        }
        v
    }

    /// `max_x |Σ_i φ_i(x) - 1|`.
    pub fn max_sum_error(&self) -> f64 {
        self.per_point
            .iter()
            .map(|e| (e.iter().map(|t| t.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Exhaustive `max |φ_k(x) - φ_k(y)| / d(x, y)` over pairs with `x` in the support.
    pub fn empirical_lipschitz(&self, space: &PointCloudSpace, k: usize) -> f64 {
        let dense = self.dense(k);
        self.per_center[k]
            .par_iter()
            .map(|&(x, _)| {
                let x = x as usize;
                (0..space.len())
                    .filter(|&y| y != x)
                    .map(|y| {
                        let d = space.distance(x, y);
                        if d > 0.0 {
                            (dense[x] - dense[y]).abs() / d
                        } else {
                            0.0
                        }
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Sparse rows `(center_id, point_id, value)` with `center_id` the point index of the center.
    pub fn sparse_rows(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.net
            .centers
            .iter()
            .zip(&self.per_center)
            .flat_map(|(c, entries)| entries.iter().map(move |&(j, v)| (c, j as usize, v)))
    }
}
