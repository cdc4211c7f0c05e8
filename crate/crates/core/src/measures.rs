//! Fixed-scale energy measures and the inequalities built on them: bounded
//! density, Poincaré, cutoff gluing.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{abs_pow, check_exponent, ks_energy, ks_energy_local, mass_of_density};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::lipschitz::discrete_lip;
use crate::space::{IndexSet, PointCloudSpace};
use crate::sum::compensated_sum;

/// Maximum number of ball centers visited by [`poincare_check`].
pub const POINCARE_MAX_CENTERS: usize = 256;

#[derive(Debug, Clone, Serialize)]
pub struct EnergyMeasureReport {
    pub p: f64,
    pub r: f64,
    pub cells: Vec<IndexSet>,
    /// `E_{p,r}(f, cell)` per cell.
    pub masses: Vec<f64>,
    pub total: f64,
    #[serde(skip)]
    pub density: ScalarField,
    pub max_density: f64,
}

fn check_partition(n: usize, cells: &[IndexSet]) -> Result<()> {
    let mut seen = vec![false; n];
    for (k, cell) in cells.iter().enumerate() {
        for i in cell {
            if i >= n {
                return Err(Error::CellsNotPartition(format!("cell {k} contains index {i} >= {n}")));
            }
            if seen[i] {
                return Err(Error::CellsNotPartition(format!("point {i} lies in more than one cell")));
            }
            seen[i] = true;
        }
    }
    match seen.iter().position(|s| !s) {
        Some(i) => Err(Error::CellsNotPartition(format!("point {i} lies in no cell"))),
        None => Ok(()),
    }
}

pub fn energy_measure(space: &PointCloudSpace, f: &ScalarField, p: f64, r: f64, cells: &[IndexSet]) -> Result<EnergyMeasureReport> {
    check_partition(space.len(), cells)?;
    let value = ks_energy(space, f, p, r)?;
    let density = value.density.expect("full energy carries its density");
    let masses = cells.iter().map(|c| mass_of_density(space, density.values(), c)).collect();
    Ok(EnergyMeasureReport {
        p,
        r,
        cells: cells.to_vec(),
        masses,
        total: value.value,
        max_density: density.sup_norm(),
        density,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityReport {
    pub p: f64,
    pub r: f64,
    #[serde(skip)]
    pub density: ScalarField,
    pub max_density: f64,
    /// Set for `p = 1`, where the bounded-density reading does not apply.
    pub p_is_one: bool,
}

/// Per-point energy density relative to μ at scale `r`.
pub fn density_vs_mu(space: &PointCloudSpace, f: &ScalarField, p: f64, r: f64) -> Result<DensityReport> {
    let value = ks_energy(space, f, p, r)?;
    let density = value.density.expect("full energy carries its density");
    Ok(DensityReport { p, r, max_density: density.sup_norm(), density, p_is_one: p == 1.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoincareMode {
    /// Right side `Σ_{B(x,λR)} μ |Lip f|^p` with the discrete Lip at the minimum radius.
    Lip,
    /// Right side `E_{p,R/4}(f, B(x,λR))`.
    EnergyMeasure,
}

impl FromStr for PoincareMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lip" => Ok(Self::Lip),
            "energy-measure" | "energy" => Ok(Self::EnergyMeasure),
            other => Err(Error::InvalidInput(format!("unknown Poincaré mode `{other}` (lip | energy-measure)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PoincareReport {
    pub mode: PoincareMode,
    pub p: f64,
    pub radius: f64,
    pub lambda: f64,
    /// Discrete-Lip radius (lip mode) or energy scale `R/4` (energy mode).
    pub inner_radius: f64,
    pub centers_checked: usize,
    pub worst_ratio: f64,
    pub worst_center: Option<usize>,
}

/// `max_x ∫_{B(x,R)} |f - f_B|^p dμ / (R^p · rhs(x))` over up to
/// [`POINCARE_MAX_CENTERS`] centers taken at a fixed stride.
pub fn poincare_check(
    space: &PointCloudSpace,
    f: &ScalarField,
    p: f64,
    radius: f64,
    lambda: f64,
    mode: PoincareMode,
) -> Result<PoincareReport> {
    check_exponent(p)?;
    f.check_space(space)?;
    space.check_radius(radius)?;
    if !(lambda >= 1.0) {
        return Err(Error::InvalidInput(format!("dilation must be >= 1, got {lambda}")));
    }
    let (inner_radius, rhs_density) = match mode {
        PoincareMode::Lip => {
            let r_lip = space.min_radius();
            let lip = discrete_lip(space, f, r_lip)?;
            (r_lip, lip.values().iter().map(|&l| abs_pow(l, p)).collect::<Vec<_>>())
        }
        PoincareMode::EnergyMeasure => {
            let r = radius / 4.0;
            let value = ks_energy(space, f, p, r)?;
            (r, value.density.expect("full energy carries its density").into_values())
        }
    };
    let stride = space.len().div_ceil(POINCARE_MAX_CENTERS).max(1);
    let centers: Vec<usize> = (0..space.len()).step_by(stride).collect();
    let v = f.values();
    let ratios: Vec<f64> = centers
        .par_iter()
        .map(|&c| {
            let ball = space.ball(c, radius).expect("radius checked");
            let mean = f.average_over(space, &ball);
            let lhs = compensated_sum(ball.iter().map(|j| space.weight(j) * abs_pow(v[j] - mean, p)));
            let big = space.ball(c, lambda * radius).expect("radius checked");
            let rhs = radius.powf(p) * mass_of_density(space, &rhs_density, &big);
            if lhs == 0.0 {
                0.0
            } else if rhs > 0.0 {
                lhs / rhs
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let (worst_center, worst_ratio) = ratios
        .iter()
        .enumerate()
        .fold((None, 0.0), |(bc, bv), (k, &q)| if q > bv { (Some(centers[k]), q) } else { (bc, bv) });
    Ok(PoincareReport { mode, p, radius, lambda, inner_radius, centers_checked: centers.len(), worst_ratio, worst_center })
}

/// `φ = min(d(·, A^c), d(A′, A^c)) / d(A′, A^c)`.
#[derive(Debug, Clone, Serialize)]
pub struct CutoffField {
    pub a_prime: IndexSet,
    pub a: IndexSet,
    /// `d(A′, A^c)`, infinite when `A` is the whole space.
    pub separation: f64,
    #[serde(skip)]
    pub values: ScalarField,
}

pub fn cutoff(space: &PointCloudSpace, a_prime: &IndexSet, a: &IndexSet) -> Result<CutoffField> {
    if a_prime.is_empty() {
        return Err(Error::EmptySet);
    }
    for set in [a_prime, a] {
        if let Some(bad) = set.iter().find(|&i| i >= space.len()) {
            return Err(Error::IndexOutOfRange { index: bad, len: space.len() });
        }
    }
    let outside = a.complement(space.len());
    let separation = space.set_distance(a_prime, &outside);
    if separation == 0.0 || !a_prime.is_subset(a) {
        return Err(Error::TouchingBoundary);
    }
    let values = if outside.is_empty() {
        vec![1.0; space.len()]
    } else {
        let mask = outside.to_mask(space.len());
        (0..space.len())
            .into_par_iter()
            .map(|i| {
                let d = space.distance_to_mask(i, &mask, separation);
                (d.min(separation) / separation).clamp(0.0, 1.0)
            })
            .collect()
    };
    let mut values = values;
    for i in a_prime {
        values[i] = 1.0;
    }
    Ok(CutoffField { a_prime: a_prime.clone(), a: a.clone(), separation, values: ScalarField::new(space, values)? })
}

/// Sets and parameters of one gluing inequality.
#[derive(Debug, Clone, Serialize)]
pub struct FundamentalSetup {
    pub a: IndexSet,
    pub a_prime: IndexSet,
    pub b: IndexSet,
    pub eps_cvx: f64,
    pub p: f64,
    pub r: f64,
}

impl FundamentalSetup {
    /// Random configuration with `A = B(c, ρ)`, `A′ = B(c, ρ - m)`, `m ≥ r`, and
    /// `B` a random ball or empty.
    pub fn random(space: &PointCloudSpace, seed: u64, p: f64, r: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = space.len();
        let c = rng.random_range(0..n);
        let diam = space.diameter_bound();
        let margin = r * rng.random_range(1.0..2.0);
        let rho = margin + rng.random_range(r..(0.4 * diam).max(2.0 * r));
        let a = space.ball(c, rho)?;
        let a_prime = space.ball(c, rho - margin)?;
        let b = if rng.random_bool(0.2) {
            IndexSet::empty()
        } else {
            space.ball(rng.random_range(0..n), rng.random_range(r..(0.3 * diam).max(2.0 * r)))?
        };
        let eps_cvx = if rng.random_bool(0.5) { 0.25 } else { 0.5 };
        Ok(Self { a, a_prime, b, eps_cvx, p, r })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FundamentalReport {
    /// `E_{p,r}(φf + (1-φ)g, A′ ∪ B)`.
    pub lhs: f64,
    /// `(1-ε)^{1-p} (E_{p,r}(f, A) + E_{p,r}(g, B))`.
    pub energy_term: f64,
    /// `∫_{S_r} |f - g|^p dμ`.
    pub coupling_integral: f64,
    /// `d(A′, A^c)^{-p} · max_{y∈S_r} Σ_{x∈B(y,r)∩(A′∪B)} μ_x/μ(B(x,r))`.
    pub structural: f64,
    /// Calibrated dimensionless factor multiplying `structural`.
    pub kappa: f64,
    pub rhs: f64,
    pub slack: f64,
    /// Smallest `kappa` for which this instance holds.
    pub required_kappa: f64,
}

pub fn fundamental_estimate_check(
    space: &PointCloudSpace,
    f: &ScalarField,
    g: &ScalarField,
    setup: &FundamentalSetup,
    kappa: f64,
) -> Result<FundamentalReport> {
    let FundamentalSetup { a, a_prime, b, eps_cvx, p, r } = setup;
    let (p, r, eps) = (*p, *r, *eps_cvx);
    check_exponent(p)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("convexity parameter must lie in (0,1), got {eps}")));
    }
    f.check_space(space)?;
    g.check_space(space)?;
    let cut = cutoff(space, a_prime, a)?;
    let phi = cut.values.values();
    let glued = ScalarField::new(space, (0..space.len()).map(|i| phi[i] * f[i] + (1.0 - phi[i]) * g[i]).collect())?;

    let local = |h: &ScalarField, set: &IndexSet| -> Result<f64> {
        if set.is_empty() {
            Ok(0.0)
        } else {
            Ok(ks_energy_local(space, h, p, r, set)?.value)
        }
    };
    let target = a_prime.union(b);
    let lhs = local(&glued, &target)?;
    let energy_term = (1.0 - eps).powf(1.0 - p) * (local(f, a)? + local(g, b)?);

    let strip = space.neighborhood(&target, r).intersection(&space.neighborhood(&a.difference(a_prime), 3.0 * r));
    let coupling_integral = compensated_sum(strip.iter().map(|i| space.weight(i) * abs_pow(f[i] - g[i], p)));
    let target_mask = target.to_mask(space.len());
    let inv_mass: Vec<f64> = (0..space.len()).into_par_iter().map(|i| 1.0 / space.ball_mass(i, r)).collect();
    let overlap = strip
        .as_slice()
        .par_iter()
        .map(|&y| {
            let mut acc = 0.0;
            space.for_each_in_ball(y, r, |x, _| {
                if target_mask[x] {
                    acc += space.weight(x) * inv_mass[x];
                }
            });
            acc
        })
        .reduce(|| 0.0, f64::max);
    let structural = if cut.separation.is_finite() { cut.separation.powf(-p) * overlap } else { 0.0 };
    let coupling = eps.powf(1.0 - p) * structural * coupling_integral;
    let rhs = energy_term + kappa * coupling;
    let excess = lhs - energy_term;
    let required_kappa = if excess <= 0.0 {
        0.0
    } else if coupling > 0.0 {
        excess / coupling
    } else {
        f64::INFINITY
    };
    Ok(FundamentalReport { lhs, energy_term, coupling_integral, structural, kappa, rhs, slack: rhs - lhs, required_kappa })
}

/// Frozen constant: the largest `required_kappa` over a calibration set.
pub fn calibrate_kappa(reports: &[FundamentalReport]) -> f64 {
    reports.iter().map(|r| r.required_kappa).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests;
