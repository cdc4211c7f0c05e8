//! Lipschitz approximation through a partition of unity, discrete local
//! Lipschitz constants and the restricted maximal function.

use rayon::prelude::*;
use serde::Serialize;

use crate::covers::PartitionOfUnity;
use crate::energy::{abs_pow, check_exponent, ks_energy_local, point_density};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::space::{IndexSet, PointCloudSpace, StreamingBalls};
use crate::sum::compensated_sum;

/// Dilation of the net balls on the right-hand side of the Lip bound.
pub const NET_DILATION: f64 = 5.0;
/// Differences of `f_ε` below this relative size count as exact ties.
const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Serialize)]
pub struct LipApproxReport {
    pub eps: f64,
    pub p: f64,
    #[serde(skip)]
    pub f_eps: ScalarField,
    /// `‖f_ε - f‖_p`.
    pub lp_error: f64,
    /// `f_{B(c_j, ε)}` per net center.
    pub ball_averages: Vec<f64>,
    /// `(ε^{-p} ⨍_{5B_j} ⨍_{B(x,2ε)} |f(y)-f(x)|^p)^{1/p}` per net center.
    pub lip_rhs: Vec<f64>,
    /// Max difference quotient of `f_ε` over pairs inside `B(c_j, ε)`.
    pub empirical_lip: Vec<f64>,
}

/// `f_ε = Σ_j f_{B(c_j,ε)} φ_j` without diagnostics.
pub fn lip_approx_field(space: &PointCloudSpace, f: &ScalarField, pou: &PartitionOfUnity) -> Result<(ScalarField, Vec<f64>)> {
    f.check_space(space)?;
    pou.check_space(space)?;
    let eps = pou.net.eps;
    let averages: Vec<f64> = pou
        .net
        .centers
        .as_slice()
        .par_iter()
        .map(|&c| {
            let (mut num, mut den) = (Vec::new(), Vec::new());
            space.for_each_in_ball(c, eps, |j, _| {
                num.push(space.weight(j) * f[j]);
                den.push(space.weight(j));
            });
            compensated_sum(num) / compensated_sum(den)
        })
        .collect();
    let values = (0..space.len())
        .into_par_iter()
        .map(|i| pou.point_entries(i).iter().map(|&(k, phi)| averages[k as usize] * phi).sum())
        .collect();
    Ok((ScalarField::new(space, values)?, averages))
}

pub fn lip_approx(space: &PointCloudSpace, f: &ScalarField, pou: &PartitionOfUnity, p: f64) -> Result<LipApproxReport> {
    check_exponent(p)?;
    let (f_eps, ball_averages) = lip_approx_field(space, f, pou)?;
    let eps = pou.net.eps;
    let lp_error = f_eps.combine(1.0, f, -1.0)?.lp_norm(space, p);

    let balls = StreamingBalls::new(space, 2.0 * eps)?;
    let inner: Vec<f64> = (0..space.len()).into_par_iter().map(|i| point_density(&balls, f.values(), p, 1.0, i)).collect();
    let centers = pou.net.centers.as_slice();
    let lip_rhs = centers
        .par_iter()
        .map(|&c| {
            let (mut num, mut den) = (Vec::new(), Vec::new());
            space.for_each_in_ball(c, NET_DILATION * eps, |j, _| {
                num.push(space.weight(j) * inner[j]);
                den.push(space.weight(j));
            });
            (compensated_sum(num) / compensated_sum(den) / eps.powf(p)).powf(1.0 / p)
        })
        .collect();
    let fe = f_eps.values();
    let empirical_lip = centers
        .par_iter()
        .map(|&c| {
            let mut members = Vec::new();
            space.for_each_in_ball(c, eps, |j, _| members.push(j));
            let mut best: f64 = 0.0;
            for (a, &x) in members.iter().enumerate() {
                for &y in &members[a + 1..] {
                    let d = space.distance(x, y);
                    let diff = (fe[x] - fe[y]).abs();
                    if d > 0.0 && diff > ROUNDOFF * fe[x].abs().max(fe[y].abs()) {
                        best = best.max(diff / d);
                    }
                }
            }
            best
        })
        .collect();
    Ok(LipApproxReport { eps, p, f_eps, lp_error, ball_averages, lip_rhs, empirical_lip })
}

#[derive(Debug, Clone, Serialize)]
pub struct LipBoundCheck {
    pub eps: f64,
    pub p: f64,
    /// `empirical / rhs` per net ball; 0 when both vanish, `+∞` when only the rhs does.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Reported constant `ε · lip_bound = 2 (1 + K)` of the partition.
    pub constant: f64,
    pub holds: bool,
}

pub fn lip_bound_check(space: &PointCloudSpace, f: &ScalarField, pou: &PartitionOfUnity, p: f64) -> Result<LipBoundCheck> {
    let report = lip_approx(space, f, pou, p)?;
    let ratios: Vec<f64> = report
        .empirical_lip
        .iter()
        .zip(&report.lip_rhs)
        .map(|(&e, &r)| if e == 0.0 { 0.0 } else if r > 0.0 { e / r } else { f64::INFINITY })
        .collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let constant = pou.lip_bound * pou.net.eps;
    Ok(LipBoundCheck { eps: report.eps, p, ratios, max_ratio, constant, holds: max_ratio <= constant })
}

/// `max_{y ∈ B(x,r_lip), d(x,y) > 0} |f(x) - f(y)| / d(x,y)`.
pub fn discrete_lip(space: &PointCloudSpace, f: &ScalarField, r_lip: f64) -> Result<ScalarField> {
    f.check_space(space)?;
    space.check_radius(r_lip)?;
    let v = f.values();
    let out = (0..space.len())
        .into_par_iter()
        .map(|i| {
            let mut best: f64 = 0.0;
            space.for_each_in_ball(i, r_lip, |j, d| {
                if d > 0.0 {
                    best = best.max((v[i] - v[j]).abs() / d);
                }
            });
            best
        })
        .collect();
    ScalarField::new(space, out)
}

/// `count` radii spaced logarithmically from the minimum admissible radius to the diameter.
pub fn log_radius_grid(space: &PointCloudSpace, count: usize) -> Vec<f64> {
    let lo = space.min_radius().max(f64::MIN_POSITIVE);
    let hi = space.diameter_bound().max(lo);
    if count <= 1 || hi <= lo {
        return vec![hi];
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|k| lo * (step * k as f64).exp()).collect()
}

/// `Mf(x) = max(|f(x)|, max_r ⨍_{B(x,r)} |f|)` over the given radii.
pub fn maximal_function(space: &PointCloudSpace, f: &ScalarField, radii: &[f64]) -> Result<ScalarField> {
    f.check_space(space)?;
    if radii.is_empty() {
        return Err(Error::InvalidRadii("empty radius list".into()));
    }
    for &r in radii {
        space.check_radius(r)?;
    }
    let v = f.values();
    let out = (0..space.len())
        .into_par_iter()
        .map(|i| {
            radii.iter().fold(v[i].abs(), |m, &r| {
                let (mut num, mut den) = (Vec::new(), Vec::new());
                space.for_each_in_ball(i, r, |j, _| {
                    num.push(space.weight(j) * v[j].abs());
                    den.push(space.weight(j));
                });
                m.max(compensated_sum(num) / compensated_sum(den))
            })
        })
        .collect();
    ScalarField::new(space, out)
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalEnergyBound {
    pub p: f64,
    pub r: f64,
    pub lambda: f64,
    pub r_lip: f64,
    /// `E_{p,r}(f, U)`.
    pub lhs: f64,
    /// `Σ_{U_{Λr}} μ |Lip f|^p`.
    pub rhs: f64,
    pub ratio: f64,
}

/// Compares the localized energy on `U` with the discrete Lip integral over `U_{Λr}`.
pub fn local_energy_bound(
    space: &PointCloudSpace,
    f: &ScalarField,
    p: f64,
    r: f64,
    set: &IndexSet,
    lambda: f64,
    r_lip: f64,
) -> Result<LocalEnergyBound> {
    if !(lambda >= 1.0) {
        return Err(Error::InvalidInput(format!("dilation must be >= 1, got {lambda}")));
    }
    let lhs = ks_energy_local(space, f, p, r, set)?.value;
    let lip = discrete_lip(space, f, r_lip)?;
    let dilated = space.neighborhood(set, lambda * r);
    let rhs = compensated_sum(dilated.iter().map(|i| space.weight(i) * abs_pow(lip[i], p)));
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(LocalEnergyBound { p, r, lambda, r_lip, lhs, rhs, ratio })
}
