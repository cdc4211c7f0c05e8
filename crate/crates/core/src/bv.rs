//! `p = 1` functionals: nonlocal total variation, perimeter, and the relaxed
//! total variation bounded through partition-of-unity approximations.

use serde::Serialize;

use crate::covers::{maximal_eps_net, partition_of_unity};
use crate::energy::{check_radii, ks_sweep, EnergySweep};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::lipschitz::{discrete_lip, lip_approx_field};
use crate::space::{IndexSet, MetricKind, PointCloudSpace};
use crate::sum::compensated_sum;

/// Contribution of one jump of an indicator in one dimension.
pub const JUMP_CONSTANT: f64 = 0.5;
/// Magnitude below which both comparability columns count as zero.
const ZERO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct TVReport {
    pub sweep: EnergySweep,
    pub extrapolated_tv: f64,
    /// `jumps × 1/2` for indicators on one-dimensional coordinate spaces.
    pub jump_reference: Option<f64>,
    pub jumps: Option<usize>,
}

pub fn total_variation(space: &PointCloudSpace, f: &ScalarField, radii: &[f64]) -> Result<TVReport> {
    let sweep = ks_sweep(space, f, 1.0, radii)?;
    Ok(TVReport { extrapolated_tv: sweep.limit(), sweep, jump_reference: None, jumps: None })
}

/// Value changes of the indicator along the sorted coordinate (cyclic on a circle).
fn count_jumps(space: &PointCloudSpace, set: &IndexSet) -> Option<usize> {
    if space.dim() != 1 || !space.has_coordinates() {
        return None;
    }
    let mut order: Vec<usize> = (0..space.len()).collect();
    order.sort_by(|&a, &b| space.coords(a)[0].total_cmp(&space.coords(b)[0]));
    let inside: Vec<bool> = order.iter().map(|&i| set.contains(i)).collect();
    let mut jumps = inside.windows(2).filter(|w| w[0] != w[1]).count();
    if matches!(space.metric(), MetricKind::Torus { .. }) && inside.first() != inside.last() {
        jumps += 1;
    }
    Some(jumps)
}

pub fn perimeter(space: &PointCloudSpace, set: &IndexSet, radii: &[f64]) -> Result<TVReport> {
    if let Some(bad) = set.iter().find(|&i| i >= space.len()) {
        return Err(Error::IndexOutOfRange { index: bad, len: space.len() });
    }
    let mut report = total_variation(space, &ScalarField::indicator(space, set), radii)?;
    report.jumps = count_jumps(space, set);
    report.jump_reference = report.jumps.map(|j| JUMP_CONSTANT * j as f64);
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct MirandaEntry {
    pub eps: f64,
    pub centers: usize,
    /// `Σ_x μ_x Lip f_ε(x)`.
    pub lip_integral: f64,
    /// `‖f_ε - f‖_1`.
    pub l1_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MirandaBound {
    pub value: f64,
    pub best_eps: f64,
    pub r_lip: f64,
    pub sequence: Vec<MirandaEntry>,
}

/// Minimum over `eps_list` of `∫ Lip f_ε dμ`, with `Lip` taken at the minimum radius.
pub fn miranda_tv_upper(space: &PointCloudSpace, f: &ScalarField, eps_list: &[f64]) -> Result<MirandaBound> {
    check_radii(space, eps_list)?;
    f.check_space(space)?;
    let r_lip = space.min_radius();
    let sequence = eps_list
        .iter()
        .map(|&eps| {
            let net = maximal_eps_net(space, eps)?;
            let pou = partition_of_unity(space, &net)?;
            let (f_eps, _) = lip_approx_field(space, f, &pou)?;
            let lip = discrete_lip(space, &f_eps, r_lip)?;
            Ok(MirandaEntry {
                eps,
                centers: net.len(),
                lip_integral: compensated_sum((0..space.len()).map(|i| space.weight(i) * lip[i])),
                l1_error: f_eps.combine(1.0, f, -1.0)?.lp_norm(space, 1.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = sequence.iter().min_by(|a, b| a.lip_integral.total_cmp(&b.lip_integral)).expect("radii are nonempty");
    Ok(MirandaBound { value: best.lip_integral, best_eps: best.eps, r_lip, sequence })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparabilityRow {
    pub name: String,
    pub tv: f64,
    pub miranda: f64,
    /// `tv / miranda`; `None` when both vanish.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparabilityReport {
    pub rows: Vec<ComparabilityRow>,
    /// Smallest `K` with every ratio in `[1/K, K]`; `None` when no row has a ratio.
    pub band: Option<f64>,
}

impl ComparabilityReport {
    /// `name,tv,miranda,ratio`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,tv,miranda,ratio\n");
        for row in &self.rows {
            let ratio = row.ratio.map(|r| r.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", row.name, row.tv, row.miranda, ratio));
        }
        out
    }
}

pub fn comparability_report(
    space: &PointCloudSpace,
    fields: &[(String, ScalarField)],
    radii: &[f64],
    eps_list: &[f64],
) -> Result<ComparabilityReport> {
    if fields.is_empty() {
        return Err(Error::InvalidInput("no fields to compare".into()));
    }
    let rows = fields
        .iter()
        .map(|(name, f)| {
            let tv = total_variation(space, f, radii)?.extrapolated_tv;
            let miranda = miranda_tv_upper(space, f, eps_list)?.value;
            let ratio = if tv.abs() <= ZERO_FLOOR && miranda <= ZERO_FLOOR { None } else { Some(tv / miranda) };
            Ok(ComparabilityRow { name: name.clone(), tv, miranda, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    let band = rows.iter().filter_map(|r| r.ratio).map(|q| q.max(1.0 / q)).reduce(f64::max);
    Ok(ComparabilityReport { rows, band })
}
