//! Scale-`r` averaged difference energies.
//!
//! ```text
//! E_{p,r}(f)    = r^{-p} Σ_x μ_x ⨍_{B(x,r)} |f(y) - f(x)|^p dμ(y)
//! E_{p,r}(f,U)  = same with the outer sum restricted to x ∈ U
//! E_{p,r}(f,g)  = r^{-p} Σ_x μ_x ⨍_{B(x,r)} |Δf|^{p-2} Δf Δg dμ(y),   Δf = f(x) - f(y)
//! ```
//!
//! Per-point contributions are computed in parallel and reduced in ascending
//! index order with compensated summation.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::fit::{extrapolate, Extrapolation, FitModel};
use crate::space::{BallQuery, IndexSet, PointCloudSpace, StreamingBalls};
use crate::sum::{compensated_sum, CompensatedSum};

pub fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::ExponentBelowOne(p))
    }
}

pub fn check_exponent_above_one(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::ExponentNotAboveOne(p))
    }
}

/// `|x|^p` with exact fast paths for the common integer exponents.
#[inline]
pub fn abs_pow(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else if p == 1.0 {
        x.abs()
    } else if p == 3.0 {
        let a = x.abs();
        a * a * a
    } else {
        x.abs().powf(p)
    }
}

/// `|x|^{p-2} x`, taken as `0` at `x = 0` for every `p`.
#[inline]
pub fn signed_pow(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if p == 2.0 {
        x
    } else if p == 3.0 {
        x.abs() * x
    } else {
        x.signum() * x.abs().powf(p - 1.0)
    }
}

/// Strictly decreasing radii, each satisfying the resolution rule.
pub fn check_radii(space: &PointCloudSpace, radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidRadii("radius list is empty".into()));
    }
    if let Some(w) = radii.windows(2).find(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidRadii(format!("radii must be strictly decreasing, found {} then {}", w[0], w[1])));
    }
    radii.iter().try_for_each(|&r| space.check_radius(r))
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyValue {
    pub p: f64,
    pub r: f64,
    pub value: f64,
    /// Per-point `e_r(x)` with `Σ μ_x e_r(x) = value`.
    #[serde(skip)]
    pub density: Option<ScalarField>,
}

/// `e_r(x) = r^{-p} ⨍_{B(x,r)} |f(y) - f(x)|^p dμ(y)`.
#[inline]
pub(crate) fn point_density<Q: BallQuery>(balls: &Q, values: &[f64], p: f64, scale: f64, i: usize) -> f64 {
    let space = balls.space();
    let x = values[i];
    let (mut num, mut mass) = (CompensatedSum::new(), CompensatedSum::new());
    balls.visit(i, |j| {
        let w = space.weight(j);
        mass.add(w);
        num.add(w * abs_pow(values[j] - x, p));
    });
    num.value() / mass.value() * scale
}

pub(crate) fn densities<Q: BallQuery>(balls: &Q, values: &[f64], p: f64) -> Vec<f64> {
    let scale = balls.radius().powf(-p);
    (0..balls.space().len()).into_par_iter().map(|i| point_density(balls, values, p, scale, i)).collect()
}

/// `Σ_{x∈U} μ_x e(x)` for a density computed at some scale.
pub fn mass_of_density(space: &PointCloudSpace, density: &[f64], set: &IndexSet) -> f64 {
    compensated_sum(set.iter().map(|i| space.weight(i) * density[i]))
}

pub fn ks_energy(space: &PointCloudSpace, f: &ScalarField, p: f64, r: f64) -> Result<EnergyValue> {
    check_exponent(p)?;
    ks_energy_with(&StreamingBalls::new(space, r)?, f, p)
}

pub fn ks_energy_with<Q: BallQuery>(balls: &Q, f: &ScalarField, p: f64) -> Result<EnergyValue> {
    check_exponent(p)?;
    let space = balls.space();
    f.check_space(space)?;
    let density = densities(balls, f.values(), p);
    let value = compensated_sum(density.iter().enumerate().map(|(i, e)| space.weight(i) * e));
    Ok(EnergyValue { p, r: balls.radius(), value, density: Some(ScalarField::new(space, density)?) })
}

/// Localized energy: outer sum over `U`, inner averages over full balls.
pub fn ks_energy_local(space: &PointCloudSpace, f: &ScalarField, p: f64, r: f64, set: &IndexSet) -> Result<EnergyValue> {
    check_exponent(p)?;
    ks_energy_local_with(&StreamingBalls::new(space, r)?, f, p, set)
}

pub fn ks_energy_local_with<Q: BallQuery>(balls: &Q, f: &ScalarField, p: f64, set: &IndexSet) -> Result<EnergyValue> {
    check_exponent(p)?;
    let space = balls.space();
    f.check_space(space)?;
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    if let Some(bad) = set.iter().find(|&i| i >= space.len()) {
        return Err(Error::IndexOutOfRange { index: bad, len: space.len() });
    }
    let scale = balls.radius().powf(-p);
    let values = f.values();
    let terms: Vec<f64> = set
        .as_slice()
        .par_iter()
        .map(|&i| space.weight(i) * point_density(balls, values, p, scale, i))
        .collect();
    Ok(EnergyValue { p, r: balls.radius(), value: compensated_sum(terms), density: None })
}

/// Nonsymmetric pairing form at scale `r`; `ks_pair(f, f) = ks_energy(f)`.
pub fn ks_pair(space: &PointCloudSpace, f: &ScalarField, g: &ScalarField, p: f64, r: f64) -> Result<f64> {
    check_exponent_above_one(p)?;
    ks_pair_with(&StreamingBalls::new(space, r)?, f, g, p)
}

pub fn ks_pair_with<Q: BallQuery>(balls: &Q, f: &ScalarField, g: &ScalarField, p: f64) -> Result<f64> {
    check_exponent_above_one(p)?;
    let space = balls.space();
    f.check_space(space)?;
    g.check_space(space)?;
    let scale = balls.radius().powf(-p);
    let (fv, gv) = (f.values(), g.values());
    let terms: Vec<f64> = (0..space.len())
        .into_par_iter()
        .map(|i| {
            let (fx, gx) = (fv[i], gv[i]);
            let (mut num, mut mass) = (CompensatedSum::new(), CompensatedSum::new());
            balls.visit(i, |j| {
                let w = space.weight(j);
                mass.add(w);
                num.add(w * signed_pow(fx - fv[j], p) * (gx - gv[j]));
            });
            space.weight(i) * (num.value() / mass.value() * scale)
        })
        .collect();
    Ok(compensated_sum(terms))
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Trailing window for liminf/limsup and the extrapolation fit.
    pub window: usize,
    pub fit: FitModel,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { window: 4, fit: FitModel::Smooth }
    }
}

/// `E_{p,r}` over a decreasing radius list.
#[derive(Debug, Clone, Serialize)]
pub struct EnergySweep {
    pub p: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub sup_estimate: f64,
    pub window: usize,
    pub liminf_window: f64,
    pub limsup_window: f64,
    pub extrapolated: Option<Extrapolation>,
}

impl EnergySweep {
    pub(crate) fn from_values(p: f64, radii: Vec<f64>, values: Vec<f64>, config: &SweepConfig, resolution: f64) -> Self {
        let k = config.window.max(1).min(values.len());
        let tail = &values[values.len() - k..];
        let tail_r = &radii[radii.len() - k..];
        let sup_estimate = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let liminf_window = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let limsup_window = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let extrapolated = extrapolate(config.fit, tail_r, tail, resolution)
            .or_else(|| extrapolate(FitModel::Linear, tail_r, tail, resolution));
        Self { p, radii, values, sup_estimate, window: k, liminf_window, limsup_window, extrapolated }
    }

    /// Extrapolated limit, falling back to the last value when no fit exists.
    pub fn limit(&self) -> f64 {
        self.extrapolated.as_ref().map_or(*self.values.last().unwrap(), |e| e.limit)
    }

    /// `sup_r E / liminf_window E`: the per-run stand-in for `sup_r E ≲ 𝓔 ≤ liminf E`.
    pub fn sandwich_ratio(&self) -> Option<f64> {
        (self.liminf_window > 0.0).then(|| self.sup_estimate / self.liminf_window)
    }

    pub fn to_export_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.p,
            "radii": self.radii,
            "values": self.values,
            "sup": self.sup_estimate,
            "liminf_window": self.liminf_window,
            "limsup_window": self.limsup_window,
            "window": self.window,
            "extrapolated": self.extrapolated.as_ref().map(|e| e.limit),
            "fit_model": self.extrapolated.as_ref().map(|e| e.model),
            "fit_residual": self.extrapolated.as_ref().map(|e| e.residual),
        })
    }
}

pub fn ks_sweep(space: &PointCloudSpace, f: &ScalarField, p: f64, radii: &[f64]) -> Result<EnergySweep> {
    ks_sweep_with_config(space, f, p, radii, &SweepConfig::default())
}

pub fn ks_sweep_with_config(
    space: &PointCloudSpace,
    f: &ScalarField,
    p: f64,
    radii: &[f64],
    config: &SweepConfig,
) -> Result<EnergySweep> {
    check_exponent(p)?;
    check_radii(space, radii)?;
    f.check_space(space)?;
    let values = radii.iter().map(|&r| ks_energy(space, f, p, r).map(|e| e.value)).collect::<Result<Vec<_>>>()?;
    Ok(EnergySweep::from_values(p, radii.to_vec(), values, config, space.resolution()))
}
