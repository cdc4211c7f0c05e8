//! Scale-r p-Laplacian and Dirichlet minimization of the scale-r energy.
//!
//! `Δ_p f(x) = -r^{-p} Σ_{y∈B(x,r)} μ_y (1/μ(B_x) + 1/μ(B_y)) |Δ|^{p-2} Δ`, `Δ = f(x) - f(y)`.
//! With this normalization `Σ_x μ_x Δ_p f(x) g(x) = -ks_pair(f, g)` and
//! `∂E/∂f(z) = -p μ_z Δ_p f(z)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{abs_pow, check_exponent_above_one, check_radii, signed_pow};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::fit::{extrapolate, Extrapolation, FitModel};
use crate::space::{BallGraph, BallQuery, IndexSet, PointCloudSpace, StreamingBalls};
use crate::sum::{compensated_sum, CompensatedSum};

#[inline]
fn flux(d: f64, p: f64, floor: f64) -> f64 {
    if p < 2.0 && floor > 0.0 {
        d.abs().max(floor).powf(p - 2.0) * d
    } else {
        signed_pow(d, p)
    }
}

fn laplacian_values<Q: BallQuery>(balls: &Q, masses: &[f64], v: &[f64], p: f64, floor: f64) -> Vec<f64> {
    let space = balls.space();
    let scale = balls.radius().powf(-p);
    (0..space.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = CompensatedSum::new();
            let inv = 1.0 / masses[i];
            balls.visit(i, |j| acc.add(space.weight(j) * (inv + 1.0 / masses[j]) * flux(v[i] - v[j], p, floor)));
            -scale * acc.value()
        })
        .collect()
}

pub fn p_laplacian(space: &PointCloudSpace, f: &ScalarField, p: f64, r: f64) -> Result<ScalarField> {
    check_exponent_above_one(p)?;
    p_laplacian_with(&StreamingBalls::new(space, r)?, f, p)
}

pub fn p_laplacian_with<Q: BallQuery>(balls: &Q, f: &ScalarField, p: f64) -> Result<ScalarField> {
    check_exponent_above_one(p)?;
    f.check_space(balls.space())?;
    let masses = balls.ball_masses();
    ScalarField::new(balls.space(), laplacian_values(balls, &masses, f.values(), p, 0.0))
}

/// Boundary-constrained minimization of `E_{p,r}`.
#[derive(Debug, Clone, Serialize)]
pub struct DirichletProblem {
    pub boundary: IndexSet,
    pub boundary_values: Vec<f64>,
    pub p: f64,
    pub r: f64,
}

impl DirichletProblem {
    pub fn new(space: &PointCloudSpace, boundary: IndexSet, boundary_values: Vec<f64>, p: f64, r: f64) -> Result<Self> {
        check_exponent_above_one(p)?;
        space.check_radius(r)?;
        if boundary.is_empty() {
            return Err(Error::InfeasibleBoundary);
        }
        if let Some(bad) = boundary.iter().find(|&i| i >= space.len()) {
            return Err(Error::IndexOutOfRange { index: bad, len: space.len() });
        }
        if boundary.len() != boundary_values.len() {
            return Err(Error::InvalidInput(format!(
                "{} boundary points but {} boundary values",
                boundary.len(),
                boundary_values.len()
            )));
        }
        if let Some(v) = boundary_values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite boundary value {v}")));
        }
        Ok(Self { boundary, boundary_values, p, r })
    }

    /// Boundary values read off `data` on `boundary`.
    pub fn from_field(space: &PointCloudSpace, boundary: IndexSet, data: &ScalarField, p: f64, r: f64) -> Result<Self> {
        data.check_space(space)?;
        let values = boundary.iter().map(|i| data[i]).collect();
        Self::new(space, boundary, values, p, r)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    /// Gradient-norm threshold and per-step relative energy decrease threshold.
    pub tol: f64,
    pub max_iters: usize,
    /// Floor `δ` inside `|Δ|^{p-2}` for `p < 2`; the energy itself is never smoothed.
    pub smoothing: f64,
    pub armijo: f64,
    /// Consecutive steps below `tol` relative decrease before stopping.
    pub patience: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iters: 50_000, smoothing: 1e-9, armijo: 1e-4, patience: 10 }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.smoothing >= 0.0) || !(self.armijo > 0.0 && self.armijo < 1.0) || self.max_iters == 0 {
            return Err(Error::InvalidInput("solver tolerances must be positive and armijo in (0,1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    NoFreeVariables,
    GradientTolerance,
    EnergyStagnation,
    MaxIterations,
    LineSearchFailure,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub p: f64,
    pub r: f64,
    #[serde(skip)]
    pub minimizer: ScalarField,
    pub energy: f64,
    pub energy_history: Vec<f64>,
    pub iterations: usize,
    /// `‖∇E‖_{L²(μ)}` over free points at the returned iterate.
    pub gradient_norm: f64,
    pub last_relative_decrease: f64,
    pub stop_reason: StopReason,
    pub converged: bool,
    pub smoothing: f64,
}

impl SolveReport {
    /// `Err(NotConverged)` unless a stopping tolerance was met.
    pub fn into_result(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged { iterations: self.iterations })
        }
    }
}

fn graph_energy(graph: &BallGraph<'_>, v: &[f64], p: f64) -> f64 {
    let space = graph.space();
    let scale = graph.radius().powf(-p);
    let terms: Vec<f64> = (0..space.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = CompensatedSum::new();
            for &j in graph.neighbors_of(i) {
                let j = j as usize;
                acc.add(space.weight(j) * abs_pow(v[i] - v[j], p));
            }
            space.weight(i) * acc.value() / graph.ball_mass(i)
        })
        .collect();
    scale * compensated_sum(terms)
}

fn weighted_dot(space: &PointCloudSpace, free: &[usize], a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(free.iter().map(|&i| space.weight(i) * a[i] * b[i]))
}

pub fn dirichlet_solve(space: &PointCloudSpace, problem: &DirichletProblem, config: &SolverConfig) -> Result<SolveReport> {
    dirichlet_solve_from(space, problem, config, None)
}

/// As [`dirichlet_solve`], starting from `initial` (boundary values are overwritten).
pub fn dirichlet_solve_from(
    space: &PointCloudSpace,
    problem: &DirichletProblem,
    config: &SolverConfig,
    initial: Option<&ScalarField>,
) -> Result<SolveReport> {
    config.validate()?;
    let p = problem.p;
    let graph = BallGraph::new(space, problem.r)?;
    let masses = graph.ball_masses();
    let n = space.len();

    let mut x = match initial {
        Some(f) => {
            f.check_space(space)?;
            f.values().to_vec()
        }
        None => {
            let (lo, hi) = problem
                .boundary_values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            vec![if lo == hi { lo } else { 0.5 * (lo + hi) }; n]
        }
    };
    for (i, &v) in problem.boundary.iter().zip(&problem.boundary_values) {
        x[i] = v;
    }
    let free: Vec<usize> = problem.boundary.complement(n).into_vec();

    let gradient = |x: &[f64]| -> Vec<f64> {
        let mut g = laplacian_values(&graph, &masses, x, p, config.smoothing);
        for v in &mut g {
            *v *= -p;
        }
        for i in &problem.boundary {
            g[i] = 0.0;
        }
        g
    };

    let mut energy = graph_energy(&graph, &x, p);
    let mut history = vec![energy];
    let finish = |x: Vec<f64>, energy, history, iterations, gradient_norm, rel, reason: StopReason| -> Result<SolveReport> {
        Ok(SolveReport {
            p,
            r: problem.r,
            minimizer: ScalarField::new(space, x)?,
            energy,
            energy_history: history,
            iterations,
            gradient_norm,
            last_relative_decrease: rel,
            stop_reason: reason,
            converged: matches!(
                reason,
                StopReason::NoFreeVariables | StopReason::GradientTolerance | StopReason::EnergyStagnation
            ),
            smoothing: config.smoothing,
        })
    };
    if free.is_empty() {
        return finish(x, energy, history, 0, 0.0, 0.0, StopReason::NoFreeVariables);
    }

    let mut g = gradient(&x);
    let mut alpha = 1.0;
    let mut stall = 0;
    let mut rel = f64::INFINITY;
    let mut trial = x.clone();
    for iter in 0..config.max_iters {
        let gn2 = weighted_dot(space, &free, &g, &g);
        if gn2.sqrt() < config.tol {
            return finish(x, energy, history, iter, gn2.sqrt(), rel, StopReason::GradientTolerance);
        }
        let mut trial_energy;
        loop {
            for &i in &free {
                trial[i] = x[i] - alpha * g[i];
            }
            trial_energy = graph_energy(&graph, &trial, p);
            if trial_energy <= energy - config.armijo * alpha * gn2 {
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-300 || !alpha.is_normal() {
                return finish(x, energy, history, iter, gn2.sqrt(), rel, StopReason::LineSearchFailure);
            }
        }
        rel = (energy - trial_energy) / energy.abs().max(f64::MIN_POSITIVE);
        energy = trial_energy;
        history.push(energy);
        std::mem::swap(&mut x, &mut trial);
        let g_new = gradient(&x);

        // Barzilai-Borwein step `⟨s,s⟩/⟨s,y⟩` in the μ-metric
        let (mut ss, mut sy) = (CompensatedSum::new(), CompensatedSum::new());
        for &i in &free {
            let s = x[i] - trial[i];
            ss.add(space.weight(i) * s * s);
            sy.add(space.weight(i) * s * (g_new[i] - g[i]));
        }
        g = g_new;
        alpha = if sy.value() > 0.0 { ss.value() / sy.value() } else { alpha * 2.0 };

        stall = if rel < config.tol { stall + 1 } else { 0 };
        if stall >= config.patience {
            let gn = weighted_dot(space, &free, &g, &g).sqrt();
            return finish(x, energy, history, iter + 1, gn, rel, StopReason::EnergyStagnation);
        }
    }
    let gn = weighted_dot(space, &free, &g, &g).sqrt();
    finish(x, energy, history, config.max_iters, gn, rel, StopReason::MaxIterations)
}

/// Radius-dependent Dirichlet problem: data are imposed on `neighborhood(anchors, collar · r)`.
#[derive(Debug, Clone)]
pub struct ProblemTemplate {
    pub anchors: IndexSet,
    pub data: ScalarField,
    pub collar: f64,
    pub p: f64,
}

impl ProblemTemplate {
    pub fn at_radius(&self, space: &PointCloudSpace, r: f64) -> Result<DirichletProblem> {
        let boundary = space.neighborhood(&self.anchors, self.collar * r);
        DirichletProblem::from_field(space, boundary, &self.data, self.p, r)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizerSweep {
    pub p: f64,
    pub radii: Vec<f64>,
    pub reports: Vec<SolveReport>,
    pub energies: Vec<f64>,
    /// Sup-distance between minimizers at consecutive radii.
    pub consecutive_distances: Vec<f64>,
    pub reference_distances: Option<Vec<f64>>,
    /// Limit of the minimizer energies under the `E0 + a r + b h/r` model.
    pub energy_limit: Option<Extrapolation>,
}

/// Solves at each radius in order, warm-starting from the previous minimizer.
pub fn minimizer_sweep(
    space: &PointCloudSpace,
    template: &ProblemTemplate,
    radii: &[f64],
    config: &SolverConfig,
    reference: Option<&ScalarField>,
) -> Result<MinimizerSweep> {
    check_radii(space, radii)?;
    if let Some(r) = reference {
        r.check_space(space)?;
    }
    let mut reports: Vec<SolveReport> = Vec::with_capacity(radii.len());
    for &r in radii {
        let problem = template.at_radius(space, r)?;
        let report = dirichlet_solve_from(space, &problem, config, reports.last().map(|rep| &rep.minimizer))?;
        reports.push(report);
    }
    let consecutive_distances =
        reports.windows(2).map(|w| w[0].minimizer.sup_distance(&w[1].minimizer)).collect::<Result<Vec<_>>>()?;
    let reference_distances = reference
        .map(|f| reports.iter().map(|rep| rep.minimizer.sup_distance(f)).collect::<Result<Vec<_>>>())
        .transpose()?;
    let energies: Vec<f64> = reports.iter().map(|rep| rep.energy).collect();
    let energy_limit = extrapolate(FitModel::ResolutionAware, radii, &energies, space.resolution())
        .or_else(|| extrapolate(FitModel::Linear, radii, &energies, space.resolution()));
    Ok(MinimizerSweep {
        p: template.p,
        radii: radii.to_vec(),
        reports,
        energies,
        consecutive_distances,
        reference_distances,
        energy_limit,
    })
}
