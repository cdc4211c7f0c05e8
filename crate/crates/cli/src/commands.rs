//! One function per subcommand; each returns a JSON result and an optional CSV projection.

use kslab_core::bv::{comparability_report, miranda_tv_upper, perimeter, total_variation, TVReport, JUMP_CONSTANT};
use kslab_core::covers::DEFAULT_DILATION;
use kslab_core::energy::{ks_energy, ks_pair, ks_sweep_with_config, SweepConfig};
use kslab_core::fit::FitModel;
use kslab_core::io::{field_csv, read_boundary_csv, read_cells, read_index_set_csv};
use kslab_core::laplacian::{dirichlet_solve_from, minimizer_sweep, p_laplacian, DirichletProblem, ProblemTemplate, SolverConfig};
use kslab_core::lipschitz::NET_DILATION;
use kslab_core::measures::{
    calibrate_kappa, energy_measure, fundamental_estimate_check, poincare_check, FundamentalSetup, PoincareMode,
    POINCARE_MAX_CENTERS,
};
use kslab_core::space::RESOLUTION_FACTOR;
use kslab_core::sum::compensated_sum;
use kslab_core::{doubling_estimate, IndexSet, PointCloudSpace, ScalarField};
use serde_json::{json, Value};

use crate::args::{Command, Common, SolverArgs};
use crate::catalog::{arc, parse_field};
use crate::error::CliError;

pub struct Outcome {
    pub result: Value,
    pub constants: Value,
    pub csv: Option<String>,
    /// `false` means a numeric failure (exit 1) after the report is written.
    pub success: bool,
}

impl Outcome {
    fn ok(result: Value, constants: Value, csv: Option<String>) -> Self {
        Self { result, constants, csv, success: true }
    }
}

fn base_constants(space: &PointCloudSpace) -> Value {
    json!({
        "resolution_factor": space.resolution_factor(),
        "default_resolution_factor": RESOLUTION_FACTOR,
        "resolution": space.resolution(),
        "min_radius": space.min_radius(),
        "ball_convention": "open",
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

fn solver_config(args: &SolverArgs) -> SolverConfig {
    SolverConfig { tol: args.tol, max_iters: args.max_iters, smoothing: args.smoothing, ..SolverConfig::default() }
}

fn series_csv(header: &str, xs: &[f64], ys: &[f64]) -> String {
    let mut out = format!("{header}\n");
    for (x, y) in xs.iter().zip(ys) {
        out.push_str(&format!("{x},{y}\n"));
    }
    out
}

fn tv_json(report: &TVReport) -> Value {
    json!({
        "sweep": report.sweep.to_export_json(),
        "extrapolated_tv": report.extrapolated_tv,
        "jumps": report.jumps,
        "jump_reference": report.jump_reference,
    })
}

pub fn dispatch(command: &Command, common: &Common, space: &PointCloudSpace) -> Result<Outcome, CliError> {
    let base = base_constants(space);
    match command {
        Command::SpaceInfo => space_info(space, base),
        Command::EnergySweep { field, p, radii, fit, window } => {
            let f = parse_field(space, field)?;
            let fit: FitModel = fit.parse()?;
            if *window == 0 {
                return Err(CliError::Config("--window must be positive".into()));
            }
            let sweep = ks_sweep_with_config(space, &f, *p, radii, &SweepConfig { window: *window, fit })?;
            let csv = series_csv("r,value", &sweep.radii, &sweep.values);
            let mut result = sweep.to_export_json();
            result["limit"] = json!(sweep.limit());
            result["sandwich_ratio"] = json!(sweep.sandwich_ratio());
            Ok(Outcome::ok(result, merge(base, json!({ "fit": fit, "window": window })), Some(csv)))
        }
        Command::PairCheck { field, field2, p, r, t } => pair_check(space, field, field2, *p, *r, *t, base),
        Command::Solve { boundary, p, r, solver, initial, minimizer_out } => {
            let (set, values) = read_boundary_csv(space, boundary)?;
            let problem = DirichletProblem::new(space, set, values, *p, *r)?;
            let initial = initial.as_deref().map(|spec| parse_field(space, spec)).transpose()?;
            let config = solver_config(solver);
            let report = dirichlet_solve_from(space, &problem, &config, initial.as_ref())?;
            if let Some(path) = minimizer_out {
                std::fs::write(path, field_csv(&report.minimizer))
                    .map_err(|source| CliError::Write { path: path.display().to_string(), source })?;
            }
            let csv = series_csv(
                "iteration,energy",
                &(0..report.energy_history.len()).map(|k| k as f64).collect::<Vec<_>>(),
                &report.energy_history,
            );
            let success = report.converged;
            if !success {
                eprintln!("solver stopped without converging after {} iterations ({:?})", report.iterations, report.stop_reason);
            }
            let result = json!({ "boundary_points": problem.boundary.len(), "report": report });
            Ok(Outcome { result, constants: merge(base, json!({ "solver": config })), csv: Some(csv), success })
        }
        Command::MinimizerSweep { anchors, field, collar, p, radii, solver, reference } => {
            let anchors = read_index_set_csv(space, anchors)?;
            let data = parse_field(space, field)?;
            let reference = reference.as_deref().map(|spec| parse_field(space, spec)).transpose()?;
            let config = solver_config(solver);
            let template = ProblemTemplate { anchors, data, collar: *collar, p: *p };
            let sweep = minimizer_sweep(space, &template, radii, &config, reference.as_ref())?;
            let success = sweep.reports.iter().all(|r| r.converged);
            if !success {
                eprintln!("at least one solve stopped without converging");
            }
            let csv = series_csv("r,energy", &sweep.radii, &sweep.energies);
            Ok(Outcome { result: json!(sweep), constants: merge(base, json!({ "solver": config })), csv: Some(csv), success })
        }
        Command::Measure { field, p, r, cells, bins } => {
            let f = parse_field(space, field)?;
            let cells = match (cells.is_empty(), bins) {
                (false, None) => read_cells(space, cells)?,
                (true, Some(k)) => coordinate_bins(space, *k)?,
                _ => return Err(CliError::Config("give exactly one of --cells or --bins".into())),
            };
            let report = energy_measure(space, &f, *p, *r, &cells)?;
            let idx: Vec<f64> = (0..report.masses.len()).map(|k| k as f64).collect();
            let csv = series_csv("cell,mass", &idx, &report.masses);
            Ok(Outcome::ok(json!(report), base, Some(csv)))
        }
        Command::Poincare { field, p, radius, lambda, mode } => {
            let f = parse_field(space, field)?;
            let mode: PoincareMode = mode.parse()?;
            let report = poincare_check(space, &f, *p, *radius, *lambda, mode)?;
            Ok(Outcome::ok(json!(report), merge(base, json!({ "max_centers": POINCARE_MAX_CENTERS })), None))
        }
        Command::Fundamental { p, r, calibration, fresh } => fundamental(space, common.seed, *p, *r, *calibration, *fresh, base),
        Command::Tv { field, radii, eps } => {
            let f = parse_field(space, field)?;
            let report = total_variation(space, &f, radii)?;
            let csv = series_csv("r,value", &report.sweep.radii, &report.sweep.values);
            let mut result = tv_json(&report);
            if !eps.is_empty() {
                result["lip_relaxed"] = json!(miranda_tv_upper(space, &f, eps)?);
            }
            Ok(Outcome::ok(result, merge(base, json!({ "net_dilation": NET_DILATION })), Some(csv)))
        }
        Command::Perimeter { set, arc: arcs, radii } => {
            let set = match (set, arcs.is_empty()) {
                (Some(path), true) => read_index_set_csv(space, path)?,
                (None, false) => {
                    let mut acc = IndexSet::empty();
                    for spec in arcs {
                        let (a, b) = spec
                            .split_once(':')
                            .and_then(|(a, b)| Some((a.parse::<f64>().ok()?, b.parse::<f64>().ok()?)))
                            .ok_or_else(|| CliError::Config(format!("arc `{spec}` is not `a:b`")))?;
                        acc = acc.union(&arc(space, a, b)?);
                    }
                    acc
                }
                _ => return Err(CliError::Config("give exactly one of --set or --arc".into())),
            };
            let report = perimeter(space, &set, radii)?;
            let csv = series_csv("r,value", &report.sweep.radii, &report.sweep.values);
            let mut result = tv_json(&report);
            result["set_size"] = json!(set.len());
            Ok(Outcome::ok(result, merge(base, json!({ "jump_constant": JUMP_CONSTANT })), Some(csv)))
        }
        Command::CompareBv { fields, radii, eps } => {
            let named = fields
                .iter()
                .map(|spec| Ok((spec.clone(), parse_field(space, spec)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let report = comparability_report(space, &named, radii, eps)?;
            let csv = report.to_csv();
            Ok(Outcome::ok(json!(report), merge(base, json!({ "net_dilation": NET_DILATION })), Some(csv)))
        }
    }
}

fn space_info(space: &PointCloudSpace, base: Value) -> Result<Outcome, CliError> {
    let mut radii = Vec::new();
    let mut r = space.min_radius();
    while 2.0 * r <= 0.5 * space.diameter_bound() && radii.len() < 6 {
        radii.push(r);
        r *= 2.0;
    }
    let doubling = if radii.is_empty() || space.len() < 2 {
        None
    } else {
        let stride = space.len().div_ceil(POINCARE_MAX_CENTERS);
        let sample = IndexSet::from_predicate(space.len(), |i| i % stride == 0);
        Some(doubling_estimate(space, &radii, &sample)?)
    };
    let result = json!({
        "n": space.len(),
        "dim": space.has_coordinates().then(|| space.dim()),
        "metric": space.metric(),
        "total_mass": space.total_mass(),
        "resolution": space.resolution(),
        "min_radius": space.min_radius(),
        "diameter_bound": space.diameter_bound(),
        "doubling": doubling,
    });
    Ok(Outcome::ok(result, merge(base, json!({ "net_dilation": DEFAULT_DILATION })), None))
}

fn coordinate_bins(space: &PointCloudSpace, k: usize) -> Result<Vec<IndexSet>, CliError> {
    if k == 0 || !space.has_coordinates() {
        return Err(CliError::Config("--bins needs a positive count and a coordinate space".into()));
    }
    let xs: Vec<f64> = (0..space.len()).map(|i| space.coords(i)[0]).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo).max(f64::MIN_POSITIVE);
    let label = |x: f64| (((x - lo) / width * k as f64) as usize).min(k - 1);
    Ok((0..k).map(|c| IndexSet::from_predicate(space.len(), |i| label(xs[i]) == c)).filter(|s| !s.is_empty()).collect())
}

fn pair_check(space: &PointCloudSpace, field: &str, field2: &str, p: f64, r: f64, t: f64, base: Value) -> Result<Outcome, CliError> {
    if !(t > 0.0) {
        return Err(CliError::Config("--t must be positive".into()));
    }
    let f = parse_field(space, field)?;
    let g = parse_field(space, field2)?;
    let pair = ks_pair(space, &f, &g, p, r)?;
    let energy = |h: &ScalarField| ks_energy(space, h, p, r).map(|e| e.value);
    let up = energy(&f.combine(1.0, &g, t)?)?;
    let dn = energy(&f.combine(1.0, &g, -t)?)?;
    let central = (up - dn) / (2.0 * t);
    let lap = p_laplacian(space, &f, p, r)?;
    let weak = compensated_sum((0..space.len()).map(|i| space.weight(i) * lap[i] * g[i]));
    let result = json!({
        "p": p,
        "r": r,
        "energy_f": energy(&f)?,
        "pairing": pair,
        "derivative": { "t": t, "central_difference": central, "exact": p * pair, "error": (central - p * pair).abs() },
        "weak_form": { "lhs": weak, "rhs": -pair, "gap": (weak + pair).abs() },
    });
    Ok(Outcome::ok(result, base, None))
}

fn fundamental(
    space: &PointCloudSpace,
    seed: u64,
    p: f64,
    r: Option<f64>,
    calibration: usize,
    fresh: usize,
    base: Value,
) -> Result<Outcome, CliError> {
    if calibration == 0 {
        return Err(CliError::Config("--calibration must be positive".into()));
    }
    if !space.has_coordinates() {
        return Err(CliError::Config("fundamental needs a coordinate space for its random fields".into()));
    }
    let r = r.unwrap_or(3.5 * space.resolution());
    let run = |s: u64, kappa: f64| -> Result<_, CliError> {
        let setup = FundamentalSetup::random(space, s, p, r)?;
        let f = ScalarField::random_smooth(space, s.wrapping_add(10_000), 3)?.scaled(0.1);
        let g = ScalarField::random_smooth(space, s.wrapping_add(20_000), 3)?.map(|v| 0.1 * v + 1.0);
        Ok(fundamental_estimate_check(space, &f, &g, &setup, kappa)?)
    };
    let cal = (0..calibration as u64).map(|k| run(seed.wrapping_add(k), 0.0)).collect::<Result<Vec<_>, _>>()?;
    let kappa = calibrate_kappa(&cal);
    let fresh_offset = seed.wrapping_add(1_000_000);
    let checked = (0..fresh as u64).map(|k| run(fresh_offset.wrapping_add(k), kappa)).collect::<Result<Vec<_>, _>>()?;
    let failures = checked.iter().filter(|c| c.slack < 0.0).count();
    let result = json!({
        "p": p,
        "r": r,
        "kappa": kappa,
        "calibration_seeds": [seed, seed.wrapping_add(calibration as u64)],
        "fresh_seeds": [fresh_offset, fresh_offset.wrapping_add(fresh as u64)],
        "calibration_max_required": kappa,
        "fresh_max_required": checked.iter().map(|c| c.required_kappa).fold(0.0, f64::max),
        "violations": failures,
        "fresh": checked,
    });
    Ok(Outcome { result, constants: base, csv: None, success: failures == 0 })
}
