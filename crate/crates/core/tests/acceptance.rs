//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any criterion fails. All tolerances are pinned below.

use std::f64::consts::PI;
use std::time::Instant;

use kslab_core::bv::{comparability_report, perimeter, total_variation};
use kslab_core::covers::{maximal_eps_net, overlap_count, partition_of_unity};
use kslab_core::energy::{ks_energy, ks_energy_local, ks_pair, ks_sweep};
use kslab_core::laplacian::{dirichlet_solve, minimizer_sweep, p_laplacian, ProblemTemplate, SolverConfig};
use kslab_core::lipschitz::lip_approx;
use kslab_core::measures::{calibrate_kappa, fundamental_estimate_check, poincare_check, FundamentalSetup, PoincareMode};
use kslab_core::sum::compensated_sum;
use kslab_core::{circle_grid, interval_grid, torus2d_grid, IndexSet, PointCloudSpace, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL_LIMIT_P2: f64 = 0.02;
const TOL_LIMIT_P3: f64 = 0.03;
const MAX_SECONDS_C1: f64 = 30.0;
const TOL_PERIMETER_ONE: f64 = 0.02;
const TOL_PERIMETER_TWO: f64 = 0.03;
const MAX_SUP_DISTANCE: f64 = 0.03;
const SWEEP_SLACK: f64 = 0.10;
const TOL_MINIMIZER_ENERGY: f64 = 0.05;
const TOL_WEAK_FORM: f64 = 1e-12;
const TOL_INEQUALITY: f64 = 1e-12;
const DERIVATIVE_FACTOR: f64 = 10.0;
const DERIVATIVE_MIN_SHRINK: f64 = 5.0;
const MAX_POINCARE_SPREAD: f64 = 3.0;
const MAX_BAND: f64 = 5.0;
const TOL_PARTITION_SUM: f64 = 1e-12;
const LP_REFINEMENT_SLACK: f64 = 1.05;
const SANDWICH_CONSTANT: f64 = 1.5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------- independent oracles ----------

/// `⨍_{(-1,1)} |t|^p dt` by midpoint quadrature.
fn c1p(p: f64) -> f64 {
    let n = 200_000;
    let h = 2.0 / n as f64;
    (0..n).map(|k| (-1.0 + (k as f64 + 0.5) * h).abs().powf(p)).sum::<f64>() * h / 2.0
}

/// `∫_0^1 |g(θ)|^p dθ` by midpoint quadrature.
fn integral(g: impl Fn(f64) -> f64, p: f64) -> f64 {
    let n = 200_000;
    let h = 1.0 / n as f64;
    (0..n).map(|k| g((k as f64 + 0.5) * h).abs().powf(p)).sum::<f64>() * h
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn sine(s: &PointCloudSpace) -> ScalarField {
    ScalarField::from_fn(s, |x| (2.0 * PI * x[0]).sin()).unwrap()
}

fn arc(s: &PointCloudSpace, a: f64, b: f64) -> IndexSet {
    IndexSet::from_predicate(s.len(), |i| (a..b).contains(&s.coords(i)[0]))
}

// ---------- criteria ----------

fn euclidean_limit(sandwich: &mut Vec<(String, f64)>) -> Outcome {
    let start = Instant::now();
    let s = circle_grid(8000).unwrap();
    let f = sine(&s);
    let radii = [0.2, 0.1, 0.05, 0.025, 0.0125];
    let d = |t: f64| 2.0 * PI * (2.0 * PI * t).cos();
    let target2 = c1p(2.0) * integral(d, 2.0);
    let sweep2 = ks_sweep(&s, &f, 2.0, &radii).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let target3 = c1p(3.0) * integral(d, 3.0);
    let sweep3 = ks_sweep(&s, &f, 3.0, &radii).unwrap();
    for (name, sw) in [("sine p=2", &sweep2), ("sine p=3", &sweep3)] {
        sandwich.push((name.into(), sw.sandwich_ratio().unwrap_or(f64::INFINITY)));
    }
    let (e2, e3) = (rel(sweep2.limit(), target2), rel(sweep3.limit(), target3));
    outcome(
        e2 <= TOL_LIMIT_P2 && e3 <= TOL_LIMIT_P3 && elapsed < MAX_SECONDS_C1,
        format!(
            "p=2 {:.4} vs {:.4} ({:.2}%), p=3 {:.3} vs {:.3} ({:.2}%), p=2 sweep {:.1}s",
            sweep2.limit(),
            target2,
            100.0 * e2,
            sweep3.limit(),
            target3,
            100.0 * e3,
            elapsed
        ),
    )
}

fn nonlocal_perimeter(sandwich: &mut Vec<(String, f64)>) -> Outcome {
    let s = circle_grid(4000).unwrap();
    let radii = [0.1, 0.05, 0.025, 0.0125];
    let one = perimeter(&s, &arc(&s, 0.25, 0.75), &radii).unwrap();
    let two = perimeter(&s, &arc(&s, 0.1, 0.3).union(&arc(&s, 0.55, 0.8)), &radii).unwrap();
    sandwich.push(("arc perimeter".into(), one.sweep.sandwich_ratio().unwrap_or(f64::INFINITY)));
    let (e1, e2) = (rel(one.extrapolated_tv, 1.0), rel(two.extrapolated_tv, 2.0));
    outcome(
        e1 <= TOL_PERIMETER_ONE && e2 <= TOL_PERIMETER_TWO,
        format!("one arc {:.4} ({:.2}%), two arcs {:.4} ({:.2}%)", one.extrapolated_tv, 100.0 * e1, two.extrapolated_tv, 100.0 * e2),
    )
}

fn dirichlet() -> Outcome {
    let s = interval_grid(400).unwrap();
    let ramp = ScalarField::from_fn(&s, |x| x[0]).unwrap();
    let config = SolverConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        let template = ProblemTemplate { anchors: IndexSet::new(vec![0, 399], 400).unwrap(), data: ramp.clone(), collar: 1.0, p };
        let single = dirichlet_solve(&s, &template.at_radius(&s, 0.05).unwrap(), &config).unwrap();
        let dist = single.minimizer.sup_distance(&ramp).unwrap();
        let sweep = minimizer_sweep(&s, &template, &[0.2, 0.1, 0.05, 0.025], &config, Some(&ramp)).unwrap();
        let d = sweep.reference_distances.clone().unwrap();
        let monotone = d.windows(2).all(|w| w[1] <= w[0] * (1.0 + SWEEP_SLACK));
        let target = c1p(p) * integral(|_| 1.0, p);
        let limit = sweep.energy_limit.as_ref().map(|e| e.limit).unwrap_or(f64::NAN);
        let e = rel(limit, target);
        let ok = single.converged
            && sweep.reports.iter().all(|r| r.converged)
            && dist <= MAX_SUP_DISTANCE
            && monotone
            && e <= TOL_MINIMIZER_ENERGY;
        pass &= ok;
        parts.push(format!("p={p}: sup {dist:.4}, dists {:?}, energy {limit:.4} vs {target:.4} ({:.1}%)", round4(&d), 100.0 * e));
    }
    outcome(pass, parts.join("; "))
}

fn round4(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1e4).round() / 1e4).collect()
}

fn weak_form() -> Outcome {
    let s = torus2d_grid(40).unwrap();
    let r = 0.1;
    let mut worst: f64 = 0.0;
    for pair in 0..100u64 {
        let f = ScalarField::random_uniform(&s, 2 * pair);
        let g = ScalarField::random_uniform(&s, 2 * pair + 1);
        for p in [1.5, 2.0, 3.0] {
            let lap = p_laplacian(&s, &f, p, r).unwrap();
            let lhs = compensated_sum((0..s.len()).map(|i| s.weight(i) * lap[i] * g[i]));
            let rhs = -ks_pair(&s, &f, &g, p, r).unwrap();
            worst = worst.max(rel(lhs, rhs));
        }
    }
    outcome(worst <= TOL_WEAK_FORM, format!("300 cases, worst relative gap {worst:.2e}"))
}

fn inequality_suite() -> Outcome {
    let s = circle_grid(500).unwrap();
    let radii = [0.02, 0.05, 0.1];
    let ps = [1.0, 1.5, 2.0, 3.0];
    let mut violations = Vec::new();
    let mut checks = 0usize;
    let mut check = |ok: bool, what: String| {
        checks += 1;
        if !ok {
            violations.push(what);
        }
    };
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = ScalarField::random_uniform(&s, 1000 + seed);
        let g = ScalarField::random_smooth(&s, 2000 + seed, 3).unwrap();
        let p = ps[seed as usize % ps.len()];
        for &r in &radii {
            let e = |h: &ScalarField| ks_energy(&s, h, p, r).unwrap().value;
            let (ef, eg) = (e(&f), e(&g));
            let slack = |x: f64| TOL_INEQUALITY * x.abs().max(1e-300);

            let t: f64 = rng.random_range(0.0..1.0);
            let conv = e(&f.combine(t, &g, 1.0 - t).unwrap());
            let bound = t * ef + (1.0 - t) * eg;
            check(conv <= bound + slack(bound), format!("convexity seed {seed} r {r}"));

            let lo: f64 = rng.random_range(-0.5..0.0);
            for (name, h) in [("abs", f.map(f64::abs)), ("clamp", f.map(|v| v.clamp(lo, lo + 0.7)))] {
                check(e(&h) <= ef + slack(ef), format!("contraction {name} seed {seed} r {r}"));
            }

            let sum = e(&f.combine(1.0, &g, 1.0).unwrap()).powf(1.0 / p);
            let mink = ef.powf(1.0 / p) + eg.powf(1.0 / p);
            check(sum <= mink + slack(mink), format!("minkowski seed {seed} r {r}"));

            let prod = e(&f.zip_with(&g, |a, b| a * b).unwrap());
            let leib = 2f64.powf(p - 1.0) * (f.sup_norm().powf(p) * eg + g.sup_norm().powf(p) * ef);
            check(prod <= leib + slack(leib), format!("leibniz seed {seed} r {r}"));

            // random partition into 2..=5 cells
            let k = rng.random_range(2..=5);
            let labels: Vec<usize> = (0..s.len()).map(|_| rng.random_range(0..k)).collect();
            let cells: Vec<IndexSet> = (0..k).map(|c| IndexSet::from_predicate(s.len(), |i| labels[i] == c)).collect();
            let parts: f64 = cells.iter().filter(|c| !c.is_empty()).map(|c| ks_energy_local(&s, &f, p, r, c).unwrap().value).sum();
            check((parts - ef).abs() <= slack(ef), format!("additivity seed {seed} r {r}"));

            let lo_arc: f64 = rng.random_range(0.0..0.7);
            let u = arc(&s, lo_arc, lo_arc + 0.2);
            let near = s.neighborhood(&u, r);
            let other = ScalarField::new(&s, (0..s.len()).map(|i| if near.contains(i) { f[i] } else { g[i] }).collect()).unwrap();
            let same = ks_energy_local(&s, &f, p, r, &u).unwrap().value == ks_energy_local(&s, &other, p, r, &u).unwrap().value;
            check(same, format!("locality seed {seed} r {r}"));
        }
    }
    outcome(
        violations.is_empty(),
        format!("{checks} checks over 50 seeds x 3 radii, {} violations {:?}", violations.len(), violations.iter().take(3).collect::<Vec<_>>()),
    )
}

fn pairing_derivative() -> Outcome {
    let s = circle_grid(1000).unwrap();
    let r = 0.05;
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [2.0, 3.0] {
        for seed in 0..3u64 {
            let f = ScalarField::random_smooth(&s, 10 + seed, 3).unwrap();
            let g = ScalarField::random_uniform(&s, 20 + seed);
            let exact = p * ks_pair(&s, &f, &g, p, r).unwrap();
            let err = |t: f64| {
                let up = ks_energy(&s, &f.combine(1.0, &g, t).unwrap(), p, r).unwrap().value;
                let dn = ks_energy(&s, &f.combine(1.0, &g, -t).unwrap(), p, r).unwrap().value;
                ((up - dn) / (2.0 * t) - exact).abs()
            };
            // third-derivative proxy p(p-1) r^{-p} Σ μ ⨍ |Δg|^3 M^{p-3}, M ≥ |Δf| + |Δg|
            let m = 2.0 * (f.sup_norm() + g.sup_norm());
            let proxy = p * (p - 1.0) * m.powf(p - 3.0) * ks_energy(&s, &g, 3.0, r).unwrap().value * r.powf(3.0 - p);
            let e_f = ks_energy(&s, &f, p, r).unwrap().value;
            let (e3, e4) = (err(1e-3), err(1e-4));
            let floor = 64.0 * f64::EPSILON * e_f / 1e-4;
            let ok = e3 <= DERIVATIVE_FACTOR * 1e-3 * proxy && (e4 * DERIVATIVE_MIN_SHRINK <= e3 || e4 <= floor);
            pass &= ok;
            if seed == 0 {
                parts.push(format!("p={p}: err(1e-3) {e3:.2e} <= {:.2e}, err(1e-4) {e4:.2e}", DERIVATIVE_FACTOR * 1e-3 * proxy));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

fn fundamental() -> Outcome {
    let spaces = [circle_grid(600).unwrap(), torus2d_grid(30).unwrap()];
    let run = |seed: u64| {
        let s = &spaces[(seed % 2) as usize];
        let r = 3.5 * s.resolution();
        let p = [1.5, 2.0, 3.0][(seed / 2 % 3) as usize];
        let setup = FundamentalSetup::random(s, seed, p, r).unwrap();
        let f = ScalarField::random_smooth(s, 10_000 + seed, 3).unwrap().scaled(0.1);
        let g = ScalarField::random_smooth(s, 20_000 + seed, 3).unwrap().map(|v| 0.1 * v + 1.0);
        (s, f, g, setup)
    };
    let calibration: Vec<_> = (0..50u64)
        .map(|seed| {
            let (s, f, g, setup) = run(seed);
            fundamental_estimate_check(s, &f, &g, &setup, 0.0).unwrap()
        })
        .collect();
    let kappa = calibrate_kappa(&calibration);
    let fresh: Vec<_> = (1000..1050u64)
        .map(|seed| {
            let (s, f, g, setup) = run(seed);
            fundamental_estimate_check(s, &f, &g, &setup, kappa).unwrap()
        })
        .collect();
    let failures = fresh.iter().filter(|r| r.slack < 0.0).count();
    let worst = fresh.iter().map(|r| r.required_kappa).fold(0.0, f64::max);
    outcome(
        failures == 0,
        format!("calibrated kappa {kappa:.4e}, fresh max required {worst:.4e}, {failures}/50 negative slacks"),
    )
}

fn poincare() -> Outcome {
    let s = circle_grid(2000).unwrap();
    let f = sine(&s);
    let mut pass = true;
    let mut parts = Vec::new();
    for mode in [PoincareMode::Lip, PoincareMode::EnergyMeasure] {
        let ratios: Vec<f64> = [0.1, 0.2, 0.4].iter().map(|&r| poincare_check(&s, &f, 2.0, r, 1.0, mode).unwrap().worst_ratio).collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        let spread = hi / lo;
        pass &= lo > 0.0 && spread < MAX_POINCARE_SPREAD;
        parts.push(format!("{mode:?} {:?} spread {spread:.2}", round4(&ratios)));
    }
    outcome(pass, parts.join("; "))
}

fn bv_comparability() -> Outcome {
    let s = circle_grid(4000).unwrap();
    let radii = [0.1, 0.05, 0.025, 0.0125];
    let eps = [0.1, 0.05, 0.025];
    let smooth_step = |t: f64| {
        let w = 0.05;
        let up = ((t - 0.25) / w).clamp(-0.5, 0.5);
        let dn = ((t - 0.75) / w).clamp(-0.5, 0.5);
        0.5 * ((PI * up).sin() - (PI * dn).sin())
    };
    let fields = vec![
        ("ramp".to_string(), ScalarField::from_fn(&s, |x| x[0]).unwrap()),
        ("sine".to_string(), sine(&s)),
        ("smoothed-indicator".to_string(), ScalarField::from_fn(&s, |x| smooth_step(x[0])).unwrap()),
    ];
    let rep = comparability_report(&s, &fields, &radii, &eps).unwrap();
    let band = rep.band.unwrap_or(f64::INFINITY);
    let rows: Vec<String> = rep.rows.iter().map(|r| format!("{} {:.3}", r.name, r.ratio.unwrap_or(f64::NAN))).collect();
    // the sine row must also reproduce its own limit
    let tv = total_variation(&s, &fields[1].1, &radii).unwrap().extrapolated_tv;
    outcome(band <= MAX_BAND, format!("ratios [{}], band K = {band:.3}, sine TV {tv:.4}", rows.join(", ")))
}

fn covers_suite() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, s, eps_list) in [
        ("circle", circle_grid(2000).unwrap(), vec![0.1, 0.05, 0.025]),
        ("torus", torus2d_grid(60).unwrap(), vec![0.2, 0.1, 0.05]),
    ] {
        let d = s.dim() as i32;
        // ε-separated centers in B(x, 5ε) lie in disjoint ε/2-balls inside B(x, 5.5ε)
        let packing = 11usize.pow(d as u32);
        let f = ScalarField::from_fn(&s, |x| x.iter().map(|c| (2.0 * PI * c).sin()).sum()).unwrap();
        let mut errors = Vec::new();
        for &eps in &eps_list {
            let net = maximal_eps_net(&s, eps).unwrap();
            let c = net.centers.as_slice();
            let separated = c.iter().enumerate().all(|(a, &i)| c[a + 1..].iter().all(|&j| s.distance(i, j) >= eps));
            let covered = (0..s.len()).all(|x| c.iter().any(|&i| s.distance(x, i) < eps));
            let k5 = overlap_count(&s, &net, 5.0).unwrap();
            let pou = partition_of_unity(&s, &net).unwrap();
            let sum_err = pou.max_sum_error();
            pass &= separated && covered && k5 <= packing && sum_err <= TOL_PARTITION_SUM;
            errors.push(lip_approx(&s, &f, &pou, 2.0).unwrap().lp_error);
            if eps == eps_list[0] {
                parts.push(format!("{name}: K(5) {k5} <= {packing}, sum err {sum_err:.1e}"));
            }
        }
        let decreasing = errors.windows(2).all(|w| w[1] <= w[0] * LP_REFINEMENT_SLACK);
        pass &= decreasing;
        parts.push(format!("{name} L2 errors {:?}", round4(&errors)));
    }
    outcome(pass, parts.join("; "))
}

fn main() {
    let mut sandwich = Vec::new();
    let criteria: Vec<(&str, Box<dyn FnOnce(&mut Vec<(String, f64)>) -> Outcome>)> = vec![
        ("euclidean-limit constant", Box::new(euclidean_limit)),
        ("nonlocal perimeter", Box::new(nonlocal_perimeter)),
        ("p-harmonic Dirichlet", Box::new(|_| dirichlet())),
        ("weak-form identity", Box::new(|_| weak_form())),
        ("inequality suite", Box::new(|_| inequality_suite())),
        ("pairing derivative", Box::new(|_| pairing_derivative())),
        ("fundamental estimate", Box::new(|_| fundamental())),
        ("Poincaré scale-stability", Box::new(|_| poincare())),
        ("BV comparability", Box::new(|_| bv_comparability())),
        ("partition/cover suite", Box::new(|_| covers_suite())),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let o = run(&mut sandwich);
        failed += usize::from(!o.pass);
        println!(
            "{} criterion {:>2} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    let worst = sandwich.iter().map(|(_, q)| *q).fold(0.0, f64::max);
    let ok = worst <= SANDWICH_CONSTANT;
    failed += usize::from(!ok);
    let cases: Vec<String> = sandwich.iter().map(|(n, q)| format!("{n} {q:.3}")).collect();
    println!(
        "{} sweep sandwich: sup/liminf-window <= {SANDWICH_CONSTANT} [{}]",
        if ok { "PASS" } else { "FAIL" },
        cases.join(", ")
    );
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
