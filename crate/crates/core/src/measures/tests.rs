use super::*;
use crate::energy::ks_energy;
use crate::space::{circle_grid, interval_grid, torus2d_grid};
use proptest::prelude::*;
use std::f64::consts::PI;

fn sine(space: &PointCloudSpace) -> ScalarField {
    ScalarField::from_fn(space, |x| (2.0 * PI * x[0]).sin()).unwrap()
}

fn arcs(space: &PointCloudSpace, cuts: &[f64]) -> Vec<IndexSet> {
    (0..cuts.len() - 1)
        .map(|k| IndexSet::from_predicate(space.len(), |i| (cuts[k]..cuts[k + 1]).contains(&space.coords(i)[0])))
        .collect()
}

#[test]
fn single_cell_and_constant() {
    let s = circle_grid(500).unwrap();
    let f = sine(&s);
    let rep = energy_measure(&s, &f, 2.0, 0.05, &[IndexSet::full(500)]).unwrap();
    assert_eq!(rep.masses[0], ks_energy(&s, &f, 2.0, 0.05).unwrap().value);
    let cells = arcs(&s, &[0.0, 0.3, 0.5, 1.0]);
    let rep = energy_measure(&s, &ScalarField::constant(&s, 1.0), 2.0, 0.05, &cells).unwrap();
    assert!(rep.masses.iter().all(|&m| m == 0.0));
}

#[test]
fn arc_masses_match_quadrature() {
    let s = circle_grid(4000).unwrap();
    let f = sine(&s);
    let cuts = [0.0, 0.1, 0.35, 0.6, 1.0];
    let rep = energy_measure(&s, &f, 2.0, 0.02, &arcs(&s, &cuts)).unwrap();
    let sum: f64 = rep.masses.iter().sum();
    assert!((sum - rep.total).abs() <= 1e-12 * rep.total);
    for (k, m) in rep.masses.iter().enumerate() {
        // (1/3) ∫_arc |f′|², midpoint quadrature
        let (a, b) = (cuts[k], cuts[k + 1]);
        let steps = 20_000;
        let h = (b - a) / steps as f64;
        let q: f64 = (0..steps).map(|j| (2.0 * PI * (2.0 * PI * (a + (j as f64 + 0.5) * h)).cos()).powi(2) * h).sum::<f64>() / 3.0;
        assert!((m - q).abs() <= 0.05 * q, "arc {k}: {m} vs {q}");
    }
}

#[test]
fn partition_errors() {
    let s = circle_grid(100).unwrap();
    let half = IndexSet::from_predicate(100, |i| i < 50);
    let f = ScalarField::constant(&s, 0.0);
    assert!(matches!(energy_measure(&s, &f, 2.0, 0.05, &[half.clone()]), Err(Error::CellsNotPartition(_))));
    assert!(matches!(
        energy_measure(&s, &f, 2.0, 0.05, &[half.clone(), IndexSet::full(100)]),
        Err(Error::CellsNotPartition(_))
    ));
}

#[test]
fn ramp_density_is_flat() {
    let s = interval_grid(801).unwrap();
    let f = ScalarField::from_fn(&s, |x| 3.0 * x[0]).unwrap();
    for p in [1.0, 2.0, 3.0] {
        let rep = density_vs_mu(&s, &f, p, 0.05).unwrap();
        assert_eq!(rep.p_is_one, p == 1.0);
        // lattice oracle: h = 1/800, r = 40h, open ball spans k = -39..=39
        let lattice = (-39i32..=39).map(|k| (k.abs() as f64).powf(p)).sum::<f64>() / 79.0 / 40f64.powf(p);
        let expect = 3f64.powf(p) * lattice;
        let continuum = 3f64.powf(p) / (p + 1.0);
        assert!((expect - continuum).abs() <= 0.05 * continuum);
        for i in 100..=700 {
            assert!((rep.density[i] - expect).abs() <= 1e-12 * expect, "p={p}: {} vs {expect}", rep.density[i]);
        }
    }
    let c = density_vs_mu(&s, &ScalarField::constant(&s, 2.0), 2.0, 0.05).unwrap();
    assert_eq!(c.max_density, 0.0);
}

#[test]
fn torus_density_is_stable_under_halving() {
    let s = torus2d_grid(80).unwrap();
    let f = ScalarField::from_fn(&s, |x| (2.0 * PI * x[0]).sin() + (2.0 * PI * x[1]).cos()).unwrap();
    let a = density_vs_mu(&s, &f, 2.0, 0.2).unwrap().max_density;
    let b = density_vs_mu(&s, &f, 2.0, 0.1).unwrap().max_density;
    assert!((a / b - 1.0).abs() <= 0.2, "{a} {b}");
}

#[test]
fn poincare_constant_field_and_ramp() {
    let s = interval_grid(801).unwrap();
    let c = ScalarField::constant(&s, 1.0);
    let rep = poincare_check(&s, &c, 2.0, 0.1, 1.0, PoincareMode::Lip).unwrap();
    assert_eq!(rep.worst_ratio, 0.0);
    // interior ramp balls: ratio 1/((p+1)λ); sharp 1D constant (2R/π)^p/R^p = 4/π² at p = 2
    let sub = s.subspace(&IndexSet::from_predicate(801, |i| (200..=600).contains(&i))).unwrap();
    let ramp = ScalarField::from_fn(&sub, |x| x[0]).unwrap();
    for p in [2.0, 3.0] {
        let rep = poincare_check(&sub, &ramp, p, 0.05, 1.0, PoincareMode::Lip).unwrap();
        assert!((rep.worst_ratio - 1.0 / (p + 1.0)).abs() < 0.1 / (p + 1.0) || rep.worst_ratio <= 1.0 / (p + 1.0), "{rep:?}");
    }
    let rep = poincare_check(&sub, &ramp, 2.0, 0.05, 1.0, PoincareMode::Lip).unwrap();
    let sharp = 4.0 / PI.powi(2);
    assert!(rep.worst_ratio <= 4.0 * sharp && rep.worst_ratio >= sharp / 4.0, "{rep:?}");
}

#[test]
fn poincare_is_scale_stable_on_circle() {
    let s = circle_grid(2000).unwrap();
    let f = sine(&s);
    for mode in [PoincareMode::Lip, PoincareMode::EnergyMeasure] {
        let r: Vec<f64> = [0.1, 0.2, 0.4].iter().map(|&rr| poincare_check(&s, &f, 2.0, rr, 1.0, mode).unwrap().worst_ratio).collect();
        let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(lo > 0.0 && hi / lo < 3.0, "{mode:?}: {r:?}");
    }
    assert!(matches!(poincare_check(&s, &f, 2.0, 1e-4, 1.0, PoincareMode::Lip), Err(Error::RadiusBelowResolution { .. })));
}

#[test]
fn cutoff_examples() {
    let s = interval_grid(101).unwrap();
    let full = IndexSet::full(101);
    let inner = IndexSet::from_predicate(101, |i| (40..=60).contains(&i));
    let c = cutoff(&s, &inner, &full).unwrap();
    assert!(c.values.values().iter().all(|&v| v == 1.0));

    let outer = IndexSet::from_predicate(101, |i| (30..=70).contains(&i));
    let c = cutoff(&s, &inner, &outer).unwrap();
    // d(A′, A^c) = 11 steps
    assert!((c.separation - 0.11).abs() < 1e-12);
    for i in 0..101 {
        let v = c.values[i];
        if inner.contains(i) {
            assert_eq!(v, 1.0);
        } else if !outer.contains(i) {
            assert_eq!(v, 0.0);
        }
    }
    // point 35: d(x, A^c) = 6 steps → 6/11
    assert!((c.values[35] - 6.0 / 11.0).abs() < 1e-12);
    // Lipschitz constant 1/d(A′, A^c) by pair scan
    let mut lip: f64 = 0.0;
    for i in 0..101 {
        for j in i + 1..101 {
            lip = lip.max((c.values[i] - c.values[j]).abs() / s.distance(i, j));
        }
    }
    assert!((lip - 1.0 / 0.11).abs() < 1e-9, "{lip}");
    assert!(matches!(cutoff(&s, &outer, &inner), Err(Error::TouchingBoundary)));
}

#[test]
fn fundamental_trivial_cases() {
    let s = circle_grid(400).unwrap();
    let r = 0.02;
    let f = ScalarField::random_smooth(&s, 1, 3).unwrap();
    let mut setup = FundamentalSetup::random(&s, 3, 2.0, r).unwrap();
    let same = fundamental_estimate_check(&s, &f, &f, &setup, 0.0).unwrap();
    assert_eq!(same.coupling_integral, 0.0);
    assert!(same.slack >= 0.0);
    setup.b = IndexSet::empty();
    let zero = ScalarField::constant(&s, 0.0);
    let rep = fundamental_estimate_check(&s, &f, &zero, &setup, 1.0).unwrap();
    assert!(rep.slack >= 0.0, "{rep:?}");
}

#[test]
fn fundamental_structural_constant_suffices() {
    for (k, s) in [circle_grid(600).unwrap(), torus2d_grid(30).unwrap()].iter().enumerate() {
        let r = 3.5 * s.resolution();
        let mut kappas = Vec::new();
        for seed in 0..30 {
            let p = [1.5, 2.0, 3.0][seed as usize % 3];
            let setup = FundamentalSetup::random(s, 100 * k as u64 + seed, p, r).unwrap();
            let f = ScalarField::random_smooth(s, 1000 + seed, 3).unwrap().scaled(0.1);
            let g = ScalarField::random_smooth(s, 2000 + seed, 3).unwrap().map(|v| 0.1 * v + 1.0);
            let rep = fundamental_estimate_check(s, &f, &g, &setup, 1.0).unwrap();
            assert!(rep.required_kappa <= 1.0 && rep.slack >= 0.0, "{rep:?}");
            kappas.push(rep.required_kappa);
        }
        assert!(kappas.iter().any(|&k| k > 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn measure_properties(seed in 0u64..500, a in -2.0f64..2.0, b in -2.0f64..2.0, cut in 0.05f64..0.95) {
        let s = circle_grid(300).unwrap();
        let r = 0.03;
        let f = ScalarField::random_uniform(&s, seed);
        let g = ScalarField::random_uniform(&s, seed + 1);
        let cells = arcs(&s, &[0.0, cut, 1.0]);
        let rf = energy_measure(&s, &f, 2.0, r, &cells).unwrap();
        let rg = energy_measure(&s, &g, 2.0, r, &cells).unwrap();
        let h = f.combine(a, &g, b).unwrap();
        let rh = energy_measure(&s, &h, 2.0, r, &cells).unwrap();
        let total: f64 = rh.masses.iter().sum();
        prop_assert!((total - rh.total).abs() <= 1e-12 * rh.total);
        for k in 0..2 {
            let bound = a.abs() * rf.masses[k].sqrt() + b.abs() * rg.masses[k].sqrt();
            prop_assert!(rh.masses[k].sqrt() <= bound * (1.0 + 1e-12));
        }
        // monotone in the set argument
        let sub = IndexSet::from_predicate(300, |i| cells[0].contains(i) && i % 2 == 0);
        let m = crate::energy::ks_energy_local(&s, &f, 2.0, r, &cells[0]).unwrap().value;
        if !sub.is_empty() {
            let ms = crate::energy::ks_energy_local(&s, &f, 2.0, r, &sub).unwrap().value;
            prop_assert!(ms <= m);
        }
    }

    #[test]
    fn locality(seed in 0u64..500, lo in 0.1f64..0.4, width in 0.05f64..0.3) {
        let s = circle_grid(300).unwrap();
        let r = 0.03;
        let f = ScalarField::random_uniform(&s, seed);
        let u = IndexSet::from_predicate(300, |i| (lo..lo + width).contains(&s.coords(i)[0]));
        let near = s.neighborhood(&u, r);
        let noise = ScalarField::random_uniform(&s, seed + 99);
        let g = ScalarField::new(&s, (0..300).map(|i| if near.contains(i) { f[i] } else { noise[i] }).collect()).unwrap();
        let ef = crate::energy::ks_energy_local(&s, &f, 2.0, r, &u).unwrap().value;
        let eg = crate::energy::ks_energy_local(&s, &g, 2.0, r, &u).unwrap().value;
        prop_assert_eq!(ef, eg);
    }
}
