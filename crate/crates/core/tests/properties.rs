mod common;

use common::random_points;
use fieldsplit::deployment::{assign_sensors, deploy_greedy, kmeans_baseline, min_cover_oracle};
use fieldsplit::energy::{CommProfile, UavEnergyParams};
use fieldsplit::field::{build_adjacency, distance, generate_field, FieldSpec, Layout, Point, SensorField};
use fieldsplit::planner::{plan_rounds, plan_route, round_count, LegPhase, Routing};
use fieldsplit::tsp::{brute_force_oracle, solve_exact, DistanceMatrix};
use proptest::prelude::*;

fn field(n: usize, side: f64, cr: f64, seed: u64) -> SensorField {
    SensorField::new(random_points(n, side, seed), side, cr, 0.0).unwrap()
}

#[test]
fn csr_matches_dense_range_test() {
    for seed in 0..40 {
        let f = field(30, 800.0, 150.0 + seed as f64 * 5.0, seed);
        let adj = build_adjacency(&f);
        assert_eq!(adj.row_offsets().len(), f.len() + 1);
        assert_eq!(*adj.row_offsets().last().unwrap(), adj.column_indices().len());
        for i in 0..f.len() {
            let dense: Vec<usize> = (0..f.len())
                .filter(|&j| j != i && distance(f.sensors()[i], f.sensors()[j]) <= f.comm_range_m())
                .collect();
            assert_eq!(adj.neighbors(i), dense.as_slice());
            for &j in &dense {
                assert!(adj.contains(j, i), "symmetry");
            }
        }
    }
}

#[test]
fn greedy_always_covers() {
    for seed in 0..500u64 {
        let n = 5 + (seed % 60) as usize;
        let side = 300.0 + (seed % 7) as f64 * 150.0;
        let f = field(n, side, 120.0 + (seed % 5) as f64 * 40.0, seed);
        let dep = deploy_greedy(&f, &build_adjacency(&f)).unwrap();
        dep.verify(&f).unwrap();
        assert_eq!(dep.loads.values().sum::<usize>(), n);
    }
}

#[test]
fn greedy_within_logarithmic_factor_of_optimum() {
    for seed in 0..150u64 {
        let n = 3 + (seed % 10) as usize;
        let f = field(n, 700.0, 180.0 + (seed % 4) as f64 * 60.0, seed);
        let adj = build_adjacency(&f);
        let greedy = deploy_greedy(&f, &adj).unwrap().edge_count();
        let opt = min_cover_oracle(&f, &adj).unwrap();
        assert!(opt <= greedy);
        assert!(greedy as f64 <= ((n as f64).ln() + 1.0) * opt as f64, "seed {seed}: {greedy} vs {opt}");
    }
}

#[test]
fn assignment_replay_is_stable() {
    for seed in 0..50 {
        let f = field(40, 900.0, 220.0, seed);
        let adj = build_adjacency(&f);
        let dep = deploy_greedy(&f, &adj).unwrap();
        let (assignment, loads) = assign_sensors(&f, &dep.edge_indices, &adj).unwrap();
        assert_eq!(assignment, dep.assignment);
        assert_eq!(loads, dep.loads);
    }
}

#[test]
fn kmeans_heads_cover_their_clusters() {
    for seed in 0..60 {
        let f = field(20 + (seed % 30) as usize, 800.0, 200.0, seed);
        let dep = kmeans_baseline(&f, seed);
        dep.verify(&f).unwrap();
        assert!(dep.edge_count() >= (f.len() as f64).sqrt().floor() as usize);
        assert_eq!(kmeans_baseline(&f, seed), dep);
    }
}

#[test]
fn seeded_pipeline_is_deterministic() {
    let spec = FieldSpec {
        acres: 140.0,
        acres_per_sensor: 4.0,
        sensor_count: None,
        layout: Layout::SeededRandom,
        seed: 99,
    };
    let run = || {
        let f = generate_field(&spec, 200.0, 100.0).unwrap();
        let dep = deploy_greedy(&f, &build_adjacency(&f)).unwrap();
        let plan = plan_rounds(
            Point::new(0.0, 0.0),
            &f,
            &dep,
            &UavEnergyParams::default(),
            &CommProfile::default(),
            Routing::ExactTsp,
        )
        .unwrap();
        serde_json::to_string(&(f, dep, plan)).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn exact_solver_agrees_with_enumeration() {
    for n in 4..=9 {
        for seed in 0..30 {
            let d = DistanceMatrix::from_points(&random_points(n, 1000.0, 7000 + seed));
            let a = solve_exact(&d).unwrap().length;
            let b = brute_force_oracle(&d).unwrap().length;
            assert!((a - b).abs() <= 1e-9 * b);
        }
    }
}

#[test]
fn gamma_never_decreases_with_budget() {
    let f = field(30, 700.0, 200.0, 5);
    let dep = deploy_greedy(&f, &build_adjacency(&f)).unwrap();
    let mut params = UavEnergyParams::default();
    let mut prev = 0;
    for k in 0..100 {
        params.beta_j = 5.0e4 * (k + 1) as f64;
        let p = plan_rounds(Point::new(0.0, 0.0), &f, &dep, &params, &CommProfile::default(), Routing::ExactTsp)
            .unwrap();
        assert!(p.gamma >= prev);
        prev = p.gamma;
    }
    assert!(prev > 1);
}

#[test]
fn zero_approach_and_return_match_closed_form() {
    // Base on top of the only edge: approach and return legs vanish.
    let e = Point::new(50.0, 50.0);
    let params = UavEnergyParams {
        beta_j: 1.0e5,
        ..UavEnergyParams::default()
    };
    let p = plan_route(e, &[(0, e)], &params, &CommProfile::default()).unwrap();
    assert_eq!(p.gamma, (params.beta_j / p.round_energy_j).floor() as u64);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn budget_is_never_overdrawn(
        seed in 0u64..10_000,
        n in 1usize..12,
        beta in 1.0e4f64..2.0e6,
        bx in 0.0f64..600.0,
        by in 0.0f64..600.0,
    ) {
        let pts = random_points(n, 600.0, seed);
        let stops: Vec<(usize, Point)> = pts.into_iter().enumerate().collect();
        let params = UavEnergyParams { beta_j: beta, ..UavEnergyParams::default() };
        let p = plan_route(Point::new(bx, by), &stops, &params, &CommProfile::default()).unwrap();
        let (round, first, ret) = p.ledger_totals();
        prop_assert!((round - p.round_energy_j).abs() <= 1e-9 * p.round_energy_j);
        prop_assert!((first - p.first_energy_j).abs() <= 1e-9 * p.first_energy_j);
        prop_assert!((ret - p.return_energy_j).abs() <= 1e-9 * p.return_energy_j.max(1.0));
        if p.gamma == 0 {
            prop_assert!(p.first_energy_j + p.return_energy_j > beta);
        } else {
            prop_assert!(p.consumed_j <= beta * (1.0 + 1e-12));
            prop_assert!(p.residual_energy_j >= -1e-9 * beta);
            // Before each non-final round the battery still covers that round plus the way home.
            let mut budget = beta - p.first_energy_j;
            for _ in 1..p.gamma {
                prop_assert!(budget + 1e-9 >= p.round_energy_j + p.return_energy_j);
                budget -= p.round_energy_j;
            }
            prop_assert!(budget < p.round_energy_j + p.return_energy_j);
        }
        let c = round_count(p.round_energy_j, p.first_energy_j, p.return_energy_j, beta);
        prop_assert_eq!(c.gamma, p.gamma);
        prop_assert!(p.legs.iter().filter(|l| l.phase == LegPhase::Approach).count() == 1);
    }
}
