mod common;

use arrival_povm::bohm::{
    guidance_velocity, initial_positions, simulate_family, trajectory_outcome, ArrivalSurface,
    PacketModel, SimConfig, SimulationSpec, StepControl, TrajectoryOutcome,
};
use arrival_povm::checks::{axial_defect, delta, inversion_defect};
use arrival_povm::distributions::{
    combine, tv_distance, BinnedDistribution, DirectionFamily, TimeGrid,
};
use arrival_povm::fit::{brute_force_fit, fit, FitOptions};
use arrival_povm::spin::Direction;
use common::*;
use rand::Rng;

fn inversion_symmetric(seed: u64, bins: usize, pairs: usize) -> DirectionFamily {
    let mut r = rng(seed);
    let grid = TimeGrid::new(0.0, 1.0, bins).unwrap();
    let entries = (0..pairs)
        .flat_map(|_| {
            let n = random_direction(&mut r);
            let d = random_distribution(&mut r, grid);
            [(n, d.clone()), (-n, d)]
        })
        .collect();
    DirectionFamily::new(grid, entries, None).unwrap()
}

#[test]
fn inversion_symmetric_delta_is_twice_sup_tv() {
    for seed in 0..50 {
        let f = inversion_symmetric(seed, 1 + seed as usize % 17, 2 + seed as usize % 5);
        assert_eq!(inversion_defect(&f), 0.0);
        let reps: Vec<_> = f.pairs().map(|((_, p), _)| p.clone()).collect();
        let mut sup = 0.0f64;
        for p in &reps {
            for q in &reps {
                sup = sup.max(tv_distance(p, q).unwrap());
            }
        }
        let d = delta(&f).unwrap().delta;
        assert!((d - 2.0 * sup).abs() <= 1e-12, "{d} vs {}", 2.0 * sup);
    }
}

#[test]
fn special_case_bound_is_half_tv() {
    // axially symmetric with 𝒫↑ = 𝒫↓ and one perpendicular pair
    for seed in 0..30 {
        let mut r = rng(seed);
        let grid = TimeGrid::new(0.0, 1.0, 1 + seed as usize % 12).unwrap();
        let up = random_distribution(&mut r, grid);
        let side = random_distribution(&mut r, grid);
        let f = DirectionFamily::new(
            grid,
            vec![
                (Direction::Z, up.clone()),
                (-Direction::Z, up.clone()),
                (Direction::X, side.clone()),
                (-Direction::X, side.clone()),
            ],
            Some(Direction::Z),
        )
        .unwrap();
        let d4 = delta(&f).unwrap().delta / 4.0;
        let half = tv_distance(&side, &up).unwrap() / 2.0;
        assert!((d4 - half).abs() <= 1e-15, "{d4} vs {half}");
    }
}

#[test]
fn mixing_toward_average_scales_delta() {
    for seed in 0..20 {
        let f = mixed_family(seed, 1 + seed as usize % 9, 2 + seed as usize % 4);
        let avg = f.direction_average();
        let d0 = delta(&f).unwrap().delta;
        for lambda in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let entries = f
                .entries()
                .iter()
                .map(|(n, p)| {
                    let m = combine(p, &avg, 1.0 - lambda, lambda).unwrap();
                    (
                        *n,
                        BinnedDistribution::normalized(
                            *f.grid(),
                            m.weights().to_vec(),
                            m.censored(),
                        )
                        .unwrap(),
                    )
                })
                .collect();
            let g = DirectionFamily::new(*f.grid(), entries, None).unwrap();
            let d = delta(&g).unwrap().delta;
            assert!(
                (d - (1.0 - lambda) * d0).abs() <= 1e-12,
                "λ = {lambda}: {d} vs {d0}"
            );
        }
    }
}

#[test]
fn axial_defect_bounded_by_delta() {
    // holds when the perpendicular pairs are inversion-symmetric, so that
    // S_b = 2𝒫_b and the axial comparison is one of the pair comparisons
    for seed in 0..40 {
        let mut r = rng(seed);
        let grid = TimeGrid::new(0.0, 1.0, 1 + seed as usize % 10).unwrap();
        let mut entries = vec![
            (Direction::Z, random_distribution(&mut r, grid)),
            (-Direction::Z, random_distribution(&mut r, grid)),
        ];
        for _ in 0..1 + seed % 3 {
            let phi: f64 = r.random_range(0.0..std::f64::consts::TAU);
            let b = Direction::new(phi.cos(), phi.sin(), 0.0).unwrap();
            let d = random_distribution(&mut r, grid);
            entries.push((b, d.clone()));
            entries.push((-b, d));
        }
        for _ in 0..seed % 2 {
            let n = random_direction(&mut r);
            entries.push((n, random_distribution(&mut r, grid)));
            entries.push((-n, random_distribution(&mut r, grid)));
        }
        let f = DirectionFamily::new(grid, entries, Some(Direction::Z)).unwrap();
        let a = axial_defect(&f).unwrap();
        let d = delta(&f).unwrap().delta;
        assert!(a <= d + 1e-15, "axial {a} > delta {d}");
    }
}

#[test]
fn fit_value_does_not_depend_on_seed() {
    for seed in 0..5 {
        let f = mixed_family(70 + seed, 12, 4);
        let values: Vec<f64> = (0..5)
            .map(|s| {
                let o = FitOptions {
                    seed: s,
                    ..FitOptions::default()
                };
                fit(&f, &o).unwrap().minimax_error
            })
            .collect();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(0.0, f64::max);
        assert!(hi - lo <= 1e-4, "{values:?}");
    }
}

#[test]
fn oracle_agreement_across_resolutions() {
    for resolution in [16, 50, 200] {
        for seed in 0..8 {
            let f = mixed_family(90 + seed, 1 + seed as usize % 3, 1 + seed as usize % 2);
            let ours = fit(&f, &FitOptions::default()).unwrap().minimax_error;
            let oracle = brute_force_fit(&f, resolution).unwrap();
            let tol = 2.0 / resolution as f64 + 1e-6;
            assert!(
                (ours - oracle).abs() <= tol,
                "res {resolution}: {ours} vs {oracle}"
            );
            // the polygon sits inside the cone, so the oracle can only overshoot
            assert!(oracle >= ours - 1e-6);
        }
    }
}

fn oblique_spec(trajectories: usize) -> SimulationSpec {
    SimulationSpec {
        model: PacketModel {
            mass: 1.0,
            hbar: 1.0,
            initial_center: [0.1, -0.2, 0.0],
            initial_width: 0.9,
            initial_wavevector: [0.2, 0.1, 0.8],
            spin_direction: Direction::Z,
        },
        surface: ArrivalSurface {
            plane_normal: Direction::Z,
            plane_offset: 1.5,
        },
        sim: SimConfig {
            trajectories,
            horizon: 6.0,
            step_control: StepControl::default(),
            seed: 9,
            grid: TimeGrid::new(0.0, 0.5, 12).unwrap(),
            spin_term: true,
        },
        directions: vec![Direction::Z, -Direction::Z],
    }
}

fn rk4(model: &PacketModel, t: f64, x: [f64; 3], h: f64) -> [f64; 3] {
    let law = Default::default();
    let f = |t: f64, x: &[f64; 3]| guidance_velocity(model, law, t, x).unwrap();
    let add = |x: &[f64; 3], k: &[f64; 3], s: f64| [0, 1, 2].map(|i| x[i] + s * k[i]);
    let k1 = f(t, &x);
    let k2 = f(t + h / 2.0, &add(&x, &k1, h / 2.0));
    let k3 = f(t + h / 2.0, &add(&x, &k2, h / 2.0));
    let k4 = f(t + h, &add(&x, &k3, h));
    [0, 1, 2].map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

#[test]
fn recorded_crossing_is_the_first() {
    let spec = oblique_spec(60);
    let n = Direction::new(0.5, 0.5, 0.7).unwrap();
    let model = spec.model.with_spin(n);
    let mut arrived = 0;
    for x0 in initial_positions(&model, 60, spec.sim.seed) {
        let outcome = trajectory_outcome(&model, &spec.surface, &spec.sim, x0);
        let end = match outcome {
            TrajectoryOutcome::Arrived { t } => {
                arrived += 1;
                t - 1e-5
            }
            TrajectoryOutcome::NoArrival => spec.sim.horizon,
            TrajectoryOutcome::NearNode(e) => panic!("{e:?}"),
        };
        // independent fixed-step integration up to just before the crossing
        let side = spec.surface.signed_distance(&x0) >= 0.0;
        let steps = (end / 1e-3).ceil().max(1.0) as usize;
        let h = end / steps as f64;
        let mut x = x0;
        for i in 0..steps {
            x = rk4(&model, i as f64 * h, x, h);
            assert_eq!(
                spec.surface.signed_distance(&x) >= 0.0,
                side,
                "early crossing at step {i}"
            );
        }
        if let TrajectoryOutcome::Arrived { t } = outcome {
            let after = rk4(&model, end, x, t + 1e-5 - end);
            assert_ne!(spec.surface.signed_distance(&after) >= 0.0, side);
        }
    }
    assert!(arrived > 10);
}

#[test]
fn statistical_inversion_symmetry() {
    let n = 20_000;
    let mut spec = oblique_spec(n);
    spec.model.initial_wavevector = [0.0, 0.0, 0.8];
    spec.model.initial_center = [0.0; 3];
    let b = Direction::new(1.0, 1.0, 0.0).unwrap();
    spec.directions = vec![
        Direction::Z,
        -Direction::Z,
        b,
        -b,
        Direction::X,
        -Direction::X,
    ];
    let f = simulate_family(&spec).unwrap().family;
    let bound = 3.0 * (2.0 / n as f64).sqrt() * 2.0;
    assert!(
        inversion_defect(&f) <= bound,
        "{} > {bound}",
        inversion_defect(&f)
    );
}
