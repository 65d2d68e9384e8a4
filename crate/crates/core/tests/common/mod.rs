#![allow(dead_code)]

use arrival_povm::bohm::SimulationSpec;
use arrival_povm::distributions::{combine, BinnedDistribution, DirectionFamily, TimeGrid};
use arrival_povm::povm::{predict_family, random_povm, BinnedSpinPovm};
use arrival_povm::spin::Direction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn example_path(name: &str) -> String {
    format!("{}/examples/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn two_point_family() -> DirectionFamily {
    DirectionFamily::read_json(example_path("two_point_family.json")).unwrap()
}

pub fn demo_spec() -> SimulationSpec {
    let text = std::fs::read_to_string(example_path("dd_phenomenon.json")).unwrap();
    SimulationSpec::from_json_str(&text).unwrap()
}

pub fn random_direction(r: &mut impl Rng) -> Direction {
    loop {
        let v: [f64; 3] = [0; 3].map(|_| r.sample(StandardNormal));
        if let Ok(d) = Direction::from_array(v) {
            return d;
        }
    }
}

/// `pairs` random directions, each followed by its antipode.
pub fn random_pairs(r: &mut impl Rng, pairs: usize) -> Vec<Direction> {
    (0..pairs)
        .flat_map(|_| {
            let n = random_direction(r);
            [n, -n]
        })
        .collect()
}

pub fn random_distribution(r: &mut impl Rng, grid: TimeGrid) -> BinnedDistribution {
    let raw: Vec<f64> = (0..=grid.bin_count)
        .map(|_| r.random::<f64>().powi(2) + 1e-3)
        .collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let censored = w.pop().unwrap();
    BinnedDistribution::normalized(grid, w, censored).unwrap()
}

/// Independent random distributions on every listed direction.
pub fn noise_family(r: &mut impl Rng, grid: TimeGrid, dirs: &[Direction]) -> DirectionFamily {
    let entries = dirs
        .iter()
        .map(|n| (*n, random_distribution(r, grid)))
        .collect();
    DirectionFamily::new(grid, entries, None).unwrap()
}

/// `(1 − λ)·A + λ·B` entrywise, on the directions of `a`.
pub fn mix_families(a: &DirectionFamily, b: &DirectionFamily, lambda: f64) -> DirectionFamily {
    let entries = a
        .entries()
        .iter()
        .map(|(n, p)| {
            let m = combine(p, b.get(n).unwrap(), 1.0 - lambda, lambda).unwrap();
            let d = BinnedDistribution::normalized(*a.grid(), m.weights().to_vec(), m.censored());
            (*n, d.unwrap())
        })
        .collect();
    DirectionFamily::new(*a.grid(), entries, a.axis()).unwrap()
}

/// Mixture of a POVM-generated family and independent noise.
pub fn mixed_family(seed: u64, bins: usize, pairs: usize) -> DirectionFamily {
    let mut r = rng(seed);
    let grid = TimeGrid::new(0.0, 1.0, bins).unwrap();
    let dirs = random_pairs(&mut r, pairs);
    let povm = random_povm(grid, seed, r.random_range(0.0..1.0)).unwrap();
    let clean = predict_family(&povm, &dirs).unwrap();
    let noise = noise_family(&mut r, grid, &dirs);
    let lambda = r.random_range(0.0..1.0);
    mix_families(&clean, &noise, lambda)
}

/// Family on `±z` and `pairs` perpendicular pairs with `𝒫↑ = 𝒫↓` exactly.
pub fn chiral_family(seed: u64, bins: usize, pairs: usize) -> DirectionFamily {
    let mut r = rng(seed);
    let grid = TimeGrid::new(0.0, 1.0, bins).unwrap();
    let up = random_distribution(&mut r, grid);
    let mut entries = vec![(Direction::Z, up.clone()), (-Direction::Z, up)];
    for _ in 0..pairs {
        let phi: f64 = r.random_range(0.0..std::f64::consts::TAU);
        let b = Direction::new(phi.cos(), phi.sin(), 0.0).unwrap();
        entries.push((b, random_distribution(&mut r, grid)));
        entries.push((-b, random_distribution(&mut r, grid)));
    }
    DirectionFamily::new(grid, entries, Some(Direction::Z)).unwrap()
}

/// Largest TV distance between predictions over the given directions.
pub fn prediction_variation(povm: &BinnedSpinPovm, dirs: &[Direction]) -> f64 {
    let preds: Vec<_> = dirs.iter().map(|n| povm.predict(n).unwrap()).collect();
    let mut worst = 0.0f64;
    for p in &preds {
        for q in &preds {
            worst = worst.max(arrival_povm::distributions::tv_distance(p, q).unwrap());
        }
    }
    worst
}
