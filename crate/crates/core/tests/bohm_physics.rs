//! Independent checks of the wave packet and the trajectory simulator.

use arrival_povm::bohm::{
    guidance_velocity, simulate_family, wavefunction, ArrivalSurface, GuidanceLaw, PacketModel,
    SimConfig, SimulationSpec, StepControl,
};
use arrival_povm::distributions::{tv_distance, BinnedDistribution, TimeGrid};
use arrival_povm::spin::Direction;
use num_complex::Complex64;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

fn packet(k: [f64; 3], n: Direction) -> PacketModel {
    PacketModel {
        mass: 1.7,
        hbar: 1.1,
        initial_center: [0.3, -0.2, 0.1],
        initial_width: 0.8,
        initial_wavevector: k,
        spin_direction: n,
    }
}

/// Solves the thomas system `a x_{i-1} + b x_i + a x_{i+1} = d_i` with zero
/// boundary values.
fn thomas(a: Complex64, b: Complex64, d: &[Complex64]) -> Vec<Complex64> {
    let n = d.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    c[0] = a / b;
    x[0] = d[0] / b;
    for i in 1..n {
        let m = b - a * c[i - 1];
        c[i] = a / m;
        x[i] = (d[i] - a * x[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    x
}

#[test]
fn closed_form_matches_crank_nicolson() {
    let m = packet([1.3, 0.0, 0.0], Direction::Z);
    let (lo, hi, dx, dt, t_end) = (-25.0, 25.0, 0.01, 0.001, 1.5);
    let n = ((hi - lo) / dx) as usize - 1;
    let xs: Vec<f64> = (1..=n).map(|i| lo + i as f64 * dx).collect();
    let mut psi: Vec<Complex64> = xs.iter().map(|&x| m.axis_factor(0, 0.0, x).0).collect();

    // iħψ_t = −(ħ²/2m)ψ_xx
    let r = Complex64::new(0.0, m.hbar * dt / (4.0 * m.mass * dx * dx));
    let one = Complex64::new(1.0, 0.0);
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        let rhs: Vec<Complex64> = (0..n)
            .map(|i| {
                let l = if i > 0 { psi[i - 1] } else { 0.0.into() };
                let rr = if i + 1 < n { psi[i + 1] } else { 0.0.into() };
                (one - 2.0 * r) * psi[i] + r * (l + rr)
            })
            .collect();
        psi = thomas(-r, one + 2.0 * r, &rhs);
    }

    let err: f64 = xs
        .iter()
        .zip(&psi)
        .map(|(&x, p)| (m.axis_factor(0, t_end, x).0 - p).norm_sqr() * dx)
        .sum::<f64>()
        .sqrt();
    assert!(err <= 1e-3, "L2 error {err}");
}

fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

#[test]
fn probability_current_satisfies_continuity() {
    let n = Direction::new(0.4, -0.7, 0.5).unwrap();
    let m = packet([0.6, -0.4, 0.9], n);
    let law = GuidanceLaw::default();
    let lo = [-0.5, -1.0, -0.2];
    let hi = [1.2, 0.4, 1.3];
    let t = 0.7;
    let q = 60;
    let h: Vec<f64> = (0..3).map(|k| (hi[k] - lo[k]) / q as f64).collect();
    let w: Vec<Vec<f64>> = h.iter().map(|&hk| simpson_weights(q, hk)).collect();
    let node = |k: usize, i: usize| lo[k] + i as f64 * h[k];
    let rho = |t: f64, x: &[f64; 3]| wavefunction(&m, t, x).0.norm_sqr();

    let mass = |t: f64| {
        let mut s = 0.0;
        for i in 0..=q {
            for j in 0..=q {
                for l in 0..=q {
                    let x = [node(0, i), node(1, j), node(2, l)];
                    s += w[0][i] * w[1][j] * w[2][l] * rho(t, &x);
                }
            }
        }
        s
    };
    let dt = 1e-4;
    let dmass = (mass(t + dt) - mass(t - dt)) / (2.0 * dt);

    let mut outflow = 0.0;
    for axis in 0..3 {
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        for (side, sign) in [(lo[axis], -1.0), (hi[axis], 1.0)] {
            for i in 0..=q {
                for j in 0..=q {
                    let mut x = [0.0; 3];
                    x[axis] = side;
                    x[a] = node(a, i);
                    x[b] = node(b, j);
                    let v = guidance_velocity(&m, law, t, &x).unwrap();
                    outflow += sign * w[a][i] * w[b][j] * rho(t, &x) * v[axis];
                }
            }
        }
    }
    let scale = dmass.abs().max(outflow.abs()).max(1e-3);
    assert!(
        (dmass + outflow).abs() <= 1e-3 * scale,
        "dM/dt = {dmass}, outflow = {outflow}"
    );
}

/// Exact bin masses for the unit packet (`ħ = m = σ₀ = 1`, `k = 0`, center at
/// the origin) crossing the plane `z = offset`.
///
/// Spin along the normal: `z(t) = ζ√(1 + t²/4)`, so only `0 < ζ < L` arrive.
/// Spin perpendicular: `z(t) = ζ + η t/2`, straight lines.
fn exact_arrivals(grid: TimeGrid, offset: f64, spin_along_normal: bool) -> BinnedDistribution {
    let g = Normal::standard();
    let q = |x: f64| 1.0 - g.cdf(x);
    let l = offset;
    let cdf = |t: f64| -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let tau = t / 2.0;
        let s = (1.0 + tau * tau).sqrt();
        if spin_along_normal {
            g.cdf(l) - g.cdf(l / s)
        } else {
            // P(ζ ≥ L, ζ + ητ ≥ L) by Simpson on ζ ∈ [L, L + 12]
            let n = 4000;
            let h = 12.0 / n as f64;
            let both: f64 = simpson_weights(n, h)
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let z = l + i as f64 * h;
                    w * g.pdf(z) * q((l - z) / tau)
                })
                .sum();
            q(l / s) + q(l) - 2.0 * both
        }
    };
    let weights: Vec<f64> = (0..grid.bin_count)
        .map(|k| {
            let (a, b) = grid.bin_edges(k);
            cdf(b) - cdf(a)
        })
        .collect();
    let censored = 1.0 - cdf(grid.t_end());
    BinnedDistribution::normalized(grid, weights, censored).unwrap()
}

#[test]
fn simulated_arrivals_match_exact_distributions() {
    let grid = TimeGrid::new(0.0, 0.5, 16).unwrap();
    let offset = 1.0;
    let spec = SimulationSpec {
        model: PacketModel {
            mass: 1.0,
            hbar: 1.0,
            initial_center: [0.0; 3],
            initial_width: 1.0,
            initial_wavevector: [0.0; 3],
            spin_direction: Direction::Z,
        },
        surface: ArrivalSurface {
            plane_normal: Direction::Z,
            plane_offset: offset,
        },
        sim: SimConfig {
            trajectories: 40_000,
            horizon: grid.t_end(),
            step_control: StepControl::default(),
            seed: 17,
            grid,
            spin_term: true,
        },
        directions: vec![Direction::Z, -Direction::Z, Direction::X, -Direction::X],
    };
    let out = simulate_family(&spec).unwrap();
    let along = exact_arrivals(grid, offset, true);
    let across = exact_arrivals(grid, offset, false);
    // the two exact laws are far apart; sampling noise at 4e4 is ≈ 0.02
    assert!(tv_distance(&along, &across).unwrap() > 0.2);
    for (n, d) in out.family.entries() {
        let want = if n.z().abs() > 0.5 { &along } else { &across };
        let tv = tv_distance(d, want).unwrap();
        assert!(tv <= 0.04, "{n}: tv to exact law {tv}");
    }
}
