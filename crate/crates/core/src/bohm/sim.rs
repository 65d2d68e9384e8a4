//! Monte Carlo first-arrival histograms over a family of spin directions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrator::{first_crossing, Crossing, StepControl};
use super::packet::{guidance_velocity, ArrivalSurface, GuidanceLaw, NearNode, PacketModel};
use crate::distributions::{BinnedDistribution, DirectionFamily, TimeGrid};
use crate::error::{Error, Result};
use crate::spin::Direction;

/// Runs abort when more than this fraction of trajectories hit the node guard.
pub const MAX_FLAGGED_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trajectories: usize,
    pub horizon: f64,
    #[serde(default)]
    pub step_control: StepControl,
    pub seed: u64,
    pub grid: TimeGrid,
    #[serde(default = "yes")]
    pub spin_term: bool,
}

fn yes() -> bool {
    true
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.trajectories == 0 {
            return Err(Error::InvalidModel("trajectories must be positive".into()));
        }
        if self.grid.t_start > 0.0 {
            return Err(Error::InvalidGrid(format!(
                "arrival grid must start at or before t = 0, got {}",
                self.grid.t_start
            )));
        }
        if !(self.horizon >= self.grid.t_end()) || !self.horizon.is_finite() {
            return Err(Error::InvalidModel(format!(
                "horizon {} ends before the grid ({})",
                self.horizon,
                self.grid.t_end()
            )));
        }
        let s = &self.step_control;
        if !(s.initial_step > 0.0 && s.abs_tol > 0.0 && s.rel_tol > 0.0) {
            return Err(Error::InvalidModel(
                "step control values must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn law(&self) -> GuidanceLaw {
        GuidanceLaw {
            spin_term: self.spin_term,
        }
    }
}

/// Everything needed to reproduce a simulated family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub model: PacketModel,
    pub surface: ArrivalSurface,
    pub sim: SimConfig,
    pub directions: Vec<Direction>,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.surface.validate_against(&self.model)?;
        self.sim.validate()
    }

    pub fn from_json_str(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// What happened to one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectoryOutcome {
    Arrived { t: f64 },
    NoArrival,
    NearNode(NearNode),
}

/// Per-direction bookkeeping alongside the histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionStats {
    pub direction: Direction,
    pub arrived_in_grid: usize,
    pub arrived_after_grid: usize,
    pub never_arrived: usize,
    pub flagged: usize,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub family: DirectionFamily,
    pub stats: Vec<DirectionStats>,
}

/// Initial positions drawn from `|ψ(0, ·)|²`. Trajectory `i` uses stream `i`
/// of a ChaCha8 generator seeded with `seed`, so the draw for a given index
/// does not depend on the total count.
pub fn initial_positions(model: &PacketModel, count: usize, seed: u64) -> Vec<[f64; 3]> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let c = model.initial_center;
            let s = model.initial_width;
            [0, 1, 2].map(|k| {
                let z: f64 = StandardNormal.sample(&mut rng);
                c[k] + s * z
            })
        })
        .collect()
}

/// Integrates one trajectory and records its first crossing of `surface`.
pub fn trajectory_outcome(
    model: &PacketModel,
    surface: &ArrivalSurface,
    cfg: &SimConfig,
    x0: [f64; 3],
) -> TrajectoryOutcome {
    let law = cfg.law();
    let field = |t: f64, x: &[f64; 3]| guidance_velocity(model, law, t, x);
    let event = |x: &[f64; 3]| surface.signed_distance(x);
    match first_crossing(
        &field,
        &event,
        0.0,
        x0,
        cfg.horizon,
        cfg.grid.bin_width,
        &cfg.step_control,
    ) {
        Crossing::At { t, .. } => TrajectoryOutcome::Arrived { t },
        Crossing::None { .. } => TrajectoryOutcome::NoArrival,
        Crossing::Failed(n) => TrajectoryOutcome::NearNode(n),
    }
}

/// Arrival histogram for each spin direction in `directions`, all driven by
/// the same initial positions.
///
/// Arrivals after the grid end and trajectories that never arrive go to the
/// censored mass. Trajectories stopped by the node guard also go there and
/// are counted in [`DirectionStats::flagged`]; more than
/// [`MAX_FLAGGED_FRACTION`] of them aborts the run.
pub fn simulate_family(spec: &SimulationSpec) -> Result<SimOutput> {
    spec.validate()?;
    let cfg = &spec.sim;
    let grid = cfg.grid;
    let starts = initial_positions(&spec.model, cfg.trajectories, cfg.seed);
    let total = cfg.trajectories;

    let mut entries = Vec::with_capacity(spec.directions.len());
    let mut stats = Vec::with_capacity(spec.directions.len());
    for &n in &spec.directions {
        let model = spec.model.with_spin(n);
        let outcomes: Vec<TrajectoryOutcome> = starts
            .par_iter()
            .map(|x0| trajectory_outcome(&model, &spec.surface, cfg, *x0))
            .collect();
        let (dist, st) = histogram(&grid, n, &outcomes)?;
        if st.flagged as f64 > MAX_FLAGGED_FRACTION * total as f64 {
            return Err(Error::NodeProximity {
                flagged: st.flagged,
                total,
            });
        }
        entries.push((n, dist));
        stats.push(st);
    }
    let family = DirectionFamily::new(grid, entries, Some(spec.surface.plane_normal))?
        .with_trajectories(Some(total as u64));
    Ok(SimOutput { family, stats })
}

fn histogram(
    grid: &TimeGrid,
    direction: Direction,
    outcomes: &[TrajectoryOutcome],
) -> Result<(BinnedDistribution, DirectionStats)> {
    let mut counts = vec![0usize; grid.bin_count];
    let mut st = DirectionStats {
        direction,
        arrived_in_grid: 0,
        arrived_after_grid: 0,
        never_arrived: 0,
        flagged: 0,
    };
    for o in outcomes {
        match *o {
            TrajectoryOutcome::Arrived { t } => match grid.bin_of(t) {
                Some(k) => {
                    counts[k] += 1;
                    st.arrived_in_grid += 1;
                }
                None => st.arrived_after_grid += 1,
            },
            TrajectoryOutcome::NoArrival => st.never_arrived += 1,
            TrajectoryOutcome::NearNode(_) => st.flagged += 1,
        }
    }
    let n = outcomes.len() as f64;
    let censored = st.arrived_after_grid + st.never_arrived + st.flagged;
    let weights = counts.iter().map(|&c| c as f64 / n).collect();
    let dist = BinnedDistribution::normalized(*grid, weights, censored as f64 / n)?;
    Ok((dist, st))
}
