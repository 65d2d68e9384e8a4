//! Bohmian first-arrival times for a free spin-1/2 Gaussian packet.
//!
//! The particle is prepared in `ψ ⊗ |n⟩` and moves along the integral curves
//! of the Pauli current. For a product state the spin enters only through a
//! divergence-free term `(ħ/2m) ∇ρ × n / ρ`, so `|ψ|²` is the same for every
//! `n` while individual trajectories, and hence first crossings of a plane,
//! are not.

mod integrator;
mod packet;
mod sim;

pub use integrator::{first_crossing, Crossing, StepControl, CROSSING_TIME_TOL};
pub use packet::{
    guidance_velocity, wavefunction, ArrivalSurface, GuidanceLaw, NearNode, PacketModel, NODE_GUARD,
};
pub use sim::{
    initial_positions, simulate_family, trajectory_outcome, DirectionStats, SimConfig, SimOutput,
    SimulationSpec, TrajectoryOutcome, MAX_FLAGGED_FRACTION,
};
