//! Interacting-walker projector Monte Carlo on the clock Hamiltonian.
//!
//! The walker population represents a system-time vector with complex
//! integer weights and is evolved by stochastic application of
//! `G = 1 − δτ(H − S)`: spawning for off-diagonal elements, death/cloning for
//! the diagonal, and exact annihilation of walkers on the same key.

mod blocking;
mod rng;
mod sim;
mod steps;
mod store;

pub use blocking::{blocking_analysis, BlockingLevel, EstimatorReport, MIN_BLOCKS};
pub use rng::{bucket_stream, RngStreams};
pub use sim::{run, RunResult, RunSchedule, RunStatus, ShiftControl, Simulation};
pub use steps::{
    annihilate, annihilate_bucket, death_bucket, death_step, init_population, measure, measure_parts, spawn_bucket,
    spawn_step, update_shift, DeathCounts, SpawnBuffer,
};
pub use store::{Bucket, Child, WalkerStore, Weight};

use thiserror::Error;

use crate::circuit::LocalOp;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum FciqmcError {
    #[error("walker population died out at iteration {iteration}")]
    Extinct { iteration: u64 },
    #[error("walker weight overflow at time {t}")]
    Overflow { t: usize },
    #[error("population did not reach the target within {0} growth iterations")]
    GrowthStalled(u64),
    #[error("shift update with zero previous population")]
    ZeroPopulation,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimParams {
    pub dtau: f64,
    pub target_walkers: u64,
    /// Damping ζ of the population-control shift update.
    pub shift_damping: f64,
    /// Iterations `A` between shift updates.
    pub shift_interval: usize,
    pub initial_shift: f64,
    /// Iterations discarded after the shift is switched on.
    pub equil_iters: usize,
    /// Iterations averaged after equilibration.
    pub total_iters: usize,
    /// Cap on the constant-shift growth phase.
    pub max_growth_iters: u64,
    pub seed: u64,
    pub initial_walkers: i64,
    pub rotate_basis: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            dtau: 0.01,
            target_walkers: 1000,
            shift_damping: 0.1,
            shift_interval: 10,
            initial_shift: 0.1,
            equil_iters: 1000,
            total_iters: 10_000,
            max_growth_iters: 1_000_000,
            seed: 0,
            initial_walkers: 10,
            rotate_basis: false,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), FciqmcError> {
        let bad = |msg: &str| Err(FciqmcError::InvalidParams(msg.to_string()));
        if !(self.dtau > 0.0 && self.dtau.is_finite()) {
            return bad("dtau must be positive");
        }
        if self.target_walkers < 1 {
            return bad("target walkers must be at least 1");
        }
        if self.shift_interval < 1 {
            return bad("shift interval must be at least 1");
        }
        if self.initial_walkers < 1 {
            return bad("initial walkers must be at least 1");
        }
        if !self.shift_damping.is_finite() || !self.initial_shift.is_finite() {
            return bad("shift parameters must be finite");
        }
        Ok(())
    }
}

/// An observable measured on one time bucket. `op` is already expressed in
/// the walkers' frame (dressed when basis rotation is on).
#[derive(Clone, Debug)]
pub struct Observable {
    pub label: String,
    pub t: usize,
    pub op: LocalOp,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationStats {
    pub iteration: u64,
    /// `N_w = Σ (|re| + |im|)` after the iteration.
    pub walkers: u64,
    /// Shift in effect after the iteration's update.
    pub shift: f64,
    pub spawned: u64,
    pub died: u64,
    pub cloned: u64,
    pub annihilated: u64,
    /// Instantaneous estimates, NaN when the observable's bucket is empty.
    pub estimates: Vec<f64>,
}

impl IterationStats {
    /// Equality with floats compared by bit pattern, so NaN estimates match.
    pub fn bitwise_eq(&self, other: &IterationStats) -> bool {
        let (a, b) = (self, other);
        a.iteration == b.iteration
            && a.walkers == b.walkers
            && a.shift.to_bits() == b.shift.to_bits()
            && a.spawned == b.spawned
            && a.died == b.died
            && a.cloned == b.cloned
            && a.annihilated == b.annihilated
            && a.estimates.len() == b.estimates.len()
            && a.estimates.iter().zip(&b.estimates).all(|(x, y)| x.to_bits() == y.to_bits())
    }
}
