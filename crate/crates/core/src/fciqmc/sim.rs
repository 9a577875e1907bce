use crate::clock::ClockOracle;

use super::steps::{annihilate, death_step, init_population, measure, spawn_step, update_shift};
use super::{EstimatorReport, FciqmcError, IterationStats, Observable, RngStreams, SimParams, WalkerStore};

/// Population control: the shift is held at its initial value until `N_w`
/// first reaches the target, then updated every `shift_interval` iterations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShiftControl {
    active: bool,
    last_walkers: u64,
    since_update: usize,
    activated_at: Option<u64>,
}

impl ShiftControl {
    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn activated_at(&self) -> Option<u64> {
        self.activated_at
    }

    /// Book-keeping after iteration `iteration` finished with `walkers`.
    pub fn after_iteration(&mut self, iteration: u64, walkers: u64, shift: &mut f64, p: &SimParams) -> Result<(), FciqmcError> {
        if !self.active {
            if walkers >= p.target_walkers {
                self.active = true;
                self.activated_at = Some(iteration);
                self.last_walkers = walkers;
                self.since_update = 0;
            }
            return Ok(());
        }
        self.since_update += 1;
        if self.since_update == p.shift_interval {
            *shift = update_shift(*shift, walkers, self.last_walkers, p)?;
            self.last_walkers = walkers;
            self.since_update = 0;
        }
        Ok(())
    }
}

/// Serial simulation state: walkers, shift, iteration counter and one random
/// stream per time bucket.
pub struct Simulation<'a> {
    oracle: &'a ClockOracle,
    observables: &'a [Observable],
    params: SimParams,
    store: WalkerStore,
    rngs: RngStreams,
    shift: f64,
    control: ShiftControl,
    iteration: u64,
}

impl<'a> Simulation<'a> {
    pub fn new(params: SimParams, oracle: &'a ClockOracle, observables: &'a [Observable]) -> Result<Self, FciqmcError> {
        params.validate()?;
        let store = init_population(&params, oracle);
        let rngs = RngStreams::new(params.seed, oracle.time_points());
        Ok(Simulation {
            oracle,
            observables,
            shift: params.initial_shift,
            params,
            store,
            rngs,
            control: ShiftControl::default(),
            iteration: 0,
        })
    }

    /// Start from an explicit walker configuration instead of the default.
    pub fn with_store(mut self, store: WalkerStore) -> Self {
        assert_eq!(store.time_points(), self.oracle.time_points());
        self.store = store;
        self
    }

    pub fn store(&self) -> &WalkerStore {
        &self.store
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn control(&self) -> &ShiftControl {
        &self.control
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    /// One cycle: spawn from parents, death/cloning of parents, annihilation,
    /// measurement and the scheduled shift update.
    pub fn step(&mut self) -> Result<IterationStats, FciqmcError> {
        let dtau = self.params.dtau;
        let (children, spawned) = spawn_step(&self.store, self.oracle, dtau, &mut self.rngs)?;
        let deaths = death_step(&mut self.store, self.oracle, self.shift, dtau, &mut self.rngs)?;
        let annihilated = annihilate(&mut self.store, children)?;
        let iteration = self.iteration;
        self.iteration += 1;
        let walkers = self.store.population();
        if walkers == 0 {
            return Err(FciqmcError::Extinct { iteration });
        }
        let estimates = self
            .observables
            .iter()
            .map(|o| measure(&self.store, &o.op, o.t).unwrap_or(f64::NAN))
            .collect();
        self.control.after_iteration(iteration, walkers, &mut self.shift, &self.params)?;
        Ok(IterationStats {
            iteration,
            walkers,
            shift: self.shift,
            spawned,
            died: deaths.died,
            cloned: deaths.cloned,
            annihilated,
            estimates,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Extinct { iteration: u64 },
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub status: RunStatus,
    /// Every iteration, growth and equilibration included.
    pub stats: Vec<IterationStats>,
    /// Index into `stats` of the first averaged iteration.
    pub measure_from: usize,
    pub reports: Vec<EstimatorReport>,
}

impl RunResult {
    pub fn measured(&self) -> &[IterationStats] {
        &self.stats[self.measure_from.min(self.stats.len())..]
    }

    /// Mean `N_w` over the averaged iterations.
    pub fn mean_walkers(&self) -> f64 {
        let m = self.measured();
        if m.is_empty() {
            return f64::NAN;
        }
        m.iter().map(|s| s.walkers as f64).sum::<f64>() / m.len() as f64
    }

    /// Build reports from the averaged part of `stats`.
    pub fn summarize(stats: Vec<IterationStats>, measure_from: usize, labels: &[String], status: RunStatus) -> Self {
        let measured = &stats[measure_from.min(stats.len())..];
        let reports = labels
            .iter()
            .enumerate()
            .map(|(k, label)| {
                let samples: Vec<f64> = measured.iter().map(|s| s.estimates[k]).collect();
                EstimatorReport::from_samples(label.clone(), &samples)
            })
            .collect();
        RunResult { status, stats, measure_from, reports }
    }
}

/// Phase bookkeeping shared by the serial and sharded engines: growth until
/// the shift switches on, `equil_iters` discarded iterations, then
/// `total_iters` averaged iterations.
#[derive(Clone, Debug)]
pub struct RunSchedule {
    measure_from: usize,
    remaining: Option<usize>,
}

impl Default for RunSchedule {
    fn default() -> Self {
        RunSchedule { measure_from: usize::MAX, remaining: None }
    }
}

impl RunSchedule {
    /// Index into the per-iteration statistics of the first averaged iteration.
    pub fn measure_from(&self) -> usize {
        self.measure_from
    }

    /// Called after each iteration once `recorded` iterations are stored.
    /// Returns `true` when the run is complete.
    pub fn advance(&mut self, control: &ShiftControl, iteration: u64, recorded: usize, p: &SimParams) -> Result<bool, FciqmcError> {
        match self.remaining.as_mut() {
            None if control.is_active() => {
                self.measure_from = recorded + p.equil_iters;
                self.remaining = Some(p.equil_iters + p.total_iters);
            }
            None if iteration >= p.max_growth_iters => return Err(FciqmcError::GrowthStalled(p.max_growth_iters)),
            None => {}
            Some(r) => *r -= 1,
        }
        Ok(self.remaining == Some(0))
    }
}

/// Serial run following [`RunSchedule`]. Extinction ends the run early with
/// the statistics gathered so far.
pub fn run(params: &SimParams, oracle: &ClockOracle, observables: &[Observable]) -> Result<RunResult, FciqmcError> {
    let mut sim = Simulation::new(params.clone(), oracle, observables)?;
    let labels: Vec<String> = observables.iter().map(|o| o.label.clone()).collect();
    let mut stats = Vec::new();
    let mut schedule = RunSchedule::default();
    loop {
        match sim.step() {
            Ok(s) => stats.push(s),
            Err(FciqmcError::Extinct { iteration }) => {
                return Ok(RunResult::summarize(stats, schedule.measure_from(), &labels, RunStatus::Extinct { iteration }));
            }
            Err(e) => return Err(e),
        }
        if schedule.advance(sim.control(), sim.iteration(), stats.len(), params)? {
            break;
        }
    }
    Ok(RunResult::summarize(stats, schedule.measure_from(), &labels, RunStatus::Completed))
}
