//! Parallel-in-time execution.
//!
//! The time axis is cut into contiguous shards, one worker thread each.
//! Spawns move a walker by one time step, so children only ever travel to
//! the owning shard or an immediate neighbour. Once per iteration the shards
//! sum their population and estimator parts along the chain and every shard
//! applies the same shift update.
//!
//! Shards run as threads linked by channels or socket pairs, or as separate
//! processes (see [`process`]).
//!
//! Random streams belong to time buckets, not shards, and each bucket draws
//! its spawn and death numbers in the same order as the serial engine. A
//! sharded run therefore reproduces the serial trajectory exactly for any
//! shard count.

#[cfg(unix)]
pub mod process;
mod transport;
pub mod wire;

pub use transport::{channel_links, ChannelPort, Port, ShardPorts, StreamPort};
#[cfg(unix)]
pub use transport::{socket_links, SocketPort};

use std::ops::Range;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::BasisState;
use crate::clock::ClockOracle;
use crate::fciqmc::{
    annihilate_bucket, bucket_stream, death_bucket, init_population, measure_parts, spawn_bucket, Bucket, Child,
    FciqmcError, IterationStats, Observable, RunResult, RunSchedule, RunStatus, ShiftControl, SimParams, Weight,
};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ParatimeError {
    #[error("need at least one shard")]
    NoShards,
    #[error("{shards} shards for {time_points} time points")]
    TooManyShards { shards: usize, time_points: usize },
    #[error("child at t={t} from shard {from} belongs to non-adjacent shard {to}")]
    NonAdjacent { from: usize, to: usize, t: usize },
    #[error("transport: {0}")]
    Transport(String),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("worker failed: {0}")]
    Worker(String),
    #[error("shard {shard} holds a different shift at iteration {iteration}")]
    ShiftMismatch { shard: usize, iteration: u64 },
    #[error(transparent)]
    Fciqmc(#[from] FciqmcError),
}

/// Contiguous, ordered time ranges covering `0..T`, sizes differing by at
/// most one (larger ranges first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShardPlan {
    ranges: Vec<Range<usize>>,
}

pub fn partition_times(time_points: usize, n_shards: usize) -> Result<ShardPlan, ParatimeError> {
    if n_shards == 0 {
        return Err(ParatimeError::NoShards);
    }
    if n_shards > time_points {
        return Err(ParatimeError::TooManyShards { shards: n_shards, time_points });
    }
    let (base, extra) = (time_points / n_shards, time_points % n_shards);
    let mut start = 0;
    let ranges = (0..n_shards)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect();
    Ok(ShardPlan { ranges })
}

impl ShardPlan {
    pub fn n_shards(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn range(&self, shard: usize) -> Range<usize> {
        self.ranges[shard].clone()
    }

    pub fn time_points(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }

    pub fn owner(&self, t: usize) -> Option<usize> {
        if t >= self.time_points() {
            return None;
        }
        Some(self.ranges.partition_point(|r| r.end <= t))
    }
}

/// Children addressed from one shard to another.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub source: usize,
    pub dest: usize,
    pub children: Vec<Child>,
}

/// Per-iteration sums carried along the shard chain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Reduction {
    pub walkers: u64,
    pub spawned: u64,
    pub died: u64,
    pub cloned: u64,
    pub annihilated: u64,
    /// Shift the sender used this iteration; compared hop by hop.
    pub shift: f64,
    /// `(numerator, denominator)` of each observable's estimator.
    pub parts: Vec<(f64, f64)>,
}

impl Reduction {
    fn absorb(&mut self, other: &Reduction) {
        self.walkers += other.walkers;
        self.spawned += other.spawned;
        self.died += other.died;
        self.cloned += other.cloned;
        self.annihilated += other.annihilated;
        for (mine, theirs) in self.parts.iter_mut().zip(&other.parts) {
            mine.0 += theirs.0;
            mine.1 += theirs.1;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    Envelope(Envelope),
    Partial(Reduction),
    Total(Reduction),
}

/// Children split by owner.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Routed {
    pub local: Vec<Child>,
    pub left: Vec<Child>,
    pub right: Vec<Child>,
}

pub fn route_children(buffer: Vec<Child>, plan: &ShardPlan, me: usize) -> Result<Routed, ParatimeError> {
    let mut out = Routed::default();
    for c in buffer {
        let t = c.key.t;
        let owner = plan.owner(t).ok_or(ParatimeError::NonAdjacent { from: me, to: usize::MAX, t })?;
        if owner == me {
            out.local.push(c);
        } else if owner + 1 == me {
            out.left.push(c);
        } else if owner == me + 1 {
            out.right.push(c);
        } else {
            return Err(ParatimeError::NonAdjacent { from: me, to: owner, t });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExchangeLog {
    pub envelopes: u64,
    pub children: u64,
    /// Envelopes received from a shard other than an immediate neighbour.
    pub non_adjacent: u64,
}

impl ExchangeLog {
    fn merge(&mut self, o: &ExchangeLog) {
        self.envelopes += o.envelopes;
        self.children += o.children;
        self.non_adjacent += o.non_adjacent;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transport {
    Channels,
    #[cfg(unix)]
    UnixSockets,
}

#[derive(Clone, Debug)]
pub struct ParallelRun {
    pub result: RunResult,
    pub plan: ShardPlan,
    /// `shard_walkers[s][i]`: population held by shard `s` after iteration `i`.
    pub shard_walkers: Vec<Vec<u64>>,
    pub exchange: ExchangeLog,
    pub final_shifts: Vec<f64>,
    pub elapsed: Duration,
}

/// What one shard knows at the end of a run. Every shard holds the full
/// global statistics because the reduction broadcasts totals.
#[derive(Clone, Debug, PartialEq)]
pub struct ShardReport {
    pub stats: Vec<IterationStats>,
    pub measure_from: usize,
    pub status: RunStatus,
    /// Population held by this shard after each iteration.
    pub walkers: Vec<u64>,
    pub exchange: ExchangeLog,
    pub shift: f64,
}

struct Shard<'a, P: Port> {
    id: usize,
    range: Range<usize>,
    plan: &'a ShardPlan,
    oracle: &'a ClockOracle,
    observables: &'a [Observable],
    params: &'a SimParams,
    buckets: Vec<Bucket>,
    rngs: Vec<ChaCha8Rng>,
    left: Option<P>,
    right: Option<P>,
    exchange: ExchangeLog,
}

impl<P: Port> Shard<'_, P> {
    fn send_envelope(port: &mut Option<P>, log: &mut ExchangeLog, env: Envelope) -> Result<(), ParatimeError> {
        if let Some(p) = port.as_mut() {
            log.envelopes += 1;
            log.children += env.children.len() as u64;
            p.send(Message::Envelope(env))?;
        } else if !env.children.is_empty() {
            return Err(ParatimeError::Protocol(format!("children routed past the end of the chain from shard {}", env.source)));
        }
        Ok(())
    }

    fn recv_envelope(&mut self, from_left: bool) -> Result<Vec<Child>, ParatimeError> {
        let port = if from_left { self.left.as_mut() } else { self.right.as_mut() };
        let Some(port) = port else { return Ok(Vec::new()) };
        match port.recv()? {
            Message::Envelope(env) => {
                if env.dest != self.id {
                    return Err(ParatimeError::Protocol(format!("envelope for shard {} delivered to {}", env.dest, self.id)));
                }
                if env.source.abs_diff(self.id) != 1 {
                    self.exchange.non_adjacent += 1;
                }
                if let Some(c) = env.children.iter().find(|c| !self.range.contains(&c.key.t)) {
                    return Err(ParatimeError::Protocol(format!("child at t={} delivered to shard {}", c.key.t, self.id)));
                }
                Ok(env.children)
            }
            _ => Err(ParatimeError::Protocol("expected an envelope".into())),
        }
    }

    fn recv_reduction(port: &mut P, total: bool) -> Result<Reduction, ParatimeError> {
        match (port.recv()?, total) {
            (Message::Partial(r), false) | (Message::Total(r), true) => Ok(r),
            _ => Err(ParatimeError::Protocol("unexpected message during reduction".into())),
        }
    }

    /// Sum along the chain towards the last shard, then broadcast back.
    fn reduce(&mut self, mine: Reduction, iteration: u64) -> Result<Reduction, ParatimeError> {
        let mut acc = mine;
        if let Some(left) = self.left.as_mut() {
            let partial = Self::recv_reduction(left, false)?;
            if partial.shift.to_bits() != acc.shift.to_bits() {
                return Err(ParatimeError::ShiftMismatch { shard: self.id, iteration });
            }
            acc.absorb(&partial);
        }
        let total = match self.right.as_mut() {
            Some(right) => {
                right.send(Message::Partial(acc))?;
                Self::recv_reduction(right, true)?
            }
            None => acc,
        };
        if let Some(left) = self.left.as_mut() {
            left.send(Message::Total(total.clone()))?;
        }
        Ok(total)
    }

    fn iterate(&mut self, shift: f64, iteration: u64) -> Result<(Reduction, u64), ParatimeError> {
        let dtau = self.params.dtau;
        let mut buffer = Vec::new();
        let mut spawned = 0;
        for (k, t) in self.range.clone().enumerate() {
            spawned += spawn_bucket(self.oracle, t, &self.buckets[k], dtau, &mut self.rngs[k], &mut buffer)?;
        }
        let routed = route_children(buffer, self.plan, self.id)?;
        let id = self.id;
        Self::send_envelope(&mut self.left, &mut self.exchange, Envelope { source: id, dest: id.wrapping_sub(1), children: routed.left })?;
        Self::send_envelope(&mut self.right, &mut self.exchange, Envelope { source: id, dest: id + 1, children: routed.right })?;

        let (mut died, mut cloned) = (0, 0);
        for (k, t) in self.range.clone().enumerate() {
            let c = death_bucket(self.oracle, t, &mut self.buckets[k], shift, dtau, &mut self.rngs[k])?;
            died += c.died;
            cloned += c.cloned;
        }

        let mut incoming = routed.local;
        incoming.extend(self.recv_envelope(true)?);
        incoming.extend(self.recv_envelope(false)?);
        let mut per_t: Vec<Vec<(BasisState, Weight)>> = vec![Vec::new(); self.range.len()];
        for c in incoming {
            per_t[c.key.t - self.range.start].push((c.key.state, c.weight));
        }
        let mut annihilated = 0;
        for (k, children) in per_t.into_iter().enumerate() {
            annihilated += annihilate_bucket(&mut self.buckets[k], self.range.start + k, children)?;
        }

        let walkers: u64 = self.buckets.iter().map(Bucket::population).sum();
        let parts = self
            .observables
            .iter()
            .map(|o| if self.range.contains(&o.t) { measure_parts(&self.buckets[o.t - self.range.start], &o.op) } else { (0.0, 0.0) })
            .collect();
        let mine = Reduction { walkers, spawned, died, cloned, annihilated, shift, parts };
        Ok((self.reduce(mine, iteration)?, walkers))
    }

    fn run(mut self) -> Result<ShardReport, ParatimeError> {
        let p = self.params;
        let mut shift = p.initial_shift;
        let mut control = ShiftControl::default();
        let mut schedule = RunSchedule::default();
        let mut stats = Vec::new();
        let mut walkers_log = Vec::new();
        let mut iteration = 0u64;
        let status = loop {
            let (total, mine) = self.iterate(shift, iteration)?;
            walkers_log.push(mine);
            if total.walkers == 0 {
                break RunStatus::Extinct { iteration };
            }
            let estimates = total.parts.iter().map(|&(num, den)| if den > 0.0 { num / den } else { f64::NAN }).collect();
            control.after_iteration(iteration, total.walkers, &mut shift, p)?;
            stats.push(IterationStats {
                iteration,
                walkers: total.walkers,
                shift,
                spawned: total.spawned,
                died: total.died,
                cloned: total.cloned,
                annihilated: total.annihilated,
                estimates,
            });
            iteration += 1;
            if schedule.advance(&control, iteration, stats.len(), p)? {
                break RunStatus::Completed;
            }
        };
        Ok(ShardReport { stats, measure_from: schedule.measure_from(), status, walkers: walkers_log, exchange: self.exchange, shift })
    }
}

/// Run the full schedule on `n_shards` worker threads.
pub fn run_parallel(
    params: &SimParams,
    oracle: &ClockOracle,
    observables: &[Observable],
    n_shards: usize,
    transport: Transport,
) -> Result<ParallelRun, ParatimeError> {
    let plan = partition_times(oracle.time_points(), n_shards)?;
    match transport {
        Transport::Channels => run_with_ports(params, oracle, observables, plan, channel_links(n_shards)),
        #[cfg(unix)]
        Transport::UnixSockets => run_with_ports(params, oracle, observables, plan, socket_links(n_shards)?),
    }
}

/// Run shard `id` of `plan` over the given neighbour links. The initial
/// population is rebuilt locally, so shards need no start-up exchange.
pub fn run_shard<P: Port>(
    params: &SimParams,
    oracle: &ClockOracle,
    observables: &[Observable],
    plan: &ShardPlan,
    id: usize,
    left: Option<P>,
    right: Option<P>,
) -> Result<ShardReport, ParatimeError> {
    params.validate()?;
    if plan.time_points() != oracle.time_points() || id >= plan.n_shards() {
        return Err(ParatimeError::Protocol("plan and oracle disagree".into()));
    }
    let range = plan.range(id);
    let buckets = init_population(params, oracle).into_buckets().drain(range.clone()).collect();
    let rngs = range.clone().map(|t| bucket_stream(params.seed, t)).collect();
    let shard = Shard { id, range, plan, oracle, observables, params, buckets, rngs, left, right, exchange: ExchangeLog::default() };
    shard.run()
}

/// Run with caller-supplied links, one `(left, right)` pair per shard, each
/// shard on its own thread.
pub fn run_with_ports<P: Port>(
    params: &SimParams,
    oracle: &ClockOracle,
    observables: &[Observable],
    plan: ShardPlan,
    ports: ShardPorts<P>,
) -> Result<ParallelRun, ParatimeError> {
    params.validate()?;
    if plan.time_points() != oracle.time_points() || ports.len() != plan.n_shards() {
        return Err(ParatimeError::Protocol("plan, ports and oracle disagree".into()));
    }
    let started = Instant::now();
    let outputs: Vec<Result<ShardReport, ParatimeError>> = std::thread::scope(|scope| {
        let plan = &plan;
        let handles: Vec<_> = ports
            .into_iter()
            .enumerate()
            .map(|(id, (left, right))| scope.spawn(move || run_shard(params, oracle, observables, plan, id, left, right)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("shard thread panicked")).collect()
    });
    assemble(plan, observables, outputs, started.elapsed())
}

/// Combine per-shard outcomes into one run. A failing shard makes its
/// neighbours see a hang-up, so transport errors are reported only when
/// nothing more specific is available.
pub fn assemble(
    plan: ShardPlan,
    observables: &[Observable],
    outputs: Vec<Result<ShardReport, ParatimeError>>,
    elapsed: Duration,
) -> Result<ParallelRun, ParatimeError> {
    if outputs.len() != plan.n_shards() {
        return Err(ParatimeError::Protocol(format!("{} reports for {} shards", outputs.len(), plan.n_shards())));
    }
    if outputs.iter().any(Result::is_err) {
        let mut errs: Vec<ParatimeError> = outputs.into_iter().filter_map(Result::err).collect();
        let root = errs.iter().position(|e| !matches!(e, ParatimeError::Transport(_))).unwrap_or(0);
        return Err(errs.swap_remove(root));
    }
    let outputs: Vec<ShardReport> = outputs.into_iter().map(Result::unwrap).collect();
    let first = &outputs[0];
    for (shard, o) in outputs.iter().enumerate() {
        if o.shift.to_bits() != first.shift.to_bits() {
            return Err(ParatimeError::ShiftMismatch { shard, iteration: o.walkers.len() as u64 });
        }
        if o.walkers.len() != first.walkers.len() || o.status != first.status {
            return Err(ParatimeError::Protocol(format!("shard {shard} finished out of step")));
        }
    }
    let mut exchange = ExchangeLog::default();
    for o in &outputs {
        exchange.merge(&o.exchange);
    }
    let final_shifts = outputs.iter().map(|o| o.shift).collect();
    let labels: Vec<String> = observables.iter().map(|o| o.label.clone()).collect();
    let mut outputs = outputs.into_iter();
    let lead = outputs.next().expect("at least one shard");
    let mut shard_walkers = vec![lead.walkers];
    shard_walkers.extend(outputs.map(|o| o.walkers));
    Ok(ParallelRun {
        result: RunResult::summarize(lead.stats, lead.measure_from, &labels, lead.status),
        plan,
        shard_walkers,
        exchange,
        final_shifts,
        elapsed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::BasisState;
    use crate::clock::ClockKey;
    use crate::families::uniform_rotations;
    use crate::fciqmc::run;
    use crate::observable::{ObservableSpec, TimeSel};
    use crate::problem::ClockProblem;
    use proptest::prelude::*;

    fn child(t: usize) -> Child {
        Child { key: ClockKey::new(BasisState(0), t), weight: Weight::new(1, -2) }
    }

    #[test]
    fn partition_examples() {
        let p = partition_times(128, 4).unwrap();
        assert_eq!(p.ranges(), &[0..32, 32..64, 64..96, 96..128]);
        assert_eq!(partition_times(5, 2).unwrap().ranges(), &[0..3, 3..5]);
        assert_eq!(partition_times(7, 1).unwrap().ranges(), &[0..7]);
        assert_eq!(partition_times(3, 4), Err(ParatimeError::TooManyShards { shards: 4, time_points: 3 }));
        assert_eq!(partition_times(3, 0), Err(ParatimeError::NoShards));
    }

    proptest! {
        #[test]
        fn partition_is_balanced_cover(t in 1usize..300, n in 1usize..40) {
            prop_assume!(n <= t);
            let p = partition_times(t, n).unwrap();
            prop_assert_eq!(p.n_shards(), n);
            prop_assert_eq!(p.ranges()[0].start, 0);
            prop_assert_eq!(p.time_points(), t);
            for w in p.ranges().windows(2) {
                prop_assert_eq!(w[0].end, w[1].start);
            }
            let sizes: Vec<usize> = p.ranges().iter().map(|r| r.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for time in 0..t {
                prop_assert!(p.range(p.owner(time).unwrap()).contains(&time));
            }
        }

        #[test]
        fn routing_conserves_children(ts in prop::collection::vec(0usize..3, 0..50), re in -5i64..5) {
            // shard 1 of [0..32, 32..64, 64..96, 96..128], children at 31, 32..63, 64
            let plan = partition_times(128, 4).unwrap();
            let buf: Vec<Child> = ts.iter().enumerate().map(|(i, &k)| {
                let t = [31, 32 + i % 32, 64][k];
                Child { key: ClockKey::new(BasisState(i as u64), t), weight: Weight::new(re, 1) }
            }).collect();
            let before: u64 = buf.iter().map(|c| c.weight.magnitude()).sum();
            let r = route_children(buf.clone(), &plan, 1).unwrap();
            let after: u64 = [&r.local, &r.left, &r.right].iter().flat_map(|v| v.iter()).map(|c| c.weight.magnitude()).sum();
            prop_assert_eq!(before, after);
            prop_assert_eq!(r.local.len() + r.left.len() + r.right.len(), buf.len());
        }
    }

    #[test]
    fn routing_examples() {
        let plan = partition_times(128, 4).unwrap();
        let r = route_children(vec![child(64), child(40), child(31)], &plan, 1).unwrap();
        assert_eq!(r.right, vec![child(64)]);
        assert_eq!(r.local, vec![child(40)]);
        assert_eq!(r.left, vec![child(31)]);
        assert_eq!(
            route_children(vec![child(100)], &plan, 1),
            Err(ParatimeError::NonAdjacent { from: 1, to: 3, t: 100 })
        );
    }

    fn problem() -> ClockProblem {
        let specs = vec![ObservableSpec::z(0, TimeSel::Final), ObservableSpec::x(1, TimeSel::At(2))];
        ClockProblem::new(uniform_rotations(3, 0.4), BasisState(0), specs, false).unwrap()
    }

    fn same(a: &[IterationStats], b: &[IterationStats]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.bitwise_eq(y))
    }

    fn params() -> SimParams {
        SimParams { dtau: 0.1, target_walkers: 200, equil_iters: 50, total_iters: 300, seed: 11, ..Default::default() }
    }

    #[test]
    fn sharded_runs_match_serial_exactly() {
        let prob = problem();
        let serial = run(&params(), prob.oracle(), prob.observables()).unwrap();
        for n in 1..=4 {
            let par = run_parallel(&params(), prob.oracle(), prob.observables(), n, Transport::Channels).unwrap();
            assert!(same(&par.result.stats, &serial.stats), "{n} shards");
            assert_eq!(par.result.measure_from, serial.measure_from);
            assert_eq!(par.exchange.non_adjacent, 0);
            assert!(par.final_shifts.iter().all(|s| s.to_bits() == par.final_shifts[0].to_bits()));
            for (i, s) in par.result.stats.iter().enumerate() {
                let recount: u64 = par.shard_walkers.iter().map(|w| w[i]).sum();
                assert_eq!(recount, s.walkers);
            }
            if n > 1 {
                assert!(par.exchange.envelopes > 0);
            }
        }
    }

    #[cfg(unix)]
    #[test]
    fn socket_transport_matches_channels() {
        let prob = problem();
        let a = run_parallel(&params(), prob.oracle(), prob.observables(), 3, Transport::Channels).unwrap();
        let b = run_parallel(&params(), prob.oracle(), prob.observables(), 3, Transport::UnixSockets).unwrap();
        assert!(same(&a.result.stats, &b.result.stats));
        assert_eq!(a.exchange, b.exchange);
    }

    #[test]
    fn errors_surface_from_failing_shard() {
        let prob = problem();
        let p = SimParams { max_growth_iters: 5, target_walkers: 1_000_000, ..params() };
        let e = run_parallel(&p, prob.oracle(), prob.observables(), 2, Transport::Channels).unwrap_err();
        assert_eq!(e, ParatimeError::Fciqmc(FciqmcError::GrowthStalled(5)));
    }
}
