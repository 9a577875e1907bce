//! Splits the time axis across worker threads that exchange spawned walkers
//! with their neighbours only. The sharded trajectory is identical to the
//! serial one for the same seed.
//!
//! Usage: `parallel_in_time [shards] [channels|sockets]`

use std::time::Instant;

use clockqmc::circuit::BasisState;
use clockqmc::families::uniform_rotations;
use clockqmc::fciqmc::SimParams;
use clockqmc::observable::{ObservableSpec, TimeSel};
use clockqmc::paratime::{run_parallel, Transport};
use clockqmc::problem::ClockProblem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let shards: usize = args.next().map_or(Ok(4), |s| s.parse())?;
    let transport = match args.next().as_deref() {
        #[cfg(unix)]
        Some("sockets") => Transport::UnixSockets,
        _ => Transport::Channels,
    };
    let specs = vec![ObservableSpec::z(0, TimeSel::Final), ObservableSpec::x(4, TimeSel::Final)];
    let problem = ClockProblem::new(uniform_rotations(5, 0.3), BasisState(0), specs, false)?;
    let params = SimParams { dtau: 0.2, target_walkers: 5000, equil_iters: 2000, total_iters: 8000, ..Default::default() };

    let start = Instant::now();
    let serial = problem.run(&params)?;
    let serial_time = start.elapsed();
    let par = run_parallel(&params, problem.oracle(), problem.observables(), shards, transport)?;

    println!("time ranges {:?}", par.plan.ranges());
    println!(
        "envelopes {}, children {}, non-adjacent {}",
        par.exchange.envelopes, par.exchange.children, par.exchange.non_adjacent
    );
    let identical = serial.stats.len() == par.result.stats.len()
        && serial.stats.iter().zip(&par.result.stats).all(|(a, b)| a.bitwise_eq(b));
    println!("identical to serial: {identical}");
    for (s, p) in serial.reports.iter().zip(&par.result.reports) {
        println!("{:<12} serial {:+.5} +- {:.5}  sharded {:+.5}", s.label, s.mean, s.error, p.mean);
    }
    println!(
        "serial {:.2}s, {shards} shards {:.2}s, speedup {:.2}",
        serial_time.as_secs_f64(),
        par.elapsed.as_secs_f64(),
        serial_time.as_secs_f64() / par.elapsed.as_secs_f64()
    );
    Ok(())
}
