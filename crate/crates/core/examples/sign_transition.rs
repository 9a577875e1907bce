//! Walker-population sweep on five uniformly rotated qubits. Below a
//! threshold population the signs of the walkers decohere and the estimates
//! collapse towards zero.
//!
//! Usage: `sign_transition [theta] [max_target]`

use clockqmc::circuit::BasisState;
use clockqmc::families::uniform_rotations;
use clockqmc::fciqmc::{RunStatus, SimParams};
use clockqmc::observable::{ObservableSpec, TimeSel};
use clockqmc::problem::ClockProblem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let theta: f64 = args.next().map_or(Ok(5.0 * std::f64::consts::PI / 32.0), |s| s.parse())?;
    let max_target: u64 = args.next().map_or(Ok(10_000), |s| s.parse())?;
    let specs = vec![ObservableSpec::z(0, TimeSel::Final), ObservableSpec::x(0, TimeSel::Final)];
    let problem = ClockProblem::new(uniform_rotations(5, theta), BasisState(0), specs, false)?;
    let exact = problem.exact_values()?;
    println!("exact Z(0) {:+.4}, X(0) {:+.4}", exact[0], exact[1]);
    let mut target = 10;
    while target <= max_target {
        let params = SimParams {
            dtau: 0.2,
            target_walkers: target,
            initial_walkers: target.min(100) as i64,
            equil_iters: 5000,
            total_iters: 20_000,
            ..Default::default()
        };
        let run = problem.run(&params)?;
        if let RunStatus::Extinct { iteration } = run.status {
            println!("target {target:>6}: extinct at iteration {iteration}");
        } else {
            let [z, x] = [&run.reports[0], &run.reports[1]];
            println!(
                "target {target:>6}  N_w {:>9.0}  Z(0) {:+.4} +- {:.4}  X(0) coherence {:.2}",
                run.mean_walkers(),
                z.mean,
                z.error,
                x.mean / exact[1]
            );
        }
        target *= 10;
    }
    Ok(())
}
