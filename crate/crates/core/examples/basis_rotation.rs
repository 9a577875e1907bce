//! Local basis rotations absorb single-qubit gates into a time-dependent
//! frame. Compares rotated and plain runs on a rotation ladder.

use clockqmc::circuit::BasisState;
use clockqmc::clock::classify_ops;
use clockqmc::families::rotation_ladder;
use clockqmc::fciqmc::SimParams;
use clockqmc::observable::{ObservableSpec, TimeSel};
use clockqmc::problem::ClockProblem;
use clockqmc::rotobasis::{build_local_basis, dress_circuit};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 5;
    let circuit = rotation_ladder(n, 0.49, 2);
    let dressed = dress_circuit(&circuit, &build_local_basis(&circuit));
    println!("plain links:   {:?}", classify_ops(&circuit.local_ops()));
    println!("dressed links: {:?}", classify_ops(&dressed.ops));

    let specs = || vec![ObservableSpec::z(0, TimeSel::Final), ObservableSpec::x(0, TimeSel::Final)];
    for target in [100, 1000] {
        for rotate in [false, true] {
            let problem = ClockProblem::new(circuit.clone(), BasisState(0), specs(), rotate)?;
            let exact = problem.exact_values()?;
            let params = SimParams {
                dtau: 0.2,
                target_walkers: target,
                initial_walkers: 100,
                equil_iters: 5000,
                total_iters: 20_000,
                ..Default::default()
            };
            let run = problem.run(&params)?;
            let cols: Vec<String> = run
                .reports
                .iter()
                .zip(&exact)
                .map(|(r, e)| format!("{} {:+.3} ({:+.1} sigma)", r.label, r.mean, (r.mean - e) / r.error))
                .collect();
            println!("target {target:>5} rotated={rotate:<5} N_w {:>7.0}  {}", run.mean_walkers(), cols.join("  "));
        }
    }
    Ok(())
}
