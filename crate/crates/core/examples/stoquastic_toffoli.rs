//! A reversible classical circuit gives a stoquastic clock Hamiltonian: a
//! few dozen walkers reproduce the exact answer with no sign problem.

use clockqmc::circuit::BasisState;
use clockqmc::clock::{classify, Stoquasticity};
use clockqmc::families::{pauli_network, toffoli_network};
use clockqmc::fciqmc::SimParams;
use clockqmc::observable::{ObservableSpec, TimeSel};
use clockqmc::problem::ClockProblem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = SimParams {
        dtau: 0.05,
        target_walkers: 50,
        initial_walkers: 50,
        shift_damping: 0.5,
        shift_interval: 1,
        equil_iters: 2000,
        total_iters: 20_000,
        ..Default::default()
    };
    for (name, circuit) in [("toffoli", toffoli_network()), ("pauli", pauli_network())] {
        let class: Stoquasticity = classify(&circuit);
        let specs = (0..6).map(|q| ObservableSpec::z(q, TimeSel::Final)).collect();
        let problem = ClockProblem::new(circuit, BasisState(0), specs, false)?;
        let exact = problem.exact_values()?;
        let run = problem.run(&params)?;
        println!("{name}: {class:?}, mean N_w {:.1}", run.mean_walkers());
        for (rep, e) in run.reports.iter().zip(exact) {
            println!("  {:<12} {:+.6} +- {:.1e}  exact {e:+.1}", rep.label, rep.mean, rep.error);
        }
    }
    Ok(())
}
