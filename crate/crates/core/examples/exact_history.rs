//! Build the clock Hamiltonian of a small circuit, diagonalize it and compare
//! the ground state with the history state of the statevector simulation.

use clockqmc::circuit::{parse_circuit, BasisState};
use clockqmc::clock::ClockOracle;
use clockqmc::exact;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let circuit = parse_circuit("R 0 0.4\nCNOT 0 1\nY 1\nTOF 0 1 2\n", 3)?;
    let psi0 = BasisState(0);
    let oracle = ClockOracle::new(&circuit, psi0);
    let spectrum = exact::ground_state(&exact::dense_clock(&oracle)?)?;
    let history = exact::history_state(&circuit, psi0)?;

    println!("clock dimension {}", oracle.dimension());
    println!("lowest eigenvalue {:.3e}, gap {:.5}", spectrum.eigenvalues[0], spectrum.gap());
    println!("overlap with history state {:.12}", exact::overlap(&spectrum.ground, &history));
    for (t, psi) in exact::evolve(&circuit, psi0)?.iter().enumerate() {
        let probs: Vec<String> = psi.iter().map(|a| format!("{:.3}", a.norm_sqr())).collect();
        println!("t={t} |psi|^2 = [{}]", probs.join(" "));
    }
    Ok(())
}
