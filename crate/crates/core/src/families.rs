//! Circuit families used by the experiments and examples.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::circuit::{Circuit, Gate, GateKind};

/// `R(θ)` applied once to every qubit, one qubit per time step.
pub fn uniform_rotations(n_qubits: usize, theta: f64) -> Circuit {
    Circuit::new(n_qubits, (0..n_qubits).map(|q| Gate::rotation(q, theta)).collect()).expect("valid circuit")
}

/// `R(θ)` on every qubit followed by a ladder of NOTs `q → q+1`, of which the
/// first `n_controlled` keep their control (CNOT) and the rest are plain `X`
/// on the target.
pub fn rotation_ladder(n_qubits: usize, theta: f64, n_controlled: usize) -> Circuit {
    assert!(n_controlled < n_qubits, "at most n-1 controlled NOTs");
    let mut gates: Vec<Gate> = (0..n_qubits).map(|q| Gate::rotation(q, theta)).collect();
    for q in 0..n_qubits - 1 {
        if q < n_controlled {
            gates.push(Gate::cnot(q, q + 1).expect("distinct qubits"));
        } else {
            gates.push(Gate::x(q + 1));
        }
    }
    Circuit::new(n_qubits, gates).expect("valid circuit")
}

/// A reversible classical circuit on six qubits (X and Toffoli only).
pub fn toffoli_network() -> Circuit {
    let tof = |a, b, c| Gate::toffoli(a, b, c).expect("distinct qubits");
    let gates = vec![
        Gate::x(1),
        Gate::x(2),
        tof(1, 2, 0),
        Gate::x(4),
        tof(0, 4, 3),
        tof(3, 1, 5),
        Gate::x(2),
        tof(5, 0, 2),
        tof(2, 3, 1),
    ];
    Circuit::new(6, gates).expect("valid circuit")
}

/// A Pauli/CNOT circuit on six qubits: quasi-classical, not stoquastic.
pub fn pauli_network() -> Circuit {
    let cnot = |a, b| Gate::cnot(a, b).expect("distinct qubits");
    let gates = vec![
        Gate::y(0),
        Gate::x(3),
        cnot(0, 1),
        Gate::z(1),
        Gate::y(2),
        cnot(3, 4),
        Gate::z(0),
        cnot(1, 5),
        Gate::y(2),
    ];
    Circuit::new(6, gates).expect("valid circuit")
}

/// `n_gates` gates drawn uniformly from X, Y, Z, CNOT, Toffoli and `R(θ)`
/// with `θ ∈ [0, 2π)`, on distinct random qubits. Gates that need more
/// qubits than available are redrawn.
pub fn random_circuit<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize, n_gates: usize) -> Circuit {
    assert!(n_qubits >= 1 && n_gates >= 1);
    let kinds = [GateKind::X, GateKind::Y, GateKind::Z, GateKind::Cnot, GateKind::Toffoli, GateKind::R(0.0)];
    let qubits: Vec<usize> = (0..n_qubits).collect();
    let gates = (0..n_gates)
        .map(|_| loop {
            let kind = match *kinds.choose(rng).expect("non-empty") {
                GateKind::R(_) => GateKind::R(rng.random_range(0.0..std::f64::consts::TAU)),
                k => k,
            };
            if kind.arity() > n_qubits {
                continue;
            }
            let support: Vec<usize> = qubits.choose_multiple(rng, kind.arity()).copied().collect();
            break Gate::new(kind, support).expect("distinct qubits");
        })
        .collect();
    Circuit::new(n_qubits, gates).expect("valid circuit")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::BasisState;
    use crate::clock::{classify, Stoquasticity};
    use crate::exact::observable_at;

    #[test]
    fn random_circuits_respect_limits() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut seen_tof = false;
        for _ in 0..50 {
            let c = random_circuit(&mut rng, 3, 5);
            assert_eq!(c.time_points(), 6);
            seen_tof |= c.gates().iter().any(|g| g.kind() == GateKind::Toffoli);
        }
        assert!(seen_tof);
        let one = random_circuit(&mut rng, 1, 20);
        assert!(one.gates().iter().all(|g| g.support().len() == 1));
    }

    #[test]
    fn classes() {
        assert_eq!(classify(&toffoli_network()), Stoquasticity::Stoquastic);
        assert_eq!(classify(&pauli_network()), Stoquasticity::QuasiClassical);
        assert_eq!(classify(&uniform_rotations(3, 0.3)), Stoquasticity::Generic);
    }

    #[test]
    fn ladder_shape() {
        let c = rotation_ladder(5, 0.49, 2);
        assert_eq!(c.time_points(), 10);
        assert_eq!(c.gates()[5], Gate::cnot(0, 1).unwrap());
        assert_eq!(c.gates()[7], Gate::x(3));
    }

    #[test]
    fn uniform_rotation_expectation() {
        let theta = 5.0 * std::f64::consts::PI / 32.0;
        let c = uniform_rotations(5, theta);
        let z = Gate::z(0).local_op();
        let v = observable_at(&c, BasisState(0), &z, 5).unwrap();
        assert!((v - (2.0 * theta).cos()).abs() < 1e-12);
    }

    #[test]
    fn classical_networks_are_nontrivial() {
        for c in [toffoli_network(), pauli_network()] {
            let z = Gate::z(0).local_op();
            let last = c.time_points() - 1;
            assert_eq!(observable_at(&c, BasisState(0), &z, last).unwrap(), -1.0);
        }
    }
}
