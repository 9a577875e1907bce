//! On-the-fly matrix elements of the clock Hamiltonian `H = H' + C₀`.
//!
//! The system-time space is indexed by [`ClockKey`]s. Off-diagonal elements
//! only couple adjacent time points through the circuit's gates; the penalty
//! term is diagonal because the initial state is a computational basis state.

use rand::Rng;

use crate::circuit::{BasisState, Circuit, LocalOp, C64, ZERO_TOL};

/// A walker label: basis state `state` at time point `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockKey {
    pub state: BasisState,
    pub t: usize,
}

impl ClockKey {
    pub fn new(state: BasisState, t: usize) -> Self {
        ClockKey { state, t }
    }
}

#[derive(Clone, Debug)]
pub struct ClockOracle {
    n_qubits: usize,
    psi0: BasisState,
    links: Vec<LocalOp>,
}

impl ClockOracle {
    pub fn new(circuit: &Circuit, psi0: BasisState) -> Self {
        Self::from_ops(circuit.n_qubits(), circuit.local_ops(), psi0)
    }

    /// Build from explicit link operators, e.g. basis-rotated gates.
    pub fn from_ops(n_qubits: usize, links: Vec<LocalOp>, psi0: BasisState) -> Self {
        assert!(!links.is_empty(), "clock needs at least two time points");
        assert!(n_qubits == 64 || psi0.0 < (1u64 << n_qubits), "initial state out of range");
        ClockOracle { n_qubits, psi0, links }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn psi0(&self) -> BasisState {
        self.psi0
    }

    pub fn time_points(&self) -> usize {
        self.links.len() + 1
    }

    /// The operator `U_t` carrying time `t` to `t + 1`.
    pub fn link(&self, t: usize) -> &LocalOp {
        &self.links[t]
    }

    pub fn links(&self) -> &[LocalOp] {
        &self.links
    }

    /// Size of the system-time space, `2^N · T`.
    pub fn dimension(&self) -> usize {
        (1usize << self.n_qubits) * self.time_points()
    }

    pub fn diagonal_element(&self, k: ClockKey) -> f64 {
        let last = self.time_points() - 1;
        // each adjacent link contributes 1/2
        let mut d = 0.0;
        if k.t > 0 {
            d += 0.5;
        }
        if k.t < last {
            d += 0.5;
        }
        if k.t == 0 && k.state != self.psi0 {
            d += 1.0;
        }
        d
    }

    /// `H_{to,from}` for `to != from`.
    pub fn offdiag_element(&self, to: ClockKey, from: ClockKey) -> C64 {
        if to.t == from.t + 1 {
            -0.5 * self.links[from.t].element(to.state, from.state, false)
        } else if from.t == to.t + 1 {
            -0.5 * self.links[to.t].element(to.state, from.state, true)
        } else {
            C64::new(0.0, 0.0)
        }
    }

    /// The gate used when moving from `from_t` to `to_t`, and whether it acts
    /// as its adjoint.
    #[inline]
    pub fn link_between(&self, from_t: usize, to_t: usize) -> (&LocalOp, bool) {
        if to_t == from_t + 1 {
            (&self.links[from_t], false)
        } else {
            debug_assert_eq!(from_t, to_t + 1);
            (&self.links[to_t], true)
        }
    }

    /// Uniform proposal over the connected states of the relevant link.
    pub fn propose_state<R: Rng + ?Sized>(&self, from: ClockKey, to_t: usize, rng: &mut R) -> (BasisState, f64) {
        let (op, _) = self.link_between(from.t, to_t);
        let dim = op.dim();
        let local = rng.random_range(0..dim);
        (op.embed(from.state, local), 1.0 / dim as f64)
    }
}

/// Time proposal: `t ± 1` with equal probability, inward at the boundaries.
pub fn propose_time<R: Rng + ?Sized>(t: usize, time_points: usize, rng: &mut R) -> (usize, f64) {
    assert!(time_points >= 2 && t < time_points);
    if t == 0 {
        (1, 1.0)
    } else if t == time_points - 1 {
        (t - 1, 1.0)
    } else if rng.random_bool(0.5) {
        (t + 1, 0.5)
    } else {
        (t - 1, 0.5)
    }
}

/// Probability that [`propose_time`] suggests `to_t` from `t`.
pub fn time_proposal_probability(t: usize, to_t: usize, time_points: usize) -> f64 {
    let adjacent = to_t + 1 == t || t + 1 == to_t;
    if !adjacent || to_t >= time_points {
        0.0
    } else if t == 0 || t == time_points - 1 {
        1.0
    } else {
        0.5
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stoquasticity {
    /// Every gate matrix is real and non-negative.
    Stoquastic,
    /// Every gate maps a basis state to a single basis state, up to a phase.
    QuasiClassical,
    Generic,
}

pub fn classify(c: &Circuit) -> Stoquasticity {
    classify_ops(&c.local_ops())
}

pub fn classify_ops(ops: &[LocalOp]) -> Stoquasticity {
    let stoquastic = ops
        .iter()
        .all(|op| op.matrix().iter().all(|z| z.im.abs() <= ZERO_TOL && z.re >= -ZERO_TOL));
    if stoquastic {
        return Stoquasticity::Stoquastic;
    }
    let single_column = ops.iter().all(|op| {
        op.matrix()
            .column_iter()
            .all(|col| col.iter().filter(|z| z.norm() > ZERO_TOL).count() == 1)
    });
    if single_column {
        Stoquasticity::QuasiClassical
    } else {
        Stoquasticity::Generic
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn oracle(gates: Vec<Gate>, n: usize) -> ClockOracle {
        ClockOracle::new(&Circuit::new(n, gates).unwrap(), BasisState(0))
    }

    fn key(s: u64, t: usize) -> ClockKey {
        ClockKey::new(BasisState(s), t)
    }

    #[test]
    fn diagonal_cases() {
        let o = oracle(vec![Gate::x(0); 4], 2);
        assert_eq!(o.diagonal_element(key(0, 0)), 0.5);
        assert_eq!(o.diagonal_element(key(2, 0)), 1.5);
        for t in 1..4 {
            assert_eq!(o.diagonal_element(key(3, t)), 1.0);
        }
        assert_eq!(o.diagonal_element(key(1, 4)), 0.5);
    }

    #[test]
    fn diagonal_two_time_points() {
        let o = oracle(vec![Gate::identity(0)], 1);
        assert_eq!(o.diagonal_element(key(0, 0)), 0.5);
        assert_eq!(o.diagonal_element(key(1, 0)), 1.5);
        assert_eq!(o.diagonal_element(key(0, 1)), 0.5);
        assert_eq!(o.diagonal_element(key(1, 1)), 0.5);
    }

    #[test]
    fn offdiag_cases() {
        let o = oracle(vec![Gate::x(0), Gate::y(0), Gate::z(0)], 1);
        assert_eq!(o.offdiag_element(key(1, 1), key(0, 0)), C64::new(-0.5, 0.0));
        assert_eq!(o.offdiag_element(key(1, 2), key(0, 0)), C64::new(0.0, 0.0));
        assert_eq!(o.offdiag_element(key(1, 2), key(0, 1)), C64::new(0.0, -0.5));
        // ⟨0|Y†|1⟩ = conj(⟨1|Y|0⟩) = -i
        assert_eq!(o.offdiag_element(key(0, 1), key(1, 2)), C64::new(0.0, 0.5));
    }

    #[test]
    fn time_proposals() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert_eq!(propose_time(0, 8, &mut rng), (1, 1.0));
            assert_eq!(propose_time(7, 8, &mut rng), (6, 1.0));
            let (t, p) = propose_time(3, 8, &mut rng);
            assert!(t == 2 || t == 4);
            assert_eq!(p, 0.5);
        }
        assert_eq!(time_proposal_probability(3, 4, 8), 0.5);
        assert_eq!(time_proposal_probability(0, 1, 8), 1.0);
        assert_eq!(time_proposal_probability(3, 5, 8), 0.0);
    }

    #[test]
    fn state_proposals() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let o = oracle(vec![Gate::rotation(0, 0.3)], 1);
        let mut seen = [false; 2];
        for _ in 0..64 {
            let (j, p) = o.propose_state(key(0, 0), 1, &mut rng);
            assert_eq!(p, 0.5);
            seen[j.0 as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));

        let o = oracle(vec![Gate::toffoli(0, 1, 2).unwrap()], 3);
        assert_eq!(o.propose_state(key(5, 1), 0, &mut rng).1, 0.125);

        let o = oracle(vec![Gate::z(0), Gate::z(0)], 1);
        let (j, p) = loop {
            let prop = o.propose_state(key(1, 1), 2, &mut rng);
            if prop.0 == BasisState(0) {
                break prop;
            }
        };
        assert_eq!(p, 0.5);
        assert_eq!(o.offdiag_element(key(j.0, 2), key(1, 1)), C64::new(0.0, 0.0));
    }

    #[test]
    fn classification_examples() {
        let tof = Circuit::new(3, vec![Gate::toffoli(0, 1, 2).unwrap(), Gate::toffoli(2, 0, 1).unwrap()]).unwrap();
        assert_eq!(classify(&tof), Stoquasticity::Stoquastic);
        let pauli = Circuit::new(2, vec![Gate::x(0), Gate::y(1), Gate::z(0), Gate::cnot(0, 1).unwrap()]).unwrap();
        assert_eq!(classify(&pauli), Stoquasticity::QuasiClassical);
        let rot = Circuit::new(1, vec![Gate::rotation(0, 5.0 * PI / 32.0)]).unwrap();
        assert_eq!(classify(&rot), Stoquasticity::Generic);
    }

    fn small_instances() -> Vec<ClockOracle> {
        vec![
            oracle(vec![Gate::rotation(0, 0.4), Gate::cnot(0, 1).unwrap(), Gate::y(2), Gate::toffoli(2, 1, 0).unwrap()], 3),
            oracle(vec![Gate::y(1), Gate::rotation(1, -1.1), Gate::z(0)], 2),
            oracle(vec![Gate::toffoli(0, 1, 2).unwrap(), Gate::x(1), Gate::cnot(2, 0).unwrap(), Gate::x(0), Gate::rotation(2, 2.0)], 3),
        ]
    }

    fn all_keys(o: &ClockOracle) -> Vec<ClockKey> {
        (0..o.time_points())
            .flat_map(|t| (0..1u64 << o.n_qubits()).map(move |s| key(s, t)))
            .collect()
    }

    #[test]
    fn hermitian_and_sparse() {
        for o in small_instances() {
            let keys = all_keys(&o);
            for &a in &keys {
                for &b in &keys {
                    if a == b {
                        continue;
                    }
                    let hab = o.offdiag_element(a, b);
                    assert!((hab - o.offdiag_element(b, a).conj()).norm() < 1e-12);
                    if hab.norm() > 0.0 {
                        let lo = a.t.min(b.t);
                        assert_eq!(a.t.abs_diff(b.t), 1);
                        let mask = o.link(lo).mask();
                        assert_eq!(a.state.0 & !mask, b.state.0 & !mask);
                    }
                }
            }
        }
    }

    #[test]
    fn proposals_cover_nonzero_elements() {
        for o in small_instances() {
            let keys = all_keys(&o);
            for &from in &keys {
                for &to in &keys {
                    if to == from || o.offdiag_element(to, from).norm() == 0.0 {
                        continue;
                    }
                    let pt = time_proposal_probability(from.t, to.t, o.time_points());
                    let (op, _) = o.link_between(from.t, to.t);
                    let reachable = op.candidates(from.state).any(|s| s == to.state);
                    assert!(pt > 0.0 && reachable);
                }
            }
        }
    }

    #[test]
    fn stoquastic_circuits_have_nonpositive_offdiagonals() {
        let circ = Circuit::new(
            3,
            vec![Gate::x(0), Gate::toffoli(0, 1, 2).unwrap(), Gate::cnot(2, 1).unwrap(), Gate::identity(1)],
        )
        .unwrap();
        assert_eq!(classify(&circ), Stoquasticity::Stoquastic);
        for psi0 in 0..8 {
            let o = ClockOracle::new(&circ, BasisState(psi0));
            let keys = all_keys(&o);
            for &a in &keys {
                for &b in &keys {
                    if a != b {
                        let h = o.offdiag_element(a, b);
                        assert!(h.im == 0.0 && h.re <= 0.0);
                    }
                }
            }
        }
    }
}
