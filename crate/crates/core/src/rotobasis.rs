//! Time-dependent local basis rotations.
//!
//! Walkers at time `t` live in the frame `B_t = ⊗_q b_q(t)`, where `b_q(t)`
//! accumulates the single-qubit gates applied to qubit `q` before `t`.
//! Multi-qubit gates leave the frame unchanged. The clock is then built from
//! the dressed gates `U'_t = B†_{t+1} U_t B_t`, and observables measured at
//! time `t` become `B†_t O B_t`.

use nalgebra::DMatrix;

use crate::circuit::{Circuit, LocalOp, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct LocalBasis {
    /// `factors[t][q]` is the 2×2 unitary `b_q(t)`.
    factors: Vec<Vec<DMatrix<C64>>>,
}

impl LocalBasis {
    pub fn time_points(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, t: usize, q: usize) -> &DMatrix<C64> {
        &self.factors[t][q]
    }

    /// `⊗_{q ∈ support} b_q(t)`, first support qubit most significant.
    pub fn restricted(&self, t: usize, support: &[usize]) -> DMatrix<C64> {
        support.iter().fold(DMatrix::identity(1, 1), |acc, &q| acc.kronecker(&self.factors[t][q]))
    }
}

#[derive(Clone, Debug)]
pub struct DressedCircuit {
    pub ops: Vec<LocalOp>,
    pub basis: LocalBasis,
}

pub fn build_local_basis(c: &Circuit) -> LocalBasis {
    let n = c.n_qubits();
    let mut current: Vec<DMatrix<C64>> = vec![DMatrix::identity(2, 2); n];
    let mut factors = Vec::with_capacity(c.time_points());
    factors.push(current.clone());
    for g in c.gates() {
        if let [q] = g.support() {
            current[*q] = g.local_op().matrix() * &current[*q];
        }
        factors.push(current.clone());
    }
    LocalBasis { factors }
}

pub fn dress_circuit(c: &Circuit, b: &LocalBasis) -> DressedCircuit {
    assert_eq!(b.time_points(), c.time_points(), "basis does not match circuit");
    let ops = c
        .gates()
        .iter()
        .enumerate()
        .map(|(t, g)| {
            let support = g.support().to_vec();
            let after = b.restricted(t + 1, &support);
            let before = b.restricted(t, &support);
            let m = after.adjoint() * g.local_op().matrix() * before;
            LocalOp::new(support, m)
        })
        .collect();
    DressedCircuit { ops, basis: b.clone() }
}

/// `B†_t O B_t` on the observable's support.
pub fn dress_observable(o: &LocalOp, b: &LocalBasis, t: usize) -> LocalOp {
    let frame = b.restricted(t, o.support());
    LocalOp::new(o.support().to_vec(), frame.adjoint() * o.matrix() * frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{gate_matrix, Gate};

    fn max_dev(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn pauli_z() -> LocalOp {
        Gate::z(0).local_op()
    }

    #[test]
    fn single_rotation_basis() {
        let c = Circuit::new(1, vec![Gate::rotation(0, 0.49)]).unwrap();
        let b = build_local_basis(&c);
        assert_eq!(b.factor(0, 0), &DMatrix::identity(2, 2));
        assert_eq!(b.factor(1, 0), &gate_matrix(&Gate::rotation(0, 0.49)));
    }

    #[test]
    fn entangling_gates_leave_basis_alone() {
        let c = Circuit::new(2, vec![Gate::cnot(0, 1).unwrap()]).unwrap();
        let b = build_local_basis(&c);
        for t in 0..2 {
            for q in 0..2 {
                assert_eq!(b.factor(t, q), &DMatrix::identity(2, 2));
            }
        }
        let d = dress_circuit(&c, &b);
        assert_eq!(d.ops[0], Gate::cnot(0, 1).unwrap().local_op());
    }

    #[test]
    fn involution_returns_to_identity() {
        let c = Circuit::new(1, vec![Gate::x(0), Gate::x(0)]).unwrap();
        let b = build_local_basis(&c);
        assert!(max_dev(b.factor(2, 0), &DMatrix::identity(2, 2)) < 1e-15);
    }

    #[test]
    fn local_circuits_dress_to_identity() {
        let gates = vec![
            Gate::rotation(0, 0.49),
            Gate::rotation(1, 0.49),
            Gate::y(0),
            Gate::rotation(0, -1.3),
            Gate::z(2),
            Gate::x(1),
        ];
        let c = Circuit::new(3, gates).unwrap();
        let d = dress_circuit(&c, &build_local_basis(&c));
        for op in &d.ops {
            assert!(max_dev(op.matrix(), &DMatrix::identity(2, 2)) < 1e-12);
        }
    }

    #[test]
    fn dressed_cnot_matches_explicit_conjugation() {
        let theta = 0.49;
        let c = Circuit::new(
            2,
            vec![Gate::rotation(0, theta), Gate::rotation(1, theta), Gate::cnot(0, 1).unwrap()],
        )
        .unwrap();
        let d = dress_circuit(&c, &build_local_basis(&c));
        // independent oracle: build R⊗R by hand
        let (s, co) = theta.sin_cos();
        let r = [[co, s], [-s, co]];
        let mut rr = DMatrix::<C64>::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                for x in 0..2 {
                    for y in 0..2 {
                        rr[(2 * a + b, 2 * x + y)] = C64::new(r[a][x] * r[b][y], 0.0);
                    }
                }
            }
        }
        let cnot = gate_matrix(&Gate::cnot(0, 1).unwrap());
        let expected = rr.adjoint() * cnot * &rr;
        assert!(max_dev(d.ops[2].matrix(), &expected) < 1e-12);
        for op in &d.ops {
            assert!(op.is_unitary(1e-12));
        }
        assert_eq!(d.ops[2].support(), &[0, 1]);
    }

    #[test]
    fn dressed_observables() {
        let c = Circuit::new(1, vec![Gate::x(0), Gate::rotation(0, 0.3)]).unwrap();
        let b = build_local_basis(&c);
        assert_eq!(dress_observable(&pauli_z(), &b, 0), pauli_z());
        // X Z X = -Z
        let flipped = dress_observable(&pauli_z(), &b, 1);
        assert!(max_dev(flipped.matrix(), &(-pauli_z().matrix())) < 1e-15);

        let c = Circuit::new(1, vec![Gate::rotation(0, 0.3)]).unwrap();
        let b = build_local_basis(&c);
        let dz = dress_observable(&pauli_z(), &b, 1);
        // R(θ)† Z R(θ) = [[cos2θ, sin2θ], [sin2θ, -cos2θ]]
        let (s2, c2) = (0.6f64).sin_cos();
        let expected = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(c2, 0.0), C64::new(s2, 0.0), C64::new(s2, 0.0), C64::new(-c2, 0.0)],
        );
        assert!(max_dev(dz.matrix(), &expected) < 1e-12);
        assert!(dz.is_hermitian(1e-12));
    }
}
