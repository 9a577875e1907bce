//! Dense reference calculations for small instances.
//!
//! System-time vectors are flattened time-major: `index = t · 2^N + state`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::circuit::{BasisState, Circuit, LocalOp, C64};
use crate::clock::ClockOracle;

/// Largest `2^N · T` accepted for statevector work.
pub const STATEVECTOR_LIMIT: usize = 1 << 22;
/// Largest system-time dimension for which a dense clock matrix is built.
pub const DENSE_CLOCK_LIMIT: usize = 2048;
/// Hermiticity tolerance on dense input.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// `δτ · λ_max` must stay below this for the linearized propagator to contract.
pub const PROPAGATOR_STABILITY_BOUND: f64 = 2.0;

#[derive(Debug, Error, PartialEq)]
pub enum ExactError {
    #[error("dimension {dim} exceeds the dense limit {limit}")]
    SizeLimit { dim: usize, limit: usize },
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("linearized propagator diverged at iteration {iteration} (norm ratio {ratio})")]
    Divergent { iteration: usize, ratio: f64 },
}

pub fn flat_index(state: BasisState, t: usize, n_qubits: usize) -> usize {
    (t << n_qubits) + state.0 as usize
}

fn check_statevector_size(n_qubits: usize, time_points: usize) -> Result<(), ExactError> {
    let dim = 1usize.checked_shl(n_qubits as u32).unwrap_or(usize::MAX).saturating_mul(time_points);
    if n_qubits >= 63 || dim > STATEVECTOR_LIMIT {
        return Err(ExactError::SizeLimit { dim, limit: STATEVECTOR_LIMIT });
    }
    Ok(())
}

/// `A|ψ⟩` for a local operator on a full statevector.
pub fn apply_local(op: &LocalOp, psi: &DVector<C64>) -> DVector<C64> {
    let mut out = DVector::zeros(psi.len());
    for (i, &amp) in psi.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        for (j, a) in op.apply(BasisState(i as u64), false) {
            out[j.0 as usize] += a * amp;
        }
    }
    out
}

/// `Ψ_0 = |psi0⟩`, `Ψ_{t+1} = U_t Ψ_t`.
pub fn evolve(c: &Circuit, psi0: BasisState) -> Result<Vec<DVector<C64>>, ExactError> {
    evolve_ops(c.n_qubits(), &c.local_ops(), psi0)
}

pub fn evolve_ops(n_qubits: usize, ops: &[LocalOp], psi0: BasisState) -> Result<Vec<DVector<C64>>, ExactError> {
    check_statevector_size(n_qubits, ops.len() + 1)?;
    let mut psi = DVector::zeros(1 << n_qubits);
    psi[psi0.0 as usize] = C64::new(1.0, 0.0);
    let mut states = vec![psi];
    for op in ops {
        let next = apply_local(op, states.last().unwrap());
        states.push(next);
    }
    Ok(states)
}

/// `(1/√T) Σ_t |Ψ_t⟩ ⊗ |t⟩`.
pub fn history_state(c: &Circuit, psi0: BasisState) -> Result<DVector<C64>, ExactError> {
    history_state_ops(c.n_qubits(), &c.local_ops(), psi0)
}

pub fn history_state_ops(n_qubits: usize, ops: &[LocalOp], psi0: BasisState) -> Result<DVector<C64>, ExactError> {
    let states = evolve_ops(n_qubits, ops, psi0)?;
    let scale = 1.0 / (states.len() as f64).sqrt();
    let blocks: Vec<C64> = states.iter().flat_map(|s| s.iter().map(|&z| z * scale)).collect();
    Ok(DVector::from_vec(blocks))
}

/// Time-`t` block of a flattened system-time vector.
pub fn time_block(v: &DVector<C64>, t: usize, n_qubits: usize) -> DVector<C64> {
    let d = 1 << n_qubits;
    v.rows(t * d, d).into_owned()
}

#[derive(Clone, Debug)]
pub struct DenseClock(pub DMatrix<C64>);

impl DenseClock {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// Full `2^N × 2^N` matrix of a local operator.
pub fn full_matrix(op: &LocalOp, n_qubits: usize) -> DMatrix<C64> {
    let d = 1usize << n_qubits;
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for (j, a) in op.apply(BasisState(i as u64), false) {
            m[(j.0 as usize, i)] = a;
        }
    }
    m
}

fn check_dense_size(o: &ClockOracle) -> Result<usize, ExactError> {
    if o.n_qubits() >= 32 {
        return Err(ExactError::SizeLimit { dim: usize::MAX, limit: DENSE_CLOCK_LIMIT });
    }
    let dim = o.dimension();
    if dim > DENSE_CLOCK_LIMIT {
        return Err(ExactError::SizeLimit { dim, limit: DENSE_CLOCK_LIMIT });
    }
    Ok(dim)
}

/// Link term `h_t = ½(I⊗|t⟩⟨t| − U_t⊗|t+1⟩⟨t| − U_t†⊗|t⟩⟨t+1| + I⊗|t+1⟩⟨t+1|)`.
pub fn link_term(o: &ClockOracle, t: usize) -> Result<DMatrix<C64>, ExactError> {
    let dim = check_dense_size(o)?;
    let d = 1usize << o.n_qubits();
    let u = full_matrix(o.link(t), o.n_qubits());
    let half = C64::new(0.5, 0.0);
    let mut h = DMatrix::zeros(dim, dim);
    let id = DMatrix::<C64>::identity(d, d);
    h.view_mut((t * d, t * d), (d, d)).copy_from(&(&id * half));
    h.view_mut(((t + 1) * d, (t + 1) * d), (d, d)).copy_from(&(&id * half));
    h.view_mut(((t + 1) * d, t * d), (d, d)).copy_from(&(&u * -half));
    h.view_mut((t * d, (t + 1) * d), (d, d)).copy_from(&(u.adjoint() * -half));
    Ok(h)
}

/// Penalty `C₀ = (I − |ψ₀⟩⟨ψ₀|) ⊗ |0⟩⟨0|`.
pub fn penalty_term(o: &ClockOracle) -> Result<DMatrix<C64>, ExactError> {
    let dim = check_dense_size(o)?;
    let d = 1usize << o.n_qubits();
    let mut c = DMatrix::zeros(dim, dim);
    for s in 0..d {
        if s as u64 != o.psi0().0 {
            c[(s, s)] = C64::new(1.0, 0.0);
        }
    }
    Ok(c)
}

/// The clock matrix assembled from its link and penalty terms.
pub fn dense_clock(o: &ClockOracle) -> Result<DenseClock, ExactError> {
    let mut h = penalty_term(o)?;
    for t in 0..o.time_points() - 1 {
        h += link_term(o, t)?;
    }
    Ok(DenseClock(h))
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub ground: DVector<C64>,
}

impl Spectrum {
    pub fn gap(&self) -> f64 {
        self.eigenvalues[1] - self.eigenvalues[0]
    }
}

fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn ground_state(h: &DenseClock) -> Result<Spectrum, ExactError> {
    let dev = hermitian_deviation(h.matrix());
    if dev > HERMITIAN_TOL {
        return Err(ExactError::NotHermitian(dev));
    }
    let eig = SymmetricEigen::new(h.matrix().clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let ground = eig.eigenvectors.column(order[0]).normalize();
    Ok(Spectrum { eigenvalues, ground })
}

/// `(1 − δτ(H − S)) v`.
pub fn apply_propagator(h: &DenseClock, dtau: f64, shift: f64, v: &DVector<C64>) -> DVector<C64> {
    let hv = h.matrix() * v;
    v * C64::new(1.0 + dtau * shift, 0.0) - hv * C64::new(dtau, 0.0)
}

/// Repeated application of `1 − δτH`, renormalizing every step.
pub fn power_iterate(h: &DenseClock, dtau: f64, iters: usize, start: &DVector<C64>) -> Result<DVector<C64>, ExactError> {
    let mut v = start.normalize();
    for iteration in 0..iters {
        let next = apply_propagator(h, dtau, 0.0, &v);
        let ratio = next.norm();
        // all eigenvalues of a stable propagator lie in [-1, 1]
        if ratio > 1.0 + 1e-10 || !ratio.is_finite() {
            return Err(ExactError::Divergent { iteration, ratio });
        }
        v = next / C64::new(ratio, 0.0);
    }
    Ok(v)
}

/// `|⟨a|b⟩|²` for normalized inputs.
pub fn overlap(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    a.dotc(b).norm_sqr() / (a.norm_squared() * b.norm_squared())
}

/// `⟨ψ|O|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn exact_observable(psi: &DVector<C64>, o: &LocalOp) -> f64 {
    let opsi = apply_local(o, psi);
    (psi.dotc(&opsi) / C64::new(psi.norm_squared(), 0.0)).re
}

/// Exact expectation of `o` at time point `t` of a circuit.
pub fn observable_at(c: &Circuit, psi0: BasisState, o: &LocalOp, t: usize) -> Result<f64, ExactError> {
    let states = evolve(c, psi0)?;
    Ok(exact_observable(&states[t], o))
}

/// Identity circuit of `time_points − 1` gates on one qubit.
pub fn identity_circuit(time_points: usize) -> Circuit {
    Circuit::new(1, vec![crate::circuit::Gate::identity(0); time_points - 1]).expect("valid identity circuit")
}

pub fn clock_gap(c: &Circuit, psi0: BasisState) -> Result<f64, ExactError> {
    let h = dense_clock(&ClockOracle::new(c, psi0))?;
    Ok(ground_state(&h)?.gap())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::clock::ClockKey;
    use std::f64::consts::PI;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn max_dev(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn instances() -> Vec<Circuit> {
        vec![
            Circuit::new(3, vec![Gate::rotation(0, 0.4), Gate::cnot(0, 1).unwrap(), Gate::y(2), Gate::toffoli(2, 1, 0).unwrap()]).unwrap(),
            Circuit::new(2, vec![Gate::y(1), Gate::rotation(1, -1.1), Gate::z(0)]).unwrap(),
            Circuit::new(3, vec![Gate::toffoli(0, 1, 2).unwrap(), Gate::x(1), Gate::cnot(2, 0).unwrap(), Gate::x(0), Gate::rotation(2, 2.0)]).unwrap(),
            Circuit::new(1, vec![Gate::rotation(0, 0.3)]).unwrap(),
        ]
    }

    #[test]
    fn evolve_examples() {
        let s = evolve(&Circuit::new(1, vec![Gate::x(0)]).unwrap(), BasisState(0)).unwrap();
        assert_eq!(s[1], DVector::from_vec(vec![c(0.), c(1.)]));

        let s = evolve(&Circuit::new(1, vec![Gate::rotation(0, PI / 4.0)]).unwrap(), BasisState(0)).unwrap();
        assert!((s[1][0] - c(0.70711)).norm() < 1e-5);
        assert!((s[1][1] - c(-0.70711)).norm() < 1e-5);

        let s = evolve(&Circuit::new(3, vec![Gate::toffoli(0, 1, 2).unwrap()]).unwrap(), BasisState(0b011)).unwrap();
        // qubits 0 and 1 set -> target qubit 2 flips
        assert_eq!(s[1][0b111], c(1.));
        for psi in s {
            assert!((psi.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn history_examples() {
        let h = history_state(&Circuit::new(1, vec![Gate::identity(0)]).unwrap(), BasisState(0)).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((h.clone() - DVector::from_vec(vec![c(r), c(0.), c(r), c(0.)])).norm() < 1e-15);
        let h = history_state(&Circuit::new(1, vec![Gate::x(0)]).unwrap(), BasisState(0)).unwrap();
        assert!((h - DVector::from_vec(vec![c(r), c(0.), c(0.), c(r)])).norm() < 1e-15);
        for circ in instances() {
            let h = history_state(&circ, BasisState(0)).unwrap();
            assert!((h.norm() - 1.0).abs() < 1e-12);
            for t in 0..circ.time_points() {
                let b = time_block(&h, t, circ.n_qubits());
                assert!((b.norm() - 1.0 / (circ.time_points() as f64).sqrt()).abs() < 1e-12);
            }
            let hc = dense_clock(&ClockOracle::new(&circ, BasisState(0))).unwrap();
            assert!((hc.matrix() * &h).norm() < 1e-10);
        }
    }

    #[test]
    fn smallest_clock_by_hand() {
        let o = ClockOracle::new(&Circuit::new(1, vec![Gate::identity(0)]).unwrap(), BasisState(0));
        let h = dense_clock(&o).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                c(0.5), c(0.), c(-0.5), c(0.),
                c(0.), c(1.5), c(0.), c(-0.5),
                c(-0.5), c(0.), c(0.5), c(0.),
                c(0.), c(-0.5), c(0.), c(0.5),
            ],
        );
        assert!(max_dev(h.matrix(), &expected) < 1e-15);
        let spec = ground_state(&h).unwrap();
        assert!(spec.eigenvalues[0].abs() < 1e-12);
        let hist = history_state(&Circuit::new(1, vec![Gate::identity(0)]).unwrap(), BasisState(0)).unwrap();
        assert!(overlap(&spec.ground, &hist) > 1.0 - 1e-12);
    }

    #[test]
    fn oracle_matches_dense_assembly() {
        for circ in instances() {
            for psi0 in [0u64, 1] {
                let o = ClockOracle::new(&circ, BasisState(psi0));
                let h = dense_clock(&o).unwrap();
                let n = circ.n_qubits();
                let keys: Vec<ClockKey> = (0..o.time_points())
                    .flat_map(|t| (0..1u64 << n).map(move |s| ClockKey::new(BasisState(s), t)))
                    .collect();
                for &a in &keys {
                    for &b in &keys {
                        let el = if a == b { c(o.diagonal_element(a)) } else { o.offdiag_element(a, b) };
                        let dense = h.matrix()[(flat_index(a.state, a.t, n), flat_index(b.state, b.t, n))];
                        assert!((el - dense).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn spectrum_properties() {
        for circ in instances() {
            let o = ClockOracle::new(&circ, BasisState(0));
            let h = dense_clock(&o).unwrap();
            let spec = ground_state(&h).unwrap();
            assert!(spec.eigenvalues[0].abs() < 1e-10);
            assert!(spec.gap() > 1e-6);
            let hist = history_state(&circ, BasisState(0)).unwrap();
            assert!(overlap(&spec.ground, &hist) > 1.0 - 1e-9);
            for t in 0..o.time_points() - 1 {
                let ht = link_term(&o, t).unwrap();
                assert!(hist.dotc(&(ht * &hist)).norm() < 1e-10);
            }
            let c0 = penalty_term(&o).unwrap();
            assert!(hist.dotc(&(c0 * &hist)).norm() < 1e-10);
        }
    }

    #[test]
    fn identity_gap_scales_inverse_square() {
        let ts = [4usize, 8, 16, 32];
        let gaps: Vec<f64> = ts.iter().map(|&t| clock_gap(&identity_circuit(t), BasisState(0)).unwrap()).collect();
        let xs: Vec<f64> = ts.iter().map(|&t| t as f64).collect();
        let slope = loglog_slope(&xs, &gaps);
        assert!((-2.3..=-1.7).contains(&slope), "slope {slope}");
    }

    #[test]
    fn power_iteration_converges() {
        for circ in instances() {
            let o = ClockOracle::new(&circ, BasisState(0));
            let h = dense_clock(&o).unwrap();
            let spec = ground_state(&h).unwrap();
            let mut start = DVector::zeros(h.dim());
            start[0] = c(1.0);
            let v = power_iterate(&h, 0.05, 10_000, &start).unwrap();
            assert!(overlap(&v, &spec.ground) > 1.0 - 1e-8);
        }
    }

    #[test]
    fn power_iteration_fixed_point_and_divergence() {
        let circ = &instances()[1];
        let o = ClockOracle::new(circ, BasisState(0));
        let h = dense_clock(&o).unwrap();
        let hist = history_state(circ, BasisState(0)).unwrap();
        let v = power_iterate(&h, 0.05, 100, &hist).unwrap();
        assert!((v - &hist).norm() < 1e-12);

        let lmax = *ground_state(&h).unwrap().eigenvalues.last().unwrap();
        let mut start = DVector::from_element(h.dim(), c(1.0));
        start[3] = c(-2.0);
        let err = power_iterate(&h, 1.2 * PROPAGATOR_STABILITY_BOUND / lmax, 1000, &start).unwrap_err();
        assert!(matches!(err, ExactError::Divergent { .. }));
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = DMatrix::<C64>::identity(3, 3);
        m[(0, 1)] = c(1.0);
        assert!(matches!(ground_state(&DenseClock(m)), Err(ExactError::NotHermitian(_))));
    }

    #[test]
    fn observable_examples() {
        let z = Gate::z(0).local_op();
        assert_eq!(exact_observable(&DVector::from_vec(vec![c(1.), c(0.)]), &z), 1.0);
        assert_eq!(exact_observable(&DVector::from_vec(vec![c(0.), c(1.)]), &z), -1.0);
        let theta = 5.0 * PI / 32.0;
        let circ = Circuit::new(1, vec![Gate::rotation(0, theta)]).unwrap();
        let val = observable_at(&circ, BasisState(0), &z, 1).unwrap();
        assert!((val - 0.55557).abs() < 1e-5);
        assert!((val - (2.0 * theta).cos()).abs() < 1e-12);
    }

    #[test]
    fn size_limits() {
        let big = Circuit::new(30, vec![Gate::x(0); 7]).unwrap();
        assert!(matches!(evolve(&big, BasisState(0)), Err(ExactError::SizeLimit { .. })));
        let o = ClockOracle::new(&Circuit::new(9, vec![Gate::x(0); 7]).unwrap(), BasisState(0));
        assert!(matches!(dense_clock(&o), Err(ExactError::SizeLimit { .. })));
    }
}
