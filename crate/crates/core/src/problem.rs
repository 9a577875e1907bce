//! A circuit plus measured observables, in either the computational frame or
//! the rotated local frame, with exact reference values.

use crate::circuit::{BasisState, Circuit};
use crate::clock::ClockOracle;
use crate::exact::{self, ExactError};
use crate::fciqmc::{self, FciqmcError, Observable, RunResult, SimParams};
use crate::observable::{ObservableError, ObservableSpec};
use crate::rotobasis::{build_local_basis, dress_circuit, dress_observable, LocalBasis};

#[derive(Clone, Debug)]
pub struct ClockProblem {
    circuit: Circuit,
    psi0: BasisState,
    specs: Vec<ObservableSpec>,
    oracle: ClockOracle,
    observables: Vec<Observable>,
    basis: Option<LocalBasis>,
}

impl ClockProblem {
    pub fn new(circuit: Circuit, psi0: BasisState, specs: Vec<ObservableSpec>, rotate_basis: bool) -> Result<Self, ObservableError> {
        let time_points = circuit.time_points();
        let basis = rotate_basis.then(|| build_local_basis(&circuit));
        let oracle = match &basis {
            Some(b) => ClockOracle::from_ops(circuit.n_qubits(), dress_circuit(&circuit, b).ops, psi0),
            None => ClockOracle::new(&circuit, psi0),
        };
        let observables = specs
            .iter()
            .map(|spec| {
                spec.validate(circuit.n_qubits())?;
                let t = spec.resolve_time(time_points)?;
                let op = match &basis {
                    Some(b) => dress_observable(&spec.local_op(), b, t),
                    None => spec.local_op(),
                };
                Ok(Observable { label: spec.to_string(), t, op })
            })
            .collect::<Result<_, ObservableError>>()?;
        Ok(ClockProblem { circuit, psi0, specs, oracle, observables, basis })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn psi0(&self) -> BasisState {
        self.psi0
    }

    pub fn specs(&self) -> &[ObservableSpec] {
        &self.specs
    }

    pub fn oracle(&self) -> &ClockOracle {
        &self.oracle
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn basis(&self) -> Option<&LocalBasis> {
        self.basis.as_ref()
    }

    pub fn labels(&self) -> Vec<String> {
        self.observables.iter().map(|o| o.label.clone()).collect()
    }

    /// Exact expectation values from statevector evolution.
    pub fn exact_values(&self) -> Result<Vec<f64>, ExactError> {
        let states = exact::evolve(&self.circuit, self.psi0)?;
        Ok(self
            .specs
            .iter()
            .zip(&self.observables)
            .map(|(spec, o)| exact::exact_observable(&states[o.t], &spec.local_op()))
            .collect())
    }

    pub fn run(&self, params: &SimParams) -> Result<RunResult, FciqmcError> {
        fciqmc::run(params, &self.oracle, &self.observables)
    }
}
