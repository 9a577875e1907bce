//! Pauli-string observables on one or two qubits at a chosen time point.
//!
//! Text form: `Z 0 @ final`, `X 2 @ 3`, `Z 0 Z 1 @ final`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::circuit::{Gate, LocalOp};

#[derive(Debug, Error, PartialEq)]
pub enum ObservableError {
    #[error("malformed observable `{0}`")]
    Malformed(String),
    #[error("observable qubit {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("observable time {t} out of range for {time_points} time points")]
    TimeOutOfRange { t: usize, time_points: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    fn gate(self, q: usize) -> Gate {
        match self {
            Pauli::X => Gate::x(q),
            Pauli::Y => Gate::y(q),
            Pauli::Z => Gate::z(q),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeSel {
    Final,
    At(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSpec {
    pub paulis: Vec<(Pauli, usize)>,
    pub time: TimeSel,
}

impl ObservableSpec {
    pub fn z(q: usize, time: TimeSel) -> Self {
        ObservableSpec { paulis: vec![(Pauli::Z, q)], time }
    }

    pub fn x(q: usize, time: TimeSel) -> Self {
        ObservableSpec { paulis: vec![(Pauli::X, q)], time }
    }

    pub fn resolve_time(&self, time_points: usize) -> Result<usize, ObservableError> {
        match self.time {
            TimeSel::Final => Ok(time_points - 1),
            TimeSel::At(t) if t < time_points => Ok(t),
            TimeSel::At(t) => Err(ObservableError::TimeOutOfRange { t, time_points }),
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<(), ObservableError> {
        match self.paulis.iter().find(|(_, q)| *q >= n_qubits) {
            Some(&(_, qubit)) => Err(ObservableError::QubitOutOfRange { qubit, n_qubits }),
            None => Ok(()),
        }
    }

    /// Dense matrix on the support (first listed qubit most significant).
    pub fn local_op(&self) -> LocalOp {
        let support: Vec<usize> = self.paulis.iter().map(|&(_, q)| q).collect();
        let matrix = self
            .paulis
            .iter()
            .fold(nalgebra::DMatrix::identity(1, 1), |acc, &(p, q)| {
                acc.kronecker(p.gate(q).local_op().matrix())
            });
        LocalOp::new(support, matrix)
    }
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (p, q)) in self.paulis.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{p:?} {q}")?;
        }
        match self.time {
            TimeSel::Final => f.write_str(" @ final"),
            TimeSel::At(t) => write!(f, " @ {t}"),
        }
    }
}

impl FromStr for ObservableSpec {
    type Err = ObservableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ObservableError::Malformed(s.to_string());
        let (ops, time) = match s.split_once('@') {
            Some((ops, time)) => (ops, Some(time.trim())),
            None => (s, None),
        };
        let time = match time {
            None | Some("final") => TimeSel::Final,
            Some(t) => TimeSel::At(t.parse().map_err(|_| bad())?),
        };
        let tokens: Vec<&str> = ops.split_whitespace().collect();
        if tokens.is_empty() || tokens.len() % 2 != 0 || tokens.len() > 4 {
            return Err(bad());
        }
        let mut paulis = Vec::new();
        for pair in tokens.chunks(2) {
            let p = match pair[0] {
                "X" | "x" => Pauli::X,
                "Y" | "y" => Pauli::Y,
                "Z" | "z" => Pauli::Z,
                _ => return Err(bad()),
            };
            let q: usize = pair[1].parse().map_err(|_| bad())?;
            if paulis.iter().any(|&(_, other)| other == q) {
                return Err(bad());
            }
            paulis.push((p, q));
        }
        Ok(ObservableSpec { paulis, time })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn parse_forms() {
        let o: ObservableSpec = "Z 0 @ final".parse().unwrap();
        assert_eq!(o, ObservableSpec::z(0, TimeSel::Final));
        let o: ObservableSpec = "X 3 Z 1 @ 2".parse().unwrap();
        assert_eq!(o.paulis, vec![(Pauli::X, 3), (Pauli::Z, 1)]);
        assert_eq!(o.time, TimeSel::At(2));
        assert_eq!(o.to_string().parse::<ObservableSpec>().unwrap(), o);
        assert!("Z".parse::<ObservableSpec>().is_err());
        assert!("Q 0".parse::<ObservableSpec>().is_err());
        assert!("Z 0 Z 0".parse::<ObservableSpec>().is_err());
        assert!("Z 0 @ later".parse::<ObservableSpec>().is_err());
    }

    #[test]
    fn two_qubit_matrix() {
        let zz: ObservableSpec = "Z 0 Z 1".parse().unwrap();
        let m = zz.local_op();
        let diag: Vec<Complex64> = (0..4).map(|k| m.matrix()[(k, k)]).collect();
        let expected: Vec<Complex64> = [1.0, -1.0, -1.0, 1.0].iter().map(|&x| Complex64::new(x, 0.0)).collect();
        assert_eq!(diag, expected);
        assert!(m.is_hermitian(0.0));
    }

    #[test]
    fn ranges() {
        let o = ObservableSpec::z(4, TimeSel::At(7));
        assert!(o.validate(4).is_err());
        assert!(o.validate(5).is_ok());
        assert!(o.resolve_time(7).is_err());
        assert_eq!(o.resolve_time(8), Ok(7));
        assert_eq!(ObservableSpec::z(0, TimeSel::Final).resolve_time(8), Ok(7));
    }
}
