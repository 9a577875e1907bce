//! Quantum circuits over the Toffoli / Pauli / CNOT / R(θ) gate set.
//!
//! Basis states are little-endian integers: qubit `q` is bit `q`, and `|0…0⟩`
//! is `0`. Inside a gate's local matrix the *first* support qubit is the most
//! significant bit, so `CNOT 0 1` uses the textbook matrix with qubit 0 as
//! control and `TOF a b c` swaps `|110⟩ ↔ |111⟩` in `(a, b, c)` order.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Tolerance used when deciding whether a matrix entry is structurally zero.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("line {line}: malformed gate `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown gate `{name}`")]
    UnknownGate { line: usize, name: String },
    #[error("qubit index {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("duplicate qubit {qubit} in gate support")]
    DuplicateSupport { qubit: usize },
    #[error("gate {kind} expects {expected} qubits, got {got}")]
    Arity { kind: &'static str, expected: usize, got: usize },
    #[error("a circuit needs at least one gate (two time points)")]
    Empty,
    #[error("{0} qubits do not fit the 64-bit state encoding")]
    TooManyQubits(usize),
}

/// Computational basis configuration of up to 64 qubits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState(pub u64);

impl BasisState {
    #[inline]
    pub fn bit(self, q: usize) -> bool {
        (self.0 >> q) & 1 == 1
    }

    #[inline]
    pub fn with_bit(self, q: usize, value: bool) -> Self {
        if value {
            BasisState(self.0 | (1 << q))
        } else {
            BasisState(self.0 & !(1 << q))
        }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    I,
    X,
    Y,
    Z,
    Cnot,
    Toffoli,
    /// `[[cos θ, sin θ], [−sin θ, cos θ]]`
    R(f64),
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot => 2,
            GateKind::Toffoli => 3,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::I => "I",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::Cnot => "CNOT",
            GateKind::Toffoli => "TOF",
            GateKind::R(_) => "R",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    support: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, support: Vec<usize>) -> Result<Self, CircuitError> {
        if support.len() != kind.arity() {
            return Err(CircuitError::Arity {
                kind: kind.name(),
                expected: kind.arity(),
                got: support.len(),
            });
        }
        for (k, &q) in support.iter().enumerate() {
            if support[..k].contains(&q) {
                return Err(CircuitError::DuplicateSupport { qubit: q });
            }
        }
        Ok(Gate { kind, support })
    }

    pub fn identity(q: usize) -> Self {
        Gate { kind: GateKind::I, support: vec![q] }
    }

    pub fn x(q: usize) -> Self {
        Gate { kind: GateKind::X, support: vec![q] }
    }

    pub fn y(q: usize) -> Self {
        Gate { kind: GateKind::Y, support: vec![q] }
    }

    pub fn z(q: usize) -> Self {
        Gate { kind: GateKind::Z, support: vec![q] }
    }

    pub fn rotation(q: usize, theta: f64) -> Self {
        Gate { kind: GateKind::R(theta), support: vec![q] }
    }

    pub fn cnot(control: usize, target: usize) -> Result<Self, CircuitError> {
        Gate::new(GateKind::Cnot, vec![control, target])
    }

    pub fn toffoli(c1: usize, c2: usize, target: usize) -> Result<Self, CircuitError> {
        Gate::new(GateKind::Toffoli, vec![c1, c2, target])
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn local_op(&self) -> LocalOp {
        LocalOp::new(self.support.clone(), gate_matrix(self))
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        for q in &self.support {
            write!(f, " {q}")?;
        }
        if let GateKind::R(theta) = self.kind {
            write!(f, " {theta:?}")?;
        }
        Ok(())
    }
}

/// Dense matrix of a gate in its local basis (first support qubit = MSB).
pub fn gate_matrix(g: &Gate) -> DMatrix<C64> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    match g.kind {
        GateKind::I => DMatrix::identity(2, 2),
        GateKind::X => DMatrix::from_row_slice(2, 2, &[zero, one, one, zero]),
        GateKind::Y => DMatrix::from_row_slice(2, 2, &[zero, -C64::i(), C64::i(), zero]),
        GateKind::Z => DMatrix::from_row_slice(2, 2, &[one, zero, zero, -one]),
        GateKind::R(theta) => {
            let (s, c) = theta.sin_cos();
            DMatrix::from_row_slice(
                2,
                2,
                &[C64::new(c, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(c, 0.0)],
            )
        }
        GateKind::Cnot => permutation(4, &[0, 1, 3, 2]),
        GateKind::Toffoli => permutation(8, &[0, 1, 2, 3, 4, 5, 7, 6]),
    }
}

fn permutation(dim: usize, image: &[usize]) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, dim);
    for (col, &row) in image.iter().enumerate() {
        m[(row, col)] = C64::new(1.0, 0.0);
    }
    m
}

/// A dense operator on a few qubits, applied to full basis states on the fly.
///
/// Used for circuit gates, dressed (basis-rotated) gates and observables alike.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOp {
    support: Vec<usize>,
    matrix: DMatrix<C64>,
}

impl LocalOp {
    pub fn new(support: Vec<usize>, matrix: DMatrix<C64>) -> Self {
        let dim = 1usize << support.len();
        assert_eq!(matrix.shape(), (dim, dim), "local matrix does not match support");
        LocalOp { support, matrix }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Mask of the support bits in the global encoding.
    #[inline]
    pub fn mask(&self) -> u64 {
        self.support.iter().fold(0, |m, &q| m | (1 << q))
    }

    #[inline]
    pub fn local_index(&self, s: BasisState) -> usize {
        let k = self.support.len();
        self.support
            .iter()
            .enumerate()
            .fold(0, |acc, (m, &q)| acc | ((s.bit(q) as usize) << (k - 1 - m)))
    }

    /// Replace the support bits of `s` with the local assignment `local`.
    #[inline]
    pub fn embed(&self, s: BasisState, local: usize) -> BasisState {
        let k = self.support.len();
        let mut out = s.0 & !self.mask();
        for (m, &q) in self.support.iter().enumerate() {
            out |= (((local >> (k - 1 - m)) & 1) as u64) << q;
        }
        BasisState(out)
    }

    /// `⟨to|A|from⟩`, or `⟨to|A†|from⟩` when `dagger` is set.
    #[inline]
    pub fn element(&self, to: BasisState, from: BasisState, dagger: bool) -> C64 {
        let mask = self.mask();
        if (to.0 & !mask) != (from.0 & !mask) {
            return C64::new(0.0, 0.0);
        }
        let (lt, lf) = (self.local_index(to), self.local_index(from));
        if dagger {
            self.matrix[(lf, lt)].conj()
        } else {
            self.matrix[(lt, lf)]
        }
    }

    /// All `j` with a nonzero `⟨j|A|i⟩` (or `⟨j|A†|i⟩`), with amplitudes.
    pub fn apply(&self, i: BasisState, dagger: bool) -> Vec<(BasisState, C64)> {
        let li = self.local_index(i);
        (0..self.dim())
            .filter_map(|lj| {
                let a = if dagger {
                    self.matrix[(li, lj)].conj()
                } else {
                    self.matrix[(lj, li)]
                };
                (a.norm() > ZERO_TOL).then(|| (self.embed(i, lj), a))
            })
            .collect()
    }

    /// Every assignment of the support bits, starting from `i`.
    pub fn candidates(&self, i: BasisState) -> impl Iterator<Item = BasisState> + '_ {
        (0..self.dim()).map(move |l| self.embed(i, l))
    }

    pub fn adjoint(&self) -> LocalOp {
        LocalOp { support: self.support.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = self.matrix.adjoint() * &self.matrix;
        let id = DMatrix::<C64>::identity(self.dim(), self.dim());
        (prod - id).iter().all(|z| z.norm() <= tol)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.matrix.adjoint() - &self.matrix).iter().all(|z| z.norm() <= tol)
    }
}

/// Sparse action of a gate on one basis state.
pub fn apply_gate(g: &Gate, i: BasisState, dagger: bool) -> Vec<(BasisState, C64)> {
    g.local_op().apply(i, dagger)
}

/// The spawning proposal domain: all `2^k` assignments of the gate's support.
///
/// `dagger` does not change the domain; it is accepted for symmetry with
/// [`apply_gate`].
pub fn connected_states(g: &Gate, i: BasisState, _dagger: bool) -> Vec<BasisState> {
    g.local_op().candidates(i).collect()
}

/// An ordered gate list; gate `t` maps time point `t` to `t + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        if n_qubits > 64 {
            return Err(CircuitError::TooManyQubits(n_qubits));
        }
        if gates.is_empty() {
            return Err(CircuitError::Empty);
        }
        for g in &gates {
            if let Some(&q) = g.support.iter().find(|&&q| q >= n_qubits) {
                return Err(CircuitError::QubitOutOfRange { qubit: q, n_qubits });
            }
        }
        Ok(Circuit { n_qubits, gates })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of time points `T = gates + 1`.
    pub fn time_points(&self) -> usize {
        self.gates.len() + 1
    }

    pub fn local_ops(&self) -> Vec<LocalOp> {
        self.gates.iter().map(Gate::local_op).collect()
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

/// Parse the line-oriented circuit format. `#` starts a comment.
pub fn parse_circuit(text: &str, n_qubits: usize) -> Result<Circuit, CircuitError> {
    let mut gates = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let malformed = || CircuitError::Malformed { line, text: body.to_string() };
        let mut tokens = body.split_whitespace();
        let name = tokens.next().ok_or_else(malformed)?;
        let args: Vec<&str> = tokens.collect();
        let qubits = |n: usize| -> Result<Vec<usize>, CircuitError> {
            if args.len() != n {
                return Err(malformed());
            }
            args.iter().map(|a| usize::from_str(a).map_err(|_| malformed())).collect()
        };
        let (kind, support) = match name.to_ascii_uppercase().as_str() {
            "I" => (GateKind::I, qubits(1)?),
            "X" => (GateKind::X, qubits(1)?),
            "Y" => (GateKind::Y, qubits(1)?),
            "Z" => (GateKind::Z, qubits(1)?),
            "CNOT" => (GateKind::Cnot, qubits(2)?),
            "TOF" => (GateKind::Toffoli, qubits(3)?),
            "R" => {
                if args.len() != 2 {
                    return Err(malformed());
                }
                let q = usize::from_str(args[0]).map_err(|_| malformed())?;
                let theta = f64::from_str(args[1]).map_err(|_| malformed())?;
                if !theta.is_finite() {
                    return Err(malformed());
                }
                (GateKind::R(theta), vec![q])
            }
            _ => return Err(CircuitError::UnknownGate { line, name: name.to_string() }),
        };
        if let Some(&q) = support.iter().find(|&&q| q >= n_qubits) {
            return Err(CircuitError::QubitOutOfRange { qubit: q, n_qubits });
        }
        gates.push(Gate::new(kind, support)?);
    }
    Circuit::new(n_qubits, gates)
}
