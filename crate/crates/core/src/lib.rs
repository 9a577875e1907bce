//! Real-time evolution of quantum circuits by stochastically projecting out
//! the ground state of the Feynman–Kitaev clock Hamiltonian.

pub mod circuit;
pub mod cli;
pub mod clock;
pub mod exact;
pub mod families;
pub mod fciqmc;
pub mod observable;
pub mod paratime;
pub mod problem;
pub mod rotobasis;
