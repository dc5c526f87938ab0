//! State-vector Hamiltonian simulation with adaptive-stepsize second-order
//! Trotterization: the per-step error is measured on the fly against a
//! higher-order companion formula and the stepsize updated to stay just
//! inside a preset tolerance. Includes a priori commutator-norm stepsize
//! bounds and fixed-step Richardson extrapolation as baselines, and a dense
//! exact-evolution oracle for small systems.

pub mod adaptive;
pub mod baselines;
pub mod dense;
pub mod error;
pub mod estimators;
pub mod formulas;
pub mod lanczos;
pub mod models;
pub mod pauli;
pub mod quad;
pub mod statevector;

pub use error::{Error, Result};
