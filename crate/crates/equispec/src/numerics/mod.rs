//! Numerical kernels shared by the rest of the crate.

pub mod fd;
pub mod grid;
pub mod hamiltonian;
pub mod rk;
pub mod tridiag;

pub use fd::fd_derivative;
pub use grid::Grid1D;
pub use hamiltonian::{build_hamiltonian, KineticScale};
pub use rk::{integrate_rk, integrate_rk_partial, OdeState, RkControls, StepControl, Termination, Trajectory};
pub use tridiag::{eigensolve, EigenOptions, Eigenpairs, TridiagonalSym};
