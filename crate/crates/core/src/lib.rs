//! Exact time-domain Kron reduction of voltage-actuated RL networks.
//!
//! Interior nodes with zero current injection are eliminated by restricting the branch
//! flow dynamics to the null space of the interior incidence block. The reduced ODE is
//! driven by boundary voltages only and reproduces the boundary injections of the full
//! network exactly. Alongside it the crate carries the classical phasor Kron reduction,
//! the homogeneous-network special case, an independent DAE solver for the full
//! network, and the frequency-domain heuristic used as a baseline.
//!
//! ```
//! use kronred::benchmark;
//! use kronred::reduction::{reduce, PStrategy};
//!
//! let net = kronred::network::validate(&benchmark::wye_network()).unwrap();
//! let model = reduce(&net, PStrategy::TreeElimination).unwrap();
//! assert_eq!(model.order(), 2);
//! ```

pub mod baseline;
pub mod benchmark;
pub mod io;
pub mod metrics;
pub mod network;
pub mod numerics;
pub mod phasor;
pub mod random_network;
pub mod reduction;
pub mod simulation;

pub use network::{validate, Network, ValidatedNetwork};
pub use reduction::{reduce, PStrategy, ReducedModel};
pub use simulation::{Excitation, Signal, SolverConfig, Trajectory};
