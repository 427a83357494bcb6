//! Suboptimal distributed linear-quadratic control for networks of
//! identical linear agents coupled through an undirected graph.
//!
//! The crate designs a local gain `K` for the diffusive law
//! `u = (L ⊗ K) x`, certifies that the global quadratic cost stays below a
//! budget `γ`, and checks consensus both through the modal decomposition of
//! the Laplacian and by direct simulation.
//!
//! Modules, bottom-up:
//! - [`matops`]: dense kernels (symmetric eigen, Lyapunov, CARE, PBH).
//! - [`graph`]: Laplacian, spectrum, disagreement projector.
//! - [`synthesis`]: gain design and initial-state admissibility.
//! - [`analysis`]: exact modal cost and `γ`-certificates.
//! - [`sim`]: RK4 closed-loop simulation and quadrature cost.
//! - [`example`]: the eight-oscillator path-graph fixture.

pub mod analysis;
pub mod error;
pub mod example;
pub mod graph;
pub mod matops;
pub mod sim;
pub mod synthesis;
pub mod tolerance;

pub use error::{Error, Result};
pub use matops::{Matrix, Vector};
pub use tolerance::Tolerances;
