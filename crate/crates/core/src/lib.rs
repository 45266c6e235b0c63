//! Cover-time and blanket-time estimation for finite weighted graphs.
//!
//! The crate treats a connected weighted graph both as an electrical network
//! and as the reversible random walk it induces, and estimates the walk's
//! cover time several ways:
//!
//! * from the expected maximum of the Gaussian free field ([`gff`]),
//! * from a deterministic approximation of the γ₂ functional of the
//!   resistance metric ([`gamma2`]),
//! * from the pseudoinverse of the normalized Laplacian and from a
//!   low-dimensional resistance sketch ([`gff`]),
//! * from Matthews-type hitting-time bounds ([`estimators`]),
//!
//! and checks them against direct simulation ([`walk`]) and exact electrical
//! identities ([`resistance`]).

pub mod error;
pub mod estimators;
pub mod gamma2;
pub mod generators;
pub mod gff;
pub mod io;
pub mod montecarlo;
pub mod network;
pub mod resistance;
pub mod walk;

pub use error::{Error, Result};
pub use generators::Family;
pub use network::{Network, VertexId};
pub use resistance::{HittingTimeTable, ResistanceOracle};
