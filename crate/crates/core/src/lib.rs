//! Decoder soft information for planar surface codes and the logical-level
//! error mitigation built on it.
//!
//! The crate is organised bottom-up:
//!
//! * [`pauli`], [`code`]: Pauli algebra, the unrotated planar code, noise and
//!   syndromes.
//! * [`blossom`], [`decoder`]: exact minimum-weight perfect matching and the
//!   boundary-enforced matching decoder producing per-shot posteriors.
//! * [`exact`]: coset enumeration and MPS contraction of the coset partition
//!   functions, plus the matching-vs-exact bias study.
//! * [`estimator`]: running logical-channel estimates from posteriors.
//! * [`select`], [`pec`], [`zne`]: post-selection and runtime abort,
//!   probabilistic error cancellation, zero-noise extrapolation.
//! * [`multiqubit`]: transversal CNOT and lattice-surgery CNOT soft information.
//! * [`resources`]: spacetime-volume comparison of QEC and QEC+QEM stacks.

pub mod blossom;
pub mod channel;
pub mod code;
pub mod decoder;
pub mod error;
pub mod estimator;
pub mod exact;
pub mod multiqubit;
pub mod pauli;
pub mod pec;
pub mod resources;
pub mod rng;
pub mod select;
pub mod stats;
pub mod zne;

pub use channel::{PauliChannel, PosteriorVector};
pub use code::{CheckType, CodeLayout, NoiseModel, Syndrome};
pub use error::{Error, Result};
pub use pauli::{CliffordGate, Pauli, PauliString};
pub use rng::RandomStream;
