//! Zero-rate reliability of finite-state channels whose state is driven by
//! past inputs.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation; file formats, reports and the command-line front end live in
//! the companion `fsc` crate.
//!
//! Layout:
//!
//! * [`fsm`] – the state machine skeleton, augmentation and structural checks.
//! * [`bhatt`] – output kernels per feasible state pair and the Bhattacharyya
//!   distance matrix.
//! * [`exponent`] – the quadratic exponent functional, concavity test,
//!   constrained maximization and the upper concave envelope.
//! * [`codebook`] – Markov types, Eulerian circuits, ensembles and expurgation.
//! * [`montecarlo`] – ML decoding simulation and the `Z(rho)` oracle.
//! * [`isi`] – the Gaussian inter-symbol interference specialization.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod graph;
mod linalg;
mod math;
mod rng;

pub mod bhatt;
pub mod codebook;
pub mod exponent;
pub mod fsm;
pub mod isi;
pub mod montecarlo;

pub use error::{Error, Result};
pub use rng::derive_seed;
