//! Quantum fixed-radius neighbor search (QFRANS).
//!
//! The crate is organised bottom-up:
//!
//! * [`fps`]: the two-dimensional model of fixed-point amplitude amplification
//!   (angle schedules, recurrences, success probabilities, expected oracle calls).
//! * [`circuit`] and [`statevector`]: a small gate set with arbitrary polarity
//!   controls, and a dense simulator with measurement, post-selection and a
//!   fused/compiled execution path for long basis-permutation runs.
//! * [`arith`]: reversible subtractor, incrementer/decrementer and comparator.
//! * [`circuits`]: the search-specific builders (state preparation, distance
//!   operator, oracles, reflection, one amplification iteration).
//! * [`classical`]: grid discretization and the brute-force pair enumeration used
//!   as ground truth.
//! * [`search`]: the full driver with Bayesian estimation of the number of
//!   neighbor pairs and a repetition-based stopping rule.
//! * [`resources`] and [`noise`]: resource accounting and readout-noise studies.
//!
//! Bit order is little-endian inside every register: qubit `k` of a register
//! carries weight `2^k`.

pub mod arith;
pub mod circuit;
pub mod circuits;
pub mod classical;
mod error;
pub mod fps;
pub mod layout;
pub mod noise;
pub mod output;
pub mod resources;
pub mod search;
pub mod stats;
pub mod statevector;

pub use circuit::{Circuit, Control, Gate, GateKind};
pub use classical::{NeighborPair, ParticleDataset};
pub use error::{Error, Result};
pub use layout::RegisterLayout;
pub use statevector::Statevector;

/// Smallest `q` with `2^q >= n` (`0` for `n <= 1`).
pub fn ceil_log2(n: u64) -> usize {
    if n <= 1 {
        0
    } else {
        (64 - (n - 1).leading_zeros()) as usize
    }
}
