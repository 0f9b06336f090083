//! Qubit map for the pair-search register.
//!
//! Segments, lowest index first:
//! `[a0:1][labelA:q0][labelB:q0][posA:q1][dist:q1][sign:1][anc:a1]`.
//! Bits are little-endian inside every segment. `dist` followed by `sign`
//! forms one `q1 + 1` bit two's-complement word. The `anc` segment holds a
//! shared pool of clean work qubits followed by one flag qubit.

use serde::Serialize;

use crate::{ceil_log2, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegisterLayout {
    pub n: usize,
    pub q0: usize,
    pub q1: usize,
    pub pool: usize,
}

impl RegisterLayout {
    /// Layout for `n` particles on a `2^q1` grid.
    pub fn new(n: usize, q1: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("need at least one particle"));
        }
        if q1 == 0 || q1 > 30 {
            return Err(Error::arg(format!("position width q1={q1} out of range 1..=30")));
        }
        Ok(Self { n, q0: ceil_log2(n as u64), q1, pool: pool_size(q1) })
    }

    /// Work ancillas including the flag.
    pub fn a1(&self) -> usize {
        self.pool + 1
    }

    pub fn total(&self) -> usize {
        2 + 2 * self.q0 + 2 * self.q1 + self.a1()
    }

    pub fn a0(&self) -> usize {
        0
    }

    pub fn label_a(&self) -> Vec<usize> {
        (1..1 + self.q0).collect()
    }

    pub fn label_b(&self) -> Vec<usize> {
        let s = 1 + self.q0;
        (s..s + self.q0).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        (1..1 + 2 * self.q0).collect()
    }

    pub fn pos_a(&self) -> Vec<usize> {
        let s = 1 + 2 * self.q0;
        (s..s + self.q1).collect()
    }

    /// Second position register; holds `x_j` before the subtraction and the
    /// low bits of `x_i - x_j` after it.
    pub fn dist(&self) -> Vec<usize> {
        let s = 1 + 2 * self.q0 + self.q1;
        (s..s + self.q1).collect()
    }

    pub fn sign(&self) -> usize {
        1 + 2 * self.q0 + 2 * self.q1
    }

    /// `dist` plus `sign` as one `q1 + 1` bit word.
    pub fn dist_word(&self) -> Vec<usize> {
        let mut w = self.dist();
        w.push(self.sign());
        w
    }

    pub fn ancilla_pool(&self) -> Vec<usize> {
        let s = self.sign() + 1;
        (s..s + self.pool).collect()
    }

    pub fn flag(&self) -> usize {
        self.sign() + 1 + self.pool
    }

    /// Every qubit that must be `|0>` whenever no arithmetic block is open.
    pub fn work_qubits(&self) -> Vec<usize> {
        let mut w = self.ancilla_pool();
        w.push(self.flag());
        w
    }

    /// Integer read from `qubits` of basis index `k`.
    pub fn read(k: u64, qubits: &[usize]) -> u64 {
        qubits.iter().enumerate().fold(0, |v, (b, &q)| v | ((k >> q) & 1) << b)
    }

    /// Basis index `k` with `value` written into `qubits`.
    pub fn write(k: u64, qubits: &[usize], value: u64) -> u64 {
        qubits.iter().enumerate().fold(k, |k, (b, &q)| (k & !(1 << q)) | ((value >> b) & 1) << q)
    }
}

/// Clean work qubits shared by the subtractor, comparator and incrementer.
pub fn pool_size(q1: usize) -> usize {
    q1.saturating_sub(1).max(1)
}
