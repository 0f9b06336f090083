//! Dense statevector simulation.
//!
//! Basis index bit `q` is the state of qubit `q`. Besides gate-by-gate
//! application there is a compiled path: runs of signed-permutation gates
//! (X, Z, Phase with any controls) collapse into a single index map with sign
//! flags, and runs of small non-permutation gates fuse into dense blocks of at
//! most [`MAX_FUSED_QUBITS`] qubits. Reversible-arithmetic heavy circuits then
//! cost one memory pass per run instead of one per gate.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::{Error, Result};

/// Default refusal limit for dense states.
pub const DEFAULT_MAX_QUBITS: usize = 26;
/// Widest circuit accepted by [`circuit_unitary`].
pub const UNITARY_MAX_QUBITS: usize = 12;
/// Widest qubit set fused into one dense block by [`CompiledCircuit`].
pub const MAX_FUSED_QUBITS: usize = 3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Sparse bookkeeping is dropped once more than `dim / SPARSE_RATIO`
/// amplitudes are non-zero.
const SPARSE_RATIO: usize = 8;

/// Full amplitude vector over `2^n` basis states.
///
/// The sorted list of non-zero indices is tracked while it stays short, and
/// every operation then visits only those entries. Skipped entries are exact
/// zeros, so results are bitwise identical to a full sweep.
#[derive(Debug)]
pub struct Statevector {
    amps: Vec<Complex64>,
    num_qubits: usize,
    support: Option<Vec<usize>>,
    scratch: Vec<Complex64>,
}

impl Clone for Statevector {
    fn clone(&self) -> Self {
        Self { amps: self.amps.clone(), num_qubits: self.num_qubits, support: self.support.clone(), scratch: Vec::new() }
    }
}

impl PartialEq for Statevector {
    fn eq(&self, other: &Self) -> bool {
        self.num_qubits == other.num_qubits && self.amps == other.amps
    }
}

impl Statevector {
    /// `|0...0>` on `num_qubits` qubits, refusing widths above `max_qubits`.
    pub fn new(num_qubits: usize, max_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0, max_qubits)
    }

    pub fn basis(num_qubits: usize, index: u64, max_qubits: usize) -> Result<Self> {
        if num_qubits > max_qubits.min(40) {
            return Err(Error::Capacity { requested: num_qubits, limit: max_qubits.min(40) });
        }
        let dim = 1usize << num_qubits;
        if index as usize >= dim {
            return Err(Error::arg(format!("basis index {index} out of range")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index as usize] = ONE;
        Ok(Self { amps, num_qubits, support: Some(vec![index as usize]), scratch: Vec::new() })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::arg("amplitude count must be a power of two"));
        }
        let mut sv = Self { num_qubits: dim.trailing_zeros() as usize, amps, support: None, scratch: Vec::new() };
        sv.rescan();
        Ok(sv)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: u64) -> Complex64 {
        self.amps[index as usize]
    }

    /// Number of basis states that may carry amplitude.
    pub fn active_len(&self) -> usize {
        self.support.as_ref().map_or(self.amps.len(), Vec::len)
    }

    fn limit(&self) -> usize {
        (self.amps.len() / SPARSE_RATIO).max(1)
    }

    fn rescan(&mut self) {
        let nz: Vec<usize> = (0..self.amps.len()).filter(|&k| self.amps[k] != ZERO).take(self.limit() + 1).collect();
        self.support = (nz.len() <= self.limit()).then_some(nz);
    }

    /// Keep the non-zero entries of `candidates` (sorted, deduplicated) as the
    /// new support, or drop to full sweeps when there are too many.
    fn set_support(&mut self, mut candidates: Vec<usize>) {
        candidates.sort_unstable();
        candidates.dedup();
        candidates.retain(|&k| self.amps[k] != ZERO);
        self.support = (candidates.len() <= self.limit()).then_some(candidates);
    }

    fn for_each_index(&self, mut f: impl FnMut(usize)) {
        match &self.support {
            Some(s) => s.iter().for_each(|&k| f(k)),
            None => (0..self.amps.len()).for_each(f),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        let mut total = 0.0;
        self.for_each_index(|k| total += self.amps[k].norm_sqr());
        total
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Complex64 {
        assert_eq!(self.num_qubits, other.num_qubits);
        let mut total = ZERO;
        self.for_each_index(|k| total += self.amps[k].conj() * other.amps[k]);
        total
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        let (mask, value) = gate.control_mask();
        let (mask, value) = (mask as usize, value as usize);
        if gate.kind == GateKind::Phase {
            let amps = &mut self.amps;
            let flip = |k: usize, amps: &mut Vec<Complex64>| {
                if k & mask == value {
                    amps[k] = -amps[k];
                }
            };
            match &self.support {
                Some(s) => s.iter().for_each(|&k| flip(k, amps)),
                None => (0..amps.len()).for_each(|k| flip(k, amps)),
            }
            return Ok(());
        }
        let m = single_qubit_matrix(gate.kind);
        for &t in &gate.targets {
            self.apply_1q(t, &m, mask, value);
        }
        Ok(())
    }

    fn apply_1q(&mut self, target: usize, m: &[[Complex64; 2]; 2], mask: usize, value: usize) {
        let bit = 1usize << target;
        let pair = |amps: &mut Vec<Complex64>, k0: usize| {
            let k1 = k0 | bit;
            let (x, y) = (amps[k0], amps[k1]);
            amps[k0] = m[0][0] * x + m[0][1] * y;
            amps[k1] = m[1][0] * x + m[1][1] * y;
        };
        match self.support.take() {
            Some(s) => {
                let mut bases: Vec<usize> = s.iter().map(|&k| k & !bit).filter(|&k0| k0 & mask == value).collect();
                bases.dedup();
                bases.sort_unstable();
                bases.dedup();
                for &k0 in &bases {
                    pair(&mut self.amps, k0);
                }
                let mut cand = s;
                cand.extend(bases.iter().flat_map(|&k0| [k0, k0 | bit]));
                self.set_support(cand);
            }
            None => {
                let low = bit - 1;
                for base in 0..self.amps.len() / 2 {
                    let k0 = ((base & !low) << 1) | (base & low);
                    if k0 & mask == value {
                        pair(&mut self.amps, k0);
                    }
                }
            }
        }
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits() > self.num_qubits {
            return Err(Error::arg("circuit wider than state"));
        }
        for g in circuit.gates() {
            self.apply(g)?;
        }
        Ok(())
    }

    pub fn apply_compiled(&mut self, compiled: &CompiledCircuit) -> Result<()> {
        if compiled.num_qubits != self.num_qubits {
            return Err(Error::arg("compiled circuit width differs from state width"));
        }
        for op in &compiled.ops {
            match op {
                CompiledOp::Diagonal { negate } => {
                    let amps = &mut self.amps;
                    let flip = |k: usize, amps: &mut Vec<Complex64>| {
                        if negate[k] {
                            amps[k] = -amps[k];
                        }
                    };
                    match &self.support {
                        Some(s) => s.iter().for_each(|&k| flip(k, amps)),
                        None => (0..amps.len()).for_each(|k| flip(k, amps)),
                    }
                }
                CompiledOp::Permutation { dest, negate } => self.apply_permutation(dest, negate),
                CompiledOp::Dense { qubits, matrix } => self.apply_dense(qubits, matrix),
                CompiledOp::Gate(g) => self.apply(g)?,
            }
        }
        Ok(())
    }

    fn apply_permutation(&mut self, dest: &[u32], negate: &[bool]) {
        let image = |k: usize, a: Complex64| (dest[k] as usize, if negate[k] { -a } else { a });
        match self.support.take() {
            Some(s) => {
                let moved: Vec<(usize, Complex64)> = s.iter().map(|&k| image(k, self.amps[k])).collect();
                for &k in &s {
                    self.amps[k] = ZERO;
                }
                for &(k, a) in &moved {
                    self.amps[k] = a;
                }
                self.set_support(moved.into_iter().map(|(k, _)| k).collect());
            }
            None => {
                let mut out = std::mem::take(&mut self.scratch);
                out.clear();
                out.resize(self.amps.len(), ZERO);
                for (k, a) in self.amps.iter().enumerate() {
                    if *a != ZERO {
                        let (t, v) = image(k, *a);
                        out[t] = v;
                    }
                }
                self.scratch = std::mem::replace(&mut self.amps, out);
            }
        }
    }

    fn apply_dense(&mut self, qubits: &[usize], matrix: &[Complex64]) {
        let k = qubits.len();
        let n = 1usize << k;
        let offsets: Vec<usize> = (0..n)
            .map(|j| qubits.iter().enumerate().filter(|(b, _)| j >> b & 1 == 1).map(|(_, &q)| 1 << q).sum())
            .collect();
        let qmask: usize = qubits.iter().map(|&q| 1usize << q).sum();
        let mut buf = vec![ZERO; n];
        let mut block = |amps: &mut Vec<Complex64>, base: usize| {
            let mut any = false;
            for j in 0..n {
                buf[j] = amps[base + offsets[j]];
                any |= buf[j] != ZERO;
            }
            if any {
                for r in 0..n {
                    let row = &matrix[r * n..(r + 1) * n];
                    amps[base + offsets[r]] = row.iter().zip(&buf).map(|(m, x)| m * x).sum();
                }
            }
        };
        match self.support.take() {
            Some(s) => {
                let mut bases: Vec<usize> = s.iter().map(|&k| k & !qmask).collect();
                bases.sort_unstable();
                bases.dedup();
                for &b in &bases {
                    block(&mut self.amps, b);
                }
                self.set_support(bases.iter().flat_map(|&b| offsets.iter().map(move |o| b + o)).collect());
            }
            None => {
                for base in 0..self.amps.len() {
                    if base & qmask == 0 {
                        block(&mut self.amps, base);
                    }
                }
            }
        }
    }

    /// Probability that `qubits` read `bits`.
    pub fn probability(&self, qubits: &[usize], bits: &[bool]) -> f64 {
        assert_eq!(qubits.len(), bits.len());
        let (mask, value) = pattern(qubits, bits);
        let mut total = 0.0;
        self.for_each_index(|k| {
            if k & mask == value {
                total += self.amps[k].norm_sqr();
            }
        });
        total
    }

    /// Marginal distribution of `qubits`; entry `j` has bit `b` of `j` equal to
    /// the outcome of `qubits[b]`.
    pub fn marginal(&self, qubits: &[usize]) -> Vec<f64> {
        assert!(qubits.len() <= 24, "marginal over too many qubits");
        let mut dist = vec![0.0; 1 << qubits.len()];
        self.for_each_index(|k| {
            let p = self.amps[k].norm_sqr();
            if p != 0.0 {
                let j = qubits.iter().enumerate().fold(0usize, |j, (b, &q)| j | ((k >> q & 1) << b));
                dist[j] += p;
            }
        });
        dist
    }

    /// Sample `qubits` with Born probabilities and collapse the state.
    pub fn measure<R: Rng + ?Sized>(&mut self, qubits: &[usize], rng: &mut R) -> Result<Vec<bool>> {
        check_distinct(qubits, self.num_qubits)?;
        let dist = self.marginal(qubits);
        let total: f64 = dist.iter().sum();
        let r = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut outcome = dist.len() - 1;
        for (j, p) in dist.iter().enumerate() {
            acc += p;
            if r < acc && *p > 0.0 {
                outcome = j;
                break;
            }
        }
        // guard against landing on a zero-probability tail entry
        while dist[outcome] == 0.0 && outcome > 0 {
            outcome -= 1;
        }
        let bits: Vec<bool> = (0..qubits.len()).map(|b| outcome >> b & 1 == 1).collect();
        self.collapse(qubits, &bits)?;
        Ok(bits)
    }

    /// Project onto `qubits == bits` and renormalise; returns the probability
    /// of that outcome.
    pub fn collapse(&mut self, qubits: &[usize], bits: &[bool]) -> Result<f64> {
        check_distinct(qubits, self.num_qubits)?;
        let p = self.probability(qubits, bits);
        if p <= 0.0 {
            return Err(Error::arg("post-selected outcome has zero probability"));
        }
        let (mask, value) = pattern(qubits, bits);
        let scale = 1.0 / p.sqrt();
        match self.support.take() {
            Some(s) => {
                for &k in &s {
                    if k & mask == value {
                        self.amps[k] *= scale;
                    } else {
                        self.amps[k] = ZERO;
                    }
                }
                self.set_support(s);
            }
            None => {
                for (k, a) in self.amps.iter_mut().enumerate() {
                    if k & mask == value {
                        *a *= scale;
                    } else {
                        *a = ZERO;
                    }
                }
                self.rescan();
            }
        }
        Ok(p)
    }
}

fn check_distinct(qubits: &[usize], n: usize) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n || qubits[..i].contains(&q) {
            return Err(Error::arg(format!("measured qubit {q} repeated or out of range")));
        }
    }
    Ok(())
}

fn pattern(qubits: &[usize], bits: &[bool]) -> (usize, usize) {
    qubits.iter().zip(bits).fold((0, 0), |(m, v), (&q, &b)| (m | 1 << q, v | (b as usize) << q))
}

fn single_qubit_matrix(kind: GateKind) -> [[Complex64; 2]; 2] {
    let r = |x: f64| Complex64::new(x, 0.0);
    match kind {
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
        GateKind::H => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            [[r(s), r(s)], [r(s), r(-s)]]
        }
        GateKind::Ry(a) => {
            let (s, c) = (a / 2.0).sin_cos();
            [[r(c), r(-s)], [r(s), r(c)]]
        }
        GateKind::Phase => unreachable!("phase has no target"),
    }
}

/// Dense unitary of a circuit of at most [`UNITARY_MAX_QUBITS`] qubits;
/// column `k` is the circuit applied to `|k>`.
pub fn circuit_unitary(circuit: &Circuit) -> Result<Array2<Complex64>> {
    let n = circuit.num_qubits();
    if n > UNITARY_MAX_QUBITS {
        return Err(Error::Capacity { requested: n, limit: UNITARY_MAX_QUBITS });
    }
    let dim = 1usize << n;
    let mut u = Array2::zeros((dim, dim));
    for k in 0..dim {
        let mut sv = Statevector::basis(n, k as u64, UNITARY_MAX_QUBITS)?;
        sv.apply_circuit(circuit)?;
        for (r, a) in sv.amps.iter().enumerate() {
            u[[r, k]] = *a;
        }
    }
    Ok(u)
}

#[derive(Debug, Clone)]
enum CompiledOp {
    Diagonal { negate: Vec<bool> },
    Permutation { dest: Vec<u32>, negate: Vec<bool> },
    Dense { qubits: Vec<usize>, matrix: Vec<Complex64> },
    Gate(Gate),
}

/// A circuit lowered to index maps and fused dense blocks for a fixed width.
#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    num_qubits: usize,
    ops: Vec<CompiledOp>,
}

impl CompiledCircuit {
    /// Lower `circuit` for a state of `num_qubits` qubits (at most 32).
    pub fn compile(circuit: &Circuit, num_qubits: usize) -> Result<Self> {
        if num_qubits > 32 {
            return Err(Error::Capacity { requested: num_qubits, limit: 32 });
        }
        if circuit.num_qubits() > num_qubits {
            return Err(Error::arg("circuit wider than target state"));
        }
        for g in circuit.gates() {
            g.validate(num_qubits)?;
        }
        let gates = circuit.gates();
        let mut ops = Vec::new();
        let mut i = 0;
        while i < gates.len() {
            if gates[i].kind.is_signed_permutation() {
                let j = (i..gates.len()).find(|&j| !gates[j].kind.is_signed_permutation()).unwrap_or(gates.len());
                ops.push(compile_permutation(&gates[i..j], num_qubits));
                i = j;
            } else {
                let mut qubits: Vec<usize> = gates[i].qubits().collect();
                if qubits.len() > MAX_FUSED_QUBITS {
                    ops.push(CompiledOp::Gate(gates[i].clone()));
                    i += 1;
                    continue;
                }
                let mut j = i + 1;
                while j < gates.len() && !gates[j].kind.is_signed_permutation() {
                    let mut merged = qubits.clone();
                    for q in gates[j].qubits() {
                        if !merged.contains(&q) {
                            merged.push(q);
                        }
                    }
                    if merged.len() > MAX_FUSED_QUBITS {
                        break;
                    }
                    qubits = merged;
                    j += 1;
                }
                qubits.sort_unstable();
                ops.push(fuse_dense(&gates[i..j], &qubits)?);
                i = j;
            }
        }
        Ok(Self { num_qubits, ops })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Number of full passes over the amplitudes when applied.
    pub fn passes(&self) -> usize {
        self.ops.len()
    }
}

struct FastGate {
    mask: u32,
    value: u32,
    targets: u32,
    kind: GateKind,
}

fn compile_permutation(gates: &[Gate], num_qubits: usize) -> CompiledOp {
    let fast: Vec<FastGate> = gates
        .iter()
        .map(|g| {
            let (mask, value) = g.control_mask();
            FastGate { mask: mask as u32, value: value as u32, targets: g.target_mask() as u32, kind: g.kind }
        })
        .collect();
    let dim = 1usize << num_qubits;
    let mut dest = Vec::with_capacity(dim);
    let mut negate = Vec::with_capacity(dim);
    let mut identity = true;
    for k0 in 0..dim as u64 {
        let mut k = k0 as u32;
        let mut neg = false;
        for g in &fast {
            if k & g.mask != g.value {
                continue;
            }
            match g.kind {
                GateKind::X => k ^= g.targets,
                GateKind::Z => neg ^= (k & g.targets).count_ones() % 2 == 1,
                GateKind::Phase => neg = !neg,
                _ => unreachable!("non-permutation gate in permutation run"),
            }
        }
        identity &= k as u64 == k0;
        dest.push(k);
        negate.push(neg);
    }
    if identity {
        CompiledOp::Diagonal { negate }
    } else {
        CompiledOp::Permutation { dest, negate }
    }
}

fn fuse_dense(gates: &[Gate], qubits: &[usize]) -> Result<CompiledOp> {
    let k = qubits.len();
    let mut local = Circuit::new(k);
    for g in gates {
        let map = |q: usize| qubits.iter().position(|&x| x == q).expect("qubit in fused set");
        local.push(Gate {
            kind: g.kind,
            targets: g.targets.iter().map(|&t| map(t)).collect(),
            controls: g.controls.iter().map(|c| crate::Control { qubit: map(c.qubit), polarity: c.polarity }).collect(),
        });
    }
    let u = circuit_unitary(&local)?;
    let n = 1 << k;
    let mut matrix = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            matrix.push(u[[r, c]]);
        }
    }
    Ok(CompiledOp::Dense { qubits: qubits.to_vec(), matrix })
}
