//! Gates with arbitrary-polarity controls and ordered gate lists.
//!
//! A gate applies the same single-qubit operation to every target when all
//! of its controls match their polarity. `Phase` has no target and multiplies
//! the controlled subspace by `-1`.
//!
//! Text dump, one gate per line:
//!
//! ```text
//! qubits 5
//! X 3,4 ctrl=0:1,1:0
//! RY(0.5) 2
//! PHASE - ctrl=0:0
//! ```

use std::collections::BTreeSet;
use std::fmt;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    X,
    Z,
    H,
    /// `[[cos a/2, -sin a/2], [sin a/2, cos a/2]]`.
    Ry(f64),
    /// Multiplies the controlled subspace by `-1`; takes no target.
    Phase,
}

impl GateKind {
    /// X, Z and Phase map basis states to (signed) basis states.
    pub fn is_signed_permutation(&self) -> bool {
        matches!(self, GateKind::X | GateKind::Z | GateKind::Phase)
    }

    pub fn name(&self) -> String {
        match self {
            GateKind::X => "X".into(),
            GateKind::Z => "Z".into(),
            GateKind::H => "H".into(),
            GateKind::Ry(a) => format!("RY({a})"),
            GateKind::Phase => "PHASE".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Control {
    pub qubit: usize,
    /// Active when the control qubit is `|1>` (`true`) or `|0>` (`false`).
    pub polarity: bool,
}

impl Control {
    pub fn on(qubit: usize) -> Self {
        Self { qubit, polarity: true }
    }

    pub fn off(qubit: usize) -> Self {
        Self { qubit, polarity: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<Control>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>, controls: Vec<Control>) -> Self {
        Self { kind, targets, controls }
    }

    pub fn x(t: usize) -> Self {
        Self::new(GateKind::X, vec![t], vec![])
    }

    pub fn z(t: usize) -> Self {
        Self::new(GateKind::Z, vec![t], vec![])
    }

    pub fn h(t: usize) -> Self {
        Self::new(GateKind::H, vec![t], vec![])
    }

    pub fn ry(angle: f64, t: usize) -> Self {
        Self::new(GateKind::Ry(angle), vec![t], vec![])
    }

    pub fn cx(c: usize, t: usize) -> Self {
        Self::new(GateKind::X, vec![t], vec![Control::on(c)])
    }

    pub fn ccx(c1: usize, c2: usize, t: usize) -> Self {
        Self::new(GateKind::X, vec![t], vec![Control::on(c1), Control::on(c2)])
    }

    pub fn phase(controls: Vec<Control>) -> Self {
        Self::new(GateKind::Phase, vec![], controls)
    }

    pub fn with_control(mut self, c: Control) -> Self {
        self.controls.push(c);
        self
    }

    /// All qubits touched by the gate.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().copied().chain(self.controls.iter().map(|c| c.qubit))
    }

    pub fn inverse(&self) -> Gate {
        let kind = match self.kind {
            GateKind::Ry(a) => GateKind::Ry(-a),
            k => k,
        };
        Gate { kind, targets: self.targets.clone(), controls: self.controls.clone() }
    }

    /// Check index ranges and target/control disjointness.
    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let mut seen = BTreeSet::new();
        for q in self.qubits() {
            if q >= num_qubits {
                return Err(Error::arg(format!("qubit {q} out of range for {num_qubits} qubits")));
            }
            if !seen.insert(q) {
                return Err(Error::arg(format!("qubit {q} used twice in {}", self.kind.name())));
            }
        }
        match self.kind {
            GateKind::Phase if !self.targets.is_empty() => {
                Err(Error::arg("PHASE takes no targets"))
            }
            GateKind::Phase => Ok(()),
            _ if self.targets.is_empty() => Err(Error::arg(format!("{} needs a target", self.kind.name()))),
            _ => Ok(()),
        }
    }

    /// `(mask, value)` such that the gate fires on basis index `k` iff `k & mask == value`.
    pub fn control_mask(&self) -> (u64, u64) {
        let mut mask = 0u64;
        let mut value = 0u64;
        for c in &self.controls {
            mask |= 1 << c.qubit;
            if c.polarity {
                value |= 1 << c.qubit;
            }
        }
        (mask, value)
    }

    pub fn target_mask(&self) -> u64 {
        self.targets.iter().fold(0, |m, &t| m | (1u64 << t))
    }

    /// Image of basis index `k` under a signed-permutation gate; toggles
    /// `negative` when the amplitude picks up a `-1`.
    #[inline]
    pub fn permute_basis(&self, k: u64, negative: &mut bool) -> Result<u64> {
        let (mask, value) = self.control_mask();
        if k & mask != value {
            return Ok(k);
        }
        match self.kind {
            GateKind::X => Ok(k ^ self.target_mask()),
            GateKind::Z => {
                if (k & self.target_mask()).count_ones() % 2 == 1 {
                    *negative = !*negative;
                }
                Ok(k)
            }
            GateKind::Phase => {
                *negative = !*negative;
                Ok(k)
            }
            _ => Err(Error::NotPermutation(self.kind.name())),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.kind.name())?;
        if self.targets.is_empty() {
            write!(f, "-")?;
        } else {
            let t: Vec<String> = self.targets.iter().map(|t| t.to_string()).collect();
            write!(f, "{}", t.join(","))?;
        }
        if !self.controls.is_empty() {
            let c: Vec<String> =
                self.controls.iter().map(|c| format!("{}:{}", c.qubit, c.polarity as u8)).collect();
            write!(f, " ctrl={}", c.join(","))?;
        }
        Ok(())
    }
}

/// Ordered gate list over `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, gates: Vec::new() }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Append a gate. Panics on an invalid gate: builders only emit gates
    /// on qubits they own, so a failure is a construction bug.
    pub fn push(&mut self, gate: Gate) -> &mut Self {
        if let Err(e) = gate.validate(self.num_qubits) {
            panic!("invalid gate {gate}: {e}");
        }
        self.gates.push(gate);
        self
    }

    pub fn try_push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn append(&mut self, other: &Circuit) -> &mut Self {
        assert!(other.num_qubits <= self.num_qubits, "appending a wider circuit");
        self.gates.extend(other.gates.iter().cloned());
        self
    }

    pub fn inverse(&self) -> Circuit {
        Circuit { num_qubits: self.num_qubits, gates: self.gates.iter().rev().map(Gate::inverse).collect() }
    }

    /// Add `control` to every gate.
    pub fn controlled(&self, control: Control) -> Circuit {
        let mut out = Circuit::new(self.num_qubits);
        for g in &self.gates {
            out.push(g.clone().with_control(control));
        }
        out
    }

    /// Relabel qubit `q` as `mapping[q]` inside a circuit of `num_qubits` qubits.
    pub fn remap(&self, mapping: &[usize], num_qubits: usize) -> Circuit {
        assert!(mapping.len() >= self.num_qubits, "mapping too short");
        let mut out = Circuit::new(num_qubits);
        for g in &self.gates {
            out.push(Gate {
                kind: g.kind,
                targets: g.targets.iter().map(|&t| mapping[t]).collect(),
                controls: g
                    .controls
                    .iter()
                    .map(|c| Control { qubit: mapping[c.qubit], polarity: c.polarity })
                    .collect(),
            });
        }
        out
    }

    /// Sorted set of qubits touched by any gate.
    pub fn touched_qubits(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.gates.iter().flat_map(|g| g.qubits()).collect();
        set.into_iter().collect()
    }

    pub fn is_signed_permutation(&self) -> bool {
        self.gates.iter().all(|g| g.kind.is_signed_permutation())
    }

    /// Classical evaluation of a signed-permutation circuit on a basis index.
    /// Returns the image and whether the amplitude sign flipped.
    pub fn eval_basis(&self, input: u64) -> Result<(u64, bool)> {
        let mut k = input;
        let mut negative = false;
        for g in &self.gates {
            k = g.permute_basis(k, &mut negative)?;
        }
        Ok((k, negative))
    }

    /// Serialise in the line-oriented dump format.
    pub fn dump(&self) -> String {
        let mut s = format!("qubits {}\n", self.num_qubits);
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }

    /// Parse the dump format. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Circuit> {
        let mut circuit: Option<Circuit> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |message: String| Error::Parse { line: line_no, message };
            let Some(c) = circuit.as_mut() else {
                let n = line
                    .strip_prefix("qubits ")
                    .and_then(|n| n.trim().parse::<usize>().ok())
                    .ok_or_else(|| perr("expected `qubits <n>` header".into()))?;
                circuit = Some(Circuit::new(n));
                continue;
            };
            let mut fields = line.split_whitespace();
            let kind_str = fields.next().unwrap_or_default();
            let kind = parse_kind(kind_str).ok_or_else(|| perr(format!("unknown gate kind `{kind_str}`")))?;
            let targets_str = fields.next().ok_or_else(|| perr("missing targets".into()))?;
            let targets = if targets_str == "-" {
                Vec::new()
            } else {
                targets_str
                    .split(',')
                    .map(|t| t.parse::<usize>().map_err(|_| perr(format!("bad target `{t}`"))))
                    .collect::<Result<Vec<_>>>()?
            };
            let mut controls = Vec::new();
            if let Some(ctrl) = fields.next() {
                let list = ctrl.strip_prefix("ctrl=").ok_or_else(|| perr(format!("unexpected `{ctrl}`")))?;
                for item in list.split(',') {
                    let (q, p) = item.split_once(':').ok_or_else(|| perr(format!("bad control `{item}`")))?;
                    let qubit = q.parse::<usize>().map_err(|_| perr(format!("bad control qubit `{q}`")))?;
                    let polarity = match p {
                        "0" => false,
                        "1" => true,
                        _ => return Err(perr(format!("bad polarity `{p}`"))),
                    };
                    controls.push(Control { qubit, polarity });
                }
            }
            if let Some(extra) = fields.next() {
                return Err(perr(format!("trailing field `{extra}`")));
            }
            c.try_push(Gate::new(kind, targets, controls)).map_err(|e| perr(e.to_string()))?;
        }
        circuit.ok_or(Error::Parse { line: 0, message: "empty circuit dump".into() })
    }
}

fn parse_kind(s: &str) -> Option<GateKind> {
    match s {
        "X" => Some(GateKind::X),
        "Z" => Some(GateKind::Z),
        "H" => Some(GateKind::H),
        "PHASE" => Some(GateKind::Phase),
        _ => {
            let inner = s.strip_prefix("RY(")?.strip_suffix(')')?;
            inner.parse::<f64>().ok().map(GateKind::Ry)
        }
    }
}
