//! Gate, depth and qubit accounting, plus asymptotic cost models.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::arith::build_subtractor;
use crate::circuit::{Circuit, GateKind};
use crate::circuits::{build_prep, build_reflection, oracle_on_word, OracleKind, OracleVariant, Reduced};
use crate::layout::pool_size;
use crate::{ceil_log2, Error, ParticleDataset, RegisterLayout, Result};

/// Cost of a gate with `n >= 1` effective controls: `cnot_slope * n +
/// cnot_offset` two-qubit units laid out over `depth_slope * n` layers.
/// Uncontrolled single-qubit gates cost one layer and no two-qubit units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostModel {
    pub cnot_slope: u64,
    pub cnot_offset: i64,
    pub depth_slope: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self { cnot_slope: 2, cnot_offset: -1, depth_slope: 1 }
    }
}

impl CostModel {
    /// `(gates, two-qubit units, depth)` of one target with `n` controls.
    fn cost(&self, n: usize) -> (u64, u64, u64) {
        if n == 0 {
            return (1, 0, 1);
        }
        let units = (self.cnot_slope as i64 * n as i64 + self.cnot_offset).max(1) as u64;
        let depth = (self.depth_slope * n as u64).max(1);
        (units.max(depth), units, depth)
    }
}

/// How the qubits of a circuit are used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QubitRoles {
    pub data: usize,
    pub clean_ancilla: usize,
    pub flag: usize,
}

impl QubitRoles {
    pub fn total(&self) -> usize {
        self.data + self.clean_ancilla + self.flag
    }

    /// Roles on the full search register.
    pub fn of_layout(l: &RegisterLayout) -> Self {
        Self { data: 2 + 2 * l.q0 + 2 * l.q1, clean_ancilla: l.pool, flag: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceReport {
    pub name: String,
    /// Gates after expanding multi-controlled gates under the cost model.
    pub total_gates: u64,
    pub cnot_count: u64,
    pub depth: u64,
    pub qubits: QubitRoles,
}

/// Count gates and greedy-layered depth of `circuit`.
///
/// Multi-target gates are counted once per target. A phase gate on `k`
/// controls is a `Z` on one of them with the other `k - 1` as controls; with
/// no controls it is a global phase and costs nothing.
pub fn count_resources(name: &str, circuit: &Circuit, roles: QubitRoles, model: &CostModel) -> Result<ResourceReport> {
    if roles.total() != circuit.num_qubits() {
        return Err(Error::arg(format!(
            "qubit roles cover {} qubits, circuit has {}",
            roles.total(),
            circuit.num_qubits()
        )));
    }
    let mut ready = vec![0u64; circuit.num_qubits()];
    let (mut gates, mut cnots) = (0u64, 0u64);
    for g in circuit.gates() {
        let qubits: Vec<usize> = g.controls.iter().map(|c| c.qubit).collect();
        let apps: Vec<(usize, Vec<usize>)> = match g.kind {
            GateKind::Phase if qubits.is_empty() => continue,
            GateKind::Phase => vec![(qubits.len() - 1, qubits.clone())],
            _ => g
                .targets
                .iter()
                .map(|&t| {
                    let mut q = qubits.clone();
                    q.push(t);
                    (qubits.len(), q)
                })
                .collect(),
        };
        for (n, touched) in apps {
            let (count, units, depth) = model.cost(n);
            gates += count;
            cnots += units;
            let start = touched.iter().map(|&q| ready[q]).max().unwrap_or(0);
            for &q in &touched {
                ready[q] = start + depth;
            }
        }
    }
    Ok(ResourceReport {
        name: name.to_string(),
        total_gates: gates,
        cnot_count: cnots,
        depth: ready.iter().copied().max().unwrap_or(0),
        qubits: roles,
    })
}

/// Count a circuit given in the dump format. Unknown gate kinds are errors.
pub fn count_dump(name: &str, text: &str, roles: QubitRoles, model: &CostModel) -> Result<ResourceReport> {
    count_resources(name, &Circuit::parse(text)?, roles, model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingKind {
    OracleIncludeZero,
    OracleExcludeZero,
    DiagonalOracle,
    MczChain,
    PrepUnstructured,
    Reflection,
    Subtractor,
}

impl ScalingKind {
    pub const ALL: [ScalingKind; 7] = [
        Self::OracleIncludeZero,
        Self::OracleExcludeZero,
        Self::DiagonalOracle,
        Self::MczChain,
        Self::PrepUnstructured,
        Self::Reflection,
        Self::Subtractor,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::OracleIncludeZero => "oracle-include-zero",
            Self::OracleExcludeZero => "oracle-exclude-zero",
            Self::DiagonalOracle => "diagonal-oracle",
            Self::MczChain => "mcz-chain",
            Self::PrepUnstructured => "prep-unstructured",
            Self::Reflection => "reflection",
            Self::Subtractor => "subtractor",
        }
    }
}

impl fmt::Display for ScalingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScalingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown resource kind `{s}`")))
    }
}

/// Constants of the asymptotic models. All unit constants default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticParams {
    /// Particles for the preparation and reflection models.
    pub n: usize,
    /// Exclusive threshold for the MCZ-chain model.
    pub h: u64,
    pub comparator_unit: f64,
    pub diagonal_unit: f64,
    pub mcz_unit: f64,
    pub prep_unit: f64,
}

impl Default for AnalyticParams {
    fn default() -> Self {
        Self { n: 8, h: 3, comparator_unit: 1.0, diagonal_unit: 1.0, mcz_unit: 1.0, prep_unit: 1.0 }
    }
}

/// Model depth and clean-ancilla budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticEstimate {
    pub depth: f64,
    pub ancillas: f64,
}

/// Evaluate the asymptotic model of `kind` at word width `q1`.
///
/// * comparator oracles: depth `c q1`; ancillas `q1` when zero is marked,
///   `2 q1 - log2 q1` with the logarithmic-depth increment otherwise
/// * diagonal decomposition: depth `c 2^(q1+1)`, no ancillas
/// * chain of multi-controlled Z gates: depth `c h q1`
/// * unstructured preparation: depth `c N`
/// * reflection: two preparations each way, the distance operator and the
///   label phase, `2 c N + 2 q1 + 2 q0`
/// * subtractor: depth `c q1` with one scratch qubit
pub fn analytic_scaling(kind: ScalingKind, q1: usize, p: &AnalyticParams) -> AnalyticEstimate {
    let q = q1 as f64;
    let n = p.n as f64;
    let q0 = ceil_log2(p.n as u64) as f64;
    let (depth, ancillas) = match kind {
        ScalingKind::OracleIncludeZero => (p.comparator_unit * q, q),
        ScalingKind::OracleExcludeZero => (p.comparator_unit * q, 2.0 * q - q.log2()),
        ScalingKind::DiagonalOracle => (p.diagonal_unit * 2f64.powi(q1 as i32 + 1), 0.0),
        ScalingKind::MczChain => (p.mcz_unit * p.h as f64 * q, 0.0),
        ScalingKind::PrepUnstructured => (p.prep_unit * n, 0.0),
        ScalingKind::Reflection => (2.0 * p.prep_unit * n + 2.0 * q + 2.0 * q0, q),
        ScalingKind::Subtractor => (p.comparator_unit * q, 1.0),
    };
    AnalyticEstimate { depth, ancillas }
}

/// Positions spread evenly over a `2^q1` grid.
pub fn spread_dataset(n: usize, q1: usize) -> Result<ParticleDataset> {
    let top = (1u64 << q1) - 1;
    let positions = (0..n as u64).map(|i| if n > 1 { i * top / (n as u64 - 1) } else { 0 }).collect();
    ParticleDataset::new(positions)
}

/// The constructed circuit behind `kind`, if one is built, with its roles.
pub fn build_for_kind(kind: ScalingKind, q1: usize, p: &AnalyticParams) -> Result<Option<(Circuit, QubitRoles)>> {
    let oracle = |k: OracleKind| -> Result<(Circuit, QubitRoles)> {
        let v = OracleVariant::new(k, p.h, q1)?;
        let roles = QubitRoles { data: q1 + 1, clean_ancilla: pool_size(q1), flag: 1 };
        Ok((oracle_on_word(&v, q1)?, roles))
    };
    Ok(match kind {
        ScalingKind::OracleIncludeZero => Some(oracle(OracleKind::IncludeZero)?),
        ScalingKind::OracleExcludeZero => Some(oracle(OracleKind::ExcludeZero)?),
        ScalingKind::DiagonalOracle | ScalingKind::MczChain => None,
        ScalingKind::PrepUnstructured => {
            let ds = spread_dataset(p.n, q1)?;
            let c = build_prep(&ds, q1)?;
            let roles = QubitRoles { data: c.num_qubits(), clean_ancilla: 0, flag: 0 };
            Some((c, roles))
        }
        ScalingKind::Reflection => {
            let ds = spread_dataset(p.n, q1)?;
            let l = RegisterLayout::new(p.n, q1)?;
            Some((build_reflection(&ds, &l, false, Reduced::Full)?, QubitRoles::of_layout(&l)))
        }
        ScalingKind::Subtractor => {
            let b = build_subtractor(q1)?;
            Some((b.circuit, QubitRoles { data: 2 * q1 + 1, clean_ancilla: 1, flag: 0 }))
        }
    })
}

/// One line of `resources.csv`. Counted columns are empty for models that
/// are not constructed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceRow {
    pub kind: ScalingKind,
    pub q1: usize,
    pub counted_depth: Option<u64>,
    pub counted_cnot: Option<u64>,
    pub model_depth: f64,
    pub qubits_data: usize,
    /// Counted clean ancillas including flags, or the model budget when
    /// nothing is built.
    pub qubits_ancilla: f64,
    pub model_ancilla: f64,
}

/// Largest `q1` for which circuits are built in a sweep.
pub const SWEEP_BUILD_MAX_Q1: usize = 16;

pub fn scaling_sweep(kinds: &[ScalingKind], q1s: &[usize], p: &AnalyticParams, model: &CostModel) -> Result<Vec<ResourceRow>> {
    let mut rows = Vec::new();
    for &kind in kinds {
        for &q1 in q1s {
            if q1 == 0 || q1 > 30 {
                return Err(Error::arg(format!("q1 = {q1} outside 1..=30")));
            }
            let est = analytic_scaling(kind, q1, p);
            let built = if q1 <= SWEEP_BUILD_MAX_Q1 { build_for_kind(kind, q1, p)? } else { None };
            let row = match built {
                Some((c, roles)) => {
                    let r = count_resources(kind.as_str(), &c, roles, model)?;
                    ResourceRow {
                        kind,
                        q1,
                        counted_depth: Some(r.depth),
                        counted_cnot: Some(r.cnot_count),
                        model_depth: est.depth,
                        qubits_data: roles.data,
                        qubits_ancilla: (roles.clean_ancilla + roles.flag) as f64,
                        model_ancilla: est.ancillas,
                    }
                }
                None => ResourceRow {
                    kind,
                    q1,
                    counted_depth: None,
                    counted_cnot: None,
                    model_depth: est.depth,
                    qubits_data: model_data_qubits(kind, q1, p),
                    qubits_ancilla: est.ancillas,
                    model_ancilla: est.ancillas,
                },
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

fn model_data_qubits(kind: ScalingKind, q1: usize, p: &AnalyticParams) -> usize {
    let q0 = ceil_log2(p.n as u64);
    match kind {
        ScalingKind::PrepUnstructured => q0 + q1,
        ScalingKind::Reflection => 2 + 2 * q0 + 2 * q1,
        ScalingKind::Subtractor => 2 * q1 + 1,
        _ => q1 + 1,
    }
}
