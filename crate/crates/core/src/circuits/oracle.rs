use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::arith::{place_comparator, place_decrementer, place_incrementer, work_qubits};
use crate::circuit::{Circuit, Control, Gate};
use crate::{Error, RegisterLayout, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    /// Marks `0 <= d < h`.
    IncludeZero,
    /// Marks `1 <= d < h`.
    ExcludeZero,
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "include-zero" => Ok(Self::IncludeZero),
            "exclude-zero" => Ok(Self::ExcludeZero),
            _ => Err(Error::arg(format!("unknown oracle variant `{s}` (include-zero|exclude-zero)"))),
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::IncludeZero => "include-zero",
            Self::ExcludeZero => "exclude-zero",
        })
    }
}

/// Oracle kind with its exclusive threshold `h`: marked distances are the
/// non-negative values below `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleVariant {
    pub kind: OracleKind,
    pub h: u64,
}

impl OracleVariant {
    pub fn new(kind: OracleKind, h: u64, q1: usize) -> Result<Self> {
        let lo = match kind {
            OracleKind::IncludeZero => 1,
            OracleKind::ExcludeZero => 2,
        };
        if h < lo || h >= 1 << q1 {
            return Err(Error::arg(format!("threshold {h} outside {lo}..{} for {kind} on {q1} bits", 1u64 << q1)));
        }
        Ok(Self { kind, h })
    }

    /// Variant marking `d <= radius`.
    pub fn inclusive(kind: OracleKind, radius: u64, q1: usize) -> Result<Self> {
        Self::new(kind, radius + 1, q1)
    }

    /// Largest marked distance.
    pub fn radius(&self) -> u64 {
        self.h - 1
    }
}

/// Diagonal of the marking operator on a `q1 + 1` bit distance word:
/// `-1` on marked words, `+1` elsewhere. The circuits realise its negative.
pub fn diagonal_oracle_reference(v: &OracleVariant, q1: usize) -> Vec<f64> {
    (0..1u64 << (q1 + 1))
        .map(|d| {
            let marked = match v.kind {
                OracleKind::IncludeZero => d < v.h,
                OracleKind::ExcludeZero => d >= 1 && d < v.h,
            };
            if marked {
                -1.0
            } else {
                1.0
            }
        })
        .collect()
}

/// Phase `-1` on every unmarked value of `word`; `control`, if given, gates
/// only the phase gate.
pub fn place_oracle(
    c: &mut Circuit,
    v: &OracleVariant,
    word: &[usize],
    work: &[usize],
    flag: usize,
    control: Option<Control>,
) -> Result<()> {
    if work.len() < work_qubits(word.len()) {
        return Err(Error::arg("not enough work qubits for the oracle"));
    }
    let mut z = Gate::z(flag);
    if let Some(ctrl) = control {
        z = z.with_control(ctrl);
    }
    let mut comp = Circuit::new(c.num_qubits());
    match v.kind {
        OracleKind::IncludeZero => place_comparator(&mut comp, word, v.h, work, flag)?,
        OracleKind::ExcludeZero => {
            // after the decrement, d = 0 wraps to all ones and is caught with the rest
            place_comparator(&mut comp, word, v.h - 1, work, flag)?;
        }
    }
    if v.kind == OracleKind::ExcludeZero {
        place_decrementer(c, word, work);
    }
    c.append(&comp);
    c.push(z);
    c.append(&comp.inverse());
    if v.kind == OracleKind::ExcludeZero {
        place_incrementer(c, word, work);
    }
    Ok(())
}

/// Oracle on the distance word of `layout`.
pub fn build_oracle(v: &OracleVariant, layout: &RegisterLayout) -> Result<Circuit> {
    OracleVariant::new(v.kind, v.h, layout.q1)?;
    let mut c = Circuit::new(layout.total());
    place_oracle(&mut c, v, &layout.dist_word(), &layout.ancilla_pool(), layout.flag(), None)?;
    Ok(c)
}

/// Oracle on a compact register: word on `0..=q1`, then the work pool, then
/// the flag.
pub fn oracle_on_word(v: &OracleVariant, q1: usize) -> Result<Circuit> {
    OracleVariant::new(v.kind, v.h, q1)?;
    let pool = crate::layout::pool_size(q1);
    let word: Vec<usize> = (0..=q1).collect();
    let work: Vec<usize> = (q1 + 1..q1 + 1 + pool).collect();
    let flag = q1 + 1 + pool;
    let mut c = Circuit::new(flag + 1);
    place_oracle(&mut c, v, &word, &work, flag, None)?;
    Ok(c)
}
