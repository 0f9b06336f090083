//! Reversible integer arithmetic built from X, CNOT and Toffoli gates.
//!
//! Every builder comes in two forms: a placement function writing gates onto
//! caller-chosen qubits, and a `build_*` function returning a stand-alone
//! [`ArithBlock`] whose registers start at qubit 0. All work qubits are clean:
//! they start and end in `|0>`.

use crate::circuit::{Circuit, Control, Gate, GateKind};
use crate::{Error, Result};

/// A reversible circuit together with its register map.
#[derive(Debug, Clone, PartialEq)]
pub struct ArithBlock {
    pub circuit: Circuit,
    /// Named operand and result registers, little-endian.
    pub registers: Vec<(&'static str, Vec<usize>)>,
    /// Clean work qubits.
    pub ancillas: Vec<usize>,
}

impl ArithBlock {
    pub fn register(&self, name: &str) -> &[usize] {
        &self.registers.iter().find(|(n, _)| *n == name).unwrap_or_else(|| panic!("no register `{name}`")).1
    }

    /// Basis index carrying `values` in the named registers, zero elsewhere.
    pub fn encode(&self, values: &[(&str, u64)]) -> u64 {
        values.iter().fold(0, |k, (name, v)| crate::RegisterLayout::write(k, self.register(name), *v))
    }

    pub fn decode(&self, k: u64, name: &str) -> u64 {
        crate::RegisterLayout::read(k, self.register(name))
    }

    pub fn ancillas_clean(&self, k: u64) -> bool {
        self.ancillas.iter().all(|&q| k >> q & 1 == 0)
    }
}

/// Classical evaluation of an X-only block on a basis index.
pub fn reversible_eval(block: &ArithBlock, input: u64) -> Result<u64> {
    if let Some(g) = block.circuit.gates().iter().find(|g| g.kind != GateKind::X) {
        return Err(Error::NotPermutation(g.kind.name()));
    }
    Ok(block.circuit.eval_basis(input)?.0)
}

fn cx(c: usize, t: usize) -> Gate {
    Gate::cx(c, t)
}

fn ccx(c1: usize, c2: usize, t: usize) -> Gate {
    Gate::ccx(c1, c2, t)
}

fn maj(c: &mut Circuit, x: usize, y: usize, z: usize) {
    c.push(cx(z, y));
    c.push(cx(z, x));
    c.push(ccx(x, y, z));
}

fn uma(c: &mut Circuit, x: usize, y: usize, z: usize) {
    c.push(ccx(x, y, z));
    c.push(cx(z, x));
    c.push(cx(x, y));
}

/// Ripple-carry adder `b <- a + b mod 2^n`, `carry ^= overflow`.
/// `scratch` must be clean.
pub fn place_adder(c: &mut Circuit, a: &[usize], b: &[usize], carry: usize, scratch: usize) {
    let n = a.len();
    assert_eq!(n, b.len(), "operand widths differ");
    assert!(n >= 1);
    maj(c, scratch, b[0], a[0]);
    for i in 1..n {
        maj(c, a[i - 1], b[i], a[i]);
    }
    c.push(cx(a[n - 1], carry));
    for i in (1..n).rev() {
        uma(c, a[i - 1], b[i], a[i]);
    }
    uma(c, scratch, b[0], a[0]);
}

/// `b <- a - b mod 2^n` and `sign ^= (a < b)`; with `sign` clean the pair
/// `(b, sign)` holds `a - b` as an `n + 1` bit two's-complement word.
pub fn place_subtractor(c: &mut Circuit, a: &[usize], b: &[usize], sign: usize, scratch: usize) {
    let flip_a = Gate::new(GateKind::X, a.to_vec(), vec![]);
    c.push(flip_a.clone());
    place_adder(c, a, b, sign, scratch);
    c.push(Gate::new(GateKind::X, b.to_vec(), vec![]));
    c.push(flip_a);
}

pub fn build_subtractor(q1: usize) -> Result<ArithBlock> {
    if q1 == 0 {
        return Err(Error::arg("subtractor width must be at least 1"));
    }
    let a: Vec<usize> = (0..q1).collect();
    let b: Vec<usize> = (q1..2 * q1).collect();
    let (sign, scratch) = (2 * q1, 2 * q1 + 1);
    let mut c = Circuit::new(2 * q1 + 2);
    place_subtractor(&mut c, &a, &b, sign, scratch);
    Ok(ArithBlock { circuit: c, registers: vec![("a", a), ("b", b), ("sign", vec![sign])], ancillas: vec![scratch] })
}

/// Work qubits needed by [`place_incrementer`] and [`place_comparator`] on a
/// `width` bit word.
pub fn work_qubits(width: usize) -> usize {
    width.saturating_sub(2)
}

/// `v <- v + 1 mod 2^w` using `w - 2` clean work qubits.
pub fn place_incrementer(c: &mut Circuit, v: &[usize], work: &[usize]) {
    let w = v.len();
    assert!(w >= 1);
    assert!(work.len() >= work_qubits(w), "incrementer needs {} work qubits", work_qubits(w));
    // carry into bit k: c_1 = v_0, c_k = c_{k-1} & v_{k-1} held in work[k-2]
    let carry = |k: usize| if k == 1 { v[0] } else { work[k - 2] };
    for k in 2..w {
        c.push(ccx(carry(k - 1), v[k - 1], work[k - 2]));
    }
    for k in (1..w).rev() {
        c.push(cx(carry(k), v[k]));
        if k >= 2 {
            c.push(ccx(carry(k - 1), v[k - 1], work[k - 2]));
        }
    }
    c.push(Gate::x(v[0]));
}

/// `v <- v - 1 mod 2^w`.
pub fn place_decrementer(c: &mut Circuit, v: &[usize], work: &[usize]) {
    let mut inc = Circuit::new(c.num_qubits());
    place_incrementer(&mut inc, v, work);
    c.append(&inc.inverse());
}

fn counter_block(width: usize, up: bool) -> Result<ArithBlock> {
    if width == 0 {
        return Err(Error::arg("counter width must be at least 1"));
    }
    let v: Vec<usize> = (0..width).collect();
    let work: Vec<usize> = (width..width + work_qubits(width)).collect();
    let mut c = Circuit::new(width + work.len());
    if up {
        place_incrementer(&mut c, &v, &work);
    } else {
        place_decrementer(&mut c, &v, &work);
    }
    Ok(ArithBlock { circuit: c, registers: vec![("v", v)], ancillas: work })
}

pub fn build_incrementer(width: usize) -> Result<ArithBlock> {
    counter_block(width, true)
}

pub fn build_decrementer(width: usize) -> Result<ArithBlock> {
    counter_block(width, false)
}

#[derive(Clone, Copy)]
enum Carry {
    Zero,
    Qubit(usize),
}

/// `flag ^= (d >= h)` for a `w` bit word `d`, with `1 <= h < 2^w`.
///
/// Reads the carry out of `d + (2^w - h)` along a chain that never stores the
/// first non-trivial carry, so at most `w - 2` work qubits are used.
pub fn place_comparator(c: &mut Circuit, d: &[usize], h: u64, work: &[usize], flag: usize) -> Result<()> {
    let w = d.len();
    if w == 0 || w > 63 {
        return Err(Error::arg("comparator width must be in 1..=63"));
    }
    if h == 0 || h >= 1 << w {
        return Err(Error::arg(format!("comparator threshold {h} outside 1..{}", 1u64 << w)));
    }
    if work.len() < work_qubits(w) {
        return Err(Error::arg(format!("comparator needs {} work qubits", work_qubits(w))));
    }
    let b = (1u64 << w) - h;
    let mut compute = Circuit::new(c.num_qubits());
    let mut carry = Carry::Zero;
    let mut used = 0;
    let mut finish: Vec<Gate> = Vec::new();
    for k in 0..w {
        let bit = b >> k & 1 == 1;
        let last = k == w - 1;
        carry = match (carry, bit) {
            (Carry::Zero, false) => Carry::Zero,
            (Carry::Zero, true) => Carry::Qubit(d[k]),
            (Carry::Qubit(q), _) => {
                let target = if last { flag } else { work[used] };
                let gates = if bit {
                    // OR via De Morgan
                    vec![Gate::new(GateKind::X, vec![target], vec![Control::off(d[k]), Control::off(q)]), Gate::x(target)]
                } else {
                    vec![ccx(d[k], q, target)]
                };
                if last {
                    finish = gates;
                } else {
                    used += 1;
                    for g in gates {
                        compute.push(g);
                    }
                }
                Carry::Qubit(target)
            }
        };
    }
    if finish.is_empty() {
        match carry {
            Carry::Qubit(q) => finish.push(cx(q, flag)),
            Carry::Zero => unreachable!("2^w - h > 0 sets some bit"),
        }
    }
    c.append(&compute);
    for g in finish {
        c.push(g);
    }
    c.append(&compute.inverse());
    Ok(())
}

pub fn build_comparator(width: usize, h: u64) -> Result<ArithBlock> {
    let d: Vec<usize> = (0..width).collect();
    let work: Vec<usize> = (width..width + work_qubits(width)).collect();
    let flag = width + work.len();
    let mut c = Circuit::new(flag + 1);
    place_comparator(&mut c, &d, h, &work, flag)?;
    Ok(ArithBlock { circuit: c, registers: vec![("d", d), ("flag", vec![flag])], ancillas: work })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subtractor_examples() {
        let s = build_subtractor(4).unwrap();
        let out = reversible_eval(&s, s.encode(&[("a", 9), ("b", 4)])).unwrap();
        assert_eq!((s.decode(out, "b"), s.decode(out, "sign")), (5, 0));
        let out = reversible_eval(&s, s.encode(&[("a", 4), ("b", 9)])).unwrap();
        assert_eq!(s.decode(out, "b") | s.decode(out, "sign") << 4, 27);
        let s3 = build_subtractor(3).unwrap();
        let out = reversible_eval(&s3, s3.encode(&[("a", 6), ("b", 6)])).unwrap();
        assert_eq!((s3.decode(out, "b"), s3.decode(out, "sign")), (0, 0));
    }

    #[test]
    fn subtractor_exhaustive() {
        for q1 in 1..=6usize {
            let s = build_subtractor(q1).unwrap();
            let m = 1i64 << q1;
            for a in 0..m {
                for b in 0..m {
                    let out = reversible_eval(&s, s.encode(&[("a", a as u64), ("b", b as u64)])).unwrap();
                    let word = s.decode(out, "b") | s.decode(out, "sign") << q1;
                    assert_eq!(word as i64, (a - b).rem_euclid(2 * m), "q1={q1} a={a} b={b}");
                    assert_eq!(s.decode(out, "a"), a as u64);
                    assert!(s.ancillas_clean(out));
                }
            }
        }
    }

    #[test]
    fn subtractor_cnot_count_is_linear() {
        let count = |q1| build_subtractor(q1).unwrap().circuit.len();
        let step = count(2) - count(1);
        for q1 in 2..16 {
            assert_eq!(count(q1 + 1) - count(q1), step);
        }
    }

    #[test]
    fn counters_wrap_and_invert() {
        let inc = build_incrementer(5).unwrap();
        let dec = build_decrementer(5).unwrap();
        assert_eq!(inc.decode(reversible_eval(&inc, 31).unwrap(), "v"), 0);
        assert_eq!(dec.decode(reversible_eval(&dec, 0).unwrap(), "v"), 31);
        for w in 1..=7usize {
            let inc = build_incrementer(w).unwrap();
            let dec = build_decrementer(w).unwrap();
            for v in 0..1u64 << w {
                let up = reversible_eval(&inc, v).unwrap();
                assert_eq!(up, (v + 1) % (1 << w), "w={w} v={v}");
                assert_eq!(reversible_eval(&dec, up).unwrap(), v);
            }
        }
    }

    #[test]
    fn comparator_examples() {
        let c = build_comparator(5, 3).unwrap();
        let flag = |d| c.decode(reversible_eval(&c, d).unwrap(), "flag");
        assert_eq!(flag(2), 0);
        assert_eq!(flag(3), 1);
        assert_eq!(flag(27), 1);
        let c16 = build_comparator(5, 16).unwrap();
        let set: Vec<u64> = (0..32).filter(|&d| c16.decode(reversible_eval(&c16, d).unwrap(), "flag") == 1).collect();
        assert_eq!(set, (16..32).collect::<Vec<_>>());
    }

    #[test]
    fn comparator_exhaustive_and_clean() {
        for w in 1..=7usize {
            for h in 1..1u64 << w {
                let c = build_comparator(w, h).unwrap();
                assert!(c.ancillas.len() <= w.saturating_sub(2));
                for d in 0..1u64 << w {
                    let out = reversible_eval(&c, d).unwrap();
                    assert_eq!(c.decode(out, "d"), d);
                    assert_eq!(c.decode(out, "flag"), (d >= h) as u64, "w={w} h={h} d={d}");
                    assert!(c.ancillas_clean(out));
                }
            }
        }
    }

    #[test]
    fn comparator_rejects_degenerate_threshold() {
        assert!(build_comparator(5, 0).is_err());
        assert!(build_comparator(5, 32).is_err());
    }

    #[test]
    fn blocks_compose_with_inverse_to_identity() {
        let blocks = [build_subtractor(3).unwrap(), build_incrementer(6).unwrap(), build_comparator(6, 21).unwrap()];
        for b in blocks {
            let mut round = b.circuit.clone();
            round.append(&b.circuit.inverse());
            let n = b.circuit.num_qubits();
            for k in 0..1u64 << n {
                assert_eq!(round.eval_basis(k).unwrap(), (k, false));
            }
        }
    }

    #[test]
    fn eval_refuses_non_x_gates() {
        let mut b = build_incrementer(2).unwrap();
        b.circuit.push(Gate::h(0));
        assert!(matches!(reversible_eval(&b, 0), Err(Error::NotPermutation(_))));
    }
}
