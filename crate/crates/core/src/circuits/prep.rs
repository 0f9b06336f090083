use crate::circuit::{Circuit, Control, Gate, GateKind};
use crate::{ceil_log2, Error, ParticleDataset, Result};

/// Uniform superposition over the first `n` basis states of `qubits`.
///
/// The top qubit is split with a rotation weighting the full lower half
/// against the remainder; the full half gets a controlled Hadamard layer and
/// the remainder recurses.
pub fn place_l(c: &mut Circuit, n: usize, qubits: &[usize]) -> Result<()> {
    if n == 0 || (qubits.len() < 64 && n > 1 << qubits.len()) {
        return Err(Error::arg(format!("cannot spread {n} labels over {} qubits", qubits.len())));
    }
    uniform(c, n, qubits, &[]);
    Ok(())
}

fn uniform(c: &mut Circuit, n: usize, qubits: &[usize], controls: &[Control]) {
    let k = qubits.len();
    if n <= 1 || k == 0 {
        return;
    }
    if n == 1 << k {
        c.push(Gate::new(GateKind::H, qubits.to_vec(), controls.to_vec()));
        return;
    }
    let half = 1usize << (k - 1);
    let (low, top) = (&qubits[..k - 1], qubits[k - 1]);
    if n <= half {
        uniform(c, n, low, controls);
        return;
    }
    let alpha = 2.0 * (half as f64 / n as f64).sqrt().acos();
    c.push(Gate::new(GateKind::Ry(alpha), vec![top], controls.to_vec()));
    let mut zero = controls.to_vec();
    zero.push(Control::off(top));
    uniform(c, half, low, &zero);
    let mut one = controls.to_vec();
    one.push(Control::on(top));
    uniform(c, n - half, low, &one);
}

/// Label-controlled flips writing `x_i` into `pos` for every label `i`.
pub fn place_e(c: &mut Circuit, ds: &ParticleDataset, labels: &[usize], pos: &[usize]) -> Result<()> {
    let xs = ds.positions()?;
    if ceil_log2(xs.len() as u64) > labels.len() {
        return Err(Error::arg(format!("{} labels do not fit {} qubits", xs.len(), labels.len())));
    }
    ds.check_fits(pos.len())?;
    for (i, &x) in xs.iter().enumerate() {
        let targets: Vec<usize> = pos.iter().enumerate().filter(|(b, _)| x >> b & 1 == 1).map(|(_, &q)| q).collect();
        if targets.is_empty() {
            continue;
        }
        let controls = labels.iter().enumerate().map(|(b, &q)| Control { qubit: q, polarity: i >> b & 1 == 1 }).collect();
        c.push(Gate::new(GateKind::X, targets, controls));
    }
    Ok(())
}

/// `|0>|0> -> N^{-1/2} sum_i |i>|x_i>`.
pub fn place_prep(c: &mut Circuit, ds: &ParticleDataset, labels: &[usize], pos: &[usize]) -> Result<()> {
    place_l(c, ds.len(), labels)?;
    place_e(c, ds, labels, pos)
}

/// Stand-alone label preparation on `q0` qubits.
pub fn build_l(n: usize, q0: usize) -> Result<Circuit> {
    let mut c = Circuit::new(q0);
    place_l(&mut c, n, &(0..q0).collect::<Vec<_>>())?;
    Ok(c)
}

/// Stand-alone position loader: labels on `0..q0`, positions on `q0..q0+q1`.
pub fn build_e(ds: &ParticleDataset, q1: usize) -> Result<Circuit> {
    let q0 = ceil_log2(ds.len() as u64);
    let mut c = Circuit::new(q0 + q1);
    place_e(&mut c, ds, &(0..q0).collect::<Vec<_>>(), &(q0..q0 + q1).collect::<Vec<_>>())?;
    Ok(c)
}

/// Stand-alone `PREP` with the same register placement as [`build_e`].
pub fn build_prep(ds: &ParticleDataset, q1: usize) -> Result<Circuit> {
    let q0 = ceil_log2(ds.len() as u64);
    let mut c = build_l(ds.len(), q0)?.remap(&(0..q0).collect::<Vec<_>>(), q0 + q1);
    place_e(&mut c, ds, &(0..q0).collect::<Vec<_>>(), &(q0..q0 + q1).collect::<Vec<_>>())?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::Statevector;

    fn amps(c: &Circuit) -> Vec<f64> {
        let mut sv = Statevector::new(c.num_qubits(), 20).unwrap();
        sv.apply_circuit(c).unwrap();
        sv.amplitudes().iter().map(|a| {
            assert!(a.im.abs() < 1e-15);
            a.re
        }).collect()
    }

    #[test]
    fn uniform_labels_for_every_n() {
        for q0 in 0..=4usize {
            for n in 1..=1usize << q0 {
                let a = amps(&build_l(n, q0).unwrap());
                for (k, v) in a.iter().enumerate() {
                    let want = if k < n { 1.0 / (n as f64).sqrt() } else { 0.0 };
                    assert!((v - want).abs() < 1e-12, "n={n} q0={q0} k={k} v={v}");
                }
            }
        }
    }

    #[test]
    fn power_of_two_is_a_hadamard_layer() {
        let c = build_l(4, 2).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.gates()[0].kind, GateKind::H);
        assert!(build_l(5, 2).is_err());
    }

    #[test]
    fn loader_examples() {
        let ds = ParticleDataset::new(vec![5]).unwrap();
        let c = build_e(&ds, 3).unwrap();
        assert_eq!(c.eval_basis(0).unwrap().0, 0b101);
        let zeros = ParticleDataset::new(vec![0; 4]).unwrap();
        assert!(build_e(&zeros, 3).unwrap().is_empty());
    }

    #[test]
    fn loader_round_trip_is_identity() {
        let ds = ParticleDataset::new(vec![6, 1, 7, 3]).unwrap();
        let mut c = build_e(&ds, 3).unwrap();
        c.append(&c.inverse());
        for k in 0..1u64 << 5 {
            assert_eq!(c.eval_basis(k).unwrap(), (k, false));
        }
    }

    #[test]
    fn prep_two_particles() {
        let ds = ParticleDataset::new(vec![3, 5]).unwrap();
        let a = amps(&build_prep(&ds, 3).unwrap());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // label bit 0, positions on bits 1..4
        assert!((a[3 << 1] - s).abs() < 1e-12);
        assert!((a[1 | 5 << 1] - s).abs() < 1e-12);
        assert!((a.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn position_overflow_is_rejected() {
        let ds = ParticleDataset::new(vec![9]).unwrap();
        assert!(build_e(&ds, 3).is_err());
    }
}
