use crate::circuit::{Circuit, Control, Gate};
use crate::{ParticleDataset, RegisterLayout, Result};

use super::{build_u1, place_l};

/// How much of `U1` is re-applied after the label phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduced {
    /// All of `U1`; the reflection proper.
    Full,
    /// Only the label superpositions. Sufficient before reading labels.
    LabelsOnly,
    /// All of `U1` so the distance word can be read for error detection.
    WithDistance,
}

/// `U1^dagger` followed by a phase `-1` on the all-zero label state, gated
/// on `a0 = 1` when `controlled`.
///
/// Only the labels are tested: on states reachable from `U1 |0>` the
/// position and distance registers are functions of the labels and are
/// cleared by `U1^dagger`.
pub fn reflection_head(ds: &ParticleDataset, layout: &RegisterLayout, controlled: bool) -> Result<Circuit> {
    let mut c = build_u1(ds, layout)?.inverse();
    let mut controls: Vec<Control> = layout.labels().into_iter().map(Control::off).collect();
    if controlled {
        controls.push(Control::on(layout.a0()));
    }
    c.push(Gate::phase(controls));
    Ok(c)
}

pub fn reflection_tail(ds: &ParticleDataset, layout: &RegisterLayout, reduced: Reduced) -> Result<Circuit> {
    match reduced {
        Reduced::Full | Reduced::WithDistance => build_u1(ds, layout),
        Reduced::LabelsOnly => {
            let mut c = Circuit::new(layout.total());
            place_l(&mut c, ds.len(), &layout.label_a())?;
            place_l(&mut c, ds.len(), &layout.label_b())?;
            Ok(c)
        }
    }
}

/// `U1 (I - 2|0><0|) U1^dagger`, i.e. the negated reflection about the
/// initial state.
pub fn build_reflection(ds: &ParticleDataset, layout: &RegisterLayout, controlled: bool, reduced: Reduced) -> Result<Circuit> {
    let mut c = reflection_head(ds, layout, controlled)?;
    c.append(&reflection_tail(ds, layout, reduced)?);
    Ok(c)
}

/// Basis index of `|i>|j>|x_i>|x_i - x_j>` with `a0` and work qubits zero.
pub fn pair_basis_index(ds: &ParticleDataset, layout: &RegisterLayout, i: usize, j: usize) -> Result<u64> {
    let xs = ds.positions()?;
    let word = (xs[i] as i64 - xs[j] as i64).rem_euclid(1 << (layout.q1 + 1)) as u64;
    let mut k = RegisterLayout::write(0, &layout.label_a(), i as u64);
    k = RegisterLayout::write(k, &layout.label_b(), j as u64);
    k = RegisterLayout::write(k, &layout.pos_a(), xs[i]);
    Ok(RegisterLayout::write(k, &layout.dist_word(), word))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::Statevector;

    fn check_reflection(positions: Vec<u64>, q1: usize) {
        let ds = ParticleDataset::new(positions).unwrap();
        let n = ds.len();
        let l = RegisterLayout::new(n, q1).unwrap();
        let r = build_reflection(&ds, &l, false, Reduced::Full).unwrap();
        let basis: Vec<u64> =
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| pair_basis_index(&ds, &l, i, j).unwrap()).collect();
        for (col, &b) in basis.iter().enumerate() {
            let mut sv = Statevector::basis(l.total(), b, 26).unwrap();
            sv.apply_circuit(&r).unwrap();
            let mut inside = 0.0;
            for (row, &b2) in basis.iter().enumerate() {
                let want = if row == col { 1.0 } else { 0.0 } - 2.0 / (n * n) as f64;
                let got = sv.amplitude(b2);
                assert!((got.re - want).abs() < 1e-10 && got.im.abs() < 1e-10, "n={n} q1={q1} {row},{col}: {got}");
                inside += got.norm_sqr();
            }
            assert!((inside - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn reflection_matches_outer_product_form() {
        check_reflection(vec![1, 2], 2);
        check_reflection(vec![0, 3, 1], 2);
        check_reflection(vec![6, 1, 7, 3], 3);
    }

    #[test]
    fn initial_state_is_negated() {
        let ds = ParticleDataset::new(vec![0, 3, 1]).unwrap();
        let l = RegisterLayout::new(3, 2).unwrap();
        let mut psi = Statevector::new(l.total(), 26).unwrap();
        psi.apply_circuit(&build_u1(&ds, &l).unwrap()).unwrap();
        let mut out = psi.clone();
        out.apply_circuit(&build_reflection(&ds, &l, false, Reduced::Full).unwrap()).unwrap();
        assert!((out.inner(&psi).re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduced_tail_gives_same_label_statistics() {
        let ds = ParticleDataset::new(vec![0, 3, 1]).unwrap();
        let l = RegisterLayout::new(3, 2).unwrap();
        let k = pair_basis_index(&ds, &l, 2, 0).unwrap();
        let head = reflection_head(&ds, &l, false).unwrap();
        let mut full = Statevector::basis(l.total(), k, 26).unwrap();
        full.apply_circuit(&head).unwrap();
        let mut labels = full.clone();
        full.apply_circuit(&reflection_tail(&ds, &l, Reduced::Full).unwrap()).unwrap();
        labels.apply_circuit(&reflection_tail(&ds, &l, Reduced::LabelsOnly).unwrap()).unwrap();
        let a = full.marginal(&l.labels());
        let b = labels.marginal(&l.labels());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
