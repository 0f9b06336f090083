use crate::circuit::{Circuit, Control, Gate};
use crate::{ParticleDataset, RegisterLayout, Result};

use super::{place_oracle, reflection_head, reflection_tail, OracleVariant, Reduced};

/// The angle-independent pieces of one amplification step.
///
/// Both builders realise the negated operator, and gating only their phase
/// gate on `a0` yields a controlled negated operator. A `Z` on `a0` after each
/// turns it into the controlled operator itself, so one step is
/// `Ry(a) · C(O) · Ry(-a) · C(R)` with `O` flipping marked pairs and `R` the
/// reflection about the initial state.
#[derive(Debug, Clone)]
pub struct IterationParts {
    pub layout: RegisterLayout,
    /// `C(-O)` then `Z(a0)`.
    pub oracle: Circuit,
    /// `U1^dagger`, the gated label phase, `Z(a0)`.
    pub reflection_head: Circuit,
    /// `U1`.
    pub reflection_tail: Circuit,
}

impl IterationParts {
    pub fn new(v: &OracleVariant, ds: &ParticleDataset, layout: &RegisterLayout) -> Result<Self> {
        OracleVariant::new(v.kind, v.h, layout.q1)?;
        let a0 = layout.a0();
        let mut oracle = Circuit::new(layout.total());
        place_oracle(&mut oracle, v, &layout.dist_word(), &layout.ancilla_pool(), layout.flag(), Some(Control::on(a0)))?;
        oracle.push(Gate::z(a0));
        let mut head = reflection_head(ds, layout, true)?;
        head.push(Gate::z(a0));
        Ok(Self {
            layout: *layout,
            oracle,
            reflection_head: head,
            reflection_tail: reflection_tail(ds, layout, Reduced::Full)?,
        })
    }

    /// Everything up to the point where `a0` is read.
    pub fn head(&self, alpha: f64) -> Circuit {
        let a0 = self.layout.a0();
        let mut c = Circuit::new(self.layout.total());
        c.push(Gate::ry(alpha, a0));
        c.append(&self.oracle);
        c.push(Gate::ry(-alpha, a0));
        c.append(&self.reflection_head);
        c
    }
}

pub fn iteration_head(alpha: f64, v: &OracleVariant, ds: &ParticleDataset, layout: &RegisterLayout) -> Result<Circuit> {
    Ok(IterationParts::new(v, ds, layout)?.head(alpha))
}

/// One complete step on the full register.
pub fn build_iteration(alpha: f64, v: &OracleVariant, ds: &ParticleDataset, layout: &RegisterLayout) -> Result<Circuit> {
    let parts = IterationParts::new(v, ds, layout)?;
    let mut c = parts.head(alpha);
    c.append(&parts.reflection_tail);
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{build_u1, pair_basis_index, OracleKind};
    use crate::classical::count_m;
    use crate::fps::{critical_angle, theta_from_counts};
    use crate::statevector::Statevector;

    fn start(ds: &ParticleDataset, l: &RegisterLayout) -> Statevector {
        let mut sv = Statevector::basis(l.total(), 1, 26).unwrap();
        sv.apply_circuit(&build_u1(ds, l).unwrap()).unwrap();
        sv
    }

    #[test]
    fn first_step_success_probability() {
        let ds = ParticleDataset::new(vec![0, 3, 4, 6]).unwrap();
        let l = RegisterLayout::new(4, 3).unwrap();
        let v = OracleVariant::inclusive(OracleKind::ExcludeZero, 2, 3).unwrap();
        let m = count_m(&ds, 2, OracleKind::ExcludeZero);
        let theta = theta_from_counts(m as u64, 16).unwrap();
        for alpha in [0.0, 0.4, critical_angle(theta), std::f64::consts::FRAC_PI_2, 3.0] {
            let mut sv = start(&ds, &l);
            sv.apply_circuit(&iteration_head(alpha, &v, &ds, &l).unwrap()).unwrap();
            let p = sv.probability(&[0], &[false]);
            let want = alpha.sin().powi(2) * theta.sin().powi(2);
            assert!((p - want).abs() < 1e-12, "alpha={alpha}: {p} vs {want}");
        }
    }

    #[test]
    fn success_branch_holds_only_marked_pairs() {
        let ds = ParticleDataset::new(vec![0, 3, 4, 6]).unwrap();
        let l = RegisterLayout::new(4, 3).unwrap();
        let v = OracleVariant::inclusive(OracleKind::ExcludeZero, 2, 3).unwrap();
        let mut sv = start(&ds, &l);
        sv.apply_circuit(&build_iteration(1.1, &v, &ds, &l).unwrap()).unwrap();
        sv.collapse(&[0], &[false]).unwrap();
        let marked: Vec<u64> = crate::classical::brute_force_pairs(&ds, 2, OracleKind::ExcludeZero)
            .iter()
            .map(|p| pair_basis_index(&ds, &l, p.i, p.j).unwrap())
            .collect();
        for &k in &marked {
            assert!((sv.amplitude(k).norm_sqr() - 1.0 / marked.len() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn controlled_signs_reproduce_uncontrolled_algebra() {
        // Step on the smallest register, compared with the same step built from
        // explicitly controlled +O and +R matrices.
        let ds = ParticleDataset::new(vec![1, 2]).unwrap();
        let l = RegisterLayout::new(2, 2).unwrap();
        let v = OracleVariant::inclusive(OracleKind::ExcludeZero, 1, 2).unwrap();
        let alpha = 0.9;
        let step = build_iteration(alpha, &v, &ds, &l).unwrap();
        let basis: Vec<u64> = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| pair_basis_index(&ds, &l, i, j).unwrap())
            .collect();
        let marked: Vec<bool> = [(0, 0), (0, 1), (1, 0), (1, 1)].iter().map(|&(i, j)| i == 1 && j == 0).collect();
        let n = basis.len();
        for a in 0..2u64 {
            for (col, &b) in basis.iter().enumerate() {
                let mut sv = Statevector::basis(l.total(), b | a, 26).unwrap();
                sv.apply_circuit(&step).unwrap();
                // reference on the (a0, pair) space: vector of length 2n
                let mut r = vec![0.0; 2 * n];
                r[a as usize * n + col] = 1.0;
                let (s, c) = (alpha / 2.0).sin_cos();
                let ry = |r: &mut Vec<f64>, sgn: f64| {
                    for k in 0..n {
                        let (x0, x1) = (r[k], r[n + k]);
                        r[k] = c * x0 - sgn * s * x1;
                        r[n + k] = sgn * s * x0 + c * x1;
                    }
                };
                ry(&mut r, 1.0);
                for k in 0..n {
                    if marked[k] {
                        r[n + k] = -r[n + k];
                    }
                }
                ry(&mut r, -1.0);
                let overlap: f64 = (0..n).map(|k| r[n + k]).sum::<f64>() / n as f64;
                for k in 0..n {
                    r[n + k] = 2.0 * overlap - r[n + k];
                }
                for (idx, &want) in r.iter().enumerate() {
                    let k = basis[idx % n] | (idx / n) as u64;
                    assert!((sv.amplitude(k).re - want).abs() < 1e-12, "a={a} col={col} idx={idx}");
                }
            }
        }
    }

    #[test]
    fn zero_angle_never_succeeds() {
        let ds = ParticleDataset::new(vec![1, 2]).unwrap();
        let l = RegisterLayout::new(2, 2).unwrap();
        let v = OracleVariant::inclusive(OracleKind::ExcludeZero, 1, 2).unwrap();
        let mut sv = start(&ds, &l);
        sv.apply_circuit(&build_iteration(0.0, &v, &ds, &l).unwrap()).unwrap();
        assert!(sv.probability(&[0], &[false]) < 1e-15);
        assert!(sv.probability(&l.work_qubits(), &vec![false; l.work_qubits().len()]) > 1.0 - 1e-12);
    }
}
