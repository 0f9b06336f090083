//! Circuit builders for the pair search.
//!
//! The initial state is `U1 |0>` with `U1 = D (PREP_A ⊗ PREP_B)`: both
//! particle registers are loaded with `sum_i |i>|x_i>` and the second
//! position register is then overwritten with `x_i - x_j`.

mod iteration;
mod oracle;
mod prep;
mod reflection;

pub use iteration::{build_iteration, iteration_head, IterationParts};
pub use oracle::{build_oracle, diagonal_oracle_reference, oracle_on_word, place_oracle, OracleKind, OracleVariant};
pub use prep::{build_e, build_l, build_prep, place_e, place_l, place_prep};
pub use reflection::{build_reflection, pair_basis_index, reflection_head, reflection_tail, Reduced};

use crate::arith::place_subtractor;
use crate::{Circuit, ParticleDataset, RegisterLayout, Result};

/// `|x_i>|x_j>|0> -> |x_i>|x_i - x_j>` with the sign qubit as MSB.
pub fn build_distance(layout: &RegisterLayout) -> Circuit {
    let mut c = Circuit::new(layout.total());
    place_subtractor(&mut c, &layout.pos_a(), &layout.dist(), layout.sign(), layout.ancilla_pool()[0]);
    c
}

/// `U1`: both preparations followed by the distance operator.
pub fn build_u1(ds: &ParticleDataset, layout: &RegisterLayout) -> Result<Circuit> {
    let mut c = Circuit::new(layout.total());
    place_prep(&mut c, ds, &layout.label_a(), &layout.pos_a())?;
    place_prep(&mut c, ds, &layout.label_b(), &layout.dist())?;
    c.append(&build_distance(layout));
    Ok(c)
}
