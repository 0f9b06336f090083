//! Readout bit-flip noise on classical measurement records.
//!
//! Amplitudes are never touched: noise flips bits of already measured labels
//! and distance words, after which the error-detection filter decides.

use rand::distributions::{Bernoulli, Distribution, WeightedIndex};
use rand::Rng;
use serde::Serialize;

use crate::circuits::OracleVariant;
use crate::search::error_detect;
use crate::{Error, NeighborPair, ParticleDataset, RegisterLayout, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseConfig {
    /// Probability that a measured qubit reads flipped.
    pub flip_rate: f64,
    /// Target probability of reading both labels correctly.
    pub tol: f64,
}

impl NoiseConfig {
    pub fn new(flip_rate: f64, tol: f64) -> Result<Self> {
        check_rate(flip_rate)?;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::arg(format!("tolerance {tol} outside (0, 1)")));
        }
        Ok(Self { flip_rate, tol })
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::arg(format!("flip rate {rate} outside [0, 1]")))
    }
}

fn flipper(rate: f64) -> Result<Bernoulli> {
    check_rate(rate)?;
    Bernoulli::new(rate).map_err(|e| Error::arg(e.to_string()))
}

/// Flip each bit independently with probability `rate`.
pub fn corrupt<R: Rng + ?Sized>(bits: &[bool], rate: f64, rng: &mut R) -> Result<Vec<bool>> {
    let flip = flipper(rate)?;
    Ok(bits.iter().map(|&b| b ^ flip.sample(rng)).collect())
}

/// [`corrupt`] on the low `width` bits of an integer.
pub fn corrupt_word<R: Rng + ?Sized>(value: u64, width: usize, rate: f64, rng: &mut R) -> Result<u64> {
    let flip = flipper(rate)?;
    Ok((0..width).fold(value, |v, b| if flip.sample(rng) { v ^ (1 << b) } else { v }))
}

/// Largest flip rate for which both `q0`-bit labels are read correctly with
/// probability at least `tol`: `1 - tol^(1 / (2 q0))`.
pub fn threshold(tol: f64, q0: usize) -> Result<f64> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::arg(format!("tolerance {tol} outside (0, 1)")));
    }
    if q0 == 0 {
        return Err(Error::arg("label width must be at least 1"));
    }
    // 1 - exp(ln(tol) / 2q0) without cancellation
    Ok(-(tol.ln() / (2 * q0) as f64).exp_m1())
}

/// `(1 - rate)^(2 q0)`.
pub fn model_success(q0: usize, rate: f64) -> f64 {
    (1.0 - rate).powi(2 * q0 as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuccessEstimate {
    pub trials: u64,
    pub successes: u64,
}

impl SuccessEstimate {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// Binomial standard error at probability `p`.
    pub fn sigma(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Fraction of trials in which none of `2 q0` label bits flips.
pub fn empirical_success<R: Rng + ?Sized>(q0: usize, rate: f64, trials: u64, rng: &mut R) -> Result<SuccessEstimate> {
    if trials == 0 {
        return Err(Error::arg("need at least one trial"));
    }
    let flip = flipper(rate)?;
    let successes = (0..trials).filter(|_| (0..2 * q0).all(|_| !flip.sample(rng))).count() as u64;
    Ok(SuccessEstimate { trials, successes })
}

/// Labels and distance word read after a success.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Readout {
    pub i: u64,
    pub j: u64,
    pub word: u64,
}

impl Readout {
    /// Pack as `i | j << q0 | word << 2 q0`.
    fn pack(&self, l: &RegisterLayout) -> u64 {
        self.i | self.j << l.q0 | self.word << (2 * l.q0)
    }

    fn unpack(k: u64, l: &RegisterLayout) -> Self {
        let m0 = (1u64 << l.q0) - 1;
        Self { i: k & m0, j: k >> l.q0 & m0, word: k >> (2 * l.q0) }
    }
}

/// Bits read per record: two labels and the `q1 + 1` bit distance word.
pub fn record_bits(l: &RegisterLayout) -> usize {
    2 * l.q0 + l.q1 + 1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterOutcome {
    pub accepted: Vec<NeighborPair>,
    pub rejected: usize,
    /// Accepted records that were altered by noise yet still describe a
    /// valid neighbor pair.
    pub collisions: usize,
    /// Records whose labels were read intact.
    pub labels_intact: usize,
}

/// Corrupt every record, then keep those that pass error detection.
pub fn filtered_run<R: Rng + ?Sized>(
    records: &[Readout],
    rate: f64,
    ds: &ParticleDataset,
    v: &OracleVariant,
    layout: &RegisterLayout,
    rng: &mut R,
) -> Result<FilterOutcome> {
    let xs = ds.positions()?;
    let bits = record_bits(layout);
    let mut out = FilterOutcome { accepted: Vec::new(), rejected: 0, collisions: 0, labels_intact: 0 };
    let label_mask = (1u64 << (2 * layout.q0)) - 1;
    for rec in records {
        let packed = rec.pack(layout);
        let noisy_packed = corrupt_word(packed, bits, rate, rng)?;
        if (noisy_packed ^ packed) & label_mask == 0 {
            out.labels_intact += 1;
        }
        let noisy = Readout::unpack(noisy_packed, layout);
        if error_detect(noisy.i, noisy.j, noisy.word, ds, v, layout.q1) {
            let (i, j) = (noisy.i as usize, noisy.j as usize);
            out.accepted.push(NeighborPair { i, j, d: xs[i] as i64 - xs[j] as i64 });
            if noisy_packed != packed {
                out.collisions += 1;
            }
        } else {
            out.rejected += 1;
        }
    }
    Ok(out)
}

/// Exact probability that a record drawn from `source` survives the filter
/// after noise, by enumerating every flip pattern (at most 24 record bits).
pub fn exact_acceptance(
    source: &[(Readout, f64)],
    rate: f64,
    ds: &ParticleDataset,
    v: &OracleVariant,
    layout: &RegisterLayout,
) -> Result<f64> {
    check_rate(rate)?;
    let bits = record_bits(layout);
    if bits > 24 {
        return Err(Error::Capacity { requested: bits, limit: 24 });
    }
    let total: f64 = source.iter().map(|(_, p)| p).sum();
    let mut acc = 0.0;
    for (rec, p) in source {
        let packed = rec.pack(layout);
        let mut inner = 0.0;
        for e in 0..1u64 << bits {
            let flips = e.count_ones() as i32;
            let noisy = Readout::unpack(packed ^ e, layout);
            if error_detect(noisy.i, noisy.j, noisy.word, ds, v, layout.q1) {
                inner += rate.powi(flips) * (1.0 - rate).powi(bits as i32 - flips);
            }
        }
        acc += p * inner;
    }
    Ok(acc / total)
}

/// Draw `count` records from a weighted readout distribution.
pub fn sample_records<R: Rng + ?Sized>(source: &[(Readout, f64)], count: usize, rng: &mut R) -> Result<Vec<Readout>> {
    let dist = WeightedIndex::new(source.iter().map(|(_, p)| *p)).map_err(|e| Error::arg(e.to_string()))?;
    Ok((0..count).map(|_| source[dist.sample(rng)].0).collect())
}

/// One line of `noise_sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseRow {
    pub q0: usize,
    pub rate: f64,
    pub trials: u64,
    pub empirical_success: f64,
    pub model_success: f64,
    pub accepted: Option<usize>,
    pub rejected: Option<usize>,
}

/// Inputs for the filter columns of a sweep.
pub struct FilterSetup<'a> {
    pub source: &'a [(Readout, f64)],
    pub ds: &'a ParticleDataset,
    pub variant: &'a OracleVariant,
    pub layout: &'a RegisterLayout,
}

pub fn noise_sweep<R: Rng + ?Sized>(
    q0: usize,
    rates: &[f64],
    trials: u64,
    filter: Option<&FilterSetup<'_>>,
    rng: &mut R,
) -> Result<Vec<NoiseRow>> {
    let mut rows = Vec::with_capacity(rates.len());
    for &rate in rates {
        let est = empirical_success(q0, rate, trials, rng)?;
        let (accepted, rejected) = match filter {
            Some(f) => {
                let records = sample_records(f.source, trials as usize, rng)?;
                let out = filtered_run(&records, rate, f.ds, f.variant, f.layout, rng)?;
                (Some(out.accepted.len()), Some(out.rejected))
            }
            None => (None, None),
        };
        rows.push(NoiseRow {
            q0,
            rate,
            trials,
            empirical_success: est.rate(),
            model_success: model_success(q0, rate),
            accepted,
            rejected,
        });
    }
    Ok(rows)
}
