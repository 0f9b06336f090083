//! The search driver: repeated amplification attempts, pair harvesting,
//! Bayesian estimation of the number of marked pairs and the stopping rule.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{Binomial, Discrete, DiscreteCDF, Poisson};

use crate::circuits::{IterationParts, OracleKind, OracleVariant, Reduced};
use crate::classical::{NeighborPair, ParticleDataset};
use crate::noise::Readout;
use crate::fps::{default_iteration_cap, success_series, theta_from_counts, AngleSchedule, ScheduleKind};
use crate::statevector::{CompiledCircuit, Statevector, DEFAULT_MAX_QUBITS};
use crate::{Error, Gate, RegisterLayout, Result};

/// Posterior over the number of marked pairs `M`, supported on `1..=M_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorM {
    weights: Vec<f64>,
    /// Size of the searched space (`N^2`).
    space: u64,
}

impl PosteriorM {
    pub fn from_weights(weights: Vec<f64>, space: u64) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || !(total > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::arg("posterior weights must be non-negative with positive sum"));
        }
        if weights.len() as u64 > space {
            return Err(Error::arg("support exceeds the search space"));
        }
        Ok(Self { weights: weights.iter().map(|w| w / total).collect(), space })
    }

    pub fn support(&self) -> Vec<u64> {
        (1..=self.weights.len() as u64).collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn m_max(&self) -> u64 {
        self.weights.len() as u64
    }

    pub fn space(&self) -> u64 {
        self.space
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().enumerate().map(|(k, w)| (k + 1) as f64 * w).sum()
    }

    /// Reweight by `likelihood(M)` and renormalise. An all-zero likelihood
    /// leaves the posterior unchanged and returns a warning.
    pub fn reweight(&self, likelihood: impl Fn(u64) -> f64) -> (Self, Option<String>) {
        let w: Vec<f64> = self.weights.iter().enumerate().map(|(k, w)| w * likelihood(k as u64 + 1)).collect();
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return (self.clone(), Some("likelihood vanished on the whole support; posterior kept".into()));
        }
        (Self { weights: w.iter().map(|x| x / total).collect(), space: self.space }, None)
    }
}

/// Poisson prior with mean `(2h/L)^d N^2`, clamped below at 1 and truncated
/// to `1..=min(N^2, ceil(4 lambda) + 10)`.
pub fn init_prior(h: u64, domain: f64, dim: usize, n: usize) -> Result<PosteriorM> {
    let lambda = prior_mean(h, domain, dim, n)?;
    let space = (n * n) as u64;
    let m_max = space.min((4.0 * lambda).ceil() as u64 + 10).max(1);
    let poisson = Poisson::new(lambda).map_err(|e| Error::arg(e.to_string()))?;
    let logs: Vec<f64> = (1..=m_max).map(|m| poisson.ln_pmf(m)).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    PosteriorM::from_weights(logs.iter().map(|l| (l - top).exp()).collect(), space)
}

/// `max(1, (2h/L)^d N^2)`.
pub fn prior_mean(h: u64, domain: f64, dim: usize, n: usize) -> Result<f64> {
    if !(domain > 0.0) || dim == 0 || n == 0 {
        return Err(Error::arg("prior needs L > 0, d >= 1 and N >= 1"));
    }
    if 2.0 * h as f64 > domain {
        return Err(Error::arg(format!("prior needs 2h <= L, got h={h} L={domain}")));
    }
    Ok(((2.0 * h as f64 / domain).powi(dim as i32) * (n * n) as f64).max(1.0))
}

/// Probability that the first success of `schedule` lands on iteration `m`
/// when `M` of the `space` states are marked.
pub fn first_success_likelihood(schedule: &AngleSchedule, marked: u64, space: u64, m: usize) -> f64 {
    match theta_from_counts(marked, space) {
        Ok(theta) => success_series(schedule, theta, m).first_success_probability(m),
        Err(_) => 0.0,
    }
}

/// One Bayes step for an attempt that first succeeded at iteration `m`.
pub fn bayes_update(posterior: &PosteriorM, m: usize, schedule: &AngleSchedule) -> Result<(PosteriorM, Option<String>)> {
    if m == 0 {
        return Err(Error::arg("iteration count must be at least 1"));
    }
    Ok(posterior.reweight(|mm| first_success_likelihood(schedule, mm, posterior.space, m)))
}

/// `min(1, c * P[Binomial(draws, 1/c) >= max_multiplicity])` with
/// `c = ceil(mhat)`: the union bound on some one of `c` equally likely
/// outcomes showing up that often.
pub fn stopping_u(mhat: f64, draws: u64, max_multiplicity: u64) -> Result<f64> {
    if max_multiplicity == 0 || draws < max_multiplicity {
        return Err(Error::arg("need 1 <= max multiplicity <= draws"));
    }
    let c = mhat.ceil().max(1.0);
    let bin = Binomial::new(1.0 / c, draws).map_err(|e| Error::arg(e.to_string()))?;
    Ok((c * bin.sf(max_multiplicity - 1)).min(1.0))
}

/// Accept a measured `(i, j, word)` iff the labels exist, the word equals
/// the recomputed two's-complement difference and the difference is within
/// the radius of `v`.
pub fn error_detect(i: u64, j: u64, word: u64, ds: &ParticleDataset, v: &OracleVariant, q1: usize) -> bool {
    let Ok(xs) = ds.positions() else { return false };
    let n = xs.len() as u64;
    if i >= n || j >= n {
        return false;
    }
    let d = xs[i as usize] as i64 - xs[j as usize] as i64;
    let expect = d.rem_euclid(1i64 << (q1 + 1)) as u64;
    let lo = match v.kind {
        OracleKind::IncludeZero => 0,
        OracleKind::ExcludeZero => 1,
    };
    word == expect && d >= lo && d <= v.radius() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    UThreshold,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub schedule: ScheduleKind,
    /// Angles for [`ScheduleKind::Custom`].
    pub custom_angles: Vec<f64>,
    /// Iterations per attempt; `None` means `50 ceil(sqrt(N^2))`.
    pub iteration_cap: Option<usize>,
    pub u0: f64,
    pub seed: u64,
    pub error_detection: bool,
    /// Switch to the critical angle of the current estimate after each success.
    pub adaptive_schedule: bool,
    /// Total oracle-call budget; `None` means `200 ceil(N / sqrt(lambda))`.
    pub max_oracle_calls: Option<u64>,
    /// Grid extent `L` (in grid units) and dimension for the prior.
    pub domain: Option<f64>,
    pub max_qubits: usize,
    pub record_transcripts: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            schedule: ScheduleKind::Critical,
            custom_angles: Vec::new(),
            iteration_cap: None,
            u0: 0.01,
            seed: 0,
            error_detection: true,
            adaptive_schedule: false,
            max_oracle_calls: None,
            domain: None,
            max_qubits: DEFAULT_MAX_QUBITS,
            record_transcripts: false,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if !(self.u0 > 0.0 && self.u0 < 1.0) {
            return Err(Error::arg(format!("u0 = {} outside (0, 1)", self.u0)));
        }
        if self.iteration_cap == Some(0) {
            return Err(Error::arg("iteration cap must be at least 1"));
        }
        Ok(())
    }
}

/// Ancilla readouts of one attempt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttemptTranscript {
    /// `Pr[a0 = 0]` just before each readout.
    pub p_zero: Vec<f64>,
    /// Readout per iteration (`false` = success).
    pub a0: Vec<bool>,
    /// Labels and distance word read after a success.
    pub readout: Option<(u64, u64, Option<u64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub pairs: BTreeSet<NeighborPair>,
    pub oracle_calls: u64,
    pub per_success_iterations: Vec<usize>,
    pub posterior: PosteriorM,
    pub stopped_by: StopReason,
    pub attempts: usize,
    pub rejected: usize,
    /// Harvested pairs in measurement order, including repeats.
    pub draws: Vec<NeighborPair>,
    pub warnings: Vec<String>,
    pub transcripts: Vec<AttemptTranscript>,
}

/// Result of a single amplification attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    /// Iteration of the first `a0 = 0` readout.
    pub success_at: Option<usize>,
    pub iterations: usize,
    pub labels: Option<(u64, u64)>,
    pub word: Option<u64>,
    pub transcript: AttemptTranscript,
}

/// Everything about a dataset and threshold that does not depend on the seed:
/// compiled circuit pieces and the prepared initial state.
pub struct SearchProgram {
    ds: ParticleDataset,
    layout: RegisterLayout,
    variant: OracleVariant,
    oracle: CompiledCircuit,
    reflection_head: CompiledCircuit,
    reflection_tail: CompiledCircuit,
    readout_tail: CompiledCircuit,
    error_detection: bool,
    start: Statevector,
}

impl SearchProgram {
    pub fn new(ds: &ParticleDataset, layout: &RegisterLayout, variant: &OracleVariant, error_detection: bool, max_qubits: usize) -> Result<Self> {
        if layout.total() > max_qubits {
            return Err(Error::Capacity { requested: layout.total(), limit: max_qubits });
        }
        ds.check_fits(layout.q1)?;
        let parts = IterationParts::new(variant, ds, layout)?;
        let t = layout.total();
        let reduced = if error_detection { Reduced::WithDistance } else { Reduced::LabelsOnly };
        let readout = crate::circuits::reflection_tail(ds, layout, reduced)?;
        let mut start = Statevector::basis(t, 1 << layout.a0(), max_qubits)?;
        start.apply_circuit(&parts.reflection_tail)?;
        Ok(Self {
            ds: ds.clone(),
            layout: *layout,
            variant: *variant,
            oracle: CompiledCircuit::compile(&parts.oracle, t)?,
            reflection_head: CompiledCircuit::compile(&parts.reflection_head, t)?,
            reflection_tail: CompiledCircuit::compile(&parts.reflection_tail, t)?,
            readout_tail: CompiledCircuit::compile(&readout, t)?,
            error_detection,
            start,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn variant(&self) -> &OracleVariant {
        &self.variant
    }

    pub fn dataset(&self) -> &ParticleDataset {
        &self.ds
    }

    /// `a0 = |1>` with both particle registers prepared and the distance written.
    pub fn initial_state(&self) -> &Statevector {
        &self.start
    }

    fn rotate(&self, sv: &mut Statevector, alpha: f64) -> Result<()> {
        sv.apply(&Gate::ry(alpha, self.layout.a0()))
    }

    /// Everything in one step before `a0` is read.
    pub fn apply_head(&self, sv: &mut Statevector, alpha: f64) -> Result<()> {
        self.rotate(sv, alpha)?;
        sv.apply_compiled(&self.oracle)?;
        self.rotate(sv, -alpha)?;
        sv.apply_compiled(&self.reflection_head)
    }

    /// The rest of the step, for the `a0 = 1` branch.
    pub fn apply_tail(&self, sv: &mut Statevector) -> Result<()> {
        sv.apply_compiled(&self.reflection_tail)
    }

    /// Run iterations until `a0` reads 0 or `cap` iterations have failed.
    pub fn attempt(&self, schedule: &AngleSchedule, cap: usize, rng: &mut ChaCha8Rng, record: bool) -> Result<Attempt> {
        let mut sv = self.start.clone();
        let a0 = [self.layout.a0()];
        let mut transcript = AttemptTranscript { p_zero: Vec::new(), a0: Vec::new(), readout: None };
        for i in 1..=cap {
            self.apply_head(&mut sv, schedule.angle(i))?;
            if record {
                transcript.p_zero.push(sv.probability(&a0, &[false]));
            }
            let bit = sv.measure(&a0, rng)?[0];
            if record {
                transcript.a0.push(bit);
            }
            if bit {
                self.apply_tail(&mut sv)?;
                continue;
            }
            sv.apply_compiled(&self.readout_tail)?;
            let labels = sv.measure(&self.layout.labels(), rng)?;
            let q0 = self.layout.q0;
            let i_label = bits_to_int(&labels[..q0]);
            let j_label = bits_to_int(&labels[q0..]);
            let word = if self.error_detection {
                Some(bits_to_int(&sv.measure(&self.layout.dist_word(), rng)?))
            } else {
                None
            };
            transcript.readout = Some((i_label, j_label, word));
            return Ok(Attempt { success_at: Some(i), iterations: i, labels: Some((i_label, j_label)), word, transcript });
        }
        Ok(Attempt { success_at: None, iterations: cap, labels: None, word: None, transcript })
    }

    /// Distribution of the records read after a success at an iteration
    /// entered with the initial state and angle `alpha`. Needs error detection,
    /// since only then is the distance word part of the readout.
    pub fn readout_distribution(&self, alpha: f64) -> Result<Vec<(Readout, f64)>> {
        if !self.error_detection {
            return Err(Error::arg("readout records need the distance word; enable error detection"));
        }
        let mut sv = self.start.clone();
        self.apply_head(&mut sv, alpha)?;
        sv.collapse(&[self.layout.a0()], &[false])?;
        sv.apply_compiled(&self.readout_tail)?;
        let mut qubits = self.layout.labels();
        qubits.extend(self.layout.dist_word());
        let q0 = self.layout.q0;
        let m0 = (1u64 << q0) - 1;
        Ok(sv
            .marginal(&qubits)
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > 1e-14)
            .map(|(k, p)| {
                let k = k as u64;
                (Readout { i: k & m0, j: k >> q0 & m0, word: k >> (2 * q0) }, p)
            })
            .collect())
    }

    /// Full search under `config` (its `error_detection` and `max_qubits`
    /// fields are fixed when the program is built).
    pub fn run(&self, prior: &PosteriorM, lambda: f64, config: &SearchConfig) -> Result<SearchOutcome> {
        config.validate()?;
        let n = self.ds.len();
        let space = (n * n) as u64;
        let cap = config.iteration_cap.unwrap_or_else(|| default_iteration_cap(space));
        let budget = config.max_oracle_calls.unwrap_or_else(|| default_call_budget(n, lambda));
        let base = match config.schedule {
            ScheduleKind::Custom => AngleSchedule::custom(config.custom_angles.clone())?,
            kind => AngleSchedule::from_kind(kind, theta_from_counts(1, space)?)?,
        };
        let mut schedule = base.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut out = SearchOutcome {
            pairs: BTreeSet::new(),
            oracle_calls: 0,
            per_success_iterations: Vec::new(),
            posterior: prior.clone(),
            stopped_by: StopReason::IterationCap,
            attempts: 0,
            rejected: 0,
            draws: Vec::new(),
            warnings: Vec::new(),
            transcripts: Vec::new(),
        };
        let mut counts: BTreeMap<NeighborPair, u64> = BTreeMap::new();
        let xs = self.ds.positions()?.to_vec();
        while out.oracle_calls < budget {
            let left = (budget - out.oracle_calls) as usize;
            let attempt = self.attempt(&schedule, cap.min(left), &mut rng, config.record_transcripts)?;
            out.attempts += 1;
            out.oracle_calls += attempt.iterations as u64;
            if config.record_transcripts {
                out.transcripts.push(attempt.transcript.clone());
            }
            let Some(m) = attempt.success_at else { continue };
            out.per_success_iterations.push(m);
            let (posterior, warning) = bayes_update(&out.posterior, m, &schedule)?;
            out.posterior = posterior;
            out.warnings.extend(warning);
            let (i, j) = attempt.labels.expect("labels read on success");
            let accepted = match attempt.word {
                Some(w) => error_detect(i, j, w, &self.ds, &self.variant, self.layout.q1),
                None => i < n as u64 && j < n as u64,
            };
            if !accepted {
                out.rejected += 1;
                continue;
            }
            let pair = NeighborPair { i: i as usize, j: j as usize, d: xs[i as usize] as i64 - xs[j as usize] as i64 };
            out.draws.push(pair);
            out.pairs.insert(pair);
            *counts.entry(pair).or_default() += 1;
            if config.adaptive_schedule {
                let est = out.posterior.mean().round().max(1.0) as u64;
                schedule = AngleSchedule::critical(theta_from_counts(est.min(space), space)?)?;
            }
            let draws = out.draws.len() as u64;
            let mult = counts.values().copied().max().unwrap_or(0);
            if draws > mult && stopping_u(out.posterior.mean(), draws, mult)? < config.u0 {
                out.stopped_by = StopReason::UThreshold;
                break;
            }
        }
        Ok(out)
    }
}

/// `200 ceil(N / sqrt(lambda))`.
pub fn default_call_budget(n: usize, lambda: f64) -> u64 {
    200 * (n as f64 / lambda.max(1.0).sqrt()).ceil() as u64
}

fn bits_to_int(bits: &[bool]) -> u64 {
    bits.iter().enumerate().fold(0, |v, (b, &x)| v | (x as u64) << b)
}

/// Build the program for `ds` with inclusive radius `h` and run one search.
/// The prior uses a grid extent of `config.domain`, or `2^q1` when unset.
pub fn run_search(ds: &ParticleDataset, q1: usize, h: u64, kind: OracleKind, config: &SearchConfig) -> Result<SearchOutcome> {
    let layout = RegisterLayout::new(ds.len(), q1)?;
    let variant = OracleVariant::inclusive(kind, h, q1)?;
    let program = SearchProgram::new(ds, &layout, &variant, config.error_detection, config.max_qubits)?;
    let domain = config.domain.unwrap_or((1u64 << q1) as f64);
    let lambda = prior_mean(h, domain, 1, ds.len())?;
    let prior = init_prior(h, domain, 1, ds.len())?;
    program.run(&prior, lambda, config)
}
