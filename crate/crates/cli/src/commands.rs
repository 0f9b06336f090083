use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use qfrans::circuits::OracleVariant;
use qfrans::classical::{brute_force_pairs, discretize, integer_radius, read_dataset, DatasetFile, GridSpec, Inequality};
use qfrans::fps::{critical_angle, success_series, theta_from_counts, AngleSchedule, ScheduleKind};
use qfrans::noise::{noise_sweep, record_bits, threshold, FilterSetup};
use qfrans::output::{self, Metadata};
use qfrans::resources::{scaling_sweep, AnalyticParams, CostModel};
use qfrans::search::{init_prior, prior_mean, AttemptTranscript, SearchConfig, SearchProgram, StopReason};
use qfrans::statevector::DEFAULT_MAX_QUBITS;
use qfrans::{ceil_log2, NeighborPair, ParticleDataset, RegisterLayout};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{parse_range, BruteArgs, Command, DataArgs, FpsCurvesArgs, NoiseArgs, ResourcesArgs, RunArgs, ScalingArgs};
use crate::error::{CliError, Result};
use crate::files::{digest, write_atomic, write_manifest, InputDigest, Manifest};

pub const MAX_QUBITS_VAR: &str = "QFRANS_MAX_QUBITS";

pub fn dispatch(command: Command, config_file: Option<PathBuf>) -> Result<()> {
    let started = Instant::now();
    let mut inputs = Vec::new();
    if let Some(p) = &config_file {
        inputs.push(digest(p)?);
    }
    let run = Invocation { started, inputs };
    match command {
        Command::FpsCurves(a) => fps_curves(&a, run),
        Command::Scaling(a) => scaling(&a, run),
        Command::Run(a) => search(&a, run),
        Command::Brute(a) => brute(&a, run),
        Command::Resources(a) => resources(&a, run),
        Command::Noise(a) => noise(&a, run),
    }
}

struct Invocation {
    started: Instant,
    inputs: Vec<InputDigest>,
}

impl Invocation {
    fn finish<C: Serialize>(self, name: &str, config: &C, seed: Option<u64>, out: &Path) -> Result<()> {
        let manifest = Manifest {
            subcommand: name,
            version: env!("CARGO_PKG_VERSION"),
            config,
            seed,
            inputs: self.inputs,
            outputs: vec![out.to_path_buf()],
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        write_manifest(out, &manifest)?;
        Ok(())
    }
}

fn csv_out(out: &Path, write: impl FnOnce(&mut dyn Write) -> qfrans::Result<()>) -> Result<()> {
    write_atomic(out, |w| write(w).map_err(CliError::from))
}

/// Capacity limit from the environment, or the library default.
pub fn max_qubits() -> Result<usize> {
    match std::env::var(MAX_QUBITS_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::usage(format!("{MAX_QUBITS_VAR}={v} is not a qubit count"))),
        Err(_) => Ok(DEFAULT_MAX_QUBITS),
    }
}

fn fps_curves(a: &FpsCurvesArgs, run: Invocation) -> Result<()> {
    let theta = match (a.theta, a.m, a.s) {
        (Some(t), _, _) => t,
        (None, Some(m), Some(s)) => theta_from_counts(m, s)?,
        _ => return Err(CliError::usage("give --theta or both --M and --S")),
    };
    if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2) {
        return Err(CliError::usage(format!("theta = {theta} outside (0, pi/2]")));
    }
    if a.k == 0 {
        return Err(CliError::usage("--K must be at least 1"));
    }
    let schedule = build_schedule(a.schedule, &a.angles, theta)?;
    let series = success_series(&schedule, theta, a.k);
    let mut meta = Metadata::standard(Some(a.seed));
    meta.push("theta", theta).push("schedule", a.schedule).push("K", a.k);
    if let (Some(m), Some(s)) = (a.m, a.s) {
        meta.push("M", m).push("S", s);
    }
    meta.push("expected_calls", series.expected_calls);
    csv_out(&a.out, |w| output::write_fps_curves(w, &meta, &series))?;
    run.finish("fps-curves", a, Some(a.seed), &a.out)
}

fn build_schedule(kind: ScheduleKind, angles: &[f64], theta: f64) -> Result<AngleSchedule> {
    match kind {
        ScheduleKind::Custom if angles.is_empty() => Err(CliError::usage("a custom schedule needs --angles")),
        ScheduleKind::Custom => Ok(AngleSchedule::custom(angles.to_vec())?),
        _ if !angles.is_empty() => Err(CliError::usage("--angles only applies to --schedule custom")),
        kind => Ok(AngleSchedule::from_kind(kind, theta)?),
    }
}

fn scaling(a: &ScalingArgs, run: Invocation) -> Result<()> {
    if a.s_list.is_empty() || a.schedules.is_empty() {
        return Err(CliError::usage("--S-list and --schedules must not be empty"));
    }
    let rows = qfrans::fps::scaling_table(&a.s_list, &a.schedules, a.mc_samples, a.seed)?;
    let mut meta = Metadata::standard(Some(a.seed));
    meta.push("M", 1).push("mc_samples", a.mc_samples);
    csv_out(&a.out, |w| output::write_scaling(w, &meta, &rows))?;
    run.finish("scaling", a, Some(a.seed), &a.out)
}

/// A dataset on the integer grid with its radius.
struct Loaded {
    ds: ParticleDataset,
    h: u64,
    /// Prior domain in grid units, when the input fixes one.
    domain: Option<f64>,
    input: InputDigest,
}

fn load(a: &DataArgs) -> Result<Loaded> {
    let path = a.data.as_ref().ok_or_else(|| CliError::usage("--data is required"))?;
    let file = File::open(path).map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))?;
    let parsed = read_dataset(BufReader::new(file))?;
    let mode = if a.strict { Inequality::Strict } else { Inequality::Inclusive };
    let radius = |dx: Option<f64>| -> Result<u64> {
        match (a.h, a.xi) {
            (Some(h), _) => Ok(h),
            (None, Some(xi)) => {
                let dx = dx.ok_or_else(|| CliError::usage("--xi needs --dx"))?;
                Ok(integer_radius(xi, dx, mode)?)
            }
            (None, None) => Err(CliError::usage("give --h, or --xi with --dx")),
        }
    };
    let (ds, h, domain) = match parsed {
        DatasetFile::Grid(ds) => {
            let h = radius(a.dx)?;
            (ds, h, a.extent)
        }
        DatasetFile::Real(raw) => {
            let dx = a.dx.ok_or_else(|| CliError::usage("real coordinates need --dx"))?;
            let h = radius(Some(dx))?;
            let grid = GridSpec { dx, extent: a.extent.unwrap_or(f64::INFINITY), dim: raw[0].len() };
            let (ds, _) = discretize(&raw, &grid, 0.0, mode)?;
            (ds, h, a.extent.map(|e| e / dx))
        }
    };
    if h == 0 {
        return Err(CliError::usage("radius must be at least one grid unit"));
    }
    Ok(Loaded { ds, h, domain, input: digest(path)? })
}

/// Smallest width that holds every position and the radius, and leaves
/// room for the prior's `2h <= L` when the domain defaults to `2^q1`.
fn infer_q1(max_position: u64, h: u64, domain_from_width: bool) -> usize {
    let mut q1 = ceil_log2(max_position + 1).max(ceil_log2(h + 2)).max(1);
    if domain_from_width {
        q1 = q1.max(ceil_log2(2 * h));
    }
    q1
}

/// Compiled program and prior inputs for a 1-D dataset.
struct Prepared {
    program: SearchProgram,
    layout: RegisterLayout,
    domain: f64,
    max_qubits: usize,
}

fn prepare(loaded: &Loaded, kind: qfrans::circuits::OracleKind, q1: Option<usize>, error_detection: bool) -> Result<Prepared> {
    let ds = &loaded.ds;
    ds.positions()?;
    let q1 = q1.unwrap_or_else(|| infer_q1(ds.max_coordinate(), loaded.h, loaded.domain.is_none()));
    ds.check_fits(q1)?;
    let layout = RegisterLayout::new(ds.len(), q1)?;
    let variant = OracleVariant::inclusive(kind, loaded.h, q1)?;
    let max_qubits = max_qubits()?;
    let program = SearchProgram::new(ds, &layout, &variant, error_detection, max_qubits)?;
    let domain = loaded.domain.unwrap_or((1u64 << q1) as f64);
    Ok(Prepared { program, layout, domain, max_qubits })
}

#[derive(Serialize)]
struct RunSettings<'a> {
    flags: &'a RunArgs,
    n: usize,
    h: u64,
    layout: RegisterLayout,
    total_qubits: usize,
    max_qubits: usize,
    domain: f64,
    prior_mean: f64,
}

#[derive(Serialize)]
struct PosteriorReport {
    support: Vec<u64>,
    weights: Vec<f64>,
    mean: f64,
}

#[derive(Serialize)]
struct RunReport<'a> {
    config: RunSettings<'a>,
    pairs: Vec<NeighborPair>,
    oracle_calls: u64,
    posterior: PosteriorReport,
    stopped_by: StopReason,
    attempts: usize,
    rejected: usize,
    per_success_iterations: &'a [usize],
    warnings: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    transcripts: Option<&'a [AttemptTranscript]>,
}

fn search(a: &RunArgs, mut run: Invocation) -> Result<()> {
    let loaded = load(&a.data)?;
    let prep = prepare(&loaded, a.variant, a.q1, !a.no_error_detection)?;
    let n = loaded.ds.len();
    let lambda = prior_mean(loaded.h, prep.domain, 1, n)?;
    let prior = init_prior(loaded.h, prep.domain, 1, n)?;
    if a.schedule == ScheduleKind::Custom && a.angles.is_empty() {
        return Err(CliError::usage("a custom schedule needs --angles"));
    }
    let config = SearchConfig {
        schedule: a.schedule,
        custom_angles: a.angles.clone(),
        iteration_cap: a.iteration_cap,
        u0: a.u0,
        seed: a.seed,
        error_detection: !a.no_error_detection,
        adaptive_schedule: a.adaptive,
        max_oracle_calls: a.max_oracle_calls,
        domain: Some(prep.domain),
        max_qubits: prep.max_qubits,
        record_transcripts: a.transcripts,
    };
    let outcome = prep.program.run(&prior, lambda, &config)?;
    for w in &outcome.warnings {
        log::warn!("{w}");
    }
    let report = RunReport {
        config: RunSettings {
            flags: a,
            n,
            h: loaded.h,
            layout: prep.layout,
            total_qubits: prep.layout.total(),
            max_qubits: prep.max_qubits,
            domain: prep.domain,
            prior_mean: lambda,
        },
        pairs: outcome.pairs.iter().copied().collect(),
        oracle_calls: outcome.oracle_calls,
        posterior: PosteriorReport {
            support: outcome.posterior.support(),
            weights: outcome.posterior.weights().to_vec(),
            mean: outcome.posterior.mean(),
        },
        stopped_by: outcome.stopped_by,
        attempts: outcome.attempts,
        rejected: outcome.rejected,
        per_success_iterations: &outcome.per_success_iterations,
        warnings: &outcome.warnings,
        transcripts: a.transcripts.then_some(outcome.transcripts.as_slice()),
    };
    write_atomic(&a.out, |w| {
        serde_json::to_writer_pretty(&mut *w, &report).map_err(|e| CliError::io(&a.out, e.into()))?;
        writeln!(w).map_err(|e| CliError::io(&a.out, e))
    })?;
    run.inputs.push(loaded.input);
    run.finish("run", a, Some(a.seed), &a.out)
}

fn brute(a: &BruteArgs, mut run: Invocation) -> Result<()> {
    let loaded = load(&a.data)?;
    let pairs = brute_force_pairs(&loaded.ds, loaded.h, a.variant);
    let mut meta = Metadata::standard(None);
    meta.push("n", loaded.ds.len()).push("dim", loaded.ds.dim()).push("h", loaded.h).push("variant", a.variant);
    csv_out(&a.out, |w| output::write_pairs(w, &meta, &pairs))?;
    run.inputs.push(loaded.input);
    run.finish("brute", a, None, &a.out)
}

fn resources(a: &ResourcesArgs, run: Invocation) -> Result<()> {
    let q1s = parse_range(&a.q1_range).map_err(CliError::Usage)?;
    let params = AnalyticParams { n: a.n, h: a.threshold, ..AnalyticParams::default() };
    let model = CostModel::default();
    let rows = scaling_sweep(&a.kinds, &q1s, &params, &model)?;
    let mut meta = Metadata::standard(None);
    meta.push("n", a.n).push("threshold", a.threshold).push("cost_model", format!("{model:?}"));
    csv_out(&a.out, |w| output::write_resources(w, &meta, &rows))?;
    run.finish("resources", a, None, &a.out)
}

fn noise(a: &NoiseArgs, mut run: Invocation) -> Result<()> {
    let mut meta = Metadata::standard(Some(a.seed));
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let rows = if a.data.data.is_some() {
        let loaded = load(&a.data)?;
        let prep = prepare(&loaded, a.variant, None, true)?;
        let n = loaded.ds.len() as u64;
        let alpha = critical_angle(theta_from_counts(1, n * n)?);
        let source = prep.program.readout_distribution(alpha)?;
        let q0 = a.q0.unwrap_or(prep.layout.q0);
        meta.push("q0", q0).push("tol", a.tol).push("threshold", threshold(a.tol, q0)?);
        meta.push("h", loaded.h).push("variant", a.variant).push("record_bits", record_bits(&prep.layout));
        let setup = FilterSetup { source: &source, ds: &loaded.ds, variant: prep.program.variant(), layout: &prep.layout };
        let rows = noise_sweep(q0, &a.rate_grid, a.trials, Some(&setup), &mut rng)?;
        run.inputs.push(loaded.input);
        rows
    } else {
        let q0 = a.q0.ok_or_else(|| CliError::usage("give --q0, or --data to take it from a dataset"))?;
        meta.push("q0", q0).push("tol", a.tol).push("threshold", threshold(a.tol, q0)?);
        noise_sweep(q0, &a.rate_grid, a.trials, None, &mut rng)?
    };
    csv_out(&a.out, |w| output::write_noise_sweep(w, &meta, &rows))?;
    run.finish("noise", a, Some(a.seed), &a.out)
}
