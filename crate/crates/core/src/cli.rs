//! Command-line front end: build and cache process tensors, run single
//! propagations, landscape sweeps and global pulse optimizations, and emit
//! data files for external plotting.
//!
//! Every output file embeds the configuration hash and the process-tensor
//! hash it was produced from; commands refuse mismatched artifacts unless
//! `--force` is given. Exit codes: 0 success, 2 configuration, 3 provenance
//! or file integrity, 4 capacity, 5 numerical, 6 i/o, 1 anything else.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bath::{eta_coefficients, BathError};
use crate::config::{ConfigError, RunConfig};
use crate::dynamics::{
    apply, make_propagators, DriveField, DynamicsError, QubitHamiltonian, Trajectory,
};
use crate::optimizer::{
    de_init, de_step, evaluate, DeState, EvaluationContext, OptimizerError, ParameterSpace,
};
use crate::ptbuild::{
    build_influence_tensors, build_process_tensor_with, BuildOptions, ProcessTensor, PtBuildError,
    PtFileError,
};
use crate::pulse::{shape, PulseError, PulseSpec};
use crate::quad::QuadError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("provenance mismatch: {0} (use --force to override)")]
    Provenance(String),
    #[error(transparent)]
    PtFile(#[from] PtFileError),
    #[error(transparent)]
    Build(#[from] PtBuildError),
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Other(String),
}

/// Map an error to the documented exit-code classes.
pub fn exit_code(err: &CliError) -> i32 {
    match err {
        CliError::Config(_) => 2,
        CliError::Provenance(_) => 3,
        CliError::PtFile(e) => match e {
            PtFileError::Io(_) => 6,
            _ => 3,
        },
        CliError::Build(PtBuildError::Capacity { .. }) => 4,
        CliError::Build(_) => 2,
        CliError::Bath(BathError::Quadrature(QuadError::NonConvergence { .. })) => 5,
        CliError::Bath(_) => 2,
        CliError::Dynamics(DynamicsError::Io(_)) => 6,
        CliError::Dynamics(_) => 5,
        CliError::Pulse(PulseError::Resolution { .. }) => 5,
        CliError::Pulse(_) => 2,
        CliError::Optimizer(_) => 5,
        CliError::Io { .. } => 6,
        CliError::Other(_) => 1,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "ptempo",
    about = "Process-tensor toolkit for driven open quantum systems",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Run configuration file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Process-tensor file; defaults to paths.pt_cache from the config.
    #[arg(long)]
    pub pt: Option<PathBuf>,
    /// Worker threads for sweeps and optimization; default: all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Skip provenance checks between configuration and artifacts.
    #[arg(long)]
    pub force: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the process tensor for the configured bath and grid, and cache
    /// it on disk.
    BuildPt {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Propagate the configured pulse against a cached process tensor and
    /// write a trajectory CSV.
    Propagate {
        #[command(flatten)]
        common: CommonArgs,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Load the pulse from a best-parameter JSON file instead of the
        /// config's pulse section.
        #[arg(long)]
        pulse: Option<PathBuf>,
    },
    /// Sweep the objective over the configured 2-D parameter grid.
    Landscape {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Checkpoint every N evaluations (resumable).
        #[arg(long)]
        checkpoint_every: Option<usize>,
    },
    /// Run the differential-evolution search over the configured space.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the configuration seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Wall-clock budget in seconds.
        #[arg(long)]
        budget_seconds: Option<f64>,
        /// Resume from a checkpoint in the output directory if present.
        #[arg(long)]
        resume: bool,
    },
    /// Print the metadata of a process-tensor file.
    PtInfo {
        #[arg(long)]
        pt: PathBuf,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::BuildPt { common } => cmd_build_pt(&common),
        Command::Propagate { common, out, pulse } => cmd_propagate(&common, &out, pulse.as_deref()),
        Command::Landscape {
            common,
            out,
            checkpoint_every,
        } => cmd_landscape(&common, &out, checkpoint_every),
        Command::Optimize {
            common,
            out,
            seed,
            budget_seconds,
            resume,
        } => cmd_optimize(&common, &out, seed, budget_seconds, resume),
        Command::PtInfo { pt } => cmd_pt_info(&pt),
    }
}

fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        // ignore the error if a global pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Crash-injection hook for exercising checkpoint resume: aborts the process
/// once `progress` reaches the value of the named environment variable.
fn abort_if_requested(var: &str, progress: usize) {
    if let Ok(v) = std::env::var(var) {
        if let Ok(limit) = v.parse::<usize>() {
            if progress >= limit {
                eprintln!("aborting after {progress} units ({var} set)");
                std::process::exit(42);
            }
        }
    }
}

/// Resolve the PT path: flag, then config, with the directory overridable
/// through the PTEMPO_CACHE_DIR environment variable.
fn resolve_pt_path(common: &CommonArgs, cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let base = common
        .pt
        .clone()
        .or_else(|| cfg.paths.pt_cache.clone())
        .ok_or_else(|| {
            CliError::Other("no process-tensor path given (--pt or paths.pt_cache)".into())
        })?;
    if let Ok(dir) = std::env::var("PTEMPO_CACHE_DIR") {
        if !dir.is_empty() {
            let file = base
                .file_name()
                .ok_or_else(|| CliError::Other("process-tensor path has no file name".into()))?;
            return Ok(PathBuf::from(dir).join(file));
        }
    }
    Ok(base)
}

fn load_checked_pt(
    common: &CommonArgs,
    cfg: &RunConfig,
) -> Result<(ProcessTensor, PathBuf), CliError> {
    let path = resolve_pt_path(common, cfg)?;
    let pt = ProcessTensor::load(&path)?;
    let want = cfg.bath_hash();
    if pt.meta().bath_hash != want {
        if common.force {
            eprintln!(
                "warning: process tensor {} (hash {}) does not match the configuration (hash {want}); \
                 continuing because of --force",
                path.display(),
                pt.meta().bath_hash
            );
        } else {
            return Err(CliError::Provenance(format!(
                "process tensor {} was built from parameters with hash {}, configuration has {want}",
                path.display(),
                pt.meta().bath_hash
            )));
        }
    }
    if pt.n_steps() != cfg.grid.n_steps || (pt.dt() - cfg.grid.dt).abs() > 1e-12 {
        return Err(CliError::Provenance(format!(
            "process tensor grid ({} steps, dt {}) differs from configuration ({} steps, dt {})",
            pt.n_steps(),
            pt.dt(),
            cfg.grid.n_steps,
            cfg.grid.dt
        )));
    }
    Ok((pt, path))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|source| CliError::Io {
        path: tmp.clone(),
        source,
    })?;
    std::fs::rename(&tmp, path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

// ---------------------------------------------------------------------------
// build-pt
// ---------------------------------------------------------------------------

pub fn cmd_build_pt(common: &CommonArgs) -> Result<(), CliError> {
    init_threads(common.threads);
    let (cfg, config_hash) = RunConfig::load(&common.config)?;
    let path = resolve_pt_path(common, &cfg)?;
    let started = std::time::Instant::now();

    let eta = eta_coefficients(&cfg.bath, cfg.grid.dt, cfg.memory_steps())?;
    let infl = build_influence_tensors(&eta, &cfg.coupling())?;
    let mut opts = BuildOptions::new(cfg.policy());
    opts.bath_hash = cfg.bath_hash();
    if let Some(cap) = cfg.grid.capacity_max_bond {
        opts.capacity_max_bond = cap;
    }
    let pt = build_process_tensor_with(&infl, cfg.grid.n_steps, &opts)?;
    pt.save(&path)?;
    let wall = started.elapsed();
    let d = pt.meta().diagnostics;
    println!("process tensor written to {}", path.display());
    println!("  config hash    {config_hash}");
    println!("  bath hash      {}", pt.meta().bath_hash);
    println!("  steps          {} x {} ps", pt.n_steps(), pt.dt());
    println!("  memory steps   {}", pt.meta().memory_steps);
    println!("  max bond       {}", d.max_bond);
    println!("  trunc error    {:.3e}", d.cumulative_truncation_error);
    println!("  wall time      {:.3} s", wall.as_secs_f64());
    Ok(())
}

// ---------------------------------------------------------------------------
// propagate
// ---------------------------------------------------------------------------

/// Best-parameter document written by `optimize`; `pulse` is re-loadable
/// here.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BestParams {
    pub pulse: PulseSpec,
    pub point: Vec<f64>,
    pub value: f64,
    pub config_hash: String,
    pub pt_hash: String,
}

pub fn cmd_propagate(
    common: &CommonArgs,
    out: &Path,
    pulse_file: Option<&Path>,
) -> Result<(), CliError> {
    init_threads(common.threads);
    let (cfg, config_hash) = RunConfig::load(&common.config)?;
    let (pt, _) = load_checked_pt(common, &cfg)?;

    let pulse: PulseSpec = match pulse_file {
        None => cfg.pulse_spec(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            let best: BestParams = serde_json::from_str(&text)
                .map_err(|e| CliError::Other(format!("cannot parse {}: {e}", p.display())))?;
            best.pulse
        }
    };

    let grid = cfg.time_grid();
    let field = if pulse.theta == 0.0 {
        vec![num_complex::Complex64::new(0.0, 0.0); grid.n]
    } else {
        shape(&pulse, &cfg.slm(), &grid)?
    };
    let drive = DriveField {
        t0: grid.t0,
        dt: grid.dt,
        samples: field.clone(),
    };
    let h = QubitHamiltonian {
        detuning: cfg.ensemble.detunings[0],
    };
    let props = make_propagators(&h, &drive, grid.t0, grid.dt, grid.n)?;
    let traj = apply(&pt, &props, &crate::dynamics::states::down())?;

    let mut buf = Vec::new();
    trajectory_csv(&mut buf, &traj, &field, &config_hash, &pt.meta().bath_hash)
        .map_err(|source| CliError::Io {
            path: out.to_path_buf(),
            source,
        })?;
    write_file(out, &buf)?;
    println!("trajectory written to {}", out.display());
    Ok(())
}

fn trajectory_csv(
    w: &mut impl Write,
    traj: &Trajectory,
    field: &[num_complex::Complex64],
    config_hash: &str,
    pt_hash: &str,
) -> std::io::Result<()> {
    writeln!(w, "# config_hash={config_hash}")?;
    writeln!(w, "# pt_hash={pt_hash}")?;
    writeln!(w, "t,sx,sy,sz,re_e,im_e")?;
    for (m, rho) in traj.states.iter().enumerate() {
        let t = traj.t0 + m as f64 * traj.dt;
        let [x, y, z] = crate::dynamics::bloch_vector(rho);
        let e = field.get(m).copied().unwrap_or_default();
        writeln!(w, "{t},{x},{y},{z},{},{}", e.re, e.im)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// landscape
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SweepCheckpoint {
    config_hash: String,
    pt_hash: String,
    n_done: usize,
    /// f64 bit patterns for exact resume
    values_bits: Vec<u64>,
}

#[derive(Serialize)]
struct SweepMeta<'a> {
    config_hash: &'a str,
    pt_hash: &'a str,
    dim1: String,
    dim2: String,
    n1: usize,
    n2: usize,
    axis1: &'a [f64],
    axis2: &'a [f64],
    fixed_pulse: &'a PulseSpec,
    failures: usize,
}

pub fn cmd_landscape(
    common: &CommonArgs,
    out_dir: &Path,
    checkpoint_every: Option<usize>,
) -> Result<(), CliError> {
    use rayon::prelude::*;

    init_threads(common.threads);
    let (cfg, config_hash) = RunConfig::load(&common.config)?;
    let (pt, _) = load_checked_pt(common, &cfg)?;
    let (space, n1, n2) = cfg.sweep_space()?;
    let ctx = EvaluationContext {
        pt: &pt,
        slm: cfg.slm(),
        grid: cfg.time_grid(),
        ensemble: cfg.ensemble(),
        rho0: crate::dynamics::states::down(),
        objective: cfg.objective_value()?,
    };
    ctx.validate()?;

    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let ckpt_path = out_dir.join("landscape.ckpt");
    let total = n1 * n2;
    let pt_hash = pt.meta().bath_hash.clone();

    let mut values: Vec<f64> = Vec::with_capacity(total);
    if let Ok(bytes) = std::fs::read(&ckpt_path) {
        match bincode::deserialize::<SweepCheckpoint>(&bytes) {
            Ok(ck) if ck.config_hash == config_hash && ck.pt_hash == pt_hash => {
                values = ck.values_bits.iter().map(|&b| f64::from_bits(b)).collect();
                eprintln!(
                    "resuming landscape from checkpoint: {}/{} points done",
                    values.len(),
                    total
                );
            }
            _ => {
                eprintln!("ignoring stale landscape checkpoint");
            }
        }
    }

    let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect()
    };
    let a1 = axis(space.dims[0].lo, space.dims[0].hi, n1);
    let a2 = axis(space.dims[1].lo, space.dims[1].hi, n2);

    let block = checkpoint_every.unwrap_or(total).max(1);
    let mut failures = 0usize;
    while values.len() < total {
        let start = values.len();
        let end = (start + block).min(total);
        let chunk: Vec<f64> = (start..end)
            .into_par_iter()
            .map(|flat| {
                let (i, j) = (flat / n2, flat % n2);
                let x = vec![a1[i], a2[j]];
                match evaluate(&ctx, &space, &x) {
                    Ok(v) => v,
                    Err(e) => {
                        eprintln!("point ({i}, {j}) failed: {e}");
                        f64::NAN
                    }
                }
            })
            .collect();
        values.extend(chunk);
        let ck = SweepCheckpoint {
            config_hash: config_hash.clone(),
            pt_hash: pt_hash.clone(),
            n_done: values.len(),
            values_bits: values.iter().map(|v| v.to_bits()).collect(),
        };
        write_file(
            &ckpt_path,
            &bincode::serialize(&ck).expect("checkpoint serializes"),
        )?;
        eprintln!("landscape progress: {}/{}", values.len(), total);
        abort_if_requested("PTEMPO_ABORT_AFTER_POINTS", values.len());
    }
    failures += values.iter().filter(|v| v.is_nan()).count();

    let mut csv = Vec::new();
    {
        let w = &mut csv;
        writeln!(w, "# config_hash={config_hash}").unwrap();
        writeln!(w, "# pt_hash={pt_hash}").unwrap();
        writeln!(
            w,
            "{},{},objective",
            dim_label(&space, 0),
            dim_label(&space, 1)
        )
        .unwrap();
        for i in 0..n1 {
            for j in 0..n2 {
                writeln!(w, "{},{},{}", a1[i], a2[j], values[i * n2 + j]).unwrap();
            }
        }
    }
    write_file(&out_dir.join("landscape.csv"), &csv)?;
    let meta = SweepMeta {
        config_hash: &config_hash,
        pt_hash: &pt_hash,
        dim1: dim_label(&space, 0),
        dim2: dim_label(&space, 1),
        n1,
        n2,
        axis1: &a1,
        axis2: &a2,
        fixed_pulse: &space.base,
        failures,
    };
    write_file(
        &out_dir.join("landscape.meta.json"),
        serde_json::to_string_pretty(&meta)
            .expect("meta serializes")
            .as_bytes(),
    )?;
    let _ = std::fs::remove_file(&ckpt_path);
    println!(
        "landscape written to {} ({} points, {} failures)",
        out_dir.join("landscape.csv").display(),
        total,
        failures
    );
    Ok(())
}

fn dim_label(space: &ParameterSpace, k: usize) -> String {
    use crate::optimizer::ParamName::*;
    match space.dims[k].name {
        Tau => "tau".into(),
        Delta => "delta".into(),
        Theta => "theta".into(),
        Phi => "phi".into(),
        Slope(i) => format!("slope{i}"),
    }
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct DeCheckpoint {
    config_hash: String,
    pt_hash: String,
    seed: u64,
    state: DeState,
}

#[derive(Serialize)]
struct DeHistoryDoc<'a> {
    config_hash: &'a str,
    pt_hash: &'a str,
    seed: u64,
    evaluations: usize,
    budget_exhausted: bool,
    converged: bool,
    best_value: f64,
    best_point: &'a [f64],
    history: &'a [crate::optimizer::GenerationRecord],
}

pub fn cmd_optimize(
    common: &CommonArgs,
    out_dir: &Path,
    seed_override: Option<u64>,
    budget_seconds: Option<f64>,
    resume: bool,
) -> Result<(), CliError> {
    init_threads(common.threads);
    let (cfg, config_hash) = RunConfig::load(&common.config)?;
    let (pt, _) = load_checked_pt(common, &cfg)?;
    let space = cfg.optimizer_space()?;
    let mut de_cfg = cfg.de_config(seed_override)?;
    de_cfg.budget_seconds = budget_seconds;
    let bounds = space.bounds();
    let ctx = EvaluationContext {
        pt: &pt,
        slm: cfg.slm(),
        grid: cfg.time_grid(),
        ensemble: cfg.ensemble(),
        rho0: crate::dynamics::states::down(),
        objective: cfg.objective_value()?,
    };
    ctx.validate()?;
    let objective = |x: &[f64]| evaluate(&ctx, &space, x);

    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let ckpt_path = out_dir.join("optimize.ckpt");
    let pt_hash = pt.meta().bath_hash.clone();

    let mut state: Option<DeState> = None;
    if resume {
        if let Ok(bytes) = std::fs::read(&ckpt_path) {
            match bincode::deserialize::<DeCheckpoint>(&bytes) {
                Ok(ck)
                    if ck.config_hash == config_hash
                        && ck.pt_hash == pt_hash
                        && ck.seed == de_cfg.seed =>
                {
                    eprintln!(
                        "resuming optimization at generation {} ({} evaluations)",
                        ck.state.generation, ck.state.evaluations
                    );
                    state = Some(ck.state);
                }
                _ => eprintln!("ignoring stale optimization checkpoint"),
            }
        }
    }
    let mut state = match state {
        Some(s) => s,
        None => de_init(&bounds, &de_cfg, objective)?,
    };

    let np = state.population.len();
    let ckpt_every_gens = cfg
        .optimizer
        .as_ref()
        .and_then(|o| o.checkpoint_every)
        .map(|evals| (evals / np).max(1))
        .unwrap_or(1);

    let started = std::time::Instant::now();
    let mut budget_exhausted = false;
    let mut converged = false;
    while state.generation < de_cfg.max_generations {
        if let Some(maxe) = de_cfg.max_evaluations {
            if state.evaluations + np > maxe {
                budget_exhausted = true;
                break;
            }
        }
        if let Some(bs) = de_cfg.budget_seconds {
            if started.elapsed().as_secs_f64() > bs {
                budget_exhausted = true;
                break;
            }
        }
        de_step(&mut state, &bounds, &de_cfg, objective)?;
        let last = state.history.last().expect("history is non-empty");
        eprintln!(
            "generation {:4}  best {:.6e}  evaluations {}",
            last.generation, last.best_value, last.evaluations
        );
        if state.generation % ckpt_every_gens == 0 {
            let ck = DeCheckpoint {
                config_hash: config_hash.clone(),
                pt_hash: pt_hash.clone(),
                seed: de_cfg.seed,
                state: state.clone(),
            };
            write_file(
                &ckpt_path,
                &bincode::serialize(&ck).expect("checkpoint serializes"),
            )?;
        }
        abort_if_requested("PTEMPO_ABORT_AFTER_GENERATIONS", state.generation);
        if de_cfg.tol > 0.0 {
            let finite: Vec<f64> = state
                .fitness
                .iter()
                .copied()
                .filter(|v| v.is_finite())
                .collect();
            if finite.len() == state.fitness.len() {
                let max = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = finite.iter().cloned().fold(f64::INFINITY, f64::min);
                let mean = finite.iter().sum::<f64>() / finite.len() as f64;
                if (max - min) <= de_cfg.tol * mean.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
        }
    }

    let (best_idx, best_value) = state
        .fitness
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, &v)| (i, v))
        .expect("population is non-empty");
    let best_point = state.population[best_idx].clone();

    let doc = DeHistoryDoc {
        config_hash: &config_hash,
        pt_hash: &pt_hash,
        seed: de_cfg.seed,
        evaluations: state.evaluations,
        budget_exhausted,
        converged,
        best_value,
        best_point: &best_point,
        history: &state.history,
    };
    write_file(
        &out_dir.join("de_history.json"),
        serde_json::to_string_pretty(&doc)
            .expect("history serializes")
            .as_bytes(),
    )?;
    let best = BestParams {
        pulse: space.instantiate(&best_point)?,
        point: best_point.clone(),
        value: best_value,
        config_hash: config_hash.clone(),
        pt_hash: pt_hash.clone(),
    };
    write_file(
        &out_dir.join("best_params.json"),
        serde_json::to_string_pretty(&best)
            .expect("best params serialize")
            .as_bytes(),
    )?;
    println!(
        "optimization finished: best {best_value:.6e} after {} evaluations",
        state.evaluations
    );
    println!(
        "results written to {} and {}",
        out_dir.join("de_history.json").display(),
        out_dir.join("best_params.json").display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// pt-info
// ---------------------------------------------------------------------------

pub fn cmd_pt_info(path: &Path) -> Result<(), CliError> {
    let pt = ProcessTensor::load(path)?;
    let m = pt.meta();
    println!("process tensor {}", path.display());
    println!("  steps          {} x {} ps", m.n_steps, m.dt);
    println!("  system dim     {}", m.d);
    println!("  memory steps   {}", m.memory_steps);
    println!("  coupling       {:?}", m.coupling_eigenvalues);
    println!("  cutoff         {:.3e}", m.policy.rel_cutoff);
    println!(
        "  max bond       {} (policy cap {:?})",
        m.diagnostics.max_bond, m.policy.max_bond
    );
    println!(
        "  trunc error    {:.3e}",
        m.diagnostics.cumulative_truncation_error
    );
    println!("  bath hash      {}", m.bath_hash);
    println!("  max bond (now) {}", pt.max_bond());
    Ok(())
}
