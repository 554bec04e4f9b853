//! Objective functions over final states, exhaustive 2-D landscape sweeps,
//! and a differential-evolution global search over pulse parameters, all
//! reusing one prebuilt process tensor shared across every evaluation.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    apply, bloch_vector, make_propagators, trace_distance, DriveField, DynamicsError,
    QubitHamiltonian,
};
use crate::ptbuild::ProcessTensor;
use crate::pulse::{shape, PhaseMask, PulseError, PulseSpec, SlmSpec, TimeGrid};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("objective evaluation failed: {0}")]
    Evaluation(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Pulse(#[from] PulseError),
}

// ---------------------------------------------------------------------------
// Objectives
// ---------------------------------------------------------------------------

/// Objective over the final states of all ensemble members (lower is
/// better). Trace distance is averaged over members; the equator distance is
/// the root mean square over members.
#[derive(Clone, Debug)]
pub enum Objective {
    TraceDistanceTo(Array2<C64>),
    RmsEquatorDistance,
}

/// Euclidean distance from a Bloch vector to the unit equator circle.
pub fn equator_distance(v: [f64; 3]) -> f64 {
    let rxy = (v[0] * v[0] + v[1] * v[1]).sqrt();
    ((1.0 - rxy) * (1.0 - rxy) + v[2] * v[2]).sqrt()
}

/// sqrt(mean of squared per-member equator distances).
pub fn rms_equator_distance(states: &[Array2<C64>]) -> f64 {
    let sum: f64 = states
        .iter()
        .map(|rho| {
            let d = equator_distance(bloch_vector(rho));
            d * d
        })
        .sum();
    (sum / states.len() as f64).sqrt()
}

impl Objective {
    pub fn evaluate_final_states(&self, states: &[Array2<C64>]) -> Result<f64, OptimizerError> {
        if states.is_empty() {
            return Err(OptimizerError::InvalidArgument("no final states".into()));
        }
        let value = match self {
            Objective::TraceDistanceTo(target) => {
                let mut acc = 0.0;
                for rho in states {
                    acc += trace_distance(rho, target)?;
                }
                acc / states.len() as f64
            }
            Objective::RmsEquatorDistance => rms_equator_distance(states),
        };
        if !value.is_finite() {
            return Err(OptimizerError::Evaluation(format!(
                "non-finite objective value {value}"
            )));
        }
        Ok(value)
    }
}

// ---------------------------------------------------------------------------
// Parameter space
// ---------------------------------------------------------------------------

/// Named pulse parameters the optimizer may vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamName {
    /// Input pulse duration τ (ps).
    Tau,
    /// Carrier detuning Δ (ps⁻¹).
    Delta,
    /// Pulse area Θ (radians).
    Theta,
    /// Mask offset Φ: the constant term of the mask function (radians).
    Phi,
    /// One mask segment slope.
    Slope(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamDim {
    pub name: ParamName,
    pub lo: f64,
    pub hi: f64,
}

/// Bounded parameter dimensions plus the baseline pulse they modify.
#[derive(Clone, Debug)]
pub struct ParameterSpace {
    pub dims: Vec<ParamDim>,
    /// Baseline pulse; fixed parameters keep their baseline values.
    pub base: PulseSpec,
}

impl ParameterSpace {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        if self.dims.is_empty() {
            return Err(OptimizerError::InvalidArgument(
                "parameter space needs at least one dimension".into(),
            ));
        }
        for d in &self.dims {
            if !d.lo.is_finite() || !d.hi.is_finite() || d.hi < d.lo {
                return Err(OptimizerError::InvalidArgument(format!(
                    "bad bounds [{}, {}] for {:?}",
                    d.lo, d.hi, d.name
                )));
            }
            if let ParamName::Slope(i) = d.name {
                match &self.base.mask {
                    PhaseMask::Segments { slopes, .. } if i < slopes.len() => {}
                    other => {
                        return Err(OptimizerError::InvalidArgument(format!(
                            "slope dimension {i} incompatible with mask {other:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.dims.iter().map(|d| (d.lo, d.hi)).collect()
    }

    /// Pulse with the point `x` written over the baseline.
    pub fn instantiate(&self, x: &[f64]) -> Result<PulseSpec, OptimizerError> {
        if x.len() != self.dims.len() {
            return Err(OptimizerError::InvalidArgument(format!(
                "{} coordinates for {} dimensions",
                x.len(),
                self.dims.len()
            )));
        }
        let mut spec = self.base.clone();
        for (d, &v) in self.dims.iter().zip(x.iter()) {
            match d.name {
                ParamName::Tau => spec.tau = v,
                ParamName::Delta => spec.delta = v,
                ParamName::Theta => spec.theta = v,
                ParamName::Phi => match &mut spec.mask {
                    PhaseMask::Flat => spec.mask = PhaseMask::Constant { phi: v },
                    PhaseMask::Constant { phi } => *phi = v,
                    PhaseMask::Parabolic { phi, .. } => *phi = v,
                    PhaseMask::Segments { .. } => {
                        return Err(OptimizerError::InvalidArgument(
                            "segment masks have no phase offset parameter".into(),
                        ))
                    }
                },
                ParamName::Slope(i) => match &mut spec.mask {
                    PhaseMask::Segments { slopes, .. } => slopes[i] = v,
                    _ => unreachable!("validated above"),
                },
            }
        }
        Ok(spec)
    }
}

/// Ensemble of emitters sharing one environment (hence one process tensor),
/// distinguished only by their static detunings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub detunings: Vec<f64>,
}

impl EnsembleSpec {
    pub fn single() -> Self {
        Self {
            detunings: vec![0.0],
        }
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        if self.detunings.is_empty() {
            return Err(OptimizerError::InvalidArgument(
                "ensemble needs at least one member".into(),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Everything fixed across objective evaluations: the shared process tensor,
/// the modulator geometry, the simulation grid, the ensemble, the initial
/// state and the objective.
pub struct EvaluationContext<'a> {
    pub pt: &'a ProcessTensor,
    pub slm: SlmSpec,
    pub grid: TimeGrid,
    pub ensemble: EnsembleSpec,
    pub rho0: Array2<C64>,
    pub objective: Objective,
}

impl<'a> EvaluationContext<'a> {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        self.ensemble.validate()?;
        if self.grid.n != self.pt.n_steps() {
            return Err(OptimizerError::InvalidArgument(format!(
                "grid has {} steps, process tensor {}",
                self.grid.n,
                self.pt.n_steps()
            )));
        }
        if (self.grid.dt - self.pt.dt()).abs() > 1e-12 {
            return Err(OptimizerError::InvalidArgument(
                "grid step does not match the process tensor step".into(),
            ));
        }
        Ok(())
    }

    /// Final states of all ensemble members for a concrete pulse.
    pub fn final_states(&self, pulse: &PulseSpec) -> Result<Vec<Array2<C64>>, OptimizerError> {
        let field = shape(pulse, &self.slm, &self.grid)?;
        let drive = DriveField {
            t0: self.grid.t0,
            dt: self.grid.dt,
            samples: field,
        };
        let mut finals = Vec::with_capacity(self.ensemble.detunings.len());
        for &det in &self.ensemble.detunings {
            let h = QubitHamiltonian { detuning: det };
            let props = make_propagators(&h, &drive, self.grid.t0, self.grid.dt, self.grid.n)?;
            let traj = apply(self.pt, &props, &self.rho0)?;
            finals.push(traj.final_state().clone());
        }
        Ok(finals)
    }

    /// Full objective evaluation for a concrete pulse.
    pub fn evaluate_pulse(&self, pulse: &PulseSpec) -> Result<f64, OptimizerError> {
        let finals = self.final_states(pulse)?;
        self.objective.evaluate_final_states(&finals)
    }
}

/// Evaluate the objective at a point of the parameter space.
pub fn evaluate(
    ctx: &EvaluationContext,
    space: &ParameterSpace,
    x: &[f64],
) -> Result<f64, OptimizerError> {
    ctx.validate()?;
    space.validate()?;
    let pulse = space.instantiate(x)?;
    ctx.evaluate_pulse(&pulse)
}

// ---------------------------------------------------------------------------
// 2-D sweeps
// ---------------------------------------------------------------------------

/// Row-major grid of objective values over two free dimensions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub dim1: ParamDim,
    pub dim2: ParamDim,
    pub n1: usize,
    pub n2: usize,
    /// values[i * n2 + j] for dim1 index i, dim2 index j
    pub values: Vec<f64>,
    /// axis sample positions
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// evaluation failures as (flat index, message); the value slot is NaN
    pub failures: Vec<(usize, String)>,
}

impl SweepResult {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n2 + j]
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Exhaustive sweep over a 2-D subspace; both remaining coordinates of the
/// space must be pinned through `fixed`. Points are evaluated independently
/// in parallel and gathered by index; failed points are recorded as NaN and
/// the sweep continues.
pub fn sweep2d(
    ctx: &EvaluationContext,
    space: &ParameterSpace,
    dim1: usize,
    dim2: usize,
    shape_grid: (usize, usize),
    fixed: &[f64],
) -> Result<SweepResult, OptimizerError> {
    ctx.validate()?;
    space.validate()?;
    let (n1, n2) = shape_grid;
    if n1 < 2 || n2 < 2 {
        return Err(OptimizerError::InvalidArgument(
            "sweep grid must be at least 2x2".into(),
        ));
    }
    if dim1 >= space.dims.len() || dim2 >= space.dims.len() || dim1 == dim2 {
        return Err(OptimizerError::InvalidArgument(format!(
            "bad sweep dimensions ({dim1}, {dim2})"
        )));
    }
    if fixed.len() != space.dims.len() {
        return Err(OptimizerError::InvalidArgument(
            "fixed parameter vector must cover every dimension".into(),
        ));
    }
    let a1 = axis(space.dims[dim1].lo, space.dims[dim1].hi, n1);
    let a2 = axis(space.dims[dim2].lo, space.dims[dim2].hi, n2);

    let results: Vec<Result<f64, String>> = (0..n1 * n2)
        .into_par_iter()
        .map(|flat| {
            let (i, j) = (flat / n2, flat % n2);
            let mut x = fixed.to_vec();
            x[dim1] = a1[i];
            x[dim2] = a2[j];
            evaluate(ctx, space, &x).map_err(|e| e.to_string())
        })
        .collect();

    let mut values = Vec::with_capacity(n1 * n2);
    let mut failures = Vec::new();
    for (flat, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => values.push(v),
            Err(msg) => {
                values.push(f64::NAN);
                failures.push((flat, msg));
            }
        }
    }
    Ok(SweepResult {
        dim1: space.dims[dim1],
        dim2: space.dims[dim2],
        n1,
        n2,
        values,
        axis1: a1,
        axis2: a2,
        failures,
    })
}

// ---------------------------------------------------------------------------
// Differential evolution
// ---------------------------------------------------------------------------

/// DE/rand/1/bin configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    /// Population members per search dimension.
    pub population_per_dim: usize,
    /// Differential weight F.
    pub mutation: f64,
    /// Crossover rate CR.
    pub crossover: f64,
    pub max_generations: usize,
    /// Evaluation budget; the search stops once exceeded.
    pub max_evaluations: Option<usize>,
    /// Wall-clock budget in seconds (checked between generations).
    pub budget_seconds: Option<f64>,
    /// Relative population-spread convergence tolerance; 0 disables.
    pub tol: f64,
    pub seed: u64,
    /// Members written over the random initial population, one vector per
    /// entry.
    pub initial_members: Vec<Vec<f64>>,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            population_per_dim: 8,
            mutation: 0.7,
            crossover: 0.9,
            max_generations: 1000,
            max_evaluations: None,
            budget_seconds: None,
            tol: 0.0,
            seed: 0,
            initial_members: Vec::new(),
        }
    }
}

impl DeConfig {
    pub fn validate(&self, n_dims: usize) -> Result<(), OptimizerError> {
        let np = self.population_per_dim * n_dims;
        if np < 4 {
            return Err(OptimizerError::InvalidArgument(format!(
                "population {np} must be at least 4"
            )));
        }
        if !(self.mutation > 0.0 && self.mutation < 2.0) {
            return Err(OptimizerError::InvalidArgument(format!(
                "mutation factor must lie in (0, 2), got {}",
                self.mutation
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err(OptimizerError::InvalidArgument(format!(
                "crossover rate must lie in [0, 1], got {}",
                self.crossover
            )));
        }
        Ok(())
    }
}

/// Per-generation record of the best member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_value: f64,
    pub best_point: Vec<f64>,
    pub evaluations: usize,
}

/// Resumable optimizer state; serialize between generations to checkpoint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeState {
    pub generation: usize,
    pub evaluations: usize,
    pub population: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub rng: ChaCha8Rng,
    pub history: Vec<GenerationRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub history: Vec<GenerationRecord>,
    pub evaluations: usize,
    pub budget_exhausted: bool,
    pub converged: bool,
}

fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

/// Initialize the DE state: uniform random population within bounds, with
/// `initial_members` written over the first slots, and everything evaluated.
pub fn de_init<F>(
    bounds: &[(f64, f64)],
    config: &DeConfig,
    objective: F,
) -> Result<DeState, OptimizerError>
where
    F: Fn(&[f64]) -> Result<f64, OptimizerError> + Sync,
{
    config.validate(bounds.len())?;
    let np = config.population_per_dim * bounds.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut population: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| rng.gen_range(0.0..1.0) * (hi - lo) + lo)
                .collect()
        })
        .collect();
    for (k, seed_member) in config.initial_members.iter().enumerate() {
        if k >= np {
            break;
        }
        if seed_member.len() != bounds.len() {
            return Err(OptimizerError::InvalidArgument(format!(
                "seeded member {k} has {} coordinates, expected {}",
                seed_member.len(),
                bounds.len()
            )));
        }
        population[k] = seed_member
            .iter()
            .zip(bounds)
            .map(|(&v, &(lo, hi))| clip(v, lo, hi))
            .collect();
    }
    let fitness: Vec<f64> = population
        .par_iter()
        .map(|x| objective(x).unwrap_or(f64::INFINITY))
        .collect();
    let evaluations = np;
    let (bi, bv) = best_of(&fitness);
    let history = vec![GenerationRecord {
        generation: 0,
        best_value: bv,
        best_point: population[bi].clone(),
        evaluations,
    }];
    Ok(DeState {
        generation: 0,
        evaluations,
        population,
        fitness,
        rng,
        history,
    })
}

fn best_of(fitness: &[f64]) -> (usize, f64) {
    let mut bi = 0;
    let mut bv = f64::INFINITY;
    for (i, &f) in fitness.iter().enumerate() {
        if f < bv {
            bv = f;
            bi = i;
        }
    }
    (bi, bv)
}

/// One DE/rand/1/bin generation: all random draws happen in a fixed
/// single-threaded order, trials are evaluated in parallel and gathered by
/// index, then selection is greedy. Deterministic for a given state.
pub fn de_step<F>(
    state: &mut DeState,
    bounds: &[(f64, f64)],
    config: &DeConfig,
    objective: F,
) -> Result<(), OptimizerError>
where
    F: Fn(&[f64]) -> Result<f64, OptimizerError> + Sync,
{
    let np = state.population.len();
    let nd = bounds.len();
    let mut trials: Vec<Vec<f64>> = Vec::with_capacity(np);
    for i in 0..np {
        // three distinct members, all different from i
        let mut pick = || loop {
            let k = state.rng.gen_range(0..np);
            if k != i {
                return k;
            }
        };
        let a = pick();
        let b = loop {
            let k = pick();
            if k != a {
                break k;
            }
        };
        let c = loop {
            let k = pick();
            if k != a && k != b {
                break k;
            }
        };
        let j_rand = state.rng.gen_range(0..nd);
        let mut trial = state.population[i].clone();
        for j in 0..nd {
            let crossed = state.rng.gen_range(0.0..1.0) < config.crossover;
            if crossed || j == j_rand {
                let v = state.population[a][j]
                    + config.mutation * (state.population[b][j] - state.population[c][j]);
                trial[j] = clip(v, bounds[j].0, bounds[j].1);
            }
        }
        trials.push(trial);
    }
    let trial_fitness: Vec<f64> = trials
        .par_iter()
        .map(|x| objective(x).unwrap_or(f64::INFINITY))
        .collect();
    state.evaluations += np;
    for i in 0..np {
        if trial_fitness[i] <= state.fitness[i] {
            state.fitness[i] = trial_fitness[i];
            state.population[i] = trials[i].clone();
        }
    }
    state.generation += 1;
    let (bi, bv) = best_of(&state.fitness);
    state.history.push(GenerationRecord {
        generation: state.generation,
        best_value: bv,
        best_point: state.population[bi].clone(),
        evaluations: state.evaluations,
    });
    Ok(())
}

fn spread_converged(fitness: &[f64], tol: f64) -> bool {
    if tol <= 0.0 {
        return false;
    }
    let finite: Vec<f64> = fitness.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < fitness.len() {
        return false;
    }
    let max = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = finite.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = finite.iter().sum::<f64>() / finite.len() as f64;
    (max - min) <= tol * mean.abs().max(1.0)
}

/// Run DE/rand/1/bin to completion from a fresh or resumed state.
pub fn differential_evolution_from<F>(
    mut state: DeState,
    bounds: &[(f64, f64)],
    config: &DeConfig,
    objective: F,
    mut on_generation: impl FnMut(&DeState),
) -> Result<DeResult, OptimizerError>
where
    F: Fn(&[f64]) -> Result<f64, OptimizerError> + Sync,
{
    config.validate(bounds.len())?;
    let start = std::time::Instant::now();
    let mut budget_exhausted = false;
    let mut converged = false;
    while state.generation < config.max_generations {
        if let Some(maxe) = config.max_evaluations {
            if state.evaluations + state.population.len() > maxe {
                budget_exhausted = true;
                break;
            }
        }
        if let Some(bs) = config.budget_seconds {
            if start.elapsed().as_secs_f64() > bs {
                budget_exhausted = true;
                break;
            }
        }
        de_step(&mut state, bounds, config, &objective)?;
        on_generation(&state);
        if spread_converged(&state.fitness, config.tol) {
            converged = true;
            break;
        }
    }
    let (bi, bv) = best_of(&state.fitness);
    Ok(DeResult {
        best_point: state.population[bi].clone(),
        best_value: bv,
        history: state.history,
        evaluations: state.evaluations,
        budget_exhausted,
        converged,
    })
}

/// Global search over the bounded space with DE/rand/1/bin.
pub fn differential_evolution<F>(
    bounds: &[(f64, f64)],
    config: &DeConfig,
    objective: F,
) -> Result<DeResult, OptimizerError>
where
    F: Fn(&[f64]) -> Result<f64, OptimizerError> + Sync,
{
    let state = de_init(bounds, config, &objective)?;
    differential_evolution_from(state, bounds, config, &objective, |_| {})
}
