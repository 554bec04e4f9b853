//! Time-dependent system Hamiltonians, Liouville-space propagators,
//! application of propagator sequences to a process tensor, trajectory
//! extraction, and independent reference evolutions used as oracles.
//!
//! Density matrices are vectorized row-major: vec(ρ)[a·d + b] = ρ_{ab}, so a
//! superoperator ρ ↦ AρB becomes the matrix A ⊗ Bᵀ and the unitary channel
//! ρ ↦ UρU† becomes U ⊗ U*.

use std::io::Write;
use std::path::Path;

use ndarray::{linalg::kron, s, Array1, Array2, Array3};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bath::{BathError, BathSpec};
use crate::ptbuild::{
    build_influence_tensors, CouplingSpec, InfluenceSet, ProcessTensor, PtBuildError,
};
use crate::tensornet::mps::{
    grow_with_column, sweep_qr_l2r_range, sweep_svd_r2l, ColumnOp, TruncationAccumulator,
};
use crate::tensornet::{TensorError, TruncationPolicy};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Hamiltonian sample at step {step} is not Hermitian (deviation {deviation:.3e})")]
    NonHermitian { step: usize, deviation: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    PtBuild(#[from] PtBuildError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("linear algebra backend error: {0}")]
    Backend(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Hamiltonians and drive fields
// ---------------------------------------------------------------------------

/// A time-dependent system Hamiltonian driven by a complex field sample.
pub trait Hamiltonian: Sync {
    fn dim(&self) -> usize;
    fn matrix(&self, t: f64, drive: C64) -> Array2<C64>;
}

/// Driven two-level system in the frame rotating at a reference transition:
/// H = E(t)/2 σ⁺ + E*(t)/2 σ⁻ − (detuning/2) σ_z, with basis (|↑⟩, |↓⟩)
/// and σ⁺ = |↑⟩⟨↓|. `detuning` is the static offset of this emitter's
/// transition used for ensemble members.
#[derive(Clone, Copy, Debug)]
pub struct QubitHamiltonian {
    pub detuning: f64,
}

impl QubitHamiltonian {
    pub fn resonant() -> Self {
        Self { detuning: 0.0 }
    }
}

impl Hamiltonian for QubitHamiltonian {
    fn dim(&self) -> usize {
        2
    }

    fn matrix(&self, _t: f64, drive: C64) -> Array2<C64> {
        let mut h = Array2::zeros((2, 2));
        h[[0, 0]] = C64::new(-self.detuning / 2.0, 0.0);
        h[[1, 1]] = C64::new(self.detuning / 2.0, 0.0);
        h[[0, 1]] = drive / 2.0;
        h[[1, 0]] = drive.conj() / 2.0;
        h
    }
}

/// Hamiltonian defined by a closure; mostly for tests and oracles.
pub struct FnHamiltonian<F: Fn(f64, C64) -> Array2<C64> + Sync> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(f64, C64) -> Array2<C64> + Sync> Hamiltonian for FnHamiltonian<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn matrix(&self, t: f64, drive: C64) -> Array2<C64> {
        (self.f)(t, drive)
    }
}

/// Complex drive field sampled at step midpoints t0 + (m + 1/2)·dt.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveField {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<C64>,
}

impl DriveField {
    pub fn zero(t0: f64, dt: f64, n: usize) -> Self {
        Self {
            t0,
            dt,
            samples: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn midpoint_time(&self, m: usize) -> f64 {
        self.t0 + (m as f64 + 0.5) * self.dt
    }
}

// ---------------------------------------------------------------------------
// Propagators
// ---------------------------------------------------------------------------

/// Per-step Liouville-space propagators U_m = exp(−i [H(t_m + dt/2), ·] dt),
/// stored as d²×d² matrices acting on row-major vectorized density matrices.
#[derive(Clone, Debug)]
pub struct PropagatorSequence {
    pub t0: f64,
    pub dt: f64,
    d: usize,
    mats: Vec<Array2<C64>>,
}

impl PropagatorSequence {
    pub fn from_matrices(t0: f64, dt: f64, d: usize, mats: Vec<Array2<C64>>) -> Self {
        Self { t0, dt, d, mats }
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn mat(&self, m: usize) -> &Array2<C64> {
        &self.mats[m]
    }

    /// Largest deviation of ‖U v‖₂ from ‖v‖₂ over a deterministic set of
    /// probe vectors (each U is a unitary map on vectorized operators).
    pub fn max_isometry_deviation(&self) -> f64 {
        let d2 = self.d * self.d;
        let mut worst = 0.0f64;
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for u in &self.mats {
            for _ in 0..3 {
                let v = Array1::from_iter((0..d2).map(|_| C64::new(next(), next())));
                let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                let uv = u.dot(&v);
                let nuv = uv.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                worst = worst.max((nuv - nv).abs() / nv.max(1e-300));
            }
        }
        worst
    }
}

/// exp(−i H dt) for a Hermitian 2×2 matrix, analytically.
fn expm_minus_i_h_dt_2x2(h: &Array2<C64>, dt: f64) -> Array2<C64> {
    let a = 0.5 * (h[[0, 0]].re + h[[1, 1]].re);
    let b = 0.5 * (h[[0, 0]].re - h[[1, 1]].re);
    let c = h[[0, 1]];
    let r = (b * b + c.norm_sqr()).sqrt();
    let phase = (-C64::i() * a * dt).exp();
    let (cos_t, sinc_t) = if r * dt.abs() < 1e-30 {
        (1.0, dt)
    } else {
        ((r * dt).cos(), (r * dt).sin() / r)
    };
    let mut u = Array2::zeros((2, 2));
    let mi = -C64::i() * sinc_t;
    u[[0, 0]] = phase * (C64::new(cos_t, 0.0) + mi * b);
    u[[1, 1]] = phase * (C64::new(cos_t, 0.0) - mi * b);
    u[[0, 1]] = phase * mi * c;
    u[[1, 0]] = phase * mi * c.conj();
    u
}

/// exp(−i H dt) via eigendecomposition for general Hermitian d×d.
fn expm_minus_i_h_dt(h: &Array2<C64>, dt: f64) -> Result<Array2<C64>, DynamicsError> {
    if h.dim().0 == 2 {
        return Ok(expm_minus_i_h_dt_2x2(h, dt));
    }
    let (vals, vecs) = h
        .eigh(UPLO::Lower)
        .map_err(|e| DynamicsError::Backend(e.to_string()))?;
    let phases = Array2::from_diag(&vals.mapv(|l| (-C64::i() * l * dt).exp()));
    let vh = vecs.t().mapv(|v| v.conj());
    Ok(vecs.dot(&phases).dot(&vh))
}

fn hermiticity_deviation(h: &Array2<C64>) -> f64 {
    let d = h.dim().0;
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            worst = worst.max((h[[i, j]] - h[[j, i]].conj()).norm());
        }
    }
    worst
}

/// Build the per-step propagators with the Hamiltonian evaluated at step
/// midpoints. Each matrix is U ⊗ U* for U = exp(−i H(t_m + dt/2) dt).
pub fn make_propagators(
    h: &dyn Hamiltonian,
    drive: &DriveField,
    t0: f64,
    dt: f64,
    n: usize,
) -> Result<PropagatorSequence, DynamicsError> {
    if !(dt > 0.0) {
        return Err(DynamicsError::InvalidArgument(format!(
            "dt must be > 0, got {dt}"
        )));
    }
    if (drive.t0 - t0).abs() > 1e-9 || (drive.dt - dt).abs() > 1e-12 {
        return Err(DynamicsError::InvalidArgument(format!(
            "drive grid (t0 = {}, dt = {}) does not match requested (t0 = {t0}, dt = {dt})",
            drive.t0, drive.dt
        )));
    }
    if drive.len() < n {
        return Err(DynamicsError::InvalidArgument(format!(
            "drive has {} samples, {n} steps requested",
            drive.len()
        )));
    }
    let d = h.dim();
    let mut mats = Vec::with_capacity(n);
    for m in 0..n {
        let t_mid = t0 + (m as f64 + 0.5) * dt;
        let hm = h.matrix(t_mid, drive.samples[m]);
        if hm.dim() != (d, d) {
            return Err(DynamicsError::DimensionMismatch(format!(
                "Hamiltonian sample has shape {:?}, expected ({d}, {d})",
                hm.dim()
            )));
        }
        let scale = hm.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        let dev = hermiticity_deviation(&hm);
        if dev > 1e-12 * (1.0 + scale) {
            return Err(DynamicsError::NonHermitian {
                step: m,
                deviation: dev,
            });
        }
        let u = expm_minus_i_h_dt(&hm, dt)?;
        let uc = u.mapv(|v| v.conj());
        mats.push(kron(&u, &uc));
    }
    Ok(PropagatorSequence { t0, dt, d, mats })
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

/// Reduced-system states ρ(t_m) on the step grid plus derived observables.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<Array2<C64>>,
}

/// Health report over a trajectory; small negative eigenvalues from
/// truncation are reported, never clipped.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryReport {
    pub max_trace_deviation: f64,
    pub max_hermiticity_deviation: f64,
    pub min_eigenvalue: f64,
}

pub fn bloch_vector(rho: &Array2<C64>) -> [f64; 3] {
    let x = 2.0 * rho[[0, 1]].re;
    let y = -2.0 * rho[[0, 1]].im;
    let z = rho[[0, 0]].re - rho[[1, 1]].re;
    [x, y, z]
}

/// ⟨σ⁺⟩ = tr(ρ σ⁺) = ρ_{↓↑}.
pub fn sigma_plus_expectation(rho: &Array2<C64>) -> C64 {
    rho[[1, 0]]
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len())
            .map(|m| self.t0 + m as f64 * self.dt)
            .collect()
    }

    pub fn final_state(&self) -> &Array2<C64> {
        self.states.last().expect("trajectory is non-empty")
    }

    pub fn bloch(&self) -> Vec<[f64; 3]> {
        self.states.iter().map(bloch_vector).collect()
    }

    pub fn sigma_z(&self) -> Vec<f64> {
        self.states.iter().map(|r| bloch_vector(r)[2]).collect()
    }

    pub fn validate(&self) -> Result<TrajectoryReport, DynamicsError> {
        let mut max_trace = 0.0f64;
        let mut max_herm = 0.0f64;
        let mut min_eig = f64::INFINITY;
        for rho in &self.states {
            let tr: C64 = rho.diag().iter().sum();
            max_trace = max_trace.max((tr - C64::new(1.0, 0.0)).norm());
            max_herm = max_herm.max(hermiticity_deviation(rho));
            let sym = (rho + &rho.t().mapv(|v| v.conj())).mapv(|v| 0.5 * v);
            let (vals, _) = sym
                .eigh(UPLO::Lower)
                .map_err(|e| DynamicsError::Backend(e.to_string()))?;
            for v in vals.iter() {
                min_eig = min_eig.min(*v);
            }
        }
        Ok(TrajectoryReport {
            max_trace_deviation: max_trace,
            max_hermiticity_deviation: max_herm,
            min_eigenvalue: min_eig,
        })
    }

    /// Columnar text export: time, Re/Im of every ρ entry (row-major), and
    /// for two-level systems the Bloch components.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = self.states.first().map(|s| s.dim().0).unwrap_or(0);
        let mut header = String::from("t");
        for i in 0..d {
            for j in 0..d {
                header.push_str(&format!(",re_rho{i}{j},im_rho{i}{j}"));
            }
        }
        if d == 2 {
            header.push_str(",sx,sy,sz");
        }
        writeln!(w, "{header}")?;
        for (m, rho) in self.states.iter().enumerate() {
            let t = self.t0 + m as f64 * self.dt;
            let mut line = format!("{t}");
            for v in rho.iter() {
                line.push_str(&format!(",{},{}", v.re, v.im));
            }
            if d == 2 {
                let [x, y, z] = bloch_vector(rho);
                line.push_str(&format!(",{x},{y},{z}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Compact binary container (same layout discipline as the process
    /// tensor file): magic, version, metadata, little-endian doubles, then a
    /// SHA-256 checksum.
    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.states.first().map(|s| s.dim().0).unwrap_or(0);
        let mut buf = Vec::new();
        buf.extend_from_slice(b"TRAJBIN1");
        buf.extend_from_slice(&1u32.to_le_bytes());
        let meta = serde_json::to_vec(&TrajMeta {
            t0: self.t0,
            dt: self.dt,
            d,
            n_states: self.states.len(),
        })
        .expect("metadata serializes");
        buf.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        buf.extend_from_slice(&meta);
        for rho in &self.states {
            for v in rho.iter() {
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&buf);
        buf.extend_from_slice(&digest);
        buf
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, DynamicsError> {
        let fail = |m: &str| DynamicsError::InvalidArgument(format!("trajectory file: {m}"));
        if data.len() < 12 + 32 {
            return Err(fail("truncated"));
        }
        let (body, checksum) = data.split_at(data.len() - 32);
        if &body[..8] != b"TRAJBIN1" {
            return Err(fail("bad magic"));
        }
        if Sha256::digest(body).as_slice() != checksum {
            return Err(fail("checksum mismatch"));
        }
        let version = u32::from_le_bytes(body[8..12].try_into().unwrap());
        if version > 1 {
            return Err(fail(&format!("unsupported version {version}")));
        }
        let meta_len = u64::from_le_bytes(body[12..20].try_into().unwrap()) as usize;
        if body.len() < 20 + meta_len {
            return Err(fail("truncated metadata"));
        }
        let meta: TrajMeta = serde_json::from_slice(&body[20..20 + meta_len])
            .map_err(|e| fail(&e.to_string()))?;
        let mut pos = 20 + meta_len;
        let mut states = Vec::with_capacity(meta.n_states);
        for _ in 0..meta.n_states {
            let need = meta.d * meta.d * 16;
            if body.len() < pos + need {
                return Err(fail("truncated payload"));
            }
            let mut vals = Vec::with_capacity(meta.d * meta.d);
            for k in 0..meta.d * meta.d {
                let off = pos + 16 * k;
                let re = f64::from_le_bytes(body[off..off + 8].try_into().unwrap());
                let im = f64::from_le_bytes(body[off + 8..off + 16].try_into().unwrap());
                vals.push(C64::new(re, im));
            }
            states.push(
                Array2::from_shape_vec((meta.d, meta.d), vals)
                    .map_err(|e| fail(&e.to_string()))?,
            );
            pos += need;
        }
        Ok(Self {
            t0: meta.t0,
            dt: meta.dt,
            states,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), DynamicsError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DynamicsError> {
        let data = std::fs::read(path)?;
        Self::from_bytes(&data)
    }
}

#[derive(Serialize, Deserialize)]
struct TrajMeta {
    t0: f64,
    dt: f64,
    d: usize,
    n_states: usize,
}

fn vec_rho(rho: &Array2<C64>) -> Array1<C64> {
    let d = rho.dim().0;
    Array1::from_iter(rho.iter().copied()).into_shape(d * d).unwrap()
}

fn unvec_rho(v: &Array1<C64>, d: usize) -> Array2<C64> {
    Array2::from_shape_vec((d, d), v.to_vec()).expect("length d^2")
}

// ---------------------------------------------------------------------------
// Process-tensor application
// ---------------------------------------------------------------------------

/// Contract a propagator sequence and an initial state into the process
/// tensor, returning the reduced state at every step. Cost is linear in
/// n_steps × (max bond)².
pub fn apply(
    pt: &ProcessTensor,
    props: &PropagatorSequence,
    rho0: &Array2<C64>,
) -> Result<Trajectory, DynamicsError> {
    let d = pt.dim();
    if props.dim() != d {
        return Err(DynamicsError::DimensionMismatch(format!(
            "propagator dimension {} vs process tensor {}",
            props.dim(),
            d
        )));
    }
    if props.len() != pt.n_steps() {
        return Err(DynamicsError::DimensionMismatch(format!(
            "{} propagators for a {}-step process tensor",
            props.len(),
            pt.n_steps()
        )));
    }
    if rho0.dim() != (d, d) {
        return Err(DynamicsError::DimensionMismatch(format!(
            "initial state shape {:?}, expected ({d}, {d})",
            rho0.dim()
        )));
    }
    if (props.dt - pt.dt()).abs() > 1e-12 {
        return Err(DynamicsError::InvalidArgument(format!(
            "propagator dt {} vs process tensor dt {}",
            props.dt,
            pt.dt()
        )));
    }

    let d2 = d * d;
    let caps = pt.right_caps();
    let mut states = Vec::with_capacity(pt.n_steps() + 1);
    states.push(rho0.clone());

    // running left part: l[p, b] over the system Liouville index and the
    // bond to the right of the last contracted site
    let mut l: Array2<C64> = {
        let v = props.mat(0).dot(&vec_rho(rho0));
        let site = &pt.sites()[0];
        let (_, _, br) = site.dim();
        let mut l1 = Array2::zeros((d2, br));
        for p in 0..d2 {
            for b in 0..br {
                l1[[p, b]] = site[[0, p, b]] * v[p];
            }
        }
        l1
    };
    states.push(unvec_rho(&l.dot(&caps[1]), d));

    for m in 1..pt.n_steps() {
        let x = props.mat(m).dot(&l); // (d², bond)
        let site = &pt.sites()[m];
        let (bl, _, br) = site.dim();
        debug_assert_eq!(bl, x.dim().1);
        let mut nl = Array2::zeros((d2, br));
        for q in 0..d2 {
            let row = x.slice(s![q, ..]);
            let mat = site.slice(s![.., q, ..]);
            nl.slice_mut(s![q, ..]).assign(&row.dot(&mat));
        }
        l = nl;
        states.push(unvec_rho(&l.dot(&caps[m + 1]), d));
    }

    Ok(Trajectory {
        t0: props.t0,
        dt: props.dt,
        states,
    })
}

// ---------------------------------------------------------------------------
// Conventional reference method
// ---------------------------------------------------------------------------

/// Evolve the augmented-history MPS with the propagators baked in, rebuilding
/// all influence machinery for this single trajectory. Serves as the
/// like-for-like baseline the reusable process tensor is measured against,
/// and as a cross-validation of [`apply`].
#[allow(clippy::too_many_arguments)]
pub fn conventional_tempo(
    h: &dyn Hamiltonian,
    drive: &DriveField,
    bath: &BathSpec,
    coupling: &CouplingSpec,
    rho0: &Array2<C64>,
    t0: f64,
    dt: f64,
    n_steps: usize,
    memory_steps: usize,
    policy: &TruncationPolicy,
) -> Result<Trajectory, DynamicsError> {
    let eta = crate::bath::eta_coefficients(bath, dt, memory_steps)?;
    let infl = build_influence_tensors(&eta, coupling)?;
    let props = make_propagators(h, drive, t0, dt, n_steps)?;
    conventional_tempo_with_influences(&infl, &props, rho0, policy)
}

/// Conventional evolution given prebuilt influence tensors and propagators.
pub fn conventional_tempo_with_influences(
    infl: &InfluenceSet,
    props: &PropagatorSequence,
    rho0: &Array2<C64>,
    policy: &TruncationPolicy,
) -> Result<Trajectory, DynamicsError> {
    let d = infl.dim();
    let d2 = d * d;
    if props.dim() != d {
        return Err(DynamicsError::DimensionMismatch(
            "propagator dimension vs coupling dimension".into(),
        ));
    }
    let n_steps = props.len();
    if n_steps == 0 {
        return Err(DynamicsError::InvalidArgument("no steps".into()));
    }
    policy.validate()?;

    let i0 = infl.i0_diag();
    let nc = infl.n_classes();
    let mut acc = TruncationAccumulator::new();
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(rho0.clone());

    // step 1
    let v = props.mat(0).dot(&vec_rho(rho0));
    let mut tensors: Vec<Array3<C64>> = Vec::new();
    {
        let mut site = Array3::zeros((1, d2, 1));
        for p in 0..d2 {
            site[[0, p, 0]] = v[p] * i0[p];
        }
        tensors.push(site);
    }
    states.push(read_adt(&tensors, d));

    for m in 1..n_steps {
        // trim slices that have fallen out of the memory window
        if tensors.len() > infl.n_max {
            let oldest = tensors.remove(0);
            let (_, p, br) = oldest.dim();
            let mut vsum = Array1::<C64>::zeros(br);
            for pi in 0..p {
                for b in 0..br {
                    vsum[b] += oldest[[0, pi, b]];
                }
            }
            let (nbl, np, nbr) = tensors[0].dim();
            debug_assert_eq!(nbl, br);
            let next = tensors[0].view().into_shape((nbl, np * nbr)).unwrap();
            let merged = vsum
                .insert_axis(ndarray::Axis(0))
                .dot(&next)
                .into_shape((1, np, nbr))
                .unwrap();
            tensors[0] = merged;
        }

        // grow: copy-leg on the last site, new site carrying U_m
        let last = tensors.len() - 1;
        {
            let old = &tensors[last];
            let (bl, p, _) = old.dim();
            let mut grown = Array3::zeros((bl, p, p));
            for b in 0..bl {
                for pi in 0..p {
                    grown[[b, pi, pi]] = old[[b, pi, 0]];
                }
            }
            tensors[last] = grown;
            let u = props.mat(m);
            let mut new_site = Array3::zeros((d2, d2, 1));
            for c in 0..d2 {
                for q in 0..d2 {
                    new_site[[c, q, 0]] = u[[q, c]];
                }
            }
            tensors.push(new_site);
        }

        // influence column over the active chain, on-site factor at the end
        let window_len = tensors.len() - 1; // couplings to all older slices
        let col = {
            let mut window = Vec::with_capacity(window_len + 1);
            for k in 0..window_len {
                let lag = window_len - k;
                let vals = influence_class_values(infl, lag);
                let cl = if k == 0 { 1 } else { nc };
                let mut wt = ndarray::Array4::zeros((cl, d2, d2, nc));
                for c in 0..nc {
                    for p in 0..d2 {
                        let vv = vals[[c, p]];
                        if k == 0 {
                            wt[[0, p, p, c]] = vv;
                        } else {
                            wt[[c, p, p, c]] = vv;
                        }
                    }
                }
                window.push(wt);
            }
            // on-site end tensor at the new site
            let mut end = ndarray::Array4::zeros((nc.max(1), d2, d2, 1));
            for q in 0..d2 {
                let c = infl.class_of(q);
                end[[c, q, q, 0]] = i0[q];
            }
            if window_len == 0 {
                // no older slices: plain diagonal on-site factor
                let mut solo = ndarray::Array4::zeros((1, d2, d2, 1));
                for q in 0..d2 {
                    solo[[0, q, q, 0]] = i0[q];
                }
                ColumnOp {
                    window: vec![solo],
                    new_site: None,
                }
            } else {
                window.push(end);
                ColumnOp {
                    window,
                    new_site: None,
                }
            }
        };
        grow_with_column(&mut tensors, &col);
        let lastidx = tensors.len() - 1;
        sweep_qr_l2r_range(&mut tensors, 0, lastidx)?;
        sweep_svd_r2l(&mut tensors, 0, policy, &mut acc)?;

        states.push(read_adt(&tensors, d));
    }

    Ok(Trajectory {
        t0: props.t0,
        dt: props.dt,
        states,
    })
}

/// exp(−Δs_c w_n[β]) table; mirrors the builder's column values.
fn influence_class_values(infl: &InfluenceSet, lag: usize) -> Array2<C64> {
    let d2 = infl.dim() * infl.dim();
    let nc = infl.n_classes();
    let full = infl.tensor(lag);
    // representative alpha per class
    let mut reps = vec![usize::MAX; nc];
    for alpha in 0..d2 {
        let c = infl.class_of(alpha);
        if reps[c] == usize::MAX {
            reps[c] = alpha;
        }
    }
    let mut out = Array2::zeros((nc, d2));
    for c in 0..nc {
        for b in 0..d2 {
            out[[c, b]] = full[[reps[c], b]];
        }
    }
    out
}

/// Reduced state from the history MPS: sum all older physical legs, keep the
/// newest as the Liouville index.
fn read_adt(tensors: &[Array3<C64>], d: usize) -> Array2<C64> {
    let d2 = d * d;
    let mut l = Array1::<C64>::ones(1);
    let last = tensors.len() - 1;
    for t in &tensors[..last] {
        let (_, p, br) = t.dim();
        let mut next = Array1::<C64>::zeros(br);
        for pi in 0..p {
            let slice = t.slice(s![.., pi, ..]);
            next += &l.dot(&slice);
        }
        l = next;
    }
    let t = &tensors[last];
    let (_, p, _) = t.dim();
    debug_assert_eq!(p, d2);
    let mut rho = Array1::<C64>::zeros(d2);
    for q in 0..d2 {
        let slice = t.slice(s![.., q, ..]);
        rho[q] = l.dot(&slice)[0];
    }
    unvec_rho(&rho, d)
}

// ---------------------------------------------------------------------------
// Trace distance
// ---------------------------------------------------------------------------

/// ½ Σ |eig(ρ − σ)| for Hermitian density matrices.
pub fn trace_distance(rho: &Array2<C64>, sigma: &Array2<C64>) -> Result<f64, DynamicsError> {
    if rho.dim() != sigma.dim() {
        return Err(DynamicsError::DimensionMismatch(format!(
            "{:?} vs {:?}",
            rho.dim(),
            sigma.dim()
        )));
    }
    for (name, m) in [("rho", rho), ("sigma", sigma)] {
        let scale = m.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        if hermiticity_deviation(m) > 1e-8 * (1.0 + scale) {
            return Err(DynamicsError::InvalidArgument(format!(
                "{name} is not Hermitian"
            )));
        }
    }
    let diff = rho - sigma;
    let (vals, _) = diff
        .eigh(UPLO::Lower)
        .map_err(|e| DynamicsError::Backend(e.to_string()))?;
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}

/// Density matrix of a pure state.
pub fn pure_state(ket: &[C64]) -> Array2<C64> {
    let d = ket.len();
    let mut rho = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            rho[[i, j]] = ket[i] * ket[j].conj();
        }
    }
    rho
}

/// Standard two-level states in the (|↑⟩, |↓⟩) basis.
pub mod states {
    use super::{pure_state, Array2, C64};

    pub fn up() -> Array2<C64> {
        pure_state(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
    }

    pub fn down() -> Array2<C64> {
        pure_state(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)])
    }

    pub fn x_plus() -> Array2<C64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        pure_state(&[C64::new(r, 0.0), C64::new(r, 0.0)])
    }

    /// (|↑⟩ + i|↓⟩)/√2, the +y Bloch axis.
    pub fn y_plus() -> Array2<C64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        pure_state(&[C64::new(r, 0.0), C64::new(0.0, r)])
    }

    pub fn y_minus() -> Array2<C64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        pure_state(&[C64::new(r, 0.0), C64::new(0.0, -r)])
    }
}

// ---------------------------------------------------------------------------
// Independent reference evolutions (oracles)
// ---------------------------------------------------------------------------

pub mod oracles {
    use super::*;

    /// RK4 integration of dρ/dt = −i[H(t), ρ] with `substeps` fine steps per
    /// coarse step; returns states on the coarse grid (n + 1 entries).
    pub fn ode_trajectory(
        h: &dyn Hamiltonian,
        drive: &dyn Fn(f64) -> C64,
        rho0: &Array2<C64>,
        t0: f64,
        dt: f64,
        n: usize,
        substeps: usize,
    ) -> Vec<Array2<C64>> {
        let rhs = |t: f64, rho: &Array2<C64>| -> Array2<C64> {
            let hm = h.matrix(t, drive(t));
            let comm = hm.dot(rho) - rho.dot(&hm);
            comm.mapv(|v| -C64::i() * v)
        };
        let mut states = Vec::with_capacity(n + 1);
        let mut rho = rho0.clone();
        states.push(rho.clone());
        let hfine = dt / substeps as f64;
        for m in 0..n {
            let mut t = t0 + m as f64 * dt;
            for _ in 0..substeps {
                let k1 = rhs(t, &rho);
                let k2 = rhs(t + hfine / 2.0, &(&rho + &(&k1 * C64::new(hfine / 2.0, 0.0))));
                let k3 = rhs(t + hfine / 2.0, &(&rho + &(&k2 * C64::new(hfine / 2.0, 0.0))));
                let k4 = rhs(t + hfine, &(&rho + &(&k3 * C64::new(hfine, 0.0))));
                rho = &rho
                    + &((k1 + k2.mapv(|v| 2.0 * v) + k3.mapv(|v| 2.0 * v) + k4)
                        .mapv(|v| v * (hfine / 6.0)));
                t += hfine;
            }
            states.push(rho.clone());
        }
        states
    }

    /// Exact pure-dephasing decoherence exponent
    /// Γ(t) = ∫ dω J(ω) coth(ω/(2 k_B T/ħ)) (1 − cos ωt)/ω², by quadrature.
    pub fn dephasing_exponent(bath: &BathSpec, t: f64) -> Result<f64, BathError> {
        bath.validate()?;
        if bath.alpha == 0.0 {
            return Ok(0.0);
        }
        let kernel = crate::bath::CorrelationKernel::new(bath)?;
        let _ = &kernel;
        let f = |w: f64| -> C64 {
            let j = crate::bath::spectral_density(bath, w).unwrap_or(0.0);
            if j == 0.0 || w == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let kbt = bath.kbt();
            let th = if kbt == 0.0 {
                1.0
            } else {
                1.0 / (w / (2.0 * kbt)).tanh()
            };
            let s = (0.5 * w * t).sin();
            C64::new(j * th * 2.0 * s * s / (w * w), 0.0)
        };
        let wc = bath.omega_c;
        let panels = [(0.0, wc), (wc, 3.0 * wc), (3.0 * wc, 10.0 * wc)];
        let r = crate::quad::integrate_panels(&f, &panels, 1e-15, 1e-10, 20_000)?;
        Ok(r.value.re)
    }

    /// Brute-force path sum over the full discretized influence network with
    /// the given propagators; exponential in the step count. Independent of
    /// the MPS contraction machinery.
    pub fn dense_path_trajectory(
        infl: &InfluenceSet,
        props: &PropagatorSequence,
        rho0: &Array2<C64>,
    ) -> Vec<Array2<C64>> {
        let d = infl.dim();
        let d2 = d * d;
        let n = props.len();
        assert!(
            d2.pow(n as u32) <= (1 << 26),
            "dense path sum limited to small step counts"
        );
        let mut states = Vec::with_capacity(n + 1);
        states.push(rho0.clone());

        // adt[path] over slices 1..=m, path encoded base d² little-endian in
        // slice order (slice 1 least significant)
        let mut adt: Vec<C64> = {
            let v = props.mat(0).dot(&vec_rho(rho0));
            (0..d2).map(|a| v[a] * infl.tensor(0)[[a, a]]).collect()
        };
        states.push(read_dense(&adt, d, 1));

        for m in 2..=n {
            let size = adt.len();
            let mut next = vec![C64::new(0.0, 0.0); size * d2];
            let u = props.mat(m - 1);
            for (code, &amp) in adt.iter().enumerate() {
                if amp == C64::new(0.0, 0.0) {
                    continue;
                }
                let prev_alpha = code / d2.pow((m - 2) as u32); // most recent slice
                for alpha in 0..d2 {
                    let mut w = u[[alpha, prev_alpha]] * infl.tensor(0)[[alpha, alpha]];
                    if w == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for lag in 1..=infl.n_max.min(m - 1) {
                        let slice_idx = m - lag; // 1-based slice
                        let beta = (code / d2.pow((slice_idx - 1) as u32)) % d2;
                        w *= infl.tensor(lag)[[alpha, beta]];
                    }
                    next[code + alpha * size] += amp * w;
                }
            }
            adt = next;
            states.push(read_dense(&adt, d, m));
        }
        states
    }

    fn read_dense(adt: &[C64], d: usize, m: usize) -> Array2<C64> {
        let d2 = d * d;
        let stride = d2.pow((m - 1) as u32);
        let mut rho = Array1::<C64>::zeros(d2);
        for (code, &amp) in adt.iter().enumerate() {
            rho[code / stride] += amp;
        }
        unvec_rho(&rho, d)
    }
}
