//! Influence-functional tensors and the process-tensor builder.
//!
//! The influence of the environment on the system enters as factors
//! I_n[α, β] coupling the system's Liouville configuration α at step m to
//! the configuration β at step m − n. Because they do not depend on the
//! system Hamiltonian, the whole network of influence factors can be
//! contracted once, column by column, into an MPS over the time slots — the
//! process tensor — and then reused for any sequence of system propagators.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2, Array3, Array4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bath::EtaCoefficients;
use crate::tensornet::mps::{
    grow_with_column, sweep_qr_l2r_range, sweep_svd_r2l, ColumnOp, TruncationAccumulator,
};
use crate::tensornet::{TensorError, TruncationPolicy};

#[derive(Debug, Error)]
pub enum PtBuildError {
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(
        "process-tensor bond dimension {max_bond} exceeded the capacity limit {capacity} at step {step}"
    )]
    Capacity {
        max_bond: usize,
        capacity: usize,
        step: usize,
    },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Diagonal system coupling operator, given by its eigenvalues in the
/// computational basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub eigenvalues: Vec<f64>,
    /// The construction assumes the coupling operator is diagonal in the
    /// computational basis; set to false to signal a non-diagonal operator
    /// (rejected).
    pub diagonal_basis: bool,
}

impl CouplingSpec {
    /// σ_z/2 coupling of a two-level system, eigenvalues (+1/2, −1/2).
    pub fn qubit() -> Self {
        Self {
            eigenvalues: vec![0.5, -0.5],
            diagonal_basis: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn validate(&self) -> Result<(), PtBuildError> {
        if self.eigenvalues.is_empty() {
            return Err(PtBuildError::InvalidArgument(
                "coupling needs at least one eigenvalue".into(),
            ));
        }
        if self.eigenvalues.iter().any(|s| !s.is_finite()) {
            return Err(PtBuildError::InvalidArgument(
                "non-finite coupling eigenvalue".into(),
            ));
        }
        if !self.diagonal_basis {
            return Err(PtBuildError::UnsupportedConfiguration(
                "coupling operators that are not diagonal in the computational basis \
                 are not supported"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// The influence factors I_0..I_{n_max} as d²×d² complex matrices over
/// Liouville indices α = (ket, bra) in row-major order, plus the Δs class
/// structure used to build compact contraction columns.
#[derive(Clone, Debug)]
pub struct InfluenceSet {
    pub dt: f64,
    pub n_max: usize,
    d: usize,
    eigenvalues: Vec<f64>,
    tensors: Vec<Array2<C64>>,
    /// Δs_α = s_ket − s_bra per Liouville index.
    delta_s: Vec<f64>,
    /// Class index of each Liouville index (distinct Δs values).
    class_of: Vec<usize>,
    /// Δs value per class.
    class_delta: Vec<f64>,
    /// w_n[β] = η_n s_ket − η_n* s_bra.
    w: Vec<Array1<C64>>,
}

impl InfluenceSet {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn coupling_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n_classes(&self) -> usize {
        self.class_delta.len()
    }

    /// Full I_n matrix, [α, β]. I_0 is diagonal.
    pub fn tensor(&self, n: usize) -> &Array2<C64> {
        &self.tensors[n]
    }

    /// Diagonal of the on-site factor I_0.
    pub fn i0_diag(&self) -> Array1<C64> {
        let d2 = self.d * self.d;
        Array1::from_iter((0..d2).map(|a| self.tensors[0][[a, a]]))
    }

    pub fn class_of(&self, alpha: usize) -> usize {
        self.class_of[alpha]
    }

    pub fn delta_s(&self, alpha: usize) -> f64 {
        self.delta_s[alpha]
    }

    /// Influence values by Δs class: entry [c, β] = exp(−Δs_c · w_n[β]).
    fn class_values(&self, n: usize) -> Array2<C64> {
        let d2 = self.d * self.d;
        let nc = self.n_classes();
        let mut out = Array2::zeros((nc, d2));
        for c in 0..nc {
            for b in 0..d2 {
                out[[c, b]] = (-self.class_delta[c] * self.w[n][b]).exp();
            }
        }
        out
    }
}

/// Build the influence factors from memory coefficients and a diagonal
/// coupling:
///
///   I_n[α, β] = exp[−(s_a⁺ − s_a⁻)(η_n s_b⁺ − η_n* s_b⁻)]   (n ≥ 1)
///   I_0[α, α] = exp[−(s_a⁺ − s_a⁻)(η_0 s_a⁺ − η_0* s_a⁻)]
pub fn build_influence_tensors(
    eta: &EtaCoefficients,
    coupling: &CouplingSpec,
) -> Result<InfluenceSet, PtBuildError> {
    coupling.validate()?;
    eta.validate()
        .map_err(|e| PtBuildError::InvalidArgument(e.to_string()))?;
    let d = coupling.dim();
    let d2 = d * d;
    let s = &coupling.eigenvalues;

    let mut delta_s = Vec::with_capacity(d2);
    for a_ket in 0..d {
        for a_bra in 0..d {
            delta_s.push(s[a_ket] - s[a_bra]);
        }
    }

    // distinct Δs values
    let mut class_delta: Vec<f64> = Vec::new();
    let mut class_of = vec![0usize; d2];
    let scale = s.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for (alpha, &ds) in delta_s.iter().enumerate() {
        match class_delta
            .iter()
            .position(|&cd| (cd - ds).abs() <= 1e-12 * scale.max(1.0))
        {
            Some(c) => class_of[alpha] = c,
            None => {
                class_delta.push(ds);
                class_of[alpha] = class_delta.len() - 1;
            }
        }
    }

    let mut w = Vec::with_capacity(eta.n_max + 1);
    for n in 0..=eta.n_max {
        let mut wn = Array1::zeros(d2);
        for b_ket in 0..d {
            for b_bra in 0..d {
                wn[b_ket * d + b_bra] = eta.eta[n] * s[b_ket] - eta.eta[n].conj() * s[b_bra];
            }
        }
        w.push(wn);
    }

    let mut tensors = Vec::with_capacity(eta.n_max + 1);
    for n in 0..=eta.n_max {
        let mut t = Array2::zeros((d2, d2));
        for alpha in 0..d2 {
            for beta in 0..d2 {
                if n == 0 {
                    t[[alpha, beta]] = if alpha == beta {
                        (-delta_s[alpha] * w[0][alpha]).exp()
                    } else {
                        C64::new(0.0, 0.0)
                    };
                } else {
                    t[[alpha, beta]] = (-delta_s[alpha] * w[n][beta]).exp();
                }
            }
        }
        tensors.push(t);
    }

    Ok(InfluenceSet {
        dt: eta.dt,
        n_max: eta.n_max,
        d,
        eigenvalues: s.clone(),
        tensors,
        delta_s,
        class_of,
        class_delta,
        w,
    })
}

/// Build diagnostics stored with the process tensor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtDiagnostics {
    pub max_bond: usize,
    /// Root-sum-square of the per-SVD relative discarded singular-value
    /// weights accumulated over the whole build.
    pub cumulative_truncation_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtMetadata {
    pub dt: f64,
    pub n_steps: usize,
    pub d: usize,
    pub memory_steps: usize,
    pub coupling_eigenvalues: Vec<f64>,
    pub policy: TruncationPolicy,
    /// Provenance hash of the bath/discretization parameters that produced
    /// this tensor (hex); checked by the CLI against run configurations.
    pub bath_hash: String,
    pub diagnostics: PtDiagnostics,
}

/// A process tensor in MPS form: one site per time slot with legs
/// (left bond, Liouville index, right bond). The in/out leg pair of a slot
/// shares the single Liouville index (the environment coupling is diagonal
/// in that basis), so contraction with a propagator sequence works directly
/// on this compact representation.
#[derive(Clone, Debug)]
pub struct ProcessTensor {
    sites: Vec<Array3<C64>>,
    meta: PtMetadata,
}

/// Options beyond the truncation policy for [`build_process_tensor_with`].
#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub policy: TruncationPolicy,
    /// Abort the build with a capacity error if any bond exceeds this.
    pub capacity_max_bond: usize,
    /// Provenance tag stored in the metadata.
    pub bath_hash: String,
}

impl BuildOptions {
    pub fn new(policy: TruncationPolicy) -> Self {
        Self {
            policy,
            capacity_max_bond: 65_536,
            bath_hash: String::new(),
        }
    }
}

/// Column of influence tensors for one new time slot: couplings to the
/// previous `window_len` slots (oldest first) plus the on-site factor that
/// emits the new site.
fn influence_column(infl: &InfluenceSet, window_len: usize) -> ColumnOp {
    let d2 = infl.d * infl.d;
    let nc = infl.n_classes();
    let mut window = Vec::with_capacity(window_len);
    for k in 0..window_len {
        let lag = window_len - k;
        let vals = infl.class_values(lag);
        let cl = if k == 0 { 1 } else { nc };
        let mut wt = Array4::zeros((cl, d2, d2, nc));
        for c in 0..nc {
            for p in 0..d2 {
                let v = vals[[c, p]];
                if k == 0 {
                    wt[[0, p, p, c]] = v;
                } else {
                    wt[[c, p, p, c]] = v;
                }
            }
        }
        window.push(wt);
    }
    let i0 = infl.i0_diag();
    let cl = if window_len == 0 { 1 } else { nc };
    let mut new_site = Array2::zeros((cl, d2));
    for q in 0..d2 {
        let c = if window_len == 0 { 0 } else { infl.class_of(q) };
        new_site[[c, q]] = i0[q];
    }
    ColumnOp {
        window,
        new_site: Some(new_site),
    }
}

pub fn build_process_tensor(
    influences: &InfluenceSet,
    n_steps: usize,
    policy: &TruncationPolicy,
) -> Result<ProcessTensor, PtBuildError> {
    build_process_tensor_with(influences, n_steps, &BuildOptions::new(*policy))
}

/// Contract the influence network column by column into an MPS. After each
/// column the affected suffix is orthogonalized left-to-right and truncated
/// right-to-left under the policy. Bonds to the left of a column's window
/// are frozen: no later column touches them, which keeps the build linear in
/// the number of steps. Interactions beyond the memory window carry no
/// influence factor at all (equivalent to an all-ones factor).
pub fn build_process_tensor_with(
    influences: &InfluenceSet,
    n_steps: usize,
    opts: &BuildOptions,
) -> Result<ProcessTensor, PtBuildError> {
    if n_steps < 1 {
        return Err(PtBuildError::InvalidArgument(
            "n_steps must be at least 1".into(),
        ));
    }
    opts.policy.validate()?;

    let mut tensors: Vec<Array3<C64>> = Vec::with_capacity(n_steps);
    let mut acc = TruncationAccumulator::new();
    let mut center = 0usize;
    let mut max_bond = 1usize;

    for m in 1..=n_steps {
        let window_len = (m - 1).min(influences.n_max);
        let w_start = (m - 1) - window_len;
        if m > 1 {
            // keep the prefix left-orthonormal up to the window start
            sweep_qr_l2r_range(&mut tensors, center, w_start)?;
        }
        let col = influence_column(influences, window_len);
        grow_with_column(&mut tensors, &col);
        let last = tensors.len() - 1;
        sweep_qr_l2r_range(&mut tensors, w_start, last)?;
        sweep_svd_r2l(&mut tensors, w_start, &opts.policy, &mut acc)?;
        center = w_start;

        let bond_max = tensors.windows(2).map(|w| w[0].dim().2).max().unwrap_or(1);
        max_bond = max_bond.max(bond_max);
        if bond_max > opts.capacity_max_bond {
            return Err(PtBuildError::Capacity {
                max_bond: bond_max,
                capacity: opts.capacity_max_bond,
                step: m,
            });
        }
    }

    // leave the stored artifact left-canonical with the norm on the last site
    let last = tensors.len() - 1;
    sweep_qr_l2r_range(&mut tensors, center, last)?;

    let report = acc.report();
    let meta = PtMetadata {
        dt: influences.dt,
        n_steps,
        d: influences.d,
        memory_steps: influences.n_max,
        coupling_eigenvalues: influences.eigenvalues.clone(),
        policy: opts.policy,
        bath_hash: opts.bath_hash.clone(),
        diagnostics: PtDiagnostics {
            max_bond,
            cumulative_truncation_error: report.discarded_rss,
        },
    };
    Ok(ProcessTensor {
        sites: tensors,
        meta,
    })
}

impl ProcessTensor {
    pub fn from_parts(sites: Vec<Array3<C64>>, meta: PtMetadata) -> Result<Self, PtBuildError> {
        if sites.len() != meta.n_steps {
            return Err(PtBuildError::InvalidArgument(format!(
                "{} sites but metadata says n_steps = {}",
                sites.len(),
                meta.n_steps
            )));
        }
        Ok(Self { sites, meta })
    }

    pub fn sites(&self) -> &[Array3<C64>] {
        &self.sites
    }

    pub fn meta(&self) -> &PtMetadata {
        &self.meta
    }

    pub fn n_steps(&self) -> usize {
        self.meta.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.meta.dt
    }

    pub fn dim(&self) -> usize {
        self.meta.d
    }

    pub fn max_bond(&self) -> usize {
        self.sites.windows(2).map(|w| w[0].dim().2).max().unwrap_or(1)
    }

    pub fn set_bath_hash(&mut self, hash: String) {
        self.meta.bath_hash = hash;
    }

    /// Closure vectors for reading out intermediate states: `caps[m]` closes
    /// the slots after step m by feeding each remaining slot the maximally
    /// mixed state and tracing it out, which collapses the uncontracted part
    /// of the network to an exact identity.
    pub fn right_caps(&self) -> Vec<Array1<C64>> {
        let d = self.meta.d;
        let n = self.sites.len();
        let d2 = d * d;
        let g: Array1<C64> = Array1::from_iter((0..d2).map(|p| {
            let (ket, bra) = (p / d, p % d);
            if ket == bra {
                C64::new(1.0 / d as f64, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }));
        let mut caps = vec![Array1::zeros(0); n + 1];
        caps[n] = Array1::ones(1);
        for k in (0..n).rev() {
            let site = &self.sites[k];
            let (bl, p, br) = site.dim();
            let mut t = Array2::<C64>::zeros((bl, br));
            for pi in 0..p {
                t.scaled_add(g[pi], &site.slice(ndarray::s![.., pi, ..]));
            }
            caps[k] = t.dot(&caps[k + 1]);
        }
        caps
    }
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

const MAGIC: [u8; 8] = *b"PTMPSBIN";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PtFileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a process-tensor file (bad magic)")]
    BadMagic,
    #[error("unsupported format version {found} (this build reads up to {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("checksum mismatch: file is corrupt")]
    ChecksumMismatch,
    #[error("file is truncated")]
    Truncated,
    #[error("malformed metadata: {0}")]
    Metadata(String),
    #[error("malformed payload: {0}")]
    Corrupt(String),
}

static LOAD_COUNT: AtomicU64 = AtomicU64::new(0);

/// Number of process-tensor files loaded by this process. Lets callers
/// assert that shared tensors are loaded once and reused.
pub fn load_count() -> u64 {
    LOAD_COUNT.load(Ordering::Relaxed)
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PtFileError> {
        if self.pos + n > self.data.len() {
            return Err(PtFileError::Truncated);
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, PtFileError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, PtFileError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, PtFileError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl ProcessTensor {
    /// Serialize to the container format: magic, format version, UTF-8
    /// metadata document, per-site tensors as little-endian (re, im) doubles
    /// with shape headers, and a trailing SHA-256 over everything before it.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(&MAGIC);
        push_u32(&mut buf, FORMAT_VERSION);
        let meta = serde_json::to_vec(&self.meta).expect("metadata serializes");
        push_u64(&mut buf, meta.len() as u64);
        buf.extend_from_slice(&meta);
        push_u64(&mut buf, self.sites.len() as u64);
        for site in &self.sites {
            let (bl, p, br) = site.dim();
            push_u64(&mut buf, bl as u64);
            push_u64(&mut buf, p as u64);
            push_u64(&mut buf, br as u64);
            for v in site.iter() {
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&buf);
        buf.extend_from_slice(&digest);
        buf
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, PtFileError> {
        if data.len() < MAGIC.len() + 4 + 32 {
            return Err(PtFileError::Truncated);
        }
        let (body, checksum) = data.split_at(data.len() - 32);
        if body[..8] != MAGIC {
            return Err(PtFileError::BadMagic);
        }
        let digest = Sha256::digest(body);
        if digest.as_slice() != checksum {
            return Err(PtFileError::ChecksumMismatch);
        }
        let mut r = Reader { data: body, pos: 8 };
        let version = r.u32()?;
        if version > FORMAT_VERSION {
            return Err(PtFileError::UnsupportedVersion {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let meta_len = r.u64()? as usize;
        let meta_bytes = r.take(meta_len)?;
        let meta: PtMetadata =
            serde_json::from_slice(meta_bytes).map_err(|e| PtFileError::Metadata(e.to_string()))?;
        let n_sites = r.u64()? as usize;
        if n_sites != meta.n_steps {
            return Err(PtFileError::Corrupt(format!(
                "{n_sites} sites vs n_steps {}",
                meta.n_steps
            )));
        }
        let mut sites = Vec::with_capacity(n_sites);
        let mut prev_bond = 1usize;
        for k in 0..n_sites {
            let bl = r.u64()? as usize;
            let p = r.u64()? as usize;
            let br = r.u64()? as usize;
            if bl != prev_bond {
                return Err(PtFileError::Corrupt(format!(
                    "bond mismatch at site {k}: {bl} vs {prev_bond}"
                )));
            }
            if p != meta.d * meta.d {
                return Err(PtFileError::Corrupt(format!(
                    "physical dimension {p} at site {k}, expected {}",
                    meta.d * meta.d
                )));
            }
            let len = bl
                .checked_mul(p)
                .and_then(|v| v.checked_mul(br))
                .ok_or_else(|| PtFileError::Corrupt("tensor size overflow".into()))?;
            let mut vals = Vec::with_capacity(len);
            for _ in 0..len {
                let re = r.f64()?;
                let im = r.f64()?;
                vals.push(C64::new(re, im));
            }
            let site = Array3::from_shape_vec((bl, p, br), vals)
                .map_err(|e| PtFileError::Corrupt(e.to_string()))?;
            prev_bond = br;
            sites.push(site);
        }
        if prev_bond != 1 {
            return Err(PtFileError::Corrupt("right boundary bond is not 1".into()));
        }
        if r.pos != body.len() {
            return Err(PtFileError::Corrupt("trailing bytes in payload".into()));
        }
        Ok(Self { sites, meta })
    }

    /// Write atomically: serialize to a temporary file in the target
    /// directory, then rename over the destination.
    pub fn save(&self, path: &Path) -> Result<(), PtFileError> {
        let bytes = self.to_bytes();
        let tmp = path.with_extension("pt.tmp");
        std::fs::write(&tmp, &bytes)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PtFileError> {
        let data = std::fs::read(path)?;
        let pt = Self::from_bytes(&data)?;
        LOAD_COUNT.fetch_add(1, Ordering::Relaxed);
        Ok(pt)
    }
}
